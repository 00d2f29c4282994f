//! Serialized forms of run and reproduce results.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qcomp_core::analysis::{Calibration, OutcomeCategory, SuccessReport};
use qcomp_core::simulator::{NoiseModel, ShotRecord};
use serde::Serialize;

use crate::config::{Backend, RunConfig};

pub const RUN_SCHEMA: &str = "qcomp.run/v1";
pub const REPRODUCE_SCHEMA: &str = "qcomp.reproduce/v1";

/// JSON schemas shipped with the binary, keyed by the `schema` tag they
/// validate.
pub const RUN_SCHEMA_JSON: &str = include_str!("../schemas/run.v1.schema.json");
pub const REPRODUCE_SCHEMA_JSON: &str = include_str!("../schemas/reproduce.v1.schema.json");

pub const CATEGORY_CSV_HEADER: &str = "n,category,count,rate_conventional,rate_strict,ci_low,ci_high";
pub const RECORDS_CSV_HEADER: &str = "n,shot,a_meas,b_meas,ancilla_meas,output_meas";

#[derive(Debug, Clone, Serialize)]
pub struct NReport {
    pub backend: Backend,
    #[serde(flatten)]
    pub report: SuccessReport,
    pub dominant_failure: Option<OutcomeCategory>,
}

impl NReport {
    pub fn new(backend: Backend, report: SuccessReport) -> Self {
        let dominant_failure = report.dominant_failure();
        Self {
            backend,
            report,
            dominant_failure,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RecordTable {
    pub n: usize,
    pub records: Vec<ShotRecord>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub reports: Vec<NReport>,
    pub records: Vec<RecordTable>,
}

#[derive(Serialize)]
struct ConfigEcho<'a> {
    n_values: &'a [usize],
    shots: u64,
    backend: Backend,
    noise: Option<&'a NoiseModel>,
    seed: u64,
}

#[derive(Serialize)]
struct RunDocument<'a> {
    schema: &'static str,
    config: ConfigEcho<'a>,
    reports: &'a [NReport],
    #[serde(skip_serializing_if = "Option::is_none")]
    records: Option<&'a [RecordTable]>,
}

pub fn run_json(config: &RunConfig, output: &RunOutput) -> String {
    let doc = RunDocument {
        schema: RUN_SCHEMA,
        config: ConfigEcho {
            n_values: &config.n_values,
            shots: config.shots,
            backend: config.backend,
            noise: config.noise.as_ref(),
            seed: config.seed,
        },
        reports: &output.reports,
        records: config.include_records.then_some(&output.records[..]),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("run document serializes");
    s.push('\n');
    s
}

/// One row per outcome category, then `conventional_success` and
/// `strict_success` rows. `rate_conventional` and `rate_strict` repeat the
/// per-n headline rates on every row; `ci_*` bound the row's own rate.
pub fn category_csv(reports: &[&SuccessReport]) -> String {
    let mut s = String::from(CATEGORY_CSV_HEADER);
    s.push('\n');
    for r in reports {
        let rows = OutcomeCategory::ALL
            .iter()
            .map(|&c| (c.label(), r.category_counts.get(c), r.category_ci(c)))
            .chain([
                ("conventional_success", r.category_counts.conventional(), r.conventional_ci),
                ("strict_success", r.category_counts.strict(), r.strict_ci),
            ]);
        for (label, count, ci) in rows {
            writeln!(
                s,
                "{},{label},{count},{},{},{},{}",
                r.n, r.conventional_rate, r.strict_rate, ci.low, ci.high
            )
            .unwrap();
        }
    }
    s
}

pub fn records_csv(tables: &[RecordTable]) -> String {
    let mut s = String::from(RECORDS_CSV_HEADER);
    s.push('\n');
    for t in tables {
        for (i, r) in t.records.iter().enumerate() {
            writeln!(
                s,
                "{},{i},{},{},{},{}",
                t.n,
                r.a_meas,
                r.b_meas,
                u8::from(r.ancilla_meas),
                u8::from(r.output_meas)
            )
            .unwrap();
        }
    }
    s
}

pub const CONVENTIONAL_CSV_HEADER: &str = "n,shots,conventional_rate,ci_low,ci_high,target,baseline";

pub fn conventional_csv(reports: &[&SuccessReport], targets: &std::collections::BTreeMap<usize, f64>) -> String {
    let mut s = String::from(CONVENTIONAL_CSV_HEADER);
    s.push('\n');
    for r in reports {
        let target = targets.get(&r.n).map(f64::to_string).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{target},{}",
            r.n, r.shots, r.conventional_rate, r.conventional_ci.low, r.conventional_ci.high, r.baselines.conventional
        )
        .unwrap();
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct ReproduceChecks {
    pub conventional_monotone: bool,
    pub strict_below_conventional: bool,
    pub strict_drops_faster: bool,
    pub counts_sum_to_shots: bool,
    pub dominant_failure_at_max_n: Option<OutcomeCategory>,
}

#[derive(Serialize)]
pub struct ReproduceDocument<'a> {
    pub schema: &'static str,
    pub shots: u64,
    pub seed: u64,
    pub calibration: &'a Calibration,
    pub max_abs_residual: f64,
    pub reports: &'a [NReport],
    pub checks: &'a ReproduceChecks,
}

pub fn reproduce_json(doc: &ReproduceDocument<'_>) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("reproduce document serializes");
    s.push('\n');
    s
}

/// Writes `contents` to a sibling temporary file and renames it over `path`,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result.with_context(|| format!("cannot write {}", path.display()))
}
