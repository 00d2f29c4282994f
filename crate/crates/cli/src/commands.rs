use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qcomp_core::analysis::{
    aggregate, calibrate_noise, Calibration, CalibrationOptions, OutcomeCategory,
    SuccessReport,
};
use qcomp_core::comparator_synth::{
    build_comparator, build_experiment, export_qasm, lower_toffoli, ComparatorSpec,
};
use qcomp_core::gate_ir::{Circuit, Gate, GateKind, Metrics};
use qcomp_core::simulator::{
    run_shots_basis, run_shots_statevector, simulate_basis_state, BasisState, NoiseModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Backend, Format, RunConfig};
use crate::output::{
    category_csv, conventional_csv, records_csv, reproduce_json, run_json, write_atomic, NReport,
    RecordTable, ReproduceChecks, ReproduceDocument, RunOutput, REPRODUCE_SCHEMA,
};

// ---------------------------------------------------------------- synth

pub struct Synthesized {
    pub circuit: Circuit,
    pub qasm: String,
    pub metrics: Metrics,
}

pub fn synth(n: usize, lower: bool) -> Result<Synthesized> {
    let mut circuit = build_comparator(ComparatorSpec::new(n))?;
    if lower {
        circuit = lower_toffoli(&circuit)?;
    }
    Ok(Synthesized {
        qasm: export_qasm(&circuit),
        metrics: circuit.metrics(),
        circuit,
    })
}

// ---------------------------------------------------------------- run

pub fn execute_run(config: &RunConfig) -> Result<RunOutput> {
    let noise = config.effective_noise();
    let mut reports = Vec::with_capacity(config.n_values.len());
    let mut records = Vec::with_capacity(config.n_values.len());
    for &n in &config.n_values {
        let circuit = build_experiment(n)?;
        let backend = config.resolve_backend(n);
        let recs = match backend {
            Backend::Statevector => run_shots_statevector(&circuit, &noise, config.shots)?,
            _ => run_shots_basis(&circuit, &noise, config.shots)?,
        };
        reports.push(NReport::new(backend, aggregate(&recs, n)?));
        records.push(RecordTable { n, records: recs });
    }
    Ok(RunOutput { reports, records })
}

/// Writes the report (`report.json` or `report.csv`) and `records.csv`
/// into the configured output directory.
pub fn write_run(config: &RunConfig, output: &RunOutput) -> Result<Vec<PathBuf>> {
    let dir = &config.output_path;
    let report = match config.format {
        Format::Json => (dir.join("report.json"), run_json(config, output)),
        Format::Csv => {
            let rs: Vec<_> = output.reports.iter().map(|r| &r.report).collect();
            (dir.join("report.csv"), category_csv(&rs))
        }
    };
    let records = (dir.join("records.csv"), records_csv(&output.records));
    let mut written = Vec::new();
    for (path, body) in [report, records] {
        write_atomic(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

pub fn summary_table(reports: &[&SuccessReport]) -> String {
    let mut s = format!(
        "{:>3} {:>9} {:>12} {:>9} {:>9} {:>12} {:>9}\n",
        "n", "shots", "conventional", "strict", "fail_res", "fail_anc", "fail_both"
    );
    for r in reports {
        s += &format!(
            "{:>3} {:>9} {:>12.4} {:>9.4} {:>9.4} {:>12.4} {:>9.4}\n",
            r.n,
            r.shots,
            r.conventional_rate,
            r.strict_rate,
            r.rate(OutcomeCategory::FailResult),
            r.rate(OutcomeCategory::FailAncilla),
            r.rate(OutcomeCategory::FailBoth),
        );
    }
    s
}

// ---------------------------------------------------------------- reproduce

/// Conventional success rates the noise model is fitted to.
pub fn reference_targets() -> BTreeMap<usize, f64> {
    BTreeMap::from([(3, 0.98), (5, 0.97), (7, 0.97), (9, 0.95)])
}

#[derive(Debug, Clone)]
pub struct ReproduceOptions {
    pub shots: u64,
    pub seed: u64,
    pub targets: BTreeMap<usize, f64>,
    pub calibration: CalibrationOptions,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        Self {
            shots: crate::config::DEFAULT_SHOTS,
            seed: 0,
            targets: reference_targets(),
            calibration: CalibrationOptions::default(),
        }
    }
}

pub struct Reproduction {
    pub options: ReproduceOptions,
    pub calibration: Calibration,
    pub run_config: RunConfig,
    pub output: RunOutput,
    pub checks: ReproduceChecks,
}

impl Reproduction {
    pub fn reports(&self) -> Vec<&SuccessReport> {
        self.output.reports.iter().map(|r| &r.report).collect()
    }
}

pub fn reproduce_checks(reports: &[&SuccessReport]) -> ReproduceChecks {
    let conventional_monotone = reports
        .windows(2)
        .all(|w| w[1].conventional_rate <= w[0].conventional_rate);
    let strict_below_conventional = reports.iter().all(|r| r.strict_rate < r.conventional_rate);
    let strict_drops_faster = match (reports.first(), reports.last()) {
        (Some(f), Some(l)) => {
            f.strict_rate - l.strict_rate > f.conventional_rate - l.conventional_rate
        }
        _ => false,
    };
    let counts_sum_to_shots = reports.iter().all(|r| r.category_counts.total() == r.shots);
    ReproduceChecks {
        conventional_monotone,
        strict_below_conventional,
        strict_drops_faster,
        counts_sum_to_shots,
        dominant_failure_at_max_n: reports.last().and_then(|r| r.dominant_failure()),
    }
}

/// Fits the tied noise model to the targets, then reruns the protocol with
/// it. Calibration draws from a different seed than the final run. A fit
/// whose residual is too large surfaces as
/// [`AnalysisError::CalibrationFailed`](qcomp_core::analysis::AnalysisError).
pub fn reproduce(options: ReproduceOptions) -> Result<Reproduction> {
    let shape = NoiseModel::noiseless(options.seed.wrapping_add(1));
    let calibration = calibrate_noise(&options.targets, &shape, &options.calibration)?;
    let run_config = RunConfig {
        n_values: options.targets.keys().copied().collect(),
        shots: options.shots,
        backend: Backend::Auto,
        noise: Some(calibration.model.clone()),
        seed: options.seed,
        ..RunConfig::default()
    };
    let output = execute_run(&run_config)?;
    let reports: Vec<_> = output.reports.iter().map(|r| &r.report).collect();
    let checks = reproduce_checks(&reports);
    Ok(Reproduction {
        options,
        calibration,
        run_config,
        output,
        checks,
    })
}

pub fn write_reproduction(dir: &Path, r: &Reproduction) -> Result<Vec<PathBuf>> {
    let reports = r.reports();
    let doc = ReproduceDocument {
        schema: REPRODUCE_SCHEMA,
        shots: r.options.shots,
        seed: r.options.seed,
        calibration: &r.calibration,
        max_abs_residual: r.calibration.max_abs_residual(),
        reports: &r.output.reports,
        checks: &r.checks,
    };
    let files = [
        (dir.join("conventional.csv"), conventional_csv(&reports, &r.options.targets)),
        (dir.join("categories.csv"), category_csv(&reports)),
        (dir.join("reproduce.json"), reproduce_json(&doc)),
    ];
    let mut written = Vec::new();
    for (path, body) in files {
        write_atomic(&path, &body)?;
        written.push(path);
    }
    Ok(written)
}

// ---------------------------------------------------------------- verify

/// Widths up to this are checked on every input; wider ones are sampled.
pub const EXHAUSTIVE_MAX_N: usize = 5;
pub const RANDOM_SAMPLES: u64 = 100_000;

/// Comparator input that produced a wrong output. `c` is the initial value
/// of the output qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Counterexample {
    pub n: usize,
    pub a: u64,
    pub b: u64,
    pub c: bool,
    pub got: (u64, u64, bool, bool),
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b, anc, out) = self.got;
        write!(
            f,
            "counterexample n={} a={} b={} c={}: expected (a={}, b={}, ancilla=0, output={}), got (a={a}, b={b}, ancilla={}, output={})",
            self.n,
            self.a,
            self.b,
            u8::from(self.c),
            self.a,
            self.b,
            u8::from(self.c ^ (self.a < self.b)),
            u8::from(anc),
            u8::from(out),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Exhaustive,
    Random { samples: u64, seed: u64 },
}

impl VerifyMode {
    pub fn for_width(n: usize, seed: u64) -> Self {
        if n <= EXHAUSTIVE_MAX_N {
            VerifyMode::Exhaustive
        } else {
            VerifyMode::Random {
                samples: RANDOM_SAMPLES,
                seed,
            }
        }
    }
}

/// Comparator for width `n`, optionally with its `k`-th CNOT removed.
pub fn comparator_for_verify(n: usize, drop_cnot: Option<usize>) -> Result<Circuit> {
    let mut c = build_comparator(ComparatorSpec::new(n))?;
    if let Some(k) = drop_cnot {
        let pos = c
            .gates()
            .iter()
            .enumerate()
            .filter(|(_, g)| g.kind() == GateKind::Cnot)
            .nth(k)
            .map(|(i, _)| i)
            .with_context(|| format!("comparator for n = {n} has no CNOT number {k}"))?;
        c.remove(pos);
    }
    Ok(c)
}

fn check_input(circuit: &Circuit, a: u64, b: u64, c: bool) -> Result<(), Counterexample> {
    let layout = circuit.layout();
    let n = layout.n();
    let input = BasisState::new(layout.encode(a, b, false, c), layout.num_qubits());
    let got = layout.decode(
        simulate_basis_state(circuit, input)
            .expect("comparator is a permutation circuit")
            .bits(),
    );
    if got == (a, b, false, c ^ (a < b)) {
        Ok(())
    } else {
        Err(Counterexample { n, a, b, c, got })
    }
}

/// Checks the circuit maps `|a, b, 0, c>` to `|a, b, 0, c ^ (a < b)>`.
/// Returns the number of inputs checked.
pub fn verify_circuit(circuit: &Circuit, mode: VerifyMode) -> Result<u64, Counterexample> {
    let n = circuit.n();
    match mode {
        VerifyMode::Exhaustive => {
            let side = 1u64 << n;
            for a in 0..side {
                for b in 0..side {
                    for c in [false, true] {
                        check_input(circuit, a, b, c)?;
                    }
                }
            }
            Ok(2 * side * side)
        }
        VerifyMode::Random { samples, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(n as u64);
            let mask = (1u64 << n) - 1;
            for _ in 0..samples {
                let a = rng.random::<u64>() & mask;
                let b = rng.random::<u64>() & mask;
                check_input(circuit, a, b, rng.random())?;
            }
            Ok(samples)
        }
    }
}

/// Number of CNOT gates in `circuit`.
pub fn count_cnots(circuit: &Circuit) -> usize {
    circuit
        .gates()
        .iter()
        .filter(|g| matches!(g, Gate::Cnot { .. }))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn intact_comparator_verifies() {
        for n in 1..=4 {
            let c = comparator_for_verify(n, None).unwrap();
            assert_eq!(verify_circuit(&c, VerifyMode::Exhaustive), Ok(1 << (2 * n + 1)));
        }
        let c = comparator_for_verify(7, None).unwrap();
        let mode = VerifyMode::Random { samples: 1000, seed: 1 };
        assert_eq!(verify_circuit(&c, mode), Ok(1000));
    }

    #[test]
    fn every_dropped_cnot_is_caught() {
        for n in 1..=3 {
            let total = count_cnots(&comparator_for_verify(n, None).unwrap());
            assert_eq!(total, 4 * n + 1);
            for k in 0..total {
                let c = comparator_for_verify(n, Some(k)).unwrap();
                let cex = verify_circuit(&c, VerifyMode::Exhaustive).unwrap_err();
                assert_eq!(cex.n, n);
                assert!(cex.to_string().starts_with(&format!("counterexample n={n} ")));
            }
            assert!(comparator_for_verify(n, Some(total)).is_err());
        }
    }

    #[test]
    fn checks_flag_invariants() {
        let mk = |c: f64, s: f64, counts_ok: bool| {
            let mut r = aggregate(
                &[qcomp_core::simulator::ShotRecord {
                    a_meas: 0,
                    b_meas: 1,
                    ancilla_meas: false,
                    output_meas: true,
                }],
                3,
            )
            .unwrap();
            r.conventional_rate = c;
            r.strict_rate = s;
            if !counts_ok {
                r.shots = 2;
            }
            r
        };
        let a = mk(0.98, 0.95, true);
        let b = mk(0.95, 0.83, true);
        let ok = reproduce_checks(&[&a, &b]);
        assert!(ok.conventional_monotone && ok.strict_below_conventional && ok.strict_drops_faster);
        assert!(ok.counts_sum_to_shots);
        let bad = reproduce_checks(&[&b, &a]);
        assert!(!bad.conventional_monotone && !bad.strict_drops_faster);
        let c = mk(0.9, 0.9, false);
        let bad = reproduce_checks(&[&c]);
        assert!(!bad.strict_below_conventional && !bad.counts_sum_to_shots);
    }

    #[test]
    fn synth_metrics() {
        let s = synth(3, false).unwrap();
        assert_eq!(s.metrics.total_gates(), 25);
        assert!(s.qasm.starts_with("# qcomp circuit v1\n"));
        let l = synth(3, true).unwrap();
        assert_eq!(l.metrics.toffoli, 0);
        assert_eq!(l.metrics.t + l.metrics.tdg, 7 * 6);
    }
}
