//! Run configuration: a `key = value` text file, overridable by flags.
//!
//! ```text
//! # the default protocol
//! n_values = 3, 5, 7, 9
//! shots = 100
//! backend = auto          # basis | statevector | auto
//! noise = none            # none | model | tied
//! p2 = 0.0027             # with noise = tied, p1/p3/idle follow p2
//! pauli_weights = 0.3333333333333333, 0.3333333333333333, 0.3333333333333334
//! seed = 7
//! output = out/run
//! format = json           # json | csv
//! records = false         # embed raw records in the JSON document
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qcomp_core::gate_ir::MAX_BIT_WIDTH;
use qcomp_core::simulator::{NoiseModel, MAX_STATEVECTOR_QUBITS};
use serde::Serialize;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "QCOMP_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "qcomp-out";

/// `auto` picks the statevector backend for Z-carrying noise only up to this
/// many qubits; beyond it each noisy shot costs `2^q` work per gate and the
/// basis path gives the same outcome distribution.
pub const AUTO_STATEVECTOR_MAX_QUBITS: usize = 10;

pub const DEFAULT_BIT_WIDTHS: [usize; 4] = [3, 5, 7, 9];
pub const DEFAULT_SHOTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Basis,
    Statevector,
    Auto,
}

impl FromStr for Backend {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "basis" => Ok(Backend::Basis),
            "statevector" => Ok(Backend::Statevector),
            "auto" => Ok(Backend::Auto),
            other => Err(format!("unknown backend `{other}` (basis, statevector, auto)")),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Basis => "basis",
            Backend::Statevector => "statevector",
            Backend::Auto => "auto",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (json, csv)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    /// Every parameter given explicitly.
    Model,
    /// `p2` given; the rest follow [`NoiseModel::tied_to_p2`].
    Tied,
}

impl FromStr for NoiseKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(NoiseKind::None),
            "model" => Ok(NoiseKind::Model),
            "tied" => Ok(NoiseKind::Tied),
            other => Err(format!("unknown noise `{other}` (none, model, tied)")),
        }
    }
}

/// Unvalidated settings; every field optional so file and flags can be
/// layered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub n_values: Option<String>,
    pub shots: Option<String>,
    pub backend: Option<String>,
    pub noise: Option<String>,
    pub p1: Option<String>,
    pub p2: Option<String>,
    pub p3: Option<String>,
    pub idle: Option<String>,
    pub readout_flip: Option<String>,
    pub pauli_weights: Option<String>,
    pub seed: Option<String>,
    pub output: Option<String>,
    pub format: Option<String>,
    pub records: Option<String>,
}

impl RawConfig {
    fn slot(&mut self, key: &str) -> Option<&mut Option<String>> {
        Some(match key {
            "n_values" => &mut self.n_values,
            "shots" => &mut self.shots,
            "backend" => &mut self.backend,
            "noise" => &mut self.noise,
            "p1" => &mut self.p1,
            "p2" => &mut self.p2,
            "p3" => &mut self.p3,
            "idle" => &mut self.idle,
            "readout_flip" => &mut self.readout_flip,
            "pauli_weights" => &mut self.pauli_weights,
            "seed" => &mut self.seed,
            "output" => &mut self.output,
            "format" => &mut self.format,
            "records" => &mut self.records,
            _ => return None,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut errors = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected `key = value`", i + 1));
                continue;
            };
            let key = key.trim();
            match raw.slot(key) {
                Some(slot) => *slot = Some(value.trim().to_string()),
                None => errors.push(format!("line {}: unknown key `{key}`", i + 1)),
            }
        }
        if errors.is_empty() {
            Ok(raw)
        } else {
            Err(ConfigError(errors))
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::parse(&text)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(mut self, over: RawConfig) -> Self {
        macro_rules! take {
            ($($f:ident),*) => { $( if over.$f.is_some() { self.$f = over.$f; } )* };
        }
        take!(
            n_values, shots, backend, noise, p1, p2, p3, idle, readout_flip, pauli_weights, seed,
            output, format, records
        );
        self
    }
}

/// All problems found in a configuration, one entry per field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub Vec<String>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for e in &self.0 {
            write!(f, "\n  {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub n_values: Vec<usize>,
    pub shots: u64,
    pub backend: Backend,
    pub noise: Option<NoiseModel>,
    pub seed: u64,
    #[serde(skip)]
    pub output_path: PathBuf,
    pub format: Format,
    pub include_records: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_values: DEFAULT_BIT_WIDTHS.to_vec(),
            shots: DEFAULT_SHOTS,
            backend: Backend::Auto,
            noise: None,
            seed: 0,
            output_path: default_output_dir(),
            format: Format::Json,
            include_records: false,
        }
    }
}

pub fn default_output_dir() -> PathBuf {
    std::env::var_os(OUTPUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
}

fn parse_field<T: FromStr>(
    errors: &mut Vec<String>,
    field: &str,
    value: &Option<String>,
) -> Option<T>
where
    T::Err: fmt::Display,
{
    let v = value.as_deref()?;
    match v.parse() {
        Ok(x) => Some(x),
        Err(e) => {
            errors.push(format!("{field}: cannot parse `{v}`: {e}"));
            None
        }
    }
}

fn parse_list<T: FromStr>(errors: &mut Vec<String>, field: &str, value: &Option<String>) -> Option<Vec<T>>
where
    T::Err: fmt::Display,
{
    let v = value.as_deref()?;
    let mut out = Vec::new();
    for tok in v.split(',').map(str::trim) {
        match tok.parse() {
            Ok(x) => out.push(x),
            Err(e) => {
                errors.push(format!("{field}: cannot parse `{tok}`: {e}"));
                return None;
            }
        }
    }
    Some(out)
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let d = RunConfig::default();
        let mut errors = Vec::new();

        let n_values = parse_list::<usize>(&mut errors, "n_values", &raw.n_values).unwrap_or(d.n_values);
        if n_values.is_empty() {
            errors.push("n_values: must not be empty".into());
        }
        for &n in &n_values {
            if n == 0 || n > MAX_BIT_WIDTH {
                errors.push(format!("n_values: {n} is outside 1..={MAX_BIT_WIDTH}"));
            }
        }
        let shots = parse_field::<u64>(&mut errors, "shots", &raw.shots).unwrap_or(d.shots);
        if shots == 0 {
            errors.push("shots: must be at least 1".into());
        }
        let backend = parse_field(&mut errors, "backend", &raw.backend).unwrap_or(d.backend);
        let seed = parse_field(&mut errors, "seed", &raw.seed).unwrap_or(d.seed);
        let format = parse_field(&mut errors, "format", &raw.format).unwrap_or(d.format);
        let include_records = parse_field(&mut errors, "records", &raw.records).unwrap_or(false);
        let output_path = raw.output.as_ref().map(PathBuf::from).unwrap_or(d.output_path);

        let noise_kind = parse_field(&mut errors, "noise", &raw.noise).unwrap_or(NoiseKind::None);
        let prob = |errors: &mut Vec<String>, name: &str, v: &Option<String>| {
            parse_field::<f64>(errors, name, v)
        };
        let p1 = prob(&mut errors, "p1", &raw.p1);
        let p2 = prob(&mut errors, "p2", &raw.p2);
        let p3 = prob(&mut errors, "p3", &raw.p3);
        let idle = prob(&mut errors, "idle", &raw.idle);
        let readout_flip = prob(&mut errors, "readout_flip", &raw.readout_flip);
        let weights = parse_list::<f64>(&mut errors, "pauli_weights", &raw.pauli_weights);
        let weights = match weights.as_deref() {
            None => None,
            Some(&[x, y, z]) => Some([x, y, z]),
            Some(w) => {
                errors.push(format!("pauli_weights: expected 3 values, got {}", w.len()));
                None
            }
        };
        let mut base = NoiseModel::noiseless(seed);
        if let Some(w) = weights {
            base.pauli_weights = w;
        }
        let noise = match noise_kind {
            NoiseKind::None => {
                let stray = [("p1", &p1), ("p2", &p2), ("p3", &p3), ("idle", &idle), ("readout_flip", &readout_flip)]
                    .iter()
                    .filter(|(_, v)| v.is_some())
                    .map(|(k, _)| *k)
                    .collect::<Vec<_>>();
                if !stray.is_empty() {
                    errors.push(format!(
                        "noise: is `none` but {} given; set noise = model or tied",
                        stray.join(", ")
                    ));
                }
                None
            }
            NoiseKind::Tied => {
                let mut m = base.tied_to_p2(p2.unwrap_or_else(|| {
                    errors.push("p2: required when noise = tied".into());
                    0.0
                }));
                if let Some(r) = readout_flip {
                    m.readout_flip = r;
                }
                for (k, v) in [("p1", p1), ("p3", p3), ("idle", idle)] {
                    if v.is_some() {
                        errors.push(format!("{k}: determined by p2 when noise = tied"));
                    }
                }
                Some(m)
            }
            NoiseKind::Model => Some(NoiseModel {
                p1: p1.unwrap_or(0.0),
                p2: p2.unwrap_or(0.0),
                p3: p3.unwrap_or(0.0),
                idle: idle.unwrap_or(0.0),
                readout_flip: readout_flip.unwrap_or(0.0),
                ..base
            }),
        };
        if let Some(m) = &noise {
            if let Err(e) = m.validate() {
                errors.push(format!("noise: {e}"));
            }
        }

        if backend == Backend::Statevector {
            for &n in &n_values {
                if 2 * n + 2 > MAX_STATEVECTOR_QUBITS {
                    errors.push(format!(
                        "backend: statevector supports at most {MAX_STATEVECTOR_QUBITS} qubits, n = {n} needs {}",
                        2 * n + 2
                    ));
                }
            }
        }

        if !errors.is_empty() {
            return Err(ConfigError(errors));
        }
        Ok(RunConfig {
            n_values,
            shots,
            backend,
            noise,
            seed,
            output_path,
            format,
            include_records,
        })
    }

    /// Concrete backend for bit width `n`.
    pub fn resolve_backend(&self, n: usize) -> Backend {
        match self.backend {
            Backend::Auto => {
                let z_noise = self.noise.as_ref().is_some_and(NoiseModel::has_z);
                if z_noise && 2 * n + 2 <= AUTO_STATEVECTOR_MAX_QUBITS {
                    Backend::Statevector
                } else {
                    Backend::Basis
                }
            }
            b => b,
        }
    }

    /// Noise model actually simulated, seeded from the run seed.
    pub fn effective_noise(&self) -> NoiseModel {
        self.noise
            .clone()
            .unwrap_or_else(|| NoiseModel::noiseless(self.seed))
            .with_seed(self.seed)
    }
}
