//! Outcome classification, success criteria and noise calibration.
//!
//! Each shot is scored against the comparison of its *measured* input
//! registers and sorted into one of four categories by two booleans: is the
//! output bit right, and is the ancilla back at 0. The conventional success
//! rate counts a right output regardless of the ancilla; the strict rate
//! also requires a clean ancilla.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::comparator_synth::build_experiment;
use crate::gate_ir::{Circuit, IrError};
use crate::simulator::{run_shots_basis, NoiseModel, ShotRecord, SimError};

/// Two-sided 95% standard normal quantile.
const Z_95: f64 = 1.959_963_984_540_054;

/// Conventional success rate of uniformly random outputs.
pub const CONVENTIONAL_BASELINE: f64 = 0.5;
/// Strict success rate of uniformly random outputs.
pub const STRICT_BASELINE: f64 = 0.25;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no shot records to aggregate")]
    EmptyInput,
    #[error("invalid calibration input: {0}")]
    InvalidCalibration(String),
    #[error(
        "calibration did not converge: best p2 = {:.6}, max |residual| = {:.4} exceeds {:.4}",
        .calibration.p2, .calibration.max_abs_residual(), .threshold
    )]
    CalibrationFailed {
        calibration: Box<Calibration>,
        threshold: f64,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// `[a < b]`.
pub fn oracle_f(a: u64, b: u64) -> bool {
    a < b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeCategory {
    AncillaInclusiveSuccess,
    FailResult,
    FailAncilla,
    FailBoth,
}

impl OutcomeCategory {
    pub const ALL: [OutcomeCategory; 4] = [
        OutcomeCategory::AncillaInclusiveSuccess,
        OutcomeCategory::FailResult,
        OutcomeCategory::FailAncilla,
        OutcomeCategory::FailBoth,
    ];

    pub fn from_flags(output_correct: bool, ancilla_clean: bool) -> Self {
        match (output_correct, ancilla_clean) {
            (true, true) => OutcomeCategory::AncillaInclusiveSuccess,
            (false, true) => OutcomeCategory::FailResult,
            (true, false) => OutcomeCategory::FailAncilla,
            (false, false) => OutcomeCategory::FailBoth,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            OutcomeCategory::AncillaInclusiveSuccess => "ancilla_inclusive_success",
            OutcomeCategory::FailResult => "fail_result",
            OutcomeCategory::FailAncilla => "fail_ancilla",
            OutcomeCategory::FailBoth => "fail_both",
        }
    }

    pub fn is_failure(self) -> bool {
        self != OutcomeCategory::AncillaInclusiveSuccess
    }
}

impl fmt::Display for OutcomeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

pub fn classify_shot(record: &ShotRecord) -> OutcomeCategory {
    OutcomeCategory::from_flags(
        record.output_meas == oracle_f(record.a_meas, record.b_meas),
        !record.ancilla_meas,
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CategoryCounts {
    pub ancilla_inclusive_success: u64,
    pub fail_result: u64,
    pub fail_ancilla: u64,
    pub fail_both: u64,
}

impl CategoryCounts {
    pub fn get(&self, c: OutcomeCategory) -> u64 {
        match c {
            OutcomeCategory::AncillaInclusiveSuccess => self.ancilla_inclusive_success,
            OutcomeCategory::FailResult => self.fail_result,
            OutcomeCategory::FailAncilla => self.fail_ancilla,
            OutcomeCategory::FailBoth => self.fail_both,
        }
    }

    fn bump(&mut self, c: OutcomeCategory) {
        match c {
            OutcomeCategory::AncillaInclusiveSuccess => self.ancilla_inclusive_success += 1,
            OutcomeCategory::FailResult => self.fail_result += 1,
            OutcomeCategory::FailAncilla => self.fail_ancilla += 1,
            OutcomeCategory::FailBoth => self.fail_both += 1,
        }
    }

    pub fn total(&self) -> u64 {
        OutcomeCategory::ALL.iter().map(|&c| self.get(c)).sum()
    }

    /// Right output, ancilla ignored.
    pub fn conventional(&self) -> u64 {
        self.ancilla_inclusive_success + self.fail_ancilla
    }

    pub fn strict(&self) -> u64 {
        self.ancilla_inclusive_success
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: u64, trials: u64) -> Interval {
    assert!(trials > 0 && successes <= trials);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The interval always covers the observed proportion; pin the
    // endpoints at 0 and 1 where rounding could push them past it.
    Interval {
        low: if successes == 0 { 0.0 } else { (center - half).clamp(0.0, p) },
        high: if successes == trials { 1.0 } else { (center + half).clamp(p, 1.0) },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Baselines {
    pub conventional: f64,
    pub strict: f64,
}

impl Default for Baselines {
    fn default() -> Self {
        Self {
            conventional: CONVENTIONAL_BASELINE,
            strict: STRICT_BASELINE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuccessReport {
    pub n: usize,
    pub shots: u64,
    pub category_counts: CategoryCounts,
    pub conventional_rate: f64,
    pub strict_rate: f64,
    pub conventional_ci: Interval,
    pub strict_ci: Interval,
    pub baselines: Baselines,
}

impl SuccessReport {
    pub fn rate(&self, c: OutcomeCategory) -> f64 {
        self.category_counts.get(c) as f64 / self.shots as f64
    }

    pub fn category_ci(&self, c: OutcomeCategory) -> Interval {
        wilson_interval(self.category_counts.get(c), self.shots)
    }

    /// The most frequent failure category, or `None` when there are no
    /// failures. Ties go to the earlier category in [`OutcomeCategory::ALL`].
    pub fn dominant_failure(&self) -> Option<OutcomeCategory> {
        OutcomeCategory::ALL
            .into_iter()
            .filter(|c| c.is_failure() && self.category_counts.get(*c) > 0)
            .fold(None, |best: Option<OutcomeCategory>, c| match best {
                Some(b) if self.category_counts.get(b) >= self.category_counts.get(c) => Some(b),
                _ => Some(c),
            })
    }
}

pub fn aggregate(records: &[ShotRecord], n: usize) -> Result<SuccessReport, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let mut counts = CategoryCounts::default();
    for r in records {
        counts.bump(classify_shot(r));
    }
    let shots = records.len() as u64;
    Ok(SuccessReport {
        n,
        shots,
        category_counts: counts,
        conventional_rate: counts.conventional() as f64 / shots as f64,
        strict_rate: counts.strict() as f64 / shots as f64,
        conventional_ci: wilson_interval(counts.conventional(), shots),
        strict_ci: wilson_interval(counts.strict(), shots),
        baselines: Baselines::default(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    /// Shots per bit width per candidate; at least 10^4.
    pub shots_per_n: u64,
    /// Coarse grid is `p2_max * i / (grid_points - 1)`.
    pub p2_max: f64,
    pub grid_points: usize,
    /// Halvings of the step around the best grid point.
    pub refine_steps: usize,
    /// Largest acceptable `|simulated - target|` at the optimum.
    pub max_residual: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            shots_per_n: 20_000,
            p2_max: 0.01,
            grid_points: 41,
            refine_steps: 8,
            max_residual: 0.02,
        }
    }
}

pub const MIN_CALIBRATION_SHOTS: u64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub p2: f64,
    pub model: NoiseModel,
    pub targets: BTreeMap<usize, f64>,
    pub simulated: BTreeMap<usize, f64>,
    /// `simulated - target` per bit width.
    pub residuals: BTreeMap<usize, f64>,
    pub sse: f64,
    pub evaluations: usize,
    pub shots_per_n: u64,
}

impl Calibration {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.values().fold(0.0, |m, r| m.max(r.abs()))
    }
}

struct Objective<'a> {
    circuits: Vec<(usize, Circuit)>,
    targets: &'a BTreeMap<usize, f64>,
    shape: &'a NoiseModel,
    shots: u64,
}

impl Objective<'_> {
    /// Simulated conventional rate per bit width under `p2`. Every candidate
    /// reuses the shape's seed, so candidates are compared on common random
    /// numbers.
    fn rates(&self, p2: f64) -> Result<BTreeMap<usize, f64>, AnalysisError> {
        let model = self.shape.tied_to_p2(p2);
        self.circuits
            .iter()
            .map(|(n, c)| {
                let records = run_shots_basis(c, &model, self.shots)?;
                Ok((*n, aggregate(&records, *n)?.conventional_rate))
            })
            .collect()
    }

    fn sse(&self, rates: &BTreeMap<usize, f64>) -> f64 {
        self.targets
            .iter()
            .map(|(n, t)| (rates[n] - t).powi(2))
            .sum()
    }

    fn evaluate(&self, p2: f64) -> Result<(f64, BTreeMap<usize, f64>), AnalysisError> {
        let rates = self.rates(p2)?;
        Ok((self.sse(&rates), rates))
    }
}

/// Fits the single free error rate `p2` of [`NoiseModel::tied_to_p2`] so the
/// simulated conventional rates match `targets` (bit width to rate) in the
/// least-squares sense. A coarse grid on `[0, p2_max]` is followed by
/// step-halving around the incumbent; ties keep the smaller `p2`.
pub fn calibrate_noise(
    targets: &BTreeMap<usize, f64>,
    shape: &NoiseModel,
    options: &CalibrationOptions,
) -> Result<Calibration, AnalysisError> {
    if targets.is_empty() {
        return Err(AnalysisError::InvalidCalibration("no targets".into()));
    }
    if let Some((n, r)) = targets.iter().find(|(_, r)| !(**r > 0.0 && **r <= 1.0)) {
        return Err(AnalysisError::InvalidCalibration(format!(
            "target rate {r} for n = {n} is not in (0, 1]"
        )));
    }
    if options.shots_per_n < MIN_CALIBRATION_SHOTS {
        return Err(AnalysisError::InvalidCalibration(format!(
            "shots_per_n = {} is below {MIN_CALIBRATION_SHOTS}",
            options.shots_per_n
        )));
    }
    if options.grid_points < 2 || !(options.p2_max > 0.0 && options.p2_max <= 1.0 / 3.0) {
        return Err(AnalysisError::InvalidCalibration(
            "grid needs at least 2 points and 0 < p2_max <= 1/3".into(),
        ));
    }
    shape.tied_to_p2(options.p2_max).validate()?;

    let circuits = targets
        .keys()
        .map(|&n| Ok((n, build_experiment(n)?)))
        .collect::<Result<Vec<_>, IrError>>()?;
    let objective = Objective {
        circuits,
        targets,
        shape,
        shots: options.shots_per_n,
    };

    let step0 = options.p2_max / (options.grid_points - 1) as f64;
    let grid: Vec<f64> = (0..options.grid_points).map(|i| step0 * i as f64).collect();
    let scored = grid
        .par_iter()
        .map(|&p2| objective.evaluate(p2).map(|(sse, rates)| (p2, sse, rates)))
        .collect::<Result<Vec<_>, _>>()?;
    let mut evaluations = scored.len();
    let (mut best_p2, mut best_sse, mut best_rates) = scored
        .into_iter()
        .reduce(|best, cand| if cand.1 < best.1 { cand } else { best })
        .expect("grid is nonempty");

    let mut step = step0;
    for _ in 0..options.refine_steps {
        step /= 2.0;
        let candidates: Vec<f64> = [best_p2 - step, best_p2 + step]
            .into_iter()
            .filter(|p| (0.0..=options.p2_max).contains(p))
            .collect();
        let scored = candidates
            .par_iter()
            .map(|&p2| objective.evaluate(p2).map(|(sse, rates)| (p2, sse, rates)))
            .collect::<Result<Vec<_>, _>>()?;
        evaluations += scored.len();
        for (p2, sse, rates) in scored {
            if sse < best_sse || (sse == best_sse && p2 < best_p2) {
                (best_p2, best_sse, best_rates) = (p2, sse, rates);
            }
        }
    }

    let residuals = targets
        .iter()
        .map(|(n, t)| (*n, best_rates[n] - t))
        .collect();
    let calibration = Calibration {
        p2: best_p2,
        model: shape.tied_to_p2(best_p2),
        targets: targets.clone(),
        simulated: best_rates,
        residuals,
        sse: best_sse,
        evaluations,
        shots_per_n: options.shots_per_n,
    };
    if calibration.max_abs_residual() > options.max_residual {
        return Err(AnalysisError::CalibrationFailed {
            calibration: Box::new(calibration),
            threshold: options.max_residual,
        });
    }
    Ok(calibration)
}
