//! Shot-based execution of circuits with Monte Carlo Pauli noise.
//!
//! Two backends share one [`NoiseModel`]:
//!
//! - [`run_shots_basis`] tracks a single packed bitstring per shot. It is
//!   exact for circuits made of a Hadamard prefix on fresh qubits followed by
//!   classical reversible gates, which is the shape of the experiment
//!   circuit. Z errors are dropped and Y acts as a bit flip.
//! - [`run_shots_statevector`] evolves the full `2^q` amplitude vector and
//!   applies every Pauli faithfully. Limited to [`MAX_STATEVECTOR_QUBITS`].
//!
//! Every shot draws from its own ChaCha stream keyed by `(seed, shot index)`,
//! so results do not depend on how shots are scheduled across threads.

mod basis;
mod statevector;

pub use basis::{run_shots_basis, simulate_basis_state, BasisState};
pub use statevector::{
    exact_distribution_statevector, run_shots_statevector, Statevector, MAX_STATEVECTOR_QUBITS,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gate_ir::{Circuit, Gate, GateKind, IrError, Pauli, QubitId, RegisterLayout};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("circuit not supported by the basis-path backend ({0}); use the statevector backend")]
    UnsupportedShape(String),
    #[error("{qubits} qubits exceeds the statevector limit of {max}")]
    TooManyQubits { qubits: usize, max: usize },
    #[error("basis state has {got} bits, circuit has {expected} qubits")]
    StateLength { got: usize, expected: usize },
    #[error(transparent)]
    Ir(#[from] IrError),
}

/// Pauli channel applied after every gate, plus symmetric readout error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Error probability after each single-qubit gate.
    pub p1: f64,
    /// Error probability on each operand after each two-qubit gate.
    pub p2: f64,
    /// Error probability on each operand after each three-qubit gate.
    pub p3: f64,
    /// Relative weights of X, Y, Z once an error fires.
    pub pauli_weights: [f64; 3],
    pub readout_flip: f64,
    /// Error probability per qubit per ASAP layer in which the qubit is not
    /// acted on.
    #[serde(default)]
    pub idle: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless(0)
    }
}

impl NoiseModel {
    pub fn noiseless(seed: u64) -> Self {
        Self {
            p1: 0.0,
            p2: 0.0,
            p3: 0.0,
            pauli_weights: [1.0 / 3.0; 3],
            readout_flip: 0.0,
            idle: 0.0,
            seed,
        }
    }

    /// Single-parameter family used for calibration: `p1 = p2 / 10`,
    /// `p3 = 2 p2`, `idle = p2 / 2`, no readout error. Weights and seed come
    /// from `self`.
    pub fn tied_to_p2(&self, p2: f64) -> Self {
        Self {
            p1: p2 / 10.0,
            p2,
            p3: 2.0 * p2,
            pauli_weights: self.pauli_weights,
            readout_flip: 0.0,
            idle: p2 / 2.0,
            seed: self.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, p) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("p3", self.p3),
            ("readout_flip", self.readout_flip),
            ("idle", self.idle),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidNoise(format!("{name} = {p} is not in [0, 1]")));
            }
        }
        if self.pauli_weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(SimError::InvalidNoise(format!(
                "pauli_weights {:?} must be nonnegative",
                self.pauli_weights
            )));
        }
        let sum: f64 = self.pauli_weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidNoise(format!(
                "pauli_weights {:?} sum to {sum}, expected 1",
                self.pauli_weights
            )));
        }
        Ok(())
    }

    /// No gate errors (readout errors may still be present).
    pub fn gates_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p3 == 0.0 && self.idle == 0.0
    }

    /// Whether Z errors can occur at all.
    pub fn has_z(&self) -> bool {
        self.pauli_weights[2] > 0.0 && !self.gates_noiseless()
    }

    fn error_probability(&self, kind: GateKind, arity: usize) -> f64 {
        match (kind, arity) {
            (GateKind::PauliError, _) => 0.0,
            (_, 1) => self.p1,
            (_, 2) => self.p2,
            _ => self.p3,
        }
    }

    fn sample_pauli<R: Rng>(&self, rng: &mut R) -> Pauli {
        let u: f64 = rng.random();
        let [wx, wy, _] = self.pauli_weights;
        if u < wx {
            Pauli::X
        } else if u < wx + wy {
            Pauli::Y
        } else {
            Pauli::Z
        }
    }

    /// Calls `apply` for every error that fires after `gate`.
    pub(crate) fn sample_gate_errors<R: Rng>(
        &self,
        gate: &Gate,
        rng: &mut R,
        mut apply: impl FnMut(QubitId, Pauli),
    ) {
        let ops = gate.operands();
        let p = self.error_probability(gate.kind(), ops.len());
        if p == 0.0 {
            return;
        }
        for &q in ops.iter() {
            if rng.random::<f64>() < p {
                apply(q, self.sample_pauli(rng));
            }
        }
    }

    /// Calls `apply` for every idle error that fires over the given
    /// `(qubit, idle layers)` slots.
    pub(crate) fn sample_idle_errors<R: Rng>(
        &self,
        slots: &[(QubitId, u32)],
        rng: &mut R,
        mut apply: impl FnMut(QubitId, Pauli),
    ) {
        if self.idle == 0.0 {
            return;
        }
        for &(q, layers) in slots {
            for _ in 0..layers {
                if rng.random::<f64>() < self.idle {
                    apply(q, self.sample_pauli(rng));
                }
            }
        }
    }

    pub(crate) fn apply_readout<R: Rng>(&self, bits: u64, num_qubits: usize, rng: &mut R) -> u64 {
        if self.readout_flip == 0.0 {
            return bits;
        }
        (0..num_qubits).fold(bits, |acc, q| {
            if rng.random::<f64>() < self.readout_flip {
                acc ^ (1 << q)
            } else {
                acc
            }
        })
    }
}

/// Idle layers each qubit spends before each gate, under the same ASAP
/// layering as [`Circuit::metrics`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct IdleSchedule {
    /// Per gate: `(qubit, idle layers)` elapsed on that gate's operands since
    /// their previous gate.
    pub before: Vec<Vec<(QubitId, u32)>>,
    /// Idle layers after each qubit's last gate, up to the circuit depth.
    pub trailing: Vec<(QubitId, u32)>,
}

impl IdleSchedule {
    pub fn new(circuit: &Circuit) -> Self {
        let mut frontier = vec![0u32; circuit.num_qubits()];
        let mut before = Vec::with_capacity(circuit.len());
        let mut depth = 0;
        for gate in circuit.gates() {
            if gate.kind() == GateKind::PauliError {
                before.push(Vec::new());
                continue;
            }
            let ops = gate.operands();
            let layer = ops.iter().map(|q| frontier[q.0]).max().unwrap_or(0) + 1;
            before.push(
                ops.iter()
                    .filter(|q| layer - frontier[q.0] > 1)
                    .map(|&q| (q, layer - frontier[q.0] - 1))
                    .collect(),
            );
            for q in ops.iter() {
                frontier[q.0] = layer;
            }
            depth = depth.max(layer);
        }
        let trailing = frontier
            .iter()
            .enumerate()
            .filter(|(_, &f)| depth > f)
            .map(|(q, &f)| (QubitId(q), depth - f))
            .collect();
        Self { before, trailing }
    }

    /// Total idle qubit-layers.
    #[cfg(test)]
    pub fn total(&self) -> u32 {
        self.before
            .iter()
            .flatten()
            .chain(&self.trailing)
            .map(|(_, k)| k)
            .sum()
    }
}

/// Independent RNG stream for one shot.
pub(crate) fn shot_rng(seed: u64, shot: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(shot);
    rng
}

/// One measured shot, decoded by register role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShotRecord {
    pub a_meas: u64,
    pub b_meas: u64,
    pub ancilla_meas: bool,
    pub output_meas: bool,
}

impl ShotRecord {
    pub fn decode(layout: &RegisterLayout, bits: u64) -> Self {
        let (a_meas, b_meas, ancilla_meas, output_meas) = layout.decode(bits);
        Self {
            a_meas,
            b_meas,
            ancilla_meas,
            output_meas,
        }
    }

    pub fn encode(&self, layout: &RegisterLayout) -> u64 {
        layout.encode(self.a_meas, self.b_meas, self.ancilla_meas, self.output_meas)
    }
}

/// Histogram of records over full basis words (length `2^(2n+2)`).
pub fn outcome_counts(layout: &RegisterLayout, records: &[ShotRecord]) -> Vec<u64> {
    let mut counts = vec![0u64; 1usize << layout.num_qubits()];
    for r in records {
        counts[r.encode(layout) as usize] += 1;
    }
    counts
}

/// Copy of `circuit` with a Pauli error inserted so that exactly `site`
/// gates precede it (`site == 0` is before the first gate, `site == len`
/// after the last).
pub fn inject_error_at(
    circuit: &Circuit,
    site: usize,
    qubit: QubitId,
    pauli: Pauli,
) -> Result<Circuit, SimError> {
    let mut out = circuit.clone();
    out.insert(site, Gate::PauliError { qubit, pauli })?;
    Ok(out)
}
