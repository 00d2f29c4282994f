use rand::Rng;
use rayon::prelude::*;

use super::{shot_rng, IdleSchedule, NoiseModel, ShotRecord, SimError};
use crate::gate_ir::{Circuit, Gate, Pauli, QubitId};

/// Computational-basis state packed into a word; bit `q` is qubit `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisState {
    bits: u64,
    len: usize,
}

impl BasisState {
    pub fn new(bits: u64, len: usize) -> Self {
        assert!(len <= 64, "basis state wider than 64 bits");
        let mask = if len == 64 { u64::MAX } else { (1u64 << len) - 1 };
        Self {
            bits: bits & mask,
            len,
        }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, q: QubitId) -> bool {
        (self.bits >> q.0) & 1 == 1
    }

    #[inline]
    pub fn flip(&mut self, q: QubitId) {
        self.bits ^= 1 << q.0;
    }

    #[inline]
    fn set(&mut self, q: QubitId, value: bool) {
        self.bits = (self.bits & !(1 << q.0)) | (u64::from(value) << q.0);
    }

    /// Applies a gate that permutes basis states (diagonal gates are
    /// no-ops). Returns `false` for `H`, which this representation cannot
    /// track.
    #[inline]
    fn apply(&mut self, gate: &Gate) -> bool {
        match *gate {
            Gate::X(q) => self.flip(q),
            Gate::Cnot { control, target } => {
                if self.get(control) {
                    self.flip(target)
                }
            }
            Gate::Toffoli { controls, target } => {
                if self.get(controls[0]) && self.get(controls[1]) {
                    self.flip(target)
                }
            }
            Gate::PauliError { qubit, pauli } => {
                if pauli.flips_bit() {
                    self.flip(qubit)
                }
            }
            Gate::T(_) | Gate::Tdg(_) => {}
            Gate::H(_) => return false,
        }
        true
    }
}

/// Noiseless classical execution of a Hadamard-free circuit on one basis
/// input.
pub fn simulate_basis_state(circuit: &Circuit, input: BasisState) -> Result<BasisState, SimError> {
    if input.len() != circuit.num_qubits() {
        return Err(SimError::StateLength {
            got: input.len(),
            expected: circuit.num_qubits(),
        });
    }
    let mut state = input;
    for (i, gate) in circuit.gates().iter().enumerate() {
        if !state.apply(gate) {
            return Err(SimError::UnsupportedShape(format!(
                "gate {i} is a Hadamard acting on a basis input"
            )));
        }
    }
    Ok(state)
}

/// Number of leading Hadamards, after checking the circuit is a Hadamard
/// prefix on distinct qubits followed by basis-permuting gates.
fn check_shape(circuit: &Circuit) -> Result<usize, SimError> {
    let gates = circuit.gates();
    let prefix = gates
        .iter()
        .take_while(|g| matches!(g, Gate::H(_) | Gate::PauliError { .. }))
        .count();
    let mut seen = vec![false; circuit.num_qubits()];
    for g in &gates[..prefix] {
        if let Gate::H(q) = g {
            if std::mem::replace(&mut seen[q.0], true) {
                return Err(SimError::UnsupportedShape(format!(
                    "repeated Hadamard on {q}"
                )));
            }
        }
    }
    if let Some(i) = gates[prefix..].iter().position(|g| matches!(g, Gate::H(_))) {
        return Err(SimError::UnsupportedShape(format!(
            "Hadamard at gate {} follows a non-Hadamard gate",
            prefix + i
        )));
    }
    Ok(prefix)
}

fn run_one_shot(
    circuit: &Circuit,
    noise: &NoiseModel,
    idle: &IdleSchedule,
    shot: u64,
) -> ShotRecord {
    let mut rng = shot_rng(noise.seed, shot);
    let mut state = BasisState::new(0, circuit.num_qubits());
    let flip = |state: &mut BasisState, q: QubitId, p: Pauli| {
        if p != Pauli::Z {
            state.flip(q)
        }
    };
    for (gate, idle_before) in circuit.gates().iter().zip(&idle.before) {
        noise.sample_idle_errors(idle_before, &mut rng, |q, p| flip(&mut state, q, p));
        if let Gate::H(q) = *gate {
            // H on a fresh qubit followed only by permutations: the outcome
            // marginal is a fair coin.
            state.set(q, rng.random());
        } else {
            state.apply(gate);
        }
        noise.sample_gate_errors(gate, &mut rng, |q, p| flip(&mut state, q, p));
    }
    noise.sample_idle_errors(&idle.trailing, &mut rng, |q, p| flip(&mut state, q, p));
    let bits = noise.apply_readout(state.bits(), circuit.num_qubits(), &mut rng);
    ShotRecord::decode(circuit.layout(), bits)
}

/// Runs `shots` noisy trajectories on the basis-path backend.
pub fn run_shots_basis(
    circuit: &Circuit,
    noise: &NoiseModel,
    shots: u64,
) -> Result<Vec<ShotRecord>, SimError> {
    noise.validate()?;
    check_shape(circuit)?;
    let idle = IdleSchedule::new(circuit);
    Ok((0..shots)
        .into_par_iter()
        .map(|s| run_one_shot(circuit, noise, &idle, s))
        .collect())
}
