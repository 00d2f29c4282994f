use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use super::{shot_rng, IdleSchedule, NoiseModel, ShotRecord, SimError};
use crate::gate_ir::{Circuit, Gate, IrError, Pauli, QubitId};

/// Memory guard: `2^26` amplitudes is 1 GiB.
pub const MAX_STATEVECTOR_QUBITS: usize = 26;

/// Dense state over `num_qubits` qubits; amplitude index bit `q` is qubit `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    amps: Vec<Complex64>,
    num_qubits: usize,
}

impl Statevector {
    /// `|bits>` over `num_qubits` qubits.
    pub fn basis(num_qubits: usize, bits: u64) -> Result<Self, SimError> {
        if num_qubits > MAX_STATEVECTOR_QUBITS {
            return Err(SimError::TooManyQubits {
                qubits: num_qubits,
                max: MAX_STATEVECTOR_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amps[bits as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { amps, num_qubits })
    }

    pub fn zero(num_qubits: usize) -> Result<Self, SimError> {
        Self::basis(num_qubits, 0)
    }

    /// Evolves `|0...0>` through every gate of `circuit`, Pauli markers
    /// included.
    pub fn run(circuit: &Circuit) -> Result<Self, SimError> {
        let mut sv = Self::zero(circuit.num_qubits())?;
        sv.apply_circuit(circuit);
        Ok(sv)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply_circuit(&mut self, circuit: &Circuit) {
        for g in circuit.gates() {
            self.apply(g);
        }
    }

    pub fn apply(&mut self, gate: &Gate) {
        match *gate {
            Gate::X(q) => self.apply_x(q.0, 0),
            Gate::H(q) => self.apply_h(q.0),
            Gate::T(q) => self.apply_phase(q.0, Complex64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)),
            Gate::Tdg(q) => self.apply_phase(q.0, Complex64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)),
            Gate::Cnot { control, target } => self.apply_x(target.0, 1 << control.0),
            Gate::Toffoli { controls, target } => {
                self.apply_x(target.0, (1 << controls[0].0) | (1 << controls[1].0))
            }
            Gate::PauliError { qubit, pauli } => self.apply_pauli(qubit, pauli),
        }
    }

    pub fn apply_pauli(&mut self, q: QubitId, pauli: Pauli) {
        match pauli {
            Pauli::X => self.apply_x(q.0, 0),
            Pauli::Z => self.apply_phase(q.0, Complex64::new(-1.0, 0.0)),
            Pauli::Y => {
                // Y|0> = i|1>, Y|1> = -i|0>
                let bit = 1usize << q.0;
                let i = Complex64::new(0.0, 1.0);
                for k in 0..self.amps.len() {
                    if k & bit == 0 {
                        let (a0, a1) = (self.amps[k], self.amps[k | bit]);
                        self.amps[k] = -i * a1;
                        self.amps[k | bit] = i * a0;
                    }
                }
            }
        }
    }

    /// X on `target` conditioned on every bit of `control_mask`.
    fn apply_x(&mut self, target: usize, control_mask: usize) {
        let bit = 1usize << target;
        for k in 0..self.amps.len() {
            if k & bit == 0 && k & control_mask == control_mask {
                self.amps.swap(k, k | bit);
            }
        }
    }

    fn apply_h(&mut self, target: usize) {
        let bit = 1usize << target;
        for k in 0..self.amps.len() {
            if k & bit == 0 {
                let (a0, a1) = (self.amps[k], self.amps[k | bit]);
                self.amps[k] = (a0 + a1) * FRAC_1_SQRT_2;
                self.amps[k | bit] = (a0 - a1) * FRAC_1_SQRT_2;
            }
        }
    }

    fn apply_phase(&mut self, target: usize, phase: Complex64) {
        let bit = 1usize << target;
        for (k, a) in self.amps.iter_mut().enumerate() {
            if k & bit != 0 {
                *a *= phase;
            }
        }
    }
}

/// Born-rule probabilities of every bitstring for a noiseless circuit.
pub fn exact_distribution_statevector(circuit: &Circuit) -> Result<Vec<f64>, SimError> {
    if let Some(index) = circuit.gates().iter().position(|g| matches!(g, Gate::PauliError { .. })) {
        return Err(IrError::PauliErrorPresent { index }.into());
    }
    Ok(Statevector::run(circuit)?.probabilities())
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

fn sample_index<R: Rng>(cdf: &[f64], rng: &mut R) -> usize {
    let total = *cdf.last().expect("nonempty distribution");
    let u = rng.random::<f64>() * total;
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// Runs `shots` trajectories on the full statevector. Without gate noise
/// the state is evolved once and sampled repeatedly.
pub fn run_shots_statevector(
    circuit: &Circuit,
    noise: &NoiseModel,
    shots: u64,
) -> Result<Vec<ShotRecord>, SimError> {
    noise.validate()?;
    let nq = circuit.num_qubits();
    if nq > MAX_STATEVECTOR_QUBITS {
        return Err(SimError::TooManyQubits {
            qubits: nq,
            max: MAX_STATEVECTOR_QUBITS,
        });
    }
    let layout = circuit.layout();
    let finish = |bits: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        ShotRecord::decode(layout, noise.apply_readout(bits as u64, nq, rng))
    };

    if noise.gates_noiseless() {
        let cdf = cumulative(&Statevector::run(circuit)?.probabilities());
        return Ok((0..shots)
            .into_par_iter()
            .map(|s| {
                let mut rng = shot_rng(noise.seed, s);
                let bits = sample_index(&cdf, &mut rng);
                finish(bits, &mut rng)
            })
            .collect());
    }

    let idle = IdleSchedule::new(circuit);
    Ok((0..shots)
        .into_par_iter()
        .map(|s| {
            let mut rng = shot_rng(noise.seed, s);
            let mut sv = Statevector::zero(nq).expect("qubit count checked above");
            for (gate, idle_before) in circuit.gates().iter().zip(&idle.before) {
                noise.sample_idle_errors(idle_before, &mut rng, |q, p| sv.apply_pauli(q, p));
                sv.apply(gate);
                noise.sample_gate_errors(gate, &mut rng, |q, p| sv.apply_pauli(q, p));
            }
            noise.sample_idle_errors(&idle.trailing, &mut rng, |q, p| sv.apply_pauli(q, p));
            let cdf = cumulative(&sv.probabilities());
            let bits = sample_index(&cdf, &mut rng);
            finish(bits, &mut rng)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comparator_synth::{build_comparator, build_experiment, lower_toffoli, ComparatorSpec};

    const TOL: f64 = 1e-10;

    #[test]
    fn norm_preserved_after_every_gate() {
        let mut c = lower_toffoli(&build_experiment(2).unwrap()).unwrap();
        c.append(Gate::PauliError {
            qubit: QubitId(1),
            pauli: Pauli::Y,
        })
        .unwrap();
        let mut sv = Statevector::zero(c.num_qubits()).unwrap();
        for g in c.gates() {
            sv.apply(g);
            assert!((sv.norm_sqr() - 1.0).abs() < TOL);
        }
    }

    #[test]
    fn empty_circuit_is_all_zeros() {
        let p = exact_distribution_statevector(&Circuit::new(1).unwrap()).unwrap();
        assert_eq!(p.len(), 16);
        assert!((p[0] - 1.0).abs() < TOL);
        assert!(p[1..].iter().all(|&x| x.abs() < TOL));
    }

    #[test]
    fn experiment_n1_distribution() {
        let e = build_experiment(1).unwrap();
        let l = e.layout().clone();
        let p = exact_distribution_statevector(&e).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < TOL);
        // Enumerate (a, b) and apply [a < b] independently.
        for a in 0..2u64 {
            for b in 0..2u64 {
                let idx = l.encode(a, b, false, a < b) as usize;
                assert!((p[idx] - 0.25).abs() < TOL);
            }
        }
        assert_eq!(p.iter().filter(|&&x| x > TOL).count(), 4);
    }

    #[test]
    fn hadamard_coin() {
        let mut c = Circuit::new(1).unwrap();
        c.append(Gate::H(QubitId(0))).unwrap();
        let records = run_shots_statevector(&c, &NoiseModel::noiseless(9), 100_000).unwrap();
        let ones = records.iter().filter(|r| r.a_meas == 1).count() as f64 / 1e5;
        assert!((ones - 0.5).abs() < 0.01);
        assert!(records.iter().all(|r| r.b_meas == 0 && !r.output_meas));
    }

    #[test]
    fn lowered_toffoli_matches_on_every_basis_input() {
        let mut c = Circuit::new(1).unwrap();
        c.append(Gate::toffoli(0, 1, 2)).unwrap();
        let lowered = lower_toffoli(&c).unwrap();
        for input in 0..16u64 {
            let mut sv = Statevector::basis(4, input).unwrap();
            sv.apply_circuit(&lowered);
            let expected = input ^ (((input & 1) & ((input >> 1) & 1)) << 2);
            assert!((sv.amplitudes()[expected as usize] - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn lowered_comparator_same_distribution() {
        let e = build_experiment(2).unwrap();
        let p = exact_distribution_statevector(&e).unwrap();
        let q = exact_distribution_statevector(&lower_toffoli(&e).unwrap()).unwrap();
        for (x, y) in p.iter().zip(&q) {
            assert!((x - y).abs() < TOL);
        }
        // basis-input unitary check for the bare comparator
        let c = lower_toffoli(&build_comparator(ComparatorSpec::new(2)).unwrap()).unwrap();
        let l = c.layout().clone();
        for a in 0..4 {
            for b in 0..4 {
                for out in [false, true] {
                    let mut sv = Statevector::basis(6, l.encode(a, b, false, out)).unwrap();
                    sv.apply_circuit(&c);
                    let idx = l.encode(a, b, false, out ^ (a < b)) as usize;
                    assert!((sv.amplitudes()[idx] - Complex64::new(1.0, 0.0)).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn y_and_z_act_as_unitaries() {
        let mut sv = Statevector::zero(1).unwrap();
        sv.apply_pauli(QubitId(0), Pauli::Y);
        assert!((sv.amplitudes()[1] - Complex64::new(0.0, 1.0)).norm() < TOL);
        sv.apply_pauli(QubitId(0), Pauli::Z);
        assert!((sv.amplitudes()[1] - Complex64::new(0.0, -1.0)).norm() < TOL);
    }

    #[test]
    fn rejects_markers_and_oversized_circuits() {
        let mut c = Circuit::new(1).unwrap();
        c.append(Gate::PauliError {
            qubit: QubitId(0),
            pauli: Pauli::Z,
        })
        .unwrap();
        assert!(matches!(
            exact_distribution_statevector(&c),
            Err(SimError::Ir(IrError::PauliErrorPresent { index: 0 }))
        ));
        let big = build_experiment(13).unwrap();
        assert!(matches!(
            run_shots_statevector(&big, &NoiseModel::default(), 1),
            Err(SimError::TooManyQubits { qubits: 28, max: 26 })
        ));
    }

    #[test]
    fn noisy_statevector_is_deterministic() {
        let e = build_experiment(2).unwrap();
        let noise = NoiseModel::noiseless(4).tied_to_p2(0.05);
        let r1 = run_shots_statevector(&e, &noise, 500).unwrap();
        let r2 = run_shots_statevector(&e, &noise, 500).unwrap();
        assert_eq!(r1, r2);
    }
}
