//! Comparator and experiment circuit synthesis.
//!
//! The comparator maps `|a>|b>|0>|c>` to `|a>|b>|0>|c ^ [a < b]>`. It
//! complements `a`, ripples the carry of `!a + b` from the LSB to the MSB
//! through a chain of majority (MAJ) cells seeded by the clean ancilla, copies
//! the final carry (which is the borrow of `a - b`, i.e. `[a < b]`) onto the
//! output qubit, then runs the chain backwards and restores `a`.

mod lowering;
mod qasm;

use std::ops::Range;

pub use lowering::lower_toffoli;
pub use qasm::{export_qasm, parse_qasm, ParseError, ParseErrorKind};

use crate::gate_ir::{Circuit, Gate, IrError, QubitId, RegisterLayout};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComparatorSpec {
    pub n: usize,
    /// Reverse the borrow chain so that `a`, `b` and the ancilla are
    /// restored.
    pub uncompute: bool,
}

impl ComparatorSpec {
    pub fn new(n: usize) -> Self {
        Self { n, uncompute: true }
    }

    pub fn without_uncompute(n: usize) -> Self {
        Self { n, uncompute: false }
    }
}

/// Gate-index ranges of the comparator's stages, relative to the first
/// comparator gate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComparatorStages {
    pub complement: Range<usize>,
    pub borrow_chain: Range<usize>,
    /// Index of the CNOT that copies the final borrow onto the output.
    pub copy: usize,
    pub unchain: Range<usize>,
    pub uncomplement: Range<usize>,
}

impl ComparatorStages {
    pub fn of(spec: ComparatorSpec) -> Self {
        let n = spec.n;
        let complement = 0..n;
        let borrow_chain = n..4 * n;
        let copy = 4 * n;
        let (unchain, uncomplement) = if spec.uncompute {
            (4 * n + 1..7 * n + 1, 7 * n + 1..8 * n + 1)
        } else {
            (4 * n + 1..4 * n + 1, 4 * n + 1..4 * n + 1)
        };
        Self {
            complement,
            borrow_chain,
            copy,
            unchain,
            uncomplement,
        }
    }

    /// Total number of comparator gates.
    pub fn len(&self) -> usize {
        self.uncomplement.end
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Wire holding the carry into cell `i`: the ancilla for the LSB cell, the
/// previous cell's `a` wire otherwise.
fn carry_in(layout: &RegisterLayout, i: usize) -> QubitId {
    if i == 0 {
        layout.ancilla()
    } else {
        layout.a(i - 1)
    }
}

fn maj(carry: QubitId, b: QubitId, a: QubitId) -> [Gate; 3] {
    [
        Gate::Cnot { control: a, target: b },
        Gate::Cnot { control: a, target: carry },
        Gate::Toffoli {
            controls: [carry, b],
            target: a,
        },
    ]
}

fn unmaj(carry: QubitId, b: QubitId, a: QubitId) -> [Gate; 3] {
    let [g0, g1, g2] = maj(carry, b, a);
    [g2, g1, g0]
}

fn comparator_gates(layout: &RegisterLayout, uncompute: bool) -> Vec<Gate> {
    let n = layout.n();
    let mut gates = Vec::with_capacity(8 * n + 1);
    gates.extend(layout.a_qubits().map(Gate::X));
    for i in 0..n {
        gates.extend(maj(carry_in(layout, i), layout.b(i), layout.a(i)));
    }
    gates.push(Gate::Cnot {
        control: layout.a(n - 1),
        target: layout.output(),
    });
    if uncompute {
        for i in (0..n).rev() {
            gates.extend(unmaj(carry_in(layout, i), layout.b(i), layout.a(i)));
        }
        gates.extend(layout.a_qubits().map(Gate::X));
    }
    gates
}

/// Comparator circuit over `2n + 2` qubits with `2n` Toffolis (`n` without
/// uncompute).
pub fn build_comparator(spec: ComparatorSpec) -> Result<Circuit, IrError> {
    let mut circuit = Circuit::new(spec.n)?;
    let gates = comparator_gates(circuit.layout(), spec.uncompute);
    circuit.extend(gates)?;
    Ok(circuit)
}

/// Hadamards on every input qubit, the comparator, then measurement of all
/// qubits.
pub fn build_experiment(n: usize) -> Result<Circuit, IrError> {
    let mut circuit = Circuit::new(n)?;
    let layout = circuit.layout().clone();
    let mut gates: Vec<Gate> = layout
        .a_qubits()
        .chain(layout.b_qubits())
        .map(Gate::H)
        .collect();
    gates.extend(comparator_gates(&layout, true));
    circuit.extend(gates)?;
    circuit.measure_all = true;
    Ok(circuit)
}

/// Index of the first comparator gate in [`build_experiment`]'s output.
pub fn experiment_comparator_offset(n: usize) -> usize {
    2 * n
}
