//! Gate-level intermediate representation.
//!
//! A [`Circuit`] is an ordered list of [`Gate`]s over a flat qubit array whose
//! roles are fixed by a [`RegisterLayout`]: the `a` register (LSB first), the
//! `b` register (LSB first), one borrow ancilla and one output qubit, for a
//! total of `2n + 2` qubits.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported bit width. Basis states are packed into a `u64`, so
/// `2n + 2` must not exceed 64.
pub const MAX_BIT_WIDTH: usize = 31;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("bit width must be at least 1")]
    ZeroWidth,
    #[error("bit width {n} exceeds the supported maximum of {max}")]
    WidthTooLarge { n: usize, max: usize },
    #[error("operand {qubit} out of range for a {num_qubits}-qubit circuit")]
    OperandOutOfRange { qubit: QubitId, num_qubits: usize },
    #[error("gate `{gate}` repeats operand {qubit}")]
    RepeatedOperand { gate: Gate, qubit: QubitId },
    #[error("cannot invert a circuit containing Pauli error markers (gate {index})")]
    PauliErrorPresent { index: usize },
    #[error("insertion position {position} exceeds gate count {len}")]
    PositionOutOfRange { position: usize, len: usize },
}

/// Position of a qubit within the circuit's flat qubit array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitId(pub usize);

impl QubitId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q[{}]", self.0)
    }
}

/// The role a qubit plays in the comparator layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitRole {
    A(usize),
    B(usize),
    Ancilla,
    Output,
}

/// Role-addressed qubit layout: `a` at `0..n`, `b` at `n..2n`, ancilla at
/// `2n`, output at `2n + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegisterLayout {
    n: usize,
}

impl RegisterLayout {
    pub fn new(n: usize) -> Result<Self, IrError> {
        if n == 0 {
            return Err(IrError::ZeroWidth);
        }
        if n > MAX_BIT_WIDTH {
            return Err(IrError::WidthTooLarge { n, max: MAX_BIT_WIDTH });
        }
        Ok(Self { n })
    }

    /// Bit width of each input register.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_qubits(&self) -> usize {
        2 * self.n + 2
    }

    pub fn a(&self, i: usize) -> QubitId {
        assert!(i < self.n, "a-register index {i} out of range");
        QubitId(i)
    }

    pub fn b(&self, i: usize) -> QubitId {
        assert!(i < self.n, "b-register index {i} out of range");
        QubitId(self.n + i)
    }

    pub fn a_qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        (0..self.n).map(QubitId)
    }

    pub fn b_qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        (self.n..2 * self.n).map(QubitId)
    }

    pub fn ancilla(&self) -> QubitId {
        QubitId(2 * self.n)
    }

    pub fn output(&self) -> QubitId {
        QubitId(2 * self.n + 1)
    }

    pub fn role(&self, q: QubitId) -> Option<QubitRole> {
        let i = q.0;
        match i {
            _ if i < self.n => Some(QubitRole::A(i)),
            _ if i < 2 * self.n => Some(QubitRole::B(i - self.n)),
            _ if i == 2 * self.n => Some(QubitRole::Ancilla),
            _ if i == 2 * self.n + 1 => Some(QubitRole::Output),
            _ => None,
        }
    }

    /// Packs register values into a basis-state word (bit `q` is qubit `q`).
    pub fn encode(&self, a: u64, b: u64, ancilla: bool, output: bool) -> u64 {
        let mask = self.register_mask();
        (a & mask)
            | ((b & mask) << self.n)
            | (u64::from(ancilla) << (2 * self.n))
            | (u64::from(output) << (2 * self.n + 1))
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(&self, bits: u64) -> (u64, u64, bool, bool) {
        let mask = self.register_mask();
        (
            bits & mask,
            (bits >> self.n) & mask,
            (bits >> (2 * self.n)) & 1 == 1,
            (bits >> (2 * self.n + 1)) & 1 == 1,
        )
    }

    fn register_mask(&self) -> u64 {
        (1u64 << self.n) - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// Whether the Pauli flips a computational-basis bit.
    pub fn flips_bit(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    pub fn mnemonic(self) -> &'static str {
        match self {
            Pauli::X => "x",
            Pauli::Y => "y",
            Pauli::Z => "z",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GateKind {
    X,
    H,
    Cnot,
    Toffoli,
    T,
    Tdg,
    PauliError,
}

/// A gate with its operands. `T`/`Tdg` only appear in circuits produced by
/// Toffoli lowering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    X(QubitId),
    H(QubitId),
    T(QubitId),
    Tdg(QubitId),
    Cnot { control: QubitId, target: QubitId },
    Toffoli { controls: [QubitId; 2], target: QubitId },
    PauliError { qubit: QubitId, pauli: Pauli },
}

impl Gate {
    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot {
            control: QubitId(control),
            target: QubitId(target),
        }
    }

    pub fn toffoli(c0: usize, c1: usize, target: usize) -> Self {
        Gate::Toffoli {
            controls: [QubitId(c0), QubitId(c1)],
            target: QubitId(target),
        }
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::X(_) => GateKind::X,
            Gate::H(_) => GateKind::H,
            Gate::T(_) => GateKind::T,
            Gate::Tdg(_) => GateKind::Tdg,
            Gate::Cnot { .. } => GateKind::Cnot,
            Gate::Toffoli { .. } => GateKind::Toffoli,
            Gate::PauliError { .. } => GateKind::PauliError,
        }
    }

    /// Operands in (controls..., target) order.
    pub fn operands(&self) -> Operands {
        match *self {
            Gate::X(q) | Gate::H(q) | Gate::T(q) | Gate::Tdg(q) => Operands::one(q),
            Gate::PauliError { qubit, .. } => Operands::one(qubit),
            Gate::Cnot { control, target } => Operands {
                buf: [control, target, QubitId(0)],
                len: 2,
            },
            Gate::Toffoli { controls, target } => Operands {
                buf: [controls[0], controls[1], target],
                len: 3,
            },
        }
    }

    /// Inverse gate, or `None` for Pauli error markers.
    pub fn inverse(&self) -> Option<Gate> {
        match *self {
            Gate::T(q) => Some(Gate::Tdg(q)),
            Gate::Tdg(q) => Some(Gate::T(q)),
            Gate::PauliError { .. } => None,
            g => Some(g),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Gate::X(q) => write!(f, "x {q}"),
            Gate::H(q) => write!(f, "h {q}"),
            Gate::T(q) => write!(f, "t {q}"),
            Gate::Tdg(q) => write!(f, "tdg {q}"),
            Gate::Cnot { control, target } => write!(f, "cx {control}, {target}"),
            Gate::Toffoli { controls, target } => {
                write!(f, "ccx {}, {}, {target}", controls[0], controls[1])
            }
            Gate::PauliError { qubit, pauli } => write!(f, "pauli {} {qubit}", pauli.mnemonic()),
        }
    }
}

/// Up to three gate operands, stored inline.
#[derive(Debug, Clone, Copy)]
pub struct Operands {
    buf: [QubitId; 3],
    len: u8,
}

impl Operands {
    fn one(q: QubitId) -> Self {
        Self {
            buf: [q, QubitId(0), QubitId(0)],
            len: 1,
        }
    }
}

impl Deref for Operands {
    type Target = [QubitId];

    fn deref(&self) -> &[QubitId] {
        &self.buf[..usize::from(self.len)]
    }
}

/// Gate counts by kind plus ASAP depth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Metrics {
    pub qubits: usize,
    pub x: usize,
    pub h: usize,
    pub cnot: usize,
    pub toffoli: usize,
    pub t: usize,
    pub tdg: usize,
    pub pauli_error: usize,
    pub depth: usize,
}

impl Metrics {
    pub fn total_gates(&self) -> usize {
        self.x + self.h + self.cnot + self.toffoli + self.t + self.tdg + self.pauli_error
    }
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "qubits={} depth={} x={} h={} cx={} ccx={} t={} tdg={}",
            self.qubits, self.depth, self.x, self.h, self.cnot, self.toffoli, self.t, self.tdg
        )?;
        if self.pauli_error > 0 {
            write!(f, " pauli_errors={}", self.pauli_error)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    layout: RegisterLayout,
    gates: Vec<Gate>,
    /// Terminal computational-basis measurement of every qubit.
    pub measure_all: bool,
}

impl Circuit {
    /// Empty circuit over `2n + 2` qubits.
    pub fn new(n: usize) -> Result<Self, IrError> {
        Ok(Self {
            layout: RegisterLayout::new(n)?,
            gates: Vec::new(),
            measure_all: false,
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        &self.layout
    }

    pub fn n(&self) -> usize {
        self.layout.n()
    }

    pub fn num_qubits(&self) -> usize {
        self.layout.num_qubits()
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn check_gate(&self, gate: &Gate) -> Result<(), IrError> {
        let ops = gate.operands();
        for (i, &q) in ops.iter().enumerate() {
            if q.0 >= self.num_qubits() {
                return Err(IrError::OperandOutOfRange {
                    qubit: q,
                    num_qubits: self.num_qubits(),
                });
            }
            if ops[..i].contains(&q) {
                return Err(IrError::RepeatedOperand { gate: *gate, qubit: q });
            }
        }
        Ok(())
    }

    pub fn append(&mut self, gate: Gate) -> Result<&mut Self, IrError> {
        self.check_gate(&gate)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend<I: IntoIterator<Item = Gate>>(&mut self, gates: I) -> Result<&mut Self, IrError> {
        for g in gates {
            self.append(g)?;
        }
        Ok(self)
    }

    /// Inserts `gate` so that exactly `position` gates precede it.
    pub fn insert(&mut self, position: usize, gate: Gate) -> Result<&mut Self, IrError> {
        if position > self.gates.len() {
            return Err(IrError::PositionOutOfRange {
                position,
                len: self.gates.len(),
            });
        }
        self.check_gate(&gate)?;
        self.gates.insert(position, gate);
        Ok(self)
    }

    /// Removes and returns the gate at `index`.
    pub fn remove(&mut self, index: usize) -> Gate {
        self.gates.remove(index)
    }

    /// Re-checks every gate against the layout.
    pub fn validate(&self) -> Result<(), IrError> {
        self.gates.iter().try_for_each(|g| self.check_gate(g))
    }

    pub fn has_pauli_errors(&self) -> bool {
        self.gates.iter().any(|g| g.kind() == GateKind::PauliError)
    }

    /// Reversed gate list with each gate inverted. `measure_all` is not
    /// carried over.
    pub fn inverse(&self) -> Result<Circuit, IrError> {
        let gates = self
            .gates
            .iter()
            .enumerate()
            .rev()
            .map(|(index, g)| g.inverse().ok_or(IrError::PauliErrorPresent { index }))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Circuit {
            layout: self.layout.clone(),
            gates,
            measure_all: false,
        })
    }

    /// Appends every gate of `other`, which must share this layout.
    pub fn compose(&mut self, other: &Circuit) -> Result<&mut Self, IrError> {
        self.extend(other.gates.iter().copied())
    }

    /// Gate counts and depth. Depth uses as-soon-as-possible layering with
    /// one time step per gate; Pauli error markers take no time step.
    pub fn metrics(&self) -> Metrics {
        let mut m = Metrics {
            qubits: self.num_qubits(),
            ..Metrics::default()
        };
        let mut frontier = vec![0usize; self.num_qubits()];
        for gate in &self.gates {
            match gate.kind() {
                GateKind::X => m.x += 1,
                GateKind::H => m.h += 1,
                GateKind::Cnot => m.cnot += 1,
                GateKind::Toffoli => m.toffoli += 1,
                GateKind::T => m.t += 1,
                GateKind::Tdg => m.tdg += 1,
                GateKind::PauliError => {
                    m.pauli_error += 1;
                    continue;
                }
            }
            let ops = gate.operands();
            let layer = ops.iter().map(|q| frontier[q.0]).max().unwrap_or(0) + 1;
            for q in ops.iter() {
                frontier[q.0] = layer;
            }
            m.depth = m.depth.max(layer);
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn qubit_count_is_two_n_plus_two() {
        assert_eq!(Circuit::new(1).unwrap().num_qubits(), 4);
        assert_eq!(Circuit::new(3).unwrap().num_qubits(), 8);
        assert_eq!(Circuit::new(9).unwrap().num_qubits(), 20);
        let c = Circuit::new(3).unwrap();
        assert!(c.is_empty());
        assert!(!c.measure_all);
    }

    #[test]
    fn zero_width_rejected() {
        assert_eq!(Circuit::new(0), Err(IrError::ZeroWidth));
        assert!(matches!(
            Circuit::new(MAX_BIT_WIDTH + 1),
            Err(IrError::WidthTooLarge { .. })
        ));
    }

    #[test]
    fn layout_roles_are_distinct() {
        for n in 1..=16 {
            let layout = RegisterLayout::new(n).unwrap();
            let mut all: Vec<_> = layout.a_qubits().chain(layout.b_qubits()).collect();
            all.push(layout.ancilla());
            all.push(layout.output());
            let mut sorted = all.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), 2 * n + 2);
            assert_eq!(layout.role(layout.ancilla()), Some(QubitRole::Ancilla));
            assert_eq!(layout.role(layout.b(n - 1)), Some(QubitRole::B(n - 1)));
            assert_eq!(layout.role(QubitId(2 * n + 2)), None);
        }
    }

    #[test]
    fn append_validates_operands() {
        let mut c = Circuit::new(3).unwrap();
        c.append(Gate::cnot(0, 1)).unwrap();
        assert_eq!(c.len(), 1);
        assert!(matches!(
            c.append(Gate::toffoli(2, 2, 5)),
            Err(IrError::RepeatedOperand { qubit: QubitId(2), .. })
        ));
        assert!(matches!(
            c.append(Gate::X(QubitId(9))),
            Err(IrError::OperandOutOfRange { num_qubits: 8, .. })
        ));
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn inverse_reverses_self_inverse_gates() {
        let mut c = Circuit::new(3).unwrap();
        c.append(Gate::cnot(0, 3)).unwrap();
        c.append(Gate::X(QubitId(6))).unwrap();
        let inv = c.inverse().unwrap();
        assert_eq!(inv.gates(), &[Gate::X(QubitId(6)), Gate::cnot(0, 3)]);
        let empty = Circuit::new(2).unwrap();
        assert!(empty.inverse().unwrap().is_empty());
    }

    #[test]
    fn inverse_swaps_t_and_tdg() {
        let mut c = Circuit::new(1).unwrap();
        c.extend([Gate::T(QubitId(0)), Gate::Tdg(QubitId(1))]).unwrap();
        let inv = c.inverse().unwrap();
        assert_eq!(inv.gates(), &[Gate::T(QubitId(1)), Gate::Tdg(QubitId(0))]);
    }

    #[test]
    fn inverse_rejects_pauli_errors() {
        let mut c = Circuit::new(1).unwrap();
        c.append(Gate::H(QubitId(0))).unwrap();
        c.append(Gate::PauliError {
            qubit: QubitId(1),
            pauli: Pauli::Z,
        })
        .unwrap();
        assert_eq!(c.inverse(), Err(IrError::PauliErrorPresent { index: 1 }));
    }

    #[test]
    fn metrics_of_empty_circuit() {
        let m = Circuit::new(2).unwrap().metrics();
        assert_eq!(m.total_gates(), 0);
        assert_eq!(m.depth, 0);
        assert_eq!(m.qubits, 6);
    }

    #[test]
    fn depth_layers_as_soon_as_possible() {
        let mut c = Circuit::new(2).unwrap();
        c.extend([
            Gate::H(QubitId(0)),
            Gate::H(QubitId(1)),
            Gate::cnot(0, 2),
            Gate::cnot(1, 3),
            Gate::toffoli(2, 3, 4),
        ])
        .unwrap();
        let m = c.metrics();
        assert_eq!(m.depth, 3);
        assert_eq!((m.h, m.cnot, m.toffoli), (2, 2, 1));
    }

    #[test]
    fn encode_decode() {
        let layout = RegisterLayout::new(3).unwrap();
        let bits = layout.encode(2, 5, false, true);
        assert_eq!(bits, 0b1_0_101_010);
        assert_eq!(layout.decode(bits), (2, 5, false, true));
    }

    fn arb_gate(num_qubits: usize) -> impl Strategy<Value = Gate> {
        let q = 0..num_qubits;
        prop_oneof![
            q.clone().prop_map(|i| Gate::X(QubitId(i))),
            q.clone().prop_map(|i| Gate::H(QubitId(i))),
            q.clone().prop_map(|i| Gate::T(QubitId(i))),
            proptest::sample::subsequence((0..num_qubits).collect::<Vec<_>>(), 2)
                .prop_shuffle()
                .prop_map(|v| Gate::cnot(v[0], v[1])),
            proptest::sample::subsequence((0..num_qubits).collect::<Vec<_>>(), 3)
                .prop_shuffle()
                .prop_map(|v| Gate::toffoli(v[0], v[1], v[2])),
        ]
    }

    fn arb_circuit() -> impl Strategy<Value = Circuit> {
        (1usize..=4).prop_flat_map(|n| {
            proptest::collection::vec(arb_gate(2 * n + 2), 0..40).prop_map(move |gates| {
                let mut c = Circuit::new(n).unwrap();
                c.extend(gates).unwrap();
                c
            })
        })
    }

    proptest! {
        #[test]
        fn inverse_is_an_involution(c in arb_circuit()) {
            prop_assert_eq!(c.inverse().unwrap().inverse().unwrap(), c);
        }

        #[test]
        fn depth_is_monotone_under_append(c in arb_circuit(), extra in arb_gate(4)) {
            let before = c.metrics().depth;
            let mut c2 = c.clone();
            c2.append(extra).unwrap();
            prop_assert!(c2.metrics().depth >= before);
            prop_assert!(c2.metrics().depth <= before + 1);
        }
    }
}
