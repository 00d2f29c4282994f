use crate::gate_ir::{Circuit, Gate, IrError, QubitId};

/// Replaces every Toffoli with the standard 6-CNOT Clifford+T sequence.
/// All other gates pass through unchanged.
pub fn lower_toffoli(circuit: &Circuit) -> Result<Circuit, IrError> {
    let mut lowered = Circuit::new(circuit.n())?;
    lowered.measure_all = circuit.measure_all;
    for (index, gate) in circuit.gates().iter().enumerate() {
        match *gate {
            Gate::Toffoli { controls, target } => {
                lowered.extend(toffoli_sequence(controls[0], controls[1], target))?;
            }
            Gate::PauliError { .. } => return Err(IrError::PauliErrorPresent { index }),
            g => {
                lowered.append(g)?;
            }
        }
    }
    Ok(lowered)
}

fn toffoli_sequence(c0: QubitId, c1: QubitId, t: QubitId) -> [Gate; 15] {
    let cx = |control, target| Gate::Cnot { control, target };
    [
        Gate::H(t),
        cx(c1, t),
        Gate::Tdg(t),
        cx(c0, t),
        Gate::T(t),
        cx(c1, t),
        Gate::Tdg(t),
        cx(c0, t),
        Gate::T(c1),
        Gate::T(t),
        Gate::H(t),
        cx(c0, c1),
        Gate::T(c0),
        Gate::Tdg(c1),
        cx(c0, c1),
    ]
}
