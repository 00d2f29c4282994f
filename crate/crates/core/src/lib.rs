//! Reversible n-bit comparator toolkit.
//!
//! - [`gate_ir`]: circuit representation over the `a`/`b`/ancilla/output
//!   register layout.
//! - [`comparator_synth`]: comparator and experiment circuits, Toffoli
//!   lowering, text export and import.
//! - [`simulator`]: basis-path and statevector backends with Pauli noise.
//! - [`analysis`]: outcome classification, success criteria and noise
//!   calibration.

pub mod analysis;
pub mod comparator_synth;
pub mod gate_ir;
pub mod simulator;
