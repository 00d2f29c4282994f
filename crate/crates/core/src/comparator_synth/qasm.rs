//! Minimal QASM-style text format.
//!
//! ```text
//! # qcomp circuit v1
//! qubits 8
//! # layout n=3 a=q[0..2] b=q[3..5] ancilla=q[6] output=q[7]
//! h q[0]
//! cx q[0], q[3]
//! ccx q[6], q[3], q[0]
//! # pauli x q[6]
//! measure
//! ```
//!
//! One statement per line, `#` starts a comment. Pauli error markers are
//! written as `# pauli <x|y|z> q[i]` comments so other tools never execute
//! them; this parser recovers them.

use std::fmt::Write as _;

use thiserror::Error;

use crate::gate_ir::{Circuit, Gate, IrError, Pauli, QubitId};

const MAGIC: &str = "# qcomp circuit v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("qubit index {index} out of range for {qubits} declared qubits")]
    IndexOutOfRange { index: usize, qubits: usize },
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("missing `qubits <N>` header")]
    MissingHeader,
    #[error("qubit count {0} is not of the form 2n+2 with n >= 1")]
    BadQubitCount(usize),
    #[error("statement after `measure`")]
    AfterMeasure,
    #[error(transparent)]
    Gate(IrError),
}

/// Deterministic serialization; identical circuits give identical bytes.
pub fn export_qasm(circuit: &Circuit) -> String {
    let layout = circuit.layout();
    let n = layout.n();
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "qubits {}", circuit.num_qubits());
    let _ = writeln!(
        out,
        "# layout n={n} a=q[0..{}] b=q[{n}..{}] ancilla=q[{}] output=q[{}]",
        n - 1,
        2 * n - 1,
        layout.ancilla().0,
        layout.output().0
    );
    for gate in circuit.gates() {
        if let Gate::PauliError { .. } = gate {
            out.push_str("# ");
        }
        let _ = writeln!(out, "{gate}");
    }
    if circuit.measure_all {
        out.push_str("measure\n");
    }
    out
}

pub fn parse_qasm(text: &str) -> Result<Circuit, ParseError> {
    let mut circuit: Option<Circuit> = None;
    let mut measured = false;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |kind| ParseError { line: line_no, kind };
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (statement, is_marker) = match line.strip_prefix('#') {
            Some(comment) => match comment.trim_start().strip_prefix("pauli ") {
                Some(rest) => (rest.trim(), true),
                None => continue,
            },
            None => (line, false),
        };

        let Some(c) = circuit.as_mut() else {
            if is_marker {
                return Err(err(ParseErrorKind::MissingHeader));
            }
            circuit = Some(parse_header(statement).map_err(err)?);
            continue;
        };
        if measured {
            return Err(err(ParseErrorKind::AfterMeasure));
        }
        if statement == "measure" {
            c.measure_all = true;
            measured = true;
            continue;
        }
        let gate = if is_marker {
            parse_marker(statement, c.num_qubits())
        } else {
            parse_gate(statement, c.num_qubits())
        }
        .map_err(err)?;
        c.append(gate).map_err(|e| err(ParseErrorKind::Gate(e)))?;
    }
    circuit.ok_or(ParseError {
        line: text.lines().count().max(1),
        kind: ParseErrorKind::MissingHeader,
    })
}

fn parse_header(statement: &str) -> Result<Circuit, ParseErrorKind> {
    let count = statement
        .strip_prefix("qubits")
        .filter(|rest| rest.starts_with(char::is_whitespace))
        .ok_or(ParseErrorKind::MissingHeader)?
        .trim();
    let qubits: usize = count
        .parse()
        .map_err(|_| ParseErrorKind::Malformed(format!("bad qubit count `{count}`")))?;
    if qubits < 4 || !qubits.is_multiple_of(2) {
        return Err(ParseErrorKind::BadQubitCount(qubits));
    }
    Circuit::new((qubits - 2) / 2).map_err(ParseErrorKind::Gate)
}

fn parse_operands(rest: &str, qubits: usize) -> Result<Vec<QubitId>, ParseErrorKind> {
    rest.split(',')
        .map(|tok| {
            let tok = tok.trim();
            let index: usize = tok
                .strip_prefix("q[")
                .and_then(|t| t.strip_suffix(']'))
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| ParseErrorKind::Malformed(format!("bad operand `{tok}`")))?;
            if index >= qubits {
                return Err(ParseErrorKind::IndexOutOfRange { index, qubits });
            }
            Ok(QubitId(index))
        })
        .collect()
}

fn split_statement(statement: &str) -> (&str, &str) {
    statement
        .split_once(char::is_whitespace)
        .map(|(m, rest)| (m, rest.trim()))
        .unwrap_or((statement, ""))
}

fn expect_arity(ops: &[QubitId], arity: usize, mnemonic: &str) -> Result<(), ParseErrorKind> {
    if ops.len() == arity {
        Ok(())
    } else {
        Err(ParseErrorKind::Malformed(format!(
            "`{mnemonic}` takes {arity} operand(s), got {}",
            ops.len()
        )))
    }
}

fn parse_gate(statement: &str, qubits: usize) -> Result<Gate, ParseErrorKind> {
    let (mnemonic, rest) = split_statement(statement);
    let arity = match mnemonic {
        "x" | "h" | "t" | "tdg" => 1,
        "cx" => 2,
        "ccx" => 3,
        other => return Err(ParseErrorKind::UnknownMnemonic(other.to_string())),
    };
    let ops = parse_operands(rest, qubits)?;
    expect_arity(&ops, arity, mnemonic)?;
    Ok(match mnemonic {
        "x" => Gate::X(ops[0]),
        "h" => Gate::H(ops[0]),
        "t" => Gate::T(ops[0]),
        "tdg" => Gate::Tdg(ops[0]),
        "cx" => Gate::Cnot {
            control: ops[0],
            target: ops[1],
        },
        _ => Gate::Toffoli {
            controls: [ops[0], ops[1]],
            target: ops[2],
        },
    })
}

fn parse_marker(statement: &str, qubits: usize) -> Result<Gate, ParseErrorKind> {
    let (which, rest) = split_statement(statement);
    let pauli = match which {
        "x" => Pauli::X,
        "y" => Pauli::Y,
        "z" => Pauli::Z,
        other => return Err(ParseErrorKind::UnknownMnemonic(format!("pauli {other}"))),
    };
    let ops = parse_operands(rest, qubits)?;
    expect_arity(&ops, 1, "pauli")?;
    Ok(Gate::PauliError { qubit: ops[0], pauli })
}
