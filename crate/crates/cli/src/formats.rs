//! On-disk circuit and band files.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::Spanned;

use upqca::autoqca::ProgramBand;
use upqca::compiler::{CompiledProgram, GCircuit, Gate, QcaConfig};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{0}")]
    Syntax(String),
    #[error("line {line}, column {column}: `{field}`: {message}")]
    Field { line: usize, column: usize, field: String, message: String },
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |k| k + 1) + 1;
    (line, column)
}

fn field_error<T>(text: &str, spanned: &Spanned<T>, field: &str, message: impl Into<String>) -> FormatError {
    let (line, column) = line_col(text, spanned.span().start);
    FormatError::Field { line, column, field: field.to_string(), message: message.into() }
}

fn syntax(e: toml::de::Error) -> FormatError {
    FormatError::Syntax(e.to_string().trim_end().to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateEntry {
    #[serde(rename = "type")]
    pub kind: String,
    pub operands: Vec<usize>,
}

/// `wires` plus a list of `{type, operands}` gates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitFile {
    pub wires: usize,
    #[serde(default)]
    pub gates: Vec<GateEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGate {
    #[serde(rename = "type")]
    kind: Spanned<String>,
    operands: Spanned<Vec<usize>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCircuit {
    wires: Spanned<usize>,
    #[serde(default)]
    gates: Vec<RawGate>,
}

impl CircuitFile {
    pub fn parse(text: &str) -> Result<Self, FormatError> {
        Ok(Self::parse_checked(text)?.0)
    }

    /// Parses and builds the circuit, reporting the position of the first bad entry.
    pub fn parse_checked(text: &str) -> Result<(Self, GCircuit), FormatError> {
        let raw: RawCircuit = toml::from_str(text).map_err(syntax)?;
        let wires = *raw.wires.get_ref();
        let mut circuit = GCircuit::new(wires);
        let mut gates = Vec::new();
        for (k, g) in raw.gates.iter().enumerate() {
            let ops = g.operands.get_ref();
            let arity = match g.kind.get_ref().as_str() {
                "G" => 2,
                "H" => 1,
                "TOFFOLI" => 3,
                other => return Err(field_error(text, &g.kind, &format!("gates[{k}].type"), format!("unknown gate type `{other}`"))),
            };
            if ops.len() != arity {
                return Err(field_error(
                    text,
                    &g.operands,
                    &format!("gates[{k}].operands"),
                    format!("{} takes {arity} operands, got {}", g.kind.get_ref(), ops.len()),
                ));
            }
            let gate = match arity {
                2 => Gate::G { control: ops[0], target: ops[1] },
                1 => Gate::H { wire: ops[0] },
                _ => Gate::Toffoli { controls: [ops[0], ops[1]], target: ops[2] },
            };
            circuit.push(gate).map_err(|e| field_error(text, &g.operands, &format!("gates[{k}].operands"), e.to_string()))?;
            gates.push(GateEntry { kind: g.kind.get_ref().clone(), operands: ops.clone() });
        }
        Ok((Self { wires, gates }, circuit))
    }

    pub fn to_circuit(&self) -> Result<GCircuit, FormatError> {
        Ok(Self::parse_checked(&self.to_text())?.1)
    }

    pub fn from_circuit(circuit: &GCircuit) -> Self {
        let gates = circuit.gates().iter().map(|g| GateEntry { kind: g.name().to_string(), operands: g.operands() }).collect();
        Self { wires: circuit.wires(), gates }
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("plain data serializes")
    }
}

/// A compiled program band and the ring it runs on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandFile {
    pub digits: String,
    pub origin: i64,
    pub data_extent: usize,
    pub ring_size: usize,
    pub completion_steps: u64,
    pub data_base: i64,
    pub pointer_slot: i64,
    /// Data slots of the wires, ancillae last.
    pub wire_slots: Vec<i64>,
    /// Init digits of the trailing ancilla wires.
    pub ancillas: Vec<u8>,
}

#[derive(Deserialize)]
struct RawDigits {
    digits: Spanned<String>,
}

impl BandFile {
    pub fn from_compiled(compiled: &CompiledProgram, ancillas: &[u8]) -> Self {
        let c = &compiled.config;
        Self {
            digits: compiled.band.to_digit_string(),
            origin: compiled.band.origin(),
            data_extent: c.data_extent,
            ring_size: c.ring_size,
            completion_steps: c.completion_steps,
            data_base: c.data_base,
            pointer_slot: c.pointer_slot,
            wire_slots: c.wire_slots.clone(),
            ancillas: ancillas.to_vec(),
        }
    }

    pub fn parse(text: &str) -> Result<Self, FormatError> {
        let file: BandFile = toml::from_str(text).map_err(syntax)?;
        if let Err(e) = file.band() {
            let raw: RawDigits = toml::from_str(text).map_err(syntax)?;
            return Err(field_error(text, &raw.digits, "digits", e.to_string()));
        }
        if file.ancillas.len() > file.wire_slots.len() {
            return Err(FormatError::Syntax("`ancillas`: more ancillas than wire slots".into()));
        }
        Ok(file)
    }

    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("plain data serializes")
    }

    pub fn band(&self) -> Result<ProgramBand, String> {
        let digits = self
            .digits
            .chars()
            .map(|c| c.to_digit(3).map(|d| d as u8).ok_or_else(|| format!("invalid digit `{c}`")))
            .collect::<Result<Vec<u8>, String>>()?;
        ProgramBand::new(digits, self.origin).map_err(|e| e.to_string())
    }

    pub fn config(&self) -> QcaConfig {
        QcaConfig {
            ring_size: self.ring_size,
            completion_steps: self.completion_steps,
            data_base: self.data_base,
            data_extent: self.data_extent,
            wire_slots: self.wire_slots.clone(),
            pointer_slot: self.pointer_slot,
        }
    }

    pub fn data_wires(&self) -> usize {
        self.wire_slots.len() - self.ancillas.len()
    }
}
