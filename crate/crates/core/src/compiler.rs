//! Circuit of `G` gates → homomorphism program → nearest-neighbour program →
//! program band plus ring configuration.
//!
//! Wire `w` sits on `d_{w+1}` by default and the pointer on `h_0`. On the
//! interleaved band the data region starts at a q-index `data_base ≡ 0 (mod 3)`
//! and q-index `q` is placed in data slot `q - data_base` of the ring.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autoqca::{assemble_program, completion_steps, minimal_ring_size, ProgramBand, QcaError, DEFAULT_MARGIN};
use crate::ccqca::{g_sequence, interleave_index, lower_to_nn, Band, CcqcaError, Homomorphism, NnKind, NnOp};
use crate::universal::{KnownRealizations, Realization};

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("wire {wire} out of range for {wires} wires")]
    WireOutOfRange { wire: usize, wires: usize },
    #[error("gate operands repeat wire {0}")]
    RepeatedWire(usize),
    #[error("circuit has named gates; lower them first")]
    NamedGates,
    #[error("wire map must list {expected} distinct positions")]
    BadWireMap { expected: usize },
    #[error("no verified realization for {gate}: {reason}")]
    UnsupportedGate { gate: String, reason: String },
    #[error(transparent)]
    Ccqca(#[from] CcqcaError),
    #[error(transparent)]
    Qca(#[from] QcaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gate {
    G { control: usize, target: usize },
    H { wire: usize },
    Toffoli { controls: [usize; 2], target: usize },
}

impl Gate {
    pub fn operands(&self) -> Vec<usize> {
        match *self {
            Gate::G { control, target } => vec![control, target],
            Gate::H { wire } => vec![wire],
            Gate::Toffoli { controls, target } => vec![controls[0], controls[1], target],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Gate::G { .. } => "G",
            Gate::H { .. } => "H",
            Gate::Toffoli { .. } => "TOFFOLI",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GCircuit {
    wires: usize,
    gates: Vec<Gate>,
}

impl GCircuit {
    pub fn new(wires: usize) -> Self {
        Self { wires, gates: Vec::new() }
    }

    pub fn from_gates(wires: usize, gates: impl IntoIterator<Item = Gate>) -> Result<Self, CompileError> {
        let mut c = Self::new(wires);
        for g in gates {
            c.push(g)?;
        }
        Ok(c)
    }

    /// Pure circuit from `(control, target)` pairs.
    pub fn from_pairs(wires: usize, pairs: &[(usize, usize)]) -> Result<Self, CompileError> {
        Self::from_gates(wires, pairs.iter().map(|&(control, target)| Gate::G { control, target }))
    }

    pub fn push(&mut self, gate: Gate) -> Result<(), CompileError> {
        let ops = gate.operands();
        for (k, &w) in ops.iter().enumerate() {
            if w >= self.wires {
                return Err(CompileError::WireOutOfRange { wire: w, wires: self.wires });
            }
            if ops[..k].contains(&w) {
                return Err(CompileError::RepeatedWire(w));
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn wires(&self) -> usize {
        self.wires
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn is_pure(&self) -> bool {
        self.gates.iter().all(|g| matches!(g, Gate::G { .. }))
    }

    /// `(control, target)` of every gate; fails on named gates.
    pub fn g_pairs(&self) -> Result<Vec<(usize, usize)>, CompileError> {
        self.gates
            .iter()
            .map(|g| match *g {
                Gate::G { control, target } => Ok((control, target)),
                _ => Err(CompileError::NamedGates),
            })
            .collect()
    }
}

pub fn default_wire_map(wires: usize) -> Vec<i64> {
    (1..=wires as i64).collect()
}

fn check_wire_map(circuit: &GCircuit, wire_map: &[i64]) -> Result<(), CompileError> {
    let distinct: BTreeSet<i64> = wire_map.iter().copied().collect();
    if wire_map.len() != circuit.wires() || distinct.len() != wire_map.len() {
        return Err(CompileError::BadWireMap { expected: circuit.wires() });
    }
    Ok(())
}

pub fn to_ccqca(circuit: &GCircuit, wire_map: &[i64]) -> Result<Vec<Homomorphism>, CompileError> {
    check_wire_map(circuit, wire_map)?;
    let mut out = Vec::new();
    for (c, t) in circuit.g_pairs()? {
        out.extend(g_sequence(wire_map[c], wire_map[t])?);
    }
    Ok(out)
}

/// Cancels adjacent equal swap layers until none remain.
pub fn peephole(ops: &[NnOp]) -> Vec<NnOp> {
    let mut out: Vec<NnOp> = Vec::with_capacity(ops.len());
    for &op in ops {
        if op.kind() == NnKind::E && out.last() == Some(&op) {
            out.pop();
        } else {
            out.push(op);
        }
    }
    out
}

pub fn to_nn(homs: &[Homomorphism], peephole_pass: bool) -> Vec<NnOp> {
    let ops: Vec<NnOp> = homs.iter().flat_map(|&h| lower_to_nn(h)).collect();
    if peephole_pass {
        peephole(&ops)
    } else {
        ops
    }
}

/// Q-indices that may ever hold a nonzero qubit while `ops` runs from a
/// state supported on `seeds`.
pub fn reachable_support(ops: &[NnOp], seeds: &[i64]) -> BTreeSet<i64> {
    let mut live: BTreeSet<i64> = seeds.iter().copied().collect();
    let mut ever = live.clone();
    for op in ops {
        let r = op.phase() as i64;
        match op.kind() {
            NnKind::E => {
                live = live
                    .iter()
                    .map(|&q| {
                        if q.rem_euclid(3) == r {
                            q + 1
                        } else if (q - 1).rem_euclid(3) == r {
                            q - 1
                        } else {
                            q
                        }
                    })
                    .collect();
            }
            NnKind::F => {
                let added: Vec<i64> = live.iter().filter(|q| q.rem_euclid(3) == r).map(|q| q + 1).collect();
                live.extend(added);
            }
        }
        ever.extend(live.iter().copied());
    }
    ever
}

/// Ring configuration and the placement of wires and pointer in data slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcaConfig {
    pub ring_size: usize,
    pub completion_steps: u64,
    /// Q-index of data slot 0.
    pub data_base: i64,
    /// Number of data slots.
    pub data_extent: usize,
    pub wire_slots: Vec<i64>,
    pub pointer_slot: i64,
}

/// Band and configuration for `nn` with wires at d-positions `wire_map`.
pub fn to_band(nn: &[NnOp], wire_map: &[i64], margin: u64) -> Result<(ProgramBand, QcaConfig), CompileError> {
    let pointer_q = interleave_index(Band::H, 0);
    let mut seeds: Vec<i64> = wire_map.iter().map(|&p| interleave_index(Band::D, p)).collect();
    seeds.push(pointer_q);
    let support = reachable_support(nn, &seeds);
    let lo = *support.first().expect("pointer is always present");
    let hi = *support.last().expect("pointer is always present");
    let data_base = lo.div_euclid(3) * 3;
    let mut data_extent = (hi - data_base + 1) as usize;
    data_extent += data_extent % 2;
    let band = assemble_program(nn);
    let ring_size = minimal_ring_size(&band, data_extent, margin);
    let config = QcaConfig {
        ring_size,
        completion_steps: completion_steps(&band, data_extent),
        data_base,
        data_extent,
        wire_slots: seeds[..wire_map.len()].iter().map(|q| q - data_base).collect(),
        pointer_slot: pointer_q - data_base,
    };
    Ok((band, config))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub time_qgc: usize,
    pub space_qgc: usize,
    pub time_ccqca: usize,
    pub time_nn: usize,
    /// Ring cells; zero when there is no program to run.
    pub space_qca: usize,
    pub time_qca: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub peephole: bool,
    pub margin: u64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        Self { peephole: false, margin: DEFAULT_MARGIN }
    }
}

#[derive(Debug, Clone)]
pub struct CompiledProgram {
    pub circuit: GCircuit,
    pub wire_map: Vec<i64>,
    pub hom_program: Vec<Homomorphism>,
    pub nn_program: Vec<NnOp>,
    pub band: ProgramBand,
    pub config: QcaConfig,
    pub report: ResourceReport,
}

pub fn compile(circuit: &GCircuit, options: CompileOptions) -> Result<CompiledProgram, CompileError> {
    compile_with_map(circuit, &default_wire_map(circuit.wires()), options)
}

pub fn compile_with_map(circuit: &GCircuit, wire_map: &[i64], options: CompileOptions) -> Result<CompiledProgram, CompileError> {
    let hom_program = to_ccqca(circuit, wire_map)?;
    let nn_program = to_nn(&hom_program, options.peephole);
    let (band, config) = to_band(&nn_program, wire_map, options.margin)?;
    let report = ResourceReport {
        time_qgc: circuit.gates().len(),
        space_qgc: circuit.wires(),
        time_ccqca: hom_program.len(),
        time_nn: nn_program.len(),
        space_qca: if band.is_empty() { 0 } else { config.ring_size },
        time_qca: config.completion_steps,
    };
    Ok(CompiledProgram { circuit: circuit.clone(), wire_map: wire_map.to_vec(), hom_program, nn_program, band, config, report })
}

/// Measured tallies from a dry-run compile without peephole.
pub fn estimate_resources(circuit: &GCircuit) -> Result<ResourceReport, CompileError> {
    Ok(compile(circuit, CompileOptions::default())?.report)
}

/// A pure circuit with ancilla wires appended after the original ones.
#[derive(Debug, Clone)]
pub struct LoweredCircuit {
    pub circuit: GCircuit,
    pub data_wires: usize,
    pub ancilla_inits: Vec<u8>,
}

/// Replaces `H` and Toffoli gates by their verified `G` words. Ancillae are
/// shared: one pool per init digit, as large as the most demanding gate.
pub fn lower_named_gates(circuit: &GCircuit, known: &KnownRealizations) -> Result<LoweredCircuit, CompileError> {
    let need = |gate: &str| -> Result<&Realization, CompileError> {
        let r = match gate {
            "H" => &known.hadamard,
            _ => &known.toffoli,
        };
        r.as_ref().map_err(|e| CompileError::UnsupportedGate { gate: gate.to_string(), reason: e.to_string() })
    };
    let mut used = Vec::new();
    for g in circuit.gates() {
        match g {
            Gate::G { .. } => {}
            named => used.push(need(named.name())?),
        }
    }
    let pool = |digit: u8| used.iter().map(|r| r.ancillas.iter().filter(|&&a| a == digit).count()).max().unwrap_or(0);
    let (zeros, ones) = (pool(0), pool(1));
    let n = circuit.wires();
    let mut ancilla_inits = vec![0u8; zeros];
    ancilla_inits.extend(vec![1u8; ones]);
    let mut out = GCircuit::new(n + zeros + ones);
    for g in circuit.gates() {
        if let Gate::G { .. } = g {
            out.push(*g)?;
            continue;
        }
        let r = need(g.name())?;
        let mut wires = g.operands();
        let (mut z, mut o) = (0, 0);
        for &a in &r.ancillas {
            if a == 0 {
                wires.push(n + z);
                z += 1;
            } else {
                wires.push(n + zeros + o);
                o += 1;
            }
        }
        for l in &r.sequence {
            for _ in 0..l.power {
                out.push(Gate::G { control: wires[l.control], target: wires[l.target] })?;
            }
        }
    }
    Ok(LoweredCircuit { circuit: out, data_wires: n, ancilla_inits })
}

/// Pure circuit with `2..=max_wires` wires and `1..=max_gates` gates.
pub fn random_circuit(seed: u64, max_wires: usize, max_gates: usize) -> GCircuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let wires = rng.gen_range(2..=max_wires.max(2));
    let count = rng.gen_range(1..=max_gates.max(1));
    let mut c = GCircuit::new(wires);
    for _ in 0..count {
        let control = rng.gen_range(0..wires);
        let mut target = rng.gen_range(0..wires - 1);
        if target >= control {
            target += 1;
        }
        c.push(Gate::G { control, target }).expect("distinct in-range wires");
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccqca::Family;
    use crate::universal::known_realizations;

    #[test]
    fn circuit_validation() {
        let mut c = GCircuit::new(2);
        assert!(matches!(c.push(Gate::G { control: 0, target: 2 }), Err(CompileError::WireOutOfRange { wire: 2, .. })));
        assert!(matches!(c.push(Gate::G { control: 1, target: 1 }), Err(CompileError::RepeatedWire(1))));
        c.push(Gate::H { wire: 0 }).unwrap();
        assert!(!c.is_pure());
        assert!(matches!(to_ccqca(&c, &default_wire_map(2)), Err(CompileError::NamedGates)));
    }

    #[test]
    fn homomorphism_counts() {
        let empty = GCircuit::new(2);
        assert!(to_ccqca(&empty, &default_wire_map(2)).unwrap().is_empty());
        let one = GCircuit::from_pairs(2, &[(0, 1)]).unwrap();
        assert_eq!(to_ccqca(&one, &default_wire_map(2)).unwrap().len(), 33);
        let two = GCircuit::from_pairs(2, &[(0, 1), (1, 0)]).unwrap();
        let homs = to_ccqca(&two, &default_wire_map(2)).unwrap();
        assert_eq!(homs.len(), 66);
        assert_eq!(homs[..33], g_sequence(1, 2).unwrap()[..]);
        assert_eq!(homs[33..], g_sequence(2, 1).unwrap()[..]);
    }

    #[test]
    fn peephole_examples() {
        let a0 = Homomorphism::new(Family::A, 0);
        assert_eq!(to_nn(&[Homomorphism::new(Family::C, 0)], false), vec![NnOp::f(0)]);
        assert_eq!(to_nn(&[a0, a0], false).len(), 6);
        assert_eq!(to_nn(&[a0, a0], true), vec![NnOp::e(1), NnOp::f(1), NnOp::f(1), NnOp::e(1)]);
        // Cancellation cascades once the inner pair is gone.
        assert_eq!(peephole(&[NnOp::e(0), NnOp::e(2), NnOp::e(2), NnOp::e(0)]), vec![]);
    }

    #[test]
    fn band_for_single_f() {
        let (band, config) = to_band(&[NnOp::f(0)], &[], DEFAULT_MARGIN).unwrap();
        assert_eq!(band.digits(), &[2, 0, 0]);
        assert_eq!(config.pointer_slot, 2);
        assert_eq!(config.completion_steps, completion_steps(&band, config.data_extent));
        let empty = compile(&GCircuit::new(0), CompileOptions::default()).unwrap();
        assert!(empty.band.is_empty());
        assert_eq!(empty.report, ResourceReport::default());
    }

    #[test]
    fn one_gate_band_length() {
        let c = GCircuit::from_pairs(2, &[(0, 1)]).unwrap();
        let p = compile(&c, CompileOptions::default()).unwrap();
        assert_eq!(p.hom_program.len(), 33);
        // A_0 ×8 at 3 layers, C_{-1} ×16 at 5, B_1 ×8 at 1, D_2 at 7.
        assert_eq!(p.nn_program.len(), 8 * 3 + 16 * 5 + 8 + 7);
        assert_eq!(p.band.len(), 3 * p.nn_program.len());
        assert_eq!(p.config.wire_slots.len(), 2);
        assert_eq!(p.config.data_base % 3, 0);
        assert_eq!(p.config.data_extent % 2, 0);
    }

    #[test]
    fn compilation_is_deterministic() {
        let c = random_circuit(7, 3, 3);
        let a = compile(&c, CompileOptions::default()).unwrap();
        let b = compile(&c, CompileOptions::default()).unwrap();
        assert_eq!(a.band, b.band);
        assert_eq!(a.config, b.config);
    }

    #[test]
    fn resources_never_shrink_when_appending() {
        let mut c = GCircuit::new(3);
        let mut prev = estimate_resources(&c).unwrap();
        for &(a, b) in &[(0, 1), (2, 0), (1, 2), (0, 2)] {
            c.push(Gate::G { control: a, target: b }).unwrap();
            let r = estimate_resources(&c).unwrap();
            assert!(r.time_qgc >= prev.time_qgc && r.time_ccqca >= prev.time_ccqca && r.time_nn >= prev.time_nn);
            assert!(r.space_qca >= prev.space_qca && r.time_qca >= prev.time_qca);
            prev = r;
        }
    }

    #[test]
    fn named_gate_lowering() {
        let known = known_realizations();
        let pure = GCircuit::from_pairs(2, &[(0, 1)]).unwrap();
        let l = lower_named_gates(&pure, &known).unwrap();
        assert_eq!(l.circuit, pure);
        assert!(l.ancilla_inits.is_empty());
        let named = GCircuit::from_gates(3, [Gate::H { wire: 1 }, Gate::Toffoli { controls: [0, 1], target: 2 }]).unwrap();
        let l = lower_named_gates(&named, &known).unwrap();
        assert!(l.circuit.is_pure());
        assert_eq!(l.ancilla_inits, vec![0, 1]);
        assert_eq!(l.circuit.wires(), 5);
    }

    #[test]
    fn random_circuits_are_seeded() {
        assert_eq!(random_circuit(3, 3, 3), random_circuit(3, 3, 3));
        for seed in 0..50 {
            let c = random_circuit(seed, 3, 3);
            assert!((2..=3).contains(&c.wires()) && (1..=3).contains(&c.gates().len()));
        }
    }
}
