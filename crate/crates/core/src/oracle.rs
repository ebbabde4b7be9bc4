//! Reference semantics and cross-level equivalence checks.
//!
//! Every level is compared with the gate-level reference on each input, up to
//! a phase per input. Whole-machine states are compared, so a level that
//! leaves the ancilla or pointer band disturbed scores below 1. A uniform
//! superposition input then certifies that the per-input phases agree.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::autoqca::{QcaError, QcaLattice, QcaMode};
use crate::ccqca::{run_homomorphisms, run_nn, Boundary, CcqcaError, ThreeBandLattice};
use crate::compiler::{compile, lower_named_gates, CompileError, CompileOptions, CompiledProgram, GCircuit, Gate};
use crate::gatelib::{gate_g, GateMatrix, CELL_DIM};
use crate::register::{Geometry, SlotRegister};
use crate::statevec::{amplitude_budget, QuantumState, SiteLayout, StateError};
use crate::universal::{hadamard, known_realizations, toffoli};

pub const DEFAULT_INPUT_CAP: usize = 6;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{wires} wires exceeds the exhaustive-input cap of {cap}")]
    TooManyWires { wires: usize, cap: usize },
    #[error("input has {got} digits, circuit has {expected} wires")]
    InputLength { expected: usize, got: usize },
    #[error("at least two levels are needed, got {0}")]
    TooFewLevels(usize),
    #[error("unknown level `{0}`")]
    UnknownLevel(String),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Ccqca(#[from] CcqcaError),
    #[error(transparent)]
    Qca(#[from] QcaError),
}

/// All basis inputs over `wires` qubits, lexicographic.
pub fn exhaustive_inputs(wires: usize, cap: usize) -> Result<Vec<Vec<usize>>, OracleError> {
    if wires > cap {
        return Err(OracleError::TooManyWires { wires, cap });
    }
    Ok((0..1usize << wires).map(|x| (0..wires).map(|k| (x >> (wires - 1 - k)) & 1).collect()).collect())
}

pub fn simulate_circuit(circuit: &GCircuit, input: &[usize]) -> Result<QuantumState, OracleError> {
    if input.len() != circuit.wires() {
        return Err(OracleError::InputLength { expected: circuit.wires(), got: input.len() });
    }
    let state = QuantumState::basis_state(SiteLayout::qubits(circuit.wires())?, input)?;
    simulate_circuit_state(circuit, state)
}

/// Applies each gate's matrix directly; named gates use their exact unitaries.
pub fn simulate_circuit_state(circuit: &GCircuit, mut state: QuantumState) -> Result<QuantumState, OracleError> {
    let (g, h, t) = (gate_g(), hadamard(), toffoli());
    for gate in circuit.gates() {
        let m: &GateMatrix = match gate {
            Gate::G { .. } => &g,
            Gate::H { .. } => &h,
            Gate::Toffoli { .. } => &t,
        };
        state.apply_local_unitary(&gate.operands(), m)?;
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Level {
    Gate,
    Ccqca,
    Nn,
    QcaFaithful,
    QcaFactored,
}

impl Level {
    pub const ALL: [Level; 5] = [Level::Gate, Level::Ccqca, Level::Nn, Level::QcaFaithful, Level::QcaFactored];

    pub fn name(&self) -> &'static str {
        match self {
            Level::Gate => "gate",
            Level::Ccqca => "ccqca",
            Level::Nn => "nn",
            Level::QcaFaithful => "qca-faithful",
            Level::QcaFactored => "qca-factored",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Level {
    type Err = OracleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Level::ALL.into_iter().find(|l| l.name() == s).ok_or_else(|| OracleError::UnknownLevel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CheckOptions {
    pub tol: f64,
    pub peephole: bool,
    /// Also compare after this many steps beyond completion (QCA levels).
    pub extra_steps: u64,
    /// Run the uniform-superposition input as a phase witness.
    pub superposition: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { tol: 1e-9, peephole: false, extra_steps: 0, superposition: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: String,
    pub admissible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub overlaps: Vec<f64>,
    pub min_overlap: f64,
    /// Largest distance between the per-input phases.
    pub phase_spread: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub superposition_overlap: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub levels: Vec<LevelReport>,
    pub inputs: Vec<String>,
    pub tol: f64,
    pub min_overlap: f64,
    pub phase_consistent: Option<bool>,
    pub verdict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_level: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_input: Option<String>,
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

fn digits_text(d: &[usize]) -> String {
    d.iter().map(|x| char::from(b'0' + *x as u8)).collect()
}

/// `|1⟩ ⊗ state`: the pointer qubit in front of the wires.
fn with_pointer(state: &QuantumState) -> Result<QuantumState, StateError> {
    let n = state.layout().site_count();
    let mut amps = vec![C64::new(0.0, 0.0); 2 * state.amplitudes().len()];
    amps[state.amplitudes().len()..].copy_from_slice(state.amplitudes());
    QuantumState::from_amplitudes(SiteLayout::qubits(n + 1)?, amps)
}

/// Reference output of `circuit` (named gates allowed) on `data`, tensored
/// with the ancilla init digits.
fn reference(circuit: &GCircuit, data: &QuantumState, ancillas: &[u8]) -> Result<QuantumState, OracleError> {
    let out = simulate_circuit_state(circuit, data.clone())?;
    Ok(tensor_basis(&out, ancillas)?)
}

fn tensor_basis(state: &QuantumState, digits: &[u8]) -> Result<QuantumState, StateError> {
    let m = digits.len();
    let n = state.layout().site_count();
    let anc = digits.iter().fold(0usize, |acc, &d| (acc << 1) | d as usize);
    let mut amps = vec![C64::new(0.0, 0.0); state.amplitudes().len() << m];
    for (x, a) in state.amplitudes().iter().enumerate() {
        amps[(x << m) | anc] = *a;
    }
    QuantumState::from_amplitudes(SiteLayout::qubits(n + m)?, amps)
}

struct Runner<'a> {
    compiled: &'a CompiledProgram,
    opts: &'a CheckOptions,
}

impl Runner<'_> {
    fn admissible(&self, level: Level) -> Result<(), String> {
        let c = self.compiled;
        match level {
            Level::Ccqca => {
                let (lo, hi) = self.positions();
                let qubits = 3 * (hi - lo + 1) as u32;
                if qubits >= 63 || (1u64 << qubits) > amplitude_budget() as u64 {
                    return Err(format!("dense lattice needs 2^{qubits} amplitudes"));
                }
            }
            Level::QcaFaithful => {
                let n = c.config.ring_size;
                if (CELL_DIM as f64).powi(n as i32) > amplitude_budget() as f64 {
                    let fit = (1..).take_while(|&k| (CELL_DIM as f64).powi(k) <= amplitude_budget() as f64).last().unwrap_or(0);
                    return Err(format!("ring of {n} cells needs 12^{n} amplitudes; budget allows at most {fit} cells"));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn positions(&self) -> (i64, i64) {
        let map = &self.compiled.wire_map;
        let lo = map.iter().copied().chain([0]).min().unwrap();
        let hi = map.iter().copied().chain([0]).max().unwrap();
        (lo, hi)
    }

    fn lattice(&self, state: &QuantumState) -> Result<ThreeBandLattice, OracleError> {
        let (lo, hi) = self.positions();
        let width = (hi - lo + 1) as usize;
        let n = state.layout().site_count();
        let mut amps = vec![C64::new(0.0, 0.0); 1 << width];
        for (x, a) in state.amplitudes().iter().enumerate() {
            let mut full = 0usize;
            for (w, &p) in self.compiled.wire_map.iter().enumerate() {
                if (x >> (n - 1 - w)) & 1 == 1 {
                    full |= 1 << (width - 1 - (p - lo) as usize);
                }
            }
            amps[full] = *a;
        }
        let d = QuantumState::from_amplitudes(SiteLayout::qubits(width)?, amps)?;
        Ok(ThreeBandLattice::with_data_state(lo, hi, 0, Boundary::Open, &d)?)
    }

    fn nn_register(&self, state: &QuantumState) -> Result<SlotRegister, OracleError> {
        let mut slots = vec![2];
        slots.extend(self.compiled.wire_map.iter().map(|p| 3 * p));
        Ok(SlotRegister::from_state(Geometry::Unbounded, &slots, with_pointer(state)?)?)
    }

    fn ring_slots(&self) -> Vec<i64> {
        let mut slots = vec![self.compiled.config.pointer_slot];
        slots.extend(&self.compiled.config.wire_slots);
        slots
    }

    /// Overlaps `⟨expected|actual⟩` after completion and after each check
    /// point, the worst by magnitude.
    fn run(&self, level: Level, input: &QuantumState, expected: &QuantumState) -> Result<C64, OracleError> {
        let c = self.compiled;
        let worst = |a: C64, b: C64| if b.norm() < a.norm() { b } else { a };
        match level {
            Level::Gate => {
                let out = simulate_circuit_state(&c.circuit, input.clone())?;
                Ok(expected.overlap(&out)?)
            }
            Level::Ccqca => {
                let mut lat = self.lattice(input)?;
                run_homomorphisms(&mut lat, &c.hom_program);
                Ok(self.lattice(expected)?.overlap(&lat)?)
            }
            Level::Nn => {
                let mut reg = self.nn_register(input)?;
                run_nn(&mut reg, &c.nn_program);
                Ok(self.nn_register(expected)?.overlap(&reg)?)
            }
            Level::QcaFactored | Level::QcaFaithful => {
                let mode = if level == Level::QcaFaithful { QcaMode::Faithful } else { QcaMode::Factored };
                let n = c.config.ring_size.max(1);
                let slots = self.ring_slots();
                let mut lat = QcaLattice::new(n, &c.band, &slots, &with_pointer(input)?, mode)?;
                let want = QcaLattice::new(n, &c.band, &slots, &with_pointer(expected)?, QcaMode::Factored)?;
                lat.run(c.config.completion_steps);
                let mut result = self.compare(&lat, &want)?;
                if self.opts.extra_steps > 0 {
                    lat.run(self.opts.extra_steps);
                    result = worst(result, self.compare(&lat, &want)?);
                }
                Ok(result)
            }
        }
    }

    fn compare(&self, lat: &QcaLattice, want: &QcaLattice) -> Result<C64, OracleError> {
        match lat.register() {
            Some(reg) => {
                let expected = self.ring_register_from(want)?;
                Ok(expected.overlap(reg)?)
            }
            None => {
                let expected = want.clone().at_step(lat.steps()).to_faithful_state()?;
                Ok(expected.overlap(&lat.to_faithful_state()?)?)
            }
        }
    }

    fn ring_register_from(&self, want: &QcaLattice) -> Result<SlotRegister, OracleError> {
        Ok(want.register().expect("expected lattice is factored").clone())
    }
}

/// Lowers named gates if present, compiles, and checks every level.
pub fn cross_check(
    circuit: &GCircuit,
    inputs: &[Vec<usize>],
    levels: &[Level],
    opts: &CheckOptions,
) -> Result<EquivalenceReport, OracleError> {
    let (pure, ancillas) = if circuit.is_pure() {
        (circuit.clone(), Vec::new())
    } else {
        let lowered = lower_named_gates(circuit, &known_realizations())?;
        (lowered.circuit, lowered.ancilla_inits)
    };
    let compiled = compile(&pure, CompileOptions { peephole: opts.peephole, ..CompileOptions::default() })?;
    cross_check_compiled(circuit, &ancillas, &compiled, inputs, levels, opts)
}

/// Checks an already compiled program against `circuit` on the data wires,
/// with ancillae at `ancillas`. The program may have been altered.
pub fn cross_check_compiled(
    circuit: &GCircuit,
    ancillas: &[u8],
    compiled: &CompiledProgram,
    inputs: &[Vec<usize>],
    levels: &[Level],
    opts: &CheckOptions,
) -> Result<EquivalenceReport, OracleError> {
    if levels.len() < 2 {
        return Err(OracleError::TooFewLevels(levels.len()));
    }
    let started = Instant::now();
    let n = circuit.wires();
    for x in inputs {
        if x.len() != n {
            return Err(OracleError::InputLength { expected: n, got: x.len() });
        }
    }
    let layout = SiteLayout::qubits(n)?;
    let mut cases = Vec::new();
    for x in inputs {
        let data = QuantumState::basis_state(layout.clone(), x)?;
        cases.push((tensor_basis(&data, ancillas)?, reference(circuit, &data, ancillas)?));
    }
    let uniform = QuantumState::uniform(layout.clone());
    let witness_case = (tensor_basis(&uniform, ancillas)?, reference(circuit, &uniform, ancillas)?);
    let runner = Runner { compiled, opts };
    let mut reports = Vec::new();
    let mut witness: Option<(f64, String, String)> = None;
    for &level in levels {
        if let Err(reason) = runner.admissible(level) {
            reports.push(LevelReport {
                level: level.to_string(),
                admissible: false,
                reason: Some(reason),
                overlaps: Vec::new(),
                min_overlap: f64::NAN,
                phase_spread: f64::NAN,
                superposition_overlap: None,
            });
            continue;
        }
        let mut overlaps = Vec::new();
        let mut phases: Vec<C64> = Vec::new();
        let results: Vec<C64> = cases.par_iter().map(|(input, expected)| runner.run(level, input, expected)).collect::<Result<_, _>>()?;
        for (k, &o) in results.iter().enumerate() {
            overlaps.push(o.norm());
            if o.norm() > 1e-9 {
                phases.push(o / o.norm());
            }
            if witness.as_ref().is_none_or(|w| o.norm() < w.0) {
                witness = Some((o.norm(), level.to_string(), digits_text(&inputs[k])));
            }
        }
        let phase_spread = phases.iter().map(|p| (p - phases[0]).norm()).fold(0.0, f64::max);
        let superposition_overlap = if opts.superposition {
            let o = runner.run(level, &witness_case.0, &witness_case.1)?.norm();
            if witness.as_ref().is_none_or(|w| o < w.0) {
                witness = Some((o, level.to_string(), "uniform".into()));
            }
            Some(o)
        } else {
            None
        };
        let min_overlap = overlaps.iter().copied().fold(f64::INFINITY, f64::min);
        reports.push(LevelReport {
            level: level.to_string(),
            admissible: true,
            reason: None,
            overlaps,
            min_overlap,
            phase_spread,
            superposition_overlap,
        });
    }
    let run: Vec<&LevelReport> = reports.iter().filter(|r| r.admissible).collect();
    let min_overlap = run.iter().map(|r| r.min_overlap).fold(f64::INFINITY, f64::min);
    let phase_consistent = opts.superposition.then(|| run.iter().all(|r| r.superposition_overlap.is_some_and(|o| o >= 1.0 - opts.tol)));
    let verdict = !run.is_empty() && min_overlap >= 1.0 - opts.tol && phase_consistent != Some(false);
    let (witness_level, witness_input) = match (&witness, verdict) {
        (Some((_, l, i)), false) => (Some(l.clone()), Some(i.clone())),
        _ => (None, None),
    };
    Ok(EquivalenceReport {
        levels: reports,
        inputs: inputs.iter().map(|x| digits_text(x)).collect(),
        tol: opts.tol,
        min_overlap,
        phase_consistent,
        verdict,
        witness_level,
        witness_input,
        elapsed_seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gatelib::INV_SQRT2;

    fn single() -> GCircuit {
        GCircuit::from_pairs(2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn inputs_enumerate() {
        assert_eq!(exhaustive_inputs(1, 6).unwrap(), vec![vec![0], vec![1]]);
        assert_eq!(exhaustive_inputs(2, 6).unwrap().len(), 4);
        assert!(matches!(exhaustive_inputs(7, 6), Err(OracleError::TooManyWires { wires: 7, cap: 6 })));
    }

    #[test]
    fn reference_simulation() {
        let empty = GCircuit::new(2);
        let s = simulate_circuit(&empty, &[0, 0]).unwrap();
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        let s = simulate_circuit(&single(), &[1, 0]).unwrap();
        assert!((s.amplitudes()[2].re - INV_SQRT2).abs() < 1e-15);
        assert!((s.amplitudes()[3].re - INV_SQRT2).abs() < 1e-15);
        let eight = GCircuit::from_pairs(2, &[(0, 1); 8]).unwrap();
        let s = simulate_circuit(&eight, &[1, 1]).unwrap();
        assert!((s.amplitudes()[3] - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(matches!(simulate_circuit(&single(), &[1]), Err(OracleError::InputLength { .. })));
    }

    #[test]
    fn levels_parse() {
        for l in Level::ALL {
            assert_eq!(l.name().parse::<Level>().unwrap(), l);
        }
        assert!("qca".parse::<Level>().is_err());
    }

    #[test]
    fn single_gate_all_levels() {
        let inputs = exhaustive_inputs(2, 6).unwrap();
        let rep =
            cross_check(&single(), &inputs, &[Level::Gate, Level::Ccqca, Level::Nn, Level::QcaFactored], &CheckOptions::default()).unwrap();
        assert!(rep.verdict, "{rep:?}");
        assert_eq!(rep.phase_consistent, Some(true));
    }

    #[test]
    fn faithful_level_reports_inadmissible() {
        let inputs = exhaustive_inputs(2, 6).unwrap();
        let rep = cross_check(&single(), &inputs, &[Level::Gate, Level::QcaFaithful], &CheckOptions::default()).unwrap();
        assert!(!rep.levels[1].admissible);
        assert!(rep.levels[1].reason.as_ref().unwrap().contains("cells"));
        assert!(rep.verdict);
    }

    #[test]
    fn faithful_level_on_small_ring() {
        let c = GCircuit::new(1);
        let compiled = compile(&c, CompileOptions::default()).unwrap();
        assert!(compiled.config.ring_size <= 7, "{:?}", compiled.config);
        let inputs = exhaustive_inputs(1, 6).unwrap();
        let opts = CheckOptions { extra_steps: 3, ..CheckOptions::default() };
        let rep = cross_check(&c, &inputs, &Level::ALL, &opts).unwrap();
        assert!(rep.levels.iter().all(|l| l.admissible), "{rep:?}");
        assert!(rep.verdict, "{rep:?}");
    }

    #[test]
    fn reflexive() {
        let inputs = exhaustive_inputs(2, 6).unwrap();
        let opts = CheckOptions { tol: 1e-12, ..CheckOptions::default() };
        let rep = cross_check(&single(), &inputs, &[Level::Gate, Level::Gate], &opts).unwrap();
        assert!(rep.verdict);
    }

    #[test]
    fn corrupted_band_is_caught() {
        let c = single();
        let mut compiled = compile(&c, CompileOptions::default()).unwrap();
        let mut digits = compiled.band.digits().to_vec();
        let k = digits.iter().position(|&d| d == 2).unwrap();
        digits[k] = 1;
        compiled.band = crate::autoqca::ProgramBand::new(digits, compiled.band.origin()).unwrap();
        let inputs = exhaustive_inputs(2, 6).unwrap();
        let rep = cross_check_compiled(&c, &[], &compiled, &inputs, &[Level::Gate, Level::QcaFactored], &CheckOptions::default()).unwrap();
        assert!(!rep.verdict);
        assert_eq!(rep.witness_level.as_deref(), Some("qca-factored"));
        assert!(rep.witness_input.is_some());
        let one = [Level::Gate];
        assert!(matches!(cross_check(&c, &inputs, &one, &CheckOptions::default()), Err(OracleError::TooFewLevels(1))));
    }
}
