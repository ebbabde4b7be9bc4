//! The autonomous ring machine: cells `t ⊗ q_even ⊗ q_odd` of dimension 12,
//! one step = the cell unitary everywhere, then the shift that moves program
//! qutrits one cell right and qubits one slot left.
//!
//! Positions are kept in the data frame. The qubit content that started in
//! slot `k` is called data slot `k` forever after; the qutrit that started in
//! cell `c` acts at (0-based) step `s` on data slots `2c + 3s` and `2c + 3s + 1`
//! (mod `2N`). A nonzero qutrit therefore sweeps the data three slots per step,
//! touching exactly the pairs whose start is congruent to `2c` mod 3.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::ccqca::{NnKind, NnOp};
use crate::gatelib::{cell_unitary, GateMatrix, CELL_DIM};
use crate::register::{Geometry, QubitBand, SlotRegister};
use crate::statevec::{amplitude_budget, cached_unitary_deviation, Marginal, QuantumState, SiteLayout, StateError, UNITARY_TOL};

/// Extra steps the ring must tolerate after completion without the program
/// touching the data a second time.
pub const DEFAULT_MARGIN: u64 = 5;

#[derive(Debug, Error)]
pub enum QcaError {
    #[error("program digit {digit} at index {index} is not in 0..3")]
    InvalidDigit { index: usize, digit: u8 },
    #[error("program length {0} is not a whole number of segments")]
    PartialSegment(usize),
    #[error("segment {index} has more than one nonzero digit")]
    MalformedSegment { index: usize },
    #[error("program origin {0} must lie left of the data (negative cell)")]
    OriginNotNegative(i64),
    #[error("ring of {given} cells is too small; at least {required} needed")]
    RingTooSmall { given: usize, required: usize },
    #[error("data slot {slot} outside the ring of {slots} slots")]
    SlotOutOfRange { slot: i64, slots: usize },
    #[error("faithful mode needs 12^{cells} amplitudes, over budget")]
    FaithfulOverBudget { cells: usize },
    #[error("rule {rule} is not unitary (deviation {deviation:e})")]
    RuleNotUnitary { rule: usize, deviation: f64 },
    #[error("rule {rule} has dimension {got}, expected {expected}")]
    RuleDimension { rule: usize, expected: usize, got: usize },
    #[error("{0}")]
    InvalidLift(String),
    #[error(transparent)]
    State(#[from] StateError),
}

pub fn encode_segment(op: NnOp) -> [u8; 3] {
    let digit = match op.kind() {
        NnKind::E => 1,
        NnKind::F => 2,
    };
    // Cell 3m+r addresses pairs starting at 2r mod 3.
    let cell = match op.phase() {
        0 => 0,
        1 => 2,
        _ => 1,
    };
    let mut seg = [0; 3];
    seg[cell] = digit;
    seg
}

/// `Ok(None)` for the all-zero segment.
pub fn decode_segment(seg: [u8; 3], index: usize) -> Result<Option<NnOp>, QcaError> {
    let nonzero: Vec<usize> = (0..3).filter(|&k| seg[k] != 0).collect();
    match nonzero.as_slice() {
        [] => Ok(None),
        [cell] => {
            let phase = [0, 2, 1][*cell];
            match seg[*cell] {
                1 => Ok(Some(NnOp::e(phase))),
                2 => Ok(Some(NnOp::f(phase))),
                d => Err(QcaError::InvalidDigit { index: 3 * index + cell, digit: d }),
            }
        }
        _ => Err(QcaError::MalformedSegment { index }),
    }
}

/// Qutrit digits in increasing cell order; `origin` is the cell of the last
/// digit, the one nearest the data.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProgramBand {
    digits: Vec<u8>,
    origin: i64,
}

impl ProgramBand {
    pub fn new(digits: Vec<u8>, origin: i64) -> Result<Self, QcaError> {
        if let Some((index, &digit)) = digits.iter().enumerate().find(|(_, &d)| d > 2) {
            return Err(QcaError::InvalidDigit { index, digit });
        }
        if !digits.len().is_multiple_of(3) {
            return Err(QcaError::PartialSegment(digits.len()));
        }
        if origin >= 0 {
            return Err(QcaError::OriginNotNegative(origin));
        }
        Ok(Self { digits, origin })
    }

    pub fn empty() -> Self {
        Self { digits: Vec::new(), origin: -1 }
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    /// Leftmost program cell.
    pub fn first_cell(&self) -> i64 {
        self.origin - self.digits.len() as i64 + 1
    }

    /// `(cell, digit)` for every nonzero digit.
    pub fn nonzero_cells(&self) -> impl Iterator<Item = (i64, u8)> + '_ {
        let first = self.first_cell();
        self.digits.iter().enumerate().filter(|(_, &d)| d != 0).map(move |(k, &d)| (first + k as i64, d))
    }

    pub fn segment_count(&self) -> usize {
        self.digits.len() / 3
    }

    pub fn to_digit_string(&self) -> String {
        self.digits.iter().map(|d| char::from(b'0' + d)).collect()
    }

    /// Execution-ordered ops; all-zero segments are skipped.
    pub fn disassemble(&self) -> Result<Vec<NnOp>, QcaError> {
        let n = self.segment_count();
        let mut ops = Vec::new();
        for k in 0..n {
            let at = 3 * (n - 1 - k);
            let seg = [self.digits[at], self.digits[at + 1], self.digits[at + 2]];
            if let Some(op) = decode_segment(seg, k)? {
                ops.push(op);
            }
        }
        Ok(ops)
    }
}

/// Segment `k` in execution order occupies cells `-3(k+1) ..= -3k-1`.
pub fn assemble_program(ops: &[NnOp]) -> ProgramBand {
    let mut digits = Vec::with_capacity(3 * ops.len());
    for &op in ops.iter().rev() {
        digits.extend(encode_segment(op));
    }
    ProgramBand { digits, origin: -1 }
}

/// Steps until every nonzero qutrit has swept past data slots `0..data_slots`.
pub fn completion_steps(band: &ProgramBand, data_slots: usize) -> u64 {
    let d = data_slots as i64;
    band.nonzero_cells().map(|(c, _)| ((d - 1 - 2 * c).div_euclid(3) + 1).max(0) as u64).max().unwrap_or(0)
}

fn ring_admissible(band: &ProgramBand, data_slots: usize, n: usize, margin: u64) -> bool {
    let d = data_slots as i64;
    let n = n as i64;
    let span = if band.is_empty() { 0 } else { -band.first_cell() };
    if n < 1 || n < span + (d + 1) / 2 {
        return false;
    }
    let cells: Vec<i64> = band.nonzero_cells().map(|(c, _)| c).collect();
    let (Some(&c_min), Some(&c_max)) = (cells.iter().min(), cells.iter().max()) else {
        return true;
    };
    let t = completion_steps(band, data_slots) as i64;
    2 * n + 2 * c_min >= d && 2 * c_max + 3 * (t + margin as i64 - 1) < 2 * n - 1
}

/// Smallest ring on which the program meets every data pair exactly once
/// within `completion_steps + margin` steps.
pub fn minimal_ring_size(band: &ProgramBand, data_slots: usize, margin: u64) -> usize {
    let mut n = 1;
    while !ring_admissible(band, data_slots, n, margin) {
        n += 1;
    }
    n
}

pub fn steps_to_completion(band: &ProgramBand, data_slots: usize, ring_size: usize) -> Result<u64, QcaError> {
    if !ring_admissible(band, data_slots, ring_size, DEFAULT_MARGIN) {
        return Err(QcaError::RingTooSmall { given: ring_size, required: minimal_ring_size(band, data_slots, DEFAULT_MARGIN) });
    }
    Ok(completion_steps(band, data_slots))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcaMode {
    /// One state vector over all cells at dimension 12.
    Faithful,
    /// Classical program track plus a factored qubit register.
    Factored,
}

#[derive(Debug, Clone)]
enum Carrier {
    Faithful(QuantumState),
    Factored(SlotRegister),
}

#[derive(Debug, Clone)]
pub struct QcaLattice {
    cells: usize,
    steps: u64,
    /// Program digit of each original cell, indexed mod `cells`.
    program: Vec<u8>,
    carrier: Carrier,
}

/// Marginal over data slots, flagged if read before completion.
#[derive(Debug, Clone)]
pub struct Readout {
    pub marginal: Marginal,
    pub premature: bool,
}

impl QcaLattice {
    /// Ring of `cells` cells holding `band` and, on data slots `slots`, the
    /// qubit state `data`. All other qubits start in `|0⟩`.
    pub fn new(cells: usize, band: &ProgramBand, slots: &[i64], data: &QuantumState, mode: QcaMode) -> Result<Self, QcaError> {
        let two_n = 2 * cells;
        if cells == 0 || (band.len() as i64) > cells as i64 {
            return Err(QcaError::RingTooSmall { given: cells, required: band.len().max(1) });
        }
        for &s in slots {
            if !(0..two_n as i64).contains(&s) {
                return Err(QcaError::SlotOutOfRange { slot: s, slots: two_n });
            }
        }
        let mut program = vec![0u8; cells];
        let first = band.first_cell();
        for (k, &d) in band.digits().iter().enumerate() {
            program[(first + k as i64).rem_euclid(cells as i64) as usize] = d;
        }
        let register = SlotRegister::from_state(Geometry::Periodic { lo: 0, len: two_n as i64 }, slots, data.clone())?;
        let mut lattice = Self { cells, steps: 0, program, carrier: Carrier::Factored(register) };
        if mode == QcaMode::Faithful {
            lattice = lattice.into_faithful()?;
        }
        Ok(lattice)
    }

    /// Basis-state data: the listed data slots are `1`.
    pub fn with_ones(cells: usize, band: &ProgramBand, ones: &[i64], mode: QcaMode) -> Result<Self, QcaError> {
        let data = QuantumState::basis_state(SiteLayout::qubits(ones.len().max(1))?, &vec![1; ones.len().max(1)])?;
        if ones.is_empty() {
            let zero = QuantumState::basis_state(SiteLayout::qubits(1)?, &[0])?;
            return Self::new(cells, band, &[0], &zero, mode);
        }
        Self::new(cells, band, ones, &data, mode)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn mode(&self) -> QcaMode {
        match self.carrier {
            Carrier::Faithful(_) => QcaMode::Faithful,
            Carrier::Factored(_) => QcaMode::Factored,
        }
    }

    pub fn register(&self) -> Option<&SlotRegister> {
        match &self.carrier {
            Carrier::Factored(r) => Some(r),
            Carrier::Faithful(_) => None,
        }
    }

    /// Program digit currently in physical cell `i`.
    pub fn qutrit_at(&self, i: usize) -> u8 {
        let n = self.cells as i64;
        self.program[(i as i64 - self.steps as i64).rem_euclid(n) as usize]
    }

    /// Physical qubit slot currently holding data slot `k`.
    pub fn physical_slot(&self, k: i64) -> usize {
        let two_n = 2 * self.cells as i64;
        (k - self.steps as i64).rem_euclid(two_n) as usize
    }

    fn into_faithful(self) -> Result<Self, QcaError> {
        let state = self.to_faithful_state()?;
        Ok(Self { carrier: Carrier::Faithful(state), ..self })
    }

    /// Full 12-dimensional state of the ring in its current physical frame.
    pub fn to_faithful_state(&self) -> Result<QuantumState, QcaError> {
        let reg = match &self.carrier {
            Carrier::Faithful(s) => return Ok(s.clone()),
            Carrier::Factored(r) => r,
        };
        let n = self.cells;
        if (CELL_DIM as f64).powi(n as i32) > amplitude_budget() as f64 {
            return Err(QcaError::FaithfulOverBudget { cells: n });
        }
        let layout = SiteLayout::new(vec![CELL_DIM; n])?;
        let two_n = 2 * n as i64;
        let order: Vec<i64> = (0..two_n).map(|p| (p + self.steps as i64).rem_euclid(two_n)).collect();
        let qubits = reg.to_state(&order)?;
        let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
        let ts: Vec<usize> = (0..n).map(|i| self.qutrit_at(i) as usize).collect();
        for (index, amp) in qubits.amplitudes().iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let mut full = 0usize;
            for (i, &t) in ts.iter().enumerate() {
                let e = (index >> (2 * n - 1 - 2 * i)) & 1;
                let o = (index >> (2 * n - 2 - 2 * i)) & 1;
                full = full * CELL_DIM + 4 * t + 2 * e + o;
            }
            amps[full] = *amp;
        }
        Ok(QuantumState::from_amplitudes(layout, amps)?)
    }

    pub fn step(&mut self) {
        let n = self.cells;
        match &mut self.carrier {
            Carrier::Faithful(state) => {
                let u = cell_unitary();
                for i in 0..n {
                    state.apply_local_unitary(&[i], &u).expect("cell unitary");
                }
                *state = shift_faithful(state, n);
            }
            Carrier::Factored(reg) => {
                let two_n = 2 * n as i64;
                let s3 = (3 * self.steps as i64).rem_euclid(two_n);
                let mut starts = BTreeSet::new();
                for k in reg.live_slots() {
                    for a in [k, (k - 1).rem_euclid(two_n)] {
                        let diff = (a - s3).rem_euclid(two_n);
                        if diff % 2 == 0 && self.program[(diff / 2) as usize % n] != 0 {
                            starts.insert(a);
                        }
                    }
                }
                for a in starts {
                    let digit = self.program[((a - s3).rem_euclid(two_n) / 2) as usize % n];
                    let b = (a + 1).rem_euclid(two_n);
                    match digit {
                        1 => reg.swap(a, b),
                        _ => reg.controlled_g(a, b, 1),
                    }
                }
            }
        }
        self.steps += 1;
    }

    /// The same configuration relabelled as if `steps` steps had elapsed.
    pub fn at_step(mut self, steps: u64) -> Self {
        assert!(self.mode() == QcaMode::Factored, "only factored lattices can be relabelled");
        self.steps = steps;
        self
    }

    pub fn run(&mut self, steps: u64) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Marginal over data slots `slots` (in order). `completion` is the step
    /// count after which the readout is final.
    pub fn readout(&self, slots: &[i64], completion: u64) -> Result<Readout, QcaError> {
        let marginal = match &self.carrier {
            Carrier::Factored(reg) => reg.marginal(slots)?,
            Carrier::Faithful(state) => {
                let phys: Vec<usize> = slots.iter().map(|&k| self.physical_slot(k)).collect();
                faithful_qubit_marginal(state, self.cells, &phys)?
            }
        };
        Ok(Readout { marginal, premature: self.steps < completion })
    }

    /// One text row: qutrit digit and the two qubits of each physical cell.
    /// Qubits show `.` for `|0⟩`, `1` for `|1⟩`, `*` otherwise.
    pub fn render_row(&self) -> Result<String, QcaError> {
        let phys: Vec<usize> = (0..2 * self.cells).collect();
        let mut p1 = vec![0.0; phys.len()];
        match &self.carrier {
            Carrier::Factored(reg) => {
                for (slot, quantum) in reg.occupied() {
                    let p = self.physical_slot(slot);
                    p1[p] = if quantum { reg.marginal(&[slot])?.probs[1] } else { 1.0 };
                }
            }
            Carrier::Faithful(state) => {
                for &p in &phys {
                    p1[p] = faithful_qubit_marginal(state, self.cells, &[p])?.probs[1];
                }
            }
        }
        let mut row = String::new();
        for i in 0..self.cells {
            if i > 0 {
                row.push(' ');
            }
            let mark = |p: f64| {
                if p < 1e-12 {
                    '.'
                } else if p > 1.0 - 1e-12 {
                    '1'
                } else {
                    '*'
                }
            };
            let _ = write!(row, "{}{}{}", self.qutrit_at(i), mark(p1[2 * i]), mark(p1[2 * i + 1]));
        }
        Ok(row)
    }
}

fn shift_faithful(state: &QuantumState, n: usize) -> QuantumState {
    let layout = state.layout().clone();
    let mut out = vec![C64::new(0.0, 0.0); layout.total_dim()];
    let mut t = vec![0usize; n];
    let mut q = vec![0usize; 2 * n];
    for (index, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let mut rest = index;
        for i in (0..n).rev() {
            let cell = rest % CELL_DIM;
            rest /= CELL_DIM;
            t[i] = cell / 4;
            q[2 * i] = (cell / 2) % 2;
            q[2 * i + 1] = cell % 2;
        }
        let mut full = 0usize;
        for i in 0..n {
            let ti = t[(i + n - 1) % n];
            let e = q[(2 * i + 1) % (2 * n)];
            let o = q[(2 * i + 2) % (2 * n)];
            full = full * CELL_DIM + 4 * ti + 2 * e + o;
        }
        out[full] = *amp;
    }
    QuantumState::from_amplitudes(layout, out).expect("permutation keeps the norm")
}

fn faithful_qubit_marginal(state: &QuantumState, n: usize, phys: &[usize]) -> Result<Marginal, QcaError> {
    for &p in phys {
        if p >= 2 * n {
            return Err(QcaError::SlotOutOfRange { slot: p as i64, slots: 2 * n });
        }
    }
    let k = phys.len();
    let mut probs = vec![0.0; 1 << k];
    let strides: Vec<usize> = state.layout().strides();
    for (index, amp) in state.amplitudes().iter().enumerate() {
        let w = amp.norm_sqr();
        if w == 0.0 {
            continue;
        }
        let mut key = 0;
        for &p in phys {
            let cell = (index / strides[p / 2]) % CELL_DIM;
            let bit = if p % 2 == 0 { (cell / 2) % 2 } else { cell % 2 };
            key = (key << 1) | bit;
        }
        probs[key] += w;
    }
    Ok(Marginal { sites: (0..k).collect(), dims: vec![2; k], probs })
}

/// A Margolus-form rule set lifted to an autonomous machine whose super-cells
/// hold three base cells and one program cell of dimension `2k + 1`.
#[derive(Debug, Clone)]
pub struct LiftedQcaSpec {
    base_dim: usize,
    rules: Vec<(GateMatrix, GateMatrix)>,
}

pub const BASE_CELLS_PER_SUPER_CELL: usize = 3;

pub fn lift_generic(base_dim: usize, rules: Vec<(GateMatrix, GateMatrix)>) -> Result<LiftedQcaSpec, QcaError> {
    if base_dim < 2 {
        return Err(QcaError::InvalidLift(format!("base dimension {base_dim} is below 2")));
    }
    if rules.is_empty() {
        return Err(QcaError::InvalidLift("at least one rule is required".into()));
    }
    let expected = base_dim * base_dim;
    for (rule, (u, v)) in rules.iter().enumerate() {
        for m in [u, v] {
            if m.dim() != expected {
                return Err(QcaError::RuleDimension { rule, expected, got: m.dim() });
            }
            let deviation = cached_unitary_deviation(m);
            if deviation > UNITARY_TOL {
                return Err(QcaError::RuleNotUnitary { rule, deviation });
            }
        }
    }
    Ok(LiftedQcaSpec { base_dim, rules })
}

impl LiftedQcaSpec {
    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn rule_count(&self) -> usize {
        self.rules.len()
    }

    pub fn alphabet_size(&self) -> usize {
        2 * self.rules.len() + 1
    }

    /// Symbol `2m-1` is `U_m`, symbol `2m` is `V_m` (rules counted from 1).
    pub fn symbol_block(&self, symbol: u8) -> Option<&GateMatrix> {
        if symbol == 0 {
            return None;
        }
        let m = (symbol as usize - 1) / 2;
        let (u, v) = &self.rules[m];
        Some(if symbol % 2 == 1 { u } else { v })
    }

    /// Program for rules `sequence` (0-based) in execution order. Cell `-1`
    /// stays idle; rule `r` at position `p` puts `U_r` on cell `-2-2p` and
    /// `V_r` on cell `-3-2p`.
    pub fn encode_rules(&self, sequence: &[usize]) -> Result<LiftedProgram, QcaError> {
        let mut cells = vec![0u8];
        for &r in sequence {
            if r >= self.rules.len() {
                return Err(QcaError::InvalidLift(format!("rule {r} out of range")));
            }
            cells.push(2 * r as u8 + 1);
            cells.push(2 * r as u8 + 2);
        }
        cells.reverse();
        Ok(LiftedProgram { symbols: cells, origin: -1 })
    }

    /// Reference: each rule applies `U` to pairs `(2x, 2x+1)` and then `V` to
    /// pairs `(2x+1, 2x+2)` inside the base region.
    pub fn sequential_reference(&self, data: &QuantumState, sequence: &[usize]) -> Result<QuantumState, QcaError> {
        let mut state = data.clone();
        let len = state.layout().site_count();
        for &r in sequence {
            let (u, v) = &self.rules[r];
            for (start, m) in [(0, u), (1, v)] {
                let mut a = start;
                while a + 1 < len {
                    state.apply_local_unitary(&[a, a + 1], m)?;
                    a += 2;
                }
            }
        }
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedProgram {
    /// Symbols in increasing cell order.
    pub symbols: Vec<u8>,
    /// Cell of the last symbol.
    pub origin: i64,
}

impl LiftedProgram {
    fn cells(&self) -> impl Iterator<Item = (i64, u8)> + '_ {
        let first = self.origin - self.symbols.len() as i64 + 1;
        self.symbols.iter().enumerate().filter(|(_, &s)| s != 0).map(move |(k, &s)| (first + k as i64, s))
    }
}

/// Steps after which every symbol has passed a base region of `len` cells.
pub fn lifted_steps(program: &LiftedProgram, len: usize) -> u64 {
    program.cells().map(|(c, _)| ((len as i64 - 2 - 3 * c).div_euclid(2)).max(0) as u64).max().unwrap_or(0)
}

/// Runs the lifted machine for `steps` steps on a base region of
/// `data.site_count()` cells (a whole number of super-cells). In the data
/// frame, a program symbol in super-cell `c` acts at step `t` on base cells
/// `3c + 2t` and `3c + 2t + 1`: each step slides the program two base cells
/// past the data and then applies every symbol's block.
pub fn simulate_lifted(spec: &LiftedQcaSpec, data: &QuantumState, program: &LiftedProgram, steps: u64) -> Result<QuantumState, QcaError> {
    let len = data.layout().site_count();
    if data.layout().dims().iter().any(|&d| d != spec.base_dim) {
        return Err(QcaError::InvalidLift("data sites must have the base dimension".into()));
    }
    if !len.is_multiple_of(BASE_CELLS_PER_SUPER_CELL) {
        return Err(QcaError::InvalidLift(format!("{len} base cells is not a whole number of super-cells")));
    }
    if program.origin >= 0 {
        return Err(QcaError::OriginNotNegative(program.origin));
    }
    for &s in &program.symbols {
        if s as usize >= spec.alphabet_size() {
            return Err(QcaError::InvalidLift(format!("symbol {s} outside alphabet of {}", spec.alphabet_size())));
        }
    }
    let mut state = data.clone();
    for t in 1..=steps as i64 {
        let mut used = vec![false; len];
        for (c, symbol) in program.cells() {
            let a = 3 * c + 2 * t;
            if a < 0 || a + 1 >= len as i64 {
                continue;
            }
            let a = a as usize;
            assert!(!used[a] && !used[a + 1], "controlled blocks overlap at step {t}");
            used[a] = true;
            used[a + 1] = true;
            let block = spec.symbol_block(symbol).expect("nonzero symbol");
            state.apply_local_unitary(&[a, a + 1], block)?;
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ccqca::{apply_nn_op, lower_to_nn, Family, Homomorphism};
    use crate::gatelib::{gate_g, gate_swap};

    #[test]
    fn segment_table() {
        assert_eq!(encode_segment(NnOp::e(0)), [1, 0, 0]);
        assert_eq!(encode_segment(NnOp::e(2)), [0, 1, 0]);
        assert_eq!(encode_segment(NnOp::e(1)), [0, 0, 1]);
        assert_eq!(encode_segment(NnOp::f(0)), [2, 0, 0]);
        assert_eq!(encode_segment(NnOp::f(2)), [0, 2, 0]);
        assert_eq!(encode_segment(NnOp::f(1)), [0, 0, 2]);
        for op in [NnOp::e(0), NnOp::e(1), NnOp::e(2), NnOp::f(0), NnOp::f(1), NnOp::f(2)] {
            assert_eq!(decode_segment(encode_segment(op), 0).unwrap(), Some(op));
        }
        assert!(matches!(decode_segment([1, 1, 0], 4), Err(QcaError::MalformedSegment { index: 4 })));
    }

    #[test]
    fn assembly_places_first_op_nearest_data() {
        assert!(assemble_program(&[]).is_empty());
        let band = assemble_program(&[NnOp::e(0)]);
        assert_eq!(band.digits(), &[1, 0, 0]);
        assert_eq!(band.first_cell(), -3);
        let band = assemble_program(&[NnOp::f(0), NnOp::e(0)]);
        assert_eq!(band.to_digit_string(), "100200");
        assert_eq!(band.disassemble().unwrap(), vec![NnOp::f(0), NnOp::e(0)]);
    }

    #[test]
    fn band_validation() {
        assert!(matches!(ProgramBand::new(vec![3, 0, 0], -1), Err(QcaError::InvalidDigit { index: 0, digit: 3 })));
        assert!(matches!(ProgramBand::new(vec![1, 0], -1), Err(QcaError::PartialSegment(2))));
        assert!(matches!(ProgramBand::new(vec![1, 0, 0], 0), Err(QcaError::OriginNotNegative(0))));
    }

    #[test]
    fn completion_examples() {
        assert_eq!(completion_steps(&ProgramBand::empty(), 6), 0);
        let band = ProgramBand::new(vec![1, 0, 0], -1).unwrap();
        assert_eq!(completion_steps(&band, 6), 4);
        let n = minimal_ring_size(&band, 6, DEFAULT_MARGIN);
        assert_eq!(steps_to_completion(&band, 6, n).unwrap(), 4);
        match steps_to_completion(&band, 6, n - 1) {
            Err(QcaError::RingTooSmall { required, .. }) => assert_eq!(required, n),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_program_only_shifts() {
        let band = ProgramBand::new(vec![0, 0, 0], -1).unwrap();
        let mut lat = QcaLattice::with_ones(4, &band, &[1, 2], QcaMode::Faithful).unwrap();
        lat.run(3);
        let r = lat.readout(&[0, 1, 2, 3], 0).unwrap();
        assert!((r.marginal.probability(&[0, 1, 1, 0]) - 1.0).abs() < 1e-12);
        assert_eq!(lat.render_row().unwrap(), "0.. 0.. 0.. 011");
    }

    #[test]
    fn swap_digit_exchanges_pair() {
        // Digit 1 in cell 0 acts on data slots 0 and 1 at the first step.
        let band = ProgramBand::new(vec![1, 0, 0], -1).unwrap();
        let mut lat = QcaLattice::with_ones(4, &band, &[1], QcaMode::Factored).unwrap();
        lat.program = vec![1, 0, 0, 0];
        lat.step();
        let r = lat.readout(&[0, 1], 0).unwrap();
        assert!((r.marginal.probability(&[1, 0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn program_moves_three_slots_per_step_relative_to_data() {
        let band = ProgramBand::new(vec![0, 0, 2], -1).unwrap();
        let lat = QcaLattice::with_ones(8, &band, &[], QcaMode::Factored).unwrap();
        let mut prev: Option<i64> = None;
        for s in 0..3 {
            let mut l = lat.clone();
            l.run(s);
            let cell = (0..8).find(|&i| l.qutrit_at(i) == 2).unwrap() as i64;
            // Data slot under the marker's even qubit.
            let data_slot = (2 * cell + s as i64).rem_euclid(16);
            if let Some(p) = prev {
                assert_eq!((data_slot - p).rem_euclid(16), 3);
            }
            prev = Some(data_slot);
        }
    }

    #[test]
    fn one_segment_matches_layer() {
        for op in [NnOp::e(0), NnOp::e(1), NnOp::e(2), NnOp::f(0), NnOp::f(1), NnOp::f(2)] {
            let band = assemble_program(&[op]);
            let data = QuantumState::uniform(SiteLayout::qubits(6).unwrap());
            let slots: Vec<i64> = (0..6).collect();
            let n = minimal_ring_size(&band, 6, DEFAULT_MARGIN);
            let mut lat = QcaLattice::new(n, &band, &slots, &data, QcaMode::Factored).unwrap();
            lat.run(completion_steps(&band, 6));
            let mut expect = SlotRegister::from_state(Geometry::Unbounded, &slots, data).unwrap();
            apply_nn_op(&mut expect, op);
            let two_n = 2 * n as i64;
            let got = lat.register().unwrap().relabel(Geometry::Unbounded, |s| if s >= n as i64 { s - two_n } else { s });
            assert!((got.overlap(&expect).unwrap().norm() - 1.0).abs() < 1e-10, "{op}");
        }
    }

    #[test]
    fn modes_agree_over_ten_steps() {
        let band = assemble_program(&lower_to_nn(Homomorphism::new(Family::C, 0)));
        let data = QuantumState::uniform(SiteLayout::qubits(2).unwrap());
        let mut a = QcaLattice::new(4, &band, &[0, 1], &data, QcaMode::Faithful).unwrap();
        let mut b = QcaLattice::new(4, &band, &[0, 1], &data, QcaMode::Factored).unwrap();
        for _ in 0..10 {
            a.step();
            b.step();
            let o = a.to_faithful_state().unwrap().overlap(&b.to_faithful_state().unwrap()).unwrap();
            assert!((o.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn ring_shift_has_period_two_n() {
        let band = ProgramBand::new(vec![0, 0, 0], -1).unwrap();
        let data = QuantumState::uniform(SiteLayout::qubits(3).unwrap());
        let start = QcaLattice::new(3, &band, &[0, 1, 3], &data, QcaMode::Faithful).unwrap();
        let mut lat = start.clone();
        lat.run(6);
        let o = lat.to_faithful_state().unwrap().overlap(&start.to_faithful_state().unwrap()).unwrap();
        assert!((o - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn premature_readout_is_flagged() {
        let band = assemble_program(&[NnOp::e(1)]);
        let lat = QcaLattice::with_ones(8, &band, &[2], QcaMode::Factored).unwrap();
        assert!(lat.readout(&[1, 2], 3).unwrap().premature);
        let mut lat = lat;
        lat.run(3);
        let r = lat.readout(&[1, 2], 3).unwrap();
        assert!(!r.premature);
        assert!((r.marginal.probability(&[1, 0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lift_rejects_bad_rules() {
        let bad = GateMatrix::from_real(4, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(lift_generic(2, vec![(bad, GateMatrix::identity(4))]), Err(QcaError::RuleNotUnitary { rule: 0, .. })));
        assert!(matches!(lift_generic(2, vec![(GateMatrix::identity(9), GateMatrix::identity(4))]), Err(QcaError::RuleDimension { .. })));
    }

    #[test]
    fn lift_identity_rule_keeps_data() {
        let spec = lift_generic(2, vec![(GateMatrix::identity(4), GateMatrix::identity(4))]).unwrap();
        assert_eq!(spec.alphabet_size(), 3);
        let data = QuantumState::basis_state(SiteLayout::qubits(6).unwrap(), &[1, 0, 1, 1, 0, 0]).unwrap();
        let prog = spec.encode_rules(&[0, 0]).unwrap();
        let out = simulate_lifted(&spec, &data, &prog, lifted_steps(&prog, 6)).unwrap();
        assert!((out.overlap(&data).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn lift_swap_rule_matches_layer() {
        let spec = lift_generic(2, vec![(gate_swap(), GateMatrix::identity(4)), (gate_g(), gate_swap())]).unwrap();
        let data = QuantumState::basis_state(SiteLayout::qubits(6).unwrap(), &[1, 0, 1, 1, 0, 1]).unwrap();
        for seq in [vec![0], vec![1, 0, 1]] {
            let prog = spec.encode_rules(&seq).unwrap();
            let out = simulate_lifted(&spec, &data, &prog, lifted_steps(&prog, 6)).unwrap();
            let expect = spec.sequential_reference(&data, &seq).unwrap();
            assert!((out.overlap(&expect).unwrap().norm() - 1.0).abs() < 1e-12);
        }
    }
}
