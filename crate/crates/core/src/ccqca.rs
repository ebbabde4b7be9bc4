//! Classically controlled machines: the three-band lattice with the
//! homomorphism families `A..D`, and the interleaved nearest-neighbour band
//! with the `E`/`F` layers.
//!
//! Both levels act on anything implementing [`QubitBand`], addressed by the
//! interleaved index `q = 3x + band`. [`ThreeBandLattice`] is the dense
//! carrier; [`SlotRegister`](crate::register::SlotRegister) is the factored one.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::gatelib::{gate_g, gate_g_power, gate_swap, GateMatrix};
use crate::register::{Geometry, QubitBand};
use crate::statevec::{QuantumState, SiteLayout, StateError};

#[derive(Debug, Error)]
pub enum CcqcaError {
    #[error("gate operands coincide at position {0}")]
    SameOperands(i64),
    #[error("interval [{x_min}, {x_max}] is empty")]
    EmptyInterval { x_min: i64, x_max: i64 },
    #[error("pointer {pointer} outside [{x_min}, {x_max}]")]
    PointerOutOfRange { pointer: i64, x_min: i64, x_max: i64 },
    #[error("position {pos} outside [{x_min}, {x_max}]")]
    PositionOutOfRange { pos: i64, x_min: i64, x_max: i64 },
    #[error("program mixes homomorphism and nearest-neighbour instructions")]
    MixedLevels,
    #[error("phase {0} is not in 0..3")]
    BadPhase(u8),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Band {
    D,
    A,
    H,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::D, Band::A, Band::H];

    pub fn offset(self) -> i64 {
        match self {
            Band::D => 0,
            Band::A => 1,
            Band::H => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    A,
    B,
    C,
    D,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::A, Family::B, Family::C, Family::D];

    /// `(control band, target band)`.
    pub fn bands(self) -> (Band, Band) {
        match self {
            Family::A => (Band::H, Band::A),
            Family::B => (Band::H, Band::D),
            Family::C => (Band::D, Band::A),
            Family::D => (Band::A, Band::D),
        }
    }
}

/// `∏ₓ G(src_x, dst_{x+offset})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Homomorphism {
    pub family: Family,
    pub offset: i64,
}

impl Homomorphism {
    pub fn new(family: Family, offset: i64) -> Self {
        Self { family, offset }
    }
}

impl fmt::Display for Homomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}", self.family, self.offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NnKind {
    /// Swap layer.
    E,
    /// `G` layer.
    F,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NnOp {
    kind: NnKind,
    phase: u8,
}

impl NnOp {
    pub fn new(kind: NnKind, phase: u8) -> Result<Self, CcqcaError> {
        if phase > 2 {
            return Err(CcqcaError::BadPhase(phase));
        }
        Ok(Self { kind, phase })
    }

    pub fn e(phase: u8) -> Self {
        Self::new(NnKind::E, phase).expect("phase in range")
    }

    pub fn f(phase: u8) -> Self {
        Self::new(NnKind::F, phase).expect("phase in range")
    }

    pub fn kind(&self) -> NnKind {
        self.kind
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }
}

impl fmt::Display for NnOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{}", self.kind, self.phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instruction {
    Hom(Homomorphism),
    Nn(NnOp),
}

pub fn interleave_index(band: Band, pos: i64) -> i64 {
    3 * pos + band.offset()
}

pub fn deinterleave_index(q: i64) -> (Band, i64) {
    (Band::ALL[q.rem_euclid(3) as usize], q.div_euclid(3))
}

/// Number of factors applied and dropped at the boundary by one layer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LayerTally {
    pub applied: usize,
    pub clipped: usize,
}

impl std::ops::AddAssign for LayerTally {
    fn add_assign(&mut self, rhs: Self) {
        self.applied += rhs.applied;
        self.clipped += rhs.clipped;
    }
}

fn cell_range(lo: i64, hi: i64) -> (i64, i64) {
    (lo.div_euclid(3), hi.div_euclid(3))
}

/// Control/target slot pairs of a homomorphism layer.
pub fn homomorphism_pairs(geometry: Geometry, live: &[i64], h: Homomorphism) -> (Vec<(i64, i64)>, usize) {
    let (src, dst) = h.family.bands();
    let mut pairs = Vec::new();
    let mut clipped = 0;
    match geometry {
        Geometry::Open { lo, hi } => {
            let (x_min, x_max) = cell_range(lo, hi);
            for x in x_min..=x_max {
                if (x_min..=x_max).contains(&(x + h.offset)) {
                    pairs.push((interleave_index(src, x), interleave_index(dst, x + h.offset)));
                } else {
                    clipped += 1;
                }
            }
        }
        Geometry::Periodic { lo, len } => {
            let x_min = lo.div_euclid(3);
            let width = len / 3;
            for x in x_min..x_min + width {
                let y = x_min + (x + h.offset - x_min).rem_euclid(width);
                pairs.push((interleave_index(src, x), interleave_index(dst, y)));
            }
        }
        Geometry::Unbounded => {
            for &s in live {
                let (band, x) = deinterleave_index(s);
                if band == src {
                    pairs.push((s, interleave_index(dst, x + h.offset)));
                }
            }
        }
    }
    (pairs, clipped)
}

/// Slot pairs `(3x+r, 3x+r+1)` of a nearest-neighbour layer.
pub fn nn_pairs(geometry: Geometry, live: &[i64], op: NnOp) -> (Vec<(i64, i64)>, usize) {
    let r = op.phase as i64;
    let mut pairs = Vec::new();
    let mut clipped = 0;
    match geometry {
        Geometry::Open { lo, hi } => {
            for a in lo - 1..=hi {
                if a.rem_euclid(3) != r {
                    continue;
                }
                if a >= lo && a < hi {
                    pairs.push((a, a + 1));
                } else {
                    clipped += 1;
                }
            }
        }
        Geometry::Periodic { lo, len } => {
            for a in lo..lo + len {
                if a.rem_euclid(3) == r {
                    pairs.push((a, lo + (a + 1 - lo).rem_euclid(len)));
                }
            }
        }
        Geometry::Unbounded => {
            let mut starts: Vec<i64> = Vec::new();
            for &s in live {
                if s.rem_euclid(3) == r {
                    starts.push(s);
                }
                if op.kind == NnKind::E && (s - 1).rem_euclid(3) == r {
                    starts.push(s - 1);
                }
            }
            starts.sort_unstable();
            starts.dedup();
            pairs.extend(starts.into_iter().map(|a| (a, a + 1)));
        }
    }
    (pairs, clipped)
}

pub fn apply_homomorphism<B: QubitBand + ?Sized>(band: &mut B, h: Homomorphism) -> LayerTally {
    let live = band.live_slots();
    let (pairs, clipped) = homomorphism_pairs(band.geometry(), &live, h);
    for &(c, t) in &pairs {
        band.controlled_g(c, t, 1);
    }
    LayerTally { applied: pairs.len(), clipped }
}

pub fn apply_nn_op<B: QubitBand + ?Sized>(band: &mut B, op: NnOp) -> LayerTally {
    let live = band.live_slots();
    let (pairs, clipped) = nn_pairs(band.geometry(), &live, op);
    for &(a, b) in &pairs {
        match op.kind {
            NnKind::E => band.swap(a, b),
            NnKind::F => band.controlled_g(a, b, 1),
        }
    }
    LayerTally { applied: pairs.len(), clipped }
}

/// The classically controlled sequence simulating `G(d_i, d_j)` with the
/// pointer at `h_0`, in execution order.
pub fn g_sequence(i: i64, j: i64) -> Result<Vec<Homomorphism>, CcqcaError> {
    if i == j {
        return Err(CcqcaError::SameOperands(i));
    }
    let a0 = Homomorphism::new(Family::A, 0);
    let c = Homomorphism::new(Family::C, -i);
    let b = Homomorphism::new(Family::B, i);
    let d = Homomorphism::new(Family::D, j);
    let runs = [(a0, 1), (c, 1), (b, 2), (c, 7), (d, 1), (c, 1), (b, 6), (c, 7), (a0, 7)];
    Ok(runs.iter().flat_map(|&(h, n)| std::iter::repeat_n(h, n)).collect())
}

/// Which band, and at what position shift, each residue of the interleaved
/// band currently carries.
type Arrangement = [(Band, i64); 3];

fn e_move(cfg: Arrangement, phase: u8) -> Arrangement {
    let mut n = cfg;
    match phase {
        0 => n.swap(0, 1),
        1 => n.swap(1, 2),
        _ => {
            n[2] = (cfg[0].0, cfg[0].1 + 1);
            n[0] = (cfg[2].0, cfg[2].1 - 1);
        }
    }
    n
}

/// The homomorphism an `F` layer with this phase performs on `cfg`.
fn f_effect(cfg: Arrangement, phase: u8) -> Homomorphism {
    let ((cb, cs), (tb, ts)) = match phase {
        0 => (cfg[0], cfg[1]),
        1 => (cfg[1], cfg[2]),
        _ => (cfg[2], (cfg[0].0, cfg[0].1 + 1)),
    };
    let family = Family::ALL.into_iter().find(|f| f.bands() == (cb, tb));
    match family {
        Some(family) => Homomorphism::new(family, ts - cs),
        // Marks a pairing that is not one of the four families.
        None => Homomorphism::new(Family::A, i64::MIN),
    }
}

/// Lowers a homomorphism to `E…E · F · E…E`, using the shortest run of swap
/// layers that brings the two bands to the required distance.
pub fn lower_to_nn(h: Homomorphism) -> Vec<NnOp> {
    let start: Arrangement = [(Band::D, 0), (Band::A, 0), (Band::H, 0)];
    let mut queue = VecDeque::from([(start, Vec::<u8>::new())]);
    let mut seen = HashSet::from([start]);
    while let Some((cfg, path)) = queue.pop_front() {
        if let Some(r) = (0..3u8).find(|&r| f_effect(cfg, r) == h) {
            let mut ops: Vec<NnOp> = path.iter().map(|&p| NnOp::e(p)).collect();
            ops.push(NnOp::f(r));
            ops.extend(path.iter().rev().map(|&p| NnOp::e(p)));
            return ops;
        }
        for p in 0..3u8 {
            let next = e_move(cfg, p);
            if seen.insert(next) {
                let mut np = path.clone();
                np.push(p);
                queue.push_back((next, np));
            }
        }
    }
    unreachable!("every homomorphism is reachable by swap layers")
}

pub fn lower_program(homs: &[Homomorphism]) -> Vec<NnOp> {
    homs.iter().flat_map(|&h| lower_to_nn(h)).collect()
}

pub fn run_program<B: QubitBand + ?Sized>(band: &mut B, program: &[Instruction]) -> Result<LayerTally, CcqcaError> {
    let homs = program.iter().filter(|i| matches!(i, Instruction::Hom(_))).count();
    if homs != 0 && homs != program.len() {
        return Err(CcqcaError::MixedLevels);
    }
    let mut tally = LayerTally::default();
    for ins in program {
        tally += match *ins {
            Instruction::Hom(h) => apply_homomorphism(band, h),
            Instruction::Nn(op) => apply_nn_op(band, op),
        };
    }
    Ok(tally)
}

pub fn run_homomorphisms<B: QubitBand + ?Sized>(band: &mut B, program: &[Homomorphism]) -> LayerTally {
    let mut tally = LayerTally::default();
    for &h in program {
        tally += apply_homomorphism(band, h);
    }
    tally
}

pub fn run_nn<B: QubitBand + ?Sized>(band: &mut B, program: &[NnOp]) -> LayerTally {
    let mut tally = LayerTally::default();
    for &op in program {
        tally += apply_nn_op(band, op);
    }
    tally
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Dense three-band lattice over positions `x_min..=x_max`, stored as the
/// interleaved qubit band `q_{3x+b}` with `q_{3 x_min}` as site 0.
#[derive(Debug, Clone)]
pub struct ThreeBandLattice {
    x_min: i64,
    x_max: i64,
    pointer_pos: i64,
    boundary: Boundary,
    state: QuantumState,
    clipped: usize,
}

impl ThreeBandLattice {
    fn check(x_min: i64, x_max: i64, pointer_pos: i64) -> Result<(), CcqcaError> {
        if x_min > x_max {
            return Err(CcqcaError::EmptyInterval { x_min, x_max });
        }
        if !(x_min..=x_max).contains(&pointer_pos) {
            return Err(CcqcaError::PointerOutOfRange { pointer: pointer_pos, x_min, x_max });
        }
        Ok(())
    }

    /// Fresh lattice: d-band `d_digits` (one per position), a-band `|0⟩`,
    /// a single pointer `|1⟩` at `h_{pointer_pos}`.
    pub fn new(x_min: i64, x_max: i64, pointer_pos: i64, boundary: Boundary, d_digits: &[usize]) -> Result<Self, CcqcaError> {
        Self::check(x_min, x_max, pointer_pos)?;
        let width = (x_max - x_min + 1) as usize;
        if d_digits.len() != width {
            return Err(StateError::DigitCount { expected: width, got: d_digits.len() }.into());
        }
        let mut digits = vec![0; 3 * width];
        for (k, &d) in d_digits.iter().enumerate() {
            digits[3 * k] = d;
        }
        digits[3 * (pointer_pos - x_min) as usize + 2] = 1;
        let state = QuantumState::basis_state(SiteLayout::qubits(3 * width)?, &digits)?;
        Ok(Self { x_min, x_max, pointer_pos, boundary, state, clipped: 0 })
    }

    /// Fresh lattice whose d-band carries an arbitrary state over `width` qubits.
    pub fn with_data_state(x_min: i64, x_max: i64, pointer_pos: i64, boundary: Boundary, data: &QuantumState) -> Result<Self, CcqcaError> {
        Self::check(x_min, x_max, pointer_pos)?;
        let width = (x_max - x_min + 1) as usize;
        if data.layout().dims() != vec![2; width].as_slice() {
            return Err(StateError::LayoutMismatch { left: data.layout().dims().to_vec(), right: vec![2; width] }.into());
        }
        let layout = SiteLayout::qubits(3 * width)?;
        let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
        let n = 3 * width;
        let pointer_bit = 1usize << (n - 1 - (3 * (pointer_pos - x_min) as usize + 2));
        for (index, amp) in data.amplitudes().iter().enumerate() {
            let mut full = pointer_bit;
            for k in 0..width {
                if (index >> (width - 1 - k)) & 1 == 1 {
                    full |= 1 << (n - 1 - 3 * k);
                }
            }
            amps[full] = *amp;
        }
        let state = QuantumState::from_amplitudes(layout, amps)?;
        Ok(Self { x_min, x_max, pointer_pos, boundary, state, clipped: 0 })
    }

    pub fn x_min(&self) -> i64 {
        self.x_min
    }

    pub fn x_max(&self) -> i64 {
        self.x_max
    }

    pub fn width(&self) -> usize {
        (self.x_max - self.x_min + 1) as usize
    }

    pub fn pointer_pos(&self) -> i64 {
        self.pointer_pos
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    /// Factors dropped at open boundaries so far.
    pub fn clipped(&self) -> usize {
        self.clipped
    }

    pub fn site(&self, band: Band, pos: i64) -> Result<usize, CcqcaError> {
        let pos = match self.boundary {
            Boundary::Open => pos,
            Boundary::Periodic => self.x_min + (pos - self.x_min).rem_euclid(self.width() as i64),
        };
        if !(self.x_min..=self.x_max).contains(&pos) {
            return Err(CcqcaError::PositionOutOfRange { pos, x_min: self.x_min, x_max: self.x_max });
        }
        Ok((interleave_index(band, pos) - 3 * self.x_min) as usize)
    }

    fn slot_site(&self, slot: i64) -> usize {
        let (band, pos) = deinterleave_index(slot);
        self.site(band, pos).expect("slot inside the lattice")
    }

    /// Applies `G^power(control, target)` directly, bypassing the layers.
    pub fn apply_direct_g(&mut self, control: (Band, i64), target: (Band, i64), power: u32) -> Result<(), CcqcaError> {
        let c = self.site(control.0, control.1)?;
        let t = self.site(target.0, target.1)?;
        self.state.apply_local_unitary(&[c, t], &gate_g_power(power))?;
        Ok(())
    }

    pub fn apply_matrix(&mut self, sites: &[(Band, i64)], m: &GateMatrix) -> Result<(), CcqcaError> {
        let sites = sites.iter().map(|&(b, p)| self.site(b, p)).collect::<Result<Vec<_>, _>>()?;
        self.state.apply_local_unitary(&sites, m)?;
        Ok(())
    }

    pub fn overlap(&self, other: &ThreeBandLattice) -> Result<C64, CcqcaError> {
        Ok(self.state.overlap(&other.state)?)
    }
}

impl QubitBand for ThreeBandLattice {
    fn geometry(&self) -> Geometry {
        let lo = 3 * self.x_min;
        match self.boundary {
            Boundary::Open => Geometry::Open { lo, hi: 3 * self.x_max + 2 },
            Boundary::Periodic => Geometry::Periodic { lo, len: 3 * self.width() as i64 },
        }
    }

    fn live_slots(&self) -> Vec<i64> {
        let lo = 3 * self.x_min;
        (lo..lo + 3 * self.width() as i64).collect()
    }

    fn swap(&mut self, a: i64, b: i64) {
        let (a, b) = (self.slot_site(a), self.slot_site(b));
        self.state.apply_unchecked(&[a, b], &gate_swap());
    }

    fn controlled_g(&mut self, control: i64, target: i64, power: u32) {
        let (c, t) = (self.slot_site(control), self.slot_site(target));
        let m = if power % 8 == 1 { gate_g() } else { gate_g_power(power) };
        self.state.apply_unchecked(&[c, t], &m);
    }
}

impl ThreeBandLattice {
    pub fn apply_homomorphism(&mut self, h: Homomorphism) -> LayerTally {
        let t = apply_homomorphism(self, h);
        self.clipped += t.clipped;
        t
    }

    pub fn apply_nn_op(&mut self, op: NnOp) -> LayerTally {
        let t = apply_nn_op(self, op);
        self.clipped += t.clipped;
        t
    }
}

/// Outcome of checking `g_sequence(i, j)` against the direct gate.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceCheck {
    pub pointer: i64,
    pub min_overlap: f64,
}

/// Runs `g_sequence(i, j)` with the pointer at `pointer` on every d-band basis
/// input of the open lattice `x_min..=x_max`, and returns the smallest
/// `|⟨direct|sequence⟩|` against `G(d_i, d_j)` applied directly.
pub fn check_sequence(i: i64, j: i64, pointer: i64, x_min: i64, x_max: i64) -> Result<SequenceCheck, CcqcaError> {
    let seq = g_sequence(i, j)?;
    let width = (x_max - x_min + 1) as usize;
    let mut min_overlap = f64::INFINITY;
    for bits in 0..1usize << width {
        let digits: Vec<usize> = (0..width).map(|k| (bits >> (width - 1 - k)) & 1).collect();
        let mut run = ThreeBandLattice::new(x_min, x_max, pointer, Boundary::Open, &digits)?;
        let mut direct = run.clone();
        direct.apply_direct_g((Band::D, i), (Band::D, j), 1)?;
        run_homomorphisms(&mut run, &seq);
        min_overlap = min_overlap.min(run.overlap(&direct)?.norm());
    }
    Ok(SequenceCheck { pointer, min_overlap })
}

/// Searches pointer positions (0 first, then ±1, ±2, …) for one under which
/// `g_sequence(i, j)` realizes `G(d_i, d_j)` with absolute indices.
pub fn find_pointer_convention(i: i64, j: i64, x_min: i64, x_max: i64, tol: f64) -> Result<Option<SequenceCheck>, CcqcaError> {
    let mut candidates = vec![0i64];
    for k in 1..=2 {
        candidates.extend([-k, k]);
    }
    for p in candidates {
        if !(x_min..=x_max).contains(&p) {
            continue;
        }
        let check = check_sequence(i, j, p, x_min, x_max)?;
        if check.min_overlap >= 1.0 - tol {
            return Ok(Some(check));
        }
    }
    Ok(None)
}
