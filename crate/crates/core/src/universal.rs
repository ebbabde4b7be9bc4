//! Exact realizations of target gates as words in `G(p, q)^k`, with
//! computational-basis ancillae, plus their verification.

use std::collections::HashMap;
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gatelib::{gate_g_power, rotation, GateMatrix, INV_SQRT2};
use crate::statevec::{QuantumState, SiteLayout};

/// `G^power` with `control` first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub control: usize,
    pub target: usize,
    pub power: u8,
}

impl Letter {
    pub fn new(control: usize, target: usize, power: u8) -> Self {
        Self { control, target, power: power % 8 }
    }

    pub fn inverse(self) -> Self {
        Self::new(self.control, self.target, (8 - self.power % 8) % 8)
    }
}

pub fn inverse_word(word: &[Letter]) -> Vec<Letter> {
    word.iter().rev().map(|l| l.inverse()).collect()
}

#[derive(Debug, Error)]
pub enum UniversalError {
    #[error("fixture does not parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown target gate `{0}`")]
    UnknownTarget(String),
    #[error("ancilla init digit {0} is not 0 or 1")]
    BadAncilla(u8),
    #[error("letter {0:?} uses a wire outside 0..{1} or repeats a wire")]
    BadLetter(Letter, usize),
    #[error("realization of {name} fails verification (deviation {deviation:e})")]
    Failed { name: String, deviation: f64 },
}

/// Data wires come first, then ancillae, each ancilla with its init digit.
#[derive(Debug, Clone)]
pub struct Realization {
    pub name: String,
    pub data_wires: usize,
    pub ancillas: Vec<u8>,
    pub sequence: Vec<Letter>,
    pub target: GateMatrix,
}

impl Realization {
    pub fn wire_count(&self) -> usize {
        self.data_wires + self.ancillas.len()
    }

    /// Number of single `G` applications once powers are expanded.
    pub fn g_count(&self) -> usize {
        self.sequence.iter().map(|l| l.power as usize).sum()
    }

    pub fn to_file(&self) -> RealizationFile {
        RealizationFile {
            name: self.name.clone(),
            data_wires: self.data_wires,
            ancillas: self.ancillas.clone(),
            sequence: self.sequence.iter().map(|l| [l.control, l.target, l.power as usize]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    pub passed: bool,
    pub deviation: f64,
}

fn basis_index(digits: impl IntoIterator<Item = usize>) -> usize {
    digits.into_iter().fold(0, |acc, d| (acc << 1) | d)
}

/// Checks that the word maps every data input (ancillae at their init
/// digits) to the target's output with the ancillae restored, up to a single
/// phase shared by all inputs. The phase is fixed by the first input.
pub fn verify_realization(r: &Realization, tol: f64) -> Verification {
    let n = r.wire_count();
    let d = r.data_wires;
    if r.target.dim() != 1 << d || n == 0 {
        return Verification { passed: false, deviation: f64::INFINITY };
    }
    for l in &r.sequence {
        if l.control >= n || l.target >= n || l.control == l.target {
            return Verification { passed: false, deviation: f64::INFINITY };
        }
    }
    let anc = basis_index(r.ancillas.iter().map(|&a| a as usize));
    let m = r.ancillas.len();
    let layout = SiteLayout::qubits(n).expect("small register");
    let mut phase: Option<C64> = None;
    let mut deviation: f64 = 0.0;
    for x in 0..1usize << d {
        let digits = layout.digits_of((x << m) | anc);
        let mut state = QuantumState::basis_state(layout.clone(), &digits).expect("valid digits");
        for l in &r.sequence {
            state.apply_unchecked(&[l.control, l.target], &gate_g_power(l.power as u32));
        }
        let mut expected = vec![C64::new(0.0, 0.0); 1 << n];
        for y in 0..1usize << d {
            expected[(y << m) | anc] = r.target.get(y, x);
        }
        let out = state.amplitudes();
        let ph = *phase.get_or_insert_with(|| {
            let o: C64 = expected.iter().zip(out).map(|(e, a)| e.conj() * a).sum();
            if o.norm() > 1e-9 {
                o / o.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        });
        for (e, a) in expected.iter().zip(out) {
            deviation = deviation.max((a - ph * e).norm());
        }
    }
    Verification { passed: deviation <= tol, deviation }
}

pub fn hadamard() -> GateMatrix {
    GateMatrix::from_real(2, &[INV_SQRT2, INV_SQRT2, INV_SQRT2, -INV_SQRT2])
}

/// Applies `m` (2×2) to the last of `controls + 1` wires when every
/// control is 1.
pub fn multi_controlled(m: &GateMatrix, controls: usize) -> GateMatrix {
    let dim = 2 << controls;
    let mut blocks = vec![GateMatrix::identity(dim - 2)];
    blocks.push(m.clone());
    GateMatrix::block_diagonal(&blocks)
}

pub fn toffoli() -> GateMatrix {
    multi_controlled(&GateMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]), 2)
}

pub fn target_by_name(name: &str) -> Result<GateMatrix, UniversalError> {
    match name {
        "H" => Ok(hadamard()),
        "TOFFOLI" => Ok(toffoli()),
        "G" => Ok(gate_g_power(1)),
        "R" => Ok(rotation(1)),
        other => Err(UniversalError::UnknownTarget(other.to_string())),
    }
}

/// Bounds on a search.
#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub max_nodes: usize,
    pub max_seconds: f64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { max_nodes: 2_000_000, max_seconds: 120.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Every word up to `max_length` was covered.
    Exhausted,
    NodeCap,
    TimeCap,
    /// A component of a guided composition was not found.
    Component(String),
    /// The composed word failed verification.
    CompositionFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionReport {
    pub target: String,
    pub data_wires: usize,
    pub ancilla_budget: usize,
    pub max_length: usize,
    pub nodes_explored: usize,
    pub ancilla_patterns_tried: usize,
    pub reason: StopReason,
}

#[derive(Debug, Clone)]
pub enum SynthesisOutcome {
    Found(Realization),
    Exhausted(ExhaustionReport),
}

impl SynthesisOutcome {
    pub fn found(self) -> Option<Realization> {
        match self {
            SynthesisOutcome::Found(r) => Some(r),
            SynthesisOutcome::Exhausted(_) => None,
        }
    }
}

/// Columns `W|x, anc⟩` of a word, column-major over data inputs `x`.
#[derive(Clone)]
struct Block {
    wires: usize,
    data: Vec<C64>,
}

impl Block {
    fn apply(&self, l: Letter, m: &GateMatrix) -> Block {
        let dim = 1usize << self.wires;
        let bp = 1usize << (self.wires - 1 - l.control);
        let bq = 1usize << (self.wires - 1 - l.target);
        let mut out = self.data.clone();
        for col in out.chunks_mut(dim) {
            for idx in 0..dim {
                if idx & (bp | bq) != 0 {
                    continue;
                }
                let ids = [idx, idx | bq, idx | bp, idx | bp | bq];
                let v = ids.map(|i| col[i]);
                for (r, &i) in ids.iter().enumerate() {
                    col[i] = (0..4).map(|c| m.get(r, c) * v[c]).sum();
                }
            }
        }
        Block { wires: self.wires, data: out }
    }

    fn key(&self) -> Vec<i64> {
        let pivot = self.data.iter().find(|a| a.norm() > 1e-6).copied().unwrap_or(C64::new(1.0, 0.0));
        let ph = pivot.conj() / pivot.norm();
        let q = |x: f64| (x * 1e8).round() as i64;
        self.data
            .iter()
            .flat_map(|a| {
                let b = a * ph;
                [q(b.re), q(b.im)]
            })
            .collect()
    }

    fn max_imaginary(&self) -> f64 {
        self.data.iter().map(|a| a.im.abs()).fold(0.0, f64::max)
    }
}

fn letters(wires: usize) -> Vec<Letter> {
    let mut out = Vec::new();
    for c in 0..wires {
        for t in 0..wires {
            if c != t {
                for k in 1..8 {
                    out.push(Letter::new(c, t, k));
                }
            }
        }
    }
    out
}

struct Frontier {
    seen: HashMap<Vec<i64>, Vec<Letter>>,
    level: Vec<(Block, Vec<Letter>)>,
}

impl Frontier {
    fn new(start: Block) -> Self {
        let mut seen = HashMap::new();
        seen.insert(start.key(), Vec::new());
        Self { seen, level: vec![(start, Vec::new())] }
    }
}

enum Step {
    Found(Vec<Letter>),
    Continue,
    Stop(StopReason),
}

struct Search<'a> {
    name: &'a str,
    data_wires: usize,
    ancillas: Vec<u8>,
    target: &'a GateMatrix,
    alphabet: Vec<(Letter, GateMatrix)>,
    nodes: usize,
    limits: SearchLimits,
    started: Instant,
}

impl Search<'_> {
    fn candidate(&self, word: Vec<Letter>) -> Option<Realization> {
        // Key collisions are possible after quantization; only verified
        // words are accepted.
        let r = Realization {
            name: self.name.to_string(),
            data_wires: self.data_wires,
            ancillas: self.ancillas.clone(),
            sequence: word,
            target: self.target.clone(),
        };
        verify_realization(&r, 1e-10).passed.then_some(r)
    }

    /// Expands `front` by one letter. Forward words grow at the end; backward
    /// words record inverses applied to the target, so the matching suffix is
    /// their reverse.
    fn expand(&mut self, front: &mut Frontier, other: &Frontier, forward: bool) -> Step {
        let mut next = Vec::new();
        for (block, word) in &front.level {
            for (l, m) in &self.alphabet {
                self.nodes += 1;
                if self.nodes > self.limits.max_nodes {
                    return Step::Stop(StopReason::NodeCap);
                }
                if self.nodes.is_multiple_of(4096) && self.started.elapsed().as_secs_f64() > self.limits.max_seconds {
                    return Step::Stop(StopReason::TimeCap);
                }
                let b = block.apply(*l, m);
                if forward {
                    assert!(b.max_imaginary() <= 1e-12, "G words stay real");
                }
                let key = b.key();
                if front.seen.contains_key(&key) {
                    continue;
                }
                let mut w = word.clone();
                w.push(*l);
                if let Some(ow) = other.seen.get(&key) {
                    let (f, bw) = if forward { (&w, ow) } else { (ow, &w) };
                    let mut full = f.clone();
                    full.extend(bw.iter().rev());
                    if let Some(r) = self.candidate(full) {
                        return Step::Found(r.sequence);
                    }
                }
                front.seen.insert(key, w.clone());
                next.push((b, w));
            }
        }
        front.level = next;
        Step::Continue
    }
}

/// Bidirectional breadth-first search over words in `G(p, q)^k` on the data
/// wires plus up to `ancilla_budget` ancillae (every init pattern tried in
/// lexicographic order), returning the first verified word of length at most
/// `max_length`.
pub fn synthesize(
    name: &str,
    target: &GateMatrix,
    data_wires: usize,
    ancilla_budget: usize,
    max_length: usize,
    limits: SearchLimits,
) -> SynthesisOutcome {
    let started = Instant::now();
    let mut nodes = 0;
    let mut patterns = 0;
    let mut reason = StopReason::Exhausted;
    'outer: for m in 0..=ancilla_budget {
        for pattern in 0..1usize << m {
            patterns += 1;
            let ancillas: Vec<u8> = (0..m).map(|k| ((pattern >> (m - 1 - k)) & 1) as u8).collect();
            match search_pattern(name, target, data_wires, &ancillas, max_length, limits, started, &mut nodes) {
                Ok(Some(r)) => return SynthesisOutcome::Found(r),
                Ok(None) => {}
                Err(stop) => {
                    reason = stop;
                    break 'outer;
                }
            }
        }
    }
    SynthesisOutcome::Exhausted(ExhaustionReport {
        target: name.to_string(),
        data_wires,
        ancilla_budget,
        max_length,
        nodes_explored: nodes,
        ancilla_patterns_tried: patterns,
        reason,
    })
}

/// Search with the ancilla init digits fixed.
pub fn synthesize_with_ancillas(
    name: &str,
    target: &GateMatrix,
    data_wires: usize,
    ancillas: &[u8],
    max_length: usize,
    limits: SearchLimits,
) -> SynthesisOutcome {
    let mut nodes = 0;
    let reason = match search_pattern(name, target, data_wires, ancillas, max_length, limits, Instant::now(), &mut nodes) {
        Ok(Some(r)) => return SynthesisOutcome::Found(r),
        Ok(None) => StopReason::Exhausted,
        Err(stop) => stop,
    };
    SynthesisOutcome::Exhausted(ExhaustionReport {
        target: name.to_string(),
        data_wires,
        ancilla_budget: ancillas.len(),
        max_length,
        nodes_explored: nodes,
        ancilla_patterns_tried: 1,
        reason,
    })
}

#[allow(clippy::too_many_arguments)]
fn search_pattern(
    name: &str,
    target: &GateMatrix,
    data_wires: usize,
    ancillas: &[u8],
    max_length: usize,
    limits: SearchLimits,
    started: Instant,
    nodes: &mut usize,
) -> Result<Option<Realization>, StopReason> {
    if target.dim() != 1 << data_wires {
        return Ok(None);
    }
    let m = ancillas.len();
    let wires = data_wires + m;
    let dim = 1usize << wires;
    let anc = basis_index(ancillas.iter().map(|&a| a as usize));
    let cols = 1usize << data_wires;
    let mut start = vec![C64::new(0.0, 0.0); dim * cols];
    let mut goal = vec![C64::new(0.0, 0.0); dim * cols];
    for x in 0..cols {
        start[x * dim + ((x << m) | anc)] = C64::new(1.0, 0.0);
        for y in 0..cols {
            goal[x * dim + ((y << m) | anc)] = target.get(y, x);
        }
    }
    let forward_alphabet: Vec<(Letter, GateMatrix)> = letters(wires).into_iter().map(|l| (l, gate_g_power(l.power as u32))).collect();
    // Letters are applied as inverses on the backward side.
    let inverse_alphabet: Vec<(Letter, GateMatrix)> =
        forward_alphabet.iter().map(|(l, _)| (*l, gate_g_power(l.inverse().power as u32))).collect();
    let mut search = Search { name, data_wires, ancillas: ancillas.to_vec(), target, alphabet: Vec::new(), nodes: *nodes, limits, started };
    let mut fwd = Frontier::new(Block { wires, data: start });
    let mut bwd = Frontier::new(Block { wires, data: goal });
    if fwd.seen.keys().any(|k| bwd.seen.contains_key(k)) {
        if let Some(r) = search.candidate(Vec::new()) {
            return Ok(Some(r));
        }
    }
    let (mut df, mut db) = (0, 0);
    while df + db < max_length && wires >= 2 {
        let step = if df <= db {
            search.alphabet = forward_alphabet.clone();
            df += 1;
            search.expand(&mut fwd, &bwd, true)
        } else {
            search.alphabet = inverse_alphabet.clone();
            db += 1;
            search.expand(&mut bwd, &fwd, false)
        };
        *nodes = search.nodes;
        match step {
            Step::Found(word) => return Ok(search.candidate(word)),
            Step::Stop(reason) => return Err(reason),
            Step::Continue => {}
        }
    }
    Ok(None)
}

fn relabel(word: &[Letter], wires: &[usize]) -> Vec<Letter> {
    word.iter().map(|l| Letter::new(wires[l.control], wires[l.target], l.power)).collect()
}

/// `H = R(π/4)·Z`: a reflection from a `|1⟩`-controlled half turn, then the
/// rotation with an ancilla fixed at `|1⟩`. Both parts are searched for and
/// the composite is verified.
pub fn compose_hadamard(limits: SearchLimits) -> SynthesisOutcome {
    let z = GateMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]);
    let fail = |reason| {
        SynthesisOutcome::Exhausted(ExhaustionReport {
            target: "H".into(),
            data_wires: 1,
            ancilla_budget: 1,
            max_length: 2,
            nodes_explored: 0,
            ancilla_patterns_tried: 0,
            reason,
        })
    };
    let parts = [("Z", z), ("R", rotation(1))];
    let mut found = Vec::new();
    for (name, m) in &parts {
        match synthesize_with_ancillas(name, m, 1, &[1], 2, limits) {
            SynthesisOutcome::Found(r) => found.push(r),
            SynthesisOutcome::Exhausted(_) => return fail(StopReason::Component(name.to_string())),
        }
    }
    let sequence = found.iter().flat_map(|r| r.sequence.clone()).collect();
    let r = Realization { name: "H".into(), data_wires: 1, ancillas: vec![1], sequence, target: hadamard() };
    if verify_realization(&r, 1e-10).passed {
        SynthesisOutcome::Found(r)
    } else {
        fail(StopReason::CompositionFailed)
    }
}

/// Toffoli on `(c1, c2, t)` with one `|0⟩` ancilla `b`: copy `c1 ∧ c2` into
/// `b` by a doubly controlled quarter turn, apply a controlled sign between
/// `b` and `t`, uncompute `b`, then a doubly controlled quarter turn on `t`.
/// The sign cancels the quarter turn's `-1` entry, leaving `X`.
pub fn compose_toffoli(limits: SearchLimits) -> SynthesisOutcome {
    let fail = |reason| {
        SynthesisOutcome::Exhausted(ExhaustionReport {
            target: "TOFFOLI".into(),
            data_wires: 3,
            ancilla_budget: 1,
            max_length: 20,
            nodes_explored: 0,
            ancilla_patterns_tried: 0,
            reason,
        })
    };
    let quarter = multi_controlled(&rotation(2), 2);
    let sign = GateMatrix::block_diagonal(&[GateMatrix::identity(6), GateMatrix::from_real(2, &[-1.0, 0.0, 0.0, -1.0])]);
    let Some(ccr) = synthesize("CCR", &quarter, 3, 0, 5, limits).found() else {
        return fail(StopReason::Component("CCR".into()));
    };
    let Some(cz) = synthesize("CCSIGN", &sign, 3, 0, 5, limits).found() else {
        return fail(StopReason::Component("CCSIGN".into()));
    };
    let (c1, c2, t, b) = (0, 1, 2, 3);
    let copy = relabel(&ccr.sequence, &[c1, c2, b]);
    let mut sequence = copy.clone();
    sequence.extend(relabel(&cz.sequence, &[b, t, c1]));
    sequence.extend(inverse_word(&copy));
    sequence.extend(relabel(&ccr.sequence, &[c1, c2, t]));
    let r = Realization { name: "TOFFOLI".into(), data_wires: 3, ancillas: vec![0], sequence, target: toffoli() };
    if verify_realization(&r, 1e-10).passed {
        SynthesisOutcome::Found(r)
    } else {
        fail(StopReason::CompositionFailed)
    }
}

/// On-disk form of a realization.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealizationFile {
    pub name: String,
    pub data_wires: usize,
    pub ancillas: Vec<u8>,
    /// `[control, target, power]` per letter.
    pub sequence: Vec<[usize; 3]>,
}

impl RealizationFile {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain data serializes")
    }

    /// Parses, checks wires and digits, and verifies at 1e-10.
    pub fn load(text: &str) -> Result<Realization, UniversalError> {
        let file: RealizationFile = toml::from_str(text)?;
        let target = target_by_name(&file.name)?;
        if let Some(&a) = file.ancillas.iter().find(|&&a| a > 1) {
            return Err(UniversalError::BadAncilla(a));
        }
        let n = file.data_wires + file.ancillas.len();
        let sequence: Vec<Letter> = file.sequence.iter().map(|s| Letter::new(s[0], s[1], (s[2] % 8) as u8)).collect();
        for l in &sequence {
            if l.control >= n || l.target >= n || l.control == l.target {
                return Err(UniversalError::BadLetter(*l, n));
            }
        }
        let r = Realization { name: file.name, data_wires: file.data_wires, ancillas: file.ancillas, sequence, target };
        let v = verify_realization(&r, 1e-10);
        if !v.passed {
            return Err(UniversalError::Failed { name: r.name, deviation: v.deviation });
        }
        Ok(r)
    }
}

pub const HADAMARD_FIXTURE: &str = include_str!("../fixtures/hadamard.toml");
pub const TOFFOLI_FIXTURE: &str = include_str!("../fixtures/toffoli.toml");

/// Verified realizations, or why each is unavailable.
#[derive(Debug)]
pub struct KnownRealizations {
    pub hadamard: Result<Realization, UniversalError>,
    pub toffoli: Result<Realization, UniversalError>,
}

impl KnownRealizations {
    pub fn available(&self) -> bool {
        self.hadamard.is_ok() && self.toffoli.is_ok()
    }
}

pub fn known_realizations() -> KnownRealizations {
    KnownRealizations { hadamard: RealizationFile::load(HADAMARD_FIXTURE), toffoli: RealizationFile::load(TOFFOLI_FIXTURE) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gatelib::{gate_g, gate_swap};

    fn quick() -> SearchLimits {
        SearchLimits { max_nodes: 200_000, max_seconds: 30.0 }
    }

    #[test]
    fn empty_word_is_identity() {
        let r = Realization { name: "I".into(), data_wires: 2, ancillas: vec![], sequence: vec![], target: GateMatrix::identity(4) };
        assert!(verify_realization(&r, 1e-12).passed);
    }

    #[test]
    fn single_letter_against_g_and_swap() {
        let mut r =
            Realization { name: "G".into(), data_wires: 2, ancillas: vec![], sequence: vec![Letter::new(0, 1, 1)], target: gate_g() };
        assert!(verify_realization(&r, 1e-12).passed);
        r.target = gate_swap();
        let v = verify_realization(&r, 1e-10);
        assert!(!v.passed);
        assert!(v.deviation > 0.1);
    }

    #[test]
    fn phase_must_be_common() {
        // Z is diag(1, -1): no single phase maps it to the identity.
        let r = Realization {
            name: "Z".into(),
            data_wires: 1,
            ancillas: vec![1],
            sequence: vec![Letter::new(0, 1, 4)],
            target: GateMatrix::identity(2),
        };
        assert!(!verify_realization(&r, 1e-10).passed);
    }

    #[test]
    fn synthesize_g_and_rotation() {
        let r = synthesize("G", &gate_g(), 2, 0, 1, quick()).found().unwrap();
        assert_eq!(r.sequence, vec![Letter::new(0, 1, 1)]);
        let r = synthesize("R", &rotation(1), 1, 1, 1, quick()).found().unwrap();
        assert_eq!(r.ancillas, vec![1]);
        assert_eq!(r.sequence, vec![Letter::new(1, 0, 1)]);
    }

    #[test]
    fn hadamard_found_both_ways() {
        let direct = synthesize("H", &hadamard(), 1, 1, 3, quick()).found().unwrap();
        assert!(verify_realization(&direct, 1e-10).passed);
        let guided = compose_hadamard(quick()).found().unwrap();
        assert!(verify_realization(&guided, 1e-10).passed);
    }

    #[test]
    fn exhaustion_is_reported() {
        match synthesize("H", &hadamard(), 1, 0, 4, quick()) {
            SynthesisOutcome::Exhausted(rep) => assert_eq!(rep.reason, StopReason::Exhausted),
            SynthesisOutcome::Found(_) => panic!("one wire has no letters"),
        }
        let tiny = SearchLimits { max_nodes: 10, max_seconds: 30.0 };
        match synthesize("TOFFOLI", &toffoli(), 3, 0, 6, tiny) {
            SynthesisOutcome::Exhausted(rep) => assert_eq!(rep.reason, StopReason::NodeCap),
            SynthesisOutcome::Found(_) => panic!("cap of 10 nodes"),
        }
    }

    #[test]
    fn search_is_deterministic() {
        let a = synthesize("H", &hadamard(), 1, 1, 3, quick()).found().unwrap();
        let b = synthesize("H", &hadamard(), 1, 1, 3, quick()).found().unwrap();
        assert_eq!(a.sequence, b.sequence);
        assert_eq!(a.ancillas, b.ancillas);
    }

    #[test]
    fn fixtures_load_and_verify() {
        let known = known_realizations();
        assert!(known.available(), "{known:?}");
        assert_eq!(known.toffoli.unwrap().data_wires, 3);
    }

    #[test]
    fn tampered_fixture_rejected() {
        let mut file: RealizationFile = toml::from_str(HADAMARD_FIXTURE).unwrap();
        file.sequence[0][2] = (file.sequence[0][2] + 1) % 8;
        assert!(matches!(RealizationFile::load(&file.to_toml()), Err(UniversalError::Failed { .. })));
    }

    #[test]
    fn fixtures_match_guided_search() {
        let h = compose_hadamard(quick()).found().unwrap();
        assert_eq!(h.to_file().to_toml(), HADAMARD_FIXTURE, "{}", h.to_file().to_toml());
        let t = compose_toffoli(quick()).found().unwrap();
        assert_eq!(t.to_file().to_toml(), TOFFOLI_FIXTURE, "{}", t.to_file().to_toml());
    }

    #[test]
    fn fixture_round_trip() {
        let r = RealizationFile::load(TOFFOLI_FIXTURE).unwrap();
        assert_eq!(r.to_file().to_toml(), TOFFOLI_FIXTURE);
    }
}
