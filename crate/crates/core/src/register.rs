//! Qubit bands addressed by integer slot, and a factored register that only
//! stores the slots that can differ from `|0⟩`.
//!
//! [`SlotRegister`] keeps three kinds of slot: absent (exactly `|0⟩`),
//! classical `|1⟩`, and quantum (a site of an owned [`QuantumState`]). Swaps
//! are pure relabelings, controlled gates with a classical control collapse to
//! single-qubit updates, and sites that return to a basis state are factored
//! back out. For the `G`/`Swap` dynamics used here this is exact and keeps the
//! dense part of the state as small as the entanglement allows.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use crate::gatelib::{gate_g_power, rotation, GateMatrix};
use crate::statevec::{Marginal, QuantumState, SiteLayout, StateError};

/// Weight below which a branch of a site is treated as absent.
pub const PRUNE_WEIGHT: f64 = 1e-20;

/// Which slot pairs exist for a band.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry {
    /// Slots `lo..=hi`; pairs leaving the interval are dropped.
    Open { lo: i64, hi: i64 },
    /// Slots `lo..lo+len`, wrapping around.
    Periodic { lo: i64, len: i64 },
    /// Every integer slot; all but finitely many hold `|0⟩`.
    Unbounded,
}

impl Geometry {
    /// Canonical representative of `slot`, or `None` if it lies outside an
    /// open interval.
    pub fn normalize(&self, slot: i64) -> Option<i64> {
        match *self {
            Geometry::Open { lo, hi } => (lo..=hi).contains(&slot).then_some(slot),
            Geometry::Periodic { lo, len } => Some(lo + (slot - lo).rem_euclid(len)),
            Geometry::Unbounded => Some(slot),
        }
    }
}

/// A line of qubits acted on by slot-addressed two-qubit gates.
pub trait QubitBand {
    fn geometry(&self) -> Geometry;
    /// Superset of the slots that may hold something other than `|0⟩`.
    fn live_slots(&self) -> Vec<i64>;
    fn swap(&mut self, a: i64, b: i64);
    /// `G^power` with `control` first.
    fn controlled_g(&mut self, control: i64, target: i64, power: u32);
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    One,
    Site(usize),
}

#[derive(Debug, Clone)]
pub struct SlotRegister {
    geometry: Geometry,
    slots: BTreeMap<i64, Slot>,
    sites: Vec<i64>,
    state: Option<QuantumState>,
    phase: C64,
    discarded: f64,
}

impl SlotRegister {
    /// All slots `|0⟩`. Open geometries are not supported; the register is
    /// meant for unbounded lines and rings.
    pub fn new(geometry: Geometry) -> Self {
        assert!(!matches!(geometry, Geometry::Open { .. }), "slot registers are unbounded or periodic");
        Self { geometry, slots: BTreeMap::new(), sites: Vec::new(), state: None, phase: C64::new(1.0, 0.0), discarded: 0.0 }
    }

    /// Basis state with the listed slots set to `1`.
    pub fn from_ones(geometry: Geometry, ones: impl IntoIterator<Item = i64>) -> Self {
        let mut reg = Self::new(geometry);
        for s in ones {
            let s = reg.norm(s);
            reg.slots.insert(s, Slot::One);
        }
        reg
    }

    /// Places `state` (one qubit per listed slot, in order) on a register
    /// that is otherwise `|0⟩`.
    pub fn from_state(geometry: Geometry, slots: &[i64], state: QuantumState) -> Result<Self, StateError> {
        if state.layout().dims().iter().any(|&d| d != 2) || state.layout().site_count() != slots.len() {
            return Err(StateError::LayoutMismatch { left: state.layout().dims().to_vec(), right: vec![2; slots.len()] });
        }
        let mut reg = Self::new(geometry);
        for (site, &s) in slots.iter().enumerate() {
            let s = reg.norm(s);
            if reg.slots.insert(s, Slot::Site(site)).is_some() {
                return Err(StateError::DuplicateSite { site });
            }
            reg.sites.push(s);
        }
        reg.state = Some(state);
        for &s in slots {
            reg.compact(s);
        }
        Ok(reg)
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn norm(&self, slot: i64) -> i64 {
        self.geometry.normalize(slot).expect("register geometry is never open")
    }

    /// Number of slots held in the dense part.
    pub fn quantum_sites(&self) -> usize {
        self.sites.len()
    }

    /// Total weight pruned by factoring sites back out.
    pub fn discarded_weight(&self) -> f64 {
        self.discarded
    }

    /// `(slot, is_quantum)` for every slot that is not exactly `|0⟩`.
    pub fn occupied(&self) -> Vec<(i64, bool)> {
        self.slots.iter().map(|(&s, v)| (s, matches!(v, Slot::Site(_)))).collect()
    }

    fn promote(&mut self, slot: i64) -> Result<usize, StateError> {
        let digit = match self.slots.get(&slot) {
            Some(Slot::Site(site)) => return Ok(*site),
            Some(Slot::One) => 1,
            None => 0,
        };
        let site = self.sites.len();
        match &mut self.state {
            Some(state) => state.push_site(2, digit)?,
            None => {
                let mut st = QuantumState::basis_state(SiteLayout::qubits(1)?, &[digit])?;
                st.scale(self.phase);
                self.phase = C64::new(1.0, 0.0);
                self.state = Some(st);
            }
        }
        self.sites.push(slot);
        self.slots.insert(slot, Slot::Site(site));
        Ok(site)
    }

    /// Factors `slot` out of the dense part if it is in a basis state.
    fn compact(&mut self, slot: i64) {
        let Some(Slot::Site(site)) = self.slots.get(&slot).copied() else {
            return;
        };
        let state = self.state.as_mut().expect("quantum slot implies a state");
        let m = state.marginal_distribution(&[site]).expect("site in range");
        let digit = if m.probs[1] <= PRUNE_WEIGHT {
            0
        } else if m.probs[0] <= PRUNE_WEIGHT {
            1
        } else {
            return;
        };
        if self.sites.len() == 1 {
            let amp = state.amplitudes()[digit];
            self.discarded += 1.0 - amp.norm_sqr();
            self.phase *= amp / amp.norm();
            self.state = None;
        } else {
            self.discarded += state.remove_site(site, digit).expect("site in range");
            for v in self.slots.values_mut() {
                if let Slot::Site(s) = v {
                    if *s > site {
                        *s -= 1;
                    }
                }
            }
        }
        self.sites.remove(site);
        if digit == 1 {
            self.slots.insert(slot, Slot::One);
        } else {
            self.slots.remove(&slot);
        }
    }

    /// Applies a single-qubit unitary to `slot`.
    pub fn apply_single(&mut self, slot: i64, m: &GateMatrix) -> Result<(), StateError> {
        let slot = self.norm(slot);
        let site = self.promote(slot)?;
        self.state.as_mut().unwrap().apply_local_unitary(&[site], m)?;
        self.compact(slot);
        Ok(())
    }

    /// Applies a two-qubit unitary to `(a, b)`, `a` most significant.
    pub fn apply_pair(&mut self, a: i64, b: i64, m: &GateMatrix) -> Result<(), StateError> {
        let (a, b) = (self.norm(a), self.norm(b));
        let sa = self.promote(a)?;
        let sb = self.promote(b)?;
        self.state.as_mut().unwrap().apply_local_unitary(&[sa, sb], m)?;
        self.compact(a);
        self.compact(b);
        Ok(())
    }

    /// Exact amplitude state over `slots` (in order). Every slot not listed
    /// must be `|0⟩`.
    pub fn to_state(&self, slots: &[i64]) -> Result<QuantumState, StateError> {
        let slots: Vec<i64> = slots.iter().map(|&s| self.norm(s)).collect();
        for &s in self.slots.keys() {
            if !slots.contains(&s) {
                return Err(StateError::SiteOutOfRange { site: s.unsigned_abs() as usize, count: slots.len() });
            }
        }
        let layout = SiteLayout::qubits(slots.len())?;
        let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
        let n = slots.len();
        let mut base = 0usize;
        for (k, s) in slots.iter().enumerate() {
            if matches!(self.slots.get(s), Some(Slot::One)) {
                base |= 1 << (n - 1 - k);
            }
        }
        match &self.state {
            None => amps[base] = self.phase,
            Some(state) => {
                let positions: Vec<usize> = self.sites.iter().map(|s| slots.iter().position(|x| x == s).expect("checked above")).collect();
                let q = positions.len();
                for (index, amp) in state.amplitudes().iter().enumerate() {
                    let mut full = base;
                    for (k, &pos) in positions.iter().enumerate() {
                        if (index >> (q - 1 - k)) & 1 == 1 {
                            full |= 1 << (n - 1 - pos);
                        }
                    }
                    amps[full] = *amp * self.phase;
                }
            }
        }
        QuantumState::from_amplitudes(layout, amps)
    }

    /// `⟨self|other⟩` over the union of both registers' occupied slots.
    pub fn overlap(&self, other: &SlotRegister) -> Result<C64, StateError> {
        let mut union: Vec<i64> = self.slots.keys().chain(other.slots.keys()).copied().collect();
        union.sort_unstable();
        union.dedup();
        // Slots classical in both registers must agree; they do not need
        // to enter the dense comparison.
        let mut dense = Vec::new();
        for &s in &union {
            let a = self.slots.get(&s);
            let b = other.slots.get(&s);
            match (a, b) {
                (Some(Slot::One), Some(Slot::One)) => {}
                (None | Some(Slot::One), None | Some(Slot::One)) => return Ok(C64::new(0.0, 0.0)),
                _ => dense.push(s),
            }
        }
        let phase = self.phase.conj() * other.phase;
        if dense.is_empty() {
            return Ok(phase);
        }
        let a = self.restricted(&dense)?;
        let b = other.restricted(&dense)?;
        a.overlap(&b)
    }

    /// Dense state over `slots`, assuming every other slot is classical.
    fn restricted(&self, slots: &[i64]) -> Result<QuantumState, StateError> {
        let mut tmp = self.clone();
        let keep: Vec<i64> = tmp.slots.keys().copied().filter(|s| !slots.contains(s)).collect();
        for s in keep {
            if let Some(Slot::Site(_)) = tmp.slots.get(&s) {
                return Err(StateError::SiteOutOfRange { site: s.unsigned_abs() as usize, count: slots.len() });
            }
            tmp.slots.remove(&s);
        }
        tmp.to_state(slots)
    }

    /// Marginal distribution over `slots` (in order).
    pub fn marginal(&self, slots: &[i64]) -> Result<Marginal, StateError> {
        let slots: Vec<i64> = slots.iter().map(|&s| self.norm(s)).collect();
        let layout = SiteLayout::qubits(slots.len())?;
        let mut probs = vec![0.0; layout.total_dim()];
        let n = slots.len();
        let mut base = 0usize;
        let mut quantum = Vec::new();
        for (k, s) in slots.iter().enumerate() {
            match self.slots.get(s) {
                Some(Slot::One) => base |= 1 << (n - 1 - k),
                Some(Slot::Site(site)) => quantum.push((*site, k)),
                None => {}
            }
        }
        if quantum.is_empty() {
            probs[base] = 1.0;
        } else {
            let state = self.state.as_ref().unwrap();
            let sites: Vec<usize> = quantum.iter().map(|q| q.0).collect();
            let m = state.marginal_distribution(&sites)?;
            let q = sites.len();
            for (key, p) in m.probs.iter().enumerate() {
                let mut full = base;
                for (j, &(_, k)) in quantum.iter().enumerate() {
                    if (key >> (q - 1 - j)) & 1 == 1 {
                        full |= 1 << (n - 1 - k);
                    }
                }
                probs[full] += p;
            }
        }
        Ok(Marginal { sites: (0..n).collect(), dims: vec![2; n], probs })
    }

    /// The same content on another geometry, with every occupied slot moved
    /// through `map`.
    pub fn relabel(&self, geometry: Geometry, map: impl Fn(i64) -> i64) -> SlotRegister {
        let mut out = self.clone();
        out.geometry = geometry;
        out.slots = self.slots.iter().map(|(&s, &v)| (out.norm(map(s)), v)).collect();
        assert_eq!(out.slots.len(), self.slots.len(), "relabeling must be injective");
        for v in out.slots.iter() {
            if let (&s, Slot::Site(site)) = v {
                out.sites[*site] = s;
            }
        }
        out
    }

    pub fn norm_deviation(&self) -> f64 {
        match &self.state {
            Some(s) => (s.norm() * self.phase.norm() - 1.0).abs(),
            None => (self.phase.norm() - 1.0).abs(),
        }
    }
}

impl QubitBand for SlotRegister {
    fn geometry(&self) -> Geometry {
        self.geometry
    }

    fn live_slots(&self) -> Vec<i64> {
        self.slots.keys().copied().collect()
    }

    fn swap(&mut self, a: i64, b: i64) {
        let (a, b) = (self.norm(a), self.norm(b));
        if a == b {
            return;
        }
        let va = self.slots.remove(&a);
        let vb = self.slots.remove(&b);
        for (slot, v) in [(b, va), (a, vb)] {
            if let Some(v) = v {
                if let Slot::Site(site) = v {
                    self.sites[site] = slot;
                }
                self.slots.insert(slot, v);
            }
        }
    }

    fn controlled_g(&mut self, control: i64, target: i64, power: u32) {
        let (control, target) = (self.norm(control), self.norm(target));
        if power.is_multiple_of(8) {
            return;
        }
        match self.slots.get(&control).copied() {
            None => {}
            Some(Slot::One) => {
                self.apply_single(target, &rotation(power)).expect("qubit rotation");
            }
            Some(Slot::Site(_)) => {
                self.apply_pair(control, target, &gate_g_power(power)).expect("controlled rotation");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gatelib::{gate_g, gate_swap};

    #[test]
    fn swap_is_relabel() {
        let mut r = SlotRegister::from_ones(Geometry::Unbounded, [3]);
        r.swap(3, 4);
        assert_eq!(r.occupied(), vec![(4, false)]);
        assert_eq!(r.quantum_sites(), 0);
    }

    #[test]
    fn g_with_classical_control_then_inverse_factors_out() {
        let mut r = SlotRegister::from_ones(Geometry::Unbounded, [0]);
        r.controlled_g(0, 1, 1);
        assert_eq!(r.quantum_sites(), 1);
        let m = r.marginal(&[0, 1]).unwrap();
        assert!((m.probability(&[1, 1]) - 0.5).abs() < 1e-15);
        r.controlled_g(0, 1, 7);
        assert_eq!(r.quantum_sites(), 0);
        assert_eq!(r.occupied(), vec![(0, false)]);
        r.controlled_g(0, 1, 2);
        assert_eq!(r.occupied(), vec![(0, false), (1, false)]);
        let expect = SlotRegister::from_ones(Geometry::Unbounded, [0, 1]);
        assert!((r.overlap(&expect).unwrap() - C64::new(1.0, 0.0)).norm() < 1e-12);
        // A second flip picks up the sign of the rotation.
        r.controlled_g(0, 1, 2);
        assert_eq!(r.occupied(), vec![(0, false)]);
        let expect = SlotRegister::from_ones(Geometry::Unbounded, [0]);
        assert!((r.overlap(&expect).unwrap() + C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn matches_dense_simulation() {
        let slots = [0i64, 1, 2];
        let init = QuantumState::uniform(SiteLayout::qubits(3).unwrap());
        let mut reg = SlotRegister::from_state(Geometry::Unbounded, &slots, init.clone()).unwrap();
        let mut dense = init;
        reg.controlled_g(0, 2, 1);
        dense.apply_local_unitary(&[0, 2], &gate_g()).unwrap();
        reg.swap(1, 2);
        dense.apply_local_unitary(&[1, 2], &gate_swap()).unwrap();
        reg.controlled_g(2, 0, 3);
        dense.apply_local_unitary(&[2, 0], &gate_g_power(3)).unwrap();
        let got = reg.to_state(&slots).unwrap();
        assert!((got.overlap(&dense).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ring_wraps_slots() {
        let mut r = SlotRegister::from_ones(Geometry::Periodic { lo: 0, len: 6 }, [5]);
        r.swap(5, 6);
        assert_eq!(r.occupied(), vec![(0, false)]);
    }

    #[test]
    fn overlap_detects_classical_mismatch() {
        let a = SlotRegister::from_ones(Geometry::Unbounded, [0]);
        let b = SlotRegister::from_ones(Geometry::Unbounded, [1]);
        assert_eq!(a.overlap(&b).unwrap(), C64::new(0.0, 0.0));
        assert_eq!(a.overlap(&a).unwrap(), C64::new(1.0, 0.0));
    }
}
