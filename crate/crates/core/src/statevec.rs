//! Dense state vectors over ordered lists of finite-dimensional sites.
//!
//! Basis states are indexed big-endian in site order: site 0 is the most
//! significant digit of the mixed-radix index. Every simulator in this crate
//! sits on top of [`QuantumState`].

use std::collections::HashMap;
use std::hash::{Hash, Hasher};
use std::sync::{LazyLock, Mutex};

use num_complex::Complex64 as C64;
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::gatelib::GateMatrix;

/// Tolerance on `‖M†M − I‖` accepted by [`QuantumState::apply_local_unitary`].
pub const UNITARY_TOL: f64 = 1e-12;
/// Tolerance for state normalization.
pub const NORM_TOL: f64 = 1e-10;

/// Default cap on the number of amplitudes a single state may hold.
pub const DEFAULT_MAX_AMPLITUDES: usize = 1 << 26;
/// Environment variable overriding [`DEFAULT_MAX_AMPLITUDES`].
pub const MAX_AMPLITUDES_ENV: &str = "UPQCA_MAX_AMPLITUDES";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("site layout must contain at least one site")]
    EmptyLayout,
    #[error("site {site} has dimension {dim}; every site needs dimension >= 2")]
    SiteTooSmall { site: usize, dim: usize },
    #[error("layout needs {requested} amplitudes, budget is {budget}")]
    OverBudget { requested: u128, budget: usize },
    #[error("expected {expected} digits, got {got}")]
    DigitCount { expected: usize, got: usize },
    #[error("digit {digit} invalid for site {site} of dimension {dim}")]
    InvalidDigit { site: usize, digit: usize, dim: usize },
    #[error("site index {site} out of range for {count} sites")]
    SiteOutOfRange { site: usize, count: usize },
    #[error("site {site} listed more than once")]
    DuplicateSite { site: usize },
    #[error("empty site subset")]
    EmptySubset,
    #[error("matrix has dimension {got}, sites require {expected}")]
    MatrixDimension { expected: usize, got: usize },
    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },
    #[error("layouts differ: {left:?} vs {right:?}")]
    LayoutMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("amplitude vector has length {got}, layout needs {expected}")]
    AmplitudeCount { expected: usize, got: usize },
    #[error("state norm is {norm}, expected 1")]
    NotNormalized { norm: f64 },
    #[error("shot count must be at least 1")]
    NoShots,
}

/// Reads the amplitude budget, honoring [`MAX_AMPLITUDES_ENV`].
pub fn amplitude_budget() -> usize {
    std::env::var(MAX_AMPLITUDES_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_MAX_AMPLITUDES)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SiteLayout {
    dims: Vec<usize>,
    total_dim: usize,
}

impl SiteLayout {
    pub fn new(dims: Vec<usize>) -> Result<Self, StateError> {
        Self::with_budget(dims, amplitude_budget())
    }

    pub fn with_budget(dims: Vec<usize>, budget: usize) -> Result<Self, StateError> {
        if dims.is_empty() {
            return Err(StateError::EmptyLayout);
        }
        let mut total: u128 = 1;
        for (site, &dim) in dims.iter().enumerate() {
            if dim < 2 {
                return Err(StateError::SiteTooSmall { site, dim });
            }
            total = total.saturating_mul(dim as u128);
        }
        if total > budget as u128 {
            return Err(StateError::OverBudget { requested: total, budget });
        }
        Ok(Self { dims, total_dim: total as usize })
    }

    pub fn qubits(count: usize) -> Result<Self, StateError> {
        Self::new(vec![2; count])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn site_count(&self) -> usize {
        self.dims.len()
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    /// Big-endian strides: `stride[k] = ∏_{l>k} dims[l]`.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub fn index_of(&self, digits: &[usize]) -> Result<usize, StateError> {
        if digits.len() != self.dims.len() {
            return Err(StateError::DigitCount { expected: self.dims.len(), got: digits.len() });
        }
        let mut index = 0;
        for (site, (&digit, &dim)) in digits.iter().zip(&self.dims).enumerate() {
            if digit >= dim {
                return Err(StateError::InvalidDigit { site, digit, dim });
            }
            index = index * dim + digit;
        }
        Ok(index)
    }

    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            digits[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        digits
    }

    fn check_sites(&self, sites: &[usize]) -> Result<(), StateError> {
        if sites.is_empty() {
            return Err(StateError::EmptySubset);
        }
        for (n, &site) in sites.iter().enumerate() {
            if site >= self.dims.len() {
                return Err(StateError::SiteOutOfRange { site, count: self.dims.len() });
            }
            if sites[..n].contains(&site) {
                return Err(StateError::DuplicateSite { site });
            }
        }
        Ok(())
    }
}

/// Offsets of every local sub-index for `sites`, plus the offsets of every
/// outer index (all digits of `sites` zero).
fn split_offsets(layout: &SiteLayout, sites: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let strides = layout.strides();
    let dims = layout.dims();
    let mut local = vec![0usize];
    for &site in sites {
        let mut next = Vec::with_capacity(local.len() * dims[site]);
        for &base in &local {
            for d in 0..dims[site] {
                next.push(base + d * strides[site]);
            }
        }
        local = next;
    }
    let mut outer = vec![0usize];
    for site in 0..dims.len() {
        if sites.contains(&site) {
            continue;
        }
        let mut next = Vec::with_capacity(outer.len() * dims[site]);
        for &base in &outer {
            for d in 0..dims[site] {
                next.push(base + d * strides[site]);
            }
        }
        outer = next;
    }
    (local, outer)
}

static UNITARY_CACHE: LazyLock<Mutex<HashMap<u64, f64>>> = LazyLock::new(Default::default);
const UNITARY_CACHE_CAP: usize = 4096;

fn content_hash(m: &GateMatrix) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    m.dim().hash(&mut h);
    for z in m.entries() {
        z.re.to_bits().hash(&mut h);
        z.im.to_bits().hash(&mut h);
    }
    h.finish()
}

/// Unitarity deviation of `m`, memoized by content hash.
pub fn cached_unitary_deviation(m: &GateMatrix) -> f64 {
    let key = content_hash(m);
    if let Some(&dev) = UNITARY_CACHE.lock().unwrap().get(&key) {
        return dev;
    }
    let dev = m.unitary_deviation();
    let mut cache = UNITARY_CACHE.lock().unwrap();
    if cache.len() >= UNITARY_CACHE_CAP {
        cache.clear();
    }
    cache.insert(key, dev);
    dev
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    layout: SiteLayout,
    amplitudes: Vec<C64>,
}

impl QuantumState {
    /// Computational basis state; `digits` lists one label per site.
    pub fn basis_state(layout: SiteLayout, digits: &[usize]) -> Result<Self, StateError> {
        let index = layout.index_of(digits)?;
        let mut amplitudes = vec![C64::new(0.0, 0.0); layout.total_dim()];
        amplitudes[index] = C64::new(1.0, 0.0);
        Ok(Self { layout, amplitudes })
    }

    /// Wraps an explicit amplitude vector; it must be normalized.
    pub fn from_amplitudes(layout: SiteLayout, amplitudes: Vec<C64>) -> Result<Self, StateError> {
        if amplitudes.len() != layout.total_dim() {
            return Err(StateError::AmplitudeCount { expected: layout.total_dim(), got: amplitudes.len() });
        }
        let state = Self { layout, amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(StateError::NotNormalized { norm });
        }
        Ok(state)
    }

    /// Uniform superposition over every basis state of `layout`.
    pub fn uniform(layout: SiteLayout) -> Self {
        let amp = C64::new(1.0 / (layout.total_dim() as f64).sqrt(), 0.0);
        let amplitudes = vec![amp; layout.total_dim()];
        Self { layout, amplitudes }
    }

    pub fn layout(&self) -> &SiteLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<C64, StateError> {
        Ok(self.amplitudes[self.layout.index_of(digits)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: C64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }

    /// Applies `matrix ⊗ I` with the matrix acting on `sites` (listed in the
    /// matrix's own big-endian order).
    pub fn apply_local_unitary(&mut self, sites: &[usize], matrix: &GateMatrix) -> Result<(), StateError> {
        self.layout.check_sites(sites)?;
        let expected: usize = sites.iter().map(|&s| self.layout.dims()[s]).product();
        if matrix.dim() != expected {
            return Err(StateError::MatrixDimension { expected, got: matrix.dim() });
        }
        let deviation = cached_unitary_deviation(matrix);
        if deviation > UNITARY_TOL {
            return Err(StateError::NotUnitary { deviation });
        }
        self.apply_unchecked(sites, matrix);
        Ok(())
    }

    /// Same as [`apply_local_unitary`](Self::apply_local_unitary) but trusts
    /// the caller on sites, dimension and unitarity.
    pub(crate) fn apply_unchecked(&mut self, sites: &[usize], matrix: &GateMatrix) {
        let (local, outer) = split_offsets(&self.layout, sites);
        let m = local.len();
        let entries = matrix.entries();
        let mut input = vec![C64::new(0.0, 0.0); m];
        for &base in &outer {
            let mut any = false;
            for (slot, &off) in input.iter_mut().zip(&local) {
                *slot = self.amplitudes[base + off];
                any |= slot.re != 0.0 || slot.im != 0.0;
            }
            if !any {
                continue;
            }
            for (row, &off) in local.iter().enumerate() {
                let coeffs = &entries[row * m..(row + 1) * m];
                let mut acc = C64::new(0.0, 0.0);
                for (c, x) in coeffs.iter().zip(&input) {
                    if c.re != 0.0 || c.im != 0.0 {
                        acc += c * x;
                    }
                }
                self.amplitudes[base + off] = acc;
            }
        }
    }

    /// Inner product `⟨self|other⟩`.
    pub fn overlap(&self, other: &QuantumState) -> Result<C64, StateError> {
        if self.layout != other.layout {
            return Err(StateError::LayoutMismatch { left: self.layout.dims().to_vec(), right: other.layout.dims().to_vec() });
        }
        Ok(self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum())
    }

    /// `(equal, |⟨self|other⟩|)` where equality ignores a global phase.
    pub fn equal_up_to_phase(&self, other: &QuantumState, tol: f64) -> Result<(bool, f64), StateError> {
        let mag = self.overlap(other)?.norm();
        Ok((mag >= 1.0 - tol, mag))
    }

    pub fn marginal_distribution(&self, sites: &[usize]) -> Result<Marginal, StateError> {
        self.layout.check_sites(sites)?;
        let dims: Vec<usize> = sites.iter().map(|&s| self.layout.dims()[s]).collect();
        let strides = self.layout.strides();
        let sub = SiteLayout::with_budget(dims.clone(), usize::MAX)?;
        let mut probs = vec![0.0; sub.total_dim()];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            let mut key = 0;
            for (&site, &dim) in sites.iter().zip(&dims) {
                key = key * dim + (index / strides[site]) % dim;
            }
            probs[key] += p;
        }
        Ok(Marginal { sites: sites.to_vec(), dims, probs })
    }

    /// Draws `shots` i.i.d. outcomes on `sites`; deterministic for a given seed.
    pub fn sample(&self, sites: &[usize], shots: usize, seed: u64) -> Result<Vec<Vec<usize>>, StateError> {
        if shots == 0 {
            return Err(StateError::NoShots);
        }
        let marginal = self.marginal_distribution(sites)?;
        Ok(marginal.sample(shots, seed))
    }

    /// Appends a new last site of dimension `dim` prepared in `digit`.
    pub fn push_site(&mut self, dim: usize, digit: usize) -> Result<(), StateError> {
        let mut dims = self.layout.dims().to_vec();
        dims.push(dim);
        let layout = SiteLayout::new(dims)?;
        if digit >= dim {
            return Err(StateError::InvalidDigit { site: layout.site_count() - 1, digit, dim });
        }
        let mut amplitudes = vec![C64::new(0.0, 0.0); layout.total_dim()];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            amplitudes[index * dim + digit] = *amp;
        }
        self.layout = layout;
        self.amplitudes = amplitudes;
        Ok(())
    }

    /// Projects `site` onto `digit` and removes it. Returns the discarded
    /// weight. The caller is responsible for only doing this when the site is
    /// (numerically) in that basis state; the remainder is renormalized.
    pub fn remove_site(&mut self, site: usize, digit: usize) -> Result<f64, StateError> {
        let count = self.layout.site_count();
        if site >= count {
            return Err(StateError::SiteOutOfRange { site, count });
        }
        if count == 1 {
            return Err(StateError::EmptyLayout);
        }
        let dim = self.layout.dims()[site];
        if digit >= dim {
            return Err(StateError::InvalidDigit { site, digit, dim });
        }
        let stride = self.layout.strides()[site];
        let mut dims = self.layout.dims().to_vec();
        dims.remove(site);
        let layout = SiteLayout::with_budget(dims, usize::MAX)?;
        let mut amplitudes = Vec::with_capacity(layout.total_dim());
        let mut kept = 0.0;
        for (index, amp) in self.amplitudes.iter().enumerate() {
            if (index / stride) % dim == digit {
                kept += amp.norm_sqr();
                amplitudes.push(*amp);
            }
        }
        let total = self.norm().powi(2);
        if kept > 0.0 {
            let f = 1.0 / kept.sqrt() * total.sqrt();
            for a in &mut amplitudes {
                *a *= f;
            }
        }
        self.layout = layout;
        self.amplitudes = amplitudes;
        Ok(total - kept)
    }
}

/// Probability table over the digit strings of a subset of sites.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub sites: Vec<usize>,
    pub dims: Vec<usize>,
    pub probs: Vec<f64>,
}

impl Marginal {
    pub fn digits_of(&self, mut key: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            digits[k] = key % self.dims[k];
            key /= self.dims[k];
        }
        digits
    }

    pub fn probability(&self, digits: &[usize]) -> f64 {
        let mut key = 0;
        for (&d, &dim) in digits.iter().zip(&self.dims) {
            if d >= dim {
                return 0.0;
            }
            key = key * dim + d;
        }
        self.probs[key]
    }

    /// `(digits, probability)` for every entry, in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        self.probs.iter().enumerate().map(|(k, &p)| (self.digits_of(k), p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn sample(&self, shots: usize, seed: u64) -> Vec<Vec<usize>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = WeightedIndex::new(&self.probs).expect("marginal has positive mass");
        (0..shots).map(|_| self.digits_of(dist.sample(&mut rng))).collect()
    }

    /// Largest absolute entrywise difference to `other`.
    pub fn max_difference(&self, other: &Marginal) -> f64 {
        if self.dims != other.dims {
            return f64::INFINITY;
        }
        self.probs.iter().zip(&other.probs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Formats digits as a compact string, e.g. `[1, 0]` → `"10"`.
pub fn digit_string(digits: &[usize]) -> String {
    digits.iter().map(|d| char::from_digit(*d as u32, 36).unwrap_or('?')).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gatelib::{gate_g, gate_swap, GateMatrix};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn qubits(n: usize) -> SiteLayout {
        SiteLayout::qubits(n).unwrap()
    }

    #[test]
    fn basis_state_two_qubits() {
        let s = QuantumState::basis_state(qubits(2), &[0, 0]).unwrap();
        assert_eq!(s.amplitudes()[0], C64::new(1.0, 0.0));
        assert!(s.amplitudes()[1..].iter().all(|a| a.norm() == 0.0));
    }

    #[test]
    fn basis_state_mixed_radix() {
        let layout = SiteLayout::new(vec![3, 2, 2]).unwrap();
        let s = QuantumState::basis_state(layout, &[2, 1, 0]).unwrap();
        assert_eq!(s.amplitudes()[10], C64::new(1.0, 0.0));
    }

    #[test]
    fn basis_state_invalid_digit() {
        let err = QuantumState::basis_state(SiteLayout::new(vec![2]).unwrap(), &[2]).unwrap_err();
        assert_eq!(err, StateError::InvalidDigit { site: 0, digit: 2, dim: 2 });
    }

    #[test]
    fn layout_rejects_small_sites_and_budget() {
        assert!(matches!(SiteLayout::new(vec![2, 1]), Err(StateError::SiteTooSmall { site: 1, .. })));
        assert!(matches!(SiteLayout::new(vec![]), Err(StateError::EmptyLayout)));
        assert!(matches!(SiteLayout::with_budget(vec![2; 5], 16), Err(StateError::OverBudget { .. })));
    }

    #[test]
    fn swap_moves_basis_state() {
        let mut s = QuantumState::basis_state(qubits(2), &[0, 1]).unwrap();
        s.apply_local_unitary(&[0, 1], &gate_swap()).unwrap();
        assert_eq!(s.amplitude(&[1, 0]).unwrap(), C64::new(1.0, 0.0));
    }

    #[test]
    fn g_on_control_one() {
        let mut s = QuantumState::basis_state(qubits(2), &[1, 0]).unwrap();
        s.apply_local_unitary(&[0, 1], &gate_g()).unwrap();
        assert!((s.amplitude(&[1, 0]).unwrap() - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((s.amplitude(&[1, 1]).unwrap() - C64::new(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_is_noop_and_site_order_matters() {
        let mut s = QuantumState::uniform(qubits(3));
        let before = s.clone();
        s.apply_local_unitary(&[2, 0], &GateMatrix::identity(4)).unwrap();
        assert_eq!(s, before);

        // G with control on site 1, target on site 0.
        let mut s = QuantumState::basis_state(qubits(2), &[0, 1]).unwrap();
        s.apply_local_unitary(&[1, 0], &gate_g()).unwrap();
        assert!((s.amplitude(&[1, 1]).unwrap().re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn apply_rejects_bad_input() {
        let mut s = QuantumState::basis_state(qubits(2), &[0, 0]).unwrap();
        assert!(matches!(s.apply_local_unitary(&[0, 0], &gate_swap()), Err(StateError::DuplicateSite { site: 0 })));
        let bad = GateMatrix::from_real(2, &[1.0, 1.0, 0.0, 1.0]);
        match s.apply_local_unitary(&[0], &bad) {
            Err(StateError::NotUnitary { deviation }) => assert!(deviation > 0.5),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(s.apply_local_unitary(&[0], &gate_swap()), Err(StateError::MatrixDimension { .. })));
    }

    #[test]
    fn overlap_cases() {
        let a = QuantumState::basis_state(qubits(1), &[0]).unwrap();
        let b = QuantumState::basis_state(qubits(1), &[1]).unwrap();
        assert_eq!(a.overlap(&a).unwrap(), C64::new(1.0, 0.0));
        assert_eq!(a.overlap(&b).unwrap(), C64::new(0.0, 0.0));
        assert!(!a.equal_up_to_phase(&b, 1e-10).unwrap().0);
        let mut c = QuantumState::uniform(qubits(2));
        let d = c.clone();
        c.scale(C64::from_polar(1.0, 1.234));
        assert!(c.equal_up_to_phase(&d, 1e-12).unwrap().0);
        assert!(matches!(a.overlap(&c), Err(StateError::LayoutMismatch { .. })));
    }

    #[test]
    fn marginals() {
        let s = QuantumState::basis_state(qubits(2), &[0, 1]).unwrap();
        assert_eq!(s.marginal_distribution(&[1]).unwrap().probability(&[1]), 1.0);

        let h = FRAC_1_SQRT_2;
        let bell =
            QuantumState::from_amplitudes(qubits(2), vec![C64::new(h, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(h, 0.0)])
                .unwrap();
        let m = bell.marginal_distribution(&[0]).unwrap();
        assert!((m.probability(&[0]) - 0.5).abs() < 1e-15);
        assert!((m.probability(&[1]) - 0.5).abs() < 1e-15);

        let mut g = QuantumState::basis_state(qubits(2), &[1, 0]).unwrap();
        g.apply_local_unitary(&[0, 1], &gate_g()).unwrap();
        let m = g.marginal_distribution(&[1]).unwrap();
        assert!((m.probability(&[0]) - 0.5).abs() < 1e-15);
        assert!((m.total() - 1.0).abs() < 1e-10);

        assert!(matches!(g.marginal_distribution(&[]), Err(StateError::EmptySubset)));
    }

    #[test]
    fn sampling() {
        let zero = QuantumState::basis_state(qubits(1), &[0]).unwrap();
        assert_eq!(zero.sample(&[0], 5, 1).unwrap(), vec![vec![0]; 5]);
        assert!(matches!(zero.sample(&[0], 0, 1), Err(StateError::NoShots)));

        let plus = QuantumState::uniform(qubits(1));
        let shots = plus.sample(&[0], 10_000, 42).unwrap();
        let ones = shots.iter().filter(|s| s[0] == 1).count() as f64 / 10_000.0;
        // Binomial standard deviation is 0.005; 0.05 is ten sigma.
        assert!((ones - 0.5).abs() < 0.05);
        assert_eq!(shots, plus.sample(&[0], 10_000, 42).unwrap());
    }

    #[test]
    fn push_and_remove_sites() {
        let mut s = QuantumState::basis_state(qubits(1), &[1]).unwrap();
        s.push_site(3, 2).unwrap();
        assert_eq!(s.layout().dims(), &[2, 3]);
        assert_eq!(s.amplitude(&[1, 2]).unwrap(), C64::new(1.0, 0.0));
        let discarded = s.remove_site(0, 1).unwrap();
        assert_eq!(discarded, 0.0);
        assert_eq!(s.layout().dims(), &[3]);
        assert_eq!(s.amplitude(&[2]).unwrap(), C64::new(1.0, 0.0));
    }
}
