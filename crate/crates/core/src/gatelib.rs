//! Constant matrices used by every machine level: the controlled π/4
//! rotation `G`, `Swap`, their powers, and the 12-dimensional cell unitary.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64 as C64;

/// `1/√2`, computed once so that every construction of `G` is bit-identical.
pub const INV_SQRT2: f64 = FRAC_1_SQRT_2;

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct GateMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl fmt::Debug for GateMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "GateMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self.get(r, c);
                    if z.im == 0.0 {
                        format!("{:+.4}", z.re)
                    } else {
                        format!("{:+.4}{:+.4}i", z.re, z.im)
                    }
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl GateMatrix {
    pub fn new(dim: usize, entries: Vec<C64>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must be dim²");
        Self { dim, entries }
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Self {
        Self::new(dim, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![C64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            entries[k * dim + k] = C64::new(1.0, 0.0);
        }
        Self { dim, entries }
    }

    /// Block-diagonal matrix with `blocks` along the diagonal.
    pub fn block_diagonal(blocks: &[GateMatrix]) -> Self {
        let dim = blocks.iter().map(|b| b.dim).sum();
        let mut out = vec![C64::new(0.0, 0.0); dim * dim];
        let mut offset = 0;
        for b in blocks {
            for r in 0..b.dim {
                for c in 0..b.dim {
                    out[(offset + r) * dim + offset + c] = b.get(r, c);
                }
            }
            offset += b.dim;
        }
        Self { dim, entries: out }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    /// `self · rhs`
    pub fn mul(&self, rhs: &GateMatrix) -> GateMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for k in 0..n {
                let a = self.entries[r * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for c in 0..n {
                    out[r * n + c] += a * rhs.entries[k * n + c];
                }
            }
        }
        GateMatrix { dim: n, entries: out }
    }

    pub fn adjoint(&self) -> GateMatrix {
        let n = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in 0..n {
                out[c * n + r] = self.entries[r * n + c].conj();
            }
        }
        GateMatrix { dim: n, entries: out }
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &GateMatrix) -> GateMatrix {
        let (a, b) = (self.dim, rhs.dim);
        let n = a * b;
        let mut out = vec![C64::new(0.0, 0.0); n * n];
        for r1 in 0..a {
            for c1 in 0..a {
                let x = self.get(r1, c1);
                if x.re == 0.0 && x.im == 0.0 {
                    continue;
                }
                for r2 in 0..b {
                    for c2 in 0..b {
                        out[(r1 * b + r2) * n + c1 * b + c2] = x * rhs.get(r2, c2);
                    }
                }
            }
        }
        GateMatrix { dim: n, entries: out }
    }

    /// Largest entrywise deviation of `M†M` from the identity.
    pub fn unitary_deviation(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..n {
                    acc += self.entries[k * n + r].conj() * self.entries[k * n + c];
                }
                let target = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((acc - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitary_deviation() <= tol
    }

    /// Largest entrywise distance to `other`.
    pub fn max_distance(&self, other: &GateMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries.iter().zip(&other.entries).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// Largest imaginary part magnitude over all entries.
    pub fn max_imaginary(&self) -> f64 {
        self.entries.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim).map(|r| (0..self.dim).map(|c| self.get(r, c) * v[c]).sum()).collect()
    }
}

/// The controlled π/4 rotation, control first:
///
/// ```text
/// 1 0  0    0
/// 0 1  0    0
/// 0 0 1/√2 -1/√2
/// 0 0 1/√2  1/√2
/// ```
pub fn gate_g() -> GateMatrix {
    let s = INV_SQRT2;
    GateMatrix::from_real(4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, s, -s, 0.0, 0.0, s, s])
}

pub fn gate_swap() -> GateMatrix {
    GateMatrix::from_real(4, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
}

/// Single-qubit rotation by `k·π/4`, the lower block of `G^k`. Values for
/// every `k mod 8` are exact multiples of `1/√2`.
pub fn rotation(k: u32) -> GateMatrix {
    let s = INV_SQRT2;
    let (c, sn) = match k % 8 {
        0 => (1.0, 0.0),
        1 => (s, s),
        2 => (0.0, 1.0),
        3 => (-s, s),
        4 => (-1.0, 0.0),
        5 => (-s, -s),
        6 => (0.0, -1.0),
        _ => (s, -s),
    };
    GateMatrix::from_real(2, &[c, -sn, sn, c])
}

/// `G^k` built from the exact rotation table rather than repeated products.
pub fn gate_g_power(k: u32) -> GateMatrix {
    GateMatrix::block_diagonal(&[GateMatrix::identity(2), rotation(k)])
}

/// `m` multiplied by itself `k` times; `k = 0` gives the identity.
pub fn matrix_power(m: &GateMatrix, k: u32) -> GateMatrix {
    let mut result = GateMatrix::identity(m.dim());
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = result.mul(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.mul(&base);
        }
    }
    result
}

/// The 12×12 cell unitary acting on `t ⊗ q_even ⊗ q_odd`: identity for
/// `t = 0`, `Swap` for `t = 1`, `G` for `t = 2`. Basis index is
/// `4·t + 2·q_even + q_odd`.
pub fn cell_unitary() -> GateMatrix {
    GateMatrix::block_diagonal(&[GateMatrix::identity(4), gate_swap(), gate_g()])
}

/// Dimension of one autonomous cell.
pub const CELL_DIM: usize = 12;

#[cfg(test)]
mod tests {
    use super::*;

    fn col(m: &GateMatrix, c: usize) -> Vec<C64> {
        (0..m.dim()).map(|r| m.get(r, c)).collect()
    }

    #[test]
    fn g_columns() {
        let g = gate_g();
        let s = INV_SQRT2;
        assert_eq!(col(&g, 0), vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert_eq!(col(&g, 1), vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)]);
        assert_eq!(col(&g, 2), vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0), C64::new(s, 0.0)]);
        assert_eq!(col(&g, 3), vec![C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0)]);
        assert_eq!(gate_g(), gate_g());
    }

    #[test]
    fn swap_properties() {
        let sw = gate_swap();
        assert_eq!(sw.get(2, 1), C64::new(1.0, 0.0));
        assert_eq!(sw.get(3, 3), C64::new(1.0, 0.0));
        assert!(sw.mul(&sw).max_distance(&GateMatrix::identity(4)) == 0.0);
    }

    #[test]
    fn powers_of_g() {
        let g = gate_g();
        assert_eq!(matrix_power(&g, 0), GateMatrix::identity(4));
        assert!(matrix_power(&g, 8).max_distance(&GateMatrix::identity(4)) < 1e-12);
        let g4 = matrix_power(&g, 4);
        // With control 1: |0> -> -|0>, |1> -> -|1>; G^2 flips with a sign.
        assert!((g4.get(2, 2) + C64::new(1.0, 0.0)).norm() < 1e-12);
        let g2 = matrix_power(&g, 2);
        assert!((g2.get(3, 2) - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((g2.get(2, 3) + C64::new(1.0, 0.0)).norm() < 1e-12);
        for k in 0..16 {
            assert!(matrix_power(&g, k).max_distance(&gate_g_power(k)) < 1e-12, "k = {k}");
        }
    }

    #[test]
    fn cell_unitary_blocks() {
        let u = cell_unitary();
        assert_eq!(u.dim(), CELL_DIM);
        assert!(u.is_unitary(1e-12));
        // t=0: |0,1,0> fixed.
        assert_eq!(u.get(2, 2), C64::new(1.0, 0.0));
        // t=1: |1,0,1> -> |1,1,0>.
        assert_eq!(u.get(4 + 2, 4 + 1), C64::new(1.0, 0.0));
        // t=2: |2,1,0> -> |2>(|10>+|11>)/√2.
        assert_eq!(u.get(8 + 2, 8 + 2), C64::new(INV_SQRT2, 0.0));
        assert_eq!(u.get(8 + 3, 8 + 2), C64::new(INV_SQRT2, 0.0));
        for r in 0..12 {
            for c in 0..12 {
                if r / 4 != c / 4 {
                    assert_eq!(u.get(r, c), C64::new(0.0, 0.0));
                }
            }
        }
        assert!(matrix_power(&u, 8).max_distance(&GateMatrix::identity(12)) < 1e-12);
        assert!(matrix_power(&u, 24).max_distance(&GateMatrix::identity(12)) < 1e-12);
    }

    #[test]
    fn kron_and_adjoint() {
        let g = gate_g();
        assert!(g.mul(&g.adjoint()).max_distance(&GateMatrix::identity(4)) < 1e-15);
        let k = rotation(1).kron(&GateMatrix::identity(2));
        assert_eq!(k.dim(), 4);
        assert!(k.is_unitary(1e-12));
    }
}
