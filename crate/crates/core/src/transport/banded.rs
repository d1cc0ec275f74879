//! LU factorization with partial pivoting for complex banded matrices.
//!
//! Storage follows the LAPACK `gbtrf` layout: column-major with
//! `2·kl + ku + 1` rows per column, the top `kl` rows reserved for the fill-in
//! produced by row interchanges. Element `(i, j)` lives in band row
//! `kl + ku + i − j` of column `j`.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<Complex64>,
}

/// Returned when a pivot vanishes relative to the largest entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Singular {
    pub column: usize,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            ldab,
            ab: vec![ZERO; ldab * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i);
        j * self.ldab + (self.kl + self.ku + i - j)
    }

    /// Sets entry `(i, j)`; must lie within the `kl`/`ku` band.
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        assert!(i <= j + self.kl && j <= i + self.ku, "({i}, {j}) outside band");
        let k = self.idx(i, j);
        self.ab[k] = value;
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        if i > j + self.kl || j > i + self.ku {
            return ZERO;
        }
        self.ab[self.idx(i, j)]
    }

    /// Factorizes in place and returns the factors.
    pub fn factorize(mut self) -> Result<BandedLu, Singular> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let scale = self.ab.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let tiny = scale * f64::EPSILON * n.max(1) as f64;
        let mut pivots = vec![0usize; n];

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);

            let mut p = k;
            let mut best = self.ab[self.idx(k, k)].norm();
            for i in k + 1..=last_row {
                let v = self.ab[self.idx(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best <= tiny || best == 0.0 {
                return Err(Singular { column: k });
            }
            pivots[k] = p;
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.ab.swap(a, b);
                }
            }

            let inv_pivot = self.ab[self.idx(k, k)].inv();
            for i in k + 1..=last_row {
                let ik = self.idx(i, k);
                let l = self.ab[ik] * inv_pivot;
                self.ab[ik] = l;
                if l == ZERO {
                    continue;
                }
                for j in k + 1..=last_col {
                    let kj = self.ab[self.idx(k, j)];
                    let ij = self.idx(i, j);
                    self.ab[ij] -= l * kj;
                }
            }
        }
        Ok(BandedLu {
            matrix: self,
            pivots,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    matrix: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let m = &self.matrix;
        let (n, kl, ku) = (m.n, m.kl, m.ku);
        assert_eq!(b.len(), n, "right-hand side length");

        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk == ZERO {
                continue;
            }
            for i in k + 1..=(k + kl).min(n - 1) {
                b[i] -= m.ab[m.idx(i, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..=(i + kl + ku).min(n - 1) {
                acc -= m.ab[m.idx(i, j)] * b[j];
            }
            b[i] = acc / m.ab[m.idx(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_tridiagonal_requiring_pivoting() {
        // Zero leading entry forces a row interchange.
        let mut a = BandedMatrix::zeros(3, 1, 1);
        a.set(0, 0, c(0.0, 0.0));
        a.set(0, 1, c(1.0, 0.0));
        a.set(1, 0, c(2.0, 0.0));
        a.set(1, 1, c(1.0, 1.0));
        a.set(1, 2, c(0.0, -1.0));
        a.set(2, 1, c(3.0, 0.0));
        a.set(2, 2, c(1.0, 0.0));
        let x_true = [c(1.0, -1.0), c(0.5, 2.0), c(-3.0, 0.25)];
        let mut b: Vec<Complex64> = (0..3)
            .map(|i| (0..3).map(|j| a.get(i, j) * x_true[j]).sum())
            .collect();
        a.factorize().unwrap().solve_in_place(&mut b);
        for (x, t) in b.iter().zip(&x_true) {
            assert!((x - t).norm() < 1e-14);
        }
    }

    #[test]
    fn detects_exact_singularity() {
        let mut a = BandedMatrix::zeros(2, 1, 1);
        a.set(0, 0, c(1.0, 0.0));
        a.set(0, 1, c(1.0, 0.0));
        a.set(1, 0, c(1.0, 0.0));
        a.set(1, 1, c(1.0, 0.0));
        assert_eq!(a.factorize().unwrap_err(), Singular { column: 1 });
    }

    proptest! {
        #[test]
        fn agrees_with_dense_lu(
            n in 1usize..12,
            kl in 0usize..4,
            ku in 0usize..4,
            entries in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 144),
            rhs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12),
        ) {
            let mut a = BandedMatrix::zeros(n, kl, ku);
            let mut dense = DMatrix::<Complex64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i <= j + kl && j <= i + ku {
                        let (re, im) = entries[i * 12 + j];
                        // Diagonal shift keeps the random instances well conditioned.
                        let v = c(re, im) + if i == j { c(2.0, 0.0) } else { c(0.0, 0.0) };
                        a.set(i, j, v);
                        dense[(i, j)] = v;
                    }
                }
            }
            let b: Vec<Complex64> = rhs[..n].iter().map(|&(re, im)| c(re, im)).collect();
            let expected = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
            let mut x = b;
            a.factorize().unwrap().solve_in_place(&mut x);
            for i in 0..n {
                prop_assert!((x[i] - expected[i]).norm() <= 1e-10 * (1.0 + expected[i].norm()));
            }
        }
    }
}
