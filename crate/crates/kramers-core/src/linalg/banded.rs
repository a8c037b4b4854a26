//! Banded LU with partial pivoting.
//!
//! Column-major band storage with `kl` extra rows on top for pivoting fill,
//! the same layout as LAPACK `gbtrf`.

use super::LinalgError;

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

/// Builder for a square band matrix before factorization.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, ldab, ab: vec![0.0; ldab * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        self.kl + self.ku + i - j + j * self.ldab
    }

    /// Adds `v` to entry (i, j). Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        assert!(i + self.ku >= j && j + self.kl >= i, "entry ({i},{j}) outside band");
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + self.ku >= j && j + self.kl >= i {
            self.ab[self.idx(i, j)]
        } else {
            0.0
        }
    }

    pub fn factor(self) -> Result<BandedLu, LinalgError> {
        let BandMatrix { n, kl, ku, ldab, mut ab } = self;
        let kv = kl + ku;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        // Row stride inside the band storage.
        let rs = ldab - 1;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let col = j * ldab;
            let mut jp = 0usize;
            let mut best = ab[col + kv].abs();
            for r in 1..=km {
                let v = ab[col + kv + r].abs();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 || !best.is_finite() {
                return Err(LinalgError::SingularPivot { index: j });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                // swap rows j and j + jp across columns j..=ju
                let a0 = kv + jp + j * ldab;
                let b0 = kv + j * ldab;
                for c in 0..=(ju - j) {
                    ab.swap(a0 + c * rs, b0 + c * rs);
                }
            }
            if km > 0 {
                let inv = 1.0 / ab[col + kv];
                for r in 1..=km {
                    ab[col + kv + r] *= inv;
                }
                for c in (j + 1)..=ju {
                    let ccol = c * ldab;
                    // A(j, c) sits at kv + j - c in column c
                    let f = ab[ccol + kv + j - c];
                    if f != 0.0 {
                        let base = ccol + kv + j - c;
                        for r in 1..=km {
                            ab[base + r] -= ab[col + kv + r] * f;
                        }
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, ku, ldab, ab, ipiv })
    }
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let kv = self.kl + self.ku;
        let ldab = self.ldab;
        assert_eq!(b.len(), n);
        for j in 0..n {
            let l = self.ipiv[j];
            if l != j {
                b.swap(l, j);
            }
            let km = self.kl.min(n - 1 - j);
            let bj = b[j];
            if bj != 0.0 {
                let col = j * ldab + kv;
                for r in 1..=km {
                    b[j + r] -= self.ab[col + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let col = j * ldab;
            b[j] /= self.ab[col + kv];
            let bj = b[j];
            if bj != 0.0 {
                let lo = j.saturating_sub(kv);
                for i in lo..j {
                    b[i] -= self.ab[col + kv + i - j] * bj;
                }
            }
        }
    }

    /// Smallest and largest |pivot|, a cheap conditioning hint.
    pub fn pivot_range(&self) -> (f64, f64) {
        let kv = self.kl + self.ku;
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for j in 0..self.n {
            let p = self.ab[j * self.ldab + kv].abs();
            lo = lo.min(p);
            hi = hi.max(p);
        }
        (lo, hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (5, 1, 1), (30, 3, 5), (40, 6, 2), (25, 0, 4)] {
            let mut band = BandMatrix::zeros(n, kl, ku);
            let mut dense = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                    // weak diagonal so that pivoting actually happens
                    let v: f64 = rng.random_range(-1.0..1.0) + if i == j { 0.05 } else { 0.0 };
                    band.add(i, j, v);
                    dense[(i, j)] = v;
                }
            }
            let rhs = DVector::from_fn(n, |i, _| (i as f64 * 0.37).sin());
            let lu = band.factor().unwrap();
            let mut x = rhs.as_slice().to_vec();
            lu.solve_in_place(&mut x);
            let x = DVector::from_vec(x);
            let res = (&dense * &x - &rhs).norm();
            assert!(res < 1e-9 * (1.0 + x.norm()), "n={n} kl={kl} ku={ku} res={res}");
        }
    }

    #[test]
    fn singular_detected() {
        let band = BandMatrix::zeros(3, 1, 1);
        assert!(band.factor().is_err());
    }
}
