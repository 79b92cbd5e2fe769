//! Banded LU factorization with partial pivoting.
//!
//! Storage follows the usual band layout: entry (i, j) with
//! `-ku <= i - j <= kl` lives at `data[row_of(i, j)][j]` where
//! `row_of(i, j) = kl + ku + i - j`. The extra `kl` leading rows hold fill-in
//! produced by row interchanges, so factorization never leaves the band.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// (2*kl + ku + 1) x n, row-major bands.
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandedMatrix {
            n,
            kl,
            ku,
            data: vec![0.0; (2 * kl + ku + 1) * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        let band = self.kl + self.ku + i - j; // caller guarantees i - j <= kl, j - i <= ku + kl
        band * self.n + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + self.ku + self.kl < j || j + self.kl < i {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(
            i + self.ku >= j && j + self.kl >= i,
            "entry ({i},{j}) outside band kl={}, ku={}",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut s = 0.0;
            for j in lo..=hi {
                s += self.get(i, j) * x[j];
            }
            *yi = s;
        }
    }

    /// Factor in place; returns the pivot sequence and the smallest pivot
    /// magnitude encountered (for resonance detection by callers).
    pub fn factor(mut self) -> Result<BandedLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let kud = kl + ku; // upper bandwidth after fill-in
        let mut pivots = vec![0usize; n];
        let mut min_pivot = f64::INFINITY;
        let mut max_pivot: f64 = 0.0;
        for j in 0..n {
            // pivot search in column j, rows j..=j+kl
            let last = (j + kl).min(n - 1);
            let mut p = j;
            let mut best = self.get(j, j).abs();
            for i in (j + 1)..=last {
                let v = self.get(i, j).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            pivots[j] = p;
            if best == 0.0 {
                return Err(Error::invalid(format!(
                    "banded factorization broke down at column {j} (exactly singular)"
                )));
            }
            min_pivot = min_pivot.min(best);
            max_pivot = max_pivot.max(best);
            if p != j {
                // swap rows p and j over stored columns j..=min(j+kud, n-1)
                let chi = (j + kud).min(n - 1);
                for c in j..=chi {
                    let sj = self.slot(j, c);
                    let sp = self.slot(p, c);
                    self.data.swap(sj, sp);
                }
            }
            let diag = self.data[self.slot(j, j)];
            for i in (j + 1)..=last {
                let sij = self.slot(i, j);
                let l = self.data[sij] / diag;
                self.data[sij] = l;
                if l != 0.0 {
                    let chi = (j + kud).min(n - 1);
                    for c in (j + 1)..=chi {
                        let su = self.slot(j, c);
                        let si = self.slot(i, c);
                        self.data[si] -= l * self.data[su];
                    }
                }
            }
        }
        Ok(BandedLu {
            mat: self,
            pivots,
            min_pivot,
            max_pivot,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    mat: BandedMatrix,
    pivots: Vec<usize>,
    min_pivot: f64,
    max_pivot: f64,
}

impl BandedLu {
    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    /// min |pivot| / max |pivot|; a crude but effective near-singularity gauge.
    pub fn pivot_ratio(&self) -> f64 {
        if self.max_pivot == 0.0 {
            0.0
        } else {
            self.min_pivot / self.max_pivot
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.mat.n;
        let kl = self.mat.kl;
        let kud = self.mat.kl + self.mat.ku;
        assert_eq!(b.len(), n);
        // forward: apply P and L
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                b.swap(p, j);
            }
            let last = (j + kl).min(n - 1);
            for i in (j + 1)..=last {
                b[i] -= self.mat.data[self.mat.slot(i, j)] * b[j];
            }
        }
        // backward: solve U x = y
        for j in (0..n).rev() {
            let hi = (j + kud).min(n - 1);
            let mut s = b[j];
            for c in (j + 1)..=hi {
                s -= self.mat.data[self.mat.slot(j, c)] * b[c];
            }
            b[j] = s / self.mat.data[self.mat.slot(j, j)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn random_banded_systems_match_dense_lu() {
        let mut rng = StdRng::seed_from_u64(42);
        for trial in 0..40 {
            let n = rng.gen_range(3..40);
            let kl = rng.gen_range(1..4.min(n));
            let ku = rng.gen_range(1..4.min(n));
            let mut band = BandedMatrix::zeros(n, kl, ku);
            let mut dense = DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    if i + ku >= j && j + kl >= i {
                        let v: f64 = rng.gen_range(-1.0..1.0);
                        // keep diagonals dominant-ish half the time to vary conditioning
                        let v = if i == j { v + 2.0 * v.signum() } else { v };
                        band.set(i, j, v);
                        dense[(i, j)] = v;
                    }
                }
            }
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lu = band.clone().factor().expect("factorable");
            let x = lu.solve(&rhs);
            let mut ax = vec![0.0; n];
            band.apply(&x, &mut ax);
            let resid: f64 = ax
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let xd = dense
                .lu()
                .solve(&nalgebra::DVector::from_vec(rhs.clone()))
                .unwrap();
            let diff: f64 = x
                .iter()
                .zip(xd.iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            assert!(resid < 1e-9, "trial {trial}: residual {resid}");
            assert!(diff < 1e-8, "trial {trial}: dense mismatch {diff}");
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] requires an interchange
        let mut band = BandedMatrix::zeros(2, 1, 1);
        band.set(0, 1, 1.0);
        band.set(1, 0, 1.0);
        let lu = band.factor().unwrap();
        let x = lu.solve(&[2.0, 3.0]);
        assert!((x[0] - 3.0).abs() < 1e-14 && (x[1] - 2.0).abs() < 1e-14);
    }
}
