//! Banded LU with partial pivoting (column-major band storage as in
//! LAPACK's `gbtrf`): entry `(i, j)` lives at `ab[kl + ku + i - j + j * ldab]`.

use crate::scalar::{Real, C};
use num_traits::Zero;

#[derive(Clone, Debug)]
pub struct BandLu<T: Real> {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<C<T>>,
    piv: Vec<usize>,
    factored: bool,
    min_pivot: T,
    max_entry: T,
}

impl<T: Real> BandLu<T> {
    /// Empty `n x n` matrix with `kl` sub- and `ku` super-diagonals.
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        BandLu {
            n,
            kl,
            ku,
            ldab,
            ab: vec![C::zero(); ldab * n],
            piv: vec![0; n],
            factored: false,
            min_pivot: T::infinity(),
            max_entry: T::zero(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        self.kl + self.ku + i - j + j * self.ldab
    }

    /// Adds `v` to entry `(i, j)`; panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: C<T>) {
        assert!(!self.factored);
        assert!(
            i <= j + self.kl && j <= i + self.ku,
            "entry ({i},{j}) outside band"
        );
        let k = self.idx(i, j);
        self.ab[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> C<T> {
        if i > j + self.kl || j > i + self.ku + if self.factored { self.kl } else { 0 } {
            return C::zero();
        }
        self.ab[self.idx(i, j)]
    }

    /// In-place factorization. Returns `Err(min_pivot / max_entry)` when a
    /// pivot is exactly zero.
    pub fn factor(&mut self) -> Result<(), T> {
        let n = self.n;
        let kl = self.kl;
        let kuu = self.kl + self.ku;
        self.max_entry = self.ab.iter().fold(T::zero(), |a, z| a.max(z.norm()));
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let base = self.idx(j, j);
            let mut p = 0;
            let mut best = self.ab[base].norm();
            for r in 1..=km {
                let v = self.ab[base + r].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            self.piv[j] = j + p;
            self.min_pivot = self.min_pivot.min(best);
            if best == T::zero() {
                self.factored = true;
                return Err(T::zero());
            }
            let ju = (j + kuu).min(n - 1);
            if p != 0 {
                for c in j..=ju {
                    let a = self.idx(j, c);
                    let b = self.idx(j + p, c);
                    self.ab.swap(a, b);
                }
            }
            let inv = C::new(T::one(), T::zero()) / self.ab[base];
            for r in 1..=km {
                self.ab[base + r] *= inv;
            }
            for c in j + 1..=ju {
                let t = self.ab[self.idx(j, c)];
                if t == C::zero() {
                    continue;
                }
                let cb = self.idx(j + 1, c);
                for r in 0..km {
                    let l = self.ab[base + 1 + r];
                    self.ab[cb + r] -= l * t;
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Smallest pivot magnitude relative to the largest input entry.
    pub fn min_pivot_ratio(&self) -> T {
        if self.max_entry > T::zero() {
            self.min_pivot / self.max_entry
        } else {
            T::zero()
        }
    }

    pub fn solve_in_place(&self, b: &mut [C<T>]) {
        assert!(self.factored);
        let n = self.n;
        let kl = self.kl;
        let kuu = self.kl + self.ku;
        for j in 0..n {
            let p = self.piv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let bj = b[j];
            if bj != C::zero() {
                let base = self.idx(j, j);
                for r in 1..=km {
                    b[j + r] -= self.ab[base + r] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            let base = self.idx(j, j);
            b[j] /= self.ab[base];
            let bj = b[j];
            if bj != C::zero() {
                let lo = j.saturating_sub(kuu);
                for i in lo..j {
                    b[i] -= self.ab[base - (j - i)] * bj;
                }
            }
        }
    }
}
