use super::max_abs;
use crate::scalar::{CMat, CVec, Real, C};
use num_traits::Zero;

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Clone, Debug)]
pub struct DenseLu<T: Real> {
    lu: CMat<T>,
    perm: Vec<usize>,
    odd: bool,
    min_pivot_ratio: T,
}

impl<T: Real> DenseLu<T> {
    /// Factors `a`. Returns `None` when a pivot vanishes exactly.
    pub fn new(a: &CMat<T>) -> Option<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let scale = max_abs(a);
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut min_pivot = T::infinity();
        let mut odd = false;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].norm();
            for i in k + 1..n {
                let v = lu[(i, k)].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            min_pivot = min_pivot.min(best);
            if best == T::zero() {
                return None;
            }
            if p != k {
                lu.swap_rows(k, p);
                perm.swap(k, p);
                odd = !odd;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != C::zero() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        let ratio = if scale > T::zero() {
            min_pivot / scale
        } else {
            T::zero()
        };
        Some(DenseLu {
            lu,
            perm,
            odd,
            min_pivot_ratio: ratio,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Smallest pivot relative to the largest entry of the input matrix.
    pub fn min_pivot_ratio(&self) -> T {
        self.min_pivot_ratio
    }

    pub fn det(&self) -> C<T> {
        let d = (0..self.dim()).fold(C::new(T::one(), T::zero()), |acc, i| acc * self.lu[(i, i)]);
        if self.odd {
            -d
        } else {
            d
        }
    }

    pub fn solve_in_place(&self, b: &mut [C<T>]) {
        let n = self.dim();
        let x: Vec<C<T>> = self.perm.iter().map(|&p| b[p]).collect();
        b.copy_from_slice(&x);
        for i in 0..n {
            let mut s = b[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * b[j];
            }
            b[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * b[j];
            }
            b[i] = s / self.lu[(i, i)];
        }
    }

    pub fn solve(&self, b: &CVec<T>) -> CVec<T> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    pub fn solve_mat(&self, b: &CMat<T>) -> CMat<T> {
        let mut out = b.clone();
        for j in 0..b.ncols() {
            let mut col: Vec<C<T>> = b.column(j).iter().copied().collect();
            self.solve_in_place(&mut col);
            for (i, v) in col.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    pub fn inverse(&self) -> CMat<T> {
        self.solve_mat(&super::identity(self.dim()))
    }
}
