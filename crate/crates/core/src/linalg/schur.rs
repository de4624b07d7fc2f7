//! Complex Schur decomposition `A = Q T Q^H` by Hessenberg reduction and
//! single-shift QR, with eigenvalue reordering by adjacent swaps.

use crate::scalar::{CMat, Real, C};
use num_traits::{One, Zero};

#[derive(Clone, Debug)]
pub struct SchurForm<T: Real> {
    pub q: CMat<T>,
    pub t: CMat<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SortOrder {
    /// Non-increasing real part.
    RealDescending,
    /// Non-decreasing real part.
    RealAscending,
}

/// Returns `None` if the QR iteration fails to converge.
pub fn schur<T: Real>(a: &CMat<T>) -> Option<SchurForm<T>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "schur needs a square matrix");
    let mut t = a.clone();
    let mut q = super::identity::<T>(n);
    if n <= 1 {
        return Some(SchurForm { q, t });
    }
    hessenberg(&mut t, &mut q);
    qr_iterate(&mut t, &mut q)?;
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = C::zero();
        }
    }
    Some(SchurForm { q, t })
}

fn hessenberg<T: Real>(h: &mut CMat<T>, q: &mut CMat<T>) {
    let n = h.nrows();
    let two = C::new(T::lit(2.0), T::zero());
    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let mut v: Vec<C<T>> = (0..m).map(|i| h[(k + 1 + i, k)]).collect();
        let xn = v.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
        if xn == T::zero() {
            continue;
        }
        let phase = if v[0].norm() > T::zero() {
            v[0] / C::new(v[0].norm(), T::zero())
        } else {
            C::one()
        };
        v[0] += phase * C::new(xn, T::zero());
        let vn = v.iter().fold(T::zero(), |a, z| a + z.norm_sqr()).sqrt();
        for z in v.iter_mut() {
            *z /= C::new(vn, T::zero());
        }
        // H <- P H, rows k+1..n
        for j in 0..n {
            let mut s = C::zero();
            for i in 0..m {
                s += v[i].conj() * h[(k + 1 + i, j)];
            }
            for i in 0..m {
                h[(k + 1 + i, j)] -= two * v[i] * s;
            }
        }
        // H <- H P, Q <- Q P on columns k+1..n
        for mat in [&mut *h, &mut *q] {
            for i in 0..n {
                let mut s = C::zero();
                for jj in 0..m {
                    s += mat[(i, k + 1 + jj)] * v[jj];
                }
                for jj in 0..m {
                    mat[(i, k + 1 + jj)] -= two * s * v[jj].conj();
                }
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C::zero();
        }
    }
}

/// Rotation `[c s; -conj(s) c]` mapping `(f, g)` to `(r, 0)`.
fn givens<T: Real>(f: C<T>, g: C<T>) -> (T, C<T>) {
    let fa = f.norm();
    let ga = g.norm();
    if ga == T::zero() {
        return (T::one(), C::zero());
    }
    if fa == T::zero() {
        return (T::zero(), g.conj() / C::new(ga, T::zero()));
    }
    let r = fa.hypot(ga);
    let c = fa / r;
    let s = (f / C::new(fa, T::zero())) * g.conj() / C::new(r, T::zero());
    (c, s)
}

fn rot_rows<T: Real>(m: &mut CMat<T>, k: usize, c: T, s: C<T>, cols: std::ops::Range<usize>) {
    let cc = C::new(c, T::zero());
    for j in cols {
        let x = m[(k, j)];
        let y = m[(k + 1, j)];
        m[(k, j)] = cc * x + s * y;
        m[(k + 1, j)] = cc * y - s.conj() * x;
    }
}

fn rot_cols<T: Real>(m: &mut CMat<T>, k: usize, c: T, s: C<T>, rows: std::ops::Range<usize>) {
    let cc = C::new(c, T::zero());
    for i in rows {
        let x = m[(i, k)];
        let y = m[(i, k + 1)];
        m[(i, k)] = cc * x + s.conj() * y;
        m[(i, k + 1)] = cc * y - s * x;
    }
}

fn qr_iterate<T: Real>(h: &mut CMat<T>, q: &mut CMat<T>) -> Option<()> {
    let n = h.nrows();
    let eps = T::epsilon();
    let mut hi = n - 1;
    let mut its = 0usize;
    let mut total = 0usize;
    let max_total = 100 * n.max(10);
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let diag = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if sub <= eps * diag || sub < T::min_positive_value() {
                h[(l, l - 1)] = C::zero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            its = 0;
            continue;
        }
        its += 1;
        total += 1;
        if total > max_total {
            return None;
        }
        let a = h[(hi - 1, hi - 1)];
        let b = h[(hi - 1, hi)];
        let c = h[(hi, hi - 1)];
        let d = h[(hi, hi)];
        let shift = if its % 11 == 10 {
            // exceptional shift
            d + C::new(T::lit(0.75) * c.norm(), T::lit(0.3) * c.norm())
        } else {
            let half = C::new(T::lit(0.5), T::zero());
            let m = (a + d) * half;
            let disc = ((a - d) * (a - d) * C::new(T::lit(0.25), T::zero()) + b * c).sqrt();
            let e1 = m + disc;
            let e2 = m - disc;
            if (e1 - d).norm() <= (e2 - d).norm() {
                e1
            } else {
                e2
            }
        };
        for i in l..=hi {
            h[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (cs, sn) = givens(h[(k, k)], h[(k + 1, k)]);
            rot_rows(h, k, cs, sn, k..n);
            h[(k + 1, k)] = C::zero();
            rots.push((k, cs, sn));
        }
        for &(k, cs, sn) in &rots {
            let top = (k + 2).min(hi) + 1;
            rot_cols(h, k, cs, sn, 0..top);
            rot_cols(q, k, cs, sn, 0..n);
        }
        for i in l..=hi {
            h[(i, i)] += shift;
        }
    }
    Some(())
}

/// Swaps the diagonal entries `k` and `k + 1` of the triangular factor by
/// a unitary rotation, updating `q` so that `A = Q T Q^H` is preserved.
pub fn swap_adjacent<T: Real>(f: &mut SchurForm<T>, k: usize) {
    let n = f.t.nrows();
    let t11 = f.t[(k, k)];
    let t22 = f.t[(k + 1, k + 1)];
    if t11 == t22 {
        return;
    }
    let (cs, sn) = givens(f.t[(k, k + 1)], t22 - t11);
    rot_rows(&mut f.t, k, cs, sn, k..n);
    rot_cols(&mut f.t, k, cs, sn, 0..k + 2);
    rot_cols(&mut f.q, k, cs, sn, 0..n);
    f.t[(k, k)] = t22;
    f.t[(k + 1, k + 1)] = t11;
    f.t[(k + 1, k)] = C::zero();
}

/// Stable selection sort of the Schur form by real part of the eigenvalues.
pub fn sort_schur<T: Real>(f: &mut SchurForm<T>, order: SortOrder) {
    let n = f.t.nrows();
    let key = |z: C<T>| match order {
        SortOrder::RealDescending => z.re,
        SortOrder::RealAscending => -z.re,
    };
    for i in 0..n {
        let mut best = i;
        for j in i + 1..n {
            if key(f.t[(j, j)]) > key(f.t[(best, best)]) {
                best = j;
            }
        }
        let mut j = best;
        while j > i {
            swap_adjacent(f, j - 1);
            j -= 1;
        }
    }
}
