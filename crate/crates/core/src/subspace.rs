//! Analytic bases of the unstable and stable subspaces of an asymptotic
//! matrix `A(λ)`, represented as graphs over a Schur frame and expanded in
//! Taylor series by an order-by-order Sylvester recursion.

use crate::error::{Error, Result};
use crate::linalg::{
    adjoint, fro_norm, orthonormal_completion, orthonormalize, schur, solve_sylvester,
    solve_sylvester_triangular, sort_schur, subspace_angle, SchurForm, SortOrder,
};
use crate::pencil::MatrixPencil;
use crate::scalar::{CMat, Real, C};
use num_traits::Zero;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubspaceKind {
    /// Eigenvalues with the largest real parts (decaying as `x → -∞`).
    Unstable,
    /// Eigenvalues with the smallest real parts (decaying as `x → +∞`).
    Stable,
}

impl SubspaceKind {
    fn order(self) -> SortOrder {
        match self {
            SubspaceKind::Unstable => SortOrder::RealDescending,
            SubspaceKind::Stable => SortOrder::RealAscending,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            SubspaceKind::Unstable => SubspaceKind::Stable,
            SubspaceKind::Stable => SubspaceKind::Unstable,
        }
    }
}

/// Minimum eigenvalue separation accepted at a split.
pub fn gap_tol<T: Real>(a: &CMat<T>) -> T {
    T::lit(1e-8) * (T::one() + fro_norm(a))
}

#[derive(Clone, Debug)]
pub struct SortedSchur<T: Real> {
    pub q: CMat<T>,
    pub t: CMat<T>,
    pub split: usize,
}

impl<T: Real> SortedSchur<T> {
    pub fn eigenvalues(&self) -> Vec<C<T>> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }
}

/// Schur form sorted by non-increasing real part, split after `k` columns.
pub fn sorted_schur<T: Real>(a: &CMat<T>, k: usize) -> Result<SortedSchur<T>> {
    sorted_schur_by(a, k, SortOrder::RealDescending)
}

pub fn sorted_schur_by<T: Real>(a: &CMat<T>, k: usize, order: SortOrder) -> Result<SortedSchur<T>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            n,
            a.ncols()
        )));
    }
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "split {k} outside 1..{}",
            n.saturating_sub(1)
        )));
    }
    let mut f: SchurForm<T> = schur(a).ok_or(Error::SchurFailure)?;
    sort_schur(&mut f, order);
    let gap = (f.t[(k - 1, k - 1)] - f.t[(k, k)]).norm();
    if gap <= gap_tol(a) {
        return Err(Error::GapFailure {
            k,
            next: k + 1,
            gap: gap.as_f64(),
        });
    }
    Ok(SortedSchur {
        q: f.q,
        t: f.t,
        split: k,
    })
}

/// Number of eigenvalues of `A(λ_ref)` with positive real part.
pub fn morse_index<T: Real>(a: &MatrixPencil<T>, lambda_ref: C<T>) -> Result<usize> {
    let m = a.eval(lambda_ref);
    let f = schur(&m).ok_or(Error::SchurFailure)?;
    let tol = gap_tol(&m);
    let mut count = 0;
    for i in 0..m.nrows() {
        let re = f.t[(i, i)].re;
        if re.abs() <= tol {
            return Err(Error::GapFailure {
                k: i,
                next: i,
                gap: re.abs().as_f64(),
            });
        }
        if re > T::zero() {
            count += 1;
        }
    }
    Ok(count)
}

/// Taylor jet of the graph map `H(λ)` describing a `dim`-dimensional
/// invariant subspace as `span Q [I; H(λ)]`.
#[derive(Clone, Debug)]
pub struct SubspaceJet<T: Real> {
    pub base: C<T>,
    /// Unitary frame; the leading `dim` columns span the subspace at `base`.
    pub q: CMat<T>,
    pub dim: usize,
    pub kind: SubspaceKind,
    /// `H^1, H^2, ...`; `H^0 = 0` is implicit.
    pub h: Vec<CMat<T>>,
}

impl<T: Real> SubspaceJet<T> {
    pub fn order(&self) -> usize {
        self.h.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn graph_at(&self, lambda: C<T>) -> CMat<T> {
        let n = self.ambient_dim();
        let z = lambda - self.base;
        let mut acc = CMat::zeros(n - self.dim, self.dim);
        for h in self.h.iter().rev() {
            acc += h;
            acc *= z;
        }
        acc
    }

    /// Basis `Q [I; H(λ)]` of the (approximate) subspace at `lambda`.
    pub fn basis_at(&self, lambda: C<T>) -> CMat<T> {
        let n = self.ambient_dim();
        let h = self.graph_at(lambda);
        let lead = self.q.columns(0, self.dim).into_owned();
        lead + self.q.columns(self.dim, n - self.dim) * h
    }

    /// `B10 + B11 H - H B00 - H B01 H` at `lambda`, with `B = Q^H A(λ) Q`.
    pub fn homological_residual(&self, a: &MatrixPencil<T>, lambda: C<T>) -> CMat<T> {
        let d = self.dim;
        let n = self.ambient_dim();
        let b = adjoint(&self.q) * a.eval(lambda) * &self.q;
        let h = self.graph_at(lambda);
        let b00 = b.view((0, 0), (d, d));
        let b01 = b.view((0, d), (d, n - d));
        let b10 = b.view((d, 0), (n - d, d));
        let b11 = b.view((d, d), (n - d, n - d));
        b10 + b11 * &h - &h * b00 - &h * (b01 * &h)
    }
}

/// Jet of order `m` at `lambda0` for the subspace of dimension `dim`
/// belonging to the largest (`Unstable`) or smallest (`Stable`) real parts.
pub fn taylor_jet<T: Real>(
    a: &MatrixPencil<T>,
    lambda0: C<T>,
    dim: usize,
    m: usize,
    kind: SubspaceKind,
) -> Result<SubspaceJet<T>> {
    let a0 = a.eval(lambda0);
    let ss = sorted_schur_by(&a0, dim, kind.order())?;
    jet_in_frame(a, lambda0, ss.q, dim, m, kind)
}

/// Jet at `lambda0` for the invariant subspace spanned by `u`, which is
/// assumed invariant under `A(lambda0)` (see [`newton_refine`]).
pub fn jet_from_frame<T: Real>(
    a: &MatrixPencil<T>,
    lambda0: C<T>,
    u: &CMat<T>,
    m: usize,
    kind: SubspaceKind,
) -> Result<SubspaceJet<T>> {
    let n = u.nrows();
    let d = u.ncols();
    if d == 0 || d >= n {
        return Err(Error::InvalidArgument(format!(
            "subspace dimension {d} in ambient dimension {n}"
        )));
    }
    let q = orthonormal_completion(u);
    let b = adjoint(&q) * a.eval(lambda0) * &q;
    let s0 = schur(&b.view((0, 0), (d, d)).into_owned()).ok_or(Error::SchurFailure)?;
    let s1 = schur(&b.view((d, d), (n - d, n - d)).into_owned()).ok_or(Error::SchurFailure)?;
    let mut rot = CMat::zeros(n, n);
    rot.view_mut((0, 0), (d, d)).copy_from(&s0.q);
    rot.view_mut((d, d), (n - d, n - d)).copy_from(&s1.q);
    jet_in_frame(a, lambda0, q * rot, d, m, kind)
}

/// Recursion for `H^ℓ` in a frame `q` whose diagonal blocks of
/// `Q^H A(λ0) Q` are upper triangular.
fn jet_in_frame<T: Real>(
    a: &MatrixPencil<T>,
    lambda0: C<T>,
    q: CMat<T>,
    d: usize,
    m: usize,
    kind: SubspaceKind,
) -> Result<SubspaceJet<T>> {
    let n = q.nrows();
    let e = n - d;
    let shifted = a.rebase(lambda0);
    let qh = adjoint(&q);
    let b: Vec<CMat<T>> = shifted.coeffs().iter().map(|c| &qh * c * &q).collect();
    let p = b.len() - 1;
    let b00: Vec<CMat<T>> = b
        .iter()
        .map(|x| x.view((0, 0), (d, d)).into_owned())
        .collect();
    let b01: Vec<CMat<T>> = b
        .iter()
        .map(|x| x.view((0, d), (d, e)).into_owned())
        .collect();
    let b10: Vec<CMat<T>> = b
        .iter()
        .map(|x| x.view((d, 0), (e, d)).into_owned())
        .collect();
    let b11: Vec<CMat<T>> = b
        .iter()
        .map(|x| x.view((d, d), (e, e)).into_owned())
        .collect();
    let mut t00 = b00[0].clone();
    let mut t11 = b11[0].clone();
    for j in 0..d {
        for i in j + 1..d {
            t00[(i, j)] = C::zero();
        }
    }
    for j in 0..e {
        for i in j + 1..e {
            t11[(i, j)] = C::zero();
        }
    }
    let tol = T::lit(1e-14) * (T::one() + fro_norm(&b[0]));
    // h[ℓ] = H^ℓ with h[0] = 0; g[r] = Σ_{j+k=r, k≥1} B01^j H^k.
    let mut h: Vec<CMat<T>> = vec![CMat::zeros(e, d)];
    let mut g: Vec<CMat<T>> = vec![CMat::zeros(d, d)];
    for l in 1..=m {
        let mut r = if l <= p { -&b10[l] } else { CMat::zeros(e, d) };
        for j in l.saturating_sub(p).max(1)..l {
            r += &h[j] * &b00[l - j];
            r -= &b11[l - j] * &h[j];
        }
        for i in 1..l {
            r += &h[i] * &g[l - i];
        }
        let x = solve_sylvester_triangular(&t11, &t00, &r, tol).map_err(|sep| {
            Error::SylvesterSingular {
                separation: sep.as_f64(),
            }
        })?;
        h.push(x);
        let mut gl = CMat::zeros(d, d);
        for j in 0..=p.min(l - 1) {
            gl += &b01[j] * &h[l - j];
        }
        g.push(gl);
    }
    h.remove(0);
    Ok(SubspaceJet {
        base: lambda0,
        q,
        dim: d,
        kind,
        h,
    })
}

/// The `n x dim` basis pencil `Q [I; H(λ)]` about the jet's base point.
pub fn basis_series<T: Real>(jet: &SubspaceJet<T>, m_out: usize) -> Result<MatrixPencil<T>> {
    if m_out > jet.order() {
        return Err(Error::InvalidArgument(format!(
            "requested order {m_out} exceeds jet order {}",
            jet.order()
        )));
    }
    let n = jet.ambient_dim();
    let lower = jet.q.columns(jet.dim, n - jet.dim);
    let mut coeffs = vec![jet.q.columns(0, jet.dim).into_owned()];
    coeffs.extend(jet.h[..m_out].iter().map(|h| lower * h));
    MatrixPencil::new(jet.base, coeffs)
}

/// Residual `‖(I - P) A U‖ / ‖A‖` for orthonormal `u`.
pub fn invariance_residual<T: Real>(a: &CMat<T>, u: &CMat<T>) -> T {
    let au = a * u;
    let proj = u * (adjoint(u) * &au);
    fro_norm(&(au - proj)) / (T::one() + fro_norm(a))
}

const MAX_NEWTON: usize = 25;

/// Newton iteration for an invariant subspace of `A(λ)` near `span(u_guess)`.
/// Returns an orthonormal basis.
pub fn newton_refine<T: Real>(
    a: &MatrixPencil<T>,
    lambda: C<T>,
    u_guess: &CMat<T>,
) -> Result<CMat<T>> {
    refine_matrix(&a.eval(lambda), u_guess)
}

pub(crate) fn refine_matrix<T: Real>(am: &CMat<T>, u_guess: &CMat<T>) -> Result<CMat<T>> {
    let n = am.nrows();
    let d = u_guess.ncols();
    if u_guess.nrows() != n || d == 0 || d >= n {
        return Err(Error::DimensionMismatch(format!(
            "guess of shape {:?} for {n}x{n} matrix",
            u_guess.shape()
        )));
    }
    let target = T::lit(1e-13);
    let accept = T::lit(1e-11);
    let tol = T::lit(1e-14) * (T::one() + fro_norm(am));
    let mut u = orthonormalize(u_guess);
    let mut last = T::infinity();
    for _ in 0..MAX_NEWTON {
        let res = invariance_residual(am, &u);
        if res <= target || (res <= accept && res >= last * T::lit(0.5)) {
            return Ok(u);
        }
        last = res;
        let q = orthonormal_completion(&u);
        let b = adjoint(&q) * am * &q;
        let b00 = b.view((0, 0), (d, d)).into_owned();
        let b10 = b.view((d, 0), (n - d, d)).into_owned();
        let b11 = b.view((d, d), (n - d, n - d)).into_owned();
        let x =
            solve_sylvester(&b11, &b00, &(-b10), tol).map_err(|sep| Error::SylvesterSingular {
                separation: sep.as_f64(),
            })?;
        let next = q.columns(0, d) + q.columns(d, n - d) * x;
        u = orthonormalize(&next);
    }
    let res = invariance_residual(am, &u);
    if res <= accept {
        Ok(u)
    } else {
        Err(Error::NoConvergence {
            what: "subspace Newton",
            steps: MAX_NEWTON,
            residual: res.as_f64(),
        })
    }
}

const PREDICTOR_ORDER: usize = 4;
const MIN_STEP: f64 = 1e-6;

/// Continues the subspace of `from` along
/// `λ(τ) = λ0 + τΔ + iρΔτ(1-τ)`, `Δ = λ1 - λ0`, and returns a jet of the
/// same order anchored at `lambda1`.
pub fn continue_subspace<T: Real>(
    a: &MatrixPencil<T>,
    from: &SubspaceJet<T>,
    lambda1: C<T>,
    rho: T,
) -> Result<SubspaceJet<T>> {
    if rho.abs() > T::one() {
        return Err(Error::InvalidArgument(
            "continuation bend must lie in [-1, 1]".into(),
        ));
    }
    let lambda0 = from.base;
    let delta = lambda1 - lambda0;
    let path =
        |tau: T| lambda0 + delta * tau + C::new(T::zero(), rho) * delta * tau * (T::one() - tau);
    let order = from.order();
    if delta == C::zero() {
        return Ok(from.clone());
    }
    let mut jet = if from.order() > PREDICTOR_ORDER {
        SubspaceJet {
            h: from.h[..PREDICTOR_ORDER].to_vec(),
            ..from.clone()
        }
    } else {
        from.clone()
    };
    let mut tau = T::zero();
    let mut step = T::lit(0.25);
    let mut u = from.q.columns(0, from.dim).into_owned();
    while tau < T::one() {
        let next_tau = (tau + step).min(T::one());
        let lam = path(next_tau);
        let pred = jet.basis_at(lam);
        let accepted = match newton_refine(a, lam, &pred) {
            Ok(v) => {
                let moved = subspace_angle(&u, &v);
                let corr = subspace_angle(&pred, &v);
                let good = corr <= T::lit(1e-10).max(T::lit(0.25) * moved) && moved < T::lit(0.5);
                if good {
                    jet_from_frame(a, lam, &v, PREDICTOR_ORDER, from.kind)
                        .map(|j| (j, v))
                        .ok()
                } else {
                    None
                }
            }
            Err(_) => None,
        };
        match accepted {
            Some((j, v)) => {
                jet = j;
                u = v;
                tau = next_tau;
                step = (step * T::lit(2.0)).min(T::lit(0.25));
            }
            None => {
                step *= T::lit(0.5);
                if step < T::lit(MIN_STEP) {
                    return Err(Error::PathFailure { tau: tau.as_f64() });
                }
            }
        }
    }
    jet_from_frame(a, lambda1, &u, order.max(1), from.kind)
}
