//! Construction of the intersection pencil `ι(λ)`: either the `N x N`
//! matrix of asymptotic bases, or a trapezoidal boundary-value
//! discretization of `u_x = A(x; λ) u` bordered by the asymptotic bases.

use crate::error::{Error, Result};
use crate::linalg::{BandLu, DenseLu};
use crate::pencil::{MatrixPencil, ScalarPoly, StorageHint};
use crate::scalar::{CMat, Real, C};
use num_traits::{One, Zero};
use std::fmt;
use std::sync::Arc;

/// `x ↦ A(x; ·)`, a pencil in λ about `λ = 0`.
pub type InteriorFn<T> = Arc<dyn Fn(T) -> MatrixPencil<T> + Send + Sync>;

/// How a root on a reparametrized surface is labelled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SheetRule {
    /// `Re γ > 0` is an eigenvalue, `Re γ < 0` a resonance.
    PositiveGammaIsEigenvalue,
}

#[derive(Clone)]
pub struct ProblemSpec<T: Real> {
    pub name: String,
    /// Phase-space dimension `N`.
    pub n_phase: usize,
    pub a_minus: MatrixPencil<T>,
    pub a_plus: MatrixPencil<T>,
    /// Variable coefficient; `None` for constant-coefficient problems.
    pub interior: Option<InteriorFn<T>>,
    pub half_length: T,
    pub intervals: usize,
    /// Unstable dimension at `-∞`; computed from the Morse index when `None`.
    pub k: Option<usize>,
    /// Use the stable subspace at `-∞` and the unstable one at `+∞`.
    pub swap_subspaces: bool,
    /// `λ = φ(γ)`; the spectral variable becomes `γ`.
    pub reparam: Option<ScalarPoly<T>>,
    /// Fixed basis replacing the left asymptotic subspace (half-line problems).
    pub left_boundary: Option<CMat<T>>,
    pub sheet: Option<SheetRule>,
}

impl<T: Real> fmt::Debug for ProblemSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("n_phase", &self.n_phase)
            .field("variable_coefficient", &self.interior.is_some())
            .field("half_length", &self.half_length)
            .field("intervals", &self.intervals)
            .field("k", &self.k)
            .field("swap_subspaces", &self.swap_subspaces)
            .field("reparam", &self.reparam)
            .finish()
    }
}

impl<T: Real> ProblemSpec<T> {
    /// Constant-coefficient problem with asymptotic pencils `a_minus`, `a_plus`.
    pub fn constant(name: &str, a_minus: MatrixPencil<T>, a_plus: MatrixPencil<T>) -> Result<Self> {
        let n = a_minus.nrows();
        for p in [&a_minus, &a_plus] {
            if p.nrows() != n || p.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "asymptotic pencil of shape {}x{} in dimension {n}",
                    p.nrows(),
                    p.ncols()
                )));
            }
        }
        Ok(ProblemSpec {
            name: name.to_string(),
            n_phase: n,
            a_minus,
            a_plus,
            interior: None,
            half_length: T::one(),
            intervals: 0,
            k: None,
            swap_subspaces: false,
            reparam: None,
            left_boundary: None,
            sheet: None,
        })
    }

    pub fn with_interior(
        mut self,
        interior: InteriorFn<T>,
        half_length: T,
        intervals: usize,
    ) -> Self {
        self.interior = Some(interior);
        self.half_length = half_length;
        self.intervals = intervals;
        self
    }

    pub fn is_constant(&self) -> bool {
        self.interior.is_none()
    }

    /// Maps a value of the spectral variable to λ.
    pub fn lambda_of(&self, mu: C<T>) -> C<T> {
        match &self.reparam {
            Some(phi) => phi.eval(mu),
            None => mu,
        }
    }

    /// A λ-pencil re-expressed in the spectral variable about `anchor`.
    pub fn in_spectral_variable(
        &self,
        p: &MatrixPencil<T>,
        anchor: C<T>,
    ) -> Result<MatrixPencil<T>> {
        match &self.reparam {
            Some(phi) => p.reparametrize_at(phi, anchor, p.order() * phi.degree()),
            None => Ok(p.rebase(anchor)),
        }
    }

    pub fn grid(&self) -> Vec<T> {
        let h = self.step();
        (0..=self.intervals)
            .map(|j| -self.half_length + h * T::from_usize(j).unwrap())
            .collect()
    }

    pub fn step(&self) -> T {
        T::lit(2.0) * self.half_length / T::from_usize(self.intervals.max(1)).unwrap()
    }
}

#[derive(Clone, Debug)]
enum NodeCoeffs<T: Real> {
    Uniform(CMat<T>),
    PerNode(Vec<CMat<T>>),
}

impl<T: Real> NodeCoeffs<T> {
    fn at(&self, j: usize) -> &CMat<T> {
        match self {
            NodeCoeffs::Uniform(m) => m,
            NodeCoeffs::PerNode(v) => &v[j],
        }
    }
}

/// Trapezoidal boundary-value pencil. Unknowns are ordered
/// `(u_1, ..., u_{n+1}, b_L, b_R)`; rows are the `nN` interior rows followed
/// by `N` left and `N` right boundary rows.
#[derive(Clone, Debug)]
pub struct BvpPencil<T: Real> {
    n_phase: usize,
    intervals: usize,
    h: T,
    /// `nodes[ℓ]` holds `A_ℓ(x_j)` for every grid node.
    nodes: Vec<NodeCoeffs<T>>,
    left: MatrixPencil<T>,
    right: MatrixPencil<T>,
}

#[derive(Clone, Debug)]
pub enum PencilStorage<T: Real> {
    Dense(MatrixPencil<T>),
    Bvp(BvpPencil<T>),
}

#[derive(Clone, Debug)]
pub struct AssembledPencil<T: Real> {
    pub storage: PencilStorage<T>,
    pub grid: Vec<T>,
}

impl<T: Real> AssembledPencil<T> {
    pub fn base(&self) -> C<T> {
        match &self.storage {
            PencilStorage::Dense(p) => p.base(),
            PencilStorage::Bvp(b) => b.left.base(),
        }
    }

    pub fn dim(&self) -> usize {
        match &self.storage {
            PencilStorage::Dense(p) => p.nrows(),
            PencilStorage::Bvp(b) => b.n_phase * (b.intervals + 2),
        }
    }

    /// Highest order carrying data.
    pub fn order(&self) -> usize {
        match &self.storage {
            PencilStorage::Dense(p) => p.order(),
            PencilStorage::Bvp(b) => b.left.order().max(b.right.order()).max(b.nodes.len() - 1),
        }
    }

    /// Highest order present in interior rows (`p`); equals `order()` for dense pencils.
    pub fn interior_order(&self) -> usize {
        match &self.storage {
            PencilStorage::Dense(p) => p.order(),
            PencilStorage::Bvp(b) => b.nodes.len() - 1,
        }
    }

    /// Row ranges of the left and right boundary blocks.
    pub fn boundary_block_rows(&self) -> Option<(std::ops::Range<usize>, std::ops::Range<usize>)> {
        match &self.storage {
            PencilStorage::Dense(_) => None,
            PencilStorage::Bvp(b) => {
                let s = b.n_phase * b.intervals;
                Some((s..s + b.n_phase, s + b.n_phase..s + 2 * b.n_phase))
            }
        }
    }

    /// `y += ι_ℓ x`.
    pub fn apply_order_add(&self, l: usize, x: &[C<T>], y: &mut [C<T>]) {
        match &self.storage {
            PencilStorage::Dense(p) => {
                if let Some(m) = p.coeff(l) {
                    gemv_add(m, x, y, C::one());
                }
            }
            PencilStorage::Bvp(b) => b.apply_order_add(l, x, y),
        }
    }

    /// `ι(λ) x` without forming the matrix.
    pub fn apply_eval(&self, lambda: C<T>, x: &[C<T>]) -> Vec<C<T>> {
        let z = lambda - self.base();
        let mut y = vec![C::zero(); self.dim()];
        let mut tmp = vec![C::zero(); self.dim()];
        for l in (0..=self.order()).rev() {
            for v in y.iter_mut() {
                *v *= z;
            }
            tmp.iter_mut().for_each(|v| *v = C::zero());
            self.apply_order_add(l, x, &mut tmp);
            for (a, b) in y.iter_mut().zip(&tmp) {
                *a += b;
            }
        }
        y
    }

    /// Dense coefficient matrices; intended for small pencils and tests.
    pub fn to_dense(&self) -> MatrixPencil<T> {
        match &self.storage {
            PencilStorage::Dense(p) => p.clone(),
            PencilStorage::Bvp(_) => {
                let n = self.dim();
                let coeffs = (0..=self.order())
                    .map(|l| {
                        let mut m = CMat::zeros(n, n);
                        let mut e = vec![C::zero(); n];
                        let mut y = vec![C::zero(); n];
                        for j in 0..n {
                            e[j] = C::one();
                            y.iter_mut().for_each(|v| *v = C::zero());
                            self.apply_order_add(l, &e, &mut y);
                            for i in 0..n {
                                m[(i, j)] = y[i];
                            }
                            e[j] = C::zero();
                        }
                        m
                    })
                    .collect();
                let mut p = MatrixPencil::new(self.base(), coeffs).expect("consistent shapes");
                p.storage_hint = StorageHint::SparseBlock;
                p
            }
        }
    }

    pub fn eval_dense(&self, lambda: C<T>) -> CMat<T> {
        match &self.storage {
            PencilStorage::Dense(p) => p.eval(lambda),
            PencilStorage::Bvp(_) => self.to_dense().eval(lambda),
        }
    }

    /// Frobenius norm of `ι_0`, computed without forming it.
    pub fn zero_order_norm(&self) -> T {
        match &self.storage {
            PencilStorage::Dense(p) => crate::linalg::fro_norm(&p.coeffs()[0]),
            PencilStorage::Bvp(b) => b.zero_order_norm(),
        }
    }
}

impl<T: Real> From<MatrixPencil<T>> for AssembledPencil<T> {
    fn from(p: MatrixPencil<T>) -> Self {
        AssembledPencil {
            storage: PencilStorage::Dense(p),
            grid: vec![],
        }
    }
}

fn gemv_add<T: Real>(m: &CMat<T>, x: &[C<T>], y: &mut [C<T>], w: C<T>) {
    for j in 0..m.ncols() {
        let xj = x[j] * w;
        if xj == C::zero() {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate().take(m.nrows()) {
            *yi += m[(i, j)] * xj;
        }
    }
}

impl<T: Real> BvpPencil<T> {
    fn left_dim(&self) -> usize {
        self.left.ncols()
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let nn = self.n_phase;
        let u_len = nn * (self.intervals + 1);
        (u_len, u_len + self.left_dim(), nn * self.intervals)
    }

    fn apply_order_add(&self, l: usize, x: &[C<T>], y: &mut [C<T>]) {
        let nn = self.n_phase;
        let (bl, br, bc_rows) = self.offsets();
        let half = C::new(T::lit(-0.5), T::zero());
        if l < self.nodes.len() {
            let inv_h = C::new(T::one() / self.h, T::zero());
            for j in 0..self.intervals {
                let rows = &mut y[j * nn..(j + 1) * nn];
                let uj = &x[j * nn..(j + 1) * nn];
                let uj1 = &x[(j + 1) * nn..(j + 2) * nn];
                gemv_add(self.nodes[l].at(j), uj, rows, half);
                gemv_add(self.nodes[l].at(j + 1), uj1, rows, half);
                if l == 0 {
                    for r in 0..nn {
                        rows[r] += (uj1[r] - uj[r]) * inv_h;
                    }
                }
            }
        }
        let minus = -C::<T>::one();
        if let Some(m) = self.left.coeff(l) {
            gemv_add(m, &x[bl..br], &mut y[bc_rows..bc_rows + nn], minus);
        }
        if let Some(m) = self.right.coeff(l) {
            gemv_add(m, &x[br..], &mut y[bc_rows + nn..bc_rows + 2 * nn], minus);
        }
        if l == 0 {
            for r in 0..nn {
                y[bc_rows + r] += x[r];
                y[bc_rows + nn + r] += x[self.intervals * nn + r];
            }
        }
    }

    fn zero_order_norm(&self) -> T {
        let nn = T::from_usize(self.n_phase).unwrap();
        let inv_h = T::one() / self.h;
        let mut s = T::lit(2.0) * nn * T::from_usize(self.intervals).unwrap() * inv_h * inv_h
            + T::lit(2.0) * nn;
        for j in 0..=self.intervals {
            s += T::lit(0.5)
                * self.nodes[0]
                    .at(j)
                    .iter()
                    .fold(T::zero(), |a, z| a + z.norm_sqr());
        }
        s += self.left.coeffs()[0]
            .iter()
            .fold(T::zero(), |a, z| a + z.norm_sqr());
        s += self.right.coeffs()[0]
            .iter()
            .fold(T::zero(), |a, z| a + z.norm_sqr());
        s.sqrt()
    }
}

/// `[U_u(λ) | -U_s(λ)]`.
pub fn assemble_constant<T: Real>(
    u_u: &MatrixPencil<T>,
    u_s: &MatrixPencil<T>,
) -> Result<AssembledPencil<T>> {
    let n = u_u.nrows();
    if u_s.nrows() != n || u_u.ncols() + u_s.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "bases {}x{} and {}x{} do not form a square matrix",
            n,
            u_u.ncols(),
            u_s.nrows(),
            u_s.ncols()
        )));
    }
    if u_u.base() != u_s.base() {
        return Err(Error::InvalidArgument(
            "bases must share a base point".into(),
        ));
    }
    let m = u_u.order().max(u_s.order());
    let k = u_u.ncols();
    let coeffs = (0..=m)
        .map(|l| {
            let mut c = CMat::zeros(n, n);
            if let Some(a) = u_u.coeff(l) {
                c.columns_mut(0, k).copy_from(a);
            }
            if let Some(b) = u_s.coeff(l) {
                c.columns_mut(k, n - k).copy_from(&(-b));
            }
            c
        })
        .collect();
    Ok(AssembledPencil {
        storage: PencilStorage::Dense(MatrixPencil::new(u_u.base(), coeffs)?),
        grid: vec![],
    })
}

/// Trapezoidal discretization on `x_j = -L + (j-1)h`, with `left` attached
/// at `x_1` and `right` at `x_{n+1}`. Interior coefficients are taken from
/// `spec.interior` expressed in the spectral variable about the bases' base point.
pub fn assemble_bvp<T: Real>(
    spec: &ProblemSpec<T>,
    left: &MatrixPencil<T>,
    right: &MatrixPencil<T>,
) -> Result<AssembledPencil<T>> {
    let interior = spec.interior.as_ref().ok_or_else(|| {
        Error::InvalidArgument("boundary-value assembly needs an interior coefficient".into())
    })?;
    let nn = spec.n_phase;
    if left.nrows() != nn || right.nrows() != nn || left.ncols() + right.ncols() != nn {
        return Err(Error::DimensionMismatch(format!(
            "bases {}x{} and {}x{} in phase dimension {nn}",
            left.nrows(),
            left.ncols(),
            right.nrows(),
            right.ncols()
        )));
    }
    if left.base() != right.base() {
        return Err(Error::InvalidArgument(
            "bases must share a base point".into(),
        ));
    }
    if spec.intervals == 0 || spec.half_length <= T::zero() {
        return Err(Error::InvalidArgument("grid needs n >= 1 and L > 0".into()));
    }
    let anchor = left.base();
    let grid = spec.grid();
    let per_node: Vec<MatrixPencil<T>> = grid
        .iter()
        .map(|&x| {
            let p = interior(x);
            if p.nrows() != nn || p.ncols() != nn {
                return Err(Error::DimensionMismatch(format!(
                    "interior coefficient is {}x{}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            spec.in_spectral_variable(&p, anchor)
        })
        .collect::<Result<_>>()?;
    let p = per_node.iter().map(|q| q.order()).max().unwrap_or(0);
    let zero = CMat::zeros(nn, nn);
    let nodes = (0..=p)
        .map(|l| {
            let first = per_node[0].coeff(l).unwrap_or(&zero);
            if per_node
                .iter()
                .all(|q| q.coeff(l).unwrap_or(&zero) == first)
            {
                NodeCoeffs::Uniform(first.clone())
            } else {
                NodeCoeffs::PerNode(
                    per_node
                        .iter()
                        .map(|q| q.coeff(l).unwrap_or(&zero).clone())
                        .collect(),
                )
            }
        })
        .collect();
    Ok(AssembledPencil {
        storage: PencilStorage::Bvp(BvpPencil {
            n_phase: nn,
            intervals: spec.intervals,
            h: spec.step(),
            nodes,
            left: left.clone(),
            right: right.clone(),
        }),
        grid,
    })
}

/// Pivot ratio below which `ι_0` counts as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-14;

/// LU factorization of `ι_0`, solving in the pencil's unknown ordering.
#[derive(Clone, Debug)]
pub enum Factorization<T: Real> {
    Dense(DenseLu<T>),
    Band {
        lu: BandLu<T>,
        n_phase: usize,
        intervals: usize,
        left_dim: usize,
    },
}

impl<T: Real> Factorization<T> {
    pub fn dim(&self) -> usize {
        match self {
            Factorization::Dense(lu) => lu.dim(),
            Factorization::Band { lu, .. } => lu.dim(),
        }
    }

    pub fn min_pivot_ratio(&self) -> T {
        match self {
            Factorization::Dense(lu) => lu.min_pivot_ratio(),
            Factorization::Band { lu, .. } => lu.min_pivot_ratio(),
        }
    }

    /// Overwrites `rhs` with `ι_0^{-1} rhs`.
    pub fn solve_in_place(&self, rhs: &mut [C<T>]) {
        match self {
            Factorization::Dense(lu) => lu.solve_in_place(rhs),
            Factorization::Band {
                lu,
                n_phase,
                intervals,
                left_dim,
            } => {
                let nn = *n_phase;
                let bc = nn * intervals;
                let mut b = Vec::with_capacity(rhs.len());
                b.extend_from_slice(&rhs[bc..bc + nn]);
                b.extend_from_slice(&rhs[..bc]);
                b.extend_from_slice(&rhs[bc + nn..]);
                lu.solve_in_place(&mut b);
                let u_len = nn * (intervals + 1);
                rhs[..u_len].copy_from_slice(&b[*left_dim..left_dim + u_len]);
                rhs[u_len..u_len + left_dim].copy_from_slice(&b[..*left_dim]);
                rhs[u_len + left_dim..].copy_from_slice(&b[left_dim + u_len..]);
            }
        }
    }

    pub fn solve(&self, rhs: &[C<T>]) -> Vec<C<T>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

/// Factors `ι_0`. Boundary-value pencils are reordered to
/// `(b_L, u_1, ..., u_{n+1}, b_R)` / `(left rows, interior, right rows)`,
/// which makes the matrix banded with `2N - 1 - k_L` sub- and
/// `N - 1 + k_L` super-diagonals.
pub fn factor_zero_order<T: Real>(a: &AssembledPencil<T>) -> Result<Factorization<T>> {
    let threshold = T::lit(SINGULAR_PIVOT_RATIO);
    match &a.storage {
        PencilStorage::Dense(p) => {
            let lu = DenseLu::new(&p.coeffs()[0]);
            match lu {
                Some(lu) if lu.min_pivot_ratio() > threshold => Ok(Factorization::Dense(lu)),
                Some(lu) => Err(Error::SingularZeroOrder {
                    pivot_ratio: lu.min_pivot_ratio().as_f64(),
                }),
                None => Err(Error::SingularZeroOrder { pivot_ratio: 0.0 }),
            }
        }
        PencilStorage::Bvp(b) => {
            let nn = b.n_phase;
            let kl_dim = b.left_dim();
            let n = nn * (b.intervals + 2);
            let mut lu = BandLu::zeros(n, 2 * nn - 1 - kl_dim, nn - 1 + kl_dim);
            let col_u = |j: usize, c: usize| kl_dim + j * nn + c;
            // left boundary rows
            for r in 0..nn {
                lu.add(r, col_u(0, r), C::one());
                for c in 0..kl_dim {
                    lu.add(r, c, -b.left.coeffs()[0][(r, c)]);
                }
            }
            let inv_h = C::new(T::one() / b.h, T::zero());
            let half = C::new(T::lit(0.5), T::zero());
            for j in 0..b.intervals {
                let a0 = b.nodes[0].at(j);
                let a1 = b.nodes[0].at(j + 1);
                for r in 0..nn {
                    let row = nn + j * nn + r;
                    for c in 0..nn {
                        let (v0, v1) = (-half * a0[(r, c)], -half * a1[(r, c)]);
                        if v0 != C::zero() {
                            lu.add(row, col_u(j, c), v0);
                        }
                        if v1 != C::zero() {
                            lu.add(row, col_u(j + 1, c), v1);
                        }
                    }
                    lu.add(row, col_u(j, r), -inv_h);
                    lu.add(row, col_u(j + 1, r), inv_h);
                }
            }
            let rb = nn + b.intervals * nn;
            let cb = kl_dim + (b.intervals + 1) * nn;
            for r in 0..nn {
                lu.add(rb + r, col_u(b.intervals, r), C::one());
                for c in 0..nn - kl_dim {
                    lu.add(rb + r, cb + c, -b.right.coeffs()[0][(r, c)]);
                }
            }
            if lu.factor().is_err() || lu.min_pivot_ratio() <= threshold {
                return Err(Error::SingularZeroOrder {
                    pivot_ratio: lu.min_pivot_ratio().as_f64(),
                });
            }
            Ok(Factorization::Band {
                lu,
                n_phase: nn,
                intervals: b.intervals,
                left_dim: kl_dim,
            })
        }
    }
}
