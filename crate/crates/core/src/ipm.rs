//! Inverse power iteration on the companion linearization of a pencil
//! `ι(λ) = Σ ι_ℓ (λ - λ_base)^ℓ`, anchor restarts, and classification of
//! the limit as eigenvalue, resonance or branch point.

use crate::assembly::{
    assemble_bvp, assemble_constant, factor_zero_order, AssembledPencil, Factorization,
    ProblemSpec, SheetRule,
};
use crate::error::{Error, Result};
use crate::linalg::{dot_h, slice_norm, subspace_angle};
use crate::newton::{
    branch_point_newton, branch_point_newton_between, BranchPoint, DEFAULT_MAX_STEPS,
};
use crate::pencil::MatrixPencil;
use crate::problems::{spreading_speed_problem, Params};
use crate::scalar::{CMat, Real, C};
use crate::subspace::{
    basis_series, continue_subspace, jet_from_frame, morse_index, newton_refine, taylor_jet,
    SubspaceJet, SubspaceKind,
};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Iterates of one power-iteration pass, stored normalized.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord<T: Real> {
    pub base: C<T>,
    /// `u^(0)`, unit norm.
    pub initial: Vec<C<T>>,
    /// `u^(1), ..., u^(k)`, each of unit norm.
    pub history: Vec<Vec<C<T>>>,
    /// `log ‖u^(j)‖` of the unnormalized iterates, cumulative.
    pub log_scales: Vec<T>,
    pub lambda_preds: Vec<C<T>>,
    /// `‖(λ_p - λ_base) u^(k) - u^(k-1)‖` in the scaling where `u^(k-1)` has unit norm.
    pub residuals: Vec<T>,
}

impl<T: Real> IterationRecord<T> {
    fn new(base: C<T>, initial: Vec<C<T>>) -> Self {
        IterationRecord {
            base,
            initial,
            history: Vec::new(),
            log_scales: Vec::new(),
            lambda_preds: Vec::new(),
            residuals: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Normalized iterate `j` (0 is the start vector) and its log-scale.
    pub fn iterate(&self, j: usize) -> (&[C<T>], T) {
        if j == 0 {
            (&self.initial, T::zero())
        } else {
            (&self.history[j - 1], self.log_scales[j - 1])
        }
    }

    pub fn last_prediction(&self) -> Option<C<T>> {
        self.lambda_preds.last().copied()
    }

    /// `|λ_{0,k} - λ_{0,k-1}|` for `k = 2, ..., len`.
    pub fn increments(&self) -> Vec<T> {
        self.lambda_preds
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Classification {
    Eigenvalue,
    Resonance,
    BranchPoint,
    Unresolved,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Eigenvalue => "eigenvalue",
            Classification::Resonance => "resonance",
            Classification::BranchPoint => "branch_point",
            Classification::Unresolved => "unresolved",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One iteration of a restarted solve.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow<T: Real> {
    /// Iteration count over all passes, starting at 1.
    pub k: usize,
    /// 0 for the first pass.
    pub restart_index: usize,
    /// Prediction in the spectral variable.
    pub value: C<T>,
    /// Prediction mapped to `λ`.
    pub lambda: C<T>,
    pub residual: T,
    pub log_scale: T,
}

#[derive(Clone, Debug)]
pub struct SpectralResult<T: Real> {
    pub lambda: C<T>,
    /// Value of the spectral variable when a reparametrization is active.
    pub gamma: Option<C<T>>,
    pub classification: Classification,
    pub kernel_vector: Option<Vec<C<T>>>,
    /// `‖ι(λ) v‖ / ‖ι_0‖` for the kernel vector estimate `v`.
    pub kernel_residual: Option<T>,
    /// The last pass (the classification probe when one ran).
    pub record: IterationRecord<T>,
    pub trace: Vec<TraceRow<T>>,
    pub restarts: usize,
    /// Last change of the restarted prediction.
    pub residual: T,
    pub converged: bool,
    pub branch_point: Option<BranchPoint<T>>,
    /// Dimension of the subspace attached on the left.
    pub k: usize,
}

impl<T: Real> SpectralResult<T> {
    /// The converged value in the spectral variable (`γ` or `λ`).
    pub fn value(&self) -> C<T> {
        self.gamma.unwrap_or(self.lambda)
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IpmOptions {
    /// Truncation order `M` of the first pass; 40 for boundary-value and
    /// 200 for constant-coefficient problems when `None`.
    pub order: Option<usize>,
    /// Truncation order after a restart.
    pub fine_order: usize,
    /// Iterations of the first pass; `order` when `None`.
    pub first_pass_iters: Option<usize>,
    /// Iterations per restart pass (at least [`MIN_ITERS`]).
    pub restart_iters: usize,
    pub tau: f64,
    pub coarse_tol: f64,
    pub fine_tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// Iterations of the classification probe; 0 skips classification.
    pub probe_iters: usize,
    /// Refine branch points of constant-coefficient problems by Newton's method.
    pub newton_handoff: bool,
    /// Unstable dimension at `-∞`, overriding the problem and the Morse index.
    pub k: Option<usize>,
}

impl Default for IpmOptions {
    fn default() -> Self {
        IpmOptions {
            order: None,
            fine_order: 8,
            first_pass_iters: None,
            restart_iters: MIN_ITERS,
            tau: 0.9,
            coarse_tol: 1e-3,
            fine_tol: 1e-9,
            max_restarts: 60,
            seed: 0,
            probe_iters: 40,
            newton_handoff: true,
            k: None,
        }
    }
}

pub const MIN_ITERS: usize = 5;
const BREAKDOWN_RETRIES: usize = 3;
const SINGULAR_START_RETRIES: usize = 3;

/// `λ_base + ⟨u_{k-1}, u_{k-1}⟩ / ⟨u_k, u_{k-1}⟩` for the last two
/// iterates, with the normalization between them undone.
pub fn predict_lambda<T: Real>(record: &IterationRecord<T>) -> Result<C<T>> {
    let k = record.len();
    if k == 0 {
        return Err(Error::InvalidArgument(
            "prediction needs at least one step".into(),
        ));
    }
    let (cur, s_cur) = record.iterate(k);
    let (prev, s_prev) = record.iterate(k - 1);
    let ip = dot_h(cur, prev) * (s_cur - s_prev).exp();
    let num = dot_h(prev, prev);
    let z = num / ip;
    if ip == C::zero() || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::DivideByZero);
    }
    Ok(record.base + z)
}

fn step<T: Real>(
    a: &AssembledPencil<T>,
    f: &Factorization<T>,
    rec: &mut IterationRecord<T>,
) -> Result<()> {
    let k = rec.len() + 1;
    let n = a.dim();
    let (_, s_prev) = rec.iterate(k - 1);
    let mut w = vec![C::zero(); n];
    let mut scaled = vec![C::zero(); n];
    for l in 1..=k.min(a.order()) {
        let (u, s) = rec.iterate(k - l);
        let weight = (s - s_prev).exp();
        if weight == T::zero() {
            continue;
        }
        let wc = C::new(-weight, T::zero());
        for (d, x) in scaled.iter_mut().zip(u) {
            *d = *x * wc;
        }
        a.apply_order_add(l, &scaled, &mut w);
    }
    f.solve_in_place(&mut w);
    let norm = slice_norm(&w);
    if !(norm > T::zero() && norm.is_finite()) {
        return Err(Error::Breakdown { step: k });
    }
    let inv = C::new(T::one() / norm, T::zero());
    w.iter_mut().for_each(|x| *x *= inv);
    rec.history.push(w);
    rec.log_scales.push(s_prev + norm.ln());
    let pred = predict_lambda(rec).map_err(|_| Error::Breakdown { step: k })?;
    let z = C::new(norm, T::zero()) * (pred - rec.base);
    let (prev, _) = rec.iterate(k - 1);
    let cur = &rec.history[k - 1];
    let res = cur
        .iter()
        .zip(prev)
        .fold(T::zero(), |acc, (c, p)| acc + (z * c - p).norm_sqr())
        .sqrt();
    rec.lambda_preds.push(pred);
    rec.residuals.push(res);
    Ok(())
}

fn iterate_until<T: Real>(
    a: &AssembledPencil<T>,
    f: &Factorization<T>,
    u_init: &[C<T>],
    max_iter: usize,
    stop: impl Fn(&IterationRecord<T>) -> bool,
) -> Result<IterationRecord<T>> {
    if u_init.len() != a.dim() {
        return Err(Error::DimensionMismatch(format!(
            "start vector of length {} for pencil of dimension {}",
            u_init.len(),
            a.dim()
        )));
    }
    let norm = slice_norm(u_init);
    if !(norm > T::zero()) {
        return Err(Error::Breakdown { step: 0 });
    }
    let inv = C::new(T::one() / norm, T::zero());
    let mut rec = IterationRecord::new(a.base(), u_init.iter().map(|x| *x * inv).collect());
    for _ in 0..max_iter {
        step(a, f, &mut rec)?;
        if stop(&rec) {
            break;
        }
    }
    Ok(rec)
}

/// Runs `u^(k) = -ι_0^{-1} Σ_{ℓ=1}^{min(k,M)} ι_ℓ u^(k-ℓ)` from `u_init`.
/// For `max_iter` up to the pencil order this is the exact action of the
/// linearized operator. Stops early once both the prediction increment
/// (relative to `1 + |λ|`) and the residual are below `tol`.
pub fn power_iterate<T: Real>(
    a: &AssembledPencil<T>,
    f: &Factorization<T>,
    u_init: &[C<T>],
    max_iter: usize,
    tol: T,
) -> Result<IterationRecord<T>> {
    iterate_until(a, f, u_init, max_iter, |r| {
        let k = r.len();
        k >= 2 && {
            let d = (r.lambda_preds[k - 1] - r.lambda_preds[k - 2]).norm();
            d <= tol * (T::one() + r.lambda_preds[k - 1].norm()) && r.residuals[k - 1] <= tol
        }
    })
}

/// Regime of a pass started close to a spectral value.
///
/// Geometric decay of the prediction increments, reaching roundoff before
/// 20 steps or with a steady ratio, together with a kernel residual below
/// `fine_tol · ‖ι_0‖` gives [`Classification::Eigenvalue`] (the caller
/// decides whether it is a resonance). Increments decaying like `k^{-2}`
/// give [`Classification::BranchPoint`].
pub fn classify<T: Real>(
    record: &IterationRecord<T>,
    pencil: &AssembledPencil<T>,
    fine_tol: T,
) -> Classification {
    const MIN_PREDICTIONS: usize = 20;
    let k = record.len();
    if k < MIN_PREDICTIONS {
        return Classification::Unresolved;
    }
    let last = record.lambda_preds[k - 1];
    let inc = record.increments();
    let floor = T::lit(1e-12) * (T::one() + last.norm());
    let early_floor = inc.iter().take(MIN_PREDICTIONS - 1).any(|&d| d <= floor);
    let geometric = early_floor || steady_ratio(&inc, floor);
    if geometric {
        return if kernel_residual(record, pencil) <= fine_tol {
            Classification::Eigenvalue
        } else {
            Classification::Unresolved
        };
    }
    match loglog_slope(&inc) {
        Some(s) if (s + T::lit(2.0)).abs() <= T::lit(0.6) => Classification::BranchPoint,
        _ => Classification::Unresolved,
    }
}

fn steady_ratio<T: Real>(inc: &[T], floor: T) -> bool {
    const WINDOW: usize = 10;
    if inc.len() < WINDOW + 1 {
        return false;
    }
    let tail = &inc[inc.len() - WINDOW - 1..];
    if tail.iter().any(|&d| d <= floor) {
        return false;
    }
    let ratios: Vec<T> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    let mean = ratios.iter().fold(T::zero(), |a, &r| a + r) / T::from_usize(ratios.len()).unwrap();
    mean < T::lit(0.9)
        && ratios
            .iter()
            .all(|&r| (r - mean).abs() <= T::lit(0.2) * mean)
}

/// Least-squares slope of `log d_k` against `log k` over the last three
/// quarters of the increments (`d_k` is the increment ending at step `k`).
fn loglog_slope<T: Real>(inc: &[T]) -> Option<T> {
    let start = (inc.len() / 4).max(3);
    let pts: Vec<(T, T)> = inc
        .iter()
        .enumerate()
        .skip(start)
        .filter(|(_, &d)| d > T::zero())
        .map(|(i, &d)| (T::from_usize(i + 2).unwrap().ln(), d.ln()))
        .collect();
    fit_slope(&pts)
}

fn fit_slope<T: Real>(pts: &[(T, T)]) -> Option<T> {
    if pts.len() < 3 {
        return None;
    }
    let n = T::from_usize(pts.len()).unwrap();
    let (sx, sy) = pts
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (sx / n, sy / n);
    let (sxy, sxx) = pts.iter().fold((T::zero(), T::zero()), |(a, b), &(x, y)| {
        (a + (x - mx) * (y - my), b + (x - mx) * (x - mx))
    });
    if sxx == T::zero() {
        None
    } else {
        Some(sxy / sxx)
    }
}

/// `‖ι(λ_k) u^(k)‖ / ‖ι_0‖` for the last prediction and iterate.
pub fn kernel_residual<T: Real>(record: &IterationRecord<T>, pencil: &AssembledPencil<T>) -> T {
    let Some(lam) = record.last_prediction() else {
        return T::infinity();
    };
    let (u, _) = record.iterate(record.len());
    slice_norm(&pencil.apply_eval(lam, u)) / pencil.zero_order_norm()
}

/// Extrapolates a value with error `O(h^order)` from grids `h` and `h/2`.
pub fn richardson<T: Real>(coarse: C<T>, fine: C<T>, order: i32) -> C<T> {
    let f = T::lit(2.0).powi(order) - T::one();
    fine + (fine - coarse) / C::new(f, T::zero())
}

#[derive(Clone)]
enum Frame<T: Real> {
    Fixed(CMat<T>),
    Jet(SubspaceJet<T>),
}

/// One side of the intersection map: the asymptotic matrix in the spectral
/// variable and the current subspace frame.
#[derive(Clone)]
struct Side<T: Real> {
    pencil: MatrixPencil<T>,
    kind: SubspaceKind,
    dim: usize,
    frame: Frame<T>,
}

const CONTINUATION_BENDS: [f64; 4] = [0.5, -0.5, 0.9, -0.9];
const MAX_CORRECTION_ANGLE: f64 = 0.3;

impl<T: Real> Side<T> {
    fn asymptotic(
        pencil: MatrixPencil<T>,
        kind: SubspaceKind,
        dim: usize,
        anchor: C<T>,
        order: usize,
    ) -> Result<Self> {
        let jet = taylor_jet(&pencil, anchor, dim, order, kind)?;
        Ok(Side {
            pencil,
            kind,
            dim,
            frame: Frame::Jet(jet),
        })
    }

    fn basis(&self, anchor: C<T>, order: usize) -> Result<MatrixPencil<T>> {
        match &self.frame {
            Frame::Fixed(b) => MatrixPencil::new(anchor, vec![b.clone()]),
            Frame::Jet(j) => basis_series(j, order),
        }
    }

    /// Re-anchors the jet at `anchor` by following the subspace from the
    /// current base point.
    fn move_to(&mut self, anchor: C<T>, order: usize) -> Result<()> {
        let Frame::Jet(jet) = &self.frame else {
            return Ok(());
        };
        let pred = jet.basis_at(anchor);
        let refined = match newton_refine(&self.pencil, anchor, &pred) {
            Ok(u) if subspace_angle(&pred, &u) <= T::lit(MAX_CORRECTION_ANGLE) => Some(u),
            _ => None,
        };
        let u = match refined {
            Some(u) => u,
            None => {
                let mut last = Error::PathFailure { tau: 0.0 };
                let mut found = None;
                for rho in CONTINUATION_BENDS {
                    match continue_subspace(&self.pencil, jet, anchor, T::lit(rho)) {
                        Ok(j) => {
                            found = Some(j.q.columns(0, self.dim).into_owned());
                            break;
                        }
                        Err(e) => last = e,
                    }
                }
                found.ok_or(last)?
            }
        };
        self.frame = Frame::Jet(jet_from_frame(&self.pencil, anchor, &u, order, self.kind)?);
        Ok(())
    }
}

struct Solver<'a, T: Real> {
    spec: &'a ProblemSpec<T>,
    left: Side<T>,
    right: Side<T>,
    rng: ChaCha8Rng,
}

struct Pass<T: Real> {
    record: IterationRecord<T>,
    pencil: AssembledPencil<T>,
}

impl<T: Real> Solver<'_, T> {
    fn pass(
        &mut self,
        anchor: C<T>,
        order: usize,
        iters: usize,
        coarse: Option<T>,
    ) -> Result<Pass<T>> {
        let lb = self.left.basis(anchor, order)?;
        let rb = self.right.basis(anchor, order)?;
        let pencil = if self.spec.is_constant() {
            assemble_constant(&lb, &rb)?
        } else {
            assemble_bvp(self.spec, &lb, &rb)?
        };
        let f = factor_zero_order(&pencil)?;
        let u0 = random_vector(&mut self.rng, pencil.dim());
        let record = iterate_until(&pencil, &f, &u0, iters, |r| match coarse {
            Some(tol) => {
                let k = r.len();
                k >= MIN_ITERS && {
                    let d = (r.lambda_preds[k - 1] - r.lambda_preds[k - 2]).norm();
                    d < tol * (T::one() + r.lambda_preds[k - 1].norm())
                }
            }
            None => false,
        })?;
        Ok(Pass { record, pencil })
    }

    fn move_to(&mut self, anchor: C<T>, order: usize) -> Result<()> {
        self.left.move_to(anchor, order)?;
        self.right.move_to(anchor, order)
    }

    fn random_direction(&mut self) -> C<T> {
        C::from_polar(
            T::one(),
            T::lit(self.rng.gen_range(0.0..std::f64::consts::TAU)),
        )
    }
}

fn random_vector<T: Real>(rng: &mut ChaCha8Rng, n: usize) -> Vec<C<T>> {
    (0..n)
        .map(|_| {
            C::new(
                T::lit(rng.gen_range(-1.0..1.0)),
                T::lit(rng.gen_range(-1.0..1.0)),
            )
        })
        .collect()
}

fn push_trace<T: Real>(
    trace: &mut Vec<TraceRow<T>>,
    spec: &ProblemSpec<T>,
    rec: &IterationRecord<T>,
    restart: usize,
) {
    for i in 0..rec.len() {
        trace.push(TraceRow {
            k: trace.len() + 1,
            restart_index: restart,
            value: rec.lambda_preds[i],
            lambda: spec.lambda_of(rec.lambda_preds[i]),
            residual: rec.residuals[i],
            log_scale: rec.log_scales[i],
        });
    }
}

/// Unstable dimension at `-∞` for a solve started at `mu0`.
pub fn unstable_dimension<T: Real>(
    spec: &ProblemSpec<T>,
    mu0: C<T>,
    opts: &IpmOptions,
) -> Result<usize> {
    if let Some(k) = opts.k.or(spec.k) {
        return Ok(k);
    }
    let lam = spec.lambda_of(mu0);
    let shift = T::lit(10.0) * (T::one() + lam.norm());
    morse_index(&spec.a_minus, lam + C::new(shift, T::zero()))
}

/// Locates the spectral value of `spec` nearest to `mu0` (given in the
/// spectral variable, i.e. `γ` when the problem is reparametrized).
///
/// A first pass of order `M` runs until the predictions settle to
/// `coarse_tol`; the anchor then moves by `τ (λ_p - anchor)` and short
/// passes of order `fine_order` repeat until the prediction changes by
/// less than `fine_tol (1 + |λ|)`. A final probe pass started near the
/// limit classifies it. Breakdowns (no coupling between the iterates and
/// the pencil) are retried with fresh start vectors and end as
/// `Unresolved`.
pub fn run_with_restarts<T: Real>(
    spec: &ProblemSpec<T>,
    mu0: C<T>,
    opts: &IpmOptions,
) -> Result<SpectralResult<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut k = 0;
    for _ in 0..BREAKDOWN_RETRIES {
        let seed = rng.gen();
        match solve_once(spec, mu0, opts, seed) {
            Err(e) if matches!(e.root(), Error::Breakdown { .. }) => {
                k = unstable_dimension(spec, mu0, opts)?;
            }
            other => return other,
        }
    }
    let lambda = spec.lambda_of(mu0);
    Ok(SpectralResult {
        lambda,
        gamma: spec.reparam.as_ref().map(|_| mu0),
        classification: Classification::Unresolved,
        kernel_vector: None,
        kernel_residual: None,
        record: IterationRecord::new(mu0, Vec::new()),
        trace: Vec::new(),
        restarts: 0,
        residual: T::infinity(),
        converged: false,
        branch_point: None,
        k,
    })
}

fn solve_once<T: Real>(
    spec: &ProblemSpec<T>,
    mu0: C<T>,
    opts: &IpmOptions,
    seed: u64,
) -> Result<SpectralResult<T>> {
    let n = spec.n_phase;
    let k = unstable_dimension(spec, mu0, opts).map_err(|e| e.at(crate::scalar::to_c64(mu0)))?;
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "unstable dimension {k} in phase dimension {n}"
        )));
    }
    let anchor_err = |e: Error, at: C<T>| e.at(crate::scalar::to_c64(at));
    let order = opts
        .order
        .unwrap_or(if spec.is_constant() { 200 } else { 40 })
        .max(1);
    let first_iters = opts.first_pass_iters.unwrap_or(order).clamp(1, order);
    let fine_order = opts.fine_order.max(MIN_ITERS);
    let restart_iters = opts.restart_iters.max(MIN_ITERS).min(fine_order);
    let tau = T::lit(opts.tau);
    let fine_tol = T::lit(opts.fine_tol);
    let coarse_tol = T::lit(opts.coarse_tol);

    let (left_kind, right_kind) = if spec.swap_subspaces {
        (SubspaceKind::Stable, SubspaceKind::Unstable)
    } else {
        (SubspaceKind::Unstable, SubspaceKind::Stable)
    };
    let left_dim = match &spec.left_boundary {
        Some(b) => b.ncols(),
        None if spec.swap_subspaces => n - k,
        None => k,
    };
    if left_dim == 0 || left_dim >= n {
        return Err(Error::InvalidArgument(format!(
            "left subspace dimension {left_dim} in phase dimension {n}"
        )));
    }
    let am = spec.in_spectral_variable(&spec.a_minus, mu0)?;
    let ap = spec.in_spectral_variable(&spec.a_plus, mu0)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut start = mu0;
    let mut setup = None;
    for _ in 0..SINGULAR_START_RETRIES {
        let build = || -> Result<(Side<T>, Side<T>)> {
            let left = match &spec.left_boundary {
                Some(b) => Side {
                    pencil: am.clone(),
                    kind: left_kind,
                    dim: left_dim,
                    frame: Frame::Fixed(b.clone()),
                },
                None => Side::asymptotic(am.clone(), left_kind, left_dim, start, order)?,
            };
            let right = Side::asymptotic(ap.clone(), right_kind, n - left_dim, start, order)?;
            Ok((left, right))
        };
        let (left, right) = build().map_err(|e| anchor_err(e, start))?;
        let mut solver = Solver {
            spec,
            left,
            right,
            rng: rng.clone(),
        };
        match solver.pass(start, order, first_iters, Some(coarse_tol)) {
            Ok(p) => {
                rng = solver.rng.clone();
                setup = Some((solver, p));
                break;
            }
            Err(Error::SingularZeroOrder { .. }) => {
                let dir =
                    C::from_polar(T::one(), T::lit(rng.gen_range(0.0..std::f64::consts::TAU)));
                start += dir * T::lit(1e-3) * (T::one() + start.norm());
            }
            Err(e) => return Err(anchor_err(e, start)),
        }
    }
    let (mut solver, first) =
        setup.ok_or_else(|| anchor_err(Error::SingularZeroOrder { pivot_ratio: 0.0 }, start))?;
    solver.rng = rng;

    let mut trace = Vec::new();
    push_trace(&mut trace, spec, &first.record, 0);
    let reached_coarse = first.record.len() >= 2 && {
        let inc = first.record.increments();
        let lam = first.record.last_prediction().unwrap();
        *inc.last().unwrap() < coarse_tol * (T::one() + lam.norm())
    };
    let mut lam_p = first
        .record
        .last_prediction()
        .ok_or(Error::Breakdown { step: 0 })?;
    let mut anchor = start;
    let mut last = first;
    let mut increment = T::infinity();
    let mut converged = false;
    let mut restarts = 0;
    let mut perturb = !reached_coarse;
    let mut visited = vec![(anchor, solver.left.clone(), solver.right.clone())];
    while restarts < opts.max_restarts {
        let mut next = anchor + (lam_p - anchor) * tau;
        if perturb {
            next += solver.random_direction() * T::lit(1e-3) * (T::one() + anchor.norm());
            perturb = false;
        }
        restarts += 1;
        solver
            .move_to(next, fine_order)
            .map_err(|e| anchor_err(e, next))?;
        anchor = next;
        visited.push((anchor, solver.left.clone(), solver.right.clone()));
        match solver.pass(next, fine_order, restart_iters, None) {
            Ok(p) => {
                push_trace(&mut trace, spec, &p.record, restarts);
                let lam_new = p
                    .record
                    .last_prediction()
                    .ok_or(Error::Breakdown { step: 0 })?;
                increment = (lam_new - lam_p).norm();
                lam_p = lam_new;
                last = p;
                if increment <= fine_tol * (T::one() + lam_p.norm()) {
                    converged = true;
                    break;
                }
            }
            Err(Error::SingularZeroOrder { .. }) => {
                increment = (next - lam_p).norm();
                lam_p = next;
                converged = true;
                break;
            }
            Err(e) => return Err(anchor_err(e, next)),
        }
    }

    let mut classification = Classification::Unresolved;
    let mut kernel_vector = None;
    let mut kernel_res = None;
    let mut record = last.record;
    if converged && opts.probe_iters > 0 {
        let floor = T::lit(1e-6) * (T::one() + lam_p.norm());
        let r = (T::lit(1e-2) * (T::one() + lam_p.norm()))
            .min(T::lit(0.25) * (mu0 - lam_p).norm())
            .max(floor);
        let probe_order = opts.probe_iters.max(20);
        // Approach the probe point from the nearest visited anchor that is
        // well separated from the limit, on the same side of it.
        let (from, left, right) = visited
            .iter()
            .filter(|(a, _, _)| (*a - lam_p).norm() >= T::lit(2.0) * r)
            .min_by(|x, y| {
                (x.0 - lam_p)
                    .norm()
                    .partial_cmp(&(y.0 - lam_p).norm())
                    .unwrap()
            })
            .unwrap_or(&visited[0])
            .clone();
        let toward = (from - lam_p).arg();
        for _ in 0..SINGULAR_START_RETRIES {
            solver.left = left.clone();
            solver.right = right.clone();
            let spread = T::lit(solver.rng.gen_range(-0.5..0.5));
            let probe = lam_p + C::from_polar(r, toward + spread);
            let outcome = solver
                .move_to(probe, probe_order)
                .and_then(|_| solver.pass(probe, probe_order, probe_order, None));
            match outcome {
                Ok(p) => {
                    classification = classify(&p.record, &p.pencil, fine_tol);
                    if classification == Classification::Eigenvalue {
                        kernel_res = Some(kernel_residual(&p.record, &p.pencil));
                        kernel_vector = Some(p.record.history.last().cloned().unwrap_or_default());
                    }
                    record = p.record;
                    break;
                }
                Err(Error::SingularZeroOrder { .. }) => continue,
                Err(_) => break,
            }
        }
    }

    if classification == Classification::Eigenvalue {
        let resonance = spec.swap_subspaces
            || match (spec.sheet, &spec.reparam) {
                (Some(SheetRule::PositiveGammaIsEigenvalue), Some(_)) => lam_p.re < T::zero(),
                _ => false,
            };
        if resonance {
            classification = Classification::Resonance;
        }
    }

    let mut branch_point = None;
    let mut value = lam_p;
    if classification == Classification::BranchPoint && spec.is_constant() && opts.newton_handoff {
        if let Some(bp) = newton_handoff(&solver, lam_p) {
            value = bp.lambda;
            branch_point = Some(bp);
        }
    }

    Ok(SpectralResult {
        lambda: spec.lambda_of(value),
        gamma: spec.reparam.as_ref().map(|_| value),
        classification,
        kernel_vector,
        kernel_residual: kernel_res,
        record,
        trace,
        restarts,
        residual: increment,
        converged,
        branch_point,
        k: left_dim,
    })
}

/// Newton refinement of a branch point between the two subspaces, started
/// at the restarted prediction; accepted only if it stays close to it.
fn newton_handoff<T: Real>(solver: &Solver<'_, T>, lam: C<T>) -> Option<BranchPoint<T>> {
    let tol = T::lit(1e-3) * (T::one() + lam.norm());
    let pencil = solver.right.pencil.rebase(lam);
    let own = |side: &Side<T>| match &side.frame {
        Frame::Jet(j) => Some(j.q.columns(0, side.dim).into_owned()),
        Frame::Fixed(_) => None,
    };
    let found = match (own(&solver.left), own(&solver.right)) {
        (Some(l), Some(r)) => {
            let (unstable, stable) = match solver.right.kind {
                SubspaceKind::Stable => (l, r),
                SubspaceKind::Unstable => (r, l),
            };
            branch_point_newton_between(&pencil, lam, &unstable, &stable, DEFAULT_MAX_STEPS)
                .ok()
                .filter(|bp| (bp.lambda - lam).norm() <= tol)
        }
        _ => None,
    };
    found.or_else(|| {
        branch_point_newton(&pencil, lam, DEFAULT_MAX_STEPS)
            .ok()
            .filter(|bp| (bp.lambda - lam).norm() <= tol)
    })
}

/// Spreading speed of a scalar catalog model: the spectral value in the
/// comoving speed `c` at `λ = 0` nearest to `c0`. Complex speeds are
/// reported as unresolved.
pub fn spreading_speed(
    name: &str,
    params: &Params,
    c0: f64,
    opts: &IpmOptions,
) -> Result<SpectralResult<f64>> {
    let spec = spreading_speed_problem::<f64>(name, params)?;
    let mut res = run_with_restarts(&spec, C::new(c0, 0.0), opts)?;
    if res.lambda.im.abs() > 1e-6 * (1.0 + res.lambda.norm()) {
        res.classification = Classification::Unresolved;
    }
    Ok(res)
}
