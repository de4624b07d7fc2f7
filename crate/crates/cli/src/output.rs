//! `<prefix>.result.json`, `<prefix>.convergence.csv` and `<prefix>.sweep.csv`.
//!
//! Convergence columns: `k, restart_index, re_lambda, im_lambda, residual, log_scale`.
//! `k` counts iterations over all passes from 1, `restart_index` is 0 for
//! the first pass, and the prediction is reported in `λ` even when the
//! solve runs in a reparametrized variable.

use ptwise::ipm::TraceRow;
use ptwise::scalar::C;
use ptwise::Solution;
use serde::{Deserialize, Serialize};
use std::io;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

impl From<C<f64>> for Complex {
    fn from(z: C<f64>) -> Self {
        Complex { re: z.re, im: z.im }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchPointInfo {
    pub lambda: Complex,
    /// Double spatial root.
    pub nu: Complex,
    pub residual: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub problem: String,
    pub mode: String,
    pub seed: u64,
    /// Start value in the spectral variable.
    pub start: Complex,
    pub lambda: Complex,
    /// Present when the problem is solved in `γ` with `λ = φ(γ)`.
    pub gamma: Option<Complex>,
    /// Present in spreading-speed mode.
    pub speed: Option<f64>,
    pub classification: String,
    pub converged: bool,
    pub restarts: usize,
    pub iterations: usize,
    /// Last change of the restarted prediction; `null` when no pass ran.
    pub residual: Option<f64>,
    pub kernel_residual: Option<f64>,
    /// Dimension of the left subspace.
    pub k: usize,
    pub order: usize,
    pub fine_order: usize,
    pub branch_point: Option<BranchPointInfo>,
    pub runtime_seconds: f64,
}

impl ResultFile {
    pub fn success(&self) -> bool {
        self.converged && self.classification != "unresolved"
    }
}

pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn branch_point_info(res: &Solution) -> Option<BranchPointInfo> {
    res.branch_point.as_ref().map(|bp| BranchPointInfo {
        lambda: bp.lambda.into(),
        nu: bp.nu.into(),
        residual: bp.residual,
        steps: bp.steps,
    })
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceRow {
    pub k: usize,
    pub restart_index: usize,
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub residual: f64,
    pub log_scale: f64,
}

impl From<&TraceRow<f64>> for ConvergenceRow {
    fn from(r: &TraceRow<f64>) -> Self {
        ConvergenceRow {
            k: r.k,
            restart_index: r.restart_index,
            re_lambda: r.lambda.re,
            im_lambda: r.lambda.im,
            residual: r.residual,
            log_scale: r.log_scale,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub parameter: String,
    pub re_value: f64,
    pub im_value: f64,
    pub re_lambda: Option<f64>,
    pub im_lambda: Option<f64>,
    pub re_gamma: Option<f64>,
    pub im_gamma: Option<f64>,
    pub classification: String,
    pub iterations: usize,
    pub restarts: usize,
    pub residual: Option<f64>,
    /// Empty unless the point failed.
    pub error: String,
}

pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn write_result(prefix: &Path, result: &ResultFile) -> io::Result<()> {
    let json = serde_json::to_string_pretty(result).map_err(io::Error::other)?;
    std::fs::write(with_suffix(prefix, ".result.json"), json + "\n")
}

pub fn read_result(path: &Path) -> io::Result<ResultFile> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(io::Error::other)
}

pub fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()
}

pub fn write_convergence(prefix: &Path, trace: &[TraceRow<f64>]) -> io::Result<()> {
    let path = with_suffix(prefix, ".convergence.csv");
    if trace.is_empty() {
        // csv writes headers only together with the first record
        return std::fs::write(
            path,
            "k,restart_index,re_lambda,im_lambda,residual,log_scale\n",
        );
    }
    write_rows(&path, trace.iter().map(ConvergenceRow::from))
}
