//! Command-line front end: single solves, branch-point refinement,
//! spreading speeds and parameter sweeps.
//!
//! Exit codes: 0 when the solve converged to a classified value, 2 when it
//! ended unresolved (for sweeps: when any point did), 1 on errors.

pub mod output;
pub mod problem_file;

use clap::{Args, Parser, Subcommand, ValueEnum};
use output::{branch_point_info, finite, Complex, ResultFile, SweepRow};
use problem_file::Source;
use ptwise::newton::{branch_point_newton, DEFAULT_MAX_STEPS};
use ptwise::scalar::C;
use ptwise::{
    make_problem, run_with_restarts, spreading_speed, Classification, IpmOptions, Params, Problem,
    Solution,
};
use rayon::prelude::*;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug, Parser)]
#[command(
    name = "ptwise",
    version,
    about = "Pointwise spectral values of nonlinear matrix pencils"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate the spectral value nearest to --lambda0.
    Solve(SolveArgs),
    /// Solve, then refine the limit as a double root of the dispersion relation.
    BranchPoint(SolveArgs),
    /// Linear spreading speed of a scalar comoving model.
    SpreadingSpeed(SpeedArgs),
    /// Solve over a grid of one parameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Start value "re,im" in the spectral variable (γ for reparametrized problems).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex)]
    pub lambda0: C<f64>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write <prefix>.result.json and <prefix>.convergence.csv; without it the result JSON goes to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpeedArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Initial speed guess.
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    pub c0: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Start value; unused when sweeping lambda0.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex, default_value = "0,0")]
    pub lambda0: C<f64>,
    #[arg(long, value_enum)]
    pub parameter: SweepParameter,
    /// Grid values separated by ';' (e.g. "-0.05;0.05"); complex "re,im" is accepted for lambda0.
    #[arg(long, value_delimiter = ';', allow_hyphen_values = true, value_parser = parse_complex, required_unless_present = "range")]
    pub values: Vec<C<f64>>,
    /// Uniform grid "start,stop,count".
    #[arg(long, conflicts_with = "values", allow_hyphen_values = true)]
    pub range: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write <prefix>.sweep.csv; without it the CSV goes to stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SweepParameter {
    Eps,
    Lambda0,
    #[value(name = "L")]
    L,
    Dx,
}

impl SweepParameter {
    fn name(self) -> &'static str {
        match self {
            SweepParameter::Eps => "eps",
            SweepParameter::Lambda0 => "lambda0",
            SweepParameter::L => "L",
            SweepParameter::Dx => "dx",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Catalog name or path to a TOML problem file.
    #[arg(long)]
    pub problem: String,
    /// Catalog parameter KEY=VALUE (repeatable).
    #[arg(long = "param", value_parser = parse_param, allow_hyphen_values = true)]
    pub params: Vec<(String, f64)>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<f64>,
    /// Half length of the truncated domain.
    #[arg(long = "L")]
    pub half_length: Option<f64>,
    /// Number of grid intervals.
    #[arg(long = "n")]
    pub intervals: Option<f64>,
    #[arg(long = "F0", allow_hyphen_values = true)]
    pub f0: Option<f64>,
    #[arg(long = "Ny")]
    pub ny: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub c: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub n1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub n2: Option<f64>,
}

impl ProblemArgs {
    fn overrides(&self) -> Params {
        let named = [
            ("eps", self.eps),
            ("L", self.half_length),
            ("n", self.intervals),
            ("F0", self.f0),
            ("Ny", self.ny),
            ("c", self.c),
            ("n1", self.n1),
            ("n2", self.n2),
        ];
        let mut p: Params = self.params.iter().cloned().collect();
        for (k, v) in named {
            if let Some(v) = v {
                p.insert(k.to_string(), v);
            }
        }
        p
    }

    pub fn resolve(&self) -> Result<Source, String> {
        let over = self.overrides();
        if problem_file::is_file_reference(&self.problem) {
            match problem_file::load(self.problem.as_ref())? {
                Source::Catalog { name, mut params } => {
                    params.extend(over);
                    Ok(Source::Catalog { name, params })
                }
                Source::Explicit(_) if !over.is_empty() => {
                    Err("parameter flags apply only to catalog problems".to_string())
                }
                s => Ok(s),
            }
        } else {
            Ok(Source::Catalog {
                name: self.problem.clone(),
                params: over,
            })
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// First-pass truncation order (40 for boundary-value, 200 for constant problems).
    #[arg(long)]
    pub order: Option<usize>,
    #[arg(long, default_value_t = 8)]
    pub fine_order: usize,
    #[arg(long)]
    pub first_pass_iters: Option<usize>,
    #[arg(long, default_value_t = 5)]
    pub restart_iters: usize,
    #[arg(long, default_value_t = 0.9)]
    pub tau: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub coarse_tol: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub fine_tol: f64,
    #[arg(long, default_value_t = 60)]
    pub max_restarts: usize,
    /// Iterations of the classification probe (0 disables classification).
    #[arg(long, default_value_t = 40)]
    pub probe_iters: usize,
    /// Skip the Newton refinement of branch points.
    #[arg(long)]
    pub no_newton: bool,
    /// Dimension of the left subspace (default: Morse index).
    #[arg(long)]
    pub k: Option<usize>,
}

impl SolverArgs {
    pub fn options(&self) -> IpmOptions {
        IpmOptions {
            order: self.order,
            fine_order: self.fine_order,
            first_pass_iters: self.first_pass_iters,
            restart_iters: self.restart_iters,
            tau: self.tau,
            coarse_tol: self.coarse_tol,
            fine_tol: self.fine_tol,
            max_restarts: self.max_restarts,
            seed: self.seed,
            probe_iters: self.probe_iters,
            newton_handoff: !self.no_newton,
            k: self.k,
        }
    }
}

pub fn parse_complex(s: &str) -> Result<C<f64>, String> {
    let mut parts = s.split(',').map(str::trim);
    let re = parts.next().unwrap_or("");
    let im = parts.next().unwrap_or("0");
    if parts.next().is_some() {
        return Err(format!("expected \"re,im\", got '{s}'"));
    }
    let num = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| format!("expected \"re,im\", got '{s}'"))
    };
    Ok(C::new(num(re)?, num(im)?))
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected KEY=VALUE, got '{s}'"))?;
    let v = v
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("bad value in '{s}'"))?;
    Ok((k.trim().to_string(), v))
}

fn parse_range(s: &str) -> Result<Vec<C<f64>>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || format!("expected \"start,stop,count\", got '{s}'");
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    Ok(match n {
        0 => Vec::new(),
        1 => vec![C::new(a, 0.0)],
        _ => (0..n)
            .map(|i| C::new(a + (b - a) * i as f64 / (n - 1) as f64, 0.0))
            .collect(),
    })
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Solve(a) => solve_command(a, false),
        Command::BranchPoint(a) => solve_command(a, true),
        Command::SpreadingSpeed(a) => speed_command(a),
        Command::Sweep(a) => sweep_command(a),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn build(source: &Source) -> Result<Problem, String> {
    match source {
        Source::Catalog { name, params } => make_problem(name, params).map_err(|e| e.to_string()),
        Source::Explicit(p) => Ok((**p).clone()),
    }
}

fn result_file(
    problem: &str,
    mode: &str,
    start: C<f64>,
    opts: &IpmOptions,
    spec: &Problem,
    res: &Solution,
    secs: f64,
) -> ResultFile {
    let order = opts
        .order
        .unwrap_or(if spec.is_constant() { 200 } else { 40 });
    ResultFile {
        problem: problem.to_string(),
        mode: mode.to_string(),
        seed: opts.seed,
        start: start.into(),
        lambda: res.lambda.into(),
        gamma: res.gamma.map(Complex::from),
        speed: None,
        classification: res.classification.to_string(),
        converged: res.converged,
        restarts: res.restarts,
        iterations: res.iterations(),
        residual: finite(res.residual),
        kernel_residual: res.kernel_residual.and_then(finite),
        k: res.k,
        order,
        fine_order: opts.fine_order,
        branch_point: branch_point_info(res),
        runtime_seconds: secs,
    }
}

fn emit(output: &Option<PathBuf>, result: &ResultFile, res: &Solution) -> Result<i32, String> {
    match output {
        Some(prefix) => {
            output::write_result(prefix, result).map_err(|e| format!("writing result: {e}"))?;
            output::write_convergence(prefix, &res.trace)
                .map_err(|e| format!("writing convergence: {e}"))?;
            let l = result.lambda;
            println!(
                "{} λ = {:.12}{:+.12}i ({} iterations, {} restarts)",
                result.classification, l.re, l.im, result.iterations, result.restarts
            );
        }
        None => println!(
            "{}",
            serde_json::to_string_pretty(result).map_err(|e| e.to_string())?
        ),
    }
    Ok(if result.success() { 0 } else { 2 })
}

fn solve_command(a: SolveArgs, branch_point: bool) -> Result<i32, String> {
    let source = a.problem.resolve()?;
    let spec = build(&source)?;
    let opts = a.solver.options();
    let start = Instant::now();
    let mut res = run_with_restarts(&spec, a.lambda0, &opts)
        .map_err(|e| format!("solve from {}: {e}", fmt(a.lambda0)))?;
    if branch_point {
        if !spec.is_constant() || spec.reparam.is_some() || spec.left_boundary.is_some() {
            return Err("branch-point mode needs a constant-coefficient problem in λ".into());
        }
        if res.branch_point.is_none() {
            let bp = branch_point_newton(&spec.a_minus, res.lambda, DEFAULT_MAX_STEPS)
                .map_err(|e| format!("branch-point Newton from {}: {e}", fmt(res.lambda)))?;
            res.lambda = bp.lambda;
            res.branch_point = Some(bp);
        }
        res.classification = Classification::BranchPoint;
    }
    let secs = start.elapsed().as_secs_f64();
    let mode = if branch_point {
        "branch-point"
    } else {
        "solve"
    };
    let result = result_file(source.name(), mode, a.lambda0, &opts, &spec, &res, secs);
    emit(&a.output, &result, &res)
}

fn speed_command(a: SpeedArgs) -> Result<i32, String> {
    let (name, params) = match a.problem.resolve()? {
        Source::Catalog { name, params } => (name, params),
        Source::Explicit(_) => {
            return Err("spreading-speed mode needs a scalar catalog model".into())
        }
    };
    let opts = a.solver.options();
    let start = Instant::now();
    let res = spreading_speed(&name, &params, a.c0, &opts)
        .map_err(|e| format!("speed solve from c = {}: {e}", a.c0))?;
    let secs = start.elapsed().as_secs_f64();
    let spec = ptwise::problems::spreading_speed_problem::<f64>(&name, &params)
        .map_err(|e| e.to_string())?;
    let mut result = result_file(
        &name,
        "spreading-speed",
        C::new(a.c0, 0.0),
        &opts,
        &spec,
        &res,
        secs,
    );
    result.speed = Some(res.lambda.re);
    emit(&a.output, &result, &res)
}

fn fmt(z: C<f64>) -> String {
    format!("{}{:+}i", z.re, z.im)
}

/// Worker count: `PTWISE_THREADS` when set, otherwise all cores.
pub fn sweep_threads() -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("PTWISE_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .map_or(cores, |n| n.min(cores))
}

fn sweep_command(a: SweepArgs) -> Result<i32, String> {
    let values = match &a.range {
        Some(r) => parse_range(r)?,
        None => a.values.clone(),
    };
    let source = a.problem.resolve()?;
    if a.parameter != SweepParameter::Lambda0 && matches!(source, Source::Explicit(_)) {
        return Err(format!(
            "sweeping {} needs a catalog problem",
            a.parameter.name()
        ));
    }
    if a.parameter != SweepParameter::Lambda0 {
        if let Some(v) = values.iter().find(|v| v.im != 0.0) {
            return Err(format!(
                "{} takes real values, got {}",
                a.parameter.name(),
                fmt(*v)
            ));
        }
    }
    let base = a.solver.options();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(sweep_threads())
        .build()
        .map_err(|e| e.to_string())?;
    let rows: Vec<SweepRow> = pool.install(|| {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| sweep_point(&a, &source, &base, i, v))
            .collect()
    });
    let ok = rows
        .iter()
        .all(|r| r.error.is_empty() && r.classification != "unresolved");
    match &a.output {
        Some(prefix) => {
            let path = output::with_suffix(prefix, ".sweep.csv");
            output::write_rows(&path, &rows)
                .map_err(|e| format!("writing {}: {e}", path.display()))?;
            for r in &rows {
                println!(
                    "{} = {}: {}{}",
                    r.parameter,
                    fmt(C::new(r.re_value, r.im_value)),
                    r.classification,
                    r.re_gamma
                        .or(r.re_lambda)
                        .map_or(String::new(), |x| format!(" {x:.10}"))
                );
            }
        }
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in &rows {
                w.serialize(r).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())?;
        }
    }
    Ok(if ok { 0 } else { 2 })
}

fn sweep_point(
    a: &SweepArgs,
    source: &Source,
    base: &IpmOptions,
    index: usize,
    value: C<f64>,
) -> SweepRow {
    let mut opts = base.clone();
    opts.seed = base.seed.wrapping_add(index as u64);
    let mut row = SweepRow {
        index,
        parameter: a.parameter.name().to_string(),
        re_value: value.re,
        im_value: value.im,
        re_lambda: None,
        im_lambda: None,
        re_gamma: None,
        im_gamma: None,
        classification: "unresolved".to_string(),
        iterations: 0,
        restarts: 0,
        residual: None,
        error: String::new(),
    };
    let solved = point_problem(source, a.parameter, value).and_then(|spec| {
        let mu0 = if a.parameter == SweepParameter::Lambda0 {
            value
        } else {
            a.lambda0
        };
        run_with_restarts(&spec, mu0, &opts).map_err(|e| e.to_string())
    });
    match solved {
        Ok(res) => {
            row.re_lambda = Some(res.lambda.re);
            row.im_lambda = Some(res.lambda.im);
            row.re_gamma = res.gamma.map(|g| g.re);
            row.im_gamma = res.gamma.map(|g| g.im);
            row.classification = res.classification.to_string();
            row.iterations = res.iterations();
            row.restarts = res.restarts;
            row.residual = finite(res.residual);
        }
        Err(e) => row.error = e,
    }
    row
}

fn point_problem(
    source: &Source,
    parameter: SweepParameter,
    value: C<f64>,
) -> Result<Problem, String> {
    let Source::Catalog { name, params } = source else {
        return build(source);
    };
    let mut params = params.clone();
    match parameter {
        SweepParameter::Lambda0 => {}
        SweepParameter::Eps => {
            params.insert("eps".into(), value.re);
        }
        SweepParameter::L => {
            params.insert("L".into(), value.re);
        }
        SweepParameter::Dx => {
            let defaults = ptwise::problems::default_params(name).map_err(|e| e.to_string())?;
            let half = params
                .get("L")
                .or(defaults.get("L"))
                .copied()
                .ok_or(format!("'{name}' has no grid"))?;
            if value.re <= 0.0 {
                return Err(format!("dx must be positive, got {}", value.re));
            }
            params.insert("n".into(), (2.0 * half / value.re).round().max(1.0));
        }
    }
    make_problem(name, &params).map_err(|e| e.to_string())
}
