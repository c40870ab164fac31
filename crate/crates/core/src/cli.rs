//! Command-line surface over the library.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::DVector;
use serde_json::{json, Value};

use crate::cycle_lp::{lp_feasible, lp_feasible_any, lp_margin};
use crate::error::{Error, Result};
use crate::hb_engine::{
    detect_cycle, guarantee_violations, observed_noise_threshold, perturbed_run, run, stability_constants,
    NoiseMode, NoiseSpec, Objective, SimTrace,
};
use crate::quad_rates::{rate_on_quadratics, FunctionClass, HbParams};
use crate::report::{self, SweepMode, SweepSpec, TOOL_NAME, TOOL_VERSION};
use crate::rou_region::{
    build_counterexample, in_closed_convergence_region, polynomial_value, rou_member, rou_member_any, CounterExample, DEFAULT_K_MAX,
};
use crate::smooth::{
    dilate, hull_crossing_samples, scaled_cycle_deviation, smoothed_grad, third_derivative_estimate,
    QuadratureSpec, SmoothedCounterExample,
};

/// Exit code for invalid invocations.
pub const EXIT_USAGE: i32 = 2;
/// Exit code for numerical failures and unmet preconditions.
pub const EXIT_NUMERICAL: i32 = 3;
/// Exit code for file-system errors.
pub const EXIT_IO: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "hb-landscape", version, about = "Convergence and cycling landscape of heavy-ball momentum")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct ClassArgs {
    /// Strong convexity modulus.
    #[arg(long, allow_negative_numbers = true)]
    pub mu: f64,
    /// Smoothness constant.
    #[arg(long = "L", allow_negative_numbers = true)]
    pub ell: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PointArgs {
    /// Step-size.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: f64,
    /// Momentum.
    #[arg(long, allow_negative_numbers = true)]
    pub beta: f64,
    #[command(flatten)]
    pub class: ClassArgs,
}

impl PointArgs {
    fn parse(&self) -> Result<(HbParams, FunctionClass)> {
        Ok((HbParams::new(self.gamma, self.beta), FunctionClass::new(self.class.mu, self.class.ell)?))
    }
}

/// Mollifier radius: a number or `auto` for `r_max / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SmoothArg {
    Auto,
    Radius(f64),
}

fn parse_smooth(s: &str) -> std::result::Result<SmoothArg, String> {
    if s == "auto" {
        return Ok(SmoothArg::Auto);
    }
    s.parse().map(SmoothArg::Radius).map_err(|_| format!("expected a number or `auto`, got `{s}`"))
}

/// Gradient-noise setting of `cycle-demo`.
#[derive(Debug, Clone, Copy, PartialEq, clap::ValueEnum)]
pub enum GradNoiseArg {
    /// Half of every noise bound covered by the robustness guarantee.
    #[value(alias = "within-thm53")]
    WithinGuarantee,
    None,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Worst-case rate on quadratics at one parameter pair.
    Rate {
        #[command(flatten)]
        point: PointArgs,
    },
    /// Grid sweep over (gamma, beta) written as CSV with a JSON sidecar.
    Sweep {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long, value_enum, default_value = "rate")]
        mode: SweepMode,
        /// Grid points per axis.
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        k_max: usize,
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        gamma_range: Option<Vec<f64>>,
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        beta_range: Option<Vec<f64>>,
        /// Constant `C` of the sublevel level `(1 - C kappa)/(1 + C kappa)`.
        #[arg(long, default_value_t = 50.0 / 3.0 + 0.01)]
        sls_constant: f64,
        /// Figure identifier stored in the metadata.
        #[arg(long, default_value = "custom")]
        figure: String,
        /// Also render an SVG next to the CSV.
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Heavy-ball on the counterexample: trace, cycle verdict and stability constants.
    CycleDemo {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        k: usize,
        /// Iterations; defaults to 10000, or 300 with smoothing.
        #[arg(long)]
        steps: Option<usize>,
        /// Run on the mollified counterexample with this radius, or `auto` for r_max/2.
        #[arg(long, value_parser = parse_smooth)]
        smooth: Option<SmoothArg>,
        /// Dilation factor.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Initial perturbation as a fraction of kappa_P r_max.
        #[arg(long)]
        noise_init: Option<f64>,
        #[arg(long, value_enum)]
        noise_grad: Option<GradNoiseArg>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trace CSV path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cycle LP at one parameter pair, compared with the analytic region.
    LpCheck {
        #[command(flatten)]
        point: PointArgs,
        /// Single period; all periods up to --k-max when omitted.
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, default_value_t = 25)]
        k_max: usize,
    },
    /// Seeded perturbed runs under guaranteed noise bounds.
    Robustness {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fraction of the guaranteed noise bounds.
        #[arg(long, default_value_t = 1.0)]
        fraction: f64,
        /// Also search the empirical noise threshold.
        #[arg(long)]
        threshold: bool,
    },
    /// Reference rates of standard methods.
    Table4 {
        #[arg(long, default_value_t = 0.01)]
        kappa: f64,
    },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_NUMERICAL,
    }
}

fn print_json(out: &mut dyn Write, v: &Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(v)?)?;
    Ok(())
}

fn header() -> Value {
    json!({ "tool": TOOL_NAME, "version": TOOL_VERSION })
}

/// Runs a parsed command, writing results to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Rate { point } => cmd_rate(point, out),
        Command::Sweep { class, mode, n, k_max, gamma_range, beta_range, sls_constant, figure, svg, out: path } => {
            let c = FunctionClass::new(class.mu, class.ell)?;
            let mut spec = SweepSpec::default_grid(c, *mode, *n);
            spec.k_max = *k_max;
            spec.sls_constant = *sls_constant;
            if let Some(r) = gamma_range {
                spec.gamma_range = (r[0], r[1]);
            }
            if let Some(r) = beta_range {
                spec.beta_range = (r[0], r[1]);
            }
            let bundle = report::sweep(&spec, figure)?;
            let files = report::write_bundle(&bundle, path, *svg)?;
            let mut v = header();
            v["rows"] = json!(bundle.rows.len());
            v["files"] = json!(files);
            v["metadata"] = bundle.metadata;
            print_json(out, &v)
        }
        Command::CycleDemo { point, k, steps, smooth, lambda, noise_init, noise_grad, seed, out: path } => {
            cmd_cycle_demo(point, *k, *steps, *smooth, *lambda, *noise_init, *noise_grad, *seed, path.as_ref(), out)
        }
        Command::LpCheck { point, k, k_max } => cmd_lp_check(point, *k, *k_max, out),
        Command::Robustness { point, k, runs, steps, seed, fraction, threshold } => {
            cmd_robustness(point, *k, *runs, *steps, *seed, *fraction, *threshold, out)
        }
        Command::Table4 { kappa } => {
            let mut v = header();
            v["kappa"] = json!(kappa);
            v["rates"] = json!(report::table4(*kappa)?);
            print_json(out, &v)
        }
    }
}

fn cmd_rate(point: &PointArgs, out: &mut dyn Write) -> Result<()> {
    let (p, c) = point.parse()?;
    let r = rate_on_quadratics(p, c);
    let mut v = header();
    v["params"] = json!({ "gamma": p.gamma, "beta": p.beta, "mu": c.mu(), "L": c.ell() });
    v["kappa"] = json!(c.kappa());
    v["rho"] = json!(r.rho);
    v["region"] = json!(r.region.as_str());
    v["reference"] = json!(report::table4(c.kappa())?);
    print_json(out, &v)
}

fn dvec(x: nalgebra::Vector2<f64>) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

fn tau_estimate<F: Objective>(f: &F, ce: &CounterExample, lambda: f64) -> f64 {
    let spread = ce.r_max.max(1e-3);
    let samples: Vec<_> = hull_crossing_samples(ce, spread, &[-0.5, -0.25, 0.0, 0.25, 0.5])
        .into_iter()
        .map(|(x, v)| (lambda * x, v))
        .collect();
    third_derivative_estimate(f, &samples, 1e-3 * spread * lambda)
}

#[allow(clippy::too_many_arguments)]
fn cmd_cycle_demo(
    point: &PointArgs,
    k: usize,
    steps: Option<usize>,
    smooth: Option<SmoothArg>,
    lambda: f64,
    noise_init: Option<f64>,
    noise_grad: Option<GradNoiseArg>,
    seed: u64,
    path: Option<&PathBuf>,
    out: &mut dyn Write,
) -> Result<()> {
    let (p, c) = point.parse()?;
    let ce = build_counterexample(p, c, k)?;
    let consts = stability_constants(p, c.mu(), None)?;
    let mut v = header();
    v["params"] = json!({ "gamma": p.gamma, "beta": p.beta, "mu": c.mu(), "L": c.ell(), "k": k, "lambda": lambda, "seed": seed });
    v["r_max"] = json!(ce.r_max);
    v["stability"] = json!(consts);

    let trace: SimTrace;
    let noisy = noise_init.is_some() || matches!(noise_grad, Some(GradNoiseArg::WithinGuarantee));
    if noisy {
        if smooth.is_some() || lambda != 1.0 {
            return Err(Error::Domain("noise flags apply to the unsmoothed, undilated counterexample".into()));
        }
        let steps = steps.unwrap_or(10_000);
        let init = noise_init.unwrap_or(0.0);
        let noise = match noise_grad {
            Some(GradNoiseArg::WithinGuarantee) => {
                NoiseSpec::within_guarantee(&ce, &consts, init, 0.5, NoiseMode::UniformRandom, seed)
            }
            _ => NoiseSpec::init_only(init, seed),
        };
        let res = perturbed_run(&ce, c, p, k, &noise, steps, true)?;
        v["noise"] = json!(noise);
        v["stayed_in_tube"] = json!(res.stayed_in_tube);
        v["max_deviation"] = json!(res.max_deviation);
        v["max_tube_ratio"] = json!(res.max_tube_ratio);
        v["residual_decay_rate"] = json!(res.residual_decay_rate);
        v["verdict"] = json!(if res.stayed_in_tube { "stays-near-cycle" } else { "left-tube" });
        trace = res.trace;
    } else if let Some(s) = smooth {
        let eps = match s {
            SmoothArg::Auto => ce.r_max / 2.0,
            SmoothArg::Radius(e) => e,
        };
        let steps = steps.unwrap_or(300);
        let sce = SmoothedCounterExample::new(ce.clone(), eps, QuadratureSpec::default())?;
        let coincidence = (0..k)
            .map(|t| {
                let x = ce.cycle.point(t as i64);
                let g = smoothed_grad(&sce, &x);
                (g.grad - ce.eval(&x).1).norm()
            })
            .fold(0.0, f64::max);
        let tau_base = tau_estimate(&sce, &ce, 1.0);
        let dil = dilate(sce, lambda)?;
        let tau = tau_estimate(&dil, &ce, lambda);
        let dev = scaled_cycle_deviation(&dil, &ce, p, lambda, steps)?;
        v["epsilon"] = json!(eps);
        v["smoothed_gradient_gap"] = json!(coincidence);
        v["tau_estimate_undilated"] = json!(tau_base);
        v["tau_estimate"] = json!(tau);
        v["max_deviation"] = json!(dev);
        v["relative_deviation"] = json!(dev / lambda);
        v["verdict"] = json!(if dev / lambda <= 1e-6 { "cycles" } else { "no-cycle" });
        let x = |t: i64| dvec(lambda * ce.cycle.point(t));
        trace = run(|z| dil.grad(z), p, x(0), x(1), steps)?;
    } else {
        let steps = steps.unwrap_or(10_000);
        let f = dilate(ce.clone(), lambda)?;
        let x = |t: i64| dvec(lambda * ce.cycle.point(t));
        trace = run(|z| f.grad(z), p, x(0), x(1), steps)?;
        let dev = trace.iterates.iter().enumerate().map(|(t, z)| (z - x(t as i64)).norm()).fold(0.0, f64::max);
        let (cycles, lag_dev) = detect_cycle(&trace, k, 1e-9 * lambda.max(1.0))?;
        v["max_deviation"] = json!(dev);
        v["lagged_deviation"] = json!(lag_dev);
        v["verdict"] = json!(if cycles && dev <= 1e-9 * lambda.max(1.0) { "cycles" } else { "no-cycle" });
    }
    if let Some(path) = path {
        let cycle_ref = if noisy || smooth.is_some() || lambda != 1.0 {
            Some((&ce.cycle, lambda))
        } else {
            Some((&ce.cycle, 1.0))
        };
        let mut text = format!("# {}\n", serde_json::to_string(&v["params"])?);
        text.insert_str(2, &format!("{TOOL_NAME} {TOOL_VERSION} "));
        text += &report::trace_csv(&trace, cycle_ref)?;
        std::fs::write(path, text)?;
        v["trace"] = json!(path);
    }
    print_json(out, &v)
}

fn cmd_lp_check(point: &PointArgs, k: Option<usize>, k_max: usize, out: &mut dyn Write) -> Result<()> {
    let (p, c) = point.parse()?;
    let mut v = header();
    v["params"] = json!({ "gamma": p.gamma, "beta": p.beta, "mu": c.mu(), "L": c.ell() });
    if !in_closed_convergence_region(p, c) {
        v["in_convergence_region"] = json!(false);
        return print_json(out, &v);
    }
    let (cert, analytic) = match k {
        Some(k) => {
            let (margin, _) = lp_margin(p, c, k)?;
            v["margin"] = json!(margin);
            (lp_feasible(p, c, k)?, rou_member(p, c, k).then_some(k))
        }
        None => (lp_feasible_any(p, c, k_max)?, rou_member_any(p, c, k_max)),
    };
    v["analytic_period"] = json!(analytic);
    match cert {
        Some(cert) => {
            let residual = cert.max_residual(p, c)?;
            v["feasible"] = json!(true);
            v["certificate"] = json!(cert);
            v["max_interpolation_residual"] = json!(residual);
        }
        None => v["feasible"] = json!(false),
    }
    print_json(out, &v)
}

#[allow(clippy::too_many_arguments)]
fn cmd_robustness(
    point: &PointArgs,
    k: usize,
    runs: usize,
    steps: usize,
    seed: u64,
    fraction: f64,
    threshold: bool,
    out: &mut dyn Write,
) -> Result<()> {
    let (p, c) = point.parse()?;
    let ce = build_counterexample(p, c, k)?;
    let consts = stability_constants(p, c.mu(), None)?;
    let mut stayed = 0;
    let mut worst: f64 = 0.0;
    for r in 0..runs as u64 {
        let noise = NoiseSpec::within_guarantee(&ce, &consts, fraction.min(1.0), fraction, NoiseMode::UniformRandom, seed + r);
        if !guarantee_violations(&ce, &consts, &noise).is_empty() {
            return Err(Error::Precondition(format!("fraction {fraction} exceeds the guaranteed bounds")));
        }
        let res = perturbed_run(&ce, c, p, k, &noise, steps, true)?;
        stayed += res.stayed_in_tube as usize;
        worst = worst.max(res.max_tube_ratio);
    }
    let init = perturbed_run(&ce, c, p, k, &NoiseSpec::init_only(0.5, seed), steps, true)?;
    let iso = rate_on_quadratics(p, FunctionClass::new(c.mu(), c.mu())?);
    let mut v = header();
    v["params"] = json!({ "gamma": p.gamma, "beta": p.beta, "mu": c.mu(), "L": c.ell(), "k": k, "runs": runs, "steps": steps, "seed": seed, "fraction": fraction });
    v["r_max"] = json!(ce.r_max);
    v["stability"] = json!(consts);
    v["runs_in_tube"] = json!(stayed);
    v["max_tube_ratio"] = json!(worst);
    v["init_only_decay_rate"] = json!(init.residual_decay_rate);
    v["isotropic_rate"] = json!(iso.rho);
    if threshold {
        v["observed_noise_threshold"] = json!(observed_noise_threshold(&ce, steps, seed)?);
    }
    print_json(out, &v)
}

/// Text explaining why `(gamma, beta)` has no period-`k` cycle.
pub fn membership_hint(p: HbParams, c: FunctionClass, k: usize) -> String {
    if k >= 2 && (0.0..1.0).contains(&p.beta) {
        format!("polynomial value {:.6e}", polynomial_value(p.beta, k, c, p.gamma))
    } else {
        "momentum outside [0, 1)".into()
    }
}
