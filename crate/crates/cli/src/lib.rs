//! `stein-dual` command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 the generator or target
//! is outside the method's scope (descent violation, non-ergodic, unbounded
//! support), 3 a verification check failed.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;
use serde::Serialize;
use serde_json::json;

use stein_dual::mc::{self, AgreementReport};
use stein_dual::moments::closed_form_moment;
use stein_dual::rational::{format_rational, int};
use stein_dual::{
    derivative_bound, generator, solve_stein, solve_stein_polynomial, verify_stein_identity,
    DiffusionSpec, Error, Family, MultiIndex, Polynomial, Rational, SimConfig,
};

pub const SEED_ENV: &str = "STEIN_DUAL_SEED";

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_REJECTED: u8 = 2;
pub const EXIT_CHECK_FAILED: u8 = 3;

/// Quadrature agreement tolerance for `check quadrature`.
pub const QUADRATURE_TOL: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(
    name = "stein-dual",
    version,
    about = "Exact Stein solutions for polynomial diffusions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the Stein equation for a monomial or polynomial test function.
    Solve {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        monomial: MonomialArg,
        /// Polynomial test function as a JSON file (instead of --monomial).
        #[arg(long, conflicts_with = "monomial")]
        h: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Stationary moment from the dual chain, next to its closed form.
    Moment {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        monomial: MonomialArg,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Sup bound on a derivative of the Stein solution over the unit box.
    Bounds {
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        monomial: MonomialArg,
        /// Derivative order per axis, e.g. `1` or `1,0`.
        #[arg(long)]
        order: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run a verification suite.
    Check {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 6)]
        max_degree: u32,
        #[arg(long)]
        monomial: Option<String>,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Run one of the stochastic estimators.
    Simulate {
        #[arg(value_enum)]
        kind: SimKind,
        #[command(flatten)]
        target: TargetArgs,
        #[command(flatten)]
        monomial: MonomialArg,
        #[command(flatten)]
        sim: SimArgs,
        /// With `diffusion`, print every endpoint instead of the estimate.
        #[arg(long)]
        endpoints: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Structural checks of the generator on all monomials up to a degree.
    Validate {
        #[command(flatten)]
        target: TargetArgs,
        #[arg(long, default_value_t = 8)]
        max_degree: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args, Debug)]
struct TargetArgs {
    /// Built-in family: ou, gamma, beta, multi_ou, dirichlet.
    #[arg(long, required_unless_present = "spec", conflicts_with = "spec")]
    target: Option<String>,
    /// Family parameters, e.g. `a=2,b=3` or `r=2,lambda=1/2`.
    #[arg(long, default_value = "")]
    params: String,
    /// Generator spec as a JSON file.
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MonomialArg {
    /// Exponents, comma separated; a single integer for univariate targets.
    #[arg(long)]
    monomial: Option<String>,
}

#[derive(Args, Debug)]
struct SimArgs {
    /// Starting point, comma separated.
    #[arg(long, allow_negative_numbers = true)]
    x: Option<String>,
    /// Time horizon.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    #[arg(long, default_value_t = 1e-3)]
    em_step: f64,
    #[arg(long, env = SEED_ENV, default_value_t = mc::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 16)]
    batches: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Text,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Suite {
    SteinIdentity,
    Moments,
    Quadrature,
    Semigroup,
    FeynmanKac,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SimKind {
    Dual,
    Diffusion,
    FeynmanKac,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

enum Failure {
    Usage(String),
    Math(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_rejection() {
            Failure::Math(e)
        } else {
            Failure::Usage(e.to_string())
        }
    }
}

type CmdResult = Result<(String, u8), Failure>;

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    Outcome {
                        code: EXIT_OK,
                        stdout: rendered,
                        stderr: String::new(),
                    }
                }
                _ => Outcome {
                    code: EXIT_USAGE,
                    stdout: String::new(),
                    stderr: rendered,
                },
            };
        }
    };
    match dispatch(cli.command) {
        Ok((stdout, code)) => Outcome {
            code,
            stdout,
            stderr: String::new(),
        },
        Err(Failure::Usage(msg)) => Outcome {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
        },
        Err(Failure::Math(e)) => Outcome {
            code: EXIT_REJECTED,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Solve {
            target,
            monomial,
            h,
            format,
        } => cmd_solve(&target, &monomial, h, format),
        Command::Moment {
            target,
            monomial,
            format,
        } => cmd_moment(&target, &monomial, format),
        Command::Bounds {
            target,
            monomial,
            order,
            format,
        } => cmd_bounds(&target, &monomial, &order, format),
        Command::Check {
            suite,
            target,
            max_degree,
            monomial,
            sim,
            format,
        } => cmd_check(
            suite,
            &target,
            max_degree,
            monomial.as_deref(),
            &sim,
            format,
        ),
        Command::Simulate {
            kind,
            target,
            monomial,
            sim,
            endpoints,
            format,
        } => cmd_simulate(kind, &target, &monomial, &sim, endpoints, format),
        Command::Validate {
            target,
            max_degree,
            format,
        } => cmd_validate(&target, max_degree, format),
    }
}

fn load_spec(t: &TargetArgs) -> Result<DiffusionSpec, Failure> {
    if let Some(path) = &t.spec {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
        return serde_json::from_str(&text)
            .map_err(|e| Failure::Usage(format!("invalid spec {}: {e}", path.display())));
    }
    let name = t
        .target
        .as_deref()
        .ok_or_else(|| Failure::Usage("one of --target or --spec is required".into()))?;
    let family = Family::parse(name)?;
    Ok(DiffusionSpec::from_param_string(family, &t.params)?)
}

fn parse_exponents(s: &str, dim: usize, what: &str) -> Result<Vec<u32>, Failure> {
    let exps: Vec<u32> = s
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|_| {
            Failure::Usage(format!("--{what} expects non-negative integers, got `{s}`"))
        })?;
    if exps.len() != dim {
        return Err(Failure::Usage(format!(
            "--{what} has {} entries but the target has dimension {dim}",
            exps.len()
        )));
    }
    Ok(exps)
}

fn require_monomial(m: Option<&str>, dim: usize) -> Result<MultiIndex, Failure> {
    let s = m.ok_or_else(|| Failure::Usage("--monomial is required".into()))?;
    Ok(MultiIndex::new(parse_exponents(s, dim, "monomial")?))
}

fn parse_point(s: Option<&str>, dim: usize) -> Result<Vec<f64>, Failure> {
    let s = s.ok_or_else(|| Failure::Usage("--x is required".into()))?;
    let x: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::Usage(format!("--x expects numbers, got `{s}`")))?;
    if x.len() != dim {
        return Err(Failure::Usage(format!(
            "--x has {} entries but the target has dimension {dim}",
            x.len()
        )));
    }
    Ok(x)
}

fn sim_config(sim: &SimArgs) -> Result<(SimConfig, f64), Failure> {
    let t = sim
        .t
        .ok_or_else(|| Failure::Usage("--t is required".into()))?;
    let cfg = SimConfig {
        sample_count: sim.samples,
        time_horizon: t,
        em_step: sim.em_step,
        seed: sim.seed,
        batch_count: sim.batches.min(sim.samples.max(1)),
    };
    cfg.validate()?;
    Ok((cfg, t))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn var_list(dim: usize) -> String {
    if dim == 1 {
        "x".into()
    } else {
        (1..=dim)
            .map(|i| format!("x{i}"))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

fn cmd_solve(t: &TargetArgs, m: &MonomialArg, h: Option<PathBuf>, format: Format) -> CmdResult {
    let spec = load_spec(t)?;
    let sol = match h {
        Some(path) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
            let h: Polynomial = serde_json::from_str(&text).map_err(|e| {
                Failure::Usage(format!("invalid polynomial {}: {e}", path.display()))
            })?;
            solve_stein_polynomial(&spec, &h)?
        }
        None => solve_stein(
            &spec,
            &require_monomial(m.monomial.as_deref(), spec.dimension())?,
        )?,
    };
    let out = match format {
        Format::Json => to_json(&sol),
        Format::Text => format!(
            "f_h({}) = {}\nE h(Z) = {}\n",
            var_list(spec.dimension()),
            sol.f_h,
            format_rational(&sol.stationary_moment)
        ),
    };
    Ok((out, EXIT_OK))
}

fn cmd_moment(t: &TargetArgs, m: &MonomialArg, format: Format) -> CmdResult {
    let spec = load_spec(t)?;
    let root = require_monomial(m.monomial.as_deref(), spec.dimension())?;
    let sol = solve_stein(&spec, &root)?;
    let closed = match closed_form_moment(&spec, &root) {
        Ok(v) => Some(v),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let agree = closed.as_ref().is_none_or(|c| c == &sol.stationary_moment);
    let out = match format {
        Format::Json => to_json(&json!({
            "family": spec.family(),
            "monomial": root,
            "moment": format_rational(&sol.stationary_moment),
            "closed_form": closed.as_ref().map(format_rational),
            "agree": agree,
        })),
        Format::Text => {
            let mut s = format!(
                "E[{root}](Z) = {}\n",
                format_rational(&sol.stationary_moment)
            );
            if let Some(c) = &closed {
                let _ = writeln!(
                    s,
                    "closed form = {} ({})",
                    format_rational(c),
                    if agree { "agree" } else { "DISAGREE" }
                );
            }
            s
        }
    };
    Ok((out, if agree { EXIT_OK } else { EXIT_CHECK_FAILED }))
}

/// Reference bound from the closed-form relaxation, where one is known.
fn reference_bound(spec: &DiffusionSpec, root: &MultiIndex, order: &[u32]) -> Option<Rational> {
    match spec.family() {
        Family::Beta => {
            let (k, n) = (root.get(0), order[0]);
            if n == 0 || n > k {
                return None;
            }
            let falling: Rational = (0..n).map(|i| int((k - i) as i64)).product();
            let s = spec.param("alpha")? + spec.param("beta")?;
            Some(falling / (int(n as i64) * (s + int(n as i64 - 1))))
        }
        Family::Dirichlet if order.iter().sum::<u32>() == 1 => {
            let s: Rational = spec.params().values().sum();
            let kmax = root.exponents().iter().max().copied().unwrap_or(0);
            Some(int(kmax as i64) / s)
        }
        _ => None,
    }
}

fn cmd_bounds(t: &TargetArgs, m: &MonomialArg, order: &str, format: Format) -> CmdResult {
    let spec = load_spec(t)?;
    let root = require_monomial(m.monomial.as_deref(), spec.dimension())?;
    let order = parse_exponents(order, spec.dimension(), "order")?;
    let sol = solve_stein(&spec, &root)?;
    let bound = derivative_bound(&sol, &order)?;
    let reference = reference_bound(&spec, &root, &order);
    let out = match format {
        Format::Json => to_json(&json!({
            "family": spec.family(),
            "monomial": root,
            "order": order,
            "bound": format_rational(&bound),
            "reference": reference.as_ref().map(format_rational),
        })),
        Format::Text => {
            let orders: Vec<String> = order.iter().map(u32::to_string).collect();
            let mut s = format!(
                "sup |D^({}) f_h| <= {} on the unit box\n",
                orders.join(","),
                format_rational(&bound)
            );
            if let Some(r) = &reference {
                let _ = writeln!(s, "reference bound = {}", format_rational(r));
            }
            s
        }
    };
    Ok((out, EXIT_OK))
}

#[derive(Serialize)]
struct CheckRow {
    case: String,
    pass: bool,
    detail: String,
}

fn report(suite: &str, rows: Vec<CheckRow>, format: Format) -> (String, u8) {
    let passed = rows.iter().filter(|r| r.pass).count();
    let ok = passed == rows.len();
    let out = match format {
        Format::Json => to_json(&json!({
            "suite": suite,
            "passed": passed,
            "total": rows.len(),
            "pass": ok,
            "cases": rows,
        })),
        Format::Text => {
            let mut s = String::new();
            for r in rows.iter().filter(|r| !r.pass) {
                let _ = writeln!(s, "FAIL {}: {}", r.case, r.detail);
            }
            let _ = writeln!(s, "{suite}: {passed}/{} pass", rows.len());
            s
        }
    };
    (out, if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn agreement_row(case: String, r: &AgreementReport) -> CheckRow {
    CheckRow {
        case,
        pass: r.pass,
        detail: format!(
            "dual {:.6} ± {:.2e}, diffusion {:.6} ± {:.2e}, z = {:.3}",
            r.dual.mean, r.dual.std_error, r.diffusion.mean, r.diffusion.std_error, r.z
        ),
    }
}

fn cmd_check(
    suite: Suite,
    t: &TargetArgs,
    max_degree: u32,
    monomial: Option<&str>,
    sim: &SimArgs,
    format: Format,
) -> CmdResult {
    let spec = load_spec(t)?;
    let dim = spec.dimension();
    let roots = MultiIndex::all_up_to(dim, max_degree);
    match suite {
        Suite::SteinIdentity => {
            let mut rows = Vec::new();
            for root in roots {
                let sol = solve_stein(&spec, &root)?;
                let (ok, residual) = verify_stein_identity(&spec, &sol)?;
                rows.push(CheckRow {
                    case: root.to_string(),
                    pass: ok,
                    detail: format!("residual {residual}"),
                });
            }
            Ok(report("stein-identity", rows, format))
        }
        Suite::Moments => {
            let mut rows = Vec::new();
            for root in roots {
                let sol = solve_stein(&spec, &root)?;
                let closed = closed_form_moment(&spec, &root)?;
                rows.push(CheckRow {
                    case: root.to_string(),
                    pass: closed == sol.stationary_moment,
                    detail: format!(
                        "dual {} vs closed form {}",
                        format_rational(&sol.stationary_moment),
                        format_rational(&closed)
                    ),
                });
            }
            Ok(report("moments", rows, format))
        }
        Suite::Quadrature => {
            if spec.family() != Family::Ou {
                return Err(Failure::Usage(
                    "the quadrature check needs --target ou".into(),
                ));
            }
            let mut rows = Vec::new();
            for k in 1..=max_degree {
                let sol = solve_stein(&spec, &MultiIndex::univariate(k))?;
                for x in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                    let exact = sol.f_h.eval_f64(&[x]);
                    let quad = mc::quadrature_normal_solution(k, x);
                    rows.push(CheckRow {
                        case: format!("x^{k} at {x}"),
                        pass: (exact - quad).abs() <= QUADRATURE_TOL,
                        detail: format!("exact {exact:.12} vs quadrature {quad:.12}"),
                    });
                }
            }
            Ok(report("quadrature", rows, format))
        }
        Suite::Semigroup => {
            let root = require_monomial(monomial, dim)?;
            let x = parse_point(sim.x.as_deref(), dim)?;
            let (cfg, time) = sim_config(sim)?;
            let r = mc::semigroup_agreement(&spec, &root, &x, time, &cfg)?;
            Ok(report(
                "semigroup",
                vec![agreement_row(format!("{root} at t={time}"), &r)],
                format,
            ))
        }
        Suite::FeynmanKac => {
            if spec.family() != Family::Ou {
                return Err(Failure::Usage(
                    "the feynman-kac check needs --target ou".into(),
                ));
            }
            let root = require_monomial(monomial, 1)?;
            let x = parse_point(sim.x.as_deref(), 1)?;
            let (cfg, time) = sim_config(sim)?;
            let fk = mc::feynman_kac_ou(x[0], root.get(0), time, &cfg)?;
            let ends = mc::simulate_diffusion(&spec, &x, time, &cfg)?;
            let values: Vec<f64> = ends.iter().map(|e| root.eval_f64(e)).collect();
            let diffusion = estimate_of(&values, cfg.seed);
            let z = fk.z_score(&diffusion);
            let r = AgreementReport {
                dual: fk,
                diffusion,
                z,
                pass: z.abs() <= 4.0,
            };
            Ok(report(
                "feynman-kac",
                vec![agreement_row(format!("{root} at t={time}"), &r)],
                format,
            ))
        }
    }
}

fn estimate_of(values: &[f64], seed: u64) -> mc::EstimateWithError {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    mc::EstimateWithError {
        mean,
        std_error: (var / n as f64).sqrt(),
        sample_count: n,
        seed,
    }
}

fn estimate_text(e: &mc::EstimateWithError) -> String {
    format!(
        "mean = {}\nstd_error = {}\nn = {}\nseed = {}\n",
        e.mean, e.std_error, e.sample_count, e.seed
    )
}

fn cmd_simulate(
    kind: SimKind,
    t: &TargetArgs,
    m: &MonomialArg,
    sim: &SimArgs,
    endpoints: bool,
    format: Format,
) -> CmdResult {
    let spec = load_spec(t)?;
    let dim = spec.dimension();
    let x = parse_point(sim.x.as_deref(), dim)?;
    let (cfg, time) = sim_config(sim)?;
    let estimate = match kind {
        SimKind::Dual => {
            let root = require_monomial(m.monomial.as_deref(), dim)?;
            mc::simulate_dual(&spec, &root, &x, time, &cfg)?
        }
        SimKind::FeynmanKac => {
            if spec.family() != Family::Ou {
                return Err(Failure::Usage(
                    "feynman-kac simulation needs --target ou".into(),
                ));
            }
            let root = require_monomial(m.monomial.as_deref(), 1)?;
            mc::feynman_kac_ou(x[0], root.get(0), time, &cfg)?
        }
        SimKind::Diffusion => {
            let ends = mc::simulate_diffusion(&spec, &x, time, &cfg)?;
            if endpoints {
                let out = match format {
                    Format::Json => to_json(&ends),
                    Format::Text => ends
                        .iter()
                        .map(|e| {
                            e.iter()
                                .map(|v| v.to_string())
                                .collect::<Vec<_>>()
                                .join(" ")
                                + "\n"
                        })
                        .collect(),
                };
                return Ok((out, EXIT_OK));
            }
            let root = require_monomial(m.monomial.as_deref(), dim)?;
            let values: Vec<f64> = ends.iter().map(|e| root.eval_f64(e)).collect();
            estimate_of(&values, cfg.seed)
        }
    };
    let out = match format {
        Format::Json => to_json(&estimate),
        Format::Text => estimate_text(&estimate),
    };
    Ok((out, EXIT_OK))
}

fn cmd_validate(t: &TargetArgs, max_degree: u32, format: Format) -> CmdResult {
    if max_degree == 0 {
        return Err(Failure::Usage("--max-degree must be at least 1".into()));
    }
    let spec = load_spec(t)?;
    let report = generator::validate(&spec, max_degree);
    let code = if report.passed() {
        EXIT_OK
    } else {
        EXIT_REJECTED
    };
    let out = match format {
        Format::Json => to_json(&report),
        Format::Text => {
            let mut s = String::new();
            let signed = report
                .entries
                .iter()
                .filter(|e| e.status == generator::ValidationStatus::PassSigned)
                .count();
            for e in report.failures() {
                let _ = writeln!(s, "FAIL {}: {}", e.root, e.detail.as_deref().unwrap_or(""));
            }
            let total = report.entries.len();
            let failed = report.failures().count();
            let _ = writeln!(
                s,
                "validate {} up to degree {max_degree}: {}/{total} pass{}",
                spec.family(),
                total - failed,
                if signed.is_zero() {
                    String::new()
                } else {
                    format!(" ({signed} with signed weights)")
                }
            );
            let _ = writeln!(s, "note: {}", report.note);
            s
        }
    };
    Ok((out, code))
}
