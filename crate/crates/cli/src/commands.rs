//! Command implementations. Each returns the rendered report.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use escape_rate::certificates::{self, Bracket, Certificate, Direction, NondefectivityReport, VerificationReport};
use escape_rate::horizon;
use escape_rate::mmg::{self, JsrBracket};
use escape_rate::simplex_iter::{self, GridSpec};
use escape_rate::strategies::{self, PlayTrace, Strategy, StrategyKind, ValueFunction};
use escape_rate::vecadd::{self, VecAddSolution};
use escape_rate::{Error, GameInstance, GridFunction, Point, Role};
use serde::{Deserialize, Serialize};

use crate::instance::{Instance, Kind};
use crate::{CliError, GridArgs, OutFormat};

/// Tolerance for re-verified certificate values.
const CHECK_TOL: f64 = 1e-12;

fn json<T: Serialize>(report: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(report).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn render<T: Serialize>(out: OutFormat, report: &T, csv: impl FnOnce() -> Option<String>) -> Result<String, CliError> {
    match out {
        OutFormat::Json => json(report),
        OutFormat::Csv => csv().ok_or_else(|| CliError::Usage("csv output is not available for this command".into())),
    }
}

fn game<'a>(inst: &'a Instance, command: &str) -> Result<&'a GameInstance, CliError> {
    inst.game.as_ref().ok_or_else(|| unsupported(inst, command))
}

fn unsupported(inst: &Instance, command: &str) -> CliError {
    CliError::Usage(format!("{command} is not available for {} instances", inst.kind.name()))
}

fn conical<'a>(inst: &'a Instance, command: &str) -> Result<&'a GameInstance, CliError> {
    if inst.kind != Kind::ConicalOrthant {
        return Err(unsupported(inst, command));
    }
    game(inst, command)
}

#[derive(Serialize)]
struct HorizonRow {
    k: usize,
    s_k: f64,
    ratio: f64,
    running_min: f64,
}

#[derive(Serialize)]
struct HorizonReport {
    command: &'static str,
    kind: &'static str,
    partial: bool,
    rows: Vec<HorizonRow>,
    /// `min_k s_k/k`, an upper bound on the value.
    upper_bound: Option<f64>,
}

pub fn horizon(inst: &Instance, k: usize, out: OutFormat) -> Result<String, CliError> {
    if k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let (values, err) = match (&inst.game, &inst.product) {
        (Some(g), _) => {
            let (est, err) = horizon::fekete_partial(g, k);
            (est.values, err)
        }
        (None, Some(p)) => {
            let mut values = Vec::with_capacity(k);
            let mut err = None;
            for j in 1..=k {
                match mmg::product_game_value(p, j) {
                    Ok(v) => values.push(v.value * j as f64),
                    Err(e) => {
                        err = Some(e);
                        break;
                    }
                }
            }
            (values, err)
        }
        (None, None) => unreachable!("instances always build an engine object"),
    };
    let mut rows = Vec::with_capacity(values.len());
    let mut best = f64::INFINITY;
    for (i, s) in values.iter().enumerate() {
        let ratio = s / (i + 1) as f64;
        best = best.min(ratio);
        rows.push(HorizonRow {
            k: i + 1,
            s_k: *s,
            ratio,
            running_min: best,
        });
    }
    let partial = matches!(err, Some(Error::NodeBudgetExceeded { .. }));
    let report = HorizonReport {
        command: "horizon",
        kind: inst.kind.name(),
        partial,
        upper_bound: rows.last().map(|r| r.running_min),
        rows,
    };
    let text = render(out, &report, || {
        let mut s = String::from("k,s_k,ratio,running_min\n");
        for r in &report.rows {
            let _ = writeln!(s, "{},{},{},{}", r.k, r.s_k, r.ratio, r.running_min);
        }
        if report.partial {
            s.push_str("# partial: node budget exhausted\n");
        }
        Some(s)
    })?;
    match err {
        None => Ok(text),
        Some(e) => Err(CliError::WithReport {
            code: CliError::Core(e.clone()).exit_code(),
            message: e.to_string(),
            report: text,
        }),
    }
}

#[derive(Serialize)]
struct IterateReport {
    command: &'static str,
    grid: GridSpec,
    iterations: usize,
    lambda_lo: f64,
    lambda_hi: f64,
    lambda_bar: f64,
    spread: f64,
    points: Vec<Point>,
    values: Vec<f64>,
}

fn grid_values_csv(v: &GridFunction) -> String {
    let n = v.grid().dim();
    let mut s = String::from("index");
    for i in 1..=n {
        let _ = write!(s, ",x{i}");
    }
    s.push_str(",value\n");
    for (i, (p, val)) in v.grid().points().iter().zip(v.values()).enumerate() {
        let _ = write!(s, "{i}");
        for c in p {
            let _ = write!(s, ",{c}");
        }
        let _ = writeln!(s, ",{val}");
    }
    s
}

fn iterate_grid(g: &GameInstance, args: &GridArgs) -> Result<simplex_iter::IterationReport, CliError> {
    let grid = Arc::new(simplex_iter::make_grid(g.space().dim, args.m, args.delta)?);
    Ok(simplex_iter::value_iterate(g, grid, args.iters)?)
}

pub fn iterate(inst: &Instance, args: &GridArgs, out: OutFormat) -> Result<String, CliError> {
    let g = conical(inst, "iterate")?;
    let r = iterate_grid(g, args)?;
    let report = IterateReport {
        command: "iterate",
        grid: r.function.grid().spec(),
        iterations: r.iterations,
        lambda_lo: r.lambda_lo,
        lambda_hi: r.lambda_hi,
        lambda_bar: r.lambda_bar(),
        spread: r.spread,
        points: r.function.grid().points().to_vec(),
        values: r.function.values().to_vec(),
    };
    render(out, &report, || Some(grid_values_csv(&r.function)))
}

#[derive(Serialize)]
struct CertifyReport {
    command: &'static str,
    grid: GridSpec,
    iterations: usize,
    spread: f64,
    bracket: Bracket,
    /// Horizons folded into the bracket's upper end.
    fekete_horizon: usize,
    lower: Certificate,
    upper: Certificate,
    verification: Vec<VerificationReport>,
}

pub fn certify(
    inst: &Instance,
    args: &GridArgs,
    horizon_k: usize,
    samples: usize,
    seed: u64,
    out: OutFormat,
) -> Result<String, CliError> {
    let g = conical(inst, "certify")?;
    let r = iterate_grid(g, args)?;
    let (lower, upper) = certificates::certify(g, &r.function)?;
    let (est, _) = horizon::fekete_partial(g, horizon_k);
    let fekete = (est.horizon > 0).then_some(&est);
    let bracket = certificates::bracket(&lower, &upper, fekete)?;
    let verification = vec![
        certificates::verify_certificate(g, &lower, samples, seed)?,
        certificates::verify_certificate(g, &upper, samples, seed)?,
    ];
    let failed = verification.iter().any(|v| !v.respected);
    let report = CertifyReport {
        command: "certify",
        grid: r.function.grid().spec(),
        iterations: r.iterations,
        spread: r.spread,
        bracket,
        fekete_horizon: est.horizon,
        lower,
        upper,
        verification,
    };
    let text = render(out, &report, || None)?;
    if failed {
        return Err(CliError::WithReport {
            message: "sampled check found a point violating a certificate".into(),
            report: text,
            code: 4,
        });
    }
    Ok(text)
}

#[derive(Serialize)]
struct CheckRow {
    direction: Direction,
    stored: f64,
    recomputed: f64,
    difference: f64,
    ok: bool,
}

#[derive(Serialize)]
struct CheckReport {
    command: &'static str,
    ok: bool,
    checks: Vec<CheckRow>,
}

pub fn certify_check(inst: &Instance, file: &Path, out: OutFormat) -> Result<String, CliError> {
    let g = conical(inst, "certify --check")?;
    let text = std::fs::read_to_string(file).map_err(|e| CliError::Io(format!("{}: {e}", file.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Schema(format!("{}: {e}", file.display())))?;
    let parse = |v: &serde_json::Value, field: &str| -> Result<Certificate, CliError> {
        Certificate::deserialize(v).map_err(|e| CliError::Schema(format!("{field}: {e}")))
    };
    let certs = match (value.get("lower"), value.get("upper")) {
        (Some(l), Some(u)) => vec![parse(l, "lower")?, parse(u, "upper")?],
        _ => vec![parse(&value, "certificate")?],
    };
    let mut checks = Vec::new();
    for c in &certs {
        let recomputed = certificates::recompute_lambda(g, c)?;
        let difference = (recomputed - c.lambda).abs();
        checks.push(CheckRow {
            direction: c.direction,
            stored: c.lambda,
            recomputed,
            difference,
            ok: difference <= CHECK_TOL,
        });
    }
    let ok = checks.iter().all(|c| c.ok);
    let report = CheckReport {
        command: "certify-check",
        ok,
        checks,
    };
    let text = render(out, &report, || None)?;
    if ok {
        Ok(text)
    } else {
        Err(CliError::WithReport {
            message: "stored lambda does not match the recomputed value".into(),
            report: text,
            code: 4,
        })
    }
}

#[derive(Serialize)]
struct SimulateReport<'a> {
    command: &'static str,
    steps: usize,
    seed: u64,
    min: &'a str,
    max: &'a str,
    #[serde(flatten)]
    trace: &'a PlayTrace,
}

fn vecadd_solution(inst: &Instance) -> Result<VecAddSolution, CliError> {
    Ok(vecadd::solve(&inst.min_vectors, &inst.max_vectors, inst.norm)?)
}

fn parse_strategy(
    inst: &Instance,
    g: &GameInstance,
    role: Role,
    name: &str,
    grid: &GridArgs,
) -> Result<Strategy, CliError> {
    let bad = |why: &str| CliError::Usage(format!("strategy {name:?}: {why}"));
    let want_role = |r: Role| if r == role { Ok(()) } else { Err(bad("wrong player")) };
    let kind = match name.split_once(':') {
        Some(("const", i)) => {
            let i: usize = i.parse().map_err(|_| bad("expected const:INDEX"))?;
            let n = if role == Role::Min { g.n_min() } else { g.n_max() };
            if i >= n {
                return Err(bad("action index out of range"));
            }
            StrategyKind::ConstantAction(i)
        }
        Some(("qcyclic", q)) => {
            want_role(Role::Min)?;
            let q: usize = q.parse().map_err(|_| bad("expected qcyclic:Q"))?;
            return Ok(strategies::min_qcyclic(g, q)?);
        }
        Some(_) => return Err(bad("unknown strategy")),
        None => match name {
            "greedy" => StrategyKind::GreedyOneStep,
            "random" => StrategyKind::UniformRandom,
            "increasing" => {
                want_role(Role::Min)?;
                return Ok(strategies::min_increasing(g)?);
            }
            "phi" | "bstar" | "eigen" if inst.kind != Kind::VectorAddition => {
                return Err(bad("needs a vector_addition instance"));
            }
            "phi" => {
                want_role(Role::Min)?;
                StrategyKind::MinStationaryFromV(ValueFunction::phi(&inst.min_vectors, inst.norm)?)
            }
            "bstar" => {
                want_role(Role::Max)?;
                StrategyKind::ConstantAction(vecadd_solution(inst)?.b_star)
            }
            "eigen" => {
                want_role(Role::Max)?;
                let ell = vecadd_solution(inst)?
                    .ell
                    .ok_or_else(|| bad("no eigen form (value 0 or sup norm)"))?;
                StrategyKind::MaxStationaryFromV(ValueFunction::Linear(ell))
            }
            "vmax" | "vmin" => {
                if inst.kind != Kind::ConicalOrthant {
                    return Err(bad("needs a conical_orthant instance"));
                }
                let v = ValueFunction::LiftedGrid(iterate_grid(g, grid)?.function);
                if name == "vmax" {
                    want_role(Role::Max)?;
                    StrategyKind::MaxStationaryFromV(v)
                } else {
                    want_role(Role::Min)?;
                    StrategyKind::MinStationaryFromV(v)
                }
            }
            _ => return Err(bad("unknown strategy")),
        },
    };
    Strategy::new(role, kind).map_err(|e| bad(&e.to_string()))
}

pub fn simulate(
    inst: &Instance,
    steps: usize,
    min: &str,
    max: &str,
    seed: u64,
    grid: &GridArgs,
    out: OutFormat,
) -> Result<String, CliError> {
    let g = game(inst, "simulate")?;
    let sigma = parse_strategy(inst, g, Role::Min, min, grid)?;
    let tau = parse_strategy(inst, g, Role::Max, max, grid)?;
    let trace = strategies::simulate(g, &sigma, &tau, steps, seed)?;
    trace.check_consistency(g, 1e-9)?;
    let report = SimulateReport {
        command: "simulate",
        steps,
        seed,
        min,
        max,
        trace: &trace,
    };
    render(out, &report, || {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf).ok()?;
        String::from_utf8(buf).ok()
    })
}

#[derive(Serialize)]
struct VecAddReport {
    command: &'static str,
    #[serde(flatten)]
    solution: VecAddSolution,
    phi_at_base: f64,
}

pub fn vecadd(inst: &Instance, out: OutFormat) -> Result<String, CliError> {
    if inst.kind != Kind::VectorAddition {
        return Err(unsupported(inst, "vecadd"));
    }
    let g = game(inst, "vecadd")?;
    let solution = vecadd_solution(inst)?;
    let phi_at_base = solution.phi(g.base_point())?;
    render(
        out,
        &VecAddReport {
            command: "vecadd",
            solution,
            phi_at_base,
        },
        || None,
    )
}

#[derive(Serialize)]
struct JsrReport {
    command: &'static str,
    #[serde(flatten)]
    bracket: JsrBracket,
}

pub fn jsr(inst: &Instance, depth: usize, sub: bool, out: OutFormat) -> Result<String, CliError> {
    let command = if sub { "jssr" } else { "jsr" };
    if !matches!(inst.kind, Kind::ConicalOrthant | Kind::MatrixProduct) {
        return Err(unsupported(inst, command));
    }
    let set = &inst.max_matrices;
    let bracket = if sub {
        mmg::jssr_bracket(set, depth, inst.matrix_norm)?
    } else {
        mmg::jsr_bracket(set, depth, inst.matrix_norm)?
    };
    let report = JsrReport { command, bracket };
    render(out, &report, || {
        let b = &report.bracket;
        let norm = serde_json::to_value(b.norm).ok()?;
        Some(format!(
            "lower,upper,depth,norm\n{},{},{},{}\n",
            b.lower,
            b.upper,
            b.depth,
            norm.as_str()?
        ))
    })
}

#[derive(Serialize)]
struct NondefectReport {
    command: &'static str,
    #[serde(flatten)]
    report: NondefectivityReport,
}

pub fn nondefect(
    inst: &Instance,
    rho: f64,
    k: usize,
    grid: Option<usize>,
    delta: f64,
    out: OutFormat,
) -> Result<String, CliError> {
    let g = game(inst, "nondefect")?;
    let grid = match grid {
        Some(m) => {
            if inst.kind != Kind::ConicalOrthant {
                return Err(CliError::Usage("--grid needs a conical_orthant instance".into()));
            }
            Some(simplex_iter::make_grid(inst.n, m, delta)?)
        }
        None => None,
    };
    let report = certificates::nondefectivity_scan(g, rho, k, grid.as_ref())?;
    let report = NondefectReport {
        command: "nondefect",
        report,
    };
    render(out, &report, || {
        let mut s = String::from("k,t_k\n");
        for (i, t) in report.report.t.iter().enumerate() {
            let _ = writeln!(s, "{},{t}", i + 1);
        }
        Some(s)
    })
}
