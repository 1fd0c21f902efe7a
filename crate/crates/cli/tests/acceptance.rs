//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p escape-rate-cli --test acceptance -- --nocapture`.

use std::f64::consts::LN_2;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;

use escape_rate::certificates::bracket;
use escape_rate::dynamics::sample_point;
use escape_rate::horizon::{exact_value, fekete};
use escape_rate::linalg::from_rows;
use escape_rate::mmg::jsr_bracket;
use escape_rate::simplex_iter::{make_grid, value_iterate};
use escape_rate::strategies::{exhaustive_max_replies, min_qcyclic};
use escape_rate::vecadd::solve;
use escape_rate::{
    certify, simulate, GameInstance, MapFamily, Matrix, MatrixNorm, MetricKind, MetricSpace, Norm, Point, Role,
    Strategy, StrategyKind, ValueFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(n: u32, what: &str, ok: bool, detail: String) {
    println!(
        "criterion {n:02}: {} {what} [{detail}]",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n:02} failed: {what} [{detail}]");
}

fn mat(rows: &[&[f64]]) -> Matrix {
    from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
}

fn conical(min: Vec<Matrix>, max: Vec<Matrix>) -> GameInstance {
    let space = MetricSpace::new(MetricKind::OrthantFunk, min[0].nrows()).unwrap();
    GameInstance::new(space, MapFamily::nonneg_matrices(min, max).unwrap(), None, false).unwrap()
}

fn diag21() -> GameInstance {
    conical(vec![Matrix::identity(2, 2)], vec![mat(&[&[2.0, 0.0], &[0.0, 1.0]])])
}

/// Same matrices as `demos/positive_pair.json`.
fn positive_pair() -> GameInstance {
    conical(
        vec![mat(&[&[1.0, 0.5], &[0.6, 1.2]]), mat(&[&[1.5, 0.7], &[0.5, 0.8]])],
        vec![mat(&[&[0.9, 1.1], &[0.5, 1.4]]), mat(&[&[2.0, 0.6], &[0.8, 0.7]])],
    )
}

fn translations(min: Vec<Point>, max: Vec<Point>, kind: MetricKind) -> GameInstance {
    let space = MetricSpace::new(kind, min[0].len()).unwrap();
    GameInstance::new(space, MapFamily::translations(min, max).unwrap(), None, false).unwrap()
}

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let mut m = Matrix::from_fn(n, n, |_, _| {
        if rng.random_bool(0.25) {
            0.0
        } else {
            rng.random_range(0.1..3.0)
        }
    });
    for j in 0..n {
        if m.column(j).iter().all(|v| *v == 0.0) {
            m[(j, j)] = 1.0;
        }
    }
    m
}

fn random_instance(rng: &mut ChaCha8Rng) -> GameInstance {
    let n = rng.random_range(1..=3);
    let na = rng.random_range(1..=3);
    let nb = rng.random_range(1..=3);
    let min = (0..na).map(|_| random_matrix(n, rng)).collect();
    let max = (0..nb).map(|_| random_matrix(n, rng)).collect();
    conical(min, max)
}

#[test]
fn criterion_01_hemimetric_axioms() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let kinds = [
        MetricKind::OrthantFunk,
        MetricKind::OrthantReverseFunk,
        MetricKind::NormedEuclidean,
        MetricKind::NormedSup,
        MetricKind::PoincareHalfPlane,
    ];
    let (mut worst, mut separation_failures) = (f64::NEG_INFINITY, 0);
    for kind in kinds {
        for _ in 0..10_000 {
            let dim = if kind == MetricKind::PoincareHalfPlane {
                2
            } else {
                rng.random_range(1..=4)
            };
            let space = MetricSpace::new(kind, dim).unwrap();
            let [x, y, z] = [(); 3].map(|_| sample_point(&space, &mut rng));
            let d = |p: &[f64], q: &[f64]| space.distance(p, q).unwrap();
            worst = worst.max(d(&x, &z) - d(&x, &y) - d(&y, &z));
            if x != y && d(&x, &y).max(d(&y, &x)) <= 0.0 {
                separation_failures += 1;
            }
        }
    }
    verdict(
        1,
        "triangle inequality and weak separation",
        worst <= 1e-12 && separation_failures == 0,
        format!("worst triangle excess {worst:e}, separation failures {separation_failures}"),
    );
}

#[test]
fn criterion_02_subadditivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let s = fekete(&random_instance(&mut rng), 8).unwrap().values;
        for k in 1..8 {
            for l in 1..=(8 - k) {
                worst = worst.max(s[k + l - 1] - s[k - 1] - s[l - 1]);
            }
        }
    }
    verdict(
        2,
        "s_(k+l) <= s_k + s_l on 20 random instances",
        worst <= 1e-9,
        format!("worst excess {worst:e}"),
    );
}

#[test]
fn criterion_03_closed_form_one_player_value() {
    let g = diag21();
    // Perron root of diag(2, 1) is its largest diagonal entry.
    let oracle = 2f64.ln();
    let ratio_err = (1..=12)
        .map(|k| (exact_value(&g, k).unwrap() / k as f64 - oracle).abs())
        .fold(0.0, f64::max);
    let grid = Arc::new(make_grid(2, 32, 0.01).unwrap());
    let h = grid.covering_radius();
    let r = value_iterate(&g, grid, 200).unwrap();
    let (lo, hi) = certify(&g, &r.function).unwrap();
    let b = bracket(&lo, &hi, Some(&fekete(&g, 8).unwrap())).unwrap();
    let ok = ratio_err <= 1e-12 && b.contains(oracle) && b.width() <= 4.0 * h + 1e-6;
    verdict(
        3,
        "diag(2,1) value ln 2",
        ok,
        format!(
            "max |s_k/k - ln2| {ratio_err:e}, bracket [{}, {}], width {} vs 4h {}",
            b.lo,
            b.hi,
            b.width(),
            4.0 * h
        ),
    );
    assert!((oracle - LN_2).abs() < 1e-15);
}

#[test]
fn criterion_04_bracket_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut games = vec![diag21(), positive_pair()];
    games.extend((0..6).map(|_| {
        let n = 2;
        let side = |rng: &mut ChaCha8Rng| {
            (0..2)
                .map(|_| Matrix::from_fn(n, n, |_, _| rng.random_range(0.5..2.0)))
                .collect()
        };
        let (a, b) = (side(&mut rng), side(&mut rng));
        conical(a, b)
    }));
    let (mut worst, mut ordered) = (f64::NEG_INFINITY, true);
    for g in &games {
        let grid = Arc::new(make_grid(g.space().dim, 16, 0.02).unwrap());
        let r = value_iterate(g, grid, 200).unwrap();
        let (lo, hi) = certify(g, &r.function).unwrap();
        ordered &= lo.lambda <= hi.lambda;
        let rho_hat = fekete(g, 8).unwrap().rho_hat();
        worst = worst.max(lo.lambda - rho_hat);
    }
    verdict(
        4,
        "lower <= min_k s_k/k and lower <= upper",
        worst <= 1e-9 && ordered,
        format!("{} instances, worst lower - rho_hat {worst:e}", games.len()),
    );
}

fn spr2(m: &[[f64; 2]; 2]) -> f64 {
    let (t, d) = (m[0][0] + m[1][1], m[0][0] * m[1][1] - m[0][1] * m[1][0]);
    let disc = t * t - 4.0 * d;
    if disc >= 0.0 {
        (t.abs() + disc.sqrt()) / 2.0
    } else {
        d.abs().sqrt()
    }
}

fn mul2(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

#[test]
fn criterion_05_jsr_oracle() {
    let start = std::time::Instant::now();
    let set = [[[1.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 1.0]]];
    // Independent enumeration of every word up to length 12.
    let mut oracle = 0.0f64;
    let mut level = vec![[[1.0, 0.0], [0.0, 1.0]]];
    for len in 1..=12 {
        level = level.iter().flat_map(|p| set.iter().map(move |m| mul2(p, m))).collect();
        for p in &level {
            oracle = oracle.max(spr2(p).powf(1.0 / len as f64));
        }
    }
    let matrices: Vec<Matrix> = set.iter().map(|m| mat(&[&m[0], &m[1]])).collect();
    let b = jsr_bracket(&matrices, 12, MatrixNorm::Spectral).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    let ok = b.upper - b.lower <= 0.02
        && b.lower <= oracle + 1e-12
        && oracle <= b.upper + 1e-12
        && (oracle - golden).abs() < 1e-9
        && secs <= 120.0;
    verdict(
        5,
        "shear pair joint spectral radius",
        ok,
        format!("bracket [{}, {}], oracle {oracle}, {secs:.2}s", b.lower, b.upper),
    );
}

#[test]
fn criterion_06_vector_addition_end_to_end() {
    let a = vec![vec![-1.0, 0.0], vec![1.0, 0.0]];
    let b = vec![vec![0.0, 1.0]];
    let sol = solve(&a, &b, Norm::Euclidean).unwrap();
    let l = sol.ell.clone().unwrap_or_default();
    let dot = |x: &[f64]| l.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
    let drift = a
        .iter()
        .map(|ai| b.iter().map(|bj| dot(ai) + dot(bj)).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min);
    let g = translations(a.clone(), b, MetricKind::NormedEuclidean);
    let sigma = Strategy::new(
        Role::Min,
        StrategyKind::MinStationaryFromV(ValueFunction::phi(&a, Norm::Euclidean).unwrap()),
    )
    .unwrap();
    let tau = Strategy::new(Role::Max, StrategyKind::ConstantAction(sol.b_star)).unwrap();
    let trace = simulate(&g, &sigma, &tau, 1000, 0).unwrap();
    let ratio = trace.ratios[999];
    let ok = (sol.lambda - 1.0).abs() <= 1e-9 && (drift - 1.0).abs() <= 1e-9 && (ratio - 1.0).abs() <= 0.05;
    verdict(
        6,
        "segment game value, eigen identity and simulated rate",
        ok,
        format!("lambda {}, drift {drift}, J_1000/1000 {ratio}", sol.lambda),
    );
}

#[test]
fn criterion_07_tit_for_tat() {
    let a = vec![vec![0.0, -1.0]];
    let b = vec![vec![0.0, 1.0]];
    let sol = solve(&a, &b, Norm::Euclidean).unwrap();
    let g = translations(a, b, MetricKind::NormedEuclidean);
    let sigma = Strategy::new(Role::Min, StrategyKind::GreedyOneStep).unwrap();
    let tau = Strategy::new(Role::Max, StrategyKind::UniformRandom).unwrap();
    let trace = simulate(&g, &sigma, &tau, 10_000, 7).unwrap();
    let peak = trace.payoffs.iter().copied().fold(0.0, f64::max);
    verdict(
        7,
        "tit-for-tat value zero and bounded payoffs",
        sol.lambda == 0.0 && peak <= 1.0,
        format!("lambda {}, max payoff over 10^4 steps {peak}", sol.lambda),
    );
}

#[test]
fn criterion_08_strategy_guarantees() {
    let g = positive_pair();
    let grid = Arc::new(make_grid(2, 16, 0.02).unwrap());
    let v = value_iterate(&g, grid, 200).unwrap().function;
    let (lower, _) = certify(&g, &v).unwrap();
    let tau = Strategy::new(
        Role::Max,
        StrategyKind::MaxStationaryFromV(ValueFunction::LiftedGrid(v.clone())),
    )
    .unwrap();
    let random_min = Strategy::new(Role::Min, StrategyKind::UniformRandom).unwrap();
    let mut max_margin = f64::INFINITY;
    for seed in 0..10 {
        let trace = simulate(&g, &random_min, &tau, 200, seed).unwrap();
        for w in trace.states.windows(2) {
            max_margin = max_margin.min(v.lift(&w[1]) - v.lift(&w[0]) - lower.lambda);
        }
    }

    let mut cyc_margin = f64::INFINITY;
    for q in 1..=4 {
        let s_q = exact_value(&g, q).unwrap();
        let m_max = 5.min(20 / q);
        let worst = exhaustive_max_replies(&g, &min_qcyclic(&g, q).unwrap(), m_max * q).unwrap();
        for m in 1..=m_max {
            cyc_margin = cyc_margin.min(m as f64 * s_q - worst[m * q - 1]);
        }
    }
    verdict(
        8,
        "Max stationary and Min q-cyclic guarantees",
        !lower.conditional && max_margin >= -1e-9 && cyc_margin >= -1e-9,
        format!(
            "lower {} unconditional {}, worst Max margin {max_margin:e}, worst cycle margin {cyc_margin:e}",
            lower.lambda, !lower.conditional
        ),
    );
}

#[test]
fn criterion_09_poincare_escape_rate_zero() {
    let g = translations(
        vec![vec![1.0, 0.0]],
        vec![vec![0.0, 0.0]],
        MetricKind::PoincareHalfPlane,
    );
    let sigma = Strategy::new(Role::Min, StrategyKind::ConstantAction(0)).unwrap();
    let tau = Strategy::new(Role::Max, StrategyKind::ConstantAction(0)).unwrap();
    let trace = simulate(&g, &sigma, &tau, 10_000, 0).unwrap();
    let sampled: Vec<f64> = [1, 10, 100, 1000, 5000, 10_000]
        .iter()
        .map(|k| trace.ratios[k - 1])
        .collect();
    let decreasing = sampled.windows(2).all(|w| w[1] < w[0]);
    let last = trace.ratios[9_999];
    let oracle = 2.0 * 10_000f64.asinh() / 10_000.0;
    verdict(
        9,
        "Poincare shift ratio decays",
        decreasing && last <= 0.002 && (last - oracle).abs() <= 1e-12,
        format!("ratio at 10^4 {last}, closed form {oracle}"),
    );
}

#[test]
fn criterion_10_nondefectivity_diagnostic() {
    use escape_rate::certificates::{nondefectivity_scan, Verdict};
    let flat = nondefectivity_scan(&diag21(), LN_2, 10, None).unwrap();
    let shear = conical(vec![Matrix::identity(2, 2)], vec![mat(&[&[1.0, 1.0], &[0.0, 1.0]])]);
    let grow = nondefectivity_scan(&shear, 0.0, 10, None).unwrap();
    // The k-th power of the shear has column sums 1 and k + 1.
    let t_err = grow
        .t
        .iter()
        .enumerate()
        .map(|(i, t)| (t - ((i + 2) as f64).ln()).abs())
        .fold(0.0, f64::max);
    let ok = flat.verdict == Verdict::BoundedLooking
        && flat.t.iter().all(|t| t.abs() <= 1e-12)
        && grow.verdict == Verdict::GrowingLooking
        && t_err <= 1e-9;
    verdict(
        10,
        "bounded for diag(2,1), growing for the shear",
        ok,
        format!(
            "diag growth {}, shear growth {}, max |t_k - log(k+1)| {t_err:e}",
            flat.growth, grow.growth
        ),
    );
}

#[test]
fn criterion_11_determinism() {
    let demos = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demos");
    let d = |f: &str| demos.join(f).to_string_lossy().into_owned();
    let commands: Vec<Vec<String>> = [
        vec!["horizon", &d("diag.json"), "--k", "5"],
        vec!["horizon", &d("parabolic_pair.json"), "--k", "6"],
        vec!["iterate", &d("positive_pair.json"), "--grid", "12"],
        vec!["certify", &d("diag.json"), "--grid", "16"],
        vec!["certify", &d("positive_pair.json"), "--grid", "12", "--delta", "0.02"],
        vec![
            "simulate",
            &d("positive_pair.json"),
            "--steps",
            "50",
            "--min",
            "random",
            "--max",
            "random",
            "--seed",
            "11",
        ],
        vec![
            "simulate",
            &d("vecadd_segment.json"),
            "--steps",
            "200",
            "--min",
            "phi",
            "--max",
            "bstar",
            "--out",
            "csv",
        ],
        vec!["simulate", &d("poincare.json"), "--steps", "100", "--min", "const:0"],
        vec!["simulate", &d("identity.json"), "--steps", "20"],
        vec!["vecadd", &d("tit_for_tat.json")],
        vec!["vecadd", &d("vecadd_segment.json")],
        vec!["jsr", &d("parabolic_pair.json"), "--depth", "10"],
        vec!["jssr", &d("parabolic_pair.json"), "--depth", "10"],
        vec!["nondefect", &d("parabolic.json"), "--rho", "0", "--grid", "6"],
    ]
    .into_iter()
    .map(|c| c.into_iter().map(String::from).collect())
    .collect();
    let run = |threads: &str, args: &[String]| {
        let out = Command::new(env!("CARGO_BIN_EXE_escape-rate"))
            .env("ESCAPE_RATE_THREADS", threads)
            .args(args)
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        out.stdout
    };
    let mut mismatches = Vec::new();
    for args in &commands {
        let first = run("1", args);
        if run("1", args) != first || run("4", args) != first {
            mismatches.push(args[0].clone());
        }
    }
    verdict(
        11,
        "byte-identical reports across runs and thread counts",
        mismatches.is_empty(),
        format!("{} commands, mismatches {mismatches:?}", commands.len()),
    );
}
