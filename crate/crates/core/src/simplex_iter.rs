//! Grid discretization of the simplex cross-section and iteration of the
//! normalized Shapley operator
//!
//! ```text
//! Fv(x) = min_a max_b { log⟨T_ab x, 1⟩ + v(T_ab x / ⟨T_ab x, 1⟩) }.
//! ```
//!
//! Grid values are turned into a function on the whole simplex through the
//! inf-convolution `ṽ(y) = min_g v[g] + funk(y, g)`, which is 1-Lipschitz
//! for the Funk hemi-metric and agrees with `v` on the grid whenever `v` is
//! grid-Lipschitz. Certificates always refer to this extension.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{GameInstance, MapKind};
use crate::error::{Error, Result};
use crate::hemimetric::{self, Point};

/// Samples per dimension used to estimate the covering radius.
pub const COVERING_SAMPLES_PER_DIM: usize = 10_000;
/// Safety multiplier applied to the sampled covering radius.
pub const COVERING_SAFETY: f64 = 1.1;
const COVERING_SEED: u64 = 0xc0_7e_72;

/// Parameters that determine a grid, as stored in certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub covering_radius: f64,
}

/// Lattice points of the δ-interior `Δ_δ = {x ∈ Δ : x_i ≥ δ}` of the simplex.
#[derive(Debug, Clone)]
pub struct Grid {
    dim: usize,
    resolution: usize,
    interior_floor: f64,
    points: Vec<Point>,
    logs: Vec<Vec<f64>>,
    covering_radius_h: f64,
    barycenter: usize,
}

fn check_params(n: usize, m: usize, delta: f64) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::Precondition("grid needs n >= 1 and m >= 1".into()));
    }
    if !(delta > 0.0 && delta * (n as f64) < 1.0) {
        return Err(Error::Precondition(format!(
            "interior floor {delta} must lie in (0, 1/{n})"
        )));
    }
    Ok(())
}

/// Compositions of `m` into `n` nonnegative parts, lexicographic order.
fn compositions(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for k in 0..=left {
            cur.push(k);
            rec(n - 1, left - k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, m, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Affine shrink of the simplex onto `Δ_δ`.
fn shrink(x: &[f64], delta: f64) -> Point {
    let scale = 1.0 - delta * x.len() as f64;
    x.iter().map(|v| delta + scale * v).collect()
}

/// Builds the grid: every lattice point `k/m` (`Σk = m`) of the simplex,
/// mapped into `Δ_δ` by `x ↦ δ·1 + (1 − nδ)·x`.
pub fn make_grid(n: usize, m: usize, delta: f64) -> Result<Grid> {
    check_params(n, m, delta)?;
    let mut grid = lattice(n, m, delta);
    grid.covering_radius_h = estimate_covering_radius(&grid);
    Ok(grid)
}

/// Rebuilds a grid with a known covering radius (no sampling).
pub fn grid_from_spec(spec: &GridSpec) -> Result<Grid> {
    check_params(spec.n, spec.m, spec.delta)?;
    if !(spec.covering_radius > 0.0 && spec.covering_radius.is_finite()) {
        return Err(Error::Precondition("covering radius must be positive".into()));
    }
    let mut grid = lattice(spec.n, spec.m, spec.delta);
    grid.covering_radius_h = spec.covering_radius;
    Ok(grid)
}

fn lattice(n: usize, m: usize, delta: f64) -> Grid {
    let points: Vec<Point> = compositions(n, m)
        .into_iter()
        .map(|k| {
            let x: Vec<f64> = k.iter().map(|&ki| ki as f64 / m as f64).collect();
            shrink(&x, delta)
        })
        .collect();
    let logs: Vec<Vec<f64>> = points.iter().map(|p| p.iter().map(|v| v.ln()).collect()).collect();
    let center = vec![-(n as f64).ln(); n];
    let barycenter = nearest(&logs, &center).0;
    Grid {
        dim: n,
        resolution: m,
        interior_floor: delta,
        points,
        logs,
        covering_radius_h: 0.0,
        barycenter,
    }
}

/// Index and Thompson distance of the grid point nearest to `ly` (logs).
fn nearest(logs: &[Vec<f64>], ly: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, lg) in logs.iter().enumerate() {
        let mut d = 0.0_f64;
        for (a, b) in ly.iter().zip(lg) {
            d = d.max((a - b).abs());
            if d >= best.1 {
                break;
            }
        }
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn estimate_covering_radius(grid: &Grid) -> f64 {
    let n = grid.dim;
    if n == 1 {
        // Δ_δ is the single grid point; keep the radius strictly positive.
        return f64::EPSILON;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(COVERING_SEED);
    let mut samples: Vec<Point> = (0..COVERING_SAMPLES_PER_DIM * n)
        .map(|_| {
            let e: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
            let s: f64 = e.iter().sum();
            let x: Vec<f64> = e.iter().map(|v| v / s).collect();
            shrink(&x, grid.interior_floor)
        })
        .collect();
    // corners of Δ_δ and midpoints of lattice neighbours
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        samples.push(shrink(&e, grid.interior_floor));
    }
    let step = 1.0 / grid.resolution as f64;
    for p in &grid.points {
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let mut q = p.clone();
                    let scale = 1.0 - grid.interior_floor * n as f64;
                    q[i] += 0.5 * step * scale;
                    q[j] -= 0.5 * step * scale;
                    if q[j] >= grid.interior_floor {
                        samples.push(q);
                    }
                }
            }
        }
    }
    let worst = samples
        .par_iter()
        .map(|x| {
            let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
            nearest(&grid.logs, &lx).1
        })
        .reduce(|| 0.0, f64::max);
    COVERING_SAFETY * worst.max(f64::EPSILON)
}

impl Grid {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn interior_floor(&self) -> f64 {
        self.interior_floor
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Conservative Thompson covering radius `h` of `Δ_δ` by the grid.
    pub fn covering_radius(&self) -> f64 {
        self.covering_radius_h
    }

    /// Index of the grid point closest to the barycenter.
    pub fn barycenter_index(&self) -> usize {
        self.barycenter
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec {
            n: self.dim,
            m: self.resolution,
            delta: self.interior_floor,
            covering_radius: self.covering_radius_h,
        }
    }

    /// Thompson distance from `y` to the nearest grid point.
    pub fn distance_to_grid(&self, y: &[f64]) -> f64 {
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        nearest(&self.logs, &ly).1
    }

    /// Uniform random point of `Δ_δ`.
    pub fn sample_interior<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let e: Vec<f64> = (0..self.dim).map(|_| Exp1.sample(rng)).collect();
        let s: f64 = e.iter().sum();
        let x: Vec<f64> = e.iter().map(|v| v / s).collect();
        shrink(&x, self.interior_floor)
    }
}

/// Values of a function at the grid points.
#[derive(Debug, Clone)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

/// Which global extension to use for off-grid evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// `min_g v[g] + funk(y, g)`
    Upper,
    /// `max_g v[g] − funk(g, y)`
    Lower,
}

fn check_simplex_point(n: usize, y: &[f64]) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    hemimetric::check_positive(y)
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let values = vec![c; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn shifted(&self, c: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest `v[g] − v[g'] − funk(g, g')` over grid pairs (≤ 0 when
    /// the function is grid-Lipschitz).
    pub fn lipschitz_excess(&self) -> f64 {
        let logs = &self.grid.logs;
        (0..self.values.len())
            .into_par_iter()
            .map(|i| {
                let mut worst = f64::NEG_INFINITY;
                for j in 0..self.values.len() {
                    if i != j {
                        let e = self.values[i] - self.values[j] - hemimetric::funk_logs(&logs[i], &logs[j]);
                        worst = worst.max(e);
                    }
                }
                worst
            })
            .reduce(|| f64::NEG_INFINITY, f64::max)
    }

    pub fn check_grid_lipschitz(&self, tol: f64) -> Result<()> {
        let e = self.lipschitz_excess();
        if e > tol {
            Err(Error::InvariantViolation(format!(
                "grid function violates the Funk 1-Lipschitz bound by {e:e}"
            )))
        } else {
            Ok(())
        }
    }

    #[inline]
    pub(crate) fn upper_at_logs(&self, ly: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.logs)
            .map(|(v, lg)| v + hemimetric::funk_logs(ly, lg))
            .fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub(crate) fn lower_at_logs(&self, ly: &[f64]) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.logs)
            .map(|(v, lg)| v - hemimetric::funk_logs(lg, ly))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn extend_logs(&self, ext: Extension, ly: &[f64]) -> f64 {
        match ext {
            Extension::Upper => self.upper_at_logs(ly),
            Extension::Lower => self.lower_at_logs(ly),
        }
    }

    /// Canonical global extension evaluated at an interior point `y`.
    pub fn eval(&self, y: &[f64]) -> f64 {
        let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
        self.upper_at_logs(&ly)
    }

    /// Value of the lift `v̄(x) = log⟨x, 1⟩ + ṽ(x / ⟨x, 1⟩)` on the open orthant.
    pub fn lift(&self, x: &[f64]) -> f64 {
        let s: f64 = x.iter().sum();
        let ly: Vec<f64> = x.iter().map(|v| (v / s).ln()).collect();
        s.ln() + self.upper_at_logs(&ly)
    }
}

/// Upper (inf-convolution) extension `min_g v[g] + funk(y, g)`.
pub fn extend_upper(v: &GridFunction, y: &[f64]) -> Result<f64> {
    check_simplex_point(v.grid.dim, y)?;
    Ok(v.eval(y))
}

/// Lower extension `max_g v[g] − funk(g, y)`.
pub fn extend_lower(v: &GridFunction, y: &[f64]) -> Result<f64> {
    check_simplex_point(v.grid.dim, y)?;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    Ok(v.lower_at_logs(&ly))
}

pub(crate) fn require_orthant(instance: &GameInstance) -> Result<()> {
    if instance.family().kind() != MapKind::NonnegColumnMatrices {
        return Err(Error::Unsupported(
            "the normalized operator needs a nonnegative matrix family on the orthant".into(),
        ));
    }
    Ok(())
}

/// `Fv` evaluated at an arbitrary simplex point through the chosen extension.
pub(crate) fn shapley_at(instance: &GameInstance, v: &GridFunction, ext: Extension, x: &[f64]) -> (f64, f64) {
    let fam = instance.family();
    let (na, nb) = (fam.n_min(), fam.n_max());
    let mut table = vec![vec![0.0; nb]; na];
    let mut min_coord = f64::INFINITY;
    for (a, row) in table.iter_mut().enumerate() {
        for (b, cell) in row.iter_mut().enumerate() {
            let (y, cost) = fam.normalized_apply_unchecked(a, b, x);
            min_coord = y.iter().copied().fold(min_coord, f64::min);
            let ly: Vec<f64> = y.iter().map(|c| c.ln()).collect();
            *cell = cost + v.extend_logs(ext, &ly);
        }
    }
    let value = if instance.max_first() {
        (0..nb)
            .map(|b| (0..na).map(|a| table[a][b]).fold(f64::INFINITY, f64::min))
            .fold(f64::NEG_INFINITY, f64::max)
    } else {
        table
            .iter()
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .fold(f64::INFINITY, f64::min)
    };
    (value, min_coord)
}

/// One sweep of `F` on the grid, plus the smallest coordinate of any
/// normalized one-step image of a grid point.
pub(crate) fn apply_f_detailed(
    instance: &GameInstance,
    v: &GridFunction,
    ext: Extension,
) -> Result<(GridFunction, f64)> {
    require_orthant(instance)?;
    if instance.space().dim != v.grid.dim {
        return Err(Error::DimensionMismatch {
            expected: instance.space().dim,
            found: v.grid.dim,
        });
    }
    let out: Vec<(f64, f64)> = v
        .grid
        .points
        .par_iter()
        .map(|g| shapley_at(instance, v, ext, g))
        .collect();
    let min_coord = out.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    let fv = GridFunction {
        grid: Arc::clone(&v.grid),
        values: out.into_iter().map(|o| o.0).collect(),
    };
    fv.check_grid_lipschitz(1e-9)?;
    Ok((fv, min_coord))
}

/// `Fv` on the grid. The result is checked to be grid-Lipschitz.
pub fn apply_f(instance: &GameInstance, v: &GridFunction, ext: Extension) -> Result<GridFunction> {
    apply_f_detailed(instance, v, ext).map(|r| r.0)
}

/// Outcome of [`value_iterate`].
#[derive(Debug, Clone)]
pub struct IterationReport {
    /// Final iterate, pinned to zero at the barycentric grid point.
    pub function: GridFunction,
    pub iterations: usize,
    /// `min_g (Fv − v)(g)` for the returned function.
    pub lambda_lo: f64,
    /// `max_g (Fv − v)(g)` for the returned function.
    pub lambda_hi: f64,
    /// `lambda_hi − lambda_lo`.
    pub spread: f64,
    /// Spread observed at each sweep.
    pub spread_history: Vec<f64>,
}

impl IterationReport {
    pub fn lambda_bar(&self) -> f64 {
        0.5 * (self.lambda_lo + self.lambda_hi)
    }
}

/// Stop once the residual spread falls below this.
pub const SPREAD_TOL: f64 = 1e-8;
pub const DEFAULT_ITERS: usize = 200;

fn residual(fv: &GridFunction, v: &GridFunction) -> (f64, f64) {
    fv.values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| a - b)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

/// Relative value iteration `v ← Fv − (Fv)(barycenter)` from `v ≡ 0`,
/// for at most `iters` sweeps or until the spread drops below [`SPREAD_TOL`].
pub fn value_iterate(instance: &GameInstance, grid: Arc<Grid>, iters: usize) -> Result<IterationReport> {
    if iters == 0 {
        return Err(Error::Precondition("iters must be >= 1".into()));
    }
    require_orthant(instance)?;
    let bary = grid.barycenter;
    let mut v = GridFunction::constant(grid, 0.0);
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < iters {
        let fv = apply_f(instance, &v, Extension::Upper)?;
        let (lo, hi) = residual(&fv, &v);
        history.push(hi - lo);
        iterations += 1;
        let pin = fv.values[bary];
        v = fv.shifted(-pin);
        if hi - lo < SPREAD_TOL {
            break;
        }
    }
    let fv = apply_f(instance, &v, Extension::Upper)?;
    let (lambda_lo, lambda_hi) = residual(&fv, &v);
    Ok(IterationReport {
        function: v,
        iterations,
        lambda_lo,
        lambda_hi,
        spread: lambda_hi - lambda_lo,
        spread_history: history,
    })
}
