//! Finite families of nonexpansive maps `T_ab` and game instances.
//!
//! Matrices act on row vectors: `T_ab(x) = x·A·B`, so a play from `x₀`
//! produces `x₀·A₁B₁⋯A_kB_k`. Translations act by `T_ab(x) = x + a + b`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hemimetric::{MetricKind, MetricSpace, Point};
use crate::linalg::{row_times, Matrix};

/// Default cap on visited nodes for tree searches.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

/// The two players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    /// `x ↦ xAB` with nonnegative matrices having a positive entry in every column.
    NonnegColumnMatrices,
    /// `x ↦ x + a + b`.
    Translations,
    /// Arbitrary square matrices, used only for matrix product games.
    GeneralMatrices,
}

#[derive(Debug, Clone)]
enum Maps {
    Matrices { min: Vec<Matrix>, max: Vec<Matrix> },
    Shifts { min: Vec<Point>, max: Vec<Point> },
}

/// Finite Min/Max action sets together with the way they act.
#[derive(Debug, Clone)]
pub struct MapFamily {
    kind: MapKind,
    maps: Maps,
    dim: usize,
    defect_gamma: Option<f64>,
}

fn check_nonempty(min: usize, max: usize) -> Result<()> {
    if min == 0 || max == 0 {
        return Err(Error::InvalidFamily("both action sets must be nonempty".into()));
    }
    Ok(())
}

fn check_square(ms: &[Matrix], role: &str) -> Result<usize> {
    let n = ms[0].nrows();
    for (i, m) in ms.iter().enumerate() {
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::InvalidFamily(format!(
                "{role} matrix {i} is {}x{}, expected {n}x{n}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidFamily(format!(
                "{role} matrix {i} has a non-finite entry"
            )));
        }
    }
    Ok(n)
}

impl MapFamily {
    /// Nonnegative matrices with at least one positive entry per column.
    pub fn nonneg_matrices(min: Vec<Matrix>, max: Vec<Matrix>) -> Result<Self> {
        check_nonempty(min.len(), max.len())?;
        let n = check_square(&min, "min")?;
        if check_square(&max, "max")? != n {
            return Err(Error::InvalidFamily("min and max matrices differ in size".into()));
        }
        for (role, set) in [("min", &min), ("max", &max)] {
            for (i, m) in set.iter().enumerate() {
                if m.iter().any(|v| *v < 0.0) {
                    return Err(Error::InvalidFamily(format!("{role} matrix {i} has a negative entry")));
                }
                if let Some(j) = (0..n).find(|&j| m.column(j).iter().all(|v| *v == 0.0)) {
                    return Err(Error::InvalidFamily(format!(
                        "{role} matrix {i} has an all-zero column {j}"
                    )));
                }
            }
        }
        Ok(Self {
            kind: MapKind::NonnegColumnMatrices,
            maps: Maps::Matrices { min, max },
            dim: n,
            defect_gamma: None,
        })
    }

    pub fn general_matrices(min: Vec<Matrix>, max: Vec<Matrix>) -> Result<Self> {
        check_nonempty(min.len(), max.len())?;
        let n = check_square(&min, "min")?;
        if check_square(&max, "max")? != n {
            return Err(Error::InvalidFamily("min and max matrices differ in size".into()));
        }
        Ok(Self {
            kind: MapKind::GeneralMatrices,
            maps: Maps::Matrices { min, max },
            dim: n,
            defect_gamma: None,
        })
    }

    pub fn translations(min: Vec<Point>, max: Vec<Point>) -> Result<Self> {
        check_nonempty(min.len(), max.len())?;
        let n = min[0].len();
        if n == 0 {
            return Err(Error::InvalidFamily("empty translation vector".into()));
        }
        for (role, set) in [("min", &min), ("max", &max)] {
            for (i, v) in set.iter().enumerate() {
                if v.len() != n {
                    return Err(Error::InvalidFamily(format!(
                        "{role} vector {i} has length {}, expected {n}",
                        v.len()
                    )));
                }
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidFamily(format!(
                        "{role} vector {i} has a non-finite entry"
                    )));
                }
            }
        }
        Ok(Self {
            kind: MapKind::Translations,
            maps: Maps::Shifts { min, max },
            dim: n,
            defect_gamma: Some(0.0),
        })
    }

    /// Records a known almost-isometry constant.
    pub fn with_defect_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) {
            return Err(Error::InvalidFamily("defect gamma must be >= 0".into()));
        }
        if self.kind == MapKind::Translations && gamma != 0.0 {
            return Err(Error::InvalidFamily(
                "translations are isometries, gamma must be 0".into(),
            ));
        }
        self.defect_gamma = Some(gamma);
        Ok(self)
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn defect_gamma(&self) -> Option<f64> {
        self.defect_gamma
    }

    pub fn n_min(&self) -> usize {
        match &self.maps {
            Maps::Matrices { min, .. } => min.len(),
            Maps::Shifts { min, .. } => min.len(),
        }
    }

    pub fn n_max(&self) -> usize {
        match &self.maps {
            Maps::Matrices { max, .. } => max.len(),
            Maps::Shifts { max, .. } => max.len(),
        }
    }

    pub fn min_matrices(&self) -> Option<&[Matrix]> {
        match &self.maps {
            Maps::Matrices { min, .. } => Some(min),
            Maps::Shifts { .. } => None,
        }
    }

    pub fn max_matrices(&self) -> Option<&[Matrix]> {
        match &self.maps {
            Maps::Matrices { max, .. } => Some(max),
            Maps::Shifts { .. } => None,
        }
    }

    pub fn min_vectors(&self) -> Option<&[Point]> {
        match &self.maps {
            Maps::Shifts { min, .. } => Some(min),
            Maps::Matrices { .. } => None,
        }
    }

    pub fn max_vectors(&self) -> Option<&[Point]> {
        match &self.maps {
            Maps::Shifts { max, .. } => Some(max),
            Maps::Matrices { .. } => None,
        }
    }

    fn check_indices(&self, a: usize, b: usize) -> Result<()> {
        if a >= self.n_min() {
            return Err(Error::ActionOutOfRange {
                role: "min",
                index: a,
                len: self.n_min(),
            });
        }
        if b >= self.n_max() {
            return Err(Error::ActionOutOfRange {
                role: "max",
                index: b,
                len: self.n_max(),
            });
        }
        Ok(())
    }

    /// `T_ab(x)`.
    pub fn apply(&self, a: usize, b: usize, x: &[f64]) -> Result<Point> {
        self.check_indices(a, b)?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        if self.kind == MapKind::NonnegColumnMatrices {
            crate::hemimetric::check_positive(x)?;
        }
        Ok(self.apply_unchecked(a, b, x))
    }

    /// `T_ab(x)` without validation.
    pub fn apply_unchecked(&self, a: usize, b: usize, x: &[f64]) -> Point {
        match &self.maps {
            Maps::Matrices { min, max } => row_times(&row_times(x, &min[a]), &max[b]),
            Maps::Shifts { min, max } => x
                .iter()
                .zip(&min[a])
                .zip(&max[b])
                .map(|((xi, ai), bi)| xi + ai + bi)
                .collect(),
        }
    }

    /// Normalized map on the simplex: returns `(T_ab(x)/⟨T_ab(x),1⟩, log⟨T_ab(x),1⟩)`.
    pub fn normalized_apply(&self, a: usize, b: usize, x: &[f64]) -> Result<(Point, f64)> {
        if self.kind != MapKind::NonnegColumnMatrices {
            return Err(Error::Unsupported(
                "normalized maps require a nonnegative matrix family".into(),
            ));
        }
        let y = self.apply(a, b, x)?;
        let s: f64 = y.iter().sum();
        if !(s > 0.0) {
            return Err(Error::InvalidPoint("image of x is zero".into()));
        }
        Ok((y.iter().map(|v| v / s).collect(), s.ln()))
    }

    pub(crate) fn normalized_apply_unchecked(&self, a: usize, b: usize, x: &[f64]) -> (Point, f64) {
        let mut y = self.apply_unchecked(a, b, x);
        let s: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= s);
        (y, s.ln())
    }
}

/// A game: state space, action family, base point and move order.
#[derive(Debug, Clone)]
pub struct GameInstance {
    space: MetricSpace,
    family: MapFamily,
    base_point: Point,
    max_first: bool,
    one_step_bound: f64,
    node_budget: u64,
}

impl GameInstance {
    /// Builds and validates an instance. `base_point` defaults to
    /// [`MetricSpace::default_base_point`]. Construction samples pairs of
    /// points and rejects families that visibly fail nonexpansiveness.
    pub fn new(space: MetricSpace, family: MapFamily, base_point: Option<Point>, max_first: bool) -> Result<Self> {
        if family.dim() != space.dim {
            return Err(Error::DimensionMismatch {
                expected: space.dim,
                found: family.dim(),
            });
        }
        match (family.kind(), space.kind) {
            (MapKind::NonnegColumnMatrices, k) if k.is_orthant() => {}
            (MapKind::Translations, k) if k.is_normed() => {}
            (MapKind::Translations, MetricKind::PoincareHalfPlane) => {
                let shifts = family.min_vectors().into_iter().chain(family.max_vectors()).flatten();
                for v in shifts {
                    if v[1] != 0.0 {
                        return Err(Error::InvalidFamily(
                            "half-plane translations must be horizontal".into(),
                        ));
                    }
                }
            }
            (kind, space_kind) => {
                return Err(Error::Unsupported(format!(
                    "{kind:?} maps cannot act on a {space_kind:?} space"
                )))
            }
        }
        let base_point = base_point.unwrap_or_else(|| space.default_base_point());
        space.validate(&base_point)?;

        let mut instance = Self {
            space,
            family,
            base_point,
            max_first,
            one_step_bound: 0.0,
            node_budget: DEFAULT_NODE_BUDGET,
        };
        instance.one_step_bound = instance.compute_one_step_bound();
        if let Some(v) = instance.nonexpansive_violation(32, 0x5eed) {
            return Err(Error::InvariantViolation(format!(
                "family is not nonexpansive: excess {v:e}"
            )));
        }
        Ok(instance)
    }

    pub fn with_node_budget(mut self, budget: u64) -> Self {
        self.node_budget = budget;
        self
    }

    pub fn space(&self) -> &MetricSpace {
        &self.space
    }

    pub fn family(&self) -> &MapFamily {
        &self.family
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn max_first(&self) -> bool {
        self.max_first
    }

    pub fn node_budget(&self) -> u64 {
        self.node_budget
    }

    pub fn n_min(&self) -> usize {
        self.family.n_min()
    }

    pub fn n_max(&self) -> usize {
        self.family.n_max()
    }

    /// `M = max_{a,b} d(T_ab(x₀), x₀)`.
    pub fn one_step_bound(&self) -> f64 {
        self.one_step_bound
    }

    pub fn is_orthant(&self) -> bool {
        self.space.kind.is_orthant()
    }

    /// True when Min has a single action.
    pub fn is_minimizer_free(&self) -> bool {
        self.n_min() == 1
    }

    /// `d(x, y)` in the instance's hemi-metric.
    #[inline]
    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        self.space.distance_unchecked(x, y)
    }

    /// `d(x, x₀)`.
    #[inline]
    pub fn payoff(&self, x: &[f64]) -> f64 {
        self.space.distance_unchecked(x, &self.base_point)
    }

    #[inline]
    pub fn step(&self, a: usize, b: usize, x: &[f64]) -> Point {
        self.family.apply_unchecked(a, b, x)
    }

    fn compute_one_step_bound(&self) -> f64 {
        let mut m = f64::NEG_INFINITY;
        for a in 0..self.n_min() {
            for b in 0..self.n_max() {
                m = m.max(self.payoff(&self.step(a, b, &self.base_point)));
            }
        }
        m
    }

    /// Largest sampled excess `d(Tx, Ty) − d(x, y)`, if above 1e−9.
    pub fn nonexpansive_violation(&self, samples: usize, seed: u64) -> Option<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = 0.0_f64;
        for _ in 0..samples {
            let x = sample_point(&self.space, &mut rng);
            let y = sample_point(&self.space, &mut rng);
            let dxy = self.dist(&x, &y);
            for a in 0..self.n_min() {
                for b in 0..self.n_max() {
                    let excess = self.dist(&self.step(a, b, &x), &self.step(a, b, &y)) - dxy;
                    worst = worst.max(excess);
                }
            }
        }
        (worst > 1e-9 * (1.0 + worst.abs())).then_some(worst)
    }
}

/// Random legal point of `space`, spread over several orders of magnitude
/// on the orthant.
pub fn sample_point<R: Rng + ?Sized>(space: &MetricSpace, rng: &mut R) -> Point {
    match space.kind {
        MetricKind::OrthantFunk | MetricKind::OrthantReverseFunk => {
            (0..space.dim).map(|_| rng.random_range(-3.0..3.0_f64).exp()).collect()
        }
        MetricKind::NormedEuclidean | MetricKind::NormedSup => {
            (0..space.dim).map(|_| rng.random_range(-10.0..10.0)).collect()
        }
        MetricKind::PoincareHalfPlane => vec![rng.random_range(-10.0..10.0), rng.random_range(-3.0..3.0_f64).exp()],
    }
}

/// Empirical lower estimate of the uniform almost-isometry constant γ:
/// the largest observed `d(x, y) − d(T_ab x, T_ab y)` over sampled pairs.
pub fn estimate_defect(instance: &GameInstance, samples: usize, seed: u64) -> f64 {
    if instance.family().kind() == MapKind::Translations {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gamma = 0.0_f64;
    for _ in 0..samples {
        let x = sample_point(instance.space(), &mut rng);
        let y = sample_point(instance.space(), &mut rng);
        let dxy = instance.dist(&x, &y);
        for a in 0..instance.n_min() {
            for b in 0..instance.n_max() {
                let d = instance.dist(&instance.step(a, b, &x), &instance.step(a, b, &y));
                gamma = gamma.max(dxy - d);
            }
        }
    }
    // rounding noise of the log-space evaluation
    if gamma < 1e-12 {
        0.0
    } else {
        gamma
    }
}
