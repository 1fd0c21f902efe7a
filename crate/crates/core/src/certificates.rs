//! Two-sided bounds on the value of conical games from grid functions,
//! and a finite-horizon diagnostic for non-defectivity.
//!
//! For a grid-Lipschitz `v` with extension `ṽ`, both `ṽ` and `Fṽ` are
//! 1-Lipschitz for Funk, so `Fṽ − ṽ` is 2-Lipschitz for Thompson. On
//! `Δ_δ` it therefore deviates from its grid values by at most `2h`.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::GameInstance;
use crate::error::{Error, Result};
use crate::hemimetric::Point;
use crate::horizon::{self, FeketeEstimate};
use crate::simplex_iter::{self, Extension, Grid, GridFunction, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Lower,
    Upper,
}

/// A certified one-sided bound `lambda` on the game value.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "CertificateRecord", try_from = "CertificateRecord")]
pub struct Certificate {
    pub direction: Direction,
    pub lambda: f64,
    pub function: GridFunction,
    /// `2·h`, added to the grid residual.
    pub mesh_slack: f64,
    /// Offset with `ṽ_lift(x) ≥ alpha + d(x, x₀)`; set for upper certificates.
    pub alpha: Option<f64>,
    /// Smallest coordinate among normalized one-step images of grid points.
    pub min_image_coordinate: f64,
    /// True when some image leaves `Δ_δ`, so the bound assumes the
    /// dynamics stays inside the covered region.
    pub conditional: bool,
}

/// Flat JSON form of a certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub direction: Direction,
    pub lambda: f64,
    pub grid: GridSpec,
    pub values: Vec<f64>,
    pub mesh_slack: f64,
    pub alpha: Option<f64>,
    pub min_image_coordinate: f64,
    pub conditional: bool,
}

impl From<Certificate> for CertificateRecord {
    fn from(c: Certificate) -> Self {
        Self {
            direction: c.direction,
            lambda: c.lambda,
            grid: c.function.grid().spec(),
            values: c.function.values().to_vec(),
            mesh_slack: c.mesh_slack,
            alpha: c.alpha,
            min_image_coordinate: c.min_image_coordinate,
            conditional: c.conditional,
        }
    }
}

impl TryFrom<CertificateRecord> for Certificate {
    type Error = Error;

    fn try_from(r: CertificateRecord) -> Result<Self> {
        let grid = Arc::new(simplex_iter::grid_from_spec(&r.grid)?);
        Ok(Self {
            direction: r.direction,
            lambda: r.lambda,
            function: GridFunction::new(grid, r.values)?,
            mesh_slack: r.mesh_slack,
            alpha: r.alpha,
            min_image_coordinate: r.min_image_coordinate,
            conditional: r.conditional,
        })
    }
}

/// Residuals `Fṽ(g) − ṽ(g)` at the grid points and the smallest image coordinate.
fn grid_residuals(instance: &GameInstance, v: &GridFunction) -> Result<(Vec<f64>, f64)> {
    simplex_iter::require_orthant(instance)?;
    v.check_grid_lipschitz(1e-9)?;
    let (fv, min_coord) = simplex_iter::apply_f_detailed(instance, v, Extension::Upper)?;
    let r = v
        .grid()
        .points()
        .par_iter()
        .zip(fv.values())
        .map(|(g, f)| f - v.eval(g))
        .collect();
    Ok((r, min_coord))
}

/// Lower and upper certificates for `v`.
pub fn certify(instance: &GameInstance, v: &GridFunction) -> Result<(Certificate, Certificate)> {
    let (r, min_coord) = grid_residuals(instance, v)?;
    let slack = 2.0 * v.grid().covering_radius();
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let conditional = min_coord < v.grid().interior_floor();
    let make = |direction, lambda, alpha| Certificate {
        direction,
        lambda,
        function: v.clone(),
        mesh_slack: slack,
        alpha,
        min_image_coordinate: min_coord,
        conditional,
    };
    // funk(x, x₀) ≥ 0 on the simplex, so ṽ_lift − d(·, x₀) ≥ min v.
    Ok((
        make(Direction::Lower, lo - slack, None),
        make(Direction::Upper, hi + slack, Some(v.min_value())),
    ))
}

/// Recomputes `lambda` from the stored function and slack.
pub fn recompute_lambda(instance: &GameInstance, cert: &Certificate) -> Result<f64> {
    let (r, _) = grid_residuals(instance, &cert.function)?;
    Ok(match cert.direction {
        Direction::Lower => r.iter().copied().fold(f64::INFINITY, f64::min) - cert.mesh_slack,
        Direction::Upper => r.iter().copied().fold(f64::NEG_INFINITY, f64::max) + cert.mesh_slack,
    })
}

/// Interval known to contain the value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub provenance: String,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Combines certificates with an optional Fekete table (whose running
/// minimum is itself an upper bound).
pub fn bracket(lower: &Certificate, upper: &Certificate, fekete: Option<&FeketeEstimate>) -> Result<Bracket> {
    if lower.direction != Direction::Lower || upper.direction != Direction::Upper {
        return Err(Error::Precondition(
            "bracket needs a lower and an upper certificate".into(),
        ));
    }
    let mut provenance = format!(
        "lower certificate (mesh slack {:e}); upper certificate",
        lower.mesh_slack
    );
    let mut hi = upper.lambda;
    if let Some(f) = fekete {
        let r = f.rho_hat();
        if r < hi {
            hi = r;
            provenance = format!(
                "lower certificate (mesh slack {:e}); min_k s_k/k over k <= {}",
                lower.mesh_slack, f.horizon
            );
        }
    }
    if lower.conditional || upper.conditional {
        provenance.push_str("; conditional on dynamics staying in the delta-interior");
    }
    if lower.lambda > hi {
        return Err(Error::InvariantViolation(format!(
            "lower bound {} exceeds upper bound {hi}",
            lower.lambda
        )));
    }
    Ok(Bracket {
        lo: lower.lambda,
        hi,
        provenance,
    })
}

/// Worst observed margin of a certificate on random points of `Δ_δ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerificationReport {
    pub direction: Direction,
    pub samples: usize,
    /// `(Fṽ − ṽ)(x) − λ` for lower certificates, `λ − (Fṽ − ṽ)(x)` for upper.
    pub worst_margin: f64,
    pub worst_point: Option<Point>,
    pub respected: bool,
}

pub fn verify_certificate(
    instance: &GameInstance,
    cert: &Certificate,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport> {
    simplex_iter::require_orthant(instance)?;
    let v = &cert.function;
    let grid: &Grid = v.grid();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Point> = (0..samples).map(|_| grid.sample_interior(&mut rng)).collect();
    let margins: Vec<f64> = points
        .par_iter()
        .map(|x| {
            let (fx, _) = simplex_iter::shapley_at(instance, v, Extension::Upper, x);
            let gap = fx - v.eval(x);
            match cert.direction {
                Direction::Lower => gap - cert.lambda,
                Direction::Upper => cert.lambda - gap,
            }
        })
        .collect();
    let mut worst = (f64::INFINITY, None);
    for (m, x) in margins.iter().zip(&points) {
        if *m < worst.0 {
            worst = (*m, Some(x.clone()));
        }
    }
    Ok(VerificationReport {
        direction: cert.direction,
        samples,
        worst_margin: worst.0,
        worst_point: worst.1,
        respected: worst.0 >= 0.0,
    })
}

/// Regressor for the growth fit of `t_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthModel {
    Logarithmic,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    BoundedLooking,
    GrowingLooking,
}

/// Least-squares line `t ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub model: GrowthModel,
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
}

/// Heuristic threshold: `t_k` counts as growing when the fitted trend
/// rises by more than this over the scanned window.
pub const GROWTH_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NondefectivityReport {
    pub rho_hat: f64,
    /// `t_k = s_k − k·rho_hat` for `k = 1..=K`.
    pub t: Vec<f64>,
    pub log_fit: Fit,
    pub linear_fit: Fit,
    pub chosen: GrowthModel,
    /// Fitted rise of `t_k` over the window.
    pub growth: f64,
    pub verdict: Verdict,
    /// `v_K(g) = max_{0 ≤ k ≤ K} [Sᵏ d(·, x₀)](g) − k·rho_hat` per grid point.
    pub candidate: Option<Vec<f64>>,
}

fn least_squares(xs: &[f64], ts: &[f64], model: GrowthModel) -> Fit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let mt = ts.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxt: f64 = xs.iter().zip(ts).map(|(x, t)| (x - mx) * (t - mt)).sum();
    let slope = if sxx > 0.0 { sxt / sxx } else { 0.0 };
    let intercept = mt - slope * mx;
    let residual = xs
        .iter()
        .zip(ts)
        .map(|(x, t)| (t - intercept - slope * x).powi(2))
        .sum();
    Fit {
        model,
        slope,
        intercept,
        residual,
    }
}

/// Finite-horizon scan of `t_k = s_k − k·rho_hat` for a game where Min
/// has a single action. Optionally tabulates the truncated candidate
/// extremal function on `grid`.
pub fn nondefectivity_scan(
    instance: &GameInstance,
    rho_hat: f64,
    k_max: usize,
    grid: Option<&Grid>,
) -> Result<NondefectivityReport> {
    if !instance.is_minimizer_free() {
        return Err(Error::Precondition(
            "nondefectivity scan needs a single Min action".into(),
        ));
    }
    if k_max < 2 {
        return Err(Error::Precondition("scan needs K >= 2".into()));
    }
    let est = horizon::fekete(instance, k_max)?;
    let t: Vec<f64> = est
        .values
        .iter()
        .enumerate()
        .map(|(i, s)| s - (i + 1) as f64 * rho_hat)
        .collect();
    let ks: Vec<f64> = (1..=k_max).map(|k| k as f64).collect();
    let logs: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let log_fit = least_squares(&logs, &t, GrowthModel::Logarithmic);
    let linear_fit = least_squares(&ks, &t, GrowthModel::Linear);
    let (chosen, growth) = if log_fit.residual <= linear_fit.residual {
        (GrowthModel::Logarithmic, log_fit.slope * (k_max as f64).ln())
    } else {
        (GrowthModel::Linear, linear_fit.slope * (k_max - 1) as f64)
    };
    let verdict = if growth > GROWTH_THRESHOLD {
        Verdict::GrowingLooking
    } else {
        Verdict::BoundedLooking
    };
    let candidate = match grid {
        None => None,
        Some(g) => {
            if g.dim() != instance.space().dim {
                return Err(Error::DimensionMismatch {
                    expected: instance.space().dim,
                    found: g.dim(),
                });
            }
            let rows: Vec<Result<f64>> = g
                .points()
                .par_iter()
                .map(|p| {
                    let mut best = instance.payoff(p);
                    for k in 1..=k_max {
                        let s = horizon::exact_value_from(instance, p, k)?;
                        best = best.max(s - k as f64 * rho_hat);
                    }
                    Ok(best)
                })
                .collect();
            Some(rows.into_iter().collect::<Result<Vec<f64>>>()?)
        }
    };
    Ok(NondefectivityReport {
        rho_hat,
        t,
        log_fit,
        linear_fit,
        chosen,
        growth,
        verdict,
        candidate,
    })
}
