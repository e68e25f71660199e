//! Gravity model of bilateral trade: theoretical flows `k·Mi·Mj / Dij^a`,
//! calibration of the mobility constant `k`, and Poisson estimation of the
//! log-linear regression on GDP and distance.

pub mod glm;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::domain::{CountryCode, CountryRecord, TradeFlowTable};
use crate::error::{Error, Result};
use crate::ingest::DistanceTable;

pub use glm::{
    fit_poisson_glm, poisson_deviance, GlmFit, GlmProblem, DEFAULT_MAX_ITER, DEFAULT_TOL,
};

pub const DEFAULT_DISTANCE_EXPONENT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravitySpec {
    /// Distance exponent of the theoretical flow formula.
    pub a: f64,
    /// Year whose GDP serves as mass; `None` uses the flow year.
    pub mass_year: Option<i32>,
}

impl Default for GravitySpec {
    fn default() -> Self {
        GravitySpec {
            a: DEFAULT_DISTANCE_EXPONENT,
            mass_year: None,
        }
    }
}

impl GravitySpec {
    pub fn new(a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::Domain(format!(
                "distance exponent must be positive, got {a}"
            )));
        }
        Ok(GravitySpec { a, mass_year: None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Pairs with masses and distance but no flow record enter as zero
    /// flows instead of being left out.
    pub assume_zero: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            assume_zero: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GravityFit {
    pub year: i32,
    /// Free intercept; absorbs `α·log k`.
    pub intercept: f64,
    /// Elasticity on origin GDP.
    pub beta: f64,
    /// Elasticity on destination GDP.
    pub gamma: f64,
    /// Raw coefficient on `log Dij`.
    pub delta: f64,
    /// `1 − deviance / null deviance`.
    pub r2_deviance: f64,
    /// Squared Pearson correlation of fitted and observed flows.
    pub r2_corr: f64,
    pub deviance: f64,
    pub null_deviance: f64,
    pub n_obs: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// `k · m_i · m_j / d_ij^a`.
pub fn theoretical_flow(m_i: f64, m_j: f64, d_ij: f64, k: f64, a: f64) -> Result<f64> {
    for (name, v) in [("m_i", m_i), ("m_j", m_j), ("d_ij", d_ij), ("k", k)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    if !a.is_finite() {
        return Err(Error::Domain(format!("exponent must be finite, got {a}")));
    }
    Ok(k * m_i * m_j / d_ij.powf(a))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KVariant {
    /// `Σ flows / Σ Mi·Mj`, distance left out of the denominator.
    #[default]
    Paper,
    /// `Σ flows / Σ Mi·Mj / Dij^a`, so that theoretical and observed totals agree.
    TotalPreserving,
}

/// `k = Σ flows / Σ (m_i·m_j)`.
pub fn calibrate_k(flows: &[f64], mass_products: &[f64]) -> Result<f64> {
    if flows.is_empty() || flows.len() != mass_products.len() {
        return Err(Error::Domain(format!(
            "need equal, non-empty flow and mass lists (got {} and {})",
            flows.len(),
            mass_products.len()
        )));
    }
    let mass: f64 = mass_products.iter().sum();
    if !(mass > 0.0) {
        return Err(Error::Domain("mass products sum to zero".into()));
    }
    Ok(flows.iter().sum::<f64>() / mass)
}

/// `k = Σ flows / Σ (m_i·m_j / d_ij^a)`.
pub fn calibrate_k_total_preserving(
    flows: &[f64],
    mass_products: &[f64],
    distances: &[f64],
    a: f64,
) -> Result<f64> {
    if distances.len() != mass_products.len() {
        return Err(Error::DimensionMismatch {
            expected: mass_products.len(),
            found: distances.len(),
        });
    }
    if distances.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Domain("distances must be positive".into()));
    }
    let attenuated: Vec<f64> = mass_products
        .iter()
        .zip(distances)
        .map(|(m, d)| m / d.powf(a))
        .collect();
    calibrate_k(flows, &attenuated)
}

impl KVariant {
    pub fn calibrate(
        self,
        flows: &[f64],
        mass_products: &[f64],
        distances: &[f64],
        a: f64,
    ) -> Result<f64> {
        match self {
            KVariant::Paper => calibrate_k(flows, mass_products),
            KVariant::TotalPreserving => {
                calibrate_k_total_preserving(flows, mass_products, distances, a)
            }
        }
    }
}

/// One ordered country pair entering the regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairObservation {
    pub origin: CountryCode,
    pub dest: CountryCode,
    pub mass_origin: f64,
    pub mass_dest: f64,
    pub distance: f64,
    pub flow: f64,
}

/// Ordered pairs of countries with GDP for the mass year and a distance,
/// joined with the sector-summed flows of `year`. Pairs without a flow
/// record are skipped unless `assume_zero`.
pub fn pair_observations(
    flows: &TradeFlowTable,
    year: i32,
    countries: &[CountryRecord],
    dist: &DistanceTable,
    spec: &GravitySpec,
    assume_zero: bool,
) -> Result<Vec<PairObservation>> {
    let observed = flows.pair_totals(year);
    if observed.is_empty() && !flows.years().contains(&year) {
        return Err(Error::MissingYear(year));
    }
    let mass_year = spec.mass_year.unwrap_or(year);
    let by_code: BTreeMap<CountryCode, &CountryRecord> =
        countries.iter().map(|c| (c.code, c)).collect();
    if !by_code.values().any(|c| c.gdp(mass_year).is_some()) {
        return Err(Error::MissingYear(mass_year));
    }

    // every observed pair must be fully covariate-resolved
    for &(o, d) in observed.keys() {
        for c in [o, d] {
            if by_code.get(&c).and_then(|r| r.gdp(mass_year)).is_none() {
                return Err(Error::MissingPairData {
                    what: "GDP",
                    origin: o.to_string(),
                    dest: d.to_string(),
                });
            }
        }
        if dist.get(o, d).is_none() {
            return Err(Error::MissingPairData {
                what: "distance",
                origin: o.to_string(),
                dest: d.to_string(),
            });
        }
    }

    let mut out = Vec::new();
    for (&o, co) in &by_code {
        let Some(mo) = co.gdp(mass_year) else {
            continue;
        };
        for (&d, cd) in &by_code {
            if o == d {
                continue;
            }
            let (Some(md), Some(dij)) = (cd.gdp(mass_year), dist.get(o, d)) else {
                continue;
            };
            let flow = match observed.get(&(o, d)) {
                Some(&f) => f,
                None if assume_zero => 0.0,
                None => continue,
            };
            out.push(PairObservation {
                origin: o,
                dest: d,
                mass_origin: mo,
                mass_dest: md,
                distance: dij,
                flow,
            });
        }
    }
    Ok(out)
}

/// Design `[1, log Mi, log Mj, log Dij]` with the flows as response.
pub fn gravity_problem(obs: &[PairObservation]) -> Result<GlmProblem> {
    let n = obs.len();
    let mut design = DMatrix::zeros(n, 4);
    for (i, o) in obs.iter().enumerate() {
        design[(i, 0)] = 1.0;
        design[(i, 1)] = o.mass_origin.ln();
        design[(i, 2)] = o.mass_dest.ln();
        design[(i, 3)] = o.distance.ln();
    }
    let response = DVector::from_iterator(n, obs.iter().map(|o| o.flow));
    GlmProblem::new(design, response, None)
}

fn squared_correlation(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.sum() / n, b.sum() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b.iter()) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return f64::NAN;
    }
    sab * sab / (saa * sbb)
}

pub fn fit_observations(
    year: i32,
    obs: &[PairObservation],
    opts: &FitOptions,
) -> Result<GravityFit> {
    if obs.len() < 4 {
        return Err(Error::TooFewObservations {
            found: obs.len(),
            needed: 4,
        });
    }
    let problem = gravity_problem(obs)?;
    let fit = fit_poisson_glm(&problem, opts.tol, opts.max_iter)?;
    let r2_deviance = if fit.null_deviance > 0.0 {
        1.0 - fit.deviance / fit.null_deviance
    } else {
        1.0
    };
    Ok(GravityFit {
        year,
        intercept: fit.coefficients[0],
        beta: fit.coefficients[1],
        gamma: fit.coefficients[2],
        delta: fit.coefficients[3],
        r2_deviance,
        r2_corr: squared_correlation(&fit.fitted, problem.response()),
        deviance: fit.deviance,
        null_deviance: fit.null_deviance,
        n_obs: obs.len(),
        iterations: fit.iterations,
        converged: fit.converged,
    })
}

pub fn fit_gravity(
    flows: &TradeFlowTable,
    year: i32,
    countries: &[CountryRecord],
    dist: &DistanceTable,
    spec: &GravitySpec,
    opts: &FitOptions,
) -> Result<GravityFit> {
    let obs = pair_observations(flows, year, countries, dist, spec, opts.assume_zero)?;
    fit_observations(year, &obs, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalFlow {
    pub origin: CountryCode,
    pub dest: CountryCode,
    pub observed: f64,
    pub theoretical: f64,
}

/// Theoretical flows for every observation with `k` calibrated by `variant`.
pub fn theoretical_flows(
    obs: &[PairObservation],
    a: f64,
    variant: KVariant,
) -> Result<(f64, Vec<TheoreticalFlow>)> {
    let flows: Vec<f64> = obs.iter().map(|o| o.flow).collect();
    let masses: Vec<f64> = obs.iter().map(|o| o.mass_origin * o.mass_dest).collect();
    let dists: Vec<f64> = obs.iter().map(|o| o.distance).collect();
    let k = variant.calibrate(&flows, &masses, &dists, a)?;
    let rows = obs
        .iter()
        .map(|o| {
            // k = 0 when every observed flow is zero
            let theoretical = if k > 0.0 {
                theoretical_flow(o.mass_origin, o.mass_dest, o.distance, k, a)?
            } else {
                0.0
            };
            Ok(TheoreticalFlow {
                origin: o.origin,
                dest: o.dest,
                observed: o.flow,
                theoretical,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((k, rows))
}
