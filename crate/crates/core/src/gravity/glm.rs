//! Poisson regression with log link, fitted by iteratively reweighted least
//! squares with step halving.
//!
//! Responses may be any non-negative real numbers: only the mean-variance
//! relation of the Poisson family is used, so continuous trade values are
//! handled in the quasi-likelihood sense.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 50;
/// Added to the mean response before taking the log for the start value.
const START_EPS: f64 = 1e-8;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone)]
pub struct GlmProblem {
    design: DMatrix<f64>,
    response: DVector<f64>,
    offset: Option<DVector<f64>>,
}

impl GlmProblem {
    /// `design` is n×p and should include an intercept column of ones when
    /// one is wanted. Rank is checked at fit time.
    pub fn new(
        design: DMatrix<f64>,
        response: DVector<f64>,
        offset: Option<DVector<f64>>,
    ) -> Result<Self> {
        let n = design.nrows();
        if response.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: response.len(),
            });
        }
        if let Some(o) = &offset {
            if o.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: o.len(),
                });
            }
            if o.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("offset must be finite".into()));
            }
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("design matrix must be finite".into()));
        }
        if response.iter().any(|&y| !(y >= 0.0) || !y.is_finite()) {
            return Err(Error::Domain(
                "responses must be finite and non-negative".into(),
            ));
        }
        Ok(GlmProblem {
            design,
            response,
            offset,
        })
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn offset(&self) -> Option<&DVector<f64>> {
        self.offset.as_ref()
    }

    pub fn n_obs(&self) -> usize {
        self.design.nrows()
    }

    pub fn n_coef(&self) -> usize {
        self.design.ncols()
    }

    /// Index of the first all-ones column.
    pub fn intercept_column(&self) -> Option<usize> {
        (0..self.design.ncols()).find(|&j| self.design.column(j).iter().all(|&v| v == 1.0))
    }

    fn linear_predictor(&self, coef: &DVector<f64>) -> DVector<f64> {
        let mut eta = &self.design * coef;
        if let Some(o) = &self.offset {
            eta += o;
        }
        eta
    }

    /// Numerical rank of the design from its singular values.
    pub fn rank(&self) -> usize {
        let (n, p) = self.design.shape();
        if n == 0 || p == 0 {
            return 0;
        }
        let sv = self.design.clone().singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let cutoff = max * (n.max(p) as f64) * f64::EPSILON;
        sv.iter().filter(|&&s| s > cutoff).count()
    }
}

#[derive(Debug, Clone)]
pub struct GlmFit {
    pub coefficients: DVector<f64>,
    pub fitted: DVector<f64>,
    pub deviance: f64,
    /// Deviance of the intercept-only model (with the same offset).
    pub null_deviance: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Deviance at the start values followed by one entry per iteration.
    pub deviance_trace: Vec<f64>,
}

/// Poisson deviance `2 Σ [y log(y/μ) − (y − μ)]`, with `y log(y/μ) = 0` at `y = 0`.
pub fn poisson_deviance(y: &DVector<f64>, mu: &DVector<f64>) -> f64 {
    2.0 * y
        .iter()
        .zip(mu.iter())
        .map(|(&y, &m)| {
            let ylog = if y > 0.0 { y * (y / m).ln() } else { 0.0 };
            ylog - (y - m)
        })
        .sum::<f64>()
}

fn mean_from_eta(eta: &DVector<f64>) -> DVector<f64> {
    eta.map(|e| e.exp().max(f64::MIN_POSITIVE))
}

/// Converged when the relative deviance change `|D_old − D_new| / (|D_new| + 0.1)`
/// falls below `tol`.
pub fn fit_poisson_glm(problem: &GlmProblem, tol: f64, max_iter: usize) -> Result<GlmFit> {
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let (n, p) = problem.design.shape();
    if n < p {
        return Err(Error::TooFewObservations {
            found: n,
            needed: p,
        });
    }
    let rank = problem.rank();
    if rank < p {
        return Err(Error::RankDeficient { rank, columns: p });
    }
    let x = &problem.design;
    let y = &problem.response;

    let mut coef = DVector::zeros(p);
    if let Some(j) = problem.intercept_column() {
        coef[j] = (y.mean() + START_EPS).ln();
    }
    let mut eta = problem.linear_predictor(&coef);
    let mut mu = mean_from_eta(&eta);
    let mut dev = poisson_deviance(y, &mu);
    let mut trace = vec![dev];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        // working response without offset; weights are μ under the log link
        let z = DVector::from_iterator(
            n,
            (0..n).map(|i| {
                let off = problem.offset.as_ref().map_or(0.0, |o| o[i]);
                eta[i] - off + (y[i] - mu[i]) / mu[i]
            }),
        );
        let mut xtw = x.transpose();
        for (i, mut col) in xtw.column_iter_mut().enumerate() {
            col *= mu[i];
        }
        let gram = &xtw * x;
        let rhs = &xtw * z;
        let proposal = match gram.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => gram
                .lu()
                .solve(&rhs)
                .ok_or(Error::RankDeficient { rank, columns: p })?,
        };

        let mut step = proposal;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let eta_new = problem.linear_predictor(&step);
            let mu_new = mean_from_eta(&eta_new);
            let dev_new = poisson_deviance(y, &mu_new);
            if dev_new.is_finite() && dev_new <= dev {
                accepted = Some((step.clone(), eta_new, mu_new, dev_new));
                break;
            }
            step = (&step + &coef) * 0.5;
        }
        let Some((c, e, m, dev_new)) = accepted else {
            // no descent direction left at working precision
            converged = true;
            trace.push(dev);
            break;
        };
        let change = (dev - dev_new).abs() / (dev_new.abs() + 0.1);
        coef = c;
        eta = e;
        mu = m;
        dev = dev_new;
        trace.push(dev);
        if change < tol {
            converged = true;
            break;
        }
    }

    let null_deviance = null_deviance(problem);
    Ok(GlmFit {
        coefficients: coef,
        fitted: mu,
        deviance: dev,
        null_deviance,
        iterations,
        converged,
        deviance_trace: trace,
    })
}

/// Intercept-only model: its MLE has the closed form
/// `exp(b) = Σy / Σ exp(offset)`.
fn null_deviance(problem: &GlmProblem) -> f64 {
    let y = &problem.response;
    let mu = match &problem.offset {
        None => DVector::from_element(y.len(), y.mean()),
        Some(off) => {
            let total: f64 = y.iter().sum();
            let base: f64 = off.iter().map(|o| o.exp()).sum();
            let b = if total > 0.0 {
                (total / base).ln()
            } else {
                -700.0
            };
            mean_from_eta(&off.map(|o| o + b))
        }
    };
    poisson_deviance(y, &mu)
}
