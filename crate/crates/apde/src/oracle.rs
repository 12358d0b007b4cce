//! Exact linear-Gaussian reference: dense squared-exponential prior,
//! analytic posterior conditioning on masked observations, and posterior
//! sampling.
//!
//! This module is the quantitative referee for masked training: on
//! Gaussian data the posterior mean is the Bayes-optimal reconstruction,
//! so a learned model's unobserved-region error can be compared against an
//! exact floor. Everything here is dense linear algebra, deliberately
//! limited to small grids in exchange for exactness.

use nalgebra::{DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::mask::Mask;
use crate::seeds;

/// Largest grid edge the dense oracle accepts (matrix order ≤ 1024).
pub const MAX_ORACLE_RESOLUTION: usize = 32;

/// Squared-exponential Gaussian prior over a grid, with the covariance and
/// its Cholesky factor cached. Pixel coordinates are cell centers
/// `((i+0.5)/n, (j+0.5)/n)` of the unit square; the jitter is baked into
/// the stored diagonal, so `Σ_ii = σ² + δ`.
#[derive(Debug)]
pub struct GaussianPrior {
    resolution: usize,
    lengthscale: f64,
    variance: f64,
    jitter: f64,
    cov: DMatrix<f64>,
    chol: nalgebra::Cholesky<f64, Dyn>,
}

/// `σ²·exp(−d²/(2ℓ²))` between two cell centers of an `n`-grid.
fn kernel(n: usize, lengthscale: f64, variance: f64, p: usize, q: usize) -> f64 {
    let (py, px) = (p / n, p % n);
    let (qy, qx) = (q / n, q % n);
    let dy = (py as f64 - qy as f64) / n as f64;
    let dx = (px as f64 - qx as f64) / n as f64;
    let d2 = dy * dy + dx * dx;
    variance * (-d2 / (2.0 * lengthscale * lengthscale)).exp()
}

/// Build the dense prior. Fails when the jittered covariance is not
/// numerically positive definite.
pub fn build_prior(
    resolution: usize,
    lengthscale: f64,
    variance: f64,
    jitter: f64,
) -> Result<GaussianPrior> {
    if resolution > MAX_ORACLE_RESOLUTION {
        return Err(Error::config(format!(
            "dense oracle limited to {MAX_ORACLE_RESOLUTION}² grids, got {resolution}²"
        )));
    }
    if lengthscale <= 0.0 || variance <= 0.0 || jitter < 0.0 {
        return Err(Error::config(
            "prior needs lengthscale > 0, variance > 0, jitter >= 0",
        ));
    }
    let n = resolution * resolution;
    let mut cov = DMatrix::from_fn(n, n, |i, j| kernel(resolution, lengthscale, variance, i, j));
    for i in 0..n {
        cov[(i, i)] += jitter;
    }
    let chol = nalgebra::Cholesky::new(cov.clone()).ok_or_else(|| {
        Error::numeric(format!(
            "prior covariance not positive definite; increase jitter (currently {jitter:.3e})"
        ))
    })?;
    Ok(GaussianPrior {
        resolution,
        lengthscale,
        variance,
        jitter,
        cov,
        chol,
    })
}

/// Default jitter used throughout: `10⁻⁸·σ²`.
pub fn default_jitter(variance: f64) -> f64 {
    1e-8 * variance
}

impl GaussianPrior {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lengthscale(&self) -> f64 {
        self.lengthscale
    }

    /// Prior covariance entry (jitter included on the diagonal).
    pub fn cov_entry(&self, p: usize, q: usize) -> f64 {
        self.cov[(p, q)]
    }

    /// Exact draw `x = L·z` with `z` standard normal.
    pub fn sample(&self, seed: u64) -> Field {
        let n = self.resolution * self.resolution;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DVector::from_fn(n, |_, _| rng.sample(StandardNormal));
        let x = self.chol.l() * z;
        Field::from_vec(self.resolution, x.iter().copied().collect())
    }

    /// Condition the prior on masked observations.
    pub fn condition(&self, mask: &Mask, observed: &Field) -> Result<Conditional> {
        if mask.size() != self.resolution || observed.size() != self.resolution {
            return Err(Error::config("mask/field grid does not match the prior"));
        }
        let n = self.resolution * self.resolution;
        let obs_idx = mask.observed_indices();
        if obs_idx.is_empty() {
            // no data: posterior is the prior itself
            let variance = Field::from_vec(
                self.resolution,
                (0..n).map(|i| self.cov[(i, i)]).collect(),
            );
            return Ok(Conditional {
                mean: Field::zeros(self.resolution),
                variance,
                obs_idx,
                chol_oo: None,
                k_ao: DMatrix::zeros(n, 0),
                y: DVector::zeros(0),
            });
        }
        let m = obs_idx.len();
        let cov_oo = DMatrix::from_fn(m, m, |r, c| self.cov[(obs_idx[r], obs_idx[c])]);
        let chol_oo = nalgebra::Cholesky::new(cov_oo).ok_or_else(|| {
            Error::numeric("observed-block covariance not positive definite")
        })?;
        let k_ao = DMatrix::from_fn(n, m, |i, c| self.cov[(i, obs_idx[c])]);
        let y = DVector::from_fn(m, |r, _| observed.as_slice()[obs_idx[r]]);

        // posterior mean μ = K_AO Σ_OO⁻¹ y, exact at observed entries by
        // the identity K_OO Σ_OO⁻¹ y = y — enforced literally below
        let alpha = chol_oo.solve(&y);
        let mean_vec = &k_ao * &alpha;
        let mut mean = Field::from_vec(self.resolution, mean_vec.iter().copied().collect());
        for (r, &i) in obs_idx.iter().enumerate() {
            mean.as_mut_slice()[i] = y[r];
        }

        // marginal variance Σ_ii − ‖L⁻¹ K_Oi‖², clamped against roundoff
        let w = chol_oo
            .l()
            .solve_lower_triangular(&k_ao.transpose())
            .ok_or_else(|| Error::numeric("triangular solve failed in conditioning"))?;
        let variance = Field::from_vec(
            self.resolution,
            (0..n)
                .map(|i| (self.cov[(i, i)] - w.column(i).norm_squared()).max(0.0))
                .collect(),
        );
        Ok(Conditional {
            mean,
            variance,
            obs_idx,
            chol_oo: Some(chol_oo),
            k_ao,
            y,
        })
    }
}

/// Posterior after conditioning: analytic mean and marginal variance, plus
/// cached factors for drawing exact posterior samples.
pub struct Conditional {
    mean: Field,
    variance: Field,
    obs_idx: Vec<usize>,
    chol_oo: Option<nalgebra::Cholesky<f64, Dyn>>,
    k_ao: DMatrix<f64>,
    y: DVector<f64>,
}

impl Conditional {
    pub fn mean(&self) -> &Field {
        &self.mean
    }

    pub fn variance(&self) -> &Field {
        &self.variance
    }

    /// Exact posterior draw by Matheron's rule:
    /// `x* = f + K_AO Σ_OO⁻¹ (y − f_O)` with `f` a fresh prior draw —
    /// avoids factorizing the full posterior covariance.
    pub fn sample(&self, prior: &GaussianPrior, seed: u64) -> Field {
        let f = prior.sample(seed);
        let Some(chol_oo) = &self.chol_oo else {
            return f;
        };
        let m = self.obs_idx.len();
        let f_o = DVector::from_fn(m, |r, _| f.as_slice()[self.obs_idx[r]]);
        let correction = &self.k_ao * chol_oo.solve(&(&self.y - f_o));
        let mut out = f;
        for (i, v) in out.as_mut_slice().iter_mut().enumerate() {
            *v += correction[i];
        }
        out
    }
}

/// Independent coefficient/solution pairs drawn from one prior — the toy
/// jointly-Gaussian dataset used to compare learned reconstructions
/// against the analytic posterior.
pub fn sample_prior_pairs(prior: &GaussianPrior, count: usize, seed: u64) -> Vec<(Field, Field)> {
    (0..count)
        .map(|i| {
            (
                prior.sample(seeds::derive(seed, seeds::stream::PRIOR, 2 * i as u64)),
                prior.sample(seeds::derive(seed, seeds::stream::PRIOR, 2 * i as u64 + 1)),
            )
        })
        .collect()
}
