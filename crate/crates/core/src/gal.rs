//! Univariate generalized asymmetric Laplace (GAL) distribution.
//!
//! `Y = delta + G mu + sqrt(G) sigma Z` with `G ~ Gamma(1/nu, 1)` and `Z`
//! standard normal. The closed-form density is
//!
//! ```text
//! g(y) = 2 exp(x mu / sigma^2) / (Gamma(1/nu) sigma sqrt(2 pi))
//!        * (|x| / c)^(1/nu - 1/2) * K_{1/nu - 1/2}(|x| c / sigma^2)
//! ```
//!
//! with `x = y - delta` and `c = sqrt(2 sigma^2 + mu^2)`. For `nu >= 2` the
//! density has an integrable singularity at `y = delta`.

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::special::bessel_k_scaled;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Location `delta`, shift `mu`, shape `nu > 0` and scale `sigma > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GalParams {
    pub delta: f64,
    pub mu: f64,
    pub nu: f64,
    pub sigma: f64,
}

impl GalParams {
    pub fn new(delta: f64, mu: f64, nu: f64, sigma: f64) -> Result<Self> {
        let p = Self { delta, mu, nu, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.mu.is_finite()) {
            return Err(Error::Domain(format!(
                "GAL location and shift must be finite, got delta={} mu={}",
                self.delta, self.mu
            )));
        }
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Domain(format!("GAL shape nu must be > 0, got {}", self.nu)));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::Domain(format!("GAL scale sigma must be > 0, got {}", self.sigma)));
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        self.delta + self.mu / self.nu
    }

    pub fn variance(&self) -> f64 {
        (self.sigma * self.sigma + self.mu * self.mu) / self.nu
    }

    /// Order of the Bessel function in the density, `1/nu - 1/2`.
    fn order(&self) -> f64 {
        1.0 / self.nu - 0.5
    }

    /// Log-density. `+inf` at `y == delta` when `nu >= 2`.
    ///
    /// Assumes validated parameters.
    pub fn ln_pdf(&self, y: f64) -> f64 {
        self.ln_pdf_at_offset(y - self.delta)
    }

    /// Log-density as a function of the offset `x = y - delta`; resolves
    /// offsets far below the spacing of floats near `delta`.
    pub fn ln_pdf_at_offset(&self, x: f64) -> f64 {
        if x == 0.0 {
            return self.ln_pdf_at_location();
        }
        self.ln_pdf_offset(x)
    }

    /// Log-density with `|y - delta|` floored at the floating-point
    /// resolution of the observation, so a sample that rounds onto a
    /// singular location still gets a finite (large) value.
    pub fn ln_pdf_resolved(&self, y: f64) -> f64 {
        let x = y - self.delta;
        let floor = f64::EPSILON * y.abs().max(self.delta.abs()).max(f64::MIN_POSITIVE);
        if x.abs() >= floor {
            return self.ln_pdf_offset(x);
        }
        let lambda = self.order();
        if lambda > 0.0 {
            self.ln_pdf_at_location()
        } else {
            self.ln_pdf_offset(if x < 0.0 { -floor } else { floor })
        }
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.ln_pdf(y).exp()
    }

    fn ln_norm(&self) -> f64 {
        std::f64::consts::LN_2 - ln_gamma(1.0 / self.nu) - self.sigma.ln() - LN_SQRT_2PI
    }

    fn ln_pdf_offset(&self, x: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let c = (2.0 * s2 + self.mu * self.mu).sqrt();
        let lambda = self.order();
        let ax = x.abs();
        let z = ax * c / s2;
        let scaled = match bessel_k_scaled(lambda, z) {
            Ok(v) => v,
            Err(_) => return f64::NEG_INFINITY,
        };
        if !scaled.is_finite() {
            // Only reachable for positive order at tiny |x|, where the
            // density is continuous and equals its value at the location.
            return self.ln_pdf_at_location();
        }
        self.ln_norm() + x * self.mu / s2 + lambda * (ax.ln() - c.ln()) + scaled.ln() - z
    }

    fn ln_pdf_at_location(&self) -> f64 {
        let lambda = self.order();
        if lambda <= 0.0 {
            return f64::INFINITY;
        }
        // K_l(z) ~ Gamma(l)/2 (z/2)^-l as z -> 0.
        let s2 = self.sigma * self.sigma;
        let c2 = 2.0 * s2 + self.mu * self.mu;
        ln_gamma(lambda) + lambda * (2.0 * s2).ln() - lambda * c2.ln() - ln_gamma(1.0 / self.nu)
            - self.sigma.ln()
            - LN_SQRT_2PI
    }

    /// One draw from the normal mean-variance mixture.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.draw(&self.mixing(), rng)
    }

    pub(crate) fn mixing(&self) -> Gamma<f64> {
        Gamma::new(1.0 / self.nu, 1.0).expect("validated shape")
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, gamma: &Gamma<f64>, rng: &mut R) -> f64 {
        let g: f64 = gamma.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        self.delta + g * self.mu + g.sqrt() * self.sigma * z
    }
}

/// Log-density of `y` under `params`.
pub fn gal_logpdf(params: &GalParams, y: f64) -> Result<f64> {
    params.validate()?;
    if y.is_nan() {
        return Err(Error::Input("GAL density evaluated at NaN".into()));
    }
    Ok(params.ln_pdf(y))
}

/// `n` i.i.d. draws; deterministic for a given generator state.
pub fn gal_sample<R: Rng + ?Sized>(params: &GalParams, rng: &mut R, n: usize) -> Result<Vec<f64>> {
    params.validate()?;
    let gamma = Gamma::new(1.0 / params.nu, 1.0)
        .map_err(|e| Error::Domain(format!("gamma mixing distribution: {e}")))?;
    Ok((0..n).map(|_| params.draw(&gamma, rng)).collect())
}

/// Outcome of [`gal_fit_mle`].
#[derive(Debug, Clone, PartialEq)]
pub struct GalFit {
    pub params: GalParams,
    pub log_likelihood: f64,
    pub init_log_likelihood: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out before the step sizes shrank
    /// below tolerance; `params` is then the best point found.
    pub converged: bool,
    /// Fewer samples than the recommended minimum of 100.
    pub small_sample: bool,
}

/// Objective evaluations allowed per fit.
pub const FIT_BUDGET: usize = 500;
const MIN_RECOMMENDED_SAMPLES: usize = 100;
const STEP_TOL: f64 = 1e-7;

/// Sample log-likelihood, using the resolution-floored density.
pub fn log_likelihood(params: &GalParams, samples: &[f64]) -> f64 {
    samples.iter().map(|&y| params.ln_pdf_resolved(y)).sum()
}

/// Maximum-likelihood fit by derivative-free coordinate search over
/// `(delta, mu, ln nu, ln sigma)` starting from `init`.
///
/// Only improving moves are accepted, so the returned log-likelihood is
/// never below the one at `init`.
pub fn gal_fit_mle(samples: &[f64], init: &GalParams) -> Result<GalFit> {
    init.validate()?;
    if samples.is_empty() {
        return Err(Error::Input("cannot fit GAL parameters to an empty sample".into()));
    }
    if let Some(bad) = samples.iter().find(|y| !y.is_finite()) {
        return Err(Error::Input(format!("non-finite sample {bad}")));
    }

    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n).sqrt().max(1e-6);

    let unpack = |v: &[f64; 4]| GalParams { delta: v[0], mu: v[1], nu: v[2].exp(), sigma: v[3].exp() };
    let objective = |v: &[f64; 4]| {
        let ll = log_likelihood(&unpack(v), samples);
        if ll.is_nan() { f64::NEG_INFINITY } else { ll }
    };

    let mut x = [init.delta, init.mu, init.nu.ln(), init.sigma.ln()];
    let init_ll = log_likelihood(init, samples);
    let mut best = init_ll;
    let mut best_params = *init;
    let mut evals = 1;
    let mut step = [0.25 * sd, 0.25 * sd, 0.25, 0.25];
    let tol = [STEP_TOL * sd, STEP_TOL * sd, STEP_TOL, STEP_TOL];
    let mut converged = false;

    'search: while evals < FIT_BUDGET {
        if step.iter().zip(&tol).all(|(s, t)| s < t) {
            converged = true;
            break;
        }
        for i in 0..4 {
            if step[i] < tol[i] {
                continue;
            }
            let mut moved = false;
            for dir in [1.0, -1.0] {
                if evals >= FIT_BUDGET {
                    break 'search;
                }
                let mut trial = x;
                trial[i] += dir * step[i];
                let f = objective(&trial);
                evals += 1;
                if f > best {
                    best = f;
                    x = trial;
                    best_params = unpack(&x);
                    moved = true;
                    // keep going in the same direction while it pays
                    step[i] *= 1.5;
                    break;
                }
            }
            if !moved {
                step[i] *= 0.5;
            }
        }
    }

    Ok(GalFit {
        params: best_params,
        log_likelihood: best,
        init_log_likelihood: init_ll,
        evaluations: evals,
        converged,
        small_sample: samples.len() < MIN_RECOMMENDED_SAMPLES,
    })
}
