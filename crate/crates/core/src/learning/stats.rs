use super::LearnError;

/// Pseudo-count variance prior folded into every time estimate, so a tree
/// seen once gets a wide bell rather than a spike on the one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPrior {
    pub n0: f64,
    pub sigma0_s: f64,
}

impl GaussianPrior {
    pub const DEFAULT_N0: f64 = 1.0;
    pub const DEFAULT_SIGMA0_S: f64 = 120.0;
}

impl Default for GaussianPrior {
    fn default() -> Self {
        GaussianPrior {
            n0: Self::DEFAULT_N0,
            sigma0_s: Self::DEFAULT_SIGMA0_S,
        }
    }
}

/// Sufficient statistics of the time at which one build tree was reached.
///
/// Times are accumulated as integers, so folding the same samples in any
/// order or split gives bit-identical state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianStats {
    n: u64,
    sum_t: u64,
    sum_t2: u64,
    prior: GaussianPrior,
}

impl GaussianStats {
    pub fn new(prior: GaussianPrior) -> Self {
        GaussianStats {
            n: 0,
            sum_t: 0,
            sum_t2: 0,
            prior,
        }
    }

    /// Rebuilds stats from stored sums; rejects states no sample stream
    /// could produce.
    pub fn from_sums(n: u64, sum_t: u64, sum_t2: u64, prior: GaussianPrior) -> Result<Self, LearnError> {
        let s = GaussianStats {
            n,
            sum_t,
            sum_t2,
            prior,
        };
        if (n == 0 && (sum_t != 0 || sum_t2 != 0)) || s.scatter_numerator().is_none() {
            return Err(LearnError::InconsistentStats { n, sum_t, sum_t2 });
        }
        Ok(s)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sum_t(&self) -> u64 {
        self.sum_t
    }

    pub fn sum_t2(&self) -> u64 {
        self.sum_t2
    }

    pub fn prior(&self) -> GaussianPrior {
        self.prior
    }

    pub fn observe(&mut self, t_s: u32) {
        let t = t_s as u64;
        self.n += 1;
        self.sum_t += t;
        self.sum_t2 += t * t;
    }

    pub fn observed(mut self, t_s: u32) -> Self {
        self.observe(t_s);
        self
    }

    pub fn merge(&self, other: &GaussianStats) -> Result<GaussianStats, LearnError> {
        if self.prior != other.prior {
            return Err(LearnError::PriorMismatch);
        }
        Ok(GaussianStats {
            n: self.n + other.n,
            sum_t: self.sum_t + other.sum_t,
            sum_t2: self.sum_t2 + other.sum_t2,
            prior: self.prior,
        })
    }

    /// `n·Σt² − (Σt)²`, i.e. `n` times the scatter around the mean. Exact.
    fn scatter_numerator(&self) -> Option<u128> {
        let n = self.n as u128;
        (n * self.sum_t2 as u128).checked_sub((self.sum_t as u128).pow(2))
    }

    /// Posterior-style estimate: `μ = Σt/n`,
    /// `σ² = (n0·σ0² + Σ(t−μ)²) / (n0 + n)`, then floored at `sigma_min_s`.
    pub fn mean_and_sigma(&self, sigma_min_s: f64) -> Result<(f64, f64), LearnError> {
        if self.n == 0 {
            return Err(LearnError::NoEstimate);
        }
        let n = self.n as f64;
        let mu = self.sum_t as f64 / n;
        let scatter = self.scatter_numerator().unwrap_or(0) as f64 / n;
        let GaussianPrior { n0, sigma0_s } = self.prior;
        let var = (n0 * sigma0_s * sigma0_s + scatter) / (n0 + n);
        Ok((mu, var.sqrt().max(sigma_min_s)))
    }
}

/// A bell over integer seconds `1..=t_max`, normalized over that horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGaussian {
    pub mu: f64,
    pub sigma: f64,
}

impl TimeGaussian {
    /// `−(t−μ)²/(2σ²)`
    pub fn log_kernel(&self, t: f64) -> f64 {
        let z = (t - self.mu) / self.sigma;
        -0.5 * z * z
    }

    /// `ln Σ_{u=1..t_max} exp(log_kernel(u))`.
    ///
    /// Terms more than 40σ from the peak are below `exp(-800)` relative to
    /// it and vanish in f64, so only that window is summed.
    pub fn log_normalizer(&self, t_max: u32) -> f64 {
        let peak = self.mu.round().clamp(1.0, t_max as f64);
        let shift = self.log_kernel(peak);
        let lo = ((self.mu - 40.0 * self.sigma).floor().max(1.0)) as u32;
        let hi = ((self.mu + 40.0 * self.sigma).ceil().min(t_max as f64)) as u32;
        let (lo, hi) = if lo > hi { (peak as u32, peak as u32) } else { (lo, hi) };
        let sum: f64 = (lo..=hi)
            .map(|u| (self.log_kernel(u as f64) - shift).exp())
            .sum();
        shift + sum.ln()
    }
}
