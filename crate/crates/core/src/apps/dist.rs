//! Type and state distributions on a compact support.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::grid_fn::GridFunction;

#[derive(Debug, Clone, PartialEq)]
pub enum DistKind {
    Uniform,
    TruncatedLogistic { location: f64, scale: f64 },
    TruncatedGaussianMixture { weights: Vec<f64>, means: Vec<f64>, sigmas: Vec<f64> },
    /// CDF values on a grid spanning the support; may have flats.
    Tabulated(GridFunction),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    pub kind: DistKind,
    pub lo: f64,
    pub hi: f64,
}

impl DistributionSpec {
    pub fn new(kind: DistKind, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Invalid(format!("support [{lo}, {hi}] is not a proper interval")));
        }
        match &kind {
            DistKind::Uniform => {}
            DistKind::TruncatedLogistic { scale, .. } => {
                if !(*scale > 0.0) {
                    return Err(Error::Invalid("logistic scale must be positive".into()));
                }
            }
            DistKind::TruncatedGaussianMixture { weights, means, sigmas } => {
                if weights.is_empty() || weights.len() != means.len() || weights.len() != sigmas.len() {
                    return Err(Error::Invalid("mixture weights, means and sigmas must align".into()));
                }
                if weights.iter().any(|w| !(*w > 0.0)) || sigmas.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::Invalid("mixture weights and sigmas must be positive".into()));
                }
            }
            DistKind::Tabulated(cdf) => {
                let g = cdf.grid();
                if (g.lo() - lo).abs() > 1e-12 || (g.hi() - hi).abs() > 1e-12 {
                    return Err(Error::Invalid("tabulated cdf grid must span the support".into()));
                }
                let v = cdf.values();
                if v.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::Invalid("tabulated cdf decreases".into()));
                }
                if v[0].abs() > 1e-9 || (v[v.len() - 1] - 1.0).abs() > 1e-9 {
                    return Err(Error::Invalid("tabulated cdf must run from 0 to 1".into()));
                }
            }
        }
        Ok(DistributionSpec { kind, lo, hi })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        DistributionSpec::new(DistKind::Uniform, lo, hi)
    }

    pub fn logistic(location: f64, scale: f64, lo: f64, hi: f64) -> Result<Self> {
        DistributionSpec::new(DistKind::TruncatedLogistic { location, scale }, lo, hi)
    }

    pub fn mixture(weights: Vec<f64>, means: Vec<f64>, sigmas: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        DistributionSpec::new(DistKind::TruncatedGaussianMixture { weights, means, sigmas }, lo, hi)
    }

    /// Untruncated cdf, density and density derivative.
    fn base(&self, x: f64) -> (f64, f64, f64) {
        match &self.kind {
            DistKind::Uniform => (x, 1.0, 0.0),
            DistKind::TruncatedLogistic { location, scale } => {
                let z = (x - location) / scale;
                let s = 1.0 / (1.0 + (-z).exp());
                let d = s * (1.0 - s) / scale;
                (s, d, d * (1.0 - 2.0 * s) / scale)
            }
            DistKind::TruncatedGaussianMixture { weights, means, sigmas } => {
                let total: f64 = weights.iter().sum();
                let mut out = (0.0, 0.0, 0.0);
                for ((w, m), s) in weights.iter().zip(means).zip(sigmas) {
                    let n = Normal::new(*m, *s).expect("validated parameters");
                    let p = n.pdf(x);
                    out.0 += w * n.cdf(x) / total;
                    out.1 += w * p / total;
                    out.2 += -w * (x - m) / (s * s) * p / total;
                }
                out
            }
            DistKind::Tabulated(_) => unreachable!("tabulated kinds are handled directly"),
        }
    }

    fn normalizer(&self) -> (f64, f64) {
        let a = self.base(self.lo).0;
        let b = self.base(self.hi).0;
        (a, b - a)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let x = x.clamp(self.lo, self.hi);
        if let DistKind::Tabulated(t) = &self.kind {
            return t.eval(x);
        }
        let (a, z) = self.normalizer();
        ((self.base(x).0 - a) / z).clamp(0.0, 1.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if let DistKind::Tabulated(t) = &self.kind {
            return tabulated_diff(t, x, 1);
        }
        self.base(x).1 / self.normalizer().1
    }

    pub fn pdf_prime(&self, x: f64) -> f64 {
        if let DistKind::Tabulated(t) = &self.kind {
            return tabulated_diff(t, x, 2);
        }
        self.base(x).2 / self.normalizer().1
    }

    /// Leftmost preimage of `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        if let DistKind::Tabulated(t) = &self.kind {
            let g = t.grid();
            let v = t.values();
            let k = v.partition_point(|&c| c < q);
            if k == 0 {
                return g.lo();
            }
            if k >= v.len() {
                return g.hi();
            }
            let (c0, c1) = (v[k - 1], v[k]);
            return g.node(k - 1) + g.h() * (q - c0) / (c1 - c0);
        }
        if q <= 0.0 {
            return self.lo;
        }
        if q >= 1.0 {
            return self.hi;
        }
        let (mut a, mut b) = (self.lo, self.hi);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if self.cdf(m) < q {
                a = m;
            } else {
                b = m;
            }
            if b - a <= 1e-15 * (1.0 + b.abs()) {
                break;
            }
        }
        0.5 * (a + b)
    }

    pub fn mean(&self) -> f64 {
        if self.kind == DistKind::Uniform {
            return 0.5 * (self.lo + self.hi);
        }
        // ∫ x dF = hi - ∫ F
        let n = 4000;
        let h = (self.hi - self.lo) / n as f64;
        let mut s = 0.0;
        for k in 0..n {
            let x0 = self.lo + k as f64 * h;
            let (a, m, b) = (self.cdf(x0), self.cdf(x0 + 0.5 * h), self.cdf(x0 + h));
            s += h * (a + 4.0 * m + b) / 6.0;
        }
        self.hi - s
    }

    /// Virtual value `θ - (1 - F)/f`.
    pub fn virtual_value(&self, x: f64) -> f64 {
        x - (1.0 - self.cdf(x)) / self.pdf(x)
    }

    /// Whether `log f` is concave at `n` sample points.
    pub fn is_log_concave(&self, n: usize) -> bool {
        let h = (self.hi - self.lo) / n as f64;
        let lf: Vec<f64> = (0..=n).map(|k| self.pdf(self.lo + k as f64 * h).ln()).collect();
        lf.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] <= 1e-9)
    }

    /// Whether the virtual value is nondecreasing at `n` sample points.
    pub fn is_regular(&self, n: usize) -> bool {
        let h = (self.hi - self.lo) / n as f64;
        let v: Vec<f64> = (0..n).map(|k| self.virtual_value(self.lo + (k as f64 + 0.5) * h)).collect();
        v.windows(2).all(|w| w[1] >= w[0] - 1e-9)
    }
}

/// Central differences of a tabulated cdf at `x` (first or second order).
fn tabulated_diff(t: &GridFunction, x: f64, order: u8) -> f64 {
    let g = t.grid();
    let h = g.h();
    let d1 = |y: f64| {
        let a = (y - h).max(g.lo());
        let b = (y + h).min(g.hi());
        (t.eval(b) - t.eval(a)) / (b - a)
    };
    match order {
        1 => d1(x),
        _ => {
            let a = (x - h).max(g.lo());
            let b = (x + h).min(g.hi());
            (d1(b) - d1(a)) / (b - a)
        }
    }
}
