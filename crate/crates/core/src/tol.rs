/// Numerical bands used across the crate. Every band is relative to a scale
/// supplied by the caller (usually a sup norm or a total variation).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Membership band for levels, slopes and second differences.
    pub member: f64,
    /// A node is pinned to a boundary when its gap is below `level * (1 + |ū - u̲|∞)`.
    pub level: f64,
    /// Slope comparisons, relative to `1 + |s_lo| + |s_hi|`.
    pub slope: f64,
    /// Upper boundary second differences must stay below `smooth_cap * h`.
    pub smooth_cap: f64,
    /// Convex-order predicates, relative to `1 + total variation`.
    pub order: f64,
    /// Objective agreement with the LP oracle, relative to `1 + |objective|`.
    pub lp_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            member: 1e-8,
            level: 1e-7,
            slope: 1e-6,
            smooth_cap: 0.05,
            order: 1e-9,
            lp_gap: 1e-6,
        }
    }
}

impl Tolerances {
    pub fn with_order(mut self, order: f64) -> Self {
        self.order = order;
        self
    }
}
