use std::fmt::Write as _;

use crate::regression::least_squares_slope;

/// Parameters recorded next to a check so it can be rerun.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CheckConfig {
    pub n: usize,
    pub p: usize,
    pub eta: Option<f64>,
    pub gamma: Option<f64>,
    pub theta: Option<f64>,
    pub seed: u64,
}

/// A named inequality `lhs ≤ rhs + tolerance`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tolerance: f64,
    pub holds: bool,
    pub config: CheckConfig,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64, config: CheckConfig) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin: rhs - lhs,
            tolerance,
            holds: lhs <= rhs + tolerance,
            config,
        }
    }

    /// `lhs ≤ (1 + slack)·rhs`.
    pub fn with_relative_slack(name: impl Into<String>, lhs: f64, rhs: f64, slack: f64, config: CheckConfig) -> Self {
        Self::new(name, lhs, rhs, slack * rhs.abs(), config)
    }
}

pub const REPORT_HEADER: &str = "name,lhs,rhs,margin,holds,n,p,eta,gamma,theta,seed";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

/// Reports as CSV under [`REPORT_HEADER`]. Floats use the shortest
/// round-trip representation, so equal runs give equal bytes.
pub fn reports_to_csv(reports: &[CheckReport]) -> String {
    let mut out = String::from(REPORT_HEADER);
    out.push('\n');
    for r in reports {
        let c = &r.config;
        let _ = writeln!(
            out,
            "{},{:e},{:e},{:e},{},{},{},{},{},{},{}",
            r.name,
            r.lhs,
            r.rhs,
            r.margin,
            r.holds,
            c.n,
            c.p,
            opt(c.eta),
            opt(c.gamma),
            opt(c.theta),
            c.seed
        );
    }
    out
}

/// Mean of some positive quantity along an increasing grid of sample
/// sizes, with its log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub n_grid: Vec<usize>,
    pub values: Vec<f64>,
    pub fitted_slope: f64,
    pub target_slope: f64,
    pub band: (f64, f64),
}

impl RateEstimate {
    /// Fits `log values` against `log n`.
    pub fn fit(n_grid: Vec<usize>, values: Vec<f64>, target_slope: f64, half_width: f64) -> Self {
        let xs: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
        let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        Self {
            fitted_slope: least_squares_slope(&xs, &ys),
            n_grid,
            values,
            target_slope,
            band: (target_slope - half_width, target_slope + half_width),
        }
    }

    pub fn within_band(&self) -> bool {
        self.band.0 <= self.fitted_slope && self.fitted_slope <= self.band.1
    }

    /// `values` strictly decreasing along the grid.
    pub fn strictly_decreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] < w[0])
    }

    /// `|slope − target|` against the half-width of the band.
    pub fn to_report(&self, name: impl Into<String>, config: CheckConfig) -> CheckReport {
        let half = 0.5 * (self.band.1 - self.band.0);
        CheckReport::new(name, (self.fitted_slope - self.target_slope).abs(), half, 0.0, config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn holds_uses_tolerance() {
        let c = CheckConfig::default();
        assert!(CheckReport::new("a", 1.0, 1.0, 0.0, c).holds);
        assert!(!CheckReport::new("a", 1.01, 1.0, 0.0, c).holds);
        assert!(CheckReport::with_relative_slack("a", 1.04, 1.0, 0.05, c).holds);
        assert_eq!(CheckReport::new("a", 0.25, 1.0, 0.0, c).margin, 0.75);
    }

    #[test]
    fn slope_is_scale_invariant() {
        let grid = vec![64, 128, 256, 512, 1024];
        let values: Vec<f64> = grid.iter().map(|&n| 3.0 * (n as f64).powf(-0.5) * (1.0 + 0.01 * (n % 7) as f64)).collect();
        let a = RateEstimate::fit(grid.clone(), values.clone(), -0.5, 0.15);
        let b = RateEstimate::fit(grid, values.iter().map(|v| v * 1e6).collect(), -0.5, 0.15);
        assert!((a.fitted_slope - b.fitted_slope).abs() < 1e-12);
        assert!(a.within_band());
    }

    #[test]
    fn csv_layout() {
        let cfg = CheckConfig {
            n: 10,
            p: 5,
            eta: Some(1.0),
            gamma: None,
            theta: None,
            seed: 3,
        };
        let csv = reports_to_csv(&[CheckReport::new("x", 0.5, 1.0, 0.0, cfg)]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], REPORT_HEADER);
        assert_eq!(lines[1], "x,5e-1,1e0,5e-1,true,10,5,1,,,3");
    }
}
