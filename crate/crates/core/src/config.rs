//! Tolerances, seeds, resolutions and configured ceilings.
//!
//! Every constant that the theory leaves nonconstructive is an explicit knob
//! here; defaults are documented inline and can be overridden from a TOML or
//! JSON file.

use crate::complex::MetricComplex;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed for every random stream.
    pub seed: u64,
    /// Tiny-ball radius; None means 0.1 times the shortest edge, capped at 1.
    pub r0: Option<f64>,
    pub geodesic: GeodesicConfig,
    pub link: LinkConfig,
    pub measure: MeasureConfig,
    pub ceilings: Ceilings,
    /// Upper bound for delta in regular-set tests; None means 1 / (50 n^2).
    pub delta0: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GeodesicConfig {
    /// Multiplicative accuracy target for distances.
    pub eta: f64,
    /// Local-geodesic certificate: largest allowed deviation of a turn from pi.
    pub angle_tol: f64,
    /// Net spacing as a fraction of r0.
    pub net_fraction: f64,
    /// Halvings of the net spacing tried when a certificate fails.
    pub max_refinements: usize,
    /// Candidate corridors straightened per query.
    pub corridors: usize,
    /// Gauss-Seidel sweeps per straightening round.
    pub max_sweeps: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    /// Angular resolution of sampled links and of candidate searches.
    pub angular_resolution: f64,
    /// Step of the delta grid in suspension-proximity searches.
    pub delta_grid: f64,
    /// Slack used for strict inequalities.
    pub strict_slack: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    /// Target relative standard error of Monte Carlo ball volumes.
    pub mc_target_error: f64,
    /// Hard cap on Monte Carlo samples per simplex.
    pub mc_max_samples: usize,
}

/// Configured ceilings asserted by the tests (the theory proves existence only).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Ceilings {
    /// Bound on delta-bad sets.
    pub c0: usize,
    /// Bound on points of the exceptional set per fiber.
    pub c1: usize,
    /// Doubling capacity of tiny balls.
    pub capacity: usize,
    /// Largest k for which strained points may exist.
    pub k0: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: 0x6cba,
            r0: None,
            geodesic: GeodesicConfig::default(),
            link: LinkConfig::default(),
            measure: MeasureConfig::default(),
            ceilings: Ceilings::default(),
            delta0: None,
        }
    }
}

impl Default for GeodesicConfig {
    fn default() -> Self {
        GeodesicConfig {
            eta: 1e-3,
            angle_tol: 1e-6,
            net_fraction: 0.5,
            max_refinements: 2,
            corridors: 4,
            max_sweeps: 4000,
        }
    }
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            angular_resolution: PI / 180.0,
            delta_grid: 1e-3,
            strict_slack: 1e-9,
        }
    }
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig {
            mc_target_error: 0.005,
            mc_max_samples: 4_000_000,
        }
    }
}

impl Default for Ceilings {
    fn default() -> Self {
        Ceilings {
            c0: 64,
            c1: 64,
            capacity: 64,
            k0: 8,
        }
    }
}

impl Config {
    pub fn r0(&self, c: &MetricComplex) -> f64 {
        self.r0.unwrap_or_else(|| (0.1 * c.min_edge()).min(1.0))
    }

    pub fn net_spacing(&self, c: &MetricComplex) -> f64 {
        self.geodesic.net_fraction * self.r0(c)
    }

    pub fn delta0(&self, c: &MetricComplex) -> f64 {
        self.delta0.unwrap_or_else(|| {
            let n = c.max_dim().max(1) as f64;
            1.0 / (50.0 * n * n)
        })
    }

}
