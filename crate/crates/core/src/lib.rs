//! Strainers, stratification, retraction flows and charts on finite
//! piecewise-Euclidean complexes with nonpositive curvature bound.

pub mod complex;
pub mod corpus;
pub mod directions;
pub mod json;
pub mod util;
pub mod config;
pub mod geodesics;
pub mod strainers;
pub mod flows;
pub mod convergence;
pub mod stratification;
pub mod charts;
