//! Stability of the canonical measure along declared families.

use super::{gh_upper, sample_net, tangent_convergence, FiniteMetricSpace};
use crate::complex::{ComplexError, ComplexPoint, MetricComplex};
use crate::config::Config;
use crate::geodesics::{Geodesics, Region};
use crate::stratification::{canonical_measure, cone_unit_ball_mass};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// A member: a complex with its metric multiplied by `scale`, restricted to
/// a region given in the unscaled metric.
#[derive(Clone, Debug)]
pub struct FamilyMember {
    pub complex: MetricComplex,
    pub scale: f64,
    pub region: Region,
}

/// The declared limit of a family.
#[derive(Clone, Debug)]
pub enum FamilyLimit {
    /// A complex restricted to a region.
    Complex { complex: MetricComplex, region: Region },
    /// The unit ball of the tangent cone at a point.
    TangentCone { complex: MetricComplex, point: ComplexPoint },
}

#[derive(Clone, Debug, Serialize)]
pub struct MemberMasses {
    pub scale: f64,
    /// mu^k of the scaled region.
    pub masses: Vec<f64>,
    pub std_error: Vec<f64>,
    /// GH upper bound to the limit.
    pub gh_to_limit: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub members: Vec<MemberMasses>,
    pub limit_masses: Vec<f64>,
    /// GH bounds to the limit never grow by more than 20% and end no
    /// higher than they start (both up to 1e-6).
    pub gh_certified: bool,
    /// |mu^k(last member) - mu^k(limit)| per k.
    pub final_gap: Vec<f64>,
}

fn same_combinatorics(a: &MetricComplex, b: &MetricComplex) -> bool {
    let (fa, fb) = (a.to_file(), b.to_file());
    fa.gluings == fb.gluings && fa.simplices.iter().map(|s| s.dim).eq(fb.simplices.iter().map(|s| s.dim))
}

const GH_NET_BUDGET: usize = 200;

fn gh_member_limit(cfg: &Config, m: &FamilyMember, limit: &FamilyLimit) -> f64 {
    let gm = Geodesics::new(&m.complex, cfg);
    match limit {
        FamilyLimit::TangentCone { .. } => match &m.region {
            Region::Ball { center, radius } => tangent_convergence(&gm, center, &[*radius], 0.25)
                .map(|t| {
                    // the rescaled ball (1/r) B_r is compared; other scales shift the bound
                    t.rows[0].gh_upper + (m.scale * radius - 1.0).abs()
                })
                .unwrap_or(f64::INFINITY),
            Region::Whole => f64::INFINITY,
        },
        FamilyLimit::Complex { complex, region } => {
            let gl = Geodesics::new(complex, cfg);
            let eps = 0.25 * complex.min_edge();
            let Ok(ln) = sample_net(&gl, region, eps, GH_NET_BUDGET) else { return f64::INFINITY };
            if same_combinatorics(complex, &m.complex) && matches!(region, Region::Whole) && matches!(m.region, Region::Whole) {
                // shared coordinates: the same face and barycentric point in both
                let n = ln.points.len();
                let ms = FiniteMetricSpace::from_fn(n, |i, j| m.scale * gm.d(&ln.points[i], &ln.points[j]));
                let id: Vec<usize> = (0..n).collect();
                gh_upper(&ln.space, &ms, Some((&id, &id)), cfg.seed)
            } else {
                let Ok(mn) = sample_net(&gm, &m.region, eps / m.scale, GH_NET_BUDGET) else { return f64::INFINITY };
                let n = mn.points.len();
                let ms = FiniteMetricSpace::from_fn(n, |i, j| m.scale * mn.space.d[i][j]);
                gh_upper(&ln.space, &ms, None, cfg.seed)
            }
        }
    }
}

/// Per-k masses of the members next to those of the limit, with GH bounds
/// certifying the convergence of the family.
pub fn measure_stability(cfg: &Config, members: &[FamilyMember], limit: &FamilyLimit) -> StabilityReport {
    let limit_masses = match limit {
        FamilyLimit::Complex { complex, region } => canonical_measure(&Geodesics::new(complex, cfg), region).masses,
        FamilyLimit::TangentCone { complex, point } => {
            let g = Geodesics::new(complex, cfg);
            let k = complex.dimension_of_star(point);
            let mut v = vec![0.0; complex.max_dim() + 1];
            v[k] = cone_unit_ball_mass(&g, point, k);
            v
        }
    };
    let out: Vec<MemberMasses> = members
        .iter()
        .map(|m| {
            let g = Geodesics::new(&m.complex, cfg);
            let rep = canonical_measure(&g, &m.region);
            let pw = |k: usize| m.scale.powi(k as i32);
            MemberMasses {
                scale: m.scale,
                masses: rep.masses.iter().enumerate().map(|(k, v)| v * pw(k)).collect(),
                std_error: rep.std_error.iter().enumerate().map(|(k, v)| v * pw(k)).collect(),
                gh_to_limit: gh_member_limit(cfg, m, limit),
            }
        })
        .collect();
    let gh: Vec<f64> = out.iter().map(|m| m.gh_to_limit).collect();
    let gh_certified = !gh.is_empty()
        && gh.iter().all(|v| v.is_finite())
        && gh.windows(2).all(|w| w[1] <= 1.2 * w[0] + 1e-6)
        && gh[gh.len() - 1] <= gh[0] + 1e-6;
    let final_gap = match out.last() {
        Some(last) => (0..limit_masses.len().max(last.masses.len()))
            .map(|k| (last.masses.get(k).copied().unwrap_or(0.0) - limit_masses.get(k).copied().unwrap_or(0.0)).abs())
            .collect(),
        None => Vec::new(),
    };
    StabilityReport {
        members: out,
        limit_masses,
        gh_certified,
        final_gap,
    }
}

/// A point given by a simplex index and barycentric coordinates.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub simplex: usize,
    pub bary: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Whole,
    Ball { center: PointSpec, radius: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberSpec {
    /// Complex file, relative to the manifest.
    pub complex: PathBuf,
    #[serde(default = "one")]
    pub scale: f64,
    pub region: RegionSpec,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LimitSpec {
    Complex { complex: PathBuf, region: RegionSpec },
    TangentCone { complex: PathBuf, point: PointSpec },
}

/// Family manifest: members with tracked regions and a declared limit.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyManifest {
    pub schema_version: u32,
    pub members: Vec<MemberSpec>,
    pub limit: LimitSpec,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("invalid manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error("point outside simplex range: {0}")]
    Point(usize),
}

fn point(c: &MetricComplex, p: &PointSpec) -> Result<ComplexPoint, ManifestError> {
    if p.simplex >= c.num_simplices() || p.bary.len() != c.simplex(p.simplex).dim + 1 {
        return Err(ManifestError::Point(p.simplex));
    }
    Ok(c.point_in(p.simplex, &p.bary))
}

fn region(c: &MetricComplex, r: &RegionSpec) -> Result<Region, ManifestError> {
    Ok(match r {
        RegionSpec::Whole => Region::Whole,
        RegionSpec::Ball { center, radius } => Region::Ball {
            center: point(c, center)?,
            radius: *radius,
        },
    })
}

impl FamilyManifest {
    pub fn load(path: &Path) -> Result<(Vec<FamilyMember>, FamilyLimit), ManifestError> {
        let text = std::fs::read_to_string(path).map_err(|e| ManifestError::Io(path.to_path_buf(), e))?;
        let m: FamilyManifest = serde_json::from_str(&text)?;
        if m.schema_version != 1 {
            return Err(ManifestError::Schema(m.schema_version));
        }
        let base = path.parent().unwrap_or(Path::new("."));
        let members = m
            .members
            .iter()
            .map(|s| {
                let complex = MetricComplex::load(base.join(&s.complex))?;
                let region = region(&complex, &s.region)?;
                Ok(FamilyMember {
                    complex,
                    scale: s.scale,
                    region,
                })
            })
            .collect::<Result<Vec<_>, ManifestError>>()?;
        let limit = match &m.limit {
            LimitSpec::Complex { complex, region: r } => {
                let complex = MetricComplex::load(base.join(complex))?;
                let region = region(&complex, r)?;
                FamilyLimit::Complex { complex, region }
            }
            LimitSpec::TangentCone { complex, point: p } => {
                let complex = MetricComplex::load(base.join(complex))?;
                let point = point(&complex, p)?;
                FamilyLimit::TangentCone { complex, point }
            }
        };
        Ok((members, limit))
    }
}
