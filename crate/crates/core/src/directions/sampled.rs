//! Sampled links for points whose star has dimension at least 3.
//!
//! Directions are taken from x towards sample points of every face whose
//! closure contains x. Directions towards the same sample point through the
//! same sheet of a face are one node, which stitches the sites together.
//! Nodes in a common site are joined when their angle is small.

use super::{LinkKind, LinkNode, LinkSpace};
use crate::complex::{ComplexPoint, MetricComplex};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::f64::consts::PI;

const NODE_CAP: usize = 900;

pub(super) fn sampled_link(c: &MetricComplex, x: &ComplexPoint, resolution: f64) -> LinkSpace {
    let sites = c.sites(x);
    // (face class, x's position inside the face) -> sheets
    let mut sheets: Vec<(usize, Vec<i64>)> = Vec::new();
    let mut sheet_real: Vec<Vec<(usize, usize)>> = Vec::new(); // (site index, node id)
    for (si, site) in sites.iter().enumerate() {
        let smask = site.mask();
        let dim = c.simplex(site.simplex).dim;
        for mask in 1..=crate::complex::full_mask(dim) {
            if mask & smask != smask || mask.count_ones() < 2 {
                continue;
            }
            let nid = c.node_id(site.simplex, mask);
            let node = c.node(nid);
            let key_pos: Vec<i64> = node.slots.iter().map(|&s| (site.bary[s] * 1e9).round() as i64).collect();
            let key = (node.class, key_pos);
            let idx = match sheets.iter().position(|k| *k == key) {
                Some(i) => i,
                None => {
                    sheets.push(key);
                    sheet_real.push(Vec::new());
                    sheets.len() - 1
                }
            };
            sheet_real[idx].push((si, nid));
        }
    }
    let per_dim_budget = |m: usize| -> usize {
        if m == 0 {
            1
        } else {
            ((PI / resolution).powi(m as i32).ceil() as usize).clamp(8, NODE_CAP / sheets.len().max(1) + 8)
        }
    };
    let mut nodes: Vec<LinkNode> = Vec::new();
    let mut per_site: HashMap<usize, Vec<(usize, DVector<f64>)>> = HashMap::new();
    let mut spacing: f64 = resolution;
    for (k, (class, _)) in sheets.iter().enumerate() {
        let g = c.face_class(*class).dim;
        let m = g - 1;
        let count = per_dim_budget(m);
        if m > 0 {
            spacing = spacing.max((PI.powi(m as i32) / count as f64).powf(1.0 / m as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ (*class as u64) << 8 ^ k as u64);
        for _ in 0..count {
            // uniform point of the face in representative coordinates
            let mut w: Vec<f64> = (0..=g).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|v| *v /= s);
            let id = nodes.len();
            let mut dirs = Vec::new();
            for &(si, nid) in &sheet_real[k] {
                let site = &sites[si];
                let node = c.node(nid);
                let sh = c.simplex(site.simplex);
                let mut bary = vec![0.0; sh.dim + 1];
                for (j, &slot) in node.slots.iter().enumerate() {
                    bary[slot] = w[j];
                }
                let v = sh.position(&bary) - sh.position(&site.bary);
                let n = v.norm();
                if n < 1e-12 {
                    continue;
                }
                let v = v / n;
                per_site.entry(si).or_default().push((id, v.clone()));
                dirs.push((site.clone(), v));
            }
            nodes.push(LinkNode { dirs });
        }
    }
    let thresh = 2.5 * spacing;
    let mut arcs = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
    let mut keys: Vec<usize> = per_site.keys().cloned().collect();
    keys.sort_unstable();
    for si in keys {
        let list = &per_site[&si];
        for i in 0..list.len() {
            for j in (i + 1)..list.len() {
                let (a, b) = (list[i].0, list[j].0);
                if a == b {
                    continue;
                }
                let ang = list[i].1.dot(&list[j].1).clamp(-1.0, 1.0).acos();
                if ang <= thresh {
                    let key = (a.min(b), a.max(b));
                    match seen.get(&key) {
                        Some(&ai) => {
                            let arc: &mut super::LinkArc = &mut arcs[ai];
                            arc.len = arc.len.min(ang.max(1e-12));
                        }
                        None => {
                            seen.insert(key, arcs.len());
                            arcs.push(super::LinkArc {
                                a: key.0,
                                b: key.1,
                                len: ang.max(1e-12),
                                geom: None,
                            });
                        }
                    }
                }
            }
        }
    }
    let dim = c.dimension_of_star(x).saturating_sub(1);
    LinkSpace::assemble(Some(x.clone()), LinkKind::SampledNet, nodes, arcs, dim, spacing)
}
