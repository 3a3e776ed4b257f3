//! Lattice paths, their transport through the sweep transformations, and
//! certified upper bounds on the path metric
//! `d(G, P) = inf sup_t |G'_t - P'_t|`.
//!
//! Transport keeps a piecewise-affine witness parametrized on the *original*
//! path's time scale. Successive transports re-anchor their events at the
//! recorded vertex times, so the distance between any two stages is bounded
//! by evaluating both polylines on the union of their breakpoints; the bound
//! is exact for that particular matching and therefore an upper bound on the
//! reparametrization infimum. Prop-2.4-style bounds (1/2 for triangle ops,
//! 1 for star ops and composites) are checked against these witnesses.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::lattice::MixedLattice;
use crate::params::Configuration;
use crate::rng::{self, domain};
use crate::transform::{StepPlan, SweepOp};

/// A lattice path: a vertex sequence in a particular lattice, consecutive
/// entries equal or adjacent. Repetitions are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePath {
    pub vertices: Vec<u32>,
}

impl LatticePath {
    pub fn new(vertices: Vec<u32>) -> LatticePath {
        LatticePath { vertices }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn validate(&self, lattice: &MixedLattice) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(Error::InvalidPath("empty path".into()));
        }
        for &v in &self.vertices {
            if v as usize >= lattice.vertex_count() {
                return Err(Error::InvalidPath(format!("vertex index {v} out of range")));
            }
        }
        for pair in self.vertices.windows(2) {
            if pair[0] != pair[1] && lattice.edge_between(pair[0], pair[1]).is_none() {
                return Err(Error::InvalidPath(format!(
                    "vertices {} and {} are not adjacent",
                    lattice.vertex_id(pair[0]),
                    lattice.vertex_id(pair[1])
                )));
            }
        }
        Ok(())
    }

    /// Collapse consecutive repeated vertices.
    pub fn dedup(&self) -> LatticePath {
        let mut out = Vec::with_capacity(self.vertices.len());
        for &v in &self.vertices {
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        LatticePath::new(out)
    }

    pub fn min_y(&self, lattice: &MixedLattice) -> f64 {
        self.vertices
            .iter()
            .map(|&v| lattice.position(v).y)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Openness of a path: the conjunction over traversed edges. A single-vertex
/// path traverses no edges and is open.
pub fn is_open(path: &LatticePath, lattice: &MixedLattice, config: &Configuration) -> Result<bool> {
    path.validate(lattice)?;
    for pair in path.vertices.windows(2) {
        if pair[0] == pair[1] {
            continue;
        }
        let e = lattice.edge_between(pair[0], pair[1]).unwrap();
        if !config.get(e) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Piecewise-affine curve with strictly increasing breakpoint times.
#[derive(Debug, Clone)]
pub struct Polyline {
    pub ts: Vec<f64>,
    pub points: Vec<Point>,
}

impl Polyline {
    pub fn eval(&self, t: f64) -> Point {
        let n = self.ts.len();
        if t <= self.ts[0] {
            return self.points[0];
        }
        if t >= self.ts[n - 1] {
            return self.points[n - 1];
        }
        let mut lo = 0usize;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.ts[mid] <= t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let span = self.ts[hi] - self.ts[lo];
        if span <= 0.0 {
            return self.points[hi];
        }
        self.points[lo].lerp(&self.points[hi], (t - self.ts[lo]) / span)
    }
}

/// Two stages of one path under a shared parametrization; certifies an
/// upper bound on the path distance between them.
#[derive(Debug, Clone)]
pub struct PathPair {
    pub before: Polyline,
    pub after: Polyline,
}

/// Certified upper bound on `d(before, after)`: the exact supremum of the
/// pointwise distance for this matched parametrization.
pub fn path_distance_upper(pair: &PathPair) -> f64 {
    let mut bound: f64 = 0.0;
    for &t in pair.before.ts.iter().chain(pair.after.ts.iter()) {
        bound = bound.max(pair.before.eval(t).dist(&pair.after.eval(t)));
    }
    bound
}

/// A path staged for transport: the current vertex sequence, its witness
/// polyline on the original time scale, and the witness time of each vertex.
#[derive(Debug, Clone)]
pub struct StagedPath {
    pub path: LatticePath,
    pub polyline: Polyline,
    pub vertex_ts: Vec<f64>,
}

impl StagedPath {
    /// Stage a path on its own index scale (after collapsing stationary
    /// repeats, which does not change the underlying curve).
    pub fn from_path(lattice: &MixedLattice, path: &LatticePath) -> Result<StagedPath> {
        path.validate(lattice)?;
        let dedup = path.dedup();
        let ts: Vec<f64> = (0..dedup.len()).map(|i| i as f64).collect();
        let points: Vec<Point> = dedup
            .vertices
            .iter()
            .map(|&v| lattice.position(v))
            .collect();
        Ok(StagedPath {
            path: dedup,
            polyline: Polyline {
                ts: ts.clone(),
                points,
            },
            vertex_ts: ts,
        })
    }
}

/// Transport a staged path through one transformation step. Returns the new
/// stage and the witness pair against the input stage.
pub fn transport_path(
    step: &StepPlan,
    img_config: &Configuration,
    staged: &StagedPath,
) -> Result<(StagedPath, PathPair)> {
    match step.op {
        SweepOp::TUp | SweepOp::TDown => transport_t(step, img_config, staged),
        SweepOp::SUp | SweepOp::SDown => transport_s(step, img_config, staged),
    }
}

/// Triangle-op transport: square-part edges are kept, each triangular edge
/// is replaced by the open two-segment route through its star centre.
pub fn transport_t(
    step: &StepPlan,
    img_config: &Configuration,
    staged: &StagedPath,
) -> Result<(StagedPath, PathPair)> {
    let src = step.src_lattice();
    let img = step.img_lattice();
    let verts = &staged.path.vertices;
    let mut out_vertices = Vec::with_capacity(verts.len() * 2);
    let mut out_ts = Vec::with_capacity(verts.len() * 2);
    let mut breaks_t = Vec::new();
    let mut breaks_p = Vec::new();

    let map_vertex = |v: u32| -> Result<u32> {
        let id = step.image_id(src.vertex_id(v));
        img.vertex_index(&id)
            .ok_or_else(|| Error::InvalidPath(format!("vertex {id} has no image")))
    };

    for n in 0..verts.len() {
        let t = staged.vertex_ts[n];
        let iv = map_vertex(verts[n])?;
        out_vertices.push(iv);
        out_ts.push(t);
        breaks_t.push(t);
        breaks_p.push(img.position(iv));
        if n + 1 < verts.len() {
            let (a, b) = (verts[n], verts[n + 1]);
            let e = src
                .edge_between(a, b)
                .ok_or_else(|| Error::InvalidPath("non-adjacent step".into()))?;
            if let Some(cell) = step.cell_of_src_edge(e) {
                let center = cell.center_img.expect("triangle ops create centres");
                // the two arms of the route are open whenever the source
                // edge was open, by the kernel's connection preservation
                let t_mid = 0.5 * (t + staged.vertex_ts[n + 1]);
                out_vertices.push(center);
                out_ts.push(t_mid);
                breaks_t.push(t_mid);
                breaks_p.push(img.position(center));
            } else if img.edge_between(map_vertex(a)?, map_vertex(b)?).is_none() {
                return Err(Error::InvalidPath(
                    "path uses a boundary edge outside the transformed region".into(),
                ));
            }
        }
    }

    let after = Polyline {
        ts: breaks_t,
        points: breaks_p,
    };
    let pair = PathPair {
        before: staged.polyline.clone(),
        after: after.clone(),
    };
    let out = StagedPath {
        path: LatticePath::new(out_vertices),
        polyline: after,
        vertex_ts: out_ts,
    };
    debug_assert!(is_open(&out.path, img, img_config).unwrap_or(false));
    let _ = img_config;
    Ok((out, pair))
}

/// Star-op transport: implements the endpoint contractions, the backtrack
/// contraction, the pass-through over an open base edge, and the detour via
/// the third exterior vertex when the base is closed (whose two edges are
/// necessarily open in the image).
pub fn transport_s(
    step: &StepPlan,
    img_config: &Configuration,
    staged: &StagedPath,
) -> Result<(StagedPath, PathPair)> {
    let src = step.src_lattice();
    let img = step.img_lattice();
    let verts = &staged.path.vertices;
    let last = verts.len() - 1;

    let mut out_vertices: Vec<u32> = Vec::with_capacity(verts.len());
    let mut out_ts: Vec<f64> = Vec::with_capacity(verts.len());
    let mut breaks_t = Vec::new();
    let mut breaks_p = Vec::new();

    let map_vertex = |v: u32| -> Result<u32> {
        let id = step.image_id(src.vertex_id(v));
        img.vertex_index(&id)
            .ok_or_else(|| Error::InvalidPath(format!("vertex {id} has no image")))
    };
    let push = |vlist: &mut Vec<u32>, tlist: &mut Vec<f64>, v: u32, t: f64| {
        if vlist.last() != Some(&v) {
            vlist.push(v);
            tlist.push(t);
        }
    };

    for n in 0..verts.len() {
        let t = staged.vertex_ts[n];
        let v = verts[n];
        let Some(cell) = step.cell_of_center(v) else {
            let iv = map_vertex(v)?;
            push(&mut out_vertices, &mut out_ts, iv, t);
            breaks_t.push(t);
            breaks_p.push(img.position(iv));
            continue;
        };
        // v is the centre of a transformed star and disappears
        if verts.len() == 1 {
            return Err(Error::InvalidPath(
                "single-vertex path at a transformed star centre".into(),
            ));
        }
        if n == 0 {
            let iv = map_vertex(verts[1])?;
            breaks_t.push(t);
            breaks_p.push(img.position(iv));
            continue;
        }
        if n == last {
            let iv = map_vertex(verts[n - 1])?;
            breaks_t.push(t);
            breaks_p.push(img.position(iv));
            continue;
        }
        let prev = verts[n - 1];
        let next = verts[n + 1];
        if prev == next {
            // backtrack through the centre contracts to the exterior vertex
            let iv = map_vertex(prev)?;
            breaks_t.push(t);
            breaks_p.push(img.position(iv));
            continue;
        }
        let label_of = |x: u32| -> Result<usize> {
            cell.ext_src
                .iter()
                .position(|&s| s == x)
                .ok_or_else(|| Error::InvariantViolation("path neighbour not an exterior".into()))
        };
        let i_prev = label_of(prev)?;
        let i_next = label_of(next)?;
        let i_third = 3 - i_prev - i_next;
        let base = cell.img_edges[i_third];
        if img_config.get(base) {
            // pass through: drop the centre, the base edge carries the path
            let a = img.position(cell.ext_img[i_prev]);
            let b = img.position(cell.ext_img[i_next]);
            breaks_t.push(t);
            breaks_p.push(a.lerp(&b, 0.5));
        } else {
            // detour via the third exterior vertex
            let e1 = cell.img_edges[i_next]; // joins prev and third
            let e2 = cell.img_edges[i_prev]; // joins third and next
            if !img_config.get(e1) || !img_config.get(e2) {
                return Err(Error::InvariantViolation(
                    "detour edges must be open when the base is closed".into(),
                ));
            }
            let third = cell.ext_img[i_third];
            push(&mut out_vertices, &mut out_ts, third, t);
            breaks_t.push(t);
            breaks_p.push(img.position(third));
        }
    }

    let after = Polyline {
        ts: breaks_t,
        points: breaks_p,
    };
    let pair = PathPair {
        before: staged.polyline.clone(),
        after: after.clone(),
    };
    let out = StagedPath {
        path: LatticePath::new(out_vertices),
        polyline: after,
        vertex_ts: out_ts,
    };
    Ok((out, pair))
}

/// Witness pair between two arbitrary stages of the same path (for
/// composite bounds).
pub fn stage_pair(a: &StagedPath, b: &StagedPath) -> PathPair {
    PathPair {
        before: a.polyline.clone(),
        after: b.polyline.clone(),
    }
}

/// A random open path: start at a seeded vertex with at least one open
/// incident edge and take `steps` edge moves along open edges (repeats
/// allowed). Returns a single-vertex path when the start has no open edge.
pub fn random_open_path(
    lattice: &MixedLattice,
    config: &Configuration,
    seed: u64,
    stream: u64,
    steps: usize,
) -> LatticePath {
    let n = lattice.vertex_count() as u64;
    let start0 = rng::hash_words(&[domain::PATH_WALK, seed, stream, 0]) % n;
    let mut start = start0;
    for probe in 0..n {
        let cand = ((start0 + probe) % n) as u32;
        if lattice.neighbors(cand).iter().any(|&(e, _)| config.get(e)) {
            start = cand as u64;
            break;
        }
    }
    let mut vertices = vec![start as u32];
    let mut current = start as u32;
    for s in 0..steps {
        let open: Vec<(u32, u32)> = lattice
            .neighbors(current)
            .iter()
            .copied()
            .filter(|&(e, _)| config.get(e))
            .collect();
        if open.is_empty() {
            break;
        }
        let pick =
            rng::hash_words(&[domain::PATH_WALK, seed, stream, 1 + s as u64]) % open.len() as u64;
        current = open[pick as usize].1;
        vertices.push(current);
    }
    LatticePath::new(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Rect;
    use crate::lattice::{build_lattice, LatticeKind};
    use crate::params::{assign_params, sample_configuration, ParamSpec, Triplet};
    use crate::transform::{transform_chain, transform_once, SweepOp};
    use std::sync::Arc;

    fn mixed_patch() -> Arc<crate::lattice::MixedLattice> {
        Arc::new(
            build_lattice(
                LatticeKind::MixedTriangular,
                Rect::new(-12.0, 12.0, -4.0, 10.0),
                Some(2),
            )
            .unwrap(),
        )
    }

    fn sd_triplet() -> Triplet {
        Triplet::symmetric_self_dual(0.5).unwrap()
    }

    #[test]
    fn is_open_single_vertex_and_closed_edge() {
        let lat = mixed_patch();
        let params = assign_params(&lat, &ParamSpec::Triplet(sd_triplet())).unwrap();
        let config = sample_configuration(&lat, &params, 3, 0);
        let path = LatticePath::new(vec![0]);
        assert!(is_open(&path, &lat, &config).unwrap());

        let all_closed = Configuration::all_closed(lat.edge_count());
        let rec = lat.edge(0);
        let path = LatticePath::new(vec![rec.a, rec.b]);
        assert!(!is_open(&path, &lat, &all_closed).unwrap());
        let all_open = Configuration::all_open(lat.edge_count());
        assert!(is_open(&path, &lat, &all_open).unwrap());
    }

    #[test]
    fn random_path_openness_matches_brute_scan() {
        let lat = mixed_patch();
        let params = assign_params(&lat, &ParamSpec::Triplet(sd_triplet())).unwrap();
        for trial in 0..200u64 {
            let config = sample_configuration(&lat, &params, 11, trial);
            let path = random_open_path(&lat, &config, 11, trial, 25);
            // independent scan over traversed edges
            let mut open = true;
            for pair in path.vertices.windows(2) {
                if pair[0] == pair[1] {
                    continue;
                }
                let e = lat.edge_between(pair[0], pair[1]).unwrap();
                open &= config.get(e);
            }
            assert!(open, "generator only walks open edges");
            assert_eq!(is_open(&path, &lat, &config).unwrap(), open);
        }
    }

    #[test]
    fn square_part_path_is_fixed_by_t() {
        let lat = mixed_patch();
        let params = assign_params(&lat, &ParamSpec::Triplet(sd_triplet())).unwrap();
        let config = Configuration::all_open(lat.edge_count());
        // a path along the bottom square row
        let ids: Vec<u32> = (-2..3)
            .map(|i| {
                lat.vertex_index(&crate::lattice::VertexId::node(2 * i, -2))
                    .unwrap()
            })
            .collect();
        let path = LatticePath::new(ids);
        let staged = StagedPath::from_path(&lat, &path).unwrap();
        let out = transform_once(lat.clone(), &params, &config, SweepOp::TUp, 9, 0).unwrap();
        let (moved, pair) = transport_t(&out.plan, &out.config, &staged).unwrap();
        assert_eq!(moved.path.len(), path.len());
        assert_eq!(path_distance_upper(&pair), 0.0);
    }

    #[test]
    fn single_triangle_edge_routes_through_centre() {
        let lat = mixed_patch();
        let params = assign_params(&lat, &ParamSpec::Triplet(sd_triplet())).unwrap();
        let config = Configuration::all_open(lat.edge_count());
        // one horizontal edge on the interface row (a triangle base)
        let a = lat
            .vertex_index(&crate::lattice::VertexId::node(0, 4))
            .unwrap();
        let b = lat
            .vertex_index(&crate::lattice::VertexId::node(2, 4))
            .unwrap();
        let path = LatticePath::new(vec![a, b]);
        let staged = StagedPath::from_path(&lat, &path).unwrap();
        let out = transform_once(lat.clone(), &params, &config, SweepOp::TUp, 9, 0).unwrap();
        let (moved, pair) = transport_t(&out.plan, &out.config, &staged).unwrap();
        assert_eq!(moved.path.len(), 3, "A - O - B");
        let d = path_distance_upper(&pair);
        assert!(d <= 0.5 + 1e-9, "T drift {d}");
        assert!(is_open(&moved.path, out.plan.img_lattice(), &out.config).unwrap());
    }

    #[test]
    fn transported_paths_stay_open_and_within_bounds() {
        let lat = mixed_patch();
        let params = assign_params(&lat, &ParamSpec::Triplet(sd_triplet())).unwrap();
        let mut checked = 0;
        for trial in 0..300u64 {
            let config = sample_configuration(&lat, &params, 17, trial);
            let path = random_open_path(&lat, &config, 17, trial, 14);
            // keep clear of the boundary so every touched cell is complete
            let interior = path.vertices.iter().all(|&v| {
                let p = lat.position(v);
                p.x.abs() < 8.0 && p.y > -3.0 && p.y < 7.0
            });
            if !interior || path.len() < 2 {
                continue;
            }
            let staged = StagedPath::from_path(&lat, &path).unwrap();
            let t_out =
                transform_once(lat.clone(), &params, &config, SweepOp::TUp, 23 + trial, 0).unwrap();
            let (mid, pair_t) = transport_t(&t_out.plan, &t_out.config, &staged).unwrap();
            assert!(is_open(&mid.path, t_out.plan.img_lattice(), &t_out.config).unwrap());
            assert!(path_distance_upper(&pair_t) <= 0.5 + 1e-9);

            let s_out = transform_chain(&t_out, SweepOp::SDown, 23 + trial, 1).unwrap();
            let (fin, pair_s) = transport_s(&s_out.plan, &s_out.config, &mid).unwrap();
            assert!(is_open(&fin.path, s_out.plan.img_lattice(), &s_out.config).unwrap());
            assert!(path_distance_upper(&pair_s) <= 1.0 + 1e-9);
            let composite = stage_pair(&staged, &fin);
            assert!(path_distance_upper(&composite) <= 1.0 + 1e-9);
            // endpoints move by at most the composite drift
            let a0 = staged.polyline.points[0];
            let a1 = fin.polyline.points[0];
            assert!(a0.dist(&a1) <= 1.0 + 1e-9);
            checked += 1;
        }
        assert!(checked > 50, "exercised {checked} paths");
    }

    #[test]
    fn no_vertices_below_base_line_after_down_composite() {
        let lat = Arc::new(
            build_lattice(
                LatticeKind::MixedTriangular,
                Rect::new(-12.0, 12.0, -4.0, 12.0),
                Some(3),
            )
            .unwrap(),
        );
        let params = assign_params(&lat, &ParamSpec::Triplet(sd_triplet())).unwrap();
        for trial in 0..200u64 {
            let config = sample_configuration(&lat, &params, 31, trial);
            let path = random_open_path(&lat, &config, 31, trial, 12);
            let interior = path.vertices.iter().all(|&v| {
                let p = lat.position(v);
                p.x.abs() < 8.0 && p.y < 9.0
            });
            if !interior || path.len() < 2 || path.min_y(&lat) < 0.0 {
                continue;
            }
            let staged = StagedPath::from_path(&lat, &path).unwrap();
            let t_out =
                transform_once(lat.clone(), &params, &config, SweepOp::TUp, 77 + trial, 0).unwrap();
            let (mid, _) = transport_t(&t_out.plan, &t_out.config, &staged).unwrap();
            let s_out = transform_chain(&t_out, SweepOp::SDown, 77 + trial, 1).unwrap();
            let (fin, _) = transport_s(&s_out.plan, &s_out.config, &mid).unwrap();
            assert!(
                fin.path.min_y(s_out.plan.img_lattice()) >= -1e-9,
                "transported path dipped below the base line"
            );
        }
    }

    /// The three interior star-transport cases, exercised deterministically:
    /// backtrack contraction, pass-through over an open base, and the detour
    /// via the third exterior vertex.
    #[test]
    fn star_transport_cases() {
        let lat = mixed_patch();
        let params = assign_params(&lat, &ParamSpec::Triplet(sd_triplet())).unwrap();
        let mut seen_backtrack = false;
        let mut seen_direct = false;
        let mut seen_detour = false;
        for trial in 0..400u64 {
            let config = sample_configuration(&lat, &params, 41, trial);
            let t_out =
                transform_once(lat.clone(), &params, &config, SweepOp::TUp, 41, trial).unwrap();
            let hex = t_out.plan.img_lattice().clone();
            let s_out = transform_chain(&t_out, SweepOp::SDown, 41, trial).unwrap();
            // pick an interior consumed star with both arms open
            for cell in s_out.plan.cells() {
                let center = cell.center_src.unwrap();
                let pos = hex.position(center);
                if pos.x.abs() > 6.0 || pos.y < 2.0 || pos.y > 6.0 {
                    continue;
                }
                let (a, b) = (cell.ext_src[1], cell.ext_src[2]);
                let s1 = hex.edge_between(center, a).unwrap();
                let s2 = hex.edge_between(center, b).unwrap();
                if !t_out.config.get(s1) || !t_out.config.get(s2) {
                    continue;
                }

                // backtrack A - O - A contracts to A
                if !seen_backtrack {
                    let path = LatticePath::new(vec![a, center, a]);
                    let staged = StagedPath::from_path(&hex, &path).unwrap();
                    let (out, pair) = transport_s(&s_out.plan, &s_out.config, &staged).unwrap();
                    let img_a = s_out
                        .plan
                        .img_lattice()
                        .vertex_index(&s_out.plan.image_id(hex.vertex_id(a)))
                        .unwrap();
                    assert_eq!(out.path.vertices, vec![img_a], "contracts to the exterior");
                    assert!(path_distance_upper(&pair) <= 1.0 + 1e-9);
                    seen_backtrack = true;
                }

                // A - O - B: direct when the base is open, detour otherwise
                let path = LatticePath::new(vec![a, center, b]);
                let staged = StagedPath::from_path(&hex, &path).unwrap();
                let (out, pair) = transport_s(&s_out.plan, &s_out.config, &staged).unwrap();
                assert!(is_open(&out.path, s_out.plan.img_lattice(), &s_out.config).unwrap());
                assert!(path_distance_upper(&pair) <= 1.0 + 1e-9);
                let base = cell.img_edges[0];
                if s_out.config.get(base) {
                    assert_eq!(out.path.len(), 2, "open base carries the path directly");
                    seen_direct = true;
                } else {
                    assert_eq!(out.path.len(), 3, "closed base forces the detour");
                    let third = out.path.vertices[1];
                    assert_eq!(third, cell.ext_img[0], "detour passes the third exterior");
                    seen_detour = true;
                }
            }
            if seen_backtrack && seen_direct && seen_detour {
                break;
            }
        }
        assert!(seen_backtrack && seen_direct && seen_detour);
    }
}
