//! Box-crossing events, Monte Carlo and exhaustive crossing probabilities,
//! and open-cluster statistics.
//!
//! Crossing semantics: open edges are clipped to the box as line segments;
//! the box is crossed when a connected component of the clipped open
//! subgraph touches both opposite sides. Components are tracked with a
//! disjoint-set structure carrying side-contact flags.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{clip_segment, Rect, GEOM_EPS};
use crate::lattice::{MixedLattice, VertexId};
use crate::params::Configuration;
use crate::params::{edge_open, ParamMap};

pub const BRUTE_FORCE_EDGE_CAP: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Horizontal,
    Vertical,
}

impl Direction {
    pub fn name(&self) -> &'static str {
        match self {
            Direction::Horizontal => "horizontal",
            Direction::Vertical => "vertical",
        }
    }
}

/// The box `[-m, m] x [0, n]` translated by `(dx, dy)`; axis-aligned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxSpec {
    pub m: f64,
    pub n: f64,
    pub dx: f64,
    pub dy: f64,
}

impl BoxSpec {
    pub fn centered(m: f64, n: f64) -> BoxSpec {
        BoxSpec {
            m,
            n,
            dx: 0.0,
            dy: 0.0,
        }
    }

    pub fn rect(&self) -> Rect {
        Rect::new(
            -self.m + self.dx,
            self.m + self.dx,
            self.dy,
            self.n + self.dy,
        )
    }
}

impl std::fmt::Display for BoxSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "B({},{})+({},{})", self.m, self.n, self.dx, self.dy)
    }
}

const SIDE_L: u8 = 1;
const SIDE_R: u8 = 2;
const SIDE_B: u8 = 4;
const SIDE_T: u8 = 8;

#[derive(Debug, Clone)]
struct TesterEdge {
    edge: u32,
    a: Option<u32>,
    b: Option<u32>,
    mask: u8,
}

/// Precomputed crossing checker for one (lattice, box, direction).
pub struct CrossingTester {
    edges: Vec<TesterEdge>,
    n_vertices: usize,
    target: u8,
}

impl CrossingTester {
    pub fn new(
        lattice: &MixedLattice,
        box_spec: &BoxSpec,
        direction: Direction,
    ) -> Result<CrossingTester> {
        let rect = box_spec.rect();
        let b = lattice.bounds();
        if rect.x0 < b.x0 - GEOM_EPS
            || rect.x1 > b.x1 + GEOM_EPS
            || rect.y0 < b.y0 - GEOM_EPS
            || rect.y1 > b.y1 + GEOM_EPS
        {
            return Err(Error::BoxOutOfBounds);
        }
        let target = match direction {
            Direction::Horizontal => SIDE_L | SIDE_R,
            Direction::Vertical => SIDE_B | SIDE_T,
        };
        // compact ids for vertices inside the box
        let mut compact = vec![u32::MAX; lattice.vertex_count()];
        let mut n_vertices = 0u32;
        let mut edges = Vec::new();
        for e in 0..lattice.edge_count() as u32 {
            let rec = lattice.edge(e);
            let (pa, pb) = lattice.edge_endpoints(e);
            let Some((t0, t1)) = clip_segment(&pa, &pb, &rect) else {
                continue;
            };
            if (t1 - t0) * pa.dist(&pb) < GEOM_EPS {
                // a point touch carries no connection: any component reaching
                // the box boundary at that point does so through an edge with
                // positive clipped length, which carries the side mask itself
                continue;
            }
            let qa = pa.lerp(&pb, t0);
            let qb = pa.lerp(&pb, t1);
            let mut mask = 0u8;
            for q in [&qa, &qb] {
                if q.x <= rect.x0 + GEOM_EPS {
                    mask |= SIDE_L;
                }
                if q.x >= rect.x1 - GEOM_EPS {
                    mask |= SIDE_R;
                }
                if q.y <= rect.y0 + GEOM_EPS {
                    mask |= SIDE_B;
                }
                if q.y >= rect.y1 - GEOM_EPS {
                    mask |= SIDE_T;
                }
            }
            let mut id_of = |v: u32, inside: bool| {
                if !inside {
                    return None;
                }
                if compact[v as usize] == u32::MAX {
                    compact[v as usize] = n_vertices;
                    n_vertices += 1;
                }
                Some(compact[v as usize])
            };
            let a = id_of(rec.a, rect.contains(&pa));
            let b = id_of(rec.b, rect.contains(&pb));
            if a.is_none() && b.is_none() && mask & target != target {
                // a pass-through sliver that cannot cross on its own
                continue;
            }
            edges.push(TesterEdge {
                edge: e,
                a,
                b,
                mask,
            });
        }
        Ok(CrossingTester {
            edges,
            n_vertices: n_vertices as usize,
            target,
        })
    }

    /// Edge indices the crossing event depends on.
    pub fn relevant_edges(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.edges.iter().map(|t| t.edge).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Evaluate the crossing indicator for edge states given by `open`.
    pub fn check(&self, mut open: impl FnMut(u32) -> bool) -> bool {
        let mut parent: Vec<u32> = (0..self.n_vertices as u32).collect();
        let mut mask: Vec<u8> = vec![0; self.n_vertices];
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                parent[x as usize] = parent[parent[x as usize] as usize];
                x = parent[x as usize];
            }
            x
        }
        for te in &self.edges {
            if !open(te.edge) {
                continue;
            }
            match (te.a, te.b) {
                (Some(a), Some(b)) => {
                    let ra = find(&mut parent, a);
                    let rb = find(&mut parent, b);
                    if ra != rb {
                        parent[rb as usize] = ra;
                        mask[ra as usize] |= mask[rb as usize];
                    }
                    mask[ra as usize] |= te.mask;
                    if mask[ra as usize] & self.target == self.target {
                        return true;
                    }
                }
                (Some(a), None) | (None, Some(a)) => {
                    let ra = find(&mut parent, a);
                    mask[ra as usize] |= te.mask;
                    if mask[ra as usize] & self.target == self.target {
                        return true;
                    }
                }
                (None, None) => {
                    if te.mask & self.target == self.target {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Whether `config` realizes an open crossing of the box.
pub fn has_crossing(
    lattice: &MixedLattice,
    config: &Configuration,
    box_spec: &BoxSpec,
    direction: Direction,
) -> Result<bool> {
    let tester = CrossingTester::new(lattice, box_spec, direction)?;
    Ok(tester.check(|e| config.get(e)))
}

/// Monte Carlo crossing estimate with a Wilson 95% interval. Reproducible:
/// trial `t` draws edge `e` open exactly when the full-configuration sampler
/// would, so estimates compose with [`crate::params::sample_configuration`].
#[derive(Debug, Clone, Copy)]
pub struct CrossingEstimate {
    pub trials: u64,
    pub successes: u64,
    pub point: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// Wilson 95% score interval.
pub fn wilson95(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054_f64;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

pub fn estimate_crossing(
    lattice: &MixedLattice,
    params: &ParamMap,
    box_spec: &BoxSpec,
    direction: Direction,
    trials: u64,
    seed: u64,
) -> Result<CrossingEstimate> {
    if trials == 0 {
        return Err(Error::InvariantViolation("trials must be >= 1".into()));
    }
    let tester = CrossingTester::new(lattice, box_spec, direction)?;
    let successes: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| tester.check(|e| edge_open(params.prob(e), seed, trial, e)) as u64)
        .sum();
    let point = successes as f64 / trials as f64;
    let (wilson_lo, wilson_hi) = wilson95(successes, trials);
    Ok(CrossingEstimate {
        trials,
        successes,
        point,
        wilson_lo,
        wilson_hi,
    })
}

/// Exact crossing probability by enumerating all states of the edges the
/// event depends on; capped at [`BRUTE_FORCE_EDGE_CAP`] edges.
pub fn brute_force_crossing(
    lattice: &MixedLattice,
    params: &ParamMap,
    box_spec: &BoxSpec,
    direction: Direction,
) -> Result<f64> {
    let tester = CrossingTester::new(lattice, box_spec, direction)?;
    let edges = tester.relevant_edges();
    if edges.len() > BRUTE_FORCE_EDGE_CAP {
        return Err(Error::TooManyEdges {
            got: edges.len(),
            cap: BRUTE_FORCE_EDGE_CAP,
        });
    }
    let probs: Vec<f64> = edges.iter().map(|&e| params.prob(e)).collect();
    let slot_of = |e: u32| edges.binary_search(&e).unwrap();
    let n = edges.len();
    let total: f64 = (0u64..1u64 << n)
        .into_par_iter()
        .map(|mask| {
            let mut weight = 1.0;
            for (i, &p) in probs.iter().enumerate() {
                weight *= if mask >> i & 1 == 1 { p } else { 1.0 - p };
            }
            if weight == 0.0 {
                return 0.0;
            }
            if tester.check(|e| mask >> slot_of(e) & 1 == 1) {
                weight
            } else {
                0.0
            }
        })
        .sum();
    Ok(total)
}

/// One truncated cluster exploration.
#[derive(Debug, Clone, Copy)]
pub struct ClusterSample {
    /// Euclidean radius of the explored cluster, truncated at the cap.
    pub radius: f64,
    /// Vertices discovered before truncation.
    pub volume: u64,
    /// Whether the cluster reached the cap (a proxy for `v <-> boundary`).
    pub reached_cap: bool,
}

/// Explore the open cluster of `origin` in independent trials, sampling
/// edges lazily. Exploration stops once a vertex at distance >= `radius_cap`
/// from the origin is found.
pub fn cluster_stats(
    lattice: &MixedLattice,
    params: &ParamMap,
    origin: &VertexId,
    trials: u64,
    radius_cap: f64,
    seed: u64,
) -> Result<Vec<ClusterSample>> {
    let origin_idx = lattice
        .vertex_index(origin)
        .ok_or_else(|| Error::UnknownVertex(origin.to_string()))?;
    let origin_pos = lattice.position(origin_idx);
    let samples: Vec<ClusterSample> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut visited = vec![false; lattice.vertex_count()];
            let mut queue = std::collections::VecDeque::new();
            visited[origin_idx as usize] = true;
            queue.push_back(origin_idx);
            let mut radius = 0.0f64;
            let mut volume = 1u64;
            let mut reached = false;
            while let Some(v) = queue.pop_front() {
                for &(e, nb) in lattice.neighbors(v) {
                    if visited[nb as usize] {
                        continue;
                    }
                    if !edge_open(params.prob(e), seed, trial, e) {
                        continue;
                    }
                    visited[nb as usize] = true;
                    volume += 1;
                    let d = lattice.position(nb).dist(&origin_pos);
                    if d > radius {
                        radius = d;
                    }
                    if d >= radius_cap {
                        reached = true;
                        break;
                    }
                    queue.push_back(nb);
                }
                if reached {
                    break;
                }
            }
            ClusterSample {
                radius: if reached { radius_cap } else { radius },
                volume,
                reached_cap: reached,
            }
        })
        .collect();
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_lattice, LatticeKind};
    use crate::params::{assign_params, sample_configuration, ParamSpec};

    fn square(x0: f64, x1: f64, y0: f64, y1: f64) -> MixedLattice {
        build_lattice(LatticeKind::PureSquare, Rect::new(x0, x1, y0, y1), None).unwrap()
    }

    fn unit_box(x0: f64, x1: f64, y0: f64, y1: f64) -> BoxSpec {
        BoxSpec {
            m: (x1 - x0) / 2.0,
            n: y1 - y0,
            dx: (x0 + x1) / 2.0,
            dy: y0,
        }
    }

    #[test]
    fn trivial_crossings() {
        let lat = square(-1.0, 3.0, -1.0, 2.0);
        let b = unit_box(0.0, 2.0, 0.0, 1.0);
        let open = Configuration::all_open(lat.edge_count());
        assert!(has_crossing(&lat, &open, &b, Direction::Horizontal).unwrap());
        assert!(has_crossing(&lat, &open, &b, Direction::Vertical).unwrap());
        let closed = Configuration::all_closed(lat.edge_count());
        assert!(!has_crossing(&lat, &closed, &b, Direction::Horizontal).unwrap());
        assert!(!has_crossing(&lat, &closed, &b, Direction::Vertical).unwrap());
    }

    #[test]
    fn bottom_row_crosses_horizontally_only() {
        let lat = square(-1.0, 3.0, -1.0, 2.0);
        let b = unit_box(0.0, 2.0, 0.0, 1.0);
        let mut config = Configuration::all_closed(lat.edge_count());
        // open the bottom row of horizontal edges y = 0, x in [0,2]
        for e in 0..lat.edge_count() as u32 {
            let (pa, pb) = lat.edge_endpoints(e);
            if pa.y == 0.0 && pb.y == 0.0 && pa.x >= -0.5 && pb.x <= 2.5 {
                config.set(e, true);
            }
        }
        assert!(has_crossing(&lat, &config, &b, Direction::Horizontal).unwrap());
        assert!(!has_crossing(&lat, &config, &b, Direction::Vertical).unwrap());
    }

    #[test]
    fn box_out_of_bounds() {
        let lat = square(0.0, 2.0, 0.0, 2.0);
        let b = BoxSpec::centered(5.0, 1.0);
        assert!(matches!(
            has_crossing(
                &lat,
                &Configuration::all_closed(lat.edge_count()),
                &b,
                Direction::Horizontal
            ),
            Err(Error::BoxOutOfBounds)
        ));
    }

    #[test]
    fn brute_force_single_and_parallel_edges() {
        // single horizontal edge spanning a thin box
        let lat = square(-1.0, 2.0, -1.0, 2.0);
        let params = assign_params(&lat, &ParamSpec::SquarePair { ph: 0.37, pv: 0.0 }).unwrap();
        let b = BoxSpec {
            m: 0.4,
            n: 0.4,
            dx: 0.5,
            dy: -0.2,
        };
        let p = brute_force_crossing(&lat, &params, &b, Direction::Horizontal).unwrap();
        assert!((p - 0.37).abs() < 1e-12);

        // two disjoint parallel spanning edges: 1 - (1-p)^2
        let b2 = BoxSpec {
            m: 0.4,
            n: 1.4,
            dx: 0.5,
            dy: -0.2,
        };
        let p2 = brute_force_crossing(&lat, &params, &b2, Direction::Horizontal).unwrap();
        assert!((p2 - (1.0 - (1.0 - 0.37f64).powi(2))).abs() < 1e-12);
    }

    #[test]
    fn mc_matches_brute_force() {
        let lat = square(0.0, 3.0, 0.0, 2.0);
        let params = assign_params(&lat, &ParamSpec::SquarePair { ph: 0.5, pv: 0.5 }).unwrap();
        let b = unit_box(0.0, 3.0, 0.0, 2.0);
        let exact = brute_force_crossing(&lat, &params, &b, Direction::Horizontal).unwrap();
        assert!(exact > 0.0 && exact < 1.0);
        let est = estimate_crossing(&lat, &params, &b, Direction::Horizontal, 200_000, 5).unwrap();
        let sigma = (exact * (1.0 - exact) / est.trials as f64).sqrt();
        assert!(
            (est.point - exact).abs() <= 3.5 * sigma,
            "mc {} vs exact {exact}",
            est.point
        );
        assert!(est.wilson_lo <= est.point && est.point <= est.wilson_hi);
    }

    #[test]
    fn degenerate_intensities() {
        let lat = square(0.0, 4.0, 0.0, 2.0);
        let ones = assign_params(&lat, &ParamSpec::SquarePair { ph: 1.0, pv: 1.0 }).unwrap();
        let b = unit_box(0.0, 4.0, 0.0, 2.0);
        let est = estimate_crossing(&lat, &ones, &b, Direction::Horizontal, 500, 1).unwrap();
        assert_eq!(est.point, 1.0);
        let zeros = assign_params(&lat, &ParamSpec::SquarePair { ph: 0.0, pv: 0.0 }).unwrap();
        let est = estimate_crossing(&lat, &zeros, &b, Direction::Horizontal, 500, 1).unwrap();
        assert_eq!(est.point, 0.0);
    }

    #[test]
    fn opening_an_edge_never_destroys_a_crossing() {
        let lat = square(0.0, 4.0, 0.0, 3.0);
        let params = assign_params(&lat, &ParamSpec::SquarePair { ph: 0.5, pv: 0.5 }).unwrap();
        let b = unit_box(0.0, 4.0, 0.0, 3.0);
        for trial in 0..200u64 {
            let config = sample_configuration(&lat, &params, 9, trial);
            let before = has_crossing(&lat, &config, &b, Direction::Horizontal).unwrap();
            if !before {
                continue;
            }
            let mut flipped = config.clone();
            let e = (trial % lat.edge_count() as u64) as u32;
            flipped.set(e, true);
            assert!(has_crossing(&lat, &flipped, &b, Direction::Horizontal).unwrap());
        }
    }

    #[test]
    fn positive_association_spot_check() {
        let lat = square(0.0, 4.0, 0.0, 4.0);
        let params = assign_params(&lat, &ParamSpec::SquarePair { ph: 0.5, pv: 0.5 }).unwrap();
        let b = unit_box(0.5, 3.5, 0.5, 3.5);
        let th = CrossingTester::new(&lat, &b, Direction::Horizontal).unwrap();
        let tv = CrossingTester::new(&lat, &b, Direction::Vertical).unwrap();
        let n = 100_000u64;
        let (mut ch, mut cv, mut both) = (0u64, 0u64, 0u64);
        for trial in 0..n {
            let h = th.check(|e| edge_open(params.prob(e), 31, trial, e));
            let v = tv.check(|e| edge_open(params.prob(e), 31, trial, e));
            ch += h as u64;
            cv += v as u64;
            both += (h && v) as u64;
        }
        let (ph, pv, pb) = (
            ch as f64 / n as f64,
            cv as f64 / n as f64,
            both as f64 / n as f64,
        );
        let sigma = (pb * (1.0 - pb) / n as f64).sqrt();
        assert!(
            pb >= ph * pv - 3.0 * sigma,
            "FKG violated: {pb} < {ph}*{pv}"
        );
    }

    #[test]
    fn cluster_stats_trivial_cases() {
        let lat = square(-8.0, 8.0, -8.0, 8.0);
        let zeros = assign_params(&lat, &ParamSpec::SquarePair { ph: 0.0, pv: 0.0 }).unwrap();
        let origin = VertexId::node(0, 0);
        let s = cluster_stats(&lat, &zeros, &origin, 10, 5.0, 3).unwrap();
        for sample in s {
            assert_eq!(sample.radius, 0.0);
            assert_eq!(sample.volume, 1);
            assert!(!sample.reached_cap);
        }
        let ones = assign_params(&lat, &ParamSpec::SquarePair { ph: 1.0, pv: 1.0 }).unwrap();
        let s = cluster_stats(&lat, &ones, &origin, 10, 5.0, 3).unwrap();
        for sample in s {
            assert_eq!(sample.radius, 5.0);
            assert!(sample.reached_cap);
        }
    }
}
