//! Experiment drivers shared by the command-line runner and the acceptance
//! suite. Each driver is a pure function of its explicit inputs (including
//! seeds), so runs replay bit-for-bit.

use std::sync::Arc;

use rayon::prelude::*;

use crate::crossing::{
    brute_force_crossing, estimate_crossing, wilson95, BoxSpec, CrossingEstimate, Direction,
};
use crate::error::{Error, Result};
use crate::geom::{Rect, SQRT3};
use crate::growth::{
    check_stochastic_domination, column_heights, random_dominating_chain_pair, simulate_walk,
    FptInstance, GrowthState, HeightSample,
};
use crate::lattice::{build_lattice, LatticeKind, VertexId};
use crate::params::{
    assign_params, beta_const, sample_configuration, HeightProfile, ParamSpec, Triplet,
};
use crate::paths::{
    is_open, path_distance_upper, random_open_path, stage_pair, transport_path, StagedPath,
};
use crate::rng::{self, domain};
use crate::star_triangle::{round_trip_law_error, self_dual_grid, verify_star_triangle};
use crate::transform::{transform_chain, transform_once, SweepOp, SweepPair, SweepPlan};

// ---------------------------------------------------------------------------
// Kernel exactness and round trip

#[derive(Debug, Clone)]
pub struct KernelGridRow {
    pub triplet: Triplet,
    pub max_law_error: f64,
    pub round_trip_error: f64,
    pub connections_preserved: bool,
}

#[derive(Debug, Clone)]
pub struct KernelGridReport {
    pub rows: Vec<KernelGridRow>,
    pub max_law_error: f64,
    pub max_round_trip_error: f64,
    pub all_connections_preserved: bool,
}

/// Exhaustive kernel verification over a deterministic self-dual grid.
pub fn kernel_grid_report(points: usize) -> Result<KernelGridReport> {
    let mut rows = Vec::with_capacity(points);
    let mut max_law: f64 = 0.0;
    let mut max_rt: f64 = 0.0;
    let mut all_conn = true;
    for triplet in self_dual_grid(points) {
        let report = verify_star_triangle(&triplet)?;
        let rt = round_trip_law_error(&triplet)?;
        max_law = max_law.max(report.max_law_error);
        max_rt = max_rt.max(rt);
        all_conn &= report.connections_preserved;
        rows.push(KernelGridRow {
            triplet,
            max_law_error: report.max_law_error,
            round_trip_error: rt,
            connections_preserved: report.connections_preserved,
        });
    }
    Ok(KernelGridReport {
        rows,
        max_law_error: max_law,
        max_round_trip_error: max_rt,
        all_connections_preserved: all_conn,
    })
}

// ---------------------------------------------------------------------------
// Sweep measure preservation

#[derive(Debug, Clone)]
pub struct SweepLawOutcome {
    pub config_bits: u32,
    pub expected: f64,
    pub observed: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct SweepLawReport {
    pub patch_edges: usize,
    pub window_edges: usize,
    pub trials: u64,
    pub outcomes: Vec<SweepLawOutcome>,
    pub max_abs_z: f64,
    pub pass: bool,
}

/// Empirical law of one down-composite sweep on a 17-edge mixed patch,
/// compared per configuration against the exact product law on a six-edge
/// interior window of the image lattice.
pub fn sweep_law_report(p0: f64, trials: u64, seed: u64) -> Result<SweepLawReport> {
    let lattice = Arc::new(build_lattice(
        LatticeKind::MixedTriangular,
        Rect::new(-0.1, 2.0 * SQRT3 + 0.1, -1.1, 2.6),
        Some(1),
    )?);
    let patch_edges = lattice.edge_count();
    let triplet = Triplet::symmetric_self_dual(p0)?;
    let params = assign_params(&lattice, &ParamSpec::Triplet(triplet))?;
    let plan = SweepPlan::new(lattice.clone(), &params, SweepPair::Down, 1)?;
    let img = plan.lattice_after_composite(1).clone();
    let img_params = plan.params_at(2).clone();

    // interior window: the three edges created by the one fully interior
    // star cell, two interface horizontals, and one vertical below them
    let e = |a: VertexId, b: VertexId| -> Result<u32> {
        img.edge_between_ids(&a, &b)
            .ok_or_else(|| Error::InvariantViolation(format!("window edge {a}-{b} missing")))
    };
    let window = vec![
        e(VertexId::node(1, 3), VertexId::node(3, 3))?,
        e(VertexId::node(2, 0), VertexId::node(1, 3))?,
        e(VertexId::node(2, 0), VertexId::node(3, 3))?,
        e(VertexId::node(0, 0), VertexId::node(2, 0))?,
        e(VertexId::node(2, 0), VertexId::node(4, 0))?,
        e(VertexId::node(2, -2), VertexId::node(2, 0))?,
    ];
    for &we in &window {
        if plan.steps()[1].artifact_img_edges().contains(&we) {
            return Err(Error::InvariantViolation(
                "window touches a boundary artifact".into(),
            ));
        }
    }

    let n_out = 1usize << window.len();
    let counts: Vec<u64> = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; n_out],
            |mut acc, trial| {
                let config = sample_configuration(&lattice, &params, seed, trial);
                let trace = plan.run(config, seed, trial, false);
                let out = trace.config_after_composite(1);
                let mut bits = 0u32;
                for (i, &we) in window.iter().enumerate() {
                    bits |= (out.get(we) as u32) << i;
                }
                acc[bits as usize] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; n_out],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let mut outcomes = Vec::with_capacity(n_out);
    let mut max_abs_z: f64 = 0.0;
    let mut pass = true;
    for bits in 0..n_out as u32 {
        let mut expected = 1.0;
        for (i, &we) in window.iter().enumerate() {
            let p = img_params.prob(we);
            expected *= if bits >> i & 1 == 1 { p } else { 1.0 - p };
        }
        let observed = counts[bits as usize] as f64 / trials as f64;
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        let z = if sigma > 0.0 {
            (observed - expected).abs() / sigma
        } else if observed == expected {
            0.0
        } else {
            f64::INFINITY
        };
        max_abs_z = max_abs_z.max(z);
        if z > 3.0 {
            pass = false;
        }
        outcomes.push(SweepLawOutcome {
            config_bits: bits,
            expected,
            observed,
            sigma,
        });
    }
    Ok(SweepLawReport {
        patch_edges,
        window_edges: window.len(),
        trials,
        outcomes,
        max_abs_z,
        pass,
    })
}

/// Same comparison for one up composite (interface +1): the image window
/// mixes the three edges of one interior created up-triangle with copied
/// square edges, including a stem that became a square vertical.
pub fn up_sweep_law_report(p0: f64, trials: u64, seed: u64) -> Result<SweepLawReport> {
    let lattice = Arc::new(build_lattice(
        LatticeKind::MixedTriangular,
        Rect::new(-SQRT3 - 0.1, 3.0 * SQRT3 + 0.1, -1.1, 4.2),
        Some(0),
    )?);
    let patch_edges = lattice.edge_count();
    let triplet = Triplet::symmetric_self_dual(p0)?;
    let params = assign_params(&lattice, &ParamSpec::Triplet(triplet))?;
    let plan = SweepPlan::new(lattice.clone(), &params, SweepPair::Up, 1)?;
    let img = plan.lattice_after_composite(1).clone();
    let img_params = plan.params_at(2).clone();

    let e = |a: VertexId, b: VertexId| -> Result<u32> {
        img.edge_between_ids(&a, &b)
            .ok_or_else(|| Error::InvariantViolation(format!("window edge {a}-{b} missing")))
    };
    let window = vec![
        e(VertexId::node(0, 2), VertexId::node(2, 2))?,
        e(VertexId::node(2, 2), VertexId::node(1, 5))?,
        e(VertexId::node(0, 2), VertexId::node(1, 5))?,
        e(VertexId::node(2, 0), VertexId::node(2, 2))?,
        e(VertexId::node(0, 0), VertexId::node(2, 0))?,
        e(VertexId::node(2, -2), VertexId::node(2, 0))?,
    ];
    for &we in &window {
        if plan.steps()[1].artifact_img_edges().contains(&we) {
            return Err(Error::InvariantViolation(
                "window touches a boundary artifact".into(),
            ));
        }
    }

    let n_out = 1usize << window.len();
    let counts: Vec<u64> = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; n_out],
            |mut acc, trial| {
                let config = sample_configuration(&lattice, &params, seed, trial);
                let trace = plan.run(config, seed, trial, false);
                let out = trace.config_after_composite(1);
                let mut bits = 0u32;
                for (i, &we) in window.iter().enumerate() {
                    bits |= (out.get(we) as u32) << i;
                }
                acc[bits as usize] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; n_out],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let mut outcomes = Vec::with_capacity(n_out);
    let mut max_abs_z: f64 = 0.0;
    let mut pass = true;
    for bits in 0..n_out as u32 {
        let mut expected = 1.0;
        for (i, &we) in window.iter().enumerate() {
            let p = img_params.prob(we);
            expected *= if bits >> i & 1 == 1 { p } else { 1.0 - p };
        }
        let observed = counts[bits as usize] as f64 / trials as f64;
        let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
        let z = if sigma > 0.0 {
            (observed - expected).abs() / sigma
        } else if observed == expected {
            0.0
        } else {
            f64::INFINITY
        };
        max_abs_z = max_abs_z.max(z);
        if z > 3.0 {
            pass = false;
        }
        outcomes.push(SweepLawOutcome { config_bits: bits, expected, observed, sigma });
    }
    Ok(SweepLawReport { patch_edges, window_edges: window.len(), trials, outcomes, max_abs_z, pass })
}

// ---------------------------------------------------------------------------
// Path transport drift

#[derive(Debug, Clone, Default)]
pub struct TransportDriftReport {
    pub paths: u64,
    pub t_transports: u64,
    pub s_transports: u64,
    pub composites: u64,
    pub max_t_bound: f64,
    pub max_s_bound: f64,
    pub max_composite_bound: f64,
    pub bound_violations: u64,
    pub openness_violations: u64,
}

/// Transport random open paths through both composite directions, tracking
/// certified drift bounds and per-sample openness of the images.
pub fn transport_drift_report(paths: u64, seed: u64) -> Result<TransportDriftReport> {
    let lattice = Arc::new(build_lattice(
        LatticeKind::MixedTriangular,
        Rect::new(-14.0, 14.0, -4.0, 12.0),
        Some(3),
    )?);
    let triplets = [
        Triplet::symmetric_self_dual(0.5)?,
        Triplet::symmetric_self_dual(0.3)?,
        Triplet::new(0.6, 0.2, crate::params::complete_self_dual(0.6, 0.2)?),
    ];
    let results: Vec<TransportDriftReport> = (0..paths)
        .into_par_iter()
        .map(|trial| -> Result<TransportDriftReport> {
            let mut rep = TransportDriftReport::default();
            let triplet = triplets[(trial % 3) as usize];
            let params = assign_params(&lattice, &ParamSpec::Triplet(triplet))?;
            let config = sample_configuration(&lattice, &params, seed, trial);
            let path = random_open_path(&lattice, &config, seed, trial, 12);
            let interior = path.vertices.iter().all(|&v| {
                let p = lattice.position(v);
                p.x.abs() < 9.0 && p.y > -3.0 && p.y < 8.5
            });
            if !interior || path.len() < 2 {
                return Ok(rep);
            }
            debug_assert!(is_open(&path, &lattice, &config)?);
            rep.paths = 1;
            let staged = StagedPath::from_path(&lattice, &path)?;
            let (t_op, s_op) = if trial % 2 == 0 {
                (SweepOp::TUp, SweepOp::SDown)
            } else {
                (SweepOp::TDown, SweepOp::SUp)
            };
            let t_out = transform_once(lattice.clone(), &params, &config, t_op, seed + 1, trial)?;
            let (mid, pair_t) = transport_path(&t_out.plan, &t_out.config, &staged)?;
            let d_t = path_distance_upper(&pair_t);
            rep.t_transports = 1;
            rep.max_t_bound = d_t;
            if d_t > 0.5 + 1e-9 {
                rep.bound_violations += 1;
            }
            if !is_open(&mid.path, t_out.plan.img_lattice(), &t_out.config)? {
                rep.openness_violations += 1;
            }
            let s_out = transform_chain(&t_out, s_op, seed + 1, trial)?;
            let (fin, pair_s) = transport_path(&s_out.plan, &s_out.config, &mid)?;
            let d_s = path_distance_upper(&pair_s);
            rep.s_transports = 1;
            rep.max_s_bound = d_s;
            if d_s > 1.0 + 1e-9 {
                rep.bound_violations += 1;
            }
            if !is_open(&fin.path, s_out.plan.img_lattice(), &s_out.config)? {
                rep.openness_violations += 1;
            }
            let d_c = path_distance_upper(&stage_pair(&staged, &fin));
            rep.composites = 1;
            rep.max_composite_bound = d_c;
            if d_c > 1.0 + 1e-9 {
                rep.bound_violations += 1;
            }
            Ok(rep)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = TransportDriftReport::default();
    for r in results {
        total.paths += r.paths;
        total.t_transports += r.t_transports;
        total.s_transports += r.s_transports;
        total.composites += r.composites;
        total.max_t_bound = total.max_t_bound.max(r.max_t_bound);
        total.max_s_bound = total.max_s_bound.max(r.max_s_bound);
        total.max_composite_bound = total.max_composite_bound.max(r.max_composite_bound);
        total.bound_violations += r.bound_violations;
        total.openness_violations += r.openness_violations;
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Square self-duality anchor

#[derive(Debug, Clone)]
pub struct SquareAnchorReport {
    /// Exact crossing probabilities of `[0, N+1] x [0, N]` at p = 1/2 for
    /// N = 1, 2 (the pinned convention).
    pub pinned: Vec<(u64, f64)>,
    /// Exact probabilities of the transposed convention (for contrast).
    pub transposed: Vec<(u64, f64)>,
    pub mc: CrossingEstimate,
    pub mc_n: u64,
}

/// A width `N+1`, height `N` box with lower-left corner at the origin.
fn anchor_box(n: u64, transposed: bool) -> BoxSpec {
    let (w, h) = if transposed {
        (n as f64, n as f64 + 1.0)
    } else {
        (n as f64 + 1.0, n as f64)
    };
    BoxSpec {
        m: w / 2.0,
        n: h,
        dx: w / 2.0,
        dy: 0.0,
    }
}

pub fn square_anchor_report(mc_n: u64, mc_trials: u64, seed: u64) -> Result<SquareAnchorReport> {
    let mut pinned = Vec::new();
    let mut transposed = Vec::new();
    for n in 1..=2u64 {
        let lat = build_lattice(
            LatticeKind::PureSquare,
            Rect::new(-1.0, n as f64 + 2.0, -1.0, n as f64 + 2.0),
            None,
        )?;
        let params = assign_params(&lat, &ParamSpec::SquarePair { ph: 0.5, pv: 0.5 })?;
        pinned.push((
            n,
            brute_force_crossing(&lat, &params, &anchor_box(n, false), Direction::Horizontal)?,
        ));
        transposed.push((
            n,
            brute_force_crossing(&lat, &params, &anchor_box(n, true), Direction::Horizontal)?,
        ));
    }
    let lat = build_lattice(
        LatticeKind::PureSquare,
        Rect::new(-1.0, mc_n as f64 + 2.0, -1.0, mc_n as f64 + 2.0),
        None,
    )?;
    let params = assign_params(&lat, &ParamSpec::SquarePair { ph: 0.5, pv: 0.5 })?;
    let mc = estimate_crossing(
        &lat,
        &params,
        &anchor_box(mc_n, false),
        Direction::Horizontal,
        mc_trials,
        seed,
    )?;
    Ok(SquareAnchorReport {
        pinned,
        transposed,
        mc,
        mc_n,
    })
}

// ---------------------------------------------------------------------------
// Monte Carlo vs exhaustive oracle on random small patches

#[derive(Debug, Clone)]
pub struct McOracleCase {
    pub lattice: &'static str,
    pub edges: usize,
    pub exact: f64,
    pub estimate: CrossingEstimate,
    pub z: f64,
}

#[derive(Debug, Clone)]
pub struct McOracleReport {
    pub cases: Vec<McOracleCase>,
    pub within_3_sigma: usize,
}

pub fn mc_vs_oracle_report(patches: usize, trials: u64, seed: u64) -> Result<McOracleReport> {
    let mut cases = Vec::with_capacity(patches);
    let mut i = 0u64;
    while cases.len() < patches {
        let instance = i;
        i += 1;
        let u = |tag: u64| rng::uniform(&[domain::GENERIC, 0x6f7261, seed, instance, tag]);
        let (lattice, params, name) = match instance % 3 {
            0 => {
                let lat = build_lattice(
                    LatticeKind::PureSquare,
                    Rect::new(-3.2, 3.2, -1.2, 3.2),
                    None,
                )?;
                let spec = ParamSpec::SquarePair {
                    ph: 0.1 + 0.8 * u(1),
                    pv: 0.1 + 0.8 * u(2),
                };
                let params = assign_params(&lat, &spec)?;
                (lat, params, "pureSquare")
            }
            1 => {
                let lat = build_lattice(
                    LatticeKind::PureTriangular,
                    Rect::new(-3.8, 3.8, -1.6, 3.2),
                    None,
                )?;
                let spec = ParamSpec::Triplet(Triplet::new(
                    0.1 + 0.8 * u(1),
                    0.1 + 0.8 * u(2),
                    0.1 + 0.8 * u(3),
                ));
                let params = assign_params(&lat, &spec)?;
                (lat, params, "pureTriangular")
            }
            _ => {
                let lat = build_lattice(
                    LatticeKind::MixedTriangular,
                    Rect::new(-3.8, 3.8, -2.2, 3.2),
                    Some(0),
                )?;
                let spec = ParamSpec::Triplet(Triplet::new(
                    0.1 + 0.8 * u(1),
                    0.1 + 0.8 * u(2),
                    0.1 + 0.8 * u(3),
                ));
                let params = assign_params(&lat, &spec)?;
                (lat, params, "mixedTriangular")
            }
        };
        let direction = if instance % 2 == 0 {
            Direction::Horizontal
        } else {
            Direction::Vertical
        };
        let b = BoxSpec {
            m: 0.8 + 1.2 * u(4),
            n: 0.8 + 1.3 * u(5),
            dx: (u(6) - 0.5) * 1.5,
            dy: (u(7) - 0.5) * 1.5,
        };
        let tester = crate::crossing::CrossingTester::new(&lattice, &b, direction)?;
        let n_edges = tester.relevant_edges().len();
        if n_edges == 0 || n_edges > 20 {
            continue;
        }
        let exact = brute_force_crossing(&lattice, &params, &b, direction)?;
        let estimate =
            estimate_crossing(&lattice, &params, &b, direction, trials, seed ^ instance)?;
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        let z = if sigma > 0.0 {
            (estimate.point - exact).abs() / sigma
        } else if estimate.point == exact {
            0.0
        } else {
            f64::INFINITY
        };
        cases.push(McOracleCase {
            lattice: name,
            edges: n_edges,
            exact,
            estimate,
            z,
        });
    }
    let within = cases.iter().filter(|c| c.z <= 3.0).count();
    Ok(McOracleReport {
        cases,
        within_3_sigma: within,
    })
}

// ---------------------------------------------------------------------------
// Desk-scale transport inequalities

#[derive(Debug, Clone)]
pub struct TransportInequality {
    pub label: &'static str,
    pub lhs: CrossingEstimate,
    pub rhs: CrossingEstimate,
    pub combined_sigma: f64,
    /// `lhs >= rhs - 3 sigma`.
    pub holds: bool,
}

/// The two crossing-probability comparisons obtained by sweeping a box
/// between the square and triangular parts: the horizontal square-to-triangle
/// inequality and the vertical triangle-to-square inequality.
pub fn transport_inequality_report(
    n: u64,
    alpha: u64,
    trials: u64,
    seed: u64,
) -> Result<Vec<TransportInequality>> {
    let p0 = 0.5;
    let triplet = Triplet::symmetric_self_dual(p0)?;
    let nf = n as f64;
    let af = alpha as f64;

    // sqrt(3) x 1 square lattice: a mixed triangular lattice whose interface
    // sits above the working region
    let square_half_width = af * nf + 3.0 * SQRT3;
    let square = build_lattice(
        LatticeKind::MixedTriangular,
        Rect::new(-square_half_width, square_half_width, -1.5, nf + 1.5),
        Some(1_000),
    )?;
    let square_params = assign_params(&square, &ParamSpec::Triplet(triplet))?;

    let tri_half_width = (af + 1.0) * nf + 3.0 * SQRT3;
    let tri = build_lattice(
        LatticeKind::PureTriangular,
        Rect::new(-tri_half_width, tri_half_width, -1.8, 2.0 * nf + 2.5),
        None,
    )?;
    let tri_params = assign_params(&tri, &ParamSpec::Triplet(triplet))?;

    let mut out = Vec::new();

    // horizontal: P_tri[Ch((alpha-1)N, 2N)] >= P_sq[Ch(alpha N, N)]
    let lhs = estimate_crossing(
        &tri,
        &tri_params,
        &BoxSpec::centered((af - 1.0) * nf, 2.0 * nf),
        Direction::Horizontal,
        trials,
        seed,
    )?;
    let rhs = estimate_crossing(
        &square,
        &square_params,
        &BoxSpec::centered(af * nf, nf),
        Direction::Horizontal,
        trials,
        seed + 1,
    )?;
    let sigma = (lhs.point * (1.0 - lhs.point) / trials as f64
        + rhs.point * (1.0 - rhs.point) / trials as f64)
        .sqrt();
    out.push(TransportInequality {
        label: "horizontal_square_to_triangle",
        holds: lhs.point >= rhs.point - 3.0 * sigma,
        lhs,
        rhs,
        combined_sigma: sigma,
    });

    // vertical: P_sq[Cv((alpha+1/2)N, N/2)] >= P_tri[Cv(alpha N, N)]
    let lhs = estimate_crossing(
        &square,
        &square_params,
        &BoxSpec::centered((af + 0.5) * nf, nf / 2.0),
        Direction::Vertical,
        trials,
        seed + 2,
    )?;
    let rhs = estimate_crossing(
        &tri,
        &tri_params,
        &BoxSpec::centered(af * nf, nf),
        Direction::Vertical,
        trials,
        seed + 3,
    )?;
    let sigma = (lhs.point * (1.0 - lhs.point) / trials as f64
        + rhs.point * (1.0 - rhs.point) / trials as f64)
        .sqrt();
    out.push(TransportInequality {
        label: "vertical_triangle_to_square",
        holds: lhs.point >= rhs.point - 3.0 * sigma,
        lhs,
        rhs,
        combined_sigma: sigma,
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Interface-height process and walk domination

#[derive(Debug, Clone)]
pub struct HeightStepRow {
    pub replica: u64,
    pub step: usize,
    pub h: f64,
    pub cap_hit: bool,
}

#[derive(Debug, Clone)]
pub struct HeightProcessReport {
    pub p0: f64,
    pub beta: f64,
    pub n: usize,
    pub replicas: u64,
    pub rows: Vec<HeightStepRow>,
    /// Transitions with `h^{k+1} < h^k - 1`.
    pub decrease_violations: u64,
    /// Valid (uncapped) transitions observed.
    pub transitions: u64,
    /// Transitions with `h^{k+1} >= h^k + 1/2`.
    pub uplifts: u64,
    /// Per-replica `(h^0, h^N)` for uncapped replicas.
    pub endpoints: Vec<(f64, f64)>,
}

/// Per-composite height of the region whose configuration law is exact: the
/// lowest boundary-artifact edge over the measurement strip, minus one.
fn trusted_tops(plan: &SweepPlan, n: usize) -> Vec<f64> {
    let mut tops = Vec::with_capacity(n + 1);
    tops.push(plan.lattice_at(0).bounds().y1);
    for k in 1..=n {
        let step = &plan.steps()[2 * k - 1];
        let img = step.img_lattice();
        let strip = (n + k + 1) as f64;
        let mut top = img.bounds().y1;
        for &e in step.artifact_img_edges() {
            let (a, b) = img.edge_endpoints(e);
            if a.x.abs().min(b.x.abs()) <= strip {
                top = top.min(a.y.min(b.y));
            }
        }
        tops.push(top - 1.0);
    }
    tops
}

/// Run down sweeps from interface height `n`, recording the height process.
/// Transitions are counted only when the cap provably cannot censor them:
/// `h^k` must sit at least one unit below the trusted region tops of both
/// the current and the next step.
pub fn height_process_report(
    p0: f64,
    n: usize,
    replicas: u64,
    seed: u64,
) -> Result<HeightProcessReport> {
    let triplet = Triplet::symmetric_self_dual(p0)?;
    // the horizontal artifact front recedes ~1.7 per composite and the
    // measurement strip grows by 1, so the width covers both plus margin
    let half = (2 * n + 1) as f64 + 1.75 * (n + 1) as f64 + 6.0;
    let y_top = 3.5 * n as f64 + 0.95 * (n + 1) as f64;
    let lattice = Arc::new(build_lattice(
        LatticeKind::MixedTriangular,
        Rect::new(-half, half, -2.0, y_top),
        Some(n as i64),
    )?);
    let params = assign_params(&lattice, &ParamSpec::Triplet(triplet))?;
    let plan = Arc::new(SweepPlan::new(
        lattice.clone(),
        &params,
        SweepPair::Down,
        n,
    )?);
    let trust = Arc::new(trusted_tops(&plan, n));

    struct Partial {
        rows: Vec<HeightStepRow>,
        decrease_violations: u64,
        transitions: u64,
        uplifts: u64,
        endpoint: Option<(f64, f64)>,
    }

    let partials: Vec<Partial> = (0..replicas)
        .into_par_iter()
        .map(|replica| {
            let config = sample_configuration(&lattice, &params, seed, replica);
            let trace = plan.run(config, seed, replica, false);
            let mut rows = Vec::with_capacity(n + 1);
            let mut heights = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let lat_k = plan.lattice_after_composite(k);
                let cfg_k = trace.config_after_composite(k);
                let HeightSample { h, .. } =
                    crate::growth::height_reach(lat_k, cfg_k, (n + k) as f64);
                let cap_hit = h > trust[k] - 1e-9;
                rows.push(HeightStepRow {
                    replica,
                    step: k,
                    h,
                    cap_hit,
                });
                heights.push(h);
            }
            let mut decrease_violations = 0;
            let mut transitions = 0;
            let mut uplifts = 0;
            let mut all_valid = true;
            for k in 0..n {
                let h0 = heights[k];
                // censoring-free window: the achieving path and its image,
                // and any half-step uplift, stay inside trusted territory
                let valid = h0 <= trust[k] - 1.0 && h0 <= trust[k + 1] - 1.0;
                if !valid {
                    all_valid = false;
                    continue;
                }
                let h1 = heights[k + 1];
                transitions += 1;
                if h1 < h0 - 1.0 - 1e-9 {
                    decrease_violations += 1;
                }
                if h1 >= h0 + 0.5 - 1e-9 {
                    uplifts += 1;
                }
            }
            let endpoint = if all_valid {
                Some((heights[0], heights[n]))
            } else {
                None
            };
            Partial {
                rows,
                decrease_violations,
                transitions,
                uplifts,
                endpoint,
            }
        })
        .collect();

    let mut report = HeightProcessReport {
        p0,
        beta: beta_const(p0),
        n,
        replicas,
        rows: Vec::new(),
        decrease_violations: 0,
        transitions: 0,
        uplifts: 0,
        endpoints: Vec::new(),
    };
    for p in partials {
        report.rows.extend(p.rows);
        report.decrease_violations += p.decrease_violations;
        report.transitions += p.transitions;
        report.uplifts += p.uplifts;
        if let Some(ep) = p.endpoint {
            report.endpoints.push(ep);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct WalkDominationReport {
    pub replicas: usize,
    pub thresholds: Vec<f64>,
    /// Worst margin of `S_h(t) >= S_H(t) - 3 sigma(t)`; nonnegative = pass.
    pub worst_margin: f64,
    pub h_samples: Vec<f64>,
    pub walk_samples: Vec<f64>,
}

/// Compare the empirical law of `h^N` against the dominating walk started
/// from the same `h^0`, at every half-integer threshold.
pub fn walk_domination_report(height: &HeightProcessReport, seed: u64) -> WalkDominationReport {
    let beta = height.beta;
    let n = height.n;
    let h_samples: Vec<f64> = height.endpoints.iter().map(|&(_, h_n)| h_n).collect();
    if h_samples.is_empty() {
        // no uncapped replica: nothing was compared, so fail rather than
        // pass vacuously
        return WalkDominationReport {
            replicas: 0,
            thresholds: Vec::new(),
            worst_margin: f64::NEG_INFINITY,
            h_samples,
            walk_samples: Vec::new(),
        };
    }
    let walk_samples: Vec<f64> = height
        .endpoints
        .iter()
        .enumerate()
        .map(|(i, &(h0, _))| simulate_walk(h0, beta, n, seed, i as u64))
        .collect();
    let lo = walk_samples
        .iter()
        .chain(h_samples.iter())
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = walk_samples
        .iter()
        .chain(h_samples.iter())
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut thresholds = Vec::new();
    let mut t = (2.0 * lo).floor() / 2.0;
    while t <= hi + 0.25 {
        thresholds.push(t);
        t += 0.5;
    }
    let worst_margin =
        crate::growth::empirical_survival_domination(&h_samples, &walk_samples, &thresholds, 3.0);
    WalkDominationReport {
        replicas: h_samples.len(),
        thresholds,
        worst_margin,
        h_samples,
        walk_samples,
    }
}

// ---------------------------------------------------------------------------
// Growth process vs first-passage representation, and the growth tail

#[derive(Debug, Clone)]
pub struct GrowthFptReport {
    pub instances: u64,
    pub mismatches: u64,
}

/// Shared-randomness equivalence of the iterated growth recursion and the
/// first-passage reachability sets: exact column-maxima equality for every
/// step `k <= k_max`.
pub fn growth_fpt_report(instances: u64, seed: u64) -> Result<GrowthFptReport> {
    let mismatches: u64 = (0..instances)
        .into_par_iter()
        .map(|inst| {
            let u = |tag: u64| rng::uniform(&[domain::GENERIC, 0x667074, seed, inst, tag]);
            let big_n = 2 + (rng::hash_words(&[seed, inst, 1]) % 7) as i64; // 2..=8
            let c = 1 + (rng::hash_words(&[seed, inst, 2]) % 2) as i64; // alpha/sqrt3
            let k_max = 3 + (rng::hash_words(&[seed, inst, 3]) % 8) as u64; // 3..=10
            let zeta = 0.25 + 0.5 * u(4);
            let source_half = c * big_n;
            let n_span = source_half + k_max as i64 + 2;
            let h_max = big_n + k_max as i64 + 2;
            let fpt =
                FptInstance::sample(-n_span, n_span, h_max, source_half, big_n, zeta, seed, inst);
            let dist = fpt.distances();
            let mut state = GrowthState::interval(-source_half, source_half, big_n);
            let mut bad = 0u64;
            for k in 1..=k_max {
                // the pending upward edge of column n completes at step k
                // exactly when its passage time has elapsed
                let prev = state.clone();
                state = prev.step_with(|col| {
                    let Some(h) = prev.get(col) else { return false };
                    if h >= h_max {
                        return false;
                    }
                    let d = dist[((col + n_span) * (h_max + 1) + h) as usize];
                    d.saturating_add(fpt.up_tau(col, h) as u64) <= k
                });
                let maxima = fpt.reach_column_maxima(&dist, k);
                for (i, col) in (-n_span..=n_span).enumerate() {
                    if maxima[i] != state.get(col) {
                        bad += 1;
                    }
                }
            }
            (bad > 0) as u64
        })
        .sum();
    Ok(GrowthFptReport {
        instances,
        mismatches,
    })
}

#[derive(Debug, Clone)]
pub struct GrowthTailReport {
    pub n: i64,
    pub zeta: f64,
    /// Least integer `b > 1/zeta` with `b^3 (b(1-zeta)/(b-1))^b < 1/e`.
    pub beta_g: i64,
    pub replicas: u64,
    pub failures: u64,
}

/// Pick the growth constant for the tail bound numerically.
pub fn growth_beta_g(zeta: f64) -> i64 {
    let mut b = (1.0 / zeta).floor() as i64 + 1;
    loop {
        let bf = b as f64;
        let rate = bf.powi(3) * (bf * (1.0 - zeta) / (bf - 1.0)).powf(bf);
        if rate < (-1.0f64).exp() && bf > 1.0 / zeta {
            return b;
        }
        b += 1;
        if b > 10_000 {
            return b;
        }
    }
}

/// Empirical tail of the growth process: the chance that the pile exceeds
/// height `beta_g * N` within `beta_g * N` steps. Runs the recursion on a
/// flat double buffer (`i64::MIN` = empty) sized for the full sweep.
pub fn growth_tail_report(n: i64, zeta: f64, replicas: u64, seed: u64) -> GrowthTailReport {
    let beta_g = growth_beta_g(zeta);
    let steps = (beta_g * n) as u64;
    let span = (n + steps as i64 + 1) as usize; // columns [-span, span]
    let width = 2 * span + 1;
    let failures: u64 = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut cur = vec![i64::MIN; width];
            let mut next = vec![i64::MIN; width];
            for col in -n..=n {
                cur[(col + span as i64) as usize] = n;
            }
            let (mut lo, mut hi) = (span - n as usize, span + n as usize);
            for k in 0..steps {
                let new_lo = lo - 1;
                let new_hi = hi + 1;
                for i in new_lo..=new_hi {
                    let left = if i > 0 { cur[i - 1] } else { i64::MIN };
                    let right = if i + 1 < width { cur[i + 1] } else { i64::MIN };
                    let mid = cur[i];
                    let up = if mid != i64::MIN {
                        let col = i as i64 - span as i64;
                        mid + rng::bernoulli(
                            1.0 - zeta,
                            &[domain::GROWTH, seed, rep, k, rng::signed_word(col)],
                        ) as i64
                    } else {
                        i64::MIN
                    };
                    next[i] = left.max(up).max(right);
                }
                std::mem::swap(&mut cur, &mut next);
                lo = new_lo;
                hi = new_hi;
            }
            let max = cur[lo..=hi].iter().copied().max().unwrap_or(i64::MIN);
            (max > beta_g * n) as u64
        })
        .sum();
    GrowthTailReport {
        n,
        zeta,
        beta_g,
        replicas,
        failures,
    }
}

// ---------------------------------------------------------------------------
// Two-step chain domination

#[derive(Debug, Clone)]
pub struct ChainDominationReport {
    pub instances: u64,
    pub hypothesis_failures: u64,
    pub conclusion_failures: u64,
}

pub fn chain_domination_report(instances: u64, seed: u64) -> ChainDominationReport {
    let mut hypothesis_failures = 0;
    let mut conclusion_failures = 0;
    for i in 0..instances {
        let pair = random_dominating_chain_pair(seed, i);
        if !pair.satisfies_hypotheses() {
            hypothesis_failures += 1;
            continue;
        }
        let x1 = pair.marginal_next(&pair.x0);
        let y1 = pair.marginal_next(&pair.y0);
        if !check_stochastic_domination(&x1, &y1) {
            conclusion_failures += 1;
        }
    }
    ChainDominationReport {
        instances,
        hypothesis_failures,
        conclusion_failures,
    }
}

// ---------------------------------------------------------------------------
// Criticality contrast and highly inhomogeneous crossings

#[derive(Debug, Clone)]
pub struct RadiusTailPoint {
    pub kappa: f64,
    pub p: f64,
    pub trials: u64,
    pub hits: u64,
    pub estimate: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

#[derive(Debug, Clone)]
pub struct CriticalityContrastReport {
    pub radius: f64,
    pub points: Vec<RadiusTailPoint>,
    pub strictly_increasing_disjoint: bool,
}

/// Root of `3p - p^3 - 1 = kappa` in (0, 1) by bisection.
pub fn homogeneous_root_for_kappa(kappa: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 3.0 * mid - mid * mid * mid - 1.0 < kappa {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `P(rad >= radius)` for homogeneous triangular percolation at three
/// kappa offsets around the critical surface.
pub fn criticality_contrast_report(
    kappas: &[f64],
    radius: f64,
    trials: u64,
    seed: u64,
) -> Result<CriticalityContrastReport> {
    let half = radius + 3.0 * SQRT3;
    let lattice = build_lattice(
        LatticeKind::PureTriangular,
        Rect::new(-half, half, -half, half),
        None,
    )?;
    let origin = VertexId::node(0, 0);
    let mut points = Vec::new();
    for (i, &kappa) in kappas.iter().enumerate() {
        let p = homogeneous_root_for_kappa(kappa);
        let params = assign_params(&lattice, &ParamSpec::Triplet(Triplet::new(p, p, p)))?;
        let samples = crate::crossing::cluster_stats(
            &lattice,
            &params,
            &origin,
            trials,
            radius,
            seed + i as u64,
        )?;
        let hits = samples.iter().filter(|s| s.reached_cap).count() as u64;
        let (lo, hi) = wilson95(hits, trials);
        points.push(RadiusTailPoint {
            kappa,
            p,
            trials,
            hits,
            estimate: hits as f64 / trials as f64,
            wilson_lo: lo,
            wilson_hi: hi,
        });
    }
    let mut ok = true;
    for w in points.windows(2) {
        if !(w[0].estimate < w[1].estimate && w[0].wilson_hi < w[1].wilson_lo) {
            ok = false;
        }
    }
    Ok(CriticalityContrastReport {
        radius,
        points,
        strictly_increasing_disjoint: ok,
    })
}

#[derive(Debug, Clone)]
pub struct HimCrossingRow {
    pub n: u64,
    pub direction: Direction,
    pub box_spec: BoxSpec,
    pub estimate: CrossingEstimate,
}

#[derive(Debug, Clone)]
pub struct HimCrossingReport {
    pub p: f64,
    pub beta: f64,
    pub rows: Vec<HimCrossingRow>,
    pub min_estimate: f64,
}

/// Crossing estimates for a highly inhomogeneous triangular profile with
/// `q_n` uniform on `[q_lo, q_hi]` and every row completed to the self-dual
/// surface.
pub fn him_crossing_report(
    p: f64,
    q_lo: f64,
    q_hi: f64,
    sizes: &[u64],
    trials: u64,
    seed: u64,
) -> Result<HimCrossingReport> {
    let beta = beta_const(p);
    let mut rows = Vec::new();
    let mut min_estimate = f64::INFINITY;
    for (i, &n) in sizes.iter().enumerate() {
        let nf = n as f64;
        let top_row = (nf / 1.5).ceil() as i64 + 2;
        let q: Vec<f64> = (-2..=top_row)
            .map(|row| {
                q_lo + (q_hi - q_lo)
                    * rng::uniform(&[domain::GENERIC, 0x68696d, seed, rng::signed_word(row)])
            })
            .collect();
        let profile = HeightProfile::self_dual_from_q(p, -2, q)?;
        let half = 3.0 * nf + 3.0 * SQRT3;
        let lattice = build_lattice(
            LatticeKind::PureTriangular,
            Rect::new(-half, half, -3.4, nf + 3.4),
            None,
        )?;
        let params = assign_params(&lattice, &ParamSpec::TriProfile(profile))?;
        for (direction, box_spec) in [
            (Direction::Horizontal, BoxSpec::centered(3.0 * nf, nf)),
            (Direction::Vertical, BoxSpec::centered(nf, beta * nf)),
        ] {
            let estimate = estimate_crossing(
                &lattice,
                &params,
                &box_spec,
                direction,
                trials,
                seed + 17 * i as u64,
            )?;
            min_estimate = min_estimate.min(estimate.point);
            rows.push(HimCrossingRow {
                n,
                direction,
                box_spec,
                estimate,
            });
        }
    }
    Ok(HimCrossingReport {
        p,
        beta,
        rows,
        min_estimate,
    })
}

// ---------------------------------------------------------------------------
// Column-growth coupling check (up sweeps)

#[derive(Debug, Clone, Default)]
pub struct ColumnGrowthReport {
    pub paths: u64,
    pub columns_checked: u64,
    /// `H_n(image) > max(H_{n-1}, H_n + 1, H_{n+1})`.
    pub hard_bound_violations: u64,
    /// Growth beyond invasion without a qualifying fired auxiliary pair.
    pub coupling_violations: u64,
    /// `H_n(T(path)) != H_n(path)` (the T step must not change heights).
    pub t_height_changes: u64,
}

/// Per-sample check of the column-growth control under one up composite:
/// heights obey the max-recursion bound, and any growth beyond invasion is
/// witnessed by a horizontal star whose auxiliary pair fired.
pub fn column_growth_report(paths: u64, seed: u64) -> Result<ColumnGrowthReport> {
    let lattice = Arc::new(build_lattice(
        LatticeKind::MixedTriangular,
        Rect::new(-16.0, 16.0, -3.0, 14.0),
        Some(0),
    )?);
    let triplet = Triplet::symmetric_self_dual(0.5)?;
    let params = assign_params(&lattice, &ParamSpec::Triplet(triplet))?;
    let mut report = ColumnGrowthReport::default();
    for trial in 0..paths {
        let config = sample_configuration(&lattice, &params, seed, trial);
        let path = random_open_path(&lattice, &config, seed, trial, 16);
        let interior = path.vertices.iter().all(|&v| {
            let p = lattice.position(v);
            p.x.abs() < 10.0 && p.y > 0.9 && p.y < 10.0
        });
        if !interior || path.len() < 2 {
            continue;
        }
        let staged = StagedPath::from_path(&lattice, &path)?;
        let t_out = transform_once(
            lattice.clone(),
            &params,
            &config,
            SweepOp::TDown,
            seed,
            trial,
        )?;
        let (mid, _) = transport_path(&t_out.plan, &t_out.config, &staged)?;
        let s_out = transform_chain(&t_out, SweepOp::SUp, seed, trial)?;
        let (fin, _) = transport_path(&s_out.plan, &s_out.config, &mid)?;

        report.paths += 1;
        let h0 = column_heights(&staged.polyline.points);
        let h_mid = column_heights(&mid.polyline.points);
        let h1 = column_heights(&fin.polyline.points);
        for (&n, &h) in &h_mid {
            let before = h0.get(&n).copied().unwrap_or(f64::NEG_INFINITY);
            if (h - before).abs() > 1e-9 {
                report.t_height_changes += 1;
            }
        }

        // edge set of the mid path, to identify horizontal stars
        let mut mid_edges = std::collections::HashSet::new();
        let mid_lat = t_out.plan.img_lattice();
        for w in mid.path.vertices.windows(2) {
            if w[0] != w[1] {
                mid_edges.insert(mid_lat.edge_between(w[0], w[1]).unwrap());
            }
        }
        let z_pairs = s_out.z_pairs.as_ref().expect("star step records z pairs");
        // horizontal stars: consumed cells with both arms on the mid path
        let mut horizontal_stars = Vec::new();
        for (ci, cell) in s_out.plan.cells().iter().enumerate() {
            if mid_edges.contains(&cell.src_edges[1]) && mid_edges.contains(&cell.src_edges[2]) {
                let g = s_out
                    .plan
                    .src_lattice()
                    .position(cell.center_src.expect("star cell"));
                horizontal_stars.push((g, z_pairs[ci]));
            }
        }

        let neg = f64::NEG_INFINITY;
        for (&n, &h_after) in &h1 {
            report.columns_checked += 1;
            let hm = |k: i64| h0.get(&k).copied().unwrap_or(neg);
            let bound = hm(n - 1).max(hm(n) + 1.0).max(hm(n + 1));
            if h_after > bound + 1e-9 {
                report.hard_bound_violations += 1;
                continue;
            }
            let invasion = hm(n - 1).max(hm(n)).max(hm(n + 1));
            if h_after > invasion + 1e-9 {
                // growth beyond invasion: some horizontal star at the top of
                // this column must have both auxiliaries fired
                let col_mid_height = h_mid.get(&n).copied().unwrap_or(neg);
                let witnessed = horizontal_stars.iter().any(|&(g, (zl, zr))| {
                    let in_column = g.x > n as f64 * SQRT3 - SQRT3 / 2.0 - 1e-9
                        && g.x < (n + 1) as f64 * SQRT3 + SQRT3 / 2.0 + 1e-9;
                    in_column && (g.y - col_mid_height).abs() < 1e-9 && zl && zr
                });
                if !witnessed {
                    report.coupling_violations += 1;
                }
            }
        }
    }
    Ok(report)
}

// ---------------------------------------------------------------------------

/// Wilson interval helper re-exported for experiment summaries.
pub fn wilson(successes: u64, trials: u64) -> (f64, f64) {
    wilson95(successes, trials)
}

/// Variance-free helper: z-score of an observed frequency against a target.
pub fn freq_z(observed: u64, trials: u64, expected: f64) -> f64 {
    let p = observed as f64 / trials as f64;
    let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
    if sigma == 0.0 {
        if p == expected {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (p - expected) / sigma
    }
}
