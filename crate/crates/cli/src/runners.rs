//! Per-experiment runners: translate a parsed config into engine calls,
//! CSV rows, and pass/fail verdicts.

use anyhow::{anyhow, bail, Result};

use startri::crossing::{brute_force_crossing, BoxSpec, Direction};
use startri::experiments as ex;
use startri::lattice::{build_lattice, LatticeKind, MixedLattice};
use startri::params::{assign_params, HeightProfile, ParamMap, ParamSpec, SquareProfile, Triplet};
use startri::{beta_const, eta_const, Rect};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::report::{content_hash, fmt_f64, Csv, Verdict};

pub struct RunOutput {
    pub csv: Csv,
    pub verdicts: Vec<Verdict>,
}

pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    match config.experiment {
        ExperimentKind::VerifyKernel => run_verify_kernel(config),
        ExperimentKind::Crossing => run_crossing(config),
        ExperimentKind::Transport => run_transport(config),
        ExperimentKind::HeightProcess => run_height_process(config),
        ExperimentKind::Growth => run_growth(config),
        ExperimentKind::Cluster => run_cluster(config),
        ExperimentKind::Domination => run_domination(config),
    }
}

fn run_verify_kernel(config: &ExperimentConfig) -> Result<RunOutput> {
    match config.get("mode").unwrap_or("cells") {
        "cells" => run_verify_kernel_cells(config),
        "sweep" => run_verify_kernel_sweep(config),
        other => bail!("unknown verify-kernel mode `{other}`"),
    }
}

/// Lattice-level law preservation: the empirical distribution of one
/// composite sweep on a small mixed patch against the exact product law.
fn run_verify_kernel_sweep(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let trials = config.u64("trials")?;
    let p0 = config.f64_or("p0", 0.5)?;
    let report = match config.get("pair").unwrap_or("down") {
        "down" => ex::sweep_law_report(p0, trials, seed)?,
        "up" => ex::up_sweep_law_report(p0, trials, seed)?,
        other => bail!("unknown sweep pair `{other}`"),
    };
    let mut csv = Csv::new(&["configBits", "expected", "observed", "sigma"]);
    for o in &report.outcomes {
        csv.push(vec![
            o.config_bits.to_string(),
            fmt_f64(o.expected),
            fmt_f64(o.observed),
            fmt_f64(o.sigma),
        ]);
    }
    let verdicts = vec![Verdict::new(
        "sweep_preserves_product_law",
        report.pass,
        format!(
            "{}-edge patch, {}-edge window, worst |z| = {:.2} over {} configurations",
            report.patch_edges,
            report.window_edges,
            report.max_abs_z,
            report.outcomes.len()
        ),
    )];
    Ok(RunOutput { csv, verdicts })
}

fn run_verify_kernel_cells(config: &ExperimentConfig) -> Result<RunOutput> {
    let points = config.u64_or("grid.points", 100)? as usize;
    let report = ex::kernel_grid_report(points)?;
    let mut csv = Csv::new(&[
        "p0",
        "p1",
        "p2",
        "maxLawError",
        "roundTripError",
        "connectionsPreserved",
    ]);
    for row in &report.rows {
        csv.push(vec![
            fmt_f64(row.triplet.p0),
            fmt_f64(row.triplet.p1),
            fmt_f64(row.triplet.p2),
            fmt_f64(row.max_law_error),
            fmt_f64(row.round_trip_error),
            row.connections_preserved.to_string(),
        ]);
    }
    let verdicts = vec![
        Verdict::new(
            "kernel_law_error",
            report.max_law_error <= 1e-12,
            format!(
                "max law error {:.3e} over {} triplets",
                report.max_law_error, points
            ),
        ),
        Verdict::new(
            "round_trip_law_error",
            report.max_round_trip_error <= 1e-12,
            format!("max round-trip error {:.3e}", report.max_round_trip_error),
        ),
        Verdict::new(
            "connections_preserved",
            report.all_connections_preserved,
            "branch-by-branch connection preservation".to_string(),
        ),
    ];
    Ok(RunOutput { csv, verdicts })
}

pub fn lattice_from_config(config: &ExperimentConfig) -> Result<MixedLattice> {
    let kind = match config.require("lattice.kind")? {
        "pureSquare" => LatticeKind::PureSquare,
        "pureTriangular" => LatticeKind::PureTriangular,
        "pureHexagonal" => LatticeKind::PureHexagonal,
        "mixedTriangular" => LatticeKind::MixedTriangular,
        "mixedHexagonal" => LatticeKind::MixedHexagonal,
        other => bail!("unknown lattice.kind `{other}`"),
    };
    let bounds = Rect::new(
        config.f64("lattice.x0")?,
        config.f64("lattice.x1")?,
        config.f64("lattice.y0")?,
        config.f64("lattice.y1")?,
    );
    let interface = match config.get("lattice.interface") {
        Some(_) => Some(config.i64("lattice.interface")?),
        None => None,
    };
    Ok(build_lattice(kind, bounds, interface)?)
}

pub fn params_from_config(
    config: &ExperimentConfig,
    lattice: &MixedLattice,
) -> Result<(ParamSpec, ParamMap)> {
    let spec = match config.require("params.kind")? {
        "triplet" => {
            let p0 = config.f64("params.p0")?;
            let p1 = config.f64("params.p1")?;
            let p2 = match config.get("params.p2") {
                Some(_) => config.f64("params.p2")?,
                None => startri::complete_self_dual(p0, p1)?,
            };
            ParamSpec::Triplet(Triplet::new(p0, p1, p2))
        }
        "squarePair" => ParamSpec::SquarePair {
            ph: config.f64("params.ph")?,
            pv: config.f64("params.pv")?,
        },
        "triProfile" => {
            let p = config.f64("params.p")?;
            let base_row = config.i64("params.baseRow")?;
            let q = config.f64_list("params.q")?;
            match config.get("params.qPrime") {
                Some(_) => {
                    let q_prime = config.f64_list("params.qPrime")?;
                    if q_prime.len() != q.len() {
                        bail!("params.q and params.qPrime must have equal length");
                    }
                    ParamSpec::TriProfile(HeightProfile {
                        p,
                        base_row,
                        q,
                        q_prime,
                    })
                }
                None => ParamSpec::TriProfile(HeightProfile::self_dual_from_q(p, base_row, q)?),
            }
        }
        "squareProfile" => {
            let base_row = config.i64("params.baseRow")?;
            let q = config.f64_list("params.q")?;
            let q_prime = config.f64_list("params.qPrime")?;
            let epsilon = config.f64_or("params.epsilon", 0.0)?;
            ParamSpec::SquareProfile(SquareProfile {
                base_row,
                q,
                q_prime,
                epsilon,
            })
        }
        other => bail!("unknown params.kind `{other}`"),
    };
    let map = assign_params(lattice, &spec)?;
    Ok((spec, map))
}

fn params_hash(spec: &ParamSpec) -> String {
    content_hash(&format!("{spec:?}"))
}

fn direction_from_config(config: &ExperimentConfig) -> Result<Direction> {
    match config.require("direction")? {
        "horizontal" => Ok(Direction::Horizontal),
        "vertical" => Ok(Direction::Vertical),
        other => Err(anyhow!("unknown direction `{other}`")),
    }
}

fn run_crossing(config: &ExperimentConfig) -> Result<RunOutput> {
    match config.get("mode").unwrap_or("estimate") {
        "estimate" => run_crossing_estimate(config),
        "anchor" => run_crossing_anchor(config),
        "oracle" => run_crossing_oracle(config),
        "inequality" => run_crossing_inequality(config),
        "him" => run_crossing_him(config),
        other => bail!("unknown crossing mode `{other}`"),
    }
}

/// Pin the exact-1/2 rectangle convention by brute force, then estimate the
/// same event at Monte Carlo scale.
fn run_crossing_anchor(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let trials = config.u64("trials")?;
    let n = config.u64_or("n", 16)?;
    let rep = ex::square_anchor_report(n, trials, seed)?;
    let mut csv = Csv::new(&["convention", "n", "value", "kind"]);
    for &(size, p) in &rep.pinned {
        csv.push(vec![
            "widthN+1".into(),
            size.to_string(),
            fmt_f64(p),
            "exact".into(),
        ]);
    }
    for &(size, p) in &rep.transposed {
        csv.push(vec![
            "heightN+1".into(),
            size.to_string(),
            fmt_f64(p),
            "exact".into(),
        ]);
    }
    csv.push(vec![
        "widthN+1".into(),
        n.to_string(),
        fmt_f64(rep.mc.point),
        "mc".into(),
    ]);
    let exact = rep.pinned.iter().all(|&(_, p)| (p - 0.5).abs() <= 1e-12);
    let verdicts = vec![
        Verdict::new(
            "convention_pinned",
            exact,
            format!("exact probabilities {:?}", rep.pinned),
        ),
        Verdict::new(
            "mc_in_band",
            rep.mc.point >= 0.49 && rep.mc.point <= 0.51,
            format!("estimate {:.4} at N = {n}", rep.mc.point),
        ),
    ];
    Ok(RunOutput { csv, verdicts })
}

/// Monte Carlo estimates vs the exhaustive oracle on random small patches.
fn run_crossing_oracle(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let trials = config.u64("trials")?;
    let patches = config.u64_or("patches", 20)? as usize;
    let rep = ex::mc_vs_oracle_report(patches, trials, seed)?;
    let mut csv = Csv::new(&["lattice", "edges", "exact", "estimate", "z"]);
    for c in &rep.cases {
        csv.push(vec![
            c.lattice.into(),
            c.edges.to_string(),
            fmt_f64(c.exact),
            fmt_f64(c.estimate.point),
            fmt_f64(c.z),
        ]);
    }
    let floor = patches.saturating_sub(1);
    let verdicts = vec![Verdict::new(
        "mc_matches_oracle",
        rep.within_3_sigma >= floor,
        format!("{} of {patches} within 3 sigma", rep.within_3_sigma),
    )];
    Ok(RunOutput { csv, verdicts })
}

/// Desk-scale transport inequalities between the square and triangular laws.
fn run_crossing_inequality(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let trials = config.u64("trials")?;
    let n = config.u64_or("n", 8)?;
    let alpha = config.u64_or("alpha", 3)?;
    let reps = ex::transport_inequality_report(n, alpha, trials, seed)?;
    let mut csv = Csv::new(&["inequality", "lhs", "rhs", "combinedSigma", "holds"]);
    let mut verdicts = Vec::new();
    for r in &reps {
        csv.push(vec![
            r.label.into(),
            fmt_f64(r.lhs.point),
            fmt_f64(r.rhs.point),
            fmt_f64(r.combined_sigma),
            r.holds.to_string(),
        ]);
        verdicts.push(Verdict::new(
            r.label,
            r.holds,
            format!(
                "lhs {:.4} >= rhs {:.4} - 3 x {:.4}",
                r.lhs.point, r.rhs.point, r.combined_sigma
            ),
        ));
    }
    Ok(RunOutput { csv, verdicts })
}

/// Crossing floors for a highly inhomogeneous self-dual profile.
fn run_crossing_him(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let trials = config.u64("trials")?;
    let p = config.f64_or("params.p", 0.2)?;
    let q_lo = config.f64_or("params.qLo", 0.2)?;
    let q_hi = config.f64_or("params.qHi", 0.8)?;
    let sizes: Vec<u64> = match config.get("sizes") {
        Some(_) => config
            .f64_list("sizes")?
            .into_iter()
            .map(|x| x as u64)
            .collect(),
        None => vec![8, 16, 32],
    };
    let floor = config.f64_or("expect.min", 0.05)?;
    let rep = ex::him_crossing_report(p, q_lo, q_hi, &sizes, trials, seed)?;
    let mut csv = Csv::new(&[
        "n",
        "direction",
        "boxSpec",
        "trials",
        "successes",
        "estimate",
        "wilsonLo",
        "wilsonHi",
        "seed",
    ]);
    for row in &rep.rows {
        csv.push(vec![
            row.n.to_string(),
            row.direction.name().into(),
            row.box_spec.to_string(),
            row.estimate.trials.to_string(),
            row.estimate.successes.to_string(),
            fmt_f64(row.estimate.point),
            fmt_f64(row.estimate.wilson_lo),
            fmt_f64(row.estimate.wilson_hi),
            seed.to_string(),
        ]);
    }
    let verdicts = vec![Verdict::new(
        "him_crossing_floors",
        rep.min_estimate >= floor,
        format!("minimum estimate {:.4} vs floor {floor}", rep.min_estimate),
    )];
    Ok(RunOutput { csv, verdicts })
}

fn run_crossing_estimate(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let trials = config.u64("trials")?;
    let lattice = lattice_from_config(config)?;
    let (spec, params) = params_from_config(config, &lattice)?;
    let direction = direction_from_config(config)?;
    let box_spec = BoxSpec {
        m: config.f64("box.m")?,
        n: config.f64("box.n")?,
        dx: config.f64_or("box.dx", 0.0)?,
        dy: config.f64_or("box.dy", 0.0)?,
    };
    let estimate = startri::crossing::estimate_crossing(
        &lattice, &params, &box_spec, direction, trials, seed,
    )?;

    let mut csv = Csv::new(&[
        "experiment",
        "lattice",
        "paramsHash",
        "boxSpec",
        "direction",
        "trials",
        "successes",
        "estimate",
        "wilsonLo",
        "wilsonHi",
        "seed",
    ]);
    csv.push(vec![
        "crossing".into(),
        lattice.kind().name().into(),
        params_hash(&spec),
        box_spec.to_string(),
        direction.name().into(),
        trials.to_string(),
        estimate.successes.to_string(),
        fmt_f64(estimate.point),
        fmt_f64(estimate.wilson_lo),
        fmt_f64(estimate.wilson_hi),
        seed.to_string(),
    ]);

    let mut verdicts = Vec::new();
    if config.bool_or("brute", false)? {
        let exact = brute_force_crossing(&lattice, &params, &box_spec, direction)?;
        let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
        let pass = (estimate.point - exact).abs() <= 3.0 * sigma || sigma == 0.0;
        verdicts.push(Verdict::new(
            "mc_matches_oracle",
            pass,
            format!(
                "exact {exact:.6}, estimate {:.6}, 3 sigma {:.6}",
                estimate.point,
                3.0 * sigma
            ),
        ));
    }
    if config.get("expect.min").is_some() {
        let min = config.f64("expect.min")?;
        verdicts.push(Verdict::new(
            "estimate_at_least",
            estimate.point >= min,
            format!("estimate {:.6} vs floor {min}", estimate.point),
        ));
    }
    if config.get("expect.max").is_some() {
        let max = config.f64("expect.max")?;
        verdicts.push(Verdict::new(
            "estimate_at_most",
            estimate.point <= max,
            format!("estimate {:.6} vs ceiling {max}", estimate.point),
        ));
    }
    Ok(RunOutput { csv, verdicts })
}

fn run_transport(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let paths = config.u64("paths")?;
    let report = ex::transport_drift_report(paths, seed)?;
    let mut csv = Csv::new(&["metric", "value"]);
    csv.push(vec!["pathsTransported".into(), report.paths.to_string()]);
    csv.push(vec!["tTransports".into(), report.t_transports.to_string()]);
    csv.push(vec!["sTransports".into(), report.s_transports.to_string()]);
    csv.push(vec!["composites".into(), report.composites.to_string()]);
    csv.push(vec!["maxTBound".into(), fmt_f64(report.max_t_bound)]);
    csv.push(vec!["maxSBound".into(), fmt_f64(report.max_s_bound)]);
    csv.push(vec![
        "maxCompositeBound".into(),
        fmt_f64(report.max_composite_bound),
    ]);
    csv.push(vec![
        "boundViolations".into(),
        report.bound_violations.to_string(),
    ]);
    csv.push(vec![
        "opennessViolations".into(),
        report.openness_violations.to_string(),
    ]);
    let verdicts = vec![
        Verdict::new(
            "drift_bounds",
            report.bound_violations == 0,
            format!(
                "max bounds: T {:.4}, S {:.4}, composite {:.4} over {} paths",
                report.max_t_bound, report.max_s_bound, report.max_composite_bound, report.paths
            ),
        ),
        Verdict::new(
            "transported_paths_open",
            report.openness_violations == 0,
            format!("{} openness violations", report.openness_violations),
        ),
    ];
    Ok(RunOutput { csv, verdicts })
}

fn run_height_process(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let p0 = config.f64("p0")?;
    let n = config.u64("n")? as usize;
    let replicas = config.u64("replicas")?;
    let report = ex::height_process_report(p0, n, replicas, seed)?;
    let mut csv = Csv::new(&["replica", "step", "h", "truncationHit", "seed"]);
    for row in &report.rows {
        csv.push(vec![
            row.replica.to_string(),
            row.step.to_string(),
            fmt_f64(row.h),
            row.cap_hit.to_string(),
            seed.to_string(),
        ]);
    }
    let uplift_freq = report.uplifts as f64 / report.transitions.max(1) as f64;
    let sigma = (uplift_freq * (1.0 - uplift_freq) / report.transitions.max(1) as f64).sqrt();
    let walk = ex::walk_domination_report(&report, seed ^ 0x57414c4b);
    let verdicts = vec![
        Verdict::new(
            "limited_decrease",
            report.decrease_violations == 0,
            format!(
                "{} violations in {} transitions",
                report.decrease_violations, report.transitions
            ),
        ),
        Verdict::new(
            "uplift_frequency",
            uplift_freq >= beta_const(p0) - 3.0 * sigma,
            format!("frequency {uplift_freq:.4} vs beta {:.4}", beta_const(p0)),
        ),
        Verdict::new(
            "walk_domination",
            walk.worst_margin >= 0.0,
            format!(
                "worst survival margin {:.4} over {} thresholds ({} valid replicas)",
                walk.worst_margin,
                walk.thresholds.len(),
                walk.replicas
            ),
        ),
    ];
    Ok(RunOutput { csv, verdicts })
}

fn run_growth(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let mode = config.require("mode")?;
    if !matches!(mode, "fpt" | "tail" | "full") {
        bail!("unknown growth mode `{mode}`");
    }
    let mut csv = Csv::new(&["metric", "value"]);
    let mut verdicts = Vec::new();
    if matches!(mode, "fpt" | "full") {
        let instances = config.u64_or("instances", 1000)?;
        let report = ex::growth_fpt_report(instances, seed)?;
        csv.push(vec!["instances".into(), report.instances.to_string()]);
        csv.push(vec!["mismatches".into(), report.mismatches.to_string()]);
        verdicts.push(Verdict::new(
            "fpt_equals_growth",
            report.mismatches == 0,
            format!(
                "{} mismatching instances of {}",
                report.mismatches, report.instances
            ),
        ));
    }
    if matches!(mode, "tail" | "full") {
        let n = config.u64_or("n", 20)? as i64;
        let p0 = config.f64_or("p0", 0.5)?;
        let replicas = config.u64_or("replicas", 10_000)?;
        let zeta = eta_const(p0);
        let report = ex::growth_tail_report(n, zeta, replicas, seed);
        csv.push(vec!["n".into(), n.to_string()]);
        csv.push(vec!["zeta".into(), fmt_f64(zeta)]);
        csv.push(vec!["betaG".into(), report.beta_g.to_string()]);
        csv.push(vec!["replicas".into(), report.replicas.to_string()]);
        csv.push(vec!["failures".into(), report.failures.to_string()]);
        verdicts.push(Verdict::new(
            "growth_tail",
            report.failures == 0,
            format!(
                "{} of {} replicas exceeded height {} in {} steps",
                report.failures,
                report.replicas,
                report.beta_g * n,
                report.beta_g * n
            ),
        ));
    }
    Ok(RunOutput { csv, verdicts })
}

fn run_cluster(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let trials = config.u64("trials")?;
    let radius = config.f64("radiusCap")?;
    let kappas = config.f64_list("kappas")?;
    let report = ex::criticality_contrast_report(&kappas, radius, trials, seed)?;
    let mut csv = Csv::new(&[
        "kappa", "p", "trials", "hits", "estimate", "wilsonLo", "wilsonHi", "seed",
    ]);
    for point in &report.points {
        csv.push(vec![
            fmt_f64(point.kappa),
            fmt_f64(point.p),
            point.trials.to_string(),
            point.hits.to_string(),
            fmt_f64(point.estimate),
            fmt_f64(point.wilson_lo),
            fmt_f64(point.wilson_hi),
            seed.to_string(),
        ]);
    }
    let mut verdicts = Vec::new();
    if config.bool_or("contrast", kappas.len() > 1)? {
        verdicts.push(Verdict::new(
            "radius_tail_contrast",
            report.strictly_increasing_disjoint,
            format!(
                "estimates {:?}",
                report.points.iter().map(|p| p.estimate).collect::<Vec<_>>()
            ),
        ));
    }
    Ok(RunOutput { csv, verdicts })
}

fn run_domination(config: &ExperimentConfig) -> Result<RunOutput> {
    let seed = config.u64("seed")?;
    let instances = config.u64("instances")?;
    let report = ex::chain_domination_report(instances, seed);
    let mut csv = Csv::new(&["metric", "value"]);
    csv.push(vec!["instances".into(), report.instances.to_string()]);
    csv.push(vec![
        "hypothesisFailures".into(),
        report.hypothesis_failures.to_string(),
    ]);
    csv.push(vec![
        "conclusionFailures".into(),
        report.conclusion_failures.to_string(),
    ]);
    let verdicts = vec![
        Verdict::new(
            "hypotheses_hold",
            report.hypothesis_failures == 0,
            format!(
                "{} constructed instances violate the hypotheses",
                report.hypothesis_failures
            ),
        ),
        Verdict::new(
            "domination_concluded",
            report.conclusion_failures == 0,
            format!("{} instances fail X1 <=st Y1", report.conclusion_failures),
        ),
    ];
    Ok(RunOutput { csv, verdicts })
}
