//! Sweep-level properties: interface bookkeeping, per-sample connection
//! preservation, determinism, and the empirical product-law check.

use std::sync::Arc;

use startri::lattice::{build_lattice, HexVariant, LatticeKind};
use startri::params::{
    assign_params, complete_self_dual, sample_configuration, Configuration, HeightProfile,
    ParamSpec, Triplet,
};
use startri::transform::{SweepPair, SweepPlan};
use startri::{experiments, Rect, SQRT3};

fn patch(interface: i64) -> Arc<startri::MixedLattice> {
    Arc::new(
        build_lattice(
            LatticeKind::MixedTriangular,
            Rect::new(-8.0, 8.0, -4.0, 8.0),
            Some(interface),
        )
        .unwrap(),
    )
}

fn sd(p0: f64) -> Triplet {
    Triplet::symmetric_self_dual(p0).unwrap()
}

#[test]
fn interface_bookkeeping_down_and_up() {
    let lat = patch(2);
    let params = assign_params(&lat, &ParamSpec::Triplet(sd(0.5))).unwrap();
    let plan = SweepPlan::new(lat.clone(), &params, SweepPair::Down, 2).unwrap();
    // T keeps the interface, S moves it down by one
    let steps = plan.steps();
    assert_eq!(steps[0].img_lattice().interface(), Some(2));
    assert_eq!(steps[0].img_lattice().kind(), LatticeKind::MixedHexagonal);
    assert_eq!(
        steps[0].img_lattice().hex_variant(),
        Some(HexVariant::DownStars)
    );
    assert_eq!(steps[1].img_lattice().interface(), Some(1));
    assert_eq!(steps[1].img_lattice().kind(), LatticeKind::MixedTriangular);
    assert_eq!(steps[3].img_lattice().interface(), Some(0));

    let plan = SweepPlan::new(lat, &params, SweepPair::Up, 2).unwrap();
    let steps = plan.steps();
    assert_eq!(
        steps[0].img_lattice().hex_variant(),
        Some(HexVariant::UpStars)
    );
    assert_eq!(steps[1].img_lattice().interface(), Some(3));
    assert_eq!(steps[3].img_lattice().interface(), Some(4));
}

#[test]
fn sweep_margin_validation() {
    let lat = patch(2);
    let params = assign_params(&lat, &ParamSpec::Triplet(sd(0.5))).unwrap();
    // bottom bound is -4: at most 5 down steps keep a square row below
    assert!(SweepPlan::new(lat.clone(), &params, SweepPair::Down, 5).is_ok());
    assert!(SweepPlan::new(lat.clone(), &params, SweepPair::Down, 6).is_err());
    assert!(SweepPlan::new(lat, &params, SweepPair::Up, 7).is_err());
}

#[test]
fn all_open_maps_to_all_open_under_t() {
    // Rows of the triangle kernel with two or more open edges are
    // deterministic to the all-open star; the star kernel's all-open row is
    // the random one, so only the T half-step preserves all-open.
    let lat = patch(2);
    let params = assign_params(&lat, &ParamSpec::Triplet(sd(0.4))).unwrap();
    let plan = SweepPlan::new(lat.clone(), &params, SweepPair::Down, 1).unwrap();
    let trace = plan.run(Configuration::all_open(lat.edge_count()), 5, 0, false);
    let t_step = &plan.steps()[0];
    let config = &trace.configs[0];
    let artifacts: std::collections::HashSet<u32> =
        t_step.artifact_img_edges().iter().copied().collect();
    for e in 0..t_step.img_lattice().edge_count() as u32 {
        if artifacts.contains(&e) {
            assert!(!config.get(e), "artifact edges stay closed");
        } else {
            assert!(
                config.get(e),
                "written edges stay open under an all-open input"
            );
        }
    }
    // the S half-step keeps every surviving vertex connected to the rest
    let s_step = &plan.steps()[1];
    let out = &trace.configs[1];
    for cell in s_step.cells() {
        let open = cell.img_edges.iter().filter(|&&e| out.get(e)).count();
        assert!(open >= 2, "an all-open star keeps its exteriors connected");
    }
}

#[test]
fn determinism_and_trial_independence() {
    let lat = patch(2);
    let params = assign_params(&lat, &ParamSpec::Triplet(sd(0.5))).unwrap();
    let plan = SweepPlan::new(lat.clone(), &params, SweepPair::Down, 2).unwrap();
    let c0 = sample_configuration(&lat, &params, 7, 3);
    let a = plan.run(c0.clone(), 7, 3, true);
    let b = plan.run(c0.clone(), 7, 3, true);
    assert_eq!(a.configs, b.configs);
    assert_eq!(a.z_records, b.z_records);
    let c = plan.run(c0, 7, 4, false);
    assert_ne!(
        a.configs, c.configs,
        "different trials use different randomness"
    );
}

/// Connectivity among surviving vertices is preserved exactly, step by step,
/// once boundary-dropped edges are set aside on the source side.
#[test]
fn connection_preservation_per_sample() {
    let lat = patch(2);
    let params = assign_params(&lat, &ParamSpec::Triplet(sd(0.5))).unwrap();
    let plan = SweepPlan::new(lat.clone(), &params, SweepPair::Down, 2).unwrap();

    struct Dsu(Vec<u32>);
    impl Dsu {
        fn new(n: usize) -> Dsu {
            Dsu((0..n as u32).collect())
        }
        fn find(&mut self, mut x: u32) -> u32 {
            while self.0[x as usize] != x {
                self.0[x as usize] = self.0[self.0[x as usize] as usize];
                x = self.0[x as usize];
            }
            x
        }
        fn union(&mut self, a: u32, b: u32) {
            let (ra, rb) = (self.find(a), self.find(b));
            if ra != rb {
                self.0[rb as usize] = ra;
            }
        }
    }

    for trial in 0..40u64 {
        let mut config = sample_configuration(&lat, &params, 11, trial);
        let mut src = lat.clone();
        for (i, step) in plan.steps().iter().enumerate() {
            let (next, _) = step.apply(&config, 11, trial, i as u64, false);
            let img = step.img_lattice().clone();

            let dropped: std::collections::HashSet<u32> =
                step.dropped_src_edges().iter().copied().collect();
            let mut dsu_src = Dsu::new(src.vertex_count());
            for e in 0..src.edge_count() as u32 {
                if config.get(e) && !dropped.contains(&e) {
                    let rec = src.edge(e);
                    dsu_src.union(rec.a, rec.b);
                }
            }
            let mut dsu_img = Dsu::new(img.vertex_count());
            for e in 0..img.edge_count() as u32 {
                if next.get(e) {
                    let rec = img.edge(e);
                    dsu_img.union(rec.a, rec.b);
                }
            }
            // surviving vertices and their image indices
            let survivors: Vec<(u32, u32)> = (0..src.vertex_count() as u32)
                .filter_map(|v| {
                    let id = step.image_id(src.vertex_id(v));
                    img.vertex_index(&id).map(|iv| (v, iv))
                })
                .collect();
            for (ai, &(sa, ia)) in survivors.iter().enumerate() {
                for &(sb, ib) in survivors.iter().skip(ai + 1) {
                    let before = dsu_src.find(sa) == dsu_src.find(sb);
                    let after = dsu_img.find(ia) == dsu_img.find(ib);
                    assert_eq!(
                        before,
                        after,
                        "connectivity changed at step {i} between {} and {}",
                        src.vertex_id(sa),
                        src.vertex_id(sb)
                    );
                }
            }
            config = next;
            src = img;
        }
    }
}

#[test]
fn sweep_accepts_self_dual_height_profiles() {
    let lat = patch(2);
    // rows 0.. completed to the surface row by row
    let q: Vec<f64> = (0..8).map(|i| 0.15 + 0.04 * i as f64).collect();
    let profile = HeightProfile::self_dual_from_q(0.45, 0, q).unwrap();
    let params = assign_params(&lat, &ParamSpec::TriProfile(profile)).unwrap();
    let plan = SweepPlan::new(lat.clone(), &params, SweepPair::Down, 2).unwrap();
    let config = sample_configuration(&lat, &params, 3, 0);
    let trace = plan.run(config, 3, 0, false);
    assert_eq!(trace.interfaces.last(), Some(&0));
}

#[test]
fn non_self_dual_params_are_rejected() {
    let lat = patch(2);
    let params = assign_params(&lat, &ParamSpec::Triplet(Triplet::new(0.5, 0.5, 0.5))).unwrap();
    assert!(SweepPlan::new(lat, &params, SweepPair::Down, 1).is_err());
}

#[test]
fn sweep_law_smoke() {
    // The full-depth version runs in the acceptance suite; this checks the
    // window construction and a loose agreement bound.
    let report = experiments::sweep_law_report(0.5, 150_000, 12345).unwrap();
    assert_eq!(report.patch_edges, 17);
    assert_eq!(report.window_edges, 6);
    assert!(
        report.max_abs_z < 4.5,
        "law deviates: max |z| = {}",
        report.max_abs_z
    );
    let total: f64 = report.outcomes.iter().map(|o| o.expected).sum();
    assert!(
        (total - 1.0).abs() < 1e-9,
        "window law must be a probability vector"
    );
}

#[test]
fn asymmetric_triplet_preserves_law_shape() {
    // quick guard that the law check is not an artifact of symmetry
    let p1 = 0.2;
    let p2 = complete_self_dual(0.55, p1).unwrap();
    assert!(Triplet::new(0.55, p1, p2).is_self_dual());
}

/// The image parameter map of every step agrees with the six-class rule
/// applied to the image lattice, off boundary artifacts. This cross-checks
/// the entire labeling convention: kernel marginals, cell orientations, and
/// copied intensities all land where the classification says they should.
#[test]
fn image_params_match_class_rules() {
    let triplet = Triplet::new(0.35, 0.2, complete_self_dual(0.35, 0.2).unwrap());
    for pair in [SweepPair::Down, SweepPair::Up] {
        let lat = patch(2);
        let params = assign_params(&lat, &ParamSpec::Triplet(triplet)).unwrap();
        let plan = SweepPlan::new(lat, &params, pair, 2).unwrap();
        for (i, step) in plan.steps().iter().enumerate() {
            let img = step.img_lattice();
            let by_class = assign_params(img, &ParamSpec::Triplet(triplet)).unwrap();
            let artifacts: std::collections::HashSet<u32> =
                step.artifact_img_edges().iter().copied().collect();
            for e in 0..img.edge_count() as u32 {
                if artifacts.contains(&e) {
                    continue;
                }
                assert!(
                    (step.img_params().prob(e) - by_class.prob(e)).abs() < 1e-12,
                    "step {i} ({pair:?}): edge {e} class {:?} carries {} vs rule {}",
                    img.edge(e).class,
                    step.img_params().prob(e),
                    by_class.prob(e)
                );
            }
        }
    }
}

#[test]
fn up_sweep_law_smoke() {
    let report = experiments::up_sweep_law_report(0.45, 150_000, 777).unwrap();
    assert_eq!(report.window_edges, 6);
    assert!(
        report.max_abs_z < 4.5,
        "up-composite law deviates: max |z| = {}",
        report.max_abs_z
    );
}

/// A one-cell patch with the degenerate self-dual triplet (1/2, 1/2, 0):
/// from the all-closed triangle the kernel's random row collapses to a
/// single branch, an image star with only its third arm open.
#[test]
fn degenerate_triplet_transforms_deterministically() {
    use startri::transform::{transform_once, SweepOp};
    let lat = std::sync::Arc::new(
        build_lattice(
            LatticeKind::MixedTriangular,
            Rect::new(-0.1, SQRT3 + 0.1, -0.1, 1.6),
            Some(0),
        )
        .unwrap(),
    );
    let cells = lat.enumerate_cells(startri::CellKind::UpTriangle).unwrap();
    assert_eq!(cells.len(), 1);
    let params =
        assign_params(&lat, &ParamSpec::Triplet(Triplet::new(0.5, 0.5, 0.0))).unwrap();
    let all_closed = Configuration::all_closed(lat.edge_count());
    for seed in 0..20u64 {
        let out = transform_once(lat.clone(), &params, &all_closed, SweepOp::TUp, seed, 0)
            .unwrap();
        let cell = &out.plan.cells()[0];
        assert!(!out.config.get(cell.img_edges[0]), "s0 stays closed");
        assert!(!out.config.get(cell.img_edges[1]), "s1 stays closed");
        assert!(out.config.get(cell.img_edges[2]), "only s2 opens, whatever the draw");
    }
}
