//! Single-cell kernels of the star-triangle coupling and their exact
//! verification.
//!
//! The kernel tables are reconstructed from three constraints rather than
//! transcribed: the maps are deterministic except on the all-closed triangle
//! (for T) and the all-open star (for S); they preserve the connection
//! partition of the three exterior vertices branch by branch; and they push
//! the triangle product law with intensities `p` to the star product law
//! with intensities `1 - p`. [`verify_star_triangle`] certifies the
//! reconstruction by exhaustive enumeration.
//!
//! Cell configurations use bit `i` for edge `i` (triangle edge `e_i` or star
//! edge `s_i`), with the labeling conventions of the lattice module.

use crate::error::{Error, Result};
use crate::params::{Triplet, SELF_DUAL_TOL};

/// Three edge states of a triangle or star cell; bit `i` = edge `i` open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellConfig(pub u8);

impl CellConfig {
    pub const ALL_CLOSED: CellConfig = CellConfig(0);
    pub const ALL_OPEN: CellConfig = CellConfig(0b111);

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    #[inline]
    pub fn count_open(&self) -> u32 {
        self.0.count_ones()
    }

    pub fn all() -> impl Iterator<Item = CellConfig> {
        (0u8..8).map(CellConfig)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFamily {
    Triangle,
    Star,
}

/// Full outcome distribution of a kernel applied to one input configuration.
/// Outcomes are listed in a fixed, documented order (see [`apply_kernel`]),
/// and deterministic rows carry a single outcome of probability one.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDistribution {
    pub outcomes: Vec<(CellConfig, f64)>,
}

impl KernelDistribution {
    fn deterministic(out: CellConfig) -> KernelDistribution {
        KernelDistribution {
            outcomes: vec![(out, 1.0)],
        }
    }

    pub fn total(&self) -> f64 {
        self.outcomes.iter().map(|(_, p)| p).sum()
    }

    pub fn prob_of(&self, config: CellConfig) -> f64 {
        self.outcomes
            .iter()
            .filter(|(c, _)| *c == config)
            .map(|(_, p)| p)
            .sum()
    }
}

/// Partition of the three exterior vertices {A, B, C} induced by open
/// connectivity within the cell. Stored as normalized block labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ConnectionPartition(pub [u8; 3]);

impl ConnectionPartition {
    fn normalize(blocks: [u8; 3]) -> ConnectionPartition {
        let mut map = [u8::MAX; 3];
        let mut next = 0u8;
        let mut out = [0u8; 3];
        for i in 0..3 {
            let b = blocks[i] as usize;
            if map[b] == u8::MAX {
                map[b] = next;
                next += 1;
            }
            out[i] = map[b];
        }
        ConnectionPartition(out)
    }

    pub fn singletons() -> ConnectionPartition {
        ConnectionPartition([0, 1, 2])
    }

    pub fn all_connected() -> ConnectionPartition {
        ConnectionPartition([0, 0, 0])
    }
}

/// Connectivity among {A, B, C} within a single cell: through the open
/// triangle edges, or through the centre for a star.
pub fn connection_partition(config: CellConfig, family: CellFamily) -> ConnectionPartition {
    let mut blocks = [0u8, 1, 2];
    let mut unite = |a: usize, b: usize| {
        let (ba, bb) = (blocks[a], blocks[b]);
        if ba != bb {
            for x in blocks.iter_mut() {
                if *x == bb {
                    *x = ba;
                }
            }
        }
    };
    match family {
        CellFamily::Triangle => {
            // e_i joins the two vertices other than i
            if config.get(0) {
                unite(1, 2);
            }
            if config.get(1) {
                unite(0, 2);
            }
            if config.get(2) {
                unite(0, 1);
            }
        }
        CellFamily::Star => {
            // s_i joins vertex i to the centre
            let open: Vec<usize> = (0..3).filter(|&i| config.get(i)).collect();
            for w in open.windows(2) {
                unite(w[0], w[1]);
            }
        }
    }
    ConnectionPartition::normalize(blocks)
}

fn check_self_dual(p: &Triplet) -> Result<()> {
    let kappa = p.kappa();
    if kappa.abs() > SELF_DUAL_TOL {
        return Err(Error::KernelUndefined { kappa });
    }
    if p.as_array().iter().any(|&x| !(0.0..1.0).contains(&x)) {
        return Err(Error::KernelUndefined { kappa });
    }
    Ok(())
}

#[inline]
fn p_product(p: &Triplet) -> f64 {
    (1.0 - p.p0) * (1.0 - p.p1) * (1.0 - p.p2)
}

/// Probability of a triangle configuration under the product law with
/// intensities `p`.
pub fn triangle_weight(config: CellConfig, p: &Triplet) -> f64 {
    let ps = p.as_array();
    (0..3)
        .map(|i| if config.get(i) { ps[i] } else { 1.0 - ps[i] })
        .product()
}

/// Probability of a star configuration under the product law with
/// intensities `1 - p`.
pub fn star_weight(config: CellConfig, p: &Triplet) -> f64 {
    let ps = p.as_array();
    (0..3)
        .map(|i| if config.get(i) { 1.0 - ps[i] } else { ps[i] })
        .product()
}

/// Branch probabilities of the random rows, indexed 0..=3:
/// entry 0 is the homogeneous branch (all-closed star for T, all-open
/// triangle for S), entry `i+1` singles out edge `i`.
fn random_row(p: &Triplet) -> [f64; 4] {
    let prod = p_product(p);
    let [p0, p1, p2] = p.as_array();
    [
        p0 * p1 * p2 / prod,
        (1.0 - p0) * p1 * p2 / prod,
        (1.0 - p1) * p0 * p2 / prod,
        (1.0 - p2) * p0 * p1 / prod,
    ]
}

/// Kernel T: triangle configuration to a distribution over star
/// configurations. Requires a self-dual `p` with all entries below 1.
pub fn kernel_t_distribution(omega: CellConfig, p: &Triplet) -> Result<KernelDistribution> {
    check_self_dual(p)?;
    Ok(match omega.count_open() {
        2 | 3 => KernelDistribution::deterministic(CellConfig::ALL_OPEN),
        1 => {
            let i = (0..3).find(|&i| omega.get(i)).unwrap();
            KernelDistribution::deterministic(CellConfig(0b111 & !(1 << i)))
        }
        _ => {
            // all-closed triangle: all-closed star, or a single open arm
            let row = random_row(p);
            KernelDistribution {
                outcomes: vec![
                    (CellConfig::ALL_CLOSED, row[0]),
                    (CellConfig(0b001), row[1]),
                    (CellConfig(0b010), row[2]),
                    (CellConfig(0b100), row[3]),
                ],
            }
        }
    })
}

/// Kernel S: star configuration to a distribution over triangle
/// configurations.
pub fn kernel_s_distribution(omega: CellConfig, p: &Triplet) -> Result<KernelDistribution> {
    check_self_dual(p)?;
    Ok(match omega.count_open() {
        0 | 1 => KernelDistribution::deterministic(CellConfig::ALL_CLOSED),
        2 => {
            let i = (0..3).find(|&i| !omega.get(i)).unwrap();
            KernelDistribution::deterministic(CellConfig(1 << i))
        }
        _ => {
            // all-open star: all-open triangle, or one closed triangle edge
            let row = random_row(p);
            KernelDistribution {
                outcomes: vec![
                    (CellConfig::ALL_OPEN, row[0]),
                    (CellConfig(0b110), row[1]),
                    (CellConfig(0b101), row[2]),
                    (CellConfig(0b011), row[3]),
                ],
            }
        }
    })
}

/// Inverse-CDF sampling in the listed outcome order, so a given uniform
/// yields the same outcome in every implementation of these tables.
pub fn apply_kernel(dist: &KernelDistribution, uniform: f64) -> CellConfig {
    let mut acc = 0.0;
    for &(config, prob) in &dist.outcomes {
        acc += prob;
        if uniform < acc {
            return config;
        }
    }
    dist.outcomes.last().expect("non-empty distribution").0
}

/// Exhaustive verification report for one triplet.
#[derive(Debug, Clone, Copy)]
pub struct StarTriangleReport {
    /// Largest absolute discrepancy between the pushforward law and the
    /// target product law, over both kernel directions and all eight
    /// configurations.
    pub max_law_error: f64,
    /// Whether every branch of both kernels preserves the connection
    /// partition of {A, B, C}.
    pub connections_preserved: bool,
}

/// Verify, by exact enumeration, that T pushes the triangle law to the star
/// law, that S pushes the star law to the triangle law, and that every
/// branch preserves connections.
pub fn verify_star_triangle(p: &Triplet) -> Result<StarTriangleReport> {
    check_self_dual(p)?;
    let mut max_err: f64 = 0.0;
    let mut connections = true;

    let mut push_t = [0.0f64; 8];
    let mut push_s = [0.0f64; 8];
    for omega in CellConfig::all() {
        let w_tri = triangle_weight(omega, p);
        let dist_t = kernel_t_distribution(omega, p)?;
        let before = connection_partition(omega, CellFamily::Triangle);
        for &(out, prob) in &dist_t.outcomes {
            push_t[out.0 as usize] += w_tri * prob;
            if connection_partition(out, CellFamily::Star) != before {
                connections = false;
            }
        }

        let w_star = star_weight(omega, p);
        let dist_s = kernel_s_distribution(omega, p)?;
        let before = connection_partition(omega, CellFamily::Star);
        for &(out, prob) in &dist_s.outcomes {
            push_s[out.0 as usize] += w_star * prob;
            if connection_partition(out, CellFamily::Triangle) != before {
                connections = false;
            }
        }
    }
    for config in CellConfig::all() {
        let i = config.0 as usize;
        max_err = max_err.max((push_t[i] - star_weight(config, p)).abs());
        max_err = max_err.max((push_s[i] - triangle_weight(config, p)).abs());
    }
    Ok(StarTriangleReport {
        max_law_error: max_err,
        connections_preserved: connections,
    })
}

/// Largest discrepancy between the triangle law and its pushforward under
/// T followed by S, by exact enumeration.
pub fn round_trip_law_error(p: &Triplet) -> Result<f64> {
    check_self_dual(p)?;
    let mut acc = [0.0f64; 8];
    for omega in CellConfig::all() {
        let w = triangle_weight(omega, p);
        for &(star, q1) in &kernel_t_distribution(omega, p)?.outcomes {
            for &(tri, q2) in &kernel_s_distribution(star, p)?.outcomes {
                acc[tri.0 as usize] += w * q1 * q2;
            }
        }
    }
    let mut err: f64 = 0.0;
    for config in CellConfig::all() {
        err = err.max((acc[config.0 as usize] - triangle_weight(config, p)).abs());
    }
    Ok(err)
}

/// A deterministic grid of `n >= 4` self-dual triplets covering the surface,
/// including triplets with one zero coordinate and the homogeneous point.
pub fn self_dual_grid(n: usize) -> Vec<Triplet> {
    let mut grid = Vec::with_capacity(n);
    // homogeneous root of 3p - p^3 = 1 by bisection
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 3.0 * mid - mid * mid * mid < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    grid.push(Triplet::new(lo, lo, lo));
    // square-like edge: (x, 1-x, 0)
    let edge_count = n / 4;
    for i in 0..edge_count {
        let x = (i as f64 + 0.5) / edge_count as f64;
        grid.push(Triplet::new(x, 1.0 - x, 0.0));
    }
    // interior sweep: p0 over a grid, p1 a fraction of its admissible range
    let mut i = 0usize;
    while grid.len() < n {
        let t = (i % 17) as f64 / 17.0;
        let s = (i % 23) as f64 / 23.0;
        i += 1;
        let p0 = 0.02 + 0.96 * t;
        let p1 = (1.0 - p0) * (0.02 + 0.96 * s);
        if let Ok(p2) = crate::params::complete_self_dual(p0, p1) {
            grid.push(Triplet::new(p0, p1, p2));
        }
    }
    grid
}
