//! Critical-surface functions, self-dual triplet algebra, the scalar
//! constants used by the growth arguments, parameter assignment, and
//! configuration sampling.

use crate::error::{Error, Result};
use crate::lattice::{EdgeClass, LatticeKind, MixedLattice};
use crate::rng::{self, domain};

/// Tolerance for membership of the self-dual surface. Parameters produced by
/// [`complete_self_dual`] are kept in full precision and land well inside it.
pub const SELF_DUAL_TOL: f64 = 1e-12;

/// A triplet of edge intensities for the triangular family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

impl Triplet {
    pub fn new(p0: f64, p1: f64, p2: f64) -> Self {
        Triplet { p0, p1, p2 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.p0, self.p1, self.p2]
    }

    pub fn kappa(&self) -> f64 {
        kappa_triangular(self)
    }

    pub fn is_self_dual(&self) -> bool {
        self.kappa().abs() <= SELF_DUAL_TOL
    }

    /// The complementary triplet `1 - p`, the natural parameters of the dual
    /// hexagonal measure.
    pub fn complement(&self) -> Triplet {
        Triplet::new(1.0 - self.p0, 1.0 - self.p1, 1.0 - self.p2)
    }

    /// Self-dual triplet `(p0, t, t)` with symmetric side parameters.
    pub fn symmetric_self_dual(p0: f64) -> Result<Triplet> {
        if !(0.0..1.0).contains(&p0) {
            return Err(Error::InvalidProbability(p0));
        }
        // Root of p0 t^2 - 2 t + (1 - p0) = 0 in [0, 1).
        let t = if p0 == 0.0 {
            0.5
        } else {
            (1.0 - (1.0 - p0 * (1.0 - p0)).sqrt()) / p0
        };
        Ok(Triplet::new(p0, t, t))
    }
}

pub fn kappa_square(ph: f64, pv: f64) -> f64 {
    ph + pv - 1.0
}

pub fn kappa_triangular(p: &Triplet) -> f64 {
    p.p0 + p.p1 + p.p2 - p.p0 * p.p1 * p.p2 - 1.0
}

pub fn kappa_hexagonal(p: &Triplet) -> f64 {
    -kappa_triangular(&p.complement())
}

/// Solve `kappa_tri(p0, p1, p2) = 0` for `p2`. Errors when the solution
/// falls outside `[0, 1)`.
pub fn complete_self_dual(p0: f64, p1: f64) -> Result<f64> {
    let denom = 1.0 - p0 * p1;
    let p2 = (1.0 - p0 - p1) / denom;
    if !(0.0..1.0).contains(&p2) || !p2.is_finite() {
        return Err(Error::NoSelfDualCompletion { p2 });
    }
    Ok(p2)
}

/// The constant controlling the chance that the interface-height process
/// does not decrease during a down sweep.
pub fn beta_const(p0: f64) -> f64 {
    (1.0 - (1.0 - p0 * (1.0 - p0)).sqrt()) / (1.0 - p0)
}

/// The column-growth Bernoulli constant; increasing in `x`.
pub fn eta_const(x: f64) -> f64 {
    let s = 1.0 + x - (1.0 - x + x * x).sqrt();
    s * s
}

/// The sharper growth constant available from the side parameters of a
/// self-dual triplet; satisfies `eta_prime >= eta(p0)`.
pub fn eta_prime_const(p1: f64, p2: f64) -> f64 {
    let ratio = (p1 * p2) / ((1.0 - p1) * (1.0 - p2));
    let s = 1.0 - ratio.sqrt();
    s * s
}

/// Auxiliary Bernoulli parameter of the column-growth coupling:
/// `nu = sqrt(1 - nu0)` with `nu0 = 1 - p1 p2 / ((1-p1)(1-p2))`.
pub fn nu_const(p1: f64, p2: f64) -> f64 {
    let ratio = (p1 * p2) / ((1.0 - p1) * (1.0 - p2));
    ratio.max(0.0).min(1.0).sqrt()
}

/// A highly inhomogeneous profile: a fixed horizontal intensity `p` and
/// per-row intensities `q_n` (right edges of up-triangles) and `q'_n`
/// (left edges), for rows `base_row .. base_row + len`.
///
/// Profiles are finite; touching a row outside the stored range is an
/// error, never an implicit extension.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightProfile {
    pub p: f64,
    pub base_row: i64,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
}

impl HeightProfile {
    pub fn lookup(&self, row: i64) -> Result<(f64, f64)> {
        let off = row - self.base_row;
        if off < 0 || off as usize >= self.q.len() || off as usize >= self.q_prime.len() {
            return Err(Error::ProfileRowMissing(row));
        }
        Ok((self.q[off as usize], self.q_prime[off as usize]))
    }

    /// Build a self-dual profile from `p` and the `q_n`, completing each row.
    pub fn self_dual_from_q(p: f64, base_row: i64, q: Vec<f64>) -> Result<HeightProfile> {
        let mut q_prime = Vec::with_capacity(q.len());
        for &qn in &q {
            q_prime.push(complete_self_dual(p, qn)?);
        }
        Ok(HeightProfile {
            p,
            base_row,
            q,
            q_prime,
        })
    }
}

/// Per-row square-lattice profile with an explicit floor `epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareProfile {
    pub base_row: i64,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    pub epsilon: f64,
}

impl SquareProfile {
    fn lookup(&self, row: i64) -> Result<(f64, f64)> {
        let off = row - self.base_row;
        if off < 0 || off as usize >= self.q.len() || off as usize >= self.q_prime.len() {
            return Err(Error::ProfileRowMissing(row));
        }
        Ok((self.q[off as usize], self.q_prime[off as usize]))
    }
}

/// Edge-probability assignment rule for a lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamSpec {
    /// Six-class rule driven by a triplet: horizontal -> p0, vertical ->
    /// 1-p0, right/left triangle edges -> p1/p2, right/left star arms ->
    /// 1-p2/1-p1. Valid on every lattice kind.
    Triplet(Triplet),
    /// Plain inhomogeneous square pair (pure square lattice only).
    SquarePair { ph: f64, pv: f64 },
    /// Highly inhomogeneous triangular profile (triangular kinds only).
    TriProfile(HeightProfile),
    /// Highly inhomogeneous square profile (pure square lattice only):
    /// horizontal edges at row n -> q_n, vertical edges from row n -> q'_n.
    SquareProfile(SquareProfile),
}

/// One open probability per edge of a particular lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMap {
    probs: Vec<f64>,
}

impl ParamMap {
    pub fn from_probs(probs: Vec<f64>) -> Result<ParamMap> {
        for &p in &probs {
            if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                return Err(Error::InvalidProbability(p));
            }
        }
        Ok(ParamMap { probs })
    }

    pub fn prob(&self, edge: u32) -> f64 {
        self.probs[edge as usize]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// Row index of an edge for profile assignment: the triangular row of the
/// up-triangle containing it (side edges), or the row of the edge itself
/// (horizontals).
fn tri_edge_row(lattice: &MixedLattice, e: u32) -> i64 {
    let (w_min, _) = lattice.edge_w_span(e);
    let base = match lattice.interface() {
        Some(m) => (w_min as i64) - 2 * m,
        None => w_min as i64,
    };
    base.div_euclid(3)
}

pub fn assign_params(lattice: &MixedLattice, spec: &ParamSpec) -> Result<ParamMap> {
    let kind = lattice.kind();
    let mut probs = Vec::with_capacity(lattice.edge_count());
    match spec {
        ParamSpec::Triplet(p) => {
            for e in 0..lattice.edge_count() as u32 {
                let class = lattice.edge(e).class;
                probs.push(match class {
                    EdgeClass::Horizontal => p.p0,
                    EdgeClass::Vertical => 1.0 - p.p0,
                    EdgeClass::UpTriRight => p.p1,
                    EdgeClass::UpTriLeft => p.p2,
                    EdgeClass::UpStarLeft => 1.0 - p.p1,
                    EdgeClass::UpStarRight => 1.0 - p.p2,
                });
            }
        }
        ParamSpec::SquarePair { ph, pv } => {
            if kind != LatticeKind::PureSquare {
                return Err(Error::IncompatibleParamSpec(kind.name().to_string()));
            }
            for e in 0..lattice.edge_count() as u32 {
                probs.push(match lattice.edge(e).class {
                    EdgeClass::Horizontal => *ph,
                    EdgeClass::Vertical => *pv,
                    _ => unreachable!("square lattice has only axis edges"),
                });
            }
        }
        ParamSpec::TriProfile(profile) => {
            if !matches!(
                kind,
                LatticeKind::PureTriangular | LatticeKind::MixedTriangular
            ) {
                return Err(Error::IncompatibleParamSpec(kind.name().to_string()));
            }
            for e in 0..lattice.edge_count() as u32 {
                let class = lattice.edge(e).class;
                probs.push(match class {
                    EdgeClass::Horizontal => profile.p,
                    EdgeClass::Vertical => 1.0 - profile.p,
                    EdgeClass::UpTriRight => {
                        let row = tri_edge_row(lattice, e);
                        let (q, _) = profile.lookup(row)?;
                        q
                    }
                    EdgeClass::UpTriLeft => {
                        let row = tri_edge_row(lattice, e);
                        let (_, qp) = profile.lookup(row)?;
                        qp
                    }
                    _ => return Err(Error::MissingParamRule(class.name().to_string())),
                });
            }
        }
        ParamSpec::SquareProfile(profile) => {
            if kind != LatticeKind::PureSquare {
                return Err(Error::IncompatibleParamSpec(kind.name().to_string()));
            }
            for e in 0..lattice.edge_count() as u32 {
                let (w_min, _) = lattice.edge_w_span(e);
                let (q, qp) = profile.lookup(w_min as i64)?;
                if kappa_square(q, qp).abs() > SELF_DUAL_TOL {
                    return Err(Error::InvariantViolation(format!(
                        "square profile row {w_min} is not self-dual"
                    )));
                }
                if q < profile.epsilon || qp < profile.epsilon {
                    return Err(Error::InvalidProbability(q.min(qp)));
                }
                probs.push(match lattice.edge(e).class {
                    EdgeClass::Horizontal => q,
                    EdgeClass::Vertical => qp,
                    _ => unreachable!("square lattice has only axis edges"),
                });
            }
        }
    }
    ParamMap::from_probs(probs)
}

/// Open/closed state per edge of a lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    words: Vec<u64>,
    len: usize,
}

impl Configuration {
    pub fn all_closed(len: usize) -> Configuration {
        Configuration {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn all_open(len: usize) -> Configuration {
        let mut c = Configuration::all_closed(len);
        for e in 0..len {
            c.set(e as u32, true);
        }
        c
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, e: u32) -> bool {
        let e = e as usize;
        debug_assert!(e < self.len);
        self.words[e / 64] >> (e % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, e: u32, open: bool) {
        let e = e as usize;
        debug_assert!(e < self.len);
        if open {
            self.words[e / 64] |= 1 << (e % 64);
        } else {
            self.words[e / 64] &= !(1 << (e % 64));
        }
    }

    pub fn count_open(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

/// Draw the state of a single edge; a pure function of
/// `(seed, trial, edge index)` so that samples are reproducible
/// independently of iteration order and thread schedule.
#[inline]
pub fn edge_open(prob: f64, seed: u64, trial: u64, edge: u32) -> bool {
    rng::bernoulli(prob, &[domain::EDGE_SAMPLE, seed, trial, edge as u64])
}

/// Sample a full configuration from the product measure given by `params`.
pub fn sample_configuration(
    lattice: &MixedLattice,
    params: &ParamMap,
    seed: u64,
    trial: u64,
) -> Configuration {
    debug_assert_eq!(params.len(), lattice.edge_count());
    let mut config = Configuration::all_closed(lattice.edge_count());
    for e in 0..lattice.edge_count() as u32 {
        if edge_open(params.prob(e), seed, trial, e) {
            config.set(e, true);
        }
    }
    config
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Rect;
    use crate::lattice::build_lattice;

    /// Independent oracle: root of 3p - p^3 = 1 by bisection.
    pub(crate) fn homogeneous_root() -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 3.0 * mid - mid * mid * mid < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn kappa_square_values() {
        assert_eq!(kappa_square(0.5, 0.5), 0.0);
        assert!((kappa_square(0.6, 0.4)).abs() < 1e-15);
        assert!((kappa_square(0.3, 0.4) + 0.3).abs() < 1e-15);
    }

    #[test]
    fn kappa_triangular_values() {
        assert_eq!(kappa_triangular(&Triplet::new(0.5, 0.5, 0.0)), 0.0);
        assert!((kappa_triangular(&Triplet::new(0.5, 0.5, 0.5)) - 0.375).abs() < 1e-15);
        let p = homogeneous_root();
        // frozen from the bisection oracle
        assert!((p - 0.347_296_355_333_860_7).abs() < 1e-12);
        let t = Triplet::new(p, p, p);
        assert!(t.kappa().abs() < 1e-12);
    }

    #[test]
    fn kappa_hexagonal_values() {
        assert!(kappa_hexagonal(&Triplet::new(0.5, 0.5, 1.0)).abs() < 1e-15);
        assert!((kappa_hexagonal(&Triplet::new(0.6, 0.6, 0.6)) + 0.136).abs() < 1e-12);
        let q = 1.0 - homogeneous_root();
        assert!((q - 0.652_703_644_666_139_3).abs() < 1e-12);
        assert!(kappa_hexagonal(&Triplet::new(q, q, q)).abs() < 1e-12);
    }

    #[test]
    fn complement_identity_random_triplets() {
        for i in 0..10_000u64 {
            let p = Triplet::new(
                rng::uniform(&[domain::GENERIC, 1, i]),
                rng::uniform(&[domain::GENERIC, 2, i]),
                rng::uniform(&[domain::GENERIC, 3, i]),
            );
            let lhs = kappa_hexagonal(&p.complement());
            let rhs = -kappa_triangular(&p);
            assert!((lhs - rhs).abs() < 1e-14);
        }
    }

    #[test]
    fn complete_self_dual_values() {
        assert!((complete_self_dual(0.5, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let p2 = complete_self_dual(0.5, 0.2).unwrap();
        assert!((p2 - 1.0 / 3.0).abs() < 1e-15);
        assert!(
            kappa_triangular(&Triplet::new(0.5, 0.2, p2)).abs() < SELF_DUAL_TOL,
            "completion lies on the surface"
        );
        assert!(matches!(
            complete_self_dual(0.9, 0.9),
            Err(Error::NoSelfDualCompletion { .. })
        ));
    }

    #[test]
    fn self_dual_completion_grid() {
        let mut checked = 0usize;
        for i in 0..100 {
            for j in 0..100 {
                let p0 = i as f64 / 100.0;
                let p1 = j as f64 / 100.0;
                if let Ok(p2) = complete_self_dual(p0, p1) {
                    let t = Triplet::new(p0, p1, p2);
                    assert!(t.kappa().abs() <= SELF_DUAL_TOL);
                    checked += 1;
                }
            }
        }
        assert!(checked > 1_000);
    }

    #[test]
    fn beta_values() {
        let b = beta_const(0.5);
        assert!((b - (2.0 - 3.0f64.sqrt())).abs() < 1e-15);
        let tiny = beta_const(1e-6);
        assert!(
            (tiny - 5e-7).abs() < 1e-9,
            "beta -> 0 as p0 -> 0, got {tiny}"
        );
        assert!(beta_const(0.3) < beta_const(0.5));
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let b = beta_const(x);
            assert!(b > 0.0 && b < 1.0);
        }
    }

    #[test]
    fn eta_values() {
        assert!((eta_const(0.5) - 0.401_923_788_646_684).abs() < 1e-12);
        assert!(eta_const(0.2) < eta_const(0.8), "eta is increasing");
        assert!(eta_const(1e-9) < 1e-8);
        for i in 1..100 {
            let x = i as f64 / 100.0;
            let e = eta_const(x);
            assert!(e > 0.0 && e < 1.0);
        }
    }

    #[test]
    fn eta_prime_values() {
        assert!(eta_prime_const(0.5, 0.5).abs() < 1e-15);
        assert!((eta_prime_const(0.2, 0.2) - 0.5625).abs() < 1e-15);
        // on a symmetric self-dual triplet the bound is attained
        let p0 = complete_self_dual(1.0 / 3.0, 1.0 / 3.0).unwrap();
        let ep = eta_prime_const(1.0 / 3.0, 1.0 / 3.0);
        assert!(ep >= eta_const(p0) - 1e-12);
        assert!((ep - eta_const(p0)).abs() < 1e-12);
    }

    #[test]
    fn eta_prime_dominates_eta_on_surface() {
        for i in 0..100 {
            for j in 0..100 {
                let p0 = i as f64 / 100.0;
                let p1 = j as f64 / 100.0;
                if let Ok(p2) = complete_self_dual(p0, p1) {
                    if p0 == 0.0 {
                        continue;
                    }
                    assert!(
                        eta_prime_const(p1, p2) >= eta_const(p0) - 1e-12,
                        "p = ({p0},{p1},{p2})"
                    );
                }
            }
        }
    }

    #[test]
    fn glem1_minimisation_bound() {
        // (1-p1) p0 p2 / ((1-p0)(1-p2)) >= beta(p0) for self-dual triplets
        // with p1 <= p2, on a 10^4 grid.
        let mut checked = 0usize;
        for i in 1..200 {
            for j in 0..200 {
                let p0 = i as f64 / 200.0;
                let p1 = j as f64 / 200.0;
                let Ok(p2) = complete_self_dual(p0, p1) else {
                    continue;
                };
                if p1 > p2 {
                    continue;
                }
                let ratio = (1.0 - p1) * p0 * p2 / ((1.0 - p0) * (1.0 - p2));
                assert!(
                    ratio >= beta_const(p0) - 1e-12,
                    "p=({p0},{p1},{p2}): {ratio} < {}",
                    beta_const(p0)
                );
                checked += 1;
            }
        }
        assert!(checked >= 10_000, "grid had {checked} valid triplets");
    }

    #[test]
    fn assignment_rules() {
        let lat = build_lattice(
            LatticeKind::MixedTriangular,
            Rect::new(-4.0, 4.0, -2.0, 4.0),
            Some(0),
        )
        .unwrap();
        let p = Triplet::new(0.5, 0.2, complete_self_dual(0.5, 0.2).unwrap());
        let map = assign_params(&lat, &ParamSpec::Triplet(p)).unwrap();
        for e in 0..lat.edge_count() as u32 {
            let expect = match lat.edge(e).class {
                EdgeClass::Horizontal => 0.5,
                EdgeClass::Vertical => 0.5,
                EdgeClass::UpTriRight => 0.2,
                EdgeClass::UpTriLeft => p.p2,
                _ => unreachable!(),
            };
            assert_eq!(map.prob(e), expect);
        }

        let sq =
            build_lattice(LatticeKind::PureSquare, Rect::new(0.0, 3.0, 0.0, 3.0), None).unwrap();
        let map = assign_params(&sq, &ParamSpec::SquarePair { ph: 0.3, pv: 0.9 }).unwrap();
        for e in 0..sq.edge_count() as u32 {
            let expect = match sq.edge(e).class {
                EdgeClass::Horizontal => 0.3,
                _ => 0.9,
            };
            assert_eq!(map.prob(e), expect);
        }
    }

    #[test]
    fn profile_assignment_and_range_error() {
        let lat = build_lattice(
            LatticeKind::PureTriangular,
            Rect::new(-4.0, 4.0, -0.5, 4.6),
            None,
        )
        .unwrap();
        // rows 0..=2 used by this patch (side edges up to w in [6,9] need row 2)
        let profile = HeightProfile::self_dual_from_q(0.3, 0, vec![0.25, 0.4, 0.55]).unwrap();
        let map = assign_params(&lat, &ParamSpec::TriProfile(profile.clone())).unwrap();
        for e in 0..lat.edge_count() as u32 {
            let class = lat.edge(e).class;
            let row = tri_edge_row(&lat, e);
            match class {
                EdgeClass::Horizontal => assert_eq!(map.prob(e), 0.3),
                EdgeClass::UpTriRight => assert_eq!(map.prob(e), profile.q[row as usize]),
                EdgeClass::UpTriLeft => assert_eq!(map.prob(e), profile.q_prime[row as usize]),
                _ => unreachable!(),
            }
        }
        // a patch reaching rows outside the profile errors out
        let tall = build_lattice(
            LatticeKind::PureTriangular,
            Rect::new(-4.0, 4.0, -0.5, 8.0),
            None,
        )
        .unwrap();
        let short = HeightProfile::self_dual_from_q(0.3, 0, vec![0.25]).unwrap();
        assert!(matches!(
            assign_params(&tall, &ParamSpec::TriProfile(short)),
            Err(Error::ProfileRowMissing(_))
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_unbiased() {
        let lat = build_lattice(
            LatticeKind::PureSquare,
            Rect::new(0.0, 320.0, 0.0, 320.0),
            None,
        )
        .unwrap();
        assert!(lat.edge_count() > 100_000);
        let map = assign_params(&lat, &ParamSpec::SquarePair { ph: 0.3, pv: 0.3 }).unwrap();
        let a = sample_configuration(&lat, &map, 42, 7);
        let b = sample_configuration(&lat, &map, 42, 7);
        assert_eq!(
            a, b,
            "same (seed, trial) twice gives identical configurations"
        );
        let c = sample_configuration(&lat, &map, 42, 8);
        assert_ne!(a, c);

        let frac = a.count_open() as f64 / lat.edge_count() as f64;
        let sigma = (0.3 * 0.7 / lat.edge_count() as f64).sqrt();
        assert!((frac - 0.3).abs() < 3.0 * sigma, "open fraction {frac}");

        let zero = assign_params(&lat, &ParamSpec::SquarePair { ph: 0.0, pv: 0.0 }).unwrap();
        assert_eq!(sample_configuration(&lat, &zero, 1, 1).count_open(), 0);
    }
}
