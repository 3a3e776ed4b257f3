//! The probabilistic machinery controlling path drift during sweeps: the
//! interface-height process, its dominating random walk, per-column heights
//! of paths, the brick-pile growth process with its first-passage-time
//! representation, and stochastic-domination checks.

use std::collections::BTreeMap;

use crate::geom::SQRT3;
use crate::lattice::MixedLattice;
use crate::params::Configuration;
use crate::rng::{self, domain};

/// Height of the open cluster of the base line within the truncated strip
/// `|x| <= half_width`, `0 <= y`.
#[derive(Debug, Clone, Copy)]
pub struct HeightSample {
    pub h: f64,
    /// The exploration touched the top row of the patch, so `h` is a
    /// truncation artifact and the trial should be discarded.
    pub cap_hit: bool,
}

/// Maximal height reachable from height-0 vertices through open paths
/// staying in the strip. For step `k` of a down sweep from size `n`, call
/// with `half_width = (n + k) as f64`.
pub fn height_reach(
    lattice: &MixedLattice,
    config: &Configuration,
    half_width: f64,
) -> HeightSample {
    let cap = lattice.bounds().y1;
    let mut visited = vec![false; lattice.vertex_count()];
    let mut queue = std::collections::VecDeque::new();
    let mut h = f64::NEG_INFINITY;
    for v in 0..lattice.vertex_count() as u32 {
        let p = lattice.position(v);
        if p.y.abs() < 1e-9 && p.x.abs() <= half_width + 1e-9 {
            visited[v as usize] = true;
            queue.push_back(v);
            h = h.max(0.0);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &(e, nb) in lattice.neighbors(v) {
            if visited[nb as usize] || !config.get(e) {
                continue;
            }
            let p = lattice.position(nb);
            if p.y < -1e-9 || p.x.abs() > half_width + 1e-9 {
                continue;
            }
            visited[nb as usize] = true;
            if p.y > h {
                h = p.y;
            }
            queue.push_back(nb);
        }
    }
    let h = if h.is_finite() { h } else { 0.0 };
    HeightSample {
        h,
        cap_hit: h >= cap - 1.6,
    }
}

/// One step of the dominating walk: up 1/2 with probability `beta`,
/// down 1 otherwise.
pub fn walk_step(h: f64, beta: f64, uniform: f64) -> f64 {
    if uniform < beta {
        h + 0.5
    } else {
        h - 1.0
    }
}

/// Simulate the walk for `steps` steps with counter-based draws.
pub fn simulate_walk(h0: f64, beta: f64, steps: usize, seed: u64, replica: u64) -> f64 {
    let mut h = h0;
    for k in 0..steps {
        let u = rng::uniform(&[domain::WALK_STEP, seed, replica, k as u64]);
        h = walk_step(h, beta, u);
    }
    h
}

/// Per-column heights `H_n` of a piecewise-affine path: the supremum of the
/// `y`-coordinate over the open vertical strip `(n sqrt(3), (n+1) sqrt(3))`.
/// Unvisited columns are absent from the map (height `-inf`).
pub fn column_heights(points: &[crate::geom::Point]) -> BTreeMap<i64, f64> {
    let mut map: BTreeMap<i64, f64> = BTreeMap::new();
    let mut bump = |n: i64, y: f64| {
        map.entry(n)
            .and_modify(|cur| {
                if y > *cur {
                    *cur = y;
                }
            })
            .or_insert(y);
    };
    let col_bound = |x: f64| (x / SQRT3).floor() as i64;
    let on_boundary = |x: f64| {
        let r = x / SQRT3;
        (r - r.round()).abs() < 1e-9
    };
    if points.len() == 1 {
        let p = points[0];
        if !on_boundary(p.x) {
            bump(col_bound(p.x), p.y);
        }
        return map;
    }
    for seg in points.windows(2) {
        let (mut a, mut b) = (seg[0], seg[1]);
        if a.x > b.x {
            std::mem::swap(&mut a, &mut b);
        }
        if (b.x - a.x).abs() < 1e-12 {
            // vertical (or stationary) piece: one column unless on a boundary
            if !on_boundary(a.x) {
                bump(col_bound(a.x), a.y.max(b.y));
            }
            continue;
        }
        let n_lo = col_bound(a.x);
        let n_hi = col_bound(b.x - 1e-12);
        for n in n_lo..=n_hi {
            let lo = (n as f64 * SQRT3).max(a.x);
            let hi = ((n + 1) as f64 * SQRT3).min(b.x);
            if hi - lo < 1e-9 {
                // touches the strip in at most a boundary point
                continue;
            }
            let y_at = |x: f64| a.y + (b.y - a.y) * (x - a.x) / (b.x - a.x);
            bump(n, y_at(lo).max(y_at(hi)));
        }
    }
    map
}

/// Column-height vector of the brick-pile growth process. Values are
/// integers; columns outside the stored window are `-inf` (absent).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrowthState {
    offset: i64,
    vals: Vec<Option<i64>>,
}

impl GrowthState {
    /// Initial state: value `v0` on `lo..=hi`, `-inf` outside.
    pub fn interval(lo: i64, hi: i64, v0: i64) -> GrowthState {
        GrowthState {
            offset: lo,
            vals: vec![Some(v0); (hi - lo + 1) as usize],
        }
    }

    pub fn get(&self, n: i64) -> Option<i64> {
        let i = n - self.offset;
        if i < 0 || i as usize >= self.vals.len() {
            None
        } else {
            self.vals[i as usize]
        }
    }

    pub fn support(&self) -> impl Iterator<Item = (i64, i64)> + '_ {
        self.vals
            .iter()
            .enumerate()
            .filter_map(move |(i, v)| v.map(|x| (self.offset + i as i64, x)))
    }

    pub fn max(&self) -> Option<i64> {
        self.vals.iter().flatten().max().copied()
    }

    /// One step of the recursion
    /// `X'_n = max(X_{n-1}, X_n + Y_n, X_{n+1})`,
    /// with the caller supplying the Bernoulli row `y`.
    pub fn step_with(&self, mut y: impl FnMut(i64) -> bool) -> GrowthState {
        let lo = self.offset - 1;
        let hi = self.offset + self.vals.len() as i64;
        let mut vals = Vec::with_capacity((hi - lo + 1) as usize);
        for n in lo..=hi {
            let up = self.get(n).map(|v| v + y(n) as i64);
            let best = [self.get(n - 1), up, self.get(n + 1)]
                .into_iter()
                .flatten()
                .max();
            vals.push(best);
        }
        // trim absent flanks so the window tracks the support
        let first = vals.iter().position(|v| v.is_some()).unwrap_or(0);
        let last = vals.iter().rposition(|v| v.is_some()).unwrap_or(0);
        GrowthState {
            offset: lo + first as i64,
            vals: vals[first..=last].to_vec(),
        }
    }
}

/// One counter-seeded step with independent `Bernoulli(1 - zeta)` uplifts.
pub fn growth_step(state: &GrowthState, zeta: f64, seed: u64, k: u64) -> GrowthState {
    state.step_with(|n| rng::bernoulli(1.0 - zeta, &[domain::GROWTH, seed, k, rng::signed_word(n)]))
}

/// Directed first-passage instance on the half-plane grid
/// `{n_lo..=n_hi} x {0..=h_max}`: horizontal edges cost 1, downward edges
/// cost 0, and the upward edge out of `(n, h)` costs `up_tau[(n, h)]`
/// (geometric on {1, 2, ...} with parameter `1 - zeta` when sampled).
#[derive(Debug, Clone)]
pub struct FptInstance {
    pub n_lo: i64,
    pub n_hi: i64,
    pub h_max: i64,
    /// Sources: `(n, source_row)` for `|n| <= source_half`.
    pub source_half: i64,
    pub source_row: i64,
    up_tau: Vec<u32>,
}

impl FptInstance {
    pub fn cols(&self) -> i64 {
        self.n_hi - self.n_lo + 1
    }

    fn idx(&self, n: i64, h: i64) -> usize {
        ((n - self.n_lo) * (self.h_max + 1) + h) as usize
    }

    pub fn up_tau(&self, n: i64, h: i64) -> u32 {
        self.up_tau[self.idx(n, h)]
    }

    /// Sample all upward passage times geometrically.
    pub fn sample(
        n_lo: i64,
        n_hi: i64,
        h_max: i64,
        source_half: i64,
        source_row: i64,
        zeta: f64,
        seed: u64,
        trial: u64,
    ) -> FptInstance {
        let mut up_tau = Vec::with_capacity(((n_hi - n_lo + 1) * (h_max + 1)) as usize);
        for n in n_lo..=n_hi {
            for h in 0..=h_max {
                let t = rng::geometric(
                    zeta,
                    &[domain::FPT, seed, trial, rng::signed_word(n), h as u64],
                );
                up_tau.push(t.min(u32::MAX as u64) as u32);
            }
        }
        FptInstance {
            n_lo,
            n_hi,
            h_max,
            source_half,
            source_row,
            up_tau,
        }
    }

    /// Shortest passage times from the source row via Dijkstra.
    pub fn distances(&self) -> Vec<u64> {
        let size = (self.cols() * (self.h_max + 1)) as usize;
        let mut dist = vec![u64::MAX; size];
        let mut heap = std::collections::BinaryHeap::new();
        for n in -self.source_half..=self.source_half {
            if n < self.n_lo || n > self.n_hi || self.source_row > self.h_max {
                continue;
            }
            let i = self.idx(n, self.source_row);
            dist[i] = 0;
            heap.push(std::cmp::Reverse((0u64, n, self.source_row)));
        }
        while let Some(std::cmp::Reverse((d, n, h))) = heap.pop() {
            if d > dist[self.idx(n, h)] {
                continue;
            }
            let mut relax =
                |n2: i64, h2: i64, cost: u64, heap: &mut std::collections::BinaryHeap<_>| {
                    if n2 < self.n_lo || n2 > self.n_hi || h2 < 0 || h2 > self.h_max {
                        return;
                    }
                    let nd = d.saturating_add(cost);
                    let i2 = self.idx(n2, h2);
                    if nd < dist[i2] {
                        dist[i2] = nd;
                        heap.push(std::cmp::Reverse((nd, n2, h2)));
                    }
                };
            relax(n - 1, h, 1, &mut heap);
            relax(n + 1, h, 1, &mut heap);
            relax(n, h - 1, 0, &mut heap);
            if h < self.h_max {
                relax(n, h + 1, self.up_tau(n, h) as u64, &mut heap);
            }
        }
        dist
    }

    /// The reached set at time `k`, reported as per-column maxima (the set
    /// itself is downward closed). Columns never reached map to `None`.
    pub fn reach_column_maxima(&self, dist: &[u64], k: u64) -> Vec<Option<i64>> {
        (self.n_lo..=self.n_hi)
            .map(|n| {
                (0..=self.h_max)
                    .filter(|&h| dist[self.idx(n, h)] <= k)
                    .max()
            })
            .collect()
    }
}

/// A finite law: pairs `(value, probability)`.
pub type FiniteLaw = Vec<(f64, f64)>;

/// Stochastic domination `X <=st Y`: the upper tail of `X` never exceeds
/// that of `Y`. Exact comparison up to floating dust.
pub fn check_stochastic_domination(law_x: &FiniteLaw, law_y: &FiniteLaw) -> bool {
    let mut thresholds: Vec<f64> = law_x.iter().chain(law_y.iter()).map(|&(v, _)| v).collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    for &t in &thresholds {
        let tail = |law: &FiniteLaw| -> f64 {
            law.iter()
                .filter(|&&(v, _)| v > t + 1e-12)
                .map(|&(_, p)| p)
                .sum()
        };
        if tail(law_x) > tail(law_y) + 1e-9 {
            return false;
        }
    }
    true
}

/// A pair of two-step chains satisfying the domination hypotheses:
/// `X0 <=st Y0`, and for support values `x <= y` the conditional law of the
/// next step from `x` is dominated by the one from `y`. The conditional
/// kernels are shared and monotone by construction.
#[derive(Debug, Clone)]
pub struct ChainPair {
    pub x0: FiniteLaw,
    pub y0: FiniteLaw,
    /// `kernel[v]` is the conditional law of the next value given value `v`.
    pub kernel: Vec<FiniteLaw>,
}

impl ChainPair {
    /// Marginal law of `X1` (or `Y1`) from an initial law.
    pub fn marginal_next(&self, law0: &FiniteLaw) -> FiniteLaw {
        let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
        for &(v, p) in law0 {
            let cond = &self.kernel[v as usize];
            for &(w, q) in cond {
                *acc.entry(w as i64).or_insert(0.0) += p * q;
            }
        }
        acc.into_iter().map(|(v, p)| (v as f64, p)).collect()
    }

    /// Verify hypotheses (initial domination and monotone conditionals)
    /// independently of the construction.
    pub fn satisfies_hypotheses(&self) -> bool {
        if !check_stochastic_domination(&self.x0, &self.y0) {
            return false;
        }
        let support = |law: &FiniteLaw| -> Vec<usize> {
            law.iter()
                .filter(|&&(_, p)| p > 0.0)
                .map(|&(v, _)| v as usize)
                .collect()
        };
        for &x in &support(&self.x0) {
            for &y in &support(&self.y0) {
                if x <= y && !check_stochastic_domination(&self.kernel[x], &self.kernel[y]) {
                    return false;
                }
            }
        }
        true
    }
}

fn random_law(max_value: usize, words: &[u64]) -> FiniteLaw {
    let mut weights = Vec::with_capacity(max_value + 1);
    let mut total = 0.0;
    for v in 0..=max_value {
        let mut w = words.to_vec();
        w.push(v as u64);
        let x = rng::uniform(&w) + 1e-3;
        weights.push(x);
        total += x;
    }
    weights
        .into_iter()
        .enumerate()
        .map(|(v, w)| (v as f64, w / total))
        .collect()
}

/// Shift a law up by an independent Bernoulli(`r`) increment; the result
/// dominates the input.
fn shift_up(law: &FiniteLaw, r: f64) -> FiniteLaw {
    let mut acc: BTreeMap<i64, f64> = BTreeMap::new();
    for &(v, p) in law {
        *acc.entry(v as i64).or_insert(0.0) += p * (1.0 - r);
        *acc.entry(v as i64 + 1).or_insert(0.0) += p * r;
    }
    acc.into_iter().map(|(v, p)| (v as f64, p)).collect()
}

/// Generate a random chain pair satisfying the domination hypotheses.
pub fn random_dominating_chain_pair(seed: u64, index: u64) -> ChainPair {
    let base = [domain::GENERIC, 0x434841, seed, index];
    let m = 3 + (rng::hash_words(&base) % 3) as usize;
    let x0 = random_law(m, &[domain::GENERIC, 0x434842, seed, index]);
    let r0 = rng::uniform(&[domain::GENERIC, 0x434843, seed, index]);
    let y0 = shift_up(&x0, r0);
    // a monotone family of conditionals: each dominates the previous
    let top_value = m + 1; // y0 can reach m + 1
    let mut kernel = Vec::with_capacity(top_value + 1);
    let mut current = random_law(m, &[domain::GENERIC, 0x434844, seed, index]);
    kernel.push(current.clone());
    for v in 1..=top_value {
        let r = rng::uniform(&[domain::GENERIC, 0x434845, seed, index, v as u64]);
        current = shift_up(&current, r);
        kernel.push(current.clone());
    }
    ChainPair { x0, y0, kernel }
}

/// Empirical survival-function domination at every threshold within
/// `z` combined standard errors. Returns the worst margin
/// (positive = satisfied).
pub fn empirical_survival_domination(
    upper: &[f64],
    lower: &[f64],
    thresholds: &[f64],
    z: f64,
) -> f64 {
    let n_u = upper.len() as f64;
    let n_l = lower.len() as f64;
    let mut worst = f64::INFINITY;
    for &t in thresholds {
        let su = upper.iter().filter(|&&v| v >= t).count() as f64 / n_u;
        let sl = lower.iter().filter(|&&v| v >= t).count() as f64 / n_l;
        let sigma = (su * (1.0 - su) / n_u + sl * (1.0 - sl) / n_l).sqrt();
        let margin = su - (sl - z * sigma);
        if margin < worst {
            worst = margin;
        }
    }
    worst
}
