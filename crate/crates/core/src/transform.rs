//! Whole-lattice transformations and sweep pipelines.
//!
//! A transformation consumes every complete cell of its kind independently
//! through the single-cell kernels, copies all other edges that survive into
//! the image lattice, and leaves unreachable boundary-artifact edges closed.
//! Image edges and vertices keep their global integer identities, so a step
//! is a pure function of `(configuration, seed, trial, step index)`.
//!
//! Because the lattice geometry of every step is determined by the starting
//! lattice alone, a [`SweepPlan`] precomputes the lattice sequence, cell
//! tables, and copy maps once; running a trial only touches edge states.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{
    build_lattice, build_mixed_hexagonal, CellKind, HexVariant, LatticeKind, MixedLattice,
    NodeKind, VertexId,
};
use crate::params::{nu_const, Configuration, ParamMap, Triplet, SELF_DUAL_TOL};
use crate::rng::{self, domain};
use crate::star_triangle::CellConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepOp {
    /// Up-triangles to up-stars (mixed triangular -> mixed hexagonal).
    TUp,
    /// Down-triangles to down-stars.
    TDown,
    /// Up-stars to up-triangles; interface height +1.
    SUp,
    /// Down-stars to down-triangles; interface height -1.
    SDown,
}

impl SweepOp {
    pub fn name(&self) -> &'static str {
        match self {
            SweepOp::TUp => "TUp",
            SweepOp::TDown => "TDown",
            SweepOp::SUp => "SUp",
            SweepOp::SDown => "SDown",
        }
    }

    pub fn is_star_op(&self) -> bool {
        matches!(self, SweepOp::SUp | SweepOp::SDown)
    }

    fn consumed_cell_kind(&self) -> CellKind {
        match self {
            SweepOp::TUp => CellKind::UpTriangle,
            SweepOp::TDown => CellKind::DownTriangle,
            SweepOp::SUp => CellKind::UpStar,
            SweepOp::SDown => CellKind::DownStar,
        }
    }
}

/// Composite sweep direction: `Down` is one application of the down-star
/// composite (interface -1), `Up` the up-star composite (interface +1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepPair {
    Down,
    Up,
}

#[derive(Debug, Clone)]
pub struct PlannedCell {
    /// Labeled member edges `e_i` / `s_i` in the source lattice.
    pub src_edges: [u32; 3],
    /// Labeled member edges of the image cell.
    pub img_edges: [u32; 3],
    /// Exterior vertices (source indices), label order.
    pub ext_src: [u32; 3],
    /// The same exterior vertices in the image lattice.
    pub ext_img: [u32; 3],
    /// Star centre in the source lattice (S ops).
    pub center_src: Option<u32>,
    /// Star centre in the image lattice (T ops).
    pub center_img: Option<u32>,
    /// Cell parameters in triangle terms.
    pub triplet: Triplet,
    /// Coupling parameter for the star kernel's auxiliary Bernoulli pair.
    pub nu: f64,
}

/// One precomputed transformation step.
#[derive(Debug, Clone)]
pub struct StepPlan {
    pub op: SweepOp,
    src_lattice: Arc<MixedLattice>,
    img_lattice: Arc<MixedLattice>,
    img_params: ParamMap,
    cells: Vec<PlannedCell>,
    /// (source edge, image edge) pairs copied verbatim.
    copied: Vec<(u32, u32)>,
    /// Source edges consumed by no complete cell and absent from the image.
    dropped_src: Vec<u32>,
    /// Image edges never written; they stay closed (boundary artifacts).
    unset_img: Vec<u32>,
    /// For each source edge, the consuming cell (T ops).
    src_edge_cell: Vec<Option<u32>>,
    /// For each source vertex, the cell whose centre it is (S ops).
    src_vertex_cell: Vec<Option<u32>>,
    /// Star centres removed by this step (S ops).
    lost_vertices: Vec<VertexId>,
}

impl StepPlan {
    pub fn src_lattice(&self) -> &Arc<MixedLattice> {
        &self.src_lattice
    }

    pub fn img_lattice(&self) -> &Arc<MixedLattice> {
        &self.img_lattice
    }

    pub fn img_params(&self) -> &ParamMap {
        &self.img_params
    }

    pub fn cells(&self) -> &[PlannedCell] {
        &self.cells
    }

    pub fn cell_of_src_edge(&self, e: u32) -> Option<&PlannedCell> {
        self.src_edge_cell[e as usize].map(|i| &self.cells[i as usize])
    }

    pub fn cell_of_center(&self, v: u32) -> Option<&PlannedCell> {
        self.src_vertex_cell[v as usize].map(|i| &self.cells[i as usize])
    }

    pub fn lost_vertices(&self) -> &[VertexId] {
        &self.lost_vertices
    }

    pub fn dropped_src_edges(&self) -> &[u32] {
        &self.dropped_src
    }

    pub fn artifact_img_edges(&self) -> &[u32] {
        &self.unset_img
    }

    /// Image identity of a surviving source vertex: star centres of S-images
    /// become ordinary nodes; everything else keeps its id.
    pub fn image_id(&self, v: VertexId) -> VertexId {
        if self.op.is_star_op() && v.kind == NodeKind::Center {
            VertexId::node(v.u, v.w)
        } else {
            v
        }
    }

    /// `excluded` marks source edges whose state is a boundary artifact of a
    /// previous step; cells touching them are skipped and the edges never
    /// copied, so untrustworthy states cannot leak inward. Empty = none.
    fn build(
        src: Arc<MixedLattice>,
        params: &ParamMap,
        op: SweepOp,
        excluded: &[bool],
    ) -> Result<StepPlan> {
        debug_assert!(excluded.is_empty() || excluded.len() == src.edge_count());
        let is_excluded = |e: u32| excluded.get(e as usize).copied().unwrap_or(false);
        let kind = src.kind();
        let bad_op = || Error::IncompatibleOp {
            op: op.name().to_string(),
            lattice: kind.name().to_string(),
        };
        let m = src.interface().ok_or_else(bad_op)?;
        let img = match op {
            SweepOp::TUp => {
                if kind != LatticeKind::MixedTriangular {
                    return Err(bad_op());
                }
                build_mixed_hexagonal(src.bounds(), m, HexVariant::DownStars)?
            }
            SweepOp::TDown => {
                if kind != LatticeKind::MixedTriangular {
                    return Err(bad_op());
                }
                build_mixed_hexagonal(src.bounds(), m, HexVariant::UpStars)?
            }
            SweepOp::SDown => {
                if kind != LatticeKind::MixedHexagonal
                    || src.hex_variant() != Some(HexVariant::DownStars)
                {
                    return Err(bad_op());
                }
                build_lattice(LatticeKind::MixedTriangular, src.bounds(), Some(m - 1))?
            }
            SweepOp::SUp => {
                if kind != LatticeKind::MixedHexagonal
                    || src.hex_variant() != Some(HexVariant::UpStars)
                {
                    return Err(bad_op());
                }
                build_lattice(LatticeKind::MixedTriangular, src.bounds(), Some(m + 1))?
            }
        };
        let img = Arc::new(img);

        let raw_cells = src.enumerate_cells(op.consumed_cell_kind())?;
        let mut cells = Vec::with_capacity(raw_cells.len());
        let mut consumed = vec![false; src.edge_count()];
        let mut src_edge_cell = vec![None; src.edge_count()];
        let mut src_vertex_cell = vec![None; src.vertex_count()];
        let mut written = vec![false; img.edge_count()];
        let mut lost_vertices = Vec::new();

        let internal = |msg: String| Error::InvariantViolation(msg);

        for cell in &raw_cells {
            if cell.edges.iter().any(|&e| is_excluded(e)) {
                continue;
            }
            let triplet = if op.is_star_op() {
                Triplet::new(
                    1.0 - params.prob(cell.edges[0]),
                    1.0 - params.prob(cell.edges[1]),
                    1.0 - params.prob(cell.edges[2]),
                )
            } else {
                Triplet::new(
                    params.prob(cell.edges[0]),
                    params.prob(cell.edges[1]),
                    params.prob(cell.edges[2]),
                )
            };
            let kappa = triplet.kappa();
            if kappa.abs() > SELF_DUAL_TOL {
                return Err(Error::KernelUndefined { kappa });
            }

            let ext_ids = cell.exterior.map(|v| src.vertex_id(v));
            let cell_index = cells.len() as u32;
            let (center_src, center_img, ext_img, img_edges);
            match op {
                SweepOp::TUp | SweepOp::TDown => {
                    let center_id = if op == SweepOp::TUp {
                        // centre of the up-triangle with base-left exterior[1]
                        let bl = ext_ids[1];
                        VertexId::center(bl.u + 1, bl.w + 1)
                    } else {
                        // centre above the apex of the down-triangle
                        let apex = ext_ids[0];
                        VertexId::center(apex.u, apex.w + 2)
                    };
                    let c = img
                        .vertex_index(&center_id)
                        .ok_or_else(|| internal(format!("missing image centre {center_id}")))?;
                    let mut exts = [0u32; 3];
                    let mut edges = [0u32; 3];
                    for i in 0..3 {
                        let vi = img.vertex_index(&ext_ids[i]).ok_or_else(|| {
                            internal(format!("missing image vertex {}", ext_ids[i]))
                        })?;
                        exts[i] = vi;
                        edges[i] = img
                            .edge_between(c, vi)
                            .ok_or_else(|| internal("missing image star edge".into()))?;
                    }
                    for e in cell.edges {
                        consumed[e as usize] = true;
                        src_edge_cell[e as usize] = Some(cell_index);
                    }
                    center_src = None;
                    center_img = Some(c);
                    ext_img = exts;
                    img_edges = edges;
                }
                SweepOp::SUp | SweepOp::SDown => {
                    let c = cell
                        .center
                        .ok_or_else(|| internal("star cell without centre".into()))?;
                    let mut exts = [0u32; 3];
                    for i in 0..3 {
                        let id = ext_ids[i];
                        let img_id = if id.kind == NodeKind::Center {
                            VertexId::node(id.u, id.w)
                        } else {
                            id
                        };
                        exts[i] = img
                            .vertex_index(&img_id)
                            .ok_or_else(|| internal(format!("missing image vertex {img_id}")))?;
                    }
                    let mut edges = [0u32; 3];
                    for i in 0..3 {
                        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                        edges[i] = img
                            .edge_between(exts[j], exts[k])
                            .ok_or_else(|| internal("missing image triangle edge".into()))?;
                    }
                    for e in cell.edges {
                        consumed[e as usize] = true;
                        src_edge_cell[e as usize] = Some(cell_index);
                    }
                    src_vertex_cell[c as usize] = Some(cell_index);
                    lost_vertices.push(src.vertex_id(c));
                    center_src = Some(c);
                    center_img = None;
                    ext_img = exts;
                    img_edges = edges;
                }
            }
            for e in img_edges {
                written[e as usize] = true;
            }
            cells.push(PlannedCell {
                src_edges: cell.edges,
                img_edges,
                ext_src: cell.exterior,
                ext_img,
                center_src,
                center_img,
                triplet,
                nu: nu_const(triplet.p1, triplet.p2),
            });
        }

        // Copy every unconsumed source edge whose endpoints both survive.
        let mut copied = Vec::new();
        let mut dropped_src = Vec::new();
        for e in 0..src.edge_count() as u32 {
            if consumed[e as usize] {
                continue;
            }
            if is_excluded(e) {
                dropped_src.push(e);
                continue;
            }
            let rec = src.edge(e);
            let a = {
                let id = src.vertex_id(rec.a);
                if op.is_star_op() && id.kind == NodeKind::Center {
                    VertexId::node(id.u, id.w)
                } else {
                    id
                }
            };
            let b = {
                let id = src.vertex_id(rec.b);
                if op.is_star_op() && id.kind == NodeKind::Center {
                    VertexId::node(id.u, id.w)
                } else {
                    id
                }
            };
            match img.edge_between_ids(&a, &b) {
                Some(ie) if !written[ie as usize] => {
                    written[ie as usize] = true;
                    copied.push((e, ie));
                }
                _ => dropped_src.push(e),
            }
        }
        let unset_img: Vec<u32> = (0..img.edge_count() as u32)
            .filter(|&e| !written[e as usize])
            .collect();

        // Image parameters: created edges take their kernel marginals,
        // copied edges keep their source intensity, artifacts get zero.
        let mut probs = vec![0.0f64; img.edge_count()];
        for cell in &cells {
            let ps = cell.triplet.as_array();
            for i in 0..3 {
                probs[cell.img_edges[i] as usize] = if op.is_star_op() {
                    // star -> triangle: e_i open with probability p_i
                    ps[i]
                } else {
                    // triangle -> star: s_i open with probability 1 - p_i
                    1.0 - ps[i]
                };
            }
        }
        for &(e, ie) in &copied {
            probs[ie as usize] = params.prob(e);
        }
        let img_params = ParamMap::from_probs(probs)?;

        Ok(StepPlan {
            op,
            src_lattice: src,
            img_lattice: img,
            img_params,
            cells,
            copied,
            dropped_src,
            unset_img,
            src_edge_cell,
            src_vertex_cell,
            lost_vertices,
        })
    }

    /// Apply the step to a configuration. Pure in
    /// `(config, seed, trial, step_index)`.
    pub fn apply(
        &self,
        config: &Configuration,
        seed: u64,
        trial: u64,
        step_index: u64,
        record_z: bool,
    ) -> (Configuration, Option<Vec<(bool, bool)>>) {
        let mut out = Configuration::all_closed(self.img_lattice.edge_count());
        let mut zs = if record_z {
            Some(Vec::with_capacity(self.cells.len()))
        } else {
            None
        };
        for (ci, cell) in self.cells.iter().enumerate() {
            let omega = CellConfig(
                (config.get(cell.src_edges[0]) as u8)
                    | (config.get(cell.src_edges[1]) as u8) << 1
                    | (config.get(cell.src_edges[2]) as u8) << 2,
            );
            let words = |comp: u64| {
                [
                    domain::CELL_KERNEL,
                    seed,
                    trial,
                    step_index,
                    ci as u64,
                    comp,
                ]
            };
            let outcome = if self.op.is_star_op() {
                let zl = rng::uniform(&words(0)) < cell.nu;
                let zr = rng::uniform(&words(1)) < cell.nu;
                if let Some(zs) = zs.as_mut() {
                    zs.push((zl, zr));
                }
                sample_s(omega, &cell.triplet, zl, zr, rng::uniform(&words(2)))
            } else {
                sample_t(omega, &cell.triplet, rng::uniform(&words(2)))
            };
            for i in 0..3 {
                if outcome.get(i) {
                    out.set(cell.img_edges[i], true);
                }
            }
        }
        for &(e, ie) in &self.copied {
            if config.get(e) {
                out.set(ie, true);
            }
        }
        (out, zs)
    }
}

fn random_row(p: &Triplet) -> [f64; 4] {
    let prod = (1.0 - p.p0) * (1.0 - p.p1) * (1.0 - p.p2);
    [
        p.p0 * p.p1 * p.p2 / prod,
        (1.0 - p.p0) * p.p1 * p.p2 / prod,
        (1.0 - p.p1) * p.p0 * p.p2 / prod,
        (1.0 - p.p2) * p.p0 * p.p1 / prod,
    ]
}

/// Sample the T kernel with a single residual uniform.
pub(crate) fn sample_t(omega: CellConfig, p: &Triplet, res: f64) -> CellConfig {
    match omega.count_open() {
        2 | 3 => CellConfig::ALL_OPEN,
        1 => {
            let i = (0..3).find(|&i| omega.get(i)).unwrap();
            CellConfig(0b111 & !(1 << i))
        }
        _ => {
            let row = random_row(p);
            let outs = [
                CellConfig::ALL_CLOSED,
                CellConfig(0b001),
                CellConfig(0b010),
                CellConfig(0b100),
            ];
            let mut acc = 0.0;
            for i in 0..4 {
                acc += row[i];
                if res < acc {
                    return outs[i];
                }
            }
            outs[3]
        }
    }
}

/// Sample the S kernel through the auxiliary-pair coupling: on the all-open
/// star, the base edge `e_0` of the image triangle is closed exactly when
/// both auxiliaries fire, which happens with probability
/// `nu^2 = (1-p0) p1 p2 / P`; the remaining branches split a residual
/// uniform.
pub(crate) fn sample_s(omega: CellConfig, p: &Triplet, zl: bool, zr: bool, res: f64) -> CellConfig {
    match omega.count_open() {
        0 | 1 => CellConfig::ALL_CLOSED,
        2 => {
            let i = (0..3).find(|&i| !omega.get(i)).unwrap();
            CellConfig(1 << i)
        }
        _ => {
            if zl && zr {
                return CellConfig(0b110);
            }
            let row = random_row(p);
            let rest = row[0] + row[2] + row[3];
            if rest <= 0.0 {
                return CellConfig(0b110);
            }
            let t = res * rest;
            if t < row[0] {
                CellConfig::ALL_OPEN
            } else if t < row[0] + row[2] {
                CellConfig(0b101)
            } else {
                CellConfig(0b011)
            }
        }
    }
}

/// Output of a single transformation applied to one configuration.
pub struct StepOutput {
    pub plan: StepPlan,
    pub config: Configuration,
    pub z_pairs: Option<Vec<(bool, bool)>>,
}

/// Transform `(lattice, params, config)` once. The lattice must carry
/// per-cell self-dual parameters.
pub fn transform_once(
    lattice: Arc<MixedLattice>,
    params: &ParamMap,
    config: &Configuration,
    op: SweepOp,
    seed: u64,
    step_index: u64,
) -> Result<StepOutput> {
    let plan = StepPlan::build(lattice, params, op, &[])?;
    let (config, z_pairs) = plan.apply(config, seed, 0, step_index, true);
    Ok(StepOutput {
        plan,
        config,
        z_pairs,
    })
}

/// Transform the output of a previous step, carrying its boundary-artifact
/// edges forward as exclusions.
pub fn transform_chain(
    prev: &StepOutput,
    op: SweepOp,
    seed: u64,
    step_index: u64,
) -> Result<StepOutput> {
    let src = prev.plan.img_lattice().clone();
    let mut excluded = vec![false; src.edge_count()];
    for &e in prev.plan.artifact_img_edges() {
        excluded[e as usize] = true;
    }
    let plan = StepPlan::build(src, prev.plan.img_params(), op, &excluded)?;
    let (config, z_pairs) = plan.apply(&prev.config, seed, 0, step_index, true);
    Ok(StepOutput {
        plan,
        config,
        z_pairs,
    })
}

/// A precomputed sweep of `k` composite steps.
pub struct SweepPlan {
    pub pair: SweepPair,
    pub k: usize,
    steps: Vec<StepPlan>,
}

impl SweepPlan {
    /// Plan `(S o T)^k` starting from a mixed triangular lattice. Validates
    /// that the patch retains one full square (resp. triangular) row beyond
    /// the final interface, so sweeps never run off the patch.
    pub fn new(
        lattice: Arc<MixedLattice>,
        params: &ParamMap,
        pair: SweepPair,
        k: usize,
    ) -> Result<SweepPlan> {
        if lattice.kind() != LatticeKind::MixedTriangular {
            return Err(Error::IncompatibleOp {
                op: "sweep".into(),
                lattice: lattice.kind().name().to_string(),
            });
        }
        let m = lattice.interface().unwrap();
        let bounds = lattice.bounds();
        match pair {
            SweepPair::Down => {
                let final_m = m - k as i64;
                if ((final_m - 1) as f64) < bounds.y0 {
                    return Err(Error::PatchTooSmall(format!(
                        "down sweep of {k} steps needs y0 <= {}",
                        final_m - 1
                    )));
                }
            }
            SweepPair::Up => {
                let final_m = m + k as i64;
                if (final_m + 1) as f64 > bounds.y1 {
                    return Err(Error::PatchTooSmall(format!(
                        "up sweep of {k} steps needs y1 >= {}",
                        final_m + 1
                    )));
                }
            }
        }
        let mut steps = Vec::with_capacity(2 * k);
        let mut current = lattice;
        let mut current_params = params.clone();
        let mut excluded: Vec<bool> = Vec::new();
        for _ in 0..k {
            let (t_op, s_op) = match pair {
                SweepPair::Down => (SweepOp::TUp, SweepOp::SDown),
                SweepPair::Up => (SweepOp::TDown, SweepOp::SUp),
            };
            for op in [t_op, s_op] {
                let step = StepPlan::build(current, &current_params, op, &excluded)?;
                current = step.img_lattice.clone();
                current_params = step.img_params.clone();
                excluded = vec![false; current.edge_count()];
                for &e in &step.unset_img {
                    excluded[e as usize] = true;
                }
                steps.push(step);
            }
        }
        Ok(SweepPlan { pair, k, steps })
    }

    pub fn steps(&self) -> &[StepPlan] {
        &self.steps
    }

    /// Lattice after `i` half-steps (0 = start).
    pub fn lattice_at(&self, i: usize) -> &Arc<MixedLattice> {
        if i == 0 {
            self.steps[0].src_lattice()
        } else {
            self.steps[i - 1].img_lattice()
        }
    }

    /// Lattice after `j` composite steps.
    pub fn lattice_after_composite(&self, j: usize) -> &Arc<MixedLattice> {
        self.lattice_at(2 * j)
    }

    pub fn params_at(&self, i: usize) -> &ParamMap {
        assert!(i >= 1);
        self.steps[i - 1].img_params()
    }

    /// Run the sweep on a configuration; records per-step outputs.
    pub fn run(&self, initial: Configuration, seed: u64, trial: u64, record_z: bool) -> SweepTrace {
        let mut configs = Vec::with_capacity(self.steps.len());
        let mut z_records = Vec::with_capacity(self.steps.len());
        let mut interfaces = Vec::with_capacity(self.steps.len() + 1);
        interfaces.push(self.steps[0].src_lattice().interface().unwrap());
        let mut current = initial.clone();
        for (i, step) in self.steps.iter().enumerate() {
            let (next, z) = step.apply(&current, seed, trial, i as u64, record_z);
            interfaces.push(step.img_lattice().interface().unwrap());
            z_records.push(z);
            configs.push(next.clone());
            current = next;
        }
        SweepTrace {
            initial,
            configs,
            z_records,
            interfaces,
        }
    }
}

/// Replayable record of one sweep run: the configuration after every
/// half-step, the auxiliary-pair draws of the star steps, and the interface
/// height bookkeeping.
pub struct SweepTrace {
    pub initial: Configuration,
    pub configs: Vec<Configuration>,
    pub z_records: Vec<Option<Vec<(bool, bool)>>>,
    pub interfaces: Vec<i64>,
}

impl SweepTrace {
    /// Configuration after `j` composite steps.
    pub fn config_after_composite(&self, j: usize) -> &Configuration {
        if j == 0 {
            &self.initial
        } else {
            &self.configs[2 * j - 1]
        }
    }
}

/// Convenience wrapper: plan and run a `k`-composite sweep for one trial.
pub fn sweep(
    lattice: Arc<MixedLattice>,
    params: &ParamMap,
    config: Configuration,
    pair: SweepPair,
    k: usize,
    seed: u64,
) -> Result<(SweepPlan, SweepTrace)> {
    if k == 0 {
        return Err(Error::PatchTooSmall("sweep needs k >= 1".into()));
    }
    let plan = SweepPlan::new(lattice, params, pair, k)?;
    let trace = plan.run(config, seed, 0, false);
    Ok((plan, trace))
}
