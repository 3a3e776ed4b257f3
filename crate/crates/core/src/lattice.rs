//! Finite patches of the square, triangular, hexagonal, and mixed lattices,
//! with classed edges and labeled cells.
//!
//! All lattices except the pure square live on a common integer grid: a
//! vertex `(u, w)` embeds at `(u * sqrt(3)/2, w / 2)`. Rectangles of the
//! square part are `sqrt(3) x 1`, triangles have side `sqrt(3)`, hexagons
//! side 1, so the grid is exact for every lattice produced by the
//! star-triangle sweeps. The pure square lattice uses unit spacing
//! (vertex set `Z^2`) for standalone tests.
//!
//! Integer coordinates are the source of truth; the real embedding is
//! derived from them.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{Point, Rect, GEOM_EPS, SQRT3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    /// Ordinary lattice vertex (square part, interface, or triangular rows).
    Node,
    /// Star centre; exists only in hexagonal-type regions.
    Center,
}

/// Vertex identity on the global grid. Identities are stable across
/// transformations: a vertex surviving a sweep step keeps `(u, w)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VertexId {
    pub u: i32,
    pub w: i32,
    pub kind: NodeKind,
}

impl VertexId {
    pub fn node(u: i32, w: i32) -> Self {
        VertexId {
            u,
            w,
            kind: NodeKind::Node,
        }
    }

    pub fn center(u: i32, w: i32) -> Self {
        VertexId {
            u,
            w,
            kind: NodeKind::Center,
        }
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let k = match self.kind {
            NodeKind::Node => "n",
            NodeKind::Center => "c",
        };
        write!(f, "{k}({},{})", self.u, self.w)
    }
}

/// The six edge classes of a mixed lattice. Every edge of every lattice kind
/// receives exactly one class; the intensity rules of the params module key
/// off this class alone (plus the row, for height profiles).
///
/// Orientation conventions, with "NE" meaning the axis from lower-left to
/// upper-right:
/// * `UpTriLeft` — left edge of an upwards triangle, NE axis, length sqrt(3);
/// * `UpTriRight` — right edge of an upwards triangle, NW axis;
/// * `UpStarLeft` — left arm of an upwards star, NE axis, length 1;
/// * `UpStarRight` — right arm of an upwards star, NW axis.
///
/// Edges of downwards triangles and stars repeat the same six classes: a
/// down-triangle side is also the side of an upwards triangle, and down-star
/// arms lie on the same two axes as up-star arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeClass {
    Horizontal,
    Vertical,
    UpTriLeft,
    UpTriRight,
    UpStarLeft,
    UpStarRight,
}

impl EdgeClass {
    pub fn name(&self) -> &'static str {
        match self {
            EdgeClass::Horizontal => "horizontal",
            EdgeClass::Vertical => "vertical",
            EdgeClass::UpTriLeft => "upTriLeft",
            EdgeClass::UpTriRight => "upTriRight",
            EdgeClass::UpStarLeft => "upStarLeft",
            EdgeClass::UpStarRight => "upStarRight",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    PureSquare,
    PureTriangular,
    PureHexagonal,
    MixedTriangular,
    MixedHexagonal,
}

impl LatticeKind {
    pub fn name(&self) -> &'static str {
        match self {
            LatticeKind::PureSquare => "pureSquare",
            LatticeKind::PureTriangular => "pureTriangular",
            LatticeKind::PureHexagonal => "pureHexagonal",
            LatticeKind::MixedTriangular => "mixedTriangular",
            LatticeKind::MixedHexagonal => "mixedHexagonal",
        }
    }

    pub fn is_mixed(&self) -> bool {
        matches!(
            self,
            LatticeKind::MixedTriangular | LatticeKind::MixedHexagonal
        )
    }
}

/// The two geometries a mixed hexagonal lattice can have, depending on which
/// triangle transformation produced it. `DownStars` is the canonical form
/// (image of the up-triangle transformation; the next sweep step consumes
/// downwards stars and moves the interface down). `UpStars` is the image of
/// the down-triangle transformation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HexVariant {
    DownStars,
    UpStars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellKind {
    UpTriangle,
    DownTriangle,
    UpStar,
    DownStar,
}

impl CellKind {
    pub fn name(&self) -> &'static str {
        match self {
            CellKind::UpTriangle => "upTriangle",
            CellKind::DownTriangle => "downTriangle",
            CellKind::UpStar => "upStar",
            CellKind::DownStar => "downStar",
        }
    }

    pub fn is_star(&self) -> bool {
        matches!(self, CellKind::UpStar | CellKind::DownStar)
    }
}

/// A labeled three-edge cell.
///
/// `exterior[i]` is vertex `i` of the cell; `edges[i]` is the member edge
/// opposite it: for triangles `e_i` joins the two exterior vertices other
/// than `i`, for stars `s_i` joins the centre to exterior vertex `i`.
/// Labels are chosen so that `e_i` carries intensity `p_i` and `s_i`
/// carries `1 - p_i`:
/// * `e_0` horizontal, `s_0` vertical;
/// * `e_1` on the NW axis, `s_1` on the NE axis;
/// * `e_2` on the NE axis, `s_2` on the NW axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub kind: CellKind,
    pub exterior: [u32; 3],
    pub center: Option<u32>,
    pub edges: [u32; 3],
    /// Row index of the cell (triangular row of its base or apex), used by
    /// height profiles.
    pub row: i64,
}

#[derive(Debug, Clone)]
pub struct EdgeRec {
    pub a: u32,
    pub b: u32,
    pub class: EdgeClass,
}

#[derive(Debug, Clone)]
pub struct MixedLattice {
    kind: LatticeKind,
    hex_variant: Option<HexVariant>,
    /// Interface height for mixed kinds (an integer; the line `y = m`).
    interface: Option<i64>,
    bounds: Rect,
    vertices: Vec<VertexId>,
    positions: Vec<Point>,
    index: HashMap<VertexId, u32>,
    edges: Vec<EdgeRec>,
    edge_index: HashMap<(u32, u32), u32>,
    adjacency: Vec<Vec<(u32, u32)>>,
}

/// Construct a lattice patch. `interface` is required for the two mixed
/// kinds and ignored otherwise. Mixed hexagonal patches are built in the
/// canonical `DownStars` geometry.
pub fn build_lattice(
    kind: LatticeKind,
    bounds: Rect,
    interface: Option<i64>,
) -> Result<MixedLattice> {
    if bounds.is_empty() {
        return Err(Error::DegenerateRegion(bounds.to_string()));
    }
    if kind.is_mixed() && interface.is_none() {
        return Err(Error::MissingInterface);
    }
    let variant = match kind {
        LatticeKind::MixedHexagonal | LatticeKind::PureHexagonal => Some(HexVariant::DownStars),
        _ => None,
    };
    Ok(MixedLattice::build(kind, bounds, interface, variant))
}

/// Construct a mixed hexagonal patch in an explicit variant geometry.
pub fn build_mixed_hexagonal(
    bounds: Rect,
    interface: i64,
    variant: HexVariant,
) -> Result<MixedLattice> {
    if bounds.is_empty() {
        return Err(Error::DegenerateRegion(bounds.to_string()));
    }
    Ok(MixedLattice::build(
        LatticeKind::MixedHexagonal,
        bounds,
        Some(interface),
        Some(variant),
    ))
}

impl MixedLattice {
    fn build(
        kind: LatticeKind,
        bounds: Rect,
        interface: Option<i64>,
        hex_variant: Option<HexVariant>,
    ) -> MixedLattice {
        let mut lat = MixedLattice {
            kind,
            hex_variant,
            interface,
            bounds,
            vertices: Vec::new(),
            positions: Vec::new(),
            index: HashMap::new(),
            edges: Vec::new(),
            edge_index: HashMap::new(),
            adjacency: Vec::new(),
        };
        lat.build_vertices();
        lat.build_edges();
        lat
    }

    fn embed_id(&self, v: &VertexId) -> Point {
        if self.kind == LatticeKind::PureSquare {
            Point::new(v.u as f64, v.w as f64)
        } else {
            Point::new(v.u as f64 * SQRT3 / 2.0, v.w as f64 / 2.0)
        }
    }

    fn in_bounds_id(&self, v: &VertexId) -> bool {
        self.bounds.contains(&self.embed_id(v))
    }

    /// Whether the (unbounded) lattice has a vertex with this identity;
    /// bounds are checked separately.
    fn exists_in_pattern(&self, v: &VertexId) -> bool {
        let m2 = self.interface.map(|m| 2 * m);
        match self.kind {
            LatticeKind::PureSquare => v.kind == NodeKind::Node,
            LatticeKind::PureTriangular => {
                v.kind == NodeKind::Node
                    && v.w.rem_euclid(3) == 0
                    && (v.u - v.w / 3).rem_euclid(2) == 0
            }
            LatticeKind::PureHexagonal => match v.kind {
                NodeKind::Node => v.w.rem_euclid(3) == 0 && (v.u - v.w / 3).rem_euclid(2) == 0,
                NodeKind::Center => {
                    v.w.rem_euclid(3) == 1 && (v.u - (v.w - 1) / 3 - 1).rem_euclid(2) == 0
                }
            },
            LatticeKind::MixedTriangular => {
                let m2 = m2.unwrap();
                v.kind == NodeKind::Node && node_in_mixed_pattern(v.u, v.w, m2)
            }
            LatticeKind::MixedHexagonal => {
                let m2 = m2.unwrap();
                match v.kind {
                    NodeKind::Node => node_in_mixed_pattern(v.u, v.w, m2),
                    NodeKind::Center => {
                        let w = v.w as i64;
                        match self.hex_variant.unwrap() {
                            HexVariant::DownStars => {
                                // centres sit at w = 2m + 3r + 1, u = (base-left u) + 1
                                w >= m2 + 1
                                    && (w - m2 - 1) % 3 == 0
                                    && (v.u as i64 - (w - m2 - 1) / 3 - 1).rem_euclid(2) == 0
                            }
                            HexVariant::UpStars => {
                                // centres sit at w = 2m + 3r + 2, directly above apexes
                                w >= m2 + 2
                                    && (w - m2 - 2) % 3 == 0
                                    && (v.u as i64 - (w - m2 - 2) / 3).rem_euclid(2) == 0
                            }
                        }
                    }
                }
            }
        }
    }

    fn push_vertex(&mut self, v: VertexId) {
        if self.in_bounds_id(&v) && !self.index.contains_key(&v) {
            let idx = self.vertices.len() as u32;
            self.index.insert(v, idx);
            let p = self.embed_id(&v);
            self.vertices.push(v);
            self.positions.push(p);
            self.adjacency.push(Vec::new());
        }
    }

    fn build_vertices(&mut self) {
        let w_min = ((self.bounds.y0 - GEOM_EPS) * self.y_scale()).ceil() as i64;
        let w_max = ((self.bounds.y1 + GEOM_EPS) * self.y_scale()).floor() as i64;
        let u_min = ((self.bounds.x0 - GEOM_EPS) / self.x_unit()).ceil() as i64;
        let u_max = ((self.bounds.x1 + GEOM_EPS) / self.x_unit()).floor() as i64;
        for w in w_min..=w_max {
            for u in u_min..=u_max {
                for kind in [NodeKind::Node, NodeKind::Center] {
                    let v = VertexId {
                        u: u as i32,
                        w: w as i32,
                        kind,
                    };
                    if self.exists_in_pattern(&v) {
                        self.push_vertex(v);
                    }
                }
            }
        }
    }

    fn y_scale(&self) -> f64 {
        if self.kind == LatticeKind::PureSquare {
            1.0
        } else {
            2.0
        }
    }

    fn x_unit(&self) -> f64 {
        if self.kind == LatticeKind::PureSquare {
            1.0
        } else {
            SQRT3 / 2.0
        }
    }

    fn try_add_edge(&mut self, a: VertexId, b: VertexId, class: EdgeClass) {
        let (Some(&ia), Some(&ib)) = (self.index.get(&a), self.index.get(&b)) else {
            return;
        };
        let key = (ia.min(ib), ia.max(ib));
        if self.edge_index.contains_key(&key) {
            return;
        }
        let eidx = self.edges.len() as u32;
        self.edge_index.insert(key, eidx);
        self.edges.push(EdgeRec {
            a: ia,
            b: ib,
            class,
        });
        self.adjacency[ia as usize].push((eidx, ib));
        self.adjacency[ib as usize].push((eidx, ia));
    }

    fn build_edges(&mut self) {
        let m2 = self.interface.map(|m| (2 * m) as i32);
        // Vertices were pushed in row-major order; emitting per-vertex
        // outgoing edges in a fixed order makes edge indices canonical.
        for i in 0..self.vertices.len() {
            let v = self.vertices[i];
            match self.kind {
                LatticeKind::PureSquare => {
                    self.try_add_edge(v, VertexId::node(v.u + 1, v.w), EdgeClass::Horizontal);
                    self.try_add_edge(v, VertexId::node(v.u, v.w + 1), EdgeClass::Vertical);
                }
                LatticeKind::PureTriangular => {
                    self.try_add_edge(v, VertexId::node(v.u + 2, v.w), EdgeClass::Horizontal);
                    self.try_add_edge(v, VertexId::node(v.u + 1, v.w + 3), EdgeClass::UpTriLeft);
                    self.try_add_edge(v, VertexId::node(v.u - 1, v.w + 3), EdgeClass::UpTriRight);
                }
                LatticeKind::PureHexagonal => {
                    if v.kind == NodeKind::Center {
                        self.try_add_edge(v, VertexId::node(v.u, v.w + 2), EdgeClass::Vertical);
                        self.try_add_edge(
                            v,
                            VertexId::node(v.u - 1, v.w - 1),
                            EdgeClass::UpStarLeft,
                        );
                        self.try_add_edge(
                            v,
                            VertexId::node(v.u + 1, v.w - 1),
                            EdgeClass::UpStarRight,
                        );
                    }
                }
                LatticeKind::MixedTriangular => {
                    let m2 = m2.unwrap();
                    self.try_add_edge(v, VertexId::node(v.u + 2, v.w), EdgeClass::Horizontal);
                    if v.w + 2 <= m2 {
                        self.try_add_edge(v, VertexId::node(v.u, v.w + 2), EdgeClass::Vertical);
                    }
                    if v.w >= m2 {
                        self.try_add_edge(
                            v,
                            VertexId::node(v.u + 1, v.w + 3),
                            EdgeClass::UpTriLeft,
                        );
                        self.try_add_edge(
                            v,
                            VertexId::node(v.u - 1, v.w + 3),
                            EdgeClass::UpTriRight,
                        );
                    }
                }
                LatticeKind::MixedHexagonal => {
                    let m2 = m2.unwrap();
                    match self.hex_variant.unwrap() {
                        HexVariant::DownStars => {
                            if v.kind == NodeKind::Node {
                                if v.w + 2 <= m2 {
                                    self.try_add_edge(
                                        v,
                                        VertexId::node(v.u + 2, v.w),
                                        EdgeClass::Horizontal,
                                    );
                                    self.try_add_edge(
                                        v,
                                        VertexId::node(v.u, v.w + 2),
                                        EdgeClass::Vertical,
                                    );
                                } else if v.w <= m2 {
                                    self.try_add_edge(
                                        v,
                                        VertexId::node(v.u, v.w + 2),
                                        EdgeClass::Vertical,
                                    );
                                }
                            } else {
                                self.try_add_edge(
                                    v,
                                    VertexId::node(v.u, v.w + 2),
                                    EdgeClass::Vertical,
                                );
                                self.try_add_edge(
                                    v,
                                    VertexId::node(v.u - 1, v.w - 1),
                                    EdgeClass::UpStarLeft,
                                );
                                self.try_add_edge(
                                    v,
                                    VertexId::node(v.u + 1, v.w - 1),
                                    EdgeClass::UpStarRight,
                                );
                            }
                        }
                        HexVariant::UpStars => {
                            if v.kind == NodeKind::Node {
                                if v.w <= m2 {
                                    self.try_add_edge(
                                        v,
                                        VertexId::node(v.u + 2, v.w),
                                        EdgeClass::Horizontal,
                                    );
                                }
                                if v.w + 2 <= m2 {
                                    self.try_add_edge(
                                        v,
                                        VertexId::node(v.u, v.w + 2),
                                        EdgeClass::Vertical,
                                    );
                                }
                                if v.w >= m2 {
                                    self.try_add_edge(
                                        v,
                                        VertexId::center(v.u, v.w + 2),
                                        EdgeClass::Vertical,
                                    );
                                }
                            } else {
                                self.try_add_edge(
                                    v,
                                    VertexId::node(v.u - 1, v.w + 1),
                                    EdgeClass::UpStarRight,
                                );
                                self.try_add_edge(
                                    v,
                                    VertexId::node(v.u + 1, v.w + 1),
                                    EdgeClass::UpStarLeft,
                                );
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn hex_variant(&self) -> Option<HexVariant> {
        self.hex_variant
    }

    pub fn interface(&self) -> Option<i64> {
        self.interface
    }

    pub fn bounds(&self) -> Rect {
        self.bounds
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex_ids(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn edge_recs(&self) -> &[EdgeRec] {
        &self.edges
    }

    pub fn vertex_index(&self, v: &VertexId) -> Option<u32> {
        self.index.get(v).copied()
    }

    pub fn vertex_id(&self, idx: u32) -> VertexId {
        self.vertices[idx as usize]
    }

    pub fn position(&self, idx: u32) -> Point {
        self.positions[idx as usize]
    }

    /// Embedding of a vertex; errors on vertices not in this patch.
    pub fn embed(&self, v: &VertexId) -> Result<Point> {
        match self.index.get(v) {
            Some(&i) => Ok(self.positions[i as usize]),
            None => Err(Error::UnknownVertex(v.to_string())),
        }
    }

    pub fn edge_between(&self, a: u32, b: u32) -> Option<u32> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn edge_between_ids(&self, a: &VertexId, b: &VertexId) -> Option<u32> {
        let ia = self.vertex_index(a)?;
        let ib = self.vertex_index(b)?;
        self.edge_between(ia, ib)
    }

    pub fn neighbors(&self, v: u32) -> &[(u32, u32)] {
        &self.adjacency[v as usize]
    }

    pub fn edge(&self, e: u32) -> &EdgeRec {
        &self.edges[e as usize]
    }

    pub fn edge_endpoints(&self, e: u32) -> (Point, Point) {
        let rec = &self.edges[e as usize];
        (
            self.positions[rec.a as usize],
            self.positions[rec.b as usize],
        )
    }

    /// Midpoint height of an edge in integer half-units; the triangular row
    /// of an edge for height profiles is derived from this.
    pub fn edge_w_span(&self, e: u32) -> (i32, i32) {
        let rec = &self.edges[e as usize];
        let wa = self.vertices[rec.a as usize].w;
        let wb = self.vertices[rec.b as usize].w;
        (wa.min(wb), wa.max(wb))
    }

    /// Enumerate the complete cells of the given kind, row-major. Boundary
    /// cells with missing vertices are excluded. Requesting triangle cells
    /// on a hexagonal lattice (or stars on a triangular one) is an error;
    /// the pure square lattice yields an empty list for every kind.
    pub fn enumerate_cells(&self, kind: CellKind) -> Result<Vec<Cell>> {
        match (self.kind, kind.is_star()) {
            (LatticeKind::PureSquare, _) => return Ok(Vec::new()),
            (LatticeKind::PureTriangular | LatticeKind::MixedTriangular, true)
            | (LatticeKind::PureHexagonal | LatticeKind::MixedHexagonal, false) => {
                return Err(Error::IncompatibleCellKind {
                    cell: kind.name().to_string(),
                    lattice: self.kind.name().to_string(),
                })
            }
            _ => {}
        }
        let mut cells = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            let anchor = i as u32;
            if let Some(cell) = self.cell_at(kind, anchor, v) {
                cells.push(cell);
            }
        }
        Ok(cells)
    }

    /// Row index of a triangular row at integer height-half `w`, relative to
    /// the interface for mixed kinds and absolute for pure kinds.
    fn tri_row_of_w(&self, w: i32) -> i64 {
        match self.interface {
            Some(m) => ((w as i64) - 2 * m) / 3,
            None => (w as i64) / 3,
        }
    }

    fn cell_at(&self, kind: CellKind, anchor: u32, v: &VertexId) -> Option<Cell> {
        let m2 = self.interface.map(|m| (2 * m) as i32);
        let idx = |id: VertexId| self.index.get(&id).copied();
        match kind {
            CellKind::UpTriangle => {
                // anchored at the base-left vertex of the triangle
                if v.kind != NodeKind::Node {
                    return None;
                }
                if let Some(m2) = m2 {
                    if v.w < m2 || (v.w - m2) % 3 != 0 {
                        return None;
                    }
                } else if v.w % 3 != 0 {
                    return None;
                }
                let apex = idx(VertexId::node(v.u + 1, v.w + 3))?;
                let base_l = anchor;
                let base_r = idx(VertexId::node(v.u + 2, v.w))?;
                Some(Cell {
                    kind,
                    exterior: [apex, base_l, base_r],
                    center: None,
                    edges: [
                        self.edge_between(base_l, base_r)?,
                        self.edge_between(base_r, apex)?,
                        self.edge_between(base_l, apex)?,
                    ],
                    row: self.tri_row_of_w(v.w),
                })
            }
            CellKind::DownTriangle => {
                // anchored at the apex (bottom vertex)
                if v.kind != NodeKind::Node {
                    return None;
                }
                if let Some(m2) = m2 {
                    if v.w < m2 || (v.w - m2) % 3 != 0 {
                        return None;
                    }
                } else if v.w % 3 != 0 {
                    return None;
                }
                let apex = anchor;
                let top_r = idx(VertexId::node(v.u + 1, v.w + 3))?;
                let top_l = idx(VertexId::node(v.u - 1, v.w + 3))?;
                Some(Cell {
                    kind,
                    exterior: [apex, top_r, top_l],
                    center: None,
                    edges: [
                        self.edge_between(top_r, top_l)?,
                        self.edge_between(apex, top_l)?,
                        self.edge_between(apex, top_r)?,
                    ],
                    row: self.tri_row_of_w(v.w),
                })
            }
            CellKind::UpStar => match self.hex_variant? {
                // Image cells of the up-triangle transformation: centre is a
                // Center vertex, arms reach down to the old triangle base.
                HexVariant::DownStars => {
                    if v.kind != NodeKind::Center {
                        return None;
                    }
                    let apex = idx(VertexId::node(v.u, v.w + 2))?;
                    let base_l = idx(VertexId::node(v.u - 1, v.w - 1))?;
                    let base_r = idx(VertexId::node(v.u + 1, v.w - 1))?;
                    Some(Cell {
                        kind,
                        exterior: [apex, base_l, base_r],
                        center: Some(anchor),
                        edges: [
                            self.edge_between(anchor, apex)?,
                            self.edge_between(anchor, base_l)?,
                            self.edge_between(anchor, base_r)?,
                        ],
                        row: self.tri_row_of_w(v.w - 1),
                    })
                }
                // Consumable cells of the up-star transformation: centre is
                // an old lattice node strictly above the interface.
                HexVariant::UpStars => {
                    if v.kind != NodeKind::Node {
                        return None;
                    }
                    let m2 = m2.unwrap();
                    if v.w < m2 + 3 || (v.w - m2) % 3 != 0 {
                        return None;
                    }
                    let above = idx(VertexId::center(v.u, v.w + 2))?;
                    let below_l = idx(VertexId::center(v.u - 1, v.w - 1))?;
                    let below_r = idx(VertexId::center(v.u + 1, v.w - 1))?;
                    Some(Cell {
                        kind,
                        exterior: [above, below_l, below_r],
                        center: Some(anchor),
                        edges: [
                            self.edge_between(anchor, above)?,
                            self.edge_between(anchor, below_l)?,
                            self.edge_between(anchor, below_r)?,
                        ],
                        row: self.tri_row_of_w(v.w),
                    })
                }
            },
            CellKind::DownStar => match self.hex_variant? {
                // Consumable cells of the down-star transformation: centre is
                // an old lattice node at or above the interface. At the
                // interface row the stem is the square vertical edge below.
                HexVariant::DownStars => {
                    if v.kind != NodeKind::Node {
                        return None;
                    }
                    let below = if let Some(m2) = m2 {
                        if v.w < m2 || (v.w - m2) % 3 != 0 {
                            return None;
                        }
                        if v.w == m2 {
                            idx(VertexId::node(v.u, v.w - 2))?
                        } else {
                            idx(VertexId::center(v.u, v.w - 2))?
                        }
                    } else {
                        if v.w % 3 != 0 {
                            return None;
                        }
                        idx(VertexId::center(v.u, v.w - 2))?
                    };
                    let up_r = idx(VertexId::center(v.u + 1, v.w + 1))?;
                    let up_l = idx(VertexId::center(v.u - 1, v.w + 1))?;
                    Some(Cell {
                        kind,
                        exterior: [below, up_r, up_l],
                        center: Some(anchor),
                        edges: [
                            self.edge_between(anchor, below)?,
                            self.edge_between(anchor, up_r)?,
                            self.edge_between(anchor, up_l)?,
                        ],
                        row: self.tri_row_of_w(v.w),
                    })
                }
                // Image cells of the down-triangle transformation.
                HexVariant::UpStars => {
                    if v.kind != NodeKind::Center {
                        return None;
                    }
                    let apex = idx(VertexId::node(v.u, v.w - 2))?;
                    let top_r = idx(VertexId::node(v.u + 1, v.w + 1))?;
                    let top_l = idx(VertexId::node(v.u - 1, v.w + 1))?;
                    Some(Cell {
                        kind,
                        exterior: [apex, top_r, top_l],
                        center: Some(anchor),
                        edges: [
                            self.edge_between(anchor, apex)?,
                            self.edge_between(anchor, top_r)?,
                            self.edge_between(anchor, top_l)?,
                        ],
                        row: self.tri_row_of_w(v.w - 2),
                    })
                }
            },
        }
    }
}

fn node_in_mixed_pattern(u: i32, w: i32, m2: i64) -> bool {
    let w = w as i64;
    if w <= m2 {
        w.rem_euclid(2) == 0 && (u as i64).rem_euclid(2) == 0
    } else {
        (w - m2) % 3 == 0 && (u as i64 - (w - m2) / 3).rem_euclid(2) == 0
    }
}
