// SPDX-License-Identifier: Apache-2.0

//! Color propagation through 1:4 triangle refinement and coarsening.
//!
//! A [`RefinedMesh`] keeps the whole refinement hierarchy. Its cells are
//! numbered so that the root cells come first, in the order of the base mesh,
//! and every child has a larger id than its parent. The leaves form the
//! active mesh, which is nonconforming wherever a refined cell borders an
//! unrefined one: the coarse side then stays one surface of the coarse
//! element, and each half of it is a separate surface shared with one fine
//! element.
//!
//! Colors live on geometric edges. Refining a cell splits each side of color
//! `c` into two halves colored [`child_color`]`(c, 1)` and `(c, 2)`; the half
//! touching the lower global vertex id is the first. The three new interior
//! edges take the color of the parent side they are parallel to. Coarsening
//! gives each parent side the color of the interior edge parallel to it,
//! which undoes refinement exactly.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::coloring::{verify_coloring, Color, ColoringDiagnostic, SurfaceColoring};
use crate::mesh::{
    Element, ElementId, ElementKind, Mesh, MeshError, RawElement, Surface, SurfaceId, VertexId,
};

pub type CellId = usize;

type EdgeKey = (VertexId, VertexId);

fn edge(a: VertexId, b: VertexId) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Number of colors of a refined triangle mesh.
pub const REFINED_PALETTE: Color = 6;

/// Color of the `m`-th child (1 or 2) of a parent edge colored `c`.
pub fn child_color(c: Color, m: u8) -> Color {
    debug_assert!((1..=REFINED_PALETTE).contains(&c) && (1..=2).contains(&m));
    ((c as u32 + 3 * m as u32 + 2) % 6) as Color + 1
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AmrError {
    #[error("refinement levels of neighbours across edge {edge:?} differ by more than one")]
    LevelConstraintViolated { edge: EdgeKey },
    #[error("cell {cell} is a {kind}; only triangles can be refined")]
    UnrefinableKind { cell: CellId, kind: ElementKind },
    #[error("cell {cell} does not have four unrefined children")]
    PartialFamily { cell: CellId },
    #[error("cell {cell} is already refined")]
    NotALeaf { cell: CellId },
    #[error("no cell {cell}")]
    UnknownCell { cell: CellId },
    #[error("coloring is not usable for refinement: {0}")]
    InvalidColoring(String),
    #[error("invalid refinement hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

impl From<ColoringDiagnostic> for AmrError {
    fn from(d: ColoringDiagnostic) -> Self {
        AmrError::InvalidColoring(d.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    vertices: [VertexId; 3],
    parent: Option<CellId>,
    children: Option<[CellId; 4]>,
    level: u32,
}

impl Cell {
    /// Counterclockwise corners; side `i` runs from corner `i` to `i + 1`.
    pub fn vertices(&self) -> [VertexId; 3] {
        self.vertices
    }

    pub fn parent(&self) -> Option<CellId> {
        self.parent
    }

    /// Children in the order corner 0, corner 1, corner 2, center.
    pub fn children(&self) -> Option<[CellId; 4]> {
        self.children
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }

    fn side(&self, i: usize) -> EdgeKey {
        edge(self.vertices[i], self.vertices[(i + 1) % 3])
    }
}

/// A triangle mesh with its refinement hierarchy and 6-color edge coloring.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinedMesh {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    base_vertices: usize,
    cells: Vec<Cell>,
    edge_colors: HashMap<EdgeKey, Color>,
    active: Mesh,
    active_cells: Vec<CellId>,
    coloring: SurfaceColoring,
}

impl RefinedMesh {
    /// Wraps a conforming triangle mesh and its complete 3-coloring.
    pub fn from_base(mesh: &Mesh, coloring: &SurfaceColoring) -> Result<Self, AmrError> {
        for (e, el) in mesh.elements().iter().enumerate() {
            if el.kind() != ElementKind::Triangle {
                return Err(AmrError::UnrefinableKind {
                    cell: e,
                    kind: el.kind(),
                });
            }
        }
        if !mesh.is_conforming() {
            return Err(AmrError::InvalidHierarchy(
                "base mesh is nonconforming".into(),
            ));
        }
        if let Some(d) = verify_coloring(mesh, coloring).into_iter().next() {
            return Err(d.into());
        }
        if coloring.max_color().is_some_and(|c| c > 3) {
            return Err(AmrError::InvalidColoring(
                "base coloring must use colors 1..=3".into(),
            ));
        }
        let cells = mesh
            .elements()
            .iter()
            .map(|el| Cell {
                vertices: el.vertices().try_into().unwrap(),
                parent: None,
                children: None,
                level: 0,
            })
            .collect();
        let edge_colors = mesh
            .surfaces()
            .iter()
            .zip(coloring.iter())
            .map(|(s, c)| (edge(s.vertices()[0], s.vertices()[1]), c.unwrap()))
            .collect();
        let mut out = RefinedMesh {
            dim: mesh.dim(),
            vertices: mesh.vertices().to_vec(),
            base_vertices: mesh.vertex_count(),
            cells,
            edge_colors,
            active: mesh.clone(),
            active_cells: (0..mesh.element_count()).collect(),
            coloring: coloring.clone(),
        };
        out.rebuild()?;
        Ok(out)
    }

    /// Rebuilds a hierarchy from its cells, their parents and the coloring
    /// of the active mesh. Each parent must precede its four children, which
    /// must follow the corner/center layout produced by refinement.
    pub fn from_hierarchy(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        raw: &[RawElement],
        parents: &[Option<CellId>],
        coloring: &SurfaceColoring,
    ) -> Result<Self, AmrError> {
        if raw.len() != parents.len() {
            return Err(AmrError::InvalidHierarchy(format!(
                "{} cells but {} parent entries",
                raw.len(),
                parents.len()
            )));
        }
        let mut cells: Vec<Cell> = Vec::with_capacity(raw.len());
        let mut kids: Vec<Vec<CellId>> = vec![Vec::new(); raw.len()];
        for (id, (el, &parent)) in raw.iter().zip(parents).enumerate() {
            if el.kind != ElementKind::Triangle {
                return Err(AmrError::UnrefinableKind {
                    cell: id,
                    kind: el.kind,
                });
            }
            if let Some(&v) = el.vertices.iter().find(|&&v| v >= vertices.len()) {
                return Err(MeshError::DanglingVertexId {
                    element: id,
                    vertex: v,
                }
                .into());
            }
            let level = match parent {
                None => 0,
                Some(p) if p < id => {
                    kids[p].push(id);
                    cells[p].level + 1
                }
                Some(p) => {
                    return Err(AmrError::InvalidHierarchy(format!(
                        "cell {id} has parent {p}, which does not precede it"
                    )))
                }
            };
            if level == 0 && cells.last().is_some_and(|c| c.parent.is_some()) {
                return Err(AmrError::InvalidHierarchy(format!(
                    "root cell {id} follows refined cells"
                )));
            }
            cells.push(Cell {
                vertices: el.vertices[..].try_into().unwrap(),
                parent,
                children: None,
                level,
            });
        }

        let mut midpoints: HashSet<VertexId> = HashSet::new();
        for (p, k) in kids.iter().enumerate() {
            if k.is_empty() {
                continue;
            }
            if k.len() != 4 {
                return Err(AmrError::InvalidHierarchy(format!(
                    "cell {p} has {} children",
                    k.len()
                )));
            }
            let [v0, v1, v2] = cells[p].vertices;
            let c0 = cells[k[0]].vertices;
            let (m01, m20) = (c0[1], c0[2]);
            let m12 = cells[k[1]].vertices[2];
            let want = [
                [v0, m01, m20],
                [m01, v1, m12],
                [m20, m12, v2],
                [m01, m12, m20],
            ];
            for (i, &c) in k.iter().enumerate() {
                if cells[c].vertices != want[i] {
                    return Err(AmrError::InvalidHierarchy(format!(
                        "children of cell {p} do not follow the refinement layout"
                    )));
                }
            }
            midpoints.extend([m01, m12, m20]);
            cells[p].children = Some([k[0], k[1], k[2], k[3]]);
        }
        let base_vertices = midpoints.iter().copied().min().unwrap_or(vertices.len());
        let roots = cells.iter().filter(|c| c.parent.is_none());
        if roots.flat_map(|c| c.vertices).any(|v| v >= base_vertices) {
            return Err(AmrError::InvalidHierarchy(
                "midpoint vertices must follow all root vertices".into(),
            ));
        }

        let mut out = RefinedMesh {
            dim,
            vertices,
            base_vertices,
            cells,
            edge_colors: HashMap::new(),
            active: Mesh::build(dim, Vec::new(), Vec::new())?,
            active_cells: Vec::new(),
            coloring: SurfaceColoring::uncolored(0),
        };
        // topology first, with every edge provisionally colored 1
        for c in &out.cells {
            for i in 0..3 {
                out.edge_colors.insert(c.side(i), 1);
            }
        }
        out.rebuild_with(false)?;
        if coloring.len() != out.active.surface_count() {
            return Err(AmrError::InvalidColoring(format!(
                "{} colors for {} active surfaces",
                coloring.len(),
                out.active.surface_count()
            )));
        }
        let mut colors: HashMap<EdgeKey, Color> = HashMap::new();
        for (s, c) in out.active.surfaces().iter().zip(coloring.iter()) {
            let Some(c) = c else {
                return Err(AmrError::InvalidColoring(
                    "active coloring is incomplete".into(),
                ));
            };
            let v = s.vertices();
            colors.insert(edge(v[0], v[1]), c);
        }
        // sides of refined cells, deepest first
        for id in (0..out.cells.len()).rev() {
            let Some(k) = out.cells[id].children else {
                continue;
            };
            let inner = [
                edge(out.cells[k[3]].vertices[1], out.cells[k[3]].vertices[2]),
                edge(out.cells[k[3]].vertices[2], out.cells[k[3]].vertices[0]),
                edge(out.cells[k[3]].vertices[0], out.cells[k[3]].vertices[1]),
            ];
            for (i, key) in inner.into_iter().enumerate() {
                let c = *colors.get(&key).ok_or_else(|| {
                    AmrError::InvalidHierarchy(format!("edge {key:?} has no color"))
                })?;
                colors.entry(out.cells[id].side(i)).or_insert(c);
            }
        }
        for c in out.cells.iter().filter(|c| c.parent.is_none()) {
            if (0..3).any(|i| colors[&c.side(i)] > 3) {
                return Err(AmrError::InvalidColoring(
                    "root edges must use colors 1..=3".into(),
                ));
            }
        }
        let mids = out.midpoints();
        for (&(lo, hi), &m) in &mids {
            let c = colors[&(lo, hi)];
            if colors[&edge(lo, m)] != child_color(c, 1)
                || colors[&edge(m, hi)] != child_color(c, 2)
            {
                return Err(AmrError::InvalidColoring(format!(
                    "halves of edge {:?} do not follow the refinement mapping",
                    (lo, hi)
                )));
            }
        }
        out.edge_colors = colors;
        out.rebuild()?;
        if out.coloring != *coloring {
            return Err(AmrError::InvalidColoring(
                "active coloring does not follow the refinement mapping".into(),
            ));
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id]
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Cells as raw triangles, in cell id order.
    pub fn raw_cells(&self) -> Vec<RawElement> {
        self.cells
            .iter()
            .map(|c| RawElement::triangle(c.vertices[0], c.vertices[1], c.vertices[2]))
            .collect()
    }

    pub fn parents(&self) -> Vec<Option<CellId>> {
        self.cells.iter().map(|c| c.parent).collect()
    }

    /// The leaves as a (possibly nonconforming) mesh.
    pub fn active_mesh(&self) -> &Mesh {
        &self.active
    }

    /// Coloring of the active mesh over `{1..=6}`.
    pub fn coloring(&self) -> &SurfaceColoring {
        &self.coloring
    }

    /// Cell of each active element.
    pub fn active_cells(&self) -> &[CellId] {
        &self.active_cells
    }

    pub fn is_refined(&self) -> bool {
        self.cells.iter().any(|c| !c.is_leaf())
    }

    /// Color of the edge between two vertices, if it belongs to a cell.
    pub fn edge_color(&self, a: VertexId, b: VertexId) -> Option<Color> {
        self.edge_colors.get(&edge(a, b)).copied()
    }

    /// Splits each listed leaf cell into four. The one-level constraint must
    /// hold once all of them are refined.
    pub fn refine(&self, cells: &[CellId]) -> Result<RefinedMesh, AmrError> {
        let mut next = self.clone();
        let mut mids = next.midpoints();
        let mut seen = HashSet::new();
        for &id in cells {
            let cell = next
                .cells
                .get(id)
                .ok_or(AmrError::UnknownCell { cell: id })?;
            if !cell.is_leaf() || !seen.insert(id) {
                return Err(AmrError::NotALeaf { cell: id });
            }
            next.split(id, &mut mids)?;
        }
        next.rebuild()?;
        Ok(next)
    }

    /// Merges the four children of each listed cell back into it. The
    /// children must be leaves.
    pub fn coarsen(&self, parents: &[CellId]) -> Result<RefinedMesh, AmrError> {
        let mut next = self.clone();
        let mut drop = vec![false; next.cells.len()];
        for &id in parents {
            let cell = next
                .cells
                .get(id)
                .ok_or(AmrError::UnknownCell { cell: id })?;
            let Some(k) = cell.children else {
                return Err(AmrError::PartialFamily { cell: id });
            };
            if k.iter().any(|&c| !next.cells[c].is_leaf() || drop[c]) {
                return Err(AmrError::PartialFamily { cell: id });
            }
            let center = next.cells[k[3]].vertices;
            for i in 0..3 {
                let inner = edge(center[(i + 1) % 3], center[(i + 2) % 3]);
                let c = next.edge_colors[&inner];
                next.edge_colors.insert(next.cells[id].side(i), c);
            }
            next.cells[id].children = None;
            for c in k {
                drop[c] = true;
            }
        }
        next.compact(&drop);
        next.rebuild()?;
        Ok(next)
    }

    /// Largest number of finer elements bordering one active element across
    /// its hanging sides.
    pub fn max_refined_neighbors(&self) -> usize {
        let mesh = &self.active;
        let level = |e: ElementId| self.cells[self.active_cells[e]].level;
        mesh.elements()
            .iter()
            .enumerate()
            .map(|(e, el)| {
                let mut fine: Vec<ElementId> = el
                    .surfaces()
                    .iter()
                    .flat_map(|&s| mesh.surface(s).elements())
                    .filter(|&n| n != e && level(n) > level(e))
                    .collect();
                fine.sort_unstable();
                fine.dedup();
                fine.len()
            })
            .max()
            .unwrap_or(0)
    }

    /// The mesh and 3-coloring, once no cell is refined.
    pub fn to_base(&self) -> Option<(Mesh, SurfaceColoring)> {
        (!self.is_refined()).then(|| (self.active.clone(), self.coloring.clone()))
    }

    fn midpoints(&self) -> HashMap<EdgeKey, VertexId> {
        let mut m = HashMap::new();
        for c in &self.cells {
            if let Some(k) = c.children {
                let [v0, v1, v2] = c.vertices;
                let [m01, m12, m20] = self.cells[k[3]].vertices;
                m.insert(edge(v0, v1), m01);
                m.insert(edge(v1, v2), m12);
                m.insert(edge(v2, v0), m20);
            }
        }
        m
    }

    fn split(&mut self, id: CellId, mids: &mut HashMap<EdgeKey, VertexId>) -> Result<(), AmrError> {
        let v = self.cells[id].vertices;
        let mut m = [0; 3];
        for i in 0..3 {
            let (a, b) = (v[i], v[(i + 1) % 3]);
            let key = edge(a, b);
            let c = *self
                .edge_colors
                .get(&key)
                .ok_or_else(|| AmrError::InvalidHierarchy(format!("edge {key:?} has no color")))?;
            let mid = *mids.entry(key).or_insert_with(|| {
                let (p, q) = (self.vertices[a], self.vertices[b]);
                self.vertices.push([
                    0.5 * (p[0] + q[0]),
                    0.5 * (p[1] + q[1]),
                    0.5 * (p[2] + q[2]),
                ]);
                self.vertices.len() - 1
            });
            m[i] = mid;
            let (lo, hi) = (key.0, key.1);
            for (half, k) in [(edge(lo, mid), 1), (edge(mid, hi), 2)] {
                let want = child_color(c, k);
                if let Some(old) = self.edge_colors.insert(half, want) {
                    if old != want {
                        return Err(AmrError::InvalidColoring(format!(
                            "half edge {half:?} is colored {old}, expected {want}"
                        )));
                    }
                }
            }
        }
        let [m01, m12, m20] = m;
        // interior edges are parallel to the opposite parent side
        let cs: Vec<Color> = (0..3)
            .map(|i| self.edge_colors[&self.cells[id].side(i)])
            .collect();
        self.edge_colors.insert(edge(m12, m20), cs[0]);
        self.edge_colors.insert(edge(m20, m01), cs[1]);
        self.edge_colors.insert(edge(m01, m12), cs[2]);

        let level = self.cells[id].level + 1;
        let first = self.cells.len();
        for vertices in [
            [v[0], m01, m20],
            [m01, v[1], m12],
            [m20, m12, v[2]],
            [m01, m12, m20],
        ] {
            self.cells.push(Cell {
                vertices,
                parent: Some(id),
                children: None,
                level,
            });
        }
        self.cells[id].children = Some([first, first + 1, first + 2, first + 3]);
        Ok(())
    }

    /// Drops the flagged cells and every midpoint vertex no cell uses any
    /// more, keeping the order of what remains.
    fn compact(&mut self, drop: &[bool]) {
        let mut cell_map = vec![usize::MAX; self.cells.len()];
        let mut n = 0;
        for (old, &d) in drop.iter().enumerate() {
            if !d {
                cell_map[old] = n;
                n += 1;
            }
        }
        let cells: Vec<Cell> = std::mem::take(&mut self.cells)
            .into_iter()
            .zip(drop)
            .filter(|(_, &d)| !d)
            .map(|(mut c, _)| {
                c.parent = c.parent.map(|p| cell_map[p]);
                c.children = c.children.map(|k| k.map(|x| cell_map[x]));
                c
            })
            .collect();

        let mut used = vec![false; self.vertices.len()];
        used[..self.base_vertices].fill(true);
        for c in &cells {
            for v in c.vertices {
                used[v] = true;
            }
        }
        let mut vmap = vec![usize::MAX; self.vertices.len()];
        let mut vertices = Vec::with_capacity(self.vertices.len());
        for (old, p) in self.vertices.iter().enumerate() {
            if used[old] {
                vmap[old] = vertices.len();
                vertices.push(*p);
            }
        }
        self.cells = cells
            .into_iter()
            .map(|mut c| {
                c.vertices = c.vertices.map(|v| vmap[v]);
                c
            })
            .collect();
        self.vertices = vertices;
        let sides: HashSet<EdgeKey> = self
            .cells
            .iter()
            .flat_map(|c| (0..3).map(|i| c.side(i)))
            .collect();
        self.edge_colors = std::mem::take(&mut self.edge_colors)
            .into_iter()
            .filter_map(|((a, b), c)| {
                if vmap[a] == usize::MAX || vmap[b] == usize::MAX {
                    return None;
                }
                let k = edge(vmap[a], vmap[b]);
                sides.contains(&k).then_some((k, c))
            })
            .collect();
    }

    /// Recomputes the active mesh and its coloring from the cells.
    fn rebuild(&mut self) -> Result<(), AmrError> {
        self.rebuild_with(true)
    }

    fn rebuild_with(&mut self, check: bool) -> Result<(), AmrError> {
        let leaves: Vec<CellId> = (0..self.cells.len())
            .filter(|&c| self.cells[c].is_leaf())
            .collect();
        let mids = self.midpoints();
        let mut half_of: HashMap<EdgeKey, EdgeKey> = HashMap::new();
        for (&(a, b), &m) in &mids {
            half_of.insert(edge(a, m), (a, b));
            half_of.insert(edge(m, b), (a, b));
        }
        // leaf sides and their owners, in active element order
        let mut owners: HashMap<EdgeKey, Vec<ElementId>> = HashMap::new();
        for (e, &c) in leaves.iter().enumerate() {
            for i in 0..3 {
                owners.entry(self.cells[c].side(i)).or_default().push(e);
            }
        }
        let mut root_boundary: HashSet<EdgeKey> = HashSet::new();
        {
            let mut count: HashMap<EdgeKey, usize> = HashMap::new();
            for c in self.cells.iter().filter(|c| c.parent.is_none()) {
                for i in 0..3 {
                    *count.entry(c.side(i)).or_default() += 1;
                }
            }
            root_boundary.extend(count.into_iter().filter(|&(_, n)| n == 1).map(|(k, _)| k));
        }
        let on_boundary = |mut k: EdgeKey| loop {
            if root_boundary.contains(&k) {
                return true;
            }
            match half_of.get(&k) {
                Some(&p) => k = p,
                None => return false,
            }
        };

        let mut surfaces: Vec<Surface> = Vec::new();
        let mut colors: Vec<Color> = Vec::new();
        let mut ids: HashMap<EdgeKey, SurfaceId> = HashMap::new();
        let mut elements: Vec<Vec<SurfaceId>> = vec![Vec::new(); leaves.len()];

        let violated = |k: EdgeKey| AmrError::LevelConstraintViolated { edge: k };
        let color_of = |k: EdgeKey| {
            self.edge_colors
                .get(&k)
                .copied()
                .ok_or_else(|| AmrError::InvalidHierarchy(format!("edge {k:?} has no color")))
        };

        // a coarse side seen from either side: both halves become surfaces
        let hanging = |p: EdgeKey,
                       surfaces: &mut Vec<Surface>,
                       colors: &mut Vec<Color>,
                       ids: &mut HashMap<EdgeKey, SurfaceId>|
         -> Result<(), AmrError> {
            let m = mids[&p];
            let coarse = owners[&p][0];
            for h in [edge(p.0, m), edge(m, p.1)] {
                let fine = match owners.get(&h).map(Vec::as_slice) {
                    Some(&[f]) => f,
                    _ => return Err(violated(p)),
                };
                ids.insert(h, surfaces.len());
                surfaces.push(Surface::new(
                    &[h.0, h.1],
                    coarse.min(fine),
                    Some(coarse.max(fine)),
                ));
                colors.push(color_of(h)?);
            }
            Ok(())
        };

        for (e, &c) in leaves.iter().enumerate() {
            for i in 0..3 {
                let k = self.cells[c].side(i);
                let own = &owners[&k];
                if own.len() == 1 && mids.contains_key(&k) {
                    // this element is the coarse side of a hanging edge
                    let (h1, h2) = (edge(k.0, mids[&k]), edge(mids[&k], k.1));
                    if !ids.contains_key(&h1) {
                        hanging(k, &mut surfaces, &mut colors, &mut ids)?;
                    }
                    elements[e].extend([ids[&h1], ids[&h2]]);
                    continue;
                }
                if let Some(&s) = ids.get(&k) {
                    elements[e].push(s);
                    continue;
                }
                match own.len() {
                    2 => {
                        ids.insert(k, surfaces.len());
                        surfaces.push(Surface::new(&[k.0, k.1], own[0], Some(own[1])));
                        colors.push(color_of(k)?);
                    }
                    _ => match half_of.get(&k) {
                        Some(&p) if owners.get(&p).is_some_and(|o| o.len() == 1) => {
                            hanging(p, &mut surfaces, &mut colors, &mut ids)?;
                        }
                        _ if on_boundary(k) => {
                            ids.insert(k, surfaces.len());
                            surfaces.push(Surface::new(&[k.0, k.1], e, None));
                            colors.push(color_of(k)?);
                        }
                        _ => return Err(violated(k)),
                    },
                }
                elements[e].push(ids[&k]);
            }
        }

        let elements: Vec<Element> = leaves
            .iter()
            .zip(&elements)
            .map(|(&c, s)| Element::new(ElementKind::Triangle, &self.cells[c].vertices, s))
            .collect();
        let active = Mesh::from_parts(self.dim, self.vertices.clone(), elements, surfaces)?;
        let coloring = SurfaceColoring::from_colors(&colors);
        if check {
            if let Some(d) = verify_coloring(&active, &coloring).into_iter().next() {
                return Err(d.into());
            }
        }
        self.active = active;
        self.active_cells = leaves;
        self.coloring = coloring;
        Ok(())
    }
}

/// Refines cells of a 3-colored triangle mesh once.
pub fn refine(
    mesh: &Mesh,
    coloring: &SurfaceColoring,
    elements: &[ElementId],
) -> Result<RefinedMesh, AmrError> {
    RefinedMesh::from_base(mesh, coloring)?.refine(elements)
}
