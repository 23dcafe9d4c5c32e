// SPDX-License-Identifier: Apache-2.0

//! Mesh model: vertices, elements and the surfaces (edges or faces) they share.
//!
//! A [`Mesh`] is immutable once built. Surfaces are discovered from the element
//! list by [`Mesh::build`]; each geometric edge/face appears exactly once and
//! records its left element and, for interior surfaces, its right element.
//! The left element is always the incident element with the smaller id.
//!
//! Meshes produced by adaptive refinement may be nonconforming: a coarse
//! element side can then be covered by two half surfaces, each shared with one
//! finer element. Such meshes are assembled with [`Mesh::from_parts`].

use std::collections::{hash_map::Entry, HashMap, HashSet};
use std::fmt;

use smallvec::SmallVec;
use thiserror::Error;

pub type VertexId = usize;
pub type ElementId = usize;
pub type SurfaceId = usize;

/// Sorted vertex tuple identifying a surface; edges pad the last slot with
/// `usize::MAX`.
pub type SurfaceKey = [VertexId; 3];

const PAD: VertexId = VertexId::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ElementKind {
    Triangle,
    Quadrilateral,
    Tetrahedron,
}

const TRI_SIDES: [&[usize]; 3] = [&[0, 1], &[1, 2], &[2, 0]];
const QUAD_SIDES: [&[usize]; 4] = [&[0, 1], &[1, 2], &[2, 3], &[3, 0]];
// face i is opposite local vertex i
const TET_SIDES: [&[usize]; 4] = [&[1, 2, 3], &[0, 2, 3], &[0, 1, 3], &[0, 1, 2]];

impl ElementKind {
    pub fn vertex_count(self) -> usize {
        match self {
            ElementKind::Triangle => 3,
            ElementKind::Quadrilateral | ElementKind::Tetrahedron => 4,
        }
    }

    pub fn side_count(self) -> usize {
        self.local_sides().len()
    }

    /// Topological dimension of the element.
    pub fn dimension(self) -> usize {
        match self {
            ElementKind::Triangle | ElementKind::Quadrilateral => 2,
            ElementKind::Tetrahedron => 3,
        }
    }

    /// Local vertex indices of each side, in local side order.
    pub fn local_sides(self) -> &'static [&'static [usize]] {
        match self {
            ElementKind::Triangle => &TRI_SIDES,
            ElementKind::Quadrilateral => &QUAD_SIDES,
            ElementKind::Tetrahedron => &TET_SIDES,
        }
    }

    /// Keyword used by the native mesh format.
    pub fn keyword(self) -> &'static str {
        match self {
            ElementKind::Triangle => "tri",
            ElementKind::Quadrilateral => "quad",
            ElementKind::Tetrahedron => "tet",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        match word {
            "tri" => Some(ElementKind::Triangle),
            "quad" => Some(ElementKind::Quadrilateral),
            "tet" => Some(ElementKind::Tetrahedron),
            _ => None,
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Element as supplied to [`Mesh::build`]: a kind and its vertex ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawElement {
    pub kind: ElementKind,
    pub vertices: SmallVec<[VertexId; 4]>,
}

impl RawElement {
    pub fn new(kind: ElementKind, vertices: &[VertexId]) -> Self {
        RawElement {
            kind,
            vertices: SmallVec::from_slice(vertices),
        }
    }

    pub fn triangle(a: VertexId, b: VertexId, c: VertexId) -> Self {
        Self::new(ElementKind::Triangle, &[a, b, c])
    }

    pub fn quad(a: VertexId, b: VertexId, c: VertexId, d: VertexId) -> Self {
        Self::new(ElementKind::Quadrilateral, &[a, b, c, d])
    }

    pub fn tet(a: VertexId, b: VertexId, c: VertexId, d: VertexId) -> Self {
        Self::new(ElementKind::Tetrahedron, &[a, b, c, d])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    kind: ElementKind,
    vertices: SmallVec<[VertexId; 4]>,
    surfaces: SmallVec<[SurfaceId; 4]>,
}

impl Element {
    pub fn new(kind: ElementKind, vertices: &[VertexId], surfaces: &[SurfaceId]) -> Self {
        Element {
            kind,
            vertices: SmallVec::from_slice(vertices),
            surfaces: SmallVec::from_slice(surfaces),
        }
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    /// Surfaces in local side order. A side split by a hanging node
    /// contributes its two halves consecutively.
    pub fn surfaces(&self) -> &[SurfaceId] {
        &self.surfaces
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Surface {
    key: SurfaceKey,
    left: ElementId,
    right: Option<ElementId>,
}

impl Surface {
    pub fn new(vertices: &[VertexId], left: ElementId, right: Option<ElementId>) -> Self {
        Surface {
            key: surface_key(vertices),
            left,
            right,
        }
    }

    pub fn key(&self) -> SurfaceKey {
        self.key
    }

    /// Sorted vertex ids.
    pub fn vertices(&self) -> &[VertexId] {
        let n = if self.key[2] == PAD { 2 } else { 3 };
        &self.key[..n]
    }

    pub fn left(&self) -> ElementId {
        self.left
    }

    pub fn right(&self) -> Option<ElementId> {
        self.right
    }

    pub fn is_boundary(&self) -> bool {
        self.right.is_none()
    }

    /// The one or two incident elements, left first.
    pub fn elements(&self) -> impl Iterator<Item = ElementId> + '_ {
        std::iter::once(self.left).chain(self.right)
    }
}

/// Canonical key of a surface given its vertices in any order.
pub fn surface_key(vertices: &[VertexId]) -> SurfaceKey {
    let mut key = [PAD; 3];
    key[..vertices.len()].copy_from_slice(vertices);
    key[..vertices.len()].sort_unstable();
    key
}

/// Invariant violation found by [`validate_elements`] or [`Mesh::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    DanglingVertexId {
        element: ElementId,
        vertex: VertexId,
    },
    RepeatedVertex {
        element: ElementId,
        vertex: VertexId,
    },
    WrongVertexCount {
        element: ElementId,
        kind: ElementKind,
        found: usize,
    },
    KindExceedsDimension {
        element: ElementId,
        kind: ElementKind,
        dim: usize,
    },
    NonManifold {
        vertices: Vec<VertexId>,
        elements: Vec<ElementId>,
    },
    SurfaceCount {
        element: ElementId,
        expected: usize,
        found: usize,
    },
    DanglingSurfaceId {
        element: ElementId,
        surface: SurfaceId,
    },
    DanglingElementId {
        surface: SurfaceId,
        element: ElementId,
    },
    AsymmetricIncidence {
        element: ElementId,
        surface: SurfaceId,
    },
    SelfAdjacent {
        surface: SurfaceId,
    },
    DuplicateSurface {
        surface: SurfaceId,
        first: SurfaceId,
    },
    SurfaceNotOnElement {
        surface: SurfaceId,
        element: ElementId,
    },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DanglingVertexId { element, vertex } => {
                write!(f, "element {element} references missing vertex {vertex}")
            }
            Diagnostic::RepeatedVertex { element, vertex } => {
                write!(f, "element {element} repeats vertex {vertex}")
            }
            Diagnostic::WrongVertexCount {
                element,
                kind,
                found,
            } => write!(
                f,
                "element {element} ({kind}) has {found} vertices, expected {}",
                kind.vertex_count()
            ),
            Diagnostic::KindExceedsDimension { element, kind, dim } => {
                write!(f, "element {element} ({kind}) does not fit a {dim}D mesh")
            }
            Diagnostic::NonManifold { vertices, elements } => write!(
                f,
                "surface {vertices:?} is shared by {} elements {elements:?}",
                elements.len()
            ),
            Diagnostic::SurfaceCount {
                element,
                expected,
                found,
            } => write!(
                f,
                "element {element} covers {found} sides with its surfaces, expected {expected}"
            ),
            Diagnostic::DanglingSurfaceId { element, surface } => {
                write!(f, "element {element} references missing surface {surface}")
            }
            Diagnostic::DanglingElementId { surface, element } => {
                write!(f, "surface {surface} references missing element {element}")
            }
            Diagnostic::AsymmetricIncidence { element, surface } => write!(
                f,
                "element {element} and surface {surface} disagree on incidence"
            ),
            Diagnostic::SelfAdjacent { surface } => {
                write!(f, "surface {surface} has identical left and right elements")
            }
            Diagnostic::DuplicateSurface { surface, first } => {
                write!(f, "surface {surface} duplicates surface {first}")
            }
            Diagnostic::SurfaceNotOnElement { surface, element } => {
                write!(f, "surface {surface} does not lie on element {element}")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MeshError {
    #[error("non-manifold surface {vertices:?} shared by elements {elements:?}")]
    NonManifold {
        vertices: Vec<VertexId>,
        elements: Vec<ElementId>,
    },
    #[error("element {element} references missing vertex {vertex}")]
    DanglingVertexId {
        element: ElementId,
        vertex: VertexId,
    },
    #[error("unsupported mesh dimension {0}")]
    Dimension(usize),
    #[error("invalid mesh: {0}")]
    Invalid(Diagnostic),
}

impl From<Diagnostic> for MeshError {
    fn from(d: Diagnostic) -> Self {
        match d {
            Diagnostic::NonManifold { vertices, elements } => {
                MeshError::NonManifold { vertices, elements }
            }
            Diagnostic::DanglingVertexId { element, vertex } => {
                MeshError::DanglingVertexId { element, vertex }
            }
            other => MeshError::Invalid(other),
        }
    }
}

/// Set of element kinds present in a mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct KindProfile {
    pub triangles: bool,
    pub quadrilaterals: bool,
    pub tetrahedra: bool,
}

impl KindProfile {
    pub fn insert(&mut self, kind: ElementKind) {
        match kind {
            ElementKind::Triangle => self.triangles = true,
            ElementKind::Quadrilateral => self.quadrilaterals = true,
            ElementKind::Tetrahedron => self.tetrahedra = true,
        }
    }

    pub fn contains(&self, kind: ElementKind) -> bool {
        match kind {
            ElementKind::Triangle => self.triangles,
            ElementKind::Quadrilateral => self.quadrilaterals,
            ElementKind::Tetrahedron => self.tetrahedra,
        }
    }

    /// Largest side count over the kinds present; 0 for an empty profile.
    pub fn max_side_count(&self) -> usize {
        [
            ElementKind::Triangle,
            ElementKind::Quadrilateral,
            ElementKind::Tetrahedron,
        ]
        .into_iter()
        .filter(|k| self.contains(*k))
        .map(ElementKind::side_count)
        .max()
        .unwrap_or(0)
    }

    pub fn is_hybrid(&self) -> bool {
        [self.triangles, self.quadrilaterals, self.tetrahedra]
            .iter()
            .filter(|b| **b)
            .count()
            > 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<[f64; 3]>,
    elements: Vec<Element>,
    surfaces: Vec<Surface>,
    kinds: KindProfile,
}

impl Mesh {
    /// Builds the surface list for raw elements.
    ///
    /// Surfaces are numbered in order of first appearance while walking the
    /// elements in id order and their sides in local order. The left element
    /// of an interior surface is the incident element with the smaller id.
    pub fn build(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        raw: Vec<RawElement>,
    ) -> Result<Mesh, MeshError> {
        if !(2..=3).contains(&dim) {
            return Err(MeshError::Dimension(dim));
        }
        if let Some(d) = validate_elements(dim, vertices.len(), &raw)
            .into_iter()
            .next()
        {
            return Err(d.into());
        }

        let mut index: HashMap<SurfaceKey, SurfaceId> = HashMap::with_capacity(raw.len() * 2);
        let mut surfaces: Vec<Surface> = Vec::with_capacity(raw.len() * 2);
        let mut elements = Vec::with_capacity(raw.len());
        let mut kinds = KindProfile::default();
        let mut scratch: SmallVec<[VertexId; 3]> = SmallVec::new();

        for (e, el) in raw.into_iter().enumerate() {
            kinds.insert(el.kind);
            let mut sids: SmallVec<[SurfaceId; 4]> = SmallVec::new();
            for side in el.kind.local_sides() {
                scratch.clear();
                scratch.extend(side.iter().map(|&i| el.vertices[i]));
                let key = surface_key(&scratch);
                let sid = match index.entry(key) {
                    Entry::Vacant(v) => {
                        let sid = surfaces.len();
                        surfaces.push(Surface {
                            key,
                            left: e,
                            right: None,
                        });
                        v.insert(sid);
                        sid
                    }
                    Entry::Occupied(o) => {
                        let sid = *o.get();
                        let s = &mut surfaces[sid];
                        if let Some(r) = s.right {
                            return Err(MeshError::NonManifold {
                                vertices: scratch.to_vec(),
                                elements: vec![s.left, r, e],
                            });
                        }
                        s.right = Some(e);
                        sid
                    }
                };
                sids.push(sid);
            }
            elements.push(Element {
                kind: el.kind,
                vertices: el.vertices,
                surfaces: sids,
            });
        }

        Ok(Mesh {
            dim,
            vertices,
            elements,
            surfaces,
            kinds,
        })
    }

    /// Assembles a mesh from explicit elements and surfaces, e.g. a
    /// relabeled or nonconforming mesh, and checks every invariant.
    pub fn from_parts(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        elements: Vec<Element>,
        surfaces: Vec<Surface>,
    ) -> Result<Mesh, MeshError> {
        let mesh = Self::from_parts_unchecked(dim, vertices, elements, surfaces)?;
        if let Some(d) = mesh.validate().into_iter().next() {
            return Err(d.into());
        }
        Ok(mesh)
    }

    pub(crate) fn from_parts_unchecked(
        dim: usize,
        vertices: Vec<[f64; 3]>,
        elements: Vec<Element>,
        surfaces: Vec<Surface>,
    ) -> Result<Mesh, MeshError> {
        if !(2..=3).contains(&dim) {
            return Err(MeshError::Dimension(dim));
        }
        let mut kinds = KindProfile::default();
        for el in &elements {
            kinds.insert(el.kind);
        }
        Ok(Mesh {
            dim,
            vertices,
            elements,
            surfaces,
            kinds,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, id: ElementId) -> &Element {
        &self.elements[id]
    }

    pub fn surfaces(&self) -> &[Surface] {
        &self.surfaces
    }

    pub fn surface(&self, id: SurfaceId) -> &Surface {
        &self.surfaces[id]
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn surface_count(&self) -> usize {
        self.surfaces.len()
    }

    pub fn interior_surface_count(&self) -> usize {
        self.surfaces.iter().filter(|s| s.right.is_some()).count()
    }

    pub fn boundary_surface_count(&self) -> usize {
        self.surfaces.len() - self.interior_surface_count()
    }

    pub fn kind_profile(&self) -> KindProfile {
        self.kinds
    }

    /// True when every element has exactly one surface per side.
    pub fn is_conforming(&self) -> bool {
        self.elements
            .iter()
            .all(|e| e.surfaces.len() == e.kind.side_count())
    }

    /// Raw element list, as consumed by [`Mesh::build`].
    pub fn raw_elements(&self) -> Vec<RawElement> {
        self.elements
            .iter()
            .map(|e| RawElement {
                kind: e.kind,
                vertices: e.vertices.clone(),
            })
            .collect()
    }

    pub fn connectivity_graph(&self) -> ConnectivityGraph {
        ConnectivityGraph::new(self)
    }

    /// Checks every mesh invariant and lists the violations. Never aborts.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let raw = self.raw_elements();
        let mut out = validate_elements(self.dim, self.vertices.len(), &raw);
        let ne = self.elements.len();

        let mut seen: HashMap<SurfaceKey, SurfaceId> = HashMap::with_capacity(self.surfaces.len());
        for (sid, s) in self.surfaces.iter().enumerate() {
            if let Some(&first) = seen.get(&s.key) {
                out.push(Diagnostic::DuplicateSurface {
                    surface: sid,
                    first,
                });
            } else {
                seen.insert(s.key, sid);
            }
            if s.right == Some(s.left) {
                out.push(Diagnostic::SelfAdjacent { surface: sid });
            }
            for e in s.elements() {
                if e >= ne {
                    out.push(Diagnostic::DanglingElementId {
                        surface: sid,
                        element: e,
                    });
                } else if !self.elements[e].surfaces.contains(&sid) {
                    out.push(Diagnostic::AsymmetricIncidence {
                        element: e,
                        surface: sid,
                    });
                }
            }
        }

        for (eid, el) in self.elements.iter().enumerate() {
            // Count covered sides: a full surface covers one side, a half
            // surface (hanging node) covers half of one.
            let mut halves = 0usize;
            for &sid in &el.surfaces {
                let Some(s) = self.surfaces.get(sid) else {
                    out.push(Diagnostic::DanglingSurfaceId {
                        element: eid,
                        surface: sid,
                    });
                    continue;
                };
                if s.left != eid && s.right != Some(eid) {
                    out.push(Diagnostic::AsymmetricIncidence {
                        element: eid,
                        surface: sid,
                    });
                }
                let sv = s.vertices();
                let shared = sv.iter().filter(|v| el.vertices.contains(v)).count();
                if shared == sv.len() {
                    halves += 2;
                } else if sv.len() == 2 && shared == 1 && el.kind.dimension() == 2 {
                    halves += 1;
                } else {
                    out.push(Diagnostic::SurfaceNotOnElement {
                        surface: sid,
                        element: eid,
                    });
                }
            }
            if halves != 2 * el.kind.side_count() {
                out.push(Diagnostic::SurfaceCount {
                    element: eid,
                    expected: el.kind.side_count(),
                    found: halves / 2,
                });
            }
        }
        out
    }
}

/// Checks raw elements against a vertex count: ids in range, pairwise
/// distinct, vertex counts per kind, and at most two elements per surface.
pub fn validate_elements(dim: usize, vertex_count: usize, raw: &[RawElement]) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut incidence: HashMap<SurfaceKey, SmallVec<[ElementId; 2]>> = HashMap::new();
    let mut scratch: SmallVec<[VertexId; 3]> = SmallVec::new();

    for (e, el) in raw.iter().enumerate() {
        let mut ok = true;
        if el.vertices.len() != el.kind.vertex_count() {
            out.push(Diagnostic::WrongVertexCount {
                element: e,
                kind: el.kind,
                found: el.vertices.len(),
            });
            ok = false;
        }
        if el.kind.dimension() > dim {
            out.push(Diagnostic::KindExceedsDimension {
                element: e,
                kind: el.kind,
                dim,
            });
        }
        for (i, &v) in el.vertices.iter().enumerate() {
            if v >= vertex_count {
                out.push(Diagnostic::DanglingVertexId {
                    element: e,
                    vertex: v,
                });
                ok = false;
            }
            if el.vertices[..i].contains(&v) {
                out.push(Diagnostic::RepeatedVertex {
                    element: e,
                    vertex: v,
                });
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        for side in el.kind.local_sides() {
            scratch.clear();
            scratch.extend(side.iter().map(|&i| el.vertices[i]));
            incidence.entry(surface_key(&scratch)).or_default().push(e);
        }
    }

    let mut crowded: Vec<_> = incidence
        .into_iter()
        .filter(|(_, els)| els.len() > 2)
        .collect();
    crowded.sort_unstable_by(|a, b| a.1[0].cmp(&b.1[0]).then(a.0.cmp(&b.0)));
    for (key, els) in crowded {
        let vertices = key.iter().copied().filter(|&v| v != PAD).collect();
        out.push(Diagnostic::NonManifold {
            vertices,
            elements: els.to_vec(),
        });
    }
    out
}

/// Element-connectivity graph: one node per element, one line per interior
/// surface. Boundary surfaces touch a single node and are not lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConnectivityGraph {
    lines: Vec<(ElementId, ElementId, SurfaceId)>,
    degree: Vec<usize>,
}

impl ConnectivityGraph {
    pub fn new(mesh: &Mesh) -> Self {
        let mut degree = vec![0; mesh.element_count()];
        let mut lines = Vec::with_capacity(mesh.interior_surface_count());
        for (sid, s) in mesh.surfaces().iter().enumerate() {
            if let Some(r) = s.right {
                lines.push((s.left, r, sid));
                degree[s.left] += 1;
                degree[r] += 1;
            }
        }
        ConnectivityGraph { lines, degree }
    }

    pub fn node_count(&self) -> usize {
        self.degree.len()
    }

    /// `(left, right, surface)` per interior surface.
    pub fn lines(&self) -> &[(ElementId, ElementId, SurfaceId)] {
        &self.lines
    }

    pub fn degree(&self, node: ElementId) -> usize {
        self.degree[node]
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degree
    }

    pub fn max_degree(&self) -> usize {
        self.degree.iter().copied().max().unwrap_or(0)
    }

    /// Vizing's bound on the number of colors: maximum degree plus one.
    pub fn vizing_bound(&self) -> usize {
        self.max_degree() + 1
    }
}

/// Free-function form of [`ConnectivityGraph::vizing_bound`].
pub fn vizing_bound(graph: &ConnectivityGraph) -> usize {
    graph.vizing_bound()
}

/// Collects the distinct surface keys of a raw element list. Used as an
/// independent count when checking surface construction.
pub fn distinct_surface_keys(raw: &[RawElement]) -> HashSet<SurfaceKey> {
    let mut keys = HashSet::new();
    for el in raw {
        for side in el.kind.local_sides() {
            let v: SmallVec<[VertexId; 3]> = side.iter().map(|&i| el.vertices[i]).collect();
            keys.insert(surface_key(&v));
        }
    }
    keys
}
