// SPDX-License-Identifier: Apache-2.0

//! Element renumbering and surface reordering driven by a coloring.
//!
//! Surfaces are grouped by color. Inside color 1, interior surfaces come
//! first; the left element of the `k`-th color-1 surface becomes element `k`
//! and the right element of the `k`-th interior color-1 surface becomes
//! element `N1 + k`. Every other group is sorted by its new left element ids.

use thiserror::Error;

use crate::coloring::{verify_coloring, Color, ColoringDiagnostic, SurfaceColoring};
use crate::mesh::{Element, ElementId, Mesh, MeshError, Surface, SurfaceId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReorderError {
    #[error("coloring is not complete and valid: {0}")]
    InvalidColoring(ColoringDiagnostic),
    #[error("element {element} has no surface of color 1")]
    MissingColorOneEdge { element: ElementId },
    #[error("plan is for {plan_elements} elements and {plan_surfaces} surfaces, mesh has {mesh_elements} and {mesh_surfaces}")]
    PlanMeshMismatch {
        plan_elements: usize,
        plan_surfaces: usize,
        mesh_elements: usize,
        mesh_surfaces: usize,
    },
    #[error("{what} permutation is not a bijection")]
    NotAPermutation { what: &'static str },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Old-to-new element and surface ids, plus the surface range of each color.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReorderingPlan {
    element_perm: Vec<ElementId>,
    surface_perm: Vec<SurfaceId>,
    group_bounds: Vec<usize>,
}

impl ReorderingPlan {
    /// Checks both permutations; `group_bounds` must rise from 0 to the
    /// surface count.
    pub fn new(
        element_perm: Vec<ElementId>,
        surface_perm: Vec<SurfaceId>,
        group_bounds: Vec<usize>,
    ) -> Result<Self, ReorderError> {
        if !is_permutation(&element_perm) {
            return Err(ReorderError::NotAPermutation { what: "element" });
        }
        if !is_permutation(&surface_perm) {
            return Err(ReorderError::NotAPermutation { what: "surface" });
        }
        let ok = group_bounds.first() == Some(&0)
            && group_bounds.last() == Some(&surface_perm.len())
            && group_bounds.windows(2).all(|w| w[0] <= w[1]);
        if !ok {
            return Err(ReorderError::NotAPermutation {
                what: "group bound",
            });
        }
        Ok(ReorderingPlan {
            element_perm,
            surface_perm,
            group_bounds,
        })
    }

    /// Leaves every id in place, with a single group.
    pub fn identity(elements: usize, surfaces: usize) -> Self {
        ReorderingPlan {
            element_perm: (0..elements).collect(),
            surface_perm: (0..surfaces).collect(),
            group_bounds: vec![0, surfaces],
        }
    }

    pub fn element_perm(&self) -> &[ElementId] {
        &self.element_perm
    }

    pub fn surface_perm(&self) -> &[SurfaceId] {
        &self.surface_perm
    }

    /// `[0, N1, N1 + N2, ...]`; group `g` (color `g + 1`) is the new surface
    /// range `group_bounds[g]..group_bounds[g + 1]`.
    pub fn group_bounds(&self) -> &[usize] {
        &self.group_bounds
    }

    /// The plan that undoes this one.
    pub fn inverse(&self) -> ReorderingPlan {
        ReorderingPlan {
            element_perm: invert(&self.element_perm),
            surface_perm: invert(&self.surface_perm),
            group_bounds: vec![0, self.surface_perm.len()],
        }
    }
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    p.iter()
        .all(|&x| x < p.len() && !std::mem::replace(&mut seen[x], true))
}

fn invert(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (old, &new) in p.iter().enumerate() {
        inv[new] = old;
    }
    inv
}

/// Builds the plan, failing when some element has no color-1 surface.
pub fn build_plan(mesh: &Mesh, coloring: &SurfaceColoring) -> Result<ReorderingPlan, ReorderError> {
    plan(mesh, coloring, false).map(|(p, _)| p)
}

/// Like [`build_plan`], but elements without a color-1 surface are numbered
/// after all others, in order of first appearance in color groups 2, 3, ...
/// The flag tells whether that happened.
pub fn build_plan_with_fallback(
    mesh: &Mesh,
    coloring: &SurfaceColoring,
) -> Result<(ReorderingPlan, bool), ReorderError> {
    plan(mesh, coloring, true)
}

fn plan(
    mesh: &Mesh,
    coloring: &SurfaceColoring,
    fallback: bool,
) -> Result<(ReorderingPlan, bool), ReorderError> {
    if let Some(d) = verify_coloring(mesh, coloring).into_iter().next() {
        return Err(ReorderError::InvalidColoring(d));
    }
    let groups = coloring.groups();
    let ne = mesh.element_count();
    const UNSET: usize = usize::MAX;
    let mut element_perm = vec![UNSET; ne];

    let (interior, boundary): (Vec<SurfaceId>, Vec<SurfaceId>) = groups
        .first()
        .map(|g| g.iter().partition(|&&s| !mesh.surface(s).is_boundary()))
        .unwrap_or_default();
    let n1 = interior.len() + boundary.len();
    let mut order: Vec<SurfaceId> = Vec::with_capacity(mesh.surface_count());
    order.extend(&interior);
    order.extend(&boundary);
    for (k, &s) in order.iter().enumerate() {
        element_perm[mesh.surface(s).left()] = k;
    }
    for (k, &s) in interior.iter().enumerate() {
        element_perm[mesh.surface(s).right().unwrap()] = n1 + k;
    }

    let mut used_fallback = false;
    let mut next = n1 + interior.len();
    if let Some(e) = element_perm.iter().position(|&p| p == UNSET) {
        if !fallback {
            return Err(ReorderError::MissingColorOneEdge { element: e });
        }
        used_fallback = true;
        for g in groups.iter().skip(1) {
            for &s in g {
                for e in mesh.surface(s).elements() {
                    if element_perm[e] == UNSET {
                        element_perm[e] = next;
                        next += 1;
                    }
                }
            }
        }
    }

    let mut bounds = vec![0, n1];
    for g in groups.iter().skip(1) {
        let mut g = g.clone();
        g.sort_by_key(|&s| element_perm[mesh.surface(s).left()]);
        order.extend(g);
        bounds.push(order.len());
    }
    let mut surface_perm = vec![0; mesh.surface_count()];
    for (new, &old) in order.iter().enumerate() {
        surface_perm[old] = new;
    }
    let plan = ReorderingPlan::new(element_perm, surface_perm, bounds)?;
    Ok((plan, used_fallback))
}

/// Relabels the mesh and its coloring. Left and right roles of every surface
/// are kept.
pub fn apply_plan(
    mesh: &Mesh,
    coloring: &SurfaceColoring,
    plan: &ReorderingPlan,
) -> Result<(Mesh, SurfaceColoring), ReorderError> {
    let (ne, ns) = (plan.element_perm.len(), plan.surface_perm.len());
    if ne != mesh.element_count() || ns != mesh.surface_count() || coloring.len() != ns {
        return Err(ReorderError::PlanMeshMismatch {
            plan_elements: ne,
            plan_surfaces: ns,
            mesh_elements: mesh.element_count(),
            mesh_surfaces: mesh.surface_count(),
        });
    }
    let pe = &plan.element_perm;
    let ps = &plan.surface_perm;
    let old_e = invert(pe);
    let old_s = invert(ps);
    let elements: Vec<Element> = old_e
        .iter()
        .map(|&o| {
            let el = mesh.element(o);
            let surfs: Vec<SurfaceId> = el.surfaces().iter().map(|&s| ps[s]).collect();
            Element::new(el.kind(), el.vertices(), &surfs)
        })
        .collect();
    let surfaces: Vec<Surface> = old_s
        .iter()
        .map(|&o| {
            let s = mesh.surface(o);
            Surface::new(s.vertices(), pe[s.left()], s.right().map(|r| pe[r]))
        })
        .collect();
    let raw: Vec<i32> = old_s.iter().map(|&o| coloring.raw(o)).collect();
    let mesh = Mesh::from_parts(mesh.dim(), mesh.vertices().to_vec(), elements, surfaces)?;
    let coloring = SurfaceColoring::from_raw(&raw).expect("colors come from a valid coloring");
    Ok((mesh, coloring))
}

/// Share of neighbouring surface pairs in a color group whose left (right)
/// elements have consecutive ids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupCoalescing {
    pub color: Color,
    pub surfaces: usize,
    pub left_pairs: usize,
    pub left_consecutive: usize,
    pub right_pairs: usize,
    pub right_consecutive: usize,
}

impl GroupCoalescing {
    /// 1.0 for groups with fewer than two surfaces.
    pub fn left(&self) -> f64 {
        ratio(self.left_consecutive, self.left_pairs)
    }

    /// Over pairs of interior surfaces only.
    pub fn right(&self) -> f64 {
        ratio(self.right_consecutive, self.right_pairs)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coalescing {
    pub groups: Vec<GroupCoalescing>,
}

impl Coalescing {
    pub fn left(&self) -> f64 {
        ratio(
            self.groups.iter().map(|g| g.left_consecutive).sum(),
            self.groups.iter().map(|g| g.left_pairs).sum(),
        )
    }

    pub fn right(&self) -> f64 {
        ratio(
            self.groups.iter().map(|g| g.right_consecutive).sum(),
            self.groups.iter().map(|g| g.right_pairs).sum(),
        )
    }

    /// Left and right pairs pooled.
    pub fn aggregate(&self) -> f64 {
        let c: usize = self
            .groups
            .iter()
            .map(|g| g.left_consecutive + g.right_consecutive)
            .sum();
        let p: usize = self
            .groups
            .iter()
            .map(|g| g.left_pairs + g.right_pairs)
            .sum();
        ratio(c, p)
    }
}

/// Walks each color group in surface id order. Uncolored surfaces are
/// ignored.
pub fn coalescing_metric(mesh: &Mesh, coloring: &SurfaceColoring) -> Coalescing {
    let groups = coloring
        .groups()
        .into_iter()
        .enumerate()
        .map(|(g, ids)| {
            let mut m = GroupCoalescing {
                color: g as Color + 1,
                surfaces: ids.len(),
                left_pairs: 0,
                left_consecutive: 0,
                right_pairs: 0,
                right_consecutive: 0,
            };
            for w in ids.windows(2) {
                let (a, b) = (mesh.surface(w[0]), mesh.surface(w[1]));
                m.left_pairs += 1;
                m.left_consecutive += usize::from(b.left() == a.left() + 1);
                if let (Some(ra), Some(rb)) = (a.right(), b.right()) {
                    m.right_pairs += 1;
                    m.right_consecutive += usize::from(rb == ra + 1);
                }
            }
            m
        })
        .collect();
    Coalescing { groups }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::{color, first_fit_shuffled, ColoringConfig};
    use crate::generators::{
        gen_hybrid_rect, gen_quad_rect, gen_tri_closed, gen_tri_rect, Periodic,
    };
    use crate::mesh::RawElement;

    fn colored(m: &Mesh) -> SurfaceColoring {
        color(m, &ColoringConfig::with_seed(2)).unwrap().0
    }

    #[test]
    fn closed_mesh_color_one_block() {
        let m = gen_tri_rect(8, 6, Periodic::BOTH).unwrap();
        let c = colored(&m);
        let plan = build_plan(&m, &c).unwrap();
        let (r, rc) = apply_plan(&m, &c, &plan).unwrap();
        let n1 = plan.group_bounds()[1];
        assert_eq!(n1, m.element_count() / 2);
        for k in 0..n1 {
            let s = r.surface(k);
            assert_eq!(rc.get(k), Some(1));
            assert_eq!((s.left(), s.right()), (k, Some(n1 + k)));
        }
        let metric = coalescing_metric(&r, &rc);
        assert_eq!(metric.groups[0].left(), 1.0);
        assert_eq!(metric.groups[0].right(), 1.0);
    }

    #[test]
    fn later_groups_have_ascending_lefts() {
        for m in [
            gen_tri_rect(9, 7, Periodic::NONE).unwrap(),
            gen_quad_rect(6, 6, Periodic::NONE).unwrap(),
            gen_tri_closed(4).unwrap(),
        ] {
            let c = colored(&m);
            let plan = build_plan(&m, &c).unwrap();
            let (r, rc) = apply_plan(&m, &c, &plan).unwrap();
            assert!(verify_coloring(&r, &rc).is_empty());
            assert_eq!(rc.class_sizes(), c.class_sizes());
            let b = plan.group_bounds();
            for g in 1..b.len() - 1 {
                let lefts: Vec<_> = (b[g]..b[g + 1]).map(|s| r.surface(s).left()).collect();
                assert!(lefts.windows(2).all(|w| w[0] < w[1]), "group {g}");
                assert!((b[g]..b[g + 1]).all(|s| rc.get(s) == Some(g as Color + 1)));
            }
            // interior color-1 surfaces come first
            let i1 = (0..b[1])
                .take_while(|&s| !r.surface(s).is_boundary())
                .count();
            assert!((i1..b[1]).all(|s| r.surface(s).is_boundary()));
        }
    }

    #[test]
    fn two_triangles_map_to_zero_and_one() {
        let m = Mesh::build(
            2,
            vec![[0.0; 3]; 4],
            vec![RawElement::triangle(0, 1, 2), RawElement::triangle(0, 2, 3)],
        )
        .unwrap();
        let shared = (0..5).find(|&s| !m.surface(s).is_boundary()).unwrap();
        // shared edge is color 1; the rims use 2 and 3 in each triangle
        let c = SurfaceColoring::from_colors(&[2, 3, 1, 2, 3]);
        assert_eq!(shared, 2);
        let plan = build_plan(&m, &c).unwrap();
        let mut ids = plan.element_perm().to_vec();
        ids.sort_unstable();
        assert_eq!(ids, vec![0, 1]);
        assert_eq!(plan.surface_perm()[shared], 0);
    }

    #[test]
    fn apply_then_inverse_restores_mesh() {
        let m = gen_tri_rect(7, 5, Periodic::NONE).unwrap();
        let c = colored(&m);
        let plan = build_plan(&m, &c).unwrap();
        let (r, rc) = apply_plan(&m, &c, &plan).unwrap();
        let (back, bc) = apply_plan(&r, &rc, &plan.inverse()).unwrap();
        assert_eq!(back, m);
        assert_eq!(bc, c);
    }

    #[test]
    fn hybrid_needs_fallback() {
        let m = gen_hybrid_rect(8, 6).unwrap();
        let mut hit = false;
        for seed in 0..10 {
            let c = color(&m, &ColoringConfig::with_seed(seed)).unwrap().0;
            match build_plan(&m, &c) {
                Ok(_) => {}
                Err(ReorderError::MissingColorOneEdge { .. }) => {
                    hit = true;
                    let (plan, used) = build_plan_with_fallback(&m, &c).unwrap();
                    assert!(used);
                    let (r, rc) = apply_plan(&m, &c, &plan).unwrap();
                    assert!(verify_coloring(&r, &rc).is_empty());
                }
                Err(e) => panic!("{e}"),
            }
        }
        assert!(hit);
    }

    #[test]
    fn mismatch_and_bad_permutations() {
        let m = gen_tri_rect(2, 2, Periodic::NONE).unwrap();
        let c = colored(&m);
        let plan = ReorderingPlan::identity(3, m.surface_count());
        assert!(matches!(
            apply_plan(&m, &c, &plan),
            Err(ReorderError::PlanMeshMismatch { .. })
        ));
        assert!(ReorderingPlan::new(vec![0, 0], vec![0], vec![0, 1]).is_err());
        assert!(ReorderingPlan::new(vec![1, 0], vec![0], vec![0, 2]).is_err());
    }

    #[test]
    fn reordering_beats_random_order() {
        let m = gen_tri_rect(40, 40, Periodic::NONE).unwrap();
        let c = colored(&m);
        let before = coalescing_metric(&m, &c);
        let plan = build_plan(&m, &c).unwrap();
        let (r, rc) = apply_plan(&m, &c, &plan).unwrap();
        let after = coalescing_metric(&r, &rc);
        assert!(after.aggregate() >= before.aggregate());
        for g in 1..3 {
            assert!(after.groups[g].left() > before.groups[g].left());
        }
        // five-color first-fit, reordered the same way
        let five = first_fit_shuffled(&m, 2);
        let (p5, _) = build_plan_with_fallback(&m, &five).unwrap();
        let (r5, c5) = apply_plan(&m, &five, &p5).unwrap();
        assert!(after.aggregate() >= coalescing_metric(&r5, &c5).aggregate());
    }
}
