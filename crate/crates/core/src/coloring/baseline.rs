// SPDX-License-Identifier: Apache-2.0

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Color, SurfaceColoring};
use crate::mesh::{Mesh, SurfaceId};

/// Plain first-fit greedy in surface id order: each surface takes the
/// smallest color not used by either incident element. The palette grows as
/// needed.
pub fn first_fit(mesh: &Mesh) -> SurfaceColoring {
    let order: Vec<SurfaceId> = (0..mesh.surface_count()).collect();
    first_fit_in_order(mesh, &order)
}

/// [`first_fit`] visiting the surfaces in a seeded random order.
pub fn first_fit_shuffled(mesh: &Mesh, seed: u64) -> SurfaceColoring {
    let mut order: Vec<SurfaceId> = (0..mesh.surface_count()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    first_fit_in_order(mesh, &order)
}

/// First-fit greedy visiting `order`; surfaces not listed stay uncolored.
pub fn first_fit_in_order(mesh: &Mesh, order: &[SurfaceId]) -> SurfaceColoring {
    let mut coloring = SurfaceColoring::uncolored(mesh.surface_count());
    for &sid in order {
        let mut used = 0u32;
        for e in mesh.surface(sid).elements() {
            for &o in mesh.element(e).surfaces() {
                if let Some(c) = coloring.get(o) {
                    used |= 1 << (c - 1);
                }
            }
        }
        coloring.set(sid, Some(used.trailing_ones() as Color + 1));
    }
    coloring
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::verify_coloring;
    use crate::generators::{gen_quad_rect, gen_tet_prism, gen_tri_rect, Periodic};

    #[test]
    fn first_fit_is_valid_and_bounded() {
        for m in [
            gen_tri_rect(12, 12, Periodic::NONE).unwrap(),
            gen_quad_rect(10, 7, Periodic::BOTH).unwrap(),
            gen_tet_prism(3, 3, 3).unwrap(),
        ] {
            for c in [first_fit(&m), first_fit_shuffled(&m, 1)] {
                assert!(verify_coloring(&m, &c).is_empty());
                // a surface sees at most 2 (k - 1) other surfaces
                let k = m.kind_profile().max_side_count();
                assert!(c.colors_used() < 2 * k);
            }
        }
    }

    #[test]
    fn shuffled_order_needs_five_colors_on_triangles() {
        let m = gen_tri_rect(16, 16, Periodic::NONE).unwrap();
        for seed in 0..5 {
            assert_eq!(first_fit_shuffled(&m, seed).colors_used(), 5);
        }
    }

    #[test]
    fn partial_order_leaves_rest_uncolored() {
        let m = gen_tri_rect(2, 2, Periodic::NONE).unwrap();
        let c = first_fit_in_order(&m, &[3, 0]);
        assert_eq!(c.get(3), Some(1));
        assert_eq!(c.conflict_count(), m.surface_count() - 2);
    }
}
