// SPDX-License-Identifier: Apache-2.0

use rand::Rng;

use super::{ColorSet, ColoringConfig, SurfaceColoring, NONE};
use crate::mesh::{ElementId, Mesh, SurfaceId};

/// Bit mask of the colors on `element`'s surfaces, skipping `except`.
pub(super) fn element_mask(
    mesh: &Mesh,
    colors: &[i8],
    element: ElementId,
    except: SurfaceId,
) -> u8 {
    let mut mask = 0u8;
    for &s in mesh.element(element).surfaces() {
        let c = colors[s];
        if s != except && c > 0 {
            mask |= 1 << (c - 1);
        }
    }
    mask
}

/// Uniformly random set bit of a nonzero mask, as a color.
pub(super) fn pick<R: Rng>(rng: &mut R, mask: u8) -> u8 {
    debug_assert!(mask != 0);
    let mut k = rng.random_range(0..mask.count_ones());
    let mut m = mask;
    loop {
        let bit = m.trailing_zeros() as u8;
        if k == 0 {
            return bit + 1;
        }
        k -= 1;
        m &= m - 1;
    }
}

/// Single pass over the surfaces in id order. Each surface receives a
/// uniformly random color that neither incident element already uses, or
/// stays uncolored when the palette is exhausted. Never adds colors.
pub fn modified_greedy(mesh: &Mesh, config: &ColoringConfig) -> SurfaceColoring {
    let palette = ColorSet::for_mesh(mesh);
    let full = palette.mask();
    let mut rng = config.rng(0);
    let mut coloring = SurfaceColoring::uncolored(mesh.surface_count());
    let colors = coloring.as_mut_slice();

    for (sid, s) in mesh.surfaces().iter().enumerate() {
        let mut used = element_mask(mesh, colors, s.left(), sid);
        if let Some(r) = s.right() {
            used |= element_mask(mesh, colors, r, sid);
        }
        let free = full & !used;
        colors[sid] = if free == 0 {
            NONE
        } else {
            pick(&mut rng, free) as i8
        };
    }
    coloring
}
