// SPDX-License-Identifier: Apache-2.0

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use smallvec::SmallVec;

use super::greedy::{element_mask, pick};
use super::{
    repeated_colors, Color, ColorSet, ColoringConfig, ColoringError, SurfaceColoring, NONE,
};
use crate::mesh::{ElementId, Mesh, SurfaceId};

/// Counters of the conflict-resolution stage.
///
/// Swaps leave the number of conflicts unchanged, a loop break adds one and
/// a resolution removes one, so `initial conflicts + loop_breaks ==
/// resolutions` on success.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResolveStats {
    pub resolutions: usize,
    pub swaps: usize,
    pub loop_breaks: usize,
    /// Swaps onto an already visited surface, taken when a loop cannot be
    /// broken because the two incident elements share no color.
    pub forced_swaps: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ResolveEvent {
    Resolved {
        surface: SurfaceId,
        color: Color,
    },
    Swapped {
        from: SurfaceId,
        to: SurfaceId,
        color: Color,
    },
    LoopBroken {
        surface: SurfaceId,
        color: Color,
        uncolored: [SurfaceId; 2],
    },
    ForcedSwap {
        from: SurfaceId,
        to: SurfaceId,
        color: Color,
    },
}

/// Colors every conflict left by [`super::modified_greedy`] without
/// enlarging the palette.
///
/// The input must be free of repeated colors on its colored surfaces.
pub fn resolve_conflicts(
    mesh: &Mesh,
    coloring: SurfaceColoring,
    config: &ColoringConfig,
) -> Result<(SurfaceColoring, ResolveStats), ColoringError> {
    check_input(mesh, &coloring)?;
    resolve(mesh, coloring, ColorSet::for_mesh(mesh), config, None)
}

/// [`resolve_conflicts`] that also records every move.
pub fn resolve_conflicts_traced(
    mesh: &Mesh,
    coloring: SurfaceColoring,
    config: &ColoringConfig,
    trace: &mut Vec<ResolveEvent>,
) -> Result<(SurfaceColoring, ResolveStats), ColoringError> {
    check_input(mesh, &coloring)?;
    resolve(
        mesh,
        coloring,
        ColorSet::for_mesh(mesh),
        config,
        Some(trace),
    )
}

fn check_input(mesh: &Mesh, coloring: &SurfaceColoring) -> Result<(), ColoringError> {
    if coloring.len() != mesh.surface_count() {
        return Err(ColoringError::LengthMismatch {
            expected: mesh.surface_count(),
            found: coloring.len(),
        });
    }
    if !mesh.is_conforming() {
        return Err(ColoringError::Nonconforming);
    }
    if let Some(d) = repeated_colors(mesh, coloring).into_iter().next() {
        return Err(ColoringError::InvalidInput(d));
    }
    let k = ColorSet::for_mesh(mesh).size();
    if coloring.max_color().is_some_and(|c| c > k) {
        return Err(ColoringError::Config("input coloring exceeds the palette"));
    }
    Ok(())
}

pub(super) fn resolve(
    mesh: &Mesh,
    mut coloring: SurfaceColoring,
    palette: ColorSet,
    config: &ColoringConfig,
    trace: Option<&mut Vec<ResolveEvent>>,
) -> Result<(SurfaceColoring, ResolveStats), ColoringError> {
    let budget = config.swap_budget(mesh.surface_count());
    let queue: VecDeque<SurfaceId> = coloring.conflicts().into();
    let mut r = Resolver {
        mesh,
        colors: coloring.as_mut_slice(),
        full: palette.mask(),
        rng: config.rng(1),
        stamp: vec![0; mesh.surface_count()],
        chain: 0,
        queue,
        stats: ResolveStats::default(),
        trace,
        budget,
    };
    r.run()?;
    let stats = r.stats;
    drop(r);
    Ok((coloring, stats))
}

struct Resolver<'a> {
    mesh: &'a Mesh,
    colors: &'a mut [i8],
    full: u8,
    rng: ChaCha8Rng,
    // surface visited in the chain whose id is stored
    stamp: Vec<u32>,
    chain: u32,
    queue: VecDeque<SurfaceId>,
    stats: ResolveStats,
    trace: Option<&'a mut Vec<ResolveEvent>>,
    budget: usize,
}

impl Resolver<'_> {
    fn run(&mut self) -> Result<(), ColoringError> {
        while let Some(start) = self.queue.pop_front() {
            if self.colors[start] != NONE {
                continue;
            }
            self.chase(start)?;
        }
        Ok(())
    }

    fn new_chain(&mut self, at: SurfaceId) {
        self.chain = self.chain.wrapping_add(1);
        if self.chain == 0 {
            self.stamp.fill(0);
            self.chain = 1;
        }
        self.stamp[at] = self.chain;
    }

    fn surface_with(&self, element: ElementId, color: Color, except: SurfaceId) -> SurfaceId {
        *self
            .mesh
            .element(element)
            .surfaces()
            .iter()
            .find(|&&s| s != except && self.colors[s] == color as i8)
            .expect("color mask and surfaces disagree")
    }

    fn record(&mut self, event: ResolveEvent) {
        if let Some(t) = self.trace.as_deref_mut() {
            t.push(event);
        }
    }

    /// Follows one conflict until it is colored or a loop break hands it
    /// off as two new conflicts.
    fn chase(&mut self, start: SurfaceId) -> Result<(), ColoringError> {
        self.new_chain(start);
        let mut cur = start;
        let mut steps = 0usize;
        loop {
            let s = self.mesh.surface(cur);
            let left = s.left();
            let right = s.right();
            let ml = element_mask(self.mesh, self.colors, left, cur);
            let mr = right.map_or(0, |r| element_mask(self.mesh, self.colors, r, cur));

            let free = self.full & !(ml | mr);
            if free != 0 {
                let c = pick(&mut self.rng, free);
                self.colors[cur] = c as i8;
                self.stats.resolutions += 1;
                self.record(ResolveEvent::Resolved {
                    surface: cur,
                    color: c,
                });
                self.debug_check(&[left], right);
                return Ok(());
            }

            steps += 1;
            if steps > self.budget {
                return Err(ColoringError::SwapBudgetExceeded {
                    surface: start,
                    budget: self.budget,
                });
            }

            // Colors held by exactly one side can move onto `cur`; the
            // surface giving it up becomes the conflict.
            let mut moves: SmallVec<[(Color, SurfaceId); 4]> = SmallVec::new();
            let only = (ml ^ mr) & self.full;
            for c in 1..=8u8 {
                if only & (1 << (c - 1)) != 0 {
                    let owner = if ml & (1 << (c - 1)) != 0 {
                        left
                    } else {
                        right.unwrap()
                    };
                    moves.push((c, self.surface_with(owner, c, cur)));
                }
            }
            let fresh: SmallVec<[(Color, SurfaceId); 4]> = moves
                .iter()
                .copied()
                .filter(|&(_, t)| self.stamp[t] != self.chain)
                .collect();

            if !fresh.is_empty() {
                let (c, to) = fresh[self.rng.random_range(0..fresh.len())];
                self.colors[cur] = c as i8;
                self.colors[to] = NONE;
                self.stamp[to] = self.chain;
                self.stats.swaps += 1;
                self.record(ResolveEvent::Swapped {
                    from: cur,
                    to,
                    color: c,
                });
                self.debug_check(&[left], right);
                cur = to;
                continue;
            }

            // Every admissible swap leads back into the chain: a loop.
            let common = ml & mr & self.full;
            if let (Some(right), true) = (right, common != 0) {
                let c = pick(&mut self.rng, common);
                let a = self.surface_with(left, c, cur);
                let b = self.surface_with(right, c, cur);
                if a != b {
                    self.colors[cur] = c as i8;
                    self.colors[a] = NONE;
                    self.colors[b] = NONE;
                    self.queue.push_back(a);
                    self.queue.push_back(b);
                    self.stats.loop_breaks += 1;
                    if self.stats.loop_breaks > self.budget {
                        return Err(ColoringError::SwapBudgetExceeded {
                            surface: start,
                            budget: self.budget,
                        });
                    }
                    self.record(ResolveEvent::LoopBroken {
                        surface: cur,
                        color: c,
                        uncolored: [a, b],
                    });
                    self.debug_check(&[left], Some(right));
                    return Ok(());
                }
                // `left` and `right` share a second surface carrying `c`:
                // moving onto it is a plain swap.
                moves.push((c, a));
            }

            // No loop break is available. Take any swap and restart the
            // visited set from there.
            let (c, to) = moves[self.rng.random_range(0..moves.len())];
            self.colors[cur] = c as i8;
            self.colors[to] = NONE;
            self.stats.forced_swaps += 1;
            self.record(ResolveEvent::ForcedSwap {
                from: cur,
                to,
                color: c,
            });
            self.debug_check(&[left], right);
            self.new_chain(to);
            cur = to;
        }
    }

    #[inline]
    fn debug_check(&self, elements: &[ElementId], right: Option<ElementId>) {
        if cfg!(debug_assertions) {
            for e in elements.iter().copied().chain(right) {
                let mut mask = 0u8;
                for &s in self.mesh.element(e).surfaces() {
                    let c = self.colors[s];
                    if c > 0 {
                        let bit = 1u8 << (c - 1);
                        assert!(mask & bit == 0, "element {e} repeats color {c}");
                        mask |= bit;
                    }
                }
            }
        }
    }
}
