// SPDX-License-Identifier: Apache-2.0

//! Surface coloring with a fixed, minimal palette.
//!
//! Coloring runs in two stages. [`modified_greedy`] assigns each surface a
//! random color that keeps both incident elements free of repeats, and leaves
//! the surface uncolored when no such color exists. [`resolve_conflicts`] then
//! walks each uncolored surface through color swaps until it can be colored,
//! breaking loops by uncoloring a same-colored pair of neighbours.
//!
//! The palette is `{1, 2, 3}` for pure triangle meshes and `{1, 2, 3, 4}`
//! whenever quadrilaterals or tetrahedra are present.

mod baseline;
mod greedy;
mod resolve;

use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mesh::{ElementId, Mesh, SurfaceId};

pub use baseline::{first_fit, first_fit_in_order, first_fit_shuffled};
pub use greedy::modified_greedy;
pub use resolve::{resolve_conflicts, resolve_conflicts_traced, ResolveEvent, ResolveStats};

pub type Color = u8;

/// Serialized value of an uncolored surface.
pub const UNCOLORED: i32 = -1;

const NONE: i8 = -1;

/// Largest color a [`SurfaceColoring`] can hold.
pub const MAX_COLOR: Color = i8::MAX as Color;

/// The fixed palette `{1..=k}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ColorSet {
    size: Color,
}

impl ColorSet {
    pub fn new(size: Color) -> Self {
        assert!((1..=8).contains(&size), "palette size {size} out of range");
        ColorSet { size }
    }

    /// Three colors for pure triangle meshes, four otherwise.
    pub fn for_mesh(mesh: &Mesh) -> Self {
        let k = mesh.kind_profile().max_side_count().max(3);
        ColorSet::new(k as Color)
    }

    pub fn size(self) -> Color {
        self.size
    }

    pub fn colors(self) -> impl Iterator<Item = Color> {
        1..=self.size
    }

    /// Bit `c - 1` set for every color `c` in the palette.
    pub(crate) fn mask(self) -> u8 {
        ((1u16 << self.size) - 1) as u8
    }
}

/// One color per surface, or uncolored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SurfaceColoring {
    colors: Vec<i8>,
}

impl SurfaceColoring {
    pub fn uncolored(surfaces: usize) -> Self {
        SurfaceColoring {
            colors: vec![NONE; surfaces],
        }
    }

    /// From serialized values: colors `1..=127`, or `-1` for uncolored.
    pub fn from_raw(values: &[i32]) -> Result<Self, InvalidColorValue> {
        values
            .iter()
            .enumerate()
            .map(|(surface, &v)| match v {
                UNCOLORED => Ok(NONE),
                1..=127 => Ok(v as i8),
                _ => Err(InvalidColorValue { surface, value: v }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|colors| SurfaceColoring { colors })
    }

    pub fn from_colors(colors: &[Color]) -> Self {
        let colors = colors
            .iter()
            .map(|&c| {
                assert!((1..=MAX_COLOR).contains(&c), "color {c} out of range");
                c as i8
            })
            .collect();
        SurfaceColoring { colors }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn get(&self, surface: SurfaceId) -> Option<Color> {
        let c = self.colors[surface];
        (c > 0).then_some(c as Color)
    }

    pub fn set(&mut self, surface: SurfaceId, color: Option<Color>) {
        self.colors[surface] = match color {
            Some(c) => {
                assert!((1..=MAX_COLOR).contains(&c), "color {c} out of range");
                c as i8
            }
            None => NONE,
        };
    }

    /// Serialized value: the color, or [`UNCOLORED`].
    pub fn raw(&self, surface: SurfaceId) -> i32 {
        self.colors[surface] as i32
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<Color>> + '_ {
        self.colors.iter().map(|&c| (c > 0).then_some(c as Color))
    }

    pub fn is_complete(&self) -> bool {
        self.colors.iter().all(|&c| c > 0)
    }

    /// Uncolored surfaces, in id order.
    pub fn conflicts(&self) -> Vec<SurfaceId> {
        self.colors
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == NONE)
            .map(|(s, _)| s)
            .collect()
    }

    pub fn conflict_count(&self) -> usize {
        self.colors.iter().filter(|&&c| c == NONE).count()
    }

    pub fn max_color(&self) -> Option<Color> {
        self.colors
            .iter()
            .filter(|&&c| c > 0)
            .max()
            .map(|&c| c as Color)
    }

    /// Number of distinct colors in use.
    pub fn colors_used(&self) -> usize {
        let mut seen = [false; 128];
        for &c in &self.colors {
            if c > 0 {
                seen[c as usize] = true;
            }
        }
        seen.iter().filter(|&&b| b).count()
    }

    /// Surface count per color `1..=max_color`.
    pub fn class_sizes(&self) -> Vec<usize> {
        let k = self.max_color().unwrap_or(0) as usize;
        let mut counts = vec![0; k];
        for &c in &self.colors {
            if c > 0 {
                counts[c as usize - 1] += 1;
            }
        }
        counts
    }

    /// Surfaces of each color `1..=max_color`, in surface id order.
    pub fn groups(&self) -> Vec<Vec<SurfaceId>> {
        let k = self.max_color().unwrap_or(0) as usize;
        let mut groups = vec![Vec::new(); k];
        for (s, &c) in self.colors.iter().enumerate() {
            if c > 0 {
                groups[c as usize - 1].push(s);
            }
        }
        groups
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [i8] {
        &mut self.colors
    }
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
#[error("surface {surface}: invalid color value {value}")]
pub struct InvalidColorValue {
    pub surface: SurfaceId,
    pub value: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColoringConfig {
    pub rng_seed: u64,
    /// Swap budget of a single conflict chain; `None` means ten times the
    /// surface count.
    pub max_swaps_per_conflict: Option<usize>,
    /// Greedy restarts (with seed + 1, + 2, ...) after a budget overrun.
    pub max_restarts: usize,
}

impl Default for ColoringConfig {
    fn default() -> Self {
        ColoringConfig {
            rng_seed: 0,
            max_swaps_per_conflict: None,
            max_restarts: 5,
        }
    }
}

impl ColoringConfig {
    pub fn with_seed(seed: u64) -> Self {
        ColoringConfig {
            rng_seed: seed,
            ..Default::default()
        }
    }

    pub fn swap_budget(&self, surfaces: usize) -> usize {
        self.max_swaps_per_conflict
            .unwrap_or_else(|| surfaces.saturating_mul(10))
            .max(1)
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ColoringError {
    #[error("mesh has no elements")]
    EmptyMesh,
    #[error("mesh is nonconforming; only conforming meshes can be colored")]
    Nonconforming,
    #[error("coloring has {found} entries for {expected} surfaces")]
    LengthMismatch { expected: usize, found: usize },
    #[error("input coloring is invalid: {0}")]
    InvalidInput(ColoringDiagnostic),
    #[error("conflict chain starting at surface {surface} exceeded {budget} swaps")]
    SwapBudgetExceeded { surface: SurfaceId, budget: usize },
    #[error("coloring did not converge after {attempts} attempts")]
    RestartsExhausted { attempts: usize },
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}

/// Summary of one [`color`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct ColoringReport {
    pub elements: usize,
    pub surfaces: usize,
    pub palette: Color,
    pub colors_used: usize,
    pub class_sizes: Vec<usize>,
    pub greedy_conflicts: usize,
    pub stats: ResolveStats,
    pub restarts: usize,
    /// Seed of the successful attempt.
    pub seed: u64,
    pub vizing_bound: usize,
    pub greedy_time: Duration,
    pub resolve_time: Duration,
    pub total_time: Duration,
}

/// Colors every surface of a conforming mesh with the minimal palette.
///
/// Restarts the greedy stage with `seed + 1`, `seed + 2`, ... when a conflict
/// chain overruns its swap budget, up to `config.max_restarts` times.
pub fn color(
    mesh: &Mesh,
    config: &ColoringConfig,
) -> Result<(SurfaceColoring, ColoringReport), ColoringError> {
    if mesh.element_count() == 0 {
        return Err(ColoringError::EmptyMesh);
    }
    if !mesh.is_conforming() {
        return Err(ColoringError::Nonconforming);
    }
    if config.max_swaps_per_conflict == Some(0) {
        return Err(ColoringError::Config(
            "max_swaps_per_conflict must be positive",
        ));
    }
    let palette = ColorSet::for_mesh(mesh);
    let start = Instant::now();
    let mut greedy_time = Duration::ZERO;
    let mut resolve_time = Duration::ZERO;

    for attempt in 0..=config.max_restarts {
        let cfg = ColoringConfig {
            rng_seed: config.rng_seed.wrapping_add(attempt as u64),
            ..*config
        };
        let t0 = Instant::now();
        let greedy = modified_greedy(mesh, &cfg);
        greedy_time += t0.elapsed();
        let greedy_conflicts = greedy.conflict_count();

        let t1 = Instant::now();
        let resolved = resolve::resolve(mesh, greedy, palette, &cfg, None);
        resolve_time += t1.elapsed();

        match resolved {
            Ok((coloring, stats)) => {
                let report = ColoringReport {
                    elements: mesh.element_count(),
                    surfaces: mesh.surface_count(),
                    palette: palette.size(),
                    colors_used: coloring.colors_used(),
                    class_sizes: coloring.class_sizes(),
                    greedy_conflicts,
                    stats,
                    restarts: attempt,
                    seed: cfg.rng_seed,
                    vizing_bound: mesh.connectivity_graph().vizing_bound(),
                    greedy_time,
                    resolve_time,
                    total_time: start.elapsed(),
                };
                return Ok((coloring, report));
            }
            Err(ColoringError::SwapBudgetExceeded { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(ColoringError::RestartsExhausted {
        attempts: config.max_restarts + 1,
    })
}

/// Problem found by [`verify_coloring`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColoringDiagnostic {
    LengthMismatch {
        expected: usize,
        found: usize,
    },
    Uncolored {
        surface: SurfaceId,
    },
    RepeatedColor {
        element: ElementId,
        color: Color,
        surfaces: Vec<SurfaceId>,
    },
}

impl fmt::Display for ColoringDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColoringDiagnostic::LengthMismatch { expected, found } => {
                write!(f, "coloring has {found} entries for {expected} surfaces")
            }
            ColoringDiagnostic::Uncolored { surface } => {
                write!(f, "surface {surface} is uncolored")
            }
            ColoringDiagnostic::RepeatedColor {
                element,
                color,
                surfaces,
            } => write!(
                f,
                "element {element} repeats color {color} on surfaces {surfaces:?}"
            ),
        }
    }
}

/// Lists every uncolored surface and every element whose surfaces repeat a
/// color. Empty exactly when the coloring is complete and valid.
pub fn verify_coloring(mesh: &Mesh, coloring: &SurfaceColoring) -> Vec<ColoringDiagnostic> {
    if coloring.len() != mesh.surface_count() {
        return vec![ColoringDiagnostic::LengthMismatch {
            expected: mesh.surface_count(),
            found: coloring.len(),
        }];
    }
    let mut out: Vec<ColoringDiagnostic> = coloring
        .conflicts()
        .into_iter()
        .map(|surface| ColoringDiagnostic::Uncolored { surface })
        .collect();
    out.extend(repeated_colors(mesh, coloring));
    out
}

/// Elements whose colored surfaces repeat a color; uncolored surfaces are
/// ignored.
pub fn repeated_colors(mesh: &Mesh, coloring: &SurfaceColoring) -> Vec<ColoringDiagnostic> {
    let mut out = Vec::new();
    for (eid, el) in mesh.elements().iter().enumerate() {
        let sids = el.surfaces();
        for (i, &a) in sids.iter().enumerate() {
            let Some(c) = coloring.get(a) else { continue };
            // report each repeated color once, at its first occurrence
            if sids[..i].iter().any(|&b| coloring.get(b) == Some(c)) {
                continue;
            }
            let same: Vec<SurfaceId> = sids[i..]
                .iter()
                .copied()
                .filter(|&b| coloring.get(b) == Some(c))
                .collect();
            if same.len() > 1 {
                out.push(ColoringDiagnostic::RepeatedColor {
                    element: eid,
                    color: c,
                    surfaces: same,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_quad_rect, gen_tet_prism, gen_tri_closed, gen_tri_rect, Periodic};
    use crate::mesh::RawElement;

    fn single_triangle() -> Mesh {
        Mesh::build(2, vec![[0.0; 3]; 3], vec![RawElement::triangle(0, 1, 2)]).unwrap()
    }

    #[test]
    fn palette_follows_element_kinds() {
        assert_eq!(ColorSet::for_mesh(&single_triangle()).size(), 3);
        let q = gen_quad_rect(2, 2, Periodic::NONE).unwrap();
        assert_eq!(ColorSet::for_mesh(&q).size(), 4);
        let t = gen_tet_prism(1, 1, 1).unwrap();
        assert_eq!(ColorSet::for_mesh(&t).size(), 4);
    }

    #[test]
    fn raw_values_round_trip() {
        let c = SurfaceColoring::from_raw(&[1, -1, 3]).unwrap();
        assert_eq!(c.get(0), Some(1));
        assert_eq!(c.get(1), None);
        assert_eq!(c.raw(1), UNCOLORED);
        assert_eq!(c.conflicts(), vec![1]);
        assert_eq!(
            SurfaceColoring::from_raw(&[0]).unwrap_err(),
            InvalidColorValue {
                surface: 0,
                value: 0
            }
        );
        assert!(SurfaceColoring::from_raw(&[-2]).is_err());
    }

    #[test]
    fn single_quad_uses_four_colors() {
        let q = gen_quad_rect(1, 1, Periodic::NONE).unwrap();
        let (c, report) = color(&q, &ColoringConfig::default()).unwrap();
        let mut got: Vec<_> = c.iter().map(Option::unwrap).collect();
        got.sort_unstable();
        assert_eq!(got, vec![1, 2, 3, 4]);
        assert_eq!(report.class_sizes, vec![1, 1, 1, 1]);
    }

    #[test]
    fn single_triangle_report() {
        let (c, report) = color(&single_triangle(), &ColoringConfig::default()).unwrap();
        assert!(verify_coloring(&single_triangle(), &c).is_empty());
        assert_eq!(report.class_sizes, vec![1, 1, 1]);
        assert_eq!(report.greedy_conflicts, 0);
        assert_eq!(report.vizing_bound, 1);
    }

    #[test]
    fn closed_meshes_have_balanced_classes() {
        for (mesh, n) in [
            (gen_tri_closed(6).unwrap(), 8 * 36),
            (gen_tri_rect(6, 8, Periodic::BOTH).unwrap(), 96),
        ] {
            for seed in 0..5 {
                let (c, _) = color(&mesh, &ColoringConfig::with_seed(seed)).unwrap();
                assert!(verify_coloring(&mesh, &c).is_empty());
                assert_eq!(c.class_sizes(), vec![n / 2; 3]);
            }
        }
    }

    #[test]
    fn repeated_color_is_one_diagnostic() {
        let m = single_triangle();
        let c = SurfaceColoring::from_colors(&[1, 1, 2]);
        let d = verify_coloring(&m, &c);
        assert_eq!(
            d,
            vec![ColoringDiagnostic::RepeatedColor {
                element: 0,
                color: 1,
                surfaces: vec![0, 1]
            }]
        );
    }

    #[test]
    fn uncolored_surface_is_reported() {
        let m = single_triangle();
        let c = SurfaceColoring::from_raw(&[1, -1, 2]).unwrap();
        assert_eq!(
            verify_coloring(&m, &c),
            vec![ColoringDiagnostic::Uncolored { surface: 1 }]
        );
    }

    #[test]
    fn wrong_length_is_reported() {
        let m = single_triangle();
        let c = SurfaceColoring::uncolored(2);
        assert_eq!(
            verify_coloring(&m, &c),
            vec![ColoringDiagnostic::LengthMismatch {
                expected: 3,
                found: 2
            }]
        );
    }

    #[test]
    fn empty_mesh_is_rejected() {
        let m = Mesh::build(2, vec![], vec![]).unwrap();
        assert_eq!(
            color(&m, &ColoringConfig::default()).unwrap_err(),
            ColoringError::EmptyMesh
        );
    }

    #[test]
    fn coloring_is_deterministic_per_seed() {
        let m = gen_tri_rect(20, 20, Periodic::NONE).unwrap();
        let a = color(&m, &ColoringConfig::with_seed(3)).unwrap().0;
        let b = color(&m, &ColoringConfig::with_seed(3)).unwrap().0;
        assert_eq!(a, b);
        let c = color(&m, &ColoringConfig::with_seed(4)).unwrap().0;
        assert_ne!(a, c);
    }

    #[test]
    fn odd_periodic_quads_exhaust_restarts() {
        // 3x3 torus grid: 9 nodes of degree 4, no 4-edge-coloring exists
        let m = gen_quad_rect(3, 3, Periodic::BOTH).unwrap();
        let cfg = ColoringConfig {
            rng_seed: 0,
            max_swaps_per_conflict: Some(200),
            max_restarts: 2,
        };
        assert_eq!(
            color(&m, &cfg).unwrap_err(),
            ColoringError::RestartsExhausted { attempts: 3 }
        );
    }

    #[test]
    fn accounting_balances() {
        let m = gen_tet_prism(4, 4, 4).unwrap();
        let (_, r) = color(&m, &ColoringConfig::with_seed(1)).unwrap();
        assert_eq!(
            r.greedy_conflicts + r.stats.loop_breaks,
            r.stats.resolutions
        );
    }
}
