// SPDX-License-Identifier: Apache-2.0

//! Race-free surface coloring for unstructured meshes.

pub mod amr;
pub mod coloring;
pub mod generators;
pub mod io;
pub mod mesh;
pub mod race;
pub mod reorder;
pub mod stats;

pub use coloring::{
    color, verify_coloring, ColorSet, ColoringConfig, ColoringError, ColoringReport,
    SurfaceColoring,
};
pub use generators::{Family, GeneratorSpec, Periodic};
pub use io::{IoError, MeshDocument};
pub use mesh::{ElementKind, Mesh, MeshError, RawElement};
