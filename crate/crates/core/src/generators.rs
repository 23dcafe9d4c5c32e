// SPDX-License-Identifier: Apache-2.0

//! Deterministic structured meshes for tests and scaling studies.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mesh::{Mesh, MeshError, RawElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Unit square, each cell split into two triangles.
    TriRect,
    /// Unit square of quadrilaterals.
    QuadRect,
    /// Unit box, each hexahedral cell split into six tetrahedra.
    TetPrism,
    /// Closed triangulated sphere (subdivided octahedron).
    TriClosed,
    /// Unit square, quadrilaterals in the left half and triangles in the right.
    HybridRect,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::TriRect,
        Family::QuadRect,
        Family::TetPrism,
        Family::TriClosed,
        Family::HybridRect,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::TriRect => "tri_rect",
            Family::QuadRect => "quad_rect",
            Family::TetPrism => "tet_prism",
            Family::TriClosed => "tri_closed",
            Family::HybridRect => "hybrid_rect",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GeneratorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| GeneratorError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeneratorError {
    #[error("resolution must be at least 1 (got {0})")]
    Resolution(usize),
    #[error("periodic {family} meshes need at least {min} cells per periodic axis (got {got})")]
    PeriodicTooCoarse {
        family: Family,
        min: usize,
        got: usize,
    },
    #[error("{0} meshes do not support periodic axes")]
    PeriodicUnsupported(Family),
    #[error("unknown mesh family `{0}`")]
    UnknownFamily(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Axis periodicity of a rectangular generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Periodic {
    pub x: bool,
    pub y: bool,
}

impl Periodic {
    pub const NONE: Periodic = Periodic { x: false, y: false };
    pub const BOTH: Periodic = Periodic { x: true, y: true };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub periodic: Periodic,
    /// Seed for locally shuffling the element numbering. Structured
    /// numbering makes id-order greedy coloring unusually easy (quad grids
    /// never conflict), so scaling studies shuffle.
    pub shuffle: Option<u64>,
}

impl GeneratorSpec {
    /// Square/cubic resolution `n` for a family (`tri_closed` uses `nx` only).
    pub fn uniform(family: Family, n: usize) -> Self {
        GeneratorSpec {
            family,
            nx: n,
            ny: n,
            nz: n,
            periodic: Periodic::NONE,
            shuffle: None,
        }
    }

    pub fn generate(&self) -> Result<Mesh, GeneratorError> {
        let mesh = self.generate_ordered()?;
        Ok(match self.shuffle {
            Some(seed) => shuffle_elements(&mesh, seed),
            None => mesh,
        })
    }

    fn generate_ordered(&self) -> Result<Mesh, GeneratorError> {
        match self.family {
            Family::TriRect => gen_tri_rect(self.nx, self.ny, self.periodic),
            Family::QuadRect => gen_quad_rect(self.nx, self.ny, self.periodic),
            Family::TetPrism => {
                no_periodic(self.family, self.periodic)?;
                gen_tet_prism(self.nx, self.ny, self.nz)
            }
            Family::TriClosed => {
                no_periodic(self.family, self.periodic)?;
                gen_tri_closed(self.nx)
            }
            Family::HybridRect => {
                no_periodic(self.family, self.periodic)?;
                gen_hybrid_rect(self.nx, self.ny)
            }
        }
    }
}

/// Elements are shuffled within consecutive windows of this many ids.
pub const SHUFFLE_WINDOW: usize = 64;

/// The same mesh with its elements shuffled inside windows of
/// [`SHUFFLE_WINDOW`] ids; surfaces are renumbered accordingly.
pub fn shuffle_elements(mesh: &Mesh, seed: u64) -> Mesh {
    let mut raw = mesh.raw_elements();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for w in raw.chunks_mut(SHUFFLE_WINDOW) {
        w.shuffle(&mut rng);
    }
    Mesh::build(mesh.dim(), mesh.vertices().to_vec(), raw).expect("reordering keeps a valid mesh")
}

fn no_periodic(family: Family, p: Periodic) -> Result<(), GeneratorError> {
    if p.x || p.y {
        Err(GeneratorError::PeriodicUnsupported(family))
    } else {
        Ok(())
    }
}

fn check_res(ns: &[usize]) -> Result<(), GeneratorError> {
    match ns.iter().find(|&&n| n == 0) {
        Some(&n) => Err(GeneratorError::Resolution(n)),
        None => Ok(()),
    }
}

/// Vertex lattice of the unit square with optional wrap-around per axis.
struct Lattice2 {
    nx: usize,
    ny: usize,
    per: Periodic,
}

impl Lattice2 {
    fn new(
        family: Family,
        nx: usize,
        ny: usize,
        per: Periodic,
        min_periodic: usize,
    ) -> Result<Self, GeneratorError> {
        check_res(&[nx, ny])?;
        for (on, n) in [(per.x, nx), (per.y, ny)] {
            if on && n < min_periodic {
                return Err(GeneratorError::PeriodicTooCoarse {
                    family,
                    min: min_periodic,
                    got: n,
                });
            }
        }
        Ok(Lattice2 { nx, ny, per })
    }

    fn cols(&self) -> usize {
        if self.per.x {
            self.nx
        } else {
            self.nx + 1
        }
    }

    fn rows(&self) -> usize {
        if self.per.y {
            self.ny
        } else {
            self.ny + 1
        }
    }

    fn id(&self, i: usize, j: usize) -> usize {
        let i = if self.per.x { i % self.nx } else { i };
        let j = if self.per.y { j % self.ny } else { j };
        j * self.cols() + i
    }

    fn vertices(&self) -> Vec<[f64; 3]> {
        let mut v = Vec::with_capacity(self.cols() * self.rows());
        for j in 0..self.rows() {
            for i in 0..self.cols() {
                v.push([i as f64 / self.nx as f64, j as f64 / self.ny as f64, 0.0]);
            }
        }
        v
    }

    /// Corner ids of cell (i, j), counterclockwise from the lower left.
    fn cell(&self, i: usize, j: usize) -> [usize; 4] {
        [
            self.id(i, j),
            self.id(i + 1, j),
            self.id(i + 1, j + 1),
            self.id(i, j + 1),
        ]
    }
}

fn split_cell(cell: [usize; 4], i: usize, j: usize, out: &mut Vec<RawElement>) {
    let [a, b, c, d] = cell;
    // diagonal direction alternates with cell parity
    if (i + j).is_multiple_of(2) {
        out.push(RawElement::triangle(a, b, c));
        out.push(RawElement::triangle(a, c, d));
    } else {
        out.push(RawElement::triangle(a, b, d));
        out.push(RawElement::triangle(b, c, d));
    }
}

/// `2·nx·ny` counterclockwise triangles on the unit square. Periodic axes
/// need at least three cells.
pub fn gen_tri_rect(nx: usize, ny: usize, periodic: Periodic) -> Result<Mesh, GeneratorError> {
    let lat = Lattice2::new(Family::TriRect, nx, ny, periodic, 3)?;
    let mut raw = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            split_cell(lat.cell(i, j), i, j, &mut raw);
        }
    }
    Ok(Mesh::build(2, lat.vertices(), raw)?)
}

/// `nx·ny` counterclockwise quadrilaterals on the unit square. Periodic axes
/// need at least three cells.
pub fn gen_quad_rect(nx: usize, ny: usize, periodic: Periodic) -> Result<Mesh, GeneratorError> {
    let lat = Lattice2::new(Family::QuadRect, nx, ny, periodic, 3)?;
    let mut raw = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let [a, b, c, d] = lat.cell(i, j);
            raw.push(RawElement::quad(a, b, c, d));
        }
    }
    Ok(Mesh::build(2, lat.vertices(), raw)?)
}

/// Quadrilaterals in columns `i < nx/2`, split triangles elsewhere.
pub fn gen_hybrid_rect(nx: usize, ny: usize) -> Result<Mesh, GeneratorError> {
    let lat = Lattice2::new(Family::HybridRect, nx, ny, Periodic::NONE, 1)?;
    let mut raw = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let cell = lat.cell(i, j);
            if i < nx / 2 {
                raw.push(RawElement::quad(cell[0], cell[1], cell[2], cell[3]));
            } else {
                split_cell(cell, i, j, &mut raw);
            }
        }
    }
    Ok(Mesh::build(2, lat.vertices(), raw)?)
}

// Kuhn split: one tet per axis permutation, all sharing the cell diagonal.
const AXIS_ORDERS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Box of `nx·ny·nz` hexahedral cells, each split into six tetrahedra along
/// its main diagonal. Every cell uses the same split, so faces conform.
pub fn gen_tet_prism(nx: usize, ny: usize, nz: usize) -> Result<Mesh, GeneratorError> {
    check_res(&[nx, ny, nz])?;
    let id = |i: usize, j: usize, k: usize| (k * (ny + 1) + j) * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    i as f64 / nx as f64,
                    j as f64 / ny as f64,
                    k as f64 / nz as f64,
                ]);
            }
        }
    }
    let mut raw = Vec::with_capacity(6 * nx * ny * nz);
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                for order in AXIS_ORDERS {
                    let mut p = [i, j, k];
                    let mut tet = [id(p[0], p[1], p[2]); 4];
                    for (step, &axis) in order.iter().enumerate() {
                        p[axis] += 1;
                        tet[step + 1] = id(p[0], p[1], p[2]);
                    }
                    if signed_volume(&vertices, &tet) < 0.0 {
                        tet.swap(2, 3);
                    }
                    raw.push(RawElement::tet(tet[0], tet[1], tet[2], tet[3]));
                }
            }
        }
    }
    Ok(Mesh::build(3, vertices, raw)?)
}

fn signed_volume(v: &[[f64; 3]], t: &[usize; 4]) -> f64 {
    let d = |a: usize| {
        [
            v[t[a]][0] - v[t[0]][0],
            v[t[a]][1] - v[t[0]][1],
            v[t[a]][2] - v[t[0]][2],
        ]
    };
    let (a, b, c) = (d(1), d(2), d(3));
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0])
}

/// Closed unit sphere: each octahedron face is cut into `n²` triangles and
/// the vertices are projected radially. `8n²` elements, `12n²` surfaces.
pub fn gen_tri_closed(n: usize) -> Result<Mesh, GeneratorError> {
    check_res(&[n])?;
    let mut index: HashMap<[i64; 3], usize> = HashMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut raw = Vec::with_capacity(8 * n * n);
    let ni = n as i64;

    let mut vertex = |p: [i64; 3]| -> usize {
        *index.entry(p).or_insert_with(|| {
            let norm = ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as f64).sqrt();
            vertices.push([p[0] as f64 / norm, p[1] as f64 / norm, p[2] as f64 / norm]);
            vertices.len() - 1
        })
    };

    for octant in 0..8 {
        let s = [
            if octant & 1 == 0 { 1 } else { -1 },
            if octant & 2 == 0 { 1 } else { -1 },
            if octant & 4 == 0 { 1 } else { -1 },
        ];
        // corners of the face, counterclockwise seen from outside
        let mut corners = [[s[0], 0, 0], [0, s[1], 0], [0, 0, s[2]]];
        if s[0] * s[1] * s[2] < 0 {
            corners.swap(1, 2);
        }
        // lattice point a·P0 + b·P1 + c·P2 with a + b + c = n
        let point = |b: i64, c: i64| -> [i64; 3] {
            let a = ni - b - c;
            let mut p = [0i64; 3];
            for d in 0..3 {
                p[d] = a * corners[0][d] + b * corners[1][d] + c * corners[2][d];
            }
            p
        };
        for b in 0..ni {
            for c in 0..(ni - b) {
                let p0 = vertex(point(b, c));
                let p1 = vertex(point(b + 1, c));
                let p2 = vertex(point(b, c + 1));
                raw.push(RawElement::triangle(p0, p1, p2));
                if b + c + 2 <= ni {
                    let p3 = vertex(point(b + 1, c + 1));
                    raw.push(RawElement::triangle(p1, p3, p2));
                }
            }
        }
    }
    Ok(Mesh::build(3, vertices, raw)?)
}
