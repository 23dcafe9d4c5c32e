// SPDX-License-Identifier: Apache-2.0

//! Surface-to-element accumulation under three strategies, and the buffer
//! memory a coloring avoids.
//!
//! Every surface adds its payload to its left element and subtracts it from
//! its right element. [`sweep_colored`] runs one color group at a time with
//! concurrent workers and a barrier between groups; the element updates are
//! deliberately split into a separate load and store, so overlapping writes
//! inside a group would lose updates instead of being hidden by atomics.
//! [`sweep_buffered`] writes both contributions of every surface to their own
//! slots and gathers per element afterwards. [`sweep_sequential`] is the
//! oracle. Integer payloads make all three comparable bit for bit.

use std::ops::Range;
use std::sync::atomic::{AtomicBool, AtomicI64, AtomicU32, Ordering::Relaxed};
use std::sync::{Barrier, Mutex};

use thiserror::Error;

use crate::coloring::{Color, SurfaceColoring};
use crate::mesh::{ElementId, ElementKind, Mesh, SurfaceId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RaceError {
    #[error("surface {surface} is uncolored")]
    Uncolored { surface: SurfaceId },
    #[error("color {color} writes element {element} more than once")]
    WriteConflictDetected { color: Color, element: ElementId },
    #[error("{found} payload values for {expected} surfaces")]
    PayloadLength { expected: usize, found: usize },
}

/// Per-element accumulators.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Accumulation {
    values: Vec<i64>,
}

impl Accumulation {
    pub fn values(&self) -> &[i64] {
        &self.values
    }

    pub fn total(&self) -> i64 {
        self.values.iter().sum()
    }
}

/// Deterministic integer payload of a surface, in `[-2^31, 2^31)`.
pub fn payload_value(seed: u64, surface: SurfaceId) -> i64 {
    // splitmix64 finalizer
    let mut z = seed ^ (surface as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    (z >> 32) as u32 as i32 as i64
}

pub fn payload(mesh: &Mesh, seed: u64) -> Vec<i64> {
    (0..mesh.surface_count())
        .map(|s| payload_value(seed, s))
        .collect()
}

fn check_payload(mesh: &Mesh, payload: &[i64]) -> Result<(), RaceError> {
    if payload.len() != mesh.surface_count() {
        return Err(RaceError::PayloadLength {
            expected: mesh.surface_count(),
            found: payload.len(),
        });
    }
    Ok(())
}

/// Single worker, surfaces in id order.
pub fn sweep_sequential(mesh: &Mesh, payload: &[i64]) -> Result<Accumulation, RaceError> {
    check_payload(mesh, payload)?;
    let mut values = vec![0i64; mesh.element_count()];
    for (s, &f) in mesh.surfaces().iter().zip(payload) {
        values[s.left()] += f;
        if let Some(r) = s.right() {
            values[r] -= f;
        }
    }
    Ok(Accumulation { values })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub workers: usize,
    /// Tag every element write with its color group and fail on a second
    /// write in the same group.
    pub detect_conflicts: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            workers: std::thread::available_parallelism().map_or(4, |n| n.get()),
            detect_conflicts: cfg!(debug_assertions),
        }
    }
}

fn chunks(len: usize, workers: usize) -> impl Iterator<Item = Range<usize>> {
    let step = len.div_ceil(workers.max(1)).max(1);
    (0..workers.max(1)).map(move |w| (w * step).min(len)..((w + 1) * step).min(len))
}

/// Processes the color groups in order, each with `workers` concurrent
/// workers, with a barrier after every group.
pub fn sweep_colored(
    mesh: &Mesh,
    coloring: &SurfaceColoring,
    payload: &[i64],
    options: SweepOptions,
) -> Result<Accumulation, RaceError> {
    check_payload(mesh, payload)?;
    if let Some(&surface) = coloring.conflicts().first() {
        return Err(RaceError::Uncolored { surface });
    }
    let groups = coloring.groups();
    let workers = options.workers.max(1);
    let acc: Vec<AtomicI64> = (0..mesh.element_count())
        .map(|_| AtomicI64::new(0))
        .collect();
    let marks: Vec<AtomicU32> = if options.detect_conflicts {
        (0..mesh.element_count())
            .map(|_| AtomicU32::new(0))
            .collect()
    } else {
        Vec::new()
    };
    let barrier = Barrier::new(workers);
    let failed = AtomicBool::new(false);
    let first_conflict: Mutex<Option<(Color, ElementId)>> = Mutex::new(None);

    let touch = |e: ElementId, delta: i64, group: usize| {
        if options.detect_conflicts && marks[e].swap(group as u32 + 1, Relaxed) == group as u32 + 1
        {
            failed.store(true, Relaxed);
            let mut slot = first_conflict.lock().unwrap();
            let c = (group as Color + 1, e);
            if slot.is_none_or(|old| c < old) {
                *slot = Some(c);
            }
        }
        // plain read-modify-write: a concurrent writer would lose an update
        let v = acc[e].load(Relaxed);
        acc[e].store(v + delta, Relaxed);
    };

    std::thread::scope(|scope| {
        for w in 0..workers {
            let (groups, barrier, touch) = (&groups, &barrier, &touch);
            scope.spawn(move || {
                for (g, ids) in groups.iter().enumerate() {
                    let range = chunks(ids.len(), workers).nth(w).unwrap();
                    for &sid in &ids[range] {
                        let s = mesh.surface(sid);
                        touch(s.left(), payload[sid], g);
                        if let Some(r) = s.right() {
                            touch(r, -payload[sid], g);
                        }
                    }
                    barrier.wait();
                }
            });
        }
    });

    if failed.load(Relaxed) {
        let (color, element) = first_conflict.into_inner().unwrap().unwrap();
        return Err(RaceError::WriteConflictDetected { color, element });
    }
    Ok(Accumulation {
        values: acc.into_iter().map(AtomicI64::into_inner).collect(),
    })
}

/// Slot `2s` holds the left contribution of surface `s`, slot `2s + 1` the
/// right one (empty on the boundary). Filled by concurrent workers.
pub fn fill_buffer(
    mesh: &Mesh,
    payload: &[i64],
    workers: usize,
) -> Result<Vec<Option<i64>>, RaceError> {
    check_payload(mesh, payload)?;
    let mut buffer = vec![None; 2 * mesh.surface_count()];
    let step = mesh.surface_count().div_ceil(workers.max(1)).max(1);
    std::thread::scope(|scope| {
        for (w, slots) in buffer.chunks_mut(2 * step).enumerate() {
            scope.spawn(move || {
                for (i, pair) in slots.chunks_mut(2).enumerate() {
                    let sid = w * step + i;
                    let s = mesh.surface(sid);
                    pair[0] = Some(payload[sid]);
                    pair[1] = s.right().map(|_| -payload[sid]);
                }
            });
        }
    });
    Ok(buffer)
}

/// Two phases with no coloring: fill the `2·Ns` buffer, then let each
/// element gather its slots.
pub fn sweep_buffered(
    mesh: &Mesh,
    payload: &[i64],
    workers: usize,
) -> Result<Accumulation, RaceError> {
    let buffer = fill_buffer(mesh, payload, workers)?;
    let mut values = vec![0i64; mesh.element_count()];
    let step = values.len().div_ceil(workers.max(1)).max(1);
    std::thread::scope(|scope| {
        for (w, out) in values.chunks_mut(step).enumerate() {
            let buffer = &buffer;
            scope.spawn(move || {
                for (i, v) in out.iter_mut().enumerate() {
                    let e = w * step + i;
                    *v = mesh
                        .element(e)
                        .surfaces()
                        .iter()
                        .map(|&sid| {
                            let slot = if mesh.surface(sid).left() == e {
                                2 * sid
                            } else {
                                2 * sid + 1
                            };
                            buffer[slot].expect("gathered slot was filled")
                        })
                        .sum();
                }
            });
        }
    });
    Ok(Accumulation { values })
}

/// Element written twice within one color group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaceWitness {
    pub color: Color,
    pub element: ElementId,
    pub surfaces: [SurfaceId; 2],
}

/// Checks every color group exhaustively: no element may be touched by two
/// surfaces of the same group. Returns every violation.
pub fn race_certificate(mesh: &Mesh, coloring: &SurfaceColoring) -> Vec<RaceWitness> {
    let mut owner: Vec<Option<SurfaceId>> = vec![None; mesh.element_count()];
    let mut out = Vec::new();
    for (g, ids) in coloring.groups().iter().enumerate() {
        owner.fill(None);
        for &sid in ids {
            for e in mesh.surface(sid).elements() {
                match owner[e] {
                    Some(first) => out.push(RaceWitness {
                        color: g as Color + 1,
                        element: e,
                        surfaces: [first, sid],
                    }),
                    None => owner[e] = Some(sid),
                }
            }
        }
    }
    out
}

/// Buffer memory avoided by a race-free coloring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryEstimate {
    pub basis_functions: u64,
    pub equations: u64,
    pub surfaces: u64,
    pub bytes: u64,
}

impl MemoryEstimate {
    /// Decimal gigabytes truncated to two decimals, e.g. `"0.72"`.
    pub fn gigabytes(&self) -> String {
        let hundredths = self.bytes / 10_000_000;
        format!("{}.{:02}", hundredths / 100, hundredths % 100)
    }
}

/// Basis functions of a degree-`p` polynomial space on an element.
pub fn basis_functions(p: u64, kind: ElementKind) -> u64 {
    match kind {
        ElementKind::Triangle => (p + 1) * (p + 2) / 2,
        ElementKind::Quadrilateral => (p + 1) * (p + 1),
        ElementKind::Tetrahedron => (p + 1) * (p + 2) * (p + 3) / 6,
    }
}

/// Two buffers of `Np · Neq` doubles per surface.
pub fn memory_saved(p: u64, equations: u64, surfaces: u64, kind: ElementKind) -> MemoryEstimate {
    let np = basis_functions(p, kind);
    MemoryEstimate {
        basis_functions: np,
        equations,
        surfaces,
        bytes: 2 * np * equations * surfaces * 8,
    }
}
