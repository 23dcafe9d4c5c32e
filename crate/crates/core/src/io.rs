// SPDX-License-Identifier: Apache-2.0

//! Native text format, MSH 2.2 import and key/value reports.
//!
//! A native file holds the mesh as built, its coloring and optionally a
//! reordering plan; the reordered mesh is recomputed on demand. Refined
//! meshes store every cell of the hierarchy with a `PARENTS` section.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::amr::{AmrError, RefinedMesh};
use crate::coloring::{ColoringReport, SurfaceColoring};
use crate::mesh::{ElementKind, Mesh, MeshError, RawElement};
use crate::reorder::{apply_plan, ReorderError, ReorderingPlan};

pub const NATIVE_HEADER: &str = "MESHCHROMA 1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unsupported format version: {0}")]
    UnsupportedVersion(String),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Amr(#[from] AmrError),
    #[error(transparent)]
    Plan(#[from] ReorderError),
}

impl IoError {
    /// Failure of the file system rather than of the contents.
    pub fn is_io(&self) -> bool {
        matches!(self, IoError::Io { .. })
    }
}

fn malformed(line: usize, message: impl Into<String>) -> IoError {
    IoError::Malformed {
        line,
        message: message.into(),
    }
}

/// Contents of a native file.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshDocument {
    /// The mesh in build order (the active mesh when `refined` is set).
    pub mesh: Mesh,
    pub coloring: Option<SurfaceColoring>,
    /// Renumbering of `mesh`; requires `coloring`.
    pub plan: Option<ReorderingPlan>,
    pub refined: Option<RefinedMesh>,
}

impl MeshDocument {
    pub fn new(mesh: Mesh) -> Self {
        MeshDocument {
            mesh,
            coloring: None,
            plan: None,
            refined: None,
        }
    }

    pub fn colored(mesh: Mesh, coloring: SurfaceColoring) -> Self {
        MeshDocument {
            coloring: Some(coloring),
            ..MeshDocument::new(mesh)
        }
    }

    pub fn from_refined(refined: RefinedMesh) -> Self {
        MeshDocument {
            mesh: refined.active_mesh().clone(),
            coloring: Some(refined.coloring().clone()),
            plan: None,
            refined: Some(refined),
        }
    }

    /// Mesh and coloring with the plan applied, if there is one.
    pub fn effective(&self) -> Result<(Mesh, Option<SurfaceColoring>), IoError> {
        match (&self.plan, &self.coloring) {
            (Some(plan), Some(c)) => {
                let (m, c) = apply_plan(&self.mesh, c, plan)?;
                Ok((m, Some(c)))
            }
            _ => Ok((self.mesh.clone(), self.coloring.clone())),
        }
    }
}

fn write_coords(out: &mut String, dim: usize, v: &[f64; 3]) {
    for (i, x) in v[..dim].iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{x:?}").unwrap();
    }
    out.push('\n');
}

fn write_elements(out: &mut String, raw: &[RawElement]) {
    writeln!(out, "ELEMENTS {}", raw.len()).unwrap();
    for el in raw {
        out.push_str(el.kind.keyword());
        for v in &el.vertices {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
}

fn write_colors(out: &mut String, c: &SurfaceColoring) {
    writeln!(out, "COLORS {}", c.len()).unwrap();
    for s in 0..c.len() {
        writeln!(out, "{}", c.raw(s)).unwrap();
    }
}

/// Serializes a document. Output depends only on the document.
pub fn to_native_string(doc: &MeshDocument) -> Result<String, IoError> {
    let mut out = String::new();
    out.push_str(NATIVE_HEADER);
    out.push('\n');
    if let Some(r) = &doc.refined {
        if doc.plan.is_some() {
            return Err(malformed(
                0,
                "refined meshes cannot carry a reordering plan",
            ));
        }
        writeln!(out, "VERTICES {}", r.vertices().len()).unwrap();
        for v in r.vertices() {
            write_coords(&mut out, r.dim(), v);
        }
        write_elements(&mut out, &r.raw_cells());
        let parents = r.parents();
        writeln!(out, "PARENTS {}", parents.len()).unwrap();
        for p in parents {
            match p {
                Some(p) => writeln!(out, "{p}").unwrap(),
                None => out.push_str("-1\n"),
            }
        }
        write_colors(&mut out, r.coloring());
        return Ok(out);
    }

    let m = &doc.mesh;
    writeln!(out, "VERTICES {}", m.vertex_count()).unwrap();
    for v in m.vertices() {
        write_coords(&mut out, m.dim(), v);
    }
    write_elements(&mut out, &m.raw_elements());
    if let Some(c) = &doc.coloring {
        write_colors(&mut out, c);
    }
    if let Some(p) = &doc.plan {
        if doc.coloring.is_none() {
            return Err(malformed(0, "a reordering plan needs a coloring"));
        }
        let b = p.group_bounds();
        writeln!(
            out,
            "PERMUTATIONS {} {} {}",
            p.element_perm().len(),
            p.surface_perm().len(),
            b.len()
        )
        .unwrap();
        for id in p.element_perm().iter().chain(p.surface_perm()).chain(b) {
            writeln!(out, "{id}").unwrap();
        }
    }
    Ok(out)
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let io = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn write_native(path: &Path, doc: &MeshDocument) -> Result<(), IoError> {
    write_atomic(path, to_native_string(doc)?.as_bytes())
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_native(path: &Path) -> Result<MeshDocument, IoError> {
    parse_native(&read_to_string(path)?)
}

/// Significant lines with their 1-based numbers; `#` starts a comment.
struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            let l = l.split('#').next().unwrap().trim();
            self.last = i + 1;
            if !l.is_empty() {
                return Some((i + 1, l));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str), IoError> {
        let at = self.last + 1;
        self.next()
            .ok_or_else(|| malformed(at, format!("unexpected end of file, expected {what}")))
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, word: &str, what: &str) -> Result<T, IoError> {
    word.parse()
        .map_err(|_| malformed(line, format!("bad {what} '{word}'")))
}

fn count_header(line: usize, words: &[&str], fields: usize) -> Result<Vec<usize>, IoError> {
    if words.len() != fields + 1 {
        return Err(malformed(
            line,
            format!("{} takes {fields} count(s)", words[0]),
        ));
    }
    words[1..]
        .iter()
        .map(|w| parse_num(line, w, "count"))
        .collect()
}

fn read_ids(lines: &mut Lines, n: usize, what: &str) -> Result<Vec<usize>, IoError> {
    (0..n)
        .map(|_| {
            let (ln, l) = lines.expect(what)?;
            parse_num(ln, l, what)
        })
        .collect()
}

pub fn parse_native(text: &str) -> Result<MeshDocument, IoError> {
    let mut lines = Lines::new(text);
    match lines.next() {
        Some((_, NATIVE_HEADER)) => {}
        Some((_, l)) if l.starts_with("MESHCHROMA") => {
            return Err(IoError::UnsupportedVersion(l.to_string()))
        }
        Some((ln, _)) => return Err(malformed(ln, format!("expected '{NATIVE_HEADER}'"))),
        None => return Err(malformed(1, "empty file")),
    }

    let mut dim: Option<usize> = None;
    let mut vertices: Option<Vec<[f64; 3]>> = None;
    let mut raw: Option<Vec<RawElement>> = None;
    let mut parents: Option<Vec<Option<usize>>> = None;
    let mut colors: Option<SurfaceColoring> = None;
    let mut plan: Option<(usize, ReorderingPlan)> = None;

    while let Some((ln, l)) = lines.next() {
        let words: Vec<&str> = l.split_whitespace().collect();
        let seen = match words[0] {
            "VERTICES" => vertices.is_some(),
            "ELEMENTS" => raw.is_some(),
            "PARENTS" => parents.is_some(),
            "COLORS" => colors.is_some(),
            "PERMUTATIONS" => plan.is_some(),
            other => return Err(malformed(ln, format!("unknown section '{other}'"))),
        };
        if seen {
            return Err(malformed(ln, format!("duplicate {} section", words[0])));
        }
        match words[0] {
            "VERTICES" => {
                let n = count_header(ln, &words, 1)?[0];
                let mut vs = Vec::with_capacity(n);
                for _ in 0..n {
                    let (vl, l) = lines.expect("vertex")?;
                    let xs: Vec<f64> = l
                        .split_whitespace()
                        .map(|w| parse_num(vl, w, "coordinate"))
                        .collect::<Result<_, _>>()?;
                    if !(2..=3).contains(&xs.len()) || dim.is_some_and(|d| d != xs.len()) {
                        return Err(malformed(vl, "inconsistent coordinate count"));
                    }
                    dim = Some(xs.len());
                    let mut v = [0.0; 3];
                    v[..xs.len()].copy_from_slice(&xs);
                    vs.push(v);
                }
                vertices = Some(vs);
            }
            "ELEMENTS" => {
                let n = count_header(ln, &words, 1)?[0];
                let mut els = Vec::with_capacity(n);
                for _ in 0..n {
                    let (el, l) = lines.expect("element")?;
                    let mut w = l.split_whitespace();
                    let kw = w.next().unwrap();
                    let kind = ElementKind::from_keyword(kw)
                        .ok_or_else(|| malformed(el, format!("unknown element kind '{kw}'")))?;
                    let vs: Vec<usize> = w
                        .map(|x| parse_num(el, x, "vertex id"))
                        .collect::<Result<_, _>>()?;
                    if vs.len() != kind.vertex_count() {
                        return Err(malformed(
                            el,
                            format!("{kind} needs {} vertices", kind.vertex_count()),
                        ));
                    }
                    els.push(RawElement::new(kind, &vs));
                }
                raw = Some(els);
            }
            "PARENTS" => {
                let n = count_header(ln, &words, 1)?[0];
                let mut ps = Vec::with_capacity(n);
                for _ in 0..n {
                    let (pl, l) = lines.expect("parent id")?;
                    let p: i64 = parse_num(pl, l, "parent id")?;
                    ps.push(match p {
                        -1 => None,
                        p if p >= 0 => Some(p as usize),
                        _ => return Err(malformed(pl, "parent ids are >= -1")),
                    });
                }
                parents = Some(ps);
            }
            "COLORS" => {
                let n = count_header(ln, &words, 1)?[0];
                let mut cs = Vec::with_capacity(n);
                for _ in 0..n {
                    let (cl, l) = lines.expect("color")?;
                    cs.push((cl, parse_num::<i32>(cl, l, "color")?));
                }
                let values: Vec<i32> = cs.iter().map(|c| c.1).collect();
                colors = Some(SurfaceColoring::from_raw(&values).map_err(|e| {
                    malformed(cs[e.surface].0, format!("invalid color {}", e.value))
                })?);
            }
            "PERMUTATIONS" => {
                let c = count_header(ln, &words, 3)?;
                let ep = read_ids(&mut lines, c[0], "element id")?;
                let sp = read_ids(&mut lines, c[1], "surface id")?;
                let gb = read_ids(&mut lines, c[2], "group bound")?;
                plan = Some((ln, ReorderingPlan::new(ep, sp, gb)?));
            }
            _ => unreachable!(),
        }
    }

    let vertices = vertices.ok_or_else(|| malformed(lines.last, "missing VERTICES section"))?;
    let raw = raw.ok_or_else(|| malformed(lines.last, "missing ELEMENTS section"))?;
    let dim = dim.unwrap_or_else(|| infer_dim(&raw));

    if let Some(parents) = parents {
        if plan.is_some() {
            return Err(malformed(
                lines.last,
                "PARENTS and PERMUTATIONS cannot be combined",
            ));
        }
        let colors =
            colors.ok_or_else(|| malformed(lines.last, "PARENTS requires a COLORS section"))?;
        let r = RefinedMesh::from_hierarchy(dim, vertices, &raw, &parents, &colors)?;
        return Ok(MeshDocument::from_refined(r));
    }

    let mesh = Mesh::build(dim, vertices, raw)?;
    if let Some(c) = &colors {
        if c.len() != mesh.surface_count() {
            return Err(malformed(
                lines.last,
                format!(
                    "COLORS has {} entries, mesh has {} surfaces",
                    c.len(),
                    mesh.surface_count()
                ),
            ));
        }
    }
    let plan = match plan {
        Some((ln, _)) if colors.is_none() => {
            return Err(malformed(ln, "PERMUTATIONS requires a COLORS section"))
        }
        Some((ln, p)) => {
            if p.element_perm().len() != mesh.element_count()
                || p.surface_perm().len() != mesh.surface_count()
            {
                return Err(malformed(ln, "permutation sizes do not match the mesh"));
            }
            Some(p)
        }
        None => None,
    };
    Ok(MeshDocument {
        mesh,
        coloring: colors,
        plan,
        refined: None,
    })
}

fn infer_dim(raw: &[RawElement]) -> usize {
    raw.iter().map(|e| e.kind.dimension()).max().unwrap_or(2)
}

/// Reads a Gmsh 2.2 ASCII file. Triangles (2), quadrangles (3) and
/// tetrahedra (4) of the highest dimension present are kept; points and
/// lines, and triangles bounding a tetrahedral volume, are skipped.
pub fn read_msh(path: &Path) -> Result<Mesh, IoError> {
    parse_msh(&read_to_string(path)?)
}

/// Coordinates and the index of each file node id.
type NodeTable = (Vec<[f64; 3]>, HashMap<u64, usize>);

pub fn parse_msh(text: &str) -> Result<Mesh, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| malformed(0, format!("unexpected end of file, expected {what}")))
    };

    let mut version_seen = false;
    let mut nodes: Option<NodeTable> = None;
    let mut elements: Option<Vec<(usize, ElementKind, Vec<u64>)>> = None;

    while let Ok((ln, l)) = next("section") {
        if l.is_empty() {
            continue;
        }
        let Some(name) = l.strip_prefix('$') else {
            return Err(malformed(ln, format!("expected a section, found '{l}'")));
        };
        let end = format!("$End{name}");
        match name {
            "MeshFormat" => {
                let (vl, v) = next("format line")?;
                let w: Vec<&str> = v.split_whitespace().collect();
                if w.len() != 3 {
                    return Err(malformed(
                        vl,
                        "format line needs version, file type, data size",
                    ));
                }
                if w[0] != "2.2" && w[0] != "2" {
                    return Err(IoError::UnsupportedVersion(format!("MSH {}", w[0])));
                }
                if w[1] != "0" {
                    return Err(IoError::UnsupportedVersion("binary MSH".into()));
                }
                version_seen = true;
            }
            "Nodes" => {
                let (cl, c) = next("node count")?;
                let n: usize = parse_num(cl, c, "node count")?;
                let mut coords = Vec::with_capacity(n);
                let mut index = HashMap::with_capacity(n);
                for _ in 0..n {
                    let (nl, l) = next("node")?;
                    let w: Vec<&str> = l.split_whitespace().collect();
                    if w.len() != 4 {
                        return Err(malformed(nl, "node line needs id x y z"));
                    }
                    let id: u64 = parse_num(nl, w[0], "node id")?;
                    let mut v = [0.0; 3];
                    for (k, x) in w[1..].iter().enumerate() {
                        v[k] = parse_num(nl, x, "coordinate")?;
                    }
                    if index.insert(id, coords.len()).is_some() {
                        return Err(malformed(nl, format!("duplicate node id {id}")));
                    }
                    coords.push(v);
                }
                nodes = Some((coords, index));
            }
            "Elements" => {
                let (cl, c) = next("element count")?;
                let n: usize = parse_num(cl, c, "element count")?;
                let mut els = Vec::new();
                for _ in 0..n {
                    let (el, l) = next("element")?;
                    let w: Vec<&str> = l.split_whitespace().collect();
                    if w.len() < 3 {
                        return Err(malformed(el, "element line too short"));
                    }
                    let ty: u32 = parse_num(el, w[1], "element type")?;
                    let kind = match ty {
                        1 | 8 | 15 => continue,
                        2 => ElementKind::Triangle,
                        3 => ElementKind::Quadrilateral,
                        4 => ElementKind::Tetrahedron,
                        other => {
                            return Err(malformed(el, format!("unsupported element type {other}")))
                        }
                    };
                    let ntags: usize = parse_num(el, w[2], "tag count")?;
                    let vs = &w[(3 + ntags).min(w.len())..];
                    if vs.len() != kind.vertex_count() {
                        return Err(malformed(
                            el,
                            format!("{kind} needs {} nodes", kind.vertex_count()),
                        ));
                    }
                    let vs = vs
                        .iter()
                        .map(|x| parse_num(el, x, "node id"))
                        .collect::<Result<_, _>>()?;
                    els.push((el, kind, vs));
                }
                elements = Some(els);
            }
            _ => {}
        }
        // skip to the end marker; anything left inside a known section is an error
        loop {
            let (sl, l) = next(&end)?;
            if l == end {
                break;
            }
            if matches!(name, "MeshFormat" | "Nodes" | "Elements") && !l.is_empty() {
                return Err(malformed(sl, format!("expected '{end}'")));
            }
        }
    }

    if !version_seen {
        return Err(malformed(1, "missing $MeshFormat section"));
    }
    let (coords, index) = nodes.ok_or_else(|| malformed(0, "missing $Nodes section"))?;
    let elements = elements.ok_or_else(|| malformed(0, "missing $Elements section"))?;
    let dim = elements.iter().map(|e| e.1.dimension()).max().unwrap_or(2);
    let mut raw = Vec::with_capacity(elements.len());
    for (el, kind, vs) in elements {
        if kind.dimension() != dim {
            continue;
        }
        let ids: Vec<usize> = vs
            .iter()
            .map(|v| {
                index
                    .get(v)
                    .copied()
                    .ok_or_else(|| malformed(el, format!("unknown node id {v}")))
            })
            .collect::<Result<_, _>>()?;
        raw.push(RawElement::new(kind, &ids));
    }
    let mut coords = coords;
    if dim == 2 {
        for v in &mut coords {
            v[2] = 0.0;
        }
    }
    Ok(Mesh::build(dim, coords, raw)?)
}

/// Stable `key=value` lines describing a coloring run.
pub fn report_string(r: &ColoringReport) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: &dyn std::fmt::Display| writeln!(out, "{k}={v}").unwrap();
    kv("elements", &r.elements);
    kv("surfaces", &r.surfaces);
    kv("palette", &r.palette);
    kv("colors_used", &r.colors_used);
    kv("vizing_bound", &r.vizing_bound);
    let counts: Vec<String> = r.class_sizes.iter().map(|c| c.to_string()).collect();
    kv("color_counts", &counts.join(","));
    kv("greedy_conflicts", &r.greedy_conflicts);
    kv("resolutions", &r.stats.resolutions);
    kv("swaps", &r.stats.swaps);
    kv("loop_breaks", &r.stats.loop_breaks);
    kv("forced_swaps", &r.stats.forced_swaps);
    kv("restarts", &r.restarts);
    kv("seed", &r.seed);
    kv(
        "greedy_time_s",
        &format!("{:.6}", r.greedy_time.as_secs_f64()),
    );
    kv(
        "resolve_time_s",
        &format!("{:.6}", r.resolve_time.as_secs_f64()),
    );
    kv(
        "total_time_s",
        &format!("{:.6}", r.total_time.as_secs_f64()),
    );
    out
}

pub fn write_report(report: &ColoringReport, path: &Path) -> Result<(), IoError> {
    write_atomic(path, report_string(report).as_bytes())
}

/// Parses `key=value` lines back into pairs, in order.
pub fn parse_report(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}
