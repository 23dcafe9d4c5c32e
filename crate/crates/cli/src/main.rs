// SPDX-License-Identifier: Apache-2.0

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use meshchroma::amr::{AmrError, RefinedMesh};
use meshchroma::coloring::ColoringDiagnostic;
use meshchroma::io::{self, MeshDocument};
use meshchroma::race::{self, SweepOptions};
use meshchroma::reorder::{self, ReorderError};
use meshchroma::stats::{self, SeriesOptions};
use meshchroma::{
    color, verify_coloring, ColoringConfig, ColoringError, ElementKind, Family, GeneratorSpec,
    IoError, Periodic,
};

#[derive(Parser)]
#[command(
    name = "meshchroma",
    version,
    about = "Race-free surface coloring for unstructured meshes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated mesh.
    Generate(GenerateArgs),
    /// Color every surface with the minimal palette.
    Color(ColorArgs),
    /// Exit 0 iff the stored coloring is complete and valid.
    Verify {
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Refine triangles 1:4 and propagate colors to the children.
    Refine {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(
            long,
            value_delimiter = ',',
            required_unless_present = "all",
            conflicts_with = "all"
        )]
        elements: Vec<usize>,
        /// Refine every active cell.
        #[arg(long)]
        all: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Merge the children of refined cells back into their parents.
    Coarsen {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        parents: Vec<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Renumber elements and surfaces by color group.
    Reorder {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Print the coalescing metric before and after.
        #[arg(long)]
        metric: bool,
    },
    /// Check the color groups for write conflicts and compare sweeps.
    RaceCheck {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Buffer memory a race-free coloring avoids.
    Memsave {
        #[arg(long)]
        p: u64,
        #[arg(long)]
        neq: u64,
        #[arg(long)]
        ns: u64,
        #[arg(long, default_value = "tri", value_parser = parse_kind)]
        kind: ElementKind,
    },
    /// Conflicts and coloring time over a series of mesh sizes.
    Stats {
        #[arg(long, value_parser = parse_family)]
        family: Family,
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, env = "MESHCHROMA_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
    },
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    #[arg(long)]
    nx: usize,
    /// Defaults to `nx`.
    #[arg(long)]
    ny: Option<usize>,
    /// Defaults to `nx`.
    #[arg(long)]
    nz: Option<usize>,
    /// Periodic in x and y.
    #[arg(long)]
    periodic: bool,
    /// Shuffle the element numbering with this seed.
    #[arg(long)]
    shuffle: Option<u64>,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ColorArgs {
    #[arg(short, long)]
    input: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long, env = "MESHCHROMA_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    max_swaps: Option<usize>,
    #[arg(long)]
    max_restarts: Option<usize>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
        .map_err(|e: meshchroma::generators::GeneratorError| {
            let names: Vec<&str> = Family::ALL.iter().map(|f| f.name()).collect();
            format!("{e} (expected one of {})", names.join(", "))
        })
}

fn parse_kind(s: &str) -> Result<ElementKind, String> {
    ElementKind::from_keyword(s)
        .ok_or_else(|| format!("unknown element kind `{s}` (tri, quad, tet)"))
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

const INVALID_MESH: u8 = 1;
const COLORING_FAILED: u8 = 2;
const AMR_VIOLATION: u8 = 3;
const IO_FAILURE: u8 = 4;
const USAGE: u8 = 64;

fn fail(code: u8, message: impl Display) -> Failure {
    Failure {
        code,
        message: message.to_string(),
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Amr(a) => a.into(),
            e if e.is_io() => fail(IO_FAILURE, e),
            e => fail(INVALID_MESH, e),
        }
    }
}

impl From<ColoringError> for Failure {
    fn from(e: ColoringError) -> Self {
        match e {
            ColoringError::RestartsExhausted { .. } | ColoringError::SwapBudgetExceeded { .. } => {
                fail(COLORING_FAILED, e)
            }
            ColoringError::Config(_) => fail(USAGE, e),
            e => fail(INVALID_MESH, e),
        }
    }
}

impl From<AmrError> for Failure {
    fn from(e: AmrError) -> Self {
        match e {
            AmrError::InvalidColoring(_) | AmrError::InvalidHierarchy(_) | AmrError::Mesh(_) => {
                fail(INVALID_MESH, e)
            }
            e => fail(AMR_VIOLATION, e),
        }
    }
}

impl From<ReorderError> for Failure {
    fn from(e: ReorderError) -> Self {
        fail(INVALID_MESH, e)
    }
}

fn read(path: &Path) -> Result<MeshDocument, Failure> {
    let is_msh = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("msh"));
    Ok(if is_msh {
        MeshDocument::new(io::read_msh(path)?)
    } else {
        io::read_native(path)?
    })
}

fn print_diagnostics(diags: &[ColoringDiagnostic]) {
    for d in diags.iter().take(20) {
        eprintln!("error: {d}");
    }
    if diags.len() > 20 {
        eprintln!("error: ... {} more", diags.len() - 20);
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Generate(a) => {
            let spec = GeneratorSpec {
                family: a.family,
                nx: a.nx,
                ny: a.ny.unwrap_or(a.nx),
                nz: a.nz.unwrap_or(a.nx),
                periodic: if a.periodic {
                    Periodic::BOTH
                } else {
                    Periodic::NONE
                },
                shuffle: a.shuffle,
            };
            let mesh = spec.generate().map_err(|e| fail(USAGE, e))?;
            io::write_native(&a.output, &MeshDocument::new(mesh))?;
        }

        Command::Color(a) => {
            let doc = read(&a.input)?;
            if doc.refined.is_some() {
                return Err(fail(
                    INVALID_MESH,
                    "refined meshes keep their propagated colors; color the base mesh",
                ));
            }
            let defaults = ColoringConfig::default();
            let config = ColoringConfig {
                rng_seed: a.seed,
                max_swaps_per_conflict: a.max_swaps.or(defaults.max_swaps_per_conflict),
                max_restarts: a.max_restarts.unwrap_or(defaults.max_restarts),
            };
            let (coloring, report) = color(&doc.mesh, &config)?;
            io::write_native(&a.output, &MeshDocument::colored(doc.mesh, coloring))?;
            match &a.report {
                Some(p) => io::write_report(&report, p)?,
                None => print!("{}", io::report_string(&report)),
            }
        }

        Command::Verify { input } => {
            let doc = read(&input)?;
            let (mesh, coloring) = doc.effective()?;
            let Some(coloring) = coloring else {
                return Err(fail(INVALID_MESH, "file has no COLORS section"));
            };
            let diags = verify_coloring(&mesh, &coloring);
            if !diags.is_empty() {
                print_diagnostics(&diags);
                return Err(fail(
                    INVALID_MESH,
                    format!("{} problem(s) found", diags.len()),
                ));
            }
            println!("valid=true");
            println!("surfaces={}", mesh.surface_count());
            println!("colors_used={}", coloring.colors_used());
        }

        Command::Refine {
            input,
            elements,
            all,
            output,
        } => {
            let base = refined_input(read(&input)?)?;
            let cells = if all {
                base.active_cells().to_vec()
            } else {
                elements
            };
            let r = base.refine(&cells)?;
            println!("active_cells={}", r.active_cells().len());
            println!("colors_used={}", r.coloring().colors_used());
            println!("max_refined_neighbors={}", r.max_refined_neighbors());
            io::write_native(&output, &MeshDocument::from_refined(r))?;
        }

        Command::Coarsen {
            input,
            parents,
            output,
        } => {
            let base = refined_input(read(&input)?)?;
            let r = base.coarsen(&parents)?;
            println!("active_cells={}", r.active_cells().len());
            let doc = match r.to_base() {
                Some((mesh, coloring)) => MeshDocument::colored(mesh, coloring),
                None => MeshDocument::from_refined(r),
            };
            io::write_native(&output, &doc)?;
        }

        Command::Reorder {
            input,
            output,
            metric,
        } => {
            let doc = read(&input)?;
            if doc.refined.is_some() {
                return Err(fail(INVALID_MESH, "refined meshes cannot be reordered"));
            }
            let Some(coloring) = doc.coloring.clone() else {
                return Err(fail(INVALID_MESH, "file has no COLORS section"));
            };
            let (plan, fallback) = reorder::build_plan_with_fallback(&doc.mesh, &coloring)?;
            if fallback {
                eprintln!(
                    "warning: some elements have no color-1 surface; numbered by first occurrence"
                );
            }
            println!("fallback={fallback}");
            let bounds: Vec<String> = plan.group_bounds().iter().map(|b| b.to_string()).collect();
            println!("group_bounds={}", bounds.join(","));
            if metric {
                let (rm, rc) = reorder::apply_plan(&doc.mesh, &coloring, &plan)?;
                let before = reorder::coalescing_metric(&doc.mesh, &coloring);
                let after = reorder::coalescing_metric(&rm, &rc);
                println!("coalescing_before={:.6}", before.aggregate());
                println!("coalescing_after={:.6}", after.aggregate());
                for g in &after.groups {
                    println!(
                        "coalescing_color_{}={:.6},{:.6}",
                        g.color,
                        g.left(),
                        g.right()
                    );
                }
            }
            let out = MeshDocument {
                plan: Some(plan),
                ..MeshDocument::colored(doc.mesh, coloring)
            };
            io::write_native(&output, &out)?;
        }

        Command::RaceCheck { input, workers } => {
            let doc = read(&input)?;
            let (mesh, coloring) = doc.effective()?;
            let Some(coloring) = coloring else {
                return Err(fail(INVALID_MESH, "file has no COLORS section"));
            };
            if let Some(&s) = coloring.conflicts().first() {
                return Err(fail(INVALID_MESH, format!("surface {s} is uncolored")));
            }
            let witnesses = race::race_certificate(&mesh, &coloring);
            for w in witnesses.iter().take(20) {
                eprintln!(
                    "error: color {} writes element {} from surfaces {} and {}",
                    w.color, w.element, w.surfaces[0], w.surfaces[1]
                );
            }
            if !witnesses.is_empty() {
                return Err(fail(
                    INVALID_MESH,
                    format!("{} write conflict(s)", witnesses.len()),
                ));
            }
            let payload = race::payload(&mesh, 0);
            let mut opts = SweepOptions {
                detect_conflicts: true,
                ..SweepOptions::default()
            };
            if let Some(w) = workers {
                opts.workers = w.max(1);
            }
            let seq = race::sweep_sequential(&mesh, &payload).map_err(|e| fail(INVALID_MESH, e))?;
            let col = race::sweep_colored(&mesh, &coloring, &payload, opts)
                .map_err(|e| fail(INVALID_MESH, e))?;
            let buf = race::sweep_buffered(&mesh, &payload, opts.workers)
                .map_err(|e| fail(INVALID_MESH, e))?;
            let equal = seq == col && col == buf;
            println!("groups={}", coloring.groups().len());
            println!("workers={}", opts.workers);
            println!("write_conflicts=0");
            println!("sweeps_equal={equal}");
            println!("total={}", seq.total());
            if !equal {
                return Err(fail(INVALID_MESH, "colored and sequential sweeps differ"));
            }
        }

        Command::Memsave { p, neq, ns, kind } => {
            let m = race::memory_saved(p, neq, ns, kind);
            println!("{} bytes ({} GB)", m.bytes, m.gigabytes());
        }

        Command::Stats {
            family,
            sizes,
            seed,
            repeats,
        } => {
            let options = SeriesOptions {
                seed,
                repeats,
                ..SeriesOptions::default()
            };
            let series = stats::run_series(family, &sizes, &options).map_err(|e| match e {
                stats::StatsError::Coloring { source, .. } => Failure::from(source),
                e => fail(USAGE, e),
            })?;
            for p in &series.points {
                println!("# resolution {}", p.resolution);
                print!("{}", io::report_string(&p.report));
            }
            println!("# summary");
            println!("family={}", family.name());
            let slope = |s: Option<f64>| s.map_or("nan".to_string(), |s| format!("{s:.4}"));
            println!("conflict_slope={}", slope(series.conflict_slope()));
            println!("time_slope={}", slope(series.time_slope()));
        }
    }
    Ok(())
}

fn refined_input(doc: MeshDocument) -> Result<RefinedMesh, Failure> {
    if let Some(r) = doc.refined {
        return Ok(r);
    }
    let Some(coloring) = doc.coloring else {
        return Err(fail(INVALID_MESH, "file has no COLORS section"));
    };
    Ok(RefinedMesh::from_base(&doc.mesh, &coloring)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
