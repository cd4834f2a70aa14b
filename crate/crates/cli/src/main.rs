//! `tetmodes` command line: generate, evaluate, slice, analyze and solve
//! benchmark problems.
//!
//! Exit codes: 0 ok, 2 parse error, 3 spec validation failure, 4 runtime error.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tetmodes::harness::{
    analysis_report, descent_solver, evaluate_points, load_artifact, parse_spec, slice_rows, write_artifact,
    serialize_spec, write_atomic, write_slice_csv, Artifact, EvalOptions, HarnessError, ProblemSpecFile,
};
use tetmodes::mesh::Vec3;
use tetmodes::modes::ModeAnalysis;

#[derive(Parser)]
#[command(name = "tetmodes", version, about = "Multi-modal bi-objective PL benchmark problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the standard primitive spec as TOML.
    Init {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a problem artifact from a spec file.
    Generate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Mesh spacing to use instead of the planned one: `h` or `hx,hy,hz`.
        #[arg(long, value_parser = parse_spacing)]
        spacing_override: Option<Vec3>,
    },
    /// Evaluate objectives at the points of a CSV file (x,y,z per row).
    Evaluate {
        artifact: PathBuf,
        points: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail with exit code 4 if any point lies outside the domain.
        #[arg(long)]
        strict: bool,
        /// Also print the untransformed psi values.
        #[arg(long)]
        raw_psi: bool,
    },
    /// Export a constant-z slice for contour plotting.
    Slice {
        artifact: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        z: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute mode sets, signatures and their hierarchy.
    Analyze {
        artifact: PathBuf,
        /// Directory for the CSV reports; defaults to the artifact directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the seeded random descent from a start point.
    Solve {
        artifact: PathBuf,
        #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
        start: Vec3,
        /// Defaults to the seed in the spec's solver section.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_triple(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

fn parse_point(s: &str) -> Result<Vec3, String> {
    match parse_triple(s)?.as_slice() {
        &[x, y, z] => Ok([x, y, z]),
        _ => Err("expected x,y,z".into()),
    }
}

fn parse_spacing(s: &str) -> Result<Vec3, String> {
    match *parse_triple(s)?.as_slice() {
        [h] => Ok([h; 3]),
        [x, y, z] => Ok([x, y, z]),
        _ => Err("expected h or hx,hy,hz".into()),
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), HarnessError> {
    match out {
        Some(path) => write_atomic(path, bytes)?,
        None => io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Init { out } => {
            let text = serialize_spec(&ProblemSpecFile::default());
            emit(out.as_deref(), text.as_bytes())?;
        }
        Command::Generate { spec, out, spacing_override } => {
            let text = fs::read_to_string(&spec)?;
            let mut spec = parse_spec(&text)?;
            if spacing_override.is_some() {
                spec.problem.spacing_override = spacing_override;
            }
            let artifact = Artifact::compose(spec)?;
            write_artifact(&out, &artifact)?;
            let mesh = &artifact.problem.mesh;
            eprintln!(
                "wrote {} ({} vertices, {} tets)",
                out.display(),
                mesh.vertex_count(),
                mesh.tet_count()
            );
        }
        Command::Evaluate { artifact, points, out, strict, raw_psi } => {
            let artifact = load_artifact(&artifact)?;
            let mut input = Vec::new();
            fs::File::open(&points)?.read_to_end(&mut input)?;
            let mut buf = Vec::new();
            let failed = evaluate_points(&artifact.problem, input.as_slice(), &mut buf, EvalOptions { raw_psi })?;
            emit(out.as_deref(), &buf)?;
            if strict && failed > 0 {
                eprintln!("{failed} point(s) outside the domain");
                return Ok(ExitCode::from(4));
            }
        }
        Command::Slice { artifact, z, out } => {
            let artifact = load_artifact(&artifact)?;
            let rows = slice_rows(&artifact.problem, z)?;
            let mut buf = Vec::new();
            write_slice_csv(&rows, &mut buf)?;
            emit(out.as_deref(), &buf)?;
        }
        Command::Analyze { artifact: dir, out } => {
            let artifact = load_artifact(&dir)?;
            let analysis = ModeAnalysis::new(&artifact.problem);
            let hierarchy = analysis.mode_regions();
            let report = analysis_report(&analysis, &hierarchy)?;
            let out = out.unwrap_or(dir);
            fs::create_dir_all(&out)?;
            write_atomic(&out.join("modes_vertices.csv"), &report.vertices_csv)?;
            write_atomic(&out.join("modes_signatures.csv"), &report.signatures_csv)?;
            write_atomic(&out.join("modes_edges.csv"), &report.edges_csv)?;
            print!("{}", report.summary);
        }
        Command::Solve { artifact, start, seed, out } => {
            let artifact = load_artifact(&artifact)?;
            let analysis = ModeAnalysis::new(&artifact.problem);
            let config = &artifact.spec.solver;
            let seed = seed.unwrap_or(config.seed);
            let trajectory = descent_solver(&analysis, start, seed, config)?;
            let mut buf = Vec::new();
            trajectory.write_csv(&mut buf)?;
            emit(out.as_deref(), &buf)?;
            match trajectory.terminal_mode {
                Some(m) => eprintln!("seed {seed}: terminal mode {} (vertex {})", m.component, m.representative),
                None => eprintln!("seed {seed}: no terminal mode"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
