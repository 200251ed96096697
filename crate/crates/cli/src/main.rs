use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use qvhi::config::ScenarioConfig;
use qvhi::experiments::{exit_code, preflight, run_experiment, write_outputs};
use qvhi::mesh::{BoundaryTag, Mesh, Side};

/// Solver for slip-wall Bingham flow with a solution-dependent constraint.
#[derive(Parser, Debug)]
#[command(name = "qvhi", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the experiment described by a scenario file.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Solve even if the slip smallness condition fails.
        #[arg(long)]
        force_run: bool,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print every hypothesis constant and check without solving.
    Preflight {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Generate or check ASCII meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
}

#[derive(Subcommand, Debug)]
enum MeshCommand {
    /// Crossed-triangle mesh of a rectangle.
    Gen(GenArgs),
    /// Validate a mesh file and print its statistics.
    Check { file: PathBuf },
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, default_value_t = 1.0)]
    lx: f64,
    #[arg(long, default_value_t = 1.0)]
    ly: f64,
    #[arg(long)]
    nx: usize,
    #[arg(long)]
    ny: usize,
    /// Sides carrying the slip condition (comma separated).
    #[arg(long, value_delimiter = ',')]
    slip: Vec<Side>,
    #[arg(long)]
    out: PathBuf,
}

fn run(config: PathBuf, out: PathBuf, force_run: bool, seed: Option<u64>) -> ExitCode {
    let cfg = match ScenarioConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let outcome = match run_experiment(&cfg, seed, force_run.then_some(true)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            if let qvhi::Error::NonConvergence { history, .. } = &e {
                let tail: Vec<String> = history.iter().rev().take(5).rev().map(|r| format!("{r:.3e}")).collect();
                eprintln!("last residuals: {}", tail.join(" "));
            }
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    match write_outputs(&outcome, &out) {
        Ok(files) => {
            let r = &outcome.report;
            for run in &r.runs {
                let s = &run.report;
                println!(
                    "run {:>3} {:<16} iterations {:>3}  residual {:.3e}  |u|_V {:.6e}  active {}",
                    run.id,
                    run.label,
                    s.iterations,
                    s.history.last().map_or(0.0, |h| h.rho),
                    s.norm_u,
                    s.active
                );
            }
            if let Some(t) = &r.tables.refinement {
                println!("fitted L2 order {:.4}", t.slope);
            }
            if let Some(t) = &r.tables.deviations {
                println!("deviations non-increasing: {}", t.non_increasing);
            }
            if let Some(t) = &r.tables.uniqueness {
                println!("largest pairwise distance {:.3e}", t.max_distance);
            }
            println!("wrote {} files to {}", files.len(), out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: writing outputs: {e}");
            ExitCode::from(1)
        }
    }
}

fn run_preflight(config: PathBuf, seed: Option<u64>, json: bool) -> anyhow::Result<()> {
    let cfg = ScenarioConfig::load(&config)?;
    let mesh = cfg.build_mesh()?;
    let problem = cfg.build_problem(cfg.build_discretization(&mesh)?)?;
    let table = preflight(&cfg, &problem, seed.unwrap_or(cfg.solver.seed))?;
    if json {
        println!("{}", serde_json::to_string_pretty(&table)?);
    } else {
        print!("{}", table.render());
        if let Some(why) = table.blocking_failure() {
            println!("blocked: {why}");
        }
    }
    Ok(())
}

fn mesh_gen(a: GenArgs) -> anyhow::Result<()> {
    let m = Mesh::generate_rectangle(a.lx, a.ly, a.nx, a.ny, &a.slip)?;
    m.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "wrote {} ({} nodes, {} triangles)",
        a.out.display(),
        m.nodes.len(),
        m.triangles.len()
    );
    Ok(())
}

fn mesh_check(file: PathBuf) -> anyhow::Result<()> {
    let m = Mesh::load(&file)?;
    if m.triangles.is_empty() {
        bail!("mesh has no triangles");
    }
    println!("nodes            {}", m.nodes.len());
    println!("triangles        {}", m.triangles.len());
    println!("boundary edges   {}", m.boundary_edges.len());
    println!("area             {:.12e}", m.area());
    println!("mesh size h      {:.12e}", m.mesh_size());
    println!("|Γ₀|             {:.12e}", m.boundary_length(BoundaryTag::Gamma0));
    println!("|Γ₁|             {:.12e}", m.boundary_length(BoundaryTag::Gamma1));
    println!("ok");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            force_run,
            seed,
        } => return run(config, out, force_run, seed),
        Command::Preflight { config, seed, json } => run_preflight(config, seed, json),
        Command::Mesh(MeshCommand::Gen(a)) => mesh_gen(a),
        Command::Mesh(MeshCommand::Check { file }) => mesh_check(file),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
