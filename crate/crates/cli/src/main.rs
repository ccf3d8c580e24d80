use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tto_core::femcheck::{run_femcheck, FemCheckConfig};
use tto_core::io::vtk::VtkGrid;
use tto_core::io::{ConfigSource, RunWriter};
use tto_core::material::{MaterialParams, PlasticityKind};
use tto_core::matpoint::{load_factor, material_point_run, EPS11_MAX, STEPS};
use tto_core::optimizer::{run, IterationRecord, Observer, OptState, Problem, RunStatus};
use tto_core::{Preset, RunConfig64};

#[derive(Parser)]
#[command(name = "tto", version, about = "Thermodynamic topology optimization with surrogate plasticity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a benchmark structure.
    Run(RunArgs),
    /// Drive one material point through a tension/compression cycle.
    Matpoint(MatpointArgs),
    /// Compare surrogate and classic plastic strains on a fixed structure.
    Femcheck(FemcheckArgs),
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bvp: Option<String>,
    #[arg(long)]
    plasticity: Option<String>,
    #[arg(long)]
    loops: Option<usize>,
    #[arg(long)]
    v0: Option<f64>,
    #[arg(long = "eta-s")]
    eta_s: Option<f64>,
    #[arg(long = "beta-mm2")]
    beta_mm2: Option<f64>,
    #[arg(long = "esize-mm")]
    esize_mm: Option<f64>,
    #[arg(long = "max-iters")]
    max_iters: Option<usize>,
    /// Output directory (default: runs/<bvp>_<plasticity>_loops<n>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Any other configuration key, e.g. `--set u_star_mm=0.04`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct MatpointArgs {
    #[arg(long, default_value = "ideal")]
    plasticity: String,
    #[arg(long, default_value_t = STEPS)]
    steps: usize,
    #[arg(long = "eps11-max", default_value_t = EPS11_MAX)]
    eps11_max: f64,
    /// CSV file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FemcheckArgs {
    #[arg(long, default_value = "clamped_beam")]
    bvp: String,
    #[arg(long, default_value = "ideal")]
    plasticity: String,
    #[arg(long = "esize-mm")]
    esize_mm: Option<f64>,
    #[arg(long, default_value_t = 20)]
    increments: usize,
    /// Directory for the field file of both solutions.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Matpoint(a) => cmd_matpoint(a).map(|_| ExitCode::SUCCESS),
        Command::Femcheck(a) => cmd_femcheck(a).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run_config(a: &RunArgs) -> Result<RunConfig64> {
    let mut src = match &a.config {
        Some(p) => ConfigSource::read(p)?,
        None => ConfigSource::new(),
    };
    let mut flag = |key: &str, v: Option<String>| -> Result<()> {
        if let Some(v) = v {
            src.set(key, v)?;
        }
        Ok(())
    };
    flag("bvp", a.bvp.clone())?;
    flag("plasticity", a.plasticity.clone())?;
    flag("loops", a.loops.map(|v| v.to_string()))?;
    flag("v0", a.v0.map(|v| v.to_string()))?;
    flag("eta_s", a.eta_s.map(|v| v.to_string()))?;
    flag("beta_mm2", a.beta_mm2.map(|v| v.to_string()))?;
    flag("esize_mm", a.esize_mm.map(|v| v.to_string()))?;
    flag("max_iters", a.max_iters.map(|v| v.to_string()))?;
    flag("out", a.out.as_ref().map(|p| p.display().to_string()))?;
    for kv in &a.set {
        let (k, v) = kv
            .split_once('=')
            .with_context(|| format!("--set expects KEY=VALUE, got '{kv}'"))?;
        src.set(k, v.trim())?;
    }
    let mut cfg: RunConfig64 = src.resolve()?;
    if cfg.out.is_none() {
        cfg.out = Some(PathBuf::from(format!("runs/{}_{}_loops{}", cfg.bvp, cfg.plasticity, cfg.loops)));
    }
    Ok(cfg)
}

struct Progress<'a> {
    writer: &'a mut RunWriter,
    quiet: bool,
}

impl Observer<f64> for Progress<'_> {
    fn on_iteration(&mut self, p: &Problem<f64>, s: &OptState<f64>, r: &IterationRecord) -> tto_core::Result<()> {
        if !self.quiet && (r.iteration <= 3 || r.iteration % 10 == 0) {
            eprintln!(
                "iter {:4}  S = {:.6e} N/mm  plastic points {:6}  max |eps_p| {:.3e}  {:.2} s",
                r.iteration, r.stiffness, r.plastic_points, r.max_eps_p, r.wall_time_s
            );
        }
        self.writer.on_iteration(p, s, r)
    }
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let cfg = run_config(&a)?;
    let out = cfg.out.clone().expect("output directory resolved");
    let problem = Problem::from_config(&cfg)?;
    if !a.quiet {
        eprintln!(
            "{} / {} / loops {}: {} elements, {} free dofs, output {}",
            cfg.bvp,
            cfg.plasticity,
            cfg.loops,
            problem.model.mesh.n_elements(),
            problem.model.dofs.n_free(),
            out.display()
        );
    }
    let mut writer = RunWriter::create(&out, cfg.snapshot_every)?;
    let outcome = run(
        &problem,
        &mut Progress {
            writer: &mut writer,
            quiet: a.quiet,
        },
    )?;
    let manifest = writer.finish(&cfg, &problem, &outcome)?;
    let s = outcome.history.last().map_or(f64::NAN, |r| r.stiffness);
    match outcome.status {
        RunStatus::Converged { iteration } => {
            println!("converged at iteration {iteration}, S = {s:.6e} N/mm ({})", manifest.display());
            Ok(ExitCode::SUCCESS)
        }
        RunStatus::MaxIterations => {
            println!(
                "not converged after {} iterations, S = {s:.6e} N/mm ({})",
                outcome.history.len(),
                manifest.display()
            );
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_matpoint(a: MatpointArgs) -> Result<()> {
    let kind: PlasticityKind = a.plasticity.parse()?;
    anyhow::ensure!(a.steps > 0 && a.steps % 4 == 0, "--steps must be a positive multiple of 4");
    let params = MaterialParams::<f64>::steel(kind);
    let curve = material_point_run(&params, a.steps, a.eps11_max);
    let rows = curve.rows();
    let mut w: csv::Writer<Box<dyn std::io::Write>> = csv::Writer::from_writer(match &a.out {
        Some(p) => Box::new(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(std::io::stdout()),
    });
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let peak = curve.classic_eps_p[a.steps / 4].norm();
    let dev = (0..=a.steps / 4)
        .map(|l| (curve.surrogate_eps_p[l] - curve.classic_eps_p[l]).max_abs())
        .fold(0.0, f64::max);
    eprintln!(
        "{kind}: max |eps_p| at peak {peak:.4e}, loading-branch deviation {:.3e} (relative {:.3e}), \
         classic loop work {:.4e} MPa, surrogate loop work {:.4e} MPa, eps11 at step {} = {}",
        dev,
        if peak > 0.0 { dev / peak } else { 0.0 },
        curve.classic_loop_work(),
        curve.surrogate_loop_work(),
        a.steps / 4,
        load_factor(a.steps / 4, a.steps) * a.eps11_max
    );
    Ok(())
}

fn cmd_femcheck(a: FemcheckArgs) -> Result<()> {
    let bvp: Preset = a.bvp.parse()?;
    let law: PlasticityKind = a.plasticity.parse()?;
    let mut cfg = FemCheckConfig::<f64>::new(bvp, law);
    if let Some(e) = a.esize_mm {
        cfg.e_size = e;
    }
    cfg.options.increments = a.increments;
    eprintln!("{bvp}: designing the structure (ideal plasticity, 1 loop, e = {} mm)", cfg.e_size);
    let rep = run_femcheck(&cfg)?;
    println!(
        "{} elements, design {:?} after {} iterations",
        rep.elements, rep.design_status, rep.design_iterations
    );
    println!(
        "{law}: chi >= 0.5: max |eps_p| {:.4e}, max deviation {:.4e} ({:.3}%), equivalent strain deviation {:.3}%",
        rep.structure.reference_max,
        rep.structure.max_abs,
        100.0 * rep.structure.max_relative,
        100.0 * rep.structure.norm_max_relative
    );
    println!(
        "{law}: all elements: max |eps_p| {:.4e}, max deviation {:.4e} ({:.3}%), equivalent strain deviation {:.3}%",
        rep.all.reference_max,
        rep.all.max_abs,
        100.0 * rep.all.max_relative,
        100.0 * rep.all.norm_max_relative
    );
    if let Some(dir) = &a.out {
        write_femcheck_fields(dir, &cfg, &rep)?;
    }
    Ok(())
}

fn write_femcheck_fields(
    dir: &Path,
    cfg: &FemCheckConfig<f64>,
    rep: &tto_core::femcheck::FemCheckReport<f64>,
) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let problem = Problem::from_config(&cfg.design_config())?;
    let norms = |f: &[[tto_core::SymTensor64; 8]]| -> Vec<f64> {
        f.iter().map(|e| e.iter().map(|x| x.norm()).sum::<f64>() / 8.0).collect()
    };
    let mut g = VtkGrid::from_mesh(&problem.model.mesh, "tto femcheck");
    g.add_cell_scalar("chi", &rep.chi)
        .add_cell_scalar("eps_p_surrogate", &norms(&rep.surrogate.eps_p))
        .add_cell_scalar("eps_p_classic", &norms(&rep.classic.eps_p))
        .add_point_vector("displacement_surrogate", &rep.surrogate.u)
        .add_point_vector("displacement_classic", &rep.classic.u);
    let path = dir.join("femcheck.vtk");
    g.write(&path)?;
    println!("fields written to {}", path.display());
    Ok(())
}
