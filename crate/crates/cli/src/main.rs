use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use crossfield::field::{self, BoundaryMode, SmootherConfig, StopRule};
use crossfield::mesh::{self, MeshFormat};
use crossfield::recovery::{approx_project_lenient, ProjectionMethod};
use crossfield::sampling::{self, DEFAULT_SEED};
use crossfield::tensor::CrossTensor9;
use crossfield::vtk;

/// Exit code for a smoothing run that hit the iteration cap.
const EXIT_NOT_CONVERGED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "crossfield",
    version,
    about = "Cross-field tensors: recovery, projection and smoothing"
)]
struct Cli {
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smooth a cross field on a tetrahedral mesh and export it.
    Smooth(SmoothArgs),
    /// Round-trip random rotations through tensor construction and recovery.
    BenchRecovery {
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Compare eigen-based and simplex projections of perturbed cross tensors.
    BenchProjection {
        #[arg(long, default_value_t = 4000)]
        samples: usize,
        /// Frobenius radius of the perturbation ball.
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// CSV destination; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a file of 9-coefficient tensors, one per line.
    Validate { path: PathBuf },
    /// Write a structured tetrahedral mesh of the unit ball.
    SphereMesh {
        /// Grid cells per axis; the mesh has 6·n³ tetrahedra.
        #[arg(long, default_value_t = 20)]
        cells: usize,
        /// `.msh` writes Gmsh 2.2, anything else the simple format.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SmoothArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Output directory for field.vtk and convergence.csv.
    #[arg(long)]
    out: PathBuf,
    /// `normal` or `file:PATH`.
    #[arg(long, default_value = "normal", value_parser = parse_bc)]
    bc: BoundaryMode,
    #[arg(long, default_value_t = 1e-4)]
    target: f64,
    #[arg(long = "max-iters", default_value_t = 5000)]
    max_iters: usize,
    #[arg(long, value_enum, default_value_t = Projection::Approx)]
    projection: Projection,
    #[arg(long, value_enum, default_value_t = Stop::Energy)]
    stop: Stop,
    /// Band of η flagged as singular, `LO,HI`.
    #[arg(long = "eta-band", default_value = "0.3,0.5", value_parser = parse_band)]
    eta_band: (f64, f64),
    #[arg(long = "report-every", default_value_t = 100)]
    report_every: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Projection {
    Approx,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum Stop {
    /// E_k / E_0.
    Energy,
    /// Update norm relative to the first update.
    Residual,
}

fn parse_bc(s: &str) -> Result<BoundaryMode, String> {
    match s {
        "normal" => Ok(BoundaryMode::NormalAligned),
        _ => match s.strip_prefix("file:") {
            Some(p) if !p.is_empty() => Ok(BoundaryMode::FromFile(PathBuf::from(p))),
            _ => Err(format!("expected 'normal' or 'file:PATH', got '{s}'")),
        },
    }
}

fn parse_band(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got '{s}'"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("invalid lower bound '{lo}'"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("invalid upper bound '{hi}'"))?;
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(format!("empty band [{lo}, {hi}]"));
    }
    Ok((lo, hi))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            warn!("could not configure thread pool: {e}");
        }
    }
    let result = match cli.command {
        Command::Smooth(args) => cmd_smooth(&args),
        Command::BenchRecovery { samples, seed } => cmd_bench_recovery(samples, seed),
        Command::BenchProjection {
            samples,
            radius,
            seed,
            out,
        } => cmd_bench_projection(samples, radius, seed, out.as_deref()),
        Command::Validate { path } => cmd_validate(&path),
        Command::SphereMesh { cells, out } => cmd_sphere_mesh(cells, &out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn cmd_smooth(args: &SmoothArgs) -> Result<ExitCode> {
    let config = SmootherConfig {
        energy_reduction_target: args.target,
        max_iterations: args.max_iters,
        projection: match args.projection {
            Projection::Approx => ProjectionMethod::Approx,
            Projection::Exact => ProjectionMethod::Exact,
        },
        report_every: args.report_every,
        stop_rule: match args.stop {
            Stop::Energy => StopRule::EnergyRatio,
            Stop::Residual => StopRule::Residual,
        },
    };
    config.validate()?;

    let mesh = mesh::load_mesh(&args.mesh, MeshFormat::from_path(&args.mesh))?;
    info!(
        "{}: {} vertices, {} tetrahedra, {} boundary triangles",
        args.mesh.display(),
        mesh.vertices().len(),
        mesh.tets().len(),
        mesh.boundary_triangles().len()
    );
    let initial = field::boundary_conditions(&mesh, &args.bc)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;

    let (smoothed, converged) = match field::smooth(&mesh, &initial, &config) {
        Ok(s) => (s, true),
        Err(field::NotConverged(s)) => (*s, false),
    };
    let report = field::singularity_indicator(&mesh, &smoothed.field, args.eta_band);
    let mut out_field = smoothed.field.clone();
    out_field.eta = report.eta.clone();

    let vtk_path = args.out.join("field.vtk");
    let csv_path = args.out.join("convergence.csv");
    vtk::export_vtk(&mesh, &out_field, &report, &vtk_path)?;
    smoothed
        .log
        .write_csv(&csv_path)
        .with_context(|| format!("cannot write {}", csv_path.display()))?;

    println!("iterations: {}", smoothed.iterations);
    println!("stop ratio: {:e}", smoothed.ratio);
    if let (Some(e0), Some(e)) = (smoothed.log.initial_energy(), smoothed.log.final_energy()) {
        println!("energy: {e0:e} -> {e:e}");
    }
    println!("eta: min {:.6} max {:.6}", report.min, report.max);
    println!(
        "flagged: {} vertices with eta in [{}, {}]",
        report.flagged.len(),
        report.band.0,
        report.band.1
    );
    println!("eta histogram: {:?}", report.histogram);
    println!("wrote {} and {}", vtk_path.display(), csv_path.display());
    if converged {
        Ok(ExitCode::SUCCESS)
    } else {
        println!("not converged: iteration cap {} reached", config.max_iterations);
        Ok(ExitCode::from(EXIT_NOT_CONVERGED))
    }
}

fn cmd_bench_recovery(samples: usize, seed: u64) -> Result<ExitCode> {
    println!("# bench-recovery seed={seed} samples={samples}");
    let r = sampling::bench_recovery(samples, seed);
    println!("max_cross_distance: {:e}", r.max_distance);
    println!(
        "failures: {} (threshold {:e})",
        r.failures,
        sampling::RECOVERY_TOLERANCE
    );
    Ok(if r.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_bench_projection(samples: usize, radius: f64, seed: u64, out: Option<&Path>) -> Result<ExitCode> {
    if !(radius >= 0.0 && radius.is_finite()) {
        bail!("radius must be a non-negative number, got {radius}");
    }
    let b = sampling::bench_projection(samples, radius, seed);
    let header = format!("# bench-projection seed={seed} samples={samples} radius={radius}");
    let summary = format!(
        "{header}\nmedian_relative_gap: {:e}\nexact_worse_than_approx: {}\nsimplex_failures: {}",
        b.median_relative_gap(),
        b.violations(),
        b.errors()
    );
    match out {
        Some(path) => {
            std::fs::write(path, b.to_csv()).with_context(|| format!("cannot write {}", path.display()))?;
            println!("{summary}");
        }
        None => {
            print!("{}", b.to_csv());
            eprintln!("{summary}");
        }
    }
    Ok(if b.violations() == 0 && b.errors() == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_validate(path: &Path) -> Result<ExitCode> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut all_pass = true;
    let mut count = 0;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        let a = CrossTensor9::from_str(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        let report = a.to_full().validate();
        let (p, degenerate) = approx_project_lenient(&a);
        let verdict = if report.passed() { "pass" } else { "FAIL" };
        all_pass &= report.passed();
        count += 1;
        println!(
            "line {}: structure {verdict} (symmetry {:e}, trace {:e}), distance {:e}{}",
            i + 1,
            report.symmetry_violation,
            report.trace_violation,
            p.distance,
            if degenerate { " (degenerate spectrum)" } else { "" }
        );
    }
    println!("{count} tensors checked");
    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_sphere_mesh(cells: usize, out: &Path) -> Result<ExitCode> {
    if cells == 0 {
        bail!("--cells must be at least 1");
    }
    let m = mesh::unit_ball(cells);
    let text = match MeshFormat::from_path(out) {
        MeshFormat::Msh => mesh::write_msh(&m),
        MeshFormat::SimpleTet => mesh::write_simple_tet(&m),
    };
    std::fs::write(out, text).with_context(|| format!("cannot write {}", out.display()))?;
    println!(
        "wrote {} ({} vertices, {} tetrahedra)",
        out.display(),
        m.vertices().len(),
        m.tets().len()
    );
    Ok(ExitCode::SUCCESS)
}
