use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use rayon::prelude::*;

use sipbif_core::export::{export_csv, export_svg, persist_branch, report_summary, sig12, SvgAxes};
use sipbif_core::parabolic::{build_subsolution, evolve_to_steady, SubsolutionSpec};
use sipbif_core::spectral::BifurcationDirection;
use sipbif_core::{run_campaign, BifurcationDiagram, BumpCode, CampaignConfig, Error, WeightDescriptor};

/// Bifurcation diagrams of -u'' = λu + a(x)u² on (0,1), u(0) = u(1) = 0.
///
/// The worker thread count is read from RAYON_NUM_THREADS.
#[derive(Parser, Debug)]
#[command(name = "sipbif", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct OutputFlags {
    /// Output directory (overrides the config).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Interior grid points (overrides the config).
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Write the SVG diagram.
    #[arg(long, overrides_with = "no_svg")]
    svg: bool,
    /// Skip the SVG diagram.
    #[arg(long = "no-svg", overrides_with = "svg")]
    no_svg: bool,
    /// Store u-vector snapshots (branches every K steps, trajectories).
    #[arg(long)]
    snapshots: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Full campaign: continuation, switching, seeding, census and exports.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: OutputFlags,
    },
    /// First and second order bifurcation directions of a weight
    /// (`sin:2`, `musin:4.5` or a JSON descriptor).
    D1d2 { weight: String },
    /// Parabolic evolution from multi-bump subsolutions.
    Evolve {
        config: PathBuf,
        #[command(flatten)]
        flags: OutputFlags,
    },
    /// Campaign restricted to a single census value of λ.
    Census {
        config: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[command(flatten)]
        flags: OutputFlags,
    },
}

/// Successful outcome: complete, or some branch/run failed.
enum Outcome {
    Complete,
    Partial,
}

fn load(config: &Path, flags: &OutputFlags) -> Result<CampaignConfig, Error> {
    let mut cfg = CampaignConfig::from_file(config)?;
    if let Some(dir) = &flags.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(n) = flags.grid {
        cfg.grid.n_interior = n;
    }
    if flags.svg {
        cfg.output.svg = true;
    }
    if flags.no_svg {
        cfg.output.svg = false;
    }
    if flags.snapshots {
        cfg.output.snapshots = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.display().to_string(),
        source: e,
    })
}

fn export_all(diagram: &BifurcationDiagram, cfg: &CampaignConfig) -> Result<String, Error> {
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    export_csv(diagram, dir)?;
    if cfg.output.svg {
        let axes = SvgAxes {
            lambda_range: cfg.output.lambda_range,
            uprime_range: cfg.output.uprime_range,
            ..SvgAxes::default()
        };
        export_svg(diagram, dir.join("diagram.svg"), &axes)?;
    }
    if cfg.output.snapshots {
        for id in 0..diagram.branches.len() {
            persist_branch(
                diagram,
                id,
                &cfg.continuation,
                dir.join("branches"),
                cfg.output.snapshot_every,
            )?;
        }
    }
    write(&dir.join("config.toml"), &cfg.to_toml_string())?;
    let summary = report_summary(diagram);
    write(&dir.join("summary.txt"), &summary)?;
    Ok(summary)
}

fn outcome_of(diagram: &BifurcationDiagram) -> Outcome {
    if diagram.failures.is_empty() {
        Outcome::Complete
    } else {
        Outcome::Partial
    }
}

fn cmd_run(config: &Path, flags: &OutputFlags) -> Result<Outcome, Error> {
    let cfg = load(config, flags)?;
    info!(
        "campaign {} on {} interior nodes",
        cfg.weight.label(),
        cfg.grid.n_interior
    );
    let diagram = run_campaign(&cfg)?;
    print!("{}", export_all(&diagram, &cfg)?);
    Ok(outcome_of(&diagram))
}

fn cmd_census(config: &Path, lambda: f64, flags: &OutputFlags) -> Result<Outcome, Error> {
    let mut cfg = load(config, flags)?;
    cfg.census.lambdas = vec![lambda];
    cfg.validate()?;
    let diagram = run_campaign(&cfg)?;
    export_all(&diagram, &cfg)?;
    let mut text = String::from("lambda,index,code,morse,uprime0,max_norm\n");
    let mut out = String::new();
    if let Some(entry) = diagram.census_at(lambda) {
        let _ = writeln!(out, "{} positive solutions at λ = {lambda}", entry.points.len());
        for (k, p) in entry.points.iter().enumerate() {
            let code = p.bump_code.as_ref().map(|c| c.to_string()).unwrap_or_default();
            let morse = p.morse_index.map(|m| m.to_string()).unwrap_or_default();
            let _ = writeln!(
                text,
                "{},{k},{code},{morse},{},{}",
                sig12(lambda),
                sig12(p.uprime0),
                sig12(p.max_norm())
            );
            let _ = writeln!(
                out,
                "  {:<10} u′(0) = {}",
                p.bump_code
                    .as_ref()
                    .map(|c| c.with_index(p.morse_index))
                    .unwrap_or_default(),
                sig12(p.uprime0)
            );
        }
    }
    write(&cfg.output.dir.join("census.csv"), &text)?;
    print!("{out}");
    Ok(outcome_of(&diagram))
}

fn cmd_d1d2(weight: &str) -> Result<Outcome, Error> {
    let w = WeightDescriptor::parse(weight)?;
    let d = BifurcationDirection::compute(&w)?;
    println!("weight: {}", w.label());
    println!("D1 = {}", sig12(d.d1));
    match d.d2 {
        Some(d2) => println!("D2 = {}", sig12(d2)),
        None => println!("D2 not computed (D1 ≠ 0)"),
    }
    println!("{}", d.criticality());
    Ok(Outcome::Complete)
}

fn cmd_evolve(config: &Path, flags: &OutputFlags) -> Result<Outcome, Error> {
    let cfg = load(config, flags)?;
    let problem = cfg.problem()?;
    let lambda = cfg.evolve.lambda.unwrap_or_else(|| cfg.seed_lambda());
    let codes: Vec<BumpCode> = if cfg.evolve.all || cfg.evolve.codes.is_empty() {
        BumpCode::all_nonzero(cfg.positive_intervals())
    } else {
        cfg.evolve.codes.clone()
    };
    let mut stepping = cfg.evolve.stepping.clone();
    if cfg.output.snapshots && stepping.snapshot_every == 0 {
        stepping.snapshot_every = 100;
    }
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    let mut table = String::from("code,lambda,status,t,steps,steady_code,morse,max_norm,monotone_violation,message\n");
    let mut failed = 0;
    let runs: Vec<_> = codes
        .par_iter()
        .map(|code| {
            SubsolutionSpec::compute(code, lambda, &problem)
                .and_then(|s| evolve_to_steady(&build_subsolution(&s, problem.n()), lambda, &problem, &stepping))
        })
        .collect();
    for (code, run) in codes.iter().zip(runs) {
        match run {
            Ok(ev) => {
                let p = &ev.steady;
                let steady_code = p.bump_code.as_ref().map(|c| c.to_string()).unwrap_or_default();
                let morse = p.morse_index.map(|m| m.to_string()).unwrap_or_default();
                let _ = writeln!(
                    table,
                    "{code},{},converged,{},{},{steady_code},{morse},{},{},",
                    sig12(lambda),
                    sig12(ev.t),
                    ev.steps,
                    sig12(p.max_norm()),
                    sig12(ev.monotone_violation)
                );
                println!(
                    "{code}: steady {} at t = {:.4} after {} steps",
                    p.bump_code
                        .as_ref()
                        .map(|c| c.with_index(p.morse_index))
                        .unwrap_or_default(),
                    ev.t,
                    ev.steps
                );
                if !ev.snapshots.is_empty() {
                    let stride = (problem.n() / 100).max(1);
                    let mut snap = String::from("t,u\n");
                    for (t, u) in &ev.snapshots {
                        let _ = write!(snap, "{}", sig12(*t));
                        for v in u.iter().step_by(stride) {
                            let _ = write!(snap, ",{}", sig12(*v));
                        }
                        snap.push('\n');
                    }
                    write(&dir.join(format!("trajectory_{code}.csv")), &snap)?;
                }
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(
                    table,
                    "{code},{},failed,,,,,,,{}",
                    sig12(lambda),
                    e.to_string().replace(',', ";")
                );
                println!("{code}: {e}");
            }
        }
    }
    write(&dir.join("evolve.csv"), &table)?;
    Ok(if failed == 0 {
        Outcome::Complete
    } else {
        Outcome::Partial
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    let result = match &cli.command {
        Command::Run { config, flags } => cmd_run(config, flags),
        Command::D1d2 { weight } => cmd_d1d2(weight),
        Command::Evolve { config, flags } => cmd_evolve(config, flags),
        Command::Census { config, lambda, flags } => cmd_census(config, *lambda, flags),
    };
    match result {
        Ok(Outcome::Complete) => ExitCode::SUCCESS,
        Ok(Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
