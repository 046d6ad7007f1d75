use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{ArgAction, CommandFactory, Parser, Subcommand};
use log::{info, warn};

use cardiotwin::activation::fim::solve_eikonal_with_tol;
use cardiotwin::activation::{build_velocity_tensor, default_root_set, ActivationMap};
use cardiotwin::analysis::{analyze, SCALAR_NAMES};
use cardiotwin::cohort::manifest::{list_meshes, mesh_id, scenario_seed, Cohort};
use cardiotwin::cohort::{generate_cohort, CohortSample, Heart};
use cardiotwin::config::RunConfig;
use cardiotwin::ecg::leads::leads_at;
use cardiotwin::ecg::{normalize_and_resample, EcgRecord};
use cardiotwin::geometry::{
    assign_fibers, compute_ventricular_coordinates, generate_idealized_biventricle, place_electrodes,
};
use cardiotwin::infarct::catalog::{find_scenario, scenario_catalog_with, HEALTHY};
use cardiotwin::infarct::{correlated_noise_field, scenario_tissue, Tissue};
use cardiotwin::io::Annotated;
use cardiotwin::reaction::apd::apd_field;
use cardiotwin::reaction::simulate::simulate_with_table;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (build ", env!("CARDIOTWIN_BUILD_HASH"), ")");

/// Infarct scar synthesis, reaction-Eikonal simulation and pseudo-ECG cohorts.
#[derive(Parser)]
#[command(name = "cardiotwin", version = VERSION, about)]
struct Cli {
    /// TOML configuration. Flags override it; it overrides built-in defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Log more (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an idealized biventricular mesh with coordinates, fibers and electrodes.
    MeshGen {
        #[arg(long)]
        out: Option<PathBuf>,
        /// Target mean edge length (cm).
        #[arg(long)]
        edge: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Synthesize a catalog scenario's scar and border zone on a mesh.
    ScarGen {
        #[arg(long)]
        mesh: Option<PathBuf>,
        /// Catalog name, e.g. transmural_ext_anterior.
        #[arg(long)]
        scenario: Option<String>,
        /// Cohort seed; the scar noise seed is derived from it and the mesh id.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the activation map (uses the mesh's tissue labels when present).
    Activate {
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate voltages and write the normalized eight-lead ECG.
    Simulate {
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long)]
        ecg_out: Option<PathBuf>,
        /// Also write every node's voltage trace.
        #[arg(long)]
        dump_voltages: Option<PathBuf>,
    },
    /// Run the full scenario catalog on every mesh in a directory.
    Cohort {
        #[arg(long)]
        mesh_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Nodes per exported sample.
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// DTW matrices, phenotype features and z-scores for one mesh of a cohort.
    Analyze {
        #[arg(long)]
        cohort: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Defaults to the first mesh in the manifest.
        #[arg(long)]
        mesh_id: Option<String>,
    },
    /// Re-check a cohort directory or a single output file.
    Validate { path: Option<PathBuf> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Exits with status 2 and usage text when a required value is missing
/// from both the flags and the config file.
fn required<T>(v: Option<T>, flag: &str) -> T {
    v.unwrap_or_else(|| {
        Cli::command()
            .error(ErrorKind::MissingRequiredArgument, format!("`{flag}` is required (flag or [run] config entry)"))
            .exit()
    })
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => RunConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => RunConfig::default(),
    };
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    let r = &mut cfg.run;
    // flag > file > default
    match cli.command {
        Cmd::MeshGen { out, edge, seed } => {
            r.out = out.or(r.out.take());
            if let Some(e) = edge {
                cfg.mesh.edge = e;
            }
            if let Some(s) = seed {
                cfg.mesh.seed = s;
            }
            let out = required(cfg.run.out.clone(), "--out");
            mesh_gen(&cfg, &out)
        }
        Cmd::ScarGen { mesh, scenario, seed, out } => {
            r.mesh = mesh.or(r.mesh.take());
            r.scenario = scenario.or(r.scenario.take());
            r.out = out.or(r.out.take());
            if let Some(s) = seed {
                cfg.cohort.seed = s;
            }
            let mesh = required(cfg.run.mesh.clone(), "--mesh");
            let scenario = required(cfg.run.scenario.clone(), "--scenario");
            let out = required(cfg.run.out.clone(), "--out");
            scar_gen(&cfg, &mesh, &scenario, &out)
        }
        Cmd::Activate { mesh, out } => {
            r.mesh = mesh.or(r.mesh.take());
            r.out = out.or(r.out.take());
            let mesh = required(cfg.run.mesh.clone(), "--mesh");
            let out = required(cfg.run.out.clone(), "--out");
            activate(&cfg, &mesh, &out)
        }
        Cmd::Simulate { mesh, ecg_out, dump_voltages } => {
            r.mesh = mesh.or(r.mesh.take());
            r.ecg_out = ecg_out.or(r.ecg_out.take());
            r.dump_voltages = dump_voltages.or(r.dump_voltages.take());
            let mesh = required(cfg.run.mesh.clone(), "--mesh");
            let ecg_out = required(cfg.run.ecg_out.clone(), "--ecg-out");
            simulate(&cfg, &mesh, &ecg_out, cfg.run.dump_voltages.as_deref())
        }
        Cmd::Cohort { mesh_dir, out, seed, jobs, nodes } => {
            r.mesh_dir = mesh_dir.or(r.mesh_dir.take());
            r.out = out.or(r.out.take());
            r.jobs = jobs.or(r.jobs);
            if let Some(s) = seed {
                cfg.cohort.seed = s;
            }
            if let Some(n) = nodes {
                cfg.cohort.nodes = n;
            }
            let dir = required(cfg.run.mesh_dir.clone(), "--mesh-dir");
            let out = required(cfg.run.out.clone(), "--out");
            cohort(&cfg, &dir, &out)
        }
        Cmd::Analyze { cohort, out, mesh_id } => {
            r.cohort = cohort.or(r.cohort.take());
            r.out = out.or(r.out.take());
            r.mesh_id = mesh_id.or(r.mesh_id.take());
            let dir = required(cfg.run.cohort.clone(), "--cohort");
            let out = required(cfg.run.out.clone(), "--out");
            let report = analyze(&dir, &out, cfg.run.mesh_id.as_deref())?;
            println!("analysis of mesh {} written to {}", report.mesh_id, out.display());
            for f in [0, 3] {
                println!(
                    "  mean |z| {}: transmural {} subendocardial {}",
                    SCALAR_NAMES[f],
                    fmt_opt(report.group_mean_abs_z(f, "transmural")),
                    fmt_opt(report.group_mean_abs_z(f, "subendocardial"))
                );
            }
            Ok(())
        }
        Cmd::Validate { path } => {
            let path = required(path.or(r.cohort.take()), "PATH");
            validate(&cfg, &path)
        }
    }
}

/// Mesh id recorded at generation time, else the file stem.
fn recorded_id(a: &Annotated, path: &Path) -> String {
    a.meta.get("mesh_id").cloned().unwrap_or_else(|| mesh_id(path))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x:.3}"))
}

fn mesh_gen(cfg: &RunConfig, out: &Path) -> Result<()> {
    cfg.check()?;
    let mesh = generate_idealized_biventricle(&cfg.mesh.wall, cfg.mesh.edge, cfg.mesh.seed)?;
    let coords = compute_ventricular_coordinates(&mesh)?;
    let fibers = assign_fibers(&mesh, &coords, cfg.fibers.alpha_endo, cfg.fibers.alpha_epi)?;
    if !fibers.fallback.is_empty() {
        warn!("{} elements took neighbour-averaged fibers", fibers.fallback.len());
    }
    let electrodes = cfg.electrodes.clone().unwrap_or_else(|| place_electrodes(&mesh));
    let mut a = Annotated::new(mesh);
    a.fibers = Some(fibers);
    a.electrodes = Some(electrodes);
    a.meta.insert("mesh_id".into(), mesh_id(out));
    a.meta.insert("config".into(), cfg.to_json());
    a.write(out).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "{}: {} nodes, {} elements, mean edge {:.4} cm",
        out.display(),
        a.mesh.node_count(),
        a.mesh.tet_count(),
        a.mesh.mean_edge_length()
    );
    Ok(())
}

fn scar_gen(cfg: &RunConfig, mesh_path: &Path, name: &str, out: &Path) -> Result<()> {
    cfg.check()?;
    let mut a = Annotated::read(mesh_path).with_context(|| format!("reading {}", mesh_path.display()))?;
    let scenario = find_scenario(&scenario_catalog_with(&cfg.scar), name)?;
    let seed = scenario_seed(cfg, &recorded_id(&a, mesh_path));
    let tissue = match &scenario.with_seed(seed).scar {
        None => cardiotwin::infarct::TissueMap::healthy(a.mesh.node_count()),
        Some(p) => {
            let coords = compute_ventricular_coordinates(&a.mesh)?;
            let noise = correlated_noise_field(&a.mesh, p.sigma, p.seed)?;
            let (t, degenerate) = scenario_tissue(&a.mesh, &coords, &noise, p)?;
            a.meta.insert("degenerate".into(), degenerate.to_string());
            t
        }
    };
    println!(
        "{name}: {} scar, {} border-zone, {} normal nodes (scar seed {seed})",
        tissue.count(Tissue::Scar),
        tissue.count(Tissue::BorderZone),
        tissue.count(Tissue::Normal)
    );
    a.tissue = Some(tissue);
    a.activation = None;
    a.meta.insert("scenario".into(), name.to_owned());
    a.meta.insert("scar_seed".into(), seed.to_string());
    a.meta.insert("config".into(), cfg.to_json());
    a.write(out).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn activate(cfg: &RunConfig, mesh_path: &Path, out: &Path) -> Result<()> {
    cfg.check()?;
    let mut a = Annotated::read(mesh_path).with_context(|| format!("reading {}", mesh_path.display()))?;
    let coords = compute_ventricular_coordinates(&a.mesh)?;
    let fibers = match a.fibers.take() {
        Some(f) if f.triads.len() == a.mesh.tet_count() => f,
        _ => assign_fibers(&a.mesh, &coords, cfg.fibers.alpha_endo, cfg.fibers.alpha_epi)?,
    };
    let tissue = a.tissue_or_healthy();
    let tensors = build_velocity_tensor(&a.mesh, &fibers, &tissue, &cfg.conduction)?;
    let map = solve_eikonal_with_tol(&a.mesh, &tensors, &default_root_set(&coords)?, cfg.eikonal.tol_ms)?;
    let unreached = map.unreached();
    if !unreached.is_empty() {
        bail!("{} nodes were never activated (first: {})", unreached.len(), unreached[0]);
    }
    println!("activation complete by {:.2} ms", map.max_finite());
    a.fibers = Some(fibers);
    a.activation = Some(map.t_a);
    a.meta.insert("config".into(), cfg.to_json());
    a.write(out).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn simulate(cfg: &RunConfig, mesh_path: &Path, ecg_out: &Path, dump: Option<&Path>) -> Result<()> {
    let a = Annotated::read(mesh_path).with_context(|| format!("reading {}", mesh_path.display()))?;
    let tissue = a.tissue_or_healthy();
    let activation = a.activation.clone();
    let scenario = a.meta.get("scenario").cloned().unwrap_or_else(|| HEALTHY.to_owned());
    let seed = a.meta.get("scar_seed").and_then(|s| s.parse().ok()).unwrap_or(0);
    let heart = Heart::prepare(&recorded_id(&a, mesh_path), a, cfg)?;
    let activation = match activation {
        Some(t_a) => ActivationMap { t_a },
        None => heart.activate(&tissue, &heart.roots)?,
    };
    let mut raw = match dump {
        None => heart.leads(&tissue, &activation)?,
        Some(path) => {
            let apd = apd_field(&heart.coords, &tissue, &cfg.apd)?;
            let traces = simulate_with_table(&activation, &apd, &cfg.reaction, &heart.table)?;
            traces.write_ctvolt(path).with_context(|| format!("writing {}", path.display()))?;
            let mut leads = vec![Vec::with_capacity(traces.sample_count); 8];
            for k in 0..traces.sample_count {
                for (l, v) in leads.iter_mut().zip(leads_at(&heart.lead_field.potentials(&traces.at(k)))) {
                    l.push(v);
                }
            }
            EcgRecord { leads, sample_period: traces.period, scenario: String::new(), seed: 0, meta: Default::default() }
        }
    };
    raw.scenario = scenario;
    raw.seed = seed;
    let mut ecg = normalize_and_resample(&raw, cfg.cohort.samples)?;
    ecg.meta.insert("mesh_id".into(), heart.mesh_id.clone());
    ecg.meta.insert("config".into(), cfg.to_json());
    ecg.write(ecg_out).with_context(|| format!("writing {}", ecg_out.display()))?;
    println!("{}: {} samples per lead", ecg_out.display(), ecg.len());
    Ok(())
}

fn cohort(cfg: &RunConfig, mesh_dir: &Path, out: &Path) -> Result<()> {
    let meshes = list_meshes(mesh_dir).with_context(|| format!("listing {}", mesh_dir.display()))?;
    if meshes.is_empty() {
        bail!("no .ctmesh files in {}", mesh_dir.display());
    }
    info!("{} meshes", meshes.len());
    let summary = generate_cohort(&meshes, out, cfg, cfg.run.jobs)?;
    println!(
        "{}: {} samples, {} healthy replicates",
        out.display(),
        summary.samples.len(),
        summary.replicates.len()
    );
    Ok(())
}

fn validate(cfg: &RunConfig, path: &Path) -> Result<()> {
    if path.is_dir() {
        let n = Cohort::open(path)?.validate()?;
        println!("{}: {n} files verified", path.display());
        return Ok(());
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("ctsamp") => {
            let s = CohortSample::read(path)?;
            s.check_schema(cfg.cohort.nodes, cfg.cohort.samples)?;
        }
        Some("ctecg") => EcgRecord::read(path)?.check()?,
        Some("ctmesh") => {
            Annotated::read(path)?;
        }
        _ => bail!("don't know how to validate {}", path.display()),
    }
    println!("{}: ok", path.display());
    Ok(())
}
