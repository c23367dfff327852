//! `coseg` command line.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 runtime. Failures print a
//! single JSON line `{"kind": ..., "message": ...}` on stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coseg_core::config::{parse_config, RunConfig};
use coseg_core::coseg::{analyze_shape, label_accuracy, load_ground_truth, map_shapes, run_coseg};
use coseg_core::laplace::build_laplace;
use coseg_core::linalg::LanczosOptions;
use coseg_core::mesh::shapes::demo_dumbbells;
use coseg_core::mesh::{
    export_labeled_mesh, load_mesh_auto, read_labels_json, save_mesh, MeshFormat, Palette,
};
use coseg_core::preseg::{pre_segment, PresegConfig, DEFAULT_K_EMBED};
use coseg_core::spectral::{load_or_compute, DEFAULT_K_BASIS, DEFAULT_K_EIGS};
use coseg_core::{CosegError, ErrorKind, TriMesh};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "coseg",
    version,
    about = "Unsupervised co-segmentation of triangle mesh sets"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every random choice; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files; overrides the config value.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Directory for cached eigenbases; overrides the config value.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// More log output on stderr (-v info, -vv debug, -vvv trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Split one mesh into candidate parts.
    Presegment {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(long)]
        parts: usize,
        #[arg(long, default_value_t = DEFAULT_K_EMBED)]
        embed_dim: usize,
        #[arg(long, default_value_t = 2.0)]
        h_factor: f64,
    },
    /// Estimate the functional map from one mesh to another.
    Fmap {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        /// Basis size on each side.
        #[arg(long, default_value_t = DEFAULT_K_BASIS)]
        k: usize,
        /// Eigenpairs used for the descriptors.
        #[arg(long, default_value_t = DEFAULT_K_EIGS)]
        k_eigs: usize,
        #[arg(long)]
        ridge: Option<f64>,
        #[arg(long, default_value_t = 2.0)]
        h_factor: f64,
    },
    /// Co-segment the shapes listed in a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score a labeling against ground truth.
    Eval {
        /// Per-vertex labels as a JSON array.
        #[arg(long)]
        pred: PathBuf,
        /// Per-vertex or per-face ground truth.
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Print basic mesh statistics as JSON.
    Info {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Write the synthetic four-dumbbell set with ground truth and a run config.
    Synth,
}

fn fail(kind: &str, message: &str) {
    let line = json!({ "kind": kind, "message": message.replace('\n', " ") });
    eprintln!("{line}");
}

fn level(verbosity: u8) -> log::LevelFilter {
    match verbosity {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    }
}

fn init_logging(verbosity: u8) {
    // Built explicitly so no environment variable changes the output; the
    // effective level is the global maximum, which a config may raise.
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Trace)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
    log::set_max_level(level(verbosity));
}

fn output_dir(global: &Global, default: &str) -> PathBuf {
    global
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(default))
}

fn create_dir(dir: &Path) -> coseg_core::Result<()> {
    fs::create_dir_all(dir).map_err(|e| CosegError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> coseg_core::Result<()> {
    fs::write(path, text).map_err(|e| CosegError::io(path, e))
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json serializes");
    s.push('\n');
    s
}

fn presegment(
    global: &Global,
    mesh: &Path,
    parts: usize,
    embed_dim: usize,
    h_factor: f64,
) -> coseg_core::Result<()> {
    let mut cfg = RunConfig::new(vec![mesh.to_path_buf()], parts);
    cfg.k_embed = embed_dim;
    cfg.h_factor = h_factor;
    cfg.validate()?;
    let mesh = load_mesh_auto(mesh)?;
    let system = build_laplace(&mesh, h_factor, cfg.truncation())?;
    let seed = global.seed.unwrap_or(0);
    let opts = LanczosOptions {
        seed: seed ^ LanczosOptions::default().seed,
        ..LanczosOptions::default()
    };
    let k = (embed_dim + 1).min(mesh.n_vertices() - 1);
    let basis = load_or_compute(&system, k, &opts, global.cache_dir.as_deref())?;
    let seg = pre_segment(
        &mesh,
        &basis,
        &PresegConfig {
            k_embed: embed_dim,
            ..PresegConfig::new(parts, seed)
        },
    )?;
    let dir = output_dir(global, "coseg_out");
    create_dir(&dir)?;
    let name = mesh.name();
    seg.write_json(&dir.join(format!("{name}.parts.json")))?;
    export_labeled_mesh(
        &mesh,
        &seg.part_of,
        &Palette::distinct(seg.n_parts),
        &dir.join(format!("{name}.parts.ply")),
    )?;
    log::info!("{name}: part sizes {:?}", seg.part_sizes());
    Ok(())
}

fn fmap(
    global: &Global,
    source: &Path,
    target: &Path,
    k: usize,
    k_eigs: usize,
    ridge: Option<f64>,
    h_factor: f64,
) -> coseg_core::Result<()> {
    let mut cfg = RunConfig::new(vec![source.to_path_buf(), target.to_path_buf()], 1);
    cfg.k_basis = k;
    cfg.k_eigs = k_eigs;
    cfg.ridge = ridge;
    cfg.h_factor = h_factor;
    cfg.seed = global.seed.unwrap_or(0);
    cfg.cache_dir = global.cache_dir.clone();
    cfg.validate()?;
    let (a, b) = (load_mesh_auto(source)?, load_mesh_auto(target)?);
    let b = if a.name() == b.name() {
        let name = format!("{}_target", b.name());
        b.renamed(name)
    } else {
        b
    };
    let (sa, sb) = (analyze_shape(a, &cfg)?, analyze_shape(b, &cfg)?);
    let map = map_shapes(&sa, &sb, &cfg)?;
    let dir = output_dir(global, "coseg_out");
    create_dir(&dir)?;
    map.write_json(&dir.join(format!("{}_to_{}.map.json", map.source, map.target)))?;
    log::info!(
        "{} -> {}: rank {}, residual {:.3e}, sparsity {:.3}",
        map.source,
        map.target,
        map.rank(),
        map.residual(),
        map.sparsity_fraction(coseg_core::fmap::SPARSITY_THRESHOLD)
    );
    Ok(())
}

fn run(global: &Global, config: &Path) -> coseg_core::Result<()> {
    let mut cfg = parse_config(config)?;
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(dir) = &global.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(dir) = &global.cache_dir {
        cfg.cache_dir = Some(dir.clone());
    }
    log::set_max_level(level(cfg.verbosity.max(global.verbose)));
    let result = run_coseg(&cfg)?;
    let artifacts = result.write(&cfg)?;
    log::info!(
        "wrote {} files to {}",
        artifacts.len(),
        cfg.output_dir.display()
    );
    if let Some(mean) = result.diagnostics.mean_accuracy {
        log::info!("mean accuracy {mean:.4}");
    }
    Ok(())
}

fn eval(pred: &Path, truth: &Path, mesh: &Path) -> coseg_core::Result<()> {
    let mesh = load_mesh_auto(mesh)?;
    let predicted = read_labels_json(pred)?;
    let truth = load_ground_truth(truth, &mesh)?;
    let masses = mesh.lumped_masses()?.into_inner();
    let accuracy = label_accuracy(&predicted, &truth, &masses)?;
    println!("{}", json!({ "mesh": mesh.name(), "accuracy": accuracy }));
    Ok(())
}

fn info(mesh: &Path) -> coseg_core::Result<()> {
    let mesh = load_mesh_auto(mesh)?;
    let (components, _) = mesh.connected_components();
    let value = json!({
        "name": mesh.name(),
        "n_vertices": mesh.n_vertices(),
        "n_faces": mesh.n_faces(),
        "area": mesh.total_area(),
        "mean_edge_length": mesh.mean_edge_length(),
        "components": components,
        "hash": mesh.content_hash(),
    });
    println!("{value}");
    Ok(())
}

fn synth(global: &Global) -> coseg_core::Result<()> {
    let dir = output_dir(global, "demo");
    create_dir(&dir)?;
    let set: Vec<(TriMesh, Vec<usize>)> = demo_dumbbells()?;
    let mut shapes = Vec::new();
    let mut truth = Vec::new();
    for (mesh, labels) in &set {
        let off = format!("{}.off", mesh.name());
        save_mesh(mesh, &dir.join(&off), MeshFormat::Off)?;
        let seg = format!("{}.seg", mesh.name());
        let mut text = String::new();
        for l in labels {
            let _ = writeln!(text, "{l}");
        }
        write_text(&dir.join(&seg), &text)?;
        shapes.push(off);
        truth.push(seg);
    }
    let config = json!({
        "shapes": shapes,
        "n_parts": 2,
        "L": 2,
        "seed": global.seed.unwrap_or(0),
        "output_dir": "out",
        "ground_truth": truth,
    });
    write_text(&dir.join("demo.json"), &pretty(&config))?;
    log::info!(
        "wrote {} shapes and demo.json to {}",
        set.len(),
        dir.display()
    );
    Ok(())
}

fn dispatch(cli: &Cli) -> coseg_core::Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Presegment {
            mesh,
            parts,
            embed_dim,
            h_factor,
        } => presegment(g, mesh, *parts, *embed_dim, *h_factor),
        Command::Fmap {
            source,
            target,
            k,
            k_eigs,
            ridge,
            h_factor,
        } => fmap(g, source, target, *k, *k_eigs, *ridge, *h_factor),
        Command::Run { config } => run(g, config),
        Command::Eval { pred, truth, mesh } => eval(pred, truth, mesh),
        Command::Info { mesh } => info(mesh),
        Command::Synth => synth(g),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as Clap;
            if matches!(e.kind(), Clap::DisplayHelp | Clap::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let head = text.split("Usage:").next().unwrap_or_default();
            let head = head
                .split("For more information")
                .next()
                .unwrap_or_default();
            let message = head.split_whitespace().collect::<Vec<_>>().join(" ");
            fail("usage", message.trim_start_matches("error: "));
            return ExitCode::from(1);
        }
    };
    init_logging(cli.global.verbose);
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = match e.kind() {
                ErrorKind::Validation => ("validation", 2),
                ErrorKind::Runtime => ("runtime", 3),
            };
            fail(kind, &e.to_string());
            ExitCode::from(code)
        }
    }
}
