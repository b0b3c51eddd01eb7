//! Batch front end: build codes from spec files, run the verification
//! battery, evaluate bounds, and render the comparison tables.
//!
//! Exit codes: 0 on PASS, 1 on a verification failure, 2 on spec/build
//! errors.

use clap::{Parser, Subcommand};
use repairlab::bounds;
use repairlab::report::{self, CodeSpec};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "repairlab", about = "exact-repair MDS array code laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code from a spec file; write the parity-check dump and a
    /// build manifest next to it (or under --out).
    Build {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and run the full verification battery.
    Verify {
        spec: PathBuf,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the machine-readable report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Evaluate the bandwidth / sub-packetization bounds for one parameter set.
    Bounds {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        ell: usize,
        /// Bandwidth factor for the minimum-width bound.
        #[arg(long)]
        b: Option<usize>,
        /// Bandwidth overhead for the maximum-length bound.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Render a comparison table (1: sub-packetization trade-offs, 2:
    /// composition examples).
    Table { which: u8 },
}

fn read_spec(path: &Path) -> Result<CodeSpec, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("spec parse error: {e}"))
}

fn init_threads() {
    if let Ok(v) = std::env::var("REPAIRLAB_THREADS") {
        if let Ok(threads) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
        }
    }
}

fn run() -> Result<bool, String> {
    let cli = Cli::parse();
    init_threads();
    match cli.command {
        Command::Build { spec: spec_path, out } => {
            let spec = read_spec(&spec_path)?;
            let code = report::build(&spec)?;
            let stem = spec_path.file_stem().unwrap_or_default().to_string_lossy().to_string();
            let dir = out.unwrap_or_else(|| {
                spec_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
            });
            std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
            let pcm_path = dir.join(format!("{stem}.pcm"));
            std::fs::write(&pcm_path, code.pcm().matrix.dump()).map_err(|e| e.to_string())?;
            let manifest = report::manifest(&spec, &code);
            let manifest_path = dir.join(format!("{stem}.manifest.json"));
            let body = serde_json::to_string_pretty(&manifest).unwrap() + "\n";
            std::fs::write(&manifest_path, body).map_err(|e| e.to_string())?;
            println!(
                "built {} -> {} ({} x {})",
                manifest.label,
                pcm_path.display(),
                manifest.pcm_rows,
                manifest.pcm_cols
            );
            Ok(true)
        }
        Command::Verify { spec: spec_path, trials, seed, json } => {
            let mut spec = read_spec(&spec_path)?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            if let Some(s) = seed {
                spec.seed = s;
            }
            let start = Instant::now();
            let report = report::verify(&spec)?;
            print!("{}", report::report_text(&report, start.elapsed()));
            if let Some(path) = json {
                std::fs::write(&path, report::report_json(&report)).map_err(|e| e.to_string())?;
            }
            Ok(report.overall_pass)
        }
        Command::Bounds { n, k, t, ell, b, eps } => {
            let cut = bounds::cut_set(n, k, t, ell).map_err(|e| e.to_string())?;
            println!("cut-set total      : {cut}");
            println!("min ell (transfer) : {}", bounds::min_ell_repair_by_transfer(n, k));
            match bounds::optimal_repair_feasible(n, k, ell) {
                Ok(f) => println!("optimal-repair feasible: {f}"),
                Err(e) => println!("optimal-repair feasible: n/a ({e})"),
            }
            if let Some(b) = b {
                println!("min ell at factor b: {}", bounds::min_ell_at_bandwidth_factor(n, k, b));
            }
            if let Some(eps) = eps {
                println!(
                    "max blocks at eps  : {:.6e}",
                    bounds::max_nodes_at_overhead(n - k, ell, eps)
                );
            }
            Ok(true)
        }
        Command::Table { which } => match which {
            1 => {
                print!("{}", report::table1());
                Ok(true)
            }
            2 => {
                print!("{}", report::table2());
                Ok(true)
            }
            other => Err(format!("unknown table {other} (expected 1 or 2)")),
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
