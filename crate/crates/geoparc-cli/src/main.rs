//! `geoparc` — phase diagram of the parking process on supercritical
//! geometric Bienaymé-Galton-Watson trees.
//!
//! Exit codes: 0 success, 1 acceptance/verification failure, 2 usage or
//! validation error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use geoparc::kernel::{self, Kernel};
use geoparc::law::law_from_json_str;
use geoparc::series;
use geoparc::sim;
use geoparc::{acceptance, ArrivalLaw, OffspringParam};

#[derive(Parser)]
#[command(name = "geoparc", version, about = "Parking on supercritical geometric BGW trees: \
    phase classification, critical curves, exact series coefficients, enumeration checks, \
    and Monte Carlo simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Rational,
    Float,
}

#[derive(Subcommand)]
enum Command {
    /// Decide the phase of one (law, q) pair; JSON report on stdout.
    Classify {
        /// Law description file (JSON).
        #[arg(long)]
        law: PathBuf,
        /// Offspring parameter of the tree, strictly between 1/2 and 1.
        #[arg(long)]
        q: f64,
        /// Also write the JSON report to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical curve q_c(alpha) of a family over an alpha grid; CSV output.
    ThresholdCurve {
        /// Family name: binary, geometric or poisson.
        #[arg(long)]
        family: String,
        /// Grid as START:END:STEP, inclusive.
        #[arg(long, value_name = "A:B:STEP")]
        alpha_grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the fully-parked-tree series and dump `n,k,coeff` rows.
    Coeffs {
        #[arg(long)]
        law: PathBuf,
        #[arg(long)]
        nmax: usize,
        /// Defaults to n_max(B-1) for bounded arrivals, 4 n_max otherwise.
        #[arg(long)]
        kmax: Option<usize>,
        #[arg(long, value_enum, default_value = "float")]
        mode: Mode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the series solver against brute-force enumeration.
    Oracle {
        #[arg(long)]
        law: PathBuf,
        #[arg(long, default_value_t = 5)]
        nmax: usize,
        #[arg(long, default_value_t = 2)]
        kmax: usize,
        /// Defaults to rational when the law permits, float otherwise.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Monte Carlo parking experiments; CSV statistics.
    Simulate {
        /// Experiment JSON `{law, q, samples, cap_height, K, seed}`;
        /// overrides the individual flags.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        law: Option<PathBuf>,
        #[arg(long)]
        q: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 30)]
        cap_height: u32,
        /// Flux histogram support P(X = k), k <= kmax.
        #[arg(long, default_value_t = 8)]
        kmax: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full acceptance suite; exits 1 on any failing criterion.
    Verify {
        /// Reduced Monte Carlo sample counts.
        #[arg(long)]
        quick: bool,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("GEOPARC_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read_law(path: &Path) -> anyhow::Result<ArrivalLaw> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read law file {}: {e}", path.display()))?;
    Ok(law_from_json_str(&text)?)
}

fn write_manifest(
    command: &str,
    config: serde_json::Value,
    outputs: &[&Path],
    seed: Option<u64>,
    started: Instant,
) -> anyhow::Result<()> {
    let Some(primary) = outputs.first() else { return Ok(()) };
    let manifest = json!({
        "schema": 1,
        "command": command,
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": seed,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "duration_ms": started.elapsed().as_millis() as u64,
    });
    let path = manifest_path(primary);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn run(command: Command) -> anyhow::Result<ExitCode> {
    let started = Instant::now();
    match command {
        Command::Classify { law, q, out } => {
            let arrival = read_law(&law)?;
            let qp = OffspringParam::new(q).map_err(|e| anyhow::anyhow!("q out of range: {e}"))?;
            let report = kernel::classify(&arrival, qp)?;
            let doc = json!({
                "schema": 1,
                "family": arrival.family().name(),
                "q": q,
                "t_c": report.threshold.t_c,
                "kind": report.threshold.kind,
                "criterion": report.criterion_value,
                "q_threshold": report.q_threshold_value,
                "phase": report.phase,
                "boundary": report.boundary,
                "q_c": report.q_c,
            });
            let text = serde_json::to_string_pretty(&doc)?;
            println!("{text}");
            if let Some(out) = out {
                std::fs::write(&out, &text)?;
                let config = json!({"law": law.display().to_string(), "q": q});
                write_manifest("classify", config, &[&out], None, started)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ThresholdCurve { family, alpha_grid, out } => {
            let (a, b, step) = parse_grid(&alpha_grid)?;
            let make: fn(f64) -> geoparc::Result<ArrivalLaw> = match family.as_str() {
                "binary" => ArrivalLaw::binary,
                "geometric" => ArrivalLaw::geometric,
                "poisson" => ArrivalLaw::poisson,
                other => anyhow::bail!("unknown family {other:?} (binary, geometric, poisson)"),
            };
            let mut alphas = Vec::new();
            let mut alpha = a;
            while alpha <= b + 1e-12 {
                alphas.push(alpha);
                alpha += step;
            }
            // Rows are independent; compute them in parallel, emit in order.
            use rayon::prelude::*;
            let rows: Vec<anyhow::Result<String>> = alphas
                .par_iter()
                .map(|&alpha| {
                    let law = make(alpha)?;
                    let kern = Kernel::new(&law)?;
                    let report = kern.classify(OffspringParam::new(0.75).unwrap())?;
                    let q_c = report.q_c.map(|v| format!("{v:.12}")).unwrap_or_default();
                    Ok(format!(
                        "{alpha:.6},{:.12},{:.12},{q_c}\n",
                        report.threshold.t_c, report.criterion_value
                    ))
                })
                .collect();
            let mut csv = String::from("alpha,t_c,criterion,q_c\n");
            for row in rows {
                csv.push_str(&row?);
            }
            std::fs::write(&out, csv)?;
            let config = json!({"family": family, "alpha_grid": alpha_grid});
            write_manifest("threshold-curve", config, &[&out], None, started)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Coeffs { law, nmax, kmax, mode, out } => {
            let arrival = read_law(&law)?;
            let kmax = kmax.unwrap_or_else(|| series::default_k_max(&arrival, nmax));
            let csv = match mode {
                Mode::Rational => series::tutte_solve_rational(&arrival, nmax, kmax)?.to_csv(),
                Mode::Float => series::tutte_solve_f64(&arrival, nmax, kmax)?.to_csv(),
            };
            std::fs::write(&out, csv)?;
            let config = json!({
                "law": law.display().to_string(), "nmax": nmax, "kmax": kmax,
                "mode": if mode == Mode::Rational { "rational" } else { "float" },
            });
            write_manifest("coeffs", config, &[&out], None, started)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { law, nmax, kmax, mode, out } => {
            let arrival = read_law(&law)?;
            let mode = mode.unwrap_or(if arrival.is_rational() { Mode::Rational } else { Mode::Float });
            let report = match mode {
                Mode::Rational => {
                    let table = series::tutte_solve_rational(&arrival, nmax, kmax)?;
                    let mu = arrival
                        .rational_prefix(nmax + kmax + 4)
                        .ok_or_else(|| anyhow::anyhow!("law has no exact coefficients"))?;
                    geoparc::oracle::oracle_compare(&mu, &table, nmax, kmax, "rational", 0.0)?
                }
                Mode::Float => {
                    let table = series::tutte_solve_f64(&arrival, nmax, kmax)?;
                    let mu = arrival.coeff_prefix(nmax + kmax + 4);
                    geoparc::oracle::oracle_compare(&mu, &table, nmax, kmax, "float", 1e-12)?
                }
            };
            std::fs::write(&out, report.to_csv())?;
            let config = json!({"law": law.display().to_string(), "nmax": nmax, "kmax": kmax, "mode": report.mode});
            write_manifest("oracle", config, &[&out], None, started)?;
            if report.all_within_tolerance() {
                println!("oracle and series agree on {} entries (mode {})", report.rows.len(), report.mode);
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("oracle mismatch: max delta {:.3e}", report.max_delta);
                Ok(ExitCode::from(1))
            }
        }
        Command::Simulate { config, law, q, samples, cap_height, kmax, seed, out } => {
            let (arrival, qp, mut experiment) = if let Some(path) = config {
                let text = std::fs::read_to_string(&path)?;
                sim::experiment_from_json(&text)?
            } else {
                let law = law.ok_or_else(|| anyhow::anyhow!("--law (or --config) is required"))?;
                let q = q.ok_or_else(|| anyhow::anyhow!("--q (or --config) is required"))?;
                let arrival = read_law(&law)?;
                let qp = OffspringParam::new(q).map_err(|e| anyhow::anyhow!("q out of range: {e}"))?;
                (arrival, qp, sim::ExperimentConfig::new(samples, cap_height, kmax, seed))
            };
            if experiment.flux_heights.is_empty() {
                let h = experiment.cap_height;
                experiment.flux_heights = vec![h.div_ceil(3), (2 * h).div_ceil(3), h];
            }
            let stats = sim::run_experiment(&arrival, qp, &experiment);
            std::fs::write(&out, stats.to_csv())?;
            let config = json!({
                "family": arrival.family().name(), "q": qp.q(),
                "samples": experiment.samples, "cap_height": experiment.cap_height,
                "K": experiment.k_max, "seed": experiment.seed,
                "flux_heights": experiment.flux_heights,
            });
            write_manifest("simulate", config, &[&out], Some(experiment.seed), started)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { quick } => {
            let results = acceptance::run_all(quick);
            print!("{}", acceptance::format_table(&results));
            if results.iter().all(|r| r.passed) {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn parse_grid(text: &str) -> anyhow::Result<(f64, f64, f64)> {
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, step] = parts.as_slice() else {
        anyhow::bail!("alpha grid must be START:END:STEP, got {text:?}");
    };
    let a: f64 = a.parse()?;
    let b: f64 = b.parse()?;
    let step: f64 = step.parse()?;
    if !(step > 0.0 && b >= a) {
        anyhow::bail!("empty alpha grid {text:?}");
    }
    Ok((a, b, step))
}
