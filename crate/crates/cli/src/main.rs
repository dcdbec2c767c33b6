//! `graphon`: command-line front end.
//!
//! Exit codes: 0 on success, 2 when a computation fails (fully or for some
//! grid points), 1 on usage errors.

mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use graphon_entropy::bipodal::{self, continue_path, path_csv};
use graphon_entropy::optimizer::{self, ConstrainedProblem, OptimizerConfig};
use graphon_entropy::phase::{self, ScanConfig};
use graphon_entropy::star::{bad_value_csv, bad_value_scan, zeta, PsiProfile};
use graphon_entropy::subgraph::star_weights_for;
use graphon_entropy::{fmt17, DensityModel, Error, SubgraphSpec};

#[derive(Parser)]
#[command(
    name = "graphon",
    version,
    about = "Entropy-maximizing graphons just above the Erdős–Rényi curve",
    args_override_self = true,
    after_help = "Any subcommand also accepts --config FILE with key=value lines naming its long flags."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArg {
    /// `kstar:K` or `H:<edge file>`.
    #[arg(long, default_value = "kstar:2")]
    model: String,
}

#[derive(Args)]
struct Output {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// ζ(e) and the critical value β(e) on one density or a grid.
    Zeta {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        e: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        e_min: f64,
        #[arg(long, default_value_t = 0.99)]
        e_max: f64,
        #[arg(long, default_value_t = 99)]
        count: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Tabulates ψ(e, ẽ) over ẽ ∈ (0, 1).
    Psi {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        e: f64,
        #[arg(long, default_value_t = 199)]
        samples: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Flags densities where the small-cluster limit is not unique or degenerate.
    Badscan {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 0.01)]
        e_min: f64,
        #[arg(long, default_value_t = 0.99)]
        e_max: f64,
        #[arg(long, default_value_t = 99)]
        count: usize,
        /// Additional densities, comma separated.
        #[arg(long, value_delimiter = ',')]
        extra: Vec<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Solves the bipodal system at one (e, τ).
    Solve {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        e: f64,
        #[arg(long)]
        tau: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Continuation path from the Erdős–Rényi curve up to τ_max.
    Path {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        e: f64,
        /// Defaults to a small window above the curve.
        #[arg(long)]
        tau_max: Option<f64>,
        #[arg(long, default_value_t = 20)]
        steps: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Direct entropy maximization over M-podal graphons.
    Optimize {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long)]
        e: f64,
        #[arg(long)]
        tau: f64,
        #[arg(long = "M", short = 'M', default_value_t = 8)]
        m: usize,
        #[arg(long, default_value_t = 16)]
        restarts: usize,
        #[arg(long, default_value_t = OptimizerConfig::default().seed)]
        seed: u64,
        /// Do not start from the bipodal solution.
        #[arg(long)]
        no_bipodal_seed: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Degree data and reduced star weights of a graph H.
    Reduce {
        /// Edge list, one `u v` pair per line.
        #[arg(long = "H")]
        h: PathBuf,
        #[arg(long)]
        e: f64,
        /// Also fit the remainder exponent of the star reduction.
        #[arg(long)]
        check: bool,
        #[command(flatten)]
        out: Output,
    },
    /// Grid scan over (e, Δτ); writes scan.csv and summary.txt.
    Scan {
        #[command(flatten)]
        model: ModelArg,
        #[arg(long, default_value_t = 0.1)]
        e_min: f64,
        #[arg(long, default_value_t = 0.9)]
        e_max: f64,
        #[arg(long, default_value_t = 9)]
        e_count: usize,
        /// Additional densities, comma separated.
        #[arg(long, value_delimiter = ',')]
        e_extra: Vec<f64>,
        #[arg(long, default_value_t = 1e-6)]
        dtau_min: f64,
        #[arg(long, default_value_t = 1e-3)]
        dtau_max: f64,
        #[arg(long, default_value_t = 4)]
        dtau_count: usize,
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Re-solve converged points with the optimizer at this podality.
        #[arg(long)]
        cross_check: Option<usize>,
        #[arg(long, default_value_t = 4)]
        restarts: usize,
        #[arg(long, default_value_t = OptimizerConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value = "scan-out")]
        out: PathBuf,
    },
    /// Solves two models at the same e and compares the parameters.
    Compare {
        #[arg(long)]
        model_a: String,
        #[arg(long)]
        model_b: String,
        #[arg(long)]
        e: f64,
        #[arg(long)]
        dtau_a: f64,
        /// Defaults to dtau-a times the conversion factor.
        #[arg(long)]
        dtau_b: Option<f64>,
        #[arg(long, default_value = "compare-out")]
        out: PathBuf,
    },
    /// Gnuplot script, ζ curve and graymaps from a scan CSV.
    Plots {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "plots-out")]
        out: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_rasters: usize,
    },
}

/// What went wrong, mapped to an exit code.
enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        match err {
            Error::Domain { .. }
            | Error::InvalidWeights(_)
            | Error::InvalidSubgraph(_)
            | Error::InvalidGraphon(_)
            | Error::Format(_)
            | Error::Io(_) => Failure::Usage(err.to_string()),
            _ => Failure::Compute(err.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn model(spec: &str) -> Result<DensityModel, Failure> {
    DensityModel::parse(spec).map_err(Failure::from)
}

fn emit(out: &Output, text: &str) -> Outcome {
    match &out.output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display()))),
        None => {
            let _ = std::io::stdout().write_all(text.as_bytes());
            Ok(())
        }
    }
}

fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

fn run_zeta(m: &DensityModel, e: Option<f64>, lo: f64, hi: f64, count: usize, out: &Output) -> Outcome {
    let densities = e.map_or_else(|| grid(lo, hi, count), |e| vec![e]);
    let mut text = String::from("e,zeta,beta,unique\n");
    for e in densities {
        let best = zeta(&PsiProfile::new(m.reduced_weights(e)?, e)?)?;
        text.push_str(&format!(
            "{},{},{},{}\n",
            fmt17(e),
            fmt17(best.e_tilde),
            fmt17(best.beta),
            best.unique as u8
        ));
    }
    emit(out, &text)
}

fn run_psi(m: &DensityModel, e: f64, samples: usize, out: &Output) -> Outcome {
    let profile = PsiProfile::new(m.reduced_weights(e)?, e)?;
    let mut text = String::from("e_tilde,psi\n");
    for i in 1..=samples {
        let et = i as f64 / (samples + 1) as f64;
        let v = profile.psi(et).unwrap_or(f64::NAN);
        text.push_str(&format!("{},{}\n", fmt17(et), fmt17(v)));
    }
    emit(out, &text)
}

fn run_badscan(m: &DensityModel, lo: f64, hi: f64, count: usize, extra: &[f64], out: &Output) -> Outcome {
    let mut densities = grid(lo, hi, count);
    densities.extend(extra);
    densities.sort_by(f64::total_cmp);
    densities.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let rows = bad_value_scan(|e| m.reduced_weights(e), &densities)?;
    emit(out, &bad_value_csv(&rows))
}

fn solution_text(s: &bipodal::BipodalSolution) -> String {
    let mut text = String::new();
    for (k, v) in [
        ("e", s.e),
        ("tau", s.tau),
        ("c", s.c),
        ("p11", s.p11),
        ("p12", s.p12),
        ("p22", s.p22),
        ("alpha", s.alpha),
        ("beta", s.beta),
        ("gamma", s.gamma),
        ("s", s.s),
        ("residual", s.residual),
        ("f1_identity", s.f1_identity()),
    ] {
        text.push_str(&format!("{k} = {}\n", fmt17(v)));
    }
    text.push_str(&format!("newton_iters = {}\n", s.newton_iters));
    text
}

fn run_path(m: &DensityModel, e: f64, tau_max: Option<f64>, steps: usize, out: &Output) -> Outcome {
    let tau_max = match tau_max {
        Some(t) => t,
        None => bipodal::default_tau_max(m, e)?,
    };
    match continue_path(m, e, tau_max, steps) {
        Ok(path) => emit(out, &path_csv(&path)),
        Err(err) => {
            emit(out, &path_csv(&err.partial))?;
            Err(Failure::Compute(err.to_string()))
        }
    }
}

fn run_reduce(path: &Path, e: f64, check: bool, out: &Output) -> Outcome {
    let h = SubgraphSpec::read_edge_file(path)?;
    let mut text = format!(
        "vertices = {}\nedges = {}\nk_max = {}\nkstarlike = {}\n",
        h.vertex_count(),
        h.edge_count(),
        h.max_degree(),
        h.is_kstarlike()
    );
    text.push_str("# degree,count\n");
    for (k, n) in h.degree_counts() {
        text.push_str(&format!("{k},{n}\n"));
    }
    text.push_str("# k,a_k\n");
    let weights = star_weights_for(&h, e)?;
    for (k, a) in weights.terms() {
        text.push_str(&format!("{k},{}\n", fmt17(a)));
    }
    if check {
        let report = graphon_entropy::subgraph::delta_tau_check(
            &h,
            e,
            &graphon_entropy::subgraph::default_perturbation_sizes(),
        )?;
        match (report.exact, report.slope) {
            (true, _) => text.push_str("remainder = exact\n"),
            (false, Some(s)) => text.push_str(&format!("remainder_exponent = {}\n", fmt17(s))),
            (false, None) => text.push_str("remainder_exponent = none\n"),
        }
    }
    emit(out, &text)
}

fn dispatch(cmd: Command) -> Outcome {
    match cmd {
        Command::Zeta {
            model: m,
            e,
            e_min,
            e_max,
            count,
            out,
        } => run_zeta(&model(&m.model)?, e, e_min, e_max, count, &out),
        Command::Psi { model: m, e, samples, out } => run_psi(&model(&m.model)?, e, samples, &out),
        Command::Badscan {
            model: m,
            e_min,
            e_max,
            count,
            extra,
            out,
        } => run_badscan(&model(&m.model)?, e_min, e_max, count, &extra, &out),
        Command::Solve { model: m, e, tau, out } => {
            let sol = bipodal::solve_continued(&model(&m.model)?, e, tau)?;
            emit(&out, &solution_text(&sol))
        }
        Command::Path {
            model: m,
            e,
            tau_max,
            steps,
            out,
        } => run_path(&model(&m.model)?, e, tau_max, steps, &out),
        Command::Optimize {
            model: m,
            e,
            tau,
            m: podality,
            restarts,
            seed,
            no_bipodal_seed,
            out,
        } => {
            let problem = ConstrainedProblem::new(model(&m.model)?, e, tau, podality)?;
            let cfg = OptimizerConfig {
                restarts,
                seed,
                bipodal_seed: !no_bipodal_seed,
                ..OptimizerConfig::default()
            };
            let report = optimizer::maximize(&problem, &cfg)?;
            emit(&out, &optimizer::write_report(&report))
        }
        Command::Reduce { h, e, check, out } => run_reduce(&h, e, check, &out),
        Command::Scan {
            model: m,
            e_min,
            e_max,
            e_count,
            e_extra,
            dtau_min,
            dtau_max,
            dtau_count,
            threads,
            cross_check,
            restarts,
            seed,
            out,
        } => {
            let mut cfg = ScanConfig::new(model(&m.model)?);
            cfg.e_min = e_min;
            cfg.e_max = e_max;
            cfg.e_count = e_count;
            cfg.e_extra = e_extra;
            cfg.dtau_min = dtau_min;
            cfg.dtau_max = dtau_max;
            cfg.dtau_count = dtau_count;
            cfg.threads = threads;
            cfg.cross_check = cross_check;
            cfg.optimizer.restarts = restarts;
            cfg.optimizer.seed = seed;
            let outcome = phase::scan(&cfg)?;
            phase::write_scan(&outcome, &out)?;
            print!("{}", outcome.summary());
            if outcome.fully_successful() {
                Ok(())
            } else {
                Err(Failure::Compute("some grid points failed".into()))
            }
        }
        Command::Compare {
            model_a,
            model_b,
            e,
            dtau_a,
            dtau_b,
            out,
        } => {
            let (a, b) = (model(&model_a)?, model(&model_b)?);
            let dtau_b = match dtau_b {
                Some(d) => d,
                None => {
                    let sum = |m: &DensityModel| -> Result<f64, Error> {
                        Ok(m.reduced_weights(e)?.terms().iter().map(|t| t.1).sum())
                    };
                    dtau_a * sum(&b)? / sum(&a)?
                }
            };
            let report = phase::compare(&a, &b, e, dtau_a, dtau_b)?;
            phase::write_compare(&report, &out)?;
            print!("{}", report.render());
            Ok(())
        }
        Command::Plots { csv, out, max_rasters } => {
            let written = phase::emit_plots(&csv, &out, max_rasters)?;
            println!("{}", written.script.display());
            println!("{}", written.zeta_curve.display());
            for r in written.rasters {
                println!("{}", r.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    match config::take_config_path(&mut args) {
        Ok(Some(path)) => {
            let entries = std::fs::read_to_string(&path)
                .map_err(|e| format!("{}: {e}", Path::new(&path).display()))
                .and_then(|text| config::parse(&text));
            match entries {
                Ok(entries) => config::splice(&mut args, &entries),
                Err(msg) => {
                    eprintln!("error: {msg}");
                    return ExitCode::from(1);
                }
            }
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    }
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
