//! Batch front end over JSON files for the realization toolkit: measure
//! evaluation and spectral recovery on the disc, Cayley conversion,
//! decomposition certificates, colligation synthesis from samples, transfer
//! evaluation, membership verification and the relations contract.
//!
//! Exit codes: 0 on success/pass, 2 on a certified negative result
//! (infeasibility, failed verdict, violated relations), 1 on usage, parse or
//! numerical errors. All artifacts are JSON written atomically; `--emit-plot`
//! produces CSV for external plotting.

mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use herglotz_core::colligation::{check_relations, CanonicalForm, Colligation, DEFAULT_RELATIONS_TOL};
use herglotz_core::matrix::ComplexMatrix;
use herglotz_core::synthesis::{
    cayley_to_herglotz, cayley_to_schur, extend, find_decomposition, herglotz_targets,
    schur_targets, synthesize_herglotz, SampleSet, SolverOptions, Synthesized,
};
use herglotz_core::testfn::Point;
use herglotz_core::verify::{check_herglotz_agler, generate_admissible, AdmissibleKernel};
use herglotz_core::{herglotz_from_measure, measure_realization, recover_measure, DiscreteMeasure};

use io::{format_complex, parse_complex, read_json, usage, write_atomic, write_json, UsageError};

#[derive(Parser)]
#[command(
    name = "herglotz",
    about = "Herglotz-Agler functions over test-function collections: evaluate, synthesize, convert, verify",
    version
)]
struct Cli {
    /// Override the global tolerance (beats the HERGLOTZ_TOL environment
    /// variable; per-operation defaults apply when neither is set).
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum CayleyDirection {
    ToSchur,
    ToHerglotz,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Herglotz,
    Schur,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the function represented by a discrete measure at a point or
    /// over a disc grid.
    EvalMeasure {
        #[arg(long)]
        measure: PathBuf,
        /// Complex evaluation point, e.g. "0.5" or "0.3-0.2i".
        #[arg(long, conflicts_with = "grid")]
        z: Option<String>,
        /// Evaluate on an N x N polar grid of the open disc instead.
        #[arg(long)]
        grid: Option<usize>,
        /// Write grid samples as CSV rows re(z),im(z),re(f),im(f).
        #[arg(long)]
        emit_plot: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Turn a discrete measure into its canonical realization (U, V, imag0).
    RealizeMeasure {
        #[arg(long)]
        measure: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Recover the measure from a scalar disc realization (canonical JSON or
    /// a synthesize artifact).
    RecoverMeasure {
        #[arg(long)]
        canonical: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write atoms as CSV rows re(atom),im(atom),weight.
        #[arg(long)]
        emit_plot: Option<PathBuf>,
    },
    /// Apply the Cayley involution to a list of matrix values.
    Cayley {
        #[arg(long)]
        values: PathBuf,
        #[arg(long, value_enum)]
        direction: CayleyDirection,
        #[arg(long)]
        output: PathBuf,
    },
    /// Find a per-test-function PSD certificate for sample data.
    Decompose {
        #[arg(long)]
        samples: PathBuf,
        /// Which identity to certify: f_i + f_j* (herglotz) or I - T_i T_j* (schur).
        #[arg(long, value_enum, default_value = "herglotz")]
        side: Side,
        #[arg(long)]
        opts: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Synthesize a relations-passing colligation interpolating the samples.
    Synthesize {
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        opts: Option<PathBuf>,
        /// Reserve the trailing N sample points for validation only.
        #[arg(long)]
        holdout: Option<usize>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Evaluate a synthesized realization at points.
    Eval {
        /// Artifact produced by `synthesize`.
        #[arg(long)]
        realization: PathBuf,
        /// One point as JSON, e.g. "[[0.5,0.0]]".
        #[arg(long, conflicts_with_all = ["points", "grid"])]
        point: Option<String>,
        /// JSON file with a list of points.
        #[arg(long, conflicts_with = "grid")]
        points: Option<PathBuf>,
        /// Disc realizations only: evaluate on an N x N polar grid.
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        emit_plot: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check class membership of sample data against admissible kernels.
    Verify {
        #[arg(long)]
        samples: PathBuf,
        /// JSON file with explicit kernels; otherwise a batch is generated.
        #[arg(long)]
        kernels: Option<PathBuf>,
        /// Number of generated kernels (identity and Szego first).
        #[arg(long, default_value_t = 32)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Synthesize on the sample set and evaluate the extension at new points.
    Extend {
        #[arg(long)]
        samples: PathBuf,
        /// JSON file with a list of points.
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        opts: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Residuals of the colligation relations contract.
    Relations {
        #[arg(long)]
        colligation: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Core(herglotz_core::Error),
}

impl From<UsageError> for Failure {
    fn from(e: UsageError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<herglotz_core::Error> for Failure {
    fn from(e: herglotz_core::Error) -> Self {
        Failure::Core(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            eprint!("{e}");
            return ExitCode::from(1);
        }
        Err(e) => {
            // --help / --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            if e.is_certified_negative() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

/// Resolve the global tolerance: flag, then HERGLOTZ_TOL, then the default.
fn global_tol(flag: Option<f64>, default: f64) -> Result<f64, Failure> {
    if let Some(t) = flag {
        if !(t > 0.0) {
            return Err(usage("--tol must be positive").into());
        }
        return Ok(t);
    }
    match std::env::var("HERGLOTZ_TOL") {
        Ok(text) => text
            .parse::<f64>()
            .ok()
            .filter(|t| *t > 0.0)
            .ok_or_else(|| usage(format!("HERGLOTZ_TOL='{text}' is not a positive number")).into()),
        Err(_) => Ok(default),
    }
}

fn read_opts(path: &Option<PathBuf>) -> Result<SolverOptions, Failure> {
    match path {
        Some(p) => Ok(read_json::<SolverOptions>(p)?),
        None => Ok(SolverOptions::default()),
    }
}

fn read_samples(path: &PathBuf) -> Result<SampleSet, Failure> {
    let samples: SampleSet = read_json(path)?;
    samples.validate()?;
    Ok(samples)
}

/// Deterministic polar grid over the open disc: n radii times n angles.
fn disc_grid(n: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n * n);
    for k in 0..n {
        let r = 0.95 * (k as f64 + 1.0) / (n as f64 + 1.0);
        for j in 0..n {
            let th = std::f64::consts::TAU * j as f64 / n as f64;
            out.push(Complex64::new(r * th.cos(), r * th.sin()));
        }
    }
    out
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::EvalMeasure { measure, z, grid, emit_plot, output } => {
            let mu: DiscreteMeasure = read_json(&measure)?;
            mu.validate()?;
            if let Some(n) = grid {
                let rows: Vec<(Complex64, Complex64)> = disc_grid(n)
                    .into_iter()
                    .map(|z| herglotz_from_measure(&mu, z).map(|f| (z, f)))
                    .collect::<Result<_, _>>()?;
                if let Some(plot) = &emit_plot {
                    let mut csv = String::from("re_z,im_z,re_f,im_f\n");
                    for (z, f) in &rows {
                        csv.push_str(&format!("{},{},{},{}\n", z.re, z.im, f.re, f.im));
                    }
                    write_atomic(plot, csv.as_bytes())?;
                }
                if let Some(out) = &output {
                    let data: Vec<[[f64; 2]; 2]> = rows
                        .iter()
                        .map(|(z, f)| [[z.re, z.im], [f.re, f.im]])
                        .collect();
                    write_json(out, &data)?;
                }
                println!("evaluated {} grid points", rows.len());
            } else {
                let z = parse_complex(&z.ok_or_else(|| usage("need --z or --grid"))?)?;
                let f = herglotz_from_measure(&mu, z)?;
                println!("{}", format_complex(f));
                if let Some(out) = &output {
                    write_json(out, &serde_json::json!({ "z": [z.re, z.im], "value": [f.re, f.im] }))?;
                }
            }
            Ok(0)
        }

        Command::RealizeMeasure { measure, output } => {
            let mu: DiscreteMeasure = read_json(&measure)?;
            mu.validate()?;
            let canon = measure_realization(&mu)?;
            write_json(&output, &canon)?;
            eprintln!("realized measure with {} atoms", mu.atoms.len());
            Ok(0)
        }

        Command::RecoverMeasure { canonical, output, emit_plot } => {
            // accept either a bare canonical form or a synthesize artifact
            let canon: CanonicalForm = match read_json::<Synthesized>(&canonical) {
                Ok(syn) => syn.canonical,
                Err(_) => read_json(&canonical)?,
            };
            let mu = recover_measure(&canon)?;
            if let Some(plot) = &emit_plot {
                let mut csv = String::from("re_atom,im_atom,weight\n");
                for (a, w) in mu.atoms.iter().zip(&mu.weights) {
                    csv.push_str(&format!("{},{},{}\n", a.re, a.im, w));
                }
                write_atomic(plot, csv.as_bytes())?;
            }
            if let Some(out) = &output {
                write_json(out, &mu)?;
            }
            println!(
                "recovered {} atoms, total mass {}",
                mu.atoms.len(),
                mu.total_mass()
            );
            Ok(0)
        }

        Command::Cayley { values, direction, output } => {
            let input: Vec<ComplexMatrix> = read_json(&values)?;
            let converted = match direction {
                CayleyDirection::ToSchur => cayley_to_schur(&input)?,
                CayleyDirection::ToHerglotz => cayley_to_herglotz(&input)?,
            };
            write_json(&output, &converted)?;
            eprintln!("converted {} values", converted.len());
            Ok(0)
        }

        Command::Decompose { samples, side, opts, output } => {
            let samples = read_samples(&samples)?;
            let opts = read_opts(&opts)?;
            let targets = match side {
                Side::Herglotz => herglotz_targets(&samples.values),
                Side::Schur => schur_targets(&samples.values),
            };
            let decomp = find_decomposition(&targets, &samples.family, &samples.points, &opts)?;
            eprintln!("certificate found: residual {:.3e}", decomp.residual);
            write_json(&output, &decomp)?;
            Ok(0)
        }

        Command::Synthesize { samples, opts, holdout, output } => {
            let samples = read_samples(&samples)?;
            let mut opts = read_opts(&opts)?;
            if let Some(h) = holdout {
                opts.holdout = h;
            }
            let syn = synthesize_herglotz(&samples, &opts)?;
            eprintln!(
                "synthesized: internal dim {}, interpolation error {:.3e}, relations {:.3e}, decomposition residual {:.3e}",
                syn.diagnostics.internal_dim,
                syn.diagnostics.interpolation_error,
                syn.diagnostics.relations_worst,
                syn.diagnostics.decomposition_residual
            );
            if let Some(err) = syn.diagnostics.holdout_error {
                eprintln!("held-out validation error {:.3e}", err);
            }
            write_json(&output, &syn)?;
            Ok(0)
        }

        Command::Eval { realization, point, points, grid, emit_plot, output } => {
            let syn: Synthesized = read_json(&realization)?;
            if let Some(n) = grid {
                if syn.family != herglotz_core::TestFamily::Disc {
                    return Err(usage("--grid evaluation needs a disc realization").into());
                }
                let rows: Vec<(Complex64, Complex64)> = disc_grid(n)
                    .into_iter()
                    .map(|z| syn.evaluate(&Point::disc(z)).map(|f| (z, f[(0, 0)])))
                    .collect::<Result<_, _>>()?;
                if let Some(plot) = &emit_plot {
                    let mut csv = String::from("re_z,im_z,re_f,im_f\n");
                    for (z, f) in &rows {
                        csv.push_str(&format!("{},{},{},{}\n", z.re, z.im, f.re, f.im));
                    }
                    write_atomic(plot, csv.as_bytes())?;
                }
                println!("evaluated {} grid points", rows.len());
                return Ok(0);
            }
            let pts: Vec<Point> = if let Some(text) = point {
                vec![serde_json::from_str(&text)
                    .map_err(|e| usage(format!("bad --point: {e}")))?]
            } else if let Some(path) = points {
                read_json(&path)?
            } else {
                return Err(usage("need --point, --points or --grid").into());
            };
            let values: Vec<ComplexMatrix> = pts
                .iter()
                .map(|p| syn.evaluate(p))
                .collect::<Result<_, _>>()?;
            for (p, v) in pts.iter().zip(&values) {
                if v.rows() == 1 {
                    println!("f({}) = {}", serde_json::to_string(p).unwrap(), format_complex(v[(0, 0)]));
                } else {
                    println!(
                        "f({}) = {}x{} matrix",
                        serde_json::to_string(p).unwrap(),
                        v.rows(),
                        v.cols()
                    );
                }
            }
            if let Some(out) = &output {
                write_json(out, &values)?;
            }
            Ok(0)
        }

        Command::Verify { samples, kernels, count, seed, output } => {
            let samples = read_samples(&samples)?;
            let tol = global_tol(cli.tol, 1e-9)?;
            let batch: Vec<AdmissibleKernel> = match kernels {
                Some(path) => read_json(&path)?,
                None => generate_admissible(&samples.family, &samples.points, count, seed)?,
            };
            let verdict = check_herglotz_agler(&samples, &batch, tol)?;
            eprintln!(
                "verdict: pass={} worst_min_eig={:.6e}",
                verdict.pass, verdict.worst_min_eig
            );
            if let Some(out) = &output {
                write_json(out, &verdict)?;
            }
            println!("{}", serde_json::to_string(&verdict).unwrap());
            Ok(if verdict.pass { 0 } else { 2 })
        }

        Command::Extend { samples, points, opts, output } => {
            let samples = read_samples(&samples)?;
            let new_points: Vec<Point> = read_json(&points)?;
            let opts = read_opts(&opts)?;
            let values = extend(&samples, &new_points, &opts)?;
            write_json(&output, &values)?;
            eprintln!("extended to {} new points", values.len());
            Ok(0)
        }

        Command::Relations { colligation, output } => {
            let col: Colligation = read_json(&colligation)?;
            col.check_shapes()?;
            let tol = global_tol(cli.tol, DEFAULT_RELATIONS_TOL)?;
            let report = check_relations(&col, tol);
            println!("{}", serde_json::to_string(&report).unwrap());
            if let Some(out) = &output {
                write_json(out, &report)?;
            }
            Ok(if report.pass { 0 } else { 2 })
        }
    }
}
