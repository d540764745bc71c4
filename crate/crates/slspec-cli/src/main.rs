//! Command-line front end for the spectral toolkit.
//!
//! Subcommands: `direct` (solve a problem file to a two-spectrum CSV),
//! `invert` (recover boundary data from two spectrum CSVs), `roundtrip`
//! (direct solve, inverse recovery, error table), `fit` (eigenvalue
//! asymptotics of one spectrum), and `products` (rebuild an entire function
//! from its zeros and evaluate it).
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 data
//! rejected by the inverse pipeline (or round-trip tolerances exceeded).

mod io;
mod schema;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use slspec::direct::DirectError;
use slspec::inverse::{self, InverseError};
use slspec::products::{self, ProductError};
use slspec::{BoundaryValueProblem, ProductFunction};

use io::fmt_f;
use schema::LoadedProblem;

/// Round-trip acceptance tolerances (printed next to each table row).
const TOL_GAMMA: f64 = 1e-4;
const TOL_POLE: f64 = 1e-4;
const TOL_ALPHA: f64 = 5e-2;
const TOL_SIGMA: f64 = 5e-2;

/// A failure with a process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed file, option, or schema violation (exit 2).
    Input(String),
    /// The direct solver failed on a well-formed problem (exit 3).
    Solver(String),
    /// The inverse pipeline rejected the data (exit 4).
    Inadmissible(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Inadmissible(_) => 4,
        }
    }
    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Solver(m) | CliError::Inadmissible(m) => m,
        }
    }
}

fn solver_err(e: DirectError) -> CliError {
    CliError::Solver(e.to_string())
}

/// Inverse failures are inadmissible data, except when the embedded direct
/// solve itself broke.
fn inverse_err(e: InverseError) -> CliError {
    match e {
        InverseError::Direct(d) => CliError::Solver(d.to_string()),
        other => CliError::Inadmissible(other.to_string()),
    }
}

/// Fit/product failures: too little data or an out-of-window request is an
/// input problem; everything else means the sequence is not usable.
fn product_err(e: ProductError) -> CliError {
    match e {
        ProductError::TooFewZeros { .. } | ProductError::BeyondDataRange { .. } => {
            CliError::Input(e.to_string())
        }
        other => CliError::Inadmissible(other.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "slspec",
    version,
    about = "Direct and inverse spectral computations for -y'' + q y = λ y on [0, π] \
             with rational λ-dependent boundary conditions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file: eigenvalues, coupling and norming constants for
    /// the problem and its shifted companion, as one CSV.
    Direct {
        /// Problem file (JSON).
        problem: PathBuf,
        /// Highest eigenvalue index to compute (inclusive; overrides the file).
        #[arg(long)]
        n: Option<usize>,
        /// Output path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the eigenvalue abscissa tolerance.
        #[arg(long)]
        tol_eig: Option<f64>,
    },
    /// Recover boundary data from two spectrum CSVs (columns `lambda`/`mu`,
    /// or `value`).
    Invert {
        lambda_csv: PathBuf,
        mu_csv: PathBuf,
        /// Indices into the located τ zeros to take as poles, e.g. 0,2,5.
        #[arg(long, value_delimiter = ',')]
        indices: Vec<usize>,
        /// Also enumerate admissible pole subsets among the first KMAX τ zeros.
        #[arg(long, default_value_t = 0)]
        kmax: usize,
        /// Output path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve a problem file, push both spectra through the inverse pipeline,
    /// and print the recovery-error table.
    Roundtrip {
        /// Problem file (JSON).
        problem: PathBuf,
        /// Highest eigenvalue index to compute (inclusive; overrides the file).
        #[arg(long)]
        n: Option<usize>,
        /// Also write the table as a JSON report.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the eigenvalue abscissa tolerance.
        #[arg(long)]
        tol_eig: Option<f64>,
    },
    /// Fit the eigenvalue asymptotics (level 2L, sigma, corrections) of one
    /// spectrum CSV.
    Fit {
        spectrum_csv: PathBuf,
        /// Output path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild an entire function from the zero sequence in a spectrum CSV
    /// and evaluate it at the given points.
    Products {
        spectrum_csv: PathBuf,
        /// Evaluation points.
        #[arg(required = true, allow_negative_numbers = true)]
        lambdas: Vec<f64>,
        /// Output path (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Direct { problem, n, out, tol_eig } => {
            run_direct(&problem, n, out.as_deref(), tol_eig)
        }
        Command::Invert { lambda_csv, mu_csv, indices, kmax, out } => {
            run_invert(&lambda_csv, &mu_csv, &indices, kmax, out.as_deref())
        }
        Command::Roundtrip { problem, n, out, tol_eig } => {
            run_roundtrip(&problem, n, out.as_deref(), tol_eig)
        }
        Command::Fit { spectrum_csv, out } => run_fit(&spectrum_csv, out.as_deref()),
        Command::Products { spectrum_csv, lambdas, out } => {
            run_products(&spectrum_csv, &lambdas, out.as_deref())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_with_overrides(
    path: &std::path::Path,
    n: Option<usize>,
    tol_eig: Option<f64>,
) -> Result<LoadedProblem, CliError> {
    let mut loaded = schema::load(path)?;
    if let Some(t) = tol_eig {
        loaded.config.tol_eig = schema::positive(t, "--tol-eig")?;
    }
    if let Some(top) = n {
        loaded.top_index = top;
    }
    Ok(loaded)
}

fn run_direct(
    path: &std::path::Path,
    n: Option<usize>,
    out: Option<&std::path::Path>,
    tol_eig: Option<f64>,
) -> Result<(), CliError> {
    let loaded = load_with_overrides(path, n, tol_eig)?;
    let count = loaded.top_index + 1;
    let problem = &loaded.problem;

    let lambda = problem.spectral_data(count, &loaded.config).map_err(solver_err)?;
    let shifted = problem
        .f()
        .shift(problem.alpha())
        .map_err(|e| CliError::Input(format!("shifted boundary function f + alpha: {e}")))?;
    let companion =
        BoundaryValueProblem::new(problem.q().clone(), shifted, problem.big_f().clone(), problem.alpha())
            .map_err(|e| CliError::Input(e.to_string()))?;
    let mu = companion.spectral_data(count, &loaded.config).map_err(solver_err)?;

    let text = io::direct_csv(
        (
            &lambda.eigenvalues,
            lambda.betas.as_deref().unwrap_or(&[]),
            lambda.gammas.as_deref().unwrap_or(&[]),
        ),
        (&mu.eigenvalues, mu.betas.as_deref().unwrap_or(&[]), mu.gammas.as_deref().unwrap_or(&[])),
    );
    io::write_text(out, &text)
}

fn run_invert(
    lambda_csv: &std::path::Path,
    mu_csv: &std::path::Path,
    indices: &[usize],
    kmax: usize,
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let lambdas = io::read_spectrum(lambda_csv, &["lambda", "value"])?;
    let mus = io::read_spectrum(mu_csv, &["mu", "value"])?;
    let data = inverse::validate_two_spectra(&lambdas, &mus).map_err(inverse_err)?;
    let taus = inverse::find_tau_zeros(&data).map_err(inverse_err)?;
    let output = inverse::recover_with_index_set(&data, &taus, indices).map_err(inverse_err)?;
    let candidates = if kmax > 0 {
        Some(inverse::enumerate_candidates(&lambdas, &mus, kmax).map_err(inverse_err)?)
    } else {
        None
    };
    let report = io::invert_report(&data, &output, candidates.as_ref());
    io::write_text(out, &io::to_json(&report)?)
}

fn run_roundtrip(
    path: &std::path::Path,
    n: Option<usize>,
    out: Option<&std::path::Path>,
    tol_eig: Option<f64>,
) -> Result<(), CliError> {
    let loaded = load_with_overrides(path, n, tol_eig)?;
    let count = loaded.top_index + 1;
    let rt = inverse::roundtrip(&loaded.problem, count, &loaded.config).map_err(inverse_err)?;

    let sigma_error = (rt.sigma_difference - rt.sigma_difference_expected).abs();
    let sigma_tol = TOL_SIGMA * rt.sigma_difference_expected.abs().max(1.0);
    let pole_tau_worst = rt.pole_errors_tau.iter().cloned().fold(f64::NAN, f64::max);
    let pole_hankel_worst = rt.pole_errors_hankel.iter().cloned().fold(f64::NAN, f64::max);

    let mut rows: Vec<(String, f64, f64)> = vec![
        ("max relative gamma error".into(), rt.max_gamma_rel_error, TOL_GAMMA),
        ("alpha relative error".into(), rt.alpha_rel_error, TOL_ALPHA),
        ("sigma difference vs theory".into(), sigma_error, sigma_tol),
    ];
    if !rt.pole_errors_tau.is_empty() {
        rows.push(("max pole error (tau route)".into(), pole_tau_worst, TOL_POLE));
        rows.push(("max pole error (hankel route)".into(), pole_hankel_worst, TOL_POLE));
    }

    let mut table = String::new();
    let _ = writeln!(table, "roundtrip of {} ({} eigenvalue pairs)", path.display(), count);
    let _ = writeln!(
        table,
        "  fitted 2L = {}, r = {}, nu = {}, recovered alpha = {}",
        rt.output.two_l,
        rt.output.r,
        fmt_f(rt.output.nu),
        fmt_f(rt.output.alpha),
    );
    let _ = writeln!(table, "  pole count d = {}, poles = {:?}", rt.output.d, rt.output.poles);
    let mut all_ok = true;
    for (name, value, tol) in &rows {
        let ok = value.is_finite() && *value <= *tol;
        all_ok &= ok;
        let _ = writeln!(
            table,
            "  {name:<32} {value:>12.3e}  (tol {tol:.1e})  {}",
            if ok { "ok" } else { "FAIL" }
        );
    }
    let _ = writeln!(
        table,
        "  gap order matches boundary type   {}",
        if rt.r_matches_theory { "yes" } else { "FAIL" }
    );
    all_ok &= rt.r_matches_theory;
    let _ = writeln!(table, "result: {}", if all_ok { "ok" } else { "tolerances exceeded" });
    print!("{table}");

    if let Some(out_path) = out {
        let report = io::roundtrip_report(&rt);
        io::write_text(Some(out_path), &io::to_json(&report)?)?;
    }
    if all_ok {
        Ok(())
    } else {
        Err(CliError::Inadmissible("roundtrip tolerances exceeded".into()))
    }
}

fn run_fit(spectrum_csv: &std::path::Path, out: Option<&std::path::Path>) -> Result<(), CliError> {
    let zeros = io::read_spectrum(spectrum_csv, &["lambda", "value", "mu"])?;
    let fit = products::fit_asymptotics(&zeros).map_err(product_err)?;

    #[derive(serde::Serialize)]
    struct FitReport {
        version: u32,
        count: usize,
        two_l: i64,
        sigma: f64,
        sigma_correction: f64,
        sigma_correction2: f64,
        residual: f64,
    }
    let report = FitReport {
        version: 1,
        count: zeros.len(),
        two_l: fit.two_l,
        sigma: fit.sigma,
        sigma_correction: fit.sigma_correction,
        sigma_correction2: fit.sigma_correction2,
        residual: fit.residual,
    };
    io::write_text(out, &io::to_json(&report)?)
}

fn run_products(
    spectrum_csv: &std::path::Path,
    lambdas: &[f64],
    out: Option<&std::path::Path>,
) -> Result<(), CliError> {
    let zeros = io::read_spectrum(spectrum_csv, &["lambda", "value", "mu"])?;
    let product = ProductFunction::from_zeros(zeros).map_err(product_err)?;
    let mut text = String::from("lambda,value\n");
    for &lambda in lambdas {
        let value = product.eval(lambda).map_err(product_err)?;
        let _ = writeln!(text, "{},{}", fmt_f(lambda), fmt_f(value));
    }
    io::write_text(out, &text)
}
