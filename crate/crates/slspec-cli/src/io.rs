//! Spectrum CSV ingestion/emission and machine-readable reports.
//!
//! Every float is printed through [`fmt_f`] (17 significant digits) in CSV
//! sections and through `serde_json`'s shortest-round-trip encoding in JSON
//! reports; both re-ingest losslessly. Nothing here depends on time, locale,
//! or hash order, so identical inputs always produce byte-identical output.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use slspec::inverse::{CandidateSet, InterlaceOrder, InverseOutput, RoundTrip, TwoSpectraData};

use crate::CliError;

/// 17 significant digits: enough to reproduce any `f64` exactly.
pub fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes to the given path, or to stdout when no path is given.
pub fn write_text(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Reads one column of a headed CSV file, choosing the first header in
/// `preference` that is present. Accepts both the bare `n,value` layout and
/// the wider tables written by the `direct` subcommand.
pub fn read_spectrum(path: &Path, preference: &[&str]) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| CliError::Input(format!("{}: empty file", path.display())))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let column = preference
        .iter()
        .find_map(|want| columns.iter().position(|c| c == want))
        .ok_or_else(|| {
            CliError::Input(format!(
                "{}: no column named {} in header `{header}`",
                path.display(),
                preference.join(" or ")
            ))
        })?;
    let mut values = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let field = fields.get(column).ok_or_else(|| {
            CliError::Input(format!("{}: row {} has only {} fields", path.display(), i + 2, fields.len()))
        })?;
        let value: f64 = field.parse().map_err(|_| {
            CliError::Input(format!("{}: row {}: `{field}` is not a number", path.display(), i + 2))
        })?;
        values.push(value);
    }
    Ok(values)
}

/// Builds the two-problem spectrum table written by `direct`.
pub fn direct_csv(
    lambda: (&[f64], &[f64], &[f64]),
    mu: (&[f64], &[f64], &[f64]),
) -> String {
    let mut text = String::from("n,lambda,beta,gamma,mu,beta_mu,gamma_mu\n");
    for n in 0..lambda.0.len() {
        let _ = writeln!(
            text,
            "{n},{},{},{},{},{},{}",
            fmt_f(lambda.0[n]),
            fmt_f(lambda.1[n]),
            fmt_f(lambda.2[n]),
            fmt_f(mu.0[n]),
            fmt_f(mu.1[n]),
            fmt_f(mu.2[n]),
        );
    }
    text
}

/// Outcome of every admissibility check the inverse pipeline ran.
#[derive(Serialize)]
pub struct Checks {
    pub interlacing: String,
    pub levels: String,
    pub exception_case: String,
    pub direction: String,
    pub cardinality: String,
    pub gamma_positivity: String,
    pub tail_bounds: String,
    /// Normalized residuals of the completed power sums, one per moment.
    pub zero_sum_residuals: Vec<f64>,
    /// Smallest eigenvalue of the moment Hankel matrix (`null` when `d = 0`).
    pub hankel_min_eigenvalue: Option<f64>,
    /// Largest disagreement between the `Φ−Ψ` pole route and the Hankel
    /// pole route (`null` when `d = 0`).
    pub pole_route_agreement: Option<f64>,
}

#[derive(Serialize)]
pub struct CandidateSummary {
    pub index_set: Vec<usize>,
    pub d: usize,
    pub poles: Vec<f64>,
    pub gamma0: f64,
    pub alpha: f64,
}

#[derive(Serialize)]
pub struct RejectedSummary {
    pub index_set: Vec<usize>,
    pub reason: String,
}

/// Full `invert` report: fitted asymptotics, the located `τ` zeros, the
/// recovered boundary data, and every check outcome.
#[derive(Serialize)]
pub struct InvertReport {
    pub version: u32,
    pub count: usize,
    pub two_l: i64,
    pub sigma_lambda: f64,
    pub sigma_mu: f64,
    pub r: u8,
    pub nu: f64,
    pub order: String,
    pub taus: Vec<f64>,
    pub index_set: Vec<usize>,
    pub poles: Vec<f64>,
    pub d: usize,
    /// Coefficients of the recovered denominator `f↓`, ascending powers.
    pub down_coefficients: Vec<f64>,
    pub alpha: f64,
    pub h0_prime: f64,
    pub gammas: Vec<f64>,
    pub gamma_asymptotic_ratio: f64,
    pub checks: Checks,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<CandidateSummary>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejected: Option<Vec<RejectedSummary>>,
}

fn order_name(order: InterlaceOrder) -> &'static str {
    match order {
        InterlaceOrder::MuFirst => "mu first",
        InterlaceOrder::LambdaFirst => "lambda first",
    }
}

/// Largest elementwise gap between the two pole routes (both ascending).
pub fn pole_route_agreement(output: &InverseOutput) -> Option<f64> {
    if output.poles.is_empty() || output.hankel_poles.len() != output.poles.len() {
        return None;
    }
    output
        .poles
        .iter()
        .zip(&output.hankel_poles)
        .map(|(a, b)| (a - b).abs())
        .fold(None, |acc, d| Some(acc.map_or(d, |m: f64| m.max(d))))
}

pub fn invert_report(
    data: &TwoSpectraData,
    output: &InverseOutput,
    candidates: Option<&CandidateSet>,
) -> InvertReport {
    let checks = Checks {
        interlacing: format!("ok ({})", order_name(data.order)),
        levels: format!("ok (2L = {} on both spectra)", data.fit_lambda.two_l),
        exception_case: "ok (not the excluded L = -1/2, r = 1 configuration)".to_string(),
        direction: format!(
            "ok (nu = {} consistent with {} interlacing)",
            fmt_f(data.gap.nu),
            order_name(data.order)
        ),
        cardinality: format!("ok (d = {} <= {})", output.d, data.max_pole_count()),
        gamma_positivity: format!("ok ({} norming constants positive)", output.gammas.len()),
        tail_bounds: "ok (completed moment sums within tolerance)".to_string(),
        zero_sum_residuals: output.zero_sum_residuals.clone(),
        hankel_min_eigenvalue: output.hankel_min_eigenvalue,
        pole_route_agreement: pole_route_agreement(output),
    };
    InvertReport {
        version: 1,
        count: data.lambdas.len(),
        two_l: output.two_l,
        sigma_lambda: data.fit_lambda.sigma,
        sigma_mu: data.fit_mu.sigma,
        r: output.r,
        nu: output.nu,
        order: order_name(data.order).to_string(),
        taus: output.taus.clone(),
        index_set: output.index_set.clone(),
        poles: output.poles.clone(),
        d: output.d,
        down_coefficients: output.recovered_down.coeffs().to_vec(),
        alpha: output.alpha,
        h0_prime: output.h0_prime,
        gammas: output.gammas.clone(),
        gamma_asymptotic_ratio: output.gamma_asymptotic_ratio,
        checks,
        candidates: candidates.map(|set| {
            set.admissible
                .iter()
                .map(|out| CandidateSummary {
                    index_set: out.index_set.clone(),
                    d: out.d,
                    poles: out.poles.clone(),
                    gamma0: out.gammas.first().copied().unwrap_or(f64::NAN),
                    alpha: out.alpha,
                })
                .collect()
        }),
        rejected: candidates.map(|set| {
            set.rejected
                .iter()
                .map(|(index_set, reason)| RejectedSummary {
                    index_set: index_set.clone(),
                    reason: reason.clone(),
                })
                .collect()
        }),
    }
}

/// JSON mirror of the round-trip error table.
#[derive(Serialize)]
pub struct RoundtripReport {
    pub version: u32,
    pub count: usize,
    pub two_l: i64,
    pub sigma_lambda: f64,
    pub sigma_mu: f64,
    pub r: u8,
    pub nu: f64,
    pub alpha: f64,
    pub taus: Vec<f64>,
    pub index_set: Vec<usize>,
    pub poles: Vec<f64>,
    pub gammas: Vec<f64>,
    pub max_gamma_rel_error: f64,
    pub pole_errors_tau: Vec<f64>,
    pub pole_errors_hankel: Vec<f64>,
    pub alpha_rel_error: f64,
    pub sigma_difference: f64,
    pub sigma_difference_expected: f64,
    pub r_matches_theory: bool,
}

pub fn roundtrip_report(rt: &RoundTrip) -> RoundtripReport {
    let sigma_lambda = rt.lambda_data.fit.as_ref().map(|f| f.sigma).unwrap_or(f64::NAN);
    RoundtripReport {
        version: 1,
        count: rt.lambda_data.eigenvalues.len(),
        two_l: rt.output.two_l,
        sigma_lambda,
        sigma_mu: sigma_lambda - rt.sigma_difference,
        r: rt.output.r,
        nu: rt.output.nu,
        alpha: rt.output.alpha,
        taus: rt.output.taus.clone(),
        index_set: rt.output.index_set.clone(),
        poles: rt.output.poles.clone(),
        gammas: rt.output.gammas.clone(),
        max_gamma_rel_error: rt.max_gamma_rel_error,
        pole_errors_tau: rt.pole_errors_tau.clone(),
        pole_errors_hankel: rt.pole_errors_hankel.clone(),
        alpha_rel_error: rt.alpha_rel_error,
        sigma_difference: rt.sigma_difference,
        sigma_difference_expected: rt.sigma_difference_expected,
        r_matches_theory: rt.r_matches_theory,
    }
}

/// Serializes a report as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(report: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(report)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| CliError::Solver(format!("report serialization failed: {e}")))
}
