//! End-to-end acceptance battery. Runs without the default harness so each
//! criterion reports exactly one pass/fail line; the process exits nonzero
//! if any criterion fails.

use slspec::direct::{CharKind, DataSource};
use slspec::inverse::{
    self, enumerate_candidates, validate_two_spectra, InverseError, TwoSpectraData,
};
use slspec::products::fit_sigma_with_level;
use slspec::{BoundaryValueProblem, Potential, RationalBoundaryFunction, SolverConfig};
use std::f64::consts::PI;
use std::time::Instant;

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0e-300)
}

// ---------------------------------------------------------------------
// Criterion 1: unperturbed problems reproduce their closed-form spectra.
// ---------------------------------------------------------------------
fn criterion_unperturbed_spectra() -> Result<String, String> {
    let neumann = BoundaryValueProblem::new(
        Potential::zero(),
        RationalBoundaryFunction::constant(0.0),
        RationalBoundaryFunction::constant(0.0),
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let data = neumann.eigenvalues(CharKind::Phi, 31, &cfg()).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for (n, &lam) in data.eigenvalues.iter().enumerate() {
        let exact = (n * n) as f64;
        let err = (lam - exact).abs() / exact.max(1.0);
        worst = worst.max(err);
        if err > 1e-9 {
            return Err(format!("Neumann λ_{n} = {lam}, expected {exact} (err {err:.2e})"));
        }
    }
    let dirichlet_right = BoundaryValueProblem::new(
        Potential::zero(),
        RationalBoundaryFunction::constant(0.0),
        RationalBoundaryFunction::infinity(),
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let data = dirichlet_right.eigenvalues(CharKind::Phi, 31, &cfg()).map_err(|e| e.to_string())?;
    for (n, &lam) in data.eigenvalues.iter().enumerate() {
        let exact = (n as f64 + 0.5) * (n as f64 + 0.5);
        let err = (lam - exact).abs() / exact.max(1.0);
        worst = worst.max(err);
        if err > 1e-9 {
            return Err(format!("mixed λ_{n} = {lam}, expected {exact} (err {err:.2e})"));
        }
    }
    Ok(format!("62 eigenvalues of two closed-form problems, worst error {worst:.2e}"))
}

// ---------------------------------------------------------------------
// Criterion 2: coupling/norming identities across boundary-index combos.
// ---------------------------------------------------------------------
fn suite() -> Vec<BoundaryValueProblem> {
    let f = |h0: f64, h: f64, p: Vec<f64>, r: Vec<f64>| {
        RationalBoundaryFunction::new(h0, h, p, r).unwrap()
    };
    let trig = |c: Vec<f64>, s: Vec<f64>| Potential::trig(c, s).unwrap();
    vec![
        // ind f = 0, ind F = 0
        BoundaryValueProblem::new(
            Potential::zero(),
            RationalBoundaryFunction::constant(0.0),
            RationalBoundaryFunction::constant(0.0),
            1.0,
        )
        .unwrap(),
        // ind f = 2, ind F = 0
        BoundaryValueProblem::new(
            trig(vec![1.0], vec![]),
            f(0.0, 1.0, vec![1.0], vec![1.0]),
            RationalBoundaryFunction::constant(0.0),
            1.0,
        )
        .unwrap(),
        // ind f = 1, ind F = 0, α < 0
        BoundaryValueProblem::new(
            trig(vec![0.4, -0.2], vec![0.3]),
            RationalBoundaryFunction::linear(1.0, 0.5).unwrap(),
            RationalBoundaryFunction::constant(2.0),
            -0.8,
        )
        .unwrap(),
        // ind f = 0, ind F = -1
        BoundaryValueProblem::new(
            trig(vec![1.0], vec![]),
            RationalBoundaryFunction::constant(0.3),
            RationalBoundaryFunction::infinity(),
            0.6,
        )
        .unwrap(),
        // ind f = 3, ind F = 0
        BoundaryValueProblem::new(
            trig(vec![], vec![1.0]),
            f(2.0, 1.0, vec![2.5], vec![0.5]),
            RationalBoundaryFunction::constant(1.2),
            1.5,
        )
        .unwrap(),
        // ind f = 0, ind F = 1
        BoundaryValueProblem::new(
            trig(vec![0.0, 0.0, 0.5], vec![]),
            RationalBoundaryFunction::constant(0.2),
            RationalBoundaryFunction::linear(1.0, -0.7).unwrap(),
            0.9,
        )
        .unwrap(),
        // ind f = 2, ind F = 2
        BoundaryValueProblem::new(
            trig(vec![0.3], vec![-0.4]),
            f(0.0, 0.1, vec![0.35], vec![1.0]),
            f(0.0, -0.4, vec![1.7], vec![0.3]),
            0.9,
        )
        .unwrap(),
        // ind f = 1, ind F = -1, α < 0
        BoundaryValueProblem::new(
            trig(vec![-0.8], vec![]),
            RationalBoundaryFunction::linear(0.5, 0.1).unwrap(),
            RationalBoundaryFunction::infinity(),
            -0.5,
        )
        .unwrap(),
        // ind f = 3, ind F = 2, α < 0
        BoundaryValueProblem::new(
            trig(vec![0.2], vec![0.15]),
            f(1.1, 0.4, vec![6.6], vec![0.25]),
            f(0.0, 0.9, vec![12.45], vec![0.8]),
            -1.2,
        )
        .unwrap(),
        // ind f = 1, ind F = 2
        BoundaryValueProblem::new(
            trig(vec![0.1, 0.3], vec![0.2]),
            RationalBoundaryFunction::linear(0.7, 0.0).unwrap(),
            f(0.0, 0.05, vec![2.3], vec![1.0]),
            1.0,
        )
        .unwrap(),
    ]
}

fn criterion_identities() -> Result<String, String> {
    let mut worst = 0.0f64;
    for (ip, p) in suite().iter().enumerate() {
        let data = p.spectral_data(26, &cfg()).map_err(|e| format!("problem {ip}: {e}"))?;
        let betas = data.betas.as_ref().unwrap();
        let gammas = data.gammas.as_ref().unwrap();
        let (f_up, f_down) = p.f().fraction_parts();
        for n in 0..26 {
            let lam = data.eigenvalues[n];
            let beta = betas[n];
            let gamma = gammas[n];
            if !(gamma > 0.0) {
                return Err(format!("problem {ip}: γ_{n} = {gamma} not positive"));
            }
            // Φ'(λₙ) = βₙ γₙ against a central difference.
            let h = 1e-5 * lam.abs().max(1.0);
            let hi = p.char_value(CharKind::Phi, lam + h, &cfg()).map_err(|e| e.to_string())?;
            let lo = p.char_value(CharKind::Phi, lam - h, &cfg()).map_err(|e| e.to_string())?;
            let dphi = (hi - lo) / (2.0 * h);
            let err = rel_err(dphi, beta * gamma);
            worst = worst.max(err);
            if err > 1e-6 {
                return Err(format!(
                    "problem {ip}: Φ'(λ_{n}) = {dphi} vs βγ = {} (err {err:.2e})",
                    beta * gamma
                ));
            }
            // Ψ(λₙ) = α βₙ f↓²(λₙ).
            let psi = p.char_value(CharKind::Psi, lam, &cfg()).map_err(|e| e.to_string())?;
            let fd = f_down.eval(lam);
            let expected = p.alpha() * beta * fd * fd;
            let err = (psi - expected).abs() / psi.abs().max(expected.abs()).max(1e-9);
            worst = worst.max(err);
            if err > 1e-6 {
                return Err(format!(
                    "problem {ip}: Ψ(λ_{n}) = {psi} vs αβf↓² = {expected} (err {err:.2e})"
                ));
            }
            let _ = f_up.eval(lam);
        }
    }
    Ok(format!("two identities × 26 eigenvalues × 10 problems, worst error {worst:.2e}"))
}

// ---------------------------------------------------------------------
// Criterion 3: the two spectra interlace in the direction set by sign(α).
// ---------------------------------------------------------------------
fn criterion_interlacing() -> Result<String, String> {
    let problems = suite();
    let mut checked = 0usize;
    for ip in [0usize, 2, 4, 7] {
        let p = &problems[ip];
        let lam = p.eigenvalues(CharKind::Phi, 21, &cfg()).map_err(|e| e.to_string())?;
        let mu = p.eigenvalues(CharKind::Psi, 21, &cfg()).map_err(|e| e.to_string())?;
        let (first, second, label) = if p.alpha() > 0.0 {
            (&mu.eigenvalues, &lam.eigenvalues, "μ")
        } else {
            (&lam.eigenvalues, &mu.eigenvalues, "λ")
        };
        for n in 0..21 {
            let ok = first[n] < second[n] && (n + 1 >= 21 || second[n] < first[n + 1]);
            if !ok {
                return Err(format!(
                    "problem {ip} (α = {}): {label}-first interlacing broken at n = {n}",
                    p.alpha()
                ));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} interlacing slots over 4 problems, both signs of α, zero violations"))
}

// ---------------------------------------------------------------------
// Criterion 4: canonical products rebuilt from computed spectra match the
// closed-form characteristic function.
// ---------------------------------------------------------------------
fn criterion_products() -> Result<String, String> {
    let neumann = BoundaryValueProblem::new(
        Potential::zero(),
        RationalBoundaryFunction::constant(0.0),
        RationalBoundaryFunction::constant(0.0),
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let data = neumann.eigenvalues(CharKind::Phi, 40, &cfg()).map_err(|e| e.to_string())?;
    let fit = fit_sigma_with_level(&data.eigenvalues, 0);
    let product = slspec::ProductFunction::build(data.eigenvalues.clone(), &fit)
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for j in 0..20 {
        let lambda = -5.0 + 35.0 * (j as f64 + 0.37) / 20.0;
        let exact = if lambda >= 0.0 {
            lambda.sqrt() * (lambda.sqrt() * PI).sin()
        } else {
            -(-lambda).sqrt() * ((-lambda).sqrt() * PI).sinh()
        };
        let got = product.eval(lambda).map_err(|e| e.to_string())?;
        let err = (got - exact).abs() / exact.abs().max(1.0);
        worst = worst.max(err);
        if err > 1e-4 {
            return Err(format!("G({lambda:.3}) = {got} vs {exact} (err {err:.2e})"));
        }
    }
    // |G'(λₙ)| → π/2 for this level-zero sequence.
    for n in 10..=35 {
        let d = product.derivative((n * n) as f64).map_err(|e| e.to_string())?;
        let err = (d.abs() - PI / 2.0).abs() / (PI / 2.0);
        if err > 0.05 {
            return Err(format!("|G'({})| = {} strays from π/2 by {err:.2e}", n * n, d.abs()));
        }
    }
    Ok(format!("20 sample points within 1e-4 (worst {worst:.2e}); ring derivatives within 5% of π/2"))
}

// ---------------------------------------------------------------------
// Criterion 5: direct→inverse round trips recover norming constants and
// the boundary pole.
// ---------------------------------------------------------------------
fn criterion_roundtrips() -> Result<String, String> {
    // Closed-form problem: everything is known exactly.
    let neumann = BoundaryValueProblem::new(
        Potential::zero(),
        RationalBoundaryFunction::constant(0.0),
        RationalBoundaryFunction::constant(0.0),
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let rt = inverse::roundtrip(&neumann, 31, &cfg()).map_err(|e| e.to_string())?;
    if rel_err(rt.output.gammas[0], PI) > 1e-6 {
        return Err(format!("Neumann γ̂₀ = {} vs π (err {:.2e})", rt.output.gammas[0],
            rel_err(rt.output.gammas[0], PI)));
    }
    for n in 1..=15 {
        let err = rel_err(rt.output.gammas[n], PI / 2.0);
        if err > 1e-6 {
            return Err(format!("Neumann γ̂_{n} = {} vs π/2 (err {err:.2e})", rt.output.gammas[n]));
        }
    }
    if rt.output.two_l != 0 || rt.output.r != 0 {
        return Err(format!("Neumann (2L, r) = ({}, {})", rt.output.two_l, rt.output.r));
    }
    if rel_err(rt.output.nu, 1.0 / PI) > 0.02 {
        return Err(format!("Neumann ν = {} vs 1/π", rt.output.nu));
    }
    // Perturbed problem with a boundary pole: q = cos 2x, f = 1 + 1/(1−λ).
    let polar = BoundaryValueProblem::new(
        Potential::trig(vec![1.0], vec![]).map_err(|e| e.to_string())?,
        RationalBoundaryFunction::new(0.0, 1.0, vec![1.0], vec![1.0]).map_err(|e| e.to_string())?,
        RationalBoundaryFunction::constant(0.0),
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let rt2 = inverse::roundtrip(&polar, 40, &cfg()).map_err(|e| e.to_string())?;
    if rt2.pole_errors_tau.len() != 1 || rt2.pole_errors_tau[0] > 1e-4 {
        return Err(format!("pole recovery errors {:?}", rt2.pole_errors_tau));
    }
    if rt2.max_gamma_rel_error > 1e-4 {
        return Err(format!("perturbed γ̂ error {:.2e} over lower half", rt2.max_gamma_rel_error));
    }
    if rel_err(rt2.output.alpha, 1.0) > 0.02 {
        return Err(format!("perturbed α̂ = {}", rt2.output.alpha));
    }
    Ok(format!(
        "closed-form γ̂ within 1e-6; pole within {:.1e}; perturbed γ̂ within {:.1e}; α̂ err {:.1e}",
        rt2.pole_errors_tau[0], rt2.max_gamma_rel_error, rt2.alpha_rel_error
    ))
}

// ---------------------------------------------------------------------
// Criterion 6: moment-space consistency of the recovered measure.
// ---------------------------------------------------------------------
fn criterion_hankel() -> Result<String, String> {
    let polar = BoundaryValueProblem::new(
        Potential::trig(vec![1.0], vec![]).map_err(|e| e.to_string())?,
        RationalBoundaryFunction::new(0.0, 1.0, vec![1.0], vec![1.0]).map_err(|e| e.to_string())?,
        RationalBoundaryFunction::constant(0.0),
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let rt = inverse::roundtrip(&polar, 40, &cfg()).map_err(|e| e.to_string())?;
    let out = &rt.output;
    let min_eig = out.hankel_min_eigenvalue.ok_or("no Hankel data")?;
    if !(min_eig > 0.0) {
        return Err(format!("Hankel matrix not positive definite: min eigenvalue {min_eig}"));
    }
    // |Σ λₙᵏ f↓(λₙ)/γₙ| ≤ 1e-6 · s₀ · max |f↓(λₙ)| for k < d.
    let lambdas = &rt.lambda_data.eigenvalues;
    let s0: f64 = lambdas.iter().zip(&out.gammas).map(|(_, &g)| 1.0 / g).sum();
    let max_p = lambdas
        .iter()
        .map(|&l| out.recovered_down.eval(l).abs())
        .fold(0.0f64, f64::max);
    for (k, &res) in out.zero_sum_residuals.iter().enumerate() {
        let scale: f64 = lambdas
            .iter()
            .zip(&out.gammas)
            .map(|(&l, &g)| (l.powi(k as i32) * out.recovered_down.eval(l) / g).abs())
            .sum();
        let absolute = res * scale;
        let bound = 1e-6 * s0 * max_p;
        if absolute > bound {
            return Err(format!("zero sum k = {k}: |Σ| = {absolute:.3e} > {bound:.3e}"));
        }
    }
    // The Hankel route re-derives the pole found through the τ route.
    if out.hankel_poles.len() != 1 || (out.hankel_poles[0] - out.poles[0]).abs() > 1e-2 {
        return Err(format!("Hankel poles {:?} vs τ pole {:?}", out.hankel_poles, out.poles));
    }
    Ok(format!(
        "min Hankel eigenvalue {min_eig:.3e} > 0; zero sums within budget; pole routes agree to {:.1e}",
        (out.hankel_poles[0] - out.poles[0]).abs()
    ))
}

// ---------------------------------------------------------------------
// Criterion 7: the finite solution ambiguity is enumerated and screened.
// ---------------------------------------------------------------------
fn criterion_ambiguity() -> Result<String, String> {
    let mut lams = vec![-2.0];
    let mut mus = vec![-1.0];
    for n in 1..36 {
        let nf = n as f64;
        let sl = nf - 1.0 + 0.3 / (PI * nf);
        lams.push(sl * sl);
        if n == 1 {
            mus.push(0.5);
        } else {
            let sm = sl + 0.2 / (nf - 1.0).powi(3);
            mus.push(sm * sm);
        }
    }
    let set = enumerate_candidates(&lams, &mus, 3).map_err(|e| e.to_string())?;
    let attempted = set.admissible.len() + set.rejected.len();
    if attempted != 4 {
        return Err(format!("expected 4 candidate subsets, attempted {attempted}"));
    }
    if set.admissible.len() < 2 {
        return Err(format!(
            "only {} admissible candidates; rejections: {:?}",
            set.admissible.len(),
            set.rejected
        ));
    }
    for a in &set.admissible {
        if (a.gamma_asymptotic_ratio - 1.0).abs() > 0.05 {
            return Err(format!(
                "candidate {:?}: norming growth ratio {} strays from 1",
                a.index_set, a.gamma_asymptotic_ratio
            ));
        }
    }
    for i in 0..set.admissible.len() {
        for j in (i + 1)..set.admissible.len() {
            let (a, b) = (set.admissible[i].gammas[0], set.admissible[j].gammas[0]);
            if (a - b).abs() <= 1e-6 * a.abs().max(b.abs()) {
                return Err(format!("candidates {i} and {j} share γ̂₀ = {a}"));
            }
        }
    }
    // The unsolvable half-integer configuration is refused outright.
    let mut el = Vec::new();
    let mut em = Vec::new();
    for n in 0..31 {
        let t = n as f64 + 0.5;
        el.push(t * t);
        let tm = t + 0.1 / (t * t * t);
        em.push(tm * tm);
    }
    match validate_two_spectra(&el, &em) {
        Err(InverseError::ExceptionCase) => {}
        other => return Err(format!("exception pair gave {other:?}")),
    }
    Ok(format!(
        "4 subsets attempted, {} admissible with distinct γ̂₀; unsolvable configuration refused",
        set.admissible.len()
    ))
}

// ---------------------------------------------------------------------
// Criterion 8: corrupted inputs are rejected with the right diagnosis.
// ---------------------------------------------------------------------
fn criterion_rejections() -> Result<String, String> {
    let neumann = BoundaryValueProblem::new(
        Potential::zero(),
        RationalBoundaryFunction::constant(0.0),
        RationalBoundaryFunction::constant(0.0),
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let lam = neumann.eigenvalues(CharKind::Phi, 31, &cfg()).map_err(|e| e.to_string())?;
    let mu = neumann.eigenvalues(CharKind::Psi, 31, &cfg()).map_err(|e| e.to_string())?;

    // Swapping the spectra while keeping the stale gap direction must drive
    // every recovered norming constant negative.
    let data = validate_two_spectra(&lam.eigenvalues, &mu.eigenvalues).map_err(|e| e.to_string())?;
    let forged = TwoSpectraData {
        lambdas: data.mus.clone(),
        mus: data.lambdas.clone(),
        fit_lambda: data.fit_mu,
        fit_mu: data.fit_lambda,
        gap: data.gap,
        order: data.order,
    };
    let taus = inverse::find_tau_zeros(&forged).map_err(|e| e.to_string())?;
    match inverse::recover_with_index_set(&forged, &taus, &[]) {
        Err(InverseError::NonpositiveGamma { index: 0, .. }) => {}
        other => return Err(format!("swapped spectra gave {other:?}")),
    }

    // A shared eigenvalue is a data collision.
    let mut mus_bad = mu.eigenvalues.clone();
    mus_bad[3] = lam.eigenvalues[3];
    match validate_two_spectra(&lam.eigenvalues, &mus_bad) {
        Err(InverseError::CommonPoint { .. }) => {}
        other => return Err(format!("colliding spectra gave {other:?}")),
    }
    if lam.source != DataSource::Direct {
        return Err("direct data not labeled as such".into());
    }
    Ok("stale-direction swap → NonpositiveGamma; shared eigenvalue → CommonPoint".into())
}

fn main() {
    let criteria: Vec<(&str, fn() -> Result<String, String>)> = vec![
        ("1 closed-form spectra", criterion_unperturbed_spectra),
        ("2 spectral identities", criterion_identities),
        ("3 interlacing direction", criterion_interlacing),
        ("4 product reconstruction", criterion_products),
        ("5 inverse round trips", criterion_roundtrips),
        ("6 moment consistency", criterion_hankel),
        ("7 solution ambiguity", criterion_ambiguity),
        ("8 corrupted-input rejection", criterion_rejections),
    ];
    let mut failures = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        match run() {
            Ok(detail) => {
                println!("PASS criterion {name}: {detail} [{:.1}s]", start.elapsed().as_secs_f64());
            }
            Err(reason) => {
                failures += 1;
                println!("FAIL criterion {name}: {reason} [{:.1}s]", start.elapsed().as_secs_f64());
            }
        }
    }
    if failures > 0 {
        eprintln!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
