//! Acceptance criteria, one PASS/FAIL line each.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use heatrec_core::abel::{
    sphere_kernel_at_pi, sphere_kernel_at_zero, sphere_volterra_solve, HyperbolicDescent,
    QuadratureSpec, Spacing, SphereDescent, TimeGrid,
};
use heatrec_core::closed_form::{HyperbolicOddKernel, SphereOddKernel};
use heatrec_core::spectral::{sphere_kernel_spectral, SpectralSphereKernel, SpectralTruncation};
use heatrec_core::trace::hyper_diag_poly;
use heatrec_core::trace::{
    c_mk, diag_recurrence_identity, heat_trace_coeffs, q_normalized, sphere_diag_poly,
    weyl_leading, DiagIdentity, DiagKind,
};
use heatrec_core::verify::{normalization, pde_residual, SampleGrid};
use heatrec_core::{sphere_volume, KernelEvaluator, SpaceForm};
use num_bigint::BigUint;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn timed(budget: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail = format!("{}; {:.2} s", o.detail, elapsed.as_secs_f64());
    if let Some(b) = budget {
        if elapsed > b {
            o.passed = false;
            o.detail = format!("{} exceeds {} s", o.detail, b.as_secs());
        }
    }
    o
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn closed_form_vs_series() -> Outcome {
    let k3 = SphereOddKernel::of_dim(3).unwrap();
    let oracle = SpectralTruncation::oracle();
    let mut worst = 0f64;
    for &t in &[0.1, 0.3, 1.0] {
        for &r in &[0.0, 0.5, PI / 2.0, PI - 0.3, PI] {
            let closed = k3.value(t, r).unwrap();
            let series = sphere_kernel_spectral(3, t, r, &oracle).unwrap();
            worst = worst.max(rel(closed, series));
        }
    }
    outcome(worst <= 1e-10, format!("max rel {worst:.2e} <= 1e-10"))
}

fn sphere_identity() -> Outcome {
    let upper = SphereOddKernel::of_dim(3).unwrap();
    let same = SpectralSphereKernel::fast(2).unwrap();
    let q = QuadratureSpec::default();
    let descent = SphereDescent::new(2, upper, same, q).unwrap();
    let oracle = SpectralTruncation::oracle();
    let mut worst = 0f64;
    for &t in &[0.5, 1.0] {
        let grid = TimeGrid::new(t, 8, Spacing::Graded).unwrap();
        for &r in &[0.0, PI / 2.0, PI] {
            let got = if r == 0.0 {
                sphere_kernel_at_zero(2, t, &upper, &same, &q, &grid).unwrap()
            } else if r == PI {
                sphere_kernel_at_pi(2, t, &upper, &same, &q, &grid).unwrap()
            } else {
                descent.value(t, r).unwrap()
            };
            let want = sphere_kernel_spectral(2, t, r, &oracle).unwrap();
            worst = worst.max(rel(got, want));
        }
    }
    outcome(worst <= 1e-5, format!("max rel {worst:.2e} <= 1e-5"))
}

fn hyperbolic_descent() -> Outcome {
    let k2 = HyperbolicDescent::new(
        2,
        HyperbolicOddKernel::of_dim(3).unwrap(),
        QuadratureSpec::default(),
    )
    .unwrap();
    let space = SpaceForm::hyperbolic(2).unwrap();
    let grid = SampleGrid::new(vec![0.3, 1.0], vec![0.3, 1.0, 2.0]).unwrap();
    let residual = pde_residual(&k2, &space, &grid).unwrap().max_rel;
    let mut mass_err = 0f64;
    for &t in &[0.3, 1.0] {
        let mass = normalization(&k2, &space, t, 1e-9).unwrap();
        mass_err = mass_err.max((1.0 - mass).abs());
    }
    outcome(
        residual <= 1e-6 && mass_err <= 1e-7,
        format!("residual {residual:.2e} <= 1e-6, |1 - mass| {mass_err:.2e} <= 1e-7"),
    )
}

fn diagonal_identities() -> Outcome {
    let mut failed = Vec::new();
    for m in 1..=6 {
        for (which, name) in [
            (DiagIdentity::Hyperbolic, "hyperbolic"),
            (DiagIdentity::SphereAtZero, "sphere r=0"),
            (DiagIdentity::SphereAtPi, "sphere r=pi"),
        ] {
            if !diag_recurrence_identity(m, which).unwrap_or(false) {
                failed.push(format!("{name} m={m}"));
            }
        }
    }
    outcome(
        failed.is_empty(),
        if failed.is_empty() {
            "exact for m <= 6, antipodal within 1e-7".into()
        } else {
            format!("failed: {}", failed.join(", "))
        },
    )
}

fn normalized_recurrence() -> Outcome {
    let ok = (1..=10).all(|m| {
        q_normalized(m, DiagKind::Hyperbolic).unwrap() == hyper_diag_poly(m).unwrap()
            && q_normalized(m, DiagKind::Sphere).unwrap() == sphere_diag_poly(m).unwrap()
    });
    outcome(ok, "both families equal for m <= 10".into())
}

/// Sum of products over all k-subsets of {1², …, (m-1)²}.
fn brute_c(m: u32, k: u32) -> BigUint {
    let squares: Vec<u64> = (1..m as u64).map(|i| i * i).collect();
    let mut total = BigUint::from(0u32);
    for mask in 0u32..(1 << squares.len()) {
        if mask.count_ones() == k {
            let mut p = BigUint::from(1u32);
            for (i, s) in squares.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    p *= *s;
                }
            }
            total += p;
        }
    }
    total
}

fn elementary_symmetric() -> Outcome {
    let mut bad = Vec::new();
    for m in 1..=7 {
        for k in 0..m {
            if c_mk(m, k).unwrap() != brute_c(m, k) {
                bad.push(format!("({m},{k})"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        if bad.is_empty() {
            "all (m, k) with m <= 7 match".into()
        } else {
            format!("mismatch at {}", bad.join(" "))
        },
    )
}

fn binom(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Σ_k dim(H_k) e^{-k(k+n-1)t}` summed term by term.
fn brute_trace(n: u64, t: f64) -> f64 {
    let mut sum = 0.0;
    for k in 0u64.. {
        let mult = binom(k + n, n) - if k >= 2 { binom(k + n - 2, n) } else { 0.0 };
        let term = mult * (-((k * (k + n - 1)) as f64) * t).exp();
        sum += term;
        if k > 10 && term < 1e-18 * sum {
            break;
        }
    }
    sum
}

fn trace_expansion() -> Outcome {
    let mut worst = 0f64;
    for m in 1..=2u32 {
        let n = 2 * m + 1;
        let vol = sphere_volume(n as i64).unwrap();
        let p = sphere_diag_poly(m).unwrap();
        for &t in &[0.05, 0.1] {
            let closed = vol
                * (4.0 * PI * t).powf(-(n as f64) / 2.0)
                * ((m * m) as f64 * t).exp()
                * p.eval_f64(t);
            worst = worst.max(rel(closed, brute_trace(n as u64, t)));
        }
    }
    let leading = (1..=3).all(|m| heat_trace_coeffs(m, 0).unwrap()[0] == weyl_leading(m).unwrap());
    // Independent float check of the leading coefficient itself.
    let leading_value = (1..=3u32).all(|m| {
        let n = 2 * m + 1;
        let want = sphere_volume(n as i64).unwrap() * (4.0 * PI).powf(-(n as f64) / 2.0);
        rel(weyl_leading(m).unwrap().to_f64(), want) < 1e-14
    });
    outcome(
        worst <= 1e-10 && leading && leading_value,
        format!(
            "S^3, S^5 max rel {worst:.2e} <= 1e-10; leading coefficients exact: {}",
            leading && leading_value
        ),
    )
}

fn volterra() -> Outcome {
    let grid = TimeGrid::new(1.0, 32, Spacing::Graded).unwrap();
    let upper = SphereOddKernel::of_dim(3).unwrap();
    let table = sphere_volterra_solve(&grid, 32, &upper, &QuadratureSpec::default()).unwrap();
    let err = table.max_oracle_error;
    outcome(
        err <= 5e-4 && table.certify(5e-4).is_ok(),
        format!("max error {err:.2e} <= 5e-4"),
    )
}

fn controls() -> Outcome {
    let mut codes = Vec::new();
    for control in ["drop-exp", "perturb-2pi", "flip-sign"] {
        let status = Command::new(env!("CARGO_BIN_EXE_heatrec"))
            .args(["verify", "--control", control])
            .output()
            .expect("run heatrec")
            .status;
        codes.push((control, status.code()));
    }
    let passed = codes.iter().all(|(_, c)| *c == Some(4));
    let detail = codes
        .iter()
        .map(|(name, c)| format!("{name} -> {c:?}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(passed, detail)
}

/// Name, time budget in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

fn main() -> std::process::ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "S^3 closed form vs zonal series",
            Some(5),
            closed_form_vs_series,
        ),
        ("S^2 descent identity", Some(60), sphere_identity),
        ("H^2 from H^3 by descent", None, hyperbolic_descent),
        ("diagonal recurrences", None, diagonal_identities),
        (
            "normalized recurrence polynomials",
            None,
            normalized_recurrence,
        ),
        ("c_mk vs subset enumeration", None, elementary_symmetric),
        ("odd sphere heat trace", None, trace_expansion),
        ("S^2 Volterra solve, 32x32 graded", Some(120), volterra),
        ("negative controls exit 4", None, controls),
    ];
    let mut all = true;
    for (i, (name, budget, f)) in criteria.iter().enumerate() {
        let o = timed(budget.map(Duration::from_secs), f);
        all &= o.passed;
        println!(
            "{} criterion {}: {name} ({})",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
    }
    if all {
        std::process::ExitCode::SUCCESS
    } else {
        std::process::ExitCode::FAILURE
    }
}
