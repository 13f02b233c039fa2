//! End-to-end acceptance checks. Runs without the libtest harness so that
//! every criterion prints its own line; exits nonzero if any fails.

mod common;

use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng;
use twist_green::geometry::{c1_isotropic_check, contingent_cone, verify_cone_theorem, ConeOptions};
use twist_green::green::{
    green_bundles_along, green_iterates, lyapunov_spectrum, reduced_green_diagnostics, verify_thm1, verify_thm2,
    GreenOptions, SpectrumOptions,
};
use twist_green::rng::stream;
use twist_green::selftest::{appendix_suite, pbilin_suite};
use twist_green::symplectic::between_check;
use twist_green::twist::forward;
use twist_green::variational::{mane_potential, OrbitSegment};
use twist_green::weak_kam::{
    conjugate_pair, contact_defect, estimate_lbar, solve_calibrated, subaction_violation, Kind,
};
use twist_green::{AnnulusPoint, GeneratingFunction, LagrangianFrame, SymplecticSpace};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn golden_log() -> f64 {
    ((3.0 + 5f64.sqrt()) / 2.0).ln()
}

fn criterion_1() -> Outcome {
    let s = GeneratingFunction::integrable(1);
    let orbit = common::fixed_orbit(&s, &[0.0]);
    let it = &green_iterates(&s, &orbit, 1000, Some(&[0])).unwrap()[0];
    let iter_err = (1..=1000)
        .map(|k| {
            let want = 1.0 / k as f64;
            (it.forward[k - 1][(0, 0)] - want)
                .abs()
                .max((it.backward[k - 1][(0, 0)] + want).abs())
        })
        .fold(0.0, f64::max);
    let spec = lyapunov_spectrum(&s, &orbit, &SpectrumOptions::new(10_000)).unwrap();
    let max_exp = spec.exponents.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let t1 = verify_thm1(&s, &orbit, &SpectrumOptions::new(10_000), &GreenOptions::default()).unwrap();
    outcome(
        iter_err <= 1e-12 && max_exp <= 2e-3 && t1.pass && t1.p == 1,
        format!(
            "max|s_k-1/k|={iter_err:.2e} max|λ|={max_exp:.2e} thm1 p={} pass={}",
            t1.p, t1.pass
        ),
    )
}

fn criterion_2() -> Outcome {
    let s = GeneratingFunction::standard(1.0);
    let orbit = common::fixed_orbit(&s, &[0.5]);
    let sp = SpectrumOptions::new(10_000);
    let spec = lyapunov_spectrum(&s, &orbit, &sp).unwrap();
    let oracle = common::monodromy_exponents(&s, &orbit);
    let exp_err = spec
        .exponents
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .chain([
            (spec.exponents[0] - golden_log()).abs(),
            (spec.exponents[1] + golden_log()).abs(),
        ])
        .fold(0.0, f64::max);
    let g = &green_bundles_along(&s, &orbit, None, &GreenOptions::default()).unwrap()[0];
    let (stable, unstable) = common::golden_slopes();
    let slope_err = (g.s_minus[(0, 0)] - stable)
        .abs()
        .max((g.s_plus[(0, 0)] - unstable).abs());
    let t1 = verify_thm1(&s, &orbit, &sp, &GreenOptions::default()).unwrap();
    let t2 = verify_thm2(&s, &orbit, &sp, &GreenOptions::default(), 1e-6).unwrap();
    outcome(
        exp_err <= 1e-6 && slope_err <= 1e-8 && t1.pass && t1.p == 0 && t2.slack >= -1e-6 && t2.bound > 0.0,
        format!(
            "exponent err={exp_err:.2e} slope err={slope_err:.2e} thm1 p={} bound={:.6} slack={:.6}",
            t1.p, t2.bound, t2.slack
        ),
    )
}

fn criterion_3() -> Outcome {
    let s = GeneratingFunction::product(1.0, 0.0);
    let orbit = common::fixed_orbit(&s, &[0.5, 0.3]);
    let iterations = 100_000;
    let mut sp = SpectrumOptions::new(iterations);
    sp.tau = Some(10.0 / iterations as f64);
    let tol = GreenOptions::default().tol;
    let t1 = verify_thm1(&s, &orbit, &sp, &GreenOptions::default()).unwrap();
    let e = &t1.spectrum.exponents;
    let tau = t1.spectrum.tau;
    let shape = (e[0] - golden_log()).abs() <= tau
        && e[1].abs() <= tau
        && e[2].abs() <= tau
        && (e[3] + golden_log()).abs() <= tau;
    let red = reduced_green_diagnostics(&s, &orbit, &t1.greens, tol, 10, 60).unwrap();
    outcome(
        t1.pass && t1.p == 1 && shape && red.chain_ok && red.limits_ok && red.pass,
        format!(
            "thm1 p={} spectrum={:?} τ={tau:.0e} chain={} limits={} (±{:.1e}/{:.1e})",
            t1.p,
            e.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>(),
            red.chain_ok,
            red.limits_ok,
            red.limit_minus_error,
            red.limit_plus_error
        ),
    )
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn criterion_4() -> Outcome {
    let mut cases = 0;
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for eps in [0.3, 0.7, 1.2] {
        let s = GeneratingFunction::standard(eps);
        for period in 1..=5usize {
            for rho in 0..period as i64 {
                if gcd(rho, period as i64) != 1 {
                    continue;
                }
                cases += 1;
                let orbit = common::periodic_orbit(&s, &[rho], period);
                match verify_thm2(
                    &s,
                    &orbit,
                    &SpectrumOptions::new(20_000),
                    &GreenOptions::default(),
                    1e-6,
                ) {
                    Ok(r) => {
                        worst = worst.min(r.slack);
                        if r.slack < -1e-6 {
                            failures.push(format!("ε={eps} {rho}/{period} slack={:.2e}", r.slack));
                        }
                    }
                    Err(e) => failures.push(format!("ε={eps} {rho}/{period}: {e}")),
                }
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{cases} orbits, worst slack={worst:.3e} {}", failures.join("; ")),
    )
}

fn criterion_5() -> Outcome {
    let suites = appendix_suite(20_251_019, 1000, &[1, 2, 3], 1e-9);
    let pass = suites.iter().all(|o| o.pass() && o.instances == 1000);
    let detail = suites
        .iter()
        .map(|o| format!("{}: {}/{} ok", o.name, o.instances - o.failures, o.instances))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, detail)
}

fn criterion_6() -> Outcome {
    let r = pbilin_suite(20_251_019, 1000, &[1, 2, 3, 4, 5, 6]);
    let c = 13f64.sqrt() / 3.0 - 5.0 / 6.0;
    let identity = 0.75 * c * c + 1.25 * c - 9.0 / 16.0;
    outcome(
        r.pass(1e-9, 1e-10, 1e-15) && identity.abs() <= 1e-15,
        format!(
            "{} instances, failures={}, min band slack={:.2e}, max residual={:.2e}, c0 identity={:.1e}",
            r.instances, r.failures, r.min_band_slack, r.max_residual, identity
        ),
    )
}

fn criterion_7() -> Outcome {
    let eps = 0.5;
    let s = GeneratingFunction::standard(eps);
    let est = estimate_lbar(&s, 5).unwrap();
    let lbar = est.lbar;
    let lbar_err = (lbar + eps / (4.0 * std::f64::consts::PI.powi(2))).abs();
    let u = match solve_calibrated(&s, Kind::Backward, lbar, 256, 1e-8, 10_000) {
        Ok(u) => u,
        Err(e) => return outcome(false, format!("solve_calibrated: {e}")),
    };
    let mut rng = stream(7, 0);
    let violation = subaction_violation(&s, &u, lbar, 10_000, &mut rng);
    let pair = conjugate_pair(&s, &u, lbar, 1e-8, 10_000).unwrap();
    let half = u.nearest_node(&DVector::from_vec(vec![0.5]));
    let has_half = pair.coincidence.contains(&half);
    let defect = contact_defect(&s, &u, &est.config, lbar);
    outcome(
        u.sweeps <= 10_000 && u.residual <= 1e-8 && violation <= 2e-8 && has_half && defect <= 2e-8 && lbar_err < 1e-10,
        format!(
            "sweeps={} increment={:.1e} subaction violation={:.1e} ½ in coincidence={has_half} contact defect={:.1e}",
            u.sweeps, u.residual, violation, defect
        ),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = stream(8, 0);
    let integ = GeneratingFunction::integrable(2);
    let mut closed_err: f64 = 0.0;
    for m in 1..=20 {
        let x = DVector::from_fn(2, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(2, |_, _| rng.random_range(-1.0..2.0));
        let r = mane_potential(&integ, &x, &y, m, 0.0).unwrap();
        closed_err = closed_err.max((r.value - (&y - &x).norm_squared() / (2.0 * m as f64)).abs());
    }
    let s = GeneratingFunction::standard(1.0);
    let lbar = -1.0 / (4.0 * std::f64::consts::PI.powi(2));
    let v1 = |x: f64| DVector::from_vec(vec![x]);
    let mut triangle: f64 = f64::NEG_INFINITY;
    let mut vertical: f64 = 0.0;
    for _ in 0..200 {
        let (x, y, z) = (
            v1(rng.random_range(0.0..1.0)),
            v1(rng.random_range(-1.0..2.0)),
            v1(rng.random_range(-1.0..2.0)),
        );
        let (m1, m2) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let a = mane_potential(&s, &x, &y, m1, lbar).unwrap();
        let b = mane_potential(&s, &y, &z, m2, lbar).unwrap();
        let c = mane_potential(&s, &x, &z, m1 + m2, lbar).unwrap();
        triangle = triangle.max(c.value - a.value - b.value);
        let mut p = AnnulusPoint::new(x.clone(), -a.super_x.clone());
        for _ in 0..m1 {
            p = forward(&s, &p).unwrap();
        }
        vertical = vertical.max((p.q[0] - y[0]).abs()).max((p.p[0] - a.super_y[0]).abs());
    }
    outcome(
        closed_err <= 1e-9 && triangle <= 1e-8 && vertical <= 1e-8,
        format!("closed form err={closed_err:.1e} triangle excess={triangle:.1e} vertical identity err={vertical:.1e}"),
    )
}

fn cone_case(s: &GeneratingFunction, samples: &[AnnulusPoint], orbit: &OrbitSegment) -> (usize, usize) {
    let greens = green_bundles_along(s, orbit, None, &GreenOptions::default()).unwrap();
    let r = verify_cone_theorem(samples, &greens, &ConeOptions::default(), 1e-6).unwrap();
    (r.passed, r.checked)
}

fn criterion_9() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;

    let integ = GeneratingFunction::integrable(1);
    let circle = common::periodic_orbit(&integ, &[61], 200);
    let (ok, total) = cone_case(&integ, &circle.points, &circle);
    pass &= ok == total && total > 0;
    parts.push(format!("integrable {ok}/{total}"));
    let cone = contingent_cone(&circle.points, &circle.points[0], &ConeOptions::default()).unwrap();
    let iso = c1_isotropic_check(&cone, &SymplecticSpace::new(1), 1e-9);
    pass &= iso.isotropic;
    parts.push(format!("isotropic={}", iso.isotropic));

    let std = GeneratingFunction::standard(1.0);
    let fixed = common::fixed_orbit(&std, &[0.5]);
    let mut samples = fixed.points.clone();
    for (rho, period) in [(1i64, 24usize), (-1, 24), (1, 32), (-1, 32)] {
        let o = common::periodic_orbit(&std, &[rho], period);
        samples.extend(o.points.iter().cloned());
    }
    let (ok, total) = cone_case(&std, &samples, &fixed);
    pass &= ok == total && total > 0;
    parts.push(format!("hyperbolic {ok}/{total}"));

    let prod = GeneratingFunction::product(1.0, 0.0);
    let torus = common::periodic_orbit(&prod, &[0, 61], 200);
    let (ok, total) = cone_case(&prod, &torus.points, &torus);
    pass &= ok == total && total > 0;
    parts.push(format!("product {ok}/{total}"));

    outcome(pass, parts.join(", "))
}

fn criterion_10() -> Outcome {
    let mut rng = stream(10, 0);
    let (mut decided, mut disagreements, mut tried) = (0, 0, 0);
    while decided < 200 && tried < 5000 {
        tried += 1;
        let n = 1 + tried % 3;
        let (v, wm, wp) = common::between_instance(&mut rng, n);
        let Some(want) = common::between_oracle(&v, &wm, &wp) else {
            continue;
        };
        decided += 1;
        let lm = LagrangianFrame::graph(wm).unwrap();
        let lp = LagrangianFrame::graph(wp).unwrap();
        if between_check(&v, &lm, &lp).unwrap() != want {
            disagreements += 1;
        }
    }
    outcome(
        decided == 200 && disagreements == 0,
        format!(
            "{decided} decided instances ({} ambiguous skipped), {disagreements} disagreements",
            tried - decided
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("integrable map", criterion_1, Duration::from_secs(1)),
        ("hyperbolic fixed point", criterion_2, Duration::from_secs(1)),
        ("product map", criterion_3, Duration::from_secs(30)),
        ("exponent bound sweep", criterion_4, Duration::from_secs(120)),
        ("order relation suite", criterion_5, Duration::from_secs(30)),
        ("band construction suite", criterion_6, Duration::from_secs(10)),
        ("weak KAM", criterion_7, Duration::from_secs(120)),
        ("action potential", criterion_8, Duration::from_secs(60)),
        ("cone theorem", criterion_9, Duration::from_secs(60)),
        ("betweenness oracle", criterion_10, Duration::MAX),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let label = format!("criterion {}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| label.ends_with(f.as_str()) || name.contains(f.as_str()))
        {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = o.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget_note = if *budget == Duration::MAX {
            String::new()
        } else {
            format!(" / {:.0} s", budget.as_secs_f64())
        };
        println!(
            "{label:>12} {} {name}: {} [{:.2} s{budget_note}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
