//! The subcommands. Each one reads the config, runs one experiment, writes
//! its data files and returns the values that go into `report.json`.

use clap::Subcommand;
use nalgebra::DVector;
use serde_json::{json, Value};
use twist_green::geometry::{self, ConeOptions, GeometryError};
use twist_green::green::{self, GreenError, GreenOptions, SpectrumOptions};
use twist_green::io;
use twist_green::rng::stream;
use twist_green::selftest;
use twist_green::symplectic::{c0, SymplecticError};
use twist_green::twist::{self, TwistError};
use twist_green::variational::{self, Configuration, MultiStart, OrbitSegment, VariationalError};
use twist_green::weak_kam::{self, Kind, WeakKamError};
use twist_green::{AnnulusPoint, GeneratingFunction, SymplecticSpace};

use crate::config::ExperimentConfig;
use crate::report::{CommandOutput, OutputDir};
use crate::{CliError, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Minimizing periodic orbit (or a given fixed point) and its Hessian.
    OrbitMin,
    /// Green bundles along the orbit.
    Green,
    /// Lyapunov spectrum along the orbit.
    Lyapunov,
    /// Zero exponents against the Green intersection dimension.
    VerifyThm1,
    /// Lower bound on the smallest positive exponent from the Green gap.
    VerifyThm2,
    /// Calibrated subactions on a grid and the sets they determine.
    Weakkam,
    /// Action potential between two points.
    Mane,
    /// Limit contingent cones of the orbit samples.
    Cone,
    /// Cone directions between the widened Green bundles.
    VerifyCone,
    /// Random instances of the band construction.
    PbilinSelftest,
    /// Random instances of the Lagrangian order relations.
    AppendixSelftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::OrbitMin => "orbit-min",
            Command::Green => "green",
            Command::Lyapunov => "lyapunov",
            Command::VerifyThm1 => "verify-thm1",
            Command::VerifyThm2 => "verify-thm2",
            Command::Weakkam => "weakkam",
            Command::Mane => "mane",
            Command::Cone => "cone",
            Command::VerifyCone => "verify-cone",
            Command::PbilinSelftest => "pbilin-selftest",
            Command::AppendixSelftest => "appendix-selftest",
        }
    }
}

// ---------------------------------------------------------------------------
// Error classification: bad input is a config problem, anything else that
// the numerics raise counts as non-convergence.

fn twist_is_input(e: &TwistError) -> bool {
    matches!(e, TwistError::InvalidParameters(_))
}

fn variational_is_input(e: &VariationalError) -> bool {
    match e {
        VariationalError::InvalidInput(_) => true,
        VariationalError::Twist(t) => twist_is_input(t),
        _ => false,
    }
}

fn symplectic_is_input(e: &SymplecticError) -> bool {
    matches!(e, SymplecticError::Dimension(_))
}

trait Classify: std::fmt::Display {
    fn is_input(&self) -> bool;
}

impl Classify for VariationalError {
    fn is_input(&self) -> bool {
        variational_is_input(self)
    }
}

impl Classify for TwistError {
    fn is_input(&self) -> bool {
        twist_is_input(self)
    }
}

impl Classify for WeakKamError {
    fn is_input(&self) -> bool {
        match self {
            WeakKamError::InvalidGrid(_) => true,
            WeakKamError::Variational(v) => variational_is_input(v),
            WeakKamError::NoConvergence { .. } => false,
        }
    }
}

impl Classify for GreenError {
    fn is_input(&self) -> bool {
        match self {
            GreenError::Twist(t) => twist_is_input(t),
            GreenError::Variational(v) => variational_is_input(v),
            GreenError::Symplectic(s) => symplectic_is_input(s),
            _ => false,
        }
    }
}

impl Classify for GeometryError {
    fn is_input(&self) -> bool {
        match self {
            GeometryError::InsufficientSamples { .. } => true,
            GeometryError::Twist(t) => twist_is_input(t),
            GeometryError::Variational(v) => variational_is_input(v),
            GeometryError::Symplectic(s) => symplectic_is_input(s),
            _ => false,
        }
    }
}

fn ctx<E: Classify>(op: &'static str) -> impl Fn(E) -> CliError {
    move |e| {
        if e.is_input() {
            CliError::Config(format!("{op}: {e}"))
        } else {
            CliError::Numerical {
                op,
                message: e.to_string(),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Shared pieces.

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn multistart(cfg: &ExperimentConfig, seed: u64) -> MultiStart {
    let d = MultiStart::default();
    MultiStart {
        starts: cfg.orbit.starts.unwrap_or(d.starts),
        perturbation: cfg.orbit.perturbation.unwrap_or(d.perturbation),
        seed,
    }
}

struct BuiltOrbit {
    orbit: OrbitSegment,
    config: Configuration,
    mean_action: f64,
    min_hessian_eig: f64,
}

fn build_orbit(s: &GeneratingFunction, cfg: &ExperimentConfig, seed: u64) -> Result<BuiltOrbit, CliError> {
    let n = s.n();
    if let Some(q) = &cfg.orbit.fixed {
        let config = Configuration::periodic(vec![DVector::from_column_slice(q)], vec![0; n]);
        let orbit = variational::config_to_orbit(s, &config).map_err(|e| match e {
            VariationalError::NotCritical { gradient } => {
                CliError::Config(format!("orbit.fixed is not a fixed point (gradient {gradient:e})"))
            }
            other => ctx("variational::config_to_orbit")(other),
        })?;
        let mean_action = variational::action(s, &config, 0.0);
        let chain = Configuration::fixed(vec![config.point(0), config.point(1), config.point(2)]);
        let h = variational::hessian_fixed_ends(s, &chain).map_err(ctx("variational::hessian_fixed_ends"))?;
        return Ok(BuiltOrbit {
            orbit,
            config,
            mean_action,
            min_hessian_eig: h.min_eigenvalue,
        });
    }
    let rho = cfg.orbit.rho.clone().unwrap_or_else(|| vec![0; n]);
    let period = cfg.orbit.period.unwrap_or(1);
    let m = variational::minimize_periodic(s, &rho, period, None, &multistart(cfg, seed))
        .map_err(ctx("variational::minimize_periodic"))?;
    let orbit = variational::config_to_orbit(s, &m.config).map_err(ctx("variational::config_to_orbit"))?;
    Ok(BuiltOrbit {
        orbit,
        config: m.config,
        mean_action: m.mean_action,
        min_hessian_eig: m.min_hessian_eig,
    })
}

fn green_options(cfg: &ExperimentConfig) -> GreenOptions {
    GreenOptions {
        tol: cfg.green.tol,
        k_max: cfg.green.k_max,
        richardson: cfg.green.richardson,
    }
}

fn spectrum_options(cfg: &ExperimentConfig) -> SpectrumOptions {
    let mut o = SpectrumOptions::new(cfg.spectrum.iterations);
    o.warmup = cfg.spectrum.warmup;
    o.tau = cfg.spectrum.tau;
    o
}

fn cone_options(cfg: &ExperimentConfig) -> ConeOptions {
    ConeOptions {
        r0: cfg.cone.r0,
        levels: cfg.cone.levels,
        cluster_degrees: cfg.cone.cluster_degrees,
        min_pairs: cfg.cone.min_pairs,
        neighbor_count: cfg.cone.neighbor_count,
    }
}

fn green_tolerances(cfg: &ExperimentConfig) -> Value {
    json!({"green_tol": cfg.green.tol, "green_k_max": cfg.green.k_max})
}

fn spectrum_summary(r: &green::SpectrumReport) -> Value {
    json!({
        "exponents": r.exponents,
        "tau": r.tau,
        "counts": {"positive": r.pos_count, "zero": r.zero_count, "negative": r.neg_count},
        "pairing_defect": r.pairing_defect,
        "iterations": r.iterations,
        "warmup": r.warmup,
    })
}

fn green_summary(greens: &[green::GreenData]) -> Value {
    Value::Array(
        greens
            .iter()
            .map(|g| {
                json!({
                    "index": g.index,
                    "p_dim": g.p_dim,
                    "q_plus": g.q_plus_val,
                    "k_used": g.k_used,
                    "extrapolated": g.extrapolated,
                    "achieved_tol": g.achieved_tol,
                })
            })
            .collect(),
    )
}

fn orbit_summary(b: &BuiltOrbit) -> Value {
    json!({
        "points": b.orbit.len(),
        "period": b.orbit.period(),
        "mean_action": b.mean_action,
        "min_hessian_eig": b.min_hessian_eig,
    })
}

fn write_orbit_files(dir: &mut OutputDir, b: &BuiltOrbit) -> Result<(), CliError> {
    dir.write("configuration.csv", |w| io::write_configuration_csv(w, &b.config))?;
    dir.write("orbit.csv", |w| io::write_orbit_csv(w, &b.orbit))
}

// ---------------------------------------------------------------------------
// Subcommands.

fn orbit_min(cfg: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let s = cfg.generating_function()?;
    let b = build_orbit(&s, cfg, seed)?;
    write_orbit_files(dir, &b)?;
    let scale = s.max_hess_qq().max(s.max_hess_big_q_big_q()).max(1.0);
    let hessian_ok = b.min_hessian_eig >= -1e-8 * scale;
    let mut outputs = orbit_summary(&b);
    let mut strong_ok = true;
    if let Some(count) = cfg.orbit.competitors {
        let lbar = cfg.weakkam.lbar.unwrap_or(b.mean_action);
        let mut rng = stream(seed, 1);
        let check = variational::check_strong_min(&s, &b.config, lbar, count, &mut rng)
            .map_err(ctx("variational::check_strong_min"))?;
        strong_ok = check.is_ok();
        outputs["strong_min"] = serde_json::to_value(&check).expect("serializes");
        outputs["strong_min_lbar"] = json!(lbar);
    }
    Ok(CommandOutput {
        verdict: Verdict::from_bool(hessian_ok && strong_ok),
        tolerances: json!({"hessian_psd": 1e-8 * scale, "strong_min": 1e-8}),
        outputs,
    })
}

fn green_cmd(cfg: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let s = cfg.generating_function()?;
    let b = build_orbit(&s, cfg, seed)?;
    let greens = green::green_bundles_along(&s, &b.orbit, None, &green_options(cfg))
        .map_err(ctx("green::green_bundles_along"))?;
    let defect = green::invariance_defect(&s, &b.orbit, &greens).map_err(ctx("green::invariance_defect"))?;
    write_orbit_files(dir, &b)?;
    dir.write("green.csv", |w| io::write_green_csv(w, &greens))?;
    Ok(CommandOutput {
        verdict: Verdict::Pass,
        tolerances: green_tolerances(cfg),
        outputs: json!({
            "orbit": orbit_summary(&b),
            "green": green_summary(&greens),
            "invariance_defect": defect,
        }),
    })
}

fn lyapunov_cmd(cfg: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let s = cfg.generating_function()?;
    let b = build_orbit(&s, cfg, seed)?;
    let r = green::lyapunov_spectrum(&s, &b.orbit, &spectrum_options(cfg)).map_err(ctx("green::lyapunov_spectrum"))?;
    dir.write("spectrum.csv", |w| io::write_spectrum_csv(w, &r))?;
    Ok(CommandOutput {
        verdict: Verdict::Pass,
        tolerances: json!({"tau": r.tau}),
        outputs: json!({"orbit": orbit_summary(&b), "spectrum": spectrum_summary(&r)}),
    })
}

fn verify_thm1(cfg: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let s = cfg.generating_function()?;
    let b = build_orbit(&s, cfg, seed)?;
    let r = green::verify_thm1(&s, &b.orbit, &spectrum_options(cfg), &green_options(cfg))
        .map_err(ctx("green::verify_thm1"))?;
    dir.write("green.csv", |w| io::write_green_csv(w, &r.greens))?;
    dir.write("spectrum.csv", |w| io::write_spectrum_csv(w, &r.spectrum))?;
    let mut outputs = json!({
        "n": r.n,
        "p": r.p,
        "p_per_point": r.p_per_point,
        "spectrum": spectrum_summary(&r.spectrum),
        "thm1_pass": r.pass,
    });
    let mut pass = r.pass;
    if r.p > 0 && r.p < r.n {
        let red = green::reduced_green_diagnostics(
            &s,
            &b.orbit,
            &r.greens,
            cfg.green.tol,
            cfg.green.k_chain,
            cfg.green.k_limit,
        )
        .map_err(ctx("green::reduced_green_diagnostics"))?;
        pass &= red.pass;
        outputs["reduced"] = serde_json::to_value(&red).expect("serializes");
    }
    Ok(CommandOutput {
        verdict: Verdict::from_bool(pass),
        tolerances: json!({
            "green_tol": cfg.green.tol,
            "tau": r.spectrum.tau,
            "reduced_limit_tol": 10.0 * cfg.green.tol,
        }),
        outputs,
    })
}

fn verify_thm2(cfg: &ExperimentConfig, seed: u64, _dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let s = cfg.generating_function()?;
    let b = build_orbit(&s, cfg, seed)?;
    let tolerances = json!({"slack_tol": cfg.thm2.tol, "green_tol": cfg.green.tol});
    match green::verify_thm2(&s, &b.orbit, &spectrum_options(cfg), &green_options(cfg), cfg.thm2.tol) {
        Ok(r) => Ok(CommandOutput {
            verdict: Verdict::from_bool(r.pass),
            tolerances,
            outputs: serde_json::to_value(&r).expect("serializes"),
        }),
        Err(GreenError::SkippedAllZero) => Ok(CommandOutput {
            verdict: Verdict::Skipped,
            tolerances,
            outputs: json!({"reason": GreenError::SkippedAllZero.to_string()}),
        }),
        Err(e) => Err(ctx("green::verify_thm2")(e)),
    }
}

fn weakkam_cmd(cfg: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let s = cfg.generating_function()?;
    let w = &cfg.weakkam;
    let (lbar, mather) = match w.lbar {
        Some(l) => (l, None),
        None => {
            let e = weak_kam::estimate_lbar(&s, w.lbar_max_period).map_err(ctx("weak_kam::estimate_lbar"))?;
            (e.lbar, Some(e.config))
        }
    };
    let u = weak_kam::solve_calibrated(&s, Kind::Backward, lbar, w.resolution, w.tol, w.max_iters)
        .map_err(ctx("weak_kam::solve_calibrated"))?;
    let pair = weak_kam::conjugate_pair(&s, &u, lbar, w.tol, w.max_iters).map_err(ctx("weak_kam::conjugate_pair"))?;
    let mut rng = stream(seed, 2);
    let violation = weak_kam::subaction_violation(&s, &u, lbar, w.pairs, &mut rng);
    let contact = mather.as_ref().map(|c| weak_kam::contact_defect(&s, &u, c, lbar));
    dir.write("u_minus.csv", |f| io::write_grid_csv(f, &pair.u_minus))?;
    dir.write("u_minus.bin", |f| io::write_grid_binary(f, &pair.u_minus))?;
    dir.write("u_plus.csv", |f| io::write_grid_csv(f, &pair.u_plus))?;
    dir.write("u_plus.bin", |f| io::write_grid_binary(f, &pair.u_plus))?;
    let pass = u.residual <= w.tol
        && violation <= w.violation_tol
        && pair.order_defect <= w.violation_tol
        && contact.is_none_or(|d| d <= w.violation_tol);
    Ok(CommandOutput {
        verdict: Verdict::from_bool(pass),
        tolerances: json!({"increment": w.tol, "violation": w.violation_tol, "coincidence": pair.tol_coincidence}),
        outputs: json!({
            "lbar": lbar,
            "lbar_estimated": mather.is_some(),
            "sweeps": u.sweeps,
            "increment": u.residual,
            "subaction_violation": violation,
            "order_defect": pair.order_defect,
            "coincidence_nodes": pair.coincidence.len(),
            "coincidence_points": pair.coincidence.iter().map(|&i| vec_of(&u.node(i))).collect::<Vec<_>>(),
            "mather_contact_defect": contact,
        }),
    })
}

fn mane_cmd(cfg: &ExperimentConfig, _seed: u64, dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let s = cfg.generating_function()?;
    let n = s.n();
    let m = &cfg.mane;
    let x = DVector::from_vec(m.x.clone().unwrap_or_else(|| vec![0.0; n]));
    let y = DVector::from_vec(m.y.clone().unwrap_or_else(|| vec![0.0; n]));
    let r = variational::mane_potential(&s, &x, &y, m.m, m.lbar).map_err(ctx("variational::mane_potential"))?;
    let mut z = AnnulusPoint::new(x.clone(), -&r.super_x);
    for _ in 0..m.m {
        z = twist::forward(&s, &z).map_err(ctx("twist::forward"))?;
    }
    let vertical_err = (&z.q - &y).amax().max((&z.p - &r.super_y).amax());
    dir.write("minimizer.csv", |w| io::write_configuration_csv(w, &r.minimizer))?;
    Ok(CommandOutput {
        verdict: Verdict::from_bool(vertical_err <= m.tol),
        tolerances: json!({"vertical_identity": m.tol}),
        outputs: json!({
            "value": r.value,
            "super_x": vec_of(&r.super_x),
            "super_y": vec_of(&r.super_y),
            "vertical_identity_error": vertical_err,
        }),
    })
}

fn cone_samples(
    s: &GeneratingFunction,
    cfg: &ExperimentConfig,
    seed: u64,
    b: &BuiltOrbit,
) -> Result<Vec<AnnulusPoint>, CliError> {
    let mut samples = b.orbit.points.clone();
    for extra in &cfg.cone.extra_orbits {
        let m = variational::minimize_periodic(s, &extra.rho, extra.period, None, &multistart(cfg, seed))
            .map_err(ctx("variational::minimize_periodic"))?;
        let o = variational::config_to_orbit(s, &m.config).map_err(ctx("variational::config_to_orbit"))?;
        samples.extend(o.points);
    }
    Ok(samples)
}

fn cone_cmd(cfg: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let s = cfg.generating_function()?;
    let b = build_orbit(&s, cfg, seed)?;
    let samples = cone_samples(&s, cfg, seed, &b)?;
    let opts = cone_options(cfg);
    let space = SymplecticSpace::new(s.n());
    let cones = b
        .orbit
        .points
        .iter()
        .map(|a| geometry::limit_contingent_cone(&samples, a, &opts))
        .collect::<Result<Vec<_>, _>>()
        .map_err(ctx("geometry::limit_contingent_cone"))?;
    let isotropy: Vec<Value> = cones
        .iter()
        .map(|c| serde_json::to_value(geometry::c1_isotropic_check(c, &space, cfg.cone.tol)).expect("serializes"))
        .collect();
    dir.write("cone_directions.csv", |w| io::write_cone_samples_csv(w, &cones))?;
    Ok(CommandOutput {
        verdict: Verdict::Pass,
        tolerances: json!({"isotropy": cfg.cone.tol}),
        outputs: json!({
            "samples": samples.len(),
            "bases": cones.len(),
            "directions_per_base": cones.iter().map(|c| c.directions.len()).collect::<Vec<_>>(),
            "radii": opts.radii(),
            "isotropy": isotropy,
        }),
    })
}

fn verify_cone(cfg: &ExperimentConfig, seed: u64, dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let s = cfg.generating_function()?;
    let b = build_orbit(&s, cfg, seed)?;
    let samples = cone_samples(&s, cfg, seed, &b)?;
    let greens = green::green_bundles_along(&s, &b.orbit, None, &green_options(cfg))
        .map_err(ctx("green::green_bundles_along"))?;
    let r = geometry::verify_cone_theorem(&samples, &greens, &cone_options(cfg), cfg.cone.tol)
        .map_err(ctx("geometry::verify_cone_theorem"))?;
    dir.write("cone.csv", |w| io::write_cone_csv(w, &r))?;
    dir.write("green.csv", |w| io::write_green_csv(w, &greens))?;
    Ok(CommandOutput {
        verdict: Verdict::from_bool(r.all_pass()),
        tolerances: json!({"widening": cfg.cone.tol, "c0": c0(), "green_tol": cfg.green.tol}),
        outputs: json!({
            "bases": r.bases,
            "checked": r.checked,
            "passed": r.passed,
            "pass_rate": r.pass_rate,
            "worst_margin": r.worst_margin,
        }),
    })
}

fn pbilin_selftest(cfg: &ExperimentConfig, seed: u64, _dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let t = &cfg.selftest;
    let dims = t.dims.clone().unwrap_or_else(|| (1..=6).collect());
    let r = selftest::pbilin_suite(seed, t.instances, &dims);
    Ok(CommandOutput {
        verdict: Verdict::from_bool(r.pass(t.band_tol, t.residual_tol, 1e-15)),
        tolerances: json!({"band": t.band_tol, "residual": t.residual_tol, "c0_identity": 1e-15}),
        outputs: json!({"dims": dims, "suite": serde_json::to_value(&r).expect("serializes")}),
    })
}

fn appendix_selftest(cfg: &ExperimentConfig, seed: u64, _dir: &mut OutputDir) -> Result<CommandOutput, CliError> {
    let t = &cfg.selftest;
    let dims = t.dims.clone().unwrap_or_else(|| vec![1, 2, 3]);
    let suites = selftest::appendix_suite(seed, t.instances, &dims, t.slack);
    Ok(CommandOutput {
        verdict: Verdict::from_bool(suites.iter().all(|o| o.pass())),
        tolerances: json!({"slack": t.slack}),
        outputs: json!({"dims": dims, "suites": serde_json::to_value(&suites).expect("serializes")}),
    })
}

/// Run one subcommand and write its files into `dir`.
pub fn run(
    command: Command,
    cfg: &ExperimentConfig,
    seed: u64,
    dir: &mut OutputDir,
) -> Result<CommandOutput, CliError> {
    let f = match command {
        Command::OrbitMin => orbit_min,
        Command::Green => green_cmd,
        Command::Lyapunov => lyapunov_cmd,
        Command::VerifyThm1 => verify_thm1,
        Command::VerifyThm2 => verify_thm2,
        Command::Weakkam => weakkam_cmd,
        Command::Mane => mane_cmd,
        Command::Cone => cone_cmd,
        Command::VerifyCone => verify_cone,
        Command::PbilinSelftest => pbilin_selftest,
        Command::AppendixSelftest => appendix_selftest,
    };
    f(cfg, seed, dir)
}
