//! Command execution: dispatches a validated configuration to the library,
//! assembles the report sections, and decides pass/fail.

use phaselab_core::dynamics::{
    liouville_drift, FlowSpec, FlowSystem, Observable, Region, SeparableSystem,
};
use phaselab_core::families::ParamPoint;
use phaselab_core::holonomy::{
    berry_phase, default_residual_tol, hannay_holonomy, relation_report, HannayAngles,
    HolonomyReport, OracleComparison, ParamLoop,
};
use phaselab_core::koopman::{
    composition_apply, evolve, FourierState, KoopmanPropagator, ModeVector, DEFAULT_TRUNCATION,
};
use phaselab_core::oracles::{
    adiabatic_hannay_oracle, convergence_sweep, AdiabaticOracle, ConvergenceVerdict,
    OracleOptions,
};
use phaselab_core::projective::{
    aa_phase_from_evolution, default_closure_tol, discrete_holonomy, sample_evolution_rays,
    StateLoop,
};
use phaselab_core::rng::SplitMix64;
use num_complex::Complex;

use crate::config::{
    build_family, build_loop, build_modes, mu_slice, quadrature, segments, BuiltFamily, Command,
    ConfigError, RawConfig, RegionSpec, SystemSpec,
};
use crate::report::Json;

/// Failure modes of a run, mapped onto exit codes by `main`.
#[derive(Debug)]
pub enum RunError {
    /// Exit 2.
    Config(ConfigError),
    /// Exit 1; printed verbatim.
    Module(phaselab_core::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<phaselab_core::Error> for RunError {
    fn from(e: phaselab_core::Error) -> Self {
        RunError::Module(e)
    }
}

pub struct RunOutcome {
    pub results: Json,
    pub oracle: Option<Json>,
    pub convergence: Option<Json>,
    pub work: Json,
    pub pass: bool,
    /// One-line human summary for stdout.
    pub summary: String,
    /// Optional flat tables `(file stem suffix, csv text)`.
    pub tables: Vec<(String, String)>,
}

pub fn execute(command: Command, raw: &RawConfig, seed: u64) -> Result<RunOutcome, RunError> {
    match command {
        Command::Hannay => run_hannay(raw),
        Command::Berry => run_berry(raw),
        Command::VerifyRelation => run_verify_relation(raw),
        Command::AaPhase => run_aa_phase(raw),
        Command::KoopmanCheck => run_koopman_check(raw, seed),
        Command::LiouvilleCheck => run_liouville_check(raw, seed),
        Command::Resonance => run_resonance(raw),
    }
}

fn require<'a, V>(field: &'a Option<V>, name: &str, command: Command) -> Result<&'a V, ConfigError> {
    field.as_ref().ok_or_else(|| {
        ConfigError(format!("field `{name}` is required for command `{}`", command.name()))
    })
}

fn param_point(coords: &[f64], name: &str) -> Result<ParamPoint<f64>, RunError> {
    ParamPoint::new(coords.to_vec()).map_err(RunError::Module).map_err(|e| match e {
        RunError::Module(err) => RunError::Config(ConfigError(format!("field `{name}`: {err}"))),
        other => other,
    })
}

fn theta_json(theta: &HannayAngles<f64>) -> Json {
    let mut obj = Json::object();
    obj.push("raw", Json::floats(&theta.raw));
    obj.push("wrapped", Json::floats(&theta.wrapped));
    obj.push("winding", Json::ints(&theta.winding));
    obj
}

fn oracle_json(oracle: &AdiabaticOracle<f64>) -> Json {
    let mut obj = Json::object();
    obj.push("theta_extrapolated", Json::Float(oracle.theta_extrapolated));
    let mut runs = Vec::new();
    for run in &oracle.runs {
        let mut r = Json::object();
        r.push("epsilon", Json::Float(run.epsilon));
        r.push("theta", Json::Float(run.theta));
        r.push("action_drift", Json::Float(run.action_drift));
        r.push("final_action_drift", Json::Float(run.final_action_drift));
        r.push("dynamical_angle", Json::Float(run.dynamical_angle));
        r.push("substeps", Json::UInt(run.substeps));
        runs.push(r);
    }
    obj.push("runs", Json::Array(runs));
    obj.push("theta_differences", Json::floats(&oracle.theta_differences));
    obj.push("drift_ratios", Json::floats(&oracle.drift_ratios));
    obj
}

fn relation_json(report: &HolonomyReport<f64>) -> Json {
    let mut obj = Json::object();
    obj.push("theta", theta_json(&report.theta));
    let mut rows = Vec::new();
    for row in &report.rows {
        let mut r = Json::object();
        r.push("mode", Json::ints(&row.mode.0));
        r.push("beta", Json::Float(row.beta));
        r.push("s_point", Json::Float(row.s_point));
        r.push("residual", Json::Float(row.residual));
        rows.push(r);
    }
    obj.push("modes", Json::Array(rows));
    obj.push("max_residual", Json::Float(report.max_residual));
    obj.push("residual_tol", Json::Float(report.residual_tol));
    obj.push(
        "s_zero_ok",
        match report.s_zero_ok {
            Some(b) => Json::Bool(b),
            None => Json::Null,
        },
    );
    obj.push("constant_loop", Json::Bool(report.constant_loop));
    if let Some(oracle) = &report.oracle {
        let mut o = Json::object();
        o.push("theta_oracle", Json::floats(&oracle.theta_oracle));
        o.push("difference", Json::floats(&oracle.difference));
        o.push("max_abs_difference", Json::Float(oracle.max_abs_difference));
        let mut runs = Vec::new();
        for (eps, theta, drift) in &oracle.runs {
            let mut r = Json::object();
            r.push("epsilon", Json::Float(*eps));
            r.push("theta", Json::Float(*theta));
            r.push("action_drift", Json::Float(*drift));
            runs.push(r);
        }
        o.push("runs", Json::Array(runs));
        obj.push("oracle_comparison", o);
    }
    obj
}

/// Oracle options from config; the oracle needs a canonical family.
fn oracle_options(raw: &RawConfig) -> Option<OracleOptions<f64>> {
    raw.epsilons.as_ref().map(|eps| OracleOptions {
        epsilons: eps.clone(),
        phi0_samples: raw.phi0_samples.unwrap_or(8),
        substep_factor: 100.0,
        initial_angle: 0.0,
    })
}

fn run_oracle_if_requested(
    raw: &RawConfig,
    family: &BuiltFamily,
    mu: &[f64],
    lp: &ParamLoop<f64>,
) -> Result<Option<AdiabaticOracle<f64>>, RunError> {
    let Some(opts) = oracle_options(raw) else { return Ok(None) };
    let canonical = family.as_canonical().ok_or_else(|| {
        ConfigError(format!(
            "the adiabatic oracle needs a canonical family, `{}` has no chart",
            family.kind_name()
        ))
    })?;
    let oracle = adiabatic_hannay_oracle(canonical, mu[0], lp, &opts)?;
    Ok(Some(oracle))
}

fn run_hannay(raw: &RawConfig) -> Result<RunOutcome, RunError> {
    let command = Command::Hannay;
    let family = build_family(require(&raw.family, "family", command)?);
    let mu = mu_slice(raw, command)?;
    let lp = build_loop(raw, command)?;
    let (k, q) = (segments(raw), quadrature(raw));

    let theta = hannay_holonomy(family.as_integrable(), mu, &lp, k, q)?;
    let oracle = run_oracle_if_requested(raw, &family, mu, &lp)?;

    let mut results = Json::object();
    results.push("theta", theta_json(&theta));
    let mut pass = true;
    let oracle_section = oracle.as_ref().map(|o| {
        let diff = (theta.raw[0] - o.theta_extrapolated).abs();
        results.push("oracle_difference", Json::Float(diff));
        oracle_json(o)
    });
    // sweep section: theta over a segment ladder, fitted order
    let convergence = match &raw.sweep_segments {
        Some(ladder) => {
            let mut values = Vec::with_capacity(ladder.len());
            for &kk in ladder {
                values
                    .push(hannay_holonomy(family.as_integrable(), mu, &lp, kk, q)?.raw[0]);
            }
            let res: Vec<f64> = ladder.iter().map(|&kk| kk as f64).collect();
            let report = convergence_sweep(&res, &values)?;
            let mut section = Json::object();
            section.push("resolutions", Json::floats(&res));
            section.push(
                "errors",
                Json::floats(&report.errors.iter().map(|(_, e)| *e).collect::<Vec<_>>()),
            );
            match report.verdict {
                ConvergenceVerdict::Exact => section.push("order", Json::Str("exact".into())),
                ConvergenceVerdict::Order(p) => section.push("order", Json::Float(p)),
            }
            pass &= report.at_least_order(1.0);
            Some(section)
        }
        None => None,
    };

    let mut work = Json::object();
    work.push("segments", Json::UInt(k as u64));
    work.push("quadrature", Json::UInt(q as u64));
    work.push("fiber_shift_evaluations", Json::UInt((k * q) as u64));
    if let Some(o) = &oracle {
        work.push(
            "oracle_substeps",
            Json::UInt(o.runs.iter().map(|r| r.substeps).sum::<u64>()),
        );
    }

    let mut tables = Vec::new();
    if raw.emit_tables.unwrap_or(false) {
        if let Some(o) = &oracle {
            let mut csv = String::from("epsilon,theta,action_drift\n");
            for run in &o.runs {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    crate::report::format_float(run.epsilon),
                    crate::report::format_float(run.theta),
                    crate::report::format_float(run.action_drift)
                ));
            }
            tables.push(("oracle".to_string(), csv));
        }
    }

    let summary = format!(
        "hannay: theta = {} rad (wrapped {})",
        crate::report::format_float(theta.raw[0]),
        crate::report::format_float(theta.wrapped[0])
    );
    Ok(RunOutcome {
        results,
        oracle: oracle_section,
        convergence,
        work,
        pass,
        summary,
        tables,
    })
}

fn run_berry(raw: &RawConfig) -> Result<RunOutcome, RunError> {
    let command = Command::Berry;
    let family = build_family(require(&raw.family, "family", command)?);
    let mu = mu_slice(raw, command)?;
    let lp = build_loop(raw, command)?;
    let modes = build_modes(raw, command)?;
    let (k, q) = (segments(raw), quadrature(raw));

    let mut rows = Vec::new();
    let mut summary_parts = Vec::new();
    for mode in &modes {
        let beta = berry_phase(family.as_integrable(), mode, mu, &lp, k, q)?;
        let mut r = Json::object();
        r.push("mode", Json::ints(&mode.0));
        r.push("beta", Json::Float(beta));
        rows.push(r);
        summary_parts.push(format!("{:?}:{}", mode.0, crate::report::format_float(beta)));
    }
    let mut results = Json::object();
    results.push("phases", Json::Array(rows));

    let mut work = Json::object();
    work.push("segments", Json::UInt(k as u64));
    work.push("quadrature", Json::UInt(q as u64));
    work.push("modes", Json::UInt(modes.len() as u64));

    Ok(RunOutcome {
        results,
        oracle: None,
        convergence: None,
        work,
        pass: true,
        summary: format!("berry: {}", summary_parts.join(" ")),
        tables: Vec::new(),
    })
}

fn run_verify_relation(raw: &RawConfig) -> Result<RunOutcome, RunError> {
    let command = Command::VerifyRelation;
    let family = build_family(require(&raw.family, "family", command)?);
    let mu = mu_slice(raw, command)?;
    let lp = build_loop(raw, command)?;
    let modes = build_modes(raw, command)?;
    let (k, q) = (segments(raw), quadrature(raw));
    let residual_tol = raw
        .tolerances
        .as_ref()
        .and_then(|t| t.residual)
        .unwrap_or_else(default_residual_tol);

    let mut report = relation_report(family.as_integrable(), &modes, mu, &lp, k, q, residual_tol)?;
    if let Some(oracle) = run_oracle_if_requested(raw, &family, mu, &lp)? {
        let diff: Vec<f64> =
            report.theta.raw.iter().map(|t| t - oracle.theta_extrapolated).collect();
        let max_abs = diff.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        report.oracle = Some(OracleComparison {
            theta_oracle: vec![oracle.theta_extrapolated],
            difference: diff,
            max_abs_difference: max_abs,
            runs: oracle.runs.iter().map(|r| (r.epsilon, r.theta, r.action_drift)).collect(),
        });
    }

    let pass = report.pass();
    let results = relation_json(&report);
    let mut work = Json::object();
    work.push("segments", Json::UInt(k as u64));
    work.push("quadrature", Json::UInt(q as u64));
    work.push("modes", Json::UInt(modes.len() as u64));
    work.push("fiber_shift_evaluations", Json::UInt((k * q * (modes.len() + 1)) as u64));

    let mut tables = Vec::new();
    if raw.emit_tables.unwrap_or(false) {
        let mut csv = String::from("mode,beta,s_point,residual\n");
        for row in &report.rows {
            csv.push_str(&format!(
                "{:?},{},{},{}\n",
                row.mode.0,
                crate::report::format_float(row.beta),
                crate::report::format_float(row.s_point),
                crate::report::format_float(row.residual)
            ));
        }
        tables.push(("modes".to_string(), csv));
    }

    let summary = format!(
        "verify-relation: theta = {}, max residual = {} (tol {}), S(0)=0 {}",
        crate::report::format_float(report.theta.raw[0]),
        crate::report::format_float(report.max_residual),
        crate::report::format_float(report.residual_tol),
        match report.s_zero_ok {
            Some(true) => "confirmed",
            Some(false) => "VIOLATED",
            None => "not probed",
        }
    );
    Ok(RunOutcome {
        results,
        oracle: None,
        convergence: None,
        work,
        pass,
        summary,
        tables,
    })
}

fn run_aa_phase(raw: &RawConfig) -> Result<RunOutcome, RunError> {
    let command = Command::AaPhase;
    let omega: Vec<f64> = match &raw.omega {
        Some(w) => w.clone(),
        None => {
            let family = build_family(require(&raw.family, "family", command)?);
            let x0 = param_point(require(&raw.x0, "x0", command)?, "x0")?;
            let mu = mu_slice(raw, command)?;
            family.as_integrable().frequency(mu, &x0)?
        }
    };
    let amps = require(&raw.state, "state", command)?;
    let n_max = raw.n_max.unwrap_or(DEFAULT_TRUNCATION);
    let state = FourierState::from_amplitudes(
        omega.len(),
        n_max,
        amps.iter()
            .map(|a| (ModeVector::new(a.mode.clone()), Complex::new(a.re, a.im))),
    )?;
    let t_loop = *require(&raw.t_loop, "t_loop", command)?;
    let closure_tol = raw
        .tolerances
        .as_ref()
        .and_then(|t| t.closure)
        .unwrap_or_else(default_closure_tol);

    let aa = aa_phase_from_evolution(&state, &omega, t_loop, closure_tol)?;
    let mut results = Json::object();
    results.push("beta", Json::Float(aa.beta));
    results.push("total_phase", Json::Float(aa.total));
    results.push("dynamical_phase", Json::Float(aa.dynamical));
    results.push("closure_distance", Json::Float(aa.closure_distance));
    // initial state echo: (mode, re, im) rows in lexicographic mode order
    let mut state_rows = Vec::new();
    for (mode, re, im) in state.normalized()?.rows() {
        let mut r = Json::object();
        r.push("mode", Json::ints(&mode));
        r.push("re", Json::Float(re));
        r.push("im", Json::Float(im));
        state_rows.push(r);
    }
    results.push("state", Json::Array(state_rows));

    let mut sampled = 0u64;
    if let Some(steps) = raw.steps {
        let rays = sample_evolution_rays(&state, &omega, t_loop, steps)?;
        let beta_discrete = discrete_holonomy(&StateLoop::new(rays)?)?;
        results.push("beta_discrete", Json::Float(beta_discrete));
        results.push("discrete_difference", Json::Float((beta_discrete - aa.beta).abs()));
        sampled = steps as u64;
    }

    let mut work = Json::object();
    work.push("state_modes", Json::UInt(state.mode_count() as u64));
    work.push("sampled_rays", Json::UInt(sampled));

    let summary = format!("aa-phase: beta = {}", crate::report::format_float(aa.beta));
    Ok(RunOutcome {
        results,
        oracle: None,
        convergence: None,
        work,
        pass: true,
        summary,
        tables: Vec::new(),
    })
}

fn run_koopman_check(raw: &RawConfig, seed: u64) -> Result<RunOutcome, RunError> {
    let command = Command::KoopmanCheck;
    let omega: Vec<f64> = match &raw.omega {
        Some(w) => w.clone(),
        None => {
            let family = build_family(require(&raw.family, "family", command)?);
            let x0 = param_point(require(&raw.x0, "x0", command)?, "x0")?;
            let mu = mu_slice(raw, command)?;
            family.as_integrable().frequency(mu, &x0)?
        }
    };
    let n = omega.len();
    let n_max = raw.n_max.unwrap_or(8);
    let q = raw.quadrature.unwrap_or(32);
    let trials = raw.trials.unwrap_or(8);
    let tol = raw.tolerances.as_ref();
    let group_tol = tol.and_then(|t| t.group_law).unwrap_or(1e-14);
    let comp_tol = tol.and_then(|t| t.composition).unwrap_or(1e-10);
    let norm_tol = tol.and_then(|t| t.norm_drift).unwrap_or(16.0 * f64::EPSILON);

    let mut rng = SplitMix64::substream(seed, 0);
    let mut max_norm_drift = 0.0f64;
    let mut max_group = 0.0f64;
    let mut max_comp = 0.0f64;
    for _ in 0..trials {
        // random sparse state in the truncation cube
        let mut state = FourierState::zero(n, n_max)?;
        let target = 6.min((2 * n_max + 1).pow(n as u32) as usize);
        let mut amps = Vec::new();
        while amps.len() < target {
            let mode: Vec<i64> = (0..n)
                .map(|_| (rng.next_f64() * (2 * n_max + 1) as f64) as i64 - n_max)
                .collect();
            amps.push((
                ModeVector::new(mode),
                Complex::new(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)),
            ));
            state = FourierState::from_amplitudes(n, n_max, amps.clone())?;
        }
        let state = state.normalized()?;
        let (t, s) = (rng.next_in(-3.0, 3.0), rng.next_in(-3.0, 3.0));

        let u_t = evolve(&state, &KoopmanPropagator::new(omega.clone(), t)?)?;
        max_norm_drift = max_norm_drift.max((u_t.norm() - state.norm()).abs());

        let two_step = evolve(&u_t, &KoopmanPropagator::new(omega.clone(), s)?)?;
        let direct = evolve(&state, &KoopmanPropagator::new(omega.clone(), t + s)?)?;
        for m in direct.modes() {
            max_group = max_group.max((two_step.amplitude(m) - direct.amplitude(m)).norm());
        }

        let composed = composition_apply(&state, &omega, t, q)?;
        for m in composed.modes().chain(u_t.modes()) {
            max_comp = max_comp.max((composed.amplitude(m) - u_t.amplitude(m)).norm());
        }
    }

    let norm_ok = max_norm_drift <= norm_tol;
    let group_ok = max_group < group_tol;
    let comp_ok = max_comp < comp_tol;
    let pass = norm_ok && group_ok && comp_ok;

    let mut results = Json::object();
    results.push("max_norm_drift", Json::Float(max_norm_drift));
    results.push("norm_tol", Json::Float(norm_tol));
    results.push("norm_ok", Json::Bool(norm_ok));
    results.push("max_group_law_defect", Json::Float(max_group));
    results.push("group_law_tol", Json::Float(group_tol));
    results.push("group_law_ok", Json::Bool(group_ok));
    results.push("max_composition_deviation", Json::Float(max_comp));
    results.push("composition_tol", Json::Float(comp_tol));
    results.push("composition_ok", Json::Bool(comp_ok));

    let mut work = Json::object();
    work.push("trials", Json::UInt(trials as u64));
    work.push("grid_nodes", Json::UInt((q as u64).pow(n as u32)));

    let summary = format!(
        "koopman-check: norm drift {} group {} composition {} -> {}",
        crate::report::format_float(max_norm_drift),
        crate::report::format_float(max_group),
        crate::report::format_float(max_comp),
        if pass { "ok" } else { "TOLERANCE BREACH" }
    );
    Ok(RunOutcome {
        results,
        oracle: None,
        convergence: None,
        work,
        pass,
        summary,
        tables: Vec::new(),
    })
}

fn run_liouville_check(raw: &RawConfig, seed: u64) -> Result<RunOutcome, RunError> {
    let command = Command::LiouvilleCheck;
    let mc = require(&raw.mc, "mc", command)?;
    let observables: Vec<Observable> = mc
        .observables
        .iter()
        .map(|name| {
            Observable::by_name(name)
                .ok_or_else(|| ConfigError(format!("unknown observable `{name}`")))
        })
        .collect::<Result<_, _>>()?;
    let region = match &mc.region {
        RegionSpec::Rect { q, p } => Region::Rect { q: *q, p: *p },
        RegionSpec::Disk { center, radius } => Region::Disk { center: *center, radius: *radius },
        RegionSpec::EnergyBall { e_max, q_half_width, p_half_width } => Region::EnergyBall {
            e_max: *e_max,
            q_half_width: *q_half_width,
            p_half_width: *p_half_width,
        },
    };
    let dt = mc.dt.unwrap_or(1e-3);

    let oscillator = phaselab_core::families::GeneralizedOscillator::new();
    let quartic = SeparableSystem::quartic();
    let report = match &mc.system {
        SystemSpec::Oscillator { x } => {
            let x = param_point(x, "mc.system.x")?;
            let spec = FlowSpec::new(FlowSystem::ExactCanonical(&oscillator), x, dt)?;
            liouville_drift(&spec, mc.t, mc.samples, &observables, &region, seed)?
        }
        SystemSpec::Quartic => {
            let x = ParamPoint::new(vec![0.0]).expect("static point");
            let spec = FlowSpec::new(FlowSystem::Leapfrog(&quartic), x, dt)?;
            liouville_drift(&spec, mc.t, mc.samples, &observables, &region, seed)?
        }
    };

    let pass = report.all_pass();
    let mut rows = Vec::new();
    for row in &report.rows {
        let mut r = Json::object();
        r.push("observable", Json::Str(row.name.to_string()));
        r.push("mean_pre", Json::Float(row.mean_pre));
        r.push("mean_post", Json::Float(row.mean_post));
        r.push("drift", Json::Float(row.drift));
        r.push("std_err", Json::Float(row.std_err));
        r.push("pass", Json::Bool(row.pass));
        rows.push(r);
    }
    let mut results = Json::object();
    results.push("rows", Json::Array(rows));
    results.push("samples", Json::UInt(report.samples as u64));
    results.push(
        "seed_derivation",
        Json::Str("sample k draws from SplitMix64(seed + (k+1) * 0x9E3779B97F4A7C15)".into()),
    );

    let mut work = Json::object();
    work.push("samples", Json::UInt(mc.samples as u64));
    let steps_per_sample = match &mc.system {
        SystemSpec::Oscillator { .. } => 1u64,
        SystemSpec::Quartic => (mc.t / dt).ceil() as u64,
    };
    work.push("flow_steps_per_sample", Json::UInt(steps_per_sample));

    let summary = format!(
        "liouville-check: {} observables, {}",
        report.rows.len(),
        if pass { "all drifts within 3 sigma" } else { "DRIFT BEYOND 3 SIGMA" }
    );
    Ok(RunOutcome {
        results,
        oracle: None,
        convergence: None,
        work,
        pass,
        summary,
        tables: Vec::new(),
    })
}

fn run_resonance(raw: &RawConfig) -> Result<RunOutcome, RunError> {
    let command = Command::Resonance;
    let omega = require(&raw.omega, "omega", command)?;
    let k_max = raw.k_max.unwrap_or(10);
    let tol = raw.tol.unwrap_or(1e-9);
    let verdict = phaselab_core::dynamics::resonance_classify(omega, k_max, tol)?;

    let mut results = Json::object();
    let summary = match &verdict {
        phaselab_core::dynamics::Resonance::Resonant { witness, value } => {
            results.push("verdict", Json::Str("resonant".into()));
            results.push("witness", Json::ints(witness));
            results.push("value", Json::Float(*value));
            format!("resonance: resonant, witness {witness:?}")
        }
        phaselab_core::dynamics::Resonance::Nonresonant { k_max } => {
            results.push("verdict", Json::Str("nonresonant".into()));
            results.push("k_max", Json::Int(*k_max));
            format!("resonance: nonresonant up to |k| <= {k_max}")
        }
    };
    results.push("tol", Json::Float(tol));

    let mut work = Json::object();
    let scanned = (2 * k_max as u64 + 1).pow(omega.len() as u32);
    work.push("vectors_scanned", Json::UInt(scanned));

    Ok(RunOutcome {
        results,
        oracle: None,
        convergence: None,
        work,
        pass: true,
        summary,
        tables: Vec::new(),
    })
}
