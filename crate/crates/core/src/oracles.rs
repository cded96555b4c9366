//! Independent brute-force references for the connection-based holonomies.
//!
//! The adiabatic oracle integrates the exact canonical equations of
//! `H(.; x(t))` with `x(t) = gamma(eps t)` — no connection, no torus
//! average, no overlaps — and reads the geometric angle off the trajectory:
//! `theta(eps) = [unwrapped final angle - initial angle] - integral of
//! Omega dt`. Richardson extrapolation in `eps` removes the leading
//! adiabatic error. The module deliberately touches only charts, frequencies
//! and loops: it never reads `hannay_one_form` or `berry_overlap`, so
//! agreement with the connection route is evidence, not tautology.
//!
//! `convergence_sweep` is the shared order-measurement utility for
//! resolution sweeps.

use crate::error::{Error, Result};
use crate::families::{CanonicalFamily, ParamPoint};
use crate::holonomy::ParamLoop;
use crate::real::{wrap_to_pi, Real};

/// Options for the slow-drive run.
#[derive(Debug, Clone)]
pub struct OracleOptions<T> {
    /// Decreasing slowness values; at least two.
    pub epsilons: Vec<T>,
    /// Number of equidistributed initial angles averaged per slowness
    /// value. 1 reproduces the single-trajectory drift; 8 tightens the
    /// comparison to the torus-averaged connection.
    pub phi0_samples: usize,
    /// Substep budget: `dt = eps / substep_factor`.
    pub substep_factor: T,
    /// Offset added to every initial angle in the batch.
    pub initial_angle: T,
}

impl<T: Real> OracleOptions<T> {
    pub fn new(epsilons: Vec<T>) -> Self {
        Self {
            epsilons,
            phi0_samples: 1,
            substep_factor: T::lit(100.0),
            initial_angle: T::zero(),
        }
    }

    pub fn averaged(epsilons: Vec<T>) -> Self {
        Self { phi0_samples: 8, ..Self::new(epsilons) }
    }
}

/// Trajectory summary for one slowness value.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticRun<T> {
    pub epsilon: T,
    /// Geometric angle estimate, averaged over the initial-angle batch.
    pub theta: T,
    /// Mean |I(t) - mu| over the final fast period (and over the batch),
    /// measured in the end chart. The instantaneous final value carries an
    /// oscillatory factor |sin D_eps| of the accumulated fast phase, which
    /// is pseudo-random across slowness values; averaging over one period
    /// removes it, so this is the drift whose eps-scaling is measurable.
    pub action_drift: T,
    /// Instantaneous |I(1/eps) - mu| at the final time, batch-averaged.
    pub final_action_drift: T,
    /// Dynamical angle `integral of Omega dt` over the drive window.
    pub dynamical_angle: T,
    pub substeps: u64,
}

/// Slow-drive oracle output.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticOracle<T> {
    pub runs: Vec<AdiabaticRun<T>>,
    /// Richardson extrapolation of the last two runs assuming a leading
    /// O(eps) error: `theta_0 = (r theta_2 - theta_1)/(r - 1)`.
    pub theta_extrapolated: T,
    /// |theta(eps_i) - theta(eps_{i+1})| per consecutive pair.
    pub theta_differences: Vec<T>,
    /// drift(eps_i) / drift(eps_{i+1}) per consecutive pair; ~2 when the
    /// action drift is genuinely first order in eps.
    pub drift_ratios: Vec<T>,
}

/// Integrates the driven system `H(.; gamma(eps t))` over `t in [0, 1/eps]`
/// for each slowness value and extrapolates the geometric angle to the
/// adiabatic limit.
///
/// The integrator is the family's exact frozen-parameter flow applied over
/// substeps `dt = eps/substep_factor` with the parameters held at the
/// substep midpoint, which isolates adiabatic error from integrator error.
/// The dynamical angle uses a fine trapezoid quadrature of
/// `omega(gamma(s))`, spectrally exact for smooth loops, evaluated on the
/// oriented loop so reversed drives are integrated honestly.
pub fn adiabatic_hannay_oracle<T, F>(
    family: &F,
    mu: T,
    param_loop: &ParamLoop<T>,
    opts: &OracleOptions<T>,
) -> Result<AdiabaticOracle<T>>
where
    T: Real,
    F: CanonicalFamily<T> + ?Sized,
{
    if opts.epsilons.len() < 2 {
        return Err(Error::Input("need at least 2 slowness values".into()));
    }
    for pair in opts.epsilons.windows(2) {
        if !(pair[1] < pair[0]) {
            return Err(Error::Input("slowness values must be strictly decreasing".into()));
        }
    }
    if !(opts.epsilons[opts.epsilons.len() - 1] > T::zero()) {
        return Err(Error::Input("slowness values must be positive".into()));
    }
    if opts.phi0_samples == 0 {
        return Err(Error::Input("need at least one initial angle".into()));
    }
    if !(opts.substep_factor >= T::one()) {
        return Err(Error::Input("substep factor must be at least 1".into()));
    }
    if param_loop.param_dim() != family.param_dim() {
        return Err(Error::Shape(format!(
            "loop lives in {} parameters, family has {}",
            param_loop.param_dim(),
            family.param_dim()
        )));
    }

    // The whole drive path must stay inside the chart domain.
    let prescan = 2048;
    for k in 0..=prescan {
        let u = T::from_usize(k).unwrap() / T::from_usize(prescan).unwrap();
        family.check_point(&param_loop.at(u)).map_err(|e| {
            Error::OracleDomain(format!("drive path leaves the chart domain at u = {u}: {e}"))
        })?;
    }

    // Dynamical angle per unit drive parameter: J = integral omega(gamma(s)) ds.
    let j_nodes = 1 << 14;
    let mut x_buf = vec![T::zero(); param_loop.param_dim()];
    let mut j_acc = T::zero();
    let mut j_comp = T::zero();
    for k in 0..j_nodes {
        let u = (T::from_usize(k).unwrap() + T::half()) / T::from_usize(j_nodes).unwrap();
        param_loop.at_into(u, &mut x_buf);
        // Kahan accumulation: the later division by eps amplifies any drift
        let term = family.angular_frequency(&x_buf) - j_comp;
        let sum = j_acc + term;
        j_comp = (sum - j_acc) - term;
        j_acc = sum;
    }
    let j_mean = j_acc / T::from_usize(j_nodes).unwrap();

    let x_start = param_loop.at(T::zero());
    let x_end = param_loop.at(T::one());

    let mut runs = Vec::with_capacity(opts.epsilons.len());
    for &eps in &opts.epsilons {
        let run = drive_once(family, mu, param_loop, eps, opts, j_mean, &x_start, &x_end)?;
        runs.push(run);
    }

    let last = &runs[runs.len() - 1];
    let prev = &runs[runs.len() - 2];
    let r = prev.epsilon / last.epsilon;
    let theta_extrapolated = (r * last.theta - prev.theta) / (r - T::one());

    let theta_differences = runs.windows(2).map(|w| (w[0].theta - w[1].theta).abs()).collect();
    let drift_ratios = runs
        .windows(2)
        .map(|w| {
            if w[1].action_drift == T::zero() {
                T::infinity()
            } else {
                w[0].action_drift / w[1].action_drift
            }
        })
        .collect();

    Ok(AdiabaticOracle { runs, theta_extrapolated, theta_differences, drift_ratios })
}

#[allow(clippy::too_many_arguments)]
fn drive_once<T, F>(
    family: &F,
    mu: T,
    param_loop: &ParamLoop<T>,
    eps: T,
    opts: &OracleOptions<T>,
    j_mean: T,
    x_start: &ParamPoint<T>,
    x_end: &ParamPoint<T>,
) -> Result<AdiabaticRun<T>>
where
    T: Real,
    F: CanonicalFamily<T> + ?Sized,
{
    let t_total = T::one() / eps;
    let steps_t = (opts.substep_factor / (eps * eps)).ceil();
    let steps = steps_t
        .to_f64()
        .filter(|s| s.is_finite() && *s >= 1.0 && *s < 4.0e9)
        .map(|s| s as u64)
        .ok_or_else(|| {
            Error::Resource(format!("substep count {steps_t} out of range at eps = {eps}"))
        })?;
    let dt = t_total / T::from_u64(steps).unwrap();
    let du = dt * eps;

    let batch = opts.phi0_samples;
    let mut points = Vec::with_capacity(batch);
    let mut phi0 = Vec::with_capacity(batch);
    for j in 0..batch {
        let angle = opts.initial_angle
            + T::two_pi() * T::from_usize(j).unwrap() / T::from_usize(batch).unwrap();
        phi0.push(angle);
        points.push(family.from_action_angle(mu, angle, x_start)?);
    }
    let mut unwrapped = phi0.clone();

    // Window over which |I - mu| is averaged: the last full fast period,
    // sampled at up to 64 points in the end chart.
    let period_steps = {
        let omega_end = family.angular_frequency(x_end.coords());
        let per = (T::two_pi() / (omega_end * dt))
            .ceil()
            .to_f64()
            .map(|p| p as u64)
            .unwrap_or(0);
        per.min(steps)
    };
    let window_start = steps - period_steps;
    let window_stride = (period_steps / 64).max(1);
    let mut window_samples = 0u64;
    let mut window_drift = T::zero();

    let chunk: u64 = 1024;
    let mut x_buf = vec![T::zero(); param_loop.param_dim()];
    let mut done: u64 = 0;
    while done < steps {
        let this_chunk = chunk.min(steps - done);
        let mut advance = T::zero();
        for i in 0..this_chunk {
            let global = done + i;
            let idx = T::from_u64(global).unwrap();
            let u_mid = (idx + T::half()) * du;
            param_loop.at_into(u_mid, &mut x_buf);
            let omega = family.angular_frequency(&x_buf);
            family.frozen_step_many(&mut points, &x_buf, dt);
            advance += omega * dt;
            let in_window = global + 1 >= window_start;
            if in_window && (global + 1 - window_start) % window_stride == 0 {
                for pt in &points {
                    let (i_now, _) = family.to_action_angle(pt.0, pt.1, x_end)?;
                    window_drift += (i_now - mu).abs();
                    window_samples += 1;
                }
            }
        }
        done += this_chunk;
        if !advance.is_finite() {
            return Err(Error::OracleDomain(format!(
                "frequency became non-finite near u = {}",
                T::from_u64(done).unwrap() * du
            )));
        }
        // Re-anchor the unwrapped angle against the chart at the current
        // drive point; the frozen-step prediction is accurate to far better
        // than pi per chunk, so wrapping the correction is safe.
        let x_now = if done == steps {
            x_end.clone()
        } else {
            param_loop.at(T::from_u64(done).unwrap() * du)
        };
        for (pt, acc) in points.iter().zip(unwrapped.iter_mut()) {
            let (_, phi_raw) = family.to_action_angle(pt.0, pt.1, &x_now)?;
            let predicted = *acc + advance;
            *acc = predicted + wrap_to_pi(phi_raw - predicted);
        }
    }

    let dynamical_angle = j_mean * t_total;
    let mut theta_acc = T::zero();
    let mut final_drift_acc = T::zero();
    for ((pt, &angle0), &angle_end) in points.iter().zip(&phi0).zip(&unwrapped) {
        let (i_final, _) = family.to_action_angle(pt.0, pt.1, x_end)?;
        theta_acc += (angle_end - angle0) - dynamical_angle;
        final_drift_acc += (i_final - mu).abs();
    }
    let nb = T::from_usize(batch).unwrap();
    let final_action_drift = final_drift_acc / nb;
    let action_drift = if window_samples > 0 {
        window_drift / T::from_u64(window_samples).unwrap()
    } else {
        final_action_drift
    };
    Ok(AdiabaticRun {
        epsilon: eps,
        theta: theta_acc / nb,
        action_drift,
        final_action_drift,
        dynamical_angle,
        substeps: steps,
    })
}

// ---------------------------------------------------------------------------
// Convergence sweeps
// ---------------------------------------------------------------------------

/// Threshold under which sweep errors count as converged-to-roundoff.
pub fn exactness_floor<T: Real>() -> T {
    T::lit(1e-14)
}

/// Verdict of a resolution sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvergenceVerdict<T> {
    /// Errors at the roundoff floor (or identically zero): the fitted order
    /// is undefined, the computation is exact at these resolutions.
    Exact,
    /// Least-squares slope of log error against log resolution, negated so
    /// that larger is better.
    Order(T),
}

/// Errors against the highest-resolution reference plus the fitted order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport<T> {
    /// `(resolution, |value - reference|)` for all but the reference entry.
    pub errors: Vec<(T, T)>,
    pub verdict: ConvergenceVerdict<T>,
}

impl<T: Real> ConvergenceReport<T> {
    /// True when the sweep is exact or the fitted order reaches `min_order`.
    pub fn at_least_order(&self, min_order: T) -> bool {
        match &self.verdict {
            ConvergenceVerdict::Exact => true,
            ConvergenceVerdict::Order(p) => *p >= min_order,
        }
    }
}

/// Fits the convergence order of `values` computed at increasing
/// `resolutions`, using the final (highest-resolution) entry as reference.
pub fn convergence_sweep<T: Real>(resolutions: &[T], values: &[T]) -> Result<ConvergenceReport<T>> {
    if resolutions.len() < 3 {
        return Err(Error::Input(format!(
            "need at least 3 resolutions, got {}",
            resolutions.len()
        )));
    }
    if resolutions.len() != values.len() {
        return Err(Error::Shape(format!(
            "{} resolutions vs {} values",
            resolutions.len(),
            values.len()
        )));
    }
    for pair in resolutions.windows(2) {
        if !(pair[1] > pair[0]) {
            return Err(Error::Input("resolutions must be strictly increasing".into()));
        }
    }
    let reference = values[values.len() - 1];
    let errors: Vec<(T, T)> = resolutions[..resolutions.len() - 1]
        .iter()
        .zip(values)
        .map(|(&r, &v)| (r, (v - reference).abs()))
        .collect();
    let floor = exactness_floor::<T>() * (T::one() + reference.abs());
    let fit_points: Vec<(T, T)> = errors
        .iter()
        .filter(|(_, e)| *e > floor)
        .map(|&(r, e)| (r.ln(), e.ln()))
        .collect();
    // Converged to roundoff at the finest pre-reference resolution (or zero
    // error everywhere) counts as exact.
    let last_error = errors[errors.len() - 1].1;
    if fit_points.len() < 2 || last_error <= floor {
        return Ok(ConvergenceReport { errors, verdict: ConvergenceVerdict::Exact });
    }
    let n = T::from_usize(fit_points.len()).unwrap();
    let mean_x = fit_points.iter().map(|p| p.0).sum::<T>() / n;
    let mean_y = fit_points.iter().map(|p| p.1).sum::<T>() / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for (x, y) in &fit_points {
        num += (*x - mean_x) * (*y - mean_y);
        den += (*x - mean_x) * (*x - mean_x);
    }
    let slope = num / den;
    Ok(ConvergenceReport { errors, verdict: ConvergenceVerdict::Order(-slope) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::torus_average;
    use crate::families::GeneralizedOscillator;
    use crate::holonomy::hannay_holonomy;

    fn point(coords: &[f64]) -> ParamPoint<f64> {
        ParamPoint::new(coords.to_vec()).unwrap()
    }

    fn osc() -> GeneralizedOscillator {
        GeneralizedOscillator::new()
    }

    fn small_circle() -> ParamLoop<f64> {
        ParamLoop::circle(point(&[2.0, 0.0, 1.0]), 0.25, (0, 1)).unwrap()
    }

    #[test]
    fn constant_loop_zero_drift() {
        let lp = ParamLoop::constant(point(&[2.0, 0.1, 1.0]));
        let oracle = adiabatic_hannay_oracle(
            &osc(),
            0.5,
            &lp,
            &OracleOptions::new(vec![4e-2, 2e-2]),
        )
        .unwrap();
        assert!(oracle.theta_extrapolated.abs() < 1e-6, "{}", oracle.theta_extrapolated);
        for run in &oracle.runs {
            assert!(run.theta.abs() < 1e-6);
            assert!(run.action_drift < 1e-9);
        }
    }

    #[test]
    fn action_drift_halves_with_eps() {
        let oracle = adiabatic_hannay_oracle(
            &osc(),
            0.5,
            &small_circle(),
            &OracleOptions::averaged(vec![8e-3, 4e-3]),
        )
        .unwrap();
        let ratio = oracle.drift_ratios[0];
        assert!((1.5..=3.0).contains(&ratio), "drift ratio {ratio}");
    }

    #[test]
    fn matches_connection_holonomy_at_coarse_eps() {
        // cheap version of the acceptance check, and the pin of the global
        // orientation sign
        let theta = hannay_holonomy(&osc(), &[0.5], &small_circle(), 256, 64).unwrap();
        let oracle = adiabatic_hannay_oracle(
            &osc(),
            0.5,
            &small_circle(),
            &OracleOptions::averaged(vec![8e-3, 4e-3]),
        )
        .unwrap();
        assert!(
            (theta.raw[0] - oracle.theta_extrapolated).abs() < 5e-3,
            "connection {} vs oracle {}",
            theta.raw[0],
            oracle.theta_extrapolated
        );
    }

    #[test]
    fn reversal_antisymmetry() {
        let opts = OracleOptions::averaged(vec![8e-3, 4e-3]);
        let fwd = adiabatic_hannay_oracle(&osc(), 0.5, &small_circle(), &opts).unwrap();
        let rev = adiabatic_hannay_oracle(&osc(), 0.5, &small_circle().reversed(), &opts).unwrap();
        assert!(
            (fwd.theta_extrapolated + rev.theta_extrapolated).abs() < 2e-3,
            "{} vs {}",
            fwd.theta_extrapolated,
            rev.theta_extrapolated
        );
    }

    #[test]
    fn theta_sequence_consistent() {
        let oracle = adiabatic_hannay_oracle(
            &osc(),
            0.5,
            &small_circle(),
            &OracleOptions::averaged(vec![1.6e-2, 8e-3, 4e-3]),
        )
        .unwrap();
        let ratio = oracle.theta_differences[0] / oracle.theta_differences[1];
        assert!((1.5..=3.0).contains(&ratio), "difference ratio {ratio}");
    }

    #[test]
    fn oracle_rejects_bad_input() {
        let lp = small_circle();
        assert!(adiabatic_hannay_oracle(&osc(), 0.5, &lp, &OracleOptions::new(vec![1e-2])).is_err());
        assert!(
            adiabatic_hannay_oracle(&osc(), 0.5, &lp, &OracleOptions::new(vec![1e-2, 2e-2]))
                .is_err()
        );
        // loop that exits the admissible region
        let bad = ParamLoop::circle(point(&[1.0, 0.0, 1.0]), 1.2, (0, 1)).unwrap();
        assert!(matches!(
            adiabatic_hannay_oracle(&osc(), 0.5, &bad, &OracleOptions::new(vec![1e-2, 5e-3])),
            Err(Error::OracleDomain(_))
        ));
    }

    #[test]
    fn sweep_orders() {
        // second-order synthetic data
        let res = [16.0, 32.0, 64.0, 128.0, 256.0];
        let vals: Vec<f64> = res.iter().map(|r| 1.0 + 3.0 / (r * r)).collect();
        let report = convergence_sweep(&res, &vals).unwrap();
        match report.verdict {
            ConvergenceVerdict::Order(p) => assert!((p - 2.0).abs() < 0.2, "order {p}"),
            ref v => panic!("unexpected verdict {v:?}"),
        }
        assert!(report.at_least_order(1.0));
    }

    #[test]
    fn sweep_exact_cases() {
        // resolution-independent computation
        let res = [8.0, 16.0, 32.0];
        let report = convergence_sweep(&res, &[0.7, 0.7, 0.7]).unwrap();
        assert_eq!(report.verdict, ConvergenceVerdict::Exact);

        // trapezoid average of exp(sin phi): spectral, at the floor by Q=32
        let avg = |q: usize| torus_average(1, q, |a: &[f64]| a[0].sin().exp()).unwrap();
        let vals: Vec<f64> = [8usize, 16, 32, 64].iter().map(|&q| avg(q)).collect();
        let report = convergence_sweep(&[8.0, 16.0, 32.0, 64.0], &vals).unwrap();
        assert_eq!(report.verdict, ConvergenceVerdict::Exact);
        // and the Q=32 error against the reference is itself below 1e-14
        assert!((avg(32) - avg(4096)).abs() < 1e-14);
    }

    #[test]
    fn hannay_sweep_order() {
        let ks = [32usize, 64, 128, 256];
        let vals: Vec<f64> = ks
            .iter()
            .map(|&k| hannay_holonomy(&osc(), &[0.5], &small_circle(), k, 32).unwrap().raw[0])
            .collect();
        let res: Vec<f64> = ks.iter().map(|&k| k as f64).collect();
        let report = convergence_sweep(&res, &vals).unwrap();
        assert!(report.at_least_order(1.0), "{:?}", report.verdict);
    }
}
