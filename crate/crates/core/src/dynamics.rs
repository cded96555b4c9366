//! Classical flows and the measure-level checks built on them.
//!
//! Covers the exact frozen-parameter flow of canonical families, leapfrog
//! integration of separable 1-dof systems, Monte Carlo drift checks of
//! Liouville-measure invariance on bounded invariant regions, resonance
//! classification of frequency vectors, fibrewise Hamiltonian vector fields,
//! and uniform torus (group) averages.
//!
//! Everything here is pure; Monte Carlo sampling derives one SplitMix64
//! substream per sample index from the run seed, so the estimate is
//! independent of how the sample loop is partitioned across workers.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::families::{CanonicalFamily, ParamPoint};
use crate::real::{pairwise_sum, Real};
use crate::rng::SplitMix64;

/// Point of the 2n-dimensional phase space in canonical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint<T> {
    pub q: Vec<T>,
    pub p: Vec<T>,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(q: Vec<T>, p: Vec<T>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::Shape(format!(
                "q has {} components, p has {}",
                q.len(),
                p.len()
            )));
        }
        if q.iter().chain(&p).any(|c| !c.is_finite()) {
            return Err(Error::Input("phase-space coordinates must be finite".into()));
        }
        Ok(Self { q, p })
    }

    pub fn one_dof(q: T, p: T) -> Result<Self> {
        Self::new(vec![q], vec![p])
    }

    pub fn dof(&self) -> usize {
        self.q.len()
    }
}

type ScalarFn<T> = dyn Fn(T) -> T + Send + Sync;

/// Separable 1-dof system `H(q, p) = T(p) + V(q)` with analytic partials,
/// the form leapfrog needs.
#[derive(Clone)]
pub struct SeparableSystem<T> {
    kinetic: Arc<ScalarFn<T>>,
    potential: Arc<ScalarFn<T>>,
    d_kinetic: Arc<ScalarFn<T>>,
    d_potential: Arc<ScalarFn<T>>,
}

impl<T: Real> SeparableSystem<T> {
    pub fn new(
        kinetic: impl Fn(T) -> T + Send + Sync + 'static,
        d_kinetic: impl Fn(T) -> T + Send + Sync + 'static,
        potential: impl Fn(T) -> T + Send + Sync + 'static,
        d_potential: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            kinetic: Arc::new(kinetic),
            potential: Arc::new(potential),
            d_kinetic: Arc::new(d_kinetic),
            d_potential: Arc::new(d_potential),
        }
    }

    /// The quartic oscillator `H = p^2/2 + q^4/4`.
    pub fn quartic() -> Self {
        Self::new(
            |p| T::half() * p * p,
            |p| p,
            |q| T::lit(0.25) * q * q * q * q,
            |q| q * q * q,
        )
    }

    pub fn energy(&self, q: T, p: T) -> T {
        (self.kinetic)(p) + (self.potential)(q)
    }

    /// One kick-drift-kick leapfrog step; a composition of shears, hence
    /// symplectic with unit Jacobian determinant by construction.
    pub fn leapfrog_step(&self, q: T, p: T, dt: T) -> (T, T) {
        let half = T::half() * dt;
        let p_half = p - half * (self.d_potential)(q);
        let q_new = q + dt * (self.d_kinetic)(p_half);
        let p_new = p_half - half * (self.d_potential)(q_new);
        (q_new, p_new)
    }
}

/// The dynamical system a flow is taken of.
#[derive(Clone)]
pub enum FlowSystem<'a, T> {
    /// Exact frozen-parameter flow of a canonical family.
    ExactCanonical(&'a dyn CanonicalFamily<T>),
    /// Leapfrog steps of a separable system.
    Leapfrog(&'a SeparableSystem<T>),
}

impl<T: Real> FlowSystem<'_, T> {
    pub fn energy(&self, q: T, p: T, x: &ParamPoint<T>) -> Result<T> {
        match self {
            FlowSystem::ExactCanonical(f) => f.hamiltonian(q, p, x),
            FlowSystem::Leapfrog(s) => Ok(s.energy(q, p)),
        }
    }
}

/// Flow specification: system, parameter point, and integrator step.
#[derive(Clone)]
pub struct FlowSpec<'a, T> {
    pub system: FlowSystem<'a, T>,
    pub x: ParamPoint<T>,
    pub dt: T,
}

impl<'a, T: Real> FlowSpec<'a, T> {
    pub fn new(system: FlowSystem<'a, T>, x: ParamPoint<T>, dt: T) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::Input(format!("time step must be positive, got {dt}")));
        }
        Ok(Self { system, x, dt })
    }
}

/// Advances a phase point by `t` under the given flow specification.
///
/// The canonical scheme is the exact rotation in normal-form coordinates and
/// ignores `dt`; leapfrog composes whole `dt` steps plus one fractional step
/// so the requested duration is met exactly.
pub fn flow<T: Real>(point: &PhasePoint<T>, spec: &FlowSpec<T>, t: T) -> Result<PhasePoint<T>> {
    if point.dof() != 1 {
        return Err(Error::Shape(format!(
            "flow handles 1-dof phase points, got {} dof",
            point.dof()
        )));
    }
    if !t.is_finite() {
        return Err(Error::Input("flow duration must be finite".into()));
    }
    let (mut q, mut p) = (point.q[0], point.p[0]);
    match &spec.system {
        FlowSystem::ExactCanonical(family) => {
            family.check_point(&spec.x)?;
            let (qn, pn) = family.frozen_step(q, p, spec.x.coords(), t);
            q = qn;
            p = pn;
        }
        FlowSystem::Leapfrog(system) => {
            let steps = (t.abs() / spec.dt).floor();
            let n = steps.to_f64().unwrap_or(0.0) as u64;
            let dt = if t < T::zero() { -spec.dt } else { spec.dt };
            for _ in 0..n {
                let (qn, pn) = system.leapfrog_step(q, p, dt);
                q = qn;
                p = pn;
            }
            let remainder = t - dt * T::from_u64(n).unwrap();
            if remainder != T::zero() {
                let (qn, pn) = system.leapfrog_step(q, p, remainder);
                q = qn;
                p = pn;
            }
        }
    }
    PhasePoint::one_dof(q, p)
}

// ---------------------------------------------------------------------------
// Liouville-measure drift checks
// ---------------------------------------------------------------------------

/// Bounded sampling domain in the (q, p) plane. Uniform sampling in these
/// regions is Liouville sampling, since the coordinates are canonical.
#[derive(Debug, Clone)]
pub enum Region<T> {
    /// Axis-aligned rectangle.
    Rect { q: (T, T), p: (T, T) },
    /// Euclidean disk.
    Disk { center: (T, T), radius: T },
    /// Sublevel set `H <= e_max`, rejection-sampled from the given bounding
    /// half-widths. Flow-invariant by construction, so any observable may be
    /// drift-tested on it.
    EnergyBall { e_max: T, q_half_width: T, p_half_width: T },
}

impl<T: Real> Region<T> {
    fn validate(&self) -> Result<()> {
        let ok = match self {
            Region::Rect { q, p } => q.1 > q.0 && p.1 > p.0,
            Region::Disk { radius, .. } => *radius > T::zero(),
            Region::EnergyBall { e_max, q_half_width, p_half_width } => {
                *e_max > T::zero() && *q_half_width > T::zero() && *p_half_width > T::zero()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain("sampling region is empty".into()))
        }
    }
}

/// Phase-space observables whose means the drift check monitors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Q,
    P,
    /// q^2 + p^2
    RadiusSq,
    /// indicator(q > 0)
    IndicatorQPos,
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::Q => "q",
            Observable::P => "p",
            Observable::RadiusSq => "q2+p2",
            Observable::IndicatorQPos => "indicator(q>0)",
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "q" => Some(Observable::Q),
            "p" => Some(Observable::P),
            "q2+p2" | "radius_sq" => Some(Observable::RadiusSq),
            "indicator(q>0)" | "indicator_q_pos" => Some(Observable::IndicatorQPos),
            _ => None,
        }
    }

    pub fn eval<T: Real>(&self, q: T, p: T) -> T {
        match self {
            Observable::Q => q,
            Observable::P => p,
            Observable::RadiusSq => q * q + p * p,
            Observable::IndicatorQPos => {
                if q > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// Per-observable drift row.
#[derive(Debug, Clone)]
pub struct DriftRow<T> {
    pub name: &'static str,
    pub mean_pre: T,
    pub mean_post: T,
    /// mean_post - mean_pre over paired samples.
    pub drift: T,
    /// Monte Carlo standard error of the paired drift.
    pub std_err: T,
    pub pass: bool,
}

/// Result of a Liouville drift check.
#[derive(Debug, Clone)]
pub struct DriftReport<T> {
    pub rows: Vec<DriftRow<T>>,
    pub samples: usize,
    pub seed: u64,
    pub duration: T,
}

impl<T: Real> DriftReport<T> {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

fn sample_region<T: Real>(
    region: &Region<T>,
    spec: &FlowSpec<T>,
    rng: &mut SplitMix64,
) -> Result<(T, T)> {
    match region {
        Region::Rect { q, p } => Ok((
            T::lit(rng.next_in(q.0.to_f64().unwrap(), q.1.to_f64().unwrap())),
            T::lit(rng.next_in(p.0.to_f64().unwrap(), p.1.to_f64().unwrap())),
        )),
        Region::Disk { center, radius } => {
            let r = radius.to_f64().unwrap();
            for _ in 0..10_000 {
                let dq = rng.next_in(-r, r);
                let dp = rng.next_in(-r, r);
                if dq * dq + dp * dp <= r * r {
                    return Ok((center.0 + T::lit(dq), center.1 + T::lit(dp)));
                }
            }
            Err(Error::Domain("disk rejection sampling failed to accept".into()))
        }
        Region::EnergyBall { e_max, q_half_width, p_half_width } => {
            let (wq, wp) = (q_half_width.to_f64().unwrap(), p_half_width.to_f64().unwrap());
            for _ in 0..10_000 {
                let q = T::lit(rng.next_in(-wq, wq));
                let p = T::lit(rng.next_in(-wp, wp));
                if spec.system.energy(q, p, &spec.x)? <= *e_max {
                    return Ok((q, p));
                }
            }
            Err(Error::Domain(
                "energy-ball rejection sampling failed to accept; check the bounding widths".into(),
            ))
        }
    }
}

/// Monte Carlo check that the flow preserves the Liouville measure.
///
/// Samples `n` points uniformly in `region`, evolves each by `t`, and
/// compares pre/post means of every observable. An observable passes when
/// its paired drift sits within 3 standard errors (plus a machine-epsilon
/// floor so roundoff-level exact conservation never trips the gate). The
/// significance threshold flags, it does not abort.
pub fn liouville_drift<T: Real>(
    spec: &FlowSpec<T>,
    t: T,
    n: usize,
    observables: &[Observable],
    region: &Region<T>,
    seed: u64,
) -> Result<DriftReport<T>> {
    if n < 1000 {
        return Err(Error::Input(format!("need at least 10^3 samples, got {n}")));
    }
    if observables.is_empty() {
        return Err(Error::Input("no observables given".into()));
    }
    region.validate()?;

    let mut pre = vec![Vec::with_capacity(n); observables.len()];
    let mut diff = vec![Vec::with_capacity(n); observables.len()];
    for k in 0..n {
        // substream per sample: worker partitioning cannot change draws
        let mut rng = SplitMix64::substream(seed, k as u64);
        let (q0, p0) = sample_region(region, spec, &mut rng)?;
        let evolved = flow(&PhasePoint::one_dof(q0, p0)?, spec, t)?;
        let (q1, p1) = (evolved.q[0], evolved.p[0]);
        for (i, obs) in observables.iter().enumerate() {
            let a = obs.eval(q0, p0);
            let b = obs.eval(q1, p1);
            pre[i].push(a);
            diff[i].push(b - a);
        }
    }

    let nt = T::from_usize(n).unwrap();
    let rows = observables
        .iter()
        .enumerate()
        .map(|(i, obs)| {
            let mean_pre = pairwise_sum(&pre[i]) / nt;
            let drift = pairwise_sum(&diff[i]) / nt;
            let centered: Vec<T> = diff[i].iter().map(|&d| (d - drift) * (d - drift)).collect();
            let var = pairwise_sum(&centered) / (nt * (nt - T::one()));
            let std_err = var.max(T::zero()).sqrt();
            let floor = T::epsilon() * T::lit(32.0) * (T::one() + mean_pre.abs());
            let pass = drift.abs() <= T::lit(3.0) * std_err + floor;
            DriftRow {
                name: obs.name(),
                mean_pre,
                mean_post: mean_pre + drift,
                drift,
                std_err,
                pass,
            }
        })
        .collect();

    Ok(DriftReport { rows, samples: n, seed, duration: t })
}

// ---------------------------------------------------------------------------
// Resonance classification
// ---------------------------------------------------------------------------

/// Verdict of the integer-resonance scan.
#[derive(Debug, Clone, PartialEq)]
pub enum Resonance<T> {
    /// A nonzero integer vector with `|k . Omega| < tol` exists; the witness
    /// is the first hit among sign-canonical vectors (first nonzero
    /// component positive) in ascending lexicographic order.
    Resonant { witness: Vec<i64>, value: T },
    /// No integer relation up to the scanned bound.
    Nonresonant { k_max: i64 },
}

/// Exhaustively scans integer vectors `0 < |k|_inf <= k_max` for
/// `|k . Omega| < tol`.
pub fn resonance_classify<T: Real>(omega: &[T], k_max: i64, tol: T) -> Result<Resonance<T>> {
    if omega.is_empty() {
        return Err(Error::Input("empty frequency vector".into()));
    }
    if k_max < 1 {
        return Err(Error::Input(format!("k_max must be at least 1, got {k_max}")));
    }
    if !(tol > T::zero()) {
        return Err(Error::Input("tolerance must be positive".into()));
    }
    let n = omega.len();
    let mut k = vec![-k_max; n];
    loop {
        if is_sign_canonical(&k) {
            let dot = k
                .iter()
                .zip(omega)
                .fold(T::zero(), |acc, (&ki, &w)| acc + T::from_i64(ki).unwrap() * w);
            if dot.abs() < tol {
                return Ok(Resonance::Resonant { witness: k, value: dot });
            }
        }
        // lexicographic odometer, most significant component first
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(Resonance::Nonresonant { k_max });
            }
            i -= 1;
            if k[i] < k_max {
                k[i] += 1;
                for kj in &mut k[i + 1..] {
                    *kj = -k_max;
                }
                break;
            }
        }
    }
}

fn is_sign_canonical(k: &[i64]) -> bool {
    for &ki in k {
        if ki > 0 {
            return true;
        }
        if ki < 0 {
            return false;
        }
    }
    false // zero vector
}

// ---------------------------------------------------------------------------
// Fibrewise Hamiltonian vector field
// ---------------------------------------------------------------------------

/// The unique vector field with `i_X (pullback omega) = d_M f` at fixed
/// parameters: `(df/dp, -df/dq)` in the canonical `omega = dq ^ dp`
/// convention. Derivatives by central differences with step `step`.
pub fn fibrewise_hamiltonian_field<T: Real>(
    f: &dyn Fn(&PhasePoint<T>, &ParamPoint<T>) -> T,
    point: &PhasePoint<T>,
    x: &ParamPoint<T>,
    step: T,
) -> Result<(Vec<T>, Vec<T>)> {
    if !(step > T::zero()) {
        return Err(Error::Input("finite-difference step must be positive".into()));
    }
    let n = point.dof();
    let mut dq = Vec::with_capacity(n);
    let mut dp = Vec::with_capacity(n);
    let mut probe = point.clone();
    for i in 0..n {
        probe.p[i] = point.p[i] + step;
        let hi = f(&probe, x);
        probe.p[i] = point.p[i] - step;
        let lo = f(&probe, x);
        probe.p[i] = point.p[i];
        dq.push((hi - lo) / (step + step));

        probe.q[i] = point.q[i] + step;
        let hi = f(&probe, x);
        probe.q[i] = point.q[i] - step;
        let lo = f(&probe, x);
        probe.q[i] = point.q[i];
        dp.push(-(hi - lo) / (step + step));
    }
    Ok((dq, dp))
}

// ---------------------------------------------------------------------------
// Torus averages
// ---------------------------------------------------------------------------

/// Cap on the total node count of a torus grid.
const MAX_TORUS_NODES: usize = 1 << 22;

/// Visits every node of the uniform `q_order^n` grid on `[0, 2pi)^n` in
/// lexicographic order, reusing one angle buffer.
pub(crate) fn for_each_torus_node<T: Real>(
    n: usize,
    q_order: usize,
    mut visit: impl FnMut(&[T]) -> Result<()>,
) -> Result<()> {
    if n == 0 {
        return Err(Error::Input("torus dimension must be at least 1".into()));
    }
    if q_order < 4 {
        return Err(Error::Input(format!("quadrature order must be at least 4, got {q_order}")));
    }
    let total = (q_order as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if total > MAX_TORUS_NODES as u128 {
        return Err(Error::Resource(format!(
            "torus grid {q_order}^{n} exceeds the {MAX_TORUS_NODES}-node cap"
        )));
    }
    let step = T::two_pi() / T::from_usize(q_order).unwrap();
    let mut idx = vec![0usize; n];
    let mut angles = vec![T::zero(); n];
    loop {
        for (a, &i) in angles.iter_mut().zip(&idx) {
            *a = step * T::from_usize(i).unwrap();
        }
        visit(&angles)?;
        let mut d = n;
        loop {
            if d == 0 {
                return Ok(());
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < q_order {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Uniform (trapezoid) average of a 2pi-periodic sampler over the n-torus
/// with `q_order` nodes per dimension — the Haar average for the torus
/// action. Spectrally accurate for analytic integrands.
pub fn torus_average<T, V>(n: usize, q_order: usize, mut sampler: impl FnMut(&[T]) -> V) -> Result<V>
where
    T: Real,
    V: Copy + num_traits::Zero + core::ops::Add<Output = V> + core::ops::Mul<T, Output = V>,
{
    let mut values = Vec::new();
    for_each_torus_node(n, q_order, |angles: &[T]| {
        values.push(sampler(angles));
        Ok(())
    })?;
    let sum = pairwise_sum(&values);
    Ok(sum * (T::one() / T::from_usize(values.len()).unwrap()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::GeneralizedOscillator;
    use num_complex::Complex;
    use std::f64::consts::PI;

    fn point(coords: &[f64]) -> ParamPoint<f64> {
        ParamPoint::new(coords.to_vec()).unwrap()
    }

    fn osc_spec<'a>(osc: &'a GeneralizedOscillator, x: &[f64]) -> FlowSpec<'a, f64> {
        FlowSpec::new(FlowSystem::ExactCanonical(osc), point(x), 1e-3).unwrap()
    }

    #[test]
    fn quarter_turn() {
        let osc = GeneralizedOscillator::new();
        let spec = osc_spec(&osc, &[1.0, 0.0, 1.0]);
        let y = flow(&PhasePoint::one_dof(1.0, 0.0).unwrap(), &spec, PI / 2.0).unwrap();
        assert!((y.q[0]).abs() < 1e-12 && (y.p[0] + 1.0).abs() < 1e-12, "{y:?}");
    }

    #[test]
    fn zero_time_is_identity() {
        let osc = GeneralizedOscillator::new();
        let spec = osc_spec(&osc, &[2.0, 0.5, 1.0]);
        let y0 = PhasePoint::one_dof(0.7, -0.3).unwrap();
        let y = flow(&y0, &spec, 0.0).unwrap();
        assert_eq!(y, y0);
    }

    #[test]
    fn flow_composition() {
        let osc = GeneralizedOscillator::new();
        let spec = osc_spec(&osc, &[2.0, 0.5, 1.3]);
        let y0 = PhasePoint::one_dof(0.9, 0.4).unwrap();
        for &(s, t) in &[(0.3, 1.7), (2.0, -0.5), (10.0, 3.1)] {
            let a = flow(&flow(&y0, &spec, s).unwrap(), &spec, t).unwrap();
            let b = flow(&y0, &spec, s + t).unwrap();
            assert!((a.q[0] - b.q[0]).abs() < 1e-10 && (a.p[0] - b.p[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn leapfrog_energy_drift_quartic() {
        let quartic = SeparableSystem::quartic();
        let spec = FlowSpec::new(FlowSystem::Leapfrog(&quartic), point(&[0.0]), 1e-3).unwrap();
        let (q0, p0) = (1.1, 0.3);
        let e0 = quartic.energy(q0, p0);
        let mut y = PhasePoint::one_dof(q0, p0).unwrap();
        let mut max_rel: f64 = 0.0;
        for _ in 0..100 {
            y = flow(&y, &spec, 1.0).unwrap();
            let e = quartic.energy(y.q[0], y.p[0]);
            max_rel = max_rel.max(((e - e0) / e0).abs());
        }
        assert!(max_rel < 1e-5, "relative drift {max_rel}");
    }

    #[test]
    fn leapfrog_jacobian_is_unit() {
        let quartic = SeparableSystem::quartic();
        let mut rng = SplitMix64::new(0xD1CE);
        let h = 1e-6;
        for _ in 0..50 {
            let q = rng.next_in(-1.5, 1.5);
            let p = rng.next_in(-1.5, 1.5);
            let dt = 0.01;
            let f = |q: f64, p: f64| quartic.leapfrog_step(q, p, dt);
            let (qq_p, pq_p) = f(q + h, p);
            let (qq_m, pq_m) = f(q - h, p);
            let (qp_p, pp_p) = f(q, p + h);
            let (qp_m, pp_m) = f(q, p - h);
            let det = (qq_p - qq_m) / (2.0 * h) * ((pp_p - pp_m) / (2.0 * h))
                - (qp_p - qp_m) / (2.0 * h) * ((pq_p - pq_m) / (2.0 * h));
            assert!((det - 1.0).abs() < 1e-8, "det {det}");
        }
    }

    #[test]
    fn radial_observable_conserved_pointwise() {
        let osc = GeneralizedOscillator::new();
        let spec = osc_spec(&osc, &[1.0, 0.0, 1.0]);
        let report = liouville_drift(
            &spec,
            0.83,
            2000,
            &[Observable::RadiusSq],
            &Region::Disk { center: (0.0, 0.0), radius: 1.5 },
            7,
        )
        .unwrap();
        assert!(report.rows[0].drift.abs() < 1e-15, "drift {}", report.rows[0].drift);
        assert!(report.rows[0].pass);
    }

    #[test]
    fn mean_q_drift_within_three_sigma() {
        let osc = GeneralizedOscillator::new();
        let spec = osc_spec(&osc, &[1.0, 0.0, 1.0]);
        let report = liouville_drift(
            &spec,
            1.0,
            5000,
            &[Observable::Q, Observable::P],
            &Region::Disk { center: (0.0, 0.0), radius: 2.0 },
            11,
        )
        .unwrap();
        for row in &report.rows {
            assert!(row.pass, "{}: drift {} vs se {}", row.name, row.drift, row.std_err);
        }
    }

    #[test]
    fn drift_requires_enough_samples() {
        let osc = GeneralizedOscillator::new();
        let spec = osc_spec(&osc, &[1.0, 0.0, 1.0]);
        assert!(liouville_drift(
            &spec,
            1.0,
            10,
            &[Observable::Q],
            &Region::Disk { center: (0.0, 0.0), radius: 1.0 },
            1,
        )
        .is_err());
    }

    #[test]
    fn empty_region_rejected() {
        let osc = GeneralizedOscillator::new();
        let spec = osc_spec(&osc, &[1.0, 0.0, 1.0]);
        assert!(matches!(
            liouville_drift(
                &spec,
                1.0,
                1000,
                &[Observable::Q],
                &Region::Disk { center: (0.0, 0.0), radius: -1.0 },
                1,
            ),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn resonance_examples() {
        match resonance_classify(&[1.0, 1.0], 5, 1e-9).unwrap() {
            Resonance::Resonant { witness, .. } => assert_eq!(witness, vec![1, -1]),
            other => panic!("expected resonant, got {other:?}"),
        }
        assert!(matches!(
            resonance_classify(&[2.7], 50, 1e-9).unwrap(),
            Resonance::Nonresonant { .. }
        ));
        assert!(matches!(
            resonance_classify(&[1.0, std::f64::consts::SQRT_2], 50, 1e-9).unwrap(),
            Resonance::Nonresonant { .. }
        ));
    }

    #[test]
    fn resonance_matches_brute_force() {
        // plain rescan over all k, no canonicalization
        let mut rng = SplitMix64::new(0xBEEF);
        for _ in 0..100 {
            let omega = [rng.next_in(-2.0, 2.0), rng.next_in(-2.0, 2.0)];
            let tol = 1e-6;
            let mut brute_hit = false;
            for k1 in -10..=10i64 {
                for k2 in -10..=10i64 {
                    if (k1, k2) == (0, 0) {
                        continue;
                    }
                    if (k1 as f64 * omega[0] + k2 as f64 * omega[1]).abs() < tol {
                        brute_hit = true;
                    }
                }
            }
            let verdict = resonance_classify(&omega, 10, tol).unwrap();
            match verdict {
                Resonance::Resonant { ref witness, value } => {
                    assert!(brute_hit, "classifier found {witness:?} ({value}) brute force missed");
                }
                Resonance::Nonresonant { .. } => assert!(!brute_hit),
            }
        }
    }

    #[test]
    fn fibrewise_field_examples() {
        let x = point(&[1.0]);
        let y = PhasePoint::one_dof(0.4, -0.2).unwrap();
        let f_q = |pt: &PhasePoint<f64>, _: &ParamPoint<f64>| pt.q[0];
        let (dq, dp) = fibrewise_hamiltonian_field(&f_q, &y, &x, 1e-6).unwrap();
        assert!(dq[0].abs() < 1e-9 && (dp[0] + 1.0).abs() < 1e-9);

        let f_h = |pt: &PhasePoint<f64>, _: &ParamPoint<f64>| {
            0.5 * (pt.q[0] * pt.q[0] + pt.p[0] * pt.p[0])
        };
        let (dq, dp) = fibrewise_hamiltonian_field(&f_h, &y, &x, 1e-6).unwrap();
        assert!((dq[0] + 0.2).abs() < 1e-9 && (dp[0] + 0.4).abs() < 1e-9);
    }

    #[test]
    fn fibrewise_contraction_identity() {
        // i_X omega = d_M f for a random cubic, to 1e-7 componentwise.
        let mut rng = SplitMix64::new(0xC0FFEE);
        let coef: Vec<f64> = (0..10).map(|_| rng.next_in(-1.0, 1.0)).collect();
        let f = move |pt: &PhasePoint<f64>, _: &ParamPoint<f64>| {
            let (q, p) = (pt.q[0], pt.p[0]);
            coef[0]
                + coef[1] * q
                + coef[2] * p
                + coef[3] * q * q
                + coef[4] * q * p
                + coef[5] * p * p
                + coef[6] * q * q * q
                + coef[7] * q * q * p
                + coef[8] * q * p * p
                + coef[9] * p * p * p
        };
        let x = point(&[0.0]);
        let h = 1e-5;
        for _ in 0..20 {
            let y = PhasePoint::one_dof(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)).unwrap();
            let (dq, dp) = fibrewise_hamiltonian_field(&f, &y, &x, h).unwrap();
            // i_X(dq ^ dp) = X_q dp - X_p dq must reproduce (df/dq, df/dp)
            let mut probe = y.clone();
            probe.q[0] = y.q[0] + h;
            let fqp = f(&probe, &x);
            probe.q[0] = y.q[0] - h;
            let fqm = f(&probe, &x);
            probe.q[0] = y.q[0];
            probe.p[0] = y.p[0] + h;
            let fpp = f(&probe, &x);
            probe.p[0] = y.p[0] - h;
            let fpm = f(&probe, &x);
            let df_dq = (fqp - fqm) / (2.0 * h);
            let df_dp = (fpp - fpm) / (2.0 * h);
            assert!((dq[0] - df_dp).abs() < 1e-7);
            assert!((-dp[0] - df_dq).abs() < 1e-7);
        }
    }

    #[test]
    fn torus_average_exactness() {
        let c = torus_average(1, 8, |_: &[f64]| 2.75).unwrap();
        assert_eq!(c, 2.75);

        let z = torus_average(1, 16, |a: &[f64]| Complex::new(a[0].cos(), a[0].sin())).unwrap();
        assert!(z.norm() < 1e-15, "{z}");

        let cs = torus_average(1, 8, |a: &[f64]| a[0].cos().powi(2)).unwrap();
        assert!((cs - 0.5).abs() < 1e-15);
    }

    #[test]
    fn torus_average_shift_invariance() {
        let f = |a: &[f64]| (a[0].sin() + 0.3 * (2.0 * a[1]).cos()).exp();
        let base = torus_average(2, 32, |a: &[f64]| f(a)).unwrap();
        // grid-multiple shift: same node multiset
        let grid_shift = 2.0 * PI * 3.0 / 32.0;
        let shifted = torus_average(2, 32, |a: &[f64]| f(&[a[0] + grid_shift, a[1]])).unwrap();
        assert!((base - shifted).abs() < 1e-13);
        // generic shift: equal through spectral accuracy
        let generic = torus_average(2, 32, |a: &[f64]| f(&[a[0] + 0.7321, a[1] - 1.1])).unwrap();
        assert!((base - generic).abs() < 1e-13);
    }

    #[test]
    fn torus_average_resource_cap() {
        assert!(matches!(
            torus_average(8, 64, |_: &[f64]| 0.0),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn ergodic_time_average_matches_torus_average() {
        // nonresonant 2-torus translation: temporal mean equals Haar mean
        let omega = [1.0, std::f64::consts::SQRT_2];
        let f = |a: &[f64]| 1.5 + (a[0] - a[1]).cos() + 0.5 * a[1].sin();
        let haar = torus_average(2, 32, |a: &[f64]| f(a)).unwrap();
        let t_total = 1e4;
        let dt = 0.05;
        let steps = (t_total / dt) as usize;
        let phi0 = [0.3, 1.1];
        let mut acc = 0.0;
        for k in 0..steps {
            let t = (k as f64 + 0.5) * dt;
            acc += f(&[phi0[0] + omega[0] * t, phi0[1] + omega[1] * t]);
        }
        let time_avg = acc / steps as f64;
        assert!((time_avg - haar).abs() < 1e-2, "{time_avg} vs {haar}");
    }
}
