//! Parametrized integrable Hamiltonian families and action-angle charts.
//!
//! Two kinds of family are supported. The built-in generalized oscillator
//! `H(q,p; X,Y,Z) = (X q^2 + 2 Y q p + Z p^2) / 2` carries an analytic
//! action-angle chart, so every chart-derived quantity can be checked against
//! closed forms. Abstract families are given directly in action-angle form
//! `H(I; x)` together with a user-supplied chart-deformation one-form, which
//! is what lets higher-dimensional tori participate without an n-dof chart
//! solver.
//!
//! Chart conventions for the oscillator: normal form `Q = sqrt(w/Z) q`,
//! `P = (Y/sqrt(wZ)) q + sqrt(Z/w) p` with `w = sqrt(XZ - Y^2)`, action
//! `I = (Q^2 + P^2)/2` and angle `phi = atan2(-P, Q)` in `[0, 2pi)`. Under
//! the flow the angle advances as `phi_dot = +w`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::real::{frac, pairwise_sum, wrap_to_pi, wrap_to_two_pi, Real};

/// Default finite-difference step in parameter directions.
pub fn default_fd_step<T: Real>() -> T {
    T::lit(1e-5)
}

/// Default finite-difference step in action directions.
pub fn default_action_step<T: Real>() -> T {
    T::lit(1e-5)
}

/// Default |det| threshold under which a frequency map counts as degenerate.
pub fn degeneracy_tolerance<T: Real>() -> T {
    T::lit(1e-9)
}

/// Point in the parameter manifold `P` (subset of `R^m`).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint<T> {
    coords: Vec<T>,
}

impl<T: Real> ParamPoint<T> {
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Input("parameter point needs at least one coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Input("parameter coordinates must be finite".into()));
        }
        Ok(Self { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// Copy with coordinate `dir` moved by `step`.
    pub fn shifted(&self, dir: usize, step: T) -> Self {
        let mut coords = self.coords.clone();
        coords[dir] += step;
        Self { coords }
    }
}

impl<T> core::ops::Index<usize> for ParamPoint<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.coords[i]
    }
}

/// A parametrized integrable family presented through its action variables.
///
/// Implementations must be pure: every method is a function of its arguments
/// only, so values can be evaluated concurrently from any number of workers.
pub trait IntegrableFamily<T: Real>: Send + Sync {
    /// Dimension n of the invariant torus.
    fn torus_dim(&self) -> usize;

    /// Dimension m of the parameter manifold.
    fn param_dim(&self) -> usize;

    /// Errors unless `x` lies in the admissible region.
    fn check_point(&self, x: &ParamPoint<T>) -> Result<()>;

    /// Energy `H(I; x)`.
    fn energy(&self, action: &[T], x: &ParamPoint<T>) -> Result<T>;

    /// Frequency vector `Omega = dH/dI`. The default uses central
    /// differences with step [`default_action_step`]; families with analytic
    /// frequencies override it.
    fn frequency(&self, action: &[T], x: &ParamPoint<T>) -> Result<Vec<T>> {
        fd_frequency(self, action, x, default_action_step())
    }

    /// Chart deformation `dPhi_i/dx_dir` at the fixed phase-space point
    /// labeled `(action, angle)` in the chart at `x`, one value per torus
    /// component. `step` seeds the finite difference where one is taken.
    fn chart_deformation(
        &self,
        action: &[T],
        angle: &[T],
        x: &ParamPoint<T>,
        dir: usize,
        step: T,
    ) -> Result<Vec<T>>;

    /// Angle shift `Phi_{x2}(y) - Phi_{x1}(y)` (defined mod 2pi per
    /// component) for `y` the phase-space point labeled `(action, angle)` in
    /// the chart at `x1`. Exact through charts for canonical families;
    /// first-order in `x2 - x1` via the midpoint deformation otherwise.
    fn chart_shift(
        &self,
        action: &[T],
        angle: &[T],
        x1: &ParamPoint<T>,
        x2: &ParamPoint<T>,
    ) -> Result<Vec<T>>;
}

/// Central-difference frequency for any family exposing only `energy`.
pub fn fd_frequency<T: Real, F: IntegrableFamily<T> + ?Sized>(
    family: &F,
    action: &[T],
    x: &ParamPoint<T>,
    step: T,
) -> Result<Vec<T>> {
    let mut omega = Vec::with_capacity(action.len());
    let mut shifted = action.to_vec();
    for i in 0..action.len() {
        shifted[i] = action[i] + step;
        let hi = family.energy(&shifted, x)?;
        shifted[i] = action[i] - step;
        let lo = family.energy(&shifted, x)?;
        shifted[i] = action[i];
        omega.push((hi - lo) / (step + step));
    }
    Ok(omega)
}

/// A 1-dof family with an explicit canonical action-angle chart.
pub trait CanonicalFamily<T: Real>: IntegrableFamily<T> {
    /// Energy at canonical coordinates.
    fn hamiltonian(&self, q: T, p: T, x: &ParamPoint<T>) -> Result<T>;

    /// Forward chart `(q, p) -> (I, phi)` with `phi` in `[0, 2pi)`.
    fn to_action_angle(&self, q: T, p: T, x: &ParamPoint<T>) -> Result<(T, T)>;

    /// Inverse chart `(I, phi) -> (q, p)`.
    #[allow(clippy::wrong_self_convention)]
    fn from_action_angle(&self, action: T, angle: T, x: &ParamPoint<T>) -> Result<(T, T)>;

    /// Exact flow of `H(.; x)` over `dt` with the parameters frozen.
    /// Infallible by contract; callers guarantee `x` admissible.
    fn frozen_step(&self, q: T, p: T, x: &[T], dt: T) -> (T, T);

    /// Frozen-parameter flow applied to a batch sharing the same `x` and
    /// `dt`; overridden where the propagator can be factored out.
    fn frozen_step_many(&self, points: &mut [(T, T)], x: &[T], dt: T) {
        for pt in points.iter_mut() {
            *pt = self.frozen_step(pt.0, pt.1, x, dt);
        }
    }

    /// Scalar angular frequency on the admissible region (NaN outside).
    fn angular_frequency(&self, x: &[T]) -> T;

    /// Identifier of the angle-origin convention this chart fixes.
    fn gauge_tag(&self) -> String;
}

// ---------------------------------------------------------------------------
// Generalized oscillator
// ---------------------------------------------------------------------------

/// The generalized harmonic oscillator `H = (X q^2 + 2 Y q p + Z p^2)/2` on
/// the admissible region `Z > 0`, `X Z - Y^2 > 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GeneralizedOscillator;

struct NormalForm<T> {
    omega: T,
    /// Q = a q
    a: T,
    /// P = b q + c p
    b: T,
    c: T,
}

fn normal_form<T: Real>(x: &[T]) -> Result<NormalForm<T>> {
    if x.len() != 3 {
        return Err(Error::Shape(format!(
            "oscillator expects parameters (X, Y, Z), got {} coordinates",
            x.len()
        )));
    }
    let (big_x, big_y, big_z) = (x[0], x[1], x[2]);
    if !(big_z > T::zero()) {
        return Err(Error::Inadmissible(format!("Z > 0 violated (Z = {big_z})")));
    }
    let disc = big_x * big_z - big_y * big_y;
    if !(disc > T::zero()) {
        return Err(Error::Inadmissible(format!(
            "X*Z - Y^2 > 0 violated (X*Z - Y^2 = {disc})"
        )));
    }
    let omega = disc.sqrt();
    Ok(NormalForm {
        omega,
        a: (omega / big_z).sqrt(),
        b: big_y / (omega * big_z).sqrt(),
        c: (big_z / omega).sqrt(),
    })
}

/// Normal-form angular frequency `w(X,Y,Z) = sqrt(X Z - Y^2)` of the
/// built-in oscillator family.
pub fn oscillator_frequency<T: Real>(x: &ParamPoint<T>) -> Result<T> {
    Ok(normal_form(x.coords())?.omega)
}

impl GeneralizedOscillator {
    pub fn new() -> Self {
        Self
    }
}

impl<T: Real> IntegrableFamily<T> for GeneralizedOscillator {
    fn torus_dim(&self) -> usize {
        1
    }

    fn param_dim(&self) -> usize {
        3
    }

    fn check_point(&self, x: &ParamPoint<T>) -> Result<()> {
        normal_form(x.coords()).map(|_| ())
    }

    fn energy(&self, action: &[T], x: &ParamPoint<T>) -> Result<T> {
        let nf = normal_form(x.coords())?;
        Ok(nf.omega * action[0])
    }

    fn frequency(&self, action: &[T], x: &ParamPoint<T>) -> Result<Vec<T>> {
        let _ = action;
        Ok(vec![normal_form(x.coords())?.omega])
    }

    fn chart_deformation(
        &self,
        action: &[T],
        angle: &[T],
        x: &ParamPoint<T>,
        dir: usize,
        step: T,
    ) -> Result<Vec<T>> {
        canonical_chart_deformation(self, action, angle, x, dir, step)
    }

    fn chart_shift(
        &self,
        action: &[T],
        angle: &[T],
        x1: &ParamPoint<T>,
        x2: &ParamPoint<T>,
    ) -> Result<Vec<T>> {
        canonical_chart_shift(self, action, angle, x1, x2)
    }
}

impl<T: Real> CanonicalFamily<T> for GeneralizedOscillator {
    fn hamiltonian(&self, q: T, p: T, x: &ParamPoint<T>) -> Result<T> {
        self.check_point(x)?;
        let c = x.coords();
        Ok(T::half() * (c[0] * q * q + (c[1] + c[1]) * q * p + c[2] * p * p))
    }

    fn to_action_angle(&self, q: T, p: T, x: &ParamPoint<T>) -> Result<(T, T)> {
        let nf = normal_form(x.coords())?;
        if q == T::zero() && p == T::zero() {
            return Err(Error::SingularPoint);
        }
        let big_q = nf.a * q;
        let big_p = nf.b * q + nf.c * p;
        let action = T::half() * (big_q * big_q + big_p * big_p);
        let angle = wrap_to_two_pi((-big_p).atan2(big_q));
        Ok((action, angle))
    }

    fn from_action_angle(&self, action: T, angle: T, x: &ParamPoint<T>) -> Result<(T, T)> {
        let nf = normal_form(x.coords())?;
        if !(action > T::zero()) {
            return Err(Error::Domain(format!("action must be positive, got {action}")));
        }
        let r = (action + action).sqrt();
        let big_q = r * angle.cos();
        let big_p = -r * angle.sin();
        let q = big_q / nf.a;
        let p = (big_p - nf.b * q) / nf.c;
        Ok((q, p))
    }

    fn frozen_step(&self, q: T, p: T, x: &[T], dt: T) -> (T, T) {
        // exp(A t) = cos(wt) I + sin(wt)/w A for A = [[Y, Z], [-X, -Y]],
        // A^2 = -w^2 I; this is the exact rotation in normal-form coordinates.
        let (big_x, big_y, big_z) = (x[0], x[1], x[2]);
        let omega = (big_x * big_z - big_y * big_y).sqrt();
        let (s, c) = (omega * dt).sin_cos();
        let k = s / omega;
        (
            c * q + k * (big_y * q + big_z * p),
            c * p + k * (-big_x * q - big_y * p),
        )
    }

    fn frozen_step_many(&self, points: &mut [(T, T)], x: &[T], dt: T) {
        let (big_x, big_y, big_z) = (x[0], x[1], x[2]);
        let omega = (big_x * big_z - big_y * big_y).sqrt();
        let (s, c) = (omega * dt).sin_cos();
        let k = s / omega;
        for pt in points.iter_mut() {
            let (q, p) = *pt;
            *pt = (
                c * q + k * (big_y * q + big_z * p),
                c * p + k * (-big_x * q - big_y * p),
            );
        }
    }

    fn angular_frequency(&self, x: &[T]) -> T {
        (x[0] * x[2] - x[1] * x[1]).sqrt()
    }

    fn gauge_tag(&self) -> String {
        "normal-form atan2(-P, Q)".into()
    }
}

// ---------------------------------------------------------------------------
// Regauged wrapper
// ---------------------------------------------------------------------------

/// Chart regauge `phi -> phi + g(x)` of a canonical family.
///
/// The dynamics is untouched; only the angle origin moves. Holonomies over
/// closed loops must be invariant under this wrapper for single-valued `g`,
/// which is what the gauge tests drive through it.
type GaugeFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

#[derive(Clone)]
pub struct RegaugedFamily<F> {
    inner: F,
    gauge: Arc<GaugeFn>,
}

impl<F> RegaugedFamily<F> {
    pub fn new(inner: F, gauge: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { inner, gauge: Arc::new(gauge) }
    }

    fn gauge_at(&self, x: &ParamPoint<f64>) -> f64 {
        (self.gauge)(x.coords())
    }
}

impl<F: IntegrableFamily<f64> + CanonicalFamily<f64>> IntegrableFamily<f64> for RegaugedFamily<F> {
    fn torus_dim(&self) -> usize {
        self.inner.torus_dim()
    }

    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }

    fn check_point(&self, x: &ParamPoint<f64>) -> Result<()> {
        self.inner.check_point(x)
    }

    fn energy(&self, action: &[f64], x: &ParamPoint<f64>) -> Result<f64> {
        self.inner.energy(action, x)
    }

    fn frequency(&self, action: &[f64], x: &ParamPoint<f64>) -> Result<Vec<f64>> {
        self.inner.frequency(action, x)
    }

    fn chart_deformation(
        &self,
        action: &[f64],
        angle: &[f64],
        x: &ParamPoint<f64>,
        dir: usize,
        step: f64,
    ) -> Result<Vec<f64>> {
        canonical_chart_deformation(self, action, angle, x, dir, step)
    }

    fn chart_shift(
        &self,
        action: &[f64],
        angle: &[f64],
        x1: &ParamPoint<f64>,
        x2: &ParamPoint<f64>,
    ) -> Result<Vec<f64>> {
        canonical_chart_shift(self, action, angle, x1, x2)
    }
}

impl<F: CanonicalFamily<f64>> CanonicalFamily<f64> for RegaugedFamily<F> {
    fn hamiltonian(&self, q: f64, p: f64, x: &ParamPoint<f64>) -> Result<f64> {
        self.inner.hamiltonian(q, p, x)
    }

    fn to_action_angle(&self, q: f64, p: f64, x: &ParamPoint<f64>) -> Result<(f64, f64)> {
        let (action, angle) = self.inner.to_action_angle(q, p, x)?;
        Ok((action, wrap_to_two_pi(angle + self.gauge_at(x))))
    }

    fn from_action_angle(&self, action: f64, angle: f64, x: &ParamPoint<f64>) -> Result<(f64, f64)> {
        self.inner.from_action_angle(action, angle - self.gauge_at(x), x)
    }

    fn frozen_step(&self, q: f64, p: f64, x: &[f64], dt: f64) -> (f64, f64) {
        self.inner.frozen_step(q, p, x, dt)
    }

    fn frozen_step_many(&self, points: &mut [(f64, f64)], x: &[f64], dt: f64) {
        self.inner.frozen_step_many(points, x, dt)
    }

    fn angular_frequency(&self, x: &[f64]) -> f64 {
        self.inner.angular_frequency(x)
    }

    fn gauge_tag(&self) -> String {
        format!("{} + g(x)", self.inner.gauge_tag())
    }
}

// ---------------------------------------------------------------------------
// Abstract action-angle families
// ---------------------------------------------------------------------------

type EnergyFn<T> = dyn Fn(&[T], &ParamPoint<T>) -> T + Send + Sync;
type FrequencyFn<T> = dyn Fn(&[T], &ParamPoint<T>) -> Vec<T> + Send + Sync;
type DeformationFn<T> = dyn Fn(&[T], &[T], &ParamPoint<T>, usize) -> Vec<T> + Send + Sync;
type AdmissibleFn<T> = dyn Fn(&ParamPoint<T>) -> bool + Send + Sync;

/// Family given directly as `H(I; x)` plus a chart-deformation one-form.
///
/// No canonical coordinates exist to differentiate, so the deformation
/// `dPhi_i/dx_j` at fixed phase-space point is supplied by the caller and
/// must be 2pi-periodic in every angle component.
#[derive(Clone)]
pub struct AbstractFamily<T> {
    torus_dim: usize,
    param_dim: usize,
    energy: Arc<EnergyFn<T>>,
    frequency: Option<Arc<FrequencyFn<T>>>,
    deformation: Arc<DeformationFn<T>>,
    admissible: Option<Arc<AdmissibleFn<T>>>,
}

impl<T: Real> AbstractFamily<T> {
    pub fn new(
        torus_dim: usize,
        param_dim: usize,
        energy: impl Fn(&[T], &ParamPoint<T>) -> T + Send + Sync + 'static,
        deformation: impl Fn(&[T], &[T], &ParamPoint<T>, usize) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            torus_dim,
            param_dim,
            energy: Arc::new(energy),
            frequency: None,
            deformation: Arc::new(deformation),
            admissible: None,
        }
    }

    /// Attach an analytic frequency map instead of the finite-difference
    /// default.
    pub fn with_frequency(
        mut self,
        frequency: impl Fn(&[T], &ParamPoint<T>) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        self.frequency = Some(Arc::new(frequency));
        self
    }

    /// Restrict the admissible region.
    pub fn with_admissibility(
        mut self,
        admissible: impl Fn(&ParamPoint<T>) -> bool + Send + Sync + 'static,
    ) -> Self {
        self.admissible = Some(Arc::new(admissible));
        self
    }
}

impl<T: Real> IntegrableFamily<T> for AbstractFamily<T> {
    fn torus_dim(&self) -> usize {
        self.torus_dim
    }

    fn param_dim(&self) -> usize {
        self.param_dim
    }

    fn check_point(&self, x: &ParamPoint<T>) -> Result<()> {
        if x.dim() != self.param_dim {
            return Err(Error::Shape(format!(
                "expected {} parameter coordinates, got {}",
                self.param_dim,
                x.dim()
            )));
        }
        match &self.admissible {
            Some(f) if !f(x) => Err(Error::Inadmissible(
                "point rejected by the family's admissibility predicate".into(),
            )),
            _ => Ok(()),
        }
    }

    fn energy(&self, action: &[T], x: &ParamPoint<T>) -> Result<T> {
        self.check_point(x)?;
        Ok((self.energy)(action, x))
    }

    fn frequency(&self, action: &[T], x: &ParamPoint<T>) -> Result<Vec<T>> {
        self.check_point(x)?;
        match &self.frequency {
            Some(f) => Ok(f(action, x)),
            None => fd_frequency(self, action, x, default_action_step()),
        }
    }

    fn chart_deformation(
        &self,
        action: &[T],
        angle: &[T],
        x: &ParamPoint<T>,
        dir: usize,
        _step: T,
    ) -> Result<Vec<T>> {
        self.check_point(x)?;
        Ok((self.deformation)(action, angle, x, dir))
    }

    fn chart_shift(
        &self,
        action: &[T],
        angle: &[T],
        x1: &ParamPoint<T>,
        x2: &ParamPoint<T>,
    ) -> Result<Vec<T>> {
        // Midpoint deformation dotted with the parameter step: second-order
        // accurate per segment, which is all the overlap product needs.
        self.check_point(x1)?;
        self.check_point(x2)?;
        let mid = ParamPoint::new(
            x1.coords()
                .iter()
                .zip(x2.coords())
                .map(|(&a, &b)| T::half() * (a + b))
                .collect(),
        )?;
        let mut shift = vec![T::zero(); self.torus_dim];
        for j in 0..self.param_dim {
            let dx = x2.coords()[j] - x1.coords()[j];
            if dx == T::zero() {
                continue;
            }
            let d = (self.deformation)(action, angle, &mid, j);
            for (s, di) in shift.iter_mut().zip(&d) {
                *s += *di * dx;
            }
        }
        Ok(shift)
    }
}

// ---------------------------------------------------------------------------
// Chart-based deformation and shift for canonical families
// ---------------------------------------------------------------------------

const MAX_STEP_HALVINGS: usize = 40;

/// Central difference of the angle chart in parameter direction `dir` at a
/// fixed phase-space point. Angle differences are wrapped to `(-pi, pi]`
/// before dividing; a difference past `pi/2` is treated as branch-cut
/// ambiguous and retried with half the step.
pub fn canonical_chart_deformation<T, F>(
    family: &F,
    action: &[T],
    angle: &[T],
    x: &ParamPoint<T>,
    dir: usize,
    step: T,
) -> Result<Vec<T>>
where
    T: Real,
    F: CanonicalFamily<T> + ?Sized,
{
    if dir >= x.dim() {
        return Err(Error::Input(format!(
            "direction {dir} out of range for {}-dimensional parameters",
            x.dim()
        )));
    }
    let (q, p) = family.from_action_angle(action[0], angle[0], x)?;
    let mut h = step;
    for _ in 0..MAX_STEP_HALVINGS {
        let xp = x.shifted(dir, h);
        let xm = x.shifted(dir, -h);
        let stencil = |e: Error| match e {
            Error::Inadmissible(msg) => Error::Stencil(format!(
                "finite-difference stencil (step {h}) left the chart domain: {msg}"
            )),
            other => other,
        };
        let (_, phi_p) = family.to_action_angle(q, p, &xp).map_err(stencil)?;
        let (_, phi_m) = family.to_action_angle(q, p, &xm).map_err(stencil)?;
        let dphi = wrap_to_pi(phi_p - phi_m);
        if dphi.abs() > T::FRAC_PI_2() {
            h *= T::half();
            continue;
        }
        return Ok(vec![dphi / (h + h)]);
    }
    Err(Error::StepTooLarge(format!(
        "angle difference stayed branch-cut ambiguous after {MAX_STEP_HALVINGS} halvings of step {step}"
    )))
}

/// Exact chart shift `Phi_{x2}(y) - angle` through the charts of a canonical
/// family, for `y` the point labeled `(action, angle)` at `x1`.
pub fn canonical_chart_shift<T, F>(
    family: &F,
    action: &[T],
    angle: &[T],
    x1: &ParamPoint<T>,
    x2: &ParamPoint<T>,
) -> Result<Vec<T>>
where
    T: Real,
    F: CanonicalFamily<T> + ?Sized,
{
    let (q, p) = family.from_action_angle(action[0], angle[0], x1)?;
    let (_, phi2) = family.to_action_angle(q, p, x2).map_err(|e| match e {
        Error::Inadmissible(msg) => {
            Error::Domain(format!("fiber torus leaves the chart domain at the target point: {msg}"))
        }
        other => other,
    })?;
    Ok(vec![phi2 - angle[0]])
}

// ---------------------------------------------------------------------------
// Non-degeneracy and numeric action
// ---------------------------------------------------------------------------

/// Outcome of the frequency-map degeneracy check.
#[derive(Debug, Clone, PartialEq)]
pub struct Nondegeneracy<T> {
    /// det dOmega/dI by central differences.
    pub det: T,
    pub degenerate: bool,
}

/// Determinant of `dOmega/dI` by central differences of the family's
/// frequency map (itself analytic when the family provides one).
///
/// The built-in oscillator is isochronous, so it reports `det = 0`,
/// `degenerate = true`; nothing downstream gates on the flag.
pub fn nondegeneracy<T: Real, F: IntegrableFamily<T> + ?Sized>(
    family: &F,
    action: &[T],
    x: &ParamPoint<T>,
    step: T,
    tol: T,
) -> Result<Nondegeneracy<T>> {
    let n = family.torus_dim();
    let mut matrix = vec![vec![T::zero(); n]; n];
    let mut shifted = action.to_vec();
    for j in 0..n {
        shifted[j] = action[j] + step;
        let hi = family.frequency(&shifted, x)?;
        shifted[j] = action[j] - step;
        let lo = family.frequency(&shifted, x)?;
        shifted[j] = action[j];
        for i in 0..n {
            matrix[i][j] = (hi[i] - lo[i]) / (step + step);
        }
    }
    let det = determinant(&mut matrix);
    Ok(Nondegeneracy { det, degenerate: det.abs() < tol })
}

fn determinant<T: Real>(m: &mut [Vec<T>]) -> T {
    let n = m.len();
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| {
                m[a][col]
                    .abs()
                    .partial_cmp(&m[b][col].abs())
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[pivot][col] == T::zero() {
            return T::zero();
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            let pivot_row = m[col].clone();
            for (entry, &pv) in m[row].iter_mut().zip(&pivot_row).skip(col) {
                *entry -= f * pv;
            }
        }
    }
    det
}

/// Action `I = (1/2pi) closed-integral p dq` of the level set `H = e_level`
/// of a 1-dof Hamiltonian, computed as the enclosed area over 2pi.
///
/// The level curve is parametrized radially about the origin (both built-in
/// test systems are star-shaped about it), the radius is resolved by
/// bisection on each ray, and the area integral uses the uniform-angle
/// trapezoid rule, which converges spectrally for analytic ovals.
pub fn numeric_action<T: Real>(
    e_level: T,
    x: &ParamPoint<T>,
    hamiltonian: impl Fn(T, T, &ParamPoint<T>) -> T,
    q_order: usize,
) -> Result<T> {
    if q_order < 4 {
        return Err(Error::Input("quadrature order must be at least 4".into()));
    }
    let center = hamiltonian(T::zero(), T::zero(), x);
    if !(center < e_level) {
        return Err(Error::LevelSet(format!(
            "origin is not interior to the level set (H(0,0) = {center}, level = {e_level})"
        )));
    }
    let n = q_order;
    let mut r_sq = Vec::with_capacity(n);
    for j in 0..n {
        let phi = T::two_pi() * frac(T::from_usize(j).unwrap() / T::from_usize(n).unwrap());
        let (cp, sp) = (phi.cos(), phi.sin());
        let h_at = |r: T| hamiltonian(r * cp, r * sp, x);
        // Bracket the crossing by doubling.
        let mut hi = T::one();
        let mut guard = 0;
        while h_at(hi) < e_level {
            hi = hi + hi;
            guard += 1;
            if guard > 200 {
                return Err(Error::LevelSet(
                    "level set is unbounded along a ray (no crossing found)".into(),
                ));
            }
        }
        let mut lo = T::zero();
        for _ in 0..128 {
            let mid = T::half() * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if h_at(mid) < e_level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = T::half() * (lo + hi);
        r_sq.push(r * r);
    }
    // area = 1/2 integral r^2 dphi; action = area / 2pi.
    let sum = pairwise_sum(&r_sq);
    Ok(sum / (T::from_usize(2 * n).unwrap()))
}
