//! Hannay-Berry connection, Hannay and Berry holonomies, and the relation
//! map between them.
//!
//! The connection one-form is the torus average of the chart deformation:
//! `A_ij(x) = < dPhi_i/dx_j >` over the invariant torus `I = mu`. Its
//! holonomy over a parameter loop is the Hannay angle; the Berry phase of
//! the lifted eigenstate `|m, x>` is the argument of the product of
//! fiber-averaged overlaps along the same loop. The relation report pins the
//! two against each other: `residual_m = |wrap(beta_m - m . theta)|`, an
//! empirical probe of the relation map `tau -> exp[i S(m . tau)]` with
//! `S(0) = 0` enforced through the `m = 0` row and the constant loop.
//!
//! Orientation handling: loops carry an orientation flag, and the connection
//! ops consume it algebraically — holonomy inversion is `theta -> -theta`,
//! `beta -> arg conj` — so reversal is exact in floating point. The honest
//! time-parametrized evaluation [`ParamLoop::at`] still reflects the flag,
//! which is what the slow-drive oracle integrates; agreement between the two
//! routes is part of the oracle cross-check.

use std::sync::Arc;

use num_complex::Complex;

use crate::dynamics::for_each_torus_node;
use crate::error::{Error, Result};
use crate::families::{IntegrableFamily, ParamPoint};
use crate::koopman::ModeVector;
use crate::real::{frac, pairwise_sum, wrap_to_pi, Real};

/// Default segment count for loop discretizations.
pub const DEFAULT_SEGMENTS: usize = 256;
/// Default quadrature order for torus averages.
pub const DEFAULT_QUADRATURE: usize = 128;
/// Default residual tolerance for the relation report.
pub fn default_residual_tol<T: Real>() -> T {
    T::lit(1e-6)
}

/// Global sign relating the oriented connection integral to the reported
/// Hannay angle: `theta = sign * sum A . dx`. Pinned once by requiring
/// agreement with the adiabatic slow-drive oracle on the standard circle
/// loop and hard-coded here; the relation residuals are insensitive to it
/// because the Berry overlaps inherit the same chart.
pub fn hannay_orientation_sign<T: Real>() -> T {
    T::one()
}

/// Traversal direction of a parameter loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Forward,
    Reversed,
}

type LoopMap<T> = dyn Fn(T) -> Vec<T> + Send + Sync;

#[derive(Clone)]
enum LoopKind<T> {
    Constant(ParamPoint<T>),
    Circle { center: ParamPoint<T>, radius: T, plane: (usize, usize) },
    Polyline { vertices: Vec<ParamPoint<T>> },
    Repeat { inner: Box<LoopKind<T>>, times: u32 },
    Custom { dim: usize, map: Arc<LoopMap<T>> },
}

impl<T: Real> LoopKind<T> {
    fn dim(&self) -> usize {
        match self {
            LoopKind::Constant(x) => x.dim(),
            LoopKind::Circle { center, .. } => center.dim(),
            LoopKind::Polyline { vertices } => vertices[0].dim(),
            LoopKind::Repeat { inner, .. } => inner.dim(),
            LoopKind::Custom { dim, .. } => *dim,
        }
    }

    /// Evaluation at the wrapped parameter `frac(u)`; wrapping first keeps
    /// sampled loops bitwise closed.
    fn at_into(&self, u: T, out: &mut [T]) {
        let uf = frac(u);
        match self {
            LoopKind::Constant(x) => out.copy_from_slice(x.coords()),
            LoopKind::Circle { center, radius, plane } => {
                out.copy_from_slice(center.coords());
                let angle = T::two_pi() * uf;
                out[plane.0] += *radius * angle.cos();
                out[plane.1] += *radius * angle.sin();
            }
            LoopKind::Polyline { vertices } => {
                let v = vertices.len();
                let s = uf * T::from_usize(v).unwrap();
                let mut i = s.floor().to_f64().unwrap() as usize;
                if i >= v {
                    i = v - 1;
                }
                let local = s - T::from_usize(i).unwrap();
                let a = vertices[i].coords();
                let b = vertices[(i + 1) % v].coords();
                for ((o, &ai), &bi) in out.iter_mut().zip(a).zip(b) {
                    *o = ai + local * (bi - ai);
                }
            }
            LoopKind::Repeat { inner, times } => {
                inner.at_into(frac(uf * T::from_u32(*times).unwrap()), out);
            }
            LoopKind::Custom { map, .. } => {
                out.copy_from_slice(&map(uf));
            }
        }
    }
}

/// Discretizable closed curve in parameter space with an orientation flag.
/// `gamma(0) = gamma(1)` holds bitwise because evaluation wraps the curve
/// parameter into `[0, 1)` first.
#[derive(Clone)]
pub struct ParamLoop<T> {
    kind: LoopKind<T>,
    orientation: Orientation,
}

impl<T: Real> ParamLoop<T> {
    /// Loop that never leaves `x0`.
    pub fn constant(x0: ParamPoint<T>) -> Self {
        Self { kind: LoopKind::Constant(x0), orientation: Orientation::Forward }
    }

    /// Circle of given radius in the coordinate 2-plane `plane`, centered at
    /// `center`: `gamma(u) = center + radius (cos 2pi u, sin 2pi u)` in the
    /// plane coordinates.
    pub fn circle(center: ParamPoint<T>, radius: T, plane: (usize, usize)) -> Result<Self> {
        if plane.0 == plane.1 || plane.0 >= center.dim() || plane.1 >= center.dim() {
            return Err(Error::Input(format!(
                "circle plane ({}, {}) invalid for {}-dimensional parameters",
                plane.0,
                plane.1,
                center.dim()
            )));
        }
        if !(radius > T::zero()) {
            return Err(Error::Input("circle radius must be positive".into()));
        }
        Ok(Self { kind: LoopKind::Circle { center, radius, plane }, orientation: Orientation::Forward })
    }

    /// Closed polyline through the vertices (the segment from the last
    /// vertex back to the first closes it), uniform parameter speed per
    /// segment.
    pub fn polyline(vertices: Vec<ParamPoint<T>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Input("polyline needs at least 2 vertices".into()));
        }
        let dim = vertices[0].dim();
        if vertices.iter().any(|v| v.dim() != dim) {
            return Err(Error::Shape("polyline vertices must share one dimension".into()));
        }
        Ok(Self { kind: LoopKind::Polyline { vertices }, orientation: Orientation::Forward })
    }

    /// Loop from an arbitrary closed map `[0, 1) -> P`.
    pub fn custom(dim: usize, map: impl Fn(T) -> Vec<T> + Send + Sync + 'static) -> Self {
        Self { kind: LoopKind::Custom { dim, map: Arc::new(map) }, orientation: Orientation::Forward }
    }

    /// The same loop traversed `times` times per unit parameter.
    pub fn repeated(self, times: u32) -> Result<Self> {
        if times == 0 {
            return Err(Error::Input("repetition count must be positive".into()));
        }
        Ok(Self {
            kind: LoopKind::Repeat { inner: Box::new(self.kind), times },
            orientation: self.orientation,
        })
    }

    /// The same loop with flipped orientation.
    pub fn reversed(mut self) -> Self {
        self.orientation = match self.orientation {
            Orientation::Forward => Orientation::Reversed,
            Orientation::Reversed => Orientation::Forward,
        };
        self
    }

    /// The same oriented loop traversed with a different parametrization;
    /// `warp` must be a monotone circle map fixing 0.
    pub fn reparametrized(self, warp: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        let dim = self.kind.dim();
        let inner = self.kind.clone();
        Self {
            kind: LoopKind::Custom {
                dim,
                map: Arc::new(move |u: T| {
                    let mut out = vec![T::zero(); dim];
                    inner.at_into(frac(warp(u)), &mut out);
                    out
                }),
            },
            orientation: self.orientation,
        }
    }

    pub fn param_dim(&self) -> usize {
        self.kind.dim()
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.kind, LoopKind::Constant(_))
    }

    /// Oriented evaluation `gamma(u)`: honest traversal, reversal included.
    /// This is what time-parametrized drives integrate.
    pub fn at_into(&self, u: T, out: &mut [T]) {
        let u_eff = match self.orientation {
            Orientation::Forward => u,
            Orientation::Reversed => T::one() - frac(u),
        };
        self.kind.at_into(u_eff, out);
    }

    pub fn at(&self, u: T) -> ParamPoint<T> {
        let mut coords = vec![T::zero(); self.param_dim()];
        self.at_into(u, &mut coords);
        ParamPoint::new(coords).expect("loop evaluation produced non-finite coordinates")
    }

    /// Unoriented (forward-kind) evaluation; the connection ops sample this
    /// and fold the orientation in algebraically.
    fn base_at(&self, u: T) -> ParamPoint<T> {
        let mut coords = vec![T::zero(); self.param_dim()];
        self.kind.at_into(u, &mut coords);
        ParamPoint::new(coords).expect("loop evaluation produced non-finite coordinates")
    }

    fn orientation_sign(&self) -> T {
        match self.orientation {
            Orientation::Forward => T::one(),
            Orientation::Reversed => -T::one(),
        }
    }
}

// ---------------------------------------------------------------------------
// Hannay-Berry one-form
// ---------------------------------------------------------------------------

/// Torus-averaged chart deformation at one parameter point: the local
/// one-form of the Hannay-Berry connection, `matrix[i][j] = <dPhi_i/dx_j>`.
#[derive(Debug, Clone, PartialEq)]
pub struct HannayOneFormSample<T> {
    pub x: ParamPoint<T>,
    pub matrix: Vec<Vec<T>>,
}

/// Averages the chart deformation over the invariant torus `I = mu` at `x`
/// with a `q_order`-per-dimension trapezoid grid.
///
/// Canonical families differentiate their chart by central differences with
/// step `fd_step` (unwrapped, with automatic halving at branch-cut
/// ambiguity); abstract families average their supplied deformation
/// directly.
pub fn hannay_one_form<T: Real, F: IntegrableFamily<T> + ?Sized>(
    family: &F,
    mu: &[T],
    x: &ParamPoint<T>,
    q_order: usize,
    fd_step: T,
) -> Result<HannayOneFormSample<T>> {
    let n = family.torus_dim();
    let m = family.param_dim();
    if mu.len() != n {
        return Err(Error::Shape(format!(
            "action tuple has {} components, torus dimension is {}",
            mu.len(),
            n
        )));
    }
    family.check_point(x)?;
    let mut columns: Vec<Vec<Vec<T>>> = vec![vec![Vec::new(); n]; m];
    for (j, col) in columns.iter_mut().enumerate() {
        for_each_torus_node(n, q_order, |angles: &[T]| {
            let d = family.chart_deformation(mu, angles, x, j, fd_step)?;
            for (acc, di) in col.iter_mut().zip(&d) {
                acc.push(*di);
            }
            Ok(())
        })?;
    }
    let mut matrix = vec![vec![T::zero(); m]; n];
    for (j, col) in columns.iter().enumerate() {
        for (i, samples) in col.iter().enumerate() {
            let mean = pairwise_sum(samples) / T::from_usize(samples.len()).unwrap();
            if !mean.is_finite() {
                return Err(Error::Domain(format!(
                    "averaged deformation is not finite in direction {j}"
                )));
            }
            matrix[i][j] = mean;
        }
    }
    Ok(HannayOneFormSample { x: x.clone(), matrix })
}

// ---------------------------------------------------------------------------
// Hannay holonomy
// ---------------------------------------------------------------------------

/// Hannay angle of a loop: raw line integral, mod-2pi value, and winding.
#[derive(Debug, Clone, PartialEq)]
pub struct HannayAngles<T> {
    /// Unwrapped `sign * sum_k A(mid_k) . dx_k`.
    pub raw: Vec<T>,
    /// Raw value wrapped to `(-pi, pi]` per component.
    pub wrapped: Vec<T>,
    /// `raw = wrapped + 2 pi winding`.
    pub winding: Vec<i64>,
}

/// Fiber-averaged chart shift across one loop segment: the torus average at
/// `x1` of `wrap(Phi_{x2}(y(phi)) - phi)` per angle component. This is the
/// same two-point average the Berry overlaps exponentiate, so sums of these
/// increments and Pancharatnam products discretize the connection with
/// matching error terms.
fn mean_segment_shift<T: Real, F: IntegrableFamily<T> + ?Sized>(
    family: &F,
    mu: &[T],
    x1: &ParamPoint<T>,
    x2: &ParamPoint<T>,
    q_order: usize,
) -> Result<Vec<T>> {
    let n = family.torus_dim();
    let mut samples: Vec<Vec<T>> = vec![Vec::new(); n];
    for_each_torus_node(n, q_order, |angles: &[T]| {
        let shift = family.chart_shift(mu, angles, x1, x2)?;
        for (acc, &si) in samples.iter_mut().zip(&shift) {
            let wrapped = wrap_to_pi(si);
            if wrapped.abs() > T::FRAC_PI_2() {
                return Err(Error::StepTooLarge(format!(
                    "segment angle shift {wrapped} is branch-cut ambiguous; refine the loop"
                )));
            }
            acc.push(wrapped);
        }
        Ok(())
    })?;
    Ok(samples
        .iter()
        .map(|s| pairwise_sum(s) / T::from_usize(s.len()).unwrap())
        .collect())
}

/// Holonomy of the Hannay-Berry connection over the loop restricted to the
/// torus bundle at `mu`: `theta_i = sign * sum_k <shift_i(x_k -> x_{k+1})>`,
/// the accumulated fiber-averaged angle shift across the loop segments.
///
/// Per segment the averaged shift equals the line integral of the averaged
/// one-form to third order, so the sum converges to the holonomy at second
/// order in `k_segments` — with the same leading error structure as the
/// Berry overlap product, which keeps relation residuals free of scheme
/// mismatch. A constant loop yields exactly zero: every segment increment is
/// skipped as unmoved, so no quadrature error can enter.
pub fn hannay_holonomy<T: Real, F: IntegrableFamily<T> + ?Sized>(
    family: &F,
    mu: &[T],
    param_loop: &ParamLoop<T>,
    k_segments: usize,
    q_order: usize,
) -> Result<HannayAngles<T>> {
    if k_segments < 8 {
        return Err(Error::Input(format!("need at least 8 segments, got {k_segments}")));
    }
    if param_loop.param_dim() != family.param_dim() {
        return Err(Error::Shape(format!(
            "loop lives in {} parameters, family has {}",
            param_loop.param_dim(),
            family.param_dim()
        )));
    }
    if mu.len() != family.torus_dim() {
        return Err(Error::Shape(format!(
            "action tuple has {} components, torus dimension is {}",
            mu.len(),
            family.torus_dim()
        )));
    }
    let n = family.torus_dim();
    let kt = T::from_usize(k_segments).unwrap();
    let mut terms: Vec<Vec<T>> = vec![Vec::with_capacity(k_segments); n];
    let mut x_prev = param_loop.base_at(T::zero());
    family.check_point(&x_prev)?;
    for k in 0..k_segments {
        let x_next = param_loop.base_at((T::from_usize(k).unwrap() + T::one()) / kt);
        if x_next.coords() == x_prev.coords() {
            for row in terms.iter_mut() {
                row.push(T::zero());
            }
            continue;
        }
        let shift = mean_segment_shift(family, mu, &x_prev, &x_next, q_order)?;
        for (row, &si) in terms.iter_mut().zip(&shift) {
            row.push(si);
        }
        x_prev = x_next;
    }
    let sign = hannay_orientation_sign::<T>() * param_loop.orientation_sign();
    let raw: Vec<T> = terms.iter().map(|row| sign * pairwise_sum(row)).collect();
    let wrapped: Vec<T> = raw.iter().map(|&r| wrap_to_pi(r)).collect();
    let winding = raw
        .iter()
        .zip(&wrapped)
        .map(|(&r, &w)| ((r - w) / T::two_pi()).round().to_f64().unwrap() as i64)
        .collect();
    Ok(HannayAngles { raw, wrapped, winding })
}

// ---------------------------------------------------------------------------
// Berry overlaps and phase
// ---------------------------------------------------------------------------

/// Overlap `<m, x1 | m, x2>` of the lifted eigenstate on neighboring fibers:
/// the average over the fiber torus at `x1` of
/// `exp(i m . [Phi_{x2}(y(phi)) - phi])`, `y(phi)` the point labeled
/// `(mu, phi)` at `x1`.
///
/// Equals 1 exactly when `x1 = x2` or `m = 0`. To first order in `x2 - x1`
/// its argument is `m . A(x1) (x2 - x1)`, the Berry-Simon connection of the
/// pullback bundle.
pub fn berry_overlap<T: Real, F: IntegrableFamily<T> + ?Sized>(
    family: &F,
    mode: &ModeVector,
    mu: &[T],
    x1: &ParamPoint<T>,
    x2: &ParamPoint<T>,
    q_order: usize,
) -> Result<Complex<T>> {
    let n = family.torus_dim();
    if mode.dim() != n || mu.len() != n {
        return Err(Error::Shape(format!(
            "mode dimension {} / action dimension {} vs torus dimension {}",
            mode.dim(),
            mu.len(),
            n
        )));
    }
    family.check_point(x1)?;
    family.check_point(x2)?;
    let one = Complex::new(T::one(), T::zero());
    if mode.0.iter().all(|&mi| mi == 0) || x1.coords() == x2.coords() {
        return Ok(one);
    }
    let mut values = Vec::new();
    for_each_torus_node(n, q_order, |angles: &[T]| {
        let shift = family.chart_shift(mu, angles, x1, x2)?;
        let phase = mode.dot(&shift);
        values.push(Complex::from_polar(T::one(), phase));
        Ok(())
    })?;
    Ok(pairwise_sum(&values) * (T::one() / T::from_usize(values.len()).unwrap()))
}

/// Berry phase of the lifted eigenstate `|m, x>` over the loop:
/// `beta = arg prod_k <m, x_k | m, x_{k+1}>` with the closure `x_K = x_0`.
///
/// Gauge-invariant under chart regauging over closed loops, converges to
/// `m . (closed integral of A)` as the segment count grows, and reversal
/// negates it exactly (the orientation flag conjugates the product).
pub fn berry_phase<T: Real, F: IntegrableFamily<T> + ?Sized>(
    family: &F,
    mode: &ModeVector,
    mu: &[T],
    param_loop: &ParamLoop<T>,
    k_segments: usize,
    q_order: usize,
) -> Result<T> {
    if k_segments < 2 {
        return Err(Error::Input(format!("need at least 2 segments, got {k_segments}")));
    }
    if param_loop.param_dim() != family.param_dim() {
        return Err(Error::Shape(format!(
            "loop lives in {} parameters, family has {}",
            param_loop.param_dim(),
            family.param_dim()
        )));
    }
    if mode.0.iter().all(|&mi| mi == 0) {
        // validate the base point anyway, then S(0) = 0 exactly
        family.check_point(&param_loop.base_at(T::zero()))?;
        return Ok(T::zero());
    }
    let kt = T::from_usize(k_segments).unwrap();
    let mut product = Complex::new(T::one(), T::zero());
    let mut x_prev = param_loop.base_at(T::zero());
    for k in 0..k_segments {
        let x_next = param_loop.base_at((T::from_usize(k).unwrap() + T::one()) / kt);
        let overlap = berry_overlap(family, mode, mu, &x_prev, &x_next, q_order)?;
        if overlap.norm() <= T::epsilon() {
            return Err(Error::DegenerateChain(k));
        }
        product *= overlap;
        x_prev = x_next;
    }
    if param_loop.orientation() == Orientation::Reversed {
        product = product.conj();
    }
    let beta = product.im.atan2(product.re);
    Ok(if beta == T::zero() { T::zero() } else { beta })
}

// ---------------------------------------------------------------------------
// Relation report
// ---------------------------------------------------------------------------

/// Per-mode row of the relation report.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeRow<T> {
    pub mode: ModeVector,
    /// Berry phase `beta_m` in `(-pi, pi]`.
    pub beta: T,
    /// Relation-map abscissa `s_m = m . theta_raw`.
    pub s_point: T,
    /// `|wrap(beta_m - s_m)|`.
    pub residual: T,
}

/// Oracle section embedded in a report by callers that ran the slow-drive
/// reference (kept structural here so the oracle module stays independent of
/// the connection ops).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison<T> {
    pub theta_oracle: Vec<T>,
    /// `theta_raw - theta_oracle` per component.
    pub difference: Vec<T>,
    pub max_abs_difference: T,
    /// `(epsilon, theta(epsilon), action drift)` per slowness value.
    pub runs: Vec<(T, T, T)>,
}

/// Joint Hannay/Berry holonomy report with relation residuals.
#[derive(Debug, Clone)]
pub struct HolonomyReport<T> {
    pub theta: HannayAngles<T>,
    pub rows: Vec<ModeRow<T>>,
    pub max_residual: T,
    pub residual_tol: T,
    /// `S(0) = 0` verification: `Some(ok)` when probed by a zero mode or a
    /// constant loop, `None` when neither probe applies.
    pub s_zero_ok: Option<bool>,
    pub constant_loop: bool,
    pub segments: usize,
    pub quadrature: usize,
    pub oracle: Option<OracleComparison<T>>,
}

impl<T: Real> HolonomyReport<T> {
    /// True when every residual is inside tolerance and no `S(0)` probe
    /// failed.
    pub fn pass(&self) -> bool {
        self.max_residual <= self.residual_tol && self.s_zero_ok != Some(false)
    }
}

/// Computes the Hannay angle and the Berry phase of every requested mode
/// over one loop, records the relation residuals and the sampled relation
/// graph `(s_m, beta_m)`, and verifies `S(0) = 0` where a probe exists.
pub fn relation_report<T: Real, F: IntegrableFamily<T> + ?Sized>(
    family: &F,
    modes: &[ModeVector],
    mu: &[T],
    param_loop: &ParamLoop<T>,
    k_segments: usize,
    q_order: usize,
    residual_tol: T,
) -> Result<HolonomyReport<T>> {
    if modes.is_empty() {
        return Err(Error::Input("relation report needs at least one mode".into()));
    }
    let theta = hannay_holonomy(family, mu, param_loop, k_segments, q_order)?;
    let mut rows = Vec::with_capacity(modes.len());
    let mut max_residual = T::zero();
    let mut zero_probe: Option<bool> = None;
    for mode in modes {
        let beta = berry_phase(family, mode, mu, param_loop, k_segments, q_order)?;
        let s_point = mode.dot(&theta.raw);
        let residual = wrap_to_pi(beta - s_point).abs();
        max_residual = max_residual.max(residual);
        if mode.0.iter().all(|&mi| mi == 0) {
            let ok = beta == T::zero() && residual == T::zero();
            zero_probe = Some(zero_probe.map_or(ok, |prev| prev && ok));
        }
        rows.push(ModeRow { mode: mode.clone(), beta, s_point, residual });
    }
    let constant_loop = param_loop.is_constant();
    if constant_loop {
        let all_zero = theta.raw.iter().all(|&t| t == T::zero())
            && rows.iter().all(|r| r.beta == T::zero() && r.residual == T::zero());
        zero_probe = Some(zero_probe.map_or(all_zero, |prev| prev && all_zero));
    }
    Ok(HolonomyReport {
        theta,
        rows,
        max_residual,
        residual_tol,
        s_zero_ok: zero_probe,
        constant_loop,
        segments: k_segments,
        quadrature: q_order,
        oracle: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{AbstractFamily, GeneralizedOscillator, RegaugedFamily};
    use std::f64::consts::PI;

    fn point(coords: &[f64]) -> ParamPoint<f64> {
        ParamPoint::new(coords.to_vec()).unwrap()
    }

    fn osc() -> GeneralizedOscillator {
        GeneralizedOscillator::new()
    }

    /// The standard circle loop used across the acceptance runs:
    /// (X, Y) = (2 + 0.5 cos, 0.5 sin), Z = 1.
    fn standard_circle() -> ParamLoop<f64> {
        ParamLoop::circle(point(&[2.0, 0.0, 1.0]), 0.5, (0, 1)).unwrap()
    }

    fn mode(ms: &[i64]) -> ModeVector {
        ModeVector::new(ms.to_vec())
    }

    #[test]
    fn one_form_zero_for_x_independent_chart() {
        let fam = AbstractFamily::new(
            1,
            2,
            |i: &[f64], x: &ParamPoint<f64>| x[0] * i[0] + x[1],
            |_i, _phi, _x, _dir| vec![0.0],
        );
        let sample = hannay_one_form(&fam, &[0.5], &point(&[1.0, 0.2]), 32, 1e-5).unwrap();
        assert_eq!(sample.matrix, vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn one_form_oscillator_reference_value() {
        // <dPhi/dY> at (1,0,1) is -1/(2 w) = -0.5
        let sample = hannay_one_form(&osc(), &[0.8], &point(&[1.0, 0.0, 1.0]), 64, 1e-5).unwrap();
        assert!((sample.matrix[0][1] + 0.5).abs() < 1e-6, "A_Y = {}", sample.matrix[0][1]);
    }

    #[test]
    fn one_form_regauge_shift() {
        // regauging phi -> phi + g(x) shifts the one-form by exactly dg/dx
        let x = point(&[2.0, 0.3, 1.1]);
        let g = |c: &[f64]| 0.4 * c[0].sin() + 0.25 * c[1] - 0.1 * c[0] * c[2];
        let grad = [0.4 * x[0].cos() - 0.1 * x[2], 0.25, -0.1 * x[0]];
        let plain = hannay_one_form(&osc(), &[0.8], &x, 64, 1e-5).unwrap();
        let regauged = RegaugedFamily::new(osc(), g);
        let shifted = hannay_one_form(&regauged, &[0.8], &x, 64, 1e-5).unwrap();
        for j in 0..3 {
            let diff = shifted.matrix[0][j] - plain.matrix[0][j];
            assert!((diff - grad[j]).abs() < 1e-8, "dir {j}: shift {diff} vs grad {}", grad[j]);
        }
    }

    #[test]
    fn constant_loop_exact_zero() {
        let lp = ParamLoop::constant(point(&[2.0, 0.1, 1.0]));
        let theta = hannay_holonomy(&osc(), &[0.5], &lp, 64, 32).unwrap();
        assert_eq!(theta.raw, vec![0.0]);
        assert_eq!(theta.wrapped, vec![0.0]);
        assert_eq!(theta.winding, vec![0]);
    }

    #[test]
    fn y_zero_plane_loop_vanishes() {
        // A_X and A_Z vanish identically at Y = 0, so any loop confined to
        // the (X, Z) plane has zero holonomy.
        let lp = ParamLoop::circle(point(&[2.5, 0.0, 1.5]), 0.4, (0, 2)).unwrap();
        let theta = hannay_holonomy(&osc(), &[0.7], &lp, 128, 64).unwrap();
        assert!(theta.raw[0].abs() < 1e-8, "theta {}", theta.raw[0]);
    }

    #[test]
    fn standard_circle_converges_to_closed_form() {
        // theta = -(1/2) closed-integral dY / w on Z = 1 (closed form for
        // this family); quadrature of that integral gives the reference.
        // The segment sum converges at second order in K.
        let reference: f64 = {
            let n = 1 << 14;
            let mut acc = 0.0;
            for k in 0..n {
                let u = 2.0 * PI * (k as f64 + 0.5) / n as f64;
                let (x, y) = (2.0 + 0.5 * u.cos(), 0.5 * u.sin());
                let w = (x - y * y).sqrt();
                acc += -0.5 * (0.5 * u.cos()) / w; // dY = 0.5 cos du
            }
            acc * 2.0 * PI / n as f64
        };
        let at = |k: usize| {
            hannay_holonomy(&osc(), &[0.5], &standard_circle(), k, 128).unwrap().raw[0]
        };
        let (e256, e1024) = ((at(256) - reference).abs(), (at(1024) - reference).abs());
        assert!(e256 < 1e-5, "error at K=256: {e256}");
        assert!(e1024 < 1e-6, "error at K=1024: {e1024}");
        let ratio = e256 / e1024;
        assert!((12.0..20.0).contains(&ratio), "second-order ratio {ratio}");
        assert!(reference.abs() > 0.01, "loop should have a visible holonomy");
    }

    #[test]
    fn overlap_identity_cases() {
        let x = point(&[2.0, 0.1, 1.0]);
        let one = berry_overlap(&osc(), &mode(&[3]), &[0.5], &x, &x, 32).unwrap();
        assert_eq!(one, Complex::new(1.0, 0.0));
        let x2 = point(&[2.1, 0.15, 1.0]);
        let zero_mode = berry_overlap(&osc(), &mode(&[0]), &[0.5], &x, &x2, 32).unwrap();
        assert_eq!(zero_mode, Complex::new(1.0, 0.0));
    }

    #[test]
    fn overlap_first_order_matches_one_form() {
        let x = point(&[2.0, 0.1, 1.0]);
        let a = hannay_one_form(&osc(), &[0.5], &x, 128, 1e-6).unwrap();
        let m = mode(&[2]);
        let defect = |dx: f64| {
            let x2 = point(&[2.0, 0.1 + dx, 1.0]);
            let overlap = berry_overlap(&osc(), &m, &[0.5], &x, &x2, 128).unwrap();
            (overlap.arg() - 2.0 * a.matrix[0][1] * dx).abs()
        };
        let (e1, e2) = (defect(2e-3), defect(1e-3));
        assert!(e2 < e1 / 3.0, "defects {e1} vs {e2}");
    }

    #[test]
    fn berry_constant_loop_exact_zero() {
        let lp = ParamLoop::constant(point(&[2.0, 0.1, 1.0]));
        let beta = berry_phase(&osc(), &mode(&[2]), &[0.5], &lp, 16, 32).unwrap();
        assert_eq!(beta, 0.0);
    }

    #[test]
    fn relation_residuals_standard_circle() {
        let modes: Vec<ModeVector> = (-3..=3).map(|m| mode(&[m])).collect();
        let report = relation_report(
            &osc(),
            &modes,
            &[0.5],
            &standard_circle(),
            256,
            128,
            default_residual_tol(),
        )
        .unwrap();
        assert!(report.max_residual < 1e-6, "max residual {}", report.max_residual);
        assert_eq!(report.s_zero_ok, Some(true));
        assert!(report.pass());
        // beta tracks m * theta across modes
        for row in &report.rows {
            assert!(
                (row.beta - wrap_to_pi(row.s_point)).abs() < 1e-6,
                "mode {:?}: beta {} vs s {}",
                row.mode.0,
                row.beta,
                row.s_point
            );
        }
    }

    #[test]
    fn relation_constant_loop_all_zero() {
        let modes: Vec<ModeVector> = (-3..=3).map(|m| mode(&[m])).collect();
        let lp = ParamLoop::constant(point(&[2.0, 0.0, 1.0]));
        let report = relation_report(
            &osc(),
            &modes,
            &[0.5],
            &lp,
            64,
            32,
            default_residual_tol(),
        )
        .unwrap();
        assert!(report.theta.raw.iter().all(|&t| t == 0.0));
        assert!(report.rows.iter().all(|r| r.beta == 0.0 && r.residual == 0.0));
        assert_eq!(report.s_zero_ok, Some(true));
        assert!(report.constant_loop);
    }

    #[test]
    fn doubled_loop_doubles_holonomies() {
        let modes = vec![mode(&[1]), mode(&[2])];
        let single = relation_report(
            &osc(),
            &modes,
            &[0.5],
            &standard_circle(),
            256,
            128,
            default_residual_tol(),
        )
        .unwrap();
        let doubled_loop = standard_circle().repeated(2).unwrap();
        let doubled = relation_report(
            &osc(),
            &modes,
            &[0.5],
            &doubled_loop,
            512,
            128,
            default_residual_tol(),
        )
        .unwrap();
        assert!(
            (doubled.theta.raw[0] - 2.0 * single.theta.raw[0]).abs() < 1e-8,
            "{} vs {}",
            doubled.theta.raw[0],
            single.theta.raw[0]
        );
        for (d, s) in doubled.rows.iter().zip(&single.rows) {
            assert!(wrap_to_pi(d.beta - 2.0 * s.beta).abs() < 1e-6);
        }
        assert!(doubled.max_residual < 1e-6, "residual {}", doubled.max_residual);
    }

    #[test]
    fn reversal_exact() {
        let lp = standard_circle();
        let theta = hannay_holonomy(&osc(), &[0.5], &lp, 128, 64).unwrap();
        let theta_rev =
            hannay_holonomy(&osc(), &[0.5], &lp.clone().reversed(), 128, 64).unwrap();
        assert_eq!(theta_rev.raw[0], -theta.raw[0]);

        let m = mode(&[2]);
        let beta = berry_phase(&osc(), &m, &[0.5], &lp, 128, 64).unwrap();
        let beta_rev = berry_phase(&osc(), &m, &[0.5], &lp.reversed(), 128, 64).unwrap();
        assert_eq!(beta_rev, -beta);
    }

    #[test]
    fn reparametrization_invariance() {
        // start-point rotation: same oriented circle, uniform speed; the
        // discretizations agree to roundoff
        let lp = standard_circle();
        let rotated = standard_circle().reparametrized(|u: f64| u + 0.371);
        let a = hannay_holonomy(&osc(), &[0.5], &lp, 512, 128).unwrap();
        let b = hannay_holonomy(&osc(), &[0.5], &rotated, 512, 128).unwrap();
        assert!((a.raw[0] - b.raw[0]).abs() < 1e-8, "{} vs {}", a.raw[0], b.raw[0]);

        let m = mode(&[2]);
        let ba = berry_phase(&osc(), &m, &[0.5], &lp, 512, 128).unwrap();
        let bb = berry_phase(&osc(), &m, &[0.5], &rotated, 512, 128).unwrap();
        assert!((ba - bb).abs() < 1e-8, "{ba} vs {bb}");

        // nonuniform warp: the two parametrizations converge to each other
        // at the scheme's second order; at K = 512 they sit within the
        // measured discretization envelope
        let warped = standard_circle()
            .reparametrized(|u: f64| u + 0.15 * (2.0 * PI * u).sin() / (2.0 * PI));
        let diff_at = |k: usize| {
            let p = hannay_holonomy(&osc(), &[0.5], &lp, k, 128).unwrap().raw[0];
            let w = hannay_holonomy(&osc(), &[0.5], &warped, k, 128).unwrap().raw[0];
            (p - w).abs()
        };
        let (d512, d1024) = (diff_at(512), diff_at(1024));
        assert!(d512 < 1e-7, "warped parametrization differs by {d512}");
        assert!(d1024 < d512 / 2.0, "difference not shrinking: {d512} -> {d1024}");
    }

    #[test]
    fn gauge_invariance_on_closed_loops() {
        let g = |c: &[f64]| 0.4 * c[0].sin() + 0.25 * c[1] - 0.1 * c[0] * c[2];
        let regauged = RegaugedFamily::new(osc(), g);
        let lp = standard_circle();
        let a = hannay_holonomy(&osc(), &[0.5], &lp, 256, 128).unwrap();
        let b = hannay_holonomy(&regauged, &[0.5], &lp, 256, 128).unwrap();
        assert!((a.raw[0] - b.raw[0]).abs() < 1e-8, "{} vs {}", a.raw[0], b.raw[0]);

        let m = mode(&[3]);
        let ba = berry_phase(&osc(), &m, &[0.5], &lp, 256, 128).unwrap();
        let bb = berry_phase(&regauged, &m, &[0.5], &lp, 256, 128).unwrap();
        assert!((ba - bb).abs() < 1e-8, "{ba} vs {bb}");
    }

    #[test]
    fn two_torus_abstract_consistency() {
        // n = 2 family with a supplied periodic deformation: the relation
        // residual checks averaging and products against each other.
        let fam = AbstractFamily::new(
            2,
            2,
            |i: &[f64], x: &ParamPoint<f64>| x[0] * i[0] + x[1] * i[1],
            |_i, phi: &[f64], x: &ParamPoint<f64>, dir| match dir {
                0 => vec![0.3 + 0.2 * phi[0].cos(), 0.1 * (phi[0] - phi[1]).sin()],
                _ => vec![0.05 * phi[1].sin(), -0.2 + 0.15 * x[0] * phi[1].cos()],
            },
        );
        let lp = ParamLoop::circle(point(&[1.0, 0.5]), 0.3, (0, 1)).unwrap();
        let modes = vec![mode(&[0, 0]), mode(&[1, 0]), mode(&[1, -2]), mode(&[2, 1])];
        let report = relation_report(
            &fam,
            &modes,
            &[0.4, 0.9],
            &lp,
            256,
            32,
            default_residual_tol(),
        )
        .unwrap();
        assert!(report.max_residual < 1e-6, "max residual {}", report.max_residual);
        assert_eq!(report.s_zero_ok, Some(true));
    }

    #[test]
    fn loop_validation() {
        assert!(ParamLoop::circle(point(&[1.0, 0.0, 1.0]), 0.5, (0, 0)).is_err());
        assert!(ParamLoop::circle(point(&[1.0, 0.0, 1.0]), -0.5, (0, 1)).is_err());
        assert!(ParamLoop::polyline(vec![point(&[1.0, 0.0, 1.0])]).is_err());
        let lp = standard_circle();
        let start = lp.at(0.0);
        let end = lp.at(1.0);
        assert_eq!(start.coords(), end.coords());
    }

    #[test]
    fn polyline_loop_runs() {
        let lp = ParamLoop::polyline(vec![
            point(&[1.5, -0.3, 1.0]),
            point(&[2.5, -0.3, 1.0]),
            point(&[2.5, 0.3, 1.0]),
            point(&[1.5, 0.3, 1.0]),
        ])
        .unwrap();
        let theta = hannay_holonomy(&osc(), &[0.5], &lp, 128, 64).unwrap();
        let beta = berry_phase(&osc(), &mode(&[1]), &[0.5], &lp, 128, 64).unwrap();
        // piecewise-linear loop: first-order consistency only
        assert!((beta - wrap_to_pi(theta.raw[0])).abs() < 1e-3, "{beta} vs {}", theta.raw[0]);
    }

    #[test]
    fn stencil_error_near_boundary() {
        // loop point with X Z - Y^2 barely positive: the FD stencil exits
        let x = point(&[1.0, 0.999999, 1.0]);
        let result = hannay_one_form(&osc(), &[0.5], &x, 16, 1e-5);
        assert!(
            matches!(result, Err(Error::Stencil(_)) | Err(Error::StepTooLarge(_))),
            "{result:?}"
        );
    }
}
