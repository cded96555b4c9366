//! The Koopman lift of an integrable flow: truncated Fourier states on the
//! invariant torus and the diagonal unitary group acting on them.
//!
//! On the torus the lifted generator is diagonal in the basis
//! `|m> = exp(i m . Phi)`, with `U_t |m> = exp(i m . Omega t) |m>`. The sign
//! convention `U_t = exp(+i H t)` is kept throughout (the physics convention
//! would be `exp(-i H t)`); every downstream phase inherits it.
//!
//! [`composition_apply`] is the brute-force counterpart of [`evolve`]: it
//! realizes `U_t psi = psi o T_t` by sampling the state on an angle grid,
//! translating, and re-projecting by quadrature. With the Nyquist margin
//! `Q > 2 N_max` the projection is alias-free, so the two routes must agree
//! to roundoff; the margin is enforced, not assumed.

use std::collections::BTreeMap;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::families::{IntegrableFamily, ParamPoint};
use crate::real::{pairwise_sum, Real};

/// Default per-component truncation bound.
pub const DEFAULT_TRUNCATION: i64 = 16;

/// Integer mode vector indexing the Fourier basis of `L^2(T^n)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModeVector(pub Vec<i64>);

impl ModeVector {
    pub fn new(components: Vec<i64>) -> Self {
        Self(components)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn infinity_norm(&self) -> i64 {
        self.0.iter().map(|m| m.abs()).max().unwrap_or(0)
    }

    /// `m . omega`.
    pub fn dot<T: Real>(&self, omega: &[T]) -> T {
        self.0
            .iter()
            .zip(omega)
            .fold(T::zero(), |acc, (&m, &w)| acc + T::from_i64(m).unwrap() * w)
    }

    /// `m . angles`.
    pub fn dot_angles<T: Real>(&self, angles: &[T]) -> T {
        self.dot(angles)
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|m| -m).collect())
    }
}

impl From<Vec<i64>> for ModeVector {
    fn from(v: Vec<i64>) -> Self {
        Self(v)
    }
}

/// Truncated element of `L^2(T^n, dPhi/(2pi)^n)`: sparse complex amplitudes
/// keyed by mode vector. Modes absent from the map are zero. States are
/// immutable values; evolution produces new states.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierState<T> {
    torus_dim: usize,
    truncation: i64,
    amplitudes: BTreeMap<ModeVector, Complex<T>>,
}

impl<T: Real> FourierState<T> {
    /// Empty (zero) state.
    pub fn zero(torus_dim: usize, truncation: i64) -> Result<Self> {
        if torus_dim == 0 {
            return Err(Error::Shape("torus dimension must be at least 1".into()));
        }
        if truncation < 0 {
            return Err(Error::Input("truncation bound must be nonnegative".into()));
        }
        Ok(Self { torus_dim, truncation, amplitudes: BTreeMap::new() })
    }

    pub fn from_amplitudes(
        torus_dim: usize,
        truncation: i64,
        amplitudes: impl IntoIterator<Item = (ModeVector, Complex<T>)>,
    ) -> Result<Self> {
        let mut state = Self::zero(torus_dim, truncation)?;
        for (mode, amp) in amplitudes {
            state.set(mode, amp)?;
        }
        Ok(state)
    }

    /// Basis state `|m>`.
    pub fn basis(torus_dim: usize, truncation: i64, mode: ModeVector) -> Result<Self> {
        Self::from_amplitudes(torus_dim, truncation, [(mode, Complex::new(T::one(), T::zero()))])
    }

    fn set(&mut self, mode: ModeVector, amp: Complex<T>) -> Result<()> {
        if mode.dim() != self.torus_dim {
            return Err(Error::Shape(format!(
                "mode {:?} has dimension {}, state torus dimension is {}",
                mode.0,
                mode.dim(),
                self.torus_dim
            )));
        }
        if mode.infinity_norm() > self.truncation {
            return Err(Error::Input(format!(
                "mode {:?} exceeds the truncation bound {}",
                mode.0, self.truncation
            )));
        }
        self.amplitudes.insert(mode, amp);
        Ok(())
    }

    pub fn torus_dim(&self) -> usize {
        self.torus_dim
    }

    pub fn truncation(&self) -> i64 {
        self.truncation
    }

    pub fn amplitude(&self, mode: &ModeVector) -> Complex<T> {
        self.amplitudes.get(mode).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// Modes with stored amplitudes, in lexicographic order.
    pub fn modes(&self) -> impl Iterator<Item = &ModeVector> {
        self.amplitudes.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ModeVector, &Complex<T>)> {
        self.amplitudes.iter()
    }

    pub fn mode_count(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sq(&self) -> T {
        let sq: Vec<T> = self.amplitudes.values().map(|c| c.norm_sqr()).collect();
        pairwise_sum(&sq)
    }

    pub fn norm(&self) -> T {
        self.norm_sq().sqrt()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() {
            return Err(Error::NotNormalized("cannot normalize the zero state".into()));
        }
        let inv = T::one() / n;
        let mut out = self.clone();
        for amp in out.amplitudes.values_mut() {
            *amp *= inv;
        }
        Ok(out)
    }

    /// Hermitian inner product `<self|other>` (conjugate-linear in `self`),
    /// reduced in lexicographic mode order.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        if self.torus_dim != other.torus_dim {
            return Err(Error::Shape(format!(
                "torus dimensions differ: {} vs {}",
                self.torus_dim, other.torus_dim
            )));
        }
        let terms: Vec<Complex<T>> = self
            .amplitudes
            .iter()
            .filter_map(|(m, a)| other.amplitudes.get(m).map(|b| a.conj() * *b))
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// Generator expectation `<H> = sum |c_m|^2 (m . Omega) / sum |c_m|^2`.
    pub fn mean_generator(&self, omega: &[T]) -> Result<T> {
        if omega.len() != self.torus_dim {
            return Err(Error::Shape(format!(
                "frequency vector has {} components, torus dimension is {}",
                omega.len(),
                self.torus_dim
            )));
        }
        let n_sq = self.norm_sq();
        if n_sq == T::zero() {
            return Err(Error::NotNormalized("zero state has no generator expectation".into()));
        }
        let terms: Vec<T> = self
            .amplitudes
            .iter()
            .map(|(m, c)| c.norm_sqr() * m.dot(omega))
            .collect();
        Ok(pairwise_sum(&terms) / n_sq)
    }

    /// Pointwise evaluation `psi(Phi) = sum c_m exp(i m . Phi)`.
    pub fn eval(&self, angles: &[T]) -> Complex<T> {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (m, c) in &self.amplitudes {
            let phase = m.dot_angles(angles);
            acc += *c * Complex::from_polar(T::one(), phase);
        }
        acc
    }

    /// Amplitudes densified in lexicographic mode order; the companion of
    /// [`FourierState::modes`] for building rays.
    pub fn dense_amplitudes(&self) -> Vec<Complex<T>> {
        self.amplitudes.values().copied().collect()
    }

    /// Serialization rows `(mode, re, im)` in lexicographic mode order.
    pub fn rows(&self) -> Vec<(Vec<i64>, T, T)> {
        self.amplitudes.iter().map(|(m, c)| (m.0.clone(), c.re, c.im)).collect()
    }
}

/// Diagonal Koopman propagator `U_t = exp(+i H t)` for frequency `omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct KoopmanPropagator<T> {
    pub omega: Vec<T>,
    pub t: T,
}

impl<T: Real> KoopmanPropagator<T> {
    pub fn new(omega: Vec<T>, t: T) -> Result<Self> {
        if omega.iter().any(|w| !w.is_finite()) || !t.is_finite() {
            return Err(Error::Input("propagator entries must be finite".into()));
        }
        Ok(Self { omega, t })
    }
}

/// Applies the diagonal unitary: `c_m -> exp(i m . Omega t) c_m`.
pub fn evolve<T: Real>(state: &FourierState<T>, prop: &KoopmanPropagator<T>) -> Result<FourierState<T>> {
    if prop.omega.len() != state.torus_dim() {
        return Err(Error::Shape(format!(
            "propagator frequency has {} components, state torus dimension is {}",
            prop.omega.len(),
            state.torus_dim()
        )));
    }
    let mut out = state.clone();
    for (mode, amp) in out.amplitudes.iter_mut() {
        let phase = mode.dot(&prop.omega) * prop.t;
        *amp *= Complex::from_polar(T::one(), phase);
    }
    Ok(out)
}

/// Eigenvalues `m . Omega` of the lifted generator on the given modes.
pub fn generator_spectrum<T: Real>(omega: &[T], modes: &[ModeVector]) -> Result<Vec<T>> {
    for m in modes {
        if m.dim() != omega.len() {
            return Err(Error::Shape(format!(
                "mode {:?} has dimension {}, frequency vector has {}",
                m.0,
                m.dim(),
                omega.len()
            )));
        }
    }
    Ok(modes.iter().map(|m| m.dot(omega)).collect())
}

/// Composition-operator realization of `U_t`: samples the state on a
/// `q_order^n` angle grid, translates `Phi -> Phi + Omega t`, and re-projects
/// onto the Fourier cube by trapezoid quadrature.
///
/// Refuses quadrature orders at or below the Nyquist margin `2 N_max`, since
/// silent aliasing would corrupt the cross-check against [`evolve`].
pub fn composition_apply<T: Real>(
    state: &FourierState<T>,
    omega: &[T],
    t: T,
    q_order: usize,
) -> Result<FourierState<T>> {
    if omega.len() != state.torus_dim() {
        return Err(Error::Shape(format!(
            "frequency vector has {} components, state torus dimension is {}",
            omega.len(),
            state.torus_dim()
        )));
    }
    let n_max = state.truncation();
    if (q_order as i64) <= 2 * n_max {
        return Err(Error::Aliasing { q: q_order, n_max });
    }
    let n = state.torus_dim();

    // Sample (U_t psi)(Phi) = psi(Phi + Omega t) over the grid.
    let mut translated = Vec::new();
    let mut shifted = vec![T::zero(); n];
    crate::dynamics::for_each_torus_node(n, q_order, |angles: &[T]| {
        for ((s, &a), &w) in shifted.iter_mut().zip(angles).zip(omega) {
            *s = a + w * t;
        }
        translated.push(state.eval(&shifted));
        Ok(())
    })?;

    // Per-dimension twiddle tables exp(-i m phi_j) for the projection.
    let side = (2 * n_max + 1) as usize;
    let step = T::two_pi() / T::from_usize(q_order).unwrap();
    let mut twiddle = vec![vec![Complex::new(T::zero(), T::zero()); side * q_order]; n];
    for table in twiddle.iter_mut() {
        for j in 0..q_order {
            let phi = step * T::from_usize(j).unwrap();
            for (mi, slot) in (-n_max..=n_max).zip(table[j * side..(j + 1) * side].iter_mut()) {
                *slot = Complex::from_polar(T::one(), -T::from_i64(mi).unwrap() * phi);
            }
        }
    }

    let inv_nodes = T::one() / T::from_usize(translated.len()).unwrap();
    let mut out = FourierState::zero(n, n_max)?;
    let mut mode = vec![-n_max; n];
    let mut terms = Vec::with_capacity(translated.len());
    loop {
        terms.clear();
        // grid index decomposition mirrors for_each_torus_node's order
        for (flat, value) in translated.iter().enumerate() {
            let mut rem = flat;
            let mut w = Complex::new(T::one(), T::zero());
            for d in (0..n).rev() {
                let j = rem % q_order;
                rem /= q_order;
                let mi = (mode[d] + n_max) as usize;
                w *= twiddle[d][j * side + mi];
            }
            terms.push(*value * w);
        }
        let coeff = pairwise_sum(&terms) * inv_nodes;
        out.set(ModeVector::new(mode.clone()), coeff)?;
        let mut d = n;
        loop {
            if d == 0 {
                return Ok(out);
            }
            d -= 1;
            if mode[d] < n_max {
                mode[d] += 1;
                for md in &mut mode[d + 1..] {
                    *md = -n_max;
                }
                break;
            }
            mode[d] = -n_max;
        }
    }
}

/// Koopman lift of a family on the invariant torus `I = mu`: binds the
/// frequency vector so propagators for any time can be issued.
#[derive(Debug, Clone)]
pub struct KoopmanLift<T> {
    omega: Vec<T>,
}

impl<T: Real> KoopmanLift<T> {
    pub fn from_family<F: IntegrableFamily<T> + ?Sized>(
        family: &F,
        x: &ParamPoint<T>,
        mu: &[T],
    ) -> Result<Self> {
        family.check_point(x)?;
        if mu.len() != family.torus_dim() {
            return Err(Error::Shape(format!(
                "action tuple has {} components, torus dimension is {}",
                mu.len(),
                family.torus_dim()
            )));
        }
        let omega = family.frequency(mu, x)?;
        if omega.iter().any(|w| !w.is_finite()) {
            return Err(Error::Domain("frequency vector is not finite at the given action".into()));
        }
        Ok(Self { omega })
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn propagator(&self, t: T) -> KoopmanPropagator<T> {
        KoopmanPropagator { omega: self.omega.clone(), t }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{AbstractFamily, GeneralizedOscillator, ParamPoint};
    use crate::rng::SplitMix64;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn random_state(rng: &mut SplitMix64, n: usize, n_max: i64, modes: usize) -> FourierState<f64> {
        let mut state = FourierState::zero(n, n_max).unwrap();
        while state.mode_count() < modes {
            let mode: Vec<i64> = (0..n)
                .map(|_| (rng.next_f64() * (2 * n_max + 1) as f64) as i64 - n_max)
                .collect();
            state
                .set(ModeVector::new(mode), c(rng.next_in(-1.0, 1.0), rng.next_in(-1.0, 1.0)))
                .unwrap();
        }
        state.normalized().unwrap()
    }

    #[test]
    fn eigenmode_half_turn() {
        let state = FourierState::basis(1, 4, ModeVector::new(vec![1])).unwrap();
        let prop = KoopmanPropagator::new(vec![1.0], PI).unwrap();
        let evolved = evolve(&state, &prop).unwrap();
        let amp = evolved.amplitude(&ModeVector::new(vec![1]));
        assert!((amp - c(-1.0, 0.0)).norm() < 1e-15, "{amp}");
    }

    #[test]
    fn zero_time_identity() {
        let mut rng = SplitMix64::new(3);
        let state = random_state(&mut rng, 2, 4, 5);
        let prop = KoopmanPropagator::new(vec![1.0, 0.7], 0.0).unwrap();
        let evolved = evolve(&state, &prop).unwrap();
        for (m, a) in state.iter() {
            assert_eq!(evolved.amplitude(m), *a);
        }
    }

    #[test]
    fn group_law() {
        let mut rng = SplitMix64::new(17);
        let omega = vec![1.3, std::f64::consts::SQRT_2];
        for _ in 0..10 {
            let state = random_state(&mut rng, 2, 6, 8);
            let (t, s) = (rng.next_in(-3.0, 3.0), rng.next_in(-3.0, 3.0));
            let one = evolve(
                &evolve(&state, &KoopmanPropagator::new(omega.clone(), t).unwrap()).unwrap(),
                &KoopmanPropagator::new(omega.clone(), s).unwrap(),
            )
            .unwrap();
            let two = evolve(&state, &KoopmanPropagator::new(omega.clone(), t + s).unwrap()).unwrap();
            for (m, a) in one.iter() {
                assert!((*a - two.amplitude(m)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn unitarity_to_roundoff() {
        let mut rng = SplitMix64::new(29);
        for _ in 0..20 {
            let state = random_state(&mut rng, 1, 8, 6);
            let prop = KoopmanPropagator::new(vec![0.9], rng.next_in(-10.0, 10.0)).unwrap();
            let evolved = evolve(&state, &prop).unwrap();
            // unit-modulus multipliers: norm preserved up to final rounding
            assert!((evolved.norm() - state.norm()).abs() <= 8.0 * f64::EPSILON);
        }
    }

    #[test]
    fn eigen_relation_bitwise() {
        let mode = ModeVector::new(vec![2, -1]);
        let omega = [1.1, 0.4];
        let t = 0.37;
        let state = FourierState::basis(2, 4, mode.clone()).unwrap();
        let evolved = evolve(&state, &KoopmanPropagator::new(omega.to_vec(), t).unwrap()).unwrap();
        let expected = Complex::from_polar(1.0, mode.dot(&omega) * t);
        assert_eq!(evolved.amplitude(&mode), expected);
    }

    #[test]
    fn spectrum_values() {
        let omega = [1.0, std::f64::consts::SQRT_2];
        let modes = [ModeVector::new(vec![2, 1]), ModeVector::new(vec![0, 0])];
        let spec = generator_spectrum(&omega, &modes).unwrap();
        assert!((spec[0] - (2.0 + std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert_eq!(spec[1], 0.0);
        // symmetry under mode negation
        let neg = generator_spectrum(&[1.0, std::f64::consts::SQRT_2], &[modes[0].negated()]).unwrap();
        assert_eq!(neg[0], -spec[0]);
    }

    #[test]
    fn spectral_consistency_by_differentiation() {
        // d(arg amplitude)/dt of an evolved eigenmode recovers m . Omega
        let mode = ModeVector::new(vec![3, -2]);
        let omega = vec![0.8, 1.7];
        let state = FourierState::basis(2, 4, mode.clone()).unwrap();
        let dt = 1e-4;
        let at = |t: f64| {
            evolve(&state, &KoopmanPropagator::new(omega.clone(), t).unwrap())
                .unwrap()
                .amplitude(&mode)
                .arg()
        };
        let rate = (at(dt) - at(-dt)) / (2.0 * dt);
        assert!((rate - mode.dot(&omega)).abs() < 1e-8);
    }

    #[test]
    fn composition_single_mode_translation() {
        let state = FourierState::basis(1, 4, ModeVector::new(vec![1])).unwrap();
        let t = 0.83;
        let omega = [1.4];
        let direct = evolve(&state, &KoopmanPropagator::new(omega.to_vec(), t).unwrap()).unwrap();
        let composed = composition_apply(&state, &omega, t, 16).unwrap();
        for m in composed.modes() {
            assert!((composed.amplitude(m) - direct.amplitude(m)).norm() < 1e-13);
        }
    }

    #[test]
    fn composition_zero_time_identity() {
        let mut rng = SplitMix64::new(5);
        let state = random_state(&mut rng, 1, 5, 4);
        let composed = composition_apply(&state, &[0.9], 0.0, 16).unwrap();
        for m in composed.modes() {
            assert!((composed.amplitude(m) - state.amplitude(m)).norm() < 1e-13);
        }
    }

    #[test]
    fn composition_matches_evolve_2d() {
        let mut rng = SplitMix64::new(0x5EED);
        let state = random_state(&mut rng, 2, 8, 12);
        let omega = [1.0, std::f64::consts::SQRT_2];
        let t = 2.31;
        let direct = evolve(&state, &KoopmanPropagator::new(omega.to_vec(), t).unwrap()).unwrap();
        let composed = composition_apply(&state, &omega, t, 32).unwrap();
        let mut max_dev: f64 = 0.0;
        for m in composed.modes().chain(direct.modes()) {
            max_dev = max_dev.max((composed.amplitude(m) - direct.amplitude(m)).norm());
        }
        assert!(max_dev < 1e-10, "max deviation {max_dev}");
        // unitary to quadrature tolerance at Q = 4 N_max
        assert!((composed.norm() - state.norm()).abs() < 1e-10);
    }

    #[test]
    fn composition_refuses_aliasing() {
        let state = FourierState::basis(1, 8, ModeVector::new(vec![1])).unwrap();
        assert!(matches!(
            composition_apply(&state, &[1.0], 1.0, 16),
            Err(Error::Aliasing { q: 16, n_max: 8 })
        ));
    }

    #[test]
    fn evolve_shape_mismatch() {
        let state = FourierState::basis(2, 4, ModeVector::new(vec![1, 0])).unwrap();
        let prop = KoopmanPropagator::new(vec![1.0], 1.0).unwrap();
        assert!(matches!(evolve(&state, &prop), Err(Error::Shape(_))));
    }

    #[test]
    fn lift_from_families() {
        let osc = GeneralizedOscillator::new();
        let x = ParamPoint::new(vec![4.0, 0.0, 1.0]).unwrap();
        let lift = KoopmanLift::<f64>::from_family(&osc, &x, &[0.7]).unwrap();
        assert!((lift.omega()[0] - 2.0).abs() < 1e-15);

        let fam = AbstractFamily::new(
            1,
            2,
            |i: &[f64], x: &ParamPoint<f64>| x[0] * i[0] + 0.5 * x[1] * i[0] * i[0],
            |_i, _phi, _x, _dir| vec![0.0],
        )
        .with_frequency(|i, x| vec![x[0] + x[1] * i[0]]);
        let xa = ParamPoint::new(vec![1.0, 0.3]).unwrap();
        let lift = KoopmanLift::from_family(&fam, &xa, &[2.0]).unwrap();
        assert!((lift.omega()[0] - 1.6).abs() < 1e-12);

        // issued propagators satisfy the group law
        let state = FourierState::basis(1, 4, ModeVector::new(vec![2])).unwrap();
        let a = evolve(&evolve(&state, &lift.propagator(0.4)).unwrap(), &lift.propagator(1.1)).unwrap();
        let b = evolve(&state, &lift.propagator(1.5)).unwrap();
        let m = ModeVector::new(vec![2]);
        assert!((a.amplitude(&m) - b.amplitude(&m)).norm() < 1e-14);
    }
}
