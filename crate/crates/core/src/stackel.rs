//! Coupling constant metamorphosis from oscillator-type Hamiltonians
//!
//! ```text
//! H = p_ρ² + p_θ²/ρ² - Ẽρ² + f1(ρ) + f2(θ)/ρ²
//! ```
//!
//! to Coulomb-type ones
//!
//! ```text
//! H̃ = p_r² + p_φ²/r² - E/(2r) + f1(√(2r))/(2r) + f2(φ/2)/(4r²)
//! ```
//!
//! under `r = ρ²/2`, `φ = 2θ`. Pointwise `H̃ - Ẽ = ρ⁻²(H - E)`, so the
//! energy `E` of the source becomes the Coulomb strength `Q = E/2` of the
//! image and the oscillator coupling `ω² = -Ẽ` becomes its energy.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::systems::{Chart, DCParams, PhasePoint, System, TTWParams};

pub type RadialFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// A polar-separable Hamiltonian with an isotropic oscillator term `-Ẽρ²`.
#[derive(Clone)]
pub struct SeparableOscillatorSystem {
    pub f1: RadialFn,
    pub f2: RadialFn,
    /// Coefficient `Ẽ` of `-ρ²`; the oscillator frequency is `ω² = -Ẽ`.
    pub coupling: f64,
}

impl fmt::Debug for SeparableOscillatorSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SeparableOscillatorSystem")
            .field("coupling", &self.coupling)
            .finish_non_exhaustive()
    }
}

impl SeparableOscillatorSystem {
    pub fn new(
        f1: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
        f2: impl Fn(f64) -> Result<f64> + Send + Sync + 'static,
        coupling: f64,
    ) -> Self {
        Self {
            f1: Arc::new(f1),
            f2: Arc::new(f2),
            coupling,
        }
    }

    /// The TTW oscillator: `f1 = 0`, `f2 = αk² sec²(kθ) + βk² csc²(kθ)`, `Ẽ = -ω²`.
    pub fn from_ttw(p: &TTWParams) -> Self {
        let angular = *p;
        Self::new(|_| Ok(0.0), move |theta| angular.angular_potential(theta), -p.omega2)
    }

    pub fn hamiltonian(&self, pt: &PhasePoint) -> Result<f64> {
        expect_chart(pt, Chart::TtwPolar, "oscillator")?;
        let (rho, theta) = (pt.q1, pt.q2);
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("rho = {rho} must be positive")));
        }
        let r2 = rho * rho;
        Ok(pt.p1 * pt.p1 + pt.p2 * pt.p2 / r2 - self.coupling * r2 + (self.f1)(rho)? + (self.f2)(theta)? / r2)
    }
}

/// The image of a [`SeparableOscillatorSystem`] at source energy `E`.
#[derive(Clone)]
pub struct TransformedSystem {
    pub f1: RadialFn,
    pub f2: RadialFn,
    pub energy: f64,
}

impl fmt::Debug for TransformedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformedSystem")
            .field("energy", &self.energy)
            .finish_non_exhaustive()
    }
}

impl TransformedSystem {
    /// `[f1(√(2r)) - E]/(2r) + f2(φ/2)/(4r²)`.
    pub fn potential(&self, r: f64, phi: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("r = {r} must be positive")));
        }
        Ok(((self.f1)((2.0 * r).sqrt())? - self.energy) / (2.0 * r) + (self.f2)(0.5 * phi)? / (4.0 * r * r))
    }

    pub fn hamiltonian(&self, pt: &PhasePoint) -> Result<f64> {
        expect_chart(pt, Chart::DcPolar, "transformed")?;
        Ok(pt.p1 * pt.p1 + pt.p2 * pt.p2 / (pt.q1 * pt.q1) + self.potential(pt.q1, pt.q2)?)
    }

    /// Separated angular constant `p_φ² + f2(φ/2)/4`.
    pub fn angular_integral(&self, pt: &PhasePoint) -> Result<f64> {
        Ok(pt.p2 * pt.p2 + 0.25 * (self.f2)(0.5 * pt.q2)?)
    }
}

pub fn transform_hamiltonian(sys: &SeparableOscillatorSystem, energy: f64) -> TransformedSystem {
    TransformedSystem {
        f1: Arc::clone(&sys.f1),
        f2: Arc::clone(&sys.f2),
        energy,
    }
}

fn expect_chart(pt: &PhasePoint, chart: Chart, system: &'static str) -> Result<()> {
    if pt.chart != chart {
        return Err(Error::ChartMismatch {
            point: pt.chart.name(),
            system,
        });
    }
    Ok(())
}

/// `(ρ, θ, p_ρ, p_θ) ↦ (ρ²/2, 2θ, p_ρ/ρ, p_θ/2)`.
pub fn pushforward_phase(pt: &PhasePoint) -> Result<PhasePoint> {
    expect_chart(pt, Chart::TtwPolar, "pushforward")?;
    let rho = pt.q1;
    if !(rho > 0.0) {
        return Err(Error::Domain(format!("rho = {rho} must be positive")));
    }
    Ok(PhasePoint::dc(0.5 * rho * rho, 2.0 * pt.q2, pt.p1 / rho, 0.5 * pt.p2))
}

/// Inverse of [`pushforward_phase`].
pub fn pullback_phase(pt: &PhasePoint) -> Result<PhasePoint> {
    expect_chart(pt, Chart::DcPolar, "pullback")?;
    let r = pt.q1;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("r = {r} must be positive")));
    }
    let rho = (2.0 * r).sqrt();
    Ok(PhasePoint::ttw(rho, 0.5 * pt.q2, pt.p1 * rho, 2.0 * pt.p2))
}

/// `(H̃(push(pt)) - Ẽ) - ρ⁻²(H(pt) - E)` for a general separable system.
pub fn identity_residual(sys: &SeparableOscillatorSystem, energy: f64, pt: &PhasePoint) -> Result<f64> {
    let image = transform_hamiltonian(sys, energy);
    let h = sys.hamiltonian(pt)?;
    let h_img = image.hamiltonian(&pushforward_phase(pt)?)?;
    Ok((h_img - sys.coupling) - (h - energy) / (pt.q1 * pt.q1))
}

/// The same residual with TTW as the source and a concrete DC system as
/// the image; vanishes when `ω² = -Ẽ` and `Q = E/2`.
pub fn stackel_identity_residual(pt: &PhasePoint, ttw: &TTWParams, dc: &DCParams, energy: f64, e_tilde: f64) -> Result<f64> {
    let h = System::Ttw(*ttw).hamiltonian(pt)?;
    let h_img = System::Dc(*dc).hamiltonian(&pushforward_phase(pt)?)?;
    Ok((h_img - e_tilde) - (h - energy) / (pt.q1 * pt.q1))
}

/// DC image of a TTW system at source energy `E`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StackelImage {
    pub dc: DCParams,
    /// Energy of the image orbit, `Ẽ = -ω²`.
    pub energy: f64,
    /// Whether `Q > 0`, as bounded motion requires.
    pub q_positive: bool,
}

pub fn ttw_to_dc(ttw: &TTWParams, e_source: f64) -> StackelImage {
    let q = 0.5 * e_source;
    StackelImage {
        dc: DCParams::new(q, ttw.alpha, ttw.beta, ttw.k),
        energy: -ttw.omega2,
        q_positive: q > 0.0,
    }
}

/// The TTW system and source energy whose image is `dc` at energy `e_dc`.
pub fn dc_to_ttw(dc: &DCParams, e_dc: f64) -> (TTWParams, f64) {
    (TTWParams::new(-e_dc, dc.alpha, dc.beta, dc.k), 2.0 * dc.q)
}

/// Pushforward of every sample; time is dropped.
pub fn map_trajectory(traj: &Trajectory) -> Result<Vec<PhasePoint>> {
    traj.samples().iter().map(|s| pushforward_phase(&s.state)).collect()
}

/// `Ψ ↦ Ψ(√(2r), φ/2)`.
pub fn map_wavefunction<F>(psi: F) -> impl Fn(f64, f64) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    move |r, phi| {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("r = {r} must be positive")));
        }
        psi((2.0 * r).sqrt(), 0.5 * phi)
    }
}

fn dist2(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)
}

fn golden_min<F>(point: (f64, f64), lo: f64, hi: f64, curve: &F) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = dist2(point, curve(x1)?);
    let mut f2 = dist2(point, curve(x2)?);
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = dist2(point, curve(x1)?);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = dist2(point, curve(x2)?);
        }
        if b - a <= 1e-14 * (1.0 + b.abs()) {
            break;
        }
    }
    Ok(f1.min(f2))
}

/// Distance from `point` to a curve `t ↦ curve(t)` sampled at `(t_i, x_i)`.
/// Every local minimum of the sampled distances is refined by golden-section
/// search over its two neighbouring intervals, so a self-crossing curve is
/// measured against the right branch.
fn point_to_curve<F>(point: (f64, f64), samples: &[(f64, (f64, f64))], curve: &F) -> Result<f64>
where
    F: Fn(f64) -> Result<(f64, f64)>,
{
    if samples.is_empty() {
        return Err(Error::Domain("empty curve".into()));
    }
    let d: Vec<f64> = samples.iter().map(|(_, x)| dist2(point, *x)).collect();
    let mut best = d.iter().copied().fold(f64::INFINITY, f64::min);
    let n = d.len();
    for i in 0..n {
        let left = if i > 0 { d[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < n { d[i + 1] } else { f64::INFINITY };
        if d[i] > left || d[i] > right {
            continue;
        }
        let lo = samples[i.saturating_sub(1)].0;
        let hi = samples[(i + 1).min(n - 1)].0;
        if hi > lo {
            best = best.min(golden_min(point, lo, hi, curve)?);
        }
    }
    Ok(best.sqrt())
}

fn image_xy(pt: &PhasePoint) -> Result<(f64, f64)> {
    Ok(pushforward_phase(pt)?.position_xy())
}

/// Symmetric Hausdorff distance between the configuration-space image of a
/// TTW trajectory and a DC trajectory, divided by the DC orbit's maximum `r`.
pub fn hausdorff_image_vs_dc(ttw_traj: &Trajectory, dc_traj: &Trajectory) -> Result<f64> {
    let image: Vec<(f64, (f64, f64))> = ttw_traj
        .samples()
        .iter()
        .map(|s| Ok((s.t, image_xy(&s.state)?)))
        .collect::<Result<_>>()?;
    let direct: Vec<(f64, (f64, f64))> = dc_traj.samples().iter().map(|s| (s.t, s.state.position_xy())).collect();
    let image_curve = |t: f64| image_xy(&ttw_traj.state_at(t)?);
    let direct_curve = |t: f64| Ok(dc_traj.state_at(t)?.position_xy());
    let mut worst = 0.0_f64;
    for (_, x) in &image {
        worst = worst.max(point_to_curve(*x, &direct, &direct_curve)?);
    }
    for (_, x) in &direct {
        worst = worst.max(point_to_curve(*x, &image, &image_curve)?);
    }
    let scale = dc_traj.samples().iter().fold(0.0_f64, |m, s| m.max(s.state.q1));
    Ok(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, orbit_constants_from_point, orbit_residual_at, ttw_radial_period};
    use crate::invariants::poisson_bracket_numeric;
    use crate::systems::RationalIndex;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn k(c: u32, d: u32) -> RationalIndex {
        RationalIndex::new(c, d).unwrap()
    }

    fn random_ttw_point(rng: &mut ChaCha8Rng, kv: f64) -> PhasePoint {
        let width = PI / (2.0 * kv);
        PhasePoint::ttw(
            rng.gen_range(0.2..3.0),
            width * rng.gen_range(0.05..0.95),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        )
    }

    #[test]
    fn pushforward_examples() {
        let img = pushforward_phase(&PhasePoint::ttw(2f64.sqrt(), PI / 4.0, 0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(img.q1, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(img.q2, PI / 2.0, epsilon = 1e-15);
        assert_eq!(img.p1, 0.0);
        assert_eq!(img.p2, 0.5);
        assert!(pushforward_phase(&PhasePoint::ttw(0.0, 0.1, 0.0, 0.0)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let pt = random_ttw_point(&mut rng, 1.0);
            let img = pushforward_phase(&pt).unwrap();
            let lhs = img.p1.powi(2) + (img.p2 / img.q1).powi(2);
            let rhs = (pt.p1.powi(2) + (pt.p2 / pt.q1).powi(2)) / pt.q1.powi(2);
            assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
            let back = pullback_phase(&img).unwrap();
            for (a, b) in back.to_array().iter().zip(pt.to_array()) {
                assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pushforward_is_canonical() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let coord = |i: usize| move |pt: &PhasePoint| Ok(pushforward_phase(pt)?.to_array()[i]);
        for _ in 0..20 {
            let pt = random_ttw_point(&mut rng, 1.0);
            let pairs = [(0, 2, 1.0), (1, 3, 1.0), (0, 3, 0.0), (1, 2, 0.0), (0, 1, 0.0), (2, 3, 0.0)];
            for (i, j, expected) in pairs {
                let b = poisson_bracket_numeric(coord(i), coord(j), &pt, None).unwrap();
                assert!((b.value - expected).abs() < 1e-8, "{{{i},{j}}} = {}", b.value);
            }
        }
    }

    #[test]
    fn identity_is_exact_for_ttw() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let kv = k(rng.gen_range(1..4), rng.gen_range(1..4));
            let ttw = TTWParams::new(rng.gen_range(0.1..3.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), kv);
            let e_source = rng.gen_range(0.5..5.0);
            let image = ttw_to_dc(&ttw, e_source);
            let pt = random_ttw_point(&mut rng, kv.value());
            let h = System::Ttw(ttw).hamiltonian(&pt).unwrap();
            let res = stackel_identity_residual(&pt, &ttw, &image.dc, e_source, image.energy).unwrap();
            assert!(res.abs() <= 1e-11 * (1.0 + h.abs()) / pt.q1.powi(2).min(1.0), "{res:e}");
            let generic = identity_residual(&SeparableOscillatorSystem::from_ttw(&ttw), e_source, &pt).unwrap();
            assert!(generic.abs() <= 1e-11 * (1.0 + h.abs()) / pt.q1.powi(2).min(1.0));
        }
    }

    #[test]
    fn wrong_coulomb_strength_is_detected() {
        let ttw = TTWParams::new(1.0, 0.2, 0.3, k(2, 1));
        let pt = PhasePoint::ttw(1.3, 0.3, 0.2, 0.4);
        // Reading the identification as E = Q/2 gives Q = 2E instead of E/2.
        let e_source = 2.0;
        let mut wrong = ttw_to_dc(&ttw, e_source);
        wrong.dc.q = 2.0 * e_source;
        let res = stackel_identity_residual(&pt, &ttw, &wrong.dc, e_source, wrong.energy).unwrap();
        let r = pushforward_phase(&pt).unwrap().q1;
        assert_abs_diff_eq!(res, -(wrong.dc.q - 0.5 * e_source) / r, epsilon = 1e-12);
    }

    #[test]
    fn pure_oscillator_maps_to_pure_coulomb() {
        let free = SeparableOscillatorSystem::new(|_| Ok(0.0), |_| Ok(0.0), -1.0);
        let img = transform_hamiltonian(&free, 3.0);
        assert_abs_diff_eq!(img.potential(0.7, 1.1).unwrap(), -3.0 / 1.4, epsilon = 1e-15);
        let ttw = TTWParams::new(1.0, 0.4, 0.6, k(3, 2));
        let img = transform_hamiltonian(&SeparableOscillatorSystem::from_ttw(&ttw), 2.0);
        let dc = ttw_to_dc(&ttw, 2.0).dc;
        assert_eq!(dc.q, 1.0);
        for &(r, phi) in &[(0.5, 0.3), (1.7, 1.2)] {
            assert_abs_diff_eq!(img.potential(r, phi).unwrap(), dc.potential(r, phi).unwrap(), epsilon = 1e-13);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let pt = random_ttw_point(&mut rng, 1.0);
            assert!(identity_residual(&free, 3.0, &pt).unwrap().abs() < 1e-11 * (1.0 + pt.q1.powi(-2)));
        }
    }

    #[test]
    fn ttw_dc_round_trip() {
        let ttw = TTWParams::new(1.7, 0.2, 0.3, k(3, 2));
        let image = ttw_to_dc(&ttw, 2.0);
        assert!(image.energy < 0.0 && image.q_positive);
        assert!(!ttw_to_dc(&ttw, -1.0).q_positive);
        let (back, e_source) = dc_to_ttw(&image.dc, image.energy);
        assert_abs_diff_eq!(back.omega2, ttw.omega2, epsilon = 1e-12);
        assert_abs_diff_eq!(e_source, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn mapped_wavefunction_basics() {
        let one = map_wavefunction(|_, _| Ok(1.0));
        assert_eq!(one(0.8, 0.2).unwrap(), 1.0);
        assert!(one(0.0, 0.2).is_err());
        // Zeros of ρ ↦ cos(3ρ) on a ray map to zeros of r ↦ cos(3√(2r)).
        let mapped = map_wavefunction(|rho, _| Ok((3.0 * rho).cos()));
        let count = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
            let n = 4000;
            (0..n)
                .filter(|&i| {
                    let a = lo + (hi - lo) * i as f64 / n as f64;
                    let b = lo + (hi - lo) * (i + 1) as f64 / n as f64;
                    f(a) * f(b) < 0.0
                })
                .count()
        };
        let src = count(&|rho| (3.0 * rho).cos(), 0.1, 4.0);
        let img = count(&|r| mapped(r, 0.3).unwrap(), 0.005, 8.0);
        assert_eq!(src, img);
    }

    #[test]
    fn image_of_circular_orbit_is_circular() {
        let ttw = TTWParams::new(1.0, 0.0, 0.0, k(1, 1));
        // Circular: p_θ² = ω²ρ⁴ at p_ρ = 0.
        let start = PhasePoint::ttw(1.2, 0.3, 0.0, 1.44);
        let traj = integrate(&System::Ttw(ttw), &start, 3.0, 1e-12).unwrap();
        for pt in map_trajectory(&traj).unwrap() {
            assert_abs_diff_eq!(pt.q1, 0.72, epsilon = 1e-9);
        }
    }

    #[test]
    fn image_satisfies_dc_orbit_equation() {
        let ttw = TTWParams::new(1.0, 0.2, 0.3, k(3, 2));
        let start = PhasePoint::ttw(1.0, 0.3, 0.4, 0.9);
        let e_source = System::Ttw(ttw).hamiltonian(&start).unwrap();
        let image = ttw_to_dc(&ttw, e_source);
        let t_end = 2.0 * ttw_radial_period(ttw.omega2).unwrap();
        let traj = integrate(&System::Ttw(ttw), &start, t_end, 1e-12).unwrap();
        let curve = map_trajectory(&traj).unwrap();
        let consts = orbit_constants_from_point(&image.dc, &curve[0]).unwrap();
        assert_abs_diff_eq!(consts.e, image.energy, epsilon = 1e-10);
        for pt in &curve {
            assert!(orbit_residual_at(&image.dc, &consts, pt).unwrap().abs() < 1e-6);
        }
        let dc_traj = integrate(&System::Dc(image.dc), &curve[0], 2.0 * crate::dynamics::radial_period_for(&System::Dc(image.dc), &curve[0]).unwrap(), 1e-12).unwrap();
        let h = hausdorff_image_vs_dc(&traj, &dc_traj).unwrap();
        assert!(h < 1e-5, "{h:e}");
    }
}
