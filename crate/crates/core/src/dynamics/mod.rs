//! Numerical trajectories, radial periods and orbit closure.

mod integrator;
mod orbit;

pub use integrator::{IntegratorConfig, State};
pub use orbit::{
    angular_branch, orbit_constants_from_point, orbit_residual, orbit_residual_at, orbit_residual_branch,
    point_from_constants, radial_branch, time_equation_residual, OrbitConstants, ORBIT_CLAMP,
};

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::systems::{validate_bounded, PhasePoint, System};

/// One accepted integrator step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub state: PhasePoint,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    /// max |H(t) - H(0)| / |H(0)| over the samples (absolute if H(0) = 0).
    pub max_energy_drift: f64,
}

/// A numerically integrated orbit, sampled at every accepted step.
#[derive(Clone, Debug)]
pub struct Trajectory {
    system: System,
    config: IntegratorConfig,
    samples: Vec<Sample>,
    stats: IntegratorStats,
}

impl Trajectory {
    pub fn system(&self) -> &System {
        &self.system
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn stats(&self) -> &IntegratorStats {
        &self.stats
    }

    pub fn initial(&self) -> &PhasePoint {
        &self.samples[0].state
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// State at any `t` in the covered span, re-integrated from the
    /// preceding sample at the trajectory's tolerance.
    pub fn state_at(&self, t: f64) -> Result<PhasePoint> {
        let (t0, t1) = (self.samples[0].t, self.t_end());
        if !(t >= t0 && t <= t1) {
            return Err(Error::Domain(format!("t = {t} outside [{t0}, {t1}]")));
        }
        let i = self.samples.partition_point(|s| s.t <= t).saturating_sub(1);
        let s = &self.samples[i];
        if s.t == t {
            return Ok(s.state);
        }
        propagate(&self.system, &s.state, t - s.t, &self.config)
    }

    /// Max relative drift of the separated angular constant (`A` or `L1`).
    pub fn max_angular_integral_drift(&self) -> Result<f64> {
        let a0 = self.system.angular_integral(self.initial())?;
        let mut worst = 0.0_f64;
        for s in &self.samples {
            let a = self.system.angular_integral(&s.state)?;
            worst = worst.max(relative(a, a0));
        }
        Ok(worst)
    }

    /// CSV with header `t,q1,q2,p1,p2,H,A`; `A` is the separated angular
    /// constant (`L1` for TTW).
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("t,q1,q2,p1,p2,H,A\n");
        for s in &self.samples {
            let h = self.system.hamiltonian(&s.state)?;
            let a = self.system.angular_integral(&s.state)?;
            let p = &s.state;
            let _ = writeln!(out, "{},{},{},{},{},{},{}", s.t, p.q1, p.q2, p.p1, p.p2, h, a);
        }
        Ok(out)
    }
}

fn relative(value: f64, reference: f64) -> f64 {
    let diff = (value - reference).abs();
    if reference != 0.0 {
        diff / reference.abs()
    } else {
        diff
    }
}

/// Integrate Hamilton's equations from `initial` over `[0, t_end]`.
pub fn integrate(system: &System, initial: &PhasePoint, t_end: f64, tol: f64) -> Result<Trajectory> {
    integrate_with(system, initial, t_end, &IntegratorConfig::new(tol))
}

pub fn integrate_with(
    system: &System,
    initial: &PhasePoint,
    t_end: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    let h0 = system.hamiltonian(initial)?;
    let chart = initial.chart;
    let field = |y: &State| system.vector_field(y);
    let mut samples = vec![Sample { t: 0.0, state: *initial }];
    let mut drift = 0.0_f64;
    let (_, accepted, rejected) = integrator::drive(&field, initial.to_array(), 0.0, t_end, config, |t, y| {
        let state = PhasePoint::from_array(chart, *y);
        if let Ok(h) = system.hamiltonian_raw(y) {
            drift = drift.max(relative(h, h0));
        }
        samples.push(Sample { t, state });
    })?;
    Ok(Trajectory {
        system: *system,
        config: *config,
        samples,
        stats: IntegratorStats {
            accepted,
            rejected,
            max_energy_drift: drift,
        },
    })
}

/// Advance `from` by `dt` without recording intermediate steps.
pub fn propagate(system: &System, from: &PhasePoint, dt: f64, config: &IntegratorConfig) -> Result<PhasePoint> {
    let field = |y: &State| system.vector_field(y);
    let (y, _, _) = integrator::drive(&field, from.to_array(), 0.0, dt, config, |_, _| {})?;
    Ok(PhasePoint::from_array(from.chart, y))
}

/// Radial period `Qπ / (2(-E)^{3/2})` of bound deformed-Coulomb motion.
pub fn radial_period_closed_form(q: f64, e: f64) -> Result<f64> {
    if !(e < 0.0) {
        return Err(Error::Unbounded { energy: e });
    }
    if !(q > 0.0) {
        return Err(Error::Domain(format!("Coulomb strength {q} must be positive")));
    }
    Ok(q * PI / (2.0 * (-e).powf(1.5)))
}

/// Radial period `π / (2ω)` of the TTW oscillator (independent of energy).
pub fn ttw_radial_period(omega2: f64) -> Result<f64> {
    if !(omega2 > 0.0) {
        return Err(Error::Domain(format!("omega^2 = {omega2} does not bind")));
    }
    Ok(PI / (2.0 * omega2.sqrt()))
}

/// The closed-form radial period for the system at the given state.
pub fn radial_period_for(system: &System, point: &PhasePoint) -> Result<f64> {
    match system {
        System::Dc(p) => radial_period_closed_form(p.q, system.hamiltonian(point)?),
        System::Ttw(p) => ttw_radial_period(p.omega2),
    }
}

/// Times of the maxima of `q1(t)`, each refined to the zero of `p1`.
///
/// A bracket is a sample pair with `p1 > 0` then `p1 <= 0`. The first guess
/// is the vertex of the parabola through three samples of `q1`; Newton on
/// `p1(t)` (with `p1' = -∂H/∂q1`) then polishes it using dense re-integration.
pub fn radial_maxima(traj: &Trajectory) -> Result<Vec<f64>> {
    let s = traj.samples();
    let mut times = Vec::new();
    for i in 0..s.len().saturating_sub(1) {
        let (a, b) = (&s[i], &s[i + 1]);
        if !(a.state.p1 > 0.0 && b.state.p1 <= 0.0) {
            continue;
        }
        let mut t = if i > 0 {
            parabola_vertex(
                (s[i - 1].t, s[i - 1].state.q1),
                (a.t, a.state.q1),
                (b.t, b.state.q1),
            )
        } else if i + 2 < s.len() {
            parabola_vertex((a.t, a.state.q1), (b.t, b.state.q1), (s[i + 2].t, s[i + 2].state.q1))
        } else {
            0.5 * (a.t + b.t)
        };
        if !(t > a.t && t < b.t) {
            // Fall back to linear interpolation of p1.
            t = a.t + (b.t - a.t) * a.state.p1 / (a.state.p1 - b.state.p1);
        }
        for _ in 0..20 {
            let st = traj.state_at(t.clamp(a.t, b.t))?;
            let g = traj.system().hamiltonian_gradient(&st)?;
            let dp = -g[0];
            if dp == 0.0 {
                break;
            }
            let step = st.p1 / dp;
            t -= step;
            t = t.clamp(a.t, b.t);
            if step.abs() <= 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        times.push(t);
    }
    Ok(times)
}

fn parabola_vertex(p0: (f64, f64), p1: (f64, f64), p2: (f64, f64)) -> f64 {
    let (x0, y0) = p0;
    let (x1, y1) = p1;
    let (x2, y2) = p2;
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let curv = (d12 - d01) / (x2 - x0);
    if curv == 0.0 {
        return x1;
    }
    // y = y0 + d01 (x - x0) + curv (x - x0)(x - x1)
    0.5 * (x0 + x1) - 0.5 * d01 / curv
}

/// Mean spacing of successive maxima of `q1(t)`.
pub fn measure_radial_period(traj: &Trajectory) -> Result<f64> {
    let (lo, hi) = traj
        .samples()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s.state.q1), hi.max(s.state.q1)));
    if !(hi - lo > 1e-9 * hi.abs().max(1e-300)) {
        return Err(Error::DegenerateOrbit("radial coordinate is constant".into()));
    }
    let maxima = radial_maxima(traj)?;
    if maxima.len() < 2 {
        return Err(Error::DegenerateOrbit(format!(
            "found {} radial maxima; need at least two",
            maxima.len()
        )));
    }
    Ok((maxima[maxima.len() - 1] - maxima[0]) / (maxima.len() - 1) as f64)
}

/// Result of searching for the first return to the initial phase point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClosureReport {
    pub closed: bool,
    /// Radial periods elapsed at closure, or at the closest approach when not closed.
    pub n_radial: u32,
    pub return_distance: f64,
    pub period_total: f64,
}

/// Scaled phase-space distance with the angle reduced modulo the potential's
/// angular period.
pub fn return_distance(system: &System, a: &PhasePoint, reference: &PhasePoint) -> f64 {
    let period = system.angular_period();
    let mut dphi = (a.q2 - reference.q2).rem_euclid(period);
    if dphi > 0.5 * period {
        dphi -= period;
    }
    let r0 = reference.q1.abs();
    let speed = (reference.p1.powi(2) + (reference.p2 / reference.q1).powi(2)).sqrt().max(1e-300);
    let terms = [
        (a.q1 - reference.q1) / r0,
        dphi / reference.q2.abs().max(1e-300),
        (a.p1 - reference.p1) / speed,
        (a.p2 - reference.p2) / (speed * r0),
    ];
    terms.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Integration tolerance used by [`closure_check`].
pub const CLOSURE_INTEGRATION_TOL: f64 = 1e-12;

/// Smallest number of radial periods after which the orbit returns to
/// `initial` within `tol`.
pub fn closure_check(system: &System, initial: &PhasePoint, max_radial_periods: u32, tol: f64) -> Result<ClosureReport> {
    if let System::Dc(p) = system {
        let e = system.hamiltonian(initial)?;
        let a = system.angular_integral(initial)?;
        let report = validate_bounded(p, e, a);
        if !report.all_passed() {
            return Err(Error::Domain(format!(
                "initial point violates bounded-motion restrictions: {:?}",
                report.failed()
            )));
        }
    }
    let period = radial_period_for(system, initial)?;
    let config = IntegratorConfig::new(CLOSURE_INTEGRATION_TOL);
    let mut best = ClosureReport {
        closed: false,
        n_radial: 0,
        return_distance: f64::INFINITY,
        period_total: 0.0,
    };
    let mut state = *initial;
    for n in 1..=max_radial_periods {
        state = propagate(system, &state, period, &config)?;
        let d = return_distance(system, &state, initial);
        if d < best.return_distance {
            best = ClosureReport {
                closed: false,
                n_radial: n,
                return_distance: d,
                period_total: n as f64 * period,
            };
        }
        if d <= tol {
            best.closed = true;
            return Ok(best);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{DCParams, RationalIndex, TTWParams};
    use approx::assert_abs_diff_eq;

    fn k(c: u32, d: u32) -> RationalIndex {
        RationalIndex::new(c, d).unwrap()
    }

    #[test]
    fn circular_coulomb_orbit_stays_circular() {
        let sys = System::Dc(DCParams::new(1.0, 0.0, 0.0, k(1, 1)));
        let start = PhasePoint::dc(1.0, 1.0, 0.0, 0.5f64.sqrt());
        let traj = integrate_with(&sys, &start, 50.0, &IntegratorConfig::new(1e-12).with_max_step(0.1)).unwrap();
        for s in traj.samples() {
            assert!((s.state.q1 - 1.0).abs() < 1e-9, "r = {} at t = {}", s.state.q1, s.t);
        }
        assert!(matches!(measure_radial_period(&traj), Err(Error::DegenerateOrbit(_))));
    }

    #[test]
    fn free_particle_moves_in_a_straight_line() {
        let sys = System::Dc(DCParams::new(0.0, 0.0, 0.0, k(1, 1)));
        // Cartesian start (1, 0.5) with momentum (-0.3, 0.2); velocity is 2p.
        let (x0, y0, px, py) = (1.0f64, 0.5f64, -0.3f64, 0.2f64);
        let r = x0.hypot(y0);
        let phi = y0.atan2(x0);
        let p_r = (x0 * px + y0 * py) / r;
        let p_phi = x0 * py - y0 * px;
        let traj = integrate(&sys, &PhasePoint::dc(r, phi, p_r, p_phi), 3.0, 1e-12).unwrap();
        for s in traj.samples() {
            let (x, y) = s.state.position_xy();
            assert_abs_diff_eq!(x, x0 + 2.0 * px * s.t, epsilon = 1e-9);
            assert_abs_diff_eq!(y, y0 + 2.0 * py * s.t, epsilon = 1e-9);
        }
    }

    #[test]
    fn energy_drift_within_contract() {
        let p = DCParams::new(1.0, 0.2, 0.3, k(3, 2));
        let start = point_from_constants(&p, -0.05, 3.3, 0.3, 0.4, 1.0, 1.0).unwrap();
        let sys = System::Dc(p);
        for &tol in &[1e-8, 1e-10, 1e-12] {
            let traj = integrate(&sys, &start, 200.0, tol).unwrap();
            assert!(traj.stats().max_energy_drift <= 10.0 * tol, "tol {tol:e}: drift {:e}", traj.stats().max_energy_drift);
        }
    }

    #[test]
    fn fifty_period_drift() {
        for &(c, d) in &[(1, 1), (1, 2), (3, 2)] {
            let p = DCParams::new(1.0, 0.2, 0.3, k(c, d));
            let a = 0.375 * p.k.value().powi(2) * (p.alpha.sqrt() + p.beta.sqrt()).powi(2);
            let e = -1.0 / (8.0 * a);
            let start = point_from_constants(&p, e, a, 0.3, 0.6, 1.0, 1.0).unwrap();
            let sys = System::Dc(p);
            let traj = integrate(&sys, &start, 50.0 * radial_period_closed_form(1.0, e).unwrap(), 1e-12).unwrap();
            assert!(traj.stats().max_energy_drift <= 1e-9, "k={c}/{d}: {:e}", traj.stats().max_energy_drift);
            assert!(traj.max_angular_integral_drift().unwrap() <= 1e-9);
        }
    }

    #[test]
    fn trajectory_times_strictly_increase_and_csv_has_header() {
        let sys = System::Ttw(TTWParams::new(1.0, 0.2, 0.3, k(2, 1)));
        let start = PhasePoint::ttw(1.0, 0.4, 0.2, 0.3);
        let traj = integrate(&sys, &start, 5.0, 1e-10).unwrap();
        assert!(traj.samples().windows(2).all(|w| w[1].t > w[0].t));
        let csv = traj.to_csv().unwrap();
        assert!(csv.starts_with("t,q1,q2,p1,p2,H,A\n"));
        assert_eq!(csv.lines().count(), traj.samples().len() + 1);
    }

    #[test]
    fn state_at_matches_direct_propagation() {
        let sys = System::Ttw(TTWParams::new(1.0, 0.2, 0.3, k(1, 1)));
        let start = PhasePoint::ttw(1.0, 0.5, 0.1, 0.4);
        let traj = integrate(&sys, &start, 4.0, 1e-12).unwrap();
        let a = traj.state_at(2.345).unwrap();
        let b = propagate(&sys, &start, 2.345, &IntegratorConfig::new(1e-12)).unwrap();
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            assert!((x - y).abs() < 1e-9);
        }
        assert!(traj.state_at(4.5).is_err());
    }

    #[test]
    fn closed_form_period_examples() {
        assert_abs_diff_eq!(radial_period_closed_form(2.0, -1.0).unwrap(), PI, epsilon = 1e-15);
        assert_abs_diff_eq!(radial_period_closed_form(1.0, -0.5).unwrap(), PI * 2f64.sqrt(), epsilon = 1e-14);
        let t1 = radial_period_closed_form(1.3, -0.4).unwrap();
        let t2 = radial_period_closed_form(1.3, -0.2).unwrap();
        assert_abs_diff_eq!(t2 / t1, 2.0 * 2f64.sqrt(), epsilon = 1e-13);
        assert!(matches!(radial_period_closed_form(1.0, 0.0), Err(Error::Unbounded { .. })));
    }

    #[test]
    fn measured_period_matches_closed_form() {
        let p = DCParams::new(1.0, 0.2, 0.3, k(2, 1));
        let start = point_from_constants(&p, -0.15, 1.2, 0.5, 0.5, 1.0, 1.0).unwrap();
        let sys = System::Dc(p);
        let t_r = radial_period_closed_form(1.0, -0.15).unwrap();
        let traj = integrate(&sys, &start, 10.5 * t_r, 1e-12).unwrap();
        let measured = measure_radial_period(&traj).unwrap();
        assert!((measured / t_r - 1.0).abs() < 1e-6, "{measured} vs {t_r}");
        let maxima = radial_maxima(&traj).unwrap();
        for w in maxima.windows(2) {
            assert!(((w[1] - w[0]) / t_r - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn closure_examples() {
        let p = DCParams::new(1.0, 0.2, 0.3, k(1, 1));
        let start = point_from_constants(&p, -0.3, 0.4, 0.3, 0.6, 1.0, 1.0).unwrap();
        let sys = System::Dc(p);
        let rep = closure_check(&sys, &start, 4, 1e-6).unwrap();
        assert!(rep.closed && rep.n_radial == 1, "{rep:?}");
        let rep = closure_check(&sys, &start, 0, 1e-6).unwrap();
        assert!(!rep.closed);
        assert!(rep.return_distance >= 0.0);

        let p = DCParams::new(1.0, 0.2, 0.3, k(2, 1));
        let start = point_from_constants(&p, -0.15, 1.2, 0.3, 0.6, 1.0, -1.0).unwrap();
        let rep = closure_check(&System::Dc(p), &start, 4, 1e-6).unwrap();
        assert!(rep.closed && rep.n_radial <= 2, "{rep:?}");
    }

    #[test]
    fn closure_requires_bounded_motion() {
        let p = DCParams::new(1.0, 0.2, 0.3, k(1, 1));
        let sys = System::Dc(p);
        let escaping = PhasePoint::dc(1.0, 1.0, 2.0, 1.0);
        assert!(closure_check(&sys, &escaping, 3, 1e-6).is_err());
    }
}
