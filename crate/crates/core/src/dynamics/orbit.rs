//! Separation constants, phases and the closed-form orbit equations of the
//! deformed Coulomb system.
//!
//! Writing `X_r = (2A - Qr)/(r√D1) = cos χ` and
//! `X_φ = (2A sin²(kφ/2) - A + k²(α-β)/4)/√D2 = cos ψ`, the two angle
//! variables satisfy `cχ + dψ = C` along an orbit, which gives
//!
//! ```text
//! T_c(X_r) = cos C · T_d(X_φ) + sin C · U_{d-1}(X_φ) · sin ψ.
//! ```
//!
//! With `ψ` taken increasing in time, `sin ψ` has the sign
//! `-sign(p_φ sin kφ)`, so it flips at every angular turning point. The
//! single-branch form uses `sin ψ = +√(1 - X_φ²)`.

use std::f64::consts::PI;

use serde::Serialize;

use super::{propagate, radial_period_closed_form, IntegratorConfig};
use crate::error::{Error, Result};
use crate::specfun::{chebyshev_t_tol, chebyshev_u_tol, clamp_unit};
use crate::systems::{
    angular_turning_points, discriminant_d1, discriminant_d2, radial_turning_points, DCParams, PhasePoint, System,
};

/// Clamp tolerance for Chebyshev arguments evaluated on numerically
/// integrated states.
pub const ORBIT_CLAMP: f64 = 1e-8;

/// Separation constants and phases fixing one classical orbit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitConstants {
    pub e: f64,
    pub a: f64,
    /// Time phase; the anchoring point sits at `t = 0`.
    pub delta1: f64,
    pub delta2: f64,
    /// `C = -2√A c δ2 + (c+d)π/2`.
    pub c_phase: f64,
    pub d1: f64,
    pub d2: f64,
}

fn sign(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Sign of `sin ψ` at a point: `-sign(p_φ sin kφ)`.
pub fn angular_branch(p: &DCParams, point: &PhasePoint) -> f64 {
    -sign(point.p2 * (p.k.value() * point.q2).sin())
}

/// Half-period branch of the time equation: the sign of `p_r`.
pub fn radial_branch(point: &PhasePoint) -> f64 {
    sign(point.p1)
}

fn x_r(p: &DCParams, c: &OrbitConstants, r: f64) -> f64 {
    (2.0 * c.a - p.q * r) / (r * c.d1.sqrt())
}

fn x_phi(p: &DCParams, c: &OrbitConstants, phi: f64) -> f64 {
    let k = p.k.value();
    let s = (0.5 * k * phi).sin();
    (2.0 * c.a * s * s - c.a + 0.25 * k * k * (p.alpha - p.beta)) / c.d2.sqrt()
}

/// The implicit orbit equation in single-branch form, `sin ψ = +√(1 - X_φ²)`.
pub fn orbit_residual(p: &DCParams, consts: &OrbitConstants, r: f64, phi: f64) -> Result<f64> {
    orbit_residual_branch(p, consts, r, phi, 1.0)
}

/// The implicit orbit equation with `sin ψ = branch · √(1 - X_φ²)`.
pub fn orbit_residual_branch(p: &DCParams, consts: &OrbitConstants, r: f64, phi: f64, branch: f64) -> Result<f64> {
    let (c, d) = (p.k.num(), p.k.den());
    let xr = clamp_unit(x_r(p, consts, r), ORBIT_CLAMP)?;
    let xp = clamp_unit(x_phi(p, consts, phi), ORBIT_CLAMP)?;
    let tc = chebyshev_t_tol(c, xr, ORBIT_CLAMP)?;
    let td = chebyshev_t_tol(d, xp, ORBIT_CLAMP)?;
    let ud = chebyshev_u_tol(d - 1, xp, ORBIT_CLAMP)?;
    let (sc, cc) = consts.c_phase.sin_cos();
    Ok(-tc + cc * td + sc * ud * branch * (1.0 - xp * xp).max(0.0).sqrt())
}

/// The implicit orbit equation on the branch selected by the point's momentum.
pub fn orbit_residual_at(p: &DCParams, consts: &OrbitConstants, point: &PhasePoint) -> Result<f64> {
    orbit_residual_branch(p, consts, point.q1, point.q2, angular_branch(p, point))
}

/// Residual of the time law
/// `(-2Er - Q)/√D1 + sin(4(-E)^{3/2}(t+δ1)/Q + 2·branch·√(-E)·√(Er²+Qr-A)/Q)`.
pub fn time_equation_residual(p: &DCParams, consts: &OrbitConstants, t: f64, r: f64, branch: f64) -> Result<f64> {
    let (first, sine) = time_equation_terms(p, consts, t, r, branch)?;
    Ok(first + sine)
}

pub(crate) fn time_equation_terms(
    p: &DCParams,
    consts: &OrbitConstants,
    t: f64,
    r: f64,
    branch: f64,
) -> Result<(f64, f64)> {
    let e = consts.e;
    let radicand = e * r * r + p.q * r - consts.a;
    let tol = 1e-9 * (consts.a.abs() + p.q * r).max(1e-300);
    if radicand < -tol {
        return Err(Error::Domain(format!("r = {r} lies outside the radial annulus")));
    }
    let first = (-2.0 * e * r - p.q) / consts.d1.sqrt();
    let mean_motion = 4.0 * (-e).powf(1.5) / p.q;
    let arg = mean_motion * (t + consts.delta1) + 2.0 * branch * (-e).sqrt() * radicand.max(0.0).sqrt() / p.q;
    Ok((first, arg.sin()))
}

/// Separation constants and phases of the orbit through `point`.
///
/// The radial angle `χ0 = ±arccos X_r` is ambiguous; both candidates are
/// tried and the one whose orbit equation also vanishes at a nearby point of
/// the flow is kept.
pub fn orbit_constants_from_point(p: &DCParams, point: &PhasePoint) -> Result<OrbitConstants> {
    let system = System::Dc(*p);
    let e = system.hamiltonian(point)?;
    let a = p.separation_constant(point.q2, point.p2)?;
    radial_turning_points(p.q, e, a)?;
    angular_turning_points(p, a)?;
    let d1 = discriminant_d1(p.q, e, a);
    let d2 = discriminant_d2(p, a);
    let (c, d) = (p.k.num() as f64, p.k.den() as f64);

    let mut consts = OrbitConstants {
        e,
        a,
        delta1: 0.0,
        delta2: 0.0,
        c_phase: 0.0,
        d1,
        d2,
    };
    let r = point.q1;
    let xr = clamp_unit(x_r(p, &consts, r), ORBIT_CLAMP)?;
    let xp = clamp_unit(x_phi(p, &consts, point.q2), ORBIT_CLAMP)?;
    let psi0 = angular_branch(p, point) * xp.acos();
    let chi = xr.acos();

    let candidates = [c * chi + d * psi0, -c * chi + d * psi0];
    let period = radial_period_closed_form(p.q, e)?;
    let nearby = propagate(&system, point, 1e-3 * period, &IntegratorConfig::new(1e-13))?;
    let mut best: Option<(f64, f64)> = None;
    for &cand in &candidates {
        consts.c_phase = cand;
        let here = orbit_residual_at(p, &consts, point)?.abs();
        let there = orbit_residual_at(p, &consts, &nearby)?.abs();
        let score = here.max(there);
        if best.map_or(true, |(_, s)| score < s) {
            best = Some((cand, score));
        }
    }
    let (c_phase, score) = best.expect("two candidates");
    if score > 1e-7 {
        return Err(Error::Branch(format!("no branch fits the flow (best residual {score:e})")));
    }
    consts.c_phase = c_phase;
    consts.delta2 = (0.5 * (c + d) * PI - c_phase) / (2.0 * a.sqrt() * c);

    // Eccentric anomaly η with cos η = (2Er + Q)/√D1 and sin η of the sign of p_r;
    // the sine's argument equals η + π/2 along the orbit.
    let cos_eta = ((2.0 * e * r + p.q) / d1.sqrt()).clamp(-1.0, 1.0);
    let eta = (radial_branch(point) * (1.0 - cos_eta * cos_eta).sqrt()).atan2(cos_eta);
    let radicand = (e * r * r + p.q * r - a).max(0.0);
    let x0 = 2.0 * radial_branch(point) * (-e).sqrt() * radicand.sqrt() / p.q;
    let mean_motion = 4.0 * (-e).powf(1.5) / p.q;
    consts.delta1 = (eta + 0.5 * PI - x0) / mean_motion;
    Ok(consts)
}

/// A phase point with prescribed `(E, A)`.
///
/// `radial_frac` places `r` between the turning points `r1..r2` and
/// `angular_frac` places `cos²(kφ/2)` between `u1..u2`, inside the first
/// cell `0 < φ < π/k`. The signs select the momentum directions.
pub fn point_from_constants(
    p: &DCParams,
    e: f64,
    a: f64,
    radial_frac: f64,
    angular_frac: f64,
    pr_sign: f64,
    pphi_sign: f64,
) -> Result<PhasePoint> {
    let (r1, r2) = radial_turning_points(p.q, e, a)?;
    let (u1, u2) = angular_turning_points(p, a)?;
    let r = r1 + radial_frac * (r2 - r1);
    let u = u1 + angular_frac * (u2 - u1);
    let phi = 2.0 / p.k.value() * u.sqrt().acos();
    let pr2 = (e + p.q / r - a / (r * r)).max(0.0);
    let pphi2 = (a - p.angular_barrier(phi)?).max(0.0);
    Ok(PhasePoint::dc(r, phi, sign(pr_sign) * pr2.sqrt(), sign(pphi_sign) * pphi2.sqrt()))
}
