//! Integrals of the TTW oscillator and their pullback to the deformed
//! Coulomb system.
//!
//! With `ρ = e^R`, `p_R = ρ p_ρ` and `L1 = p_θ² + αk² sec²(kθ) + βk² csc²(kθ)`,
//! the auxiliary quantities are
//!
//! ```text
//! A_x = √L1 sin(2kθ) p_θ          A_y = L1 cos(2kθ) - αk² + βk²
//! B_x = 2√L1 ρ⁻² p_R              B_y = 2 L1 ρ⁻² - H
//! ```
//!
//! Writing `A = A_x + iA_y` and `B = B_x + iB_y`, the higher-order integrals
//! are `Im(Bᶜ conj(Aᵈ))` and `Re(Bᶜ conj(Aᵈ))`, divided by a power of `√L1`
//! that makes them polynomial in the momenta.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::systems::{Chart, DCParams, PhasePoint, System, TTWParams};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ABQuad {
    pub a_x: f64,
    pub a_y: f64,
    pub b_x: f64,
    pub b_y: f64,
}

impl ABQuad {
    pub fn a_norm2(&self) -> f64 {
        self.a_x * self.a_x + self.a_y * self.a_y
    }

    pub fn b_norm2(&self) -> f64 {
        self.b_x * self.b_x + self.b_y * self.b_y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum L2Variant {
    Sin,
    Cos,
}

impl L2Variant {
    /// Exponent of the `√L1` divisor for index `k = c/d`.
    pub fn l1_power(self, c: u32, d: u32) -> u32 {
        match self {
            L2Variant::Sin => (c + d + 1) % 2,
            L2Variant::Cos => (c + d) % 2,
        }
    }

    /// Degree in the momenta, `2(c+d)` minus the divisor power.
    pub fn degree(self, c: u32, d: u32) -> u32 {
        2 * (c + d) - self.l1_power(c, d)
    }

    pub fn name(self) -> &'static str {
        match self {
            L2Variant::Sin => "sin",
            L2Variant::Cos => "cos",
        }
    }
}

impl std::str::FromStr for L2Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sin" => Ok(L2Variant::Sin),
            "cos" => Ok(L2Variant::Cos),
            other => Err(Error::Parse(format!("unknown integral variant {other:?}"))),
        }
    }
}

fn expect_chart(point: &PhasePoint, chart: Chart, system: &'static str) -> Result<()> {
    if point.chart != chart {
        return Err(Error::ChartMismatch { point: point.chart.name(), system });
    }
    Ok(())
}

pub fn l1_ttw(p: &TTWParams, theta: f64, p_theta: f64) -> Result<f64> {
    p.l1(theta, p_theta)
}

pub fn ab_quantities(p: &TTWParams, state: &PhasePoint) -> Result<ABQuad> {
    expect_chart(state, Chart::TtwPolar, "TTW")?;
    let l1 = p.l1(state.q2, state.p2)?;
    if !(l1 > 0.0) {
        return Err(Error::Domain(format!("L1 = {l1} is not positive")));
    }
    let h = System::Ttw(*p).hamiltonian(state)?;
    let k = p.k.value();
    let sl1 = l1.sqrt();
    let inv_rho2 = state.q1.powi(-2);
    let p_big_r = state.q1 * state.p1;
    let (s2, c2) = (2.0 * k * state.q2).sin_cos();
    Ok(ABQuad {
        a_x: sl1 * s2 * state.p2,
        a_y: l1 * c2 - (p.alpha - p.beta) * k * k,
        b_x: 2.0 * sl1 * inv_rho2 * p_big_r,
        b_y: 2.0 * l1 * inv_rho2 - h,
    })
}

fn binomial(n: u32, j: u32) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `Re (x + iy)ⁿ` as the even binomial sum.
fn re_pow(x: f64, y: f64, n: u32) -> f64 {
    (0..=n / 2)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n, 2 * m) * x.powi((n - 2 * m) as i32) * y.powi((2 * m) as i32)
        })
        .sum()
}

/// `Im (x + iy)ⁿ` as the odd binomial sum.
fn im_pow(x: f64, y: f64, n: u32) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (0..=(n - 1) / 2)
        .map(|m| {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(n, 2 * m + 1) * x.powi((n - 2 * m - 1) as i32) * y.powi((2 * m + 1) as i32)
        })
        .sum()
}

fn l1_divisor(p: &TTWParams, state: &PhasePoint, variant: L2Variant) -> Result<f64> {
    let l1 = p.l1(state.q2, state.p2)?;
    Ok(l1.sqrt().powi(variant.l1_power(p.k.num(), p.k.den()) as i32))
}

/// The two phase functions `M`, `N` (up to their additive constants), with
/// quadrants recovered from the signs of `B_y` and `A_y`.
pub fn phase_functions(p: &TTWParams, state: &PhasePoint) -> Result<(f64, f64)> {
    let q = ab_quantities(p, state)?;
    let sl1 = p.l1(state.q2, state.p2)?.sqrt();
    let m = q.b_y.atan2(q.b_x) / (4.0 * sl1);
    let n = q.a_y.atan2(q.a_x) / (4.0 * p.k.value() * sl1);
    Ok((m, n))
}

fn l2_trig_variant(p: &TTWParams, state: &PhasePoint, variant: L2Variant) -> Result<f64> {
    let q = ab_quantities(p, state)?;
    let (c, d) = (p.k.num(), p.k.den());
    let (m, n) = phase_functions(p, state)?;
    let sl1 = p.l1(state.q2, state.p2)?.sqrt();
    let phase = 4.0 * c as f64 * sl1 * (m - n);
    let wave = match variant {
        L2Variant::Sin => phase.sin(),
        L2Variant::Cos => phase.cos(),
    };
    let amp = q.b_norm2().sqrt().powi(c as i32) * q.a_norm2().sqrt().powi(d as i32);
    Ok(amp * wave / l1_divisor(p, state, variant)?)
}

fn l2_poly_variant(p: &TTWParams, state: &PhasePoint, variant: L2Variant) -> Result<f64> {
    let q = ab_quantities(p, state)?;
    let (c, d) = (p.k.num(), p.k.den());
    let (bre, bim) = (re_pow(q.b_x, q.b_y, c), im_pow(q.b_x, q.b_y, c));
    let (are, aim) = (re_pow(q.a_x, q.a_y, d), im_pow(q.a_x, q.a_y, d));
    let value = match variant {
        L2Variant::Sin => bim * are - aim * bre,
        L2Variant::Cos => bre * are + bim * aim,
    };
    Ok(value / l1_divisor(p, state, variant)?)
}

/// The sine integral from its phase form.
pub fn l2_trig(p: &TTWParams, state: &PhasePoint) -> Result<f64> {
    l2_trig_variant(p, state, L2Variant::Sin)
}

/// The sine integral from its binomial expansion.
pub fn l2_poly(p: &TTWParams, state: &PhasePoint) -> Result<f64> {
    l2_poly_variant(p, state, L2Variant::Sin)
}

/// The cosine integral from its binomial expansion.
pub fn l2_cos(p: &TTWParams, state: &PhasePoint) -> Result<f64> {
    l2_poly_variant(p, state, L2Variant::Cos)
}

/// The cosine integral from its phase form.
pub fn l2_cos_trig(p: &TTWParams, state: &PhasePoint) -> Result<f64> {
    l2_trig_variant(p, state, L2Variant::Cos)
}

pub fn l2(p: &TTWParams, state: &PhasePoint, variant: L2Variant) -> Result<f64> {
    l2_poly_variant(p, state, variant)
}

/// `|B|ᶜ |A|ᵈ / √L1^δ`, the conserved envelope of both integrals.
pub fn l2_amplitude(p: &TTWParams, state: &PhasePoint, variant: L2Variant) -> Result<f64> {
    let q = ab_quantities(p, state)?;
    let (c, d) = (p.k.num(), p.k.den());
    let amp = q.b_norm2().sqrt().powi(c as i32) * q.a_norm2().sqrt().powi(d as i32);
    Ok(amp / l1_divisor(p, state, variant)?)
}

/// The TTW state and parameters a DC state pulls back to: `ρ = √(2r)`,
/// `θ = φ/2`, `p_ρ = ρ p_r`, `p_θ = 2p_φ`, with `ω² = -H_DC`.
pub fn dc_pullback(p: &DCParams, state: &PhasePoint) -> Result<(TTWParams, PhasePoint)> {
    expect_chart(state, Chart::DcPolar, "DC")?;
    let h = System::Dc(*p).hamiltonian(state)?;
    let rho = (2.0 * state.q1).sqrt();
    let ttw = TTWParams::new(-h, p.alpha, p.beta, p.k);
    Ok((ttw, PhasePoint::ttw(rho, 0.5 * state.q2, rho * state.p1, 2.0 * state.p2)))
}

/// Higher-order integral of the deformed Coulomb system, via the pullback.
/// On the pulled-back state `H_TTW = 2Q`.
pub fn dc_integral(p: &DCParams, state: &PhasePoint, variant: L2Variant) -> Result<f64> {
    let (ttw, pt) = dc_pullback(p, state)?;
    l2_poly_variant(&ttw, &pt, variant)
}

pub fn dc_integral_amplitude(p: &DCParams, state: &PhasePoint, variant: L2Variant) -> Result<f64> {
    let (ttw, pt) = dc_pullback(p, state)?;
    l2_amplitude(&ttw, &pt, variant)
}

/// Either integral for whichever family `system` is.
pub fn higher_integral(system: &System, state: &PhasePoint, variant: L2Variant) -> Result<f64> {
    match system {
        System::Ttw(p) => l2(p, state, variant),
        System::Dc(p) => dc_integral(p, state, variant),
    }
}

pub fn higher_integral_amplitude(system: &System, state: &PhasePoint, variant: L2Variant) -> Result<f64> {
    match system {
        System::Ttw(p) => l2_amplitude(p, state, variant),
        System::Dc(p) => dc_integral_amplitude(p, state, variant),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BracketEstimate {
    pub value: f64,
    pub step: f64,
    pub richardson_error: f64,
    /// `Σ |∂F/∂q ∂G/∂p| + |∂F/∂p ∂G/∂q|`, the size of the terms that cancel.
    pub scale: f64,
}

impl BracketEstimate {
    /// `|value| / scale`, or `|value|` when nothing cancels.
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.value.abs() / self.scale
        } else {
            self.value.abs()
        }
    }
}

pub fn default_bracket_step(state: &PhasePoint) -> f64 {
    let norm = state.to_array().iter().map(|x| x * x).sum::<f64>().sqrt();
    1e-5 * (1.0 + norm)
}

fn central_gradient<F>(f: &F, state: &PhasePoint, h: f64) -> Result<[f64; 4]>
where
    F: Fn(&PhasePoint) -> Result<f64>,
{
    let base = state.to_array();
    let mut grad = [0.0; 4];
    for i in 0..4 {
        let mut plus = base;
        let mut minus = base;
        plus[i] += h;
        minus[i] -= h;
        let eval = |s: [f64; 4]| {
            f(&PhasePoint::from_array(state.chart, s))
                .map_err(|e| Error::Stencil(format!("evaluation at offset {h:e} in slot {i} failed: {e}")))
        };
        grad[i] = (eval(plus)? - eval(minus)?) / (2.0 * h);
    }
    Ok(grad)
}

fn bracket_at<F, G>(f: &F, g: &G, state: &PhasePoint, h: f64) -> Result<(f64, f64)>
where
    F: Fn(&PhasePoint) -> Result<f64>,
    G: Fn(&PhasePoint) -> Result<f64>,
{
    let df = central_gradient(f, state, h)?;
    let dg = central_gradient(g, state, h)?;
    let mut value = 0.0;
    let mut scale = 0.0;
    for i in 0..2 {
        let a = df[i] * dg[i + 2];
        let b = df[i + 2] * dg[i];
        value += a - b;
        scale += a.abs() + b.abs();
    }
    Ok((value, scale))
}

/// `{F, G}` by central differences at `h` and `h/2`, Richardson-extrapolated.
/// `h = None` uses [`default_bracket_step`].
pub fn poisson_bracket_numeric<F, G>(f: F, g: G, state: &PhasePoint, h: Option<f64>) -> Result<BracketEstimate>
where
    F: Fn(&PhasePoint) -> Result<f64>,
    G: Fn(&PhasePoint) -> Result<f64>,
{
    let h = h.unwrap_or_else(|| default_bracket_step(state));
    if !(h > 0.0) {
        return Err(Error::Domain(format!("bracket step {h} must be positive")));
    }
    let (coarse, _) = bracket_at(&f, &g, state, h)?;
    let (fine, scale) = bracket_at(&f, &g, state, 0.5 * h)?;
    let value = (4.0 * fine - coarse) / 3.0;
    Ok(BracketEstimate {
        value,
        step: h,
        richardson_error: (value - fine).abs(),
        scale,
    })
}

/// Least-squares fit of `λ ↦ F(q, λp)` by polynomials of increasing degree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeProbe {
    /// Smallest degree whose fit residual is within tolerance, if any.
    pub degree: Option<u32>,
    /// Fit residual at `max_degree` (max abs error / max abs sample), largest over the ranges.
    pub residual: f64,
    /// Coefficients of the fit at `max_degree`, constant term first.
    pub coefficients: Vec<f64>,
    /// Parity of the polynomial: `Some(0)` even, `Some(1)` odd.
    pub parity: Option<u32>,
}

fn fit(lambdas: &[f64], values: &[f64], degree: u32) -> Result<(Vec<f64>, f64)> {
    let n = lambdas.len();
    let cols = degree as usize + 1;
    let vmax = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let lmax = lambdas.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    // Scaled abscissae keep the Vandermonde matrix well conditioned.
    let x = DMatrix::from_fn(n, cols, |i, j| (lambdas[i] / lmax).powi(j as i32));
    let y = DVector::from_column_slice(values);
    let svd = x.clone().svd(true, true);
    let coef = svd
        .solve(&y, 1e-14)
        .map_err(|e| Error::Accuracy(format!("least-squares fit failed: {e}")))?;
    let resid = (&x * &coef - &y).amax();
    let coefficients = (0..cols).map(|j| coef[j] / lmax.powi(j as i32)).collect();
    Ok((coefficients, if vmax > 0.0 { resid / vmax } else { resid }))
}

/// Half-widths of the `λ` ranges sampled by [`momentum_degree_probe`]. A
/// large potential can hide the top momentum terms on a narrow range.
const PROBE_RANGES: [f64; 3] = [2.0, 20.0, 200.0];

/// Probe the momentum degree of `f` at `state` by fitting samples at
/// `2·max_degree + 3` values of `λ` in `[-L, L]` for each range `L`. The
/// reported degree is the largest one resolved on any range; coefficients and
/// parity come from `L = 2`.
pub fn momentum_degree_probe<F>(f: F, state: &PhasePoint, max_degree: u32, tol: f64) -> Result<DegreeProbe>
where
    F: Fn(&PhasePoint) -> Result<f64>,
{
    let count = 2 * max_degree as usize + 3;
    let mut degree = None;
    let mut residual = 0.0_f64;
    let mut coefficients = Vec::new();
    for (i, &half) in PROBE_RANGES.iter().enumerate() {
        let lambdas: Vec<f64> = (0..count)
            .map(|j| half * (-1.0 + 2.0 * (j as f64 + 0.5) / count as f64))
            .collect();
        let values = lambdas
            .iter()
            .map(|&l| {
                let mut s = *state;
                s.p1 *= l;
                s.p2 *= l;
                f(&s)
            })
            .collect::<Result<Vec<_>>>()?;
        for deg in 0..=max_degree {
            let (_, r) = fit(&lambdas, &values, deg)?;
            if r <= tol {
                degree = degree.max(Some(deg));
                break;
            }
        }
        let (coef, r) = fit(&lambdas, &values, max_degree)?;
        residual = residual.max(r);
        if i == 0 {
            coefficients = coef;
        }
    }
    let cmax = coefficients.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    let negligible = |j: usize| coefficients[j].abs() <= 1e-7 * cmax;
    let parity = if (0..coefficients.len()).step_by(2).all(negligible) {
        Some(1)
    } else if (1..coefficients.len()).step_by(2).all(negligible) {
        Some(0)
    } else {
        None
    };
    Ok(DegreeProbe {
        degree,
        residual,
        coefficients,
        parity,
    })
}

/// Per-sample values and drifts of `H`, the angular constant and both
/// higher-order integrals along a trajectory.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConservationReport {
    pub rows: Vec<ConservationRow>,
    pub max_drift_h: f64,
    pub max_drift_l1: f64,
    pub max_drift_l2_sin: f64,
    pub max_drift_l2_cos: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConservationRow {
    pub t: f64,
    pub h: f64,
    pub l1: f64,
    pub l2_sin: f64,
    pub l2_cos: f64,
    pub drift_h: f64,
    pub drift_l1: f64,
    pub drift_l2_sin: f64,
    pub drift_l2_cos: f64,
}

fn rel(v: f64, v0: f64, scale: f64) -> f64 {
    let s = if scale > 0.0 { scale } else { 1.0 };
    (v - v0).abs() / s
}

/// Drifts of `H` and the angular constant are relative to their initial
/// values; the higher-order integrals are measured against their conserved
/// envelope [`higher_integral_amplitude`], since either can pass through zero.
pub fn conservation_report(traj: &Trajectory) -> Result<ConservationReport> {
    let sys = traj.system();
    let x0 = traj.initial();
    let h0 = sys.hamiltonian(x0)?;
    let l10 = sys.angular_integral(x0)?;
    let s0 = higher_integral(sys, x0, L2Variant::Sin)?;
    let c0 = higher_integral(sys, x0, L2Variant::Cos)?;
    let amp_s = higher_integral_amplitude(sys, x0, L2Variant::Sin)?;
    let amp_c = higher_integral_amplitude(sys, x0, L2Variant::Cos)?;
    let mut report = ConservationReport::default();
    for s in traj.samples() {
        let h = sys.hamiltonian(&s.state)?;
        let l1 = sys.angular_integral(&s.state)?;
        let l2s = higher_integral(sys, &s.state, L2Variant::Sin)?;
        let l2c = higher_integral(sys, &s.state, L2Variant::Cos)?;
        let row = ConservationRow {
            t: s.t,
            h,
            l1,
            l2_sin: l2s,
            l2_cos: l2c,
            drift_h: rel(h, h0, h0.abs()),
            drift_l1: rel(l1, l10, l10.abs()),
            drift_l2_sin: rel(l2s, s0, amp_s),
            drift_l2_cos: rel(l2c, c0, amp_c),
        };
        report.max_drift_h = report.max_drift_h.max(row.drift_h);
        report.max_drift_l1 = report.max_drift_l1.max(row.drift_l1);
        report.max_drift_l2_sin = report.max_drift_l2_sin.max(row.drift_l2_sin);
        report.max_drift_l2_cos = report.max_drift_l2_cos.max(row.drift_l2_cos);
        report.rows.push(row);
    }
    Ok(report)
}

impl ConservationReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,H,L1,L2sin,L2cos,rel_drift_H,rel_drift_L1,rel_drift_L2sin,rel_drift_L2cos\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:e},{:e},{:e},{:e}",
                r.t, r.h, r.l1, r.l2_sin, r.l2_cos, r.drift_h, r.drift_l1, r.drift_l2_sin, r.drift_l2_cos
            );
        }
        out
    }
}

/// A uniformly random TTW state inside the first angular cell with
/// `ρ ∈ [0.3, 2]` and momenta in `[-2, 2]`. `u` supplies four numbers in `[0, 1)`.
pub fn ttw_state_from_unit(p: &TTWParams, u: [f64; 4]) -> PhasePoint {
    let width = PI / (2.0 * p.k.value());
    let theta = width * (0.05 + 0.9 * u[1]);
    PhasePoint::ttw(0.3 + 1.7 * u[0], theta, -2.0 + 4.0 * u[2], -2.0 + 4.0 * u[3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate_with, ttw_radial_period, IntegratorConfig};
    use crate::systems::RationalIndex;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const KS: [(u32, u32); 6] = [(1, 1), (2, 1), (3, 1), (1, 2), (3, 2), (2, 3)];

    fn ttw(c: u32, d: u32) -> TTWParams {
        TTWParams::new(1.0, 0.2, 0.3, RationalIndex::new(c, d).unwrap())
    }

    fn random_state(p: &TTWParams, rng: &mut ChaCha8Rng) -> PhasePoint {
        ttw_state_from_unit(p, [rng.gen(), rng.gen(), rng.gen(), rng.gen()])
    }

    #[test]
    fn l1_examples() {
        let k1 = RationalIndex::new(1, 1).unwrap();
        let free = TTWParams::new(1.0, 0.0, 0.0, k1);
        assert_eq!(l1_ttw(&free, 0.7, 1.5).unwrap(), 2.25);
        let p = TTWParams::new(1.0, 1.0, 1.0, k1);
        assert_abs_diff_eq!(l1_ttw(&p, PI / 4.0, 0.0).unwrap(), 4.0, epsilon = 1e-12);
        assert!(l1_ttw(&p, 0.0, 1.0).is_err());
    }

    #[test]
    fn ab_identities_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(c, d) in &KS {
            let p = ttw(c, d);
            let k2 = p.k.value().powi(2);
            for _ in 0..200 {
                let s = random_state(&p, &mut rng);
                let q = ab_quantities(&p, &s).unwrap();
                let l1 = p.l1(s.q2, s.p2).unwrap();
                let h = System::Ttw(p).hamiltonian(&s).unwrap();
                let a_expected = (l1 - (p.alpha + p.beta) * k2).powi(2) - 4.0 * k2 * k2 * p.alpha * p.beta;
                let b_expected = h * h - 4.0 * p.omega2 * l1;
                assert!((q.a_norm2() - a_expected).abs() <= 1e-10 * a_expected.abs().max(q.a_norm2()));
                assert!((q.b_norm2() - b_expected).abs() <= 1e-10 * (h * h).max(q.b_norm2()));
            }
        }
    }

    #[test]
    fn ab_trivial_cases() {
        let k1 = RationalIndex::new(1, 1).unwrap();
        let free = TTWParams::new(1.0, 0.0, 0.0, k1);
        let q = ab_quantities(&free, &PhasePoint::ttw(1.0, PI / 4.0, 0.3, 0.5)).unwrap();
        assert_abs_diff_eq!(q.a_y, 0.0, epsilon = 1e-15);
        let q = ab_quantities(&ttw(2, 1), &PhasePoint::ttw(1.2, 0.3, 0.0, 0.5)).unwrap();
        assert_eq!(q.b_x, 0.0);
        assert!(ab_quantities(&free, &PhasePoint::ttw(1.0, 0.4, 0.3, 0.0)).is_err());
        assert!(ab_quantities(&free, &PhasePoint::dc(1.0, 0.4, 0.3, 0.2)).is_err());
    }

    #[test]
    fn binomial_sums_match_complex_powers() {
        let (x, y) = (0.7_f64, -1.3_f64);
        let (r, t) = (x.hypot(y), y.atan2(x));
        for n in 0..7 {
            assert_abs_diff_eq!(re_pow(x, y, n), r.powi(n as i32) * (n as f64 * t).cos(), epsilon = 1e-12);
            assert_abs_diff_eq!(im_pow(x, y, n), r.powi(n as i32) * (n as f64 * t).sin(), epsilon = 1e-12);
        }
    }

    #[test]
    fn trig_and_poly_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(c, d) in &KS {
            let p = ttw(c, d);
            for _ in 0..500 {
                let s = random_state(&p, &mut rng);
                let poly = l2_poly(&p, &s).unwrap();
                let trig = l2_trig(&p, &s).unwrap();
                assert!((trig - poly).abs() / poly.abs().max(1.0) <= 1e-9, "k={c}/{d}: {trig} vs {poly}");
                let poly = l2_cos(&p, &s).unwrap();
                let trig = l2_cos_trig(&p, &s).unwrap();
                assert!((trig - poly).abs() / poly.abs().max(1.0) <= 1e-9, "k={c}/{d}: {trig} vs {poly}");
            }
        }
    }

    #[test]
    fn k1_reduces_to_cross_product() {
        let p = ttw(1, 1);
        let s = PhasePoint::ttw(1.1, 0.5, 0.4, -0.7);
        let q = ab_quantities(&p, &s).unwrap();
        let l1 = p.l1(s.q2, s.p2).unwrap();
        let expected = (q.b_y * q.a_x - q.a_y * q.b_x) / l1.sqrt();
        assert_abs_diff_eq!(l2_poly(&p, &s).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn momentum_reversal_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for &(c, d) in &KS {
            let p = ttw(c, d);
            for variant in [L2Variant::Sin, L2Variant::Cos] {
                let parity = variant.degree(c, d) % 2;
                for _ in 0..20 {
                    let s = random_state(&p, &mut rng);
                    let mut r = s;
                    r.p1 = -r.p1;
                    r.p2 = -r.p2;
                    let (a, b) = (l2(&p, &s, variant).unwrap(), l2(&p, &r, variant).unwrap());
                    let expected = if parity == 1 { -a } else { a };
                    assert!((b - expected).abs() <= 1e-9 * a.abs().max(1.0));
                    let (a, b) = (l2_trig_variant(&p, &s, variant).unwrap(), l2_trig_variant(&p, &r, variant).unwrap());
                    let expected = if parity == 1 { -a } else { a };
                    assert!((b - expected).abs() <= 1e-9 * a.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn bracket_trivial_cases() {
        let s = PhasePoint::ttw(1.2, 0.4, 0.3, -0.2);
        let b = poisson_bracket_numeric(|x: &PhasePoint| Ok(x.q1), |x: &PhasePoint| Ok(x.p1), &s, None).unwrap();
        assert_abs_diff_eq!(b.value, 1.0, epsilon = 1e-10);
        assert!(b.richardson_error >= 0.0);
        let sys = System::Ttw(ttw(2, 1));
        let h = |x: &PhasePoint| sys.hamiltonian(x);
        let b = poisson_bracket_numeric(h, h, &s, None).unwrap();
        assert!(b.value.abs() < 1e-10);
        // A stencil reaching past the origin is reported, not silently skipped.
        let near_origin = PhasePoint::ttw(5e-6, 0.4, 0.1, 0.1);
        let err = poisson_bracket_numeric(h, |x: &PhasePoint| Ok(x.q2), &near_origin, Some(1e-5)).unwrap_err();
        assert!(matches!(err, Error::Stencil(_)));
    }

    #[test]
    fn integrals_commute_with_h() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &(c, d) in &KS {
            let p = ttw(c, d);
            let sys = System::Ttw(p);
            for _ in 0..20 {
                let s = random_state(&p, &mut rng);
                let h = |x: &PhasePoint| sys.hamiltonian(x);
                let b = poisson_bracket_numeric(h, |x: &PhasePoint| p.l1(x.q2, x.p2), &s, None).unwrap();
                assert!(b.relative() < 1e-8, "L1 {b:?}");
                for variant in [L2Variant::Sin, L2Variant::Cos] {
                    let b = poisson_bracket_numeric(h, |x: &PhasePoint| l2(&p, x, variant), &s, None).unwrap();
                    assert!(b.relative() < 1e-6, "k={c}/{d} {variant:?}: {b:?}");
                }
            }
        }
    }

    #[test]
    fn degree_probe_finds_lowest_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(c, d) in &KS {
            let p = ttw(c, d);
            let s = random_state(&p, &mut rng);
            let max = 2 * (c + d);
            let low = if (c + d) % 2 == 0 { L2Variant::Sin } else { L2Variant::Cos };
            assert_eq!(low.degree(c, d), 2 * (c + d) - 1);
            let probe = momentum_degree_probe(|x: &PhasePoint| l2(&p, x, low), &s, max, 1e-8).unwrap();
            assert!(probe.residual <= 1e-8, "k={c}/{d}: {probe:?}");
            assert_eq!(probe.degree, Some(2 * (c + d) - 1), "k={c}/{d}");
            assert_eq!(probe.parity, Some(1));
            let high = if low == L2Variant::Sin { L2Variant::Cos } else { L2Variant::Sin };
            let probe = momentum_degree_probe(|x: &PhasePoint| l2(&p, x, high), &s, max, 1e-8).unwrap();
            assert_eq!(probe.degree, Some(2 * (c + d)), "k={c}/{d}");
        }
    }

    #[test]
    fn degree_probe_near_wall() {
        // The potential term is ~1e6 here and buries λ¹⁰ on [-2, 2].
        let p = ttw(3, 2);
        let s = PhasePoint::ttw(0.9063269910049665, 0.13751713206388042, -0.4186335517783095, 0.21381839075249154);
        for variant in [L2Variant::Sin, L2Variant::Cos] {
            let probe = momentum_degree_probe(|x: &PhasePoint| l2(&p, x, variant), &s, 10, 1e-8).unwrap();
            assert_eq!(probe.degree, Some(variant.degree(3, 2)), "{variant:?}");
            assert!(probe.residual <= 1e-8);
        }
    }

    #[test]
    fn conserved_along_ttw_orbits() {
        for &(c, d) in &[(1, 1), (3, 2)] {
            let p = ttw(c, d);
            let start = PhasePoint::ttw(1.0, 0.6 * PI / (4.0 * p.k.value()), 0.4, 0.9);
            let period = ttw_radial_period(p.omega2).unwrap();
            let cfg = IntegratorConfig::new(1e-12);
            let traj = integrate_with(&System::Ttw(p), &start, 5.0 * period, &cfg).unwrap();
            let rep = conservation_report(&traj).unwrap();
            assert!(rep.max_drift_l1 < 1e-9);
            assert!(rep.max_drift_l2_sin < 1e-7 && rep.max_drift_l2_cos < 1e-7, "{} {}", rep.max_drift_l2_sin, rep.max_drift_l2_cos);
            assert!(rep.to_csv().starts_with("t,H,L1,L2sin,L2cos,"));
        }
    }

    #[test]
    fn dc_pullback_constants() {
        let p = DCParams::new(1.3, 0.2, 0.3, RationalIndex::new(3, 2).unwrap());
        let s = PhasePoint::dc(1.4, 0.5, 0.2, 0.6);
        let (ttw, pt) = dc_pullback(&p, &s).unwrap();
        assert_abs_diff_eq!(System::Ttw(ttw).hamiltonian(&pt).unwrap(), 2.0 * p.q, epsilon = 1e-12);
        let a = p.separation_constant(s.q2, s.p2).unwrap();
        assert_abs_diff_eq!(ttw.l1(pt.q2, pt.p2).unwrap(), 4.0 * a, epsilon = 1e-12);
    }

    #[test]
    fn dc_k1_integral_is_runge_lenz_multiple() {
        // For k = 1 without barriers the sine integral is 8 p_φ times a
        // Runge-Lenz component: -8 p_φ² p_x - 4 Q p_φ sin φ.
        let p = DCParams::new(1.7, 0.0, 0.0, RationalIndex::new(1, 1).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..50 {
            let r = rng.gen_range(0.3..2.0);
            let phi = rng.gen_range(0.1..3.0);
            let (pr, pphi) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let s = PhasePoint::dc(r, phi, pr, pphi);
            let px = pr * phi.cos() - pphi * phi.sin() / r;
            let expected = -8.0 * pphi * pphi * px - 4.0 * p.q * pphi * phi.sin();
            let got = dc_integral(&p, &s, L2Variant::Sin).unwrap();
            assert!((got - expected).abs() <= 1e-10 * expected.abs().max(1.0), "{got} vs {expected}");
        }
    }
}
