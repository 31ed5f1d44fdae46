//! The two Hamiltonian families, their polar phase space, and the
//! turning-point algebra for bounded deformed-Coulomb motion.
//!
//! Both Hamiltonians use the convention `H = p^2 + V` (no factor 1/2), so
//! Hamilton's equations read `q' = 2p`-style. In polar form
//! `H = p1^2 + p2^2 / q1^2 + V(q1, q2)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::Serialize;

use crate::error::{Error, Result};

/// Below this magnitude a wall factor `cos` or `sin` counts as zero.
const WALL_EPS: f64 = 1e-12;

/// The deformation index `k = c/d`, kept in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct RationalIndex {
    c: u32,
    d: u32,
}

impl RationalIndex {
    pub fn new(c: u32, d: u32) -> Result<Self> {
        if c == 0 || d == 0 {
            return Err(Error::Domain(format!("k = {c}/{d} must be positive")));
        }
        let g = c.gcd(&d);
        Ok(Self { c: c / g, d: d / g })
    }

    pub fn integer(c: u32) -> Result<Self> {
        Self::new(c, 1)
    }

    /// Numerator `c`.
    pub fn num(self) -> u32 {
        self.c
    }

    /// Denominator `d`.
    pub fn den(self) -> u32 {
        self.d
    }

    pub fn value(self) -> f64 {
        self.c as f64 / self.d as f64
    }
}

impl fmt::Display for RationalIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.d == 1 {
            write!(f, "{}", self.c)
        } else {
            write!(f, "{}/{}", self.c, self.d)
        }
    }
}

impl FromStr for RationalIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| Error::Parse(format!("bad k component {t:?}: {e}")))
        };
        match s.split_once('/') {
            Some((c, d)) => Self::new(parse(c)?, parse(d)?),
            None => Self::new(parse(s)?, 1),
        }
    }
}

/// Couplings of the deformed Kepler-Coulomb Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DCParams {
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
    pub k: RationalIndex,
}

/// Couplings of the TTW oscillator Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TTWParams {
    pub omega2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub k: RationalIndex,
}

impl DCParams {
    pub fn new(q: f64, alpha: f64, beta: f64, k: RationalIndex) -> Self {
        Self { q, alpha, beta, k }
    }

    fn k2(&self) -> f64 {
        self.k.value().powi(2)
    }

    /// Angular barrier `αk²/(4cos²(kφ/2)) + βk²/(4sin²(kφ/2))`.
    pub fn angular_barrier(&self, phi: f64) -> Result<f64> {
        let x = 0.5 * self.k.value() * phi;
        let (s, c) = x.sin_cos();
        check_walls(self.alpha, self.beta, c, s, "phi", phi)?;
        let k2 = self.k2();
        Ok(quarter_barrier(self.alpha, c) * k2 + quarter_barrier(self.beta, s) * k2)
    }

    fn angular_barrier_derivative(&self, phi: f64) -> Result<f64> {
        let k = self.k.value();
        let x = 0.5 * k * phi;
        let (s, c) = x.sin_cos();
        check_walls(self.alpha, self.beta, c, s, "phi", phi)?;
        // d/dφ of (k²/4)(α sec²x + β csc²x) with x = kφ/2.
        let k3 = k * k * k;
        let mut d = 0.0;
        if self.alpha != 0.0 {
            d += 0.25 * k3 * self.alpha * s / (c * c * c);
        }
        if self.beta != 0.0 {
            d -= 0.25 * k3 * self.beta * c / (s * s * s);
        }
        Ok(d)
    }

    /// The deformed Coulomb potential at polar position `(r, φ)`.
    pub fn potential(&self, r: f64, phi: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(-self.q / r + self.angular_barrier(phi)? / (r * r))
    }

    /// Angular separation constant `A = p_φ² + barrier(φ)`.
    pub fn separation_constant(&self, phi: f64, p_phi: f64) -> Result<f64> {
        Ok(p_phi * p_phi + self.angular_barrier(phi)?)
    }
}

impl TTWParams {
    pub fn new(omega2: f64, alpha: f64, beta: f64, k: RationalIndex) -> Self {
        Self {
            omega2,
            alpha,
            beta,
            k,
        }
    }

    /// Angular part `αk² sec²(kθ) + βk² csc²(kθ)`.
    pub fn angular_potential(&self, theta: f64) -> Result<f64> {
        let k = self.k.value();
        let (s, c) = (k * theta).sin_cos();
        check_walls(self.alpha, self.beta, c, s, "theta", theta)?;
        Ok(4.0 * k * k * (quarter_barrier(self.alpha, c) + quarter_barrier(self.beta, s)))
    }

    fn angular_potential_derivative(&self, theta: f64) -> Result<f64> {
        let k = self.k.value();
        let (s, c) = (k * theta).sin_cos();
        check_walls(self.alpha, self.beta, c, s, "theta", theta)?;
        let k3 = k * k * k;
        let mut d = 0.0;
        if self.alpha != 0.0 {
            d += 2.0 * k3 * self.alpha * s / (c * c * c);
        }
        if self.beta != 0.0 {
            d -= 2.0 * k3 * self.beta * c / (s * s * s);
        }
        Ok(d)
    }

    /// The TTW potential at polar position `(ρ, θ)`.
    pub fn potential(&self, rho: f64, theta: f64) -> Result<f64> {
        check_radius(rho)?;
        Ok(self.omega2 * rho * rho + self.angular_potential(theta)? / (rho * rho))
    }

    /// Second-order angular integral `L1 = p_θ² + αk² sec²(kθ) + βk² csc²(kθ)`.
    pub fn l1(&self, theta: f64, p_theta: f64) -> Result<f64> {
        Ok(p_theta * p_theta + self.angular_potential(theta)?)
    }
}

// coeff / (4 t²), zero when coeff vanishes.
fn quarter_barrier(coeff: f64, t: f64) -> f64 {
    if coeff == 0.0 {
        0.0
    } else {
        0.25 * coeff / (t * t)
    }
}

fn check_walls(alpha: f64, beta: f64, c: f64, s: f64, name: &str, angle: f64) -> Result<()> {
    if alpha != 0.0 && c.abs() < WALL_EPS {
        return Err(Error::Singularity(format!("{name} = {angle} lies on the alpha wall")));
    }
    if beta != 0.0 && s.abs() < WALL_EPS {
        return Err(Error::Singularity(format!("{name} = {angle} lies on the beta wall")));
    }
    Ok(())
}

fn check_radius(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Singularity(format!("radius {r} is not positive")));
    }
    Ok(())
}

/// Which polar chart a phase point lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Chart {
    /// `(r, φ, p_r, p_φ)` of the deformed Coulomb system.
    DcPolar,
    /// `(ρ, θ, p_ρ, p_θ)` of the TTW system.
    TtwPolar,
}

impl Chart {
    pub fn name(self) -> &'static str {
        match self {
            Chart::DcPolar => "DC-polar",
            Chart::TtwPolar => "TTW-polar",
        }
    }
}

/// A polar phase-space state `(q1, q2, p1, p2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub q1: f64,
    pub q2: f64,
    pub p1: f64,
    pub p2: f64,
    pub chart: Chart,
}

impl PhasePoint {
    pub fn dc(r: f64, phi: f64, p_r: f64, p_phi: f64) -> Self {
        Self {
            q1: r,
            q2: phi,
            p1: p_r,
            p2: p_phi,
            chart: Chart::DcPolar,
        }
    }

    pub fn ttw(rho: f64, theta: f64, p_rho: f64, p_theta: f64) -> Self {
        Self {
            q1: rho,
            q2: theta,
            p1: p_rho,
            p2: p_theta,
            chart: Chart::TtwPolar,
        }
    }

    pub fn from_array(chart: Chart, s: [f64; 4]) -> Self {
        Self {
            q1: s[0],
            q2: s[1],
            p1: s[2],
            p2: s[3],
            chart,
        }
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.q1, self.q2, self.p1, self.p2]
    }

    /// Cartesian position `(q1 cos q2, q1 sin q2)`.
    pub fn position_xy(&self) -> (f64, f64) {
        let (s, c) = self.q2.sin_cos();
        (self.q1 * c, self.q1 * s)
    }
}

/// Either Hamiltonian family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum System {
    Dc(DCParams),
    Ttw(TTWParams),
}

impl From<DCParams> for System {
    fn from(p: DCParams) -> Self {
        System::Dc(p)
    }
}

impl From<TTWParams> for System {
    fn from(p: TTWParams) -> Self {
        System::Ttw(p)
    }
}

impl System {
    pub fn chart(&self) -> Chart {
        match self {
            System::Dc(_) => Chart::DcPolar,
            System::Ttw(_) => Chart::TtwPolar,
        }
    }

    pub fn k(&self) -> RationalIndex {
        match self {
            System::Dc(p) => p.k,
            System::Ttw(p) => p.k,
        }
    }

    pub fn alpha_beta(&self) -> (f64, f64) {
        match self {
            System::Dc(p) => (p.alpha, p.beta),
            System::Ttw(p) => (p.alpha, p.beta),
        }
    }

    /// Angular extent of one potential cell between adjacent walls:
    /// `π/k` for DC, `π/(2k)` for TTW.
    pub fn cell_width(&self) -> f64 {
        match self {
            System::Dc(p) => PI / p.k.value(),
            System::Ttw(p) => 0.5 * PI / p.k.value(),
        }
    }

    /// Exact angular period of the potential: `2π/k` for DC, `π/k` for TTW.
    pub fn angular_period(&self) -> f64 {
        2.0 * self.cell_width()
    }

    pub fn potential(&self, q1: f64, q2: f64) -> Result<f64> {
        match self {
            System::Dc(p) => p.potential(q1, q2),
            System::Ttw(p) => p.potential(q1, q2),
        }
    }

    fn check_chart(&self, point: &PhasePoint) -> Result<()> {
        if point.chart != self.chart() {
            return Err(Error::ChartMismatch {
                point: point.chart.name(),
                system: self.chart().name(),
            });
        }
        Ok(())
    }

    /// `p1² + p2²/q1² + V(q1, q2)`.
    pub fn hamiltonian(&self, point: &PhasePoint) -> Result<f64> {
        self.check_chart(point)?;
        self.hamiltonian_raw(&point.to_array())
    }

    pub(crate) fn hamiltonian_raw(&self, s: &[f64; 4]) -> Result<f64> {
        let v = self.potential(s[0], s[1])?;
        Ok(s[2] * s[2] + s[3] * s[3] / (s[0] * s[0]) + v)
    }

    /// Analytic `(∂H/∂q1, ∂H/∂q2, ∂H/∂p1, ∂H/∂p2)`.
    pub fn hamiltonian_gradient(&self, point: &PhasePoint) -> Result<[f64; 4]> {
        self.check_chart(point)?;
        self.gradient_raw(&point.to_array())
    }

    pub(crate) fn gradient_raw(&self, s: &[f64; 4]) -> Result<[f64; 4]> {
        let [q1, q2, p1, p2] = *s;
        check_radius(q1)?;
        let q1_2 = q1 * q1;
        let q1_3 = q1_2 * q1;
        let (dv_dq1, dv_dq2) = match self {
            System::Dc(p) => {
                let w = p.angular_barrier(q2)?;
                (p.q / q1_2 - 2.0 * w / q1_3, p.angular_barrier_derivative(q2)? / q1_2)
            }
            System::Ttw(p) => {
                let g = p.angular_potential(q2)?;
                (
                    2.0 * p.omega2 * q1 - 2.0 * g / q1_3,
                    p.angular_potential_derivative(q2)? / q1_2,
                )
            }
        };
        Ok([
            -2.0 * p2 * p2 / q1_3 + dv_dq1,
            dv_dq2,
            2.0 * p1,
            2.0 * p2 / q1_2,
        ])
    }

    /// Hamilton's equations `(q', p') = (∂H/∂p, -∂H/∂q)`.
    pub(crate) fn vector_field(&self, s: &[f64; 4]) -> Result<[f64; 4]> {
        let g = self.gradient_raw(s)?;
        Ok([g[2], g[3], -g[0], -g[1]])
    }

    /// The separated angular constant: `A` for DC, `L1` for TTW.
    pub fn angular_integral(&self, point: &PhasePoint) -> Result<f64> {
        self.check_chart(point)?;
        match self {
            System::Dc(p) => p.separation_constant(point.q2, point.p2),
            System::Ttw(p) => p.l1(point.q2, point.p2),
        }
    }
}

/// DC potential `-Q/r + αk²/(4r²cos²(kφ/2)) + βk²/(4r²sin²(kφ/2))`.
pub fn potential_dc(p: &DCParams, r: f64, phi: f64) -> Result<f64> {
    p.potential(r, phi)
}

/// TTW potential `ω²ρ² + αk²ρ⁻²sec²(kθ) + βk²ρ⁻²csc²(kθ)`.
pub fn potential_ttw(p: &TTWParams, rho: f64, theta: f64) -> Result<f64> {
    p.potential(rho, theta)
}

/// One restriction for bounded deformed-Coulomb motion.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Restriction {
    pub condition: &'static str,
    pub effect: &'static str,
    pub value: f64,
    pub passed: bool,
}

/// Outcome of checking all eight bounded-motion restrictions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub rows: Vec<Restriction>,
    pub d1: f64,
    pub d2: f64,
    pub r1: Option<f64>,
    pub r2: Option<f64>,
    pub u1: Option<f64>,
    pub u2: Option<f64>,
    /// `E >= 0`: the outer radial turning point does not exist.
    pub r2_unbounded: bool,
}

impl BoundednessReport {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }

    pub fn failed(&self) -> Vec<&'static str> {
        self.rows.iter().filter(|r| !r.passed).map(|r| r.condition).collect()
    }

    pub fn row(&self, condition: &str) -> Option<&Restriction> {
        self.rows.iter().find(|r| r.condition == condition)
    }
}

pub fn discriminant_d1(q: f64, e: f64, a: f64) -> f64 {
    q * q + 4.0 * a * e
}

pub fn discriminant_d2(p: &DCParams, a: f64) -> f64 {
    let k2 = p.k.value().powi(2);
    let s = a - 0.25 * k2 * (p.beta + p.alpha);
    s * s - 0.25 * p.alpha * p.beta * k2 * k2
}

pub fn validate_bounded(p: &DCParams, e: f64, a: f64) -> BoundednessReport {
    let k2 = p.k.value().powi(2);
    let d1 = discriminant_d1(p.q, e, a);
    let d2 = discriminant_d2(p, a);
    let gap = a - 0.25 * k2 * (p.beta - p.alpha).abs();
    let row = |condition, effect, value: f64, passed| Restriction {
        condition,
        effect,
        value,
        passed,
    };
    let rows = vec![
        row("D1 > 0", "r_i real", d1, d1 > 0.0),
        row("Q > 0", "0 < r_2", p.q, p.q > 0.0),
        row("A > 0", "0 < r_1 and u_1 < cos^2 < u_2", a, a > 0.0),
        row("E < 0", "r_1 < r < r_2", e, e < 0.0),
        row("D2 > 0", "u_i real", d2, d2 > 0.0),
        row("A - k^2|beta-alpha|/4 > 0", "u_2 > 0", gap, gap > 0.0),
        row("beta > 0", "u_1 > 0", p.beta, p.beta > 0.0),
        row("alpha > 0", "u_2 < 1", p.alpha, p.alpha > 0.0),
    ];
    let (r1, r2) = match radial_turning_points(p.q, e, a) {
        Ok((r1, r2)) => (Some(r1), Some(r2)),
        Err(_) => (None, None),
    };
    let (u1, u2) = match angular_turning_points(p, a) {
        Ok((u1, u2)) => (Some(u1), Some(u2)),
        Err(_) => (None, None),
    };
    BoundednessReport {
        rows,
        d1,
        d2,
        r1,
        r2,
        u1,
        u2,
        r2_unbounded: !(e < 0.0),
    }
}

/// Ordered roots of `E r² + Q r - A = 0` for bound motion.
pub fn radial_turning_points(q: f64, e: f64, a: f64) -> Result<(f64, f64)> {
    if !(e < 0.0) {
        return Err(Error::Unbounded { energy: e });
    }
    let d1 = discriminant_d1(q, e, a);
    if !(d1 > 0.0) {
        return Err(Error::NoTurningPoints { discriminant: d1 });
    }
    let sq = d1.sqrt();
    // Vieta for the small root keeps it accurate when A is small.
    let r2 = (q + sq) / (-2.0 * e);
    let r1 = if q + sq != 0.0 { 2.0 * a / (q + sq) } else { (q - sq) / (-2.0 * e) };
    Ok(if r1 <= r2 { (r1, r2) } else { (r2, r1) })
}

/// Ordered roots `u1 <= u2` of `-A u² + (A - βk²/4 + αk²/4) u - αk²/4 = 0`,
/// the bounds on `cos²(kφ/2)`.
pub fn angular_turning_points(p: &DCParams, a: f64) -> Result<(f64, f64)> {
    let d2 = discriminant_d2(p, a);
    if !(d2 > 0.0) || a == 0.0 {
        return Err(Error::NoTurningPoints { discriminant: d2 });
    }
    let k2 = p.k.value().powi(2);
    let b = a - 0.25 * k2 * (p.beta - p.alpha);
    let c0 = 0.25 * k2 * p.alpha;
    let sq = d2.sqrt();
    // A u² - b u + c0 = 0
    let big = if b >= 0.0 { (b + sq) / (2.0 * a) } else { (b - sq) / (2.0 * a) };
    let small = if big != 0.0 { c0 / (a * big) } else { (b - sq) / (2.0 * a) };
    Ok(if small <= big { (small, big) } else { (big, small) })
}
