//! Bound states of the quantum deformed Coulomb system
//! `H = -Δ - Q/r + αk²/(4r²cos²(kφ/2)) + βk²/(4r²sin²(kφ/2))`.
//!
//! With `α = a(a-1)`, `β = b(b-1)` and `κ = √(-E)`,
//!
//! ```text
//! Ψ = r^{√A} e^{-κr} cos^a(kφ/2) sin^b(kφ/2) L_n^{2√A}(2κr) P_m^{(a-½, b-½)}(-cos kφ)
//! A = k²(2m+a+b)²/4,   E = -Q²/(2n+1+2√A)²
//! ```
//!
//! Non-integer powers of `cos(kφ/2)` are taken of its absolute value, so the
//! same formula covers both cells of the wedge `0 < φ < 2π/k`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::{integrate, jacobi, laguerre, PolyDegree};
use crate::systems::{DCParams, RationalIndex, TTWParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QuantumNumbers {
    pub n: PolyDegree,
    pub m: PolyDegree,
}

impl QuantumNumbers {
    pub fn new(n: PolyDegree, m: PolyDegree) -> Self {
        Self { n, m }
    }
}

/// `(a, b)` on the branch `≥ 1/2`.
pub fn exponents_from_couplings(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    let root = |g: f64, name: &str| {
        if !(g > -0.25) {
            return Err(Error::Domain(format!("{name} = {g} must exceed -1/4")));
        }
        Ok(0.5 * (1.0 + (1.0 + 4.0 * g).sqrt()))
    };
    Ok((root(alpha, "alpha")?, root(beta, "beta")?))
}

/// `A = k²(2m+a+b)²/4`.
pub fn separation_constant(k: RationalIndex, a: f64, b: f64, m: PolyDegree) -> f64 {
    let s = 2.0 * m as f64 + a + b;
    0.25 * k.value().powi(2) * s * s
}

/// `E = -Q²/(2(n+km)+1+ka+kb)²`.
pub fn energy_level(q: f64, k: RationalIndex, a: f64, b: f64, qn: QuantumNumbers) -> f64 {
    let kv = k.value();
    let den = 2.0 * (qn.n as f64 + kv * qn.m as f64) + 1.0 + kv * a + kv * b;
    -q * q / (den * den)
}

/// `E = -Q²/(2n+1+2√A)²`.
pub fn energy_from_separation(q: f64, sep: f64, n: PolyDegree) -> f64 {
    let den = 2.0 * n as f64 + 1.0 + 2.0 * sep.sqrt();
    -q * q / (den * den)
}

/// Radial gauge factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    /// `r^{√A} e^{-√(-E) r}`.
    Decaying,
    /// `r^{√A} e^{+2r√(-E)}`, which does not solve the equation; a negative control.
    Growing,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WavefunctionSpec {
    pub params: DCParams,
    pub qn: QuantumNumbers,
    pub a: f64,
    pub b: f64,
    /// Separation constant `A`.
    pub sep: f64,
    pub energy: f64,
}

impl WavefunctionSpec {
    pub fn new(params: DCParams, qn: QuantumNumbers) -> Result<Self> {
        if !(params.q > 0.0) {
            return Err(Error::Domain(format!("Q = {} must be positive for bound states", params.q)));
        }
        let (a, b) = exponents_from_couplings(params.alpha, params.beta)?;
        Ok(Self {
            params,
            qn,
            a,
            b,
            sep: separation_constant(params.k, a, b, qn.m),
            energy: energy_level(params.q, params.k, a, b, qn),
        })
    }

    /// Level index `N = dn + cm`.
    pub fn level(&self) -> u32 {
        self.params.k.den() * self.qn.n + self.params.k.num() * self.qn.m
    }
}

fn signed_pow(x: f64, e: f64) -> f64 {
    if e.fract() == 0.0 {
        x.powi(e as i32)
    } else {
        x.abs().powf(e)
    }
}

/// Angular factor `cos^a(kφ/2) sin^b(kφ/2) P_m^{(a-½, b-½)}(-cos kφ)`.
pub fn angular_factor(k: RationalIndex, a: f64, b: f64, m: PolyDegree, phi: f64) -> Result<f64> {
    let half = 0.5 * k.value() * phi;
    let (s, c) = half.sin_cos();
    let jac = jacobi(m, a - 0.5, b - 0.5, -(2.0 * half).cos().clamp(-1.0, 1.0))?;
    Ok(signed_pow(c, a) * signed_pow(s, b) * jac)
}

pub fn wavefunction(spec: &WavefunctionSpec, r: f64, phi: f64) -> Result<f64> {
    wavefunction_with_gauge(spec, Gauge::Decaying, r, phi)
}

pub fn wavefunction_with_gauge(spec: &WavefunctionSpec, gauge: Gauge, r: f64, phi: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("r = {r} must be positive")));
    }
    // The potential carries the wall checks.
    spec.params.potential(r, phi)?;
    let kappa = (-spec.energy).sqrt();
    let s = spec.sep.sqrt();
    let envelope = match gauge {
        Gauge::Decaying => (-kappa * r).exp(),
        Gauge::Growing => (2.0 * kappa * r).exp(),
    };
    let radial = r.powf(s) * envelope * laguerre(spec.qn.n, 2.0 * s, 2.0 * kappa * r)?;
    Ok(radial * angular_factor(spec.params.k, spec.a, spec.b, spec.qn.m, phi)?)
}

/// Rectangular interior grid in `(r, φ)` and the finite-difference step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResidualGrid {
    pub r_range: (f64, f64),
    pub phi_range: (f64, f64),
    pub nr: usize,
    pub nphi: usize,
    /// Central-difference step in both `r` and `φ`.
    pub h: f64,
}

impl ResidualGrid {
    fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let axis = |lo: f64, hi: f64, n: usize, i: usize| {
            if n <= 1 {
                0.5 * (lo + hi)
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        };
        (0..self.nr).flat_map(move |i| {
            (0..self.nphi).map(move |j| {
                (
                    axis(self.r_range.0, self.r_range.1, self.nr, i),
                    axis(self.phi_range.0, self.phi_range.1, self.nphi, j),
                )
            })
        })
    }

    fn validate(&self) -> Result<()> {
        if !(self.h > 0.0) || self.nr == 0 || self.nphi == 0 {
            return Err(Error::Domain("grid needs a positive step and at least one point per axis".into()));
        }
        if !(self.r_range.0 - self.h > 0.0) || self.r_range.1 < self.r_range.0 || self.phi_range.1 < self.phi_range.0 {
            return Err(Error::Domain(format!(
                "grid r-range {:?} with step {} must stay at r > 0",
                self.r_range, self.h
            )));
        }
        Ok(())
    }
}

/// `max |(-Δ + V - E)Ψ| / (|E| max |Ψ|)` over the grid, for any `Ψ`.
pub fn schrodinger_residual_fn<F>(psi: F, params: &DCParams, energy: f64, grid: &ResidualGrid) -> Result<f64>
where
    F: Fn(f64, f64) -> Result<f64>,
{
    grid.validate()?;
    let h = grid.h;
    let wall = |e: Error| match e {
        Error::Singularity(msg) => Error::Domain(format!("grid touches a wall: {msg}")),
        other => other,
    };
    let mut worst = 0.0_f64;
    let mut peak = 0.0_f64;
    for (r, phi) in grid.points() {
        let f = |dr: f64, dp: f64| psi(r + dr, phi + dp).map_err(wall);
        let c = f(0.0, 0.0)?;
        let (rp, rm) = (f(h, 0.0)?, f(-h, 0.0)?);
        let (pp, pm) = (f(0.0, h)?, f(0.0, -h)?);
        // Make sure the whole stencil stays off the walls.
        params.potential(r, phi + h).map_err(wall)?;
        params.potential(r, phi - h).map_err(wall)?;
        let lap = (rp - 2.0 * c + rm) / (h * h) + (rp - rm) / (2.0 * h * r) + (pp - 2.0 * c + pm) / (h * h * r * r);
        let v = params.potential(r, phi).map_err(wall)?;
        worst = worst.max((-lap + (v - energy) * c).abs());
        peak = peak.max(c.abs());
    }
    if peak == 0.0 {
        return Err(Error::Domain("wavefunction vanishes on the whole grid".into()));
    }
    Ok(worst / (energy.abs() * peak))
}

pub fn schrodinger_residual(spec: &WavefunctionSpec, grid: &ResidualGrid) -> Result<f64> {
    schrodinger_residual_fn(|r, phi| wavefunction(spec, r, phi), &spec.params, spec.energy, grid)
}

pub fn schrodinger_residual_with_gauge(spec: &WavefunctionSpec, gauge: Gauge, grid: &ResidualGrid) -> Result<f64> {
    schrodinger_residual_fn(
        |r, phi| wavefunction_with_gauge(spec, gauge, r, phi),
        &spec.params,
        spec.energy,
        grid,
    )
}

/// All `(n, m)` with `dn + cm = N`.
pub fn degeneracy_bruteforce(k: RationalIndex, level: u32) -> Vec<QuantumNumbers> {
    let (c, d) = (k.num(), k.den());
    (0..=level / c)
        .filter_map(|m| {
            let rest = level - c * m;
            (rest % d == 0).then(|| QuantumNumbers::new(rest / d, m))
        })
        .collect()
}

/// The closed-form count `⌊dN/c⌋ + 1`.
pub fn degeneracy_formula(k: RationalIndex, level: u32) -> u32 {
    k.den() * level / k.num() + 1
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralLine {
    pub level: u32,
    pub energy: f64,
    pub states: Vec<QuantumNumbers>,
}

/// Energy of level `N`: `-Q²/(2N/d + 1 + ka + kb)²`.
pub fn level_energy(q: f64, k: RationalIndex, a: f64, b: f64, level: u32) -> f64 {
    let den = 2.0 * level as f64 / k.den() as f64 + 1.0 + k.value() * (a + b);
    -q * q / (den * den)
}

/// Lines holding at least one state with `n ≤ n_max`, `m ≤ m_max`, in
/// increasing order of `N`. Each line lists its full set of states.
pub fn spectrum(params: &DCParams, n_max: u32, m_max: u32) -> Result<Vec<SpectralLine>> {
    let (a, b) = exponents_from_couplings(params.alpha, params.beta)?;
    let (c, d) = (params.k.num(), params.k.den());
    let mut levels: Vec<u32> = (0..=n_max)
        .flat_map(|n| (0..=m_max).map(move |m| d * n + c * m))
        .collect();
    levels.sort_unstable();
    levels.dedup();
    Ok(levels
        .into_iter()
        .map(|level| SpectralLine {
            level,
            energy: level_energy(params.q, params.k, a, b, level),
            states: degeneracy_bruteforce(params.k, level),
        })
        .collect())
}

pub fn spectrum_csv(params: &DCParams, lines: &[SpectralLine]) -> String {
    let mut out = String::from("N,E,degeneracy_formula,degeneracy_bruteforce,states\n");
    for line in lines {
        let states: Vec<String> = line.states.iter().map(|s| format!("({} {})", s.n, s.m)).collect();
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            line.level,
            line.energy,
            degeneracy_formula(params.k, line.level),
            line.states.len(),
            states.join(" ")
        );
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub rows: Vec<DegeneracyRow>,
    pub mismatches: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DegeneracyRow {
    pub level: u32,
    pub formula: u32,
    pub bruteforce: u32,
    /// Largest relative energy spread among the level's states.
    pub energy_spread: f64,
}

/// Compare formula and enumeration for `N = 0..=n_max`, checking that all
/// states on a line share one energy.
pub fn degeneracy_report(params: &DCParams, n_max: u32) -> Result<DegeneracyReport> {
    let (a, b) = exponents_from_couplings(params.alpha, params.beta)?;
    let mut report = DegeneracyReport::default();
    for level in 0..=n_max {
        let states = degeneracy_bruteforce(params.k, level);
        let e0 = level_energy(params.q, params.k, a, b, level);
        let spread = states
            .iter()
            .map(|&s| ((energy_level(params.q, params.k, a, b, s) - e0) / e0).abs())
            .fold(0.0_f64, f64::max);
        let row = DegeneracyRow {
            level,
            formula: degeneracy_formula(params.k, level),
            bruteforce: states.len() as u32,
            energy_spread: spread,
        };
        if row.formula != row.bruteforce {
            report.mismatches.push(level);
        }
        report.rows.push(row);
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Overlap {
    pub overlap: f64,
    pub norm1: f64,
    pub norm2: f64,
    /// `⟨1|2⟩ / √(⟨1|1⟩⟨2|2⟩)`.
    pub normalized: f64,
    pub r_cut: f64,
}

fn radial_cutoff(specs: &[&WavefunctionSpec]) -> f64 {
    let kappa = specs.iter().map(|s| (-s.energy).sqrt()).fold(f64::INFINITY, f64::min);
    let power = specs.iter().map(|s| 2.0 * s.sep.sqrt() + 2.0 * s.qn.n as f64).fold(0.0, f64::max);
    // log of r^power e^{-2κr}; the peak is at r = power/(2κ).
    let log_env = |r: f64| power * r.ln() - 2.0 * kappa * r;
    let peak_r = (power / (2.0 * kappa)).max(1e-3);
    let peak = log_env(peak_r);
    let mut r = peak_r.max(1.0);
    while log_env(r) - peak > 2.0 * (1e-12f64).ln() {
        r *= 1.1;
    }
    r
}

fn overlap_integral(s1: &WavefunctionSpec, s2: &WavefunctionSpec, r_cut: f64, panels: usize) -> Result<f64> {
    let cell = std::f64::consts::PI / s1.params.k.value();
    let mut failure = None;
    let value = integrate(
        |r| {
            if r <= 0.0 {
                return 0.0;
            }
            // φ = cell·(3u² - 2u³) flattens the sin^{2b}, cos^{2a} endpoint behaviour.
            let inner = integrate(
                |u| {
                    let phi = cell * u * u * (3.0 - 2.0 * u);
                    let jac = 6.0 * cell * u * (1.0 - u);
                    if jac == 0.0 {
                        return 0.0;
                    }
                    match (wavefunction(s1, r, phi), wavefunction(s2, r, phi)) {
                        (Ok(x), Ok(y)) => x * y * jac,
                        (Err(e), _) | (_, Err(e)) => {
                            failure.get_or_insert(e);
                            0.0
                        }
                    }
                },
                0.0,
                1.0,
                panels,
                12,
            );
            match inner {
                Ok(v) => v * r,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        r_cut,
        panels,
        12,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// `∫ Ψ1 Ψ2 r dr dφ` over one angular cell `0 < φ < π/k` and
/// `0 < r < r_cut`, where `r_cut` puts the envelope below 1e-12 of its peak.
/// Each integral is recomputed with twice the panels; disagreement beyond
/// 1e-9 of the norms is an accuracy error.
pub fn orthogonality_check(s1: &WavefunctionSpec, s2: &WavefunctionSpec) -> Result<Overlap> {
    if s1.params != s2.params {
        return Err(Error::Domain("overlap needs both states of one system".into()));
    }
    let r_cut = radial_cutoff(&[s1, s2]);
    // Double the panel count until two successive values agree to 1e-9 of `size`.
    let converged = |a: &WavefunctionSpec, b: &WavefunctionSpec, size: Option<f64>| -> Result<f64> {
        let mut panels = 16;
        let mut prev = overlap_integral(a, b, r_cut, panels)?;
        while panels < 256 {
            panels *= 2;
            let next = overlap_integral(a, b, r_cut, panels)?;
            let size = size.unwrap_or(next.abs());
            if (next - prev).abs() <= 1e-9 * size {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::Accuracy(format!(
            "overlap quadrature not converged at {panels} panels (last value {prev})"
        )))
    };
    let n1 = converged(s1, s1, None)?;
    let n2 = converged(s2, s2, None)?;
    let scale = (n1 * n2).sqrt();
    let o = converged(s1, s2, Some(scale))?;
    Ok(Overlap {
        overlap: o,
        norm1: n1,
        norm2: n2,
        normalized: o / scale,
        r_cut,
    })
}

/// `(r, φ, Ψ)` rows over a rectangular grid.
pub fn wavefunction_grid_csv(spec: &WavefunctionSpec, grid: &ResidualGrid) -> Result<String> {
    let mut out = String::from("r,phi,psi\n");
    for (r, phi) in grid.points() {
        let _ = writeln!(out, "{},{},{}", r, phi, wavefunction(spec, r, phi)?);
    }
    Ok(out)
}

/// Separable TTW eigenstate
/// `ρ^{√L} e^{-ωρ²/2} L_n^{√L}(ωρ²) cos^a(kθ) sin^b(kθ) P_m^{(a-½,b-½)}(-cos 2kθ)`
/// with `√L = k(2m+a+b)` and energy `2ω(2n+√L+1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TtwEigenstate {
    pub params: TTWParams,
    pub qn: QuantumNumbers,
    pub a: f64,
    pub b: f64,
    pub energy: f64,
}

impl TtwEigenstate {
    pub fn new(params: TTWParams, qn: QuantumNumbers) -> Result<Self> {
        if !(params.omega2 > 0.0) {
            return Err(Error::Domain(format!("omega^2 = {} does not bind", params.omega2)));
        }
        let (a, b) = exponents_from_couplings(params.alpha, params.beta)?;
        let sl = Self::sqrt_l(params.k, a, b, qn.m);
        let omega = params.omega2.sqrt();
        Ok(Self {
            params,
            qn,
            a,
            b,
            energy: 2.0 * omega * (2.0 * qn.n as f64 + sl + 1.0),
        })
    }

    fn sqrt_l(k: RationalIndex, a: f64, b: f64, m: PolyDegree) -> f64 {
        k.value() * (2.0 * m as f64 + a + b)
    }

    pub fn value(&self, rho: f64, theta: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::Domain(format!("rho = {rho} must be positive")));
        }
        self.params.potential(rho, theta)?;
        let omega = self.params.omega2.sqrt();
        let sl = Self::sqrt_l(self.params.k, self.a, self.b, self.qn.m);
        let radial = rho.powf(sl) * (-0.5 * omega * rho * rho).exp() * laguerre(self.qn.n, sl, omega * rho * rho)?;
        // θ = φ/2 turns the DC angular factor into the TTW one.
        Ok(radial * angular_factor(self.params.k, self.a, self.b, self.qn.m, 2.0 * theta)?)
    }

    /// `max |(-Δ + V - E)Ψ| / (|E| max |Ψ|)` over a `(ρ, θ)` grid.
    pub fn residual(&self, grid: &ResidualGrid) -> Result<f64> {
        grid.validate()?;
        let h = grid.h;
        let mut worst = 0.0_f64;
        let mut peak = 0.0_f64;
        for (rho, theta) in grid.points() {
            let f = |dr: f64, dt: f64| self.value(rho + dr, theta + dt);
            let c = f(0.0, 0.0)?;
            let (rp, rm) = (f(h, 0.0)?, f(-h, 0.0)?);
            let (tp, tm) = (f(0.0, h)?, f(0.0, -h)?);
            let lap = (rp - 2.0 * c + rm) / (h * h)
                + (rp - rm) / (2.0 * h * rho)
                + (tp - 2.0 * c + tm) / (h * h * rho * rho);
            let v = self.params.potential(rho, theta)?;
            worst = worst.max((-lap + (v - self.energy) * c).abs());
            peak = peak.max(c.abs());
        }
        Ok(worst / (self.energy.abs() * peak))
    }
}
