use std::f64::consts::PI;
use std::fmt::Write as _;

use serde_json::json;
use stackel_core::quantum::{
    degeneracy_report, energy_from_separation, energy_level, exponents_from_couplings, orthogonality_check,
    schrodinger_residual_fn, schrodinger_residual_with_gauge, separation_constant, spectrum as spectrum_lines,
    spectrum_csv, wavefunction_grid_csv, Gauge, QuantumNumbers, ResidualGrid, TtwEigenstate, WavefunctionSpec,
};
use stackel_core::stackel::{map_wavefunction, ttw_to_dc};

use super::Outcome;
use crate::config::Resolver;
use crate::summary::{Criterion, Tolerance};
use crate::Failure;

fn usage(e: stackel_core::Error) -> Failure {
    Failure::Usage(e.to_string())
}

/// Levels with `n ≤ n_max`, `m ≤ m_max`. Checks that the two closed forms
/// of the energy agree and that every state listed on a line has its energy.
pub fn spectrum(r: &mut Resolver) -> Result<Outcome, Failure> {
    let p = r.dc_params()?;
    let n_max = r.u32("n_max", 2)?;
    let m_max = r.u32("m_max", 2)?;
    let tol = r.positive("tol", 1e-14)?;
    let (a, b) = exponents_from_couplings(p.alpha, p.beta).map_err(usage)?;

    let lines = spectrum_lines(&p, n_max, m_max)?;
    let mut form_gap = 0.0_f64;
    for n in 0..=n_max {
        for m in 0..=m_max {
            let e1 = energy_level(p.q, p.k, a, b, QuantumNumbers::new(n, m));
            let e2 = energy_from_separation(p.q, separation_constant(p.k, a, b, m), n);
            form_gap = form_gap.max(((e1 - e2) / e1).abs());
        }
    }
    let mut spread = 0.0_f64;
    for line in &lines {
        for &s in &line.states {
            spread = spread.max(((energy_level(p.q, p.k, a, b, s) - line.energy) / line.energy).abs());
        }
    }
    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: None }),
        criteria: vec![
            Criterion::at_most("energy_forms_rel_gap", form_gap, tol),
            Criterion::at_most("line_energy_spread", spread, tol),
        ],
        results: json!({
            "a": a,
            "b": b,
            "ground_energy": energy_level(p.q, p.k, a, b, QuantumNumbers::new(0, 0)),
            "lines": lines,
        }),
        artifacts: vec![("spectrum.csv".into(), spectrum_csv(&p, &lines))],
    })
}

/// Closed-form degeneracy against enumeration of `dn + cm = N`. The
/// formula is enforced only for integer `k`; for `d > 1` mismatches are
/// reported as a finding.
pub fn degeneracy(r: &mut Resolver) -> Result<Outcome, Failure> {
    let p = r.dc_params()?;
    let n_max = r.u32("N_max", 50)?;
    let tol = r.positive("tol", 1e-14)?;
    exponents_from_couplings(p.alpha, p.beta).map_err(usage)?;

    let report = degeneracy_report(&p, n_max)?;
    let spread = report.rows.iter().map(|row| row.energy_spread).fold(0.0_f64, f64::max);
    let mut formula = Criterion::at_most("formula_mismatches", report.mismatches.len() as f64, 0.0);
    if p.k.den() > 1 {
        formula = formula.advisory();
    }
    let mut csv = String::from("N,formula,bruteforce,energy_spread\n");
    for row in &report.rows {
        let _ = writeln!(csv, "{},{},{},{}", row.level, row.formula, row.bruteforce, row.energy_spread);
    }
    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: None }),
        criteria: vec![Criterion::at_most("bruteforce_energy_spread", spread, tol), formula],
        results: json!({
            "levels": report.rows.len(),
            "mismatched_levels": report.mismatches,
        }),
        artifacts: vec![("degeneracy.csv".into(), csv)],
    })
}

struct GridSpec {
    r_range: (f64, f64),
    phi_frac: (f64, f64),
    nr: usize,
    nphi: usize,
    h: f64,
}

impl GridSpec {
    fn resolve(r: &mut Resolver, r_min: f64, r_max: f64) -> Result<Self, Failure> {
        let r_min = r.positive("r_min", r_min)?;
        let r_max = r.positive("r_max", r_max)?;
        if r_max < r_min {
            return Err(Failure::Usage(format!("r_max = {r_max} is below r_min = {r_min}")));
        }
        let nr = r.u32("nr", 12)? as usize;
        let nphi = r.u32("nphi", 9)? as usize;
        let h = r.positive("h", 1e-3)?;
        if nr == 0 || nphi == 0 || h >= r_min {
            return Err(Failure::Usage("grid needs nr, nphi ≥ 1 and h < r_min".into()));
        }
        Ok(Self { r_range: (r_min, r_max), phi_frac: (0.1, 0.9), nr, nphi, h })
    }

    fn grid(&self, cell: f64, h: f64) -> ResidualGrid {
        ResidualGrid {
            r_range: self.r_range,
            phi_range: (self.phi_frac.0 * cell, self.phi_frac.1 * cell),
            nr: self.nr,
            nphi: self.nphi,
            h,
        }
    }
}

/// `log2` of the residual ratio when `h` is halved.
fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Finite-difference Schrödinger residual of a closed-form eigenstate at
/// `h` and `h/2`. For the oscillator family the transformed eigenstate is
/// also checked against the Coulomb-family equation.
pub fn wavefunction_residual(r: &mut Resolver) -> Result<Outcome, Failure> {
    let family = r.family("dc")?;
    if family == "ttw" {
        return ttw_wavefunction_residual(r);
    }
    let p = r.dc_params()?;
    let qn = QuantumNumbers::new(r.u32("n", 0)?, r.u32("m", 0)?);
    let spec = WavefunctionSpec::new(p, qn).map_err(usage)?;
    let kappa = (-spec.energy).sqrt();
    let grid_spec = GridSpec::resolve(r, 0.5, 3.0 / kappa)?;
    let gauge = match r.choice("gauge", "decaying", &["decaying", "growing"])?.as_str() {
        "growing" => Gauge::Growing,
        _ => Gauge::Decaying,
    };
    let tol = r.positive("tol", 1e-5)?;

    let cell = PI / p.k.value();
    let coarse = schrodinger_residual_with_gauge(&spec, gauge, &grid_spec.grid(cell, grid_spec.h))?;
    let fine_grid = grid_spec.grid(cell, 0.5 * grid_spec.h);
    let fine = schrodinger_residual_with_gauge(&spec, gauge, &fine_grid)?;
    let order = observed_order(coarse, fine);
    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: None }),
        criteria: vec![
            Criterion::at_most("residual", fine, tol),
            Criterion::at_least("observed_order", order, 1.5),
        ],
        results: json!({
            "energy": spec.energy,
            "separation_constant": spec.sep,
            "level": spec.level(),
            "a": spec.a,
            "b": spec.b,
            "residual_h": coarse,
            "residual_h_half": fine,
            "grid": fine_grid,
        }),
        artifacts: vec![("wavefunction.csv".into(), wavefunction_grid_csv(&spec, &fine_grid)?)],
    })
}

fn ttw_wavefunction_residual(r: &mut Resolver) -> Result<Outcome, Failure> {
    let p = r.ttw_params()?;
    let qn = QuantumNumbers::new(r.u32("n", 0)?, r.u32("m", 0)?);
    let state = TtwEigenstate::new(p, qn).map_err(usage)?;
    let grid_spec = GridSpec::resolve(r, 0.4, 3.6 / p.omega2.sqrt().sqrt())?;
    let tol = r.positive("tol", 1e-5)?;

    let cell = PI / (2.0 * p.k.value());
    let coarse = state.residual(&grid_spec.grid(cell, grid_spec.h))?;
    let fine = state.residual(&grid_spec.grid(cell, 0.5 * grid_spec.h))?;
    let image = ttw_to_dc(&p, state.energy);
    let mapped = map_wavefunction(|rho, theta| state.value(rho, theta));
    let (lo, hi) = grid_spec.r_range;
    let dc_grid = ResidualGrid {
        r_range: ((0.5 * lo * lo).max(4.0 * grid_spec.h), 0.5 * hi * hi),
        phi_range: (0.2 * cell, 1.8 * cell),
        nr: grid_spec.nr,
        nphi: grid_spec.nphi,
        h: 0.5 * grid_spec.h,
    };
    let image_residual = schrodinger_residual_fn(mapped, &image.dc, image.energy, &dc_grid)?;
    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: None }),
        criteria: vec![
            Criterion::at_most("residual", fine, tol),
            Criterion::at_least("observed_order", observed_order(coarse, fine), 1.5),
            Criterion::at_most("image_residual", image_residual, tol),
        ],
        results: json!({
            "energy": state.energy,
            "image": image,
            "residual_h": coarse,
            "residual_h_half": fine,
            "image_grid": dc_grid,
        }),
        artifacts: Vec::new(),
    })
}

/// Overlap of two eigenstates on one angular cell.
pub fn orthogonality(r: &mut Resolver) -> Result<Outcome, Failure> {
    let p = r.dc_params()?;
    let first = QuantumNumbers::new(r.u32("n", 1)?, r.u32("m", 0)?);
    let second = QuantumNumbers::new(r.u32("n2", 1)?, r.u32("m2", 2)?);
    let tol = r.positive("tol", 1e-6)?;
    let s1 = WavefunctionSpec::new(p, first).map_err(usage)?;
    let s2 = WavefunctionSpec::new(p, second).map_err(usage)?;

    let overlap = orthogonality_check(&s1, &s2)?;
    let criterion = if first == second {
        Criterion::at_most("self_overlap_error", (overlap.normalized - 1.0).abs(), tol)
    } else {
        Criterion::at_most("normalized_overlap", overlap.normalized.abs(), tol)
    };
    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: None }),
        criteria: vec![criterion],
        results: json!({ "overlap": overlap, "energy_1": s1.energy, "energy_2": s2.energy }),
        artifacts: Vec::new(),
    })
}
