use std::fmt::Write as _;

use serde_json::json;
use stackel_core::dynamics::{integrate, orbit_constants_from_point, orbit_residual_at, radial_period_for};
use stackel_core::invariants::{
    conservation_report, higher_integral, l2_cos, l2_cos_trig, l2_poly, l2_trig, momentum_degree_probe,
    poisson_bracket_numeric, L2Variant,
};
use stackel_core::stackel::{
    hausdorff_image_vs_dc, map_trajectory, pushforward_phase, stackel_identity_residual, ttw_to_dc,
};
use stackel_core::{PhasePoint, System};

use super::{initial_for, random_state, rng_from, state_json, ttw_initial, Outcome};
use crate::config::Resolver;
use crate::summary::{Criterion, Tolerance};
use crate::Failure;

/// Drift of `H`, the angular constant and both higher-order integrals over
/// many radial periods. For the Coulomb family the integrals are the
/// pullbacks of the oscillator ones.
pub fn conserve(r: &mut Resolver) -> Result<Outcome, Failure> {
    let system = r.system("ttw")?;
    let initial = initial_for(r, &system)?;
    let periods = r.positive("periods", 20.0)?;
    let int_tol = r.positive("int_tol", 1e-12)?;
    let tol = r.positive("tol", 1e-6)?;

    let period = radial_period_for(&system, &initial)?;
    let traj = integrate(&system, &initial, periods * period, int_tol)?;
    let rep = conservation_report(&traj)?;
    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: Some(int_tol) }),
        criteria: vec![
            Criterion::at_most("drift_H", rep.max_drift_h, tol),
            Criterion::at_most("drift_L1", rep.max_drift_l1, tol),
            Criterion::at_most("drift_L2sin", rep.max_drift_l2_sin, tol),
            Criterion::at_most("drift_L2cos", rep.max_drift_l2_cos, tol),
        ],
        results: json!({
            "initial": state_json(&initial),
            "radial_period": period,
            "t_end": traj.t_end(),
            "samples": rep.rows.len(),
            "L2sin_initial": higher_integral(&system, &initial, L2Variant::Sin)?,
            "L2cos_initial": higher_integral(&system, &initial, L2Variant::Cos)?,
        }),
        artifacts: vec![("conserve.csv".into(), rep.to_csv())],
    })
}

/// Numerical Poisson brackets of `H` with each integral at random states.
/// For the oscillator family also compares the trigonometric and polynomial
/// forms and probes the momentum degree by `λ`-scaling.
pub fn bracket(r: &mut Resolver) -> Result<Outcome, Failure> {
    let system = r.system("ttw")?;
    let samples = r.u32("samples", 100)?;
    let mut rng = rng_from(r)?;
    let tol = r.positive("tol", 1e-6)?;
    if samples == 0 {
        return Err(Failure::Usage("samples must be at least 1".into()));
    }

    let h = |x: &PhasePoint| system.hamiltonian(x);
    let mut csv = String::from("i,q1,q2,p1,p2,H_L1,H_L2sin,H_L2cos,trig_poly_sin,trig_poly_cos\n");
    let (mut worst_l1, mut worst_l2, mut worst_form) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut states = Vec::with_capacity(samples as usize);
    for i in 0..samples {
        let s = random_state(&system, &mut rng);
        states.push(s);
        let b1 = poisson_bracket_numeric(h, |x: &PhasePoint| system.angular_integral(x), &s, None)?.relative();
        let bs = poisson_bracket_numeric(h, |x: &PhasePoint| higher_integral(&system, x, L2Variant::Sin), &s, None)?
            .relative();
        let bc = poisson_bracket_numeric(h, |x: &PhasePoint| higher_integral(&system, x, L2Variant::Cos), &s, None)?
            .relative();
        worst_l1 = worst_l1.max(b1);
        worst_l2 = worst_l2.max(bs).max(bc);
        let (fs, fc) = match &system {
            System::Ttw(p) => {
                let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
                (rel(l2_trig(p, &s)?, l2_poly(p, &s)?), rel(l2_cos_trig(p, &s)?, l2_cos(p, &s)?))
            }
            System::Dc(_) => (f64::NAN, f64::NAN),
        };
        if fs.is_finite() {
            worst_form = worst_form.max(fs).max(fc);
        }
        let [q1, q2, p1, p2] = s.to_array();
        let _ = writeln!(csv, "{i},{q1},{q2},{p1},{p2},{b1},{bs},{bc},{fs},{fc}");
    }

    let mut criteria = vec![
        Criterion::at_most("bracket_H_L1", worst_l1, tol),
        Criterion::at_most("bracket_H_L2", worst_l2, tol),
    ];
    let mut degrees = serde_json::Value::Null;
    if let System::Ttw(p) = &system {
        criteria.push(Criterion::at_most("trig_vs_poly", worst_form, 1e-9));
        let (c, d) = (p.k.num(), p.k.den());
        let max = 2 * (c + d);
        let probe_tol = 1e-8;
        let mut found = Vec::new();
        let mut worst_fit = 0.0_f64;
        for variant in [L2Variant::Sin, L2Variant::Cos] {
            let probe = momentum_degree_probe(|x: &PhasePoint| higher_integral(&system, x, variant), &states[0], max, probe_tol)?;
            worst_fit = worst_fit.max(probe.residual);
            found.push(json!({
                "variant": variant,
                "expected": variant.degree(c, d),
                "found": probe.degree,
                "residual": probe.residual,
                "parity": probe.parity,
            }));
            let mismatch = probe.degree.map_or(f64::INFINITY, |g| (g as f64 - variant.degree(c, d) as f64).abs());
            criteria.push(Criterion::at_most(&format!("degree_mismatch_{}", variant.name()), mismatch, 0.0));
        }
        criteria.push(Criterion::at_most("degree_fit_residual", worst_fit, probe_tol));
        degrees = json!({ "lowest_expected": 2 * (c + d) - 1, "variants": found });
    }
    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: None }),
        criteria,
        results: json!({ "samples": samples, "degree_probe": degrees }),
        artifacts: vec![("bracket.csv".into(), csv)],
    })
}

/// The oscillator-to-Coulomb transform: pointwise Hamiltonian identity,
/// canonicity of the point map, and agreement of a mapped oscillator orbit
/// with an independently integrated Coulomb orbit.
pub fn stackel_verify(r: &mut Resolver) -> Result<Outcome, Failure> {
    let ttw = r.ttw_params()?;
    let initial = ttw_initial(r, &ttw)?;
    let samples = r.u32("samples", 500)?;
    let mut rng = rng_from(r)?;
    let int_tol = r.positive("int_tol", 1e-12)?;
    let tol = r.positive("tol", 1e-5)?;
    if samples == 0 {
        return Err(Failure::Usage("samples must be at least 1".into()));
    }

    let source = System::Ttw(ttw);
    let e_source = source.hamiltonian(&initial)?;
    let image = ttw_to_dc(&ttw, e_source);

    let mut worst_identity = 0.0_f64;
    let mut worst_canonical = 0.0_f64;
    let pairs = [(0, 2, 1.0), (1, 3, 1.0), (0, 3, 0.0), (1, 2, 0.0), (0, 1, 0.0), (2, 3, 0.0)];
    for i in 0..samples {
        let pt = random_state(&source, &mut rng);
        let h = source.hamiltonian(&pt)?;
        let res = stackel_identity_residual(&pt, &ttw, &image.dc, e_source, image.energy)?;
        worst_identity = worst_identity.max(res.abs() / (1.0 + h.abs()));
        if i < 20 {
            for (a, b, expected) in pairs {
                let coord = |j: usize| move |x: &PhasePoint| Ok(pushforward_phase(x)?.to_array()[j]);
                let v = poisson_bracket_numeric(coord(a), coord(b), &pt, None)?.value;
                worst_canonical = worst_canonical.max((v - expected).abs());
            }
        }
    }

    let period = radial_period_for(&source, &initial)?;
    let traj = integrate(&source, &initial, 2.0 * period, int_tol)?;
    let curve = map_trajectory(&traj)?;
    let target = System::Dc(image.dc);
    let consts = orbit_constants_from_point(&image.dc, &curve[0])?;
    let mut worst_orbit = 0.0_f64;
    for pt in &curve {
        worst_orbit = worst_orbit.max(orbit_residual_at(&image.dc, &consts, pt)?.abs());
    }
    let dc_period = radial_period_for(&target, &curve[0])?;
    let dc_traj = integrate(&target, &curve[0], 2.0 * dc_period, int_tol)?;
    let hausdorff = hausdorff_image_vs_dc(&traj, &dc_traj)?;

    let mut csv = String::from("t,rho,theta,p_rho,p_theta,r,phi,p_r,p_phi\n");
    for (s, m) in traj.samples().iter().zip(&curve) {
        let [a, b, c, d] = s.state.to_array();
        let [e, f, g, h] = m.to_array();
        let _ = writeln!(csv, "{},{a},{b},{c},{d},{e},{f},{g},{h}", s.t);
    }
    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: Some(int_tol) }),
        criteria: vec![
            Criterion::at_most("identity_residual", worst_identity, 1e-11),
            Criterion::at_most("canonical_brackets", worst_canonical, 1e-8),
            Criterion::at_most("image_orbit_residual", worst_orbit, 1e-6),
            Criterion::at_most("hausdorff_scaled", hausdorff, tol),
            Criterion::at_most("image_energy_error", (target.hamiltonian(&curve[0])? - image.energy).abs(), 1e-9),
        ],
        results: json!({
            "source_energy": e_source,
            "image": image,
            "image_radial_period": dc_period,
            "initial": state_json(&initial),
            "samples": samples,
        }),
        artifacts: vec![("stackel_image.csv".into(), csv)],
    })
}
