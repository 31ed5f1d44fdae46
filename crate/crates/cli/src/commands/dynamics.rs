use std::fmt::Write as _;

use serde_json::json;
use stackel_core::dynamics::{
    angular_branch, closure_check, integrate, integrate_with, measure_radial_period, orbit_constants_from_point,
    orbit_residual_at, orbit_residual_branch, radial_branch, radial_period_for, time_equation_residual,
    IntegratorConfig, CLOSURE_INTEGRATION_TOL,
};
use stackel_core::{Error, System};

use super::{dc_initial, initial_for, state_json, Outcome};
use crate::config::Resolver;
use crate::summary::{Criterion, Tolerance};
use crate::Failure;

/// Integrate and export the trajectory. Checks relative drift of `H` and
/// the angular constant against `1e3·int_tol` and, for the Coulomb family,
/// the measured radial period against the closed form.
pub fn trajectory(r: &mut Resolver) -> Result<Outcome, Failure> {
    let system = r.system("dc")?;
    let initial = initial_for(r, &system)?;
    let periods = r.positive("periods", 3.0)?;
    let int_tol = r.positive("int_tol", 1e-12)?;
    let tol = r.positive("tol", 1e-6)?;

    let period = radial_period_for(&system, &initial)?;
    let traj = integrate(&system, &initial, periods * period, int_tol)?;
    let stats = *traj.stats();
    let angular_drift = traj.max_angular_integral_drift()?;
    let mut criteria = vec![
        Criterion::at_most("energy_drift", stats.max_energy_drift, 1e3 * int_tol),
        Criterion::at_most("angular_integral_drift", angular_drift, 1e3 * int_tol),
    ];
    let measured = match measure_radial_period(&traj) {
        Ok(t) => Some(t),
        Err(Error::DegenerateOrbit(_)) => None,
        Err(e) => return Err(e.into()),
    };
    if let (System::Dc(_), Some(t)) = (&system, measured) {
        criteria.push(Criterion::at_most("radial_period_rel_error", (t / period - 1.0).abs(), tol));
    }
    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: Some(int_tol) }),
        criteria,
        results: json!({
            "initial": state_json(&initial),
            "energy": system.hamiltonian(&initial)?,
            "angular_integral": system.angular_integral(&initial)?,
            "radial_period_closed_form": period,
            "radial_period_measured": measured,
            "samples": traj.samples().len(),
            "accepted_steps": stats.accepted,
            "rejected_steps": stats.rejected,
            "max_energy_drift": stats.max_energy_drift,
            "max_angular_integral_drift": angular_drift,
        }),
        artifacts: vec![("trajectory.csv".into(), traj.to_csv()?)],
    })
}

/// Search for the first return of a bounded Coulomb-family orbit; closure is
/// expected within `2cd` radial periods for `k = c/d`.
pub fn closure(r: &mut Resolver) -> Result<Outcome, Failure> {
    let p = r.dc_params()?;
    let initial = dc_initial(r, &p)?;
    let bound = 2 * p.k.num() * p.k.den();
    let max_periods = r.u32("periods", bound)?;
    let tol = r.positive("tol", 1e-6)?;

    let system = System::Dc(p);
    let report = closure_check(&system, &initial, max_periods, tol)?;
    let period = radial_period_for(&system, &initial)?;
    let span = if report.n_radial > 0 { report.period_total } else { period };
    let traj = integrate(&system, &initial, span, CLOSURE_INTEGRATION_TOL)?;
    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: Some(CLOSURE_INTEGRATION_TOL) }),
        criteria: vec![
            Criterion::at_most("return_distance", report.return_distance, tol),
            Criterion::at_most("n_radial", report.n_radial as f64, bound as f64),
        ],
        results: json!({
            "closed": report.closed,
            "n_radial": report.n_radial,
            "n_radial_bound": bound,
            "return_distance": report.return_distance,
            "period_total": report.period_total,
            "radial_period": period,
            "energy": system.hamiltonian(&initial)?,
            "separation_constant": system.angular_integral(&initial)?,
            "initial": state_json(&initial),
        }),
        artifacts: vec![("closure.csv".into(), traj.to_csv()?)],
    })
}

/// Evaluate the implicit orbit equation and the time law along an
/// integrated orbit, plus an off-orbit control point that must fail.
pub fn orbit_residual(r: &mut Resolver) -> Result<Outcome, Failure> {
    let p = r.dc_params()?;
    let initial = dc_initial(r, &p)?;
    let periods = r.positive("periods", (2 * p.k.num() * p.k.den()) as f64)?;
    let int_tol = r.positive("int_tol", 1e-12)?;
    let tol = r.positive("tol", 1e-6)?;

    let system = System::Dc(p);
    let consts = orbit_constants_from_point(&p, &initial)?;
    let period = radial_period_for(&system, &initial)?;
    let cfg = IntegratorConfig::new(int_tol).with_max_step(period / 100.0);
    let traj = integrate_with(&system, &initial, periods * period, &cfg)?;

    let mut csv = String::from("t,r,phi,orbit_residual,time_residual\n");
    let (mut worst_orbit, mut worst_time) = (0.0_f64, 0.0_f64);
    for s in traj.samples() {
        let orbit = orbit_residual_at(&p, &consts, &s.state)?;
        let time = time_equation_residual(&p, &consts, s.t, s.state.q1, radial_branch(&s.state))?;
        worst_orbit = worst_orbit.max(orbit.abs());
        worst_time = worst_time.max(time.abs());
        let _ = writeln!(csv, "{},{},{},{},{}", s.t, s.state.q1, s.state.q2, orbit, time);
    }
    let branch = angular_branch(&p, &initial);
    let control = orbit_residual_branch(&p, &consts, 1.05 * initial.q1, initial.q2, branch)
        .or_else(|_| orbit_residual_branch(&p, &consts, 0.95 * initial.q1, initial.q2, branch))?;

    Ok(Outcome {
        tolerance: Some(Tolerance { criterion: tol, integration: Some(int_tol) }),
        criteria: vec![
            Criterion::at_most("max_orbit_residual", worst_orbit, tol),
            Criterion::at_most("max_time_residual", worst_time, tol),
            Criterion::at_least("off_orbit_control", control.abs(), 1e-3),
        ],
        results: json!({
            "constants": consts,
            "initial": state_json(&initial),
            "samples": traj.samples().len(),
            "t_end": traj.t_end(),
        }),
        artifacts: vec![("orbit_residual.csv".into(), csv)],
    })
}
