//! One function per subcommand. Each resolves and validates its whole
//! configuration first, then runs the numerics.

mod dynamics;
mod integrals;
mod spectral;

use std::f64::consts::PI;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use stackel_core::dynamics::point_from_constants;
use stackel_core::systems::validate_bounded;
use stackel_core::{DCParams, PhasePoint, System, TTWParams};

use crate::config::Resolver;
use crate::summary::{Criterion, Tolerance};
use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Trajectory,
    Closure,
    Conserve,
    Bracket,
    OrbitResidual,
    StackelVerify,
    Spectrum,
    Degeneracy,
    WavefunctionResidual,
    Orthogonality,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Trajectory => "trajectory",
            Command::Closure => "closure",
            Command::Conserve => "conserve",
            Command::Bracket => "bracket",
            Command::OrbitResidual => "orbit-residual",
            Command::StackelVerify => "stackel-verify",
            Command::Spectrum => "spectrum",
            Command::Degeneracy => "degeneracy",
            Command::WavefunctionResidual => "wavefunction-residual",
            Command::Orthogonality => "orthogonality",
        }
    }
}

/// What a command produced: criteria, result data and named CSV artifacts.
#[derive(Debug, Default)]
pub struct Outcome {
    pub tolerance: Option<Tolerance>,
    pub criteria: Vec<Criterion>,
    pub results: Value,
    pub artifacts: Vec<(String, String)>,
}

pub fn run(command: Command, r: &mut Resolver) -> Result<Outcome, Failure> {
    match command {
        Command::Trajectory => dynamics::trajectory(r),
        Command::Closure => dynamics::closure(r),
        Command::OrbitResidual => dynamics::orbit_residual(r),
        Command::Conserve => integrals::conserve(r),
        Command::Bracket => integrals::bracket(r),
        Command::StackelVerify => integrals::stackel_verify(r),
        Command::Spectrum => spectral::spectrum(r),
        Command::Degeneracy => spectral::degeneracy(r),
        Command::WavefunctionResidual => spectral::wavefunction_residual(r),
        Command::Orthogonality => spectral::orthogonality(r),
    }
}

/// Bounded DC start: an explicit `state`, or one built from `(E, A)` and the
/// fractional positions between the turning points. Defaults put `A` at 1.5
/// times its barrier minimum and `E = -Q²/(8A)`.
fn dc_initial(r: &mut Resolver, p: &DCParams) -> Result<PhasePoint, Failure> {
    if let Some(pt) = r.state(&System::Dc(*p))? {
        return Ok(pt);
    }
    let a = match r.optional_f64("A")? {
        Some(a) => a,
        None => {
            if p.alpha < 0.0 || p.beta < 0.0 {
                return Err(Failure::Usage("negative couplings need an explicit A".into()));
            }
            let a = 0.375 * p.k.value().powi(2) * (p.alpha.sqrt() + p.beta.sqrt()).powi(2);
            r.record("A", a);
            a
        }
    };
    let e = match r.optional_f64("E")? {
        Some(e) => e,
        None => {
            let e = -p.q * p.q / (8.0 * a);
            r.record("E", e);
            e
        }
    };
    let report = validate_bounded(p, e, a);
    if !report.all_passed() {
        return Err(Failure::Usage(format!(
            "E = {e}, A = {a} violate bounded-motion conditions {:?}",
            report.failed()
        )));
    }
    let radial = unit_fraction(r, "radial_frac", 0.3)?;
    let angular = unit_fraction(r, "angular_frac", 0.6)?;
    point_from_constants(p, e, a, radial, angular, 1.0, 1.0)
        .map_err(|e| Failure::Usage(format!("cannot place an initial point: {e}")))
}

fn unit_fraction(r: &mut Resolver, key: &str, default: f64) -> Result<f64, Failure> {
    let v = r.f64(key, default)?;
    if !(0.0..=1.0).contains(&v) {
        return Err(Failure::Usage(format!("{key} = {v} must lie in [0, 1]")));
    }
    Ok(v)
}

fn ttw_initial(r: &mut Resolver, p: &TTWParams) -> Result<PhasePoint, Failure> {
    if let Some(pt) = r.state(&System::Ttw(*p))? {
        return Ok(pt);
    }
    let pt = PhasePoint::ttw(1.0, 0.3 * PI / (2.0 * p.k.value()), 0.4, 0.9);
    r.record("state", format_state(&pt));
    Ok(pt)
}

fn initial_for(r: &mut Resolver, system: &System) -> Result<PhasePoint, Failure> {
    match system {
        System::Dc(p) => dc_initial(r, p),
        System::Ttw(p) => ttw_initial(r, p),
    }
}

fn format_state(pt: &PhasePoint) -> String {
    let [a, b, c, d] = pt.to_array();
    format!("{a},{b},{c},{d}")
}

/// Uniform random state in the first angular cell with radius in `[0.3, 2]`
/// and momenta in `[-2, 2]`.
fn random_state(system: &System, rng: &mut ChaCha8Rng) -> PhasePoint {
    let u: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
    match system {
        System::Ttw(p) => stackel_core::invariants::ttw_state_from_unit(p, u),
        System::Dc(p) => {
            let width = PI / p.k.value();
            PhasePoint::dc(0.3 + 1.7 * u[0], width * (0.05 + 0.9 * u[1]), -2.0 + 4.0 * u[2], -2.0 + 4.0 * u[3])
        }
    }
}

fn rng_from(r: &mut Resolver) -> Result<ChaCha8Rng, Failure> {
    Ok(ChaCha8Rng::seed_from_u64(r.u64("seed", 0)?))
}

fn state_json(pt: &PhasePoint) -> Value {
    Value::from(pt.to_array().to_vec())
}
