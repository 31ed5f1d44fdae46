//! Experiment configuration: a flat key-value document merged with command
//! line flags, then resolved key by key with per-command defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use stackel_core::kv::KvDocument;
use stackel_core::{DCParams, PhasePoint, RationalIndex, System, TTWParams};

use crate::Failure;

/// Every key a config file may contain.
pub const KNOWN_KEYS: &[&str] = &[
    "family", "k", "Q", "alpha", "beta", "a", "b", "omega2", "E", "A", "radial_frac", "angular_frac", "state",
    "periods", "tol", "int_tol", "seed", "samples", "N_max", "n_max", "m_max", "n", "m", "n2", "m2", "h", "nr",
    "nphi", "r_min", "r_max", "gauge",
];

pub const OUT_ENV: &str = "STACKEL_LAB_OUT";
const DEFAULT_OUT: &str = "stackel-out";

/// Parse `c/d` or a bare integer.
pub fn parse_k(text: &str) -> Result<RationalIndex, String> {
    let (c, d) = match text.split_once('/') {
        Some((c, d)) => (c.trim(), d.trim()),
        None => (text.trim(), "1"),
    };
    let c: u32 = c.parse().map_err(|_| format!("k = {text:?}: numerator is not a positive integer"))?;
    let d: u32 = d.parse().map_err(|_| format!("k = {text:?}: denominator is not a positive integer"))?;
    let k = RationalIndex::new(c, d).map_err(|e| format!("k = {text:?}: {e}"))?;
    if k.num() != c {
        return Err(format!("k = {text:?} is not in lowest terms"));
    }
    Ok(k)
}

pub fn load_document(config: Option<&Path>, overrides: &[(&'static str, String)]) -> Result<KvDocument, Failure> {
    let mut doc = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
            KvDocument::parse(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))?
        }
        None => KvDocument::new(),
    };
    if let Some((key, _)) = doc.iter().find(|(key, _)| !KNOWN_KEYS.contains(key)) {
        return Err(Failure::Usage(format!("unknown config key {key:?}")));
    }
    for (key, value) in overrides {
        doc.set(*key, value.clone());
    }
    Ok(doc)
}

pub fn output_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Reads keys with defaults and records every value actually used, so the
/// summary echoes the effective configuration.
pub struct Resolver<'a> {
    doc: &'a KvDocument,
    echo: BTreeMap<String, String>,
}

impl<'a> Resolver<'a> {
    pub fn new(doc: &'a KvDocument) -> Self {
        Self { doc, echo: BTreeMap::new() }
    }

    pub fn into_echo(self) -> BTreeMap<String, String> {
        self.echo
    }

    pub fn is_set(&self, key: &str) -> bool {
        self.doc.get(key).is_some()
    }

    pub fn record(&mut self, key: &str, value: impl ToString) {
        self.echo.insert(key.to_string(), value.to_string());
    }

    fn parsed<T: std::str::FromStr + ToString>(&mut self, key: &str, default: T, what: &str) -> Result<T, Failure> {
        let value = match self.doc.get(key) {
            Some(text) => text
                .parse::<T>()
                .map_err(|_| Failure::Usage(format!("{key} = {text:?} is not {what}")))?,
            None => default,
        };
        self.record(key, value.to_string());
        Ok(value)
    }

    pub fn f64(&mut self, key: &str, default: f64) -> Result<f64, Failure> {
        let v = self.parsed(key, default, "a number")?;
        if !v.is_finite() {
            return Err(Failure::Usage(format!("{key} = {v} must be finite")));
        }
        Ok(v)
    }

    pub fn positive(&mut self, key: &str, default: f64) -> Result<f64, Failure> {
        let v = self.f64(key, default)?;
        if !(v > 0.0) {
            return Err(Failure::Usage(format!("{key} = {v} must be positive")));
        }
        Ok(v)
    }

    pub fn u32(&mut self, key: &str, default: u32) -> Result<u32, Failure> {
        self.parsed(key, default, "a non-negative integer")
    }

    pub fn u64(&mut self, key: &str, default: u64) -> Result<u64, Failure> {
        self.parsed(key, default, "a non-negative integer")
    }

    pub fn optional_f64(&mut self, key: &str) -> Result<Option<f64>, Failure> {
        if self.is_set(key) {
            self.f64(key, 0.0).map(Some)
        } else {
            Ok(None)
        }
    }

    pub fn choice(&mut self, key: &str, default: &str, allowed: &[&str]) -> Result<String, Failure> {
        let v = self.doc.get(key).unwrap_or(default).to_string();
        if !allowed.contains(&v.as_str()) {
            return Err(Failure::Usage(format!("{key} = {v:?}; expected one of {allowed:?}")));
        }
        self.record(key, &v);
        Ok(v)
    }

    pub fn k(&mut self) -> Result<RationalIndex, Failure> {
        let text = self.doc.get("k").unwrap_or("1");
        let k = parse_k(text).map_err(Failure::Usage)?;
        self.record("k", format!("{}/{}", k.num(), k.den()));
        Ok(k)
    }

    /// `alpha`/`beta`, or the exponents `a`/`b` with `α = a(a-1)`.
    pub fn couplings(&mut self) -> Result<(f64, f64), Failure> {
        let mut one = |coupling: &str, exponent: &str, default: f64| -> Result<f64, Failure> {
            match (self.is_set(coupling), self.is_set(exponent)) {
                (true, true) => Err(Failure::Usage(format!("give either {coupling} or {exponent}, not both"))),
                (false, true) => {
                    let e = self.f64(exponent, 0.0)?;
                    if e < 0.5 {
                        return Err(Failure::Usage(format!("{exponent} = {e} must be at least 1/2")));
                    }
                    let g = e * (e - 1.0);
                    self.record(coupling, g);
                    Ok(g)
                }
                _ => self.f64(coupling, default),
            }
        };
        let alpha = one("alpha", "a", 0.2)?;
        let beta = one("beta", "b", 0.3)?;
        Ok((alpha, beta))
    }

    pub fn family(&mut self, default: &str) -> Result<String, Failure> {
        self.choice("family", default, &["dc", "ttw"])
    }

    pub fn dc_params(&mut self) -> Result<DCParams, Failure> {
        let k = self.k()?;
        let q = self.f64("Q", 1.0)?;
        let (alpha, beta) = self.couplings()?;
        Ok(DCParams::new(q, alpha, beta, k))
    }

    pub fn ttw_params(&mut self) -> Result<TTWParams, Failure> {
        let k = self.k()?;
        let omega2 = self.f64("omega2", 1.0)?;
        let (alpha, beta) = self.couplings()?;
        Ok(TTWParams::new(omega2, alpha, beta, k))
    }

    pub fn system(&mut self, default_family: &str) -> Result<System, Failure> {
        Ok(match self.family(default_family)?.as_str() {
            "dc" => System::Dc(self.dc_params()?),
            _ => System::Ttw(self.ttw_params()?),
        })
    }

    /// Explicit `state = q1,q2,p1,p2` in the system's chart.
    pub fn state(&mut self, system: &System) -> Result<Option<PhasePoint>, Failure> {
        let Some(text) = self.doc.get("state") else {
            return Ok(None);
        };
        let values: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| Failure::Usage(format!("state = {text:?} is not four comma-separated numbers")))?;
        let arr: [f64; 4] = values
            .try_into()
            .map_err(|_| Failure::Usage(format!("state = {text:?} needs exactly four numbers")))?;
        let point = PhasePoint::from_array(system.chart(), arr);
        system
            .hamiltonian(&point)
            .map_err(|e| Failure::Usage(format!("state = {text:?} is outside the domain: {e}")))?;
        self.record("state", text);
        Ok(Some(point))
    }
}
