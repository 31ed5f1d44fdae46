//! Flat `key = value` text documents, used for parameter files and
//! experiment configs.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are unique;
//! rendering sorts keys so output is stable.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::systems::{DCParams, RationalIndex, System, TTWParams};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KvDocument {
    entries: BTreeMap<String, String>,
}

impl KvDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate key {key:?}", lineno + 1)));
            }
        }
        Ok(Self { entries })
    }

    pub fn render(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(key.into(), value.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| Error::Parse(format!("missing key {key:?}")))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("key {key:?}: {v:?} is not a number ({e})")))
            })
            .transpose()
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.get_f64(key)?
            .ok_or_else(|| Error::Parse(format!("missing key {key:?}")))
    }
}

impl System {
    /// Serialize as `family, Q | omega2, alpha, beta, k_num, k_den`.
    pub fn to_kv(&self) -> KvDocument {
        let mut doc = KvDocument::new();
        let (alpha, beta) = self.alpha_beta();
        match self {
            System::Dc(p) => {
                doc.set("family", "dc");
                doc.set("Q", p.q.to_string());
            }
            System::Ttw(p) => {
                doc.set("family", "ttw");
                doc.set("omega2", p.omega2.to_string());
            }
        }
        doc.set("alpha", alpha.to_string());
        doc.set("beta", beta.to_string());
        doc.set("k_num", self.k().num().to_string());
        doc.set("k_den", self.k().den().to_string());
        doc
    }

    pub fn from_kv(doc: &KvDocument) -> Result<Self> {
        let int = |key: &str| -> Result<u32> {
            let v = doc.require(key)?;
            v.parse::<u32>()
                .map_err(|e| Error::Parse(format!("key {key:?}: {v:?} ({e})")))
        };
        let k = RationalIndex::new(int("k_num")?, int("k_den")?)?;
        let alpha = doc.require_f64("alpha")?;
        let beta = doc.require_f64("beta")?;
        match doc.require("family")? {
            "dc" => Ok(System::Dc(DCParams::new(doc.require_f64("Q")?, alpha, beta, k))),
            "ttw" => Ok(System::Ttw(TTWParams::new(doc.require_f64("omega2")?, alpha, beta, k))),
            other => Err(Error::Parse(format!("unknown family {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let doc = KvDocument::parse("# params\nfamily = dc\n\n Q=1.5 \nalpha = 0.2\nbeta = 0.3\nk_num = 3\nk_den = 2\n").unwrap();
        let sys = System::from_kv(&doc).unwrap();
        match sys {
            System::Dc(p) => {
                assert_eq!(p.q, 1.5);
                assert_eq!(p.k.to_string(), "3/2");
            }
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(KvDocument::parse("no equals sign").is_err());
        assert!(KvDocument::parse("a = 1\na = 2").is_err());
        let doc = KvDocument::parse("family = sho\nalpha=0\nbeta=0\nk_num=1\nk_den=1").unwrap();
        assert!(System::from_kv(&doc).is_err());
        let doc = KvDocument::parse("family = dc\nalpha=0\nbeta=0\nk_num=1\nk_den=1").unwrap();
        assert!(System::from_kv(&doc).is_err());
    }

    proptest! {
        #[test]
        fn system_round_trips(ttw in any::<bool>(), coupling in -10.0f64..10.0, alpha in -0.2f64..3.0,
                              beta in -0.2f64..3.0, c in 1u32..9, d in 1u32..9) {
            let k = RationalIndex::new(c, d).unwrap();
            let sys = if ttw {
                System::Ttw(TTWParams::new(coupling, alpha, beta, k))
            } else {
                System::Dc(DCParams::new(coupling, alpha, beta, k))
            };
            let text = sys.to_kv().render();
            let back = System::from_kv(&KvDocument::parse(&text).unwrap()).unwrap();
            prop_assert_eq!(back, sys);
        }
    }
}
