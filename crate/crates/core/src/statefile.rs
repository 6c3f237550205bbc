//! Canonical JSON state files.
//!
//! ```text
//! {
//!   "dims": [2, 2, 2],
//!   "amps": [
//!     {"idx": [0, 0, 0], "re": 7.0710678118654746e-1, "im": 0.0000000000000000e0},
//!     ...
//!   ],
//!   "metadata": {...}
//! }
//! ```
//!
//! Entries are sorted by `idx`, exact zeros are omitted and floats carry
//! 17 significant digits, so write → read → write is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, r};
use crate::qstate::{flatten, unflatten, PureState};

const LOAD_NORM_TOL: f64 = 1e-6;
const EXACT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmpEntry {
    pub idx: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub amps: Vec<AmpEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl StateFile {
    pub fn from_state(psi: &PureState, metadata: Option<serde_json::Value>) -> Self {
        let amps = psi
            .amps()
            .iter()
            .enumerate()
            .filter(|(_, z)| !(z.re == 0.0 && z.im == 0.0))
            .map(|(k, z)| AmpEntry {
                idx: unflatten(k, psi.dims()),
                re: z.re,
                im: z.im,
            })
            .collect();
        Self {
            dims: psi.dims().to_vec(),
            amps,
            metadata,
        }
    }

    /// Validates entries and builds the state. Norms within `1e-9` are kept
    /// bit-exact; otherwise the state is renormalized if within `1e-6` or if
    /// `normalize` is set.
    pub fn to_state(&self, normalize: bool) -> Result<PureState> {
        if self.dims.len() < 2 || self.dims.contains(&0) {
            return Err(Error::StateFile(format!("invalid dims {:?}", self.dims)));
        }
        let total: usize = self.dims.iter().product();
        let mut amps = vec![r(0.0); total];
        let mut seen = vec![false; total];
        for (k, e) in self.amps.iter().enumerate() {
            if e.idx.len() != self.dims.len() || e.idx.iter().zip(&self.dims).any(|(i, d)| i >= d) {
                return Err(Error::StateFile(format!(
                    "amps[{k}]: idx {:?} outside dims {:?}",
                    e.idx, self.dims
                )));
            }
            if !e.re.is_finite() || !e.im.is_finite() {
                return Err(Error::StateFile(format!("amps[{k}]: non-finite amplitude")));
            }
            let flat = flatten(&e.idx, &self.dims);
            if seen[flat] {
                return Err(Error::StateFile(format!("amps[{k}]: duplicate idx {:?}", e.idx)));
            }
            seen[flat] = true;
            amps[flat] = c(e.re, e.im);
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() <= EXACT_NORM_TOL {
            return PureState::new(self.dims.clone(), amps);
        }
        if normalize || (norm - 1.0).abs() <= LOAD_NORM_TOL {
            return PureState::from_unnormalized(self.dims.clone(), amps);
        }
        Err(Error::StateFile(format!(
            "norm is {norm}, expected 1 within {LOAD_NORM_TOL:e} (use normalization to rescale)"
        )))
    }

    /// Canonical text form.
    pub fn to_canonical_string(&self) -> String {
        let mut entries = self.amps.clone();
        entries.sort_by(|a, b| a.idx.cmp(&b.idx));
        let list = |v: &[usize]| v.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        s.push_str("{\n");
        let _ = writeln!(s, "  \"dims\": [{}],", list(&self.dims));
        s.push_str("  \"amps\": [");
        for (k, e) in entries.iter().enumerate() {
            s.push_str(if k == 0 { "\n" } else { ",\n" });
            let _ = write!(
                s,
                "    {{\"idx\": [{}], \"re\": {:.16e}, \"im\": {:.16e}}}",
                list(&e.idx),
                e.re,
                e.im
            );
        }
        s.push_str(if entries.is_empty() { "]" } else { "\n  ]" });
        if let Some(m) = &self.metadata {
            let _ = write!(s, ",\n  \"metadata\": {}", serde_json::to_string(m).unwrap_or_else(|_| "null".into()));
        }
        s.push_str("\n}\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_canonical_string())?;
        Ok(())
    }
}

/// Writes `psi` in canonical form.
pub fn save_state(path: &Path, psi: &PureState, metadata: Option<serde_json::Value>) -> Result<()> {
    StateFile::from_state(psi, metadata).write(path)
}

/// Reads a state and its metadata.
pub fn load_state(path: &Path, normalize: bool) -> Result<(PureState, Option<serde_json::Value>)> {
    let f = StateFile::read(path)?;
    let psi = f.to_state(normalize)?;
    Ok((psi, f.metadata))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{make_family, Family};

    #[test]
    fn round_trip_is_byte_identical() {
        for fam in [
            Family::Ghz { d: 2 },
            Family::DddPsiR { r: 4 },
            Family::DmmPsiA { a: 1.0 },
            Family::Smm { d: 3, seed: 2 },
            Family::PmmTiles,
        ] {
            let (psi, cert) = make_family(&fam).unwrap();
            let meta = serde_json::to_value(&cert).unwrap();
            let first = StateFile::from_state(&psi, Some(meta)).to_canonical_string();
            let parsed = StateFile::parse(&first).unwrap();
            let back = parsed.to_state(false).unwrap();
            assert_eq!(back.amps(), psi.amps());
            let second = StateFile::from_state(&back, parsed.metadata.clone()).to_canonical_string();
            assert_eq!(first, second);
        }
    }

    #[test]
    fn parse_errors_carry_location() {
        match StateFile::parse("{\n  \"dims\": [2, 2],\n  \"amps\": [oops]\n}") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation() {
        let entry = |idx: Vec<usize>, re: f64| AmpEntry { idx, re, im: 0.0 };
        let f = StateFile {
            dims: vec![2, 2],
            amps: vec![entry(vec![0, 0], 1.0), entry(vec![0, 0], 0.0)],
            metadata: None,
        };
        assert!(f.to_state(false).is_err());
        let f = StateFile {
            dims: vec![2, 2],
            amps: vec![entry(vec![2, 0], 1.0)],
            metadata: None,
        };
        assert!(f.to_state(false).is_err());
        let f = StateFile {
            dims: vec![2, 2],
            amps: vec![entry(vec![0, 0], 1.0), entry(vec![1, 1], 1.0)],
            metadata: None,
        };
        assert!(f.to_state(false).is_err());
        let psi = f.to_state(true).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
    }
}
