//! File formats shared by the library and the CLI.
//!
//! Floats are written with 17 significant digits so every value survives a
//! write/read cycle bit for bit.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::fock::FockState;

/// `x` with 17 significant digits in scientific notation (valid JSON and CSV).
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// A float that serializes through [`fmt17`]; non-finite values become null.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct F17(pub f64);

impl Serialize for F17 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        let raw = RawValue::from_string(fmt17(self.0)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

impl<'de> Deserialize<'de> for F17 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        f64::deserialize(d).map(F17)
    }
}

pub fn to_pairs(v: &[C64]) -> Vec<[F17; 2]> {
    v.iter().map(|c| [F17(c.re), F17(c.im)]).collect()
}

pub fn from_pairs(v: &[[F17; 2]]) -> Vec<C64> {
    v.iter().map(|[re, im]| C64::new(re.0, im.0)).collect()
}

pub mod complex_vec {
    //! serde adapter for `Vec<C64>` as `[[re, im], ...]`.
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        to_pairs(v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[F17; 2]>::deserialize(d)?;
        Ok(from_pairs(&pairs))
    }
}

pub mod f17 {
    //! serde adapter for a plain `f64` written with 17 significant digits.
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        F17(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        f64::deserialize(d)
    }
}

/// `{ "dim": int, "amplitudes": [[re, im], ...], "meta": {...} }`
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateFile {
    pub dim: usize,
    #[serde(with = "complex_vec")]
    pub amplitudes: Vec<C64>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl StateFile {
    pub fn new(state: &FockState, meta: serde_json::Value) -> Self {
        StateFile { dim: state.dim(), amplitudes: state.amplitudes().to_vec(), meta }
    }

    pub fn to_state(&self) -> Result<FockState> {
        if self.amplitudes.len() != self.dim {
            return Err(Error::ConfigInvalid(format!(
                "state file declares dim {} but holds {} amplitudes",
                self.dim,
                self.amplitudes.len()
            )));
        }
        FockState::new(self.amplitudes.clone())
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over
/// `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(1.0), "1.0000000000000000e0");
        assert_eq!(fmt17(-0.1), "-1.0000000000000001e-1");
        let v: serde_json::Value = serde_json::from_str(&fmt17(-2.5e-300)).unwrap();
        assert_eq!(v.as_f64(), Some(-2.5e-300));
    }

    #[test]
    fn state_file_schema() {
        let s = FockState::new(vec![C64::new(0.6, 0.0), C64::new(0.0, -0.8)]).unwrap();
        let text = serde_json::to_string(&StateFile::new(&s, serde_json::json!({"k": 1}))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["amplitudes"][1][1].as_f64(), Some(-0.8));
        assert_eq!(v["meta"]["k"], 1);
        let bad: StateFile = serde_json::from_str(r#"{"dim": 3, "amplitudes": [[1, 0]]}"#).unwrap();
        assert!(bad.to_state().is_err());
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two");
    }

    proptest! {
        #[test]
        fn state_file_roundtrip_is_bit_exact(v in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..20)) {
            let amps: Vec<C64> = v.iter().map(|(a, b)| C64::new(*a, *b)).collect();
            let s = FockState::new(amps.clone()).unwrap();
            let text = serde_json::to_string(&StateFile::new(&s, serde_json::Value::Null)).unwrap();
            let back: StateFile = serde_json::from_str(&text).unwrap();
            let state = back.to_state().unwrap();
            prop_assert_eq!(state.amplitudes(), &amps[..]);
        }
    }
}
