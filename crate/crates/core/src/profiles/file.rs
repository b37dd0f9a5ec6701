//! JSON profile files.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Bounds, Law, Regularity, RefractiveProfile, Segment};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawFile {
    pub kind: String,
    pub coefficients: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentFile {
    pub start: f64,
    pub end: f64,
    pub law: LawFile,
}

pub type BoundsFile = Bounds;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFile {
    pub regularity: Regularity,
    pub bounds: BoundsFile,
    pub segments: Vec<SegmentFile>,
}

impl LawFile {
    fn to_law(&self, index: usize) -> Result<Law> {
        let c = &self.coefficients;
        let bad = |want: &str| {
            Error::InvalidProfile(format!(
                "segment {index}: {} law needs {want} coefficients, got {}",
                self.kind,
                c.len()
            ))
        };
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile(format!(
                "segment {index}: non-finite coefficient"
            )));
        }
        match self.kind.as_str() {
            "constant" if c.len() == 1 => Ok(Law::Constant(c[0])),
            "constant" => Err(bad("1")),
            "affine" if c.len() == 2 => Ok(Law::Affine { a: c[0], b: c[1] }),
            "affine" => Err(bad("2")),
            "polynomial" if !c.is_empty() => Ok(Law::Polynomial(c.clone())),
            "polynomial" => Err(bad("at least 1")),
            other => Err(Error::InvalidProfile(format!(
                "segment {index}: unknown law kind '{other}'"
            ))),
        }
    }
}

impl ProfileFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn into_profile(self) -> Result<RefractiveProfile> {
        let segments = self
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| Ok(Segment::new(s.start, s.end, s.law.to_law(i)?)))
            .collect::<Result<Vec<_>>>()?;
        RefractiveProfile::new(segments, self.regularity, self.bounds)
    }

    /// Fails for laws with no file representation.
    pub fn from_profile(profile: &RefractiveProfile) -> Result<Self> {
        let segments = profile
            .segments()
            .iter()
            .map(|s| {
                let coefficients = s.law.coefficients().ok_or_else(|| {
                    Error::InvalidProfile(format!("{} law cannot be written to a file", s.law.kind()))
                })?;
                Ok(SegmentFile {
                    start: s.start,
                    end: s.end,
                    law: LawFile {
                        kind: s.law.kind().to_string(),
                        coefficients,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            regularity: profile.regularity(),
            bounds: *profile.bounds(),
            segments,
        })
    }
}

impl RefractiveProfile {
    pub fn from_json(text: &str) -> Result<Self> {
        ProfileFile::from_json(text)?.into_profile()
    }

    pub fn load(path: &Path) -> Result<Self> {
        ProfileFile::load(path)?.into_profile()
    }

    pub fn to_json(&self) -> Result<String> {
        ProfileFile::from_profile(self)?.to_json()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_LAYER: &str = r#"{
        "regularity": "piecewise_constant",
        "bounds": {"n_star": 4, "n_star_upper": 16},
        "segments": [
            {"start": 0, "end": 0.5, "law": {"kind": "constant", "coefficients": [4]}},
            {"start": 0.5, "end": 1, "law": {"kind": "constant", "coefficients": [16]}}
        ]
    }"#;

    #[test]
    fn parses_and_round_trips() {
        let p = RefractiveProfile::from_json(TWO_LAYER).unwrap();
        assert_eq!(p.layer_count(), 2);
        assert_eq!(p.value(0.75), 16.0);
        let again = RefractiveProfile::from_json(&p.to_json().unwrap()).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn accepts_legacy_regularity_names() {
        let text = TWO_LAYER.replace("piecewise_constant", "PiecewiseConstant");
        assert!(RefractiveProfile::from_json(&text).is_ok());
    }

    #[test]
    fn rejects_gap_and_overlap() {
        let gap = TWO_LAYER.replace(r#""start": 0.5"#, r#""start": 0.6"#);
        assert!(matches!(RefractiveProfile::from_json(&gap), Err(Error::InvalidProfile(m)) if m.contains("gap")));
        let overlap = TWO_LAYER.replace(r#""start": 0.5"#, r#""start": 0.4"#);
        assert!(matches!(RefractiveProfile::from_json(&overlap), Err(Error::InvalidProfile(m)) if m.contains("overlap")));
    }

    #[test]
    fn rejects_bad_coefficients() {
        let text = TWO_LAYER.replace(r#""coefficients": [4]"#, r#""coefficients": [4, 1]"#);
        assert!(RefractiveProfile::from_json(&text).is_err());
        let text = TWO_LAYER.replace(r#""kind": "constant", "coefficients": [4]"#, r#""kind": "spline", "coefficients": [4]"#);
        assert!(RefractiveProfile::from_json(&text).is_err());
        assert!(matches!(RefractiveProfile::from_json("{"), Err(Error::Json(_))));
    }
}
