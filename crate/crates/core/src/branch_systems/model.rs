//! JSON model files.
//!
//! ```json
//! {"kind": "linear", "head": [0.5, 0.25], "tail": {"c": 0.1, "a": 2, "b": 1, "d": 0}, "xi": 2}
//! ```
//!
//! `kind` is one of `gauss`, `linear`, `flat_example` (with `K`, `C` and
//! optional `s_inf`) or `custom` (head entries `{"diameter": r}` or
//! `{"mobius": [a, b, c, d]}`, optional `distortion` schedule).

use serde::{Deserialize, Serialize};

use super::{Branch, BranchSystem, Distortion, Mobius, Tail, TailFamily, TailModel};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gauss,
    Linear,
    FlatExample,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HeadEntry {
    Diameter(f64),
    Branch(BranchSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diameter: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mobius: Option<[f64; 4]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub head: Vec<HeadEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(rename = "C", default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s_inf: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distortion: Option<Vec<f64>>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidModel(format!("model: {e}")))
    }

    pub fn build(&self) -> Result<BranchSystem> {
        let sys = match self.kind {
            ModelKind::Gauss => BranchSystem::gauss(),
            ModelKind::FlatExample => {
                let k = self.k.ok_or_else(|| Error::InvalidModel("flat_example needs K".into()))?;
                let c = self.c.ok_or_else(|| Error::InvalidModel("flat_example needs C".into()))?;
                BranchSystem::flat_example(k, c, self.s_inf.unwrap_or(0.5))?
            }
            ModelKind::Linear => {
                let diams = self
                    .head
                    .iter()
                    .map(|h| match h {
                        HeadEntry::Diameter(d) => Ok(*d),
                        HeadEntry::Branch(BranchSpec {
                            diameter: Some(d),
                            mobius: None,
                        }) => Ok(*d),
                        _ => Err(Error::InvalidModel("linear heads take diameters".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                let sys = BranchSystem::linear_with_tail(&diams, self.tail)?;
                match self.xi {
                    Some(xi) => BranchSystem::new(sys.head().to_vec(), sys.tail().copied(), xi, Distortion::Zero)?,
                    None => sys,
                }
            }
            ModelKind::Custom => {
                let head = self
                    .head
                    .iter()
                    .enumerate()
                    .map(|(i, h)| {
                        let label = i as u64 + 1;
                        match h {
                            HeadEntry::Diameter(d) => Ok(Branch::linear(label, *d)),
                            HeadEntry::Branch(BranchSpec {
                                diameter: Some(d),
                                mobius: None,
                            }) => Ok(Branch::linear(label, *d)),
                            HeadEntry::Branch(BranchSpec {
                                diameter: None,
                                mobius: Some([a, b, c, d]),
                            }) => Ok(Branch::mobius(label, Mobius::new(*a, *b, *c, *d))),
                            _ => Err(Error::InvalidModel("branch needs exactly one of diameter, mobius".into())),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                let tail = self.tail.map(|m| Tail {
                    family: TailFamily::Linear(m),
                    first: head.len() as u64 + 1,
                });
                let xi = self
                    .xi
                    .ok_or_else(|| Error::InvalidModel("custom models need xi".into()))?;
                let distortion = match &self.distortion {
                    Some(v) => Distortion::Schedule(v.clone()),
                    None if head.iter().all(Branch::is_linear) => Distortion::Zero,
                    None => return Err(Error::InvalidModel("analytic custom models need a distortion schedule".into())),
                };
                BranchSystem::new(head, tail, xi, distortion)?
            }
        };
        Ok(sys)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_kinds() {
        let g = ModelSpec::from_json(r#"{"kind":"gauss"}"#).unwrap().build().unwrap();
        assert!(!g.is_linear());
        let d = ModelSpec::from_json(r#"{"kind":"linear","head":[0.5,0.5]}"#).unwrap().build().unwrap();
        assert_eq!(d.branch_count(), Some(2));
        let f = ModelSpec::from_json(r#"{"kind":"flat_example","K":0.55,"C":0.6}"#)
            .unwrap()
            .build()
            .unwrap();
        assert!(f.tail().is_some());
        let c = ModelSpec::from_json(
            r#"{"kind":"custom","head":[{"mobius":[0,1,1,1]},{"mobius":[0,1,1,2]}],"xi":1.0,"distortion":[1.4,0.5]}"#,
        )
        .unwrap()
        .build()
        .unwrap();
        assert_eq!(c.branch_count(), Some(2));
        let t = ModelSpec::from_json(r#"{"kind":"linear","head":[0.3],"tail":{"c":0.1,"a":2,"b":1,"d":0}}"#)
            .unwrap()
            .build()
            .unwrap();
        assert!(t.tail().is_some());
    }

    #[test]
    fn rejects_bad_models() {
        assert!(ModelSpec::from_json(r#"{"kind":"linear","head":[0.7,0.7]}"#).unwrap().build().is_err());
        assert!(ModelSpec::from_json(r#"{"kind":"nonsense"}"#).is_err());
        assert!(ModelSpec::from_json(r#"{"kind":"flat_example","K":0.2,"C":0.6}"#)
            .unwrap()
            .build()
            .is_err());
    }
}
