//! Verb–noun composition on qubit registers.
//!
//! Nouns are sets of active meaning dimensions, transitive verbs are lists of
//! `(input dimension, output dimension)` maps. A phrase is compiled onto two
//! registers of one qubit per dimension: the noun sets its input qubits with
//! X gates and the verb copies selected inputs to output qubits with CNOTs.
//! Reading the output marginals tells which sense of the noun survived.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::sim::run_circuit;

const TOY_DOMAIN: &str = include_str!("../fixtures/toy_domain.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainModel {
    pub dimensions: Vec<String>,
    pub nouns: BTreeMap<String, Vec<String>>,
    pub verbs: BTreeMap<String, Vec<(String, String)>>,
}

impl DomainModel {
    /// The four-dimension place/event/tech/skill domain with nouns Borneo,
    /// Java, C++, Trip, Juggling and verbs visit, learn.
    pub fn toy() -> Self {
        DomainModel::from_json(TOY_DOMAIN.as_bytes()).expect("bundled domain model is valid")
    }

    pub fn from_json<R: Read>(reader: R) -> Result<Self> {
        let model: DomainModel = serde_json::from_reader(reader)?;
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimensions.is_empty() {
            return Err(Error::arg("domain model declares no dimensions"));
        }
        for (i, d) in self.dimensions.iter().enumerate() {
            if self.dimensions[..i].contains(d) {
                return Err(Error::arg(format!("dimension {d:?} declared twice")));
            }
        }
        for (noun, dims) in &self.nouns {
            for d in dims {
                self.dim_index(d)
                    .map_err(|_| Error::arg(format!("noun {noun:?} uses unknown dimension {d:?}")))?;
            }
        }
        for (verb, pairs) in &self.verbs {
            for (a, b) in pairs {
                self.dim_index(a)?;
                self.dim_index(b)?;
                if a == b {
                    return Err(Error::arg(format!("verb {verb:?} maps {a:?} onto itself")));
                }
            }
        }
        Ok(())
    }

    pub fn dim_index(&self, dim: &str) -> Result<usize> {
        self.dimensions
            .iter()
            .position(|d| d == dim)
            .ok_or_else(|| Error::arg(format!("unknown dimension {dim:?}")))
    }

    /// Total register size: one input and one output qubit per dimension.
    pub fn num_qubits(&self) -> usize {
        2 * self.dimensions.len()
    }

    pub fn input_qubit(&self, dim: &str) -> Result<usize> {
        self.dim_index(dim)
    }

    pub fn output_qubit(&self, dim: &str) -> Result<usize> {
        Ok(self.dimensions.len() + self.dim_index(dim)?)
    }

    fn noun(&self, name: &str) -> Result<(&str, &[String])> {
        lookup(&self.nouns, name)
            .map(|(k, v)| (k, v.as_slice()))
            .ok_or_else(|| Error::arg(format!("unknown noun {name:?}")))
    }

    fn verb(&self, name: &str) -> Result<(&str, &[(String, String)])> {
        lookup(&self.verbs, name)
            .map(|(k, v)| (k, v.as_slice()))
            .ok_or_else(|| Error::arg(format!("unknown verb {name:?}")))
    }
}

// Exact key first, then a case-insensitive match.
fn lookup<'a, V>(map: &'a BTreeMap<String, V>, name: &str) -> Option<(&'a str, &'a V)> {
    map.get_key_value(name)
        .or_else(|| map.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)))
        .map(|(k, v)| (k.as_str(), v))
}

/// X on each of the noun's active input-dimension qubits.
pub fn noun_circuit(noun: &str, model: &DomainModel) -> Result<Circuit> {
    let (_, dims) = model.noun(noun)?;
    let mut c = Circuit::new(model.num_qubits())?;
    for d in dims {
        c.x(model.input_qubit(d)?)?;
    }
    Ok(c)
}

/// One CNOT from input dimension to output dimension per verb mapping.
pub fn verb_circuit(verb: &str, model: &DomainModel) -> Result<Circuit> {
    let (_, pairs) = model.verb(verb)?;
    let mut c = Circuit::new(model.num_qubits())?;
    for (from, to) in pairs {
        c.cnot(model.input_qubit(from)?, model.output_qubit(to)?)?;
    }
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sense {
    /// Winning output dimension.
    pub output: String,
    /// Input dimensions of the noun that the verb carried into that output.
    pub via: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionResult {
    pub verb: String,
    pub noun: String,
    /// `P(=1)` of every output-dimension qubit, in dimension order.
    pub outputs: Vec<(String, f64)>,
    /// `P(=1)` of every input-dimension qubit after the verb has run.
    pub inputs: Vec<(String, f64)>,
    /// `None` when the verb activates nothing for this noun.
    pub sense: Option<Sense>,
}

impl CompositionResult {
    pub fn output(&self, dim: &str) -> Option<f64> {
        self.outputs.iter().find(|(d, _)| d == dim).map(|(_, p)| *p)
    }

    pub fn is_no_reading(&self) -> bool {
        self.sense.is_none()
    }
}

const ACTIVE: f64 = 1e-12;

pub fn compose(verb: &str, noun: &str, model: &DomainModel) -> Result<CompositionResult> {
    let (verb_name, pairs) = model.verb(verb)?;
    let (noun_name, _) = model.noun(noun)?;
    let mut circuit = noun_circuit(noun, model)?;
    circuit.append(&verb_circuit(verb, model)?)?;
    let state = run_circuit(&circuit, None)?;

    let mut outputs = Vec::with_capacity(model.dimensions.len());
    let mut inputs = Vec::with_capacity(model.dimensions.len());
    for d in &model.dimensions {
        outputs.push((d.clone(), state.marginal_probability_one(model.output_qubit(d)?)?));
        inputs.push((d.clone(), state.marginal_probability_one(model.input_qubit(d)?)?));
    }

    // Argmax over the verb's own output dimensions; first declared wins ties.
    let mut best: Option<(&str, f64)> = None;
    for (_, to) in pairs {
        let p = outputs[model.dim_index(to)?].1;
        if p > ACTIVE && best.is_none_or(|(_, b)| p > b) {
            best = Some((to.as_str(), p));
        }
    }
    let sense = best.map(|(out, _)| Sense {
        output: out.to_string(),
        via: pairs
            .iter()
            .filter(|(from, to)| {
                to == out && inputs[model.dim_index(from).unwrap()].1 > ACTIVE
            })
            .map(|(from, _)| from.clone())
            .collect(),
    });

    Ok(CompositionResult {
        verb: verb_name.to_string(),
        noun: noun_name.to_string(),
        outputs,
        inputs,
        sense,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;

    #[test]
    fn java_sets_place_and_tech() {
        let m = DomainModel::toy();
        let c = noun_circuit("Java", &m).unwrap();
        let targets: Vec<usize> = c
            .gates()
            .iter()
            .map(|g| match g {
                Gate::Single { target, .. } => *target,
                _ => panic!("noun fragment has only X gates"),
            })
            .collect();
        assert_eq!(targets, vec![m.input_qubit("place").unwrap(), m.input_qubit("tech").unwrap()]);
        assert_eq!(noun_circuit("Borneo", &m).unwrap().len(), 1);
    }

    #[test]
    fn empty_noun_gives_empty_fragment() {
        let mut m = DomainModel::toy();
        m.nouns.insert("nothing".into(), vec![]);
        assert!(noun_circuit("nothing", &m).unwrap().is_empty());
    }

    #[test]
    fn verb_fragments() {
        let m = DomainModel::toy();
        let visit = verb_circuit("visit", &m).unwrap();
        assert_eq!(
            visit.gates(),
            &[Gate::Cnot { control: 0, target: 4 + 1 }]
        );
        let learn = verb_circuit("learn", &m).unwrap();
        assert_eq!(learn.gates(), &[Gate::Cnot { control: 2, target: 4 + 3 }]);

        let mut m2 = m.clone();
        m2.verbs.insert(
            "use".into(),
            vec![("place".into(), "event".into()), ("tech".into(), "skill".into())],
        );
        assert_eq!(verb_circuit("use", &m2).unwrap().len(), 2);
    }

    #[test]
    fn visit_and_learn_java() {
        let m = DomainModel::toy();
        let r = compose("visit", "Java", &m).unwrap();
        assert_eq!(r.output("event"), Some(1.0));
        assert_eq!(r.output("skill"), Some(0.0));
        let s = r.sense.unwrap();
        assert_eq!(s.output, "event");
        assert_eq!(s.via, vec!["place".to_string()]);

        let r = compose("learn", "Java", &m).unwrap();
        assert_eq!(r.output("skill"), Some(1.0));
        assert_eq!(r.output("event"), Some(0.0));
        assert_eq!(r.sense.unwrap().via, vec!["tech".to_string()]);
    }

    #[test]
    fn visit_cpp_has_no_reading() {
        let r = compose("visit", "C++", &DomainModel::toy()).unwrap();
        assert!(r.is_no_reading());
        assert!(r.outputs.iter().all(|(_, p)| *p == 0.0));
    }

    #[test]
    fn lookup_ignores_case() {
        let r = compose("Visit", "java", &DomainModel::toy()).unwrap();
        assert_eq!(r.noun, "Java");
        assert_eq!(r.verb, "visit");
    }

    #[test]
    fn unknown_words_and_bad_models() {
        let m = DomainModel::toy();
        assert!(compose("eat", "Java", &m).is_err());
        assert!(compose("visit", "Paris", &m).is_err());
        let bad = r#"{"dimensions":["a"],"nouns":{"x":["b"]},"verbs":{}}"#;
        assert!(DomainModel::from_json(bad.as_bytes()).is_err());
        let self_map = r#"{"dimensions":["a","b"],"nouns":{},"verbs":{"v":[["a","a"]]}}"#;
        assert!(DomainModel::from_json(self_map.as_bytes()).is_err());
        let unknown_key = r#"{"dimensions":["a"],"nouns":{},"verbs":{},"extra":1}"#;
        assert!(DomainModel::from_json(unknown_key.as_bytes()).is_err());
    }
}
