//! JSON form of scheme parameters.
//!
//! A correlation-preserving file has `input_chain`, `relay_map` and
//! `compressor`; a compress-and-forward file has `input_law`, `relay_law` and
//! `compressor`. Both may carry `yhat_size`, which must then match the
//! compressor rows.

use serde::{Deserialize, Serialize};

use crate::channel::normalize_slice;
use crate::error::{Error, Result};
use crate::process::NewSchemeParams;
use crate::rates::CafParams;

/// Upper bound on the number of probabilities accepted from one file.
pub const MAX_PARAM_ENTRIES: usize = 1 << 20;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yhat_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_chain: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relay_map: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input_law: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relay_law: Option<Vec<f64>>,
    pub compressor: Vec<Vec<Vec<f64>>>,
}

/// Parameters of either scheme as read from a file.
#[derive(Debug, Clone, PartialEq)]
pub enum SchemeParams {
    New(NewSchemeParams),
    Caf(CafParams),
}

impl SchemeParams {
    /// Compress-and-forward parameters become memoryless scheme parameters.
    pub fn into_new_scheme(self) -> NewSchemeParams {
        match self {
            SchemeParams::New(p) => p,
            SchemeParams::Caf(p) => p.lift(),
        }
    }

    pub fn to_document(&self) -> ParamsDoc {
        match self {
            SchemeParams::New(p) => ParamsDoc {
                yhat_size: Some(p.yhat_alpha.size),
                input_chain: Some(p.input_chain_rows()),
                relay_map: Some(p.relay_map_rows()),
                compressor: p.compressor_rows(),
                ..ParamsDoc::default()
            },
            SchemeParams::Caf(p) => ParamsDoc {
                yhat_size: Some(p.yhat_alpha.size),
                input_law: Some(p.input_law.clone()),
                relay_law: Some(p.relay_law.clone()),
                compressor: p.compressor_rows(),
                ..ParamsDoc::default()
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("parameters serialize")
    }
}

fn normalize_rows(rows: &mut [Vec<f64>], what: &str) -> Result<()> {
    for (i, row) in rows.iter_mut().enumerate() {
        normalize_slice(row, &format!("{what} row {i}"))?;
    }
    Ok(())
}

fn count_entries(doc: &ParamsDoc) -> usize {
    let two = |v: &Option<Vec<Vec<f64>>>| v.as_ref().map_or(0, |r| r.iter().map(Vec::len).sum());
    let one = |v: &Option<Vec<f64>>| v.as_ref().map_or(0, Vec::len);
    let comp: usize = doc.compressor.iter().flatten().map(Vec::len).sum();
    two(&doc.input_chain) + two(&doc.relay_map) + one(&doc.input_law) + one(&doc.relay_law) + comp
}

pub fn params_from_document(doc: &ParamsDoc) -> Result<SchemeParams> {
    if count_entries(doc) > MAX_PARAM_ENTRIES {
        return Err(Error::Validation("parameter tables too large".into()));
    }
    let mut compressor = doc.compressor.clone();
    for (y1, by_x1) in compressor.iter_mut().enumerate() {
        normalize_rows(by_x1, &format!("compressor[{y1}]"))?;
    }
    let nyh = compressor
        .first()
        .and_then(|r| r.first())
        .map(Vec::len)
        .ok_or_else(|| Error::Validation("compressor is empty".into()))?;
    if compressor.iter().flatten().any(|r| r.len() != nyh) {
        return Err(Error::Validation("compressor rows differ in length".into()));
    }
    if let Some(k) = doc.yhat_size {
        if k != nyh {
            return Err(Error::Validation(format!(
                "yhat_size {k} does not match compressor rows of length {nyh}"
            )));
        }
    }
    let as_validation = |e: Error| match e {
        Error::Shape(m) => Error::Validation(m),
        other => other,
    };
    match (&doc.input_chain, &doc.relay_map, &doc.input_law, &doc.relay_law) {
        (Some(chain), Some(relay), None, None) => {
            let mut chain = chain.clone();
            let mut relay = relay.clone();
            normalize_rows(&mut chain, "input_chain")?;
            normalize_rows(&mut relay, "relay_map")?;
            if chain.iter().any(|r| r.len() != chain.len()) {
                return Err(Error::Validation("input_chain must be square".into()));
            }
            if relay.len() != nyh {
                return Err(Error::Validation(format!(
                    "relay_map has {} rows but |Ŷ1| = {nyh}",
                    relay.len()
                )));
            }
            if relay.iter().any(|r| r.len() != relay[0].len()) {
                return Err(Error::Validation("relay_map rows differ in length".into()));
            }
            NewSchemeParams::from_rows(&chain, &relay, &compressor)
                .map(SchemeParams::New)
                .map_err(as_validation)
        }
        (None, None, Some(input), Some(relay)) => {
            let mut input = input.clone();
            let mut relay = relay.clone();
            normalize_slice(&mut input, "input_law")?;
            normalize_slice(&mut relay, "relay_law")?;
            CafParams::from_rows(&input, &relay, &compressor)
                .map(SchemeParams::Caf)
                .map_err(as_validation)
        }
        _ => Err(Error::Validation(
            "expected either input_chain + relay_map or input_law + relay_law".into(),
        )),
    }
}

pub fn load_params(text: &str) -> Result<SchemeParams> {
    let doc: ParamsDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("parameter document: {e}")))?;
    params_from_document(&doc)
}

/// Reads either format; compress-and-forward files are lifted.
pub fn load_new_scheme_params(text: &str) -> Result<NewSchemeParams> {
    load_params(text).map(SchemeParams::into_new_scheme)
}

pub fn load_caf_params(text: &str) -> Result<CafParams> {
    match load_params(text)? {
        SchemeParams::Caf(p) => Ok(p),
        SchemeParams::New(_) => Err(Error::Validation(
            "compress-and-forward needs input_law and relay_law, not input_chain and relay_map".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NEW: &str = r#"{
        "yhat_size": 2,
        "input_chain": [[0.9, 0.1], [0.2, 0.8]],
        "relay_map": [[0.5, 0.5], [0.3, 0.7]],
        "compressor": [[[1, 0], [0.6, 0.4]], [[0.25, 0.75], [0, 1]]]
    }"#;

    const CAF: &str = r#"{
        "input_law": [0.5, 0.5],
        "relay_law": [0.3, 0.7],
        "compressor": [[[1, 0], [0.6, 0.4]], [[0.25, 0.75], [0, 1]]]
    }"#;

    #[test]
    fn both_formats_load() {
        let p = load_new_scheme_params(NEW).unwrap();
        assert_eq!(p.relay_map.row(1), &[0.3, 0.7]);
        assert_eq!(p.compressor.get(2, 1), 0.75);
        let c = load_caf_params(CAF).unwrap();
        assert_eq!(c.relay_law, vec![0.3, 0.7]);
        assert!(load_new_scheme_params(CAF).unwrap().is_memoryless());
        assert!(matches!(load_caf_params(NEW), Err(Error::Validation(_))));
    }

    #[test]
    fn round_trip_is_exact() {
        let p = load_params(NEW).unwrap();
        assert_eq!(load_params(&p.to_json()).unwrap(), p);
        let c = load_params(CAF).unwrap();
        assert_eq!(load_params(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(matches!(load_params("{"), Err(Error::Parse(_))));
        let wrong_size = NEW.replacen("\"yhat_size\": 2", "\"yhat_size\": 3", 1);
        assert!(matches!(load_params(&wrong_size), Err(Error::Validation(_))));
        let unnormalized = NEW.replacen("[0.9, 0.1]", "[0.9, 0.2]", 1);
        assert!(matches!(load_params(&unnormalized), Err(Error::Validation(_))));
        let mixed = NEW.replacen("\"relay_map\"", "\"relay_law\"", 1);
        assert!(load_params(&mixed).is_err());
        let extra = CAF.replacen("\"input_law\"", "\"bogus\": 1, \"input_law\"", 1);
        assert!(matches!(load_params(&extra), Err(Error::Parse(_))));
    }
}
