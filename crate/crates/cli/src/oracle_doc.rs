//! JSON input for the tree-of-balls oracle: a labelled point set with its
//! valuation matrix, an optional factored polynomial and an optional
//! polynomial map given through its fibers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use skelcov_core::pone_oracle::{FactoredPolynomial, PolynomialMap, UltrametricPointSet};
use skelcov_core::rational::{parse_ext, parse_q};
use skelcov_core::Q;

use crate::document::{syntax_message, DocError};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialSpec {
    /// Valuation of the leading coefficient.
    pub lead: String,
    /// Root label -> multiplicity.
    #[serde(default)]
    pub roots: BTreeMap<String, u32>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub lead: String,
    #[serde(default = "one")]
    pub insep: u32,
    #[serde(default)]
    pub source_base: Option<String>,
    /// Target label -> (source label -> multiplicity).
    pub fibers: BTreeMap<String, BTreeMap<String, u32>>,
}

fn one() -> u32 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    #[serde(default)]
    pub residue_char: u32,
    pub points: Vec<String>,
    /// Row-major valuation matrix, `"inf"` on the diagonal.
    pub val: Vec<Vec<String>>,
    #[serde(default)]
    pub base: Option<String>,
    #[serde(default)]
    pub polynomial: Option<PolynomialSpec>,
    #[serde(default)]
    pub map: Option<MapSpec>,
}

fn err(field: impl Into<String>, msg: impl ToString) -> DocError {
    DocError::Field { field: field.into(), msg: msg.to_string() }
}

pub fn rational(field: &str, text: &str) -> Result<Q, DocError> {
    parse_q(text).map_err(|e| err(field, e))
}

impl OracleSpec {
    pub fn parse(text: &str) -> Result<Self, DocError> {
        serde_json::from_str(text).map_err(|e| DocError::Syntax { line: e.line(), column: e.column(), msg: syntax_message(&e) })
    }

    pub fn point_set(&self) -> Result<UltrametricPointSet, DocError> {
        let mut val = Vec::with_capacity(self.val.len());
        for (i, row) in self.val.iter().enumerate() {
            let parsed = row
                .iter()
                .enumerate()
                .map(|(j, x)| parse_ext(x).map_err(|e| err(format!("val[{i}][{j}]"), e)))
                .collect::<Result<Vec<_>, _>>()?;
            val.push(parsed);
        }
        UltrametricPointSet::new(self.points.clone(), val).map_err(|e| err("val", e))
    }

    fn index(set: &UltrametricPointSet, field: &str, label: &str) -> Result<usize, DocError> {
        set.index(label).ok_or_else(|| err(format!("{field}.{label}"), "unknown point"))
    }

    pub fn base(&self, set: &UltrametricPointSet) -> Result<Q, DocError> {
        match &self.base {
            Some(b) => rational("base", b),
            None => Ok(set.min_join()),
        }
    }

    pub fn polynomial(&self, set: &UltrametricPointSet) -> Result<FactoredPolynomial, DocError> {
        let p = self.polynomial.as_ref().ok_or_else(|| err("polynomial", "missing"))?;
        let roots = p
            .roots
            .iter()
            .map(|(l, &m)| Ok((Self::index(set, "polynomial.roots", l)?, m)))
            .collect::<Result<Vec<_>, DocError>>()?;
        Ok(FactoredPolynomial { leading_valuation: rational("polynomial.lead", &p.lead)?, roots })
    }

    pub fn map(&self, set: &UltrametricPointSet) -> Result<PolynomialMap, DocError> {
        let m = self.map.as_ref().ok_or_else(|| err("map", "missing"))?;
        let mut fibers = Vec::with_capacity(m.fibers.len());
        for (y, pts) in &m.fibers {
            let field = format!("map.fibers.{y}");
            let fiber = pts.iter().map(|(l, &k)| Ok((Self::index(set, &field, l)?, k))).collect::<Result<Vec<_>, DocError>>()?;
            fibers.push((y.clone(), fiber));
        }
        let mut map = PolynomialMap::new(set.clone(), rational("map.lead", &m.lead)?, fibers);
        map.insep = m.insep;
        map.residue_char = self.residue_char;
        map.source_base = m.source_base.as_deref().map(|b| rational("map.source_base", b)).transpose()?;
        Ok(map)
    }
}
