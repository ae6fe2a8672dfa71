//! JSON matrix documents.
//!
//! Floats are written in shortest round-trip form, so `read(write(d)) == d`
//! bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrices::ThetaVector;
use crate::matrix::SymMatrix;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaVector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub labels: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDocument {
    pub schema: u32,
    pub order: usize,
    /// Row-major upper triangle, diagonal included.
    pub entries: Vec<f64>,
    #[serde(default)]
    pub metadata: Metadata,
}

impl MatrixDocument {
    pub fn new(matrix: &SymMatrix, metadata: Metadata) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            order: matrix.order(),
            entries: matrix.upper().to_vec(),
            metadata,
        }
    }

    pub fn matrix(&self) -> Result<SymMatrix> {
        SymMatrix::from_upper(self.order, self.entries.clone())
    }

    fn check(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Document(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                self.schema
            )));
        }
        let want = self.order * (self.order + 1) / 2;
        if self.order == 0 || self.entries.len() != want {
            return Err(Error::Document(format!(
                "order {} needs {want} entries, found {}",
                self.order,
                self.entries.len()
            )));
        }
        if self.entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Document("entries must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Self = serde_json::from_str(text)?;
        doc.check()?;
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents always serialize")
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}
