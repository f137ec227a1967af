//! The JSON input document and the samples CSV it may reference.

use std::path::{Path, PathBuf};

use hierank::{
    Distribution, EffectModel, EmpiricalSamples, HierarchyQuestion, JointNormal, MarginalNormal,
    OutcomeDirection, SampleMatrix,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    pub schema_version: u32,
    pub direction: OutcomeDirection,
    pub treatments: Vec<TreatmentEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance: Option<Vec<Vec<f64>>>,
    /// CSV with a header of treatment names and one joint draw per row;
    /// relative paths resolve against the input file's directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub question: Option<QuestionBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentEntry {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuestionBlock {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
}

impl QuestionBlock {
    pub fn to_question(&self) -> Result<HierarchyQuestion> {
        Ok(HierarchyQuestion::from_parts(
            &self.kind,
            self.reference.as_deref(),
            self.threshold,
        )?)
    }
}

/// A parsed input together with the model it describes.
#[derive(Debug, Clone)]
pub struct LoadedInput {
    pub document: InputDocument,
    pub model: EffectModel,
    /// Hex SHA-256 of the input file bytes.
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load_input(path: &Path) -> Result<LoadedInput> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let document: InputDocument = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let model = build_model(&document, &base_dir)?;
    Ok(LoadedInput {
        document,
        model,
        digest: digest(&bytes),
    })
}

/// Turns a document into a validated model; exactly one distribution form
/// must be present.
pub fn build_model(doc: &InputDocument, base_dir: &Path) -> Result<EffectModel> {
    if doc.schema_version != SCHEMA_VERSION {
        return Err(CliError::Invalid(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    let names: Vec<String> = doc.treatments.iter().map(|t| t.name.clone()).collect();
    let all_means = doc.treatments.iter().all(|t| t.mean.is_some());
    let any_mean = doc.treatments.iter().any(|t| t.mean.is_some());
    let all_sds = doc.treatments.iter().all(|t| t.sd.is_some());
    let any_sd = doc.treatments.iter().any(|t| t.sd.is_some());

    let distribution = match (&doc.samples_file, &doc.covariance) {
        (Some(_), Some(_)) => {
            return Err(CliError::Invalid(
                "samples_file and covariance are mutually exclusive".into(),
            ))
        }
        (Some(file), None) => {
            if any_mean || any_sd {
                return Err(CliError::Invalid(
                    "treatments must carry only names when samples_file is given".into(),
                ));
            }
            let samples = read_samples(&resolve(base_dir, file), &names)?;
            Distribution::Empirical(EmpiricalSamples { samples })
        }
        (None, Some(cov)) => {
            if !all_means || any_sd {
                return Err(CliError::Invalid(
                    "with a covariance matrix every treatment needs a mean and no sd".into(),
                ));
            }
            Distribution::JointNormal(JointNormal {
                means: doc.treatments.iter().map(|t| t.mean.unwrap()).collect(),
                covariance: cov.clone(),
            })
        }
        (None, None) => {
            if !all_means || !all_sds {
                return Err(CliError::Invalid(
                    "every treatment needs a mean and an sd (or give covariance / samples_file)"
                        .into(),
                ));
            }
            Distribution::MarginalNormal(MarginalNormal {
                means: doc.treatments.iter().map(|t| t.mean.unwrap()).collect(),
                sds: doc.treatments.iter().map(|t| t.sd.unwrap()).collect(),
            })
        }
    };
    Ok(EffectModel::new(names, doc.direction, distribution)?)
}

fn resolve(base_dir: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_dir.join(p)
    }
}

/// Reads a samples CSV and reorders its columns to match `names`.
pub fn read_samples(path: &Path, names: &[String]) -> Result<SampleMatrix> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?
        .clone();
    let columns: Vec<usize> = names
        .iter()
        .map(|n| {
            header.iter().position(|h| h.trim() == n).ok_or_else(|| {
                CliError::Invalid(format!("{}: no column for treatment {n:?}", path.display()))
            })
        })
        .collect::<Result<_>>()?;
    if header.len() != names.len() {
        return Err(CliError::Invalid(format!(
            "{}: {} columns for {} treatments",
            path.display(),
            header.len(),
            names.len()
        )));
    }
    let mut data = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
        for (col, &src) in columns.iter().enumerate() {
            let cell = record.get(src).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| {
                CliError::Invalid(format!(
                    "{}: missing or non-numeric value {cell:?} at row {}, column {}",
                    path.display(),
                    row + 1,
                    names[col]
                ))
            })?;
            data.push(value);
        }
    }
    Ok(SampleMatrix::new(names.to_vec(), data)?)
}
