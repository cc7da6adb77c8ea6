//! TOML model files.
//!
//! ```toml
//! M = 2
//! K = 2
//! L = 10000.0
//! prior = [0.5, 0.5]
//!
//! [kernel]
//! type = "finite"
//! # rows[i][a][z] = q_i^a(z)
//! rows = [[[0.9, 0.1], [0.4, 0.6]],
//!         [[0.4, 0.6], [0.9, 0.1]]]
//! ```
//!
//! Gaussian kernels replace `rows` by `gaussian[i][a] = [mean, variance]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Density, KernelType};
use crate::Model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub penalty: f64,
    pub prior: Vec<f64>,
    pub kernel: KernelSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(rename = "type")]
    pub kind: KernelType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussian: Option<Vec<Vec<[f64; 2]>>>,
}

impl ModelFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.message().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model files always serialize")
    }

    pub fn to_model(&self) -> Result<Model> {
        let shape = |rows: usize, cols: Vec<usize>| -> Result<()> {
            if rows != self.m {
                return Err(Error::Validation(vec![format!(
                    "kernel lists {rows} hypotheses but M = {}",
                    self.m
                )]));
            }
            if let Some(bad) = cols.into_iter().find(|&c| c != self.k) {
                return Err(Error::Validation(vec![format!(
                    "kernel lists {bad} actions for some hypothesis but K = {}",
                    self.k
                )]));
            }
            Ok(())
        };
        if self.prior.len() != self.m {
            return Err(Error::Validation(vec![format!(
                "prior has {} entries but M = {}",
                self.prior.len(),
                self.m
            )]));
        }
        match (self.kernel.kind, &self.kernel.rows, &self.kernel.gaussian) {
            (KernelType::Finite, Some(rows), None) => {
                shape(rows.len(), rows.iter().map(Vec::len).collect())?;
                Model::finite(rows.clone(), self.prior.clone(), self.penalty)
            }
            (KernelType::Gaussian, None, Some(params)) => {
                shape(params.len(), params.iter().map(Vec::len).collect())?;
                let params = params
                    .iter()
                    .map(|row| row.iter().map(|[mean, var]| (*mean, *var)).collect())
                    .collect();
                Model::gaussian(params, self.prior.clone(), self.penalty)
            }
            (KernelType::Finite, _, _) => Err(Error::Validation(vec![
                "finite kernels need `kernel.rows` and no `kernel.gaussian`".into(),
            ])),
            (KernelType::Gaussian, _, _) => Err(Error::Validation(vec![
                "gaussian kernels need `kernel.gaussian` and no `kernel.rows`".into(),
            ])),
        }
    }

    pub fn from_model(model: &Model) -> Self {
        let m = model.num_hypotheses();
        let k = model.num_actions();
        let densities = |i: usize| (0..k).map(move |a| model.kernel(i, a).expect("index in range"));
        let kernel = match model.kernel_type() {
            KernelType::Finite => KernelSection {
                kind: KernelType::Finite,
                rows: Some(
                    (0..m)
                        .map(|i| {
                            densities(i)
                                .map(|d| match d {
                                    Density::Finite(row) => row.clone(),
                                    Density::Gaussian { .. } => unreachable!("finite model"),
                                })
                                .collect()
                        })
                        .collect(),
                ),
                gaussian: None,
            },
            KernelType::Gaussian => KernelSection {
                kind: KernelType::Gaussian,
                rows: None,
                gaussian: Some(
                    (0..m)
                        .map(|i| {
                            densities(i)
                                .map(|d| match d {
                                    Density::Gaussian { mean, variance } => [*mean, *variance],
                                    Density::Finite(_) => unreachable!("gaussian model"),
                                })
                                .collect()
                        })
                        .collect(),
                ),
            },
        };
        Self {
            m,
            k,
            penalty: model.penalty(),
            prior: model.prior().to_vec(),
            kernel,
        }
    }
}

/// Parses a model file's text into a validated model.
pub fn parse_model(text: &str) -> Result<Model> {
    ModelFile::parse(text)?.to_model()
}

/// Renders a model as a model file.
pub fn model_to_toml(model: &Model) -> String {
    ModelFile::from_model(model).to_toml()
}
