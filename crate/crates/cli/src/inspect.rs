//! Ad-hoc inspection of a lattice law stored as JSON.

use std::path::Path;

use serde::Serialize;

use entropic_clt::divergence::{kl_to_quantized_gaussian, DivergenceReport};
use entropic_clt::LatticePmf;

use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PmfSummary {
    pub offset: f64,
    pub spacing: f64,
    pub k_min: i64,
    pub cells: usize,
    pub mean: f64,
    pub variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entropy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kl_gaussian: Option<DivergenceReport>,
}

pub fn read_pmf(path: &Path) -> CliResult<LatticePmf> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::ConfigInvalid(format!("{}: {e}", path.display())))
}

pub fn summarize(p: &LatticePmf, entropy: bool, kl_gaussian: bool) -> CliResult<PmfSummary> {
    Ok(PmfSummary {
        offset: p.offset(),
        spacing: p.spacing(),
        k_min: p.k_min(),
        cells: p.len(),
        mean: p.mean(),
        variance: p.variance(),
        entropy: entropy.then(|| p.shannon_entropy()),
        kl_gaussian: if kl_gaussian {
            Some(kl_to_quantized_gaussian(p)?)
        } else {
            None
        },
    })
}
