//! Header-less CSV datasets: each row is `label,feat1,...,featd` with the
//! label in {-1, +1}.

use std::path::Path;

use page_core::problems::NonconvexLogistic;
use page_core::Vector;

use crate::error::{HarnessError, Result};

pub struct Dataset {
    pub features: Vec<Vector>,
    pub labels: Vec<f64>,
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|source| HarnessError::Csv { path: path.into(), source })?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|source| HarnessError::Csv { path: path.into(), source })?;
        let values = record
            .iter()
            .map(|field| field.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| HarnessError::invalid(format!("{} row {}: {e}", path.display(), row + 1)))?;
        let (label, feats) = values
            .split_first()
            .ok_or_else(|| HarnessError::invalid(format!("{} row {}: empty", path.display(), row + 1)))?;
        if *label != 1.0 && *label != -1.0 {
            return Err(HarnessError::invalid(format!(
                "{} row {}: label must be -1 or +1, got {label}",
                path.display(),
                row + 1
            )));
        }
        let v = Vector::new(feats.to_vec())
            .map_err(|e| HarnessError::invalid(format!("{} row {}: {e}", path.display(), row + 1)))?;
        labels.push(*label);
        features.push(v);
    }
    if features.is_empty() {
        return Err(HarnessError::invalid(format!("{}: no rows", path.display())));
    }
    Ok(Dataset { features, labels })
}

pub fn load_logistic(path: &Path, lambda: f64) -> Result<NonconvexLogistic> {
    let data = read_dataset(path)?;
    Ok(NonconvexLogistic::new(data.features, data.labels, lambda)?)
}
