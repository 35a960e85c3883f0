// SPDX-License-Identifier: MIT OR Apache-2.0

//! JSON model files.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::model::{DensityRatioModel, ModelKind};
use super::train::DreConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// On-disk form of a [`DensityRatioModel`]. Parameters are written as `f64`
/// with round-trip precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: String,
    pub input_dim: usize,
    pub clamp_eps: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<DreConfig>,
    pub parameters: Vec<f64>,
}

impl ModelFile {
    pub fn from_model<F: Scalar>(model: &DensityRatioModel<F>, config: Option<&DreConfig>) -> Self {
        let (hidden, bandwidth, centers) = match model.kind() {
            ModelKind::FeedForward { hidden } => (Some(hidden.clone()), None, None),
            ModelKind::KernelBasis { centers, bandwidth } => (
                None,
                Some(bandwidth.as_f64()),
                Some(
                    centers
                        .rows()
                        .into_iter()
                        .map(|r| r.iter().map(|v| v.as_f64()).collect())
                        .collect(),
                ),
            ),
        };
        Self {
            kind: model.kind().name().to_string(),
            input_dim: model.input_dim(),
            clamp_eps: model.clamp_eps().as_f64(),
            hidden,
            bandwidth,
            centers,
            config: config.cloned(),
            parameters: model.parameters().iter().map(|p| p.as_f64()).collect(),
        }
    }

    pub fn into_model<F: Scalar>(self) -> Result<DensityRatioModel<F>> {
        let params: Vec<F> = self.parameters.iter().map(|&p| F::lit(p)).collect();
        let eps = F::lit(self.clamp_eps);
        match self.kind.as_str() {
            "feed_forward" => {
                let hidden = self
                    .hidden
                    .ok_or_else(|| Error::invalid("feed_forward model file lacks `hidden`"))?;
                DensityRatioModel::feed_forward(self.input_dim, hidden, params, eps)
            }
            "kernel" => {
                let rows = self
                    .centers
                    .ok_or_else(|| Error::invalid("kernel model file lacks `centers`"))?;
                let bandwidth = self
                    .bandwidth
                    .ok_or_else(|| Error::invalid("kernel model file lacks `bandwidth`"))?;
                let k = rows.len();
                let flat: Vec<F> = rows.iter().flatten().map(|&v| F::lit(v)).collect();
                let centers = Array2::from_shape_vec((k, self.input_dim), flat)
                    .map_err(|e| Error::invalid(format!("centers: {e}")))?;
                DensityRatioModel::kernel(centers, F::lit(bandwidth), params, eps)
            }
            other => Err(Error::invalid(format!("unknown model kind `{other}`"))),
        }
    }
}

pub fn save_model<F: Scalar>(
    model: &DensityRatioModel<F>,
    config: Option<&DreConfig>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let json = serde_json::to_string_pretty(&ModelFile::from_model(model, config))
        .map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model<F: Scalar>(path: impl AsRef<Path>) -> Result<DensityRatioModel<F>> {
    let text = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::Config {
        path: "<model>".into(),
        message: e.to_string(),
    })?;
    file.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dre::init_feed_forward;
    use crate::random::RandomSource;
    use ndarray::array;

    #[test]
    fn feed_forward_round_trips_exactly() {
        let m = init_feed_forward::<f64>(3, &[5, 4], 1e-6, &RandomSource::new(9)).unwrap();
        let json = serde_json::to_string(&ModelFile::from_model(&m, None)).unwrap();
        let back: DensityRatioModel<f64> = serde_json::from_str::<ModelFile>(&json)
            .unwrap()
            .into_model()
            .unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn kernel_round_trips_through_disk() {
        let m = DensityRatioModel::kernel(
            array![[0.5_f64, -1.25], [3.0, 0.1]],
            0.7,
            vec![0.1, -0.2, 0.3],
            1e-6,
        )
        .unwrap();
        let dir = std::env::temp_dir().join(format!("drecusum-model-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.json");
        save_model(&m, None, &path).unwrap();
        assert_eq!(load_model::<f64>(&path).unwrap(), m);
        std::fs::remove_dir_all(dir).ok();
    }
}
