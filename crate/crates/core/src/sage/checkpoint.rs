use std::io::{Read, Write};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::model::{ModelSpec, SageModel};
use super::sample::SampleFanout;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Tensor {
    rows: usize,
    cols: usize,
    /// Row-major.
    data: Vec<f64>,
}

/// JSON container for a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub spec: ModelSpec,
    pub fanout: SampleFanout,
    tensors: Vec<Tensor>,
}

impl Checkpoint {
    pub fn new(model: &SageModel, fanout: &SampleFanout) -> Self {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            spec: model.spec.clone(),
            fanout: fanout.clone(),
            tensors: model
                .params
                .iter()
                .map(|p| Tensor {
                    rows: p.nrows(),
                    cols: p.ncols(),
                    data: p.iter().copied().collect(),
                })
                .collect(),
        }
    }

    pub fn into_model(self) -> Result<SageModel> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!("unsupported checkpoint version {}", self.version)));
        }
        self.spec.validate()?;
        let shapes = self.spec.shapes();
        if shapes.len() != self.tensors.len() {
            return Err(Error::Dimension(format!(
                "checkpoint holds {} tensors, spec needs {}",
                self.tensors.len(),
                shapes.len()
            )));
        }
        let params = self
            .tensors
            .into_iter()
            .zip(shapes)
            .map(|(t, shape)| {
                if (t.rows, t.cols) != shape {
                    return Err(Error::Dimension(format!("tensor {}x{} where {shape:?} expected", t.rows, t.cols)));
                }
                Array2::from_shape_vec(shape, t.data).map_err(|e| Error::Dimension(e.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SageModel { spec: self.spec, params })
    }
}

pub fn save_checkpoint<W: Write>(model: &SageModel, fanout: &SampleFanout, w: W) -> Result<()> {
    serde_json::to_writer(w, &Checkpoint::new(model, fanout))?;
    Ok(())
}

pub fn load_checkpoint<R: Read>(r: R) -> Result<(SageModel, SampleFanout)> {
    let c: Checkpoint = serde_json::from_reader(r)?;
    let fanout = c.fanout.clone();
    Ok((c.into_model()?, fanout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::WeightKind;

    #[test]
    fn round_trip_preserves_every_bit() {
        let model = SageModel::new(ModelSpec::new(4, vec![3, 2], 5, WeightKind::Wmean2), 11).unwrap();
        let mut buf = Vec::new();
        save_checkpoint(&model, &SampleFanout::default(), &mut buf).unwrap();
        let (back, fanout) = load_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        assert_eq!(fanout, SampleFanout::default());
    }

    #[test]
    fn rejects_wrong_shapes() {
        let model = SageModel::new(ModelSpec::new(4, vec![3], 2, WeightKind::Uniform), 1).unwrap();
        let mut c = Checkpoint::new(&model, &SampleFanout(vec![2]));
        c.spec.input_dim = 5;
        assert!(c.clone().into_model().is_err());
        c.spec.input_dim = 4;
        c.version = 9;
        assert!(c.into_model().is_err());
    }
}
