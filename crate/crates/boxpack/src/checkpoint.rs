//! Model checkpoints: a versioned JSON container of named, shaped
//! tensors plus optional trainer state.
//!
//! Floats are written in shortest round-trip form, so save followed by
//! load reproduces every parameter bit for bit. Non-finite values are
//! rejected on both ends.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::optim::Adam;
use crate::policy::{ActorParams, CriticTail, EncoderParams, Model, ModelConfig};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;

/// A named parameter block with its shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    fn from_mat(m: &Mat) -> Self {
        Self { shape: vec![m.rows, m.cols], data: m.data.clone() }
    }

    fn from_vec(v: &[f64]) -> Self {
        Self { shape: vec![v.len()], data: v.to_vec() }
    }

    fn into_mat(self, name: &str) -> Result<Mat> {
        if self.shape.len() != 2 || self.shape[0] * self.shape[1] != self.data.len() {
            return Err(Error::Checkpoint(format!("tensor {name} is not a valid matrix")));
        }
        Ok(Mat { rows: self.shape[0], cols: self.shape[1], data: self.data })
    }

    fn into_vec(self, name: &str) -> Result<Vec<f64>> {
        if self.shape.len() != 1 || self.shape[0] != self.data.len() {
            return Err(Error::Checkpoint(format!("tensor {name} is not a valid vector")));
        }
        Ok(self.data)
    }
}

/// Optimizer and progress state stored alongside the model so training
/// resumes exactly where it stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainerState {
    pub adam_actor: Adam,
    pub adam_critic: Adam,
    /// Completed epochs.
    pub epochs_done: usize,
    /// Optimizer steps taken, actor and critic counted separately.
    pub updates_done: u64,
}

/// On-disk checkpoint layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ModelConfig,
    pub tensors: BTreeMap<String, Tensor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trainer: Option<TrainerState>,
}

impl Checkpoint {
    pub fn from_model(model: &Model, trainer: Option<TrainerState>) -> Self {
        let a = &model.actor;
        let c = &model.critic;
        let mut tensors = BTreeMap::new();
        tensors.insert("encoder.w".into(), Tensor::from_mat(&a.encoder.w));
        tensors.insert("encoder.b".into(), Tensor::from_vec(&a.encoder.b));
        tensors.insert("gru.w_z".into(), Tensor::from_mat(&a.gru.w_z));
        tensors.insert("gru.u_z".into(), Tensor::from_mat(&a.gru.u_z));
        tensors.insert("gru.b_z".into(), Tensor::from_vec(&a.gru.b_z));
        tensors.insert("gru.w_r".into(), Tensor::from_mat(&a.gru.w_r));
        tensors.insert("gru.u_r".into(), Tensor::from_mat(&a.gru.u_r));
        tensors.insert("gru.b_r".into(), Tensor::from_vec(&a.gru.b_r));
        tensors.insert("gru.w_n".into(), Tensor::from_mat(&a.gru.w_n));
        tensors.insert("gru.u_n".into(), Tensor::from_mat(&a.gru.u_n));
        tensors.insert("gru.b_n".into(), Tensor::from_vec(&a.gru.b_n));
        tensors.insert("attention.w1".into(), Tensor::from_mat(&a.attention.w1));
        tensors.insert("attention.w2".into(), Tensor::from_mat(&a.attention.w2));
        tensors.insert("attention.v".into(), Tensor::from_vec(&a.attention.v));
        tensors.insert("h0".into(), Tensor::from_vec(&a.h0));
        tensors.insert("critic.w2".into(), Tensor::from_mat(&c.w2));
        tensors.insert("critic.b2".into(), Tensor::from_vec(&c.b2));
        tensors.insert("critic.w3".into(), Tensor::from_mat(&c.w3));
        tensors.insert("critic.b3".into(), Tensor::from_vec(&c.b3));
        tensors.insert("critic.w4".into(), Tensor::from_mat(&c.w4));
        tensors.insert("critic.b4".into(), Tensor::from_vec(&c.b4));
        Self { version: CHECKPOINT_VERSION, config: model.config, tensors, trainer }
    }

    pub fn into_model(mut self) -> Result<(Model, Option<TrainerState>)> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {})",
                self.version, CHECKPOINT_VERSION
            )));
        }
        self.config.validate().map_err(|e| Error::Checkpoint(e.to_string()))?;
        let (d, m) = (self.config.d_h, self.config.m);
        let mut mat = |name: &str, rows: usize, cols: usize| -> Result<Mat> {
            let t = self
                .tensors
                .remove(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
            let mat = t.into_mat(name)?;
            if mat.rows != rows || mat.cols != cols {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} has shape {}x{}, expected {rows}x{cols}",
                    mat.rows, mat.cols
                )));
            }
            Ok(mat)
        };
        let encoder_w = mat("encoder.w", d, m)?;
        let gru_w_z = mat("gru.w_z", d, d)?;
        let gru_u_z = mat("gru.u_z", d, d)?;
        let gru_w_r = mat("gru.w_r", d, d)?;
        let gru_u_r = mat("gru.u_r", d, d)?;
        let gru_w_n = mat("gru.w_n", d, d)?;
        let gru_u_n = mat("gru.u_n", d, d)?;
        let att_w1 = mat("attention.w1", d, d)?;
        let att_w2 = mat("attention.w2", d, d)?;
        let critic_w2 = mat("critic.w2", d, d)?;
        let critic_w3 = mat("critic.w3", d, d)?;
        let critic_w4 = mat("critic.w4", 1, d)?;
        let mut vec = |name: &str, len: usize| -> Result<Vec<f64>> {
            let t = self
                .tensors
                .remove(name)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
            let v = t.into_vec(name)?;
            if v.len() != len {
                return Err(Error::Checkpoint(format!(
                    "tensor {name} has length {}, expected {len}",
                    v.len()
                )));
            }
            Ok(v)
        };
        let model = Model {
            config: self.config,
            actor: ActorParams {
                encoder: EncoderParams { w: encoder_w, b: vec("encoder.b", d)? },
                gru: crate::policy::GruParams {
                    w_z: gru_w_z,
                    u_z: gru_u_z,
                    b_z: vec("gru.b_z", d)?,
                    w_r: gru_w_r,
                    u_r: gru_u_r,
                    b_r: vec("gru.b_r", d)?,
                    w_n: gru_w_n,
                    u_n: gru_u_n,
                    b_n: vec("gru.b_n", d)?,
                },
                attention: crate::policy::AttentionParams {
                    w1: att_w1,
                    w2: att_w2,
                    v: vec("attention.v", d)?,
                },
                h0: vec("h0", d)?,
            },
            critic: CriticTail {
                w2: critic_w2,
                b2: vec("critic.b2", d)?,
                w3: critic_w3,
                b3: vec("critic.b3", d)?,
                w4: critic_w4,
                b4: vec("critic.b4", 1)?,
            },
        };
        if !self.tensors.is_empty() {
            let names: Vec<&String> = self.tensors.keys().collect();
            return Err(Error::Checkpoint(format!("unexpected tensors in checkpoint: {names:?}")));
        }
        let all_finite = crate::grad::flatten_actor(&model.actor)
            .iter()
            .chain(crate::grad::flatten_critic(&model.actor.encoder, &model.critic).iter())
            .all(|x| x.is_finite());
        if !all_finite {
            return Err(Error::Checkpoint("checkpoint contains non-finite parameters".into()));
        }
        Ok((model, self.trainer))
    }
}

/// Serializes and writes a checkpoint atomically.
pub fn save(path: &Path, model: &Model, trainer: Option<TrainerState>) -> Result<()> {
    let ckpt = Checkpoint::from_model(model, trainer);
    let json = serde_json::to_string(&ckpt)
        .map_err(|e| Error::Checkpoint(format!("cannot serialize checkpoint: {e}")))?;
    crate::dataset::atomic_write(path, json.as_bytes())
}

/// Reads and validates a checkpoint file.
pub fn load(path: &Path) -> Result<(Model, Option<TrainerState>)> {
    let text = crate::dataset::read_named(path)?;
    let ckpt: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::Checkpoint(format!("cannot parse checkpoint: {e}")))?;
    ckpt.into_model()
}
