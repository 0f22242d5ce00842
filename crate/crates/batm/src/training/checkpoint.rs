//! Checkpoint serialization.
//!
//! Layout: 4 magic bytes, format version (u32 LE), header length (u64 LE),
//! JSON header, then raw little-endian tensor payload in header-declared
//! order (parameters, then Adam first moments, then second moments).
//! Save/load round-trips are bit-exact within one dtype; loading across
//! dtypes converts explicitly and warns.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{AdditiveAttention, ClassifierParams, ModelParams};
use crate::num::{Dtype, Scalar};
use crate::training::optim::AdamState;

pub const MAGIC: [u8; 4] = *b"BATM";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamInfo {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step_count: u64,
}

/// Run context stored alongside the tensors.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct CheckpointMeta {
    pub config: serde_json::Value,
    pub seed: u64,
    pub epoch: usize,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub dtype: Dtype,
    pub head_count: usize,
    pub embed_dim: usize,
    pub head_hidden_dim: usize,
    pub pool_hidden_dim: usize,
    pub num_classes: usize,
    pub vocab_size: usize,
    pub embedding_trainable: bool,
    pub embedding_coverage: f64,
    pub adam: AdamInfo,
    pub tensors: Vec<TensorInfo>,
    #[serde(flatten)]
    pub meta: CheckpointMeta,
}

fn tensor_shapes<S: Scalar>(params: &ModelParams<S>) -> Vec<TensorInfo> {
    let mut out = vec![TensorInfo {
        name: "embedding".into(),
        shape: vec![params.vocab_size(), params.embed_dim()],
    }];
    for (k, head) in params.heads.iter().enumerate() {
        out.push(TensorInfo {
            name: format!("heads.{k}.proj"),
            shape: vec![head.hidden_dim(), head.input_dim()],
        });
        out.push(TensorInfo {
            name: format!("heads.{k}.proj_bias"),
            shape: vec![head.hidden_dim()],
        });
        out.push(TensorInfo {
            name: format!("heads.{k}.score"),
            shape: vec![head.hidden_dim()],
        });
    }
    out.push(TensorInfo {
        name: "pool.proj".into(),
        shape: vec![params.pool.hidden_dim(), params.pool.input_dim()],
    });
    out.push(TensorInfo {
        name: "pool.proj_bias".into(),
        shape: vec![params.pool.hidden_dim()],
    });
    out.push(TensorInfo {
        name: "pool.score".into(),
        shape: vec![params.pool.hidden_dim()],
    });
    out.push(TensorInfo {
        name: "classifier.weight".into(),
        shape: vec![params.num_classes(), params.embed_dim()],
    });
    out.push(TensorInfo {
        name: "classifier.bias".into(),
        shape: vec![params.num_classes()],
    });
    out
}

pub fn save_checkpoint<S: Scalar>(
    params: &ModelParams<S>,
    state: &AdamState<S>,
    meta: &CheckpointMeta,
    path: &Path,
) -> Result<()> {
    let mut tensors = tensor_shapes(params);
    let param_tensors = tensors.clone();
    for info in &param_tensors {
        tensors.push(TensorInfo {
            name: format!("adam.m.{}", info.name),
            shape: info.shape.clone(),
        });
    }
    for info in &param_tensors {
        tensors.push(TensorInfo {
            name: format!("adam.v.{}", info.name),
            shape: info.shape.clone(),
        });
    }

    let header = CheckpointHeader {
        dtype: S::DTYPE,
        head_count: params.head_count(),
        embed_dim: params.embed_dim(),
        head_hidden_dim: params.head_hidden_dim(),
        pool_hidden_dim: params.pool_hidden_dim(),
        num_classes: params.num_classes(),
        vocab_size: params.vocab_size(),
        embedding_trainable: params.embedding.trainable(),
        embedding_coverage: params.embedding.coverage(),
        adam: AdamInfo {
            beta1: state.beta1,
            beta2: state.beta2,
            epsilon: state.epsilon,
            step_count: state.step_count,
        },
        tensors,
        meta: meta.clone(),
    };
    let header_bytes = serde_json::to_vec(&header)?;

    let mut payload = Vec::new();
    for (_, tensor) in params.tensors() {
        for v in tensor {
            v.write_le(&mut payload);
        }
    }
    let (m, v) = state.moments();
    for tensor in m.iter().chain(v.iter()) {
        for value in tensor {
            value.write_le(&mut payload);
        }
    }

    let mut file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let write = |file: &mut File, bytes: &[u8]| -> Result<()> {
        file.write_all(bytes)
            .map_err(|e| Error::io(path.display().to_string(), e))
    };
    write(&mut file, &MAGIC)?;
    write(&mut file, &FORMAT_VERSION.to_le_bytes())?;
    write(&mut file, &(header_bytes.len() as u64).to_le_bytes())?;
    write(&mut file, &header_bytes)?;
    write(&mut file, &payload)?;
    Ok(())
}

fn read_tensor<S: Scalar>(payload: &[u8], offset: &mut usize, len: usize, dtype: Dtype) -> Vec<S> {
    let width = dtype.size_bytes();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let bytes = &payload[*offset..*offset + width];
        let value = match dtype {
            Dtype::F32 => f32::read_le(bytes) as f64,
            Dtype::F64 => f64::read_le(bytes),
        };
        out.push(S::from_f64(value));
        *offset += width;
    }
    out
}

pub fn load_checkpoint<S: Scalar>(
    path: &Path,
) -> Result<(ModelParams<S>, AdamState<S>, CheckpointHeader)> {
    let mut file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))?;

    let fail = |msg: &str| Error::Checkpoint(format!("{}: {msg}", path.display()));
    if bytes.len() < 16 {
        return Err(fail("file too short for a checkpoint header"));
    }
    if bytes[..4] != MAGIC {
        return Err(fail("bad magic bytes"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(fail(&format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    let header_len = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() < 16 + header_len {
        return Err(fail("truncated header"));
    }
    let header: CheckpointHeader = serde_json::from_slice(&bytes[16..16 + header_len])?;

    let expected_values: usize = header
        .tensors
        .iter()
        .map(|t| t.shape.iter().product::<usize>())
        .sum();
    let payload = &bytes[16 + header_len..];
    if payload.len() != expected_values * header.dtype.size_bytes() {
        return Err(fail(&format!(
            "payload is {} bytes, header declares {}",
            payload.len(),
            expected_values * header.dtype.size_bytes()
        )));
    }
    let expected_tensor_count = 3 * (3 * header.head_count + 6);
    if header.tensors.len() != expected_tensor_count {
        return Err(fail(&format!(
            "header declares {} tensors, expected {expected_tensor_count}",
            header.tensors.len()
        )));
    }

    if header.dtype != S::DTYPE {
        eprintln!(
            "warning: checkpoint {} stores {} tensors, converting to {}{}",
            path.display(),
            header.dtype.name(),
            S::DTYPE.name(),
            if header.dtype == Dtype::F64 {
                " (lossy down-conversion)"
            } else {
                ""
            }
        );
    }

    let mut offset = 0usize;
    let mut cursor = header.tensors.iter();
    let mut next = |expect_shape: &[usize]| -> Result<Vec<S>> {
        let info = cursor.next().expect("tensor count verified above");
        if info.shape != expect_shape {
            return Err(Error::Checkpoint(format!(
                "tensor {} has shape {:?}, expected {:?}",
                info.name, info.shape, expect_shape
            )));
        }
        Ok(read_tensor(
            payload,
            &mut offset,
            expect_shape.iter().product(),
            header.dtype,
        ))
    };

    let v = header.vocab_size;
    let e = header.embed_dim;
    let dk = header.head_hidden_dim;
    let dh = header.pool_hidden_dim;
    let c = header.num_classes;

    let embedding = EmbeddingMatrix::from_matrix(
        Matrix::from_vec(v, e, next(&[v, e])?),
        header.embedding_trainable,
        header.embedding_coverage,
    );
    let mut heads = Vec::with_capacity(header.head_count);
    for _ in 0..header.head_count {
        heads.push(AdditiveAttention {
            proj: Matrix::from_vec(dk, e, next(&[dk, e])?),
            proj_bias: next(&[dk])?,
            score: next(&[dk])?,
        });
    }
    let pool = AdditiveAttention {
        proj: Matrix::from_vec(dh, e, next(&[dh, e])?),
        proj_bias: next(&[dh])?,
        score: next(&[dh])?,
    };
    let classifier = ClassifierParams {
        weight: Matrix::from_vec(c, e, next(&[c, e])?),
        bias: next(&[c])?,
    };
    let params = ModelParams {
        embedding,
        heads,
        pool,
        classifier,
    };

    let param_count = 3 * header.head_count + 6;
    let mut m_moments = Vec::with_capacity(param_count);
    for (name, tensor) in params.tensors() {
        let info = cursor.next().expect("tensor count verified above");
        debug_assert_eq!(info.name, format!("adam.m.{name}"));
        m_moments.push(read_tensor::<S>(
            payload,
            &mut offset,
            tensor.len(),
            header.dtype,
        ));
    }
    let mut v_moments = Vec::with_capacity(param_count);
    for (_, tensor) in params.tensors() {
        let _info = cursor.next().expect("tensor count verified above");
        v_moments.push(read_tensor::<S>(
            payload,
            &mut offset,
            tensor.len(),
            header.dtype,
        ));
    }
    let state = AdamState::from_parts(
        m_moments,
        v_moments,
        header.adam.step_count,
        header.adam.beta1,
        header.adam.beta2,
        header.adam.epsilon,
    );
    Ok((params, state, header))
}
