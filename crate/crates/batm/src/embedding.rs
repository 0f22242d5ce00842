//! The embedding matrix: pretrained-vector loading, seeded random
//! initialization, and id-to-vector lookup.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::{TokenSequence, Vocabulary, RESERVED};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::num::Scalar;
use crate::rng::{rng_for, standard_normal, Stream};

/// Standard deviation for rows not covered by a pretrained file. Small norms
/// keep initial attention scores near zero.
const INIT_STD: f64 = 0.1;

/// V x E matrix of word vectors. The PAD row is all-zero and stays zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<S> {
    matrix: Matrix<S>,
    trainable: bool,
    /// Fraction of retained vocabulary rows initialized from a pretrained
    /// file; 0 for random initialization.
    coverage: f64,
}

impl<S: Scalar> EmbeddingMatrix<S> {
    pub fn from_matrix(matrix: Matrix<S>, trainable: bool, coverage: f64) -> Self {
        EmbeddingMatrix {
            matrix,
            trainable,
            coverage,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn row(&self, id: u32) -> &[S] {
        self.matrix.row(id as usize)
    }

    pub fn matrix(&self) -> &Matrix<S> {
        &self.matrix
    }

    pub fn matrix_mut(&mut self) -> &mut Matrix<S> {
        &mut self.matrix
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }

    pub fn set_trainable(&mut self, trainable: bool) {
        self.trainable = trainable;
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn convert<T: Scalar>(&self) -> EmbeddingMatrix<T> {
        let data = self
            .matrix
            .data()
            .iter()
            .map(|v| T::from_f64(v.to_f64()))
            .collect();
        EmbeddingMatrix {
            matrix: Matrix::from_vec(self.matrix.rows(), self.matrix.cols(), data),
            trainable: self.trainable,
            coverage: self.coverage,
        }
    }
}

/// Seeded normal(0, 0.1) initialization for every row except PAD (zero).
pub fn init_random<S: Scalar>(vocab_size: usize, dim: usize, seed: u64) -> EmbeddingMatrix<S> {
    assert!(dim >= 1, "embedding dim must be >= 1");
    assert!(vocab_size >= RESERVED, "vocab must include PAD and UNK");
    let mut matrix = Matrix::zeros(vocab_size, dim);
    let mut rng = rng_for(seed, Stream::EmbeddingInit);
    for id in 1..vocab_size {
        for slot in matrix.row_mut(id) {
            *slot = S::from_f64(INIT_STD * standard_normal(&mut rng));
        }
    }
    EmbeddingMatrix {
        matrix,
        trainable: true,
        coverage: 0.0,
    }
}

/// Load word vectors from a text file of `token f_1 ... f_dim` lines.
///
/// Rows for vocabulary tokens found in the file are copied verbatim; missing
/// tokens (including UNK) get seeded normal(0, 0.1) rows; PAD stays zero.
pub fn load_pretrained_vectors<S: Scalar>(
    path: &Path,
    vocab: &Vocabulary,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingMatrix<S>> {
    let file = File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let reader = BufReader::new(file);

    let mut found: HashMap<u32, Vec<f64>> = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path.display().to_string(), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line has a first field");
        let values: Vec<f64> = parts
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| {
                Error::Embedding(format!(
                    "{} line {}: bad float: {e}",
                    path.display(),
                    lineno + 1
                ))
            })?;
        if values.len() != dim {
            return Err(Error::Embedding(format!(
                "{} line {}: expected {dim} values, found {}",
                path.display(),
                lineno + 1,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Embedding(format!(
                "{} line {}: non-finite value",
                path.display(),
                lineno + 1
            )));
        }
        if let Some(id) = vocab.id_of(token) {
            // First occurrence wins on duplicate tokens.
            found.entry(id).or_insert(values);
        }
    }

    let vocab_size = vocab.len();
    let mut matrix = Matrix::zeros(vocab_size, dim);
    let mut rng = rng_for(seed, Stream::EmbeddingInit);
    let mut covered = 0usize;
    for id in 1..vocab_size as u32 {
        match found.get(&id) {
            Some(values) => {
                covered += 1;
                for (slot, v) in matrix.row_mut(id as usize).iter_mut().zip(values) {
                    *slot = S::from_f64(*v);
                }
            }
            None => {
                for slot in matrix.row_mut(id as usize) {
                    *slot = S::from_f64(INIT_STD * standard_normal(&mut rng));
                }
            }
        }
    }
    let retained = vocab.retained();
    let coverage = if retained == 0 {
        0.0
    } else {
        covered as f64 / retained as f64
    };
    Ok(EmbeddingMatrix {
        matrix,
        trainable: true,
        coverage,
    })
}

/// Map a token sequence to its embedded rows. Masked positions are written as
/// zeros without touching the PAD row, so the output depends only on the ids
/// of live positions.
pub fn lookup<S: Scalar>(seq: &TokenSequence, emb: &EmbeddingMatrix<S>) -> Result<Matrix<S>> {
    let mut out = Matrix::zeros(seq.max_len(), emb.dim());
    for (pos, &id) in seq.live_ids().iter().enumerate() {
        if id as usize >= emb.vocab_size() {
            return Err(Error::Embedding(format!(
                "token id {id} out of range for vocabulary of {}",
                emb.vocab_size()
            )));
        }
        out.row_mut(pos).copy_from_slice(emb.row(id));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, RawDocument, PAD_ID};
    use std::io::Write as _;

    fn vocab_of(text: &str) -> Vocabulary {
        let docs = vec![RawDocument {
            id: "1".into(),
            text: text.into(),
            label: "l".into(),
        }];
        build_vocabulary(&docs, 1).unwrap()
    }

    #[test]
    fn init_random_is_deterministic() {
        let a: EmbeddingMatrix<f64> = init_random(3, 2, 1);
        let b: EmbeddingMatrix<f64> = init_random(3, 2, 1);
        assert_eq!(a, b);
        let c: EmbeddingMatrix<f64> = init_random(3, 2, 2);
        assert_ne!(a, c);
    }

    #[test]
    fn init_random_zeroes_pad_row() {
        let emb: EmbeddingMatrix<f64> = init_random(4, 2, 7);
        assert_eq!(emb.row(PAD_ID), &[0.0, 0.0]);
    }

    #[test]
    fn init_random_moments() {
        let emb: EmbeddingMatrix<f64> = init_random(10_000, 50, 3);
        let values: Vec<f64> = emb.matrix().data()[50..].to_vec(); // skip PAD row
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((std - 0.1).abs() < 0.02, "std {std}");
    }

    #[test]
    fn pretrained_rows_copied_and_missing_rows_seeded() {
        let vocab = vocab_of("a b");
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "a 1.0 0.0").unwrap();
        let emb: EmbeddingMatrix<f64> = load_pretrained_vectors(file.path(), &vocab, 2, 5).unwrap();
        assert_eq!(emb.row(vocab.id_of("a").unwrap()), &[1.0, 0.0]);
        assert_eq!(emb.coverage(), 0.5);
        let b_row = emb.row(vocab.id_of("b").unwrap());
        assert!(b_row.iter().any(|&v| v != 0.0));
        let again: EmbeddingMatrix<f64> =
            load_pretrained_vectors(file.path(), &vocab, 2, 5).unwrap();
        assert_eq!(emb, again);
    }

    #[test]
    fn vacuous_vocabulary_has_zero_coverage_without_error() {
        let vocab = Vocabulary::reserved_only();
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "anything 1.0 2.0").unwrap();
        let emb: EmbeddingMatrix<f64> = load_pretrained_vectors(file.path(), &vocab, 2, 5).unwrap();
        assert_eq!(emb.coverage(), 0.0);
        assert_eq!(emb.vocab_size(), 2);
    }

    #[test]
    fn pretrained_dimension_mismatch_is_fatal_with_line() {
        let vocab = vocab_of("a");
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "a 1.0 2.0").unwrap();
        writeln!(file, "b 1.0").unwrap();
        let err = load_pretrained_vectors::<f64>(file.path(), &vocab, 2, 5).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn pretrained_missing_file_is_fatal() {
        let vocab = vocab_of("a");
        assert!(load_pretrained_vectors::<f64>(
            Path::new("/nonexistent/vectors.txt"),
            &vocab,
            2,
            5
        )
        .is_err());
    }

    #[test]
    fn lookup_zeroes_masked_positions() {
        let emb: EmbeddingMatrix<f64> = init_random(4, 3, 1);
        let seq = TokenSequence::from_ids(&[2], 3);
        let out = lookup(&seq, &emb).unwrap();
        assert_eq!(out.row(0), emb.row(2));
        assert_eq!(out.row(1), &[0.0, 0.0, 0.0]);
        assert_eq!(out.row(2), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn lookup_identity_embedding_gives_one_hot() {
        let mut matrix = Matrix::zeros(3, 3);
        for i in 0..3 {
            matrix.row_mut(i)[i] = 1.0f64;
        }
        let emb = EmbeddingMatrix::from_matrix(matrix, true, 0.0);
        let seq = TokenSequence::from_ids(&[2, 1], 2);
        let out = lookup(&seq, &emb).unwrap();
        assert_eq!(out.row(0), &[0.0, 0.0, 1.0]);
        assert_eq!(out.row(1), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn lookup_rejects_out_of_range_ids() {
        let emb: EmbeddingMatrix<f64> = init_random(3, 2, 1);
        let seq = TokenSequence::from_ids(&[9], 2);
        assert!(lookup(&seq, &emb).is_err());
    }
}
