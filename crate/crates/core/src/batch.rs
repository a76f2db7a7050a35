//! Action chunks and candidate batches.

use thiserror::Error;

/// Problems with a single chunk, reported before it joins a batch.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChunkError {
    #[error("chunk has no steps or no dimensions")]
    Empty,
    #[error("step {step} has {found} values, expected {expected}")]
    Ragged {
        step: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value {value} at step {step}, dim {dim}")]
    NonFinite { step: usize, dim: usize, value: f64 },
    #[error("{found} values cannot fill a {steps}x{dims} chunk")]
    Length {
        steps: usize,
        dims: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BatchError {
    #[error("batch contains no candidates")]
    Empty,
    #[error("candidate {candidate}: {source}")]
    InvalidChunk {
        candidate: usize,
        #[source]
        source: ChunkError,
    },
    #[error("candidate {candidate} has shape {found:?}, expected {expected:?}")]
    ShapeMismatch {
        candidate: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
}

/// A `steps x dims` block of finite commands, stored step-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionChunk {
    steps: usize,
    dims: usize,
    values: Vec<f64>,
}

impl ActionChunk {
    pub fn new(steps: usize, dims: usize, values: Vec<f64>) -> Result<Self, ChunkError> {
        if steps == 0 || dims == 0 {
            return Err(ChunkError::Empty);
        }
        if values.len() != steps * dims {
            return Err(ChunkError::Length {
                steps,
                dims,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(ChunkError::NonFinite {
                step: pos / dims,
                dim: pos % dims,
                value: values[pos],
            });
        }
        Ok(Self {
            steps,
            dims,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, ChunkError> {
        let dims = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dims);
        for (step, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dims {
                return Err(ChunkError::Ragged {
                    step,
                    expected: dims,
                    found: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), dims, values)
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.steps, self.dims)
    }

    /// The chunk as one vector of length `steps * dims`, step-major.
    pub fn flatten(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, step: usize) -> &[f64] {
        &self.values[step * self.dims..(step + 1) * self.dims]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.values.chunks(self.dims).map(<[f64]>::to_vec).collect()
    }
}

/// K >= 1 chunks sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBatch {
    chunks: Vec<ActionChunk>,
    shape: (usize, usize),
}

impl CandidateBatch {
    pub fn new(chunks: Vec<ActionChunk>) -> Result<Self, BatchError> {
        let shape = chunks.first().ok_or(BatchError::Empty)?.shape();
        if let Some((candidate, chunk)) =
            chunks.iter().enumerate().find(|(_, c)| c.shape() != shape)
        {
            return Err(BatchError::ShapeMismatch {
                candidate,
                expected: shape,
                found: chunk.shape(),
            });
        }
        Ok(Self { chunks, shape })
    }

    /// Build a batch of `steps x dims` chunks from already-flattened vectors.
    pub fn from_flat(
        steps: usize,
        dims: usize,
        vectors: Vec<Vec<f64>>,
    ) -> Result<Self, BatchError> {
        let chunks = vectors
            .into_iter()
            .enumerate()
            .map(|(candidate, v)| {
                ActionChunk::new(steps, dims, v)
                    .map_err(|source| BatchError::InvalidChunk { candidate, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(chunks)
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    /// Always false; kept for API symmetry with `len`.
    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    /// Flattened length `steps * dims`.
    pub fn dim(&self) -> usize {
        self.shape.0 * self.shape.1
    }

    pub fn chunk(&self, index: usize) -> &ActionChunk {
        &self.chunks[index]
    }

    pub fn chunks(&self) -> &[ActionChunk] {
        &self.chunks
    }

    pub fn vector(&self, index: usize) -> &[f64] {
        self.chunks[index].flatten()
    }

    pub fn vectors(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.chunks.iter().map(ActionChunk::flatten)
    }

    /// Elementwise mean of the flattened candidates.
    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for v in self.vectors() {
            for (m, x) in mean.iter_mut().zip(v) {
                *m += x;
            }
        }
        let k = self.len() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        mean
    }

    /// Keep only the first `k` candidates.
    pub fn truncated(&self, k: usize) -> Result<Self, BatchError> {
        if k == 0 {
            return Err(BatchError::Empty);
        }
        Self::new(self.chunks.iter().take(k).cloned().collect())
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<f64>>> {
        self.chunks.iter().map(ActionChunk::to_rows).collect()
    }
}

/// Validate a raw `K x T x A` array and build a batch, reporting the first
/// violation found.
pub fn validate_batch<C, R>(raw: &[C]) -> Result<CandidateBatch, BatchError>
where
    C: AsRef<[R]>,
    R: AsRef<[f64]>,
{
    if raw.is_empty() {
        return Err(BatchError::Empty);
    }
    let mut chunks = Vec::with_capacity(raw.len());
    let mut shape = None;
    for (candidate, rows) in raw.iter().enumerate() {
        let chunk = ActionChunk::from_rows(rows.as_ref())
            .map_err(|source| BatchError::InvalidChunk { candidate, source })?;
        let expected = *shape.get_or_insert(chunk.shape());
        if chunk.shape() != expected {
            return Err(BatchError::ShapeMismatch {
                candidate,
                expected,
                found: chunk.shape(),
            });
        }
        chunks.push(chunk);
    }
    CandidateBatch::new(chunks)
}
