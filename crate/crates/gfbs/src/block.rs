//! Named-block vectors for product-space states such as `x = (u, v, p)`.

use nalgebra::DVector;
use std::ops::Range;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BlockError {
    #[error("duplicate block name `{0}`")]
    DuplicateName(String),
    #[error("unknown block name `{0}`")]
    UnknownName(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// The shape of a product space: an ordered list of named blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockLayout {
    names: Vec<String>,
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    total: usize,
}

impl BlockLayout {
    /// Build a layout; block names must be unique.
    pub fn new(blocks: &[(&str, usize)]) -> Result<Arc<Self>, BlockError> {
        let mut names = Vec::with_capacity(blocks.len());
        let mut sizes = Vec::with_capacity(blocks.len());
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut total = 0;
        for (name, size) in blocks {
            if names.iter().any(|n: &String| n == name) {
                return Err(BlockError::DuplicateName(name.to_string()));
            }
            names.push(name.to_string());
            sizes.push(*size);
            offsets.push(total);
            total += size;
        }
        Ok(Arc::new(Self {
            names,
            sizes,
            offsets,
            total,
        }))
    }

    /// Single anonymous block covering the whole space.
    pub fn flat(dim: usize) -> Arc<Self> {
        Self::new(&[("x", dim)]).expect("single block cannot collide")
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn num_blocks(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    /// Index range of block `i` inside the flattened vector.
    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i] + self.sizes[i]
    }

    pub fn range_of(&self, name: &str) -> Result<Range<usize>, BlockError> {
        let i = self
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| BlockError::UnknownName(name.to_string()))?;
        Ok(self.range(i))
    }
}

/// An element of a product space, stored flat with its layout.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockVector {
    layout: Arc<BlockLayout>,
    data: DVector<f64>,
}

impl BlockVector {
    pub fn zeros(layout: Arc<BlockLayout>) -> Self {
        let n = layout.total_dim();
        Self {
            layout,
            data: DVector::zeros(n),
        }
    }

    /// Wrap a flat vector; its length must match the layout.
    pub fn from_flat(layout: Arc<BlockLayout>, data: DVector<f64>) -> Result<Self, BlockError> {
        if data.len() != layout.total_dim() {
            return Err(BlockError::DimensionMismatch {
                expected: layout.total_dim(),
                got: data.len(),
            });
        }
        Ok(Self { layout, data })
    }

    /// Assemble from per-block vectors in layout order.
    pub fn from_blocks(
        layout: Arc<BlockLayout>,
        blocks: &[DVector<f64>],
    ) -> Result<Self, BlockError> {
        if blocks.len() != layout.num_blocks() {
            return Err(BlockError::DimensionMismatch {
                expected: layout.num_blocks(),
                got: blocks.len(),
            });
        }
        let mut data = DVector::zeros(layout.total_dim());
        for (i, b) in blocks.iter().enumerate() {
            if b.len() != layout.size(i) {
                return Err(BlockError::DimensionMismatch {
                    expected: layout.size(i),
                    got: b.len(),
                });
            }
            data.rows_mut(layout.range(i).start, b.len()).copy_from(b);
        }
        Ok(Self { layout, data })
    }

    pub fn layout(&self) -> &Arc<BlockLayout> {
        &self.layout
    }

    pub fn flatten(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_flat(self) -> DVector<f64> {
        self.data
    }

    /// Copy of the named block.
    pub fn block(&self, name: &str) -> Result<DVector<f64>, BlockError> {
        let r = self.layout.range_of(name)?;
        Ok(self.data.rows(r.start, r.len()).into_owned())
    }

    pub fn set_block(&mut self, name: &str, value: &DVector<f64>) -> Result<(), BlockError> {
        let r = self.layout.range_of(name)?;
        if value.len() != r.len() {
            return Err(BlockError::DimensionMismatch {
                expected: r.len(),
                got: value.len(),
            });
        }
        self.data.rows_mut(r.start, r.len()).copy_from(value);
        Ok(())
    }
}
