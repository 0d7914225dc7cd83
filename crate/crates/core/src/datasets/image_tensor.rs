//! The normalized image batch that every module exchanges.

use candle_core::{DType, Device, Tensor};

use crate::error::{Error, Result};

/// A `[batch, 3, height, width]` float tensor with values in `[-1, 1]`,
/// RGB channel order.
#[derive(Debug, Clone)]
pub struct ImageTensor {
    data: Tensor,
}

impl ImageTensor {
    /// Wrap a tensor, checking shape, finiteness and value range.
    pub fn new(data: Tensor) -> Result<Self> {
        let dims = data.dims();
        if dims.len() != 4 || dims[1] != 3 {
            return Err(Error::Shape(format!(
                "image tensor must be [batch, 3, h, w], got {dims:?}"
            )));
        }
        if dims[2] == 0 || dims[3] == 0 {
            return Err(Error::InvalidInput("image tensor has a zero dimension".into()));
        }
        let flat: Vec<f64> = data.flatten_all()?.to_dtype(DType::F64)?.to_vec1()?;
        for &v in &flat {
            if !v.is_finite() {
                return Err(Error::InvalidInput("image tensor contains a non-finite value".into()));
            }
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::InvalidInput(format!(
                    "image tensor value {v} outside [-1, 1]"
                )));
            }
        }
        Ok(Self { data })
    }

    /// Wrap a tensor whose range is guaranteed by construction (e.g. the
    /// output of a tanh). Only the shape is checked.
    pub fn from_bounded(data: Tensor) -> Result<Self> {
        let dims = data.dims();
        if dims.len() != 4 || dims[1] != 3 {
            return Err(Error::Shape(format!(
                "image tensor must be [batch, 3, h, w], got {dims:?}"
            )));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &Tensor {
        &self.data
    }

    pub fn into_tensor(self) -> Tensor {
        self.data
    }

    pub fn batch(&self) -> usize {
        self.data.dims()[0]
    }

    pub fn height(&self) -> usize {
        self.data.dims()[2]
    }

    pub fn width(&self) -> usize {
        self.data.dims()[3]
    }

    pub fn dtype(&self) -> DType {
        self.data.dtype()
    }

    /// Detached copy that no longer carries gradient history.
    pub fn detached(&self) -> Self {
        Self { data: self.data.detach() }
    }

    /// An all-`value` image, mainly for tests.
    pub fn constant(value: f32, batch: usize, h: usize, w: usize, device: &Device) -> Result<Self> {
        let data = Tensor::full(value, (batch, 3, h, w), device)?;
        Self::new(data)
    }
}
