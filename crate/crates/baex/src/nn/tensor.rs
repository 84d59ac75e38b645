//! Dense row-major f64 tensors.

use super::NnError;

/// A dense tensor; `data.len()` always equals the product of `shape`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    data: Vec<f64>,
    shape: Vec<usize>,
}

impl Tensor {
    pub fn new(data: Vec<f64>, shape: Vec<usize>) -> Result<Self, NnError> {
        let expect: usize = shape.iter().product();
        if expect != data.len() {
            return Err(NnError::ShapeMismatch(format!(
                "data length {} does not match shape {:?}",
                data.len(),
                shape
            )));
        }
        Ok(Self { data, shape })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        Self {
            data: vec![0.0; len],
            shape,
        }
    }

    /// One-dimensional tensor wrapping `data`.
    pub fn from_vec(data: Vec<f64>) -> Self {
        let len = data.len();
        Self {
            data,
            shape: vec![len],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Reinterprets the same data under a new shape (row-major, so this is
    /// metadata only).
    pub fn reshaped(mut self, shape: Vec<usize>) -> Result<Self, NnError> {
        let expect: usize = shape.iter().product();
        if expect != self.data.len() {
            return Err(NnError::ShapeMismatch(format!(
                "cannot reshape {} elements to {:?}",
                self.data.len(),
                shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_checks_shape_product() {
        assert!(Tensor::new(vec![1.0, 2.0], vec![2, 1]).is_ok());
        assert!(Tensor::new(vec![1.0, 2.0], vec![3]).is_err());
    }

    #[test]
    fn reshape_is_metadata_only() {
        let t = Tensor::new(vec![1.0, 2.0, 3.0, 4.0], vec![2, 2]).unwrap();
        let r = t.clone().reshaped(vec![4]).unwrap();
        assert_eq!(r.data(), t.data());
        assert!(t.reshaped(vec![3]).is_err());
    }
}
