use crate::{Error, Result};

/// Dense row-major 5-D tensor.
///
/// Feature grids use axes (batch, time, height, width, channel), so token
/// `n = (t·h + y)·w + x` of batch `b` occupies one contiguous channel run.
/// Depth latents use (batch, channel, time, height, width) and depth maps
/// (batch, 1, time, height, width).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor5 {
    shape: [usize; 5],
    data: Vec<f64>,
}

/// (batch, time, height, width, channel)
pub type FeatureGrid = Tensor5;
/// (batch, channel, time, height, width)
pub type DepthLatent = Tensor5;
/// (batch, 1, time, height, width), meters
pub type DepthMap = Tensor5;

impl Tensor5 {
    pub fn new(shape: [usize; 5], data: Vec<f64>) -> Result<Self> {
        if shape.contains(&0) {
            return Err(Error::Shape(format!("axis sizes must be >= 1, got {shape:?}")));
        }
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(Error::Shape(format!("{shape:?} needs {n} values, got {}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("tensor entries must be finite".into()));
        }
        Ok(Tensor5 { shape, data })
    }

    pub fn zeros(shape: [usize; 5]) -> Self {
        Tensor5::filled(shape, 0.0)
    }

    pub fn filled(shape: [usize; 5], value: f64) -> Self {
        assert!(!shape.contains(&0), "axis sizes must be >= 1");
        Tensor5 {
            shape,
            data: vec![value; shape.iter().product()],
        }
    }

    pub fn from_fn(shape: [usize; 5], mut f: impl FnMut([usize; 5]) -> f64) -> Self {
        let mut t = Tensor5::zeros(shape);
        for (i, v) in t.data.iter_mut().enumerate() {
            *v = f(unravel(shape, i));
        }
        t
    }

    pub fn shape(&self) -> [usize; 5] {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn offset(&self, idx: [usize; 5]) -> usize {
        let s = self.shape;
        (((idx[0] * s[1] + idx[1]) * s[2] + idx[2]) * s[3] + idx[3]) * s[4] + idx[4]
    }

    pub fn get(&self, idx: [usize; 5]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: [usize; 5], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Tensor5 {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `self + k·other`.
    pub fn axpy(&self, k: f64, other: &Tensor5) -> Result<Self> {
        same_shape(self, other, "axpy")?;
        Ok(Tensor5 {
            shape: self.shape,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + k * b).collect(),
        })
    }

    pub fn scale(&self, k: f64) -> Self {
        self.map(|v| k * v)
    }

    /// Keeps the first `len` entries along `axis`.
    pub fn truncate_axis(&self, axis: usize, len: usize) -> Result<Self> {
        if len == 0 || len > self.shape[axis] {
            return Err(Error::Invalid(format!(
                "cannot truncate axis {axis} of size {} to {len}",
                self.shape[axis]
            )));
        }
        let mut shape = self.shape;
        shape[axis] = len;
        Ok(Tensor5::from_fn(shape, |i| self.get(i)))
    }

    /// Reorders the leading axis: entry `b` of the result is entry `order[b]`.
    pub fn permute_batch(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.shape[0] {
            return Err(Error::Shape("batch permutation has the wrong length".into()));
        }
        let stride = self.len() / self.shape[0];
        let mut data = Vec::with_capacity(self.len());
        for &b in order {
            data.extend_from_slice(&self.data[b * stride..(b + 1) * stride]);
        }
        Ok(Tensor5 { shape: self.shape, data })
    }

    /// Splits into per-batch contiguous slices.
    pub fn batches(&self) -> std::slice::Chunks<'_, f64> {
        self.data.chunks(self.len() / self.shape[0])
    }
}

fn unravel(shape: [usize; 5], mut i: usize) -> [usize; 5] {
    let mut idx = [0; 5];
    for a in (0..5).rev() {
        idx[a] = i % shape[a];
        i /= shape[a];
    }
    idx
}

pub(crate) fn same_shape(a: &Tensor5, b: &Tensor5, what: &str) -> Result<()> {
    if a.shape != b.shape {
        return Err(Error::Shape(format!("{what}: {:?} vs {:?}", a.shape, b.shape)));
    }
    Ok(())
}

/// Number of frames kept when a clip must be a multiple of `tubelet`
/// (49 frames with tubelet 2 keep 48).
pub fn tubelet_frames(frames: usize, tubelet: usize) -> usize {
    assert!(tubelet >= 1);
    frames - frames % tubelet
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offsets_are_row_major() {
        let t = Tensor5::from_fn([2, 3, 4, 5, 6], |i| i.iter().fold(0.0, |a, &x| a * 10.0 + x as f64));
        assert_eq!(t.get([1, 2, 3, 4, 5]), 12345.0);
        assert_eq!(t.offset([1, 2, 3, 4, 5]), t.len() - 1);
        assert_eq!(t.data()[6], 10.0);
    }

    #[test]
    fn constructor_checks() {
        assert!(Tensor5::new([1, 0, 1, 1, 1], vec![]).is_err());
        assert!(Tensor5::new([1, 1, 1, 1, 2], vec![0.0]).is_err());
        assert!(Tensor5::new([1, 1, 1, 1, 1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn clip_truncation() {
        assert_eq!(tubelet_frames(49, 2), 48);
        assert_eq!(tubelet_frames(48, 2), 48);
        let t = Tensor5::from_fn([1, 49, 1, 1, 2], |i| i[1] as f64);
        let k = t.truncate_axis(1, tubelet_frames(49, 2)).unwrap();
        assert_eq!(k.shape(), [1, 48, 1, 1, 2]);
        assert_eq!(k.get([0, 47, 0, 0, 1]), 47.0);
    }

    #[test]
    fn batch_permutation() {
        let t = Tensor5::from_fn([3, 1, 1, 1, 2], |i| (i[0] * 2 + i[4]) as f64);
        let p = t.permute_batch(&[2, 0, 1]).unwrap();
        assert_eq!(p.data(), &[4.0, 5.0, 0.0, 1.0, 2.0, 3.0]);
    }
}
