//! Dense real arrays and split-complex vectors.

use crate::error::{Error, Result};

/// Dense real array: a shape plus row-major data.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} needs {} values, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n: usize = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn from_vec(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor::zeros(vec![n, n]);
        for i in 0..n {
            t.data[i * n + i] = 1.0;
        }
        t
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Split-complex vector: equal-length real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVec {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexVec {
    pub fn new(re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::Shape(format!(
                "complex vector parts differ in length: {} vs {}",
                re.len(),
                im.len()
            )));
        }
        Ok(ComplexVec { re, im })
    }

    pub fn zeros(n: usize) -> Self {
        ComplexVec {
            re: vec![0.0; n],
            im: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }
}

/// y = W x for a row-major `W` of shape `[m, n]`.
pub fn matvec(w: &Tensor, x: &Tensor) -> Result<Tensor> {
    let (m, n) = match w.shape() {
        [m, n] => (*m, *n),
        s => {
            return Err(Error::Shape(format!(
                "matvec weight must be rank 2, got shape {s:?}"
            )))
        }
    };
    if x.shape() != [n] {
        return Err(Error::Shape(format!(
            "matvec input must have shape [{n}], got {:?}",
            x.shape()
        )));
    }
    let mut y = vec![0.0; m];
    matvec_into(w.data(), x.data(), m, n, &mut y);
    Ok(Tensor::from_vec(y))
}

/// Slice-level matvec used on hot paths. Accumulates in ascending `j` so the
/// tape replay produces bit-identical values.
pub(crate) fn matvec_into(w: &[f64], x: &[f64], m: usize, n: usize, out: &mut [f64]) {
    debug_assert_eq!(w.len(), m * n);
    debug_assert_eq!(x.len(), n);
    debug_assert_eq!(out.len(), m);
    for i in 0..m {
        let row = &w[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for j in 0..n {
            acc += row[j] * x[j];
        }
        out[i] = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Rng;

    #[test]
    fn matvec_identity_passes_input_through() {
        let w = Tensor::identity(3);
        let x = Tensor::from_vec(vec![1.0, 2.0, 3.0]);
        let y = matvec(&w, &x).unwrap();
        assert_eq!(y.data(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn matvec_zero_matrix_gives_zeros() {
        let w = Tensor::zeros(vec![2, 4]);
        let x = Tensor::from_vec(vec![0.3, -1.0, 7.0, 2.5]);
        let y = matvec(&w, &x).unwrap();
        assert_eq!(y.data(), &[0.0, 0.0]);
    }

    #[test]
    fn matvec_hand_product() {
        let w = Tensor::new(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = Tensor::from_vec(vec![1.0, 1.0]);
        let y = matvec(&w, &x).unwrap();
        assert_eq!(y.data(), &[3.0, 7.0]);
    }

    #[test]
    fn matvec_rejects_mismatched_shapes() {
        let w = Tensor::zeros(vec![2, 3]);
        let x = Tensor::from_vec(vec![1.0, 2.0]);
        assert!(matvec(&w, &x).is_err());
    }

    #[test]
    fn matvec_is_linear() {
        let mut rng = Rng::new(11);
        for _ in 0..20 {
            let w = Tensor::new(vec![3, 4], (0..12).map(|_| rng.normal()).collect()).unwrap();
            let x: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            let y: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
            let (a, b) = (rng.normal(), rng.normal());
            let mix: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
            let lhs = matvec(&w, &Tensor::from_vec(mix)).unwrap();
            let wx = matvec(&w, &Tensor::from_vec(x)).unwrap();
            let wy = matvec(&w, &Tensor::from_vec(y)).unwrap();
            for i in 0..3 {
                let rhs = a * wx.data()[i] + b * wy.data()[i];
                assert!((lhs.data()[i] - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tensor_shape_product_must_match_data() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(ComplexVec::new(vec![0.0; 2], vec![0.0; 3]).is_err());
    }
}
