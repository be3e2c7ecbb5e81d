use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};
use rand::Rng;
use rand_distr::StandardNormal;

/// Floating point type the model can run in (`f32` for training and serving,
/// `f64` for gradient checks).
pub trait Scalar: Float + FromPrimitive + Sum + Debug + Default + Send + Sync + 'static {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable literal")
    }
}

impl<T: Float + FromPrimitive + Sum + Debug + Default + Send + Sync + 'static> Scalar for T {}

/// A named trainable array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    pub shape: Vec<usize>,
    pub data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn zeros(shape: &[usize]) -> Self {
        Self { shape: shape.to_vec(), data: vec![F::zero(); shape.iter().product()] }
    }

    pub fn filled(shape: &[usize], v: F) -> Self {
        Self { shape: shape.to_vec(), data: vec![v; shape.iter().product()] }
    }

    pub fn gaussian<R: Rng>(shape: &[usize], std: f64, rng: &mut R) -> Self {
        let data = (0..shape.iter().product::<usize>())
            .map(|_| F::lit(rng.sample::<f64, _>(StandardNormal) * std))
            .collect();
        Self { shape: shape.to_vec(), data }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn cast<G: Scalar>(&self) -> Tensor<G> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(|v| G::lit(v.to_f64().unwrap())).collect() }
    }
}

/// Dense row-major activation matrix (tokens x features).
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn from_rows(rows: &[&[F]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self { rows: rows.len(), cols, data }
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn at(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    pub fn add(&self, other: &Mat<F>) -> Mat<F> {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a + b).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn add_assign(&mut self, other: &Mat<F>) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + b;
        }
    }

    pub fn mean_rows(&self) -> Vec<F> {
        let n = F::from_usize(self.rows).unwrap();
        (0..self.cols).map(|c| (0..self.rows).map(|r| self.at(r, c)).sum::<F>() / n).collect()
    }
}

pub fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// L2 normalization; returns the unit vector and the original norm.
pub fn l2_normalize<F: Scalar>(x: &[F]) -> (Vec<F>, F) {
    let norm = dot(x, x).sqrt().max(F::lit(1e-12));
    (x.iter().map(|&v| v / norm).collect(), norm)
}

/// Backward of `y = x / |x|` given the output `y` and the norm.
pub fn l2_normalize_backward<F: Scalar>(y: &[F], norm: F, dy: &[F]) -> Vec<F> {
    let proj = dot(y, dy);
    y.iter().zip(dy).map(|(&yi, &di)| (di - yi * proj) / norm).collect()
}
