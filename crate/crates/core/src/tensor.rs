//! Dense rank-3 and rank-4 arrays.

use std::ops::{Index, IndexMut};

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3<T> {
    shape: [usize; 3],
    data: Vec<T>,
}

impl<T: Scalar> Tensor3<T> {
    pub fn zeros(shape: [usize; 3]) -> Self {
        Tensor3 {
            shape,
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_fn(shape: [usize; 3], f: impl Fn(usize, usize, usize) -> T) -> Self {
        let mut t = Self::zeros(shape);
        for a in 0..shape[0] {
            for b in 0..shape[1] {
                for c in 0..shape[2] {
                    t[(a, b, c)] = f(a, b, c);
                }
            }
        }
        t
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn sum_sq(&self) -> T {
        self.data.iter().map(|&v| v * v).sum()
    }
}

impl<T> Index<(usize, usize, usize)> for Tensor3<T> {
    type Output = T;
    #[inline]
    fn index(&self, (a, b, c): (usize, usize, usize)) -> &T {
        &self.data[(a * self.shape[1] + b) * self.shape[2] + c]
    }
}

impl<T> IndexMut<(usize, usize, usize)> for Tensor3<T> {
    #[inline]
    fn index_mut(&mut self, (a, b, c): (usize, usize, usize)) -> &mut T {
        &mut self.data[(a * self.shape[1] + b) * self.shape[2] + c]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4<T> {
    shape: [usize; 4],
    data: Vec<T>,
}

impl<T: Scalar> Tensor4<T> {
    pub fn zeros(shape: [usize; 4]) -> Self {
        Tensor4 {
            shape,
            data: vec![T::zero(); shape.iter().product()],
        }
    }

    pub fn from_fn(shape: [usize; 4], f: impl Fn(usize, usize, usize, usize) -> T) -> Self {
        let mut t = Self::zeros(shape);
        for a in 0..shape[0] {
            for b in 0..shape[1] {
                for c in 0..shape[2] {
                    for d in 0..shape[3] {
                        t[(a, b, c, d)] = f(a, b, c, d);
                    }
                }
            }
        }
        t
    }

    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Largest entrywise difference.
    pub fn max_diff(&self, other: &Self) -> T {
        assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    /// Largest violation of the first Bianchi identity `R_ijkl + R_iklj + R_iljk = 0`.
    pub fn bianchi_defect(&self) -> T {
        let m = self.shape[0];
        let mut worst = T::zero();
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let s = self[(i, j, k, l)] + self[(i, k, l, j)] + self[(i, l, j, k)];
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest violation of `R_ijkl = -R_jikl = -R_ijlk = R_klij`.
    pub fn symmetry_defect(&self) -> T {
        let m = self.shape[0];
        let mut worst = T::zero();
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    for l in 0..m {
                        let r = self[(i, j, k, l)];
                        worst = worst
                            .max((r + self[(j, i, k, l)]).abs())
                            .max((r + self[(i, j, l, k)]).abs())
                            .max((r - self[(k, l, i, j)]).abs());
                    }
                }
            }
        }
        worst
    }
}

impl<T> Index<(usize, usize, usize, usize)> for Tensor4<T> {
    type Output = T;
    #[inline]
    fn index(&self, (a, b, c, d): (usize, usize, usize, usize)) -> &T {
        let s = &self.shape;
        &self.data[((a * s[1] + b) * s[2] + c) * s[3] + d]
    }
}

impl<T> IndexMut<(usize, usize, usize, usize)> for Tensor4<T> {
    #[inline]
    fn index_mut(&mut self, (a, b, c, d): (usize, usize, usize, usize)) -> &mut T {
        let s = self.shape;
        &mut self.data[((a * s[1] + b) * s[2] + c) * s[3] + d]
    }
}
