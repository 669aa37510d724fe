//! Linear algebra on lattice stencils: a `3^m`-point stencil matrix, Jacobi-preconditioned
//! conjugate gradients and a banded LU solve with partial pivoting.

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Row `i` couples unknown `i` to the unknowns at the `3^m` stencil offsets around its node.
#[derive(Debug, Clone)]
pub(crate) struct StencilMatrix {
    width: usize,
    /// `nbr[i * width + k]`: unknown id at stencil slot `k`, or `usize::MAX`.
    nbr: Vec<usize>,
    pub(crate) vals: Vec<f64>,
}

/// Stencil slot of an offset in `{-1, 0, 1}^m`.
pub(crate) fn slot(offset: &[isize]) -> usize {
    offset.iter().fold(0, |acc, &o| acc * 3 + (o + 1) as usize)
}

pub(crate) fn slot_offset(mut k: usize, m: usize) -> Vec<isize> {
    let mut o = vec![0isize; m];
    for a in (0..m).rev() {
        o[a] = (k % 3) as isize - 1;
        k /= 3;
    }
    o
}

impl StencilMatrix {
    /// `unknown_of[node]` maps lattice nodes to unknown ids; `nodes[id]` is the inverse.
    pub(crate) fn new(lattice: &Lattice, nodes: &[usize], unknown_of: &[usize]) -> Self {
        let m = lattice.dim();
        let width = 3usize.pow(m as u32);
        let offsets: Vec<Vec<isize>> = (0..width).map(|k| slot_offset(k, m)).collect();
        let mut nbr = vec![usize::MAX; nodes.len() * width];
        for (i, &node) in nodes.iter().enumerate() {
            for (k, off) in offsets.iter().enumerate() {
                if let Some(j) = lattice.offset(node, off) {
                    nbr[i * width + k] = unknown_of[j];
                }
            }
        }
        StencilMatrix {
            width,
            nbr,
            vals: vec![0.0; nodes.len() * width],
        }
    }

    pub(crate) fn rows(&self) -> usize {
        self.nbr.len() / self.width
    }

    pub(crate) fn clear(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    pub(crate) fn add(&mut self, row: usize, k: usize, v: f64) {
        self.vals[row * self.width + k] += v;
    }

    pub(crate) fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let base = i * self.width;
            let mut acc = 0.0;
            for k in 0..self.width {
                let j = self.nbr[base + k];
                if j != usize::MAX {
                    acc += self.vals[base + k] * x[j];
                }
            }
            *yi = acc;
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        let centre = self.width / 2;
        (0..self.rows())
            .map(|i| self.vals[i * self.width + centre])
            .collect()
    }

    /// Largest `|i - j|` over stored couplings.
    fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.rows() {
            for k in 0..self.width {
                let j = self.nbr[i * self.width + k];
                if j != usize::MAX && self.vals[i * self.width + k] != 0.0 {
                    bw = bw.max(i.abs_diff(j));
                }
            }
        }
        bw
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Conjugate gradients for a symmetric positive definite stencil matrix, starting from `x`.
/// Stops when `|r| <= rel_tol * |b|`. Returns the iteration count.
pub(crate) fn pcg(
    a: &StencilMatrix,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Result<usize> {
    let n = b.len();
    let diag = a.diagonal();
    if diag.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Solver("stencil matrix has a non-positive diagonal".into()));
    }
    let mut r = vec![0.0; n];
    a.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let target = rel_tol * dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        if dot(&r, &r).sqrt() <= target {
            return Ok(it);
        }
        a.matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver("conjugate gradients met a non-positive curvature".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    if dot(&r, &r).sqrt() <= target {
        return Ok(max_iter);
    }
    Err(Error::Solver(format!(
        "conjugate gradients did not converge in {max_iter} iterations"
    )))
}

/// Solves `A x = b` by banded Gaussian elimination with partial pivoting.
pub(crate) fn banded_solve(a: &StencilMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    let bw = a.bandwidth();
    // row at position r stores columns r - bw ..= r + 2 bw (room for pivoting fill)
    let w = 3 * bw + 1;
    let mut band = vec![0.0; n * w];
    let at = |r: usize, c: usize| -> usize { r * w + (c + bw - r) };
    for i in 0..n {
        for k in 0..a.width {
            let j = a.nbr[i * a.width + k];
            let v = a.vals[i * a.width + k];
            if j != usize::MAX && v != 0.0 {
                band[at(i, j)] += v;
            }
        }
    }
    let mut rhs = b.to_vec();
    for k in 0..n {
        let last = (k + bw).min(n - 1);
        let mut p = k;
        for i in k + 1..=last {
            if band[at(i, k)].abs() > band[at(p, k)].abs() {
                p = i;
            }
        }
        let pivot = band[at(p, k)];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Solver(format!("singular banded system at row {k}")));
        }
        let hi = (k + 2 * bw).min(n - 1);
        if p != k {
            for c in k..=hi {
                let (u, v) = (at(k, c), at(p, c));
                band.swap(u, v);
            }
            rhs.swap(k, p);
        }
        for i in k + 1..=last {
            let f = band[at(i, k)] / band[at(k, k)];
            if f == 0.0 {
                continue;
            }
            band[at(i, k)] = 0.0;
            for c in k + 1..=hi {
                let v = band[at(k, c)];
                if v != 0.0 {
                    band[at(i, c)] -= f * v;
                }
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let hi = (k + 2 * bw).min(n - 1);
        let mut acc = rhs[k];
        for c in k + 1..=hi {
            acc -= band[at(k, c)] * x[c];
        }
        x[k] = acc / band[at(k, k)];
    }
    Ok(x)
}
