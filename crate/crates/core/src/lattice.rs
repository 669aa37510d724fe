//! Uniform axis-aligned lattices with an optional region mask.
//!
//! Nodes are numbered lexicographically with the first axis varying slowest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::MAX_DIM;

/// Active part of a lattice box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Box,
    /// `inner <= |x - center| <= outer`
    Annulus {
        center: Vec<f64>,
        inner: f64,
        outer: f64,
    },
    /// `|x - center| <= radius`
    Ball { center: Vec<f64>, radius: f64 },
}

impl Region {
    pub fn contains(&self, x: &[f64]) -> bool {
        // nodes lying on a circle up to rounding count as inside
        const SLACK: f64 = 1e-9;
        match self {
            Region::Box => true,
            Region::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = dist(x, center);
                r >= inner - SLACK && r <= outer + SLACK
            }
            Region::Ball { center, radius } => dist(x, center) <= radius + SLACK,
        }
    }

    fn center(&self) -> Option<&[f64]> {
        match self {
            Region::Box => None,
            Region::Annulus { center, .. } | Region::Ball { center, .. } => Some(center),
        }
    }
}

fn dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    lo: Vec<f64>,
    hi: Vec<f64>,
    h: f64,
    counts: Vec<usize>,
    region: Region,
}

impl Lattice {
    /// Box `[lo, hi]` with spacing `h` on every axis. Each side length must be a whole multiple
    /// of `h` up to rounding.
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, h: f64) -> Result<Self> {
        let m = lo.len();
        if m == 0 || m > MAX_DIM || hi.len() != m {
            return Err(Error::Lattice(format!(
                "bounds must have equal length in 1..={MAX_DIM}, got {} and {}",
                lo.len(),
                hi.len()
            )));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Lattice(format!("spacing must be positive, got {h}")));
        }
        let mut counts = Vec::with_capacity(m);
        for (a, (&l, &u)) in lo.iter().zip(&hi).enumerate() {
            if !(u > l) {
                return Err(Error::Lattice(format!("axis {a}: upper bound {u} not above {l}")));
            }
            let steps = (u - l) / h;
            let k = steps.round();
            if (steps - k).abs() > 1e-6 * steps.max(1.0) {
                return Err(Error::Lattice(format!(
                    "axis {a}: length {} is not a multiple of spacing {h}",
                    u - l
                )));
            }
            counts.push(k as usize + 1);
        }
        Ok(Lattice {
            lo,
            hi,
            h,
            counts,
            region: Region::Box,
        })
    }

    /// Square lattice covering the ball or annulus, with that region as mask.
    pub fn around(region: Region, h: f64) -> Result<Self> {
        let (center, radius) = match &region {
            Region::Box => return Err(Error::Lattice("region needs a center".into())),
            Region::Annulus { center, outer, .. } => (center.clone(), *outer),
            Region::Ball { center, radius } => (center.clone(), *radius),
        };
        let half = (radius / h).ceil() * h;
        let lo = center.iter().map(|c| c - half).collect();
        let hi = center.iter().map(|c| c + half).collect();
        Lattice::new(lo, hi, h)?.with_region(region)
    }

    pub fn with_region(mut self, region: Region) -> Result<Self> {
        if let Some(c) = region.center() {
            if c.len() != self.dim() {
                return Err(Error::Lattice(format!(
                    "region center has {} coordinates, lattice dimension is {}",
                    c.len(),
                    self.dim()
                )));
            }
        }
        self.region = region;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            out[a] = idx % self.counts[a];
            idx /= self.counts[a];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&i, &c)| acc * c + i)
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .zip(&self.lo)
            .map(|(&i, &l)| l + i as f64 * self.h)
            .collect()
    }

    pub fn is_active(&self, idx: usize) -> bool {
        self.region.contains(&self.coords(idx))
    }

    /// Node reached by moving `offset[a]` steps along each axis, if it lies in the box.
    pub fn offset(&self, idx: usize, offset: &[isize]) -> Option<usize> {
        let mut multi = self.multi_index(idx);
        for a in 0..self.dim() {
            let j = multi[a] as isize + offset[a];
            if j < 0 || j >= self.counts[a] as isize {
                return None;
            }
            multi[a] = j as usize;
        }
        Some(self.flat_index(&multi))
    }

    /// Active node reached by `offset`, if any.
    pub fn active_offset(&self, idx: usize, offset: &[isize]) -> Option<usize> {
        self.offset(idx, offset).filter(|&j| self.is_active(j))
    }

    /// Whether every node of the `3^m` stencil around `idx` is active.
    pub fn is_interior(&self, idx: usize) -> bool {
        self.is_active(idx) && stencil_offsets(self.dim()).iter().all(|o| self.active_offset(idx, o).is_some())
    }

    pub fn active_nodes(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_active(i)).collect()
    }
}

/// All nonzero offsets in `{-1, 0, 1}^m`.
pub fn stencil_offsets(m: usize) -> Vec<Vec<isize>> {
    let mut out = Vec::new();
    let total = 3usize.pow(m as u32);
    for code in 0..total {
        let mut c = code;
        let mut o = vec![0isize; m];
        for a in (0..m).rev() {
            o[a] = (c % 3) as isize - 1;
            c /= 3;
        }
        if o.iter().any(|&v| v != 0) {
            out.push(o);
        }
    }
    out
}
