//! Cell-centred samples of functions on the unit cube `Q = [0,1]^d`.
//!
//! A [`GridFunction`] holds one value per cell of side `2^-L`, interpreted as
//! a function that is constant on each cell. With that reading every integral
//! used in this crate is a finite sum and is exact for cell-constant inputs.
//! [`ExtendedGridFunction`] is the same lattice padded by `margin` cells on
//! every side, which is where zero-extensions and convolutions live.

mod catalog;

pub use catalog::{corpus, sample, FunctionSpec};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// Shared read-only view of a function sampled on a uniform lattice.
pub trait Lattice {
    fn dim(&self) -> usize;
    fn level(&self) -> u32;
    /// Cells per axis.
    fn side(&self) -> usize;
    fn samples(&self) -> &[f64];

    fn cell_width(&self) -> f64 {
        (-(self.level() as f64)).exp2()
    }

    fn cell_volume(&self) -> f64 {
        (-((self.dim() as u32 * self.level()) as f64)).exp2()
    }

    /// `sum |v|^p * cell_volume`, i.e. the p-th power of the L^p norm.
    fn lp_norm_pow(&self, p: f64) -> Result<f64> {
        let pow = Power::new(p)?;
        Ok(self.samples().iter().map(|&v| pow.apply(v)).sum::<f64>() * self.cell_volume())
    }

    fn lp_norm(&self, p: f64) -> Result<f64> {
        Ok(self.lp_norm_pow(p)?.powf(p.recip()))
    }
}

/// L^p norm of a lattice function: `(2^{-dL} sum |f_i|^p)^{1/p}`.
pub fn lp_norm<F: Lattice + ?Sized>(f: &F, p: f64) -> Result<f64> {
    f.lp_norm(p)
}

/// `|x|^p` with fast paths for the integer exponents used throughout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Power {
    One,
    Two,
    Three,
    General(f64),
}

impl Power {
    pub(crate) fn new(p: f64) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        Ok(if p == 1.0 {
            Power::One
        } else if p == 2.0 {
            Power::Two
        } else if p == 3.0 {
            Power::Three
        } else {
            Power::General(p)
        })
    }

    #[inline(always)]
    pub(crate) fn apply(self, x: f64) -> f64 {
        match self {
            Power::One => x.abs(),
            Power::Two => x * x,
            Power::Three => {
                let a = x.abs();
                a * a * a
            }
            Power::General(p) => x.abs().powf(p),
        }
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(dim))
    }
}

/// Flat index with axis 0 varying fastest.
#[inline]
pub(crate) fn flat_index(idx: &[usize], side: usize) -> usize {
    idx.iter().rev().fold(0, |acc, &i| acc * side + i)
}

/// Inverse of [`flat_index`].
#[inline]
pub(crate) fn multi_index(mut flat: usize, side: usize, dim: usize) -> [usize; MAX_DIM] {
    let mut out = [0; MAX_DIM];
    for slot in out.iter_mut().take(dim) {
        *slot = flat % side;
        flat /= side;
    }
    out
}

/// Samples of `f` at the midpoints of the `2^{dL}` cells tiling `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    level: u32,
    samples: Vec<f64>,
}

impl GridFunction {
    pub fn new(dim: usize, level: u32, samples: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        if level < 1 {
            return Err(Error::InvalidLevel(level));
        }
        let expected = 1usize << (dim as u32 * level);
        if samples.len() != expected {
            return Err(Error::SampleCount { expected, got: samples.len() });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { dim, level, samples })
    }

    pub fn zeros(dim: usize, level: u32) -> Result<Self> {
        check_dim(dim)?;
        Self::new(dim, level, vec![0.0; 1usize << (dim as u32 * level)])
    }

    /// Evaluates `f` at every cell midpoint.
    pub fn from_fn(dim: usize, level: u32, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        check_dim(dim)?;
        if level < 1 {
            return Err(Error::InvalidLevel(level));
        }
        let side = 1usize << level;
        let h = (-(level as f64)).exp2();
        let mut x = [0.0; MAX_DIM];
        let samples = (0..side.pow(dim as u32))
            .map(|flat| {
                let idx = multi_index(flat, side, dim);
                for a in 0..dim {
                    x[a] = (idx[a] as f64 + 0.5) * h;
                }
                f(&x[..dim])
            })
            .collect();
        Self::new(dim, level, samples)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.samples[flat_index(idx, self.side())]
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { samples: self.samples.iter().map(|&v| f(v)).collect(), ..*self }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dim != other.dim || self.level != other.level {
            return Err(Error::Invalid(format!(
                "grid mismatch: (d={}, L={}) vs (d={}, L={})",
                self.dim, self.level, other.dim, other.level
            )));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { samples, ..*self })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `x_axis -> 1 - x_axis`.
    pub fn reflect(&self, axis: usize) -> Self {
        let side = self.side();
        let samples = (0..self.samples.len())
            .map(|flat| {
                let mut idx = multi_index(flat, side, self.dim);
                idx[axis] = side - 1 - idx[axis];
                self.samples[flat_index(&idx[..self.dim], side)]
            })
            .collect();
        Self { samples, ..*self }
    }

    /// True when every sample equals the first one.
    pub fn is_constant(&self) -> bool {
        self.samples.iter().all(|&v| v == self.samples[0])
    }

    /// The zero-extension `f°` on a window padded by `margin` cells per side.
    pub fn zero_extend(&self, margin: usize) -> ExtendedGridFunction {
        let side = self.side();
        let wide = side + 2 * margin;
        let mut samples = vec![0.0; wide.pow(self.dim as u32)];
        for (flat, &v) in self.samples.iter().enumerate() {
            let mut idx = multi_index(flat, side, self.dim);
            for i in idx.iter_mut().take(self.dim) {
                *i += margin;
            }
            samples[flat_index(&idx[..self.dim], wide)] = v;
        }
        ExtendedGridFunction { dim: self.dim, level: self.level, margin, samples }
    }

    /// Default padding: half a unit on each side.
    pub fn default_margin(level: u32) -> usize {
        1usize << (level - 1)
    }
}

impl Lattice for GridFunction {
    fn dim(&self) -> usize {
        self.dim
    }
    fn level(&self) -> u32 {
        self.level
    }
    fn side(&self) -> usize {
        1usize << self.level
    }
    fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// A lattice function on `[-m 2^-L, 1 + m 2^-L]^d`, identified with a
/// function on `R^d` that vanishes outside that window.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedGridFunction {
    dim: usize,
    level: u32,
    margin: usize,
    samples: Vec<f64>,
}

impl ExtendedGridFunction {
    pub fn from_samples(dim: usize, level: u32, margin: usize, samples: Vec<f64>) -> Result<Self> {
        check_dim(dim)?;
        let wide = (1usize << level) + 2 * margin;
        let expected = wide.pow(dim as u32);
        if samples.len() != expected {
            return Err(Error::SampleCount { expected, got: samples.len() });
        }
        Ok(Self { dim, level, margin, samples })
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn base_side(&self) -> usize {
        1usize << self.level
    }

    /// The cells lying inside `Q`.
    pub fn restrict(&self) -> GridFunction {
        let side = self.base_side();
        let wide = self.side();
        let samples = (0..side.pow(self.dim as u32))
            .map(|flat| {
                let mut idx = multi_index(flat, side, self.dim);
                for i in idx.iter_mut().take(self.dim) {
                    *i += self.margin;
                }
                self.samples[flat_index(&idx[..self.dim], wide)]
            })
            .collect();
        GridFunction { dim: self.dim, level: self.level, samples }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dim != other.dim || self.level != other.level || self.margin != other.margin {
            return Err(Error::Invalid("extended grid mismatch".into()));
        }
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { samples, ..*self })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { samples: self.samples.iter().map(|&v| f(v)).collect(), ..*self }
    }

    /// `Δ_h g(x) = g(x+h) - g(x)` for a lattice shift; reads past the window are 0.
    pub fn difference(&self, shift: &LatticeShift) -> ExtendedGridFunction {
        assert_eq!(shift.k.len(), self.dim, "shift dimension mismatch");
        let wide = self.side() as i64;
        let samples = (0..self.samples.len())
            .map(|flat| {
                let idx = multi_index(flat, wide as usize, self.dim);
                let mut src = 0i64;
                let mut inside = true;
                for a in (0..self.dim).rev() {
                    let j = idx[a] as i64 + shift.k[a];
                    inside &= (0..wide).contains(&j);
                    src = src * wide + j;
                }
                let ahead = if inside { self.samples[src as usize] } else { 0.0 };
                ahead - self.samples[flat]
            })
            .collect();
        ExtendedGridFunction { samples, ..*self }
    }
}

impl Lattice for ExtendedGridFunction {
    fn dim(&self) -> usize {
        self.dim
    }
    fn level(&self) -> u32 {
        self.level
    }
    fn side(&self) -> usize {
        (1usize << self.level) + 2 * self.margin
    }
    fn samples(&self) -> &[f64] {
        &self.samples
    }
}

/// A shift `h = k 2^-L` by a whole number of cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeShift {
    k: Vec<i64>,
    level: u32,
}

impl LatticeShift {
    pub fn new(k: Vec<i64>, level: u32) -> Self {
        Self { k, level }
    }

    pub fn cells(&self) -> &[i64] {
        &self.k
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn is_zero(&self) -> bool {
        self.k.iter().all(|&c| c == 0)
    }

    /// Largest per-axis displacement in cells.
    pub fn max_abs(&self) -> usize {
        self.k.iter().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// `|h|`, the Euclidean length in physical units.
    pub fn length(&self) -> f64 {
        cells_length(&self.k) * (-(self.level as f64)).exp2()
    }

    pub fn negated(&self) -> Self {
        Self { k: self.k.iter().map(|c| -c).collect(), level: self.level }
    }
}

pub(crate) fn cells_length(k: &[i64]) -> f64 {
    (k.iter().map(|&c| (c * c) as f64).sum::<f64>()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn linear(d: usize, level: u32) -> GridFunction {
        GridFunction::from_fn(d, level, |x| x.iter().sum()).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(GridFunction::new(1, 2, vec![0.0; 3]), Err(Error::SampleCount { expected: 4, got: 3 }));
        assert_eq!(GridFunction::new(4, 1, vec![0.0; 16]), Err(Error::UnsupportedDimension(4)));
        assert_eq!(GridFunction::new(1, 0, vec![0.0]), Err(Error::InvalidLevel(0)));
        assert_eq!(GridFunction::new(1, 1, vec![0.0, f64::NAN]), Err(Error::NonFinite(1)));
    }

    #[test]
    fn zero_extend_pads_with_zeros() {
        let one = GridFunction::new(1, 1, vec![1.0, 1.0]).unwrap();
        assert_eq!(one.zero_extend(1).samples(), &[0.0, 1.0, 1.0, 0.0]);
        assert_eq!(linear(1, 1).zero_extend(2).samples(), &[0.0, 0.0, 0.25, 0.75, 0.0, 0.0]);
        let zero = GridFunction::zeros(2, 2).unwrap();
        assert!(zero.zero_extend(3).samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn restrict_inverts_zero_extend_in_2d() {
        let f = GridFunction::from_fn(2, 3, |x| x[0] * 3.0 - x[1].sin()).unwrap();
        for m in [0, 1, 5] {
            assert_eq!(f.zero_extend(m).restrict(), f);
        }
    }

    #[test]
    fn norms() {
        let one = GridFunction::new(1, 2, vec![1.0; 4]).unwrap();
        for p in [1.0, 1.5, 2.0, 3.0, 7.0] {
            assert_relative_eq!(one.lp_norm(p).unwrap(), 1.0, epsilon = 1e-15);
        }
        assert_eq!(GridFunction::zeros(2, 3).unwrap().lp_norm(2.0).unwrap(), 0.0);
        assert_relative_eq!(linear(1, 12).lp_norm(2.0).unwrap(), 1.0 / 3f64.sqrt(), epsilon = 1e-4);
        assert_eq!(one.lp_norm(0.5), Err(Error::InvalidExponent(0.5)));
    }

    #[test]
    fn zero_shift_difference_is_zero() {
        let g = linear(2, 3).zero_extend(2);
        let d = g.difference(&LatticeShift::new(vec![0, 0], 3));
        assert!(d.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn indicator_difference_flips_two_cells() {
        let chi = GridFunction::new(1, 2, vec![1.0; 4]).unwrap().zero_extend(1);
        let d = chi.difference(&LatticeShift::new(vec![1], 2));
        assert_eq!(d.lp_norm(1.0).unwrap(), 0.5);
        assert_eq!(d.samples(), &[1.0, 0.0, 0.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn shift_symmetry_of_norms() {
        let g = GridFunction::from_fn(2, 3, |x| (5.0 * x[0]).cos() + x[1]).unwrap().zero_extend(4);
        let s = LatticeShift::new(vec![2, -1], 3);
        for p in [1.0, 2.0, 3.0] {
            let a = g.difference(&s).lp_norm(p).unwrap();
            let b = g.difference(&s.negated()).lp_norm(p).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn shift_length() {
        let s = LatticeShift::new(vec![3, 4], 3);
        assert_eq!(s.length(), 5.0 / 8.0);
        assert_eq!(s.max_abs(), 4);
    }

    #[test]
    fn reflect_is_involution() {
        let f = GridFunction::from_fn(2, 2, |x| x[0] + 10.0 * x[1]).unwrap();
        assert_eq!(f.reflect(0).reflect(0), f);
        assert_eq!(f.reflect(1).get(&[0, 0]), f.get(&[0, 3]));
    }
}
