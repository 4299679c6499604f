//! Piecewise-constant approximation on dyadic cubes.
//!
//! Cube means are computed by repeated pairwise averaging along each axis, so
//! a block of equal samples averages to exactly that sample value and the
//! martingale is a bit-exact projection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gridfn::{flat_index, multi_index, GridFunction, Lattice, LatticeShift, Power, MAX_DIM};
use crate::moduli::{whole_space_pair_sum, ShiftProfile};

/// A dyadic subcube of `Q`: side `2^-level`, lower corner `origin * 2^-level`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DyadicCube {
    pub level: u32,
    pub origin: [usize; MAX_DIM],
    pub dim: usize,
}

impl DyadicCube {
    pub fn root(dim: usize) -> Self {
        Self { level: 0, origin: [0; MAX_DIM], dim }
    }

    pub fn side_length(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn volume(&self) -> f64 {
        (-((self.dim as u32 * self.level) as f64)).exp2()
    }

    /// The `2^d` children, in flat order of their origins.
    pub fn children(&self) -> Vec<DyadicCube> {
        (0..1usize << self.dim)
            .map(|bits| {
                let mut origin = [0; MAX_DIM];
                for (a, (o, &parent)) in origin.iter_mut().zip(&self.origin).take(self.dim).enumerate() {
                    *o = 2 * parent + ((bits >> a) & 1);
                }
                DyadicCube { level: self.level + 1, origin, dim: self.dim }
            })
            .collect()
    }

    pub fn parent(&self) -> Option<DyadicCube> {
        (self.level > 0).then(|| {
            let mut origin = self.origin;
            origin.iter_mut().for_each(|o| *o /= 2);
            DyadicCube { level: self.level - 1, origin, dim: self.dim }
        })
    }

    /// Per-axis index range of the level-`level` cells inside this cube.
    pub fn cell_ranges(&self, level: u32) -> [(usize, usize); MAX_DIM] {
        let w = 1usize << (level - self.level);
        let mut out = [(0, 1); MAX_DIM];
        for (r, &o) in out.iter_mut().zip(&self.origin).take(self.dim) {
            *r = (o * w, (o + 1) * w);
        }
        out
    }

    /// Flat indices of the level-`level` cells in this cube.
    pub fn cells(&self, level: u32) -> Vec<usize> {
        let side = 1usize << level;
        let r = self.cell_ranges(level);
        let mut out = Vec::with_capacity(1 << (self.dim as u32 * (level - self.level)));
        for i2 in r[2].0..r[2].1 {
            for i1 in r[1].0..r[1].1 {
                let base = i1 * side + i2 * side * side;
                out.extend(base + r[0].0..base + r[0].1);
            }
        }
        out
    }

    /// Origin indices as text, `i0:i1:...`.
    pub fn origin_label(&self) -> String {
        self.origin[..self.dim].iter().map(|o| o.to_string()).collect::<Vec<_>>().join(":")
    }
}

/// Halves the resolution by pairwise averaging along each axis.
fn coarsen(samples: &[f64], side: usize, dim: usize) -> Vec<f64> {
    let mut cur = samples.to_vec();
    let mut shape = [1usize; MAX_DIM];
    shape[..dim].iter_mut().for_each(|s| *s = side);
    for axis in 0..dim {
        let mut next_shape = shape;
        next_shape[axis] /= 2;
        let mut next = vec![0.0; next_shape.iter().product()];
        let stride: usize = shape[..axis].iter().product();
        let next_stride: usize = next_shape[..axis].iter().product();
        let outer: usize = shape[axis + 1..].iter().product();
        for o in 0..outer {
            for j in 0..next_shape[axis] {
                for s in 0..stride {
                    let a = cur[s + stride * (2 * j) + o * stride * shape[axis]];
                    let b = cur[s + stride * (2 * j + 1) + o * stride * shape[axis]];
                    next[s + next_stride * j + o * next_stride * next_shape[axis]] = 0.5 * (a + b);
                }
            }
        }
        cur = next;
        shape = next_shape;
    }
    cur
}

/// Means of `f` over every dyadic cube, level by level.
#[derive(Debug, Clone)]
pub struct MeanPyramid {
    dim: usize,
    levels: Vec<Vec<f64>>,
}

impl MeanPyramid {
    pub fn new(f: &GridFunction) -> Self {
        let mut levels = vec![f.samples().to_vec()];
        let mut side = f.side();
        while side > 1 {
            let next = coarsen(levels.last().unwrap(), side, f.dim());
            side /= 2;
            levels.push(next);
        }
        levels.reverse();
        Self { dim: f.dim(), levels }
    }

    /// Means over the cubes of level `k`, flat-indexed like a level-`k` grid.
    pub fn level(&self, k: u32) -> &[f64] {
        &self.levels[k as usize]
    }

    pub fn mean(&self, cube: &DyadicCube) -> f64 {
        self.levels[cube.level as usize][flat_index(&cube.origin[..self.dim], 1 << cube.level)]
    }
}

/// `ψ = sum a_Q χ_Q` over a tiling of `Q` by dyadic cubes.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseConstant {
    dim: usize,
    cubes: Vec<DyadicCube>,
    values: Vec<f64>,
    uniform_level: Option<u32>,
}

impl PiecewiseConstant {
    /// Uniform level-`k` partition; `values` are flat-indexed like a level-`k` grid.
    pub fn uniform(dim: usize, k: u32, values: Vec<f64>) -> Result<Self> {
        crate::gridfn::check_dim(dim)?;
        let side = 1usize << k;
        let expected = side.pow(dim as u32);
        if values.len() != expected {
            return Err(Error::SampleCount { expected, got: values.len() });
        }
        let cubes = (0..expected)
            .map(|flat| DyadicCube { level: k, origin: multi_index(flat, side, dim), dim })
            .collect();
        Ok(Self { dim, cubes, values, uniform_level: Some(k) })
    }

    /// Arbitrary dyadic partition; the cubes must tile `Q`.
    pub fn from_cubes(dim: usize, cubes: Vec<DyadicCube>, values: Vec<f64>) -> Result<Self> {
        crate::gridfn::check_dim(dim)?;
        if cubes.len() != values.len() {
            return Err(Error::Invalid(format!("{} cubes but {} values", cubes.len(), values.len())));
        }
        check_tiling(dim, &cubes)?;
        let levels: Vec<u32> = cubes.iter().map(|c| c.level).collect();
        let uniform_level = (levels.iter().all(|&l| l == levels[0]) && !levels.is_empty()).then(|| levels[0]);
        Ok(Self { dim, cubes, values, uniform_level })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn uniform_level(&self) -> Option<u32> {
        self.uniform_level
    }

    pub fn finest_level(&self) -> u32 {
        self.cubes.iter().map(|c| c.level).max().unwrap_or(0)
    }

    /// Cell samples at resolution `level >= finest_level()`.
    pub fn to_grid(&self, level: u32) -> Result<GridFunction> {
        if level < self.finest_level() {
            return Err(Error::LevelTooFine { requested: self.finest_level(), level });
        }
        let mut samples = vec![0.0; 1usize << (self.dim as u32 * level)];
        for (cube, &v) in self.cubes.iter().zip(&self.values) {
            for i in cube.cells(level) {
                samples[i] = v;
            }
        }
        GridFunction::new(self.dim, level, samples)
    }

    /// `‖ψ‖_p^p = sum |Q| |a_Q|^p`.
    pub fn lp_norm_pow(&self, p: f64) -> Result<f64> {
        let pow = Power::new(p)?;
        Ok(self.cubes.iter().zip(&self.values).map(|(c, &v)| c.volume() * pow.apply(v)).sum())
    }
}

/// Verifies that dyadic cubes have disjoint interiors and cover `Q`.
pub fn check_tiling(dim: usize, cubes: &[DyadicCube]) -> Result<()> {
    let finest = cubes.iter().map(|c| c.level).max().unwrap_or(0);
    let volume: f64 = cubes.iter().map(|c| c.volume()).sum();
    if volume != 1.0 {
        return Err(Error::NotATiling(format!("volumes sum to {volume}")));
    }
    let mut covered = vec![false; 1usize << (dim as u32 * finest)];
    for c in cubes {
        if c.dim != dim || c.origin[..dim].iter().any(|&o| o >> c.level != 0) {
            return Err(Error::NotATiling(format!("cube {c:?} is not a dyadic subcube of Q")));
        }
        for i in c.cells(finest) {
            if std::mem::replace(&mut covered[i], true) {
                return Err(Error::NotATiling(format!("cube at level {} origin {} overlaps", c.level, c.origin_label())));
            }
        }
    }
    Ok(())
}

/// The dyadic martingale `f_N`: means of `f` over the level-`N` cubes.
pub fn martingale(f: &GridFunction, level: u32) -> Result<PiecewiseConstant> {
    if level > f.level() {
        return Err(Error::LevelTooFine { requested: level, level: f.level() });
    }
    let pyramid = MeanPyramid::new(f);
    PiecewiseConstant::uniform(f.dim(), level, pyramid.level(level).to_vec())
}

/// Volume of the unit ball in `R^d`, `π^{d/2} / Γ(d/2 + 1)`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => panic!("unit ball volume requested for d = {dim}"),
    }
}

/// `(v_d d^{(d+p)/2})^{1/p}`, the constant in the martingale error bound.
pub fn martingale_constant(dim: usize, p: f64) -> f64 {
    let d = dim as f64;
    (unit_ball_volume(dim) * d.powf((d + p) / 2.0)).powf(p.recip())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ApproxError {
    pub level: u32,
    pub p: f64,
    /// `‖f - f_N‖_p`.
    pub error: f64,
    /// `C ζ(f, 2^-N)_p`.
    pub bound: f64,
    pub constant: f64,
    pub zeta: f64,
}

impl ApproxError {
    pub fn holds(&self) -> bool {
        self.error <= self.bound * (1.0 + 1e-12) + 1e-15
    }
}

fn martingale_error(f: &GridFunction, pyramid: &MeanPyramid, level: u32, p: f64) -> Result<f64> {
    let pow = Power::new(p)?;
    let means = pyramid.level(level);
    let side = f.side();
    let coarse = 1usize << level;
    let ratio = side / coarse;
    let sum: f64 = f
        .samples()
        .iter()
        .enumerate()
        .map(|(flat, &v)| {
            let mut idx = multi_index(flat, side, f.dim());
            idx.iter_mut().for_each(|i| *i /= ratio);
            pow.apply(v - means[flat_index(&idx[..f.dim()], coarse)])
        })
        .sum();
    Ok((sum * f.cell_volume()).powf(p.recip()))
}

/// `‖f - f_N‖_p` against `C ζ(f, 2^-N)_p`, for one `N <= L - 2`.
pub fn approx_error(f: &GridFunction, level: u32, p: f64) -> Result<ApproxError> {
    if level + 2 > f.level() {
        return Err(Error::LevelTooFine { requested: level + 2, level: f.level() });
    }
    let profile = ShiftProfile::interior(f, p, (-(level as f64)).exp2())?;
    approx_error_with(f, &MeanPyramid::new(f), &profile, level, p)
}

fn approx_error_with(f: &GridFunction, pyramid: &MeanPyramid, profile: &ShiftProfile, level: u32, p: f64) -> Result<ApproxError> {
    let constant = martingale_constant(f.dim(), p);
    let zeta = profile.at((-(level as f64)).exp2()).unwrap_or(0.0);
    Ok(ApproxError { level, p, error: martingale_error(f, pyramid, level, p)?, bound: constant * zeta, constant, zeta })
}

/// [`approx_error`] for every `N = 0, ..., L - 2`, sharing one shift profile.
pub fn approx_error_table(f: &GridFunction, p: f64) -> Result<Vec<ApproxError>> {
    Ok(approx_error_tables(f, &[p])?.remove(0))
}

/// [`approx_error_table`] for several exponents, sharing one sweep over the shifts.
pub fn approx_error_tables(f: &GridFunction, ps: &[f64]) -> Result<Vec<Vec<ApproxError>>> {
    let pyramid = MeanPyramid::new(f);
    let profiles = ShiftProfile::interior_multi(f, ps, 1.0)?;
    ps.iter()
        .zip(&profiles)
        .map(|(&p, profile)| (0..=f.level().saturating_sub(2)).map(|n| approx_error_with(f, &pyramid, profile, n, p)).collect())
        .collect()
}

/// Both sides of the piecewise-constant difference estimate for one shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BbmCheck {
    /// `‖Δ_h ψ°‖_p^p`.
    pub lhs: f64,
    /// `2^p min{|h| 2^k sqrt(d), 1} ‖ψ‖_p^p`, uniform partitions only.
    pub rhs_uniform: Option<f64>,
    /// `2^p sum min{sqrt(d) |h| / l(Q), 1} |Q| |a_Q|^p`.
    pub rhs_general: f64,
}

pub const BBM_TOLERANCE: f64 = 1e-12;

impl BbmCheck {
    pub fn rhs(&self) -> f64 {
        self.rhs_uniform.unwrap_or(self.rhs_general)
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs_general + BBM_TOLERANCE && self.rhs_uniform.is_none_or(|r| self.lhs <= r + BBM_TOLERANCE)
    }
}

/// Evaluates both sides exactly on the lattice of `shift`.
pub fn bbm_check(psi: &PiecewiseConstant, shift: &LatticeShift, p: f64) -> Result<BbmCheck> {
    let pow = Power::new(p)?;
    if shift.cells().len() != psi.dim() {
        return Err(Error::Invalid("shift dimension does not match ψ".into()));
    }
    let grid = psi.to_grid(shift.level())?;
    let g = grid.zero_extend(shift.max_abs());
    let lhs = whole_space_pair_sum(g.samples(), g.side(), g.dim(), shift.cells(), pow) * g.cell_volume();
    let h = shift.length();
    let sqrt_d = (psi.dim() as f64).sqrt();
    let two_p = 2f64.powf(p);
    let rhs_general = two_p
        * psi
            .cubes()
            .iter()
            .zip(psi.values())
            .map(|(c, &a)| (sqrt_d * h / c.side_length()).min(1.0) * c.volume() * pow.apply(a))
            .sum::<f64>();
    let rhs_uniform = match psi.uniform_level() {
        Some(k) => Some(two_p * (h * (k as f64).exp2() * sqrt_d).min(1.0) * psi.lp_norm_pow(p)?),
        None => None,
    };
    Ok(BbmCheck { lhs, rhs_uniform, rhs_general })
}

/// Random `ψ` with values in `[-1, 1]`: uniform at level `k`, or a random dyadic
/// refinement tree no deeper than `k`.
pub fn random_piecewise_constant(rng: &mut impl Rng, dim: usize, k: u32, uniform: bool) -> Result<PiecewiseConstant> {
    if uniform {
        let values = (0..1usize << (dim as u32 * k)).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        return PiecewiseConstant::uniform(dim, k, values);
    }
    let mut cubes = vec![];
    let mut stack = vec![DyadicCube::root(dim)];
    while let Some(c) = stack.pop() {
        if c.level < k && (c.level == 0 || rng.gen_bool(0.5)) {
            stack.extend(c.children());
        } else {
            cubes.push(c);
        }
    }
    cubes.sort();
    let values = cubes.iter().map(|_| rng.gen_range(-1.0..=1.0)).collect();
    PiecewiseConstant::from_cubes(dim, cubes, values)
}

/// Uniformly random lattice vector with `0 < |k| <= radius` cells.
pub fn random_shift(rng: &mut impl Rng, dim: usize, level: u32, radius: i64) -> LatticeShift {
    loop {
        let k: Vec<i64> = (0..dim).map(|_| rng.gen_range(-radius..=radius)).collect();
        let len2: i64 = k.iter().map(|c| c * c).sum();
        if len2 > 0 && len2 <= radius * radius {
            return LatticeShift::new(k, level);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BbmRow {
    pub seed: u64,
    pub d: usize,
    pub k: u32,
    pub p: f64,
    pub h: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub const BBM_CSV_HEADER: &str = "seed,d,k,p,h,lhs,rhs,pass";

impl BbmRow {
    pub fn csv_line(&self) -> String {
        format!("{},{},{},{},{},{},{},{}", self.seed, self.d, self.k, self.p, self.h, self.lhs, self.rhs, self.pass)
    }
}

/// Lattice on which suite cases are evaluated.
pub const BBM_SUITE_LEVEL: u32 = 6;

/// Seeded random suite: `cases` functions `ψ` (`d ∈ {1,2}`, `k <= 5`, alternating
/// uniform and general partitions), `shifts` random shifts with `|h| <= 1`,
/// each at `p ∈ {1,2,3}`.
pub fn bbm_suite(seed: u64, cases: usize, shifts: usize) -> Result<Vec<BbmRow>> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(cases * shifts * 3);
    for case in 0..cases {
        let case_seed: u64 = master.gen();
        let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
        let d = rng.gen_range(1..=2);
        let k = rng.gen_range(0..=5);
        let psi = random_piecewise_constant(&mut rng, d, k, case % 2 == 0)?;
        for _ in 0..shifts {
            let shift = random_shift(&mut rng, d, BBM_SUITE_LEVEL, 1 << BBM_SUITE_LEVEL);
            for p in [1.0, 2.0, 3.0] {
                let check = bbm_check(&psi, &shift, p)?;
                rows.push(BbmRow {
                    seed: case_seed,
                    d,
                    k: psi.finest_level(),
                    p,
                    h: shift.length(),
                    lhs: check.lhs,
                    rhs: check.rhs(),
                    pass: check.holds(),
                });
            }
        }
    }
    Ok(rows)
}

/// `ψ = +1` on `[0, 1/2)`, `-1` on `[1/2, 1]`: equality at `p = 1`, `h = 1/4`.
pub fn bbm_equality_case() -> Result<BbmCheck> {
    let psi = PiecewiseConstant::uniform(1, 1, vec![1.0, -1.0])?;
    bbm_check(&psi, &LatticeShift::new(vec![1], 2), 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::{sample, FunctionSpec};
    use approx::assert_relative_eq;

    #[test]
    fn martingale_examples() {
        let lin = sample(&FunctionSpec::Linear, 1, 6).unwrap();
        assert_eq!(martingale(&lin, 1).unwrap().values(), &[0.25, 0.75]);
        let c = sample(&FunctionSpec::Const { value: 0.3 }, 2, 5).unwrap();
        for n in 0..=5 {
            assert!(martingale(&c, n).unwrap().values().iter().all(|&v| v == 0.3));
        }
        let f = sample(&"cusp alpha=0.3 center=0.4".parse().unwrap(), 2, 4).unwrap();
        assert_eq!(martingale(&f, 4).unwrap().to_grid(4).unwrap(), f);
        assert!(matches!(martingale(&f, 5), Err(Error::LevelTooFine { .. })));
    }

    #[test]
    fn martingale_is_a_projection() {
        let f = sample(&"random level=4 seed=3".parse().unwrap(), 2, 6).unwrap();
        let f = f.zip_with(&sample(&FunctionSpec::Linear, 2, 6).unwrap(), |a, b| a + b.sin()).unwrap();
        for n in 0..=6 {
            let once = martingale(&f, n).unwrap().to_grid(6).unwrap();
            let twice = martingale(&once, n).unwrap().to_grid(6).unwrap();
            assert_eq!(once, twice);
        }
    }

    #[test]
    fn linear_error_closed_form() {
        let f = sample(&FunctionSpec::Linear, 1, 10).unwrap();
        let e = approx_error(&f, 1, 2.0).unwrap();
        // midpoint sampling loses (1/4)^L of the variance integral
        let exact = (1.0 / 48.0 * (1.0 - 4f64.powi(-9))).sqrt();
        assert_relative_eq!(e.error, exact, max_relative = 1e-12);
        assert!((e.error - 1.0 / (4.0 * 3f64.sqrt())).abs() < 1e-6);
        assert!(e.holds());
        let c = sample(&FunctionSpec::Const { value: 4.0 }, 1, 6).unwrap();
        assert!(approx_error_table(&c, 2.0).unwrap().iter().all(|e| e.error == 0.0));
    }

    #[test]
    fn unit_ball_volumes_match_gamma_formula() {
        use std::f64::consts::PI;
        // Γ(3/2) = sqrt(π)/2, Γ(2) = 1, Γ(5/2) = 3 sqrt(π)/4
        let gamma = [PI.sqrt() / 2.0, 1.0, 3.0 * PI.sqrt() / 4.0];
        for d in 1..=3 {
            assert_relative_eq!(unit_ball_volume(d), PI.powf(d as f64 / 2.0) / gamma[d - 1], max_relative = 1e-15);
        }
        assert_relative_eq!(martingale_constant(2, 2.0), (4.0 * PI).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn equality_case() {
        let c = bbm_equality_case().unwrap();
        assert_eq!(c.lhs, 1.0);
        assert_eq!(c.rhs_uniform, Some(1.0));
        assert_eq!(c.rhs_general, 1.0);
        assert!(c.holds());
    }

    #[test]
    fn zero_shift() {
        let psi = PiecewiseConstant::uniform(2, 2, (0..16).map(|i| i as f64).collect()).unwrap();
        let c = bbm_check(&psi, &LatticeShift::new(vec![0, 0], 3), 2.0).unwrap();
        assert_eq!((c.lhs, c.rhs_general, c.rhs_uniform), (0.0, 0.0, Some(0.0)));
    }

    #[test]
    fn tiling_checks() {
        let root = DyadicCube::root(2);
        let mut kids = root.children();
        assert!(check_tiling(2, &kids).is_ok());
        let grand = kids[3].children();
        kids.pop();
        kids.extend(grand);
        assert!(check_tiling(2, &kids).is_ok());
        kids.push(root);
        assert!(check_tiling(2, &kids).is_err());
        assert!(check_tiling(2, &root.children()[..3]).is_err());
        assert_eq!(kids[4].parent(), Some(root.children()[3]));
    }

    #[test]
    fn suite_small() {
        let rows = bbm_suite(11, 6, 3).unwrap();
        assert_eq!(rows.len(), 54);
        assert!(rows.iter().all(|r| r.pass), "{:?}", rows.iter().find(|r| !r.pass));
        assert_eq!(rows, bbm_suite(11, 6, 3).unwrap());
    }
}
