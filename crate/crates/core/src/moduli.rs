//! L^p moduli of continuity on the lattice.
//!
//! * `ζ(f,t)_p`: sup over `|h| <= t` of `‖f(·+h) - f‖_{L^p(Q_h)}`, with
//!   `Q_h = {x ∈ Q : x + h ∈ Q}`.
//! * `ω(g,t)_p`: the same supremum with the integral over all of `R^d`.
//! * `Ω(f,t)_p`: the infimum over dyadic `s` of `ζ(f,s)_p` plus a boundary
//!   penalty times `‖f‖_p`.
//!
//! Suprema run over a [`ShiftSet`]. Evaluating the norm once per shift and
//! taking running maxima in order of `|h|` gives a [`ShiftProfile`] that
//! answers every `t` at once and is monotone in `t` by construction. Only
//! half of the shift ball is visited since `‖Δ_{-h} g‖_p = ‖Δ_h g‖_p`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gridfn::{cells_length, ExtendedGridFunction, GridFunction, Lattice, Power};

/// Half-ball shift counts above this are thinned out.
pub const EXACT_SHIFT_BUDGET: usize = 256;
/// Random directions used for `d = 3`.
pub const RANDOM_DIRECTIONS_3D: usize = 256;
const DIRECTION_SEED: u64 = 0x5eed_d1ec;
const LENGTH_SLACK: f64 = 1e-12;

/// How completely a shift set covers the lattice ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    /// Every nonzero lattice vector of the ball.
    Exact,
    /// Exact near the origin, then rings thinned to a stride growing with the radius.
    Strided,
    /// Axes, diagonals and seeded random directions (`d = 3`).
    Directional,
}

impl Coverage {
    /// Anything short of exact gives a lower bound on the supremum.
    pub fn is_lower_bound(self) -> bool {
        self != Coverage::Exact
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Coverage::Exact => "exact",
            Coverage::Strided => "strided",
            Coverage::Directional => "directional",
        }
    }
}

/// Lattice shifts (in cells) sorted by length, one per `±k` pair.
#[derive(Debug, Clone)]
pub struct ShiftSet {
    level: u32,
    shifts: Vec<Vec<i64>>,
    coverage: Coverage,
}

fn canonical(k: &[i64]) -> bool {
    k.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

fn half_ball(dim: usize, radius: f64, stride: i64, inner: f64) -> Vec<Vec<i64>> {
    let r = (radius / stride as f64).floor() as i64;
    let r2 = radius * radius * (1.0 + LENGTH_SLACK);
    let in2 = inner * inner * (1.0 + LENGTH_SLACK);
    let span = |a: usize| if a < dim { -r..=r } else { 0..=0 };
    let mut out = Vec::new();
    for c2 in span(2) {
        for c1 in span(1) {
            for c0 in span(0) {
                let k: Vec<i64> = [c0, c1, c2][..dim].iter().map(|c| c * stride).collect();
                let len2: f64 = k.iter().map(|&c| (c * c) as f64).sum();
                if canonical(&k) && len2 <= r2 && len2 > in2 {
                    out.push(k);
                }
            }
        }
    }
    out
}

fn canonicalize(mut k: Vec<i64>) -> Option<Vec<i64>> {
    if k.iter().all(|&c| c == 0) {
        return None;
    }
    if !canonical(&k) {
        k.iter_mut().for_each(|c| *c = -*c);
    }
    Some(k)
}

impl ShiftSet {
    /// Shifts with `0 < |h| <= t_max` on the level-`level` lattice.
    pub fn ball(dim: usize, level: u32, t_max: f64) -> Self {
        let side = (1u64 << level) as f64;
        // lengths beyond the cube diagonal never overlap Q
        let radius = (t_max * side).min(side * (dim as f64).sqrt());
        let full = half_ball(dim, radius, 1, 0.0);
        let (mut shifts, coverage) = if full.len() <= EXACT_SHIFT_BUDGET {
            (full, Coverage::Exact)
        } else if dim <= 2 {
            (Self::rings(dim, radius), Coverage::Strided)
        } else {
            (Self::directions(radius), Coverage::Directional)
        };
        sort_by_length(&mut shifts);
        Self { level, shifts, coverage }
    }

    fn rings(dim: usize, radius: f64) -> Vec<Vec<i64>> {
        // exact core whose size stays within the budget
        let mut core = 1.0f64;
        while half_ball(dim, core * 2.0, 1, 0.0).len() <= EXACT_SHIFT_BUDGET {
            core *= 2.0;
        }
        let mut out = half_ball(dim, core.min(radius), 1, 0.0);
        let mut inner = core;
        let mut stride = 1i64;
        while inner < radius {
            stride *= 2;
            let outer = (inner * 2.0).min(radius);
            out.extend(half_ball(dim, outer, stride, inner));
            inner *= 2.0;
        }
        out
    }

    fn directions(radius: f64) -> Vec<Vec<i64>> {
        let mut dirs: Vec<[f64; 3]> = Vec::new();
        for k in half_ball(3, 3f64.sqrt(), 1, 0.0) {
            if k.iter().all(|c| c.abs() <= 1) {
                dirs.push([k[0] as f64, k[1] as f64, k[2] as f64]);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
        while dirs.len() < 13 + RANDOM_DIRECTIONS_3D {
            let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let n2 = v.iter().map(|x| x * x).sum::<f64>();
            if n2 > 1e-6 && n2 <= 1.0 {
                dirs.push(v);
            }
        }
        // geometric ladder of lengths, ratio sqrt(2)
        let mut lengths = vec![];
        let mut lam = 1.0f64;
        while lam <= radius {
            lengths.push(lam);
            lam *= std::f64::consts::SQRT_2;
        }
        lengths.push(radius);
        let mut out: Vec<Vec<i64>> = Vec::new();
        for d in &dirs {
            let n = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            for &lam in &lengths {
                let k: Vec<i64> = d.iter().map(|x| (x / n * lam).round() as i64).collect();
                if cells_length(&k) <= radius * (1.0 + LENGTH_SLACK) {
                    if let Some(k) = canonicalize(k) {
                        out.push(k);
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    pub fn coverage(&self) -> Coverage {
        self.coverage
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn shifts(&self) -> &[Vec<i64>] {
        &self.shifts
    }

    /// Largest per-axis component, i.e. the margin `ω` needs.
    pub fn max_abs(&self) -> usize {
        self.shifts.iter().flatten().map(|c| c.unsigned_abs() as usize).max().unwrap_or(0)
    }

    fn physical_lengths(&self) -> Vec<f64> {
        let h = (-(self.level as f64)).exp2();
        self.shifts.iter().map(|k| cells_length(k) * h).collect()
    }
}

fn cmp_by_length(a: &[i64], b: &[i64]) -> std::cmp::Ordering {
    let la: i64 = a.iter().map(|c| c * c).sum();
    let lb: i64 = b.iter().map(|c| c * c).sum();
    la.cmp(&lb).then_with(|| a.cmp(b))
}

fn sort_by_length(shifts: &mut [Vec<i64>]) {
    shifts.sort_by(|a, b| cmp_by_length(a, b));
}

fn axis_range(k: i64, side: usize) -> (usize, usize) {
    let lo = (-k).max(0) as usize;
    let hi = (side as i64 - k.max(0)).max(lo as i64) as usize;
    (lo, hi)
}

/// `sum |s(i+k) - s(i)|^p` over cells with both `i` and `i + k` in `[0, side)^d`.
pub(crate) fn interior_pair_sum(samples: &[f64], side: usize, dim: usize, k: &[i64], pow: Power) -> f64 {
    let mut out = [0.0];
    interior_pair_sums(samples, side, dim, k, &[pow], &mut out);
    out[0]
}

/// [`interior_pair_sum`] for several exponents in one pass.
pub(crate) fn interior_pair_sums(samples: &[f64], side: usize, dim: usize, k: &[i64], pows: &[Power], out: &mut [f64]) {
    let mut ranges = [(0usize, 1usize); 3];
    let mut kk = [0i64; 3];
    for a in 0..dim {
        ranges[a] = axis_range(k[a], side);
        kk[a] = k[a];
    }
    let stride = [1usize, side, side * side];
    let offset = kk[0] + kk[1] * side as i64 + kk[2] * (side * side) as i64;
    let (lo0, hi0) = ranges[0];
    out.iter_mut().for_each(|v| *v = 0.0);
    if hi0 <= lo0 {
        return;
    }
    for i2 in ranges[2].0..ranges[2].1 {
        for i1 in ranges[1].0..ranges[1].1 {
            let base = i1 * stride[1] + i2 * stride[2];
            let row = &samples[base + lo0..base + hi0];
            let start = (base + lo0) as i64 + offset;
            let ahead = &samples[start as usize..start as usize + row.len()];
            if pows == [Power::One, Power::Two, Power::Three] {
                let (mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0);
                for (&a, &b) in row.iter().zip(ahead) {
                    let d = (b - a).abs();
                    let d2 = d * d;
                    s1 += d;
                    s2 += d2;
                    s3 += d2 * d;
                }
                out[0] += s1;
                out[1] += s2;
                out[2] += s3;
            } else {
                for (acc, &pow) in out.iter_mut().zip(pows) {
                    *acc += row.iter().zip(ahead).map(|(&a, &b)| pow.apply(b - a)).sum::<f64>();
                }
            }
        }
    }
}

/// `sum_{x ∈ Z^d} |g(x+k) - g(x)|^p` for `g` vanishing outside the window.
pub(crate) fn whole_space_pair_sum(samples: &[f64], side: usize, dim: usize, k: &[i64], pow: Power) -> f64 {
    let inside = |c: i64| (0..side as i64).contains(&c);
    let kk = |a: usize| if a < dim { k[a] } else { 0 };
    let outer = |a: usize| if a < dim { 0..side } else { 0..1 };
    let (lo0, hi0) = axis_range(k[0], side);
    let row_sum = |row: &[f64]| row.iter().map(|&a| pow.apply(a)).sum::<f64>();
    let mut sum = 0.0;
    for i2 in outer(2) {
        for i1 in outer(1) {
            let base = i1 * side + i2 * side * side;
            let row = &samples[base..base + side];
            let fwd = inside(i1 as i64 + kk(1)) && inside(i2 as i64 + kk(2));
            let back = inside(i1 as i64 - kk(1)) && inside(i2 as i64 - kk(2));
            // x in the window: |g(x+k) - g(x)|^p, reading 0 off the window
            if fwd && hi0 > lo0 {
                let start = (base as i64 + lo0 as i64 + kk(0) + kk(1) * side as i64 + kk(2) * (side * side) as i64) as usize;
                sum += row_sum(&row[..lo0]) + row_sum(&row[hi0..]);
                sum += row[lo0..hi0]
                    .iter()
                    .zip(&samples[start..start + hi0 - lo0])
                    .map(|(&a, &b)| pow.apply(b - a))
                    .sum::<f64>();
            } else {
                sum += row_sum(row);
            }
            // x off the window with x + k inside: |g(x+k)|^p
            if back {
                let (blo, bhi) = axis_range(-k[0], side);
                sum += row_sum(&row[..blo]) + row_sum(&row[bhi.max(blo)..]);
            } else {
                sum += row_sum(row);
            }
        }
    }
    sum
}

/// Per-shift norms reduced to running maxima in order of `|h|`.
#[derive(Debug, Clone)]
pub struct ShiftProfile {
    lengths: Vec<f64>,
    running_max: Vec<f64>,
    coverage: Coverage,
}

impl ShiftProfile {
    fn build(set: &ShiftSet, norm_pow: impl Fn(&[i64]) -> f64, volume: f64, p: f64) -> Self {
        let lengths = set.physical_lengths();
        let mut best = 0.0f64;
        let running_max = set
            .shifts
            .iter()
            .map(|k| {
                let v = (norm_pow(k).max(0.0) * volume).powf(p.recip());
                best = best.max(v);
                best
            })
            .collect();
        Self { lengths, running_max, coverage: set.coverage }
    }

    /// Interior profile for `ζ(f,·)_p` up to `t_max`.
    pub fn interior(f: &GridFunction, p: f64, t_max: f64) -> Result<Self> {
        let pow = Power::new(p)?;
        let set = ShiftSet::ball(f.dim(), f.level(), t_max);
        let (side, dim) = (f.side(), f.dim());
        Ok(Self::build(&set, |k| interior_pair_sum(f.samples(), side, dim, k, pow), f.cell_volume(), p))
    }

    /// [`ShiftProfile::interior`] for several exponents sharing one sweep over the shifts.
    pub fn interior_multi(f: &GridFunction, ps: &[f64], t_max: f64) -> Result<Vec<Self>> {
        let pows = ps.iter().map(|&p| Power::new(p)).collect::<Result<Vec<_>>>()?;
        let set = ShiftSet::ball(f.dim(), f.level(), t_max);
        let (side, dim) = (f.side(), f.dim());
        let mut sums = vec![vec![0.0; set.shifts.len()]; ps.len()];
        let mut buf = vec![0.0; ps.len()];
        for (i, k) in set.shifts.iter().enumerate() {
            interior_pair_sums(f.samples(), side, dim, k, &pows, &mut buf);
            for (row, &v) in sums.iter_mut().zip(&buf) {
                row[i] = v;
            }
        }
        let index = |k: &[i64]| set.shifts.binary_search_by(|s| cmp_by_length(s, k)).expect("shift in set");
        Ok(ps
            .iter()
            .zip(&sums)
            .map(|(&p, row)| Self::build(&set, |k| row[index(k)], f.cell_volume(), p))
            .collect())
    }

    /// Whole-space profile for `ω(g,·)_p` up to `t_max`.
    pub fn whole_space(g: &ExtendedGridFunction, p: f64, t_max: f64) -> Result<Self> {
        let pow = Power::new(p)?;
        let set = ShiftSet::ball(g.dim(), g.level(), t_max);
        let need = set.max_abs();
        if g.margin() < need {
            return Err(Error::MarginTooSmall { have: g.margin(), need });
        }
        let (side, dim) = (g.side(), g.dim());
        Ok(Self::build(&set, |k| whole_space_pair_sum(g.samples(), side, dim, k, pow), g.cell_volume(), p))
    }

    pub fn coverage(&self) -> Coverage {
        self.coverage
    }

    /// The supremum over shifts with `|h| <= t`; `None` when no shift qualifies.
    pub fn at(&self, t: f64) -> Option<f64> {
        let n = self.lengths.partition_point(|&l| l <= t * (1.0 + LENGTH_SLACK));
        (n > 0).then(|| self.running_max[n - 1])
    }

    fn value(&self, t: f64, level: u32) -> ModulusValue {
        match self.at(t) {
            Some(value) => ModulusValue { value, coverage: self.coverage, below_resolution: false },
            None => {
                debug_assert!(t < (-(level as f64)).exp2() * (1.0 + LENGTH_SLACK) || self.lengths.is_empty());
                ModulusValue { value: 0.0, coverage: self.coverage, below_resolution: true }
            }
        }
    }
}

/// A modulus value plus how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulusValue {
    pub value: f64,
    pub coverage: Coverage,
    /// No nonzero lattice shift fits under `t`; the value is reported as 0.
    pub below_resolution: bool,
}

impl ModulusValue {
    pub fn flags(&self) -> String {
        let mut flags = vec![];
        if self.coverage.is_lower_bound() {
            flags.push(self.coverage.as_str());
        }
        if self.below_resolution {
            flags.push("below_resolution");
        }
        flags.join(";")
    }
}

fn check_scale(t: f64, dim: usize) -> Result<()> {
    if t > 0.0 && t <= (dim as f64).sqrt() * (1.0 + LENGTH_SLACK) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("scale t = {t} outside (0, sqrt(d)]")))
    }
}

/// `ζ(f,t)_p`, the interior L^p modulus.
pub fn zeta(f: &GridFunction, p: f64, t: f64) -> Result<ModulusValue> {
    check_scale(t, f.dim())?;
    Ok(ShiftProfile::interior(f, p, t)?.value(t, f.level()))
}

/// `ω(g,t)_p` over all of `R^d`; `g` must carry a margin covering the shifts.
pub fn omega(g: &ExtendedGridFunction, p: f64, t: f64) -> Result<ModulusValue> {
    check_scale(t, g.dim())?;
    Ok(ShiftProfile::whole_space(g, p, t)?.value(t, g.level()))
}

/// Margin (in cells) a zero-extension needs for `ω` up to scale `t_max`.
pub fn margin_for(level: u32, t_max: f64) -> usize {
    (t_max * (1u64 << level) as f64 * (1.0 + LENGTH_SLACK)).floor() as usize
}

/// Value and minimiser of `Ω(f,t)_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaBig {
    pub value: f64,
    pub argmin_s: f64,
}

/// Evaluates `Ω(f,t)_p` for many `t` from one set of interior moduli.
///
/// The infimum runs over `s = 2^-j`, `0 <= j <= L`; ties go to the smaller `s`.
#[derive(Debug, Clone)]
pub struct OmegaBigEvaluator {
    dim: usize,
    p: f64,
    norm: f64,
    zetas: Vec<(f64, f64)>,
    coverage: Coverage,
}

impl OmegaBigEvaluator {
    pub fn new(f: &GridFunction, p: f64) -> Result<Self> {
        let norm = f.lp_norm(p)?;
        let profile = ShiftProfile::interior(f, p, 1.0)?;
        // smallest s first so that strict improvement keeps the smaller s on ties
        let zetas = (0..=f.level())
            .rev()
            .map(|j| {
                let s = (-(j as f64)).exp2();
                (s, profile.at(s).unwrap_or(0.0))
            })
            .collect();
        Ok(Self { dim: f.dim(), p, norm, zetas, coverage: profile.coverage() })
    }

    pub fn coverage(&self) -> Coverage {
        self.coverage
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// `ζ(f, 2^-j)_p` for `j = L, ..., 0`.
    pub fn dyadic_zetas(&self) -> &[(f64, f64)] {
        &self.zetas
    }

    /// The bracketed expression of the infimum at a given `s`.
    pub fn objective(&self, zeta_s: f64, s: f64, t: f64) -> f64 {
        let r = (self.dim as f64).sqrt() * t / s;
        if self.p > 1.0 {
            zeta_s + r.powf(self.p.recip()).min(1.0) * self.norm
        } else {
            zeta_s + r.max(1.0) * (s / ((self.dim as f64).sqrt() * t)).ln().abs() * self.norm
        }
    }

    pub fn eval(&self, t: f64) -> Result<OmegaBig> {
        if !(t > 0.0) {
            return Err(Error::Invalid(format!("Ω needs t > 0, got {t}")));
        }
        let mut best = OmegaBig { value: f64::INFINITY, argmin_s: 1.0 };
        for &(s, z) in &self.zetas {
            let v = self.objective(z, s, t);
            if v < best.value {
                best = OmegaBig { value: v, argmin_s: s };
            }
        }
        Ok(best)
    }
}

/// `Ω(f,t)_p` with its minimising dyadic `s`.
pub fn omega_big(f: &GridFunction, p: f64, t: f64) -> Result<OmegaBig> {
    OmegaBigEvaluator::new(f, p)?.eval(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Zeta,
    Omega,
    OmegaBig,
    ErrorNorm,
}

impl CurveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveKind::Zeta => "zeta",
            CurveKind::Omega => "omega",
            CurveKind::OmegaBig => "omega_big",
            CurveKind::ErrorNorm => "error_norm",
        }
    }

    pub fn is_monotone(self) -> bool {
        matches!(self, CurveKind::Zeta | CurveKind::Omega)
    }
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for CurveKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeta" => Ok(CurveKind::Zeta),
            "omega" => Ok(CurveKind::Omega),
            "omega_big" | "omega-big" => Ok(CurveKind::OmegaBig),
            "error_norm" | "error-norm" => Ok(CurveKind::ErrorNorm),
            other => Err(Error::Invalid(format!("unknown curve kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub value: f64,
    pub flags: String,
}

/// A `(t, value)` table for one of the moduli or an approximation error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusCurve {
    pub kind: CurveKind,
    pub p: f64,
    pub dim: usize,
    pub level: u32,
    pub function: String,
    pub kernel: Option<String>,
    pub points: Vec<CurvePoint>,
}

pub const CURVE_CSV_HEADER: &str = "t,value,kind,p,d,L,function,flags";

impl ModulusCurve {
    pub fn new(kind: CurveKind, p: f64, dim: usize, level: u32, function: impl Into<String>) -> Self {
        Self { kind, p, dim, level, function: function.into(), kernel: None, points: vec![] }
    }

    pub fn with_kernel(mut self, kernel: impl Into<String>) -> Self {
        self.kernel = Some(kernel.into());
        self
    }

    /// Appends a point, enforcing increasing `t`, finite nonnegative values and
    /// monotonicity for the modulus kinds.
    pub fn push(&mut self, t: f64, value: f64, flags: impl Into<String>) -> Result<()> {
        if !(value.is_finite() && value >= 0.0) {
            return Err(Error::Invalid(format!("curve value {value} at t = {t} is not finite and nonnegative")));
        }
        if let Some(last) = self.points.last() {
            if !(t > last.t) {
                return Err(Error::Invalid(format!("t grid not increasing at {t}")));
            }
            if self.kind.is_monotone() && value < last.value {
                return Err(Error::Invalid(format!("{} decreased at t = {t}", self.kind)));
            }
        }
        self.points.push(CurvePoint { t, value, flags: flags.into() });
        Ok(())
    }

    pub fn ts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.t).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn value_at(&self, t: f64) -> Option<f64> {
        self.points.iter().find(|p| p.t == t).map(|p| p.value)
    }

    /// Pointwise ratio `self / other` on the shared grid; rows with a zero
    /// denominator are skipped.
    pub fn ratio(&self, other: &ModulusCurve, kind: CurveKind) -> Result<ModulusCurve> {
        let mut out = ModulusCurve { kind, points: vec![], ..self.clone() };
        for (a, b) in self.points.iter().zip(&other.points) {
            if a.t != b.t {
                return Err(Error::Invalid("ratio of curves on different grids".into()));
            }
            if b.value > 0.0 {
                out.points.push(CurvePoint { t: a.t, value: a.value / b.value, flags: String::new() });
            }
        }
        Ok(out)
    }

    /// CSV rows (with header) using the shared curve schema.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CURVE_CSV_HEADER);
        out.push('\n');
        let function = match &self.kernel {
            Some(k) => format!("{} [{k}]", self.function),
            None => self.function.clone(),
        };
        for pt in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                pt.t,
                pt.value,
                self.kind,
                self.p,
                self.dim,
                self.level,
                csv_field(&function),
                csv_field(&pt.flags)
            ));
        }
        out
    }
}

pub(crate) fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `t = 2^-j` for `j = L-2, ..., 2`, in increasing order.
pub fn default_t_grid(level: u32) -> Vec<f64> {
    (2..=level.saturating_sub(2)).rev().map(|j| (-(j as f64)).exp2()).collect()
}

/// Dyadic grid `2^-j_max, ..., 2^-j_min`, increasing.
pub fn dyadic_grid(j_min: u32, j_max: u32) -> Vec<f64> {
    (j_min..=j_max).rev().map(|j| (-(j as f64)).exp2()).collect()
}

fn max_t(t_grid: &[f64]) -> Result<f64> {
    t_grid.iter().copied().fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t)))).ok_or(Error::EmptyCurve)
}

/// `t ↦ ζ(f,t)_p` on `t_grid`.
pub fn zeta_curve(f: &GridFunction, p: f64, t_grid: &[f64], function: &str) -> Result<ModulusCurve> {
    let t_max = max_t(t_grid)?;
    check_scale(t_max, f.dim())?;
    let profile = ShiftProfile::interior(f, p, t_max)?;
    let mut curve = ModulusCurve::new(CurveKind::Zeta, p, f.dim(), f.level(), function);
    for &t in t_grid {
        let v = profile.value(t, f.level());
        curve.push(t, v.value, v.flags())?;
    }
    Ok(curve)
}

/// `t ↦ ω(g,t)_p` on `t_grid`.
pub fn omega_curve(g: &ExtendedGridFunction, p: f64, t_grid: &[f64], function: &str) -> Result<ModulusCurve> {
    let t_max = max_t(t_grid)?;
    check_scale(t_max, g.dim())?;
    let profile = ShiftProfile::whole_space(g, p, t_max)?;
    let mut curve = ModulusCurve::new(CurveKind::Omega, p, g.dim(), g.level(), function);
    for &t in t_grid {
        let v = profile.value(t, g.level());
        curve.push(t, v.value, v.flags())?;
    }
    Ok(curve)
}

/// `t ↦ Ω(f,t)_p` on `t_grid`; the flag column records the minimising `s`.
pub fn omega_big_curve(f: &GridFunction, p: f64, t_grid: &[f64], function: &str) -> Result<ModulusCurve> {
    let eval = OmegaBigEvaluator::new(f, p)?;
    let mut curve = ModulusCurve::new(CurveKind::OmegaBig, p, f.dim(), f.level(), function);
    let cov = if eval.coverage().is_lower_bound() { format!(";{}", eval.coverage().as_str()) } else { String::new() };
    for &t in t_grid {
        let ob = eval.eval(t)?;
        curve.push(t, ob.value, format!("s={}{cov}", ob.argmin_s))?;
    }
    Ok(curve)
}

/// Which modulus a generic curve request asks for.
pub enum ModulusInput<'a> {
    Interior(&'a GridFunction),
    WholeSpace(&'a ExtendedGridFunction),
}

/// Dispatches to the curve builder for `kind`.
pub fn modulus_curve(input: ModulusInput<'_>, kind: CurveKind, p: f64, t_grid: &[f64], function: &str) -> Result<ModulusCurve> {
    match (kind, input) {
        (CurveKind::Zeta, ModulusInput::Interior(f)) => zeta_curve(f, p, t_grid, function),
        (CurveKind::Zeta, ModulusInput::WholeSpace(g)) => zeta_curve(&g.restrict(), p, t_grid, function),
        (CurveKind::Omega, ModulusInput::WholeSpace(g)) => omega_curve(g, p, t_grid, function),
        (CurveKind::Omega, ModulusInput::Interior(f)) => {
            let g = f.zero_extend(margin_for(f.level(), max_t(t_grid)?));
            omega_curve(&g, p, t_grid, function)
        }
        (CurveKind::OmegaBig, ModulusInput::Interior(f)) => omega_big_curve(f, p, t_grid, function),
        (CurveKind::OmegaBig, ModulusInput::WholeSpace(g)) => omega_big_curve(&g.restrict(), p, t_grid, function),
        (CurveKind::ErrorNorm, _) => Err(Error::Invalid("error_norm curves come from the kernels module".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::{sample, FunctionSpec};
    use approx::assert_relative_eq;

    fn spec(s: &str) -> FunctionSpec {
        s.parse().unwrap()
    }

    /// Direct supremum over every lattice vector of the ball, both signs.
    fn brute_zeta(f: &GridFunction, p: f64, t: f64) -> f64 {
        let n = f.side() as i64;
        let r = (t * n as f64).floor() as i64;
        let mut best = 0.0f64;
        let dim = f.dim();
        let range = |a: usize| if a < dim { -r..=r } else { 0..=0 };
        for k1 in range(1) {
            for k0 in range(0) {
                if ((k0 * k0 + k1 * k1) as f64).sqrt() > t * n as f64 * (1.0 + 1e-12) || (k0, k1) == (0, 0) {
                    continue;
                }
                let mut s = 0.0;
                for y in 0..(if dim > 1 { n } else { 1 }) {
                    for x in 0..n {
                        let (x2, y2) = (x + k0, y + k1);
                        if (0..n).contains(&x2) && (dim == 1 || (0..n).contains(&y2)) {
                            let a = f.samples()[(x + y * n) as usize];
                            let b = f.samples()[(x2 + y2 * n) as usize];
                            s += (b - a).abs().powf(p);
                        }
                    }
                }
                best = best.max((s * f.cell_volume()).powf(1.0 / p));
            }
        }
        best
    }

    #[test]
    fn profile_matches_brute_force() {
        for (d, level, t) in [(1, 6, 0.3), (2, 4, 0.5), (2, 5, 0.2)] {
            let f = sample(&spec("cusp alpha=0.4 center=0.3"), d, level).unwrap();
            for p in [1.0, 2.0, 2.5] {
                let z = zeta(&f, p, t).unwrap();
                assert_eq!(z.coverage, Coverage::Exact);
                assert_relative_eq!(z.value, brute_zeta(&f, p, t), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn zeta_of_constants_vanishes() {
        for c in [1.0, -3.5] {
            let f = sample(&FunctionSpec::Const { value: c }, 2, 4).unwrap();
            for t in [0.0625, 0.25, 1.0] {
                assert_eq!(zeta(&f, 2.0, t).unwrap().value, 0.0);
            }
        }
    }

    #[test]
    fn zeta_of_linear_matches_closed_form() {
        let level = 10;
        let f = sample(&FunctionSpec::Linear, 1, level).unwrap();
        let t: f64 = 0.25;
        let exact = t * (1.0 - t).sqrt();
        let got = zeta(&f, 2.0, t).unwrap().value;
        assert!((got - exact).abs() <= 2.0 * (-(level as f64)).exp2(), "{got} vs {exact}");
    }

    #[test]
    fn zeta_below_resolution_is_flagged() {
        let f = sample(&FunctionSpec::Linear, 1, 3).unwrap();
        let z = zeta(&f, 2.0, 0.1).unwrap();
        assert!(z.below_resolution);
        assert_eq!(z.value, 0.0);
        assert_eq!(z.flags(), "below_resolution");
    }

    #[test]
    fn omega_of_indicator_is_sqrt_2t() {
        let f = sample(&FunctionSpec::Const { value: 1.0 }, 1, 8).unwrap();
        let g = f.zero_extend(64);
        for t in dyadic_grid(2, 6) {
            assert_relative_eq!(omega(&g, 2.0, t).unwrap().value, (2.0 * t).sqrt(), max_relative = 1e-12);
        }
        let zero = GridFunction::zeros(1, 6).unwrap().zero_extend(16);
        assert_eq!(omega(&zero, 2.0, 0.25).unwrap().value, 0.0);
    }

    #[test]
    fn omega_matches_materialized_difference() {
        let f = sample(&spec("cusp alpha=0.6 center=0.7"), 2, 4).unwrap();
        let g = f.zero_extend(6);
        let set = ShiftSet::ball(2, 4, 0.3);
        for k in set.shifts() {
            let shift = crate::gridfn::LatticeShift::new(k.clone(), 4);
            let direct = g.difference(&shift).lp_norm_pow(3.0).unwrap();
            let fused = whole_space_pair_sum(g.samples(), g.side(), 2, k, Power::Three) * g.cell_volume();
            assert_relative_eq!(direct, fused, max_relative = 1e-12);
        }
    }

    #[test]
    fn omega_rejects_small_margin() {
        let g = sample(&FunctionSpec::Linear, 1, 6).unwrap().zero_extend(4);
        assert_eq!(omega(&g, 2.0, 0.25).unwrap_err(), Error::MarginTooSmall { have: 4, need: 16 });
    }

    #[test]
    fn omega_big_constant_and_zero() {
        let f = sample(&FunctionSpec::Const { value: 2.0 }, 1, 8).unwrap();
        for t in [1.0 / 64.0, 0.125, 0.5] {
            let ob = omega_big(&f, 2.0, t).unwrap();
            assert_relative_eq!(ob.value, 2.0 * t.sqrt(), max_relative = 1e-12);
            assert_eq!(ob.argmin_s, 1.0);
        }
        let ob = omega_big(&f, 2.0, 4.0).unwrap();
        // saturated: every s gives 2, the smallest s wins the tie
        assert_eq!(ob.value, 2.0);
        assert_eq!(ob.argmin_s, (-8f64).exp2());
        let zero = GridFunction::zeros(1, 6).unwrap();
        assert_eq!(omega_big(&zero, 2.0, 0.1).unwrap().value, 0.0);
    }

    #[test]
    fn omega_big_p1_degenerates_at_sqrt_d_t() {
        // log factor vanishes at s = sqrt(d) t, leaving ζ(f, t)_1
        let f = sample(&FunctionSpec::Linear, 1, 8).unwrap();
        let t = 1.0 / 16.0;
        let eval = OmegaBigEvaluator::new(&f, 1.0).unwrap();
        let z = eval.dyadic_zetas().iter().find(|(s, _)| *s == t).unwrap().1;
        assert_eq!(eval.objective(z, t, t), z);
        assert!(eval.eval(t).unwrap().value <= z);
    }

    #[test]
    fn curves_and_csv() {
        let f = sample(&FunctionSpec::Const { value: 1.0 }, 1, 8).unwrap();
        let curve = zeta_curve(&f, 2.0, &default_t_grid(8), "const c=1").unwrap();
        assert_eq!(curve.points.len(), 5);
        assert!(curve.values().iter().all(|&v| v == 0.0));
        let csv = curve.to_csv();
        assert!(csv.starts_with("t,value,kind,p,d,L,function,flags\n0.015625,0,zeta,2,1,8,const c=1,\n"));

        let omega = modulus_curve(ModulusInput::Interior(&f), CurveKind::Omega, 2.0, &dyadic_grid(2, 6), "chi").unwrap();
        for pt in &omega.points {
            assert_relative_eq!(pt.value, (2.0 * pt.t).sqrt(), max_relative = 1e-12);
        }
    }

    #[test]
    fn curve_rejects_decreasing_modulus() {
        let mut c = ModulusCurve::new(CurveKind::Zeta, 2.0, 1, 4, "x");
        c.push(0.1, 1.0, "").unwrap();
        assert!(c.push(0.2, 0.5, "").is_err());
        assert!(c.push(0.05, 2.0, "").is_err());
        let mut e = ModulusCurve::new(CurveKind::ErrorNorm, 2.0, 1, 4, "x");
        e.push(0.1, 1.0, "").unwrap();
        e.push(0.2, 0.5, "").unwrap();
    }

    #[test]
    fn shift_sets() {
        let exact = ShiftSet::ball(2, 5, 0.25);
        assert_eq!(exact.coverage(), Coverage::Exact);
        // half of the lattice disc of radius 8 minus the origin
        let full = (-8i64..=8).flat_map(|a| (-8i64..=8).map(move |b| (a, b))).filter(|&(a, b)| a * a + b * b <= 64).count();
        assert_eq!(exact.len(), (full - 1) / 2);
        let strided = ShiftSet::ball(2, 9, 0.5);
        assert_eq!(strided.coverage(), Coverage::Strided);
        assert!(strided.len() < 2000);
        let dir = ShiftSet::ball(3, 6, 0.5);
        assert_eq!(dir.coverage(), Coverage::Directional);
        assert!(dir.shifts().iter().all(|k| cells_length(k) <= 32.0 + 1e-9));
        assert!(dir.shifts().contains(&vec![1, 0, 0]) && dir.shifts().contains(&vec![1, 1, 1]));
    }
}
