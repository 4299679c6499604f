//! Approximate identities `A_t g = K_t * g` on the padded lattice and the
//! error operator `E_t = A_t - I`.
//!
//! Every family is a tensor product of a 1-D profile, so convolution runs one
//! axis at a time. Kernels are truncated where the omitted mass drops below
//! the tail budget and renormalized to unit discrete mass.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::besov::{fit_loglog, FitResult};
use crate::error::{Error, Result};
use crate::gridfn::{lp_norm, ExtendedGridFunction, GridFunction, Lattice};
use crate::moduli::{CurveKind, ModulusCurve, OmegaBigEvaluator, ShiftProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    /// Standard deviation `t` per axis.
    Gauss,
    /// Cauchy profile `t / (π (t² + x²))` per axis.
    Poisson,
    /// `(1/(2πt)) (sin(x/2t) / (x/2t))²` per axis, bandwidth `1/t`.
    FejerTensor,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 3] = [KernelFamily::Gauss, KernelFamily::Poisson, KernelFamily::FejerTensor];

    pub fn as_str(self) -> &'static str {
        match self {
            KernelFamily::Gauss => "gauss",
            KernelFamily::Poisson => "poisson",
            KernelFamily::FejerTensor => "fejer_tensor",
        }
    }

    /// Tail budget used when none is given.
    pub fn default_tail(self) -> f64 {
        match self {
            KernelFamily::Gauss => 1e-6,
            KernelFamily::Poisson | KernelFamily::FejerTensor => 1e-3,
        }
    }

    fn radius_cells(self, t: f64, h: f64, tail: f64) -> usize {
        match self {
            KernelFamily::Gauss => {
                let mut r = 0usize;
                while libm::erfc((r as f64 + 0.5) * h / t * FRAC_1_SQRT_2) > tail {
                    r += 1;
                }
                r
            }
            KernelFamily::Poisson => (((1.0 - tail) * PI / 2.0).tan() * t / h - 0.5).ceil().max(0.0) as usize,
            KernelFamily::FejerTensor => (4.0 * t / (PI * tail) / h).ceil() as usize,
        }
    }

    fn weight(self, j: i64, t: f64, h: f64) -> f64 {
        let (a, b) = ((j as f64 - 0.5) * h, (j as f64 + 0.5) * h);
        match self {
            KernelFamily::Gauss => 0.5 * (libm::erfc(a / t * FRAC_1_SQRT_2) - libm::erfc(b / t * FRAC_1_SQRT_2)),
            KernelFamily::Poisson => ((b / t).atan() - (a / t).atan()) / PI,
            KernelFamily::FejerTensor => {
                let u = j as f64 * h / (2.0 * t);
                let sinc = if u == 0.0 { 1.0 } else { u.sin() / u };
                h * sinc * sinc / (2.0 * PI * t)
            }
        }
    }
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KernelFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gauss" => Ok(KernelFamily::Gauss),
            "poisson" => Ok(KernelFamily::Poisson),
            "fejer_tensor" | "fejer-tensor" | "fejer" => Ok(KernelFamily::FejerTensor),
            other => Err(Error::Invalid(format!("unknown kernel family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub t: f64,
    pub truncation_tail: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, t: f64) -> Result<Self> {
        Self::with_tail(family, t, family.default_tail())
    }

    pub fn with_tail(family: KernelFamily, t: f64, truncation_tail: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Invalid(format!("kernel scale must be positive, got {t}")));
        }
        if !(truncation_tail > 0.0 && truncation_tail < 1.0) {
            return Err(Error::Invalid(format!("truncation tail must lie in (0, 1), got {truncation_tail}")));
        }
        Ok(Self { family, t, truncation_tail })
    }

    pub fn at_scale(self, t: f64) -> Result<Self> {
        Self::with_tail(self.family, t, self.truncation_tail)
    }

    /// Truncated 1-D weights at resolution `level`; the tail budget is split
    /// evenly over `dim` axes.
    pub fn weights(&self, dim: usize, level: u32) -> KernelWeights {
        let h = (-(level as f64)).exp2();
        let tail = self.truncation_tail / dim as f64;
        let radius = self.family.radius_cells(self.t, h, tail);
        let r = radius as i64;
        let raw: Vec<f64> = (-r..=r).map(|j| self.family.weight(j, self.t, h)).collect();
        let mass: f64 = raw.iter().sum();
        KernelWeights { radius, omitted_mass: 1.0 - mass, taps: raw.iter().map(|w| w / mass).collect() }
    }

    /// Margin (in cells) that [`apply`] needs at `level`.
    pub fn required_margin(&self, dim: usize, level: u32) -> usize {
        let h = (-(level as f64)).exp2();
        self.family.radius_cells(self.t, h, self.truncation_tail / dim as f64)
    }

    /// Short identifier recorded in curve metadata.
    pub fn id(&self) -> String {
        format!("{} t={} tail={}", self.family, self.t, self.truncation_tail)
    }
}

/// Renormalized symmetric taps `w[-r..=r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelWeights {
    pub radius: usize,
    pub omitted_mass: f64,
    pub taps: Vec<f64>,
}

/// `K_t * g` restricted to `g`'s window.
pub fn apply(kernel: &KernelSpec, g: &ExtendedGridFunction) -> Result<ExtendedGridFunction> {
    let weights = kernel.weights(g.dim(), g.level());
    if g.margin() < weights.radius {
        return Err(Error::MarginTooSmall { have: g.margin(), need: weights.radius });
    }
    let mut data = g.samples().to_vec();
    let wide = g.side();
    let mut line = vec![0.0; wide];
    let mut out = vec![0.0; wide];
    for axis in 0..g.dim() {
        let stride = wide.pow(axis as u32);
        for base in line_starts(g.dim(), wide, axis) {
            for (i, v) in line.iter_mut().enumerate() {
                *v = data[base + i * stride];
            }
            if convolve_line(&line, &weights.taps, weights.radius, &mut out) {
                for (i, v) in out.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
    ExtendedGridFunction::from_samples(g.dim(), g.level(), g.margin(), data)
}

/// Flat offsets of the first cell of every line along `axis`.
fn line_starts(dim: usize, wide: usize, axis: usize) -> impl Iterator<Item = usize> {
    let stride = wide.pow(axis as u32);
    let total = wide.pow(dim as u32);
    (0..total).filter(move |flat| (flat / stride).is_multiple_of(wide))
}

/// Writes the convolution of `line` into `out`; returns false when the line is all zero.
fn convolve_line(line: &[f64], taps: &[f64], radius: usize, out: &mut [f64]) -> bool {
    let Some(first) = line.iter().position(|&v| v != 0.0) else {
        return false;
    };
    let last = line.iter().rposition(|&v| v != 0.0).unwrap_or(first);
    let n = line.len();
    let lo = first.saturating_sub(radius);
    let hi = (last + radius).min(n - 1);
    out.iter_mut().for_each(|v| *v = 0.0);
    for (i, slot) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
        let j0 = first.max(i.saturating_sub(radius));
        let j1 = last.min(i + radius);
        let mut acc = 0.0;
        for j in j0..=j1 {
            acc += taps[j + radius - i] * line[j];
        }
        *slot = acc;
    }
    true
}

/// `‖A_t g - g‖_p` over the window.
pub fn error_norm_extended(kernel: &KernelSpec, g: &ExtendedGridFunction, p: f64) -> Result<f64> {
    let smoothed = apply(kernel, g)?;
    lp_norm(&smoothed.zip_with(g, |a, b| a - b)?, p)
}

/// `‖E_t f°‖_p` with `f` zero-extended by `margin` cells.
pub fn error_norm(kernel: &KernelSpec, f: &GridFunction, p: f64, margin: usize) -> Result<f64> {
    error_norm_extended(kernel, &f.zero_extend(margin), p)
}

/// `‖E_t g‖_p` for each `p` in `ps` and each scale in `t_grid`; one convolution per scale.
pub fn error_norm_table(kernel: &KernelSpec, g: &ExtendedGridFunction, ps: &[f64], t_grid: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut table = vec![Vec::with_capacity(t_grid.len()); ps.len()];
    for &t in t_grid {
        let k = kernel.at_scale(t)?;
        let diff = apply(&k, g)?.zip_with(g, |a, b| a - b)?;
        for (row, &p) in table.iter_mut().zip(ps) {
            row.push(lp_norm(&diff, p)?);
        }
    }
    Ok(table)
}

/// Margin covering both the kernel radius and the shift radius for scales up to `t_max`.
pub fn margin_for_scales(kernel: &KernelSpec, dim: usize, level: u32, t_max: f64) -> Result<usize> {
    let shift = (t_max * (1u64 << level) as f64).ceil() as usize;
    Ok(kernel.at_scale(t_max)?.required_margin(dim, level).max(shift))
}

fn kernel_curve(g: &ExtendedGridFunction, p: f64, kernel: &KernelSpec, function: &str, values: &[(f64, f64)]) -> Result<ModulusCurve> {
    let mut curve = ModulusCurve::new(CurveKind::ErrorNorm, p, g.dim(), g.level(), function).with_kernel(kernel.id());
    for &(t, v) in values {
        curve.push(t, v, "")?;
    }
    Ok(curve)
}

/// Fit of a positive ratio curve; `None` when fewer than four positive rows remain.
fn ratio_fit(rows: &[(f64, Option<f64>)]) -> Option<FitResult> {
    let pts: Vec<(f64, f64)> = rows.iter().filter_map(|&(t, r)| r.filter(|v| *v > 0.0).map(|v| (t, v))).collect();
    fit_loglog(&pts).ok()
}

fn extremes(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

/// `‖E_t g‖_p / ω(g,t)_p` across scales.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H3Report {
    pub kernel: KernelSpec,
    pub p: f64,
    /// `(t, ‖E_t g‖_p, ω(g,t)_p, ratio)`; ratio is `None` where `ω = 0`.
    pub rows: Vec<(f64, f64, f64, Option<f64>)>,
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub slope: Option<FitResult>,
    pub undefined: bool,
}

impl H3Report {
    /// `max / min` of the defined ratios.
    pub fn band(&self) -> Option<f64> {
        Some(self.max_ratio? / self.min_ratio?)
    }
}

pub fn h3_ratio(kernel: &KernelSpec, g: &ExtendedGridFunction, p: f64, t_grid: &[f64]) -> Result<H3Report> {
    if !(p > 1.0) {
        return Err(Error::Invalid(format!("the equivalence band is stated for p > 1, got {p}")));
    }
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let errors = error_norm_table(kernel, g, &[p], t_grid)?.remove(0);
    let profile = ShiftProfile::whole_space(g, p, t_max)?;
    let mut rows = Vec::with_capacity(t_grid.len());
    for (&t, &e) in t_grid.iter().zip(&errors) {
        let w = profile.at(t).unwrap_or(0.0);
        rows.push((t, e, w, (w > 0.0).then(|| e / w)));
    }
    let defined: Vec<f64> = rows.iter().filter_map(|r| r.3).collect();
    let (lo, hi) = extremes(defined.iter().copied());
    let fit_rows: Vec<(f64, Option<f64>)> = rows.iter().map(|r| (r.0, r.3)).collect();
    Ok(H3Report {
        kernel: *kernel,
        p,
        undefined: defined.is_empty(),
        min_ratio: (!defined.is_empty()).then_some(lo),
        max_ratio: (!defined.is_empty()).then_some(hi),
        slope: ratio_fit(&fit_rows),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H4Row {
    pub t: f64,
    pub lhs: f64,
    pub omega: f64,
    /// `ω log(‖f‖_1 / ω)`.
    pub log_term: f64,
    pub ratio: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct H4Report {
    pub kernel: KernelSpec,
    pub rows: Vec<H4Row>,
    /// Largest ratio, the reported constant.
    pub constant: Option<f64>,
    /// `max / min` of the ratios.
    pub stability: Option<f64>,
}

/// Compares `‖E_t f°‖_1` with `ω(f°,t)_1 log(‖f‖_1/ω(f°,t)_1)`; rows where the
/// log argument is not above 1 are flagged.
pub fn h4_check(kernel: &KernelSpec, f: &GridFunction, t_grid: &[f64]) -> Result<H4Report> {
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let g = f.zero_extend(margin_for_scales(kernel, f.dim(), f.level(), t_max)?);
    let norm = f.lp_norm(1.0)?;
    let errors = error_norm_table(kernel, &g, &[1.0], t_grid)?.remove(0);
    let profile = ShiftProfile::whole_space(&g, 1.0, t_max)?;
    let mut rows = Vec::with_capacity(t_grid.len());
    for (&t, &lhs) in t_grid.iter().zip(&errors) {
        let omega = profile.at(t).unwrap_or(0.0);
        let valid = omega > 0.0 && omega < norm;
        let log_term = if valid { omega * (norm / omega).ln() } else { 0.0 };
        rows.push(H4Row { t, lhs, omega, log_term, ratio: valid.then(|| lhs / log_term), flagged: !valid });
    }
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let (lo, hi) = extremes(ratios.iter().copied());
    Ok(H4Report {
        kernel: *kernel,
        constant: (!ratios.is_empty()).then_some(hi),
        stability: (!ratios.is_empty()).then(|| hi / lo),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessRow {
    pub t: f64,
    pub error_norm: f64,
    pub omega: f64,
    pub omega_big: f64,
    pub argmin_s: f64,
    pub error_ratio: Option<f64>,
    pub omega_ratio: Option<f64>,
}

/// Ratios of `‖E_t f°‖_p` and `ω(f°,t)_p` to `Ω(f,t)_p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundednessReport {
    pub kernel: KernelSpec,
    pub function: String,
    pub p: f64,
    pub rows: Vec<BoundednessRow>,
    pub error_slope: Option<FitResult>,
    pub omega_slope: Option<FitResult>,
    pub max_error_ratio: f64,
    pub max_omega_ratio: f64,
    /// `Ω` vanished on the grid (`f = 0`).
    pub flagged: bool,
    pub pass: bool,
}

impl BoundednessReport {
    pub fn error_curve(&self, dim: usize, level: u32) -> Result<ModulusCurve> {
        let mut c = ModulusCurve::new(CurveKind::ErrorNorm, self.p, dim, level, self.function.clone()).with_kernel(self.kernel.id());
        for r in &self.rows {
            c.push(r.t, r.error_norm, "")?;
        }
        Ok(c)
    }
}

pub const SLOPE_FLOOR: f64 = -0.05;

/// Boundedness of both ratios as `t → 0`: each fitted log-log slope is at least [`SLOPE_FLOOR`].
pub fn theorem12_check(kernel: &KernelSpec, f: &GridFunction, p: f64, t_grid: &[f64], function: &str) -> Result<BoundednessReport> {
    Ok(theorem12_multi(kernel, f, &[p], t_grid, function)?.remove(0))
}

/// [`theorem12_check`] for several exponents, sharing the convolutions.
pub fn theorem12_multi(kernel: &KernelSpec, f: &GridFunction, ps: &[f64], t_grid: &[f64], function: &str) -> Result<Vec<BoundednessReport>> {
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let g = f.zero_extend(margin_for_scales(kernel, f.dim(), f.level(), t_max)?);
    let errors = error_norm_table(kernel, &g, ps, t_grid)?;
    let mut reports = Vec::with_capacity(ps.len());
    for (&p, errs) in ps.iter().zip(&errors) {
        let profile = ShiftProfile::whole_space(&g, p, t_max)?;
        let big = OmegaBigEvaluator::new(f, p)?;
        let mut rows = Vec::with_capacity(t_grid.len());
        for (&t, &e) in t_grid.iter().zip(errs) {
            let omega = profile.at(t).unwrap_or(0.0);
            let ob = big.eval(t)?;
            let div = |x: f64| (ob.value > 0.0).then(|| x / ob.value);
            rows.push(BoundednessRow {
                t,
                error_norm: e,
                omega,
                omega_big: ob.value,
                argmin_s: ob.argmin_s,
                error_ratio: div(e),
                omega_ratio: div(omega),
            });
        }
        let flagged = rows.iter().any(|r| r.omega_big == 0.0);
        let error_slope = ratio_fit(&rows.iter().map(|r| (r.t, r.error_ratio)).collect::<Vec<_>>());
        let omega_slope = ratio_fit(&rows.iter().map(|r| (r.t, r.omega_ratio)).collect::<Vec<_>>());
        let bounded = |fit: &Option<FitResult>| fit.is_some_and(|f| f.slope >= SLOPE_FLOOR);
        reports.push(BoundednessReport {
            kernel: *kernel,
            function: function.to_string(),
            p,
            max_error_ratio: rows.iter().filter_map(|r| r.error_ratio).fold(0.0, f64::max),
            max_omega_ratio: rows.iter().filter_map(|r| r.omega_ratio).fold(0.0, f64::max),
            pass: !flagged && bounded(&error_slope) && bounded(&omega_slope),
            error_slope,
            omega_slope,
            flagged,
            rows,
        });
    }
    Ok(reports)
}

/// `‖E_t f°‖_p` on `t_grid` as an error-norm curve.
pub fn error_norm_curve(kernel: &KernelSpec, f: &GridFunction, p: f64, t_grid: &[f64], function: &str) -> Result<ModulusCurve> {
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let g = f.zero_extend(margin_for_scales(kernel, f.dim(), f.level(), t_max)?);
    let errs = error_norm_table(kernel, &g, &[p], t_grid)?.remove(0);
    let values: Vec<(f64, f64)> = t_grid.iter().copied().zip(errs).collect();
    kernel_curve(&g, p, kernel, function, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::{sample, FunctionSpec};
    use approx::assert_relative_eq;

    fn chi(level: u32) -> GridFunction {
        sample(&FunctionSpec::Const { value: 1.0 }, 1, level).unwrap()
    }

    fn phi(x: f64) -> f64 {
        0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
    }

    #[test]
    fn weights_are_normalized_and_nonnegative() {
        for family in KernelFamily::ALL {
            let k = KernelSpec::new(family, 1.0 / 32.0).unwrap();
            let w = k.weights(1, 8);
            assert!(w.taps.iter().all(|&v| v >= 0.0));
            assert_relative_eq!(w.taps.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
            assert!(w.omitted_mass <= k.truncation_tail * 1.01, "{family}: {}", w.omitted_mass);
            assert_eq!(w.taps.len(), 2 * w.radius + 1);
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let g = GridFunction::zeros(1, 6).unwrap().zero_extend(40);
        let k = KernelSpec::new(KernelFamily::Gauss, 0.1).unwrap();
        assert!(apply(&k, &g).unwrap().samples().iter().all(|&v| v == 0.0));
        assert_eq!(error_norm_extended(&k, &g, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn margin_is_checked() {
        let k = KernelSpec::new(KernelFamily::Gauss, 0.25).unwrap();
        let g = chi(6).zero_extend(4);
        assert!(matches!(apply(&k, &g), Err(Error::MarginTooSmall { .. })));
    }

    #[test]
    fn gauss_on_indicator_matches_erf() {
        let level = 10;
        let t = 1.0 / 16.0;
        let k = KernelSpec::new(KernelFamily::Gauss, t).unwrap();
        let g = chi(level).zero_extend(k.required_margin(1, level));
        let out = apply(&k, &g).unwrap();
        let n = 1 << level;
        // cell midpoint next to x = 1/2
        let x = (n / 2) as f64 / n as f64 + 0.5 / n as f64;
        let v = out.samples()[g.margin() + n / 2];
        assert!((v - (phi(x / t) - phi((x - 1.0) / t))).abs() < 1e-4);
        assert!((v - (1.0 - 2.0 * phi(-0.5 / t))).abs() < 1e-4);
    }

    #[test]
    fn gauss_error_norm_matches_quadrature() {
        let t = 1.0 / 16.0;
        let k = KernelSpec::new(KernelFamily::Gauss, t).unwrap();
        let f = chi(10);
        let measured = error_norm(&k, &f, 2.0, k.required_margin(1, 10)).unwrap();
        // ∫ (Φ(x/t) - Φ((x-1)/t) - χ(x))² dx by the midpoint rule on a fine grid
        let (a, b, m) = (-1.0, 2.0, 300_000);
        let dx = (b - a) / m as f64;
        let oracle: f64 = (0..m)
            .map(|i| {
                let x = a + (i as f64 + 0.5) * dx;
                let c = if (0.0..1.0).contains(&x) { 1.0 } else { 0.0 };
                (phi(x / t) - phi((x - 1.0) / t) - c).powi(2) * dx
            })
            .sum::<f64>()
            .sqrt();
        assert!((measured / oracle - 1.0).abs() < 0.05, "{measured} vs {oracle}");
    }

    #[test]
    fn gauss_indicator_slope_is_half() {
        let k = KernelSpec::new(KernelFamily::Gauss, 0.1).unwrap();
        let grid: Vec<f64> = (3..=7).rev().map(|j| (-(j as f64)).exp2()).collect();
        let curve = error_norm_curve(&k, &chi(11), 2.0, &grid, "const").unwrap();
        let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.t, p.value)).collect();
        let fit = fit_loglog(&pts).unwrap();
        assert!((fit.slope - 0.5).abs() < 0.05, "{fit:?}");
        assert_eq!(curve.kernel.as_deref(), Some(k.at_scale(0.1).unwrap().id().as_str()));
    }

    #[test]
    fn separable_pass_matches_direct_sum() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for family in KernelFamily::ALL {
            let k = KernelSpec::with_tail(family, 0.05, 0.05).unwrap();
            let level = 3;
            let w = k.weights(2, level);
            let f = GridFunction::from_fn(2, level, |_| rng.gen_range(-1.0..1.0)).unwrap();
            let g = f.zero_extend(w.radius);
            let fast = apply(&k, &g).unwrap();
            let wide = g.side() as i64;
            let r = w.radius as i64;
            for y in 0..wide {
                for x in 0..wide {
                    let mut acc = 0.0;
                    for j in -r..=r {
                        for i in -r..=r {
                            let (sx, sy) = (x + i, y + j);
                            if (0..wide).contains(&sx) && (0..wide).contains(&sy) {
                                acc += w.taps[(i + r) as usize] * w.taps[(j + r) as usize] * g.samples()[(sy * wide + sx) as usize];
                            }
                        }
                    }
                    let got = fast.samples()[(y * wide + x) as usize];
                    assert!((got - acc).abs() <= 1e-10 * acc.abs().max(1.0), "{family} at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn linearity_and_reflection() {
        let k = KernelSpec::new(KernelFamily::Gauss, 0.05).unwrap();
        let f = sample(&FunctionSpec::Cusp { alpha: 0.5, center: 0.3 }, 1, 8).unwrap();
        let h = sample(&FunctionSpec::Linear, 1, 8).unwrap();
        let m = k.required_margin(1, 8);
        let combo = f.zip_with(&h, |a, b| 2.0 * a - 3.0 * b).unwrap();
        let lhs = apply(&k, &combo.zero_extend(m)).unwrap();
        let af = apply(&k, &f.zero_extend(m)).unwrap();
        let ah = apply(&k, &h.zero_extend(m)).unwrap();
        for ((l, a), b) in lhs.samples().iter().zip(af.samples()).zip(ah.samples()) {
            let r = 2.0 * a - 3.0 * b;
            assert!((l - r).abs() <= 1e-10 * r.abs().max(1.0));
        }
        let e = error_norm(&k, &f, 2.0, m).unwrap();
        let er = error_norm(&k, &f.reflect(0), 2.0, m).unwrap();
        assert!((e - er).abs() <= 1e-12 * e);
    }

    #[test]
    fn mass_preserved_inside_margin() {
        let k = KernelSpec::new(KernelFamily::Gauss, 0.02).unwrap();
        let level = 8;
        let m = k.required_margin(1, level);
        let wide = (1usize << level) + 4 * m;
        let g = ExtendedGridFunction::from_samples(1, level, 2 * m, vec![3.0; wide]).unwrap();
        let out = apply(&k, &g).unwrap();
        for v in &out.samples()[m..wide - m] {
            assert!((v / 3.0 - 1.0).abs() <= k.truncation_tail);
        }
    }

    #[test]
    fn constant_boundedness_ratio() {
        let grid: Vec<f64> = (2..=7).rev().map(|j| (-(j as f64)).exp2()).collect();
        let k = KernelSpec::new(KernelFamily::Gauss, 0.1).unwrap();
        let r = theorem12_check(&k, &chi(10), 2.0, &grid, "const").unwrap();
        assert!(r.pass);
        for row in &r.rows {
            assert!((row.omega_ratio.unwrap() / 2f64.sqrt() - 1.0).abs() < 0.05);
        }
        let z = GridFunction::zeros(1, 8).unwrap();
        let rz = theorem12_check(&k, &z, 2.0, &grid, "zero").unwrap();
        assert!(rz.flagged && !rz.pass);
    }

    #[test]
    fn equivalence_band_flags_constant_window() {
        let k = KernelSpec::new(KernelFamily::Gauss, 0.1).unwrap();
        let g = GridFunction::zeros(1, 6).unwrap().zero_extend(64);
        let r = h3_ratio(&k, &g, 2.0, &[1.0 / 32.0, 1.0 / 16.0]).unwrap();
        assert!(r.undefined && r.band().is_none());
    }

    #[test]
    fn log_constant_stable_on_indicator() {
        let k = KernelSpec::new(KernelFamily::FejerTensor, 0.1).unwrap();
        let grid: Vec<f64> = (3..=7).rev().map(|j| (-(j as f64)).exp2()).collect();
        let r = h4_check(&k, &chi(9), &grid).unwrap();
        assert!(r.rows.iter().all(|row| !row.flagged));
        assert!(r.stability.unwrap() <= 4.0, "{r:?}");
        let z = h4_check(&k, &GridFunction::zeros(1, 6).unwrap(), &grid).unwrap();
        assert!(z.rows.iter().all(|row| row.lhs == 0.0 && row.flagged));
    }
}
