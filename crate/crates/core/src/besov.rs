//! Exponent fits and Besov-type seminorms built from modulus curves.
//!
//! Every `O(t^γ)` statement is read as a least-squares slope in log-log
//! coordinates over a declared window of `t`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gridfn::{sample, FunctionSpec, GridFunction, Lattice};
use crate::moduli::{dyadic_grid, margin_for, omega_curve, zeta_curve, ModulusCurve};

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub residual_rms: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
}

/// Fits `ln y = slope ln x + intercept`. Needs at least four points, all positive.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<FitResult> {
    let t_min = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let t_max = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if points.len() < 4 {
        return Err(Error::TooFewPoints { tmin: t_min, tmax: t_max, got: points.len() });
    }
    if let Some(&(t, value)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::VanishingModulus { t, value });
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(FitResult { slope, intercept, residual_rms: (rss / n).sqrt(), t_min, t_max, n_points: points.len() })
}

fn in_window(t: f64, window: (f64, f64)) -> bool {
    t >= window.0 * (1.0 - 1e-12) && t <= window.1 * (1.0 + 1e-12)
}

/// Log-log slope of a curve restricted to `window = (t_min, t_max)`.
pub fn fit_exponent(curve: &ModulusCurve, window: (f64, f64)) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> =
        curve.points.iter().filter(|pt| in_window(pt.t, window)).map(|pt| (pt.t, pt.value)).collect();
    if pts.len() < 4 {
        return Err(Error::TooFewPoints { tmin: window.0, tmax: window.1, got: pts.len() });
    }
    fit_loglog(&pts)
}

/// Besov fineness index `q ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Fineness {
    Finite(f64),
    Infinity,
}

impl Fineness {
    pub fn new(q: f64) -> Result<Self> {
        if q >= 1.0 && q.is_finite() {
            Ok(Fineness::Finite(q))
        } else {
            Err(Error::Invalid(format!("fineness q must be >= 1, got {q}")))
        }
    }

    /// `q (1 + α p)`, the fineness of the zero-extension.
    pub fn scaled(self, factor: f64) -> Self {
        match self {
            Fineness::Finite(q) => Fineness::Finite(q * factor),
            Fineness::Infinity => Fineness::Infinity,
        }
    }
}

impl fmt::Display for Fineness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Fineness::Finite(q) => write!(f, "{q}"),
            Fineness::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Fineness {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Fineness::Infinity),
            other => Fineness::new(other.parse().map_err(|_| Error::Invalid(format!("bad fineness `{other}`")))?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BesovParams {
    pub s: f64,
    pub p: f64,
    pub q: Fineness,
}

impl BesovParams {
    pub fn new(s: f64, p: f64, q: Fineness) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Invalid(format!("smoothness s must lie in (0, 1), got {s}")));
        }
        if !(p >= 1.0) {
            return Err(Error::InvalidExponent(p));
        }
        Ok(Self { s, p, q })
    }
}

/// `(∫ (t^{-s} v(t))^q dt/t)^{1/q}` by the trapezoid rule in `ln t`, or
/// `max t^{-s} v(t)` for `q = ∞`, over the curve's grid.
pub fn besov_seminorm(curve: &ModulusCurve, s: f64, q: Fineness) -> Result<f64> {
    besov_integral(&curve.points.iter().map(|p| (p.t, p.value)).collect::<Vec<_>>(), s, q)
}

fn besov_integral(points: &[(f64, f64)], s: f64, q: Fineness) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let weighted = points.iter().map(|&(t, v)| (t, t.powf(-s) * v));
    match q {
        Fineness::Infinity => Ok(weighted.map(|(_, w)| w).fold(0.0, f64::max)),
        Fineness::Finite(q) => {
            let g: Vec<(f64, f64)> = weighted.map(|(t, w)| (t.ln(), w.powf(q))).collect();
            Ok(trapezoid(&g).powf(q.recip()))
        }
    }
}

fn trapezoid(pts: &[(f64, f64)]) -> f64 {
    pts.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

/// `∫_{t_floor}^1 (t^{-α} ζ(f,t)_p^{1-αp})^p dt/t`, which blows up as the floor
/// drops when `α p >= 1`.
pub fn divergence_integral(zeta: &ModulusCurve, alpha: f64, p: f64, t_floor: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = zeta
        .points
        .iter()
        .filter(|pt| pt.t >= t_floor * (1.0 - 1e-12))
        .map(|pt| (pt.t.ln(), (pt.t.powf(-alpha) * pt.value.powf(1.0 - alpha * p)).powf(p)))
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyCurve);
    }
    if let Some(pt) = zeta.points.iter().find(|pt| pt.t >= t_floor && pt.value <= 0.0) {
        return Err(Error::VanishingModulus { t: pt.t, value: pt.value });
    }
    Ok(trapezoid(&pts))
}

/// Outcome of comparing the interior exponent with the zero-extension's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corollary14Report {
    pub p: f64,
    pub alpha_meas: f64,
    pub beta_meas: f64,
    pub beta_pred: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub zeta_fit: FitResult,
    pub omega_fit: FitResult,
}

pub const EXPONENT_TOLERANCE: f64 = 0.05;

/// Fits `α` from `ζ(f,·)_p` and `β` from `ω(f°,·)_p` on the dyadic points of
/// `window`; passes when `β >= α/(αp+1) - 0.05`.
pub fn corollary14_check(f: &GridFunction, p: f64, window: (f64, f64), function: &str) -> Result<Corollary14Report> {
    if !(p > 1.0) {
        return Err(Error::Invalid(format!("the exponent comparison needs p > 1, got {p}")));
    }
    let grid = window_grid(window)?;
    let zeta = zeta_curve(f, p, &grid, function)?;
    let g = f.zero_extend(margin_for(f.level(), window.1));
    let omega = omega_curve(&g, p, &grid, function)?;
    let zeta_fit = fit_exponent(&zeta, window)?;
    let omega_fit = fit_exponent(&omega, window)?;
    let alpha = zeta_fit.slope;
    let beta_pred = alpha / (alpha * p + 1.0);
    Ok(Corollary14Report {
        p,
        alpha_meas: alpha,
        beta_meas: omega_fit.slope,
        beta_pred,
        tolerance: EXPONENT_TOLERANCE,
        pass: omega_fit.slope >= beta_pred - EXPONENT_TOLERANCE,
        zeta_fit,
        omega_fit,
    })
}

/// Dyadic `t` values inside `window`, increasing.
pub fn window_grid(window: (f64, f64)) -> Result<Vec<f64>> {
    if !(window.0 > 0.0 && window.0 < window.1) {
        return Err(Error::Invalid(format!("bad window [{}, {}]", window.0, window.1)));
    }
    let j_min = (-window.1.log2()).ceil().max(0.0) as u32;
    let j_max = (-window.0.log2()).floor() as u32;
    Ok(dyadic_grid(j_min, j_max).into_iter().filter(|&t| in_window(t, window)).collect())
}

/// `φ(s) = s^{1/p} ζ(f,s)_p`, its inverse and `ψ(t) = ‖f‖ t^{1/p} φ^{-1}(t^{1/p}‖f‖)^{-1/p}`.
///
/// `φ` is known on a dyadic grid of `s`; between grid points both `φ` and its
/// inverse interpolate linearly in log-log coordinates.
#[derive(Debug, Clone)]
pub struct Ladder {
    p: f64,
    norm: f64,
    /// `(ln s, ln φ(s))`, increasing in both.
    log_phi: Vec<(f64, f64)>,
}

/// `φ^{-1}` value, flagged when the argument fell outside the tabulated range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inverse {
    pub s: f64,
    pub clamped: bool,
}

impl Ladder {
    /// From `(s, ζ(f,s)_p)` pairs; `ζ` must be positive so that `φ` is strictly increasing.
    pub fn from_zeta_points(p: f64, norm: f64, points: &[(f64, f64)]) -> Result<Self> {
        let mut pts = points.to_vec();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut log_phi = Vec::with_capacity(pts.len());
        for &(s, z) in &pts {
            if !(z > 0.0) {
                return Err(Error::NotIncreasing(s));
            }
            let lp = s.ln() / p + z.ln();
            if log_phi.last().is_some_and(|&(_, prev)| lp <= prev) {
                return Err(Error::NotIncreasing(s));
            }
            log_phi.push((s.ln(), lp));
        }
        if log_phi.len() < 2 {
            return Err(Error::EmptyCurve);
        }
        Ok(Self { p, norm, log_phi })
    }

    pub fn from_curve(zeta: &ModulusCurve, norm: f64) -> Result<Self> {
        Self::from_zeta_points(zeta.p, norm, &zeta.points.iter().map(|pt| (pt.t, pt.value)).collect::<Vec<_>>())
    }

    pub fn phi(&self, s: f64) -> f64 {
        interpolate(&self.log_phi, s.ln(), |&(x, _)| x, |&(_, y)| y).0.exp()
    }

    pub fn phi_inverse(&self, y: f64) -> Inverse {
        let (ls, clamped) = interpolate(&self.log_phi, y.ln(), |&(_, y)| y, |&(x, _)| x);
        Inverse { s: ls.exp(), clamped }
    }

    pub fn psi(&self, t: f64) -> (f64, bool) {
        let inv = self.phi_inverse(t.powf(self.p.recip()) * self.norm);
        (self.norm * (t / inv.s).powf(self.p.recip()), inv.clamped)
    }

    /// `t_j = ‖f‖^{-p} 2^{-j} ζ(f,2^{-j})^p`, i.e. `t_j^{1/p} ‖f‖ = φ(2^-j)`.
    pub fn ladder_point(&self, s: f64) -> f64 {
        (self.phi(s) / self.norm).powf(self.p)
    }
}

/// Piecewise-linear interpolation of `key -> val` over points sorted by key;
/// clamps outside the range and reports it.
fn interpolate<T>(pts: &[T], x: f64, key: impl Fn(&T) -> f64, val: impl Fn(&T) -> f64) -> (f64, bool) {
    let first = &pts[0];
    let last = &pts[pts.len() - 1];
    if x <= key(first) {
        return (val(first), x < key(first) - 1e-12);
    }
    if x >= key(last) {
        return (val(last), x > key(last) + 1e-12);
    }
    // bisection on the monotone table
    let i = pts.partition_point(|pt| key(pt) <= x).max(1) - 1;
    let (a, b) = (&pts[i], &pts[i + 1]);
    let w = (x - key(a)) / (key(b) - key(a));
    (val(a) + w * (val(b) - val(a)), false)
}

/// Ladder identities and bounds read off the tabulated `φ`, `ψ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    pub p: f64,
    /// `max_j |ψ(t_j) / ζ(f,2^-j) - 1|`.
    pub identity_error: f64,
    /// `max_j t_j / t_{j+1}`, to compare against `3^{p+1}`.
    pub max_step_ratio: f64,
    pub step_bound: f64,
    /// `max_{u<v} ψ(v) / ((v/u)^{1/p} ψ(u))` over grid pairs.
    pub max_decrease_ratio: f64,
    /// `max_t ω(f°,t)_p / min{ψ(t), ‖f‖_p}`.
    pub omega_constant: f64,
}

/// Checks the ladder identities of `ψ` on the dyadic `s`-grid of a `ζ` curve
/// and the bound of `ω(f°,·)_p` by `ψ` on `t_grid`.
pub fn ladder_report(f: &GridFunction, p: f64, s_grid: &[f64], t_grid: &[f64]) -> Result<LadderReport> {
    let zeta = zeta_curve(f, p, s_grid, "")?;
    let norm = f.lp_norm(p)?;
    let ladder = Ladder::from_curve(&zeta, norm)?;
    let ladder_t: Vec<(f64, f64)> = zeta.points.iter().map(|pt| (ladder.ladder_point(pt.t), pt.value)).collect();
    let identity_error = ladder_t.iter().map(|&(t, z)| (ladder.psi(t).0 / z - 1.0).abs()).fold(0.0, f64::max);
    // consecutive dyadic scales 2^-j, 2^-(j+1)
    let max_step_ratio = ladder_t.windows(2).map(|w| w[1].0 / w[0].0).fold(0.0, f64::max);
    let mut max_decrease_ratio = 0.0f64;
    for (i, &(u, _)) in ladder_t.iter().enumerate() {
        for &(v, _) in &ladder_t[i + 1..] {
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            let r = ladder.psi(hi).0 / ((hi / lo).powf(p.recip()) * ladder.psi(lo).0);
            max_decrease_ratio = max_decrease_ratio.max(r);
        }
    }
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let omega = omega_curve(&f.zero_extend(margin_for(f.level(), t_max)), p, t_grid, "")?;
    let omega_constant = omega
        .points
        .iter()
        .map(|pt| pt.value / ladder.psi(pt.t).0.min(norm))
        .fold(0.0, f64::max);
    Ok(LadderReport {
        p,
        identity_error,
        max_step_ratio,
        step_bound: 3f64.powf(p + 1.0),
        max_decrease_ratio,
        omega_constant,
    })
}

/// Seminorms of `f` and `f°` at one resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionRow {
    pub level: u32,
    pub t_floor: f64,
    pub alpha_meas: f64,
    /// `|f°|_{B^β_{p,r}(R^d)}`.
    pub extension_seminorm: f64,
    /// `|f|_{B^α_{p,q}(Q)}`.
    pub interior_seminorm: f64,
    /// Extension seminorm over `‖f‖^{αp/(1+αp)} |f|_{B^α_{p,q}(Q)}^{1/(1+αp)}`.
    pub interpolation_ratio: f64,
    /// `|f°|_{B^α_{p,p}(R^d)}` at the interior exponent.
    pub same_exponent_seminorm: f64,
    /// [`divergence_integral`] at the interior exponent.
    pub divergence_integral: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem24Report {
    pub function: String,
    pub p: f64,
    pub q: String,
    /// Interior exponent, fitted at the finest resolution over `fit_window`.
    pub alpha: f64,
    pub beta: f64,
    pub r: String,
    pub fit_window: (f64, f64),
    pub rows: Vec<ResolutionRow>,
    /// Relative change of the extension seminorm between the two finest resolutions.
    pub stabilization: f64,
}

/// Window over which the interior exponent is fitted for the Besov report.
pub const BESOV_FIT_WINDOW: (f64, f64) = (1.0 / 256.0, 0.25);

/// Besov seminorms of `f` and `f°` across resolutions, with `β = α/(αp+1)`
/// and `r = q(1+αp)` built from the measured `α`.
pub fn theorem24_check(spec: &FunctionSpec, dim: usize, p: f64, q: Fineness, levels: &[u32]) -> Result<Theorem24Report> {
    if !(p > 1.0) {
        return Err(Error::Invalid(format!("Besov report needs p > 1, got {p}")));
    }
    let mut levels = levels.to_vec();
    levels.sort_unstable();
    let &finest = levels.last().ok_or(Error::EmptyCurve)?;
    let function = spec.to_string();
    let curves = |level: u32| -> Result<(GridFunction, ModulusCurve, ModulusCurve)> {
        let f = sample(spec, dim, level)?;
        let grid = dyadic_grid(0, level - 2);
        let zeta = zeta_curve(&f, p, &grid, &function)?;
        let omega = omega_curve(&f.zero_extend(margin_for(level, 1.0)), p, &grid, &function)?;
        Ok((f, zeta, omega))
    };
    let finest_curves = curves(finest)?;
    let alpha_meas = |zeta: &ModulusCurve| fit_exponent(zeta, BESOV_FIT_WINDOW).map(|fit| fit.slope);
    let alpha = match alpha_meas(&finest_curves.1) {
        Ok(a) => a,
        Err(Error::VanishingModulus { .. }) if finest_curves.0.lp_norm(p)? == 0.0 => 0.0,
        Err(e) => return Err(e),
    };
    let beta = alpha / (alpha * p + 1.0);
    let r = q.scaled(1.0 + alpha * p);
    let mut rows = Vec::with_capacity(levels.len());
    for &level in &levels {
        let (f, zeta, omega) = if level == finest { finest_curves.clone() } else { curves(level)? };
        let norm = f.lp_norm(p)?;
        let extension_seminorm = besov_seminorm(&omega, beta, r)?;
        let interior_seminorm = besov_seminorm(&zeta, alpha.clamp(1e-9, 1.0), q)?;
        let scale = norm.powf(alpha * p / (1.0 + alpha * p)) * interior_seminorm.powf(1.0 / (1.0 + alpha * p));
        let interpolation_ratio = if scale > 0.0 { extension_seminorm / scale } else { 0.0 };
        let same_exponent_seminorm = besov_seminorm(&omega, alpha.clamp(1e-9, 1.0), Fineness::Finite(p))?;
        let t_floor = zeta.points[0].t;
        let divergence = if norm > 0.0 { divergence_integral(&zeta, alpha, p, t_floor)? } else { 0.0 };
        rows.push(ResolutionRow {
            level,
            t_floor,
            alpha_meas: if norm > 0.0 { alpha_meas(&zeta)? } else { 0.0 },
            extension_seminorm,
            interior_seminorm,
            interpolation_ratio,
            same_exponent_seminorm,
            divergence_integral: divergence,
        });
    }
    let stabilization = match rows.as_slice() {
        [.., a, b] if b.extension_seminorm > 0.0 => (b.extension_seminorm - a.extension_seminorm).abs() / b.extension_seminorm,
        _ => 0.0,
    };
    Ok(Theorem24Report {
        function,
        p,
        q: q.to_string(),
        alpha,
        beta,
        r: r.to_string(),
        fit_window: BESOV_FIT_WINDOW,
        rows,
        stabilization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moduli::CurveKind;
    use approx::assert_relative_eq;

    fn power_curve(gamma: f64, c: f64, js: std::ops::RangeInclusive<u32>) -> ModulusCurve {
        let mut curve = ModulusCurve::new(CurveKind::Omega, 2.0, 1, 12, "synthetic");
        for j in js.rev() {
            let t = (-(j as f64)).exp2();
            curve.push(t, c * t.powf(gamma), "").unwrap();
        }
        curve
    }

    #[test]
    fn fit_recovers_power_laws() {
        for gamma in [0.1, 0.5, 1.0 / 3.0, 0.9] {
            let fit = fit_exponent(&power_curve(gamma, 1.7, 1..=10), (1e-3, 0.5)).unwrap();
            assert!((fit.slope - gamma).abs() < 1e-9);
            assert!((fit.intercept - 1.7f64.ln()).abs() < 1e-9);
            assert!(fit.residual_rms < 1e-12);
            assert_eq!(fit.n_points, 9);
        }
    }

    #[test]
    fn fit_errors() {
        let c = power_curve(0.5, 1.0, 1..=3);
        assert!(matches!(fit_exponent(&c, (0.1, 0.5)), Err(Error::TooFewPoints { .. })));
        let mut z = ModulusCurve::new(CurveKind::Zeta, 2.0, 1, 8, "const");
        for t in [0.01, 0.02, 0.04, 0.08] {
            z.push(t, 0.0, "").unwrap();
        }
        assert!(matches!(fit_exponent(&z, (0.01, 0.08)), Err(Error::VanishingModulus { .. })));
    }

    #[test]
    fn seminorm_of_indicator_curve() {
        // ω(χ°,t)_2 = (2t)^{1/2}
        let curve = power_curve(0.5, 2f64.sqrt(), 0..=10);
        assert_relative_eq!(besov_seminorm(&curve, 0.5, Fineness::Infinity).unwrap(), 2f64.sqrt(), max_relative = 1e-12);
        // above the critical exponent the sup grows like t_min^{-0.1}
        let coarse = besov_seminorm(&power_curve(0.5, 2f64.sqrt(), 0..=10), 0.6, Fineness::Infinity).unwrap();
        let fine = besov_seminorm(&power_curve(0.5, 2f64.sqrt(), 0..=11), 0.6, Fineness::Infinity).unwrap();
        assert_relative_eq!(fine / coarse, 2f64.powf(0.1), max_relative = 1e-12);
        let zero = power_curve(0.5, 0.0, 0..=5);
        assert_eq!(besov_seminorm(&zero, 0.5, Fineness::Finite(2.0)).unwrap(), 0.0);
        assert_eq!(besov_seminorm(&ModulusCurve::new(CurveKind::Omega, 2.0, 1, 4, ""), 0.5, Fineness::Infinity), Err(Error::EmptyCurve));
    }

    #[test]
    fn finite_q_seminorm_matches_closed_form() {
        // t^{-s} c t^γ with γ > s: ∫_{t0}^1 c^q t^{q(γ-s)} dt/t = c^q (1 - t0^{q(γ-s)}) / (q(γ-s))
        let curve = {
            let mut c = ModulusCurve::new(CurveKind::Omega, 2.0, 1, 12, "x");
            for i in (0..=4000).rev() {
                let t = (-(i as f64) * 0.0025).exp2();
                c.push(t, 3.0 * t.powf(0.8), "").unwrap();
            }
            c
        };
        let t0 = (-10f64).exp2();
        let exact = (9.0 * (1.0 - t0.powf(2.0 * 0.3)) / (2.0 * 0.3)).sqrt();
        assert_relative_eq!(besov_seminorm(&curve, 0.5, Fineness::Finite(2.0)).unwrap(), exact, max_relative = 1e-5);
    }

    #[test]
    fn seminorm_monotone_in_s() {
        let curve = power_curve(0.7, 1.0, 0..=9);
        let mut last = 0.0;
        for s in [0.1, 0.3, 0.5, 0.69, 0.9] {
            let v = besov_seminorm(&curve, s, Fineness::Finite(3.0)).unwrap();
            assert!(v >= last);
            last = v;
        }
    }

    #[test]
    fn ladder_inversion_of_power_law() {
        // ζ(s) = s, p = 2: φ(s) = s^{3/2}, φ^{-1}(y) = y^{2/3}
        let pts: Vec<(f64, f64)> = (0..=12).map(|j| ((-(j as f64)).exp2(), (-(j as f64)).exp2())).collect();
        let ladder = Ladder::from_zeta_points(2.0, 1.0, &pts).unwrap();
        for y in [1e-4, 0.003, 0.1, 0.7] {
            let inv = ladder.phi_inverse(y);
            assert!(!inv.clamped);
            assert_relative_eq!(inv.s, y.powf(2.0 / 3.0), max_relative = 1e-12);
        }
        assert_relative_eq!(ladder.phi(0.3), 0.3f64.powf(1.5), max_relative = 1e-12);
        assert!(ladder.phi_inverse(2.0).clamped);
        assert!(Ladder::from_zeta_points(2.0, 1.0, &[(0.5, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn window_grid_is_dyadic() {
        assert_eq!(window_grid((1.0 / 128.0, 0.25)).unwrap(), vec![1.0 / 128.0, 1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0, 0.125, 0.25]);
        assert!(window_grid((0.5, 0.25)).is_err());
    }

    #[test]
    fn exponent_bound_on_linear() {
        let f = sample(&FunctionSpec::Linear, 1, 11).unwrap();
        let r = corollary14_check(&f, 2.0, (1.0 / 128.0, 0.25), "linear").unwrap();
        assert!(r.pass);
        assert!((r.alpha_meas - 1.0).abs() < 0.05, "{r:?}");
        assert!((r.beta_meas - 0.5).abs() < 0.03, "{r:?}");
        let c = sample(&FunctionSpec::Const { value: 1.0 }, 1, 8).unwrap();
        assert!(matches!(corollary14_check(&c, 2.0, (1.0 / 64.0, 0.25), "c"), Err(Error::VanishingModulus { .. })));
    }

    #[test]
    fn stabilization_report_for_zero_function() {
        let r = theorem24_check(&FunctionSpec::Const { value: 0.0 }, 1, 2.0, Fineness::Finite(2.0), &[8, 9]).unwrap();
        assert!(r.rows.iter().all(|row| row.extension_seminorm == 0.0 && row.interior_seminorm == 0.0));
    }
}
