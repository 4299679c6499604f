//! Stopping-time partitions of `Q` into good dyadic cubes, the partition
//! objective, and the count and side-length bounds that go with them.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::besov::{fit_loglog, FitResult};
use crate::dyadic::{check_tiling, DyadicCube, MeanPyramid};
use crate::error::{Error, Result};
use crate::gridfn::{multi_index, GridFunction, Lattice, Power, MAX_DIM};
use crate::kernels::{error_norm_table, margin_for_scales, KernelSpec};
use crate::moduli::OmegaBigEvaluator;

/// `S(Q) = ‖f - f_Q‖_{L^p(Q)}`.
pub fn local_error(f: &GridFunction, cube: &DyadicCube, p: f64) -> Result<f64> {
    LocalErrors::new(f, p)?.s_value(cube)
}

/// Local errors backed by a mean pyramid, so `f_Q` is exact on constant blocks.
pub struct LocalErrors<'a> {
    f: &'a GridFunction,
    pyramid: MeanPyramid,
    pow: Power,
    p: f64,
}

impl<'a> LocalErrors<'a> {
    pub fn new(f: &'a GridFunction, p: f64) -> Result<Self> {
        Ok(Self { f, pyramid: MeanPyramid::new(f), pow: Power::new(p)?, p })
    }

    pub fn mean(&self, cube: &DyadicCube) -> f64 {
        self.pyramid.mean(cube)
    }

    pub fn s_value(&self, cube: &DyadicCube) -> Result<f64> {
        if cube.level > self.f.level() || cube.dim != self.f.dim() {
            return Err(Error::LevelTooFine { requested: cube.level, level: self.f.level() });
        }
        let mean = self.mean(cube);
        let samples = self.f.samples();
        let sum: f64 = cube.cells(self.f.level()).into_iter().map(|i| self.pow.apply(samples[i] - mean)).sum();
        Ok((sum * self.f.cell_volume()).powf(self.p.recip()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CubeStatus {
    Good,
    Bad,
}

impl CubeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CubeStatus::Good => "good",
            CubeStatus::Bad => "bad",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubeNode {
    pub cube: DyadicCube,
    pub s_value: f64,
    pub status: CubeStatus,
}

/// Every cube the stopping-time builder classified, level by level in
/// breadth-first order. Bad cubes form the subdivision tree; good cubes tile `Q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptivePartition {
    pub epsilon: f64,
    pub p: f64,
    pub dim: usize,
    pub level: u32,
    pub levels: Vec<Vec<CubeNode>>,
}

pub const PARTITION_DUMP_HEADER: &str = "level,origin_indices,S,status";

impl AdaptivePartition {
    pub fn good(&self) -> impl Iterator<Item = &CubeNode> {
        self.levels.iter().flatten().filter(|n| n.status == CubeStatus::Good)
    }

    pub fn bad(&self) -> impl Iterator<Item = &CubeNode> {
        self.levels.iter().flatten().filter(|n| n.status == CubeStatus::Bad)
    }

    fn count_at(&self, status: CubeStatus) -> Vec<usize> {
        self.levels.iter().map(|l| l.iter().filter(|n| n.status == status).count()).collect()
    }

    /// `N_{ε,k}` for `k = 0..=D_ε`.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = self.count_at(CubeStatus::Good);
        c.truncate(self.depth() as usize + 1);
        c
    }

    /// `|B_{ε,k}|`.
    pub fn bad_counts(&self) -> Vec<usize> {
        self.count_at(CubeStatus::Bad)
    }

    /// `N_ε`.
    pub fn total(&self) -> usize {
        self.good().count()
    }

    /// `D_ε`, the finest level holding a good cube.
    pub fn depth(&self) -> u32 {
        self.good().map(|n| n.cube.level).max().unwrap_or(0)
    }

    pub fn good_cubes(&self) -> Vec<DyadicCube> {
        self.good().map(|n| n.cube).collect()
    }

    pub fn min_good_side(&self) -> f64 {
        (-(self.depth() as f64)).exp2()
    }

    /// Tiling, parent badness, complete subdivision of bad cubes and threshold consistency.
    pub fn validate(&self) -> Result<()> {
        check_tiling(self.dim, &self.good_cubes())?;
        let fail = |msg: String| Err(Error::Invalid(msg));
        let bad: BTreeSet<DyadicCube> = self.bad().map(|n| n.cube).collect();
        let classified: BTreeSet<DyadicCube> = self.levels.iter().flatten().map(|n| n.cube).collect();
        for (k, nodes) in self.levels.iter().enumerate() {
            for n in nodes {
                if n.cube.level as usize != k || n.cube.level > self.level {
                    return fail(format!("cube {} filed at the wrong level", n.cube.origin_label()));
                }
                if (n.status == CubeStatus::Good) != (n.s_value <= self.epsilon) {
                    return fail(format!("cube {} at level {k} misclassified", n.cube.origin_label()));
                }
                match n.cube.parent() {
                    Some(parent) if !bad.contains(&parent) => {
                        return fail(format!("cube {} at level {k} has no bad parent", n.cube.origin_label()))
                    }
                    None if k != 0 => return fail("non-root cube without parent".into()),
                    _ => {}
                }
                if n.status == CubeStatus::Bad && !n.cube.children().iter().all(|c| classified.contains(c)) {
                    return fail(format!("bad cube {} at level {k} not fully subdivided", n.cube.origin_label()));
                }
            }
        }
        Ok(())
    }

    /// One classified cube per line, breadth-first.
    pub fn dump(&self) -> String {
        let mut out = String::from(PARTITION_DUMP_HEADER);
        out.push('\n');
        for n in self.levels.iter().flatten() {
            out.push_str(&format!("{},{},{},{}\n", n.cube.level, n.cube.origin_label(), n.s_value, n.status.as_str()));
        }
        out
    }
}

/// Breadth-first stopping-time classification with threshold `epsilon`.
pub fn build_partition(f: &GridFunction, p: f64, epsilon: f64) -> Result<AdaptivePartition> {
    build_with(&LocalErrors::new(f, p)?, epsilon)
}

fn build_with(errors: &LocalErrors<'_>, epsilon: f64) -> Result<AdaptivePartition> {
    if !(epsilon > 0.0) {
        return Err(Error::Invalid(format!("threshold must be positive, got {epsilon}")));
    }
    let f = errors.f;
    let mut levels: Vec<Vec<CubeNode>> = vec![];
    let mut frontier = vec![DyadicCube::root(f.dim())];
    while !frontier.is_empty() {
        let mut nodes = Vec::with_capacity(frontier.len());
        let mut next = vec![];
        for cube in frontier {
            let s_value = errors.s_value(&cube)?;
            let status = if s_value <= epsilon { CubeStatus::Good } else { CubeStatus::Bad };
            if status == CubeStatus::Bad {
                next.extend(cube.children());
            }
            nodes.push(CubeNode { cube, s_value, status });
        }
        levels.push(nodes);
        frontier = next;
    }
    Ok(AdaptivePartition { epsilon, p: errors.p, dim: f.dim(), level: f.level(), levels })
}

/// All cubes of level `k`, flat-ordered like a level-`k` grid.
pub fn uniform_cubes(dim: usize, k: u32) -> Vec<DyadicCube> {
    let side = 1usize << k;
    (0..side.pow(dim as u32))
        .map(|flat| {
            let idx = multi_index(flat, side, dim);
            let mut origin = [0; MAX_DIM];
            origin[..dim].copy_from_slice(&idx[..dim]);
            DyadicCube { level: k, origin, dim }
        })
        .collect()
}

/// `(Σ S(Q)^p + Σ min{√d t/l(Q), 1} |Q| |f_Q|^p)^{1/p}` for one tiling.
pub fn proposition_rhs(f: &GridFunction, cubes: &[DyadicCube], t: f64, p: f64) -> Result<f64> {
    objective_with(&LocalErrors::new(f, p)?, cubes, t)
}

fn objective_with(errors: &LocalErrors<'_>, cubes: &[DyadicCube], t: f64) -> Result<f64> {
    let f = errors.f;
    check_tiling(f.dim(), cubes)?;
    let root_d = (f.dim() as f64).sqrt();
    let mut sum = 0.0;
    for cube in cubes {
        let s = errors.s_value(cube)?;
        sum += errors.pow.apply(s) + (root_d * t / cube.side_length()).min(1.0) * cube.volume() * errors.pow.apply(errors.mean(cube));
    }
    Ok(sum.powf(errors.p.recip()))
}

/// 2^L times the forward difference along each axis (backward in the last
/// cell), combined into the Euclidean gradient magnitude per cell.
pub fn gradient_magnitude(f: &GridFunction) -> GridFunction {
    let side = f.side();
    let scale = side as f64;
    let s = f.samples();
    let samples = (0..s.len())
        .map(|flat| {
            let idx = multi_index(flat, side, f.dim());
            let mut sq = 0.0;
            for (a, &i) in idx.iter().enumerate().take(f.dim()) {
                let stride = side.pow(a as u32);
                let d = if i + 1 < side { s[flat + stride] - s[flat] } else { s[flat] - s[flat - stride] };
                sq += (d * scale).powi(2);
            }
            sq.sqrt()
        })
        .collect();
    GridFunction::new(f.dim(), f.level(), samples).expect("same shape")
}

/// `|f|_{W^1_q(Q)}`: the `L^q` norm of [`gradient_magnitude`].
pub fn sobolev_seminorm(f: &GridFunction, q: f64) -> Result<f64> {
    gradient_magnitude(f).lp_norm(q)
}

/// Local seminorms `|f|_{W^1_q(Q')}` read from a mean pyramid of `|∇f|^q`.
struct LocalSeminorms {
    pyramid: MeanPyramid,
    q: f64,
}

impl LocalSeminorms {
    fn new(f: &GridFunction, q: f64) -> Result<Self> {
        let pow = Power::new(q)?;
        Ok(Self { pyramid: MeanPyramid::new(&gradient_magnitude(f).map(|v| pow.apply(v))), q })
    }

    fn at(&self, cube: &DyadicCube) -> f64 {
        (cube.volume() * self.pyramid.mean(cube)).powf(self.q.recip())
    }
}

/// `η = 1/d - 1/q + 1/p`.
pub fn eta(dim: usize, p: f64, q: f64) -> f64 {
    1.0 / dim as f64 - 1.0 / q + 1.0 / p
}

/// Largest `S(Q') / (|Q'|^η |f|_{W^1_q(Q')})` over the cubes of levels `0..L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareReport {
    pub eta: f64,
    pub constant: f64,
    pub argmax: Option<DyadicCube>,
    pub cubes_checked: usize,
}

pub fn poincare_constant(f: &GridFunction, p: f64, q: f64) -> Result<PoincareReport> {
    let errors = LocalErrors::new(f, p)?;
    poincare_with(&errors, &LocalSeminorms::new(f, q)?, eta(f.dim(), p, q))
}

fn poincare_with(errors: &LocalErrors<'_>, seminorms: &LocalSeminorms, eta: f64) -> Result<PoincareReport> {
    let mut report = PoincareReport { eta, constant: 0.0, argmax: None, cubes_checked: 0 };
    for k in 0..errors.f.level() {
        for cube in uniform_cubes(errors.f.dim(), k) {
            let s = errors.s_value(&cube)?;
            report.cubes_checked += 1;
            if s == 0.0 {
                continue;
            }
            let ratio = s / (cube.volume().powf(eta) * seminorms.at(&cube));
            if ratio > report.constant {
                report.constant = ratio;
                report.argmax = Some(cube);
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub epsilon: f64,
    pub n_total: usize,
    pub depth: u32,
    pub per_level: Vec<usize>,
    pub bad_per_level: Vec<usize>,
    pub min_side: f64,
    /// `(|f|_W / ε)^{q/(1+ηq)}`.
    pub bound10: f64,
    /// `min{1, (ε / (C |f|_W))^{1/(ηd)}}` with `C` the measured local constant.
    pub bound11_side: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountReport {
    pub p: f64,
    pub q: f64,
    pub dim: usize,
    pub eta: f64,
    pub seminorm: f64,
    pub poincare: PoincareReport,
    /// `q / (1 + ηq)`.
    pub envelope_slope: f64,
    /// Largest `|B_{ε,k}| / (ε^{-q} 2^{-kdηq} |f|_W^q)` over all rows and levels.
    pub level_constant: f64,
    pub rows: Vec<CountRow>,
    /// Slope of `ln N_ε` against `ln(1/ε)`.
    pub fit: Option<FitResult>,
}

pub const COUNT_CSV_HEADER: &str = "epsilon,N_total,depth,min_side,bound10,bound11_side";

impl CountReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(COUNT_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{},{}\n", r.epsilon, r.n_total, r.depth, r.min_side, r.bound10, r.bound11_side));
        }
        out
    }
}

/// Partitions across `epsilons` together with the count envelope and the side threshold.
pub fn count_bound_report(f: &GridFunction, p: f64, q: f64, epsilons: &[f64]) -> Result<(CountReport, Vec<AdaptivePartition>)> {
    let eta = eta(f.dim(), p, q);
    if !(eta > 0.0) {
        return Err(Error::NonPositiveEta(eta));
    }
    let errors = LocalErrors::new(f, p)?;
    let seminorms = LocalSeminorms::new(f, q)?;
    let seminorm = sobolev_seminorm(f, q)?;
    let poincare = poincare_with(&errors, &seminorms, eta)?;
    let d = f.dim() as f64;
    let mut rows = Vec::with_capacity(epsilons.len());
    let mut partitions = Vec::with_capacity(epsilons.len());
    let mut level_constant = 0.0f64;
    for &epsilon in epsilons {
        let part = build_with(&errors, epsilon)?;
        for (k, &b) in part.bad_counts().iter().enumerate() {
            let scale = epsilon.powf(-q) * (-(k as f64) * d * eta * q).exp2() * seminorm.powf(q);
            if b > 0 && scale > 0.0 {
                level_constant = level_constant.max(b as f64 / scale);
            }
        }
        let side = if poincare.constant * seminorm > 0.0 {
            (epsilon / (poincare.constant * seminorm)).powf(1.0 / (eta * d)).min(1.0)
        } else {
            1.0
        };
        rows.push(CountRow {
            epsilon,
            n_total: part.total(),
            depth: part.depth(),
            per_level: part.counts(),
            bad_per_level: part.bad_counts(),
            min_side: part.min_good_side(),
            bound10: (seminorm / epsilon).powf(q / (1.0 + eta * q)),
            bound11_side: side,
        });
        partitions.push(part);
    }
    let fit = fit_loglog(&rows.iter().map(|r| (1.0 / r.epsilon, r.n_total as f64)).collect::<Vec<_>>()).ok();
    let report = CountReport {
        p,
        q,
        dim: f.dim(),
        eta,
        seminorm,
        poincare,
        envelope_slope: q / (1.0 + eta * q),
        level_constant,
        rows,
        fit,
    };
    Ok((report, partitions))
}

/// `ε_j = 2^-j ‖f‖_p`, `j = 1..=8`.
pub fn default_epsilon_ladder(f: &GridFunction, p: f64) -> Result<Vec<f64>> {
    let norm = f.lp_norm(p)?;
    Ok((1..=8).map(|j| norm * (-(j as f64)).exp2()).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateRow {
    pub t: f64,
    /// Measured `‖E_t f°‖_p`.
    pub error_norm: f64,
    /// Smallest `(ε^p N_ε + Σ_G min{√d t/l(Q),1} ∫_Q |f|^p)^{1/p}` over the ladder.
    pub surrogate: f64,
    pub surrogate_epsilon: f64,
    /// Smallest partition objective over the stopping-time partitions of the ladder.
    pub stopping_time_objective: f64,
    /// Partition objective on the uniform level picked by the minimizer of `Ω`.
    pub uniform_objective: f64,
    /// Crude two-term envelope obtained by inserting the count and side bounds, minimized over `ε`.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub kernel: KernelSpec,
    pub p: f64,
    pub q: f64,
    pub epsilons: Vec<f64>,
    pub rows: Vec<RateRow>,
    pub surrogate_fit: Option<FitResult>,
    pub measured_fit: Option<FitResult>,
    pub beta: Option<f64>,
    /// Measured slope at least `β - 0.05`, when `β` is given.
    pub pass: Option<bool>,
}

/// Adaptive surrogate and measured kernel error across `t_grid`.
pub fn adaptive_error_rate(
    f: &GridFunction,
    p: f64,
    q: f64,
    t_grid: &[f64],
    kernel: &KernelSpec,
    epsilons: Option<&[f64]>,
    beta: Option<f64>,
) -> Result<RateReport> {
    let errors = LocalErrors::new(f, p)?;
    let norm = f.lp_norm(p)?;
    let epsilons = match epsilons {
        Some(e) => e.to_vec(),
        None => default_epsilon_ladder(f, p)?,
    };
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let g = f.zero_extend(margin_for_scales(kernel, f.dim(), f.level(), t_max)?);
    let measured = error_norm_table(kernel, &g, &[p], t_grid)?.remove(0);

    let mass = MeanPyramid::new(&f.map(|v| errors.pow.apply(v)));
    let partitions: Vec<AdaptivePartition> = if norm > 0.0 {
        epsilons.iter().map(|&e| build_with(&errors, e)).collect::<Result<_>>()?
    } else {
        vec![]
    };
    let root_d = (f.dim() as f64).sqrt();
    let seminorm = sobolev_seminorm(f, q)?;
    let eta = eta(f.dim(), p, q);
    let big = OmegaBigEvaluator::new(f, p)?;
    let mut rows = Vec::with_capacity(t_grid.len());
    for (&t, &error_norm) in t_grid.iter().zip(&measured) {
        let mut row = RateRow {
            t,
            error_norm,
            surrogate: 0.0,
            surrogate_epsilon: 0.0,
            stopping_time_objective: 0.0,
            uniform_objective: 0.0,
            envelope: 0.0,
        };
        if norm > 0.0 {
            row.surrogate = f64::INFINITY;
            row.stopping_time_objective = f64::INFINITY;
            for part in &partitions {
                let boundary: f64 = part
                    .good()
                    .map(|n| (root_d * t / n.cube.side_length()).min(1.0) * n.cube.volume() * mass.mean(&n.cube))
                    .sum();
                let value = (errors.pow.apply(part.epsilon) * part.total() as f64 + boundary).powf(p.recip());
                if value < row.surrogate {
                    row.surrogate = value;
                    row.surrogate_epsilon = part.epsilon;
                }
                row.stopping_time_objective = row.stopping_time_objective.min(objective_with(&errors, &part.good_cubes(), t)?);
            }
            let s = big.eval(t)?.argmin_s;
            let k = (-s.log2()).round().max(0.0) as u32;
            row.uniform_objective = objective_with(&errors, &uniform_cubes(f.dim(), k.min(f.level())), t)?;
            row.envelope = envelope12(t, p, f.dim(), eta, norm, seminorm);
        }
        rows.push(row);
    }
    let fit_of = |pick: fn(&RateRow) -> f64| fit_loglog(&rows.iter().map(|r| (r.t, pick(r))).collect::<Vec<_>>()).ok();
    let measured_fit = fit_of(|r| r.error_norm);
    Ok(RateReport {
        kernel: *kernel,
        p,
        q,
        epsilons,
        surrogate_fit: fit_of(|r| r.surrogate),
        pass: beta.map(|b| measured_fit.is_some_and(|fit| fit.slope >= b - 0.05)),
        measured_fit,
        beta,
        rows,
    })
}

/// `min_ε ε^{p/(p+d)} W^{d/(p+d)} + t^{1/p} ε^{-1/(ηpd)} ‖f‖ W^{1/(ηpd)}` on a fine geometric ladder.
fn envelope12(t: f64, p: f64, dim: usize, eta: f64, norm: f64, seminorm: f64) -> f64 {
    if !(eta > 0.0) || seminorm == 0.0 {
        return 0.0;
    }
    let d = dim as f64;
    let e2 = 1.0 / (eta * p * d);
    (0..=240)
        .map(|j| {
            let eps = norm * (-(j as f64) / 8.0).exp2();
            eps.powf(p / (p + d)) * seminorm.powf(d / (p + d)) + t.powf(p.recip()) * eps.powf(-e2) * norm * seminorm.powf(e2)
        })
        .fold(f64::INFINITY, f64::min)
}
