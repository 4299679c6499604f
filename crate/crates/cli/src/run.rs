//! Subcommand dispatch: every subcommand reads an [`ExperimentConfig`] and
//! writes CSV or JSON into the output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use zeroext::adaptive::{adaptive_error_rate, build_partition, count_bound_report, default_epsilon_ladder, eta};
use zeroext::besov::{besov_seminorm, corollary14_check, fit_exponent, ladder_report, theorem24_check, window_grid};
use zeroext::dyadic::{approx_error_tables, bbm_equality_case, bbm_suite, BBM_CSV_HEADER};
use zeroext::gates::{run_all, GateOutcome};
use zeroext::kernels::{error_norm_curve, h3_ratio, margin_for_scales, theorem12_check};
use zeroext::moduli::{default_t_grid, dyadic_grid, modulus_curve, omega_big_curve, ModulusInput};
use zeroext::{sample, CurveKind, Fineness, GridFunction, KernelFamily, KernelSpec};

use crate::config::ExperimentConfig;
use crate::error::{CliError, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Modulus,
    OmegaBig,
    Dyadic,
    Bbm,
    Adaptive,
    KernelError,
    BesovFit,
    Cor14,
    Thm24,
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Modulus => "modulus",
            Command::OmegaBig => "omega-big",
            Command::Dyadic => "dyadic",
            Command::Bbm => "bbm",
            Command::Adaptive => "adaptive",
            Command::KernelError => "kernel-error",
            Command::BesovFit => "besov-fit",
            Command::Cor14 => "cor14",
            Command::Thm24 => "thm24",
            Command::Verify => "verify",
        }
    }
}

impl FromStr for Command {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, ConfigError> {
        <Command as clap::ValueEnum>::from_str(s, false).map_err(|_| ConfigError::BadValue { key: "command".into(), value: s.into() })
    }
}

/// What a run produced.
#[derive(Debug, Default)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub failed: bool,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        i32::from(self.failed)
    }
}

struct Output {
    dir: PathBuf,
    report: RunReport,
}

impl Output {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.display().to_string(), source })?;
        Ok(Self { dir: dir.to_path_buf(), report: RunReport::default() })
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        self.report.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.write(name, &body)
    }

    fn say(&mut self, line: impl Into<String>) {
        self.report.lines.push(line.into());
    }

    fn fail_if(&mut self, failed: bool) {
        self.report.failed |= failed;
    }
}

fn function(cfg: &ExperimentConfig) -> Result<GridFunction, CliError> {
    Ok(sample(&cfg.function, cfg.dim, cfg.level)?)
}

/// Dyadic scales inside the configured window, or the default grid.
fn t_grid(cfg: &ExperimentConfig) -> Result<Vec<f64>, CliError> {
    Ok(match cfg.window {
        Some(w) => window_grid(w)?,
        None => default_t_grid(cfg.level),
    })
}

/// The configured window, or `[4 * 2^-L, 1/4]`.
fn fit_window(cfg: &ExperimentConfig) -> (f64, f64) {
    cfg.window.unwrap_or((4.0 * (-(cfg.level as f64)).exp2(), 0.25))
}

fn kernel(cfg: &ExperimentConfig, t: f64) -> Result<KernelSpec, CliError> {
    let family = cfg.kernel.unwrap_or(KernelFamily::Gauss);
    Ok(match cfg.tail {
        Some(tail) => KernelSpec::with_tail(family, t, tail)?,
        None => KernelSpec::new(family, t)?,
    })
}

fn finite_q(cfg: &ExperimentConfig) -> Result<f64, CliError> {
    match cfg.q {
        Fineness::Finite(q) => Ok(q),
        Fineness::Infinity => Err(ConfigError::BadValue { key: "q".into(), value: "inf".into() }.into()),
    }
}

pub fn run_subcommand(command: Command, cfg: &ExperimentConfig) -> Result<RunReport, CliError> {
    let mut out = Output::new(&cfg.out)?;
    match command {
        Command::Modulus => modulus(cfg, &mut out)?,
        Command::OmegaBig => omega_big(cfg, &mut out)?,
        Command::Dyadic => dyadic(cfg, &mut out)?,
        Command::Bbm => bbm(cfg, &mut out)?,
        Command::Adaptive => adaptive(cfg, &mut out)?,
        Command::KernelError => kernel_error(cfg, &mut out)?,
        Command::BesovFit => besov_fit(cfg, &mut out)?,
        Command::Cor14 => cor14(cfg, &mut out)?,
        Command::Thm24 => thm24(cfg, &mut out)?,
        Command::Verify => verify(cfg, &mut out)?,
    }
    Ok(out.report)
}

fn modulus(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let f = function(cfg)?;
    let grid = t_grid(cfg)?;
    let name = cfg.function.to_string();
    for &p in &cfg.p {
        let curve = match cfg.kind {
            CurveKind::ErrorNorm => {
                let t_max = grid.iter().copied().fold(0.0, f64::max);
                error_norm_curve(&kernel(cfg, t_max)?, &f, p, &grid, &name)?
            }
            kind => modulus_curve(ModulusInput::Interior(&f), kind, p, &grid, &name)?,
        };
        out.write(&format!("modulus_{}_p{p}.csv", cfg.kind), &curve.to_csv())?;
        out.say(format!("{} p={p}: {} points", cfg.kind, curve.points.len()));
    }
    Ok(())
}

fn omega_big(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let f = function(cfg)?;
    let grid = t_grid(cfg)?;
    for &p in &cfg.p {
        let curve = omega_big_curve(&f, p, &grid, &cfg.function.to_string())?;
        out.write(&format!("omega_big_p{p}.csv"), &curve.to_csv())?;
        out.say(format!("omega_big p={p}: {} points", curve.points.len()));
    }
    Ok(())
}

fn dyadic(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let f = function(cfg)?;
    let mut body = String::from("p,N,error,bound,constant,zeta,pass\n");
    let mut violations = 0;
    for (p, rows) in cfg.p.iter().zip(approx_error_tables(&f, &cfg.p)?) {
        for r in rows {
            violations += usize::from(!r.holds());
            writeln!(body, "{p},{},{},{},{},{},{}", r.level, r.error, r.bound, r.constant, r.zeta, r.holds()).unwrap();
        }
    }
    out.write("dyadic.csv", &body)?;
    out.say(format!("martingale bound violations: {violations}"));
    out.fail_if(violations > 0);
    Ok(())
}

fn bbm(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let seed = cfg.seed.ok_or(ConfigError::MissingSeed)?;
    let rows = bbm_suite(seed, cfg.cases, cfg.shifts)?;
    let mut body = format!("{BBM_CSV_HEADER}\n");
    for r in &rows {
        body.push_str(&r.csv_line());
        body.push('\n');
    }
    out.write("bbm.csv", &body)?;
    let failures = rows.iter().filter(|r| !r.pass).count();
    let eq = bbm_equality_case()?;
    out.say(format!("{} rows, {failures} failures; equality case lhs={} rhs={}", rows.len(), eq.lhs, eq.rhs()));
    out.fail_if(failures > 0 || !eq.holds());
    Ok(())
}

fn adaptive(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let f = function(cfg)?;
    let p = cfg.p[0];
    let q = finite_q(cfg)?;
    let epsilons = match &cfg.epsilons {
        Some(e) => e.clone(),
        None => default_epsilon_ladder(&f, p)?,
    };
    let mut invalid = 0;
    let mut index = String::from("index,epsilon,N_total,depth,valid\n");
    let partitions = if eta(cfg.dim, p, q) > 0.0 {
        let (report, parts) = count_bound_report(&f, p, q, &epsilons)?;
        out.write("counts.csv", &report.to_csv())?;
        out.json("counts.json", &report)?;
        if let Some(fit) = report.fit {
            out.say(format!("count slope {} (envelope {})", fit.slope, report.envelope_slope));
        }
        parts
    } else {
        out.say("count bounds skipped: eta <= 0 for this (d, p, q)");
        epsilons.iter().map(|&e| build_partition(&f, p, e)).collect::<Result<Vec<_>, _>>()?
    };
    for (i, part) in partitions.iter().enumerate() {
        let valid = part.validate().is_ok();
        invalid += usize::from(!valid);
        writeln!(index, "{i},{},{},{},{valid}", part.epsilon, part.total(), part.depth()).unwrap();
        out.write(&format!("partition_{i}.txt"), &part.dump())?;
        out.say(format!("eps={}: N={} depth={}", part.epsilon, part.total(), part.depth()));
    }
    out.write("partitions.csv", &index)?;
    if cfg.kernel.is_some() || cfg.beta.is_some() {
        let grid = t_grid(cfg)?;
        let t_max = grid.iter().copied().fold(0.0, f64::max);
        let kernel = kernel(cfg, t_max)?;
        let rate = adaptive_error_rate(&f, p, q, &grid, &kernel, cfg.epsilons.as_deref(), cfg.beta)?;
        let mut body = String::from("t,error_norm,surrogate,surrogate_epsilon,stopping_time_objective,uniform_objective,envelope\n");
        for r in &rate.rows {
            writeln!(
                body,
                "{},{},{},{},{},{},{}",
                r.t, r.error_norm, r.surrogate, r.surrogate_epsilon, r.stopping_time_objective, r.uniform_objective, r.envelope
            )
            .unwrap();
        }
        out.write("rate.csv", &body)?;
        out.json("rate.json", &rate)?;
        out.fail_if(rate.pass == Some(false));
    }
    out.fail_if(invalid > 0);
    Ok(())
}

fn kernel_error(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let f = function(cfg)?;
    let grid = t_grid(cfg)?;
    let t_max = grid.iter().copied().fold(0.0, f64::max);
    let kernel = kernel(cfg, t_max)?;
    let name = cfg.function.to_string();
    for &p in &cfg.p {
        let report = theorem12_check(&kernel, &f, p, &grid, &name)?;
        out.write(&format!("error_norm_p{p}.csv"), &report.error_curve(cfg.dim, cfg.level)?.to_csv())?;
        out.json(&format!("boundedness_p{p}.json"), &report)?;
        if p > 1.0 {
            let g = f.zero_extend(margin_for_scales(&kernel, cfg.dim, cfg.level, t_max)?);
            out.json(&format!("equivalence_p{p}.json"), &h3_ratio(&kernel, &g, p, &grid)?)?;
        }
        out.say(format!("p={p}: bounded={} max error ratio {}", report.pass, report.max_error_ratio));
        out.fail_if(!report.pass);
    }
    Ok(())
}

#[derive(Serialize)]
struct BesovFitReport {
    kind: CurveKind,
    p: f64,
    fit: zeroext::FitResult,
    s: Option<f64>,
    q: String,
    seminorm: Option<f64>,
}

fn besov_fit(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let f = function(cfg)?;
    let grid = dyadic_grid(0, cfg.level.saturating_sub(2));
    let window = fit_window(cfg);
    let mut reports = vec![];
    for &p in &cfg.p {
        let curve = modulus_curve(ModulusInput::Interior(&f), cfg.kind, p, &grid, &cfg.function.to_string())?;
        out.write(&format!("besov_{}_p{p}.csv", cfg.kind), &curve.to_csv())?;
        let fit = fit_exponent(&curve, window)?;
        let seminorm = cfg.s.map(|s| besov_seminorm(&curve, s, cfg.q)).transpose()?;
        out.say(format!("{} p={p}: slope {} over [{}, {}]", cfg.kind, fit.slope, fit.t_min, fit.t_max));
        reports.push(BesovFitReport { kind: cfg.kind, p, fit, s: cfg.s, q: cfg.q.to_string(), seminorm });
    }
    out.json("besov_fit.json", &reports)
}

fn cor14(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let f = function(cfg)?;
    let mut reports = vec![];
    for &p in &cfg.p {
        let r = corollary14_check(&f, p, fit_window(cfg), &cfg.function.to_string())?;
        out.say(format!("p={p}: alpha {} beta {} predicted {} pass={}", r.alpha_meas, r.beta_meas, r.beta_pred, r.pass));
        out.fail_if(!r.pass);
        reports.push(r);
    }
    out.json("cor14.json", &reports)
}

fn thm24(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let levels = cfg.levels.clone().unwrap_or_else(|| (cfg.level.saturating_sub(2).max(3)..=cfg.level).collect());
    let f = function(cfg)?;
    for &p in &cfg.p {
        let r = theorem24_check(&cfg.function, cfg.dim, p, cfg.q, &levels)?;
        out.say(format!("p={p}: alpha {} beta {} r {} stabilization {}", r.alpha, r.beta, r.r, r.stabilization));
        out.json(&format!("thm24_p{p}.json"), &r)?;
        let ladder = ladder_report(&f, p, &dyadic_grid(0, cfg.level.saturating_sub(2)), &t_grid(cfg)?)?;
        out.json(&format!("ladder_p{p}.json"), &ladder)?;
    }
    Ok(())
}

/// Seed used by `verify` when the config gives none.
pub const VERIFY_SEED: u64 = 7;

fn verify(cfg: &ExperimentConfig, out: &mut Output) -> Result<(), CliError> {
    let seed = cfg.seed.unwrap_or(VERIFY_SEED);
    let start = Instant::now();
    let first = run_all(seed)?;
    let elapsed = start.elapsed().as_secs_f64();
    let second = run_all(seed)?;
    let mut summary = format!("seed {seed}\n");
    for gate in &first {
        for a in &gate.artifacts {
            out.write(&a.name, &a.body)?;
        }
        out.say(gate.line());
        summary.push_str(&gate.line());
        summary.push('\n');
        out.fail_if(!gate.pass);
    }
    let same = bodies(&first) == bodies(&second);
    let line = format!(
        "criterion 9 [{}] determinism: {} artifacts {} across two runs",
        if same { "PASS" } else { "FAIL" },
        bodies(&first).len(),
        if same { "identical" } else { "differ" }
    );
    out.say(line.clone());
    out.fail_if(!same);
    writeln!(summary, "{line}\nruntime of one pass: {elapsed:.1}s").unwrap();
    out.write("summary.txt", &summary)
}

fn bodies(gates: &[GateOutcome]) -> Vec<(&str, &str)> {
    gates.iter().flat_map(|g| g.artifacts.iter().map(|a| (a.name.as_str(), a.body.as_str()))).collect()
}
