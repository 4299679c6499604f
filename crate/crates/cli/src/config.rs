//! Flat `key = value` experiment configuration.
//!
//! One key per line, `#` starts a comment, unknown and repeated keys are
//! rejected. Lists are comma separated.
//!
//! ```text
//! function = cusp alpha=0.5 center=0.5
//! d = 1
//! L = 12
//! p = 2, 3
//! window = 0.0078125:0.25
//! ```

use std::path::PathBuf;
use std::str::FromStr;

use zeroext::{CurveKind, Fineness, FunctionSpec, KernelFamily};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub function: FunctionSpec,
    pub dim: usize,
    pub level: u32,
    pub p: Vec<f64>,
    pub q: Fineness,
    pub kind: CurveKind,
    pub kernel: Option<KernelFamily>,
    pub tail: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub epsilons: Option<Vec<f64>>,
    pub levels: Option<Vec<u32>>,
    pub s: Option<f64>,
    pub beta: Option<f64>,
    pub cases: usize,
    pub shifts: usize,
    pub out: PathBuf,
    pub seed: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            function: FunctionSpec::Linear,
            dim: 1,
            level: 10,
            p: vec![2.0],
            q: Fineness::Finite(2.0),
            kind: CurveKind::Zeta,
            kernel: None,
            tail: None,
            window: None,
            epsilons: None,
            levels: None,
            s: None,
            beta: None,
            cases: 100,
            shifts: 10,
            out: PathBuf::from("out"),
            seed: None,
        }
    }
}

pub const KEYS: &[&str] = &[
    "function", "d", "L", "p", "q", "kind", "kernel", "tail", "window", "epsilon", "levels", "s", "beta", "cases",
    "shifts", "out", "seed",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue { key: key.to_string(), value: value.to_string() })
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError> {
    let items = value.split(',').map(|v| parse(key, v)).collect::<Result<Vec<T>, _>>()?;
    if items.is_empty() {
        return Err(ConfigError::BadValue { key: key.to_string(), value: value.to_string() });
    }
    Ok(items)
}

/// `tmin:tmax` with `0 < tmin < tmax`.
pub fn parse_window(value: &str) -> Result<(f64, f64), ConfigError> {
    let bad = || ConfigError::BadValue { key: "window".into(), value: value.to_string() };
    let (a, b) = value.split_once(':').ok_or_else(bad)?;
    let (a, b): (f64, f64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if !(a > 0.0 && a < b) {
        return Err(bad());
    }
    Ok((a, b))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::parse_unchecked(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads the keys without the cross-field rules of [`ExperimentConfig::check`].
    pub fn parse_unchecked(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: Vec<String> = vec![];
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: n + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(ConfigError::UnknownKey(key.to_string()));
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
            seen.push(key.to_string());
            cfg.set(key, value)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "function" => self.function = value.parse().map_err(|e: zeroext::Error| ConfigError::Spec(e.to_string()))?,
            "d" => self.dim = parse(key, value)?,
            "L" => self.level = parse(key, value)?,
            "p" => self.p = list(key, value)?,
            "q" => self.q = parse(key, value)?,
            "kind" => self.kind = parse(key, value)?,
            "kernel" => self.kernel = Some(parse(key, value)?),
            "tail" => self.tail = Some(parse(key, value)?),
            "window" => self.window = Some(parse_window(value)?),
            "epsilon" => self.epsilons = Some(list(key, value)?),
            "levels" => self.levels = Some(list(key, value)?),
            "s" => self.s = Some(parse(key, value)?),
            "beta" => self.beta = Some(parse(key, value)?),
            "cases" => self.cases = parse(key, value)?,
            "shifts" => self.shifts = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = Some(parse(key, value)?),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Cross-field rules; also applies the seed to random specs.
    pub fn check(&mut self) -> Result<(), ConfigError> {
        if self.function.is_random() {
            let seed = self.seed.ok_or(ConfigError::MissingSeed)?;
            self.function = self.function.with_seed(seed);
        }
        if !(1..=3).contains(&self.dim) {
            return Err(ConfigError::BadValue { key: "d".into(), value: self.dim.to_string() });
        }
        if self.level < 1 {
            return Err(ConfigError::BadValue { key: "L".into(), value: self.level.to_string() });
        }
        if let Some(p) = self.p.iter().find(|p| !(**p >= 1.0 && p.is_finite())) {
            return Err(ConfigError::BadValue { key: "p".into(), value: p.to_string() });
        }
        if let Some(e) = self.epsilons.iter().flatten().find(|e| e.is_nan() || **e <= 0.0) {
            return Err(ConfigError::BadValue { key: "epsilon".into(), value: e.to_string() });
        }
        self.function.validate(self.dim).map_err(|e| ConfigError::Spec(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "# experiment\nfunction = cusp alpha=0.5 center=0.5  # trailing\nd=2\nL = 8\np = 1, 2.5\nq = inf\nkind = omega\nkernel = fejer\ntail = 0.01\nwindow = 0.01:0.25\nepsilon = 0.5,0.25\nlevels = 8,9\ns = 0.3\nbeta = 0.25\ncases = 5\nshifts = 2\nout = /tmp/x\nseed = 4\n";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.function, FunctionSpec::Cusp { alpha: 0.5, center: 0.5 });
        assert_eq!((c.dim, c.level), (2, 8));
        assert_eq!(c.p, vec![1.0, 2.5]);
        assert_eq!(c.q, Fineness::Infinity);
        assert_eq!(c.kind, CurveKind::Omega);
        assert_eq!(c.kernel, Some(KernelFamily::FejerTensor));
        assert_eq!(c.window, Some((0.01, 0.25)));
        assert_eq!(c.epsilons, Some(vec![0.5, 0.25]));
        assert_eq!(c.levels, Some(vec![8, 9]));
        assert_eq!((c.cases, c.shifts, c.seed), (5, 2, Some(4)));
        assert_eq!(ExperimentConfig::parse(text).unwrap(), c);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(ExperimentConfig::parse("colour = red"), Err(ConfigError::UnknownKey(_))));
        assert!(matches!(ExperimentConfig::parse("d = 1\nd = 2"), Err(ConfigError::Duplicate(_))));
        assert!(matches!(ExperimentConfig::parse("just words"), Err(ConfigError::Syntax { line: 1 })));
        assert!(matches!(ExperimentConfig::parse("d = 4"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(ExperimentConfig::parse("window = 0.5:0.1"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(ExperimentConfig::parse("p = 0.5"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(ExperimentConfig::parse("function = wobble"), Err(ConfigError::Spec(_))));
    }

    #[test]
    fn random_needs_seed() {
        assert!(matches!(ExperimentConfig::parse("function = random level=2 seed=1"), Err(ConfigError::MissingSeed)));
        let c = ExperimentConfig::parse("function = random level=2 seed=1\nseed = 9").unwrap();
        assert_eq!(c.function, FunctionSpec::RandomDyadic { level: 2, seed: 9 });
    }
}
