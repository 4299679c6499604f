//! Analytic test functions and their text form.
//!
//! Grammar, one spec per string, `key=value` parameters separated by spaces:
//!
//! ```text
//! spec      := simple | "tensor" simple ("|" simple)*
//! simple    := "zero"
//!            | "const" [c=<real>]
//!            | "linear"
//!            | "indicator" [lo=<real>] [hi=<real>]
//!            | "cusp" [alpha=<real>] [center=<real>]
//!            | "bpow" [alpha=<real>]            (alias: boundary-power)
//!            | "random" level=<int> seed=<int>
//! ```
//!
//! `tensor` takes one factor per axis; each factor is evaluated as a
//! one-dimensional function of its own coordinate and the results multiplied.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_dim, GridFunction};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    /// `f = c`; `c = 1` is the indicator of `Q`.
    Const { value: f64 },
    /// `f(x) = x_1 + ... + x_d`.
    Linear,
    /// Indicator of `[lo, hi]^d`.
    Indicator { lo: f64, hi: f64 },
    /// `f(x) = sum_a |x_a - center|^alpha`, `0 < alpha < 1`.
    Cusp { alpha: f64, center: f64 },
    /// `f(x) = x_1^alpha`.
    BoundaryPower { alpha: f64 },
    /// `f(x) = prod_a g_a(x_a)`.
    Tensor(Vec<FunctionSpec>),
    /// Piecewise constant on the level-`level` dyadic cubes, values uniform in [-1, 1].
    RandomDyadic { level: u32, seed: u64 },
}

impl FunctionSpec {
    pub fn is_random(&self) -> bool {
        match self {
            FunctionSpec::RandomDyadic { .. } => true,
            FunctionSpec::Tensor(fs) => fs.iter().any(FunctionSpec::is_random),
            _ => false,
        }
    }

    /// Replaces the seed of every random component.
    pub fn with_seed(&self, seed: u64) -> Self {
        match self {
            FunctionSpec::RandomDyadic { level, .. } => FunctionSpec::RandomDyadic { level: *level, seed },
            FunctionSpec::Tensor(fs) => FunctionSpec::Tensor(fs.iter().map(|f| f.with_seed(seed)).collect()),
            other => other.clone(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Spec(msg));
        match self {
            FunctionSpec::Const { value } if !value.is_finite() => bad("const value must be finite".into()),
            FunctionSpec::Indicator { lo, hi } if !(lo <= hi) => bad(format!("indicator needs lo <= hi, got [{lo}, {hi}]")),
            FunctionSpec::Cusp { alpha, .. } if !(*alpha > 0.0 && *alpha < 1.0) => {
                bad(format!("cusp alpha must lie in (0, 1), got {alpha}"))
            }
            FunctionSpec::BoundaryPower { alpha } if !(*alpha > 0.0) => bad(format!("bpow alpha must be positive, got {alpha}")),
            FunctionSpec::RandomDyadic { level, .. } if *level > 12 => bad(format!("random level {level} is too fine")),
            FunctionSpec::Tensor(fs) => {
                if fs.len() != dim {
                    return bad(format!("tensor has {} factors for dimension {dim}", fs.len()));
                }
                for f in fs {
                    if matches!(f, FunctionSpec::Tensor(_)) {
                        return bad("nested tensor products are not supported".into());
                    }
                    f.validate(1)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

enum Evaluator {
    Const(f64),
    Linear,
    Indicator(f64, f64),
    Cusp(f64, f64),
    BoundaryPower(f64),
    Tensor(Vec<Evaluator>),
    Random { cells: usize, values: Vec<f64> },
}

impl Evaluator {
    fn build(spec: &FunctionSpec, dim: usize) -> Self {
        match spec {
            FunctionSpec::Const { value } => Evaluator::Const(*value),
            FunctionSpec::Linear => Evaluator::Linear,
            FunctionSpec::Indicator { lo, hi } => Evaluator::Indicator(*lo, *hi),
            FunctionSpec::Cusp { alpha, center } => Evaluator::Cusp(*alpha, *center),
            FunctionSpec::BoundaryPower { alpha } => Evaluator::BoundaryPower(*alpha),
            FunctionSpec::Tensor(fs) => Evaluator::Tensor(fs.iter().map(|f| Evaluator::build(f, 1)).collect()),
            FunctionSpec::RandomDyadic { level, seed } => {
                let cells = 1usize << level;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let values = (0..cells.pow(dim as u32)).map(|_| rng.gen_range(-1.0..=1.0)).collect();
                Evaluator::Random { cells, values }
            }
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Evaluator::Const(c) => *c,
            Evaluator::Linear => x.iter().sum(),
            Evaluator::Indicator(lo, hi) => {
                if x.iter().all(|v| (lo..=hi).contains(&v)) {
                    1.0
                } else {
                    0.0
                }
            }
            Evaluator::Cusp(alpha, c) => x.iter().map(|v| (v - c).abs().powf(*alpha)).sum(),
            Evaluator::BoundaryPower(alpha) => x[0].powf(*alpha),
            Evaluator::Tensor(fs) => fs.iter().zip(x).map(|(f, v)| f.eval(std::slice::from_ref(v))).product(),
            Evaluator::Random { cells, values } => {
                let idx = x
                    .iter()
                    .rev()
                    .fold(0, |acc, v| acc * cells + ((v * *cells as f64) as usize).min(cells - 1));
                values[idx]
            }
        }
    }
}

/// Evaluates `spec` at the cell midpoints of the level-`level` lattice in dimension `dim`.
pub fn sample(spec: &FunctionSpec, dim: usize, level: u32) -> Result<GridFunction> {
    check_dim(dim)?;
    spec.validate(dim)?;
    let eval = Evaluator::build(spec, dim);
    GridFunction::from_fn(dim, level, |x| eval.eval(x))
}

/// The ten-member test corpus used by the inequality suites.
pub fn corpus(dim: usize) -> Vec<FunctionSpec> {
    let factors = [
        FunctionSpec::Cusp { alpha: 0.5, center: 0.25 },
        FunctionSpec::Linear,
        FunctionSpec::BoundaryPower { alpha: 0.9 },
    ];
    vec![
        FunctionSpec::Const { value: 1.0 },
        FunctionSpec::Linear,
        FunctionSpec::Indicator { lo: 0.25, hi: 0.75 },
        FunctionSpec::Cusp { alpha: 0.3, center: 0.5 },
        FunctionSpec::Cusp { alpha: 0.5, center: 0.5 },
        FunctionSpec::Cusp { alpha: 0.7, center: 0.3 },
        FunctionSpec::BoundaryPower { alpha: 0.5 },
        FunctionSpec::BoundaryPower { alpha: 0.8 },
        FunctionSpec::Tensor(factors[..dim.min(3)].to_vec()),
        FunctionSpec::RandomDyadic { level: 3, seed: 1 },
    ]
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FunctionSpec::Const { value } if *value == 0.0 => write!(f, "zero"),
            FunctionSpec::Const { value } => write!(f, "const c={value}"),
            FunctionSpec::Linear => write!(f, "linear"),
            FunctionSpec::Indicator { lo, hi } => write!(f, "indicator lo={lo} hi={hi}"),
            FunctionSpec::Cusp { alpha, center } => write!(f, "cusp alpha={alpha} center={center}"),
            FunctionSpec::BoundaryPower { alpha } => write!(f, "bpow alpha={alpha}"),
            FunctionSpec::RandomDyadic { level, seed } => write!(f, "random level={level} seed={seed}"),
            FunctionSpec::Tensor(fs) => {
                write!(f, "tensor")?;
                for (i, g) in fs.iter().enumerate() {
                    write!(f, "{}{g}", if i == 0 { " " } else { " | " })?;
                }
                Ok(())
            }
        }
    }
}

struct Params<'a> {
    tag: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn parse(text: &'a str) -> Result<Self> {
        let mut words = text.split_whitespace();
        let tag = words.next().ok_or_else(|| Error::Spec("empty function spec".into()))?;
        let pairs = words
            .map(|w| w.split_once('=').ok_or_else(|| Error::Spec(format!("expected key=value, got `{w}`"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tag, pairs })
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let Some(pos) = self.pairs.iter().position(|(k, _)| *k == key) else {
            return Ok(None);
        };
        let (_, raw) = self.pairs.remove(pos);
        raw.parse()
            .map(Some)
            .map_err(|_| Error::Spec(format!("{}: cannot parse {key}=`{raw}`", self.tag)))
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.take(key)?.ok_or_else(|| Error::Spec(format!("{}: missing {key}", self.tag)))
    }

    fn finish(self, spec: FunctionSpec) -> Result<FunctionSpec> {
        match self.pairs.first() {
            Some((k, _)) => Err(Error::Spec(format!("{}: unknown parameter `{k}`", self.tag))),
            None => Ok(spec),
        }
    }
}

fn parse_simple(text: &str) -> Result<FunctionSpec> {
    let mut p = Params::parse(text)?;
    let spec = match p.tag {
        "zero" => FunctionSpec::Const { value: 0.0 },
        "const" => FunctionSpec::Const { value: p.take("c")?.unwrap_or(1.0) },
        "linear" => FunctionSpec::Linear,
        "indicator" => FunctionSpec::Indicator {
            lo: p.take("lo")?.unwrap_or(0.0),
            hi: p.take("hi")?.unwrap_or(1.0),
        },
        "cusp" => FunctionSpec::Cusp {
            alpha: p.take("alpha")?.unwrap_or(0.5),
            center: p.take("center")?.unwrap_or(0.5),
        },
        "bpow" | "boundary-power" => FunctionSpec::BoundaryPower { alpha: p.take("alpha")?.unwrap_or(0.5) },
        "random" => FunctionSpec::RandomDyadic { level: p.require("level")?, seed: p.require("seed")? },
        "tensor" => return Err(Error::Spec("nested tensor products are not supported".into())),
        other => return Err(Error::Spec(format!("unknown function `{other}`"))),
    };
    p.finish(spec)
}

impl FromStr for FunctionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.strip_prefix("tensor") {
            Some(rest) if rest.is_empty() || rest.starts_with(char::is_whitespace) => {
                let factors = rest.split('|').map(parse_simple).collect::<Result<Vec<_>>>()?;
                Ok(FunctionSpec::Tensor(factors))
            }
            _ => parse_simple(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridfn::Lattice;

    fn s(text: &str) -> FunctionSpec {
        text.parse().unwrap()
    }

    #[test]
    fn worked_samples() {
        assert_eq!(sample(&s("const c=1"), 1, 2).unwrap().samples(), &[1.0; 4]);
        assert_eq!(sample(&s("linear"), 1, 1).unwrap().samples(), &[0.25, 0.75]);
        assert_eq!(sample(&s("indicator lo=0 hi=0.5"), 1, 2).unwrap().samples(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn parses_and_prints_round_trip() {
        for dim in 1..=3 {
            for spec in corpus(dim) {
                let again: FunctionSpec = spec.to_string().parse().unwrap();
                assert_eq!(again, spec);
                sample(&spec, dim, 2).unwrap();
            }
        }
        assert_eq!(s("cusp alpha=0.5 center=0.5"), FunctionSpec::Cusp { alpha: 0.5, center: 0.5 });
        assert_eq!(s("boundary-power alpha=0.8"), FunctionSpec::BoundaryPower { alpha: 0.8 });
        assert_eq!(s("zero"), FunctionSpec::Const { value: 0.0 });
    }

    #[test]
    fn parse_errors() {
        assert!("wobble".parse::<FunctionSpec>().is_err());
        assert!("cusp beta=1".parse::<FunctionSpec>().is_err());
        assert!("random level=3".parse::<FunctionSpec>().is_err());
        assert!("cusp alpha=x".parse::<FunctionSpec>().is_err());
        assert!(sample(&s("cusp alpha=1.5"), 1, 3).is_err());
        assert!(sample(&s("tensor linear | linear"), 1, 3).is_err());
    }

    #[test]
    fn random_is_seeded_and_cell_constant() {
        let a = sample(&s("random level=2 seed=9"), 2, 4).unwrap();
        let b = sample(&s("random level=2 seed=9"), 2, 4).unwrap();
        let c = sample(&s("random level=2 seed=10"), 2, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // 4x4 blocks of equal values
        assert_eq!(a.get(&[0, 0]), a.get(&[3, 3]));
        assert_ne!(a.get(&[0, 0]), a.get(&[4, 0]));
    }

    #[test]
    fn tensor_multiplies_factors() {
        let f = sample(&s("tensor linear | const c=2"), 2, 1).unwrap();
        assert_eq!(f.samples(), &[0.5, 1.5, 0.5, 1.5]);
    }
}
