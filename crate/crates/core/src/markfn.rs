//! Mark functions `f(y1, y2)`, indicator conditioning functions, and the
//! threshold-excess family used by the central limit theorem.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Whether a mark function reads the second mark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arity {
    FirstOnly,
    Both,
}

type Eval = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// A named function of the marks `(y1, y2)` of an ordered pair.
#[derive(Clone)]
pub struct MarkFunction {
    name: String,
    arity: Arity,
    eval: Eval,
}

impl fmt::Debug for MarkFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MarkFunction")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .finish()
    }
}

const PROBES: [f64; 5] = [-3.5, -1.0, 0.0, 0.75, 12.0];

impl MarkFunction {
    pub fn new<F>(name: impl Into<String>, arity: Arity, eval: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            arity,
            eval: Arc::new(eval),
        }
    }

    /// A function of the first mark only.
    pub fn of_first<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::new(name, Arity::FirstOnly, move |y1, _| eval(y1))
    }

    /// Builds a first-only function from an arbitrary closure and probes that
    /// it really ignores `y2`.
    pub fn checked_first_only<F>(name: impl Into<String>, eval: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        let f = Self::new(name, Arity::FirstOnly, eval);
        f.check_arity()?;
        Ok(f)
    }

    /// Verifies the arity hint on a fixed probe grid.
    pub fn check_arity(&self) -> Result<()> {
        if self.arity == Arity::Both {
            return Ok(());
        }
        for &y1 in &PROBES {
            let reference = self.eval(y1, PROBES[0]);
            for &y2 in &PROBES[1..] {
                let v = self.eval(y1, y2);
                if v.to_bits() != reference.to_bits() && !(v.is_nan() && reference.is_nan()) {
                    return Err(invalid(format!(
                        "mark function '{}' is declared first-only but depends on y2",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, y1: f64, y2: f64) -> f64 {
        (self.eval)(y1, y2)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> Arity {
        self.arity
    }

    pub fn product() -> Self {
        Self::new("product", Arity::Both, |a, b| a * b)
    }

    pub fn first() -> Self {
        Self::of_first("first", |a| a)
    }

    pub fn first_squared() -> Self {
        Self::of_first("first_squared", |a| a * a)
    }

    pub fn const_one() -> Self {
        Self::new("const_one", Arity::FirstOnly, |_, _| 1.0)
    }

    /// Looks up one of the built-in functions by name.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "product" => Ok(Self::product()),
            "first" => Ok(Self::first()),
            "first_squared" => Ok(Self::first_squared()),
            "const_one" => Ok(Self::const_one()),
            other => Err(invalid(format!("unknown mark function '{other}'"))),
        }
    }

    /// Pointwise product `f · g`, used for conditional mean marks.
    pub fn times(&self, other: &MarkFunction) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let arity = if self.arity == Arity::FirstOnly && other.arity == Arity::FirstOnly {
            Arity::FirstOnly
        } else {
            Arity::Both
        };
        Self {
            name: format!("{}*{}", self.name, other.name),
            arity,
            eval: Arc::new(move |a, b| f(a, b) * g(a, b)),
        }
    }

    /// `(y1, y2) ↦ f(y2, y1)`.
    pub fn swapped(&self) -> Self {
        let f = self.eval.clone();
        Self {
            name: format!("swap({})", self.name),
            arity: Arity::Both,
            eval: Arc::new(move |a, b| f(b, a)),
        }
    }
}

/// `f(y1, y2) = 1_A(y1) · 1_B(y2)` for closed intervals `A`, `B`. Infinite
/// endpoints are allowed.
pub fn indicator_pair(a_lo: f64, a_hi: f64, b_lo: f64, b_hi: f64) -> Result<MarkFunction> {
    for (lo, hi) in [(a_lo, a_hi), (b_lo, b_hi)] {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(invalid(format!("inverted indicator interval [{lo}, {hi}]")));
        }
    }
    let arity = if b_lo == f64::NEG_INFINITY && b_hi == f64::INFINITY {
        Arity::FirstOnly
    } else {
        Arity::Both
    };
    Ok(MarkFunction::new(
        format!("1[{a_lo},{a_hi}]x[{b_lo},{b_hi}]"),
        arity,
        move |y1, y2| {
            if (a_lo..=a_hi).contains(&y1) && (b_lo..=b_hi).contains(&y2) {
                1.0
            } else {
                0.0
            }
        },
    ))
}

/// Threshold family of a first-only `f`: the excess `(f(y) - u)_+` and the
/// exceedance indicator `1{f(y) > u}`.
#[derive(Debug, Clone)]
pub struct ThresholdFamily {
    base: MarkFunction,
    u: f64,
}

pub fn threshold(base: &MarkFunction, u: f64) -> Result<ThresholdFamily> {
    if !(u >= 0.0) {
        return Err(invalid(format!("threshold must be >= 0, got {u}")));
    }
    if base.arity() != Arity::FirstOnly {
        return Err(invalid(format!(
            "threshold family needs a first-only base function, '{}' reads both marks",
            base.name()
        )));
    }
    Ok(ThresholdFamily {
        base: base.clone(),
        u,
    })
}

impl ThresholdFamily {
    pub fn base(&self) -> &MarkFunction {
        &self.base
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn excess(&self, y: f64) -> f64 {
        let v = self.base.eval(y, 0.0);
        if v > self.u {
            v - self.u
        } else {
            0.0
        }
    }

    pub fn indicator(&self, y: f64) -> f64 {
        if self.base.eval(y, 0.0) > self.u {
            1.0
        } else {
            0.0
        }
    }

    pub fn excess_fn(&self) -> MarkFunction {
        let fam = self.clone();
        MarkFunction::of_first(format!("({})_+{}", self.base.name(), self.u), move |y| {
            fam.excess(y)
        })
    }

    pub fn indicator_fn(&self) -> MarkFunction {
        let fam = self.clone();
        MarkFunction::of_first(format!("1[{}>{}]", self.base.name(), self.u), move |y| {
            fam.indicator(y)
        })
    }
}

/// Serializable reference to a mark function, as written in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum MarkFnSpec {
    Product,
    First,
    FirstSquared,
    ConstOne,
    /// `1_A(y1) · 1_B(y2)`; omitted bounds are infinite.
    Indicator {
        #[serde(default)]
        a: Option<[f64; 2]>,
        #[serde(default)]
        b: Option<[f64; 2]>,
    },
    /// Threshold excess `(base(y) - u)_+` of a first-only base.
    Excess { base: String, u: f64 },
    /// Exceedance indicator `1{base(y) > u}`.
    Exceeds { base: String, u: f64 },
    /// A function registered under `key` in a [`Registry`].
    Custom { key: String },
}

/// Name-keyed collection of mark functions for config resolution. Starts
/// with the built-ins.
#[derive(Debug, Clone)]
pub struct Registry {
    fns: BTreeMap<String, MarkFunction>,
}

impl Default for Registry {
    fn default() -> Self {
        let fns = [
            MarkFunction::product(),
            MarkFunction::first(),
            MarkFunction::first_squared(),
            MarkFunction::const_one(),
        ]
        .into_iter()
        .map(|f| (f.name().to_string(), f))
        .collect();
        Self { fns }
    }
}

impl Registry {
    pub fn register(&mut self, key: impl Into<String>, f: MarkFunction) {
        self.fns.insert(key.into(), f);
    }

    pub fn get(&self, key: &str) -> Result<MarkFunction> {
        self.fns
            .get(key)
            .cloned()
            .ok_or_else(|| invalid(format!("unknown mark function '{key}'")))
    }

    pub fn resolve(&self, spec: &MarkFnSpec) -> Result<MarkFunction> {
        match spec {
            MarkFnSpec::Product => Ok(MarkFunction::product()),
            MarkFnSpec::First => Ok(MarkFunction::first()),
            MarkFnSpec::FirstSquared => Ok(MarkFunction::first_squared()),
            MarkFnSpec::ConstOne => Ok(MarkFunction::const_one()),
            MarkFnSpec::Indicator { a, b } => {
                let [a_lo, a_hi] = a.unwrap_or([f64::NEG_INFINITY, f64::INFINITY]);
                let [b_lo, b_hi] = b.unwrap_or([f64::NEG_INFINITY, f64::INFINITY]);
                indicator_pair(a_lo, a_hi, b_lo, b_hi)
            }
            MarkFnSpec::Excess { base, u } => Ok(threshold(&self.get(base)?, *u)?.excess_fn()),
            MarkFnSpec::Exceeds { base, u } => Ok(threshold(&self.get(base)?, *u)?.indicator_fn()),
            MarkFnSpec::Custom { key } => self.get(key),
        }
    }
}

impl MarkFnSpec {
    /// Name of the underlying built-in, if this spec is one.
    pub fn builtin_name(&self) -> Option<&'static str> {
        match self {
            MarkFnSpec::Product => Some("product"),
            MarkFnSpec::First => Some("first"),
            MarkFnSpec::FirstSquared => Some("first_squared"),
            MarkFnSpec::ConstOne => Some("const_one"),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builtins() {
        assert_eq!(MarkFunction::builtin("product").unwrap().eval(3.0, 4.0), 12.0);
        assert_eq!(MarkFunction::builtin("first").unwrap().eval(3.0, 4.0), 3.0);
        assert_eq!(MarkFunction::builtin("const_one").unwrap().eval(7.0, -2.0), 1.0);
        assert_eq!(MarkFunction::builtin("first_squared").unwrap().eval(-3.0, 1.0), 9.0);
        assert!(MarkFunction::builtin("cube").is_err());
    }

    #[test]
    fn threshold_examples() {
        let fam = threshold(&MarkFunction::first(), 2.0).unwrap();
        assert_eq!((fam.excess(5.0), fam.indicator(5.0)), (3.0, 1.0));
        assert_eq!((fam.excess(2.0), fam.indicator(2.0)), (0.0, 0.0));
        let sq = threshold(&MarkFunction::first_squared(), 4.0).unwrap();
        assert_eq!(sq.excess(3.0), 5.0);
        assert!(threshold(&MarkFunction::first(), -1.0).is_err());
        assert!(threshold(&MarkFunction::product(), 1.0).is_err());
    }

    #[test]
    fn indicator_pair_examples() {
        let f = indicator_pair(0.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(f.eval(0.5, 0.5), 1.0);
        assert_eq!(f.eval(2.0, 0.5), 0.0);
        let all = indicator_pair(f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY)
            .unwrap();
        for &(a, b) in &[(0.0, 0.0), (-1e300, 1e300), (5.0, -7.0)] {
            assert_eq!(all.eval(a, b), 1.0);
        }
        assert!(indicator_pair(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn arity_probe_catches_second_argument() {
        assert!(MarkFunction::checked_first_only("ok", |a, _| a + 1.0).is_ok());
        assert!(MarkFunction::checked_first_only("bad", |a, b| a + b).is_err());
        assert!(MarkFunction::first().check_arity().is_ok());
    }

    #[test]
    fn registry_resolves_specs() {
        let mut reg = Registry::default();
        reg.register("abs", MarkFunction::of_first("abs", f64::abs));
        let spec: MarkFnSpec = serde_json::from_str(r#"{"name":"excess","base":"first","u":1.0}"#).unwrap();
        assert_eq!(reg.resolve(&spec).unwrap().eval(3.0, 0.0), 2.0);
        let custom: MarkFnSpec = serde_json::from_str(r#"{"name":"custom","key":"abs"}"#).unwrap();
        assert_eq!(reg.resolve(&custom).unwrap().eval(-3.0, 0.0), 3.0);
        let ind: MarkFnSpec = serde_json::from_str(r#"{"name":"indicator","a":[3.0,1e308]}"#).unwrap();
        let f = reg.resolve(&ind).unwrap();
        assert_eq!((f.eval(4.0, -9.0), f.eval(2.0, 0.0)), (1.0, 0.0));
        assert!(reg.get("missing").is_err());
    }

    proptest! {
        #[test]
        fn threshold_identities(y in -50.0f64..50.0, u in 0.0f64..20.0) {
            let fam = threshold(&MarkFunction::first(), u).unwrap();
            let ind = fam.indicator(y);
            prop_assert_eq!(ind * ind, ind);
            let lhs = fam.excess(y) + u * ind;
            let rhs = y * ind;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }

        #[test]
        fn builtins_non_negative_where_expected(y1 in 0.0f64..100.0, y2 in 0.0f64..100.0) {
            for name in ["product", "first", "first_squared", "const_one"] {
                prop_assert!(MarkFunction::builtin(name).unwrap().eval(y1, y2) >= 0.0);
            }
            prop_assert!(MarkFunction::first_squared().eval(-y1, y2) >= 0.0);
        }
    }
}
