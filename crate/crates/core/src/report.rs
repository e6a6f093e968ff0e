//! Structured experiment results.
//!
//! A report holds named scalars and series plus verdicts. Every verdict is a
//! [`Rule`] over the stored numbers, so a report read back from disk can be
//! re-judged without rerunning anything.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Rule {
    /// `series[i+1] < series[i]` for all `i`.
    Decreasing(String),
    /// `scalar <= bound`
    AtMost(String, f64),
    /// `scalar >= bound`
    AtLeast(String, f64),
    /// `scalar > bound`
    Exceeds(String, f64),
    /// every entry of the series `<= bound`
    AllAtMost(String, f64),
    /// `lhs[i] <= factor * rhs[i]` entrywise
    PairwiseAtMost(String, String, f64),
    /// `max / min <= bound` over the series
    SpreadAtMost(String, f64),
}

fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Decreasing(s) => write!(f, "decreasing({s})"),
            Rule::AtMost(s, b) => write!(f, "le({s}, {})", fmt_num(*b)),
            Rule::AtLeast(s, b) => write!(f, "ge({s}, {})", fmt_num(*b)),
            Rule::Exceeds(s, b) => write!(f, "gt({s}, {})", fmt_num(*b)),
            Rule::AllAtMost(s, b) => write!(f, "all-le({s}, {})", fmt_num(*b)),
            Rule::PairwiseAtMost(a, b, c) => write!(f, "pairwise-le({a}, {b}, {})", fmt_num(*c)),
            Rule::SpreadAtMost(s, b) => write!(f, "spread-le({s}, {})", fmt_num(*b)),
        }
    }
}

impl FromStr for Rule {
    type Err = LabError;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || LabError::Format(format!("malformed verdict rule '{text}'"));
        let open = text.find('(').ok_or_else(bad)?;
        if !text.ends_with(')') {
            return Err(bad());
        }
        let head = &text[..open];
        let args: Vec<&str> = text[open + 1..text.len() - 1].split(',').map(str::trim).collect();
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        let name = |s: &str| {
            if s.is_empty() {
                Err(bad())
            } else {
                Ok(s.to_string())
            }
        };
        match (head, args.as_slice()) {
            ("decreasing", [s]) => Ok(Rule::Decreasing(name(s)?)),
            ("le", [s, b]) => Ok(Rule::AtMost(name(s)?, num(b)?)),
            ("ge", [s, b]) => Ok(Rule::AtLeast(name(s)?, num(b)?)),
            ("gt", [s, b]) => Ok(Rule::Exceeds(name(s)?, num(b)?)),
            ("all-le", [s, b]) => Ok(Rule::AllAtMost(name(s)?, num(b)?)),
            ("pairwise-le", [a, b, c]) => Ok(Rule::PairwiseAtMost(name(a)?, name(b)?, num(c)?)),
            ("spread-le", [s, b]) => Ok(Rule::SpreadAtMost(name(s)?, num(b)?)),
            _ => Err(bad()),
        }
    }
}

pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

pub fn spread(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub rule: Rule,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub name: String,
    pub seed: Option<u64>,
    pub config_hash: String,
    /// Wall-clock stamp; the only field allowed to differ between identical runs.
    pub timestamp: Option<String>,
    pub scalars: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<f64>>,
    pub verdicts: BTreeMap<String, Verdict>,
    /// Free-form annotations that are not verdicts (e.g. optimizer stagnation).
    pub notes: BTreeMap<String, String>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>) -> Self {
        ExperimentReport {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn scalar(&mut self, key: &str, value: f64) {
        self.scalars.insert(key.to_string(), value);
    }

    pub fn series(&mut self, key: &str, values: Vec<f64>) {
        self.series.insert(key.to_string(), values);
    }

    pub fn push(&mut self, key: &str, value: f64) {
        self.series.entry(key.to_string()).or_default().push(value);
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.insert(key.to_string(), value.into());
    }

    pub fn get_scalar(&self, key: &str) -> Option<f64> {
        self.scalars.get(key).copied()
    }

    pub fn get_series(&self, key: &str) -> Option<&[f64]> {
        self.series.get(key).map(Vec::as_slice)
    }

    /// Evaluates `rule` on the stored numbers and records the verdict.
    pub fn judge(&mut self, key: &str, rule: Rule) -> bool {
        let passed = self.evaluate(&rule).unwrap_or(false);
        self.verdicts.insert(key.to_string(), Verdict { rule, passed });
        passed
    }

    pub fn evaluate(&self, rule: &Rule) -> Result<bool> {
        let scalar = |k: &str| {
            self.get_scalar(k)
                .ok_or_else(|| LabError::Format(format!("verdict refers to missing scalar '{k}'")))
        };
        let series = |k: &str| {
            self.get_series(k)
                .ok_or_else(|| LabError::Format(format!("verdict refers to missing series '{k}'")))
        };
        Ok(match rule {
            Rule::Decreasing(s) => strictly_decreasing(series(s)?),
            Rule::AtMost(s, b) => scalar(s)? <= *b,
            Rule::AtLeast(s, b) => scalar(s)? >= *b,
            Rule::Exceeds(s, b) => scalar(s)? > *b,
            Rule::AllAtMost(s, b) => series(s)?.iter().all(|v| v <= b),
            Rule::PairwiseAtMost(a, b, c) => {
                let (a, b) = (series(a)?, series(b)?);
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| *x <= c * y)
            }
            Rule::SpreadAtMost(s, b) => {
                let s = series(s)?;
                !s.is_empty() && spread(s) <= *b
            }
        })
    }

    /// Re-evaluates every stored rule and checks it reproduces the stored flag.
    pub fn verdicts_consistent(&self) -> bool {
        self.verdicts
            .values()
            .all(|v| self.evaluate(&v.rule).unwrap_or(false) == v.passed)
    }

    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| v.passed)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.verdicts
            .iter()
            .filter(|(_, v)| !v.passed)
            .map(|(k, _)| k.as_str())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_round_trip_through_text() {
        let rules = [
            Rule::Decreasing("err".into()),
            Rule::AtMost("final".into(), 0.1),
            Rule::AtLeast("slope".into(), 1e-300),
            Rule::Exceeds("best".into(), 0.7),
            Rule::AllAtMost("x".into(), 5.0),
            Rule::PairwiseAtMost("a".into(), "b".into(), 1.0000000001),
            Rule::SpreadAtMost("r".into(), 3.0),
        ];
        for r in rules {
            assert_eq!(r.to_string().parse::<Rule>().unwrap(), r);
        }
        assert!("decreasing()".parse::<Rule>().is_err());
        assert!("nope(x)".parse::<Rule>().is_err());
    }

    #[test]
    fn judging() {
        let mut rep = ExperimentReport::new("t");
        rep.series("s", vec![3.0, 2.0, 1.0]);
        rep.series("flat", vec![1.0, 1.0]);
        rep.scalar("x", 0.5);
        assert!(rep.judge("dec", Rule::Decreasing("s".into())));
        assert!(!rep.judge("flat", Rule::Decreasing("flat".into())));
        assert!(rep.judge("small", Rule::AtMost("x".into(), 0.5)));
        assert!(!rep.judge("missing", Rule::AtMost("y".into(), 0.5)));
        assert!(rep.judge("spread", Rule::SpreadAtMost("s".into(), 3.0)));
        assert!(!rep.all_pass());
        assert_eq!(rep.failing(), vec!["flat", "missing"]);
        assert!(rep.verdicts_consistent());
    }
}
