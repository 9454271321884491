//! Sample-size bounds for learning with a misclassification budget.
//!
//! For a finite hypothesis space `H`, accuracy `ε`, confidence `δ` and a
//! budget of `k` tolerated training mistakes, a training set of size
//!
//! ```text
//! m ≥ (1/ε)·[ ln(|H|·(k+1)·ε^(1−k) / δ) + k ] + k,   with m ≥ k/ε
//! ```
//!
//! guarantees that every hypothesis misclassifying at most `k` of the `m`
//! samples has true error at most `ε` with probability at least `1 − δ`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};

/// How the real-valued bound becomes an integer sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rounding {
    /// Round half away from zero. Reproduces the published sample-size table.
    #[default]
    Nearest,
    /// Round up, so the bound is always met.
    Ceil,
}

impl FromStr for Rounding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Rounding::Nearest),
            "ceil" => Ok(Rounding::Ceil),
            other => Err(Error::config(format!("unknown rounding mode {other:?}"))),
        }
    }
}

impl fmt::Display for Rounding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rounding::Nearest => "nearest",
            Rounding::Ceil => "ceil",
        })
    }
}

/// Size of a finite hypothesis space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HypothesisCount {
    /// `base^exponent`, e.g. `n^|F|` trees over `|F|` features.
    Power { base: u64, exponent: u32 },
    Exact(BigUint),
}

impl HypothesisCount {
    pub fn trees(n: u64, num_features: u32) -> Self {
        HypothesisCount::Power {
            base: n,
            exponent: num_features,
        }
    }

    pub fn count(&self) -> BigUint {
        match self {
            HypothesisCount::Power { base, exponent } => num_traits::pow(BigUint::from(*base), *exponent as usize),
            HypothesisCount::Exact(v) => v.clone(),
        }
    }

    /// Natural log, computed analytically for powers.
    pub fn ln(&self) -> f64 {
        match self {
            HypothesisCount::Power { base, exponent } => f64::from(*exponent) * (*base as f64).ln(),
            HypothesisCount::Exact(v) => ln_biguint(v),
        }
    }

    fn is_positive(&self) -> bool {
        match self {
            HypothesisCount::Power { base, .. } => *base >= 1,
            HypothesisCount::Exact(v) => *v >= BigUint::one(),
        }
    }
}

fn ln_biguint(v: &BigUint) -> f64 {
    let bits = v.bits();
    if bits <= 1000 {
        return v.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 60;
    let top = (v >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `n^num_features`, exact.
pub fn hypothesis_count(n: u64, num_features: u32) -> Result<BigUint> {
    if n == 0 || num_features == 0 {
        return Err(Error::domain("tree size and feature count must be at least 1"));
    }
    Ok(HypothesisCount::trees(n, num_features).count())
}

fn check_open_half(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 0.5 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in (0, 1/2), got {v}")))
    }
}

/// Right-hand side of the sample-size bound, before rounding.
pub fn sample_size_bound(epsilon: f64, delta: f64, k: u64, hypotheses: &HypothesisCount) -> Result<f64> {
    check_open_half("epsilon", epsilon)?;
    check_open_half("delta", delta)?;
    if !hypotheses.is_positive() {
        return Err(Error::domain("hypothesis count must be at least 1"));
    }
    let k = k as f64;
    let log_term = hypotheses.ln() + (k + 1.0).ln() + (1.0 - k) * epsilon.ln() - delta.ln();
    Ok((log_term + k) / epsilon + k)
}

/// Smallest admissible `m` for `k/ε`, tolerant of float noise in the division.
fn min_for_budget(epsilon: f64, k: u64) -> u64 {
    let ratio = k as f64 / epsilon;
    let nearest = ratio.round();
    if (ratio - nearest).abs() < 1e-9 {
        nearest as u64
    } else {
        ratio.ceil() as u64
    }
}

/// Integer sample size: `max(round(bound), ceil(k/ε))`.
pub fn sample_size(
    epsilon: f64,
    delta: f64,
    k: u64,
    hypotheses: &HypothesisCount,
    rounding: Rounding,
) -> Result<u64> {
    let raw = sample_size_bound(epsilon, delta, k, hypotheses)?;
    let rounded = match rounding {
        Rounding::Nearest => raw.round(),
        Rounding::Ceil => raw.ceil(),
    };
    Ok((rounded.max(1.0) as u64).max(min_for_budget(epsilon, k)))
}

/// Tree-size estimate `(1/ε)^(c·ln(1/ε)/γ²)` with `γ = 1/2 − ε`, unrounded.
///
/// This is a reconstruction of the boosting-based size bound for top-down
/// tree learners; it is pinned by the published `(c, n)` pairs.
pub fn tree_size_estimate_raw(c: f64, epsilon: f64) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain(format!("c must be positive, got {c}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let gamma = 0.5 - epsilon;
    if gamma <= 0.0 {
        return Err(Error::domain(format!("gamma = 0.5 - epsilon = {gamma} must be positive")));
    }
    let inv = 1.0 / epsilon;
    Ok(inv.powf(c * inv.ln() / (gamma * gamma)))
}

pub fn tree_size_estimate(c: f64, epsilon: f64) -> Result<u64> {
    Ok(tree_size_estimate_raw(c, epsilon)?.round().max(1.0) as u64)
}

/// Every parameter of one sample-size computation.
#[derive(Debug, Clone, PartialEq)]
pub struct PacParams {
    pub epsilon: f64,
    pub delta: f64,
    pub k: u64,
    /// Tree size (internal nodes) defining the hypothesis count.
    pub n: u64,
    pub num_features: u32,
    pub c: Option<f64>,
    pub rounding: Rounding,
}

impl PacParams {
    pub fn gamma(&self) -> f64 {
        0.5 - self.epsilon
    }

    pub fn hypotheses(&self) -> HypothesisCount {
        HypothesisCount::trees(self.n, self.num_features)
    }

    pub fn sample_size(&self) -> Result<u64> {
        sample_size(self.epsilon, self.delta, self.k, &self.hypotheses(), self.rounding)
    }
}

/// Exact binomial coefficient.
pub fn binomial(m: u64, j: u64) -> BigUint {
    if j > m {
        return BigUint::default();
    }
    let j = j.min(m - j);
    let mut acc = BigUint::one();
    for i in 0..j {
        acc = acc * BigUint::from(m - i) / BigUint::from(i + 1);
    }
    acc
}

/// `(e·m/j)^j`, the standard upper bound on `C(m, j)`.
pub fn binomial_upper_bound(m: u64, j: u64) -> Result<f64> {
    if j == 0 || j > m {
        return Err(Error::domain(format!("need 1 <= j <= m, got m={m}, j={j}")));
    }
    Ok((std::f64::consts::E * m as f64 / j as f64).powi(j as i32))
}

/// Checks `C(m, j) <= (e·m/j)^j` for every `1 <= j <= m <= m_max`.
pub fn check_binomial_lemma(m_max: u64) -> bool {
    (1..=m_max).all(|m| {
        (1..=m).all(|j| {
            let exact = binomial(m, j).to_f64().unwrap_or(f64::INFINITY);
            binomial_upper_bound(m, j).map_or(false, |bound| exact <= bound)
        })
    })
}

/// Published experiment grid: ε = 0.2, δ = 0.1, 22 features.
pub const TABLE1_EPSILON: f64 = 0.2;
pub const TABLE1_DELTA: f64 = 0.1;
pub const TABLE1_FEATURES: u32 = 22;
pub const TABLE1_C: [f64; 4] = [0.04, 0.06, 0.08, 0.1];
pub const TABLE1_K: [u64; 4] = [0, 5, 10, 15];

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Row {
    pub c: f64,
    pub n: u64,
    /// Sample sizes for each entry of [`TABLE1_K`].
    pub m: [u64; 4],
}

pub fn table1(rounding: Rounding) -> Result<Vec<Table1Row>> {
    TABLE1_C
        .iter()
        .map(|&c| {
            let n = tree_size_estimate(c, TABLE1_EPSILON)?;
            let hyp = HypothesisCount::trees(n, TABLE1_FEATURES);
            let mut m = [0; 4];
            for (slot, &k) in m.iter_mut().zip(&TABLE1_K) {
                *slot = sample_size(TABLE1_EPSILON, TABLE1_DELTA, k, &hyp, rounding)?;
            }
            Ok(Table1Row { c, n, m })
        })
        .collect()
}

pub fn table1_csv(rows: &[Table1Row]) -> String {
    let mut out = String::from("c,n,m_k0,m_k5,m_k10,m_k15\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.c, row.n, row.m[0], row.m[1], row.m[2], row.m[3]
        ));
    }
    out
}
