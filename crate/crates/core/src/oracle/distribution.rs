use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::distributions::{Distribution as _, WeightedIndex};
use rand::Rng;

use crate::error::{Error, Result};
use crate::feature::{FeatureSpace, TabularExample};
use crate::oracle::fixture::parse_row;

#[derive(Debug, Clone)]
enum Weights {
    Uniform,
    Exact(Vec<BigRational>),
    Float(Vec<f64>),
}

/// A probability distribution over a finite, explicitly listed example space.
///
/// Weights are either the uniform tag, exact rationals that sum to exactly 1,
/// or floats that sum to 1 within `1e-12`.
#[derive(Debug, Clone)]
pub struct Distribution {
    examples: Vec<TabularExample>,
    weights: Weights,
    sampler: Option<WeightedIndex<f64>>,
}

pub const FLOAT_TOLERANCE: f64 = 1e-12;

impl Distribution {
    pub fn uniform(examples: Vec<TabularExample>) -> Self {
        Distribution {
            examples,
            weights: Weights::Uniform,
            sampler: None,
        }
    }

    pub fn uniform_over(space: &FeatureSpace) -> Result<Self> {
        Ok(Self::uniform(space.enumerate()?))
    }

    pub fn exact(examples: Vec<TabularExample>, weights: Vec<BigRational>) -> Result<Self> {
        if examples.len() != weights.len() {
            return Err(Error::domain("one weight per example is required"));
        }
        if weights.iter().any(Signed::is_negative) {
            return Err(Error::domain("weights must be non-negative"));
        }
        let total: BigRational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::domain(format!("weights sum to {total}, not 1")));
        }
        let floats: Vec<f64> = weights.iter().map(|w| w.to_f64().unwrap_or(0.0)).collect();
        let sampler = WeightedIndex::new(&floats).ok();
        Ok(Distribution {
            examples,
            weights: Weights::Exact(weights),
            sampler,
        })
    }

    pub fn float(examples: Vec<TabularExample>, weights: Vec<f64>) -> Result<Self> {
        if examples.len() != weights.len() {
            return Err(Error::domain("one weight per example is required"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > FLOAT_TOLERANCE {
            return Err(Error::domain(format!("weights sum to {total}, not 1")));
        }
        let sampler = WeightedIndex::new(&weights).ok();
        Ok(Distribution {
            examples,
            weights: Weights::Float(weights),
            sampler,
        })
    }

    /// All mass on `examples[index]`.
    pub fn point_mass(examples: Vec<TabularExample>, index: usize) -> Result<Self> {
        if index >= examples.len() {
            return Err(Error::domain("point-mass index outside the space"));
        }
        let weights = (0..examples.len())
            .map(|i| if i == index { BigRational::one() } else { BigRational::zero() })
            .collect();
        Self::exact(examples, weights)
    }

    /// Reads `value,...,value,weight` rows; weights are decimals or `p/q`
    /// fractions and are kept exact.
    pub fn from_file(path: impl AsRef<Path>, space: &FeatureSpace) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?, space)
    }

    pub fn from_text(text: &str, space: &FeatureSpace) -> Result<Self> {
        let mut examples = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (example, last) = parse_row(line, space)
                .map_err(|e| Error::config(format!("distribution line {}: {e}", lineno + 1)))?;
            weights.push(parse_rational(last).map_err(|e| {
                Error::config(format!("distribution line {}: {e}", lineno + 1))
            })?);
            examples.push(example);
        }
        Self::exact(examples, weights)
    }

    pub fn examples(&self) -> &[TabularExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.weights, Weights::Uniform)
    }

    /// Short description recorded in reports.
    pub fn describe(&self) -> String {
        match self.weights {
            Weights::Uniform => format!("uniform({})", self.len()),
            Weights::Exact(_) => format!("explicit-exact({})", self.len()),
            Weights::Float(_) => format!("explicit-float({})", self.len()),
        }
    }

    pub fn weight(&self, index: usize) -> f64 {
        match &self.weights {
            Weights::Uniform => 1.0 / self.examples.len() as f64,
            Weights::Exact(w) => w[index].to_f64().unwrap_or(0.0),
            Weights::Float(w) => w[index],
        }
    }

    /// Exact weight; float weights convert to their exact binary value.
    pub fn weight_exact(&self, index: usize) -> BigRational {
        match &self.weights {
            Weights::Uniform => BigRational::new(BigInt::one(), BigInt::from(self.examples.len())),
            Weights::Exact(w) => w[index].clone(),
            Weights::Float(w) => BigRational::from_float(w[index]).unwrap_or_else(BigRational::zero),
        }
    }

    pub fn draw_index<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        if self.examples.is_empty() {
            return Err(Error::domain("cannot draw from an empty example space"));
        }
        match &self.sampler {
            None if self.is_uniform() => Ok(rng.gen_range(0..self.examples.len())),
            None => Err(Error::domain("distribution has no positive weight")),
            Some(sampler) => Ok(sampler.sample(rng)),
        }
    }

    /// One i.i.d. draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&TabularExample> {
        Ok(&self.examples[self.draw_index(rng)?])
    }
}

/// Parses `p/q`, an integer, or a plain decimal into an exact rational.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::config(format!("invalid weight {text:?}"));
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (int_part, frac_part) = text.split_once('.').unwrap_or((text, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().map_err(|_| bad())?;
    let denom = num_traits::pow(BigInt::from(10), frac_part.len());
    Ok(BigRational::new(numer, denom))
}
