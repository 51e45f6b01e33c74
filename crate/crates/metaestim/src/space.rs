use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// One tunable model parameter: a name and an inclusive range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterDef {
    pub name: String,
    pub min: f64,
    pub max: f64,
}

impl ParameterDef {
    pub fn new(name: impl Into<String>, min: f64, max: f64) -> Result<Self> {
        let name = name.into();
        if !(min < max) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidBounds { name, min, max });
        }
        Ok(ParameterDef { name, min, max })
    }

    /// Width of the range.
    pub fn range(&self) -> f64 {
        self.max - self.min
    }

    /// Midpoint of the range.
    pub fn midpoint(&self) -> f64 {
        (self.min + self.max) / 2.0
    }
}

/// The ordered collection of parameters defining the search box.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpace {
    params: Vec<ParameterDef>,
}

impl ParameterSpace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a space from `(name, min, max)` triples.
    pub fn from_bounds<S: Into<String> + Clone>(bounds: &[(S, f64, f64)]) -> Result<Self> {
        let mut space = Self::new();
        for (name, min, max) in bounds {
            space.add_parameter(ParameterDef::new(name.clone(), *min, *max)?)?;
        }
        Ok(space)
    }

    /// Adds a parameter; names must be unique and min strictly below max.
    pub fn add_parameter(&mut self, def: ParameterDef) -> Result<()> {
        if self.params.iter().any(|p| p.name == def.name) {
            return Err(Error::DuplicateParameter(def.name));
        }
        self.params.push(def);
        Ok(())
    }

    /// Same as `add_parameter` but skips the min < max check. Used internally
    /// for derived sampling ranges that may collapse to a point.
    pub(crate) fn push_unchecked(&mut self, name: impl Into<String>, min: f64, max: f64) {
        self.params.push(ParameterDef {
            name: name.into(),
            min,
            max,
        });
    }

    pub fn dimension(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[ParameterDef] {
        &self.params
    }

    pub fn names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }

    /// Projects each component of `v` into its parameter range.
    pub fn clamp(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.params.len() {
            return Err(Error::DimensionMismatch {
                expected: self.params.len(),
                got: v.len(),
            });
        }
        Ok(v.iter()
            .zip(&self.params)
            .map(|(&x, p)| x.clamp(p.min, p.max))
            .collect())
    }

    /// True when every component lies inside its range.
    pub fn contains(&self, v: &[f64]) -> bool {
        v.len() == self.params.len()
            && v.iter()
                .zip(&self.params)
                .all(|(&x, p)| x >= p.min && x <= p.max)
    }
}
