//! Labelled tensor-product structure of a finite-dimensional Hilbert space.
//!
//! Composite indices use the convention that the leftmost factor is the most
//! significant digit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Factor>", into = "Vec<Factor>")]
pub struct SystemLayout {
    factors: Vec<Factor>,
}

impl TryFrom<Vec<Factor>> for SystemLayout {
    type Error = Error;
    fn try_from(factors: Vec<Factor>) -> Result<Self> {
        SystemLayout::from_factors(factors)
    }
}

impl From<SystemLayout> for Vec<Factor> {
    fn from(l: SystemLayout) -> Self {
        l.factors
    }
}

impl SystemLayout {
    pub fn new<S: AsRef<str>>(spec: &[(S, usize)]) -> Result<Self> {
        Self::from_factors(
            spec.iter()
                .map(|(l, d)| Factor {
                    label: l.as_ref().to_string(),
                    dim: *d,
                })
                .collect(),
        )
    }

    pub fn from_factors(factors: Vec<Factor>) -> Result<Self> {
        for (i, f) in factors.iter().enumerate() {
            if f.dim == 0 {
                return Err(Error::Layout(format!("factor `{}` has dimension 0", f.label)));
            }
            if f.label.is_empty() {
                return Err(Error::Layout("empty factor label".into()));
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::Layout(format!("duplicate label `{}`", f.label)));
            }
        }
        Ok(SystemLayout { factors })
    }

    /// Single unlabelled-ish factor.
    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new(&[(label, dim)])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim).collect()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|f| f.label.as_str()).collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.label == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|i| self.factors[i].dim)
            .ok_or_else(|| Error::Layout(format!("unknown label `{label}`")))
    }

    /// Positions of `labels` in this layout, failing on unknown or repeated labels.
    pub fn positions<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let l = l.as_ref();
            let p = self
                .position(l)
                .ok_or_else(|| Error::Layout(format!("unknown label `{l}`")))?;
            if out.contains(&p) {
                return Err(Error::Layout(format!("label `{l}` listed twice")));
            }
            out.push(p);
        }
        Ok(out)
    }

    /// Product dimension of the named factors.
    pub fn dim_of_all<S: AsRef<str>>(&self, labels: &[S]) -> Result<usize> {
        Ok(self
            .positions(labels)?
            .into_iter()
            .map(|p| self.factors[p].dim)
            .product())
    }

    /// Layout made of the factors at the given positions, in that order.
    pub fn select(&self, positions: &[usize]) -> SystemLayout {
        SystemLayout {
            factors: positions.iter().map(|&p| self.factors[p].clone()).collect(),
        }
    }

    /// Sub-layout keeping the named factors in their original relative order.
    pub fn keep<S: AsRef<str>>(&self, labels: &[S]) -> Result<SystemLayout> {
        let mut pos = self.positions(labels)?;
        pos.sort_unstable();
        Ok(self.select(&pos))
    }

    /// Labels not in `labels`, in layout order.
    pub fn complement<S: AsRef<str>>(&self, labels: &[S]) -> Result<Vec<String>> {
        let pos = self.positions(labels)?;
        Ok(self
            .factors
            .iter()
            .enumerate()
            .filter(|(i, _)| !pos.contains(i))
            .map(|(_, f)| f.label.clone())
            .collect())
    }

    pub fn concat(&self, other: &SystemLayout) -> Result<SystemLayout> {
        let mut f = self.factors.clone();
        f.extend(other.factors.iter().cloned());
        Self::from_factors(f)
    }

    pub fn relabel(&self, from: &str, to: &str) -> Result<SystemLayout> {
        let p = self
            .position(from)
            .ok_or_else(|| Error::Layout(format!("unknown label `{from}`")))?;
        let mut f = self.factors.clone();
        f[p].label = to.to_string();
        Self::from_factors(f)
    }

    /// Copy of the layout with every label suffixed, e.g. `A` -> `A.2`.
    pub fn suffixed(&self, suffix: &str) -> SystemLayout {
        SystemLayout {
            factors: self
                .factors
                .iter()
                .map(|f| Factor {
                    label: format!("{}{}", f.label, suffix),
                    dim: f.dim,
                })
                .collect(),
        }
    }

    /// Map from flat index in the permuted layout (factors listed in
    /// `order`) to the flat index in this layout.
    pub fn permutation_map(&self, order: &[usize]) -> Vec<usize> {
        let dims = self.dims();
        let n = dims.len();
        let mut strides = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let new_dims: Vec<usize> = order.iter().map(|&p| dims[p]).collect();
        let total = self.total_dim();
        let mut map = Vec::with_capacity(total);
        let mut digits = vec![0usize; n];
        for _ in 0..total {
            let mut old = 0;
            for (k, &p) in order.iter().enumerate() {
                old += digits[k] * strides[p];
            }
            map.push(old);
            for k in (0..n).rev() {
                digits[k] += 1;
                if digits[k] < new_dims[k] {
                    break;
                }
                digits[k] = 0;
            }
        }
        map
    }
}

impl std::fmt::Display for SystemLayout {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .factors
            .iter()
            .map(|x| format!("{}:{}", x.label, x.dim))
            .collect();
        write!(f, "[{}]", parts.join(", "))
    }
}
