//! JSON interchange for states and matrices.
//!
//! Matrices are stored row-major as `[re, im]` pairs; states carry their
//! layout alongside.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::SystemLayout;
use crate::linalg::{c, CMat, CVec};
use crate::state::{DensityOperator, PureState};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let z = m[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        MatrixDoc {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::Parse(format!(
                "{} entries for a {}x{} matrix",
                self.entries.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.entries[i * self.cols + j];
            c(re, im)
        }))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateDoc {
    Density {
        layout: SystemLayout,
        entries: Vec<[f64; 2]>,
    },
    Pure {
        layout: SystemLayout,
        entries: Vec<[f64; 2]>,
    },
}

/// A state read from JSON, either mixed or pure.
#[derive(Clone, Debug)]
pub enum LoadedState {
    Density(DensityOperator),
    Pure(PureState),
}

impl LoadedState {
    pub fn density(&self) -> DensityOperator {
        match self {
            LoadedState::Density(d) => d.clone(),
            LoadedState::Pure(p) => p.density(),
        }
    }

    pub fn layout(&self) -> &SystemLayout {
        match self {
            LoadedState::Density(d) => d.layout(),
            LoadedState::Pure(p) => p.layout(),
        }
    }
}

pub fn density_to_doc(rho: &DensityOperator) -> StateDoc {
    StateDoc::Density {
        layout: rho.layout().clone(),
        entries: MatrixDoc::from_matrix(rho.matrix()).entries,
    }
}

pub fn pure_to_doc(psi: &PureState) -> StateDoc {
    StateDoc::Pure {
        layout: psi.layout().clone(),
        entries: psi.vector().iter().map(|z| [z.re, z.im]).collect(),
    }
}

pub fn density_to_json(rho: &DensityOperator) -> String {
    serde_json::to_string(&density_to_doc(rho)).expect("state serializes")
}

pub fn pure_to_json(psi: &PureState) -> String {
    serde_json::to_string(&pure_to_doc(psi)).expect("state serializes")
}

/// Parses and validates a state; validation errors name the invariant.
pub fn state_from_json(text: &str) -> Result<LoadedState> {
    let doc: StateDoc = serde_json::from_str(text)?;
    state_from_doc(doc)
}

pub fn state_from_doc(doc: StateDoc) -> Result<LoadedState> {
    match doc {
        StateDoc::Density { layout, entries } => {
            let d = layout.total_dim();
            let m = MatrixDoc {
                rows: d,
                cols: d,
                entries,
            }
            .to_matrix()?;
            Ok(LoadedState::Density(DensityOperator::new(layout, m)?))
        }
        StateDoc::Pure { layout, entries } => {
            let d = layout.total_dim();
            if entries.len() != d {
                return Err(Error::Parse(format!(
                    "{} amplitudes for dimension {d}",
                    entries.len()
                )));
            }
            let v = CVec::from_iterator(d, entries.iter().map(|&[re, im]| c(re, im)));
            Ok(LoadedState::Pure(PureState::new(layout, v)?))
        }
    }
}

pub fn density_from_json(text: &str) -> Result<DensityOperator> {
    match state_from_json(text)? {
        LoadedState::Density(d) => Ok(d),
        LoadedState::Pure(p) => Ok(p.density()),
    }
}

pub fn pure_from_json(text: &str) -> Result<PureState> {
    match state_from_json(text)? {
        LoadedState::Pure(p) => Ok(p),
        LoadedState::Density(_) => Err(Error::Parse("expected a pure state".into())),
    }
}
