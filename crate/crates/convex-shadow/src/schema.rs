//! Serde schemas for problem definitions: the JSON config consumed by the
//! CLI, with builders that validate into library types.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::frame::OrthoFrame;
use crate::shadow::SolverOptions;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    PnormBall {
        p: f64,
        dim: usize,
    },
    Ellipsoid {
        #[serde(rename = "Q")]
        q: Vec<Vec<f64>>,
    },
    LinearImage {
        #[serde(rename = "M")]
        m: Vec<Vec<f64>>,
        inner: Box<BodySpec>,
    },
    Recentered {
        c: Vec<f64>,
        inner: Box<BodySpec>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SubspaceSpec {
    Span { vectors: Vec<Vec<f64>> },
    Normal { normals: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub tol_grad: Option<f64>,
    pub tol_member: Option<f64>,
    pub fd_step: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub format: OutputFormat,
    pub path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub body: BodySpec,
    #[serde(default)]
    pub subspace: Option<SubspaceSpec>,
    #[serde(default)]
    pub tolerances: Option<Tolerances>,
    #[serde(default)]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub n_samples: Option<usize>,
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::InvalidArgument(format!("{what} has no rows")));
    }
    let ncols = rows[0].len();
    if ncols == 0 {
        return Err(Error::InvalidArgument(format!("{what} has empty rows")));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != ncols {
            return Err(Error::InvalidArgument(format!(
                "{what} row {i} has length {}, expected {ncols}",
                r.len()
            )));
        }
    }
    Ok(DMatrix::from_row_iterator(
        rows.len(),
        ncols,
        rows.iter().flatten().copied(),
    ))
}

impl BodySpec {
    pub fn build(&self) -> Result<ConvexBody> {
        match self {
            BodySpec::PnormBall { p, dim } => ConvexBody::pnorm_ball(*p, *dim),
            BodySpec::Ellipsoid { q } => {
                ConvexBody::ellipsoid(matrix_from_rows(q, "ellipsoid matrix")?)
            }
            BodySpec::LinearImage { m, inner } => {
                ConvexBody::linear_image(matrix_from_rows(m, "image matrix")?, inner.build()?)
            }
            BodySpec::Recentered { c, inner } => {
                ConvexBody::recentered(DVector::from_vec(c.clone()), inner.build()?)
            }
        }
    }
}

impl SubspaceSpec {
    pub fn build(&self, dim: usize) -> Result<OrthoFrame> {
        let to_vectors = |rows: &[Vec<f64>]| -> Result<Vec<DVector<f64>>> {
            Ok(rows
                .iter()
                .map(|r| DVector::from_vec(r.clone()))
                .collect())
        };
        match self {
            SubspaceSpec::Span { vectors } => {
                OrthoFrame::from_spanning(dim, &to_vectors(vectors)?)
            }
            SubspaceSpec::Normal { normals } => {
                OrthoFrame::from_normals(dim, &to_vectors(normals)?)
            }
        }
    }
}

impl Tolerances {
    /// Applies the overrides on top of `base`, rejecting nonpositive values.
    pub fn apply(&self, base: &SolverOptions) -> Result<SolverOptions> {
        let mut opts = base.clone();
        if let Some(t) = self.tol_grad {
            if t <= 0.0 || t.is_nan() {
                return Err(Error::InvalidArgument("tol_grad must be positive".into()));
            }
            opts.tol_grad = t;
        }
        if let Some(t) = self.tol_member {
            if t <= 0.0 || t.is_nan() {
                return Err(Error::InvalidArgument("tol_member must be positive".into()));
            }
            opts.tol_member = t;
        }
        if let Some(t) = self.fd_step {
            if t <= 0.0 || t.is_nan() {
                return Err(Error::InvalidArgument("fd_step must be positive".into()));
            }
        }
        Ok(opts)
    }
}

impl ProblemConfig {
    /// Builds the body, and the frame when a subspace is configured,
    /// validating dimension consistency.
    pub fn build_body(&self) -> Result<ConvexBody> {
        self.body.build()
    }

    pub fn build_frame(&self, body: &ConvexBody) -> Result<OrthoFrame> {
        let spec = self.subspace.as_ref().ok_or_else(|| {
            Error::InvalidArgument("config has no subspace, but the command needs one".into())
        })?;
        spec.build(body.dim())
    }
}
