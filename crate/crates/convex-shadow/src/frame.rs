//! Orthonormal frames: paired bases for a subspace V and its orthogonal
//! complement, with the coordinate split and assemble maps between ambient
//! space and (V, V-perp) coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Residuals smaller than this fraction of the input norm count as rank
/// deficiency.
const RANK_TOL: f64 = 1e-10;
/// Entrywise orthonormality tolerance for externally supplied bases.
const FRAME_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct OrthoFrame {
    dim: usize,
    v: DMatrix<f64>,
    w: DMatrix<f64>,
}

impl OrthoFrame {
    /// Orthonormalizes `vectors` into a basis of V (modified Gram-Schmidt with
    /// one reorthogonalization pass), then completes the complement from the
    /// standard basis: at each step the standard vector with the largest
    /// residual against everything chosen so far is taken, ties broken by the
    /// lower index. The construction is deterministic, so identical inputs
    /// give bit-identical frames.
    pub fn from_spanning(dim: usize, vectors: &[DVector<f64>]) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidFrame("ambient dimension must be positive".into()));
        }
        if vectors.is_empty() {
            return Err(Error::InvalidFrame("need at least one spanning vector".into()));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "spanning vector {i} has length {}, expected {dim}",
                    v.len()
                )));
            }
        }
        let mut cols: Vec<DVector<f64>> = Vec::with_capacity(dim);
        for (i, v) in vectors.iter().enumerate() {
            let c = orthonormal_residual(&cols, v).ok_or_else(|| {
                Error::RankDeficient(format!("spanning vector {i} is dependent on the others"))
            })?;
            cols.push(c);
        }
        let m = cols.len();
        let v_cols = cols.clone();
        let mut all = cols;
        let mut w_cols: Vec<DVector<f64>> = Vec::with_capacity(dim - m);
        while all.len() < dim {
            let mut best: Option<(f64, DVector<f64>)> = None;
            for i in 0..dim {
                let mut e = DVector::zeros(dim);
                e[i] = 1.0;
                if let Some((norm, unit)) = residual_with_norm(&all, &e) {
                    // strict comparison keeps the lowest index on ties
                    if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
                        best = Some((norm, unit));
                    }
                }
            }
            // the standard basis always spans, so a residual survives here
            let (_, unit) = best.ok_or_else(|| {
                Error::RankDeficient("complement construction exhausted the standard basis".into())
            })?;
            all.push(unit.clone());
            w_cols.push(unit);
        }
        Ok(OrthoFrame {
            dim,
            v: matrix_from_cols(dim, &v_cols),
            w: matrix_from_cols(dim, &w_cols),
        })
    }

    /// Frame whose subspace V is the intersection of the kernels of the
    /// normals; built by orthonormalizing the normals into V-perp and
    /// swapping the roles.
    pub fn from_normals(dim: usize, normals: &[DVector<f64>]) -> Result<Self> {
        let flipped = Self::from_spanning(dim, normals)?;
        if flipped.subspace_dim() == dim {
            return Err(Error::InvalidFrame(
                "normals span the whole space, leaving a zero subspace".into(),
            ));
        }
        Ok(OrthoFrame {
            dim,
            v: flipped.w,
            w: flipped.v,
        })
    }

    /// Accepts pre-built bases, checking every frame invariant entrywise.
    pub fn from_orthonormal(v: DMatrix<f64>, w: DMatrix<f64>) -> Result<Self> {
        let dim = v.nrows();
        if w.nrows() != dim {
            return Err(Error::DimensionMismatch(
                "basis blocks have different ambient dimensions".into(),
            ));
        }
        if v.ncols() == 0 {
            return Err(Error::InvalidFrame("subspace basis must be nonempty".into()));
        }
        if v.ncols() + w.ncols() != dim {
            return Err(Error::InvalidFrame(format!(
                "basis sizes {} + {} do not fill dimension {dim}",
                v.ncols(),
                w.ncols()
            )));
        }
        let check = |m: &DMatrix<f64>, id: &str| -> Result<()> {
            let gram = m.transpose() * m;
            let eye = DMatrix::identity(m.ncols(), m.ncols());
            if (gram - eye).amax() > FRAME_TOL {
                return Err(Error::InvalidFrame(format!("{id} basis is not orthonormal")));
            }
            Ok(())
        };
        check(&v, "subspace")?;
        if w.ncols() > 0 {
            check(&w, "complement")?;
            if (v.transpose() * &w).amax() > FRAME_TOL {
                return Err(Error::InvalidFrame(
                    "subspace and complement bases are not orthogonal".into(),
                ));
            }
        }
        Ok(OrthoFrame { dim, v, w })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn subspace_dim(&self) -> usize {
        self.v.ncols()
    }

    pub fn fiber_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn v_basis(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn vperp_basis(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Coordinates of x: (V-part, V-perp-part).
    pub fn split(&self, x: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (self.v.transpose() * x, self.w.transpose() * x)
    }

    /// Inverse of split: V y + W w.
    pub fn assemble(&self, y: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        &self.v * y + &self.w * w
    }

    /// Embeds subspace coordinates into ambient space.
    pub fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.v * y
    }

    /// The m x n matrix P with P x = split(x).0. For orthonormal columns this
    /// is just the transposed subspace basis.
    pub fn projector(&self) -> DMatrix<f64> {
        self.v.transpose()
    }
}

fn matrix_from_cols(dim: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(dim, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Residual of x against an orthonormal set, with a second pass to recover
/// the orthogonality a single pass loses near rank deficiency. Returns the
/// normalized residual, or None when the residual is below RANK_TOL of the
/// input norm.
fn orthonormal_residual(cols: &[DVector<f64>], x: &DVector<f64>) -> Option<DVector<f64>> {
    residual_with_norm(cols, x).map(|(_, unit)| unit)
}

fn residual_with_norm(cols: &[DVector<f64>], x: &DVector<f64>) -> Option<(f64, DVector<f64>)> {
    let norm0 = x.norm();
    if norm0 == 0.0 {
        return None;
    }
    let mut r = x.clone();
    for _ in 0..2 {
        for c in cols {
            let proj = c.dot(&r);
            r -= c * proj;
        }
    }
    let n = r.norm();
    if n < RANK_TOL * norm0 {
        None
    } else {
        Some((n, r / n))
    }
}
