//! Convex bodies represented by their Minkowski gauge.
//!
//! A body here is a compact convex set with 0 in its interior, encoded by its
//! gauge mu(x) = inf { t > 0 : x in t * body }. Every variant keeps mu
//! continuously differentiable away from the origin, so boundary normals are
//! well defined everywhere on the boundary.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum ConvexBody {
    /// Unit ball of the p-norm. Smoothness requires p > 1; p is capped at 64
    /// because beyond that the ball is numerically indistinguishable from the
    /// max-norm cube, whose boundary is not differentiable.
    PNormBall { p: f64, dim: usize },
    /// { x : x' Q x <= 1 } for symmetric positive definite Q. The inverse is
    /// kept for support-function evaluation.
    Ellipsoid {
        q: DMatrix<f64>,
        q_inv: DMatrix<f64>,
    },
    /// M * inner for an invertible square M.
    LinearImage {
        m: DMatrix<f64>,
        m_inv: DMatrix<f64>,
        inner: Box<ConvexBody>,
    },
    /// inner translated by -c, so the gauge is taken about a new origin.
    /// Requires c strictly interior to inner; c_gauge caches mu_inner(c).
    Recentered {
        c: DVector<f64>,
        c_gauge: f64,
        inner: Box<ConvexBody>,
    },
}

impl ConvexBody {
    pub fn pnorm_ball(p: f64, dim: usize) -> Result<Self> {
        if !p.is_finite() || p <= 1.0 || p > 64.0 {
            return Err(Error::InvalidBody(format!(
                "p-norm exponent must lie in (1, 64], got {p}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidBody("dimension must be positive".into()));
        }
        Ok(ConvexBody::PNormBall { p, dim })
    }

    pub fn ellipsoid(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() || q.nrows() == 0 {
            return Err(Error::InvalidBody(
                "ellipsoid matrix must be square and nonempty".into(),
            ));
        }
        let scale = q.amax();
        for i in 0..q.nrows() {
            for j in 0..i {
                if (q[(i, j)] - q[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidBody(format!(
                        "ellipsoid matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let chol = Cholesky::new(q.clone())
            .ok_or_else(|| Error::InvalidBody("ellipsoid matrix is not positive definite".into()))?;
        let q_inv = chol.inverse();
        Ok(ConvexBody::Ellipsoid { q, q_inv })
    }

    pub fn linear_image(m: DMatrix<f64>, inner: ConvexBody) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidBody("image matrix must be square".into()));
        }
        if m.nrows() != inner.dim() {
            return Err(Error::DimensionMismatch(format!(
                "image matrix is {}x{} but the inner body has dimension {}",
                m.nrows(),
                m.ncols(),
                inner.dim()
            )));
        }
        let m_inv = m
            .clone()
            .try_inverse()
            .filter(|inv| inv.iter().all(|v| v.is_finite()))
            .ok_or_else(|| Error::InvalidBody("image matrix is not invertible".into()))?;
        Ok(ConvexBody::LinearImage {
            m,
            m_inv,
            inner: Box::new(inner),
        })
    }

    pub fn recentered(c: DVector<f64>, inner: ConvexBody) -> Result<Self> {
        if c.len() != inner.dim() {
            return Err(Error::DimensionMismatch(format!(
                "center has length {} but the inner body has dimension {}",
                c.len(),
                inner.dim()
            )));
        }
        let c_gauge = inner.gauge(&c);
        if c_gauge >= 1.0 || c_gauge.is_nan() {
            return Err(Error::InvalidBody(format!(
                "center must be strictly interior to the inner body, gauge is {c_gauge}"
            )));
        }
        Ok(ConvexBody::Recentered {
            c,
            c_gauge,
            inner: Box::new(inner),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::PNormBall { dim, .. } => *dim,
            ConvexBody::Ellipsoid { q, .. } => q.nrows(),
            ConvexBody::LinearImage { m, .. } => m.nrows(),
            ConvexBody::Recentered { c, .. } => c.len(),
        }
    }

    /// Relative resolution of gauge evaluations: closed forms resolve to a
    /// few ulps, bisection-backed gauges only to the bisection tolerance.
    /// Minimizers use this to tell real descent from evaluation noise.
    pub(crate) fn gauge_resolution(&self) -> f64 {
        match self {
            ConvexBody::PNormBall { .. } | ConvexBody::Ellipsoid { .. } => 4.0 * f64::EPSILON,
            ConvexBody::LinearImage { inner, .. } => inner.gauge_resolution(),
            ConvexBody::Recentered { inner, .. } => 4e-12_f64.max(inner.gauge_resolution()),
        }
    }

    /// Minkowski gauge mu(x): zero exactly at the origin, positive elsewhere,
    /// positively homogeneous and subadditive.
    pub fn gauge(&self, x: &DVector<f64>) -> f64 {
        match self {
            ConvexBody::PNormBall { p, .. } => pnorm(x, *p),
            ConvexBody::Ellipsoid { q, .. } => x.dot(&(q * x)).max(0.0).sqrt(),
            ConvexBody::LinearImage { m_inv, inner, .. } => inner.gauge(&(m_inv * x)),
            ConvexBody::Recentered { c, c_gauge, inner } => {
                recentered_gauge(c, *c_gauge, inner, x)
            }
        }
    }

    /// Gradient of the gauge, defined for x != 0. Degree-0 homogeneous, and
    /// <grad mu(x) | x> = mu(x) by Euler's identity.
    pub fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.iter().all(|v| *v == 0.0) {
            return Err(Error::OriginGradient);
        }
        Ok(match self {
            ConvexBody::PNormBall { p, .. } => {
                let mu = pnorm(x, *p);
                // sign(xi) * (|xi|/mu)^(p-1) keeps the base in [0,1], which is
                // stable near the axes for every p in (1, 64].
                DVector::from_iterator(
                    x.len(),
                    x.iter()
                        .map(|xi| xi.signum() * (xi.abs() / mu).powf(*p - 1.0)),
                )
            }
            ConvexBody::Ellipsoid { q, .. } => {
                let qx = q * x;
                let mu = x.dot(&qx).max(0.0).sqrt();
                qx / mu
            }
            ConvexBody::LinearImage { m_inv, inner, .. } => {
                m_inv.transpose() * inner.gradient(&(m_inv * x))?
            }
            ConvexBody::Recentered { c, inner, .. } => {
                // Implicit differentiation of mu_inner(c + x/t) = 1 at t = mu(x):
                // grad t = t * g / <g|x> with g the inner gradient at the
                // rescaled point. The denominator equals t * (1 - <g|c>) and
                // <g|c> <= mu_inner(c) < 1, so it stays away from zero.
                let t = self.gauge(x);
                let z = c + x / t;
                let g = inner.gradient(&z)?;
                let denom = g.dot(x);
                g * (t / denom)
            }
        })
    }

    /// Support function h(u) = sup { <x|u> : gauge(x) <= 1 }, extended
    /// positively homogeneously to arbitrary u (h(0) = 0).
    pub fn support(&self, u: &DVector<f64>) -> f64 {
        match self {
            // dual exponent: 1/p + 1/q = 1
            ConvexBody::PNormBall { p, .. } => pnorm(u, *p / (*p - 1.0)),
            ConvexBody::Ellipsoid { q_inv, .. } => u.dot(&(q_inv * u)).max(0.0).sqrt(),
            ConvexBody::LinearImage { m, inner, .. } => inner.support(&(m.transpose() * u)),
            ConvexBody::Recentered { c, inner, .. } => inner.support(u) - c.dot(u),
        }
    }

    /// Scales `direction` onto the boundary: the result has gauge 1.
    pub fn boundary_point(&self, direction: &DVector<f64>) -> Result<DVector<f64>> {
        let mu = self.gauge(direction);
        if mu == 0.0 {
            return Err(Error::InvalidArgument(
                "boundary point needs a nonzero direction".into(),
            ));
        }
        Ok(direction / mu)
    }
}

/// p-norm with max-scaling so that the powers never overflow.
pub(crate) fn pnorm(x: &DVector<f64>, p: f64) -> f64 {
    let scale = x.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for xi in x.iter() {
        sum += (xi.abs() / scale).powf(p);
    }
    scale * sum.powf(1.0 / p)
}

/// Gauge of inner - c by bisection on t over the membership predicate
/// mu_inner(c + x/t) <= 1. The predicate is monotone in t because the body
/// contains 0, so bisection is sound even though t -> mu_inner(c + x/t) is
/// not monotone in general.
fn recentered_gauge(c: &DVector<f64>, c_gauge: f64, inner: &ConvexBody, x: &DVector<f64>) -> f64 {
    let inner_gauge_x = inner.gauge(x);
    if inner_gauge_x == 0.0 {
        return 0.0;
    }
    let member = |t: f64| inner.gauge(&(c + x / t)) <= 1.0;
    // Subadditivity gives mu(x) <= mu_inner(x) / (1 - mu_inner(c)); pad for
    // rounding so the upper end of the bracket is always a member.
    let mut hi = inner_gauge_x / (1.0 - c_gauge);
    for _ in 0..64 {
        if member(hi) {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = hi;
    while member(lo) {
        lo *= 0.5;
        if lo < 1e-300 {
            return 0.0;
        }
    }
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if member(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
