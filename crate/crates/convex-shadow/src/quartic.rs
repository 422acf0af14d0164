//! Closed-form shadow of the unit 4-norm ball of R^3 on the plane
//! x + y + z = 0. In section coordinates (u, v) on the plane and w along its
//! normal, the fiber-stationarity condition reduces to the depressed cubic
//!
//!   X^3 + 3(u^2 + v^2) X + (sqrt2 / 2) v (v^2 - 3u^2) = 0,
//!
//! whose discriminant is nonpositive everywhere, so the unique real root w*
//! comes straight from Cardano's formula. This path shares no code with the
//! Newton engine in `shadow` and serves as its independent cross-check.

use nalgebra::{DMatrix, DVector};

use crate::body::pnorm;
use crate::error::{Error, Result};
use crate::frame::OrthoFrame;
use crate::shadow::BoundaryPolyline;

/// Section basis columns: in-plane u, in-plane v, plane normal w.
pub fn uvw_basis() -> DMatrix<f64> {
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    DMatrix::from_columns(&[
        DVector::from_vec(vec![0.0, 1.0 / s2, -1.0 / s2]),
        DVector::from_vec(vec![(2.0f64 / 3.0).sqrt(), -1.0 / s6, -1.0 / s6]),
        DVector::from_vec(vec![1.0 / s3, 1.0 / s3, 1.0 / s3]),
    ])
}

/// The plane as an OrthoFrame: V spanned by the (u, v) columns, V-perp by the
/// normal column.
pub fn section_frame() -> OrthoFrame {
    let b = uvw_basis();
    let v = DMatrix::from_columns(&[b.column(0).into_owned(), b.column(1).into_owned()]);
    let w = DMatrix::from_columns(&[b.column(2).into_owned()]);
    OrthoFrame::from_orthonormal(v, w).expect("hard-coded basis is orthonormal")
}

#[derive(Debug, Clone)]
pub struct CubicSolution {
    pub u: f64,
    pub v: f64,
    /// Linear coefficient 3(u^2 + v^2).
    pub p_coef: f64,
    /// Constant coefficient (sqrt2 / 2) v (v^2 - 3u^2).
    pub q_coef: f64,
    /// -(108 (u^2+v^2)^3 + (27/2) v^2 (v^2-3u^2)^2), nonpositive everywhere.
    pub discriminant: f64,
    /// Cardano radicand (1/8) v^2 (v^2-3u^2)^2 + (u^2+v^2)^3, nonnegative.
    pub delta: f64,
    /// The unique real root.
    pub w_star: f64,
}

/// Solves the depressed cubic for its unique real root. The cube roots are
/// f64::cbrt, which is the real sign-preserving cube root; a principal
/// (complex) root here would silently wreck the formula.
pub fn cubic_solve(u: f64, v: f64) -> CubicSolution {
    let r2 = u * u + v * v;
    let shape = v * (v * v - 3.0 * u * u);
    let p_coef = 3.0 * r2;
    let q_coef = std::f64::consts::FRAC_1_SQRT_2 * shape;
    let delta = 0.125 * shape * shape + r2 * r2 * r2;
    let discriminant = -(108.0 * r2 * r2 * r2 + 13.5 * shape * shape);
    let sqrt_delta = delta.sqrt();
    let half_q = 0.5 * q_coef;
    let w_star = (-half_q - sqrt_delta).cbrt() + (-half_q + sqrt_delta).cbrt();
    CubicSolution {
        u,
        v,
        p_coef,
        q_coef,
        discriminant,
        delta,
        w_star,
    }
}

/// Gauge of the 4-norm ball at the point with section coordinates (u, v, w).
pub fn eta_uvw(u: f64, v: f64, w: f64) -> f64 {
    let a = (2.0f64 / 3.0).sqrt();
    let s2 = 2f64.sqrt();
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    let px = a * v + w / s3;
    let py = u / s2 - v / s6 + w / s3;
    let pz = -u / s2 - v / s6 + w / s3;
    pnorm(&DVector::from_vec(vec![px, py, pz]), 4.0)
}

/// Whether (u, v) lies in the shadow, by the closed-form path: the gauge at
/// the Cardano minimizer must be at most 1 (inclusive, tolerance 1e-9).
pub fn shadow_membership(u: f64, v: f64) -> bool {
    let w = cubic_solve(u, v).w_star;
    eta_uvw(u, v, w) <= 1.0 + 1e-9
}

/// Closed-form boundary trace. The cubic data is jointly degree-1
/// homogeneous in (u, v, w), so the boundary radius along a unit direction is
/// simply the reciprocal gauge at that direction's Cardano minimizer.
pub fn boundary_trace(n_samples: usize) -> Result<BoundaryPolyline> {
    if n_samples < 8 {
        return Err(Error::InvalidArgument(format!(
            "n_samples must be at least 8, got {n_samples}"
        )));
    }
    let mut points = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let theta = 2.0 * std::f64::consts::PI * (k as f64) / (n_samples as f64);
        let (cu, sv) = (theta.cos(), theta.sin());
        let w = cubic_solve(cu, sv).w_star;
        let r = 1.0 / eta_uvw(cu, sv, w);
        points.push([r * cu, r * sv]);
    }
    Ok(BoundaryPolyline {
        points,
        closed: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn basis_is_orthonormal_and_oriented() {
        let b = uvw_basis();
        let gram = b.transpose() * &b;
        assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-15);
        // third column is the unit (1,1,1) direction, so the plane is w = 0
        let n = dvector![1.0, 1.0, 1.0].normalize();
        assert!((b.column(2).into_owned() - n).norm() < 1e-15);
    }

    #[test]
    fn coordinates_of_ones_vector() {
        let b = uvw_basis();
        let coords = b.transpose() * dvector![1.0, 1.0, 1.0];
        assert!(coords[0].abs() < 1e-15);
        assert!(coords[1].abs() < 1e-15);
        assert!((coords[2] - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn cubic_solution_known_points() {
        // v = 0 kills the constant term: root 0, discriminant -108 at (1,0)
        let s = cubic_solve(1.0, 0.0);
        assert_eq!(s.q_coef, 0.0);
        assert_eq!(s.w_star, 0.0);
        assert!((s.discriminant + 108.0).abs() < 1e-12);

        let s = cubic_solve(0.0, 0.0);
        assert_eq!(s.w_star, 0.0);

        // pinned after root-bracketing bisection agreed with the closed form;
        // the exact value is 2^(-1/6) - 2^(1/6)
        let s = cubic_solve(0.0, 1.0);
        assert!((s.delta - 1.125).abs() < 1e-15);
        assert!(
            (s.w_star - (-0.231_563_330_169_033_7)).abs() < 1e-15,
            "got {}",
            s.w_star
        );
    }

    #[test]
    fn cubic_residual_and_discriminant_sign_on_grid() {
        for i in 0..=100 {
            for j in 0..=100 {
                let u = -2.0 + 4.0 * (i as f64) / 100.0;
                let v = -2.0 + 4.0 * (j as f64) / 100.0;
                let s = cubic_solve(u, v);
                let res = s.w_star.powi(3) + s.p_coef * s.w_star + s.q_coef;
                assert!(
                    res.abs() <= 1e-10 * (1.0 + s.q_coef.abs()),
                    "residual {res} at ({u},{v})"
                );
                assert!(s.discriminant <= 1e-12, "discriminant {} at ({u},{v})", s.discriminant);
                assert!(s.delta >= 0.0);
                // the discriminant is -108 times the Cardano radicand
                assert!((s.discriminant + 108.0 * s.delta).abs() <= 1e-12 * (1.0 + s.delta.abs() * 108.0));
            }
        }
    }

    #[test]
    fn membership_brackets_the_u_axis_radius() {
        let r = 2f64.powf(0.25);
        assert!(shadow_membership(0.0, 0.0));
        assert!(shadow_membership(r - 1e-3, 0.0));
        assert!(!shadow_membership(r + 1e-3, 0.0));
    }

    #[test]
    fn trace_points_match_pinned_radii() {
        let poly = boundary_trace(8).unwrap();
        assert_eq!(poly.points.len(), 8);
        assert!((poly.points[0][0] - 2f64.powf(0.25)).abs() < 1e-15);
        assert!(poly.points[0][1].abs() < 1e-300);
        // theta = pi/2 sample: pinned v-axis radius 1/eta(0,1,w*(0,1))
        assert!((poly.points[2][1] - 1.265_513_615_653_884_8).abs() < 1e-13,
            "got {}", poly.points[2][1]);

        assert!(boundary_trace(7).is_err());
    }

    #[test]
    fn eta_uvw_agrees_with_ambient_gauge() {
        let b = uvw_basis();
        let body = crate::body::ConvexBody::pnorm_ball(4.0, 3).unwrap();
        for (u, v, w) in [(0.3, -0.7, 0.2), (1.5, 0.1, -0.4), (0.0, 0.0, 1.7)] {
            let point = &b * dvector![u, v, w];
            let direct = body.gauge(&point);
            let here = eta_uvw(u, v, w);
            assert!((direct - here).abs() < 1e-14 * (1.0 + direct));
        }
    }
}
