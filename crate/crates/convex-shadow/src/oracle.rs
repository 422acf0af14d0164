//! Independent validation oracles: brute-force scans and closed forms that
//! share no code path with the Newton engine in `shadow`. Tests and the
//! `verify` command use these as ground truth; the only functions here that
//! touch `shadow` are the explicit cross-checks that compare both sides.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::frame::OrthoFrame;
use crate::quartic;
use crate::shadow::{shadow_gauge, BoundaryPolyline, SolverOptions};

/// Sphere-direction sampling seed for m >= 3 support checks; fixed so the
/// oracle is a deterministic function of its arguments.
const DIRECTION_SEED: u64 = 1729;

#[derive(Debug, Clone)]
pub struct OracleReport {
    pub name: String,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub n_samples: usize,
    pub passed: bool,
    pub worst_case_input: Vec<f64>,
}

impl OracleReport {
    fn new(name: &str) -> Self {
        OracleReport {
            name: name.into(),
            max_abs_err: 0.0,
            max_rel_err: 0.0,
            n_samples: 0,
            passed: true,
            worst_case_input: Vec::new(),
        }
    }

    fn record(&mut self, abs_err: f64, rel_err: f64, input: &[f64]) {
        self.n_samples += 1;
        if abs_err > self.max_abs_err {
            self.max_abs_err = abs_err;
            self.worst_case_input = input.to_vec();
        }
        self.max_rel_err = self.max_rel_err.max(rel_err);
    }
}

/// Membership test built only on support functions: y is accepted iff no
/// sampled direction separates it from the shadow, using the identity that
/// the shadow's support in a direction u of V equals the body's support at
/// the lifted u. One-sided: it can only over-approximate membership, so
/// callers test with margin points.
pub fn support_membership(
    body: &ConvexBody,
    frame: &OrthoFrame,
    y: &DVector<f64>,
    n_dirs: usize,
) -> Result<bool> {
    if n_dirs < 16 {
        return Err(Error::InvalidArgument(format!(
            "need at least 16 directions, got {n_dirs}"
        )));
    }
    let m = frame.subspace_dim();
    if y.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "point has length {}, expected {m}",
            y.len()
        )));
    }
    let check = |u: DVector<f64>| y.dot(&u) <= body.support(&frame.lift(&u)) + 1e-9;
    match m {
        1 => {
            // the unit sphere of a line is two points
            for s in [1.0, -1.0] {
                if !check(DVector::from_vec(vec![s])) {
                    return Ok(false);
                }
            }
        }
        2 => {
            for j in 0..n_dirs {
                let phi = 2.0 * std::f64::consts::PI * (j as f64) / (n_dirs as f64);
                if !check(DVector::from_vec(vec![phi.cos(), phi.sin()])) {
                    return Ok(false);
                }
            }
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(DIRECTION_SEED);
            for _ in 0..n_dirs {
                if !check(sample_unit(&mut rng, m)) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Brute-force fiber minimum: exhaustive grid scan of the gauge over the
/// fiber, then golden-section refinement around the best cell. Ground truth
/// for the Newton engine on 1- and 2-dimensional fibers.
pub fn dense_fiber_scan(
    body: &ConvexBody,
    frame: &OrthoFrame,
    y: &DVector<f64>,
    half_width: f64,
    step: f64,
) -> Result<(DVector<f64>, f64)> {
    if half_width < 1.0 {
        return Err(Error::InvalidArgument("half_width must be at least 1".into()));
    }
    if !(step > 0.0 && step <= 1e-3) {
        return Err(Error::InvalidArgument(
            "step must be positive and at most 1e-3".into(),
        ));
    }
    let k = frame.fiber_dim();
    let eta = |w: &DVector<f64>| body.gauge(&frame.assemble(y, w));
    let n_cells = (2.0 * half_width / step).ceil() as usize;
    let grid = |i: usize| -half_width + (i as f64) * step;
    match k {
        0 => {
            // nothing to scan over
            let w = DVector::zeros(0);
            let t = eta(&w);
            Ok((w, t))
        }
        1 => {
            let f = |x: f64| eta(&DVector::from_vec(vec![x]));
            let mut best_i = 0;
            let mut best = f64::INFINITY;
            for i in 0..=n_cells {
                let t = f(grid(i).min(half_width));
                if t < best {
                    best = t;
                    best_i = i;
                }
            }
            let center = grid(best_i).min(half_width);
            let (x, t) = golden_section(&f, center - step, center + step, 1e-12);
            Ok((DVector::from_vec(vec![x]), t))
        }
        2 => {
            let f = |a: f64, b: f64| eta(&DVector::from_vec(vec![a, b]));
            let mut best = f64::INFINITY;
            let mut wa = 0.0;
            let mut wb = 0.0;
            for i in 0..=n_cells {
                let a = grid(i).min(half_width);
                for j in 0..=n_cells {
                    let b = grid(j).min(half_width);
                    let t = f(a, b);
                    if t < best {
                        best = t;
                        wa = a;
                        wb = b;
                    }
                }
            }
            // cyclic coordinate refinement; each line restriction of a convex
            // function is unimodal, so golden section applies per axis
            let mut t_best = best;
            for _ in 0..200 {
                let before = t_best;
                let (xa, ta) = golden_section(&|x: f64| f(x, wb), wa - step, wa + step, 1e-13);
                if ta < t_best {
                    t_best = ta;
                    wa = xa;
                }
                let (xb, tb) = golden_section(&|x: f64| f(wa, x), wb - step, wb + step, 1e-13);
                if tb < t_best {
                    t_best = tb;
                    wb = xb;
                }
                if before - t_best < 1e-15 * (1.0 + t_best) {
                    break;
                }
            }
            Ok((DVector::from_vec(vec![wa, wb]), t_best))
        }
        _ => Err(Error::Unsupported(
            "dense scan handles fiber dimensions 1 and 2; use the support oracle instead".into(),
        )),
    }
}

/// Closed-form shadow of an ellipsoid: in frame coordinates the projected
/// body is { y : y' S y <= 1 } with S the Schur complement of the fiber
/// block. Exact up to the linear solve, independent of any minimization.
pub fn ellipsoid_shadow_matrix(q: &DMatrix<f64>, frame: &OrthoFrame) -> Result<DMatrix<f64>> {
    if !q.is_square() || q.nrows() != frame.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but the frame has dimension {}",
            q.nrows(),
            q.ncols(),
            frame.dim()
        )));
    }
    let v = frame.v_basis();
    let w = frame.vperp_basis();
    let g_vv = v.transpose() * q * v;
    if frame.fiber_dim() == 0 {
        return Ok(g_vv);
    }
    let g_vw = v.transpose() * q * w;
    let g_ww = w.transpose() * q * w;
    let chol = Cholesky::new(g_ww).ok_or_else(|| {
        Error::InvalidBody("matrix restricted to the fiber is not positive definite".into())
    })?;
    let s = &g_vv - &g_vw * chol.solve(&g_vw.transpose());
    Ok((&s + s.transpose()) * 0.5)
}

/// Central-difference gauge gradient; default step 1e-6 * max(1, |x|).
pub fn fd_gradient(body: &ConvexBody, x: &DVector<f64>, step: Option<f64>) -> Result<DVector<f64>> {
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::OriginGradient);
    }
    let h = step.unwrap_or(1e-6 * x.norm().max(1.0));
    let mut g = DVector::zeros(x.len());
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (body.gauge(&xp) - body.gauge(&xm)) / (2.0 * h);
    }
    Ok(g)
}

/// Symmetric Hausdorff distance between two closed polylines: each vertex of
/// one is measured against the segments of the other, and the larger directed
/// maximum is returned.
pub fn polyline_hausdorff(a: &BoundaryPolyline, b: &BoundaryPolyline) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

fn directed_hausdorff(a: &BoundaryPolyline, b: &BoundaryPolyline) -> f64 {
    a.points
        .iter()
        .map(|p| distance_to_polyline(*p, b))
        .fold(0.0, f64::max)
}

fn distance_to_polyline(p: [f64; 2], poly: &BoundaryPolyline) -> f64 {
    let n = poly.points.len();
    let segments = if poly.closed { n } else { n - 1 };
    let mut best = f64::INFINITY;
    for i in 0..segments {
        let q0 = poly.points[i];
        let q1 = poly.points[(i + 1) % n];
        best = best.min(point_segment_distance(p, q0, q1));
    }
    best
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let denom = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if denom == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / denom).clamp(0.0, 1.0)
    };
    let dx = ap[0] - t * ab[0];
    let dy = ap[1] - t * ab[1];
    (dx * dx + dy * dy).sqrt()
}

/// Golden-section minimum of a unimodal function on [a, b], refined until the
/// bracket width drops below tol.
fn golden_section(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

fn sample_unit(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let norm = v.norm();
        if norm > 1e-6 {
            return v / norm;
        }
    }
}

/// Random nonzero point with norm roughly in [0.5, 2.5].
fn sample_point(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    let scale = 0.5 + 2.0 * rng.random::<f64>();
    sample_unit(rng, n) * scale
}

/// The full oracle suite for one configured problem. Pure closed-form and
/// brute-force checks come first; the cross-checks against the Newton engine
/// are named "-vs-newton".
pub fn run_verification(
    body: &ConvexBody,
    frame: &OrthoFrame,
    opts: &SolverOptions,
    fd_step: Option<f64>,
    seed: u64,
) -> Vec<OracleReport> {
    let n = body.dim();
    let mut reports = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // analytic gradient against central differences
    let mut rep = OracleReport::new("gradient-fd");
    for _ in 0..200 {
        let x = sample_point(&mut rng, n);
        let ga = body.gradient(&x).expect("x is nonzero");
        let gf = fd_gradient(body, &x, fd_step).expect("x is nonzero");
        let abs = (&ga - &gf).norm();
        let rel = abs / ga.norm();
        rep.record(abs, rel, x.as_slice());
    }
    rep.passed = rep.max_rel_err <= 1e-6;
    reports.push(rep);

    // Euler identity <grad mu | x> = mu
    let mut rep = OracleReport::new("euler-identity");
    for _ in 0..200 {
        let x = sample_point(&mut rng, n);
        let mu = body.gauge(&x);
        let g = body.gradient(&x).expect("x is nonzero");
        let abs = (g.dot(&x) - mu).abs();
        rep.record(abs, abs / mu, x.as_slice());
    }
    rep.passed = rep.max_rel_err <= 1e-9;
    reports.push(rep);

    // positive homogeneity, error normalized by 1 + t mu
    let mut rep = OracleReport::new("homogeneity");
    for _ in 0..200 {
        let x = sample_point(&mut rng, n);
        let t = 10.0 * rng.random::<f64>();
        let err = (body.gauge(&(&x * t)) - t * body.gauge(&x)).abs();
        let scaled = err / (1.0 + t * body.gauge(&x));
        rep.record(scaled, scaled, x.as_slice());
    }
    rep.passed = rep.max_abs_err <= 1e-10;
    reports.push(rep);

    // subadditivity violation
    let mut rep = OracleReport::new("subadditivity");
    for _ in 0..200 {
        let x1 = sample_point(&mut rng, n);
        let x2 = sample_point(&mut rng, n);
        let violation = (body.gauge(&(&x1 + &x2)) - body.gauge(&x1) - body.gauge(&x2)).max(0.0);
        let mut input = x1.as_slice().to_vec();
        input.extend_from_slice(x2.as_slice());
        rep.record(violation, violation, &input);
    }
    rep.passed = rep.max_abs_err <= 1e-10;
    reports.push(rep);

    // support-function separation around numerically traced boundary points
    let m = frame.subspace_dim();
    let mut rep = OracleReport::new("support-separation");
    for _ in 0..50 {
        let d = sample_unit(&mut rng, m);
        let Ok(g) = shadow_gauge(body, frame, &d, opts) else {
            rep.passed = false;
            rep.worst_case_input = d.as_slice().to_vec();
            break;
        };
        let boundary = &d / g;
        let inside = &boundary * (1.0 - 1e-6);
        // 4096 directions sample a circle down to ~1e-3 rad, but a sphere in
        // dimension 3 or more only to ~0.1 rad, so the outward margin that a
        // separating direction must certify grows with m
        let out_margin = if m <= 2 { 1e-3 } else { 5e-2 };
        let outside = &boundary * (1.0 + out_margin);
        let ok_in = support_membership(body, frame, &inside, 4096).expect("n_dirs is valid");
        let ok_out = !support_membership(body, frame, &outside, 4096).expect("n_dirs is valid");
        let misses = (!ok_in as u32 + !ok_out as u32) as f64;
        rep.record(misses, misses, boundary.as_slice());
    }
    rep.passed = rep.passed && rep.max_abs_err == 0.0;
    reports.push(rep);

    // brute-force fiber scan against the Newton engine
    let k = frame.fiber_dim();
    if k == 1 || k == 2 {
        let mut rep = OracleReport::new("fiber-scan-vs-newton");
        let samples = if k == 1 { 40 } else { 3 };
        // the minimizer's fiber coordinates are bounded by the body's extent
        // along the fiber axes
        let mut hw = 1.0f64;
        for j in 0..k {
            let col = frame.vperp_basis().column(j).into_owned();
            hw = hw.max(body.support(&col)).max(body.support(&(-col)));
        }
        let hw = hw * 1.05;
        for _ in 0..samples {
            // normalize so the fiber minimum is at most 1: the minimizer's
            // coordinates then fit the scan window, whose cost is fixed
            let raw = sample_point(&mut rng, m);
            let y = &raw / body.gauge(&frame.lift(&raw));
            let (_, t_scan) =
                dense_fiber_scan(body, frame, &y, hw, 1e-3).expect("scan arguments are valid");
            match shadow_gauge(body, frame, &y, opts) {
                Ok(t_newton) => {
                    let abs = (t_scan - t_newton).abs();
                    rep.record(abs, abs / t_scan.max(1e-300), y.as_slice());
                }
                Err(_) => {
                    rep.passed = false;
                    rep.worst_case_input = y.as_slice().to_vec();
                }
            }
        }
        rep.passed = rep.passed && rep.max_abs_err <= 1e-9;
        reports.push(rep);
    }

    // closed-form ellipsoid shadow against the Newton engine
    if let ConvexBody::Ellipsoid { q, .. } = body {
        let mut rep = OracleReport::new("ellipsoid-schur-vs-newton");
        let s = ellipsoid_shadow_matrix(q, frame).expect("dimensions match");
        for _ in 0..100 {
            let y = sample_point(&mut rng, m);
            let t_schur = y.dot(&(&s * &y)).max(0.0).sqrt();
            match shadow_gauge(body, frame, &y, opts) {
                Ok(t_newton) => {
                    let abs = (t_schur - t_newton).abs();
                    rep.record(abs, abs / t_schur.max(1e-300), y.as_slice());
                }
                Err(_) => {
                    rep.passed = false;
                    rep.worst_case_input = y.as_slice().to_vec();
                }
            }
        }
        rep.passed = rep.passed && rep.max_rel_err <= 1e-8;
        reports.push(rep);
    }

    // Cardano closed form against the Newton engine, when the problem is the
    // 4-norm ball over the plane x + y + z = 0
    if is_quartic_plane_problem(body, frame) {
        let mut rep = OracleReport::new("cardano-vs-newton");
        let basis = quartic::uvw_basis();
        for _ in 0..100 {
            let y = sample_point(&mut rng, 2);
            let p = frame.lift(&y);
            let coords = basis.transpose() * &p;
            let sol = quartic::cubic_solve(coords[0], coords[1]);
            let t_cardano = quartic::eta_uvw(coords[0], coords[1], sol.w_star);
            match shadow_gauge(body, frame, &y, opts) {
                Ok(t_newton) => {
                    let abs = (t_cardano - t_newton).abs();
                    rep.record(abs, abs / t_cardano.max(1e-300), y.as_slice());
                }
                Err(_) => {
                    rep.passed = false;
                    rep.worst_case_input = y.as_slice().to_vec();
                }
            }
        }
        rep.passed = rep.passed && rep.max_abs_err <= 1e-8;
        reports.push(rep);
    }

    reports
}

fn is_quartic_plane_problem(body: &ConvexBody, frame: &OrthoFrame) -> bool {
    let ConvexBody::PNormBall { p, dim } = body else {
        return false;
    };
    if *p != 4.0 || *dim != 3 || frame.fiber_dim() != 1 {
        return false;
    }
    let normal = frame.vperp_basis().column(0).into_owned();
    let ones = DVector::from_vec(vec![1.0, 1.0, 1.0]).normalize();
    normal.dot(&ones).abs() > 1.0 - 1e-9
}
