//! Anchors from matched detections and weighted multilateration.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scene::Point2D;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Anchor {
    pub p_s: Point2D,
    pub d_st: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalizationEstimate {
    pub position: Point2D,
    /// Final weighted squared residual, m^2.
    pub residual: f64,
    pub anchors_used: usize,
    pub converged: bool,
}

/// Point at distance `d_rs` from the radar along angle `phi`.
pub fn reflection_point(radar: Point2D, d_rs: f64, phi: f64) -> Point2D {
    Point2D::new(radar.x + d_rs * phi.cos(), radar.y + d_rs * phi.sin())
}

/// w_i = u_i / sum(u).
pub fn compute_weights(eigvals: &[f64]) -> Result<Vec<f64>> {
    if let Some(&bad) = eigvals.iter().find(|&&u| !(u > 0.0) || !u.is_finite()) {
        return Err(Error::NonPositiveEigenvalue(bad));
    }
    let total: f64 = eigvals.iter().sum();
    Ok(eigvals.iter().map(|u| u / total).collect())
}

pub const COLLINEAR_TOL: f64 = 0.01;
const MAX_ITER: usize = 100;
const STEP_TOL: f64 = 1e-6;

/// Largest distance from the principal axis of the anchor cloud.
fn max_line_deviation(pts: &[Point2D]) -> f64 {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.y).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in pts {
        let (dx, dy) = (p.x - cx, p.y - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (ux, uy) = (theta.cos(), theta.sin());
    pts.iter()
        .map(|p| ((p.x - cx) * uy - (p.y - cy) * ux).abs())
        .fold(0.0, f64::max)
}

fn cost(anchors: &[Anchor], x: Point2D) -> f64 {
    anchors
        .iter()
        .map(|a| {
            let r = x.dist(a.p_s) - a.d_st;
            a.weight * r * r
        })
        .sum()
}

/// Closed-form start: range equations differenced against their weighted mean,
/// which removes the |x|^2 term and leaves a 2x2 linear system.
fn linear_init(anchors: &[Anchor]) -> Option<Point2D> {
    let wsum: f64 = anchors.iter().map(|a| a.weight).sum();
    let q = |a: &Anchor| a.p_s.dot(a.p_s) - a.d_st * a.d_st;
    let mx = anchors.iter().map(|a| a.weight * a.p_s.x).sum::<f64>() / wsum;
    let my = anchors.iter().map(|a| a.weight * a.p_s.y).sum::<f64>() / wsum;
    let mq = anchors.iter().map(|a| a.weight * q(a)).sum::<f64>() / wsum;
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for a in anchors {
        // 2 (p - mean p) . x = q - mean q
        let (rx, ry, rhs) = (2.0 * (a.p_s.x - mx), 2.0 * (a.p_s.y - my), q(a) - mq);
        a11 += a.weight * rx * rx;
        a12 += a.weight * rx * ry;
        a22 += a.weight * ry * ry;
        b1 += a.weight * rx * rhs;
        b2 += a.weight * ry * rhs;
    }
    let det = a11 * a22 - a12 * a12;
    if det.abs() <= 1e-12 * (a11 * a22).abs().max(f64::MIN_POSITIVE) {
        return None;
    }
    Some(Point2D::new((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det))
}

fn gauss_newton(anchors: &[Anchor], start: Point2D) -> (Point2D, f64, bool) {
    let mut x = start;
    let mut e = cost(anchors, x);
    let mut converged = false;
    for _ in 0..MAX_ITER {
        // normal equations J^T W J dx = -J^T W r
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for a in anchors {
            let diff = x - a.p_s;
            let dist = diff.norm().max(1e-12);
            let (jx, jy) = (diff.x / dist, diff.y / dist);
            let r = dist - a.d_st;
            a11 += a.weight * jx * jx;
            a12 += a.weight * jx * jy;
            a22 += a.weight * jy * jy;
            b1 -= a.weight * jx * r;
            b2 -= a.weight * jy * r;
        }
        let det = a11 * a22 - a12 * a12;
        if det.abs() < 1e-18 {
            break;
        }
        let step = Point2D::new((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det);
        let mut scale = 1.0;
        let mut accepted = false;
        while scale > 1e-10 {
            let trial = x + step * scale;
            let et = cost(anchors, trial);
            if et <= e {
                x = trial;
                e = et;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted || step.norm() * scale < STEP_TOL {
            converged = true;
            break;
        }
    }
    (x, e, converged)
}

/// Damped Gauss-Newton on sum_i w_i (|x - p_s^i| - d_st^i)^2.
/// Without `init` it runs from the linearized solution and from the weighted
/// anchor centroid and keeps the lower cost.
pub fn wls_multilaterate(anchors: &[Anchor], init: Option<Point2D>) -> Result<LocalizationEstimate> {
    if anchors.len() < 3 {
        return Err(Error::InsufficientAnchors(anchors.len()));
    }
    let pts: Vec<Point2D> = anchors.iter().map(|a| a.p_s).collect();
    let dev = max_line_deviation(&pts);
    if !(dev > COLLINEAR_TOL) {
        return Err(Error::DegenerateGeometry(format!(
            "anchors within {dev:.4} m of a line"
        )));
    }
    let starts: Vec<Point2D> = match init {
        Some(p) => vec![p],
        None => {
            let wsum: f64 = anchors.iter().map(|a| a.weight).sum();
            let cx = anchors.iter().map(|a| a.weight * a.p_s.x).sum::<f64>() / wsum;
            let cy = anchors.iter().map(|a| a.weight * a.p_s.y).sum::<f64>() / wsum;
            linear_init(anchors).into_iter().chain([Point2D::new(cx, cy)]).collect()
        }
    };
    let (position, residual, converged) = starts
        .into_iter()
        .map(|s| gauss_newton(anchors, s))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one start");
    Ok(LocalizationEstimate {
        position,
        residual,
        anchors_used: anchors.len(),
        converged,
    })
}
