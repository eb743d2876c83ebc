//! Scene generators: a fixed reference room and random rooms for Monte Carlo checks.

use rand::Rng;

use crate::error::Result;
use crate::scene::{enumerate_first_order_paths, is_direct_path_blocked, Point2D, Reflector, Scene, Segment, Target};

/// Limits a random room must satisfy to count as non-degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneLimits {
    pub max_aoa_deg: f64,
    pub max_distance: f64,
    pub min_d_rs: f64,
    pub min_d_st: f64,
    /// Minimum angular gap between any two returns of the same frame.
    pub min_separation_deg: f64,
    /// Minimum distance of the anchor set from a straight line.
    pub min_anchor_spread: f64,
}

impl Default for SceneLimits {
    fn default() -> Self {
        Self {
            max_aoa_deg: 55.0,
            max_distance: 9.5,
            min_d_rs: 0.8,
            min_d_st: 0.5,
            min_separation_deg: 8.0,
            min_anchor_spread: 0.3,
        }
    }
}

fn room(w_top: f64, w_bottom: f64, x_back: f64, coeffs: [(f64, f64); 3]) -> Vec<Reflector> {
    let tl = Point2D::new(x_back, w_top);
    let bl = Point2D::new(x_back, -w_bottom);
    vec![
        Reflector::new(Point2D::new(-1.0, w_top), tl, coeffs[0].0, coeffs[0].1),
        Reflector::new(Point2D::new(-1.0, -w_bottom), bl, coeffs[1].0, coeffs[1].1),
        Reflector::new(bl, tl, coeffs[2].0, coeffs[2].1),
    ]
}

/// Short wall across the radar-target line, `frac` of the way to the target.
pub fn blocker(radar: Point2D, target: Point2D, frac: f64, half_len: f64) -> Segment {
    let mid = radar + (target - radar) * frac;
    let dir = target - radar;
    let perp = Point2D::new(-dir.y, dir.x) * (half_len / dir.norm());
    Segment::new(mid - perp, mid + perp)
}

/// Three-wall room with a target behind a short blocker. Used by the example config.
pub fn reference_scene() -> Scene {
    let radar = Point2D::new(0.0, 0.0);
    let target = Point2D::new(4.3, 0.7);
    Scene::new(
        radar,
        room(2.3, 2.0, 6.4, [(0.9, 0.15), (0.85, 0.2), (0.8, 0.1)]),
        vec![blocker(radar, target, 0.75, 0.2)],
        vec![Target {
            id: "tag0".into(),
            position: target,
        }],
    )
    .expect("reference scene is valid")
}

fn angle_gap(a: f64, b: f64) -> f64 {
    (a - b).abs()
}

/// Checks `limits` for every target of `scene`. `los` is the required visibility.
pub fn scene_ok(scene: &Scene, los: bool, limits: &SceneLimits) -> Result<bool> {
    let max_aoa = limits.max_aoa_deg.to_radians();
    let min_sep = limits.min_separation_deg.to_radians();
    let mut angles = Vec::new();
    for t in &scene.targets {
        if is_direct_path_blocked(scene, &t.id)? == los {
            return Ok(false);
        }
        let paths = enumerate_first_order_paths(scene, &t.id)?;
        if paths.len() < 3 {
            return Ok(false);
        }
        for p in &paths {
            if p.aoa_phi.abs() > max_aoa
                || p.d_total > limits.max_distance
                || p.d_rs < limits.min_d_rs
                || p.d_st < limits.min_d_st
            {
                return Ok(false);
            }
            angles.push(p.aoa_phi);
        }
        if los {
            let d = t.position - scene.radar;
            if d.angle().abs() > max_aoa || d.norm() > limits.max_distance {
                return Ok(false);
            }
            angles.push(d.angle());
        }
        let pts: Vec<Point2D> = paths.iter().map(|p| p.p_s).collect();
        if line_spread(&pts) < limits.min_anchor_spread {
            return Ok(false);
        }
    }
    for i in 0..angles.len() {
        for j in i + 1..angles.len() {
            if angle_gap(angles[i], angles[j]) < min_sep {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn line_spread(pts: &[Point2D]) -> f64 {
    // twice the largest triangle area over the longest side
    let mut best: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let base = pts[j] - pts[i];
            let len = base.norm();
            if len == 0.0 {
                continue;
            }
            for k in 0..pts.len() {
                best = best.max(base.cross(pts[k] - pts[i]).abs() / len);
            }
        }
    }
    best
}

/// Random single-target three-wall room meeting `limits`.
pub fn random_scene<R: Rng>(rng: &mut R, los: bool, limits: &SceneLimits) -> Scene {
    loop {
        let w_top = rng.random_range(1.5..3.0);
        let w_bottom = rng.random_range(1.5..3.0);
        let x_back = rng.random_range(5.0..7.0);
        let mut coeff = || (rng.random_range(0.6..0.95), rng.random_range(0.05..0.3));
        let coeffs = [coeff(), coeff(), coeff()];
        let target = Point2D::new(
            rng.random_range(2.5..x_back - 0.8),
            rng.random_range(-w_bottom + 0.5..w_top - 0.5),
        );
        let radar = Point2D::new(0.0, 0.0);
        let obstacles = if los {
            vec![]
        } else {
            vec![blocker(radar, target, rng.random_range(0.4..0.6), 0.25)]
        };
        let Ok(scene) = Scene::new(
            radar,
            room(w_top, w_bottom, x_back, coeffs),
            obstacles,
            vec![Target {
                id: "tag0".into(),
                position: target,
            }],
        ) else {
            continue;
        };
        if scene_ok(&scene, los, limits).unwrap_or(false) {
            return scene;
        }
    }
}
