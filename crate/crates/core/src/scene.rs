//! 2-D scene geometry: radar, reflectors, obstacles and tagged targets.
//!
//! Paths are first-order only. A reflector produces a path to a target when
//! the mirror-image construction lands strictly inside the reflector segment
//! and neither leg of the path crosses an obstacle.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GEOM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Point2D {
    pub x: f64,
    pub y: f64,
}

impl Point2D {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Point2D) -> f64 {
        (self - other).norm()
    }

    pub fn dot(self, other: Point2D) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2D) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Polar angle in (-pi, pi].
    pub fn angle(self) -> f64 {
        let a = self.y.atan2(self.x);
        if a <= -PI {
            a + 2.0 * PI
        } else {
            a
        }
    }

    pub fn rotate(self, angle: f64) -> Point2D {
        let (s, c) = angle.sin_cos();
        Point2D::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point2D {
    type Output = Point2D;
    fn add(self, o: Point2D) -> Point2D {
        Point2D::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2D {
    type Output = Point2D;
    fn sub(self, o: Point2D) -> Point2D {
        Point2D::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2D {
    type Output = Point2D;
    fn mul(self, k: f64) -> Point2D {
        Point2D::new(self.x * k, self.y * k)
    }
}

/// Closed line segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub a: Point2D,
    pub b: Point2D,
}

impl Segment {
    pub const fn new(a: Point2D, b: Point2D) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        self.a.dist(self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reflector {
    pub endpoint_a: Point2D,
    pub endpoint_b: Point2D,
    pub scatter_coeff: f64,
    pub absorption: f64,
}

impl Reflector {
    pub fn new(endpoint_a: Point2D, endpoint_b: Point2D, scatter_coeff: f64, absorption: f64) -> Self {
        Self {
            endpoint_a,
            endpoint_b,
            scatter_coeff,
            absorption,
        }
    }

    pub fn segment(&self) -> Segment {
        Segment::new(self.endpoint_a, self.endpoint_b)
    }

    /// Amplitude factor applied to a path bouncing off this reflector.
    pub fn reflectivity(&self) -> f64 {
        self.scatter_coeff * (1.0 - self.absorption)
    }

    /// Unit normal (left-hand of a -> b).
    pub fn normal(&self) -> Point2D {
        let d = self.endpoint_b - self.endpoint_a;
        let n = Point2D::new(-d.y, d.x);
        n * (1.0 / n.norm())
    }

    fn validate(&self, idx: usize) -> Result<()> {
        let ctx = |r: &str| Error::InvalidScene(format!("reflector {idx}: {r}"));
        if !self.endpoint_a.is_finite() || !self.endpoint_b.is_finite() {
            return Err(ctx("non-finite endpoint"));
        }
        if self.endpoint_a.dist(self.endpoint_b) <= GEOM_EPS {
            return Err(ctx("endpoints coincide"));
        }
        if !(self.scatter_coeff > 0.0 && self.scatter_coeff <= 1.0) {
            return Err(ctx("scatter_coeff must lie in (0, 1]"));
        }
        if !(0.0..1.0).contains(&self.absorption) {
            return Err(ctx("absorption must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub id: String,
    pub position: Point2D,
}

/// Geometric ground truth. Construct with [`Scene::new`] to get validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub radar: Point2D,
    pub reflectors: Vec<Reflector>,
    pub obstacles: Vec<Segment>,
    pub targets: Vec<Target>,
}

/// One first-order path radar -> reflection point -> target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathGeometry {
    pub reflector_index: usize,
    pub p_s: Point2D,
    pub d_rs: f64,
    pub d_st: f64,
    pub d_total: f64,
    pub aoa_phi: f64,
    pub attenuation: f64,
}

impl Scene {
    pub fn new(
        radar: Point2D,
        reflectors: Vec<Reflector>,
        obstacles: Vec<Segment>,
        targets: Vec<Target>,
    ) -> Result<Self> {
        let scene = Scene {
            radar,
            reflectors,
            obstacles,
            targets,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.radar.is_finite() {
            return Err(Error::InvalidScene("radar position is not finite".into()));
        }
        for (i, r) in self.reflectors.iter().enumerate() {
            r.validate(i)?;
        }
        for (i, a) in self.reflectors.iter().enumerate() {
            for (j, b) in self.reflectors.iter().enumerate().skip(i + 1) {
                if collinear_overlap(&a.segment(), &b.segment()) {
                    return Err(Error::InvalidScene(format!(
                        "reflectors {i} and {j} are collinear and overlap"
                    )));
                }
            }
        }
        for (i, o) in self.obstacles.iter().enumerate() {
            if !o.a.is_finite() || !o.b.is_finite() || o.length() <= GEOM_EPS {
                return Err(Error::InvalidScene(format!("obstacle {i} is degenerate")));
            }
        }
        let mut seen = HashSet::new();
        for t in &self.targets {
            if !seen.insert(t.id.as_str()) {
                return Err(Error::InvalidScene(format!("duplicate target id `{}`", t.id)));
            }
            if !t.position.is_finite() {
                return Err(Error::InvalidScene(format!("target `{}` not finite", t.id)));
            }
            if t.position.dist(self.radar) <= GEOM_EPS {
                return Err(Error::InvalidScene(format!(
                    "target `{}` coincides with the radar",
                    t.id
                )));
            }
        }
        Ok(())
    }

    pub fn target(&self, id: &str) -> Result<&Target> {
        self.targets
            .iter()
            .find(|t| t.id == id)
            .ok_or_else(|| Error::UnknownTarget(id.to_string()))
    }

    fn leg_blocked(&self, from: Point2D, to: Point2D) -> bool {
        let leg = Segment::new(from, to);
        self.obstacles.iter().any(|o| open_segment_hits(&leg, o))
    }
}

/// Mirror image of `p` across the infinite line through `seg`.
pub fn mirror_point(p: Point2D, seg: &Segment) -> Point2D {
    let d = seg.b - seg.a;
    let t = (p - seg.a).dot(d) / d.dot(d);
    let foot = seg.a + d * t;
    foot * 2.0 - p
}

/// First-order specular paths from the radar to `target_id`.
pub fn enumerate_first_order_paths(scene: &Scene, target_id: &str) -> Result<Vec<PathGeometry>> {
    let target = scene.target(target_id)?.position;
    let radar = scene.radar;
    let mut paths = Vec::new();
    for (idx, refl) in scene.reflectors.iter().enumerate() {
        let seg = refl.segment();
        let n = refl.normal();
        let side_r = (radar - seg.a).dot(n);
        let side_t = (target - seg.a).dot(n);
        // both endpoints strictly on the same side of the reflector line
        if side_r * side_t <= 0.0 || side_r.abs() <= GEOM_EPS || side_t.abs() <= GEOM_EPS {
            continue;
        }
        let image = mirror_point(radar, &seg);
        let Some((u, p_s)) = line_segment_param(image, target, &seg) else {
            continue;
        };
        if u <= GEOM_EPS || u >= 1.0 - GEOM_EPS {
            continue;
        }
        if scene.leg_blocked(radar, p_s) || scene.leg_blocked(p_s, target) {
            continue;
        }
        let d_rs = radar.dist(p_s);
        let d_st = p_s.dist(target);
        let d_total = d_rs + d_st;
        paths.push(PathGeometry {
            reflector_index: idx,
            p_s,
            d_rs,
            d_st,
            d_total,
            aoa_phi: (p_s - radar).angle(),
            attenuation: refl.reflectivity() / (d_total * d_total),
        });
    }
    Ok(paths)
}

/// Point on the ray radar -> p_s at distance `d_total` from the radar.
pub fn virtual_target_position(radar: Point2D, path: &PathGeometry) -> Result<Point2D> {
    if !(path.d_rs > 0.0) {
        return Err(Error::DegenerateGeometry(
            "radar-to-reflection distance is zero".into(),
        ));
    }
    Ok(radar + (path.p_s - radar) * (path.d_total / path.d_rs))
}

pub fn is_direct_path_blocked(scene: &Scene, target_id: &str) -> Result<bool> {
    let target = scene.target(target_id)?.position;
    Ok(scene.leg_blocked(scene.radar, target))
}

/// Intersection of the infinite line p->q with `seg`; returns the segment
/// parameter `u` in the a->b direction together with the point.
fn line_segment_param(p: Point2D, q: Point2D, seg: &Segment) -> Option<(f64, Point2D)> {
    let r = q - p;
    let s = seg.b - seg.a;
    let denom = r.cross(s);
    if denom.abs() <= GEOM_EPS {
        return None;
    }
    let u = (seg.a - p).cross(r) / denom;
    Some((u, seg.a + s * u))
}

fn orient(a: Point2D, b: Point2D, c: Point2D) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment(p: Point2D, seg: &Segment) -> bool {
    p.x >= seg.a.x.min(seg.b.x) - GEOM_EPS
        && p.x <= seg.a.x.max(seg.b.x) + GEOM_EPS
        && p.y >= seg.a.y.min(seg.b.y) - GEOM_EPS
        && p.y <= seg.a.y.max(seg.b.y) + GEOM_EPS
}

/// Whether the open segment `leg` (endpoints excluded) touches the closed segment `obs`.
pub fn open_segment_hits(leg: &Segment, obs: &Segment) -> bool {
    let scale = leg.length().max(obs.length()).max(1.0);
    let eps = GEOM_EPS * scale * scale;
    let o1 = orient(leg.a, leg.b, obs.a);
    let o2 = orient(leg.a, leg.b, obs.b);
    let o3 = orient(obs.a, obs.b, leg.a);
    let o4 = orient(obs.a, obs.b, leg.b);
    if o1.abs() <= eps && o2.abs() <= eps {
        // collinear: overlap of the open leg with the closed obstacle
        let d = leg.b - leg.a;
        let len2 = d.dot(d);
        let t1 = (obs.a - leg.a).dot(d) / len2;
        let t2 = (obs.b - leg.a).dot(d) / len2;
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        return hi > GEOM_EPS && lo < 1.0 - GEOM_EPS;
    }
    let proper = ((o1 > eps && o2 < -eps) || (o1 < -eps && o2 > eps))
        && ((o3 > eps && o4 < -eps) || (o3 < -eps && o4 > eps));
    if proper {
        return true;
    }
    // obstacle endpoint lying on the open leg
    let touches_leg = |p: Point2D, o: f64| {
        o.abs() <= eps && on_segment(p, leg) && p.dist(leg.a) > GEOM_EPS && p.dist(leg.b) > GEOM_EPS
    };
    if touches_leg(obs.a, o1) || touches_leg(obs.b, o2) {
        return true;
    }
    // interior leg point lying on the obstacle is only possible through the
    // leg's endpoints, which are excluded
    false
}

fn collinear_overlap(a: &Segment, b: &Segment) -> bool {
    let scale = a.length().max(b.length()).max(1.0);
    let eps = 1e-9 * scale * scale;
    if orient(a.a, a.b, b.a).abs() > eps || orient(a.a, a.b, b.b).abs() > eps {
        return false;
    }
    let d = a.b - a.a;
    let len2 = d.dot(d);
    let t1 = (b.a - a.a).dot(d) / len2;
    let t2 = (b.b - a.a).dot(d) / len2;
    t1.max(t2) > 1e-9 && t1.min(t2) < 1.0 - 1e-9
}
