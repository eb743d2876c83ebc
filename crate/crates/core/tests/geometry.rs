use nlos_lab::error::Error;
use nlos_lab::locate::*;
use nlos_lab::scene::*;
use proptest::prelude::*;

fn p(x: f64, y: f64) -> Point2D {
    Point2D::new(x, y)
}

fn wall_scene(target: Point2D, obstacles: Vec<Segment>) -> Scene {
    Scene::new(
        p(0.0, 0.0),
        vec![Reflector::new(p(-2.0, 3.0), p(12.0, 3.0), 0.9, 0.1)],
        obstacles,
        vec![Target {
            id: "t".into(),
            position: target,
        }],
    )
    .unwrap()
}

#[test]
fn horizontal_wall_by_hand() {
    // radar (0,0), wall y=3, target (4,1): image of the target is (4,5),
    // the bounce sits where the line (0,0)-(4,5) crosses y=3
    let scene = wall_scene(p(4.0, 1.0), vec![]);
    let paths = enumerate_first_order_paths(&scene, "t").unwrap();
    assert_eq!(paths.len(), 1);
    let path = paths[0];
    assert!((path.p_s.x - 2.4).abs() < 1e-12 && (path.p_s.y - 3.0).abs() < 1e-12);
    assert!((path.d_total - 41f64.sqrt()).abs() < 1e-12);
    assert!((path.aoa_phi - (3.0f64).atan2(2.4)).abs() < 1e-12);
    assert!((path.attenuation - 0.9 * 0.9 / 41.0).abs() < 1e-12);
    let v = virtual_target_position(scene.radar, &path).unwrap();
    assert!((v.x - 4.0).abs() < 1e-12 && (v.y - 5.0).abs() < 1e-12);
}

#[test]
fn obstacle_on_either_leg_removes_path() {
    let first_leg = Segment::new(p(1.0, 1.0), p(1.5, 2.5));
    let second_leg = Segment::new(p(3.0, 1.5), p(3.5, 2.8));
    for obs in [first_leg, second_leg] {
        let scene = wall_scene(p(4.0, 1.0), vec![obs]);
        assert!(enumerate_first_order_paths(&scene, "t").unwrap().is_empty());
    }
}

#[test]
fn direct_path_blocking() {
    let open = wall_scene(p(4.0, 1.0), vec![]);
    assert!(!is_direct_path_blocked(&open, "t").unwrap());
    let shut = wall_scene(p(4.0, 1.0), vec![Segment::new(p(2.0, -1.0), p(2.0, 1.5))]);
    assert!(is_direct_path_blocked(&shut, "t").unwrap());
    assert!(matches!(is_direct_path_blocked(&open, "nope"), Err(Error::UnknownTarget(_))));
}

#[test]
fn invalid_scenes_rejected() {
    let bad_coeff = Scene::new(
        p(0.0, 0.0),
        vec![Reflector::new(p(0.0, 1.0), p(1.0, 1.0), 1.5, 0.0)],
        vec![],
        vec![],
    );
    assert!(matches!(bad_coeff, Err(Error::InvalidScene(_))));
    let dup = Scene::new(
        p(0.0, 0.0),
        vec![],
        vec![],
        vec![
            Target { id: "a".into(), position: p(1.0, 1.0) },
            Target { id: "a".into(), position: p(2.0, 1.0) },
        ],
    );
    assert!(matches!(dup, Err(Error::InvalidScene(_))));
}

#[test]
fn weights_reject_non_positive() {
    assert!(matches!(compute_weights(&[1.0, 0.0]), Err(Error::NonPositiveEigenvalue(_))));
    assert!(compute_weights(&[1.0, f64::NAN]).is_err());
}

#[test]
fn wls_needs_three_spread_anchors() {
    let a = |x: f64, y: f64| Anchor { p_s: p(x, y), d_st: 1.0, weight: 1.0 };
    assert!(matches!(
        wls_multilaterate(&[a(0.0, 0.0), a(1.0, 0.0)], None),
        Err(Error::InsufficientAnchors(2))
    ));
    assert!(matches!(
        wls_multilaterate(&[a(0.0, 0.0), a(1.0, 0.0), a(2.0, 0.001)], None),
        Err(Error::DegenerateGeometry(_))
    ));
}

proptest! {
    #[test]
    fn mirror_is_involution_and_isometry(
        x in -10.0..10.0f64, y in -10.0..10.0f64,
        ax in -5.0..5.0f64, ay in -5.0..5.0f64, th in 0.0..std::f64::consts::PI,
    ) {
        let seg = Segment::new(p(ax, ay), p(ax + th.cos(), ay + th.sin()));
        let q = p(x, y);
        let m = mirror_point(q, &seg);
        let back = mirror_point(m, &seg);
        prop_assert!(back.dist(q) < 1e-9);
        // any point on the line is equidistant from q and its image
        prop_assert!((seg.a.dist(q) - seg.a.dist(m)).abs() < 1e-9);
        prop_assert!((seg.b.dist(q) - seg.b.dist(m)).abs() < 1e-9);
    }

    #[test]
    fn specular_paths_obey_image_geometry(tx in 0.5..10.0f64, ty in -2.0..2.9f64) {
        let scene = wall_scene(p(tx, ty), vec![]);
        let paths = enumerate_first_order_paths(&scene, "t").unwrap();
        prop_assert_eq!(paths.len(), 1);
        let path = paths[0];
        let seg = scene.reflectors[0].segment();
        // total length equals the straight distance to the target's image
        let image = mirror_point(p(tx, ty), &seg);
        prop_assert!((path.d_total - scene.radar.dist(image)).abs() < 1e-9);
        prop_assert!((path.d_rs + path.d_st - path.d_total).abs() < 1e-9);
        // equal angles: incoming and outgoing legs make the same angle with the wall normal
        let n = scene.reflectors[0].normal();
        let cos_in = (scene.radar - path.p_s).dot(n) / path.d_rs;
        let cos_out = (p(tx, ty) - path.p_s).dot(n) / path.d_st;
        prop_assert!((cos_in - cos_out).abs() < 1e-9);
        prop_assert!((path.p_s.y - 3.0).abs() < 1e-9);
        let v = virtual_target_position(scene.radar, &path).unwrap();
        prop_assert!(v.dist(image) < 1e-9);
    }

    #[test]
    fn reflection_point_round_trip(d in 0.1..20.0f64, phi in -3.1..3.1f64, rx in -5.0..5.0f64, ry in -5.0..5.0f64) {
        let r = p(rx, ry);
        let q = reflection_point(r, d, phi);
        prop_assert!((q.dist(r) - d).abs() < 1e-9);
        prop_assert!(((q - r).angle() - phi).abs() < 1e-9);
    }

    #[test]
    fn weights_normalize(u in prop::collection::vec(1e-6..1e6f64, 1..12)) {
        let w = compute_weights(&u).unwrap();
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (wi, ui) in w.iter().zip(&u) {
            prop_assert!((wi * u.iter().sum::<f64>() - ui).abs() < 1e-9 * ui.max(1.0));
        }
    }

    #[test]
    fn wls_recovers_exact_position(
        tx in -4.0..4.0f64, ty in -4.0..4.0f64,
        angles in prop::collection::vec(0.0..std::f64::consts::TAU, 3..7),
        radii in prop::collection::vec(1.0..6.0f64, 7),
        raw_w in prop::collection::vec(0.1..10.0f64, 7),
    ) {
        let truth = p(tx, ty);
        let pts: Vec<Point2D> = angles
            .iter()
            .zip(&radii)
            .map(|(a, r)| p(tx + r * a.cos(), ty + r * a.sin()))
            .collect();
        let w = compute_weights(&raw_w[..pts.len()]).unwrap();
        let anchors: Vec<Anchor> = pts
            .iter()
            .zip(&w)
            .map(|(&q, &weight)| Anchor { p_s: q, d_st: q.dist(truth), weight })
            .collect();
        match wls_multilaterate(&anchors, None) {
            Ok(est) => {
                prop_assert!(est.position.dist(truth) < 1e-6, "off by {}", est.position.dist(truth));
                prop_assert!(est.residual < 1e-10);
            }
            // nearly collinear draws are allowed to refuse
            Err(Error::DegenerateGeometry(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}
