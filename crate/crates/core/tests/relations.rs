use proptest::prelude::*;
use sgqa_core::relation::relation_from_centers;
use sgqa_core::{
    bin_relation, build_scene_graph, forward_direction, relation_between, signed_angle, Box3D, EgoState, Relation, Scene,
    SceneObject, SignedAngle,
};
use sgqa_testkit::relation::{forward_oracle, sector_oracle};

fn object(id: &str, x: f64, y: f64) -> SceneObject {
    SceneObject {
        id: id.into(),
        category: "car".into(),
        status: Some("parked".into()),
        bbox: Box3D::from_array([x, y, 0.0, 4.0, 2.0, 1.5, 0.3]),
    }
}

fn coord() -> impl Strategy<Value = f64> {
    -100.0..100.0f64
}

fn unit() -> impl Strategy<Value = [f64; 2]> {
    (-std::f64::consts::PI..std::f64::consts::PI).prop_map(|a| [a.cos(), a.sin()])
}

fn far_apart(a: [f64; 2], b: [f64; 2]) -> bool {
    (a[0] - b[0]).hypot(a[1] - b[1]) > 1e-3
}

#[test]
fn forward_direction_examples() {
    assert_eq!(forward_direction(&EgoState::new([3.0, 0.0, 0.0], 1.0)), [1.0, 0.0]);
    assert_eq!(forward_direction(&EgoState::new([0.0, 0.0, 0.0], 0.0)), [1.0, 0.0]);
    let f = forward_direction(&EgoState::new([1.0, 1.0, 5.0], 0.0));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((f[0] - h).abs() < 1e-12 && (f[1] - h).abs() < 1e-12);
    // Below the speed threshold the heading wins.
    let slow = forward_direction(&EgoState::new([0.1, 0.1, 0.0], std::f64::consts::FRAC_PI_2));
    assert!(slow[0].abs() < 1e-12 && (slow[1] - 1.0).abs() < 1e-12);
}

#[test]
fn signed_angle_examples() {
    let east = [1.0, 0.0];
    assert_eq!(signed_angle([0.0, 0.0], [10.0, 0.0], east).unwrap().degrees(), 0.0);
    assert_eq!(signed_angle([0.0, 0.0], [0.0, 10.0], east).unwrap().degrees(), 90.0);
    assert_eq!(signed_angle([0.0, 0.0], [-10.0, 0.0], east).unwrap().degrees(), 180.0);
    assert!(signed_angle([1.0, 1.0], [1.0, 1.0], east).is_err());
}

#[test]
fn boundary_angles_bin_as_defined() {
    let cases = [
        (-150.0, Relation::Back),
        (-90.0, Relation::BackRight),
        (-30.0, Relation::FrontRight),
        (30.0, Relation::Front),
        (90.0, Relation::FrontLeft),
        (150.0, Relation::BackLeft),
        (0.0, Relation::Front),
        (180.0, Relation::Back),
    ];
    for (degrees, expected) in cases {
        assert_eq!(bin_relation(SignedAngle::from_degrees(degrees)), expected, "{degrees}");
    }
}

#[test]
fn relation_between_examples() {
    let ego = EgoState::new([5.0, 0.0, 0.0], 0.0);
    let origin = object("a", 0.0, 0.0);
    assert_eq!(relation_between(&origin, &object("b", 5.0, 5.0), &ego).unwrap(), Relation::FrontLeft);
    assert_eq!(relation_between(&origin, &object("b", 5.0, -5.0), &ego).unwrap(), Relation::FrontRight);
    assert_eq!(relation_between(&object("b", 5.0, 5.0), &origin, &ego).unwrap(), Relation::BackRight);
}

#[test]
fn five_object_graph_is_complete_and_complementary() {
    let scene = Scene {
        scene_id: "s".into(),
        objects: (0..5).map(|i| object(&format!("o{i}"), 7.0 * i as f64 - 10.0, (i * i) as f64 - 3.0)).collect(),
        ego: EgoState::new([0.0, 2.0, 0.0], 0.0),
    };
    let g = build_scene_graph(&scene).unwrap();
    assert_eq!(g.edge_count(), 30);
    let forward = forward_oracle(&scene.ego);
    for a in 0..g.len() {
        for b in 0..g.len() {
            if a == b {
                assert_eq!(g.edge(a, b), None);
                continue;
            }
            let ab = g.edge(a, b).unwrap();
            assert_eq!(g.edge(b, a).unwrap(), ab.complement());
            assert_eq!(ab, sector_oracle(g.node(a).center(), g.node(b).center(), forward));
        }
    }
}

/// Whether `t` lies in the sector (lo, lo + 60] of `r`, measured around the circle.
fn in_sector(t: f64, r: Relation) -> bool {
    let lo = match r {
        Relation::Front => -30.0,
        Relation::FrontLeft => 30.0,
        Relation::BackLeft => 90.0,
        Relation::Back => 150.0,
        Relation::BackRight => -150.0,
        Relation::FrontRight => -90.0,
    };
    let d = (t - lo).rem_euclid(360.0);
    d > 0.0 && d <= 60.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn matches_sector_oracle(rx in coord(), ry in coord(), tx in coord(), ty in coord(), f in unit()) {
        prop_assume!(far_apart([rx, ry], [tx, ty]));
        let got = relation_from_centers([rx, ry], [tx, ty], f).unwrap();
        prop_assert_eq!(got, sector_oracle([rx, ry], [tx, ty], f));
    }

    #[test]
    fn complement_law(rx in coord(), ry in coord(), tx in coord(), ty in coord(), f in unit()) {
        prop_assume!(far_apart([rx, ry], [tx, ty]));
        let ab = relation_from_centers([rx, ry], [tx, ty], f).unwrap();
        let ba = relation_from_centers([tx, ty], [rx, ry], f).unwrap();
        prop_assert_eq!(ba, ab.complement());
    }

    #[test]
    fn translation_invariant(rx in coord(), ry in coord(), tx in coord(), ty in coord(), f in unit(), dx in coord(), dy in coord()) {
        prop_assume!(far_apart([rx, ry], [tx, ty]));
        let before = sector_oracle([rx, ry], [tx, ty], f);
        let after = relation_from_centers([rx + dx, ry + dy], [tx + dx, ty + dy], f).unwrap();
        // Translation can move a point across a boundary only through rounding.
        let angle = signed_angle([rx, ry], [tx, ty], f).unwrap().degrees();
        prop_assume!([-150.0, -90.0, -30.0, 30.0, 90.0, 150.0, 180.0].iter().all(|b: &f64| (angle - b).abs() > 1e-6));
        prop_assert_eq!(after, before);
    }

    #[test]
    fn rotation_equivariant(rx in coord(), ry in coord(), tx in coord(), ty in coord(), f in unit(), phi in -3.1f64..3.1) {
        prop_assume!(far_apart([rx, ry], [tx, ty]));
        let angle = signed_angle([rx, ry], [tx, ty], f).unwrap().degrees();
        prop_assume!([-150.0, -90.0, -30.0, 30.0, 90.0, 150.0, 180.0].iter().all(|b: &f64| (angle - b).abs() > 1e-6));
        let (c, s) = (phi.cos(), phi.sin());
        let rot = |p: [f64; 2]| [c * p[0] - s * p[1], s * p[0] + c * p[1]];
        prop_assert_eq!(
            relation_from_centers(rot([rx, ry]), rot([tx, ty]), rot(f)).unwrap(),
            relation_from_centers([rx, ry], [tx, ty], f).unwrap()
        );
    }

    #[test]
    fn bins_partition_the_circle(t in -180.0f64..=180.0) {
        prop_assume!(t > -180.0);
        let a = SignedAngle::from_degrees(t);
        let hits: Vec<Relation> = Relation::ALL.into_iter().filter(|&r| in_sector(a.degrees(), r)).collect();
        prop_assert_eq!(hits, vec![bin_relation(a)]);
    }

    #[test]
    fn arccos_recovers_magnitude(tx in coord(), ty in coord(), f in unit()) {
        prop_assume!(far_apart([0.0, 0.0], [tx, ty]));
        let theta = signed_angle([0.0, 0.0], [tx, ty], f).unwrap().degrees();
        let cos = (f[0] * tx + f[1] * ty) / tx.hypot(ty);
        prop_assert!((cos.clamp(-1.0, 1.0).acos().to_degrees() - theta.abs()).abs() < 1e-6);
    }

    #[test]
    fn forward_matches_oracle(vx in -3.0f64..3.0, vy in -3.0f64..3.0, vz in -3.0f64..3.0, yaw in -std::f64::consts::PI..std::f64::consts::PI) {
        let ego = EgoState::new([vx, vy, vz], yaw);
        let (a, b) = (forward_direction(&ego), forward_oracle(&ego));
        prop_assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }
}
