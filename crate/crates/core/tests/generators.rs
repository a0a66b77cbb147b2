use hgt_core::gauge::{Engine, TwoConnection};
use hgt_core::generators::{
    admit, covariance_defect3, inverse_round_trip2, make_selfdual, random_canonical2,
    random_canonical3, scramble2, scramble3, InstanceSpec,
};
use hgt_core::grid::{io, GridForm};
use hgt_core::jet::JetCalculus;
use hgt_core::xmod;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bytes(f: &GridForm) -> Vec<u8> {
    let mut buf = Vec::new();
    io::write_binary(&mut buf, &io::to_file(f, "x")).unwrap();
    buf
}

#[test]
fn same_spec_gives_identical_bytes() {
    let spec = InstanceSpec::grid("product", 3, 6, 12);
    let run = || {
        let calc = spec.calculus().unwrap();
        let c0 = random_canonical2(&calc, &spec).unwrap();
        let (s, _) = scramble2(&calc, &c0, &spec);
        (bytes(&s.a), bytes(&s.b))
    };
    assert_eq!(run(), run());
    let other = InstanceSpec::grid("product", 3, 6, 13);
    let calc = other.calculus().unwrap();
    let c = random_canonical2(&calc, &other).unwrap();
    assert_ne!(bytes(&c.b), run().1);
}

#[test]
fn three_gauge_generation_is_deterministic() {
    let spec = InstanceSpec::grid("mixed", 4, 3, 5);
    let run = || {
        let calc = spec.calculus().unwrap();
        let c0 = random_canonical3(&calc, &spec).unwrap();
        let (s, _) = scramble3(&calc, &c0, &spec);
        [bytes(&s.a), bytes(&s.b), bytes(&s.c)]
    };
    assert_eq!(run(), run());
    let a = make_selfdual(4, 3, 1, 2, 1e-10).unwrap();
    let b = make_selfdual(4, 3, 1, 2, 1e-10).unwrap();
    assert_eq!(bytes(&a.omega), bytes(&b.omega));
}

#[test]
fn zero_amplitude_leaves_the_instance_unchanged() {
    let mut spec = InstanceSpec::grid("so3-vector", 3, 4, 1);
    let calc = spec.calculus().unwrap();
    let c0 = random_canonical2(&calc, &spec).unwrap();
    spec.amplitude = 0.0;
    let (s, _) = scramble2(&calc, &c0, &spec);
    assert!(s.a.max_abs() < 1e-15);
    assert!(s.b.sub(&c0.b).max_abs() < 1e-15);
    let zero = random_canonical2(&calc, &spec).unwrap();
    assert_eq!(zero.b.max_abs(), 0.0);
}

#[test]
fn canonical_instances_are_canonical() {
    let spec = InstanceSpec::grid("product", 3, 6, 2);
    let calc = spec.calculus().unwrap();
    let c0 = random_canonical2(&calc, &spec).unwrap();
    let eng = Engine::new(&calc, &calc.module);
    let n = c0.b.l2();
    assert!(n > 0.0);
    assert!(eng.t_hat(&c0.b).l2() / n < 1e-12);
    assert!(c0.b.codiff().l2() * calc.grid.h / n < 1e-8);
    let spec3 = InstanceSpec::grid("rep-2crossed", 4, 4, 2);
    let calc3 = spec3.calculus().unwrap();
    let c3 = random_canonical3(&calc3, &spec3).unwrap();
    let eng3 = Engine::new(&calc3, &calc3.module);
    assert!(eng3.tau_hat(&c3.c).l2() / c3.c.l2() < 1e-12);
    assert!(eng3.fake_curvature3(&c3).l2() / c3.c.l2() < 1e-12);
}

#[test]
fn inverse_scramble_converges_at_first_order_or_better() {
    let mut errs = Vec::new();
    for n in [8usize, 16] {
        let spec = InstanceSpec::grid("so3-vector", 3, n, 4);
        let calc = spec.calculus().unwrap();
        let c0 = random_canonical2(&calc, &spec).unwrap();
        let (s, g) = scramble2(&calc, &c0, &spec);
        let e = inverse_round_trip2(&calc, &c0, &s, &g);
        admit(e, &calc).unwrap();
        errs.push(e);
    }
    assert!((errs[0] / errs[1]).log2() >= 0.8, "{errs:?}");
}

#[test]
fn three_gauge_scrambles_are_admitted_by_curvature_covariance() {
    for module in ["rep-2crossed", "peiffer-su2", "mixed"] {
        let spec = InstanceSpec::grid(module, 4, 4, 0);
        let calc = spec.calculus().unwrap();
        let c0 = random_canonical3(&calc, &spec).unwrap();
        let (s, _) = scramble3(&calc, &c0, &spec);
        admit(covariance_defect3(&calc, &c0, &s), &calc).unwrap();
    }
}

#[test]
fn corrupted_scramble_is_not_admitted() {
    let spec = InstanceSpec::grid("so3-vector", 3, 6, 4);
    let calc = spec.calculus().unwrap();
    let c0 = random_canonical2(&calc, &spec).unwrap();
    let (mut s, g) = scramble2(&calc, &c0, &spec);
    s.b.data[40] += 0.5;
    let err = admit(inverse_round_trip2(&calc, &c0, &s, &g), &calc).unwrap_err();
    assert!(err.to_string().contains("ground-truth"));
}

#[test]
fn jet_scrambles_invert_exactly_and_keep_z_norm() {
    let module = xmod::so3_vector();
    let calc = JetCalculus::new(&module, 3, 4);
    let eng = Engine::new(&calc, &module);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let conn = calc.random_fake_flat2(0.5, &mut rng);
    let gauge = calc.random_gauge2(0.5, &mut rng);
    let s = eng.apply_gauge2(&gauge, &conn);
    let back = eng.apply_gauge2(&eng.inverse_gauge2(&gauge), &s);
    assert!(back.a.sub(&conn.a).residual() < 1e-9);
    assert!(back.b.sub(&conn.b).residual() < 1e-9);
    // |Z|^2 as a jet: the invariant inner product pointwise
    let (_, z0) = eng.curvature2(&conn);
    let (_, z1) = eng.curvature2(&TwoConnection {
        a: s.a.clone(),
        b: s.b.clone(),
    });
    let n0 = z0.pointwise_norm2(&module.h.gram);
    let n1 = z1.pointwise_norm2(&module.h.gram);
    assert!(n1.sub(&n0).residual() <= 1e-10 * n0.max_abs().max(1.0));
}
