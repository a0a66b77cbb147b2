use hgt_core::lie::{LieAlgebra, LinearLieMap};
use hgt_core::xmod::{self, parse_module, CrossedModule, Kind, ModuleDesc};
use nalgebra::{DMatrix, DVector};

#[test]
fn registry_residuals_are_tiny() {
    for (name, f) in xmod::registry() {
        let rep = f().validate();
        assert!(rep.valid, "{name}");
        assert!(
            rep.worst() <= 1e-10,
            "{name}: worst residual {:.3e}",
            rep.worst()
        );
    }
}

#[test]
fn two_crossed_reports_cover_the_lifting_relations() {
    let rep = xmod::peiffer_su2().validate();
    for ax in [
        "p1",
        "p2",
        "p3",
        "p4",
        "p5",
        "mr3",
        "complex t_hat tau_hat = 0",
        "ker tau_hat abelian",
    ] {
        assert!(rep.residual(ax).is_some(), "missing {ax}");
    }
    // crossed-module-only relations do not apply to a 2-crossed module
    assert!(rep.residual("dcm2").is_none());
}

#[test]
fn peiffer_module_as_crossed_fails_dcm2() {
    // t = 0 makes the Peiffer identity read [xi, eta] = 0, false for su2
    let m = xmod::peiffer_su2();
    let desc = ModuleDesc {
        kind: Kind::Crossed,
        l: None,
        tau_hat: None,
        beta_hat: None,
        peiffer: None,
        ..ModuleDesc::from_module(&m)
    };
    let crossed = desc.build().unwrap();
    let rep = crossed.validate();
    assert!(!rep.valid);
    assert!(rep.residual("dcm2").unwrap() > 0.1);
    assert!(rep.residual("dcm1").unwrap() <= 1e-12);
}

#[test]
fn corrupted_boundary_map_fails_dcm1() {
    let m = xmod::identity_su2();
    let mut desc = ModuleDesc::from_module(&m);
    // scale one column of t: still linear, no longer equivariant
    desc.t_hat[0][0] = 2.0;
    let bad = desc.build().unwrap();
    let rep = bad.validate();
    assert!(!rep.valid);
    assert!(rep.residual("dcm1").unwrap() > 0.1);
}

#[test]
fn split_by_image_and_right_inverse() {
    let m = xmod::product();
    let t = &m.t_hat;
    let x = DVector::from_fn(m.g.dim, |i, _| (i as f64 + 1.0) * 0.37 - 1.0);
    let (top, perp) = t.split_by_image(&x).unwrap();
    assert!((&top + &perp - &x).amax() < 1e-14);
    assert!(m.g.ip(&top, &perp).abs() < 1e-12);
    // top is hit exactly by the right inverse
    let pre = t.right_inverse() * &top;
    assert!((t.apply(&pre) - &top).amax() < 1e-12);
    // the preimage is orthogonal to the kernel (minimal norm)
    for k in 0..t.kernel_basis.ncols() {
        assert!(m.h.ip(&pre, &t.kernel_basis.column(k).into_owned()).abs() < 1e-12);
    }
    assert_eq!(t.kernel_basis.ncols(), 3);
    assert_eq!(t.image_basis.ncols(), 3);
}

#[test]
fn split_rejects_wrong_length() {
    let m = xmod::product();
    assert!(m.t_hat.split_by_image(&DVector::zeros(2)).is_err());
}

#[test]
fn kernel_dimensions_of_registry() {
    let dims = |m: &CrossedModule| (m.t_hat.kernel_basis.ncols(), m.tau_hat.kernel_basis.ncols());
    assert_eq!(dims(&xmod::product()).0, 3);
    assert_eq!(dims(&xmod::rep_two_crossed()), (0, 3));
    assert_eq!(dims(&xmod::mixed()), (6, 3));
    assert_eq!(dims(&xmod::peiffer_su2()), (3, 0));
}

#[test]
fn non_homomorphism_is_measured() {
    let su2 = LieAlgebra::su2();
    let map = LinearLieMap::new(&su2, &su2, DMatrix::identity(3, 3) * 2.0).unwrap();
    assert!(map.homomorphism_residual > 0.5);
    let id = LinearLieMap::new(&su2, &su2, DMatrix::identity(3, 3)).unwrap();
    assert!(id.homomorphism_residual < 1e-14);
}

#[test]
fn module_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("hgt-algebra-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for (name, f) in xmod::registry() {
        let m = f();
        let path = dir.join(format!("{name}.json"));
        std::fs::write(&path, xmod::module_to_json(&m)).unwrap();
        let back = xmod::load_module(&path).unwrap();
        assert_eq!(back.hash(), m.hash());
        assert_eq!(back.validate().valid, true);
    }
    assert!(parse_module("{", "broken").is_err());
    std::fs::remove_dir_all(&dir).ok();
}
