use std::sync::Arc;

use hgt_core::grid::{Grid, GridForm};
use hgt_core::hodge::{gaffney_ratio, harmonic_dimension, hodge_decompose};
use hgt_core::jet::{JetForm, JetSpace};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-11;

fn random(m: usize, n: usize, k: usize, dim: usize, seed: u64) -> GridForm {
    let g = Arc::new(Grid::new(m, n));
    GridForm::random(&g, k, dim, 1.0, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn rel(a: &GridForm, b: &GridForm, scale: f64) -> f64 {
    a.sub(b).l2() / scale
}

#[test]
fn parts_are_fixed_by_a_second_decomposition() {
    let w = random(3, 5, 1, 2, 1);
    let s = hodge_decompose(&w, TOL).unwrap();
    let n = w.l2();
    let se = hodge_decompose(&s.exact, TOL).unwrap();
    assert!(rel(&se.exact, &s.exact, n) < 1e-8);
    assert!(se.coexact.l2() / n < 1e-8);
    let sc = hodge_decompose(&s.coexact, TOL).unwrap();
    assert!(rel(&sc.coexact, &s.coexact, n) < 1e-8);
    assert!(sc.exact.l2() / n < 1e-8);
}

#[test]
fn decomposition_is_linear() {
    let a = random(3, 4, 2, 1, 2);
    let b = random(3, 4, 2, 1, 3);
    let sum = a.scale(2.0).add(&b);
    let (sa, sb, ss) = (
        hodge_decompose(&a, TOL).unwrap(),
        hodge_decompose(&b, TOL).unwrap(),
        hodge_decompose(&sum, TOL).unwrap(),
    );
    let n = sum.l2();
    assert!(rel(&ss.exact, &sa.exact.scale(2.0).add(&sb.exact), n) < 1e-8);
    assert!(rel(&ss.coexact, &sa.coexact.scale(2.0).add(&sb.coexact), n) < 1e-8);
}

#[test]
fn every_degree_reconstructs_with_orthogonal_parts() {
    for k in 0..=3 {
        let w = random(3, 4, k, 1, 10 + k as u64);
        let d = hodge_decompose(&w, 1e-12).unwrap().diagnostics;
        assert!(d.reconstruction <= 1e-7, "k={k}");
        for o in [
            d.orth_exact_coexact,
            d.orth_exact_harmonic,
            d.orth_coexact_harmonic,
        ] {
            assert!(o <= 1e-6, "k={k}: {d:?}");
        }
    }
}

#[test]
fn only_constants_are_harmonic() {
    let g = Arc::new(Grid::new(3, 4));
    assert_eq!(harmonic_dimension(&g, 0, 4, 1).unwrap(), 1);
    for k in 1..=3 {
        assert_eq!(harmonic_dimension(&g, k, 4, 1).unwrap(), 0, "k={k}");
    }
}

#[test]
fn gaffney_ratio_is_scale_invariant() {
    let gram = DMatrix::identity(2, 2);
    let w = random(3, 4, 1, 2, 5);
    let r = gaffney_ratio(&w, &gram).unwrap();
    for s in [1e-3, 7.0, -2.0] {
        assert!((gaffney_ratio(&w.scale(s), &gram).unwrap() - r).abs() < 1e-12 * r);
    }
}

#[test]
fn gaffney_ratio_rejects_zero_and_constants() {
    let gram = DMatrix::identity(1, 1);
    let g = Arc::new(Grid::new(2, 4));
    assert!(gaffney_ratio(&GridForm::zero(&g, 1, 1), &gram).is_err());
    let mut c = GridForm::zero(&g, 0, 1);
    c.data.iter_mut().for_each(|v| *v = 1.0);
    let err = gaffney_ratio(&c, &gram).unwrap_err().to_string();
    assert!(err.contains("harmonic"), "{err}");
}

#[test]
fn gaffney_ratio_of_a_smooth_coexact_field_converges() {
    let gram = DMatrix::identity(1, 1);
    let sp = Arc::new(JetSpace::new(3, 4));
    let f = JetForm::random(&sp, 1, 1, 1.0, &mut ChaCha8Rng::seed_from_u64(6));
    let ratios: Vec<f64> = [8usize, 16]
        .iter()
        .map(|&n| {
            let g = Arc::new(Grid::new(3, n));
            let c = hodge_decompose(&GridForm::sample(&g, &f), 1e-12)
                .unwrap()
                .coexact;
            gaffney_ratio(&c, &gram).unwrap()
        })
        .collect();
    assert!(
        ratios.iter().all(|r| r.is_finite() && *r < 20.0),
        "{ratios:?}"
    );
    assert!(
        (ratios[0] - ratios[1]).abs() < 0.2 * ratios[1],
        "{ratios:?}"
    );
}

#[test]
fn zero_normal_trace_survives_codiff() {
    for (m, k) in [(2usize, 1usize), (3, 2), (3, 3), (4, 2)] {
        let mut b = random(m, 4, k, 1, 40 + k as u64);
        for f in b.boundary_traces() {
            for (v, nv) in b.data.iter_mut().zip(&f.normal.data) {
                if *nv != 0.0 {
                    *v = 0.0;
                }
            }
        }
        assert_eq!(b.normal_trace_norm(), 0.0);
        assert!(b.l2() > 0.0);
        assert!(
            b.codiff().normal_trace_norm() <= 1e-14 * b.codiff().l2(),
            "m={m} k={k}"
        );
    }
}
