use std::sync::Arc;

use hgt_core::grid::{io, Grid, GridForm};
use hgt_core::{linalg, xmod};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shape() -> impl Strategy<Value = (usize, usize, usize, u64)> {
    (2usize..=4, 1usize..=4, any::<u64>())
        .prop_flat_map(|(m, n, seed)| (Just(m), Just(n), 0..=m, Just(seed)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn d_squared_vanishes((m, n, k, seed) in shape()) {
        prop_assume!(k + 2 <= m);
        let g = Arc::new(Grid::new(m, n));
        let w = GridForm::random(&g, k, 2, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(w.d().d().max_abs() <= 1e-12);
    }

    #[test]
    fn binary_files_round_trip((m, n, k, seed) in shape(), dim in 1usize..4) {
        let g = Arc::new(Grid::new(m, n));
        let w = GridForm::random(&g, k, dim, 1.0, &mut ChaCha8Rng::seed_from_u64(seed));
        let mut buf = Vec::new();
        io::write_binary(&mut buf, &io::to_file(&w, "a")).unwrap();
        let back = io::from_file(&io::read_binary(&mut buf.as_slice()).unwrap(), None).unwrap();
        prop_assert_eq!(back.data, w.data);
    }

    #[test]
    fn log_inverts_exp(coords in prop::collection::vec(-1.0f64..1.0, 3), scale in 0.01f64..2.0) {
        let m = xmod::identity_su2();
        let x = DVector::from_vec(coords) * scale;
        let e = m.group_exp(&x);
        let back = m.g.coords(&linalg::logm(&e.fund)).0;
        prop_assert!((back - x).amax() <= 1e-10);
    }
}
