//! Property tests: structural invariants that must hold for every admissible
//! input, exercised over randomized dimensions and data.

mod common;

use common::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use hankel_pe::linalg::{self, DEFAULT_RANK_RTOL};
use hankel_pe::pe;
use hankel_pe::structmat;
use hankel_pe::Signal;

fn signal_strategy(
    dim_range: std::ops::RangeInclusive<usize>,
    len_range: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = Signal> {
    (dim_range, len_range).prop_flat_map(|(q, len)| {
        proptest::collection::vec(-10.0f64..10.0, q * len)
            .prop_map(move |v| Signal::new(DMatrix::from_vec(q, len, v)).unwrap())
    })
}

proptest! {
    #[test]
    fn hankel_columns_reproduce_windows(
        u in signal_strategy(1..=3, 6..=20),
        depth in 1usize..=4,
    ) {
        prop_assume!(u.len() >= depth);
        let h = pe::hankel(&u, depth).unwrap();
        prop_assert_eq!(h.matrix().ncols(), u.len() - depth + 1);
        for j in 0..h.matrix().ncols() {
            let col = h.matrix().column(j).into_owned();
            let win = u.window(j, j + depth - 1);
            prop_assert_eq!(col, win);
        }
    }

    #[test]
    fn gram_routes_agree(
        u in signal_strategy(1..=3, 6..=20),
        depth in 1usize..=4,
    ) {
        prop_assume!(u.len() >= depth);
        let g1 = pe::pe_gram(&u, depth).unwrap();
        let g2 = pe::pe_gram_window_sum(&u, depth).unwrap();
        prop_assert!((&g1 - &g2).norm() <= 1e-12 * (1.0 + g1.norm()));
        prop_assert!(linalg::is_symmetric(&g1, 1e-12 * (1.0 + g1.norm())));
        prop_assert!(linalg::min_eig_sym(&g1) >= -1e-9 * (1.0 + g1.norm()));
    }

    #[test]
    fn rank_pe_iff_quantitative_pe(
        u in signal_strategy(1..=2, 10..=30),
        depth in 1usize..=3,
    ) {
        prop_assume!(u.len() >= depth);
        let rank_pe = pe::pe_order_check(&u, depth, DEFAULT_RANK_RTOL).unwrap();
        let g = pe::pe_gram(&u, depth).unwrap();
        let lam = linalg::min_eig_sym(&g);
        if rank_pe {
            // Some strictly positive multiple of the identity is admissible.
            prop_assert!(lam > 0.0);
            let k = DMatrix::identity(g.nrows(), g.nrows()).scale(0.5 * lam);
            let cert = pe::kpe_check(&u, depth, &k, 1e-9 * (1.0 + g.norm())).unwrap();
            prop_assert!(cert.satisfied(1e-9 * (1.0 + g.norm())));
        } else {
            // No positive-definite floor can sit below a singular Gram.
            prop_assert!(lam <= 1e-6 * (1.0 + g.norm()));
        }
    }

    #[test]
    fn simulate_bitwise_deterministic(seed in 0u64..1_000_000) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, 3, 2, 2);
        let x0 = gaussian_vector(&mut r, 3);
        let u = gaussian_signal(&mut r, 2, 12);
        let (x1, y1) = sys.simulate(&x0, &u).unwrap();
        let (x2, y2) = sys.simulate(&x0, &u).unwrap();
        prop_assert_eq!(x1.matrix(), x2.matrix());
        prop_assert_eq!(y1.matrix(), y2.matrix());
    }

    #[test]
    fn window_identity_holds_along_trajectories(seed in 0u64..1_000_000) {
        // M applied to an input window equals the output window paired with
        // the annihilating coefficients, for every admissible anchor.
        let mut r = rng(seed);
        let sys = random_system(&mut r, 3, 2, 2);
        let x0 = gaussian_vector(&mut r, 3);
        let u = gaussian_signal(&mut r, 2, 15);
        let (_, y) = sys.simulate(&x0, &u).unwrap();
        let m = structmat::build_m(&sys);
        let d = sys.annihilating_polynomial();
        let n = sys.n();
        for k in n..u.len() {
            let lhs = &m * u.window(k - n, k);
            let mut rhs = DVector::zeros(sys.p());
            for (i, c) in d.coeffs().iter().enumerate() {
                rhs += y.sample(k - n + i).scale(*c);
            }
            prop_assert!((lhs - &rhs).norm() <= 1e-8 * (1.0 + y.sup_norm()));
        }
    }

    #[test]
    fn annihilating_polynomial_is_normalized(seed in 0u64..1_000_000) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, 4, 1, 1);
        let d = sys.annihilating_polynomial();
        prop_assert_eq!(d.order(), 4);
        prop_assert!((d.coeffs().norm() - 1.0).abs() <= 1e-12);
        prop_assert!(d.d0() != 0.0);
    }

    #[test]
    fn t_rows_carry_shifted_coefficients(depth in 2usize..=6, seed in 0u64..1_000) {
        let mut r = rng(seed);
        let sys = random_system(&mut r, 3, 1, 1);
        let d = sys.annihilating_polynomial();
        let t = structmat::build_t(&d, depth);
        prop_assert_eq!(t.nrows(), depth - 1);
        prop_assert_eq!(t.ncols(), depth + 3 - 1);
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                let expect = if j >= i && j <= i + 3 { d.coeffs()[j - i] } else { 0.0 };
                prop_assert_eq!(t[(i, j)], expect);
            }
        }
    }
}
