use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;

use sparsewiener::params::{Anisotropy, Exponent};
use sparsewiener::quasi_interp::{apply_eta, apply_p, apply_q, apply_q_direct};
use sparsewiener::spectral::{alias, block_of, block_range, in_d, FreqIndex, Level, SpectralFunction};
use sparsewiener::{builtin_scheme, builtin_schemes, wiener_norm, NormParams, SparseIndexSet};

fn function(d: usize, width: i64, max_terms: usize) -> impl Strategy<Value = SpectralFunction> {
    let term = (prop::collection::vec(-width..=width, d), -1.0..1.0f64, -1.0..1.0f64);
    prop::collection::vec(term, 0..=max_terms).prop_map(move |terms| {
        let coeffs = terms
            .into_iter()
            .map(|(k, re, im)| (FreqIndex::new(k), Complex64::new(re, im)));
        SpectralFunction::from_coeffs(d, coeffs).unwrap()
    })
}

fn scheme_index() -> impl Strategy<Value = usize> {
    0..builtin_schemes().len()
}

fn close(a: &SpectralFunction, b: &SpectralFunction, scale: f64) -> bool {
    a.sub(b).unwrap().a1_norm() <= 1e-11 * scale.max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alias_lands_in_d_and_preserves_residue(m in -100_000i64..100_000, j in 0u32..12) {
        let a = alias(m, j);
        prop_assert!(in_d(j, a));
        prop_assert_eq!((m - a).rem_euclid(1i64 << j), 0);
        if in_d(j, m) {
            prop_assert_eq!(a, m);
        }
    }

    #[test]
    fn blocks_partition_the_integers(m in -100_000i64..100_000) {
        let (lo, hi) = block_range(block_of(m));
        prop_assert!(lo <= m.abs() && m.abs() <= hi);
    }

    #[test]
    fn q_is_linear(
        s in scheme_index(),
        j in 0u32..7,
        f in function(1, 200, 12),
        g in function(1, 200, 12),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
    ) {
        let scheme = &builtin_schemes()[s];
        let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(0.0, b));
        let lhs = apply_q(scheme, j, 0, &f.combine(ca, &g, cb).unwrap()).unwrap();
        let rhs = apply_q(scheme, j, 0, &f).unwrap().combine(ca, &apply_q(scheme, j, 0, &g).unwrap(), cb).unwrap();
        prop_assert!(close(&lhs, &rhs, f.a1_norm() + g.a1_norm()));
    }

    #[test]
    fn aliasing_and_sampling_agree(s in scheme_index(), j in 0u32..7, f in function(1, 500, 10)) {
        let scheme = &builtin_schemes()[s];
        let fast = apply_q(scheme, j, 0, &f).unwrap();
        let slow = apply_q_direct(scheme, j, 0, &f).unwrap();
        prop_assert!(close(&fast, &slow, fast.a1_norm()));
    }

    #[test]
    fn lagrange_reproduces_its_own_space(j in 0u32..8, f in function(1, 3, 8)) {
        // Frequencies in [−3, 3] ⊂ D_j from j = 3 on.
        let lag = builtin_scheme("lagrange").unwrap();
        let q = apply_q(&lag, j.max(3), 0, &f).unwrap();
        prop_assert!(close(&q, &f, f.a1_norm()));
    }

    #[test]
    fn eta_telescopes_to_the_box(n in 0u32..5, f in function(2, 20, 10)) {
        // Σ_{j ≤ (n,n)} η_j = Q_n ⊗ Q_n, which is P on the full box.
        let lag = builtin_scheme("lagrange").unwrap();
        let full = SparseIndexSet::full_box(n, 2);
        let mut sum = SpectralFunction::zero(2);
        for j in full.members() {
            sum = sum.add(&apply_eta(&lag, j, &f).unwrap().into_function()).unwrap();
        }
        let direct = apply_p(&lag, &full, &f).unwrap();
        prop_assert!(close(&sum, &direct, f.a1_norm()));
    }

    #[test]
    fn delta_sets_are_nested_and_downward_closed(n in 0u32..10, t in -2.0..0.9f64, d in 1usize..4) {
        let t = Anisotropy::new(t).unwrap();
        let small = SparseIndexSet::delta(f64::from(n), t, d).unwrap();
        let big = SparseIndexSet::delta(f64::from(n + 1), t, d).unwrap();
        prop_assert!(small.is_downward_closed());
        prop_assert!(small.members().iter().all(|k| big.contains(k)));
        prop_assert!(small.contains(&Level::zero(d)));
    }

    #[test]
    fn norms_are_homogeneous_and_subadditive(
        f in function(2, 64, 10),
        g in function(2, 64, 10),
        c in 1e-3..1e3f64,
        alpha in 0.0..3.0f64,
        beta in -1.0..2.0f64,
        q in prop::sample::select(vec![1.0, 1.5, 2.0, f64::INFINITY]),
    ) {
        let params = NormParams::hybrid(Exponent::new(q).unwrap(), alpha, beta);
        let nf = wiener_norm(&f, params).unwrap().norm;
        let ng = wiener_norm(&g, params).unwrap().norm;
        let scaled = wiener_norm(&f.scale(Complex64::new(0.0, c)), params).unwrap().norm;
        assert_relative_eq!(scaled, c * nf, max_relative = 1e-12);
        let sum = wiener_norm(&f.add(&g).unwrap(), params).unwrap().norm;
        prop_assert!(sum <= (nf + ng) * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn json_round_trip_is_exact(f in function(3, 1000, 20)) {
        let back = SpectralFunction::from_json_str(&f.to_json_string().unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn smolyak_lagrange_reproduces_covered_blocks(n in 1u32..7, f in function(2, 40, 12)) {
        let lag = builtin_scheme("lagrange").unwrap();
        // Smallest j with m ∈ D_j, summed over the axes.
        let level = |m: i64| (0..).find(|&j| in_d(j, m)).unwrap();
        let top: u32 = f.iter().map(|(k, _)| k.iter().map(|&m| level(m)).sum()).max().unwrap_or(0);
        let set = SparseIndexSet::delta(f64::from(n.max(top)), Anisotropy::Finite(0.0), 2).unwrap();
        let err = f.sub(&apply_p(&lag, &set, &f).unwrap()).unwrap().a1_norm();
        prop_assert!(err <= 1e-11 * f.a1_norm().max(1.0));
    }
}
