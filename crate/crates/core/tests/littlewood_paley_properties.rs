use gsqg_core::inequality::EnsembleSpec;
use gsqg_core::littlewood_paley::*;
use gsqg_core::spectral::*;
use proptest::prelude::*;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n).unwrap()
}

fn sample(n: usize, seed: u64, k_max: f64) -> RealField {
    EnsembleSpec::new(grid(n), 1, seed, 1.5, 1.0, k_max).unwrap().sample(0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn blocks_reconstruct_the_field(seed in 0u64..10_000) {
        let f = sample(64, seed, 32.0);
        let p = build_partition(*f.grid());
        let blocks = dyadic_blocks(&f, &p).unwrap();
        let refs: Vec<&RealField> = blocks.iter().collect();
        let sum = RealField::linear_combination(&vec![1.0; refs.len()], &refs).unwrap();
        prop_assert!(sum.sub(&f).unwrap().max_abs() <= 1e-10 * f.max_abs());
    }

    #[test]
    fn distant_blocks_are_disjoint(seed in 0u64..10_000) {
        let f = sample(64, seed, 32.0);
        let p = build_partition(*f.grid());
        for j in p.indices() {
            let fj = dyadic_block(&f, j, &p).unwrap();
            for i in p.indices().filter(|i| (i - j).abs() >= 2) {
                let fij = dyadic_block(&fj, i, &p).unwrap();
                prop_assert!(fij.max_abs() <= 1e-12 * f.max_abs());
            }
        }
    }

    #[test]
    fn blocks_commute_with_fractional_powers(seed in 0u64..10_000, s in -2.0f64..2.0) {
        let f = sample(32, seed, 14.0);
        let p = build_partition(*f.grid());
        let lam = |g: &RealField| inverse_transform(&fractional_laplacian(&forward_transform(g).unwrap(), s).unwrap()).unwrap();
        let lf = lam(&f);
        for j in p.indices() {
            let a = dyadic_block(&lf, j, &p).unwrap();
            let b = lam(&dyadic_block(&f, j, &p).unwrap());
            prop_assert!(a.sub(&b).unwrap().max_abs() <= 1e-12 * lf.max_abs().max(f.max_abs()));
        }
    }

    #[test]
    fn besov_norm_is_monotone_in_s(seed in 0u64..10_000, s in -1.0f64..3.0, ds in 0.0f64..2.0, pi in 0usize..3, qi in 0usize..3) {
        // The j = -1 block carries weight 2^{-s}; scaling by 2^{s - s_low} makes
        // the comparison block-by-block.
        let ps = [1.0, 2.0, f64::INFINITY];
        let f = sample(32, seed, 14.0);
        let part = build_partition(*f.grid());
        let hi = besov_norm(&f, BesovParams::new(s, ps[pi], ps[qi]).unwrap(), &part).unwrap();
        let lo = besov_norm(&f, BesovParams::new(s - ds, ps[pi], ps[qi]).unwrap(), &part).unwrap();
        prop_assert!(lo <= hi * 2f64.powf(ds) * (1.0 + 1e-12));
    }
}

#[test]
fn besov_monotone_without_low_block() {
    let g = grid(32);
    let part = build_partition(g);
    // Frequencies |k| >= 2 avoid the j = -1 block entirely.
    let spec = EnsembleSpec::new(g, 5, 8, 1.0, 2.0, 14.0).unwrap();
    for i in 0..5 {
        let f = spec.sample(i).unwrap();
        assert!(dyadic_block(&f, -1, &part).unwrap().max_abs() < 1e-14);
        for (p, q) in [(2.0, 2.0), (4.0, 1.0), (f64::INFINITY, f64::INFINITY)] {
            let mut prev = 0.0;
            for s in [-1.0, 0.0, 0.5, 1.5, 2.5] {
                let b = besov_norm(&f, BesovParams::new(s, p, q).unwrap(), &part).unwrap();
                assert!(b >= prev * (1.0 - 1e-12));
                prev = b;
            }
        }
    }
}

#[test]
fn besov_and_sobolev_norms_are_equivalent() {
    for n in [32, 64] {
        let e = EnsembleSpec::new(grid(n), 100, 17, 2.5, 1.0, 10.0).unwrap();
        let part = build_partition(e.grid);
        for s in [0.0, 1.0, 2.0, 2.5] {
            let r: Vec<f64> = (0..100)
                .map(|i| {
                    let f = e.sample(i).unwrap();
                    besov_norm(&f, BesovParams::sobolev(s), &part).unwrap() / sobolev_norm(&f, s).unwrap()
                })
                .collect();
            let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = r.iter().copied().fold(0.0, f64::max);
            assert!(lo > 0.0 && hi / lo <= 4.0, "n {n} s {s}: [{lo}, {hi}]");
        }
    }
}

#[test]
fn lebesgue_embedding_ratio_is_bounded() {
    let e = EnsembleSpec::new(grid(64), 50, 4, 2.0, 1.0, 21.0).unwrap();
    let part = build_partition(e.grid);
    let s = 1.5;
    for pt in [4.0, f64::INFINITY] {
        let target = BesovParams::new(s - 2.0 * (0.5 - 1.0 / pt), pt, 2.0).unwrap();
        let mut sup = 0.0f64;
        for i in 0..50 {
            let f = e.sample(i).unwrap();
            let r = besov_norm(&f, target, &part).unwrap() / besov_norm(&f, BesovParams::new(s, 2.0, 2.0).unwrap(), &part).unwrap();
            sup = sup.max(r);
        }
        assert!(sup.is_finite() && sup < 10.0, "p {pt}: {sup}");
    }
}

#[test]
fn sobolev_examples() {
    let g = grid(32);
    let f = RealField::from_fn(g, |x, _| x.sin()).unwrap();
    for s in [-1.0, 0.0, 1.0, 2.0, 2.5, 4.0] {
        assert!((sobolev_norm(&f, s).unwrap() - 2f64.powf((s - 1.0) / 2.0)).abs() < 1e-12);
    }
    let h = RealField::from_fn(g, |x, _| (2.0 * x).sin()).unwrap();
    assert!((sobolev_norm(&h, 1.0).unwrap() - 2.5f64.sqrt()).abs() < 1e-12);
    let r = sample(32, 1, 14.0);
    assert!((sobolev_norm(&r, 0.0).unwrap() - lp_norm(&r, 2.0).unwrap()).abs() < 1e-12 * lp_norm(&r, 2.0).unwrap());
}
