use proptest::prelude::*;

use recap::data::{builtin_hare, Point};
use recap::dist::{binom_logpmf, poisbinom_logpmf, rng_stream, ztbinom_logpmf, ProbVector};
use recap::engine::{NModelKind, NModelSpec};
use recap::models::m0::{m0_n_logpmf, M0Params};
use recap::models::scr::{
    scr_detection_prob, scr_n_logpmf_mc, scr_stage1_logtarget, ScrIntensity, ScrParams, ScrPriors,
};

fn pb_pmf(probs: &[f64]) -> Vec<f64> {
    let pv = ProbVector::new(probs.to_vec()).unwrap();
    (0..=probs.len()).map(|k| poisbinom_logpmf(k, &pv).exp()).collect()
}

fn hare_params(seed: &[(f64, f64)], beta0: f64, beta1: f64, psi: f64) -> ScrParams {
    let r = *builtin_hare().region();
    let centers = seed.iter().map(|&(u, v)| r.from_unit(u, v)).collect();
    ScrParams { centers, beta0, beta1, psi }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ztbinom_normalizes(j in 1u64..=20, p in 1e-6f64..0.999_999) {
        let total: f64 = (1..=j).map(|y| ztbinom_logpmf(y, j, p).unwrap().exp()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "J={} p={}: {}", j, p, total);
    }

    #[test]
    fn poisbinom_is_a_distribution_with_the_right_mean(probs in prop::collection::vec(0.0f64..=1.0, 0..40)) {
        let pmf = pb_pmf(&probs);
        let total: f64 = pmf.iter().sum();
        let mean: f64 = pmf.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!((mean - probs.iter().sum::<f64>()).abs() < 1e-9);
    }

    #[test]
    fn poisbinom_ignores_order(probs in prop::collection::vec(0.0f64..=1.0, 1..25), rot in 0usize..25) {
        let mut other = probs.clone();
        other.reverse();
        let len = other.len();
        other.rotate_left(rot % len);
        let (a, b) = (pb_pmf(&probs), pb_pmf(&other));
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn poisbinom_certain_trials_shift(probs in prop::collection::vec(0.01f64..0.99, 1..15)) {
        let base = pb_pmf(&probs);
        let mut with = probs.clone();
        with.extend([0.0, 1.0]);
        let shifted = pb_pmf(&with);
        prop_assert!(shifted[0] == 0.0);
        for (k, p) in base.iter().enumerate() {
            prop_assert!((shifted[k + 1] - p).abs() < 1e-12);
        }
    }

    #[test]
    fn poisbinom_equal_probs_is_binomial(m in 1usize..200, p in 0.0f64..=1.0) {
        let pmf = pb_pmf(&vec![p; m]);
        for (k, v) in pmf.iter().enumerate() {
            prop_assert!((v - binom_logpmf(k as u64, m as u64, p).unwrap().exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn binomial_n_model_approaches_poisson(p in 0.05f64..0.9, mean_members in 2.0f64..20.0) {
        // psi M fixed, M growing: Binom(M, pi) -> Pois(pi M).
        let j = 4;
        let m = 200_000usize;
        let params = M0Params { p, psi: mean_members / m as f64 };
        let tv: f64 = 0.5 * (0..200u64)
            .map(|n| {
                let b = m0_n_logpmf(params, n, NModelSpec::new(NModelKind::Binomial, m), j).exp();
                let q = m0_n_logpmf(params, n, NModelSpec::new(NModelKind::Poisson, m), j).exp();
                (b - q).abs()
            })
            .sum::<f64>();
        prop_assert!(tv < 1e-3, "tv {}", tv);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scr_target_is_invariant_to_rigid_motions(
        seed in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 13),
        beta0 in -4.0f64..0.0,
        beta1 in -5e-4f64..-1e-6,
        psi in 0.05f64..0.95,
        dx in -1e4f64..1e4,
        dy in -1e4f64..1e4,
    ) {
        let data = builtin_hare();
        let params = hare_params(&seed, beta0, beta1, psi);
        let priors = ScrPriors::default();
        let base = scr_stage1_logtarget(&params, &data, &priors);
        let motions: [Box<dyn Fn(Point) -> Point>; 3] = [
            Box::new(move |p| [p[0] + dx, p[1] + dy]),
            Box::new(|p| [-p[1], p[0]]),
            Box::new(|p| [-p[0], -p[1]]),
        ];
        for f in motions {
            let moved = data.map_coordinates(&f).unwrap();
            let moved_params = ScrParams { centers: params.centers.iter().map(|&s| f(s)).collect(), ..params.clone() };
            let other = scr_stage1_logtarget(&moved_params, &moved, &priors);
            prop_assert!((base - other).abs() <= 1e-9 * base.abs().max(1.0), "{} vs {}", base, other);
        }
    }

    #[test]
    fn scr_n_pmf_is_invariant_to_translation(
        seed in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 13),
        beta0 in -4.0f64..-1.0,
        psi in 0.1f64..0.9,
        dx in -500.0f64..500.0,
        dy in -500.0f64..500.0,
    ) {
        let data = builtin_hare();
        let params = hare_params(&seed, beta0, -1e-4, psi);
        let moved = data.map_coordinates(|p| [p[0] + dx, p[1] + dy]).unwrap();
        let moved_params = ScrParams { centers: params.centers.iter().map(|s| [s[0] + dx, s[1] + dy]).collect(), ..params.clone() };
        for kind in [NModelKind::Poisson, NModelKind::PoissonBinomial] {
            let spec = NModelSpec::new(kind, 50);
            let a = scr_n_logpmf_mc(&params, 13, spec, ScrIntensity::PerTrap, &data, 30, &mut rng_stream(9, 0)).unwrap();
            let b = scr_n_logpmf_mc(&moved_params, 13, spec, ScrIntensity::PerTrap, &moved, 30, &mut rng_stream(9, 0)).unwrap();
            prop_assert!((a - b).abs() < 1e-6, "{:?}: {} vs {}", kind, a, b);
        }
    }

    #[test]
    fn detection_depends_on_distance_only(
        beta0 in -5.0f64..3.0,
        beta1 in -1e-3f64..0.0,
        s in (-300.0f64..300.0, -300.0f64..300.0),
        x in (-300.0f64..300.0, -300.0f64..300.0),
    ) {
        let (s, x) = ([s.0, s.1], [x.0, x.1]);
        let a = scr_detection_prob(s, x, beta0, beta1);
        let rotated = scr_detection_prob([-s[1], s[0]], [-x[1], x[0]], beta0, beta1);
        let swapped = scr_detection_prob(x, s, beta0, beta1);
        prop_assert!((a - rotated).abs() < 1e-12 && (a - swapped).abs() < 1e-15);
        prop_assert!(a <= scr_detection_prob(x, x, beta0, beta1) + 1e-15);
    }
}
