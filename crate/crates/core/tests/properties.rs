mod common;

use common::*;
use eprb::census::{enumerate_deterministic, predictability_census};
use eprb::fine::{fine_construct, is_instance_bell_real, vertex_matrix};
use eprb::hidden::{bell_local_embed, combined_pmf, hidden_marginal};
use eprb::instance_file::parse_instance;
use eprb::locality::{check_fc, Flag};
use eprb::model::{
    bell_local_gamma, bell_real_gamma, chsh_satisfied, correlations, qm_gamma, s_functions, BellLocalParams,
    BellRealParams, CorrelationVector, DetectorProbs, GenericParams, QmAngles,
};
use eprb::qm::{achievability, is_bell_local_achievable, sbar, sbar_fd_gradient, sbar_gradient};
use eprb::scalar::{format_rational, parse_rational};
use eprb::sim::{estimate, read_csv, write_csv, Simulator};
use eprb::{Rational, Scalar};
use proptest::prelude::*;

const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

fn pmf<const N: usize>() -> impl Strategy<Value = [f64; N]> {
    prop::array::uniform::<_, N>(0.0f64..1.0)
        .prop_filter("nonzero mass", |w| w.iter().sum::<f64>() > 1e-6)
        .prop_map(|w| {
            let total: f64 = w.iter().sum();
            w.map(|v| v / total)
        })
}

fn rational_pmf16() -> impl Strategy<Value = [Rational; 16]> {
    prop::array::uniform16(0i64..20)
        .prop_filter("nonzero mass", |w| w.iter().sum::<i64>() > 0)
        .prop_map(|w| {
            let total: i64 = w.iter().sum();
            w.map(|v| q(v, total))
        })
}

fn gamma() -> impl Strategy<Value = GenericParams<f64>> {
    prop::array::uniform4(pmf::<4>()).prop_map(|cols| GenericParams::new(std::array::from_fn(|k| cols[k % 4][k / 4])).unwrap())
}

fn local() -> impl Strategy<Value = BellLocalParams<f64>> {
    prop::array::uniform4(0.0f64..=1.0).prop_map(|p| BellLocalParams::from_minus_probs(p[0], p[1], p[2], p[3]).unwrap())
}

fn delta() -> impl Strategy<Value = DetectorProbs<f64>> {
    pmf::<4>().prop_map(|d| DetectorProbs::new(d.map(|v| 0.02 + 0.92 * v)).unwrap())
}

fn angle() -> impl Strategy<Value = f64> {
    (-90.0f64..=90.0).prop_map(f64::to_radians)
}

proptest! {
    #[test]
    fn correlations_and_s_are_bounded(g in gamma()) {
        let c = correlations(&g).to_f64();
        prop_assert!(c.iter().all(|v| v.abs() <= 1.0 + 1e-12));
        prop_assert!(oracle_s(c).iter().all(|v| v.abs() <= 4.0 + 1e-12));
        prop_assert_eq!(c, oracle_correlations(g.as_array()));
    }

    #[test]
    fn bell_real_and_local_respect_chsh(rho in pmf::<16>(), p in local()) {
        let g = bell_real_gamma(&BellRealParams::new(rho).unwrap());
        prop_assert!(oracle_s(oracle_correlations(g.as_array())).iter().all(|s| s.abs() <= 2.0 + 1e-12));
        let g = bell_local_gamma(&p);
        prop_assert!(oracle_s(oracle_correlations(g.as_array())).iter().all(|s| s.abs() <= 2.0 + 1e-12));
    }

    #[test]
    fn qm_stays_within_tsirelson(t2 in angle(), t3 in angle(), t4 in angle()) {
        let g = qm_gamma::<f64>(&QmAngles::from_radians(t2, t3, t4).unwrap());
        let s = s_functions(&correlations(&g)).to_f64();
        prop_assert!(s.iter().all(|v| v.abs() <= TSIRELSON + 1e-9));
        for k in 1..=4 {
            prop_assert!((sbar(k, [t2, t3, t4]) - s[k - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn sbar_gradient_matches_finite_differences(t2 in angle(), t3 in angle(), t4 in angle(), k in 1usize..=4) {
        let g = sbar_gradient(k, [t2, t3, t4]);
        let fd = sbar_fd_gradient(k, [t2, t3, t4], 1e-6);
        prop_assert!((0..3).all(|i| (g[i] - fd[i]).abs() < 1e-5));
    }

    #[test]
    fn fine_round_trip_on_feasible_vectors(p in prop::array::uniform4(-1.0f64..=1.0)) {
        let cv = CorrelationVector::new(p).unwrap();
        match fine_construct(&cv) {
            Ok(r) => {
                prop_assert!(oracle_chsh(p) || oracle_s(p).iter().all(|s| s.abs() <= 2.0 + 1e-9));
                let back = oracle_correlations(r.gamma.as_array());
                prop_assert!((0..4).all(|i| (back[i] - p[i]).abs() < 1e-9));
                prop_assert!(r.lambda.weights.iter().all(|l| *l >= -1e-12));
            }
            Err(_) => prop_assert!(!oracle_chsh(p)),
        }
    }

    #[test]
    fn bell_real_instances_satisfy_chsh(rho in rational_pmf16()) {
        let g = bell_real_gamma(&BellRealParams::new(rho).unwrap());
        prop_assert!(is_instance_bell_real(&g));
        prop_assert!(chsh_satisfied(&correlations(&g), 0.0));
    }

    #[test]
    fn embedding_preserves_gamma_and_factorizes(a in 0i64..=8, b in 0i64..=8, c in 0i64..=8, d in 0i64..=8) {
        let p = BellLocalParams::from_minus_probs(q(a, 8), q(b, 8), q(c, 8), q(d, 8)).unwrap();
        let rho = bell_local_embed(&p);
        prop_assert_eq!(bell_real_gamma(&rho), bell_local_gamma(&p));
        prop_assert_eq!(check_fc(&bell_real_gamma(&rho), &DetectorProbs::uniform(), 0.0).flag, Flag::Holds);
    }

    #[test]
    fn hidden_marginal_recovers_rho(rho in rational_pmf16()) {
        let rho = BellRealParams::new(rho).unwrap();
        let c = combined_pmf(&rho, &DetectorProbs::<Rational>::new([q(1, 2), q(1, 6), q(1, 6), q(1, 6)]).unwrap());
        prop_assert_eq!(&hidden_marginal(&c), rho.as_array());
    }

    #[test]
    fn rank_one_correlations_are_local_and_chsh(u in prop::array::uniform2(-1.0f64..=1.0), v in prop::array::uniform2(-1.0f64..=1.0)) {
        let p = [u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]];
        let w = is_bell_local_achievable(p);
        prop_assert!(w.is_some());
        prop_assert!(oracle_s(p).iter().all(|s| s.abs() <= 2.0 + 1e-12));
        let back = oracle_correlations(bell_local_gamma(&w.unwrap()).as_array());
        prop_assert!((0..4).all(|i| (back[i] - p[i]).abs() <= 1e-9));
    }

    #[test]
    fn achievability_witnesses_round_trip(p in prop::array::uniform4(-1.0f64..=1.0)) {
        let v = achievability(p);
        prop_assert!(!v.bell_local || v.bell_real);
        if let Some(t) = v.qm_witness {
            let c = t.map(|d| (2.0 * d.to_radians()).cos());
            prop_assert!((0..4).all(|i| (c[i] - p[i]).abs() <= 1e-9));
        }
        if let Some(rho) = v.bell_real_witness {
            let c = oracle_correlations(&oracle_bell_real_gamma(&rho.map(Rational::from_f64)));
            prop_assert!((0..4).all(|i| (c[i] - p[i]).abs() <= 1e-9));
        }
    }

    #[test]
    fn rational_format_parse_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let r = q(n, d);
        prop_assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
    }

    #[test]
    fn decimal_strings_parse_exactly(n in -1_000_000i64..1_000_000, scale in 0u32..6) {
        let text = format!("{}e-{}", n, scale);
        prop_assert_eq!(parse_rational(&text).unwrap(), q(n, 10i64.pow(scale)));
    }

    #[test]
    fn tally_merge_is_associative_and_commutative(seeds in prop::array::uniform3(any::<u64>())) {
        let sim = Simulator::new(&GenericParams::minimal(), &DetectorProbs::uniform());
        let [a, b, c] = seeds.map(|s| sim.tally(500, s));
        prop_assert_eq!(a.merge(b).merge(c), a.merge(b.merge(c)));
        prop_assert_eq!(a.merge(b), b.merge(a));
    }

    #[test]
    fn simulation_is_deterministic_under_seed(g in gamma(), d in delta(), seed in any::<u64>()) {
        let sim = Simulator::new(&g, &d);
        let a: Vec<_> = sim.records(300, seed).collect();
        let b: Vec<_> = sim.records(300, seed).collect();
        prop_assert_eq!(&a, &b);
        let mut buf = Vec::new();
        write_csv(a.iter().copied(), &mut buf).unwrap();
        prop_assert_eq!(read_csv(buf.as_slice()).unwrap(), a);
    }

    #[test]
    fn instance_file_accepts_any_valid_gamma(cols in prop::array::uniform4(prop::array::uniform4(0i64..9))) {
        prop_assume!(cols.iter().all(|c| c.iter().sum::<i64>() > 0));
        let entries: Vec<String> = (0..16)
            .map(|k| format!("\"{}/{}\"", cols[k % 4][k / 4], cols[k % 4].iter().sum::<i64>()))
            .collect();
        let text = format!(r#"{{"type":"generic","params":{{"gamma":[{}]}}}}"#, entries.join(","));
        let spec = parse_instance(&text).unwrap();
        let g = spec.gamma_exact();
        for k in 0..16 {
            prop_assert_eq!(g.as_array()[k].clone(), q(cols[k % 4][k / 4], cols[k % 4].iter().sum()));
        }
    }
}

#[test]
fn vertex_columns_sit_on_the_chsh_boundary() {
    let mut grid: Vec<Rational> = vec![q(-1, 1), q(1, 1)];
    grid.extend((1..20).map(|k| q(-1, 1) + q(k, 10)));
    for w in grid {
        for col in vertex_matrix(&w).unwrap().columns {
            let s = oracle_s(col.clone().map(|v| v.to_f64()));
            assert_eq!(s.iter().fold(0.0f64, |m, v| m.max(v.abs())), 2.0, "w = {w}");
        }
    }
}

#[test]
fn deterministic_census_properties() {
    let records = enumerate_deterministic();
    assert_eq!(records, enumerate_deterministic());
    for r in &records {
        let g = r.instance.gamma::<Rational>();
        let c = oracle_correlations(g.as_array());
        assert!(c.iter().all(|v| v.abs() == 1.0));
        let s = oracle_s(c);
        if r.type2 {
            assert!(s.iter().all(|v| v.abs() <= 2.0));
        } else {
            let mut sorted = s.map(f64::abs);
            sorted.sort_by(f64::total_cmp);
            assert_eq!(sorted, [0.0, 0.0, 0.0, 4.0]);
        }
        if r.type1 {
            // Bell-local preimage: deterministic one-sided outcomes read off the selection.
            let out = |setting: usize| r.instance.outcomes(setting);
            let minus = |s: eprb::model::Spin| q((s.value() == -1) as i64, 1);
            let p = BellLocalParams::from_minus_probs(minus(out(0).0), minus(out(2).0), minus(out(0).1), minus(out(1).1))
                .unwrap();
            let rho = bell_local_embed(&p);
            assert_eq!(bell_real_gamma(&rho), bell_local_gamma(&p));
            assert_eq!(bell_local_gamma(&p), g);
        }
    }
    assert_eq!(records.iter().filter(|r| r.type2 && !r.bell_real).count(), 112);
    let census = predictability_census(&records);
    assert_eq!(census, predictability_census(&enumerate_deterministic()));
}

#[test]
fn simulated_correlations_converge() {
    let mut weights = [1.0; 16];
    weights[0] = 4.0;
    weights[9] = 3.0;
    let total: f64 = weights.iter().sum();
    let g = bell_real_gamma(&BellRealParams::new(weights.map(|v| v / total)).unwrap());
    let truth = oracle_correlations(g.as_array());
    let sim = Simulator::new(&g, &DetectorProbs::uniform());
    let mut previous = f64::INFINITY;
    for n in [10_000u64, 100_000, 1_000_000] {
        let r = estimate(&sim.tally(n, 99), 5.0).unwrap();
        let errors: Vec<f64> = (0..4).map(|i| (r.correlations[i] - truth[i]).abs()).collect();
        for i in 0..4 {
            assert!(errors[i] <= 5.0 * r.standard_errors[i], "n={n}: {errors:?}");
        }
        let worst = errors.iter().fold(0.0f64, |m, e| m.max(*e));
        assert!(worst < previous, "n={n}: {worst} after {previous}");
        previous = worst;
        assert!(!r.violates_chsh());
    }
}
