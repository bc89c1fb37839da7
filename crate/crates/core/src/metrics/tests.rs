use super::*;
use crate::design::{ContrastBorrowDesign, ControlBorrowDesign};
use crate::quadrature::integrate;

const Z975: f64 = 1.959_963_984_540_054;

fn mix(t: &[(f64, f64, f64)]) -> MixtureNormal<f64> {
    MixtureNormal::from_triples(t).unwrap()
}

fn greater() -> SuccessRule<f64> {
    SuccessRule::new(0.0, Direction::Greater, 0.975).unwrap()
}

fn contrast(prior: MixtureNormal<f64>, s: f64) -> OcEvaluator<f64> {
    OcEvaluator::new(Design::Contrast(
        ContrastBorrowDesign::new(s, prior, greater()).unwrap(),
    ))
    .unwrap()
}

fn robust() -> MixtureNormal<f64> {
    mix(&[(0.7, 0.48, 0.121), (0.3, 0.0, 2.87)])
}

fn small_control(prior_c: MixtureNormal<f64>) -> OcEvaluator<f64> {
    OcEvaluator::new(Design::Control(
        ControlBorrowDesign::new(
            30,
            15,
            10.0,
            MixtureNormal::single(0.0, 1000.0).unwrap(),
            prior_c,
            SuccessRule::new(0.0, Direction::Less, 0.975).unwrap(),
        )
        .unwrap(),
    ))
    .unwrap()
}

#[test]
fn vague_contrast_size_is_alpha() {
    let ev = contrast(MixtureNormal::single(0.0, 1e6).unwrap(), 0.4);
    let cp = ev.cp(Truth::Contrast(0.0)).unwrap();
    assert!((cp - 0.025).abs() < 1e-9);
    let c = ev.critical_value().unwrap();
    assert!((c - Z975 * 0.4).abs() < 1e-6);
}

#[test]
fn point_mass_average_is_conditional_power() {
    let ev = contrast(robust(), 0.3);
    let a = ev.average_metric(&DesignPrior::PointMass(0.2), 0.0).unwrap();
    assert_eq!(a.value, ev.cp(Truth::Contrast(0.2)).unwrap());

    let ev = small_control(mix(&[(0.6, 5.0, 2.0), (0.4, 5.0, 20.0)]));
    let a = ev.average_metric(&DesignPrior::PointMass(3.0), -2.0).unwrap();
    let cp = ev.cp(Truth::Control { theta_c: 3.0, theta_t: 1.0 }).unwrap();
    assert_eq!(a.value, cp);
}

#[test]
fn vague_control_power_matches_z_test() {
    let ev = small_control(MixtureNormal::single(0.0, 1000.0).unwrap());
    let se = 10.0 * (1.0_f64 / 30.0 + 1.0 / 15.0).sqrt();
    for &d in &[0.0, -3.0, -8.0] {
        let cp = ev.cp(Truth::Control { theta_c: 2.0, theta_t: 2.0 + d }).unwrap();
        let want = crate::special::norm_cdf(-d / se - Z975);
        assert!((cp - want).abs() < 2e-4, "d={d} cp={cp} want={want}");
    }
}

#[test]
fn collapsed_and_nested_routes_agree() {
    let prior_c = mix(&[(0.6, 5.0, 2.0), (0.4, 5.0, 20.0)]);
    let ev = small_control(prior_c.clone());
    let design = mix(&[(0.5, 0.0, 4.0), (0.5, 12.0, 6.0)]);
    let a = ev.average_metric(&DesignPrior::Mixture(design.clone()), 0.0).unwrap();
    let b = ev.average_metric_nested(&design, 0.0).unwrap();
    assert!((a.value - b.value).abs() < 1e-7, "{} vs {}", a.value, b.value);
}

#[test]
fn design_prior_equal_to_analysis_prior_controls_type1() {
    let prior_c = mix(&[(0.6, 5.0, 2.0), (0.4, 5.0, 20.0)]);
    let ev = small_control(prior_c.clone());
    let a = ev.average_metric(&DesignPrior::Mixture(prior_c), 0.0).unwrap();
    assert!((a.value - 0.025).abs() < 2e-3, "{}", a.value);
}

#[test]
fn truncated_contrast_average_matches_direct_integral() {
    let ev = contrast(robust(), 0.35);
    let p = robust();
    let r = ev.average_type1_null(&p).unwrap();
    let c = ev.critical_value().unwrap();
    let cfg = QuadratureConfig::with_abs_tol(1e-14);
    let num = integrate(
        |d: f64| crate::special::norm_sf((c - d) / 0.35) * p.density(d),
        -40.0,
        0.0,
        &cfg,
    )
    .unwrap()
    .value;
    let want = num / p.cdf(0.0);
    assert!((r.value - want).abs() < 1e-9, "{} vs {want}", r.value);
}

#[test]
fn false_positive_identities_and_ordering() {
    for &s in &[0.2, 0.4, 0.8] {
        let ev = contrast(robust(), s);
        for p in [robust(), mix(&[(1.0, 0.48, 0.121)]), mix(&[(1.0, 0.0, 100.0)])] {
            let fp = ev.preposterior_fp(&p).unwrap().value;
            let avg = ev.average_type1_null(&p).unwrap().value;
            let mass = p.cdf(0.0);
            assert!((fp - avg * mass).abs() < 1e-10);
            let ub = ev.upper_bound_fp(&DesignPrior::Mixture(p.clone())).unwrap().value;
            let cp0 = ev.cp(Truth::Contrast(0.0)).unwrap();
            assert!((ub - cp0 * mass).abs() < 1e-15);
            assert!(fp <= ub + 1e-12 && ub <= cp0 + 1e-15);
        }
    }
}

#[test]
fn fp_is_zero_when_prior_sits_above_null() {
    let ev = contrast(robust(), 0.3);
    let p = mix(&[(1.0, 50.0, 1.0)]);
    assert_eq!(ev.preposterior_fp(&p).unwrap().value, 0.0);
    let t = ev.decision_table(&p).unwrap();
    assert_eq!(t.p_fp, 0.0);
    assert_eq!(t.p_tn, 0.0);
    assert!(ev.average_type1_null(&p).is_err());
}

#[test]
fn decision_table_sums_and_matches_simulation() {
    let ev = contrast(robust(), 0.3);
    let p = mix(&[(0.5, 0.2, 0.3), (0.5, -0.1, 0.5)]);
    let t = ev.decision_table(&p).unwrap();
    assert!((t.total() - 1.0).abs() < 1e-8);
    let avg = ev.average_metric(&DesignPrior::Mixture(p.clone()), 0.0).unwrap().value;
    assert!((t.success() - avg).abs() < 1e-8);
    let mc = McConfig::new(200_000, 3).unwrap();
    let m = ev.mc_decision_table(&p, &mc).unwrap();
    for (q, s) in [(t.p_fp, m.p_fp), (t.p_tp, m.p_tp), (t.p_tn, m.p_tn), (t.p_fn, m.p_fn)] {
        let se = (q * (1.0 - q) / 200_000.0).sqrt();
        assert!((q - s).abs() < 4.0 * se, "{q} vs {s}");
    }
}

#[test]
fn spike_and_slab_bound() {
    let ev = contrast(robust(), 0.4);
    let slab = mix(&[(1.0, 0.5, 0.1)]);
    let p = DesignPrior::spike_and_slab(0.0, 0.15, slab.clone()).unwrap();
    let ub = ev.upper_bound_fp(&p).unwrap().value;
    let cp0 = ev.cp(Truth::Contrast(0.0)).unwrap();
    assert!((ub - cp0 * (0.15 + 0.85 * slab.cdf(0.0))).abs() < 1e-15);
    assert!(ev.average_metric(&p, 0.0).is_err());
    let off = DesignPrior::spike_and_slab(0.1, 0.15, slab).unwrap();
    assert!(ev.upper_bound_fp(&off).is_err());
}

#[test]
fn contrast_metrics_rejected_for_control_designs() {
    let ev = small_control(MixtureNormal::single(0.0, 100.0).unwrap());
    assert!(ev.preposterior_fp(&robust()).is_err());
    assert!(ev.decision_table(&robust()).is_err());
    assert!(ev.cp(Truth::Contrast(0.0)).is_err());
}

#[test]
fn control_metrics_match_simulation() {
    let prior_c = mix(&[(0.6, 5.0, 2.0), (0.4, 5.0, 20.0)]);
    let ev = small_control(prior_c);
    let mc = McConfig::new(200_000, 9).unwrap();
    let design = DesignPrior::Mixture(mix(&[(1.0, 12.0, 5.0)]));
    let metric = Metric::Average {
        prior: design,
        delta_star: -4.0,
    };
    let q = ev.evaluate(&metric).unwrap();
    let s = ev.mc_crosscheck(&metric, &mc).unwrap();
    assert_eq!(s.method, Method::MonteCarlo);
    let se = (q.value * (1.0 - q.value) / 200_000.0).sqrt();
    assert!((q.value - s.value).abs() < 4.0 * se, "{} vs {}", q.value, s.value);
}

#[test]
fn scan_finds_the_peak() {
    let ev = small_control(mix(&[(1.0, 5.0, 2.0)]));
    let (x, v) = ev.scan_extremum(-40.0, 40.0, Extremum::Max, 0.0).unwrap();
    let curve = ev.classical_type1_curve(-40.0, 40.0, 81).unwrap();
    let grid_max = curve.iter().map(|p| p.1).fold(0.0, f64::max);
    assert!(v >= grid_max - 1e-12);
    assert!(x > -40.0 && x < 40.0);
    let (_, lo) = ev.scan_extremum(-40.0, 40.0, Extremum::Min, 0.0).unwrap();
    assert!(lo <= curve.iter().map(|p| p.1).fold(1.0, f64::min) + 1e-12);
}

#[test]
fn vague_curve_is_flat() {
    let ev = small_control(MixtureNormal::single(0.0, 1000.0).unwrap());
    for (_, v) in ev.classical_type1_curve(-30.0, 30.0, 7).unwrap() {
        assert!((v - 0.025).abs() < 1e-3);
    }
    let ev = contrast(robust(), 0.3);
    assert_eq!(ev.classical_type1_curve(-1.0, 1.0, 5).unwrap().len(), 1);
}

#[test]
fn prior_benefit_probabilities() {
    let r = greater();
    assert!((prior_prob_benefit(&MixtureNormal::single(0.0, 100.0).unwrap(), &r) - 0.5).abs() < 1e-15);
    assert!((prior_prob_benefit(&robust(), &r) - 0.849_97).abs() < 5e-5);
    assert!(prior_prob_benefit(&mix(&[(1.0, 0.48, 0.121)]), &r) > 0.999);
}
