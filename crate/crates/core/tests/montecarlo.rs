use sphericity::montecarlo::{
    l1_exact_covariance, parse_plan, run_size_power, verify_lemma_moments, Lemma, RunOptions,
};
use sphericity::populations::{EntryLaw, PopulationSpec};
use sphericity::stats::StatisticKind;

const TABLE1: &str = include_str!("../../../plans/table1_desk.plan");
const TABLE2: &str = include_str!("../../../plans/table2_desk.plan");
const TABLE3: &str = include_str!("../../../plans/table3_desk.plan");

#[test]
fn bundled_plans_parse() {
    for (text, cells) in [(TABLE1, 7 * 3 * 4), (TABLE2, 7 * 3 * 4), (TABLE3, 12 * 2)] {
        let plan = parse_plan(text).unwrap();
        assert_eq!(plan.replications, 2000);
        assert_eq!(plan.grid.len() * plan.scenarios.len() * plan.tests.len(), cells);
    }
}

#[test]
fn zero_replications_is_a_plan_error() {
    let text = TABLE1.replace("replications = 2000", "replications = 0");
    assert!(parse_plan(&text).is_err());
}

// One pass over the whole Gaussian grid under the null: John and Chen stay
// inside [0.03, 0.08] everywhere, and John at (3200, 64) is near 0.048.
#[test]
fn john_and_chen_sizes_are_stable_across_the_grid() {
    let mut plan = parse_plan(TABLE1).unwrap();
    plan.tests = vec![StatisticKind::John, StatisticKind::Chen];
    plan.scenarios.retain(|s| s.name == "size");
    let report = run_size_power(&plan, &RunOptions::default()).unwrap();
    for c in &report.cells {
        assert!((0.03..=0.08).contains(&c.rate()), "{} at ({},{}): {}", c.test, c.p, c.n, c.rate());
    }
    let john = report.find(3200, 64, StatisticKind::John, "size").unwrap();
    assert!((john.rate() - 0.048).abs() <= 0.015, "{}", john.rate());
}

#[test]
fn qlrt_size_inflates_for_gamma_at_small_p() {
    let mut plan = parse_plan(TABLE2).unwrap();
    plan.grid = vec![(320, 64)];
    plan.tests = vec![StatisticKind::Qlrt];
    plan.scenarios.retain(|s| s.name == "size");
    let report = run_size_power(&plan, &RunOptions::default()).unwrap();
    let rate = report.cells[0].rate();
    assert!((rate - 0.108).abs() <= 0.021, "{rate}");
}

#[test]
fn john_power_against_two_point_alternative() {
    let mut plan = parse_plan(TABLE1).unwrap();
    plan.grid = vec![(320, 64)];
    plan.tests = vec![StatisticKind::John];
    plan.scenarios.retain(|s| s.name == "power1");
    let report = run_size_power(&plan, &RunOptions::default()).unwrap();
    let rate = report.cells[0].rate();
    assert!((rate - 0.958).abs() <= 0.014, "{rate}");
}

// The L1 cross covariance is zero only in the limit; at finite (n, p) the
// simulation must agree with the exact value instead.
#[test]
fn l1_cross_covariance_matches_finite_sample_value() {
    for law in [EntryLaw::StdNormal, EntryLaw::CenteredGamma] {
        let r = verify_lemma_moments(Lemma::L1, &PopulationSpec::null(law), 400, 8, 4000, 11, None).unwrap();
        let exact = l1_exact_covariance(law, 8, 400);
        assert_eq!(r.exact_covariance, Some(exact));
        let se = r.covariance_stderr[0][1];
        assert!((r.covariance[0][1] - exact).abs() <= 3.0 * se, "{law}: {} vs {exact} (se {se})", r.covariance[0][1]);
        // var(Σλ) = ν₄ − 1 holds exactly at every (n, p)
        assert!((r.covariance[1][1] / (law.nu4() - 1.0) - 1.0).abs() < 0.1);
    }
}

#[test]
fn lemma_moments_at_moderate_size() {
    let r = verify_lemma_moments(Lemma::L2, &PopulationSpec::null(EntryLaw::StdNormal), 1600, 16, 1000, 5, None).unwrap();
    assert!(r.exact_covariance.is_none());
    for c in &r.checks {
        assert!(c.pass(), "{c:?}");
    }
}
