use proptest::prelude::*;
use randers_foliate_core::grid::{ExampleKind, ExampleSpec, Scheme};
use randers_foliate_core::verify::{
    all_pass, merge_reports, parse_formulas, verify_example, Formula, HypothesisCheck, ResidualReport, Verdict,
};

fn run(spec: &ExampleSpec, res: usize, formulas: &[Formula]) -> Vec<ResidualReport> {
    verify_example(spec, res, Scheme::Spectral, formulas, 0).unwrap()
}

fn get<'a>(reps: &'a [ResidualReport], id: &str) -> &'a ResidualReport {
    reps.iter().find(|r| r.formula_id == id).unwrap_or_else(|| panic!("no report {id}"))
}

fn assert_pass(reps: &[ResidualReport], ids: &[&str]) {
    for id in ids {
        let r = get(reps, id);
        assert_eq!(r.verdict, Verdict::Pass, "{id}: residual {:e}, notes {:?}", r.residual(), r.notes);
    }
}

fn geometric() -> Vec<Formula> {
    Formula::ALL.iter().copied().filter(|f| *f != Formula::Appendix).collect()
}

#[test]
fn flat_parallel_passes_everything_applicable() {
    for dim in [2.0, 3.0] {
        let spec = ExampleSpec::new(ExampleKind::FlatParallel).with("dim", dim);
        let reps = run(&spec, 16, &geometric());
        assert!(all_pass(&reps), "{:?}", reps.iter().filter(|r| r.verdict == Verdict::Fail).map(|r| &r.formula_id).collect::<Vec<_>>());
        assert_pass(&reps, &["energy-equality", "vanishing-constant-angle", "reeb-finsler", "series-main-k1"]);
    }
}

#[test]
fn riemannian_conformal_torus_passes_everything_applicable() {
    let spec = ExampleSpec::new(ExampleKind::ConformalTorus).with("beta_amp", 0.0);
    let reps = run(&spec, 48, &geometric());
    assert!(all_pass(&reps));
    assert_pass(&reps, &["reeb-riemannian", "reeb-weighted", "second-order-riemannian", "mean-curvature-randers"]);
}

#[test]
fn reeb_formulas_on_generic_conformal_torus() {
    let spec = ExampleSpec::new(ExampleKind::ConformalTorus);
    let reps = run(&spec, 48, &[Formula::Reeb, Formula::ReebWeighted, Formula::SecondOrder]);
    assert_pass(&reps, &["reeb-riemannian", "reeb-metric-g", "reeb-weighted", "second-order-riemannian"]);
    // Not locally symmetric: the Finsler Reeb formula is gated off.
    assert_eq!(get(&reps, "reeb-finsler").verdict, Verdict::NotApplicable);
}

#[test]
fn first_order_randers_formula() {
    let spec = ExampleSpec::new(ExampleKind::ConformalTorus);
    let mut gaps = Vec::new();
    for res in [32, 64] {
        let reps = run(&spec, res, &[Formula::MeanCurvatureRanders]);
        assert_pass(&reps, &["mean-curvature-randers-unreduced-corrected", "mean-curvature-trace-corrected"]);
        gaps.push(get(&reps, "mean-curvature-randers").residual());
    }
    // The reduced form misses by a fixed amount on a generic example.
    assert!(gaps.iter().all(|g| *g > 1e-3), "{gaps:?}");
    assert!((gaps[0] - gaps[1]).abs() < 1e-6, "{gaps:?}");
    // ... and holds when β is parallel.
    let reps = run(&ExampleSpec::new(ExampleKind::FlatGraph), 64, &[Formula::MeanCurvatureRanders]);
    assert_pass(&reps, &["mean-curvature-randers", "mean-curvature-randers-unreduced-corrected"]);
}

#[test]
fn flat_graph_series_and_second_order() {
    let spec = ExampleSpec::new(ExampleKind::FlatGraph).with("dim", 3.0);
    let reps = run(&spec, 32, &[Formula::Series, Formula::SecondOrder]);
    assert_pass(
        &reps,
        &[
            "series-main-k1",
            "series-main-k2",
            "series-constant-curvature-k1",
            "series-constant-curvature-k2",
            "series-parallel-beta-corrected-k1",
            "series-parallel-beta-corrected-k2",
            "series-parallel-beta-weighted-corrected-k2",
            "second-order-finsler",
            "second-order-parallel-beta-corrected",
            "second-order-parallel-beta-assembled-corrected",
        ],
    );
    // The δ-linear expansion of σ₂(Ā + δI) is not exact.
    assert_eq!(get(&reps, "series-parallel-beta-k2").verdict, Verdict::Fail);
    assert_eq!(get(&reps, "series-parallel-beta-k1").verdict, Verdict::Pass);
}

#[test]
fn ruled_constant_angle_case() {
    let spec = ExampleSpec::new(ExampleKind::FlatGraph)
        .with("dim", 3.0)
        .with("amp_y", 0.0)
        .with("b1", 0.0)
        .with("b2", 0.3)
        .with("b3", 0.0);
    let reps = run(&spec, 24, &[Formula::SecondOrder, Formula::Inequalities]);
    assert_pass(
        &reps,
        &["second-order-constant-angle-corrected", "second-order-tangent-beta-corrected", "energy-bound"],
    );
    for id in ["second-order-constant-angle", "second-order-tangent-beta"] {
        let r = get(&reps, id);
        assert_eq!(r.verdict, Verdict::Fail, "{id}");
        assert!(r.residual() > 1e-3);
    }
}

#[test]
fn sphere_excised_reeb_integral() {
    for r0 in [0.2, 0.1, 0.05] {
        let spec = ExampleSpec::new(ExampleKind::SphereLatitudes).with("r0", r0);
        let reps = run(&spec, 128, &[Formula::Reeb]);
        assert!(get(&reps, "reeb-riemannian").residual() < 1e-2);
        assert_pass(&reps, &["reeb-riemannian", "reeb-metric-g"]);
    }
}

#[test]
fn energy_bound_on_berwald_examples() {
    let specs = [
        ExampleSpec::new(ExampleKind::FlatParallel),
        ExampleSpec::new(ExampleKind::FlatGraph),
        ExampleSpec::new(ExampleKind::FlatGraph).with("dim", 3.0),
    ];
    for spec in specs {
        let reps = run(&spec, 16, &[Formula::Inequalities]);
        assert_pass(&reps, &["energy-bound"]);
    }
}

#[test]
fn vanishing_with_tangent_beta() {
    let spec = ExampleSpec::new(ExampleKind::FlatParallel).with("b3", 0.0);
    let reps = run(&spec, 16, &[Formula::Vanishing]);
    assert_pass(&reps, &["vanishing-constant-angle", "vanishing-tangent-beta"]);
    // Not Berwald: the conclusions are not claimed.
    let reps = run(&ExampleSpec::new(ExampleKind::ConformalTorus), 16, &[Formula::Vanishing]);
    assert!(reps.iter().all(|r| r.verdict == Verdict::NotApplicable));
}

#[test]
fn evaluation_is_deterministic_and_seed_only_moves_the_test_function() {
    let spec = ExampleSpec::new(ExampleKind::ConformalTorus);
    let a = run(&spec, 24, &[Formula::ReebWeighted, Formula::Appendix]);
    let b = run(&spec, 24, &[Formula::ReebWeighted, Formula::Appendix]);
    assert_eq!(a, b);
    let c = verify_example(&spec, 24, Scheme::Spectral, &[Formula::ReebWeighted], 99).unwrap();
    assert_pass(&c, &["reeb-weighted"]);
}

#[test]
fn bad_parameters_are_rejected() {
    let spec = ExampleSpec::new(ExampleKind::ConformalTorus).with("beta_amp", 0.95);
    assert!(verify_example(&spec, 16, Scheme::Spectral, &[Formula::Volume], 0).is_err());
    let spec = ExampleSpec::new(ExampleKind::FlatGraph).with("dim", 4.0);
    assert!(verify_example(&spec, 16, Scheme::Spectral, &[Formula::Volume], 0).is_err());
    assert!(parse_formulas("reeb,nonsense").is_err());
    assert!(parse_formulas(" , ").is_err());
}

fn report_strategy() -> impl Strategy<Value = ResidualReport> {
    (0usize..4, 0usize..2, prop::sample::select(vec![16usize, 32, 64]), -1.0..1.0f64, 1e-6..1e-1f64)
        .prop_map(|(id, ex, res, v, tol)| {
            ResidualReport::new(&format!("f{id}"), ["a", "b"][ex], vec![res, res], v, 0.0, tol)
        })
}

proptest! {
    #[test]
    fn merge_does_not_depend_on_input_order(reps in prop::collection::vec(report_strategy(), 0..20), seed in any::<u64>()) {
        let mut shuffled = reps.clone();
        // Deterministic shuffle from the seed.
        let n = shuffled.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        let a = merge_reports(reps);
        let b = merge_reports(shuffled);
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.formula_id, &y.formula_id);
            prop_assert_eq!(&x.example, &y.example);
            prop_assert_eq!(&x.resolution, &y.resolution);
            prop_assert_eq!(&x.convergence, &y.convergence);
        }
    }

    #[test]
    fn convergence_tables_are_shared_within_a_formula(reps in prop::collection::vec(report_strategy(), 1..20)) {
        let merged = merge_reports(reps);
        for r in &merged {
            let peers = merged.iter().filter(|p| p.formula_id == r.formula_id && p.example == r.example).count();
            prop_assert_eq!(r.convergence.len(), peers);
            prop_assert!(r.convergence.iter().any(|(h, e)| *h == 1.0 / r.resolution[0] as f64 && *e == r.residual()));
        }
    }

    #[test]
    fn verdict_follows_residual_and_hypotheses(v in -1.0..1.0f64, tol in 1e-6..1.0f64, holds in any::<bool>()) {
        let r = ResidualReport::new("x", "e", vec![8, 8], v, 0.0, tol);
        prop_assert_eq!(r.verdict == Verdict::Pass, v.abs() <= tol);
        let h = HypothesisCheck::small("gate", if holds { 0.0 } else { 1.0 }, 0.5);
        let r = r.with_hypotheses(&[h]);
        if !holds {
            prop_assert_eq!(r.verdict, Verdict::NotApplicable);
        } else {
            prop_assert_eq!(r.verdict == Verdict::Pass, v.abs() <= tol);
        }
    }

    #[test]
    fn formula_lists_parse_in_any_order(mask in 1u16..(1 << 13)) {
        let chosen: Vec<Formula> = Formula::ALL.iter().copied().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, f)| f).collect();
        let text: Vec<&str> = chosen.iter().rev().map(|f| f.name()).collect();
        let parsed = parse_formulas(&text.join(",")).unwrap();
        let mut want = chosen.clone();
        want.sort();
        prop_assert_eq!(parsed, want);
        prop_assert_eq!(parse_formulas("all").unwrap().len(), Formula::ALL.len());
    }
}
