use super::*;
use crate::geometry::ScalarField;

fn r3_chart() -> Arc<ChartSpec> {
    ChartSpec::linear(&["x", "y", "z"]).unwrap()
}

fn r3_structure(chart: &Arc<ChartSpec>) -> PoissonStructure {
    let rows = vec![
        vec!["0".into(), "1".into(), "0".into()],
        vec!["-1".into(), "0".into(), "1".into()],
        vec!["0".into(), "-1".into(), "0".into()],
    ];
    PoissonStructure::from_tensor(chart, &rows).unwrap()
}

fn r3_translation(chart: &Arc<ChartSpec>) -> GroupAction {
    GroupAction::new(
        chart,
        &[vec!["1".into(), "0".into(), "0".into()]],
        &["x+a1".into(), "y".into(), "z".into()],
        true,
    )
    .unwrap()
}

fn torus_chart() -> Arc<ChartSpec> {
    ChartSpec::torus(&["t1", "t2", "p1", "p2"]).unwrap()
}

fn circle_action(chart: &Arc<ChartSpec>) -> GroupAction {
    GroupAction::new(
        chart,
        &[vec!["1".into(), "0".into(), "1".into(), "0".into()]],
        &[
            "t1+a1".into(),
            "t2".into(),
            "p1+a1".into(),
            "p2".into(),
        ],
        true,
    )
    .unwrap()
}

fn torus_structure(chart: &Arc<ChartSpec>) -> PoissonStructure {
    let rows = vec![
        vec!["0".into(), "1".into(), "0".into(), "0".into()],
        vec!["-1".into(), "0".into(), "0".into(), "0".into()],
        vec!["0".into(), "0".into(), "0".into(), "sqrt(2)".into()],
        vec!["0".into(), "0".into(), "-sqrt(2)".into(), "0".into()],
    ];
    PoissonStructure::from_symplectic(chart, &rows).unwrap()
}

#[test]
fn translation_acts_as_stated() {
    let chart = r3_chart();
    let action = r3_translation(&chart);
    let m = Point::new(chart.clone(), vec![1.0, 1.0, 1.0]).unwrap();
    let image = action.act(&[2.0], &m).unwrap();
    assert_eq!(image.coords(), &[3.0, 1.0, 1.0]);
    // Zero parameters give the identity.
    let fixed = action.act(&[0.0], &m).unwrap();
    assert_eq!(fixed.coords(), m.coords());
}

#[test]
fn circle_action_shifts_and_wraps() {
    let chart = torus_chart();
    let action = circle_action(&chart);
    let m = Point::new(chart.clone(), vec![6.0, 1.0, 0.5, 2.0]).unwrap();
    let image = action.act(&[1.0], &m).unwrap();
    let tau = std::f64::consts::TAU;
    assert!((image.coords()[0] - (7.0 - tau)).abs() < 1e-12);
    assert!((image.coords()[1] - 1.0).abs() < 1e-15);
    assert!((image.coords()[2] - 1.5).abs() < 1e-15);
    assert!((image.coords()[3] - 2.0).abs() < 1e-15);
}

#[test]
fn identity_and_generator_residuals_are_tiny() {
    let chart = torus_chart();
    let action = circle_action(&chart);
    let plan = SamplingPlan::for_chart(&chart, 1).with_points(64);
    assert!(action.identity_residual(&plan).unwrap() < 1e-12);
    assert!(action.generator_residual(&plan).unwrap() < 1e-6);

    let chart = r3_chart();
    let action = r3_translation(&chart);
    let plan = SamplingPlan::for_chart(&chart, 1).with_points(64);
    assert!(action.identity_residual(&plan).unwrap() < 1e-12);
    assert!(action.generator_residual(&plan).unwrap() < 1e-6);
}

#[test]
fn invariance_accepts_and_rejects_correctly() {
    let chart = r3_chart();
    let action = r3_translation(&chart);
    let plan = SamplingPlan::for_chart(&chart, 1);
    // y and z are invariant under x-translation.
    for src in ["y", "z", "y*z", "17.5"] {
        let f = ScalarField::parse(&chart, src).unwrap();
        assert!(
            action.check_invariance(&f, &plan).unwrap() < 1e-12,
            "{src} should be invariant"
        );
    }
    // x+z is a Casimir of the structure but NOT invariant under the
    // translation: the violation is |a1|, which the plan samples up to pi.
    let casimir = ScalarField::parse(&chart, "x+z").unwrap();
    let violation = action.check_invariance(&casimir, &plan).unwrap();
    assert!(violation > 1.0, "violation {violation}");
}

#[test]
fn torus_invariants_pass() {
    let chart = torus_chart();
    let action = circle_action(&chart);
    let plan = SamplingPlan::for_chart(&chart, 1);
    let family = InvariantFamily::parse(
        &chart,
        &[
            "sin(t1-p1)".into(),
            "cos(t1-p1)".into(),
            "sin(t2)".into(),
            "cos(t2)".into(),
            "sin(p2)".into(),
            "cos(p2)".into(),
        ],
        "built-in",
    )
    .unwrap();
    let violations = family.invariance_violations(&action, &plan).unwrap();
    for (f, v) in family.members().iter().zip(&violations) {
        assert!(*v < 1e-12, "{} violated by {v}", f.source());
    }
}

#[test]
fn canonicity_passes_for_translations_and_rotations() {
    let chart = r3_chart();
    let action = r3_translation(&chart);
    let b = r3_structure(&chart);
    let plan = SamplingPlan::for_chart(&chart, 1).with_points(32).with_group_samples(8);
    assert!(action.check_canonical(&b, &plan).unwrap() < 1e-12);

    let chart = torus_chart();
    let action = circle_action(&chart);
    let b = torus_structure(&chart);
    let plan = SamplingPlan::for_chart(&chart, 1).with_points(32).with_group_samples(8);
    assert!(action.check_canonical(&b, &plan).unwrap() < 1e-12);
}

#[test]
fn scaling_map_is_flagged_non_canonical() {
    // Phi_a(x,y,z) = (exp(a) x, y, z) is an action but does not preserve
    // the constant tensor; the violation grows like |exp(a) - 1|.
    let chart = r3_chart();
    let action = GroupAction::new(
        &chart,
        &[vec!["x".into(), "0".into(), "0".into()]],
        &["exp(a1)*x".into(), "y".into(), "z".into()],
        true,
    )
    .unwrap();
    let b = r3_structure(&chart);
    let plan = SamplingPlan::for_chart(&chart, 1).with_points(16).with_group_samples(8);
    assert!(action.identity_residual(&plan).unwrap() < 1e-12);
    assert!(action.generator_residual(&plan).unwrap() < 1e-6);
    let violation = action.check_canonical(&b, &plan).unwrap();
    assert!(violation > 0.1, "violation {violation}");
}

#[test]
fn abelian_composition_residual() {
    let chart = torus_chart();
    let action = circle_action(&chart);
    let plan = SamplingPlan::for_chart(&chart, 1);
    assert!(action.abelian_residual(&plan).unwrap() < 1e-9);
}

#[test]
fn two_torus_action_and_generators() {
    let chart = torus_chart();
    let action = GroupAction::new(
        &chart,
        &[
            vec!["1".into(), "0".into(), "1".into(), "0".into()],
            vec!["0".into(), "1".into(), "0".into(), "1".into()],
        ],
        &[
            "t1+a1".into(),
            "t2+a2".into(),
            "p1+a1".into(),
            "p2+a2".into(),
        ],
        true,
    )
    .unwrap();
    assert_eq!(action.group_dim(), 2);
    let g = action.generator_matrix(&[0.0; 4]).unwrap();
    assert_eq!(g.column(0).as_slice(), &[1.0, 0.0, 1.0, 0.0]);
    assert_eq!(g.column(1).as_slice(), &[0.0, 1.0, 0.0, 1.0]);
    let xi = action.generator_at(&[2.0, -1.0], &[0.0; 4]).unwrap();
    assert_eq!(xi.as_slice(), &[2.0, -1.0, 2.0, -1.0]);
}

#[test]
fn trivial_group_is_the_identity() {
    let chart = r3_chart();
    let action = GroupAction::trivial(&chart).unwrap();
    assert_eq!(action.group_dim(), 0);
    let m = Point::new(chart, vec![1.0, 2.0, 3.0]).unwrap();
    let image = action.act(&[], &m).unwrap();
    assert_eq!(image.coords(), m.coords());
}

#[test]
fn free_actions_have_empty_stabilizer_profiles() {
    let chart = torus_chart();
    let action = circle_action(&chart);
    let plan = SamplingPlan::for_chart(&chart, 1);
    let m = Point::new(chart, vec![0.0; 4]).unwrap();
    let profile = action.stabilizer_profile(&m, &plan, 1e-6).unwrap();
    // Halton parameters in [-pi, pi] never hit 0 or the period exactly.
    assert!(profile.is_empty(), "profile {profile:?}");
}

#[test]
fn shape_validation_errors() {
    let chart = r3_chart();
    // Generator with wrong component count.
    assert!(GroupAction::new(
        &chart,
        &[vec!["1".into(), "0".into()]],
        &["x+a1".into(), "y".into(), "z".into()],
        true,
    )
    .is_err());
    // Too few map expressions.
    assert!(GroupAction::new(
        &chart,
        &[vec!["1".into(), "0".into(), "0".into()]],
        &["x+a1".into(), "y".into()],
        true,
    )
    .is_err());
    // Map referencing an undeclared parameter.
    assert!(GroupAction::new(
        &chart,
        &[vec!["1".into(), "0".into(), "0".into()]],
        &["x+a2".into(), "y".into(), "z".into()],
        true,
    )
    .is_err());
    // Chart names that collide with parameter names.
    let collide = ChartSpec::linear(&["a1", "y"]).unwrap();
    assert!(GroupAction::new(
        &collide,
        &[vec!["1".into(), "0".into()]],
        &["a1+a1".into(), "y".into()],
        true,
    )
    .is_err());
}
