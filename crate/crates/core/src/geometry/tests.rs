use super::*;
use crate::sampling::SamplingPlan;

fn r3() -> (Arc<ChartSpec>, PoissonStructure) {
    let chart = ChartSpec::linear(&["x", "y", "z"]).unwrap();
    let rows = vec![
        vec!["0".into(), "1".into(), "0".into()],
        vec!["-1".into(), "0".into(), "1".into()],
        vec!["0".into(), "-1".into(), "0".into()],
    ];
    let b = PoissonStructure::from_tensor(&chart, &rows).unwrap();
    (chart, b)
}

fn torus() -> (Arc<ChartSpec>, PoissonStructure) {
    let chart = ChartSpec::torus(&["t1", "t2", "p1", "p2"]).unwrap();
    let rows = vec![
        vec!["0".into(), "1".into(), "0".into(), "0".into()],
        vec!["-1".into(), "0".into(), "0".into(), "0".into()],
        vec!["0".into(), "0".into(), "0".into(), "sqrt(2)".into()],
        vec!["0".into(), "0".into(), "-sqrt(2)".into(), "0".into()],
    ];
    let b = PoissonStructure::from_symplectic(&chart, &rows).unwrap();
    (chart, b)
}

fn field(chart: &Arc<ChartSpec>, src: &str) -> ScalarField {
    ScalarField::parse(chart, src).unwrap()
}

fn point(chart: &Arc<ChartSpec>, coords: &[f64]) -> Point {
    Point::new(chart.clone(), coords.to_vec()).unwrap()
}

#[test]
fn r3_coordinate_brackets() {
    let (chart, b) = r3();
    let (x, y, z) = (field(&chart, "x"), field(&chart, "y"), field(&chart, "z"));
    for coords in [[0.0, 0.0, 0.0], [1.0, -2.0, 0.5], [3.0, 4.0, 5.0]] {
        let m = point(&chart, &coords);
        assert_eq!(b.bracket(&x, &y, &m).unwrap(), 1.0);
        assert_eq!(b.bracket(&y, &z, &m).unwrap(), 1.0);
        assert_eq!(b.bracket(&x, &z, &m).unwrap(), 0.0);
    }
}

#[test]
fn bracket_of_field_with_itself_vanishes() {
    let (chart, b) = r3();
    let f = field(&chart, "sin(x)*y + z^2");
    let m = point(&chart, &[0.3, -1.2, 0.7]);
    assert!(b.bracket(&f, &f, &m).unwrap().abs() < 1e-15);
}

#[test]
fn torus_bracket_hand_value() {
    // Hand expansion of (grad f)^T B (grad g) with B = omega^-1:
    // {sin(t1-p1), sin(t2)}(0) = B_12 = -1.
    let (chart, b) = torus();
    let f = field(&chart, "sin(t1-p1)");
    let g = field(&chart, "sin(t2)");
    let m = point(&chart, &[0.0; 4]);
    assert!((b.bracket(&f, &g, &m).unwrap() + 1.0).abs() < 1e-15);
}

#[test]
fn hamiltonian_field_of_y_is_constant() {
    let (chart, b) = r3();
    let xy = b.hamiltonian_vf(field(&chart, "y"));
    for coords in [[0.0, 0.0, 0.0], [5.0, 1.0, -3.0]] {
        let v = xy.eval_at(&coords).unwrap();
        assert_eq!(v.as_slice(), &[1.0, 0.0, -1.0]);
    }
}

#[test]
fn hamiltonian_field_of_constant_vanishes() {
    let (chart, b) = r3();
    let xc = b.hamiltonian_vf(field(&chart, "3.5"));
    let v = xc.eval_at(&[1.0, 2.0, 3.0]).unwrap();
    assert!(v.iter().all(|&c| c == 0.0));
}

#[test]
fn casimir_has_zero_hamiltonian_field() {
    // B (1,0,1)^T = 0 by the hand product.
    let (chart, b) = r3();
    let casimir = field(&chart, "x+z");
    let v = b.hamiltonian_at(&casimir, &[0.4, -2.0, 1.1]).unwrap();
    assert!(v.iter().all(|&c| c == 0.0));
}

#[test]
fn from_symplectic_standard_block() {
    let chart = ChartSpec::linear(&["q", "p"]).unwrap();
    let rows = vec![
        vec!["0".into(), "1".into()],
        vec!["-1".into(), "0".into()],
    ];
    let b = PoissonStructure::from_symplectic(&chart, &rows).unwrap();
    let m = b.evaluate(&[0.3, 0.7]).unwrap();
    assert_eq!(
        m.as_slice(),
        // column-major: (0, 1, -1, 0) encodes [[0,-1],[1,0]]
        &[0.0, 1.0, -1.0, 0.0]
    );
    assert_eq!(b.provenance(), Provenance::InvertedFromSymplectic);
}

#[test]
fn from_symplectic_torus_blocks() {
    let (_, b) = torus();
    let m = b.evaluate(&[0.0; 4]).unwrap();
    let s = 1.0 / 2.0f64.sqrt();
    let expected = [
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -s],
        [0.0, 0.0, s, 0.0],
    ];
    for i in 0..4 {
        for j in 0..4 {
            assert!(
                (m[(i, j)] - expected[i][j]).abs() < 1e-15,
                "B[{i}][{j}] = {}",
                m[(i, j)]
            );
        }
    }
}

#[test]
fn omega_times_b_is_identity_on_samples() {
    let (chart, b) = torus();
    let omega_rows = vec![
        vec!["0", "1", "0", "0"],
        vec!["-1", "0", "0", "0"],
        vec!["0", "0", "0", "sqrt(2)"],
        vec!["0", "0", "-sqrt(2)", "0"],
    ];
    let omega: Vec<ScalarField> = omega_rows
        .iter()
        .flat_map(|row| row.iter().map(|s| field(&chart, s)))
        .collect();
    let plan = SamplingPlan::for_chart(&chart, 0).with_points(100);
    for coords in plan.points() {
        let bm = b.evaluate(&coords).unwrap();
        let mut om = DMatrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                om[(i, j)] = omega[i * 4 + j].eval_at(&coords).unwrap();
            }
        }
        let residual = (om * bm - DMatrix::identity(4, 4)).abs().max();
        assert!(residual < 1e-12, "residual {residual}");
    }
}

#[test]
fn position_dependent_symplectic_inverts_pointwise() {
    // omega = (1+x^2) dq^dp so B_12 = -1/(1+x^2); the entry gradient
    // d B_12 / dx = 2x/(1+x^2)^2 checks the dual-valued inversion.
    let chart = ChartSpec::linear(&["x", "p"]).unwrap();
    let rows = vec![
        vec!["0".into(), "1+x^2".into()],
        vec!["-(1+x^2)".into(), "0".into()],
    ];
    let b = PoissonStructure::from_symplectic(&chart, &rows).unwrap();
    let coords = [0.5, -2.0];
    let m = b.evaluate(&coords).unwrap();
    assert!((m[(0, 1)] + 1.0 / 1.25).abs() < 1e-15);

    let f = field(&chart, "x");
    let g = field(&chart, "p");
    let (value, grad) = b.bracket_with_gradient(&f, &g, &coords).unwrap();
    assert!((value + 1.0 / 1.25).abs() < 1e-15);
    let expected_dx = 2.0 * 0.5 / (1.25_f64 * 1.25);
    assert!((grad[0] - expected_dx).abs() < 1e-12, "grad {grad:?}");
    assert!(grad[1].abs() < 1e-15);
}

#[test]
fn singular_symplectic_is_rejected() {
    let chart = ChartSpec::linear(&["q", "p"]).unwrap();
    let rows = vec![
        vec!["0".into(), "q".into()],
        vec!["-q".into(), "0".into()],
    ];
    // Singular on the q = 0 hyperplane, which the spot-check samples miss;
    // pointwise evaluation there must fail.
    let b = PoissonStructure::from_symplectic(&chart, &rows).unwrap();
    assert!(matches!(
        b.evaluate(&[0.0, 1.0]),
        Err(GeometryError::SingularOmega { .. })
    ));
}

#[test]
fn non_antisymmetric_tensor_is_rejected() {
    let chart = ChartSpec::linear(&["x", "y"]).unwrap();
    let rows = vec![
        vec!["0".into(), "1".into()],
        vec!["1".into(), "0".into()],
    ];
    assert!(matches!(
        PoissonStructure::from_tensor(&chart, &rows),
        Err(GeometryError::NotAntisymmetric { .. })
    ));
}

#[test]
fn jacobi_vanishes_for_constant_tensor_polynomials() {
    let (chart, b) = r3();
    let f = field(&chart, "x*y");
    let g = field(&chart, "z^2 - x");
    let h = field(&chart, "x*z + y");
    let m = point(&chart, &[0.7, -0.3, 1.9]);
    assert!(b.jacobi_defect(&f, &g, &h, &m).unwrap().abs() < 1e-12);
}

#[test]
fn jacobi_statistical_check_r3() {
    let (chart, b) = r3();
    let plan = SamplingPlan::for_chart(&chart, 0).with_points(50);
    let report = jacobi_check(&b, &plan.points(), 50, 7).unwrap();
    assert!(
        report.max_defect < 1e-9,
        "max defect {} for {:?} at {:?}",
        report.max_defect,
        report.worst_triple,
        report.worst_point
    );
}

#[test]
fn corrupted_tensor_has_constant_defect() {
    // B_23 replaced by y: the (x,y,z) defect is {y,x} = B_21 = -1 at every
    // point. Regression guard for the nested-dual bracket gradient.
    let chart = ChartSpec::linear(&["x", "y", "z"]).unwrap();
    let rows = vec![
        vec!["0".into(), "1".into(), "0".into()],
        vec!["-1".into(), "0".into(), "y".into()],
        vec!["0".into(), "-y".into(), "0".into()],
    ];
    let b = PoissonStructure::from_tensor(&chart, &rows).unwrap();
    let (x, y, z) = (field(&chart, "x"), field(&chart, "y"), field(&chart, "z"));
    for coords in [[0.0, 0.0, 0.0], [1.0, 2.0, 3.0], [-0.5, 4.0, 0.1]] {
        let m = point(&chart, &coords);
        let defect = b.jacobi_defect(&x, &y, &z, &m).unwrap();
        assert!((defect + 1.0).abs() < 1e-12, "defect {defect} at {coords:?}");
    }
    let plan = SamplingPlan::for_chart(&chart, 0).with_points(20);
    let report = jacobi_check(&b, &plan.points(), 30, 3).unwrap();
    assert!(report.max_defect > 0.5, "corruption must be flagged");
}

#[test]
fn bracket_gradient_tracks_non_constant_entry() {
    let chart = ChartSpec::linear(&["x", "y", "z"]).unwrap();
    let rows = vec![
        vec!["0".into(), "1".into(), "0".into()],
        vec!["-1".into(), "0".into(), "y".into()],
        vec!["0".into(), "-y".into(), "0".into()],
    ];
    let b = PoissonStructure::from_tensor(&chart, &rows).unwrap();
    let (y, z) = (field(&chart, "y"), field(&chart, "z"));
    // {y,z}(m) = B_23 = y, so the gradient is e_y.
    let (value, grad) = b
        .bracket_with_gradient(&y, &z, &[0.3, 1.7, -2.0])
        .unwrap();
    assert!((value - 1.7).abs() < 1e-15);
    assert_eq!(grad, vec![0.0, 1.0, 0.0]);
}

#[test]
fn bracket_antisymmetry_and_leibniz_on_samples() {
    let (chart, b) = torus();
    let pool = probe_fields(&chart);
    let plan = SamplingPlan::for_chart(&chart, 0).with_points(25);
    for coords in plan.points() {
        let m = point(&chart, &coords);
        for f in pool.iter().take(6) {
            for g in pool.iter().skip(6).take(6) {
                let fg = b.bracket(f, g, &m).unwrap();
                let gf = b.bracket(g, f, &m).unwrap();
                assert!((fg + gf).abs() < 1e-12);
            }
        }
        // Leibniz: {f*g, h} = f {g,h} + g {f,h}.
        let f = field(&chart, "sin(t1)");
        let g = field(&chart, "cos(p2)");
        let h = field(&chart, "sin(t2-p1)");
        let fg = field(&chart, "sin(t1)*cos(p2)");
        let lhs = b.bracket(&fg, &h, &m).unwrap();
        let rhs = f.eval(&m).unwrap() * b.bracket(&g, &h, &m).unwrap()
            + g.eval(&m).unwrap() * b.bracket(&f, &h, &m).unwrap();
        assert!((lhs - rhs).abs() < 1e-9, "Leibniz residual {}", lhs - rhs);
    }
}

#[test]
fn convention_consistency_xf_of_g_is_bracket_g_f() {
    let (chart, b) = torus();
    let f = field(&chart, "sin(t1-p1)");
    let g = field(&chart, "cos(t2)*sin(p2)");
    let xf = b.hamiltonian_vf(f.clone());
    let plan = SamplingPlan::for_chart(&chart, 0).with_points(25);
    for coords in plan.points() {
        let m = point(&chart, &coords);
        let v = xf.eval(&m).unwrap();
        let grad_g = g.gradient(&m).unwrap();
        let directional: f64 = grad_g.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
        let gf = b.bracket(&g, &f, &m).unwrap();
        assert!(
            (directional - gf).abs() < 1e-9,
            "X_f[g] = {directional} vs {{g,f}} = {gf}"
        );
    }
}

#[test]
fn casimir_brackets_to_zero_with_probes() {
    let (chart, b) = r3();
    let casimir = field(&chart, "x+z");
    let plan = SamplingPlan::for_chart(&chart, 0).with_points(30);
    for coords in plan.points() {
        let m = point(&chart, &coords);
        for g in probe_fields(&chart) {
            assert!(b.bracket(&casimir, &g, &m).unwrap().abs() < 1e-12);
        }
    }
}

#[test]
fn eval_error_carries_field_source() {
    let chart = ChartSpec::linear(&["x"]).unwrap();
    let f = field(&chart, "1/x");
    let err = f.eval_at(&[0.0]).unwrap_err();
    let text = err.to_string();
    assert!(text.contains("1/x"), "message: {text}");
    assert!(text.contains("division by zero"), "message: {text}");
}
