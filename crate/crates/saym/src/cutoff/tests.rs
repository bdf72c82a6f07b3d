use super::*;
use std::io::Write;

fn gauss() -> CutoffFunction {
    CutoffFunction::parse("gauss").unwrap()
}

fn mixed() -> CutoffFunction {
    CutoffFunction::parse("pointmass:0.5@1,0.5@4").unwrap()
}

fn exp_table(points: usize, t_lo: f64, t_hi: f64) -> CutoffFunction {
    let ratio = (t_hi / t_lo).ln();
    let samples: Vec<(f64, f64)> = (0..points)
        .map(|i| {
            let t = t_lo * (ratio * i as f64 / (points - 1) as f64).exp();
            (t, (-t).exp())
        })
        .collect();
    CutoffFunction::Table(TableDensity::from_samples(samples).unwrap())
}

#[test]
fn gauss_parses_to_unit_point_mass() {
    assert_eq!(gauss(), CutoffFunction::PointMass(vec![(1.0, 1.0)]));
    assert!(gauss().is_point_mass());
}

#[test]
fn grammar_rejects_bad_specs() {
    assert!(matches!(CutoffFunction::parse("bogus"), Err(CutoffError::Parse(_))));
    assert!(matches!(
        CutoffFunction::parse("pointmass:1@-1"),
        Err(CutoffError::InvalidPointMass(_))
    ));
    assert!(matches!(
        CutoffFunction::parse("pointmass:-1@2"),
        Err(CutoffError::InvalidPointMass(_))
    ));
    assert!(matches!(
        CutoffFunction::parse("pointmass:"),
        Err(CutoffError::InvalidPointMass(_))
    ));
}

#[test]
fn gauss_moments_are_all_one() {
    for k in -6..=6 {
        let m = moment(&gauss(), k).unwrap();
        assert_eq!(m.value, 1.0, "k = {k}");
        assert_eq!(m.error, 0.0);
    }
}

#[test]
fn mixed_point_mass_moments_match_closed_form() {
    let g = mixed();
    assert_eq!(moment(&g, -2).unwrap().value, 2.5);
    // k = 2 weights by 1/t: 0.5 * 1 + 0.5 * 1/4.
    assert_eq!(moment(&g, 2).unwrap().value, 0.625);
    // k = 1 weights by 1/sqrt(t): 0.5 * 1 + 0.5 * 1/2.
    assert_eq!(moment(&g, 1).unwrap().value, 0.75);
}

#[test]
fn exp_density_moments_match_gamma_values() {
    let g = CutoffFunction::Exp;
    // f_k = Gamma(1 - k/2) for the unit exponential density.
    let cases = [
        (0, 1.0),
        (-2, 1.0),
        (-4, 2.0),
        (-6, 6.0),
        (1, std::f64::consts::PI.sqrt()),
        (-1, 0.5 * std::f64::consts::PI.sqrt()),
    ];
    for (k, expect) in cases {
        let m = moment(&g, k).unwrap();
        assert!(
            (m.value - expect).abs() <= m.error.max(1e-9),
            "k = {k}: value {} vs {expect}, err {}",
            m.value,
            m.error
        );
        assert!(m.error < 1e-6);
    }
}

#[test]
fn exp_density_moment_diverges_at_origin_for_k_ge_2() {
    match moment(&CutoffFunction::Exp, 2) {
        Err(CutoffError::Divergent(Endpoint::Zero)) => {}
        other => panic!("expected divergence at t -> 0, got {other:?}"),
    }
    assert!(moment(&CutoffFunction::Exp, 4).is_err());
}

#[test]
fn hermite_small_values() {
    assert_eq!(hermite(0, 3.7), 1.0);
    assert_eq!(hermite(2, 0.0), -1.0);
    assert_eq!(hermite(4, 0.0), 3.0);
    // H_{2k}(0) = (-1)^k (2k-1)!!
    assert_eq!(hermite(6, 0.0), -15.0);
    assert_eq!(hermite(8, 0.0), 105.0);
}

#[test]
fn hermite_recurrence_holds_on_samples() {
    for m in 1..10u32 {
        for &x in &[-1.7, -0.3, 0.0, 0.8, 2.4] {
            let lhs = hermite(m + 1, x);
            let rhs = x * hermite(m, x) - m as f64 * hermite(m - 1, x);
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0), "m = {m}, x = {x}");
        }
    }
}

#[test]
fn gauss_derivatives_match_series_of_exp_minus_x_squared() {
    assert_eq!(derivative_at_zero(&gauss(), 2).unwrap(), -2.0);
    assert_eq!(derivative_at_zero(&gauss(), 4).unwrap(), 12.0);
    assert_eq!(derivative_at_zero(&gauss(), 1).unwrap(), 0.0);
    assert_eq!(derivative_at_zero(&gauss(), 0).unwrap(), 1.0);
}

#[test]
fn mixed_point_mass_derivative_closed_form() {
    // f(x) = 0.5 e^{-x^2} + 0.5 e^{-4x^2}; f''(0) = 0.5(-2) + 0.5(-8) = -5.
    assert_eq!(derivative_at_zero(&mixed(), 2).unwrap(), -5.0);
    // f''''(0) = (4!/2!)(0.5 * 1 + 0.5 * 16) = 102.
    assert_eq!(derivative_at_zero(&mixed(), 4).unwrap(), 102.0);
}

#[test]
fn exp_density_derivatives_via_richardson() {
    // Profile f(x) = 1/(1 + x^2), so f^{(2k)}(0) = (-1)^k (2k)!.
    let g = CutoffFunction::Exp;
    let d2 = derivative_at_zero(&g, 2).unwrap();
    assert!((d2 + 2.0).abs() < 1e-8, "d2 = {d2}");
    let d4 = derivative_at_zero(&g, 4).unwrap();
    assert!((d4 - 24.0).abs() < 1e-6 * 24.0, "d4 = {d4}");
    let d6 = derivative_at_zero(&g, 6).unwrap();
    assert!((d6 + 720.0).abs() < 1e-5 * 720.0, "d6 = {d6}");
}

#[test]
fn lemma_on_gauss_shows_ratio_two_to_the_k() {
    let report = verify_moment_lemma(&gauss(), 3).unwrap();
    assert_eq!(report.rows[0].moment, 1.0);
    assert_eq!(report.rows[0].printed_rhs, 2.0);
    assert_eq!(report.rows[0].ratio, 2.0);
    assert_eq!(report.rows[1].printed_rhs, 4.0);
    assert_eq!(report.rows[1].ratio, 4.0);
    assert!((report.fitted_constant - 2.0).abs() < 1e-12);
    assert!(!report.any_flagged);
    for row in &report.rows {
        assert!(row.corrected_matches);
        assert!((row.corrected_rhs - row.moment).abs() < 1e-12);
    }
}

#[test]
fn lemma_constant_is_density_independent() {
    let densities = [
        gauss(),
        mixed(),
        CutoffFunction::parse("pointmass:0.3@0.5,0.7@2").unwrap(),
    ];
    let mut fitted = Vec::new();
    for g in &densities {
        let report = verify_moment_lemma(g, 4).unwrap();
        assert!(!report.any_flagged);
        assert!(report.all_corrected_match);
        fitted.push(report.fitted_constant);
    }
    for f in &fitted {
        assert!((f - fitted[0]).abs() < 1e-8, "fitted constants {fitted:?}");
    }
}

#[test]
fn lemma_on_smooth_density_agrees_within_quadrature_error() {
    let report = verify_moment_lemma(&CutoffFunction::Exp, 3).unwrap();
    assert!(
        (report.fitted_constant - 2.0).abs() < 1e-5,
        "fitted {}",
        report.fitted_constant
    );
    assert!(!report.any_flagged, "rows: {:?}", report.rows);
    assert!(report.all_corrected_match);
}

#[test]
fn toy_form_factor_matches_expected_polynomial() {
    let g = gauss();
    let moments = MomentTable::for_form_factor(&g, 8).unwrap();
    let phi = build_form_factor(&moments, &[1.0, 1.0, 1.0], 8, 2.0).unwrap();
    assert_eq!(phi.coeffs, vec![1.0, 1.0, 1.0]);
    assert_eq!(phi.degree(), 2);
    // phi(p^2) = 1 + p^2/L^2 + p^4/L^4 evaluated at p^2 = L^2.
    assert_eq!(eval_form_factor(&phi, 4.0), 3.0);
    assert_eq!(phi.eval(0.0), 1.0);
}

#[test]
fn form_factor_tends_to_one_at_infinite_scale() {
    let moments = MomentTable::for_form_factor(&gauss(), 8).unwrap();
    let phi = build_form_factor(&moments, &[1.0, 1.0, 1.0], 8, f64::INFINITY).unwrap();
    assert_eq!(phi.eval(123.456), 1.0);
}

#[test]
fn form_factor_normalization_is_recorded() {
    let moments = MomentTable::for_form_factor(&mixed(), 8).unwrap();
    let phi = build_form_factor(&moments, &[2.0, 2.0, 2.0], 8, 1.0).unwrap();
    let f0 = moment(&mixed(), 0).unwrap().value;
    assert!((f0 * phi.c[0] + 0.25).abs() < 1e-15);
    assert!((phi.c_rescale - (-0.25 / (f0 * 2.0))).abs() < 1e-15);
    // Uniform rescaling preserves the ratios, hence the polynomial.
    assert_eq!(phi.coeffs[0], 1.0);
    let expect_r1 = moment(&mixed(), -2).unwrap().value / f0;
    assert!((phi.coeffs[1] - expect_r1).abs() < 1e-15);
}

#[test]
fn form_factor_domain_errors() {
    let moments = MomentTable::for_form_factor(&gauss(), 8).unwrap();
    assert!(matches!(
        build_form_factor(&moments, &[1.0, 1.0, 1.0], 7, 1.0),
        Err(CutoffError::Domain(_))
    ));
    assert!(matches!(
        build_form_factor(&moments, &[1.0, 1.0, 1.0], 6, 1.0),
        Err(CutoffError::Domain(_))
    ));
    assert!(matches!(
        build_form_factor(&moments, &[1.0, 1.0], 8, 1.0),
        Err(CutoffError::Domain(_))
    ));
    assert!(matches!(
        build_form_factor(&moments, &[1.0, 1.0, 1.0, 1.0], 10, 1.0),
        Err(CutoffError::MissingMoment(-6))
    ));
    assert!(matches!(
        build_form_factor(&moments, &[1.0, 1.0, 1.0], 8, 0.0),
        Err(CutoffError::Domain(_))
    ));
}

#[test]
fn positivity_scan_reports_violation_interval() {
    let moments = MomentTable::for_form_factor(&gauss(), 8).unwrap();
    let good = build_form_factor(&moments, &[1.0, 1.0, 1.0], 8, 1.0).unwrap();
    assert!(good.positivity_scan(0.0, 50.0, 400).is_empty());

    // Ratios 1, -10, 1 give phi(x) = 1 - 10x + x^2 with roots near 0.1 and 9.9.
    let bad = build_form_factor(&moments, &[1.0, -10.0, 1.0], 8, 1.0).unwrap();
    let violations = bad.positivity_scan(0.0, 50.0, 2000);
    assert_eq!(violations.len(), 1);
    let (lo, hi) = violations[0];
    let root_lo = 5.0 - 24.0f64.sqrt();
    let root_hi = 5.0 + 24.0f64.sqrt();
    assert!((lo - root_lo).abs() < 1e-6, "lo = {lo}");
    assert!((hi - root_hi).abs() < 1e-6, "hi = {hi}");
}

#[test]
fn table_density_moments_approximate_exponential() {
    let g = exp_table(3000, 1e-6, 40.0);
    for (k, expect) in [(0, 1.0), (-2, 1.0), (-4, 2.0)] {
        let m = moment(&g, k).unwrap();
        assert!((m.value - expect).abs() < 2e-4, "k = {k}: {}", m.value);
    }
}

#[test]
fn table_density_derivative_fine_vs_coarse() {
    let fine = exp_table(3000, 1e-6, 40.0);
    let d2 = derivative_at_zero(&fine, 2).unwrap();
    assert!((d2 + 2.0).abs() < 5e-3, "d2 = {d2}");

    let coarse = exp_table(12, 0.1, 10.0);
    assert!(matches!(
        derivative_at_zero(&coarse, 4),
        Err(CutoffError::Accuracy(_))
    ));
}

#[test]
fn table_loads_from_file_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("density.txt");
    let mut file = std::fs::File::create(&path).unwrap();
    writeln!(file, "# t  g(t)").unwrap();
    for i in 0..200 {
        let t = 0.01 + i as f64 * 0.05;
        writeln!(file, "{} {}", t, (-t).exp()).unwrap();
    }
    drop(file);
    let g = CutoffFunction::parse(&format!("table:{}", path.display())).unwrap();
    match &g {
        CutoffFunction::Table(table) => assert_eq!(table.len(), 200),
        other => panic!("expected table, got {other:?}"),
    }

    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1.0 0.5\n0.5 0.2\n").unwrap();
    assert!(matches!(
        CutoffFunction::parse(&format!("table:{}", bad.display())),
        Err(CutoffError::Table(_))
    ));
}
