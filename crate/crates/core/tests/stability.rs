use etd_lab::linalg::Matrix;
use etd_lab::stability::{
    agreement_study, expected_update_iterate, key_matrix, simulate_td_lambda, FiniteMRP, Verdict,
};

#[test]
fn agreement_holds_on_another_stream() {
    let cases = agreement_study(77, 8, 5_000_000).unwrap();
    assert_eq!(cases.len(), 16);
    for c in &cases {
        assert!(
            c.agrees(),
            "{:?} chain with {} states: diverged={} after {} steps (alpha {}, margin {})",
            c.verdict,
            c.mrp.states(),
            c.simulation.diverged,
            c.simulation.steps,
            c.plan.alpha,
            c.margin
        );
    }
}

#[test]
fn tabular_features_are_always_stable() {
    // with one feature per state TD(λ) converges for any λ profile
    let p = Matrix::from_rows(&[vec![0.1, 0.9, 0.0], vec![0.0, 0.2, 0.8], vec![0.7, 0.0, 0.3]]);
    for lambda in [[0.0, 1.0, 0.0], [1.0, 0.0, 0.5], [0.9, 0.9, 0.0]] {
        let mrp = FiniteMRP::new(p.clone(), vec![0.95; 3], lambda.to_vec(), Matrix::identity(3)).unwrap();
        let report = key_matrix(&mrp).unwrap();
        assert_eq!(report.verdict, Verdict::Stable);
        let sim = simulate_td_lambda(&mrp, 0.01, &[1.0; 3], 200_000, 5).unwrap();
        assert!(!sim.diverged);
    }
}

#[test]
fn counterexample_expected_update_grows_geometrically() {
    let a = key_matrix(&FiniteMRP::counterexample()).unwrap().a;
    let it = expected_update_iterate(&a, 0.01, &[1.0, 1.0], 1_000_000).unwrap();
    assert!(it.diverged);
    // θ_k rotates by arg(z) and grows by |z| per step, z = 1 − α·λ with
    // λ = −0.20625 ± 0.234437i; over whole turns only the growth remains
    let (re, im) = (1.0 + 0.01 * 0.20625f64, 0.01 * 0.234437f64);
    let rate = re.hypot(im);
    let turn = (2.0 * std::f64::consts::PI / im.atan2(re)).round() as usize;
    let n = it.norms.len() - 1;
    let observed = (it.norms[n] / it.norms[n - 2 * turn]).powf(1.0 / (2 * turn) as f64);
    assert!((observed - rate).abs() < 1e-5, "{observed} vs {rate}");
}
