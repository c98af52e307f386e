use dmt::randmat::{chi_square_shape, density_shape_test, wishart_sample, CorrelationMatrix};
use dmt::rng::stream;

#[test]
fn sampled_eigenvalues_follow_identity_law() {
    for (i, (m, n)) in [(1, 1), (2, 2), (1, 2)].into_iter().enumerate() {
        let report = density_shape_test(m, n, 100_000, &mut stream(2024, i as u64)).unwrap();
        assert!(report.p_value > 1e-3, "{report:?}");
    }
}

#[test]
fn mismatched_law_is_rejected() {
    let mut rng = stream(5, 0);
    let sigma = CorrelationMatrix::identity(1);
    let draws: Vec<_> = (0..20_000)
        .map(|_| wishart_sample(1, 2, &sigma, &mut rng).unwrap())
        .collect();
    assert!(chi_square_shape(1, 2, &draws).unwrap().p_value > 1e-3);
    assert!(chi_square_shape(1, 1, &draws).unwrap().p_value < 1e-6);

    let sigma = CorrelationMatrix::identity(2);
    let draws: Vec<_> = (0..20_000)
        .map(|_| wishart_sample(2, 3, &sigma, &mut rng).unwrap())
        .collect();
    assert!(chi_square_shape(2, 3, &draws).unwrap().p_value > 1e-3);
    assert!(chi_square_shape(2, 2, &draws).unwrap().p_value < 1e-6);
}
