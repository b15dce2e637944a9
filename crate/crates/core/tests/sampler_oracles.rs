//! Samplers against quadrature and independently coded references.

mod oracle_lib;

use oracle_lib::*;

fn assert_pass(c: Check) {
    println!("{c}");
    assert!(c.pass, "{c}");
}

#[test]
fn tukey_representation_has_closed_form() {
    let (pointwise, odds) = tukey_closed_form(100, 1);
    assert_pass(pointwise);
    assert_pass(odds);
}

#[test]
fn mu_matches_quadrature() {
    assert_pass(mu_oracle(100_000));
}

#[test]
fn joint_phi_sigma_matches_grid_posterior() {
    assert_pass(phi_sigma_joint_oracle(1_000_000));
}

#[test]
fn individual_phi_matches_quadrature() {
    assert_pass(phi_individual_oracle(200_000));
}

#[test]
fn individual_sigma_matches_quadrature() {
    assert_pass(sigma_individual_oracle(200_000));
}

#[test]
fn pg_logistic_matches_grid_posterior() {
    assert_pass(pg_beta_oracle(200_000));
}

#[test]
fn lambda_matches_quadrature() {
    assert_pass(lambda_oracle(100_000, 10));
}

#[test]
fn pg_moments() {
    for c in pg_moment_checks(100_000) {
        assert_pass(c);
    }
}

#[test]
fn filter_without_missing_values_is_plain_cpfas() {
    let (fields, ancestors) = cpfas_reduction(25, 12, 3);
    assert_pass(fields);
    assert_pass(ancestors);
}

#[test]
fn toy_filter_marginals_fully_observed() {
    for c in icpf_toy_marginals([Some(0.8), Some(-1.5), Some(0.2)], 1.1, 100_000, 20, 4) {
        assert_pass(c);
    }
}

#[test]
fn toy_filter_marginals_with_informative_gap() {
    for c in icpf_toy_marginals([Some(0.8), None, Some(0.2)], 1.1, 100_000, 20, 5) {
        assert_pass(c);
    }
}

#[test]
fn toy_filter_marginals_missing_at_random() {
    for c in icpf_toy_marginals([Some(0.8), None, Some(0.2)], 0.0, 100_000, 20, 6) {
        assert_pass(c);
    }
}
