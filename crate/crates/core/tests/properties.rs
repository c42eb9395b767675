mod common;

use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn empirical_mass_is_hitting_density(case in common::identity_case()) {
        common::check_identity(&case)?;
    }

    #[test]
    fn w1_is_a_metric(triple in common::measure_triple()) {
        common::check_w1_axioms(&triple)?;
    }
}

#[test]
fn lamp_box_multiplication_is_associative() {
    assert_eq!(common::lamp_associativity().unwrap(), 64 * 64 * 64);
}

#[test]
fn weak_sensitivity_agrees_off_the_diagonal() {
    for entry in common::entries() {
        common::off_diagonal_agreement(&entry).unwrap();
    }
}

#[test]
fn positives_respect_the_inclusion_chain() {
    for entry in common::entries() {
        common::inclusion_chain(&entry).unwrap();
    }
}

#[test]
fn diagonal_positives_follow_the_support() {
    for entry in common::entries() {
        let support = common::diagonal_support_law(&entry).unwrap();
        assert!(!support.is_empty(), "{}", entry.name);
    }
}
