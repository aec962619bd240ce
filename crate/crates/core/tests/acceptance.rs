//! Acceptance gate: one test per verification check, each printing a single
//! pass/fail line (visible with `--nocapture` or on failure) and enforcing
//! the check's runtime budget.

use bowtie_mbqc::verify::run_check;

fn run(name: &str, exhaustive: bool, budget_millis: u128) {
    let r = run_check(name, exhaustive).expect("known check name");
    println!(
        "{} {} ({} ms): {}",
        if r.passed { "PASS" } else { "FAIL" },
        r.name,
        r.millis,
        r.detail
    );
    assert!(r.passed, "{} failed: {}", r.name, r.detail);
    assert!(
        r.millis < budget_millis,
        "{} took {} ms, budget {} ms",
        r.name,
        r.millis,
        budget_millis
    );
}

#[test]
fn c01_entangler_truth_table_is_exact() {
    run("entangler", false, 1);
}

#[test]
fn c02_diagonal_gates_commute_everywhere() {
    run("commutation", false, 1_000);
}

#[test]
fn c03_byproduct_conjugation_is_exhaustive() {
    run("byproduct", false, 1_000);
}

#[test]
fn c04_enlargement_corrects_every_branch() {
    run("enlargement", false, 5_000);
}

#[test]
fn c05_compact_toffoli_corrects_every_branch() {
    run("toffoli", true, 120_000);
}

#[test]
fn c06_bridging_branches_carry_quarter_turns() {
    run("bridge", false, 1_000);
}

#[test]
fn c07_ideal_couplings_realize_the_entangler() {
    run("ideal-point", false, 1_000);
}

#[test]
fn c08_offset_surface_has_the_expected_shape() {
    run("surface", false, 10_000);
}

#[test]
fn c09_regime_arithmetic_matches_quoted_scales() {
    run("regime", false, 1);
}

#[test]
fn c10_resource_constants_are_exact() {
    run("resources", false, 1);
}

#[test]
fn c11_removal_semantics_are_exact() {
    run("removal", false, 1_000);
}
