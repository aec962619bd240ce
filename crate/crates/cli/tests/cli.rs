use std::env;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bowtie-mbqc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawning the binary")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_str(&stdout_of(out)).expect("json stdout")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn scratch(name: &str) -> PathBuf {
    env::temp_dir().join(format!("bowtie-cli-{}-{}", std::process::id(), name))
}

#[test]
fn toffoli_reports_unit_fidelity_and_full_record() {
    let out = run(&["toffoli", "--in", "zero,zero,zero", "--outcomes", "0000000000"]);
    assert_eq!(exit_code(&out), 0);
    let v = json_of(&out);
    assert_eq!(v["record"].as_array().unwrap().len(), 10);
    assert_eq!(v["output_sites"], serde_json::json!([11, 12, 13]));
    assert_eq!(v["output_amplitudes"].as_array().unwrap().len(), 8);
    assert!(v["fidelity_vs_oracle"].as_f64().unwrap() >= 1.0 - 1e-9);
}

#[test]
fn toffoli_requires_an_input() {
    let out = run(&["toffoli"]);
    assert_eq!(exit_code(&out), 2);
    assert!(!out.stderr.is_empty());
}

#[test]
fn toffoli_rejects_wrong_outcome_count() {
    let out = run(&["toffoli", "--in", "plus,plus,plus", "--outcomes", "000"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn sampled_runs_repeat_bit_for_bit() {
    let a = scratch("sampled-a.json");
    let b = scratch("sampled-b.json");
    for path in [&a, &b] {
        let out = run(&[
            "toffoli",
            "--in",
            "plus,one,zero",
            "--sample",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&out), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    fs::remove_file(a).ok();
    fs::remove_file(b).ok();
}

#[test]
fn sweep_emits_the_expected_grid() {
    let out = run(&["sweep"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "tau,epsilon,fidelity");
    assert_eq!(lines.len(), 1 + 101 * 41);
    assert!(lines.contains(&"1.000000000000,0.000000000000,1.000000000000"));
}

#[test]
fn sweep_validates_grid_arguments() {
    assert_eq!(exit_code(&run(&["sweep", "--eps-index", "9"])), 2);
    assert_eq!(exit_code(&run(&["sweep", "--tau-count", "1"])), 2);
}

#[test]
fn lattice_map_pgm_has_standard_header() {
    let out = run(&["lattice-map", "--format", "pgm"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("P2"));
    assert_eq!(lines.next(), Some("121 121"));
    assert_eq!(lines.next(), Some("255"));
}

#[test]
fn lattice_map_csv_starts_at_the_origin() {
    let out = run(&["lattice-map"]);
    assert_eq!(exit_code(&out), 0);
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,V");
    assert_eq!(lines[1], "0.000000000000,0.000000000000,4.000000000000");
}

#[test]
fn lattice_map_rejects_degenerate_grids() {
    assert_eq!(exit_code(&run(&["lattice-map", "--resolution", "1"])), 2);
}

#[test]
fn verify_single_check_prints_a_pass_line() {
    let out = run(&["verify", "--only", "entangler"]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout_of(&out).starts_with("PASS entangler"));
}

#[test]
fn verify_rejects_unknown_check_names() {
    let out = run(&["verify", "--only", "nonsense"]);
    assert_eq!(exit_code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown check"));
}

#[test]
fn verify_writes_a_json_report() {
    let path = scratch("verify.json");
    let out = run(&["verify", "--only", "resources", "--out", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v[0]["name"], "resources");
    assert_eq!(v[0]["passed"], true);
    fs::remove_file(path).ok();
}

#[test]
fn estimate_reports_exact_constants() {
    let out = run(&["estimate", "--n", "4"]);
    assert_eq!(exit_code(&out), 0);
    let v = json_of(&out);
    assert_eq!(v["toffolis_per_nCNOT"], 4);
    assert_eq!(v["cluster_qubits_per_toffoli"], 65);
    assert_eq!(v["compact_qubits_per_toffoli"], 13);
    assert_eq!(v["three_qubit_search_cluster_qubits"], 245);
}

#[test]
fn estimate_rejects_tiny_registers() {
    assert_eq!(exit_code(&run(&["estimate", "--n", "2"])), 2);
}

#[test]
fn bridge_outcomes_carry_opposite_quarter_turns() {
    for (bit, im) in [("0", 1.0), ("1", -1.0)] {
        let out = run(&["bridge", "--outcomes", bit]);
        assert_eq!(exit_code(&out), 0);
        let v = json_of(&out);
        assert_eq!(v["probability"], 0.5);
        assert_eq!(v["classification"]["diagonal"], true);
        assert_eq!(v["classification"]["corner_phase"], serde_json::json!([0.0, im]));
        assert_eq!(v["classification"]["squared_is_pair_entangler"], true);
        assert_eq!(v["classification"]["pair_linked_matches_reference"], true);
    }
}

#[test]
fn break_link_keeps_or_cuts_the_bond() {
    let kept = json_of(&run(&["bridge", "--basis", "z", "--outcomes", "1"]));
    assert_eq!(kept["link_kept"], true);
    let cut = json_of(&run(&["bridge", "--basis", "z", "--outcomes", "0"]));
    assert_eq!(cut["link_kept"], false);
    assert_eq!(kept["probability"], 0.5);
    assert_eq!(cut["probability"], 0.5);
}

#[test]
fn wire_matches_a_hadamard_chain() {
    let out = run(&["wire", "--in", "zero", "--length", "2", "--outcomes", "11"]);
    assert_eq!(exit_code(&out), 0);
    let v = json_of(&out);
    assert_eq!(v["length"], 2);
    assert!(v["fidelity_vs_ideal"].as_f64().unwrap() >= 1.0 - 1e-9);
}

#[test]
fn enlarge_corrects_the_chosen_branch() {
    let out = run(&["enlarge", "--in", "one,one,one", "--outcomes", "1001"]);
    assert_eq!(exit_code(&out), 0);
    let v = json_of(&out);
    assert!(v["fidelity_vs_entangler"].as_f64().unwrap() >= 1.0 - 1e-9);
}

#[test]
fn out_files_leave_no_temporaries_behind() {
    let dir = scratch("atomic-dir");
    fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.json");
    let out = run(&["estimate", "--n", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 0);
    assert!(path.exists());
    let leftovers: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().contains("tmp"))
        .collect();
    assert!(leftovers.is_empty());
    fs::remove_dir_all(dir).ok();
}

#[test]
fn thread_cap_does_not_change_results() {
    let free = run(&["sweep", "--tau-count", "3", "--eps-count", "3"]);
    let capped = bin()
        .args(["sweep", "--tau-count", "3", "--eps-count", "3"])
        .env("BOWTIE_MBQC_THREADS", "1")
        .output()
        .expect("spawning the binary");
    assert_eq!(exit_code(&capped), 0);
    assert_eq!(free.stdout, capped.stdout);
}

#[test]
fn thread_cap_must_be_a_positive_integer() {
    for bad in ["0", "lots"] {
        let out = bin()
            .args(["estimate", "--n", "3"])
            .env("BOWTIE_MBQC_THREADS", bad)
            .output()
            .expect("spawning the binary");
        assert_eq!(exit_code(&out), 2);
    }
}
