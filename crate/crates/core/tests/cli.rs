//! End-to-end tests that drive the compiled binary through its public
//! command surface: generation, decomposition, verification, PIT, rank
//! queries, and the documented exit codes for each failure class.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::{env, fs};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_d3recon")
}

fn run(args: &[&str]) -> (i32, String, String) {
    run_with_stdin(args, None)
}

fn run_with_stdin(args: &[&str], stdin: Option<&str>) -> (i32, String, String) {
    let mut cmd = Command::new(bin());
    cmd.args(args)
        .stdin(if stdin.is_some() {
            Stdio::piped()
        } else {
            Stdio::null()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("spawn d3recon");
    if let Some(text) = stdin {
        child
            .stdin
            .take()
            .expect("stdin handle")
            .write_all(text.as_bytes())
            .expect("write stdin");
    }
    let out = child.wait_with_output().expect("wait for d3recon");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).expect("utf-8 stdout"),
        String::from_utf8(out.stderr).expect("utf-8 stderr"),
    )
}

fn scratch(name: &str) -> PathBuf {
    let dir = env::temp_dir().join(format!("d3recon-cli-{name}"));
    fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

fn save(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).expect("write fixture");
    path.to_str().expect("utf-8 path").to_string()
}

fn diag(stdout: &str, key: &str) -> Option<String> {
    stdout
        .lines()
        .find(|l| l.starts_with(key))
        .map(|l| l[key.len()..].trim().to_string())
}

#[test]
fn power_decomposition_workflow() {
    let dir = scratch("power");
    let (code, plant, err) = run(&[
        "gen", "--kind", "power", "--vars", "3", "--k", "2", "--degree", "5", "--seed", "7",
    ]);
    assert_eq!(code, 0, "gen failed: {err}");
    let plant_path = save(&dir, "plant.txt", &plant);

    let (code, claimed, err) = run(&[
        "decompose-symmetric",
        &plant_path,
        "--k",
        "2",
        "--seed",
        "3",
    ]);
    assert_eq!(code, 0, "decompose-symmetric failed: {err}");
    assert_eq!(diag(&claimed, "# fan-in").as_deref(), Some("2"));
    assert!(claimed.contains("# pit pass"));
    let claimed_path = save(&dir, "claimed.txt", &claimed);

    let (code, out, err) = run(&["verify", &plant_path, &claimed_path]);
    assert_eq!(code, 0, "verify failed: {err}");
    assert_eq!(out.trim(), "verified");

    let (code, out, _) = run(&["pit", &plant_path, &claimed_path]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "equal");
}

#[test]
fn verify_rejects_tampered_output() {
    let dir = scratch("tamper");
    let (code, plant, _) = run(&[
        "gen", "--kind", "power", "--vars", "3", "--k", "2", "--degree", "4", "--seed", "9",
    ]);
    assert_eq!(code, 0);
    let plant_path = save(&dir, "plant.txt", &plant);

    let (code, claimed, _) = run(&[
        "decompose-symmetric",
        &plant_path,
        "--k",
        "2",
        "--seed",
        "3",
    ]);
    assert_eq!(code, 0);

    let tampered: String = claimed
        .lines()
        .map(|l| {
            if let Some(rest) = l.strip_prefix("gate ") {
                let c: u64 = rest.trim().parse().expect("gate scalar");
                format!("gate {}\n", c.wrapping_add(1).max(1))
            } else {
                format!("{l}\n")
            }
        })
        .collect();
    assert_ne!(tampered, claimed, "no gate line found to tamper with");
    let tampered_path = save(&dir, "tampered.txt", &tampered);

    let (code, out, _) = run(&["verify", &plant_path, &tampered_path]);
    assert_eq!(code, 1);
    assert_eq!(out.trim(), "mismatch");
}

#[test]
fn pit_distinguishes_different_polynomials() {
    let dir = scratch("pit");
    let (code, a, _) = run(&[
        "gen", "--kind", "power", "--vars", "3", "--k", "2", "--degree", "5", "--seed", "7",
    ]);
    assert_eq!(code, 0);
    let (code, b, _) = run(&[
        "gen", "--kind", "power", "--vars", "3", "--k", "2", "--degree", "6", "--seed", "8",
    ]);
    assert_eq!(code, 0);
    let a_path = save(&dir, "a.txt", &a);
    let b_path = save(&dir, "b.txt", &b);

    let (code, out, _) = run(&["pit", &a_path, &a_path]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "equal");

    let (code, out, _) = run(&["pit", &a_path, &b_path]);
    assert_eq!(code, 1);
    assert_eq!(out.trim(), "unequal");
}

#[test]
fn generation_is_deterministic_per_seed() {
    let args = [
        "gen",
        "--kind",
        "ml-separated",
        "--vars",
        "6",
        "--k",
        "2",
        "--seed",
        "5",
    ];
    let (code, first, _) = run(&args);
    assert_eq!(code, 0);
    let (code, second, _) = run(&args);
    assert_eq!(code, 0);
    assert_eq!(first, second);

    let mut other = args;
    other[8] = "6";
    let (code, third, _) = run(&other);
    assert_eq!(code, 0);
    assert_ne!(first, third);
}

#[test]
fn stdin_input_matches_file_input() {
    let dir = scratch("stdin");
    let (code, plant, _) = run(&[
        "gen", "--kind", "power", "--vars", "3", "--k", "2", "--degree", "4", "--seed", "2",
    ]);
    assert_eq!(code, 0);
    let plant_path = save(&dir, "plant.txt", &plant);

    let file_args = [
        "decompose-symmetric",
        plant_path.as_str(),
        "--k",
        "2",
        "--seed",
        "3",
    ];
    let (code, from_file, _) = run(&file_args);
    assert_eq!(code, 0);

    let (code, from_stdin, err) = run_with_stdin(
        &["decompose-symmetric", "-", "--k", "2", "--seed", "3"],
        Some(&plant),
    );
    assert_eq!(code, 0, "stdin run failed: {err}");
    assert_eq!(from_file, from_stdin);
}

#[test]
fn tensor_decomposition_workflow() {
    let dir = scratch("tensor");
    let tensor = "d3recon/1 tensor\nprime 5\nshape 2 2 2\nentries 1 0 0 0 0 0 0 1\n";
    let tensor_path = save(&dir, "tensor.txt", tensor);

    let (code, claimed, err) = run(&["decompose-tensor", &tensor_path, "--k", "3", "--seed", "1"]);
    assert_eq!(code, 0, "decompose-tensor failed: {err}");
    assert_eq!(diag(&claimed, "# fan-in").as_deref(), Some("2"));
    assert!(claimed.contains("# pit pass"));
    let claimed_path = save(&dir, "claimed.txt", &claimed);

    let (code, out, _) = run(&["verify", &tensor_path, &claimed_path]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "verified");
}

#[test]
fn reconstruct_ml_workflow() {
    let dir = scratch("ml");
    let (code, plant, _) = run(&[
        "gen",
        "--kind",
        "ml-separated",
        "--vars",
        "6",
        "--k",
        "2",
        "--seed",
        "11",
    ]);
    assert_eq!(code, 0);
    let plant_path = save(&dir, "plant.txt", &plant);

    let (code, claimed, err) = run(&["reconstruct-ml", &plant_path, "--k", "2", "--seed", "3"]);
    assert_eq!(code, 0, "reconstruct-ml failed: {err}");
    assert!(claimed.contains("# pit pass"));
    let fan_in: usize = diag(&claimed, "# fan-in")
        .expect("fan-in line")
        .parse()
        .expect("fan-in count");
    assert!(fan_in <= 2);
    let claimed_path = save(&dir, "claimed.txt", &claimed);

    let (code, out, _) = run(&["verify", &plant_path, &claimed_path]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "verified");
}

#[test]
fn rank_flags_select_the_notion() {
    let dir = scratch("rank");
    let (code, plant, _) = run(&[
        "gen",
        "--kind",
        "ml-separated",
        "--vars",
        "6",
        "--k",
        "2",
        "--seed",
        "4",
    ]);
    assert_eq!(code, 0);
    let plant_path = save(&dir, "plant.txt", &plant);

    let (code, out, _) = run(&["rank", &plant_path, "--syntactic"]);
    assert_eq!(code, 0);
    let _: usize = out.trim().parse().expect("syntactic rank");

    let (code, out, _) = run(&["rank", &plant_path, "--semantic"]);
    assert_eq!(code, 0);
    let _: usize = out.trim().parse().expect("semantic rank");

    let (code, _, _) = run(&["rank", &plant_path, "--syntactic", "--semantic"]);
    assert_eq!(code, 3);

    let (code, _, _) = run(&["rank", &plant_path]);
    assert_eq!(code, 3);
}

#[test]
fn io_failures_exit_three() {
    let (code, _, err) = run(&["decompose-symmetric", "/no/such/input.txt", "--k", "2"]);
    assert_eq!(code, 3);
    assert!(!err.is_empty());

    let dir = scratch("malformed");
    let bad_path = save(&dir, "bad.txt", "garbage here\n");
    let (code, _, err) = run(&["decompose-symmetric", &bad_path, "--k", "2"]);
    assert_eq!(code, 3);
    assert!(err.contains("line 1"), "diagnostic should cite the line: {err}");
}

#[test]
fn budget_exhaustion_exits_two() {
    let dir = scratch("budget");
    let (code, plant, _) = run(&[
        "gen",
        "--kind",
        "ml-separated",
        "--vars",
        "6",
        "--k",
        "2",
        "--seed",
        "11",
    ]);
    assert_eq!(code, 0);
    let plant_path = save(&dir, "plant.txt", &plant);

    let (code, _, err) = run(&[
        "reconstruct-ml",
        &plant_path,
        "--k",
        "2",
        "--budget-interp-vars",
        "0",
    ]);
    assert_eq!(code, 2);
    assert!(err.contains("budget"), "diagnostic should name the budget: {err}");
}

#[test]
fn inputs_outside_the_class_exit_one() {
    let dir = scratch("class");
    let poly = "d3recon/1 poly\nprime 2305843009213693951\nvars 2\nterm 3: 0^2\nterm 1: 1^1\n";
    let poly_path = save(&dir, "poly.txt", poly);

    let (code, _, err) = run(&["reconstruct-ml", &poly_path, "--k", "2"]);
    assert_eq!(code, 1);
    assert!(err.contains("not in"), "diagnostic should name the class: {err}");
}

#[test]
fn help_and_version_exit_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("decompose-symmetric"));

    let (code, out, _) = run(&["--version"]);
    assert_eq!(code, 0);
    assert!(out.contains("d3recon"));
}
