use std::process::{Command, Output};

fn chemns(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chemns"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn check_criteria_names_violation() {
    let out = chemns(&["check-criteria", "--alpha", "1", "--kind", "ps", "--pairs", "2,3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("q₁ > 3"), "{text}");

    let strict = chemns(&["check-criteria", "--alpha", "1", "--kind", "ps", "--pairs", "2,3", "--strict"]);
    assert_eq!(strict.status.code(), Some(4));

    let ok = chemns(&["check-criteria", "--alpha", "1", "--kind", "ps", "--pairs", "2,inf,inf,4"]);
    let text = String::from_utf8(ok.stdout).unwrap();
    assert_eq!(text.matches("admissible").count(), 2, "{text}");
}

#[test]
fn out_of_range_alpha_is_a_config_error() {
    let out = chemns(&["check-criteria", "--alpha", "0.7", "--kind", "ps", "--pairs", "2,inf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ini");
    std::fs::write(&path, "[grid]\nn = 16\n[model]\nalpha = 0.5\n").unwrap();
    let out = chemns(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha > 1/2"));
}

#[test]
fn validate_passes() {
    let out = chemns(&["validate", "--grid", "8", "--strict"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}");
    assert!(!text.contains("FAIL"), "{text}");
}

#[test]
fn run_then_fit_decay() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("heat.ini");
    std::fs::write(
        &path,
        "[grid]\ndim = 2\nn = 64\nlength = 50\n[model]\nalpha = 1\nchi = constant 0\nvelocity = frozen\n\
         [initial]\npreset = gaussian-blob\nn_amplitude = 0.01\nc_amplitude = 1\nwidth = 1.4142135623730951\n\
         [stepper]\ndt_init = 0.25\nt_end = 20\npositivity_tol = 1e-6\n[diagnostics]\nfit = c_L2 2 20\n",
    )
    .unwrap();
    let out = chemns(&["run", path.to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(out.status.success(), "{text}{}", String::from_utf8_lossy(&out.stderr));
    assert!(text.contains("fit c_L2"), "{text}");
    let csv = dir.path().join("out/timeseries.csv");
    let fit = chemns(&["fit-decay", csv.to_str().unwrap(), "--column", "c_L2", "--window", "2,20", "--dim", "2"]);
    let line = String::from_utf8(fit.stdout).unwrap();
    assert!(fit.status.success(), "{line}");
    let exponent: f64 = line
        .split("exponent ")
        .nth(1)
        .and_then(|s| s.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((exponent + 0.5).abs() < 0.05, "{line}");
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "ini") {
            let text = std::fs::read_to_string(&path).unwrap();
            chemns::io::parse_config(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 3);
}
