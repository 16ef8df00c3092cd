use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use spde_uniq_lab::config::parse_scenario;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_spde-uniq-lab"));
    c.env_remove("SPDE_UNIQ_LAB_OUT");
    c
}

fn run(dir: &Path, command: &str, scenario: &str, extra: &[&str]) -> Output {
    let file = dir.join(format!("{command}-{}.toml", extra.len()));
    std::fs::write(&file, scenario).unwrap();
    bin()
        .arg(command)
        .arg("--scenario")
        .arg(&file)
        .args(extra)
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

const HEAT: &str = r#"
[equation]
family = "heat-perturb"
nonlinearity = { kind = "sine", amplitude = 1.0, frequency = 1.0 }
clip = 1.0

[spectral]
d = 1
n = 16

[noise]
delta = "3/10"

[initial]
preset = "smooth-bump"

[run]
horizon = 0.5
step = 0.00390625
paths = 64
seed = 11
"#;

#[test]
fn check_reports_limiting_route_for_burgers() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = "[equation]\nfamily = \"burgers\"\n[spectral]\nd = 1\nn = 16\n[noise]\ndelta = \"3/10\"\n[run]\nhorizon = 1.0\n";
    let out = run(dir.path(), "check", scenario, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("route           Thm2.6-limiting"), "{stdout}");
}

#[test]
fn inadmissible_simulation_needs_override() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = "[equation]\nfamily = \"heat-perturb\"\n[spectral]\nd = 3\nn = 8\n[noise]\ndelta = \"1/10\"\n[run]\nhorizon = 0.25\nstep = 0.0625\npaths = 4\n";
    let out_dir = dir.path().join("o");
    let out = run(dir.path(), "simulate", scenario, &["--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("δ must exceed 1/4"), "{}", text(&out.stderr));
    assert!(!out_dir.exists());

    let out = run(dir.path(), "simulate", scenario, &["--out", out_dir.to_str().unwrap(), "--override-admissibility"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("warning"));
    let manifest = std::fs::read_to_string(out_dir.join("summary.csv.manifest.toml")).unwrap();
    assert!(manifest.contains("admissibility_overridden = true"));

    let out = run(dir.path(), "check", scenario, &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let out = run(dir.path(), "simulate", HEAT, &["--out", first.to_str().unwrap(), "--seed", "5", "--paths", "16"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    for f in ["trajectory.csv", "summary.csv"] {
        assert!(first.join(f).exists());
        assert!(first.join(format!("{f}.manifest.toml")).exists());
    }
    let manifest: toml::Table = std::fs::read_to_string(first.join("trajectory.csv.manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(manifest["seed"].as_integer(), Some(5));
    assert_eq!(manifest["paths"].as_integer(), Some(16));
    assert_eq!(manifest["mode_ordering"].as_array().unwrap().len(), 16);

    // the embedded scenario reproduces the run bit for bit
    let embedded = toml::to_string(manifest["scenario"].as_table().unwrap()).unwrap();
    let parsed = parse_scenario(&embedded).unwrap();
    assert_eq!(parsed.digest(), manifest["config_digest"].as_str().unwrap());
    let second = dir.path().join("second");
    let out = run(dir.path(), "simulate", &embedded, &["--out", second.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["trajectory.csv", "summary.csv"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap());
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let env_dir: PathBuf = dir.path().join("from-env");
    let file = dir.path().join("s.toml");
    std::fs::write(&file, HEAT).unwrap();
    let out = bin()
        .env("SPDE_UNIQ_LAB_OUT", &env_dir)
        .args(["simulate", "--paths", "2", "--scenario"])
        .arg(&file)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(env_dir.join("summary.csv").exists());
}

#[test]
fn blow_up_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = r#"
[equation]
family = "heat-polynomial"
p = 3
nonlinearity = { kind = "polynomial", coefficients = [0.0, 0.0, 0.0, 50.0] }
[spectral]
d = 1
n = 8
[noise]
delta = "3/10"
[initial]
preset = "e1"
scale = 20.0
[run]
horizon = 1.0
step = 0.0078125
paths = 2
"#;
    let out = run(dir.path(), "simulate", scenario, &["--out", dir.path().join("o").to_str().unwrap(), "--override-admissibility"]);
    assert_eq!(out.status.code(), Some(3), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("blew up"));
}

#[test]
fn unknown_key_is_reported_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = HEAT.replace("delta = \"3/10\"", "delta = \"3/10\"\ndelta_prime_typo = 0.1");
    let out = run(dir.path(), "check", &scenario, &[]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("delta_prime_typo") && stderr.contains("line 13, column 1"), "{stderr}");
}

#[test]
fn compare_identical_configs_gives_zero_scores() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let out = run(dir.path(), "compare", HEAT, &["--out", o.to_str().unwrap(), "--paths", "32"]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let mut rdr = csv::Reader::from_path(o.join("comparison.csv")).unwrap();
    let z: Vec<f64> = rdr.records().map(|r| r.unwrap()[5].parse().unwrap()).collect();
    assert_eq!(z.len(), 8);
    assert!(z.iter().all(|&v| v == 0.0));
    assert!(o.join("comparison.csv.manifest.toml").exists());
}

#[test]
fn compare_detects_a_truncated_noise_field() {
    // three retained modes miss a fifth of the stationary variance
    let dir = tempfile::tempdir().unwrap();
    let scenario = HEAT
        .replace("n = 16", "n = 3")
        .replace("delta = \"3/10\"", "delta = \"0\"")
        .replace("horizon = 0.5", "horizon = 1.0")
        + "[compare]\nn = 64\nlambda = 0.5\n";
    let o = dir.path().join("o");
    let out = run(dir.path(), "compare", &scenario, &["--out", o.to_str().unwrap(), "--paths", "400"]);
    assert_eq!(out.status.code(), Some(4), "{}\n{}", text(&out.stdout), text(&out.stderr));
}

#[test]
fn kolmogorov_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let scenario = HEAT.to_string() + "[kolmogorov]\nsmoothing_modes = 16\n";
    let out = run(dir.path(), "kolmogorov", &scenario, &["--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    for f in ["smoothing.csv", "factors.csv", "solution.csv"] {
        assert!(o.join(f).exists(), "{f}");
        assert!(o.join(format!("{f}.manifest.toml")).exists(), "{f}");
    }
    assert!(text(&out.stdout).contains("converged true"));
}
