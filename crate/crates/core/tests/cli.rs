//! Command-line workflows: configs, sweeps, fits, CSV format and exit codes.

use std::path::Path;
use std::process::Command;

use twowell::scaling_cli::*;

const CURL: &str = r#"{"op":"curl","d":2,"F":[[0.8,0.3],[0.1,0.4]],"a0":[[0,0],[0,0]],"a1":[[2,0],[0,1]]}"#;
const CC_RANK_ONE: &str = r#"{"op":"curlcurl","d":2,"F":[[0.5,0],[0,0]],"a0":[[0,0],[0,0]],"a1":[[1,0],[0,0]]}"#;
const DIV_EQUI: &str = r#"{"op":"div","d":2,"F":[[0.5,0],[0,0.5]],"a0":[[0,0],[0,0]],"a1":[[1,0],[0,1]]}"#;
const PURE: &str = r#"{"op":"curl","d":2,"F":[[6,0],[0,3]],"a0":[[0,0],[0,0]],"a1":[[2,0],[0,1]]}"#;
const SAME: &str = r#"{"op":"curl","d":2,"F":[[1,0],[0,1]],"a0":[[1,0],[0,1]],"a1":[[1,0],[0,1]]}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twowell"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn record(eps: f64, corrected: f64, n: usize) -> SweepRecord {
    SweepRecord {
        epsilon: eps,
        n,
        e_total: corrected,
        e_elastic: corrected,
        e_surface: 0.0,
        e0: 0.0,
        corrected,
        flags: "grad".into(),
    }
}

#[test]
fn g17_formatting() {
    assert_eq!(fmt_g17(0.0), "0");
    assert_eq!(fmt_g17(1.0), "1");
    assert_eq!(fmt_g17(-2.5), "-2.5");
    assert_eq!(fmt_g17(0.1), "0.10000000000000001");
    assert_eq!(fmt_g17(1e-7), "9.9999999999999995e-08");
    assert_eq!(fmt_g17(1e-3), "0.001");
    assert_eq!(fmt_g17(1e20), "1e+20");
    assert_eq!(fmt_g17(123456.0), "123456");
    assert_eq!(fmt_g17(1.0 / 3.0), "0.33333333333333331");
    for x in [0.1, 1e-7, 3.7e-12, 12345.678, -0.25] {
        assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
    }
}

#[test]
fn analyze_predictions() {
    for (text, pred) in [
        (CURL, Prediction::TwoThirds),
        (CC_RANK_ONE, Prediction::FourFifths),
        (DIV_EQUI, Prediction::Open),
        (PURE, Prediction::Trivial),
    ] {
        let r = analyze(&Config::from_json(text).unwrap()).unwrap();
        assert_eq!(r.predicted_exponent, pred, "{text}");
    }
    let r = analyze(&Config::from_json(CC_RANK_ONE).unwrap()).unwrap();
    assert_eq!(r.predicted_value, Some(0.8));
}

#[test]
fn config_validation() {
    assert!(matches!(Config::from_json("{"), Err(CliError::Config(_))));
    let bad_shape = CURL.replace("[[2,0],[0,1]]", "[[2,0,0],[0,1,0]]");
    assert!(matches!(Config::from_json(&bad_shape), Err(CliError::Config(_))));
    let bad_tau = CURL.replace("}", ",\"tau\":0.6}");
    assert!(Config::from_json(&bad_tau).is_err());
    let bad_eps = CURL.replace("}", ",\"eps_start\":1e-3,\"eps_end\":1e-5}");
    assert!(Config::from_json(&bad_eps).is_err());
    let same = Config::from_json(SAME).unwrap();
    assert!(matches!(same.problem(), Err(CliError::Degenerate(_))));
    assert_eq!(same.problem().unwrap_err().exit_code(), EXIT_DEGENERATE);
    let cfg = Config::from_json(CURL).unwrap();
    assert_eq!((cfg.tau, cfg.points, cfg.seed, cfg.grid_n), (DEFAULT_TAU, DEFAULT_POINTS, DEFAULT_SEED, DEFAULT_GRID_N));
    assert_eq!(Config::from_problem(&cfg.problem().unwrap()), cfg);
}

#[test]
fn synthetic_fits() {
    let eps = eps_grid(1e-7, 1e-3, 17);
    assert_eq!(eps.len(), 17);
    assert_eq!((eps[0], eps[16]), (1e-7, 1e-3));
    let recs: Vec<_> = eps.iter().map(|&e| record(e, e.powf(2.0 / 3.0), 10)).collect();
    let f = fit_records(&recs, None, FIT_MIN_N).unwrap();
    assert!((f.slope - 2.0 / 3.0).abs() < 1e-9);
    assert!((f.r_squared - 1.0).abs() < 1e-12);
    let recs: Vec<_> = eps.iter().map(|&e| record(e, 3.0 * e, 10)).collect();
    let f = fit_records(&recs, None, FIT_MIN_N).unwrap();
    assert!((f.slope - 1.0).abs() < 1e-9 && (f.intercept - 3f64.ln()).abs() < 1e-8);
    assert!(fit_records(&recs[..4], None, FIT_MIN_N).is_err());
    assert!(fit_records(&recs, Some((3e-4, 1e-3)), FIT_MIN_N).is_err());
    let coarse: Vec<_> = eps.iter().map(|&e| record(e, e, 3)).collect();
    assert!(fit_records(&coarse, None, FIT_MIN_N).is_err());
}

#[test]
fn csv_roundtrip_and_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = sweep(&Config::from_json(CURL).unwrap()).unwrap();
    let p = dir.path().join("s.csv");
    write_sweep_csv(std::fs::File::create(&p).unwrap(), &out.records).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("epsilon,N,E_total,E_elastic,E_surface,E0,corrected,flags\n"));
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 18);
    assert_eq!(read_sweep_csv(&p).unwrap(), out.records);
    let f = fit_csv(&p, None, FIT_MIN_N).unwrap();
    assert_eq!(Some(f), out.fit);
    let bad = write(dir.path(), "bad.csv", "eps,N\n1,2\n");
    assert!(read_sweep_csv(&bad).is_err());
}

#[test]
fn sweep_invariants() {
    for text in [CURL, CC_RANK_ONE] {
        let cfg = Config::from_json(text).unwrap();
        let out = sweep(&cfg).unwrap();
        assert!(out.note.is_none());
        for r in &out.records {
            assert!(r.corrected > 0.0);
            assert!(r.e_total >= r.e0);
            assert!((r.e_total - r.e_elastic - r.epsilon * r.e_surface).abs() <= 1e-12 * r.e_total);
            assert!((r.corrected - (r.e_total - r.e0)).abs() <= 1e-9 * r.corrected);
            assert_eq!(r.flags.contains("coarse"), r.n < FIT_MIN_N);
        }
        let data = cfg.problem().unwrap();
        let field = build_field(&data, 8, cfg.tau).unwrap();
        let mut last = f64::NEG_INFINITY;
        for e in eps_grid(1e-6, 1e-2, 20) {
            let c = field.ledger.corrected(e);
            assert!(c >= last);
            last = c;
        }
    }
}

#[test]
fn sweep_slopes() {
    let out = sweep(&Config::from_json(CURL).unwrap()).unwrap();
    let f = out.fit.unwrap();
    assert!((0.63..=0.70).contains(&f.slope) && f.r_squared >= 0.99, "{f:?}");
    let out = sweep(&Config::from_json(CC_RANK_ONE).unwrap()).unwrap();
    let f = out.fit.unwrap();
    assert!((0.76..=0.84).contains(&f.slope) && f.r_squared >= 0.99, "{f:?}");
}

#[test]
fn pure_and_open_sweeps() {
    let out = sweep(&Config::from_json(PURE).unwrap()).unwrap();
    assert!(out.fit.is_none() && out.note.is_some());
    assert!(out.records.iter().all(|r| r.corrected.abs() <= 1e-12 && r.flags == "pure"));
    let err = sweep(&Config::from_json(DIV_EQUI).unwrap()).unwrap_err();
    assert_eq!(err.exit_code(), EXIT_DEGENERATE);
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let curl = write(d, "curl.json", CURL);
    let status = |args: &[&str]| bin().args(args).output().unwrap().status.code().unwrap();
    assert_eq!(status(&["analyze", "--config", curl.to_str().unwrap()]), EXIT_OK);
    let bad = write(d, "bad.json", "{\"op\":\"curl\"");
    assert_eq!(status(&["analyze", "--config", bad.to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(status(&["analyze", "--config", d.join("missing.json").to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(status(&["analyze"]), EXIT_CONFIG);
    let same = write(d, "same.json", SAME);
    assert_eq!(status(&["analyze", "--config", same.to_str().unwrap()]), EXIT_DEGENERATE);
    let equi = write(d, "equi.json", DIV_EQUI);
    assert_eq!(status(&["sweep", "--config", equi.to_str().unwrap()]), EXIT_DEGENERATE);
    assert_eq!(status(&["sweep", "--config", curl.to_str().unwrap(), "--tau", "0.7"]), EXIT_CONFIG);
    let o = bin()
        .args(["oracle", "--cases", "10", "--perturb-h", "1e-3"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_BREACH));
    assert!(String::from_utf8_lossy(&o.stderr).contains("FAIL"));
    let o = bin().args(["oracle", "--cases", "10", "--config", equi.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn binary_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cc = write(d, "cc.json", CC_RANK_ONE);
    let run = |name: &str| {
        let p = d.join(name);
        let o = bin().args(["sweep", "--config", cc.to_str().unwrap(), "--out", p.to_str().unwrap()]).output().unwrap();
        assert!(o.status.success());
        (std::fs::read(&p).unwrap(), o.stdout)
    };
    let (a, ja) = run("a.csv");
    let (b, jb) = run("b.csv");
    assert_eq!(a, b);
    assert_eq!(ja, jb);
    let fit = bin().args(["fit", d.join("a.csv").to_str().unwrap()]).output().unwrap();
    assert!(fit.status.success());
    let text = String::from_utf8(fit.stdout).unwrap();
    assert!(text.starts_with("slope = 0.7"), "{text}");
    let dump = d.join("field.csv");
    let o = bin()
        .args(["construct", "--config", cc.to_str().unwrap(), "--out", dump.to_str().unwrap(), "--grid-n", "64", "--n", "2"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&dump).unwrap();
    assert!(csv.starts_with("x1,x2,v1,v2,phase\n"));
    assert_eq!(csv.lines().count(), 1 + 65 * 65);
    assert!(!csv.contains(",-0,") && !csv.contains(",-0\n"));
}
