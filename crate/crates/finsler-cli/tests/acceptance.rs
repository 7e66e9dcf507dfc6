//! End-to-end acceptance battery.
//!
//! Each test covers one advertised capability at its stated tolerance and
//! prints a single [PASS]/[FAIL] line (visible with --nocapture; the assert
//! carries the same verdict either way).

use std::process::Command;
use std::time::{Duration, Instant};

use finsler::concurrent::{check_concurrent, lemma_suite};
use finsler::expr::parse;
use finsler::geometry::{ChartPoint, FinslerModel, GeomEval, GuardExpr};
use finsler::kropina::{degeneracy_scan, fhat_model};
use finsler::verify::{prepare, run_check, run_suite, sample_where, SampleSpec, VerifyOptions};

fn example_model(m: f64) -> FinslerModel {
    let dim = 3;
    let metric = parse("sqrt((y1)^2 + (x1)^2*(y2)^3/y3)", dim).unwrap();
    let phi = vec![
        parse("x1", dim).unwrap(),
        parse("0", dim).unwrap(),
        parse("0", dim).unwrap(),
    ];
    let guards = ["x1", "y1", "y2", "y3"]
        .iter()
        .map(|s| GuardExpr::Positive(parse(s, dim).unwrap()))
        .collect();
    FinslerModel::new(dim, metric, phi, guards, m).unwrap()
}

fn flat_model(m: f64) -> FinslerModel {
    let dim = 3;
    let metric = parse("sqrt(y1^2 + y2^2 + y3^2)", dim).unwrap();
    let phi = vec![
        parse("-x1", dim).unwrap(),
        parse("-x2", dim).unwrap(),
        parse("-x3", dim).unwrap(),
    ];
    FinslerModel::new(dim, metric, phi, Vec::new(), m).unwrap()
}

fn example_spec(count: usize) -> SampleSpec {
    SampleSpec {
        ranges: vec![
            [0.5, 2.5],
            [-1.0, 1.0],
            [-1.0, 1.0],
            [0.5, 2.0],
            [0.5, 2.0],
            [0.5, 2.0],
        ],
        count,
        seed: 731,
        max_attempts: 2_000_000,
        guard_margin: 1e-3,
    }
}

fn flat_spec(count: usize) -> SampleSpec {
    SampleSpec {
        ranges: vec![
            [0.5, 1.5],
            [0.5, 1.5],
            [0.5, 1.5],
            [-1.5, -0.5],
            [-1.5, -0.5],
            [-1.5, -0.5],
        ],
        count,
        seed: 731,
        max_attempts: 2_000_000,
        guard_margin: 1e-3,
    }
}

fn conclude(name: &str, failures: Vec<String>, detail: String) {
    if failures.is_empty() {
        println!("[PASS] {name}: {detail}");
    } else {
        println!("[FAIL] {name}: {}", failures.join("; "));
        panic!("{name}: {}", failures.join("; "));
    }
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_finsler"))
}

fn config_path(name: &str) -> String {
    format!("{}/configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn criterion_01_fundamental_reproduction() {
    let mut failures = Vec::new();
    let started = Instant::now();
    let model = example_model(2.0);
    let spec = example_spec(50);
    let pts = sample_where(&model, &spec, 50, "fundamental", &|_| true).unwrap();
    let mut worst_g = 0.0f64;
    let mut worst_c = 0.0f64;
    let mut worst_phi = 0.0f64;
    for p in &pts {
        let geom = GeomEval::new(&model, p, 4).unwrap();
        let (x1, y2, y3) = (p.x[0], p.y[1], p.y[2]);
        let mut g = vec![vec![0.0; 3]; 3];
        g[0][0] = 1.0;
        g[1][1] = 3.0 * x1 * x1 * y2 / y3;
        g[1][2] = -1.5 * x1 * x1 * y2 * y2 / (y3 * y3);
        g[2][1] = g[1][2];
        g[2][2] = x1 * x1 * y2 * y2 * y2 / (y3 * y3 * y3);
        let scale_g = g[1][1].abs().max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                worst_g = worst_g.max((geom.g[i][j] - g[i][j]).abs() / scale_g);
            }
        }
        let mut c = vec![vec![vec![0.0; 3]; 3]; 3];
        let c222 = 1.5 * x1 * x1 / y3;
        let c223 = -1.5 * x1 * x1 * y2 / (y3 * y3);
        let c233 = 1.5 * x1 * x1 * y2 * y2 / (y3 * y3 * y3);
        let c333 = -1.5 * x1 * x1 * y2 * y2 * y2 / (y3 * y3 * y3 * y3);
        c[1][1][1] = c222;
        for (i, j, k) in [(1, 1, 2), (1, 2, 1), (2, 1, 1)] {
            c[i][j][k] = c223;
        }
        for (i, j, k) in [(1, 2, 2), (2, 1, 2), (2, 2, 1)] {
            c[i][j][k] = c233;
        }
        c[2][2][2] = c333;
        let scale_c = c222.abs().max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    worst_c = worst_c.max((geom.cartan[i][j][k] - c[i][j][k]).abs() / scale_c);
                }
            }
        }
        let phi = finsler::geometry::scalar_form_value(&model, p).unwrap();
        worst_phi = worst_phi.max((phi - x1 * p.y[0]).abs() / (x1 * p.y[0]).abs().max(1.0));
    }
    let elapsed = started.elapsed();
    if worst_g > 1e-9 {
        failures.push(format!(
            "fundamental tensor off by {worst_g:.3e} (tol 1e-9)"
        ));
    }
    if worst_c > 1e-10 {
        failures.push(format!("Cartan torsion off by {worst_c:.3e} (tol 1e-10)"));
    }
    if worst_phi > 1e-10 {
        failures.push(format!("pairing off by {worst_phi:.3e} (tol 1e-10)"));
    }
    if elapsed > Duration::from_secs(5) {
        failures.push(format!("took {elapsed:.2?} (budget 5s)"));
    }
    conclude(
        "criterion 01 closed-form tensors at 50 points",
        failures,
        format!("g {worst_g:.2e}, torsion {worst_c:.2e}, pairing {worst_phi:.2e}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_concurrency_constants() {
    let mut failures = Vec::new();
    let model = example_model(2.0);
    let pts = sample_where(&model, &example_spec(50), 50, "concurrency", &|_| true).unwrap();
    let rep = check_concurrent(&model, &pts, 1e-8).unwrap();
    if (rep.c - 1.0).abs() > 1e-8 {
        failures.push(format!("example constant {} is not +1", rep.c));
    }
    if rep.h_residual > 1e-8 || rep.v_residual > 1e-8 {
        failures.push(format!(
            "example residuals h {:.3e} v {:.3e} (tol 1e-8)",
            rep.h_residual, rep.v_residual
        ));
    }
    if rep.cartan_residual > 1e-10 {
        failures.push(format!(
            "example torsion pairing {:.3e} (tol 1e-10)",
            rep.cartan_residual
        ));
    }
    let flat = flat_model(2.0);
    let fpts = sample_where(&flat, &flat_spec(50), 50, "concurrency", &|_| true).unwrap();
    let frep = check_concurrent(&flat, &fpts, 1e-12).unwrap();
    if (frep.c + 1.0).abs() > 1e-12
        || frep.h_residual > 1e-12
        || frep.v_residual > 1e-12
        || frep.cartan_residual > 1e-12
    {
        failures.push(format!(
            "flat field: c {} residuals {:.3e}/{:.3e}/{:.3e} (tol 1e-12)",
            frep.c, frep.h_residual, frep.v_residual, frep.cartan_residual
        ));
    }
    conclude(
        "criterion 02 concurrency constants",
        failures,
        format!("example c = {:.10}, flat c = {:.13}", rep.c, frep.c),
    );
}

#[test]
fn criterion_03_concurrent_field_identities() {
    let mut failures = Vec::new();
    let mut worst_overall = 0.0f64;
    for (label, model, spec, c) in [
        (
            "example",
            example_model(2.0).negate_phi(),
            example_spec(100),
            -1.0,
        ),
        ("flat", flat_model(2.0), flat_spec(100), -1.0),
    ] {
        let pts = sample_where(&model, &spec, 100, "lemma", &|_| true).unwrap();
        let mut worst = 0.0f64;
        let mut worst_item = "";
        for p in &pts {
            for item in lemma_suite(&model, p, c).unwrap() {
                if item.rel_err() > worst {
                    worst = item.rel_err();
                    worst_item = item.name;
                }
            }
        }
        worst_overall = worst_overall.max(worst);
        if worst > 1e-8 {
            failures.push(format!(
                "{label}: identity {worst_item} off by {worst:.3e} (tol 1e-8)"
            ));
        }
    }
    conclude(
        "criterion 03 concurrent-field identities at 100 points per model",
        failures,
        format!("worst residual {worst_overall:.2e}"),
    );
}

#[test]
fn criterion_04_change_suite_all_exponents() {
    let mut failures = Vec::new();
    let started = Instant::now();
    let checks: Vec<String> = [
        "kropina-ell",
        "kropina-metric",
        "kropina-hbar",
        "kropina-cartan",
        "kropina-spray",
        "barthel",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let opts = VerifyOptions {
        sequential: true,
        ..VerifyOptions::default()
    };
    let mut worst = 0.0f64;
    for m in [2.0, 3.0, 0.5, -2.0] {
        for (label, model, spec) in [
            ("example", example_model(m), example_spec(100)),
            ("flat", flat_model(m), flat_spec(100)),
        ] {
            let report = run_suite(&model, &spec, &opts, &checks).unwrap();
            for c in &report.checks {
                worst = worst.max(c.max_rel_err);
                if !c.pass {
                    failures.push(format!(
                        "{label} m={m}: {} failed at {:.3e} ({})",
                        c.name, c.max_rel_err, c.notes
                    ));
                }
                if c.points < 100 {
                    failures.push(format!(
                        "{label} m={m}: {} ran only {} points",
                        c.name, c.points
                    ));
                }
            }
        }
    }
    // Frozen anchor: flat chart at x = (1,1,1), y = (-1,-1,-1) has F^2 = 3 and
    // pairing 3, so the changed square norm at m = 2 is 3 * (3/9)^2 = 1/3.
    let hat = fhat_model(&flat_model(2.0), 1.0).unwrap();
    let anchor = ChartPoint::new(vec![1.0, 1.0, 1.0], vec![-1.0, -1.0, -1.0]);
    let f2_hat = 2.0 * hat.energy_jet(&anchor, 0).unwrap().value();
    if (f2_hat - 1.0 / 3.0).abs() > 1e-12 {
        failures.push(format!("anchor changed norm^2 {f2_hat} is not 1/3"));
    }
    let elapsed = started.elapsed();
    if elapsed > Duration::from_secs(60) {
        failures.push(format!("took {elapsed:.2?} single-threaded (budget 60s)"));
    }
    conclude(
        "criterion 04 transformation laws for m in {2, 3, 1/2, -2}",
        failures,
        format!("worst residual {worst:.2e} across 8 model/exponent runs, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_05_connection_law_sign_sensitivity() {
    let mut failures = Vec::new();
    let opts = VerifyOptions {
        sigma: -1.0,
        ..VerifyOptions::default()
    };
    let checks = vec!["barthel".to_string()];
    let report = run_suite(&flat_model(2.0), &flat_spec(50), &opts, &checks).unwrap();
    let barthel = &report.checks[0];
    if barthel.pass {
        failures.push("flipped sign still passed the connection law".into());
    }
    if !(barthel.max_rel_err > 1e-2) {
        failures.push(format!(
            "flipped sign only moved the connection by {:.3e} (expected > 1e-2)",
            barthel.max_rel_err
        ));
    }
    conclude(
        "criterion 05 connection law is sign-sensitive",
        failures,
        format!(
            "sigma = -1 drives the residual to {:.2e}",
            barthel.max_rel_err
        ),
    );
}

#[test]
fn criterion_06_curvature_and_structure_identities() {
    let mut failures = Vec::new();
    let mut detail = String::new();
    for (label, model, spec) in [
        ("example", example_model(2.0), example_spec(100)),
        ("flat", flat_model(2.0), flat_spec(100)),
    ] {
        let env = prepare(&model, &spec, &VerifyOptions::default()).unwrap();
        let curv = run_check(&env, "curvature").unwrap();
        if !curv.pass || curv.points != 25 {
            failures.push(format!(
                "{label}: curvature {} at {} points ({:.3e})",
                if curv.pass { "ok" } else { "failed" },
                curv.points,
                curv.max_rel_err
            ));
        }
        let st = run_check(&env, "fn-selftest").unwrap();
        if !st.pass {
            failures.push(format!(
                "{label}: structural identities off by {:.3e} (tol 1e-9)",
                st.max_rel_err
            ));
        }
        detail.push_str(&format!(
            "{label} curvature {:.2e} / structure {:.2e}  ",
            curv.max_rel_err, st.max_rel_err
        ));
    }
    conclude(
        "criterion 06 curvature law at 25 points plus structure selftests",
        failures,
        detail.trim_end().to_string(),
    );
}

#[test]
fn criterion_07_covariant_derivative_laws() {
    let mut failures = Vec::new();
    let mut detail = String::new();
    for (label, model, spec) in [
        ("example", example_model(2.0), example_spec(100)),
        ("flat", flat_model(0.5), flat_spec(100)),
    ] {
        let env = prepare(&model, &spec, &VerifyOptions::default()).unwrap();
        let v = run_check(&env, "berwald-vertical").unwrap();
        if !v.pass || v.max_rel_err > 1e-12 || v.points != 25 {
            failures.push(format!(
                "{label}: fiber derivative shifted by {:.3e} at {} points (tol 1e-12)",
                v.max_rel_err, v.points
            ));
        }
        let h = run_check(&env, "berwald-horizontal").unwrap();
        if !h.pass || h.points != 25 {
            failures.push(format!(
                "{label}: horizontal law off by {:.3e} ({})",
                h.max_rel_err, h.notes
            ));
        }
        detail.push_str(&format!(
            "{label} vertical {:.1e} / horizontal {:.2e}  ",
            v.max_rel_err, h.max_rel_err
        ));
    }
    conclude(
        "criterion 07 covariant derivative laws on random fields",
        failures,
        detail.trim_end().to_string(),
    );
}

#[test]
fn criterion_08_degeneracy_scan() {
    let mut failures = Vec::new();
    let model = flat_model(-2.0);
    let path = |t: f64| ChartPoint::new(vec![1.0, 0.0, 0.0], vec![t.cos(), t.sin(), 0.0]);
    let windows = [(0.10, 0.85), (2.2916, 3.0416)];
    let outcome = degeneracy_scan(&model, &path, &windows, 120).unwrap();
    if outcome.roots.len() != 2 {
        failures.push(format!("expected 2 roots, found {:?}", outcome.roots));
    }
    for r in &outcome.roots {
        let val = r.cos() * r.cos();
        if (val - 2.0 / 3.0).abs() > 1e-6 {
            failures.push(format!(
                "root t = {r}: cos^2 t = {val} is not 2/3 within 1e-6"
            ));
        }
    }
    for s in &outcome.samples {
        if s.d_value.abs() > 0.1 * s.d_scale && s.det_ghat.abs() <= 1e-3 {
            failures.push(format!(
                "t = {}: determinant {:.3e} collapsed away from the locus",
                s.t, s.det_ghat
            ));
        }
        if s.d_value.abs() < 1e-4 * s.d_scale && s.det_ghat.abs() >= 1e-4 {
            failures.push(format!(
                "t = {}: determinant {:.3e} did not collapse on the locus",
                s.t, s.det_ghat
            ));
        }
    }
    conclude(
        "criterion 08 degeneracy locus scan",
        failures,
        format!(
            "{} samples, roots at t = {:?}",
            outcome.samples.len(),
            outcome.roots
        ),
    );
}

#[test]
fn criterion_09_change_is_not_projective() {
    let mut failures = Vec::new();
    let mut min_fraction = f64::INFINITY;
    for (label, model, spec) in [
        ("example", example_model(2.0), example_spec(100)),
        ("flat", flat_model(2.0), flat_spec(100)),
    ] {
        let env = prepare(&model, &spec, &VerifyOptions::default()).unwrap();
        let res = run_check(&env, "projective").unwrap();
        min_fraction = min_fraction.min(res.max_rel_err);
        if !res.pass || res.points != 100 {
            failures.push(format!(
                "{label}: transverse fraction {:.3e} at {} points",
                res.max_rel_err, res.points
            ));
        }
    }
    conclude(
        "criterion 09 spray shift stays transverse at 100 points per model",
        failures,
        format!("minimum transverse fraction {min_fraction:.2e}"),
    );
}

#[test]
fn criterion_10_field_not_concurrent_after_change() {
    let mut failures = Vec::new();
    let mut least_deviation = f64::INFINITY;
    for m in [2.0, 3.0, 0.5, -2.0] {
        for (label, model, spec) in [
            ("example", example_model(m), example_spec(100)),
            ("flat", flat_model(m), flat_spec(100)),
        ] {
            let env = prepare(&model, &spec, &VerifyOptions::default()).unwrap();
            let res = run_check(&env, "not-concurrent").unwrap();
            least_deviation = least_deviation.min(res.max_abs_err);
            if !res.pass {
                failures.push(format!(
                    "{label} m={m}: deviation {:.3e} did not exceed 1e-3",
                    res.max_abs_err
                ));
            }
        }
    }
    conclude(
        "criterion 10 the field loses concurrency in the changed geometry",
        failures,
        format!("smallest witnessed deviation {least_deviation:.2e}"),
    );
}

#[test]
fn criterion_11_factorization_of_the_changed_tensor() {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for m in [2.0, -2.0] {
        for (label, model, spec) in [
            ("example", example_model(m), example_spec(100)),
            ("flat", flat_model(m), flat_spec(100)),
        ] {
            let env = prepare(&model, &spec, &VerifyOptions::default()).unwrap();
            let res = run_check(&env, "ar-factorization").unwrap();
            worst = worst.max(res.max_rel_err);
            if !res.pass || res.points != 100 {
                failures.push(format!(
                    "{label} m={m}: factorization off by {:.3e} at {} points (tol 1e-8)",
                    res.max_rel_err, res.points
                ));
            }
        }
    }
    conclude(
        "criterion 11 conformal-factor factorization at 100 points",
        failures,
        format!("worst residual {worst:.2e}"),
    );
}

#[test]
fn criterion_12_oracle_reports_and_exit_codes() {
    let mut failures = Vec::new();

    // Finite differences cross-validate the jet pipeline.
    let mut worst_fd = 0.0f64;
    for (label, model, spec) in [
        ("example", example_model(2.0), example_spec(100)),
        ("flat", flat_model(2.0), flat_spec(100)),
    ] {
        let env = prepare(&model, &spec, &VerifyOptions::default()).unwrap();
        let res = run_check(&env, "fd-oracle").unwrap();
        worst_fd = worst_fd.max(res.max_rel_err);
        if !res.pass {
            failures.push(format!(
                "{label}: finite differences disagree by {:.3e} (tol 1e-4)",
                res.max_rel_err
            ));
        }
    }

    // Reports are byte-stable for a fixed seed.
    let dir = tempfile::tempdir().unwrap();
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    for out in [&r1, &r2] {
        let status = bin()
            .args(["verify", "--config", &config_path("example.json"), "--out"])
            .arg(out)
            .output()
            .unwrap();
        if !status.status.success() {
            failures.push(format!("verify run exited with {:?}", status.status.code()));
        }
    }
    let b1 = std::fs::read(&r1).unwrap();
    let b2 = std::fs::read(&r2).unwrap();
    if b1 != b2 {
        failures.push("two runs with the same seed produced different reports".into());
    }

    // Sequential mode computes the identical checks.
    let r3 = dir.path().join("r3.json");
    let status = bin()
        .args([
            "verify",
            "--config",
            &config_path("example.json"),
            "--sequential",
            "--out",
        ])
        .arg(&r3)
        .output()
        .unwrap();
    if !status.status.success() {
        failures.push("sequential verify run failed".into());
    }
    let par: serde_json::Value = serde_json::from_slice(&b1).unwrap();
    let seq: serde_json::Value = serde_json::from_slice(&std::fs::read(&r3).unwrap()).unwrap();
    if par["checks"] != seq["checks"] {
        failures.push("sequential and parallel runs disagree".into());
    }

    // Exit codes: failing battery -> 1, unusable configuration -> 2.
    let fail_run = bin()
        .args(["verify", "--config", &config_path("example-printed-f.json")])
        .output()
        .unwrap();
    if fail_run.status.code() != Some(1) {
        failures.push(format!(
            "non-concurrent model exited with {:?} (expected 1)",
            fail_run.status.code()
        ));
    }
    let bad_run = bin()
        .args(["verify", "--config", &config_path("invalid-m.json")])
        .output()
        .unwrap();
    if bad_run.status.code() != Some(2) {
        failures.push(format!(
            "invalid exponent exited with {:?} (expected 2)",
            bad_run.status.code()
        ));
    }

    conclude(
        "criterion 12 oracle agreement, report determinism, exit codes",
        failures,
        format!("fd residual {worst_fd:.2e}; byte-identical reports; exit codes 0/1/2"),
    );
}
