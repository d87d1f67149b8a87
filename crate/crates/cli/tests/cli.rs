use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus/mini-flights")
}

fn tlexplain(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlexplain"))
        .arg("--corpus")
        .arg(corpus())
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Path, args: &[&str]) -> String {
    let o = tlexplain(out, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

type AucRow = (String, String, f64, f64, f64);

/// A deterministic AUC table over every ordered pair of bundled domains whose
/// soft-transfer AUC rises with the shared share of the closures.
fn auc_csv(dir: &Path, out: &Path) -> (PathBuf, Vec<AucRow>) {
    let ids: Vec<String> = fs::read_dir(corpus().join("domains"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut rows = Vec::new();
    let mut text = String::from("source,target,auc_base,auc_hard,auc_soft\n");
    for (i, a) in ids.iter().enumerate() {
        for (j, b) in ids.iter().enumerate().filter(|(j, _)| *j != i) {
            let base = 0.7;
            let hard = 0.5 + ((i * 7 + j * 3) % 11) as f64 / 50.0;
            let (ga, gb) = (closure(out, a), closure(out, b));
            let shared = ga.intersection(&gb).count() as f64 / ga.union(&gb).count() as f64;
            let soft = 0.5 + 0.4 * shared + ((i * 5 + j * 2) % 13) as f64 / 200.0;
            text.push_str(&format!("{a},{b},{base},{hard},{soft}\n"));
            rows.push((a.clone(), b.clone(), base, hard, soft));
        }
    }
    let path = dir.join("auc.csv");
    fs::write(&path, text).unwrap();
    (path, rows)
}

fn closure(out: &Path, id: &str) -> BTreeSet<String> {
    fs::read_to_string(out.join(format!("closures/{id}.txt")))
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn general_factors_match_hand_computed_correlations() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    ok(&out, &["materialize"]);
    let (csv, rows) = auc_csv(dir.path(), &out);
    ok(&out, &["mine-roots"]);
    ok(&out, &["import-external", "--kb", "none"]);
    ok(&out, &["fti", "--auc-csv", csv.to_str().unwrap()]);
    let table = ok(&out, &["explain", "--kind", "general"]);
    let lines: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(lines.len(), 3, "{table}");

    let mut rates = [Vec::new(), Vec::new(), Vec::new()];
    let mut fti = Vec::new();
    for (a, b, base, hard, soft) in &rows {
        let (ga, gb) = (closure(&out, a), closure(&out, b));
        rates[0].push(gb.difference(&ga).count() as f64 / gb.len() as f64);
        rates[1].push(ga.difference(&gb).count() as f64 / ga.len() as f64);
        rates[2].push(ga.intersection(&gb).count() as f64 / ga.union(&gb).count() as f64);
        fti.push(((soft - base) - (base - hard)) / 2.0);
    }
    for (name, r) in ["d_new", "d_obsolete", "d_invariant"].iter().zip(&rates) {
        let line = lines.iter().find(|l| l.split('\t').nth(1) == Some(name)).unwrap();
        let cols: Vec<&str> = line.split('\t').collect();
        let gamma: f64 = cols[2].parse().unwrap();
        let rho: f64 = cols[3].parse().unwrap();
        assert!((gamma - pearson(r, &fti)).abs() < 1e-9, "{name}: {gamma}");
        assert!((0.0..=1.0).contains(&rho));
        assert_eq!(cols[4], "56");
    }

    let report = ok(&out, &["report", "--kind", "general", "--top-k", "0"]);
    assert!(report.contains("invariant entailments shared by"), "{report}");
    assert!(report.contains("general_valid = "), "{report}");
    let json = ok(&out, &["report", "--kind", "general", "--json"]);
    assert!(json.trim_start().starts_with('{'));
}

#[test]
fn exit_codes_separate_usage_from_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&tlexplain(&out, &["materialize", "--bogus"])), 1);
    assert_eq!(code(&tlexplain(&out, &["frobnicate"])), 1);
    assert_eq!(code(&tlexplain(&out, &["mine-roots", "--sigma", "1.5"])), 1);
    assert_eq!(code(&tlexplain(&out, &["explain", "--kind", "nonsense"])), 1);
    assert_eq!(code(&tlexplain(&out, &["explain", "--max-dim", "1"])), 1);
    let missing = tlexplain(&out, &["mine-roots"]);
    assert_eq!(code(&missing), 2);
    let msg = String::from_utf8_lossy(&missing.stderr);
    assert!(msg.contains("materialize") && msg.lines().count() == 1, "{msg}");
    let o = Command::new(env!("CARGO_BIN_EXE_tlexplain"))
        .args(["--corpus", dir.path().join("nowhere").to_str().unwrap(), "materialize"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# loose\nsigma = 0.5\nmax_dim = 1\n").unwrap();
    let c = cfg.to_str().unwrap();
    // max_dim 1 from the file is rejected unless a flag overrides it.
    assert_eq!(code(&tlexplain(&out, &["materialize", "--config", c])), 1);
    ok(&out, &["materialize", "--config", c, "--max-dim", "3"]);
    fs::write(&cfg, "colour = blue\n").unwrap();
    let o = tlexplain(&out, &["materialize", "--config", c]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn selftest_reports_every_check() {
    let o = Command::new(env!("CARGO_BIN_EXE_tlexplain"))
        .args(["selftest", "--cases", "20"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().count() >= 9);
    assert!(text.lines().all(|l| l.starts_with("PASS\t")), "{text}");
}
