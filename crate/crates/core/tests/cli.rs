use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn ceenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ceenet"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Fx {
    dir: TempDir,
}

impl Fx {
    fn new(seed: u64) -> Fx {
        let dir = TempDir::new().unwrap();
        let out = ceenet(&[
            "synth",
            "--seed",
            &seed.to_string(),
            "--out",
            s(&dir.path().join("fx")),
        ]);
        assert!(out.status.success());
        Fx { dir }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.dir.path().join("fx").join(name)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn read(p: PathBuf) -> String {
    fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn validate_clean_fixtures() {
    let fx = Fx::new(7);
    let out = ceenet(&[
        "validate",
        "--trade",
        s(&fx.file("trade_flows.csv")),
        "--cities",
        s(&fx.file("cities.csv")),
        "--gdp",
        s(&fx.file("gdp.csv")),
        "--capitals",
        s(&fx.file("capitals.csv")),
        "--ownership",
        s(&fx.file("ownership.csv")),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let report = String::from_utf8(out.stdout).unwrap();
    let cities_rows = read(fx.file("cities.csv")).lines().count() - 1;
    assert!(report.contains(&format!(
        "cities,{},{cities_rows},0,ok",
        s(&fx.file("cities.csv"))
    )));
    assert!(report.contains("ownership,") && report.contains(",8,ok,below 50% control"));
}

#[test]
fn validate_reports_zero_ownership_pct_with_line() {
    let fx = Fx::new(7);
    let path = fx.out("bad_ownership.csv");
    let mut text = read(fx.file("ownership.csv"));
    text.push_str("X,PRG,Y,BUD,0,CARS,10\n");
    let line = text.lines().count();
    fs::write(&path, text).unwrap();
    let out = ceenet(&["validate", "--ownership", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(report.contains(s(&path)));
    assert!(report.contains(&format!("line {line}")), "{report}");
}

#[test]
fn validate_names_unmapped_sector() {
    let fx = Fx::new(7);
    let path = fx.out("bad_trade.csv");
    fs::write(
        &path,
        "year,origin,dest,sector,value\n2012,CZ,PL,Mechanics,4\n2012,CZ,HU,Plastics,3\n",
    )
    .unwrap();
    let out = ceenet(&["validate", "--trade", s(&path)]);
    assert_eq!(out.status.code(), Some(1));
    let report = String::from_utf8(out.stdout).unwrap();
    assert!(
        report.contains("`Plastics`") && report.contains("line 3"),
        "{report}"
    );
}

fn gravity_args<'a>(fx: &'a Fx, out: &'a Path, extra: &[&'a str]) -> Vec<String> {
    let mut v: Vec<String> = [
        "gravity",
        "--trade",
        s(&fx.file("trade_flows.csv")),
        "--cities",
        s(&fx.file("cities.csv")),
        "--gdp",
        s(&fx.file("gdp.csv")),
        "--capitals",
        s(&fx.file("capitals.csv")),
        "--out",
        s(out),
    ]
    .iter()
    .map(|x| x.to_string())
    .collect();
    v.extend(extra.iter().map(|x| x.to_string()));
    v
}

fn run_owned(args: &[String]) -> Output {
    ceenet(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

#[test]
fn gravity_single_year_and_rerun_identical() {
    let fx = Fx::new(7);
    let (a, b) = (fx.out("g1"), fx.out("g2"));
    assert!(run_owned(&gravity_args(&fx, &a, &["--years", "2012"]))
        .status
        .success());
    assert!(
        run_owned(&gravity_args(&fx, &b, &["--years", "2012", "--jobs", "4"]))
            .status
            .success()
    );
    let text = read(a.join("gravity.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "year,beta,gamma,delta,r2_deviance,r2_corr,n_obs,converged"
    );
    assert_eq!(lines.len(), 2);
    let delta: f64 = lines[1].split(',').nth(3).unwrap().parse().unwrap();
    assert!((delta + 1.8).abs() <= 0.1);
    assert_eq!(
        fs::read(a.join("gravity.csv")).unwrap(),
        fs::read(b.join("gravity.csv")).unwrap()
    );
    assert_eq!(
        fs::read(a.join("gravity.json")).unwrap(),
        fs::read(b.join("gravity.json")).unwrap()
    );
}

#[test]
fn gravity_failed_year_is_recorded() {
    let fx = Fx::new(7);
    let out = fx.out("g");
    let res = run_owned(&gravity_args(&fx, &out, &["--years", "1970,2012"]));
    assert_eq!(res.status.code(), Some(0));
    let text = read(out.join("gravity.csv"));
    assert!(text.lines().nth(1).unwrap().starts_with("1970,NaN"));
    assert!(text.lines().nth(2).unwrap().ends_with(",56,true"));
    let strict = run_owned(&gravity_args(
        &fx,
        &fx.out("g2"),
        &["--years", "1970,2012", "--strict"],
    ));
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn trade_ca_outputs() {
    let fx = Fx::new(7);
    let out = fx.out("t");
    let res = ceenet(&[
        "trade-ca",
        "--trade",
        s(&fx.file("trade_flows.csv")),
        "--out",
        s(&out),
        "--format",
        "csv,json,svg",
    ]);
    assert!(res.status.success());
    let traj = read(out.join("trade_ca_trajectories.csv"));
    assert_eq!(traj.lines().count(), 1 + 8 * 9);
    let svg = read(out.join("trade_ca.svg"));
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let circles = doc
        .descendants()
        .filter(|n| n.has_tag_name("circle"))
        .count();
    assert_eq!(circles, 72);
    let json: serde_json::Value =
        serde_json::from_str(&read(out.join("trade_ca_inertia.json"))).unwrap();
    assert_eq!(
        json.as_array().unwrap().len(),
        read(out.join("trade_ca_inertia.csv")).lines().count() - 1
    );
}

#[test]
fn rank_one_trade_table_has_no_axes() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("trade.csv");
    let mut text = String::from("year,origin,dest,sector,value\n");
    for (c, scale) in [("CZ", 1.0), ("PL", 3.0), ("HU", 0.5)] {
        for (sector, v) in [("Mechanics", 10.0), ("Chemistry", 20.0), ("Wood", 5.0)] {
            text.push_str(&format!("1970,{c},SK,{sector},{}\n", scale * v));
        }
    }
    fs::write(&path, text).unwrap();
    let out = dir.path().join("o");
    let res = ceenet(&[
        "trade-ca",
        "--trade",
        s(&path),
        "--out",
        s(&out),
        "--format",
        "csv,svg",
    ]);
    assert!(res.status.success());
    assert_eq!(
        read(out.join("trade_ca_inertia.csv")),
        "axis,singular_value,inertia_share_pct\n"
    );
    assert!(read(out.join("trade_ca_coordinates.csv")).starts_with("row_id\nCZ:1970\n"));
    roxmltree::Document::parse(&read(out.join("trade_ca.svg"))).unwrap();
}

#[test]
fn city_ca_outputs() {
    let fx = Fx::new(7);
    let out = fx.out("c");
    let res = ceenet(&[
        "city-ca",
        "--ownership",
        s(&fx.file("ownership_sizes.csv")),
        "--cities",
        s(&fx.file("cities.csv")),
        "--clusters",
        "3",
        "--out",
        s(&out),
        "--format",
        "csv,svg",
    ]);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let rows = read(out.join("city_ca_coordinates.csv")).lines().count() - 1;
    assert_eq!(
        read(out.join("city_ca_merges.csv")).lines().count() - 1,
        rows - 1
    );
    let clusters = read(out.join("city_ca_clusters.csv"));
    let labels: std::collections::BTreeSet<&str> = clusters
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(labels.len(), 3);
    let svg = read(out.join("city_ca.svg"));
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert_eq!(
        doc.descendants()
            .filter(|n| n.has_tag_name("circle"))
            .count(),
        rows
    );
}

#[test]
fn empty_ownership_gives_header_only_reports() {
    let fx = Fx::new(7);
    let path = fx.out("empty.csv");
    fs::write(
        &path,
        "parent_firm,parent_city,subsidiary_firm,subsidiary_city,ownership_pct,sector,revenue\n",
    )
    .unwrap();
    let out = fx.out("n");
    let res = ceenet(&[
        "network",
        "--ownership",
        s(&path),
        "--cities",
        s(&fx.file("cities.csv")),
        "--out",
        s(&out),
        "--format",
        "csv",
    ]);
    assert_eq!(res.status.code(), Some(0));
    for name in [
        "edges.csv",
        "country_matrix.csv",
        "crosstab.csv",
        "specialisation.csv",
    ] {
        assert_eq!(read(out.join(name)).lines().count(), 1, "{name}");
    }
}

#[test]
fn config_file_supplies_unset_flags() {
    let fx = Fx::new(7);
    let cfg = fx.dir.path().join("run.conf");
    fs::write(
        &cfg,
        "# gravity run\ntrade = fx/trade_flows.csv\ncities = fx/cities.csv\ngdp = fx/gdp.csv\ncapitals = fx/capitals.csv\nyears = 2012\nformat = json\nout = from_config\n",
    )
    .unwrap();
    assert!(ceenet(&["gravity", "--config", s(&cfg)]).status.success());
    assert!(fx.out("from_config").join("gravity.json").exists());
    assert!(!fx.out("from_config").join("gravity.csv").exists());
    assert!(ceenet(&[
        "gravity",
        "--config",
        s(&cfg),
        "--format",
        "csv",
        "--out",
        s(&fx.out("flag"))
    ])
    .status
    .success());
    assert!(fx.out("flag").join("gravity.csv").exists());

    fs::write(&cfg, "colour = blue\n").unwrap();
    assert_eq!(
        ceenet(&["gravity", "--config", s(&cfg)]).status.code(),
        Some(1)
    );
}

#[test]
fn exit_codes() {
    let fx = Fx::new(7);
    let missing = fx.out("nope.csv");
    assert_eq!(
        ceenet(&["validate", "--cities", s(&missing)]).status.code(),
        Some(3)
    );
    assert_eq!(ceenet(&["gravity", "--a=-1"]).status.code(), Some(1));
    assert_eq!(ceenet(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(ceenet(&["network"]).status.code(), Some(1));
}
