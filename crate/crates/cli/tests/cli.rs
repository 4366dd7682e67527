use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn firemap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_firemap"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = firemap(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn surveil_grid16_ranks_city_neighbors() {
    let tmp = TempDir::new().unwrap();
    let stdout = ok(
        tmp.path(),
        &[
            "surveil", "--grid16", "--r", "2", "--top", "5", "--out", "p.csv",
        ],
    );
    let ranked: Vec<usize> = stdout
        .lines()
        .skip_while(|l| !l.starts_with("rank"))
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    // ids 15 and 10 are the city and its link; 5 comes next
    assert_eq!(&ranked[..3], &[15, 10, 5]);
    let raster = read(tmp.path(), "p.csv");
    let rows: Vec<&str> = raster.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').count() == 4));
    assert!(raster.contains("1.000000"));
    let manifest = read(tmp.path(), "p.csv.manifest");
    assert!(manifest.contains("\nr = 2\n"));
    assert!(manifest.contains("\ncommand = surveil\n"));
}

#[test]
fn auto_rate_on_demo_landscape() {
    let tmp = TempDir::new().unwrap();
    ok(
        tmp.path(),
        &["surveil", "--demo", "--auto-r", "0.5", "--out", "p.csv"],
    );
    let manifest = read(tmp.path(), "p.csv.manifest");
    let value = |key: &str| -> f64 {
        manifest
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value("r") - value("abscissa") - 0.5).abs() < 1e-12);
    assert_eq!(read(tmp.path(), "p.csv").lines().count(), 25);
}

#[test]
fn rate_below_abscissa_fails_cleanly() {
    let tmp = TempDir::new().unwrap();
    let out = firemap(
        tmp.path(),
        &["surveil", "--grid16", "--r", "0.5", "--out", "p.csv"],
    );
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: "), "{err}");
    assert!(err.contains("spectral abscissa"), "{err}");
    assert!(listing(tmp.path()).is_empty());
}

#[test]
fn invalid_inputs_leave_no_artifacts() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("broken.graph"), "nodes 2\n0 0.1 1\n").unwrap();
    let cases: &[&[&str]] = &[
        &[
            "surveil",
            "--graph",
            "broken.graph",
            "--r",
            "1",
            "--out",
            "a.csv",
        ],
        &[
            "surveil",
            "--graph",
            "missing.graph",
            "--r",
            "1",
            "--out",
            "a.csv",
        ],
        &[
            "intervene",
            "--grid16",
            "--r",
            "2",
            "--gamma",
            "-1",
            "--out",
            "a.txt",
        ],
        &[
            "intervene",
            "--grid16",
            "--r",
            "2",
            "--gamma",
            "1",
            "--tol",
            "0",
            "--out",
            "a.txt",
        ],
        &[
            "simulate", "--grid16", "--model", "ca", "--ignite", "99", "--out", "a.csv",
        ],
        &[
            "simulate", "--grid16", "--model", "ca", "--ignite", "0", "--dt", "5", "--out", "a.csv",
        ],
        &[
            "simulate",
            "--grid16",
            "--model",
            "linear",
            "--ignite",
            "0",
            "--replicate",
            "1",
            "--out",
            "a.csv",
        ],
        &[
            "surveil", "--grid16", "--r", "2", "--beta0", "1", "--out", "a.csv",
        ],
        &[
            "surveil",
            "--grid16",
            "--r",
            "2",
            "--out",
            "no/such/dir/a.csv",
        ],
        &["route", "--report", "missing.txt", "--out", "t.csv"],
    ];
    for args in cases {
        let out = firemap(d, args);
        assert!(!out.status.success(), "{args:?} should fail");
        assert_eq!(
            listing(d),
            vec!["broken.graph".to_string()],
            "{args:?} left files"
        );
    }
}

#[test]
fn zero_budget_matches_surveillance() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(d, &["surveil", "--grid16", "--r", "2", "--out", "p.csv"]);
    ok(
        d,
        &[
            "intervene",
            "--grid16",
            "--r",
            "2",
            "--gamma",
            "0",
            "--out",
            "k.txt",
        ],
    );
    assert_eq!(read(d, "p.csv"), read(d, "k.txt.raster.csv"));
    assert!(read(d, "k.txt").contains("\ntargets 0\n"));
}

#[test]
fn intervention_targets_the_city_link_and_routes() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "intervene",
            "--grid16",
            "--r",
            "2",
            "--gamma",
            "0.5",
            "--out",
            "low.txt",
        ],
    );
    ok(
        d,
        &[
            "intervene",
            "--grid16",
            "--r",
            "2",
            "--gamma",
            "2",
            "--out",
            "high.txt",
        ],
    );
    let low = read(d, "low.txt");
    let first = low
        .lines()
        .skip_while(|l| !l.starts_with("targets"))
        .nth(1)
        .unwrap();
    assert!(first.starts_with("edge 10 15 "), "{first}");
    let count = |text: &str| -> usize {
        text.lines()
            .find_map(|l| l.strip_prefix("targets "))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!(count(&read(d, "high.txt")) > count(&low));

    ok(
        d,
        &[
            "route",
            "--report",
            "high.txt",
            "--threshold",
            "0",
            "--out",
            "tour.csv",
        ],
    );
    let tour = read(d, "tour.csv");
    assert!(tour.starts_with("order,waypoint_id,x,y,payload_amount\n"));
    assert!(tour.lines().last().unwrap().starts_with("# length "));
    ok(
        d,
        &[
            "route",
            "--report",
            "high.txt",
            "--depot",
            "0,0",
            "--method",
            "heuristic",
            "--out",
            "depot.csv",
        ],
    );
    assert!(read(d, "depot.csv")
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("0,0,0,0,"));
}

#[test]
fn empty_target_set_writes_empty_tour() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "intervene",
            "--grid16",
            "--r",
            "2",
            "--gamma",
            "0",
            "--out",
            "k.txt",
        ],
    );
    let out = firemap(d, &["route", "--report", "k.txt", "--out", "tour.csv"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    assert_eq!(
        read(d, "tour.csv"),
        "order,waypoint_id,x,y,payload_amount\n# length 0.000000000\n"
    );
}

#[test]
fn linear_single_node_decays_exponentially() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("one.graph"), "nodes 1\n0 0.7 1\nedges 0\n").unwrap();
    ok(
        d,
        &[
            "simulate",
            "--graph",
            "one.graph",
            "--model",
            "linear",
            "--ignite",
            "0",
            "--dt",
            "0.1",
            "--horizon",
            "2",
            "--out",
            "x.csv",
        ],
    );
    let csv = read(d, "x.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x_0"));
    let mut rows = 0;
    for line in lines {
        let (t, x) = line.split_once(',').unwrap();
        let (t, x): (f64, f64) = (t.parse().unwrap(), x.parse().unwrap());
        assert!((x - (-0.7 * t).exp()).abs() < 1e-6, "t = {t}: {x}");
        rows += 1;
    }
    assert_eq!(rows, 21);
}

#[test]
fn automaton_runs_are_byte_identical_and_replayable() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let args = [
        "simulate",
        "--grid16",
        "--model",
        "ca",
        "--ignite",
        "0,3",
        "--dt",
        "0.05",
        "--horizon",
        "4",
        "--runs",
        "300",
        "--seed",
        "11",
        "--record-every",
        "4",
        "--out",
    ];
    let run = |out: &str| {
        let mut a = args.to_vec();
        a.push(out);
        ok(d, &a);
    };
    run("a.csv");
    run("b.csv");
    assert_eq!(read(d, "a.csv"), read(d, "b.csv"));
    assert_eq!(read(d, "a.csv.final.csv"), read(d, "b.csv.final.csv"));

    let original = read(d, "a.csv");
    let manifest = read(d, "a.csv.manifest");
    fs::remove_file(d.join("a.csv")).unwrap();
    // replay from elsewhere resolves paths against the recorded directory
    let other = TempDir::new().unwrap();
    ok(
        other.path(),
        &["replay", d.join("a.csv.manifest").to_str().unwrap()],
    );
    assert_eq!(read(d, "a.csv"), original);
    assert_eq!(read(d, "a.csv.manifest"), manifest);
    assert!(listing(other.path()).is_empty());
}

#[test]
fn replay_reproduces_an_intervention() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "intervene",
            "--grid16",
            "--r",
            "2",
            "--gamma",
            "1",
            "--mode",
            "both",
            "--out",
            "k.txt",
        ],
    );
    let names = ["k.txt", "k.txt.k.csv", "k.txt.raster.csv", "k.txt.manifest"];
    let before: Vec<String> = names.iter().map(|n| read(d, n)).collect();
    fs::write(d.join("saved.manifest"), &before[3]).unwrap();
    for n in names {
        fs::remove_file(d.join(n)).unwrap();
    }
    ok(d, &["replay", "saved.manifest"]);
    let after: Vec<String> = names.iter().map(|n| read(d, n)).collect();
    assert_eq!(before, after);
}

#[test]
fn closed_loop_simulation_reads_the_control_listing() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "intervene",
            "--grid16",
            "--r",
            "2",
            "--gamma",
            "2",
            "--out",
            "k.txt",
        ],
    );
    let sim = |extra: &[&str], out: &str| {
        let mut a = vec![
            "simulate",
            "--grid16",
            "--model",
            "linear",
            "--ignite",
            "0",
            "--horizon",
            "5",
            "--out",
            out,
        ];
        a.extend_from_slice(extra);
        ok(d, &a);
        let csv = read(d, out);
        let last = csv.lines().last().unwrap().to_string();
        last.split(',')
            .skip(1)
            .map(|v| v.parse::<f64>().unwrap())
            .collect::<Vec<_>>()
    };
    let open = sim(&[], "open.csv");
    let closed = sim(&["--control", "k.txt.k.csv"], "closed.csv");
    assert!(closed.iter().zip(&open).all(|(c, o)| *c <= o + 1e-12));
    assert!(closed[15] < open[15]);

    fs::write(
        d.join("bad.csv"),
        "# control 16 nodes, mode edges\nrow,col,value\n15,10,9\n",
    )
    .unwrap();
    let out = firemap(
        d,
        &[
            "simulate",
            "--grid16",
            "--model",
            "linear",
            "--ignite",
            "0",
            "--control",
            "bad.csv",
            "--out",
            "x.csv",
        ],
    );
    assert!(!out.status.success());
    assert!(!d.join("x.csv").exists());
}

#[test]
fn compare_models_reports_the_hierarchy() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    let stdout = ok(
        d,
        &[
            "compare-models",
            "--grid16",
            "--ignite",
            "0",
            "--dt",
            "0.05",
            "--horizon",
            "4",
            "--runs",
            "400",
            "--record-every",
            "10",
            "--out",
            "cmp.csv",
        ],
    );
    assert!(stdout.contains("ca <= nonlinear"));
    assert!(stdout.contains("nonlinear <= linear: holds"));
    let csv = read(d, "cmp.csv");
    assert!(csv.starts_with("t,node,ca_mean,ca_stderr,nonlinear,linear\n"));
    // 9 samples of 16 nodes
    assert_eq!(csv.lines().count(), 1 + 9 * 16);
}

#[test]
fn grid_file_with_wind() {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    fs::write(d.join("land.txt"), "3 4\nGGEC\nGWGG\nDDGG\n").unwrap();
    let base = ["surveil", "--grid", "land.txt", "--auto-r", "0.2"];
    let calm = [&base[..], &["--out", "calm.csv"]].concat();
    let windy = [
        &base[..],
        &[
            "--wind-speed",
            "6",
            "--wind-from",
            "90",
            "--out",
            "windy.csv",
        ],
    ]
    .concat();
    ok(d, &calm);
    ok(d, &windy);
    assert_eq!(read(d, "calm.csv").lines().count(), 3);
    assert_ne!(read(d, "calm.csv"), read(d, "windy.csv"));
    assert!(read(d, "windy.csv.manifest").contains("\nwind_from = 90\n"));

    fs::write(d.join("bad.txt"), "2 2\nGX\nGG\n").unwrap();
    let out = firemap(
        d,
        &["surveil", "--grid", "bad.txt", "--r", "3", "--out", "b.csv"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.txt"));
}
