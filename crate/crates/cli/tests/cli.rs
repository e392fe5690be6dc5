use std::path::Path;
use std::process::Command;

use hlgi_core::model::bloch_decompose;
use hlgi_core::spectrum::steady_state;
use hlgi_core::ModelParams;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn hlgi(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_hlgi")).args(args).output().expect("spawn hlgi");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

/// Header and rows of a CSV artifact, metadata lines skipped.
fn parse(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(str::to_owned).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

fn column(text: &str, name: &str) -> Vec<f64> {
    let (header, rows) = parse(text);
    let i = header.iter().position(|h| h == name).unwrap();
    rows.iter().map(|r| num(&r[i])).collect()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(hlgi(&["--help"]).code, 0);
    assert_eq!(hlgi(&["--version"]).code, 0);
    assert_eq!(hlgi(&["sweep", "--help"]).code, 0);
}

#[test]
fn usage_errors_exit_64() {
    for args in [
        &["k3", "--no-such-flag"][..],
        &["nsit", "--gamma", "1", "--q", "0.5"],
        &["nsit", "--t", "1", "--maximize-over-t"],
        &["k3", "--engine", "kraus"],
        &["k3", "--grid-q", "0:1:3"],
        &["sweep", "--grid-q", "0:1:3:log"],
        &["k3", "--q", "1.5"],
        &["bloch-traj", "--gamma", "0"],
        &["evolve", "--rho", "1,0,0,1"],
    ] {
        let out = hlgi(args);
        assert_eq!(out.code, 64, "{args:?}: {}", out.stderr);
    }
}

#[test]
fn metadata_block_is_self_describing() {
    let out = hlgi(&["k3", "--gamma", "0.5", "--q", "0.25", "--t", "1"]);
    assert_eq!(out.code, 0);
    let meta: Vec<&str> = out.stdout.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(meta[0].starts_with("# tool: hlgi"));
    assert!(meta.iter().any(|l| l.starts_with("# version: ")));
    let config = meta.iter().find_map(|l| l.strip_prefix("# config: ")).unwrap();
    let v: serde_json::Value = serde_json::from_str(config).unwrap();
    assert_eq!(v["common"]["q"], 0.25);
    assert!(meta.iter().any(|l| l.starts_with("# tolerances: ")));
    assert!(meta.contains(&"# status: ok"));
}

#[test]
fn csv_values_round_trip_to_the_library() {
    let out = hlgi(&["k3", "--gamma", "0.5", "--q", "0.25", "--t", "1.3"]);
    let k = column(&out.stdout, "k3")[0];
    let p = ModelParams::new(0.5, 0.25).unwrap();
    assert_eq!(k.to_bits(), hlgi_core::lgi::k3(&p, 1.3).unwrap().to_bits());
}

#[test]
fn json_format() {
    let out = hlgi(&["ep-locus", "--grid-q", "0:1:5", "--format", "json"]);
    assert_eq!(out.code, 0);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["columns"][1], "r_ep");
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["meta"]["command"], "ep-locus");
    assert_eq!(v["rows"][4][1], 2.0);
}

#[test]
fn degenerate_sweep_reproduces_k3() {
    let args = ["--gamma", "0.8", "--q", "0.01", "--resolution", "400"];
    let k3 = hlgi(&[&["k3"][..], &args].concat());
    let sweep = hlgi(&[&["sweep"][..], &args].concat());
    assert_eq!(column(&sweep.stdout, "k3_max"), column(&k3.stdout, "k3_max"));
    assert_eq!(column(&sweep.stdout, "t_star"), column(&k3.stdout, "t_star"));
}

#[test]
fn sweep_output_is_worker_independent() {
    let run = |w: &str| {
        hlgi(&["sweep", "--grid-gamma", "0.2:1.4:4", "--grid-q", "1e-4:1:3:log", "--resolution", "300", "--workers", w])
    };
    let one = run("1");
    let again = run("1");
    let four = run("4");
    assert_eq!(one.code, 0);
    assert_eq!(one.stdout, again.stdout);
    assert_eq!(data_lines(&one.stdout), data_lines(&four.stdout));
    let (header, rows) = parse(&one.stdout);
    assert_eq!(header, ["gamma", "q", "k3_max", "t_star", "masked_points", "error"]);
    assert_eq!(rows.len(), 12);
    assert_eq!((num(&rows[0][0]), num(&rows[0][1])), (0.2, 1e-4));
    assert_eq!((num(&rows[1][0]), num(&rows[2][1])), (0.2, 1.0));
}

#[test]
fn default_ep_locus_endpoints() {
    let out = hlgi(&["ep-locus"]);
    let q = column(&out.stdout, "q");
    let r = column(&out.stdout, "r_ep");
    assert_eq!(q.len(), 101);
    assert_eq!((q[0], r[0]), (0.0, 1.0));
    assert_eq!(q[100], 1.0);
    assert!((r[100] - 2.0).abs() <= 1e-12);
    assert!(r.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn evolve_starts_on_plus_y() {
    let out = hlgi(&["evolve", "--q", "0.3", "--samples", "10"]);
    let (header, rows) = parse(&out.stdout);
    let at = |name: &str| num(&rows[0][header.iter().position(|h| h == name).unwrap()]);
    assert_eq!([at("t"), at("R"), at("sx"), at("sy"), at("sz")], [0.0, 1.0, 0.0, 1.0, 0.0]);
    assert_eq!(rows.len(), 11);
}

#[test]
fn evolve_without_post_selection_relaxes_to_the_stationary_state() {
    let out = hlgi(&["evolve", "--gamma", "0.9905", "--q", "1", "--t-max", "60", "--samples", "60"]);
    assert_eq!(out.code, 0);
    assert!(column(&out.stdout, "R").iter().all(|r| (r - 1.0).abs() <= 1e-12));
    let ss = bloch_decompose(&steady_state(&ModelParams::new(0.9905, 1.0).unwrap()).unwrap());
    let sy = *column(&out.stdout, "sy").last().unwrap();
    let sz = *column(&out.stdout, "sz").last().unwrap();
    assert!((sy - ss.sy).abs() < 1e-8 && (sz - ss.sz).abs() < 1e-8, "({sy}, {sz}) vs {ss:?}");
}

#[test]
fn post_selected_end_point_differs() {
    let end = |q: &str| {
        let out = hlgi(&["evolve", "--gamma", "0.9905", "--q", q, "--t-max", "20", "--samples", "20"]);
        assert_eq!(out.code, 0, "{}", out.stderr);
        (*column(&out.stdout, "sy").last().unwrap(), *column(&out.stdout, "sz").last().unwrap())
    };
    let (a, b) = (end("0"), end("1"));
    assert!((a.0 - b.0).hypot(a.1 - b.1) > 0.1, "{a:?} vs {b:?}");
}

#[test]
fn extinction_exits_2_after_flushing_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let out = hlgi(&[
        "evolve", "--q", "0", "--t-max", "2000", "--samples", "40", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 2, "{}", out.stderr);
    assert!(out.stderr.contains("extinguished"));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().any(|l| l.starts_with("# status: trajectory extinguished")));
    let t = column(&text, "t");
    assert!(!t.is_empty() && t.len() < 41);
    assert!(column(&text, "R").iter().all(|r| *r >= 1e-12));
}

#[test]
fn bloch_traj_tracks_the_numerical_trajectory_at_q0() {
    let out = hlgi(&["bloch-traj", "--gamma", "0.9905", "--q", "0", "--t-max", "5", "--samples", "5"]);
    assert_eq!(out.code, 0);
    let (header, rows) = parse(&out.stdout);
    assert_eq!(header, ["branch", "t", "R", "sy", "sz"]);
    assert_eq!(rows.len(), 12);
    let ev = hlgi(&["evolve", "--gamma", "0.9905", "--q", "0", "--t-max", "5", "--samples", "5"]);
    let sy = column(&ev.stdout, "sy");
    for (k, row) in rows.iter().take(6).enumerate() {
        assert_eq!(row[0], "+");
        assert!((num(&row[3]) - sy[k]).abs() <= 1e-8);
    }
}

#[test]
fn spectrum_row() {
    let out = hlgi(&["spectrum", "--gamma", "0.5", "--q", "0.5"]);
    let (header, rows) = parse(&out.stdout);
    let at = |name: &str| rows[0][header.iter().position(|h| h == name).unwrap()].clone();
    assert!(num(&at("exact_root_error")) < 1e-12);
    assert_eq!(at("coalescence"), "none");
    assert!((num(&at("discriminant")) + 3.375).abs() < 1e-12);
}

#[test]
fn nsit_defaults_and_maximized_t() {
    let out = hlgi(&["nsit", "--gamma", "1", "--q", "0.5", "--t", "1"]);
    assert_eq!(out.code, 0);
    assert!(column(&out.stdout, "delta_01_2")[0] > 1e-3);
    assert!(column(&out.stdout, "aot_defect")[0] <= 1e-10);
    let grid = hlgi(&[
        "nsit", "--grid-gamma", "0.5:1:2", "--grid-q", "0.1:1:2", "--maximize-over-t", "--resolution", "200",
    ]);
    assert_eq!(grid.code, 0, "{}", grid.stderr);
    let t = column(&grid.stdout, "t");
    assert_eq!(t.len(), 4);
    assert!(t.iter().all(|t| *t > 0.0 && *t <= 20.0));
}

fn sweep_file(dir: &Path, format: &str) -> String {
    let path = dir.join(format!("sweep.{format}"));
    let out = hlgi(&[
        "sweep", "--grid-gamma", "0.1:0.9:3", "--grid-q", "1e-4:1:3:log", "--resolution", "400", "--format", format,
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    path.to_str().unwrap().to_owned()
}

#[test]
fn fit_check_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let csv_in = sweep_file(dir.path(), "csv");
    let json_in = sweep_file(dir.path(), "json");
    let a = hlgi(&["fit-check", "--input", &csv_in]);
    let b = hlgi(&["fit-check", "--input", &json_in]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(data_lines(&a.stdout), data_lines(&b.stdout));
    let (header, rows) = parse(&a.stdout);
    assert_eq!(header, ["gamma", "q", "k3_computed", "k3_fit", "residual", "region"]);
    assert_eq!(rows.len(), 9);
    assert!(a.stdout.contains("# log_base: e"));
    let regions = ["fine", "moderate", "coarse"];
    assert!(rows.iter().all(|r| regions.contains(&r[5].as_str())));
}

#[test]
fn fit_check_excludes_the_gap_unless_asked() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gap.csv");
    let out = hlgi(&["sweep", "--gamma", "1.5", "--q", "0.1", "--resolution", "200", "--out", path.to_str().unwrap()]);
    assert_eq!(out.code, 0);
    let strict = hlgi(&["fit-check", "--input", path.to_str().unwrap()]);
    assert_eq!(parse(&strict.stdout).1[0][5], "excluded");
    let loose = hlgi(&["fit-check", "--input", path.to_str().unwrap(), "--allow-extrapolation"]);
    assert_ne!(parse(&loose.stdout).1[0][5], "excluded");
}

#[test]
fn missing_input_is_an_io_failure() {
    let out = hlgi(&["fit-check", "--input", "/nonexistent/sweep.csv"]);
    assert_eq!(out.code, 70);
}
