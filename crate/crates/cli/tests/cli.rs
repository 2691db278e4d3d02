use std::collections::HashSet;
use std::process::{Command, Output};

use hexmix::{enumerate_all, make_domain, parse_grid_text, to_grid_text};
use hexmix_cli::commands::read_fields;
use hexmix_cli::render::{discrete_overlay, lozenges, render_svg, Overlays};

fn hexmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hexmix")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn enumerate_prints_count() {
    for (sides, want) in [(["1", "1", "1"], "2"), (["2", "1", "1"], "3"), (["2", "2", "2"], "20")] {
        let o = hexmix(&["enumerate", "--sides", sides[0], sides[1], sides[2]]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o).trim(), want);
    }
}

#[test]
fn conic_check_reports_small_residual() {
    let o = hexmix(&["shape", "--q", "0", "--sides", "1", "1", "1", "--conic-check"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let line = out.lines().find(|l| l.starts_with("conic residual")).expect("residual line");
    let r: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(r < 1e-9, "{r}");
}

#[test]
fn verify_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, fmt: &str| {
        let path = dir.path().join(name);
        let o = hexmix(&[
            "verify", "--suite", "primary", "--seed", "7", "--criteria", "1,2,3,6,7,9", "--format", fmt, "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read(path).unwrap()
    };
    let first = run("r.json", "json");
    assert_eq!(run("r.json", "json"), first);
    assert_eq!(run("r.txt", "text"), run("r.txt", "text"));
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["passed"], 6);
    assert_eq!(report["config"]["seed"], 7);
    assert!(report["build"].as_str().unwrap().starts_with("hexmix "));
}

#[test]
fn unknown_suite_and_flags_are_usage_errors() {
    for args in [vec!["verify", "--suite", "secondary"], vec!["enumerate", "--bogus"], vec!["enumerate"], vec!["frobnicate"]] {
        let o = hexmix(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"), "{args:?}");
    }
}

#[test]
fn flags_override_config_file_and_unknown_keys_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"sides": [2, 1, 1], "format": "json"}"#).unwrap();
    let c = cfg.to_str().unwrap();

    let o = hexmix(&["enumerate", "--config", c]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["count"], 3);

    let o = hexmix(&["enumerate", "--config", c, "--sides", "2", "2", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["count"], 20);
    assert_eq!(v["config"]["sides"], serde_json::json!([2, 2, 2]));

    std::fs::write(&cfg, r#"{"sides": [2, 1, 1], "horizon": 3}"#).unwrap();
    assert_eq!(hexmix(&["enumerate", "--config", c]).status.code(), Some(2));
    std::fs::write(&cfg, "not json").unwrap();
    assert_eq!(hexmix(&["enumerate", "--config", c]).status.code(), Some(2));
}

#[test]
fn artifacts_embed_config_and_build() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, fmt, ext) in [
        (vec!["sample", "--n", "2", "--seed", "3"], "grid", "grid"),
        (vec!["sample", "--n", "2", "--seed", "3"], "csv", "csv"),
        (vec!["mix", "--sides", "1", "1", "1"], "json", "json"),
        (vec!["shape", "--n", "1", "--grid", "4"], "csv", "csv"),
        (vec!["render", "--n", "2", "--seed", "3"], "svg", "svg"),
    ] {
        let path = dir.path().join(format!("out.{ext}"));
        let mut args = cmd.clone();
        args.extend(["--format", fmt, "--out", path.to_str().unwrap()]);
        let o = hexmix(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("hexmix 0.1.0"), "{args:?}");
        assert!(text.contains(&format!("\"command\":\"{}\"", cmd[0])) || text.contains(&format!("\"command\": \"{}\"", cmd[0])));
    }
    assert!(dir.path().join("out.arctic.csv").exists());
}

#[test]
fn shape_csv_columns_and_precision() {
    let o = hexmix(&["shape", "--n", "1", "--q", "0.1", "--grid", "5", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut rows = out.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(rows.next(), Some("x,y,phase,H,dHx,dHy,xi,d,e"));
    let rows: Vec<&str> = rows.collect();
    assert!(rows.len() > 40);
    for r in rows {
        let cells: Vec<&str> = r.split(',').collect();
        assert_eq!(cells.len(), 9);
        let mantissa = cells[3].split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{}", cells[3]);
    }
}

#[test]
fn sample_grid_output_round_trips() {
    let o = hexmix(&["sample", "--n", "4", "--seed", "11", "--replicas", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let fields = read_fields(&text).unwrap();
    assert_eq!(fields.len(), 3);
    for f in &fields {
        assert!(f.is_admissible());
        let plain = to_grid_text(f);
        assert_eq!(to_grid_text(&parse_grid_text(&plain).unwrap()), plain);
    }
    assert_eq!(stdout(&hexmix(&["sample", "--n", "4", "--seed", "11", "--replicas", "3"])), text);
}

#[test]
fn lozenges_tile_every_small_hexagon() {
    for (a, b, c) in [(1, 1, 1), (2, 1, 1), (2, 2, 2), (3, 2, 1)] {
        let d = make_domain(a, b, c).unwrap();
        for f in enumerate_all(&d, 10_000).unwrap() {
            let tiles = lozenges(&f);
            assert_eq!(tiles.len(), d.lozenge_count());
            // each lozenge covers two unit triangles; none may be covered twice
            let mut tri = HashSet::new();
            for l in &tiles {
                let [p, a1, q, b1] = l.corners;
                for apex in [a1, b1] {
                    let mut t = [p, q, apex];
                    t.sort();
                    assert!(tri.insert(t), "triangle {t:?} covered twice");
                }
            }
            assert_eq!(tri.len(), 2 * d.lozenge_count());
        }
    }
}

#[test]
fn render_counts_and_determinism() {
    let d = make_domain(1, 1, 1).unwrap();
    let f = &enumerate_all(&d, 10).unwrap()[0];
    let svg = render_svg(f, &Overlays::default(), 20.0, "{}");
    assert_eq!(svg.matches("<polygon").count(), 3);

    let o = hexmix(&["render", "--n", "5", "--seed", "2", "--arctic", "--analytic-lines", "--discrete-lines"]);
    assert_eq!(o.status.code(), Some(0));
    let svg = stdout(&o);
    assert_eq!(svg.matches("<polygon").count(), 75);
    assert_eq!(svg.matches(r#"class="discrete-level""#).count(), 5);
    assert_eq!(svg.matches(r#"class="analytic-level""#).count(), 5);
    assert_eq!(svg.matches(r#"class="arctic""#).count(), 1);
    let again = hexmix(&["render", "--n", "5", "--seed", "2", "--arctic", "--analytic-lines", "--discrete-lines"]);
    assert_eq!(stdout(&again), svg);

    let (_, max) = hexmix::extreme_tilings(&make_domain(3, 2, 4).unwrap());
    assert_eq!(discrete_overlay(&max).unwrap().len(), 2);
}

#[test]
fn render_reads_grid_files() {
    let dir = tempfile::tempdir().unwrap();
    let grid = dir.path().join("s.grid");
    let o = hexmix(&["sample", "--sides", "3", "2", "2", "--seed", "4", "--out", grid.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = hexmix(&["render", "--input", grid.to_str().unwrap(), "--discrete-lines"]);
    assert_eq!(o.status.code(), Some(0));
    let svg = stdout(&o);
    assert_eq!(svg.matches("<polygon").count(), 3 * 2 + 2 * 2 + 2 * 3);
    assert_eq!(svg.matches(r#"class="discrete-level""#).count(), 2);
}

#[test]
fn mix_spectrum_on_two_state_hexagon() {
    let o = hexmix(&["mix", "--sides", "1", "1", "1", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["gap"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((v["tmix"].as_f64().unwrap() - 2f64.ln() / 2.0).abs() < 1e-9);
}
