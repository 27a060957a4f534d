use std::fs;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gaugenet::io::{read_graph, read_scatter, write_graph, FrontFile, PlanFile};
use gaugenet::graph::GaugeGraph;

fn gaugenet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaugenet"))
        .args(args)
        .env_remove("GAUGENET_NWIS_ENDPOINT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = gaugenet(args);
    assert!(
        out.status.success(),
        "gaugenet {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn synth(dir: &Path, p: usize, n: usize, edges: usize) -> PathBuf {
    let (p, n, e) = (p.to_string(), n.to_string(), edges.to_string());
    ok(&["synth", "--p", &p, "--n", &n, "--edges", &e, "--seed", "3", "--out-dir", s(dir)]);
    dir.join("panel.csv")
}

#[test]
fn select_writes_full_scatter() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synth(dir.path(), 5, 300, 4);
    let out = dir.path().join("sel");
    ok(&[
        "select", "--panel", s(&panel), "--res", "3", "--k-min", "1", "--k-max", "10",
        "--out-dir", s(&out), "--svg",
    ]);
    let rows = read_scatter(out.join("scatter.csv")).unwrap();
    assert_eq!(rows.len(), 30);
    let front: FrontFile = gaugenet::io::read_json(out.join("front.json")).unwrap();
    assert_eq!(front.points.len(), rows.iter().filter(|r| !r.dominated).count());
    assert!(fs::read_to_string(out.join("scatter.svg")).unwrap().starts_with("<svg"));
    read_graph(out.join("graph.json")).unwrap();
}

#[test]
fn edges_policy_caps_graph_size() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synth(dir.path(), 10, 400, 12);
    for (policy, cap) in [("edges=47", 47), ("edges=6", 6)] {
        let out = dir.path().join(policy.replace('=', "_"));
        ok(&[
            "select", "--panel", s(&panel), "--res", "4", "--k-min", "1", "--policy", policy,
            "--out-dir", s(&out),
        ]);
        let g = read_graph(out.join("graph.json")).unwrap();
        assert!(g.edge_count() <= cap, "{policy}: {} edges", g.edge_count());
    }
}

#[test]
fn dist_baseline_on_collinear_sites() {
    let dir = tempfile::tempdir().unwrap();
    let coords = dir.path().join("coords.csv");
    fs::write(&coords, "gauge_id,lat,lon\nA,0,0\nB,0,1\nC,0,3\n").unwrap();
    let out = dir.path().join("dist1.json");
    ok(&["baseline", "--method", "dist", "--m", "1", "--coords", s(&coords), "--out", s(&out)]);
    let g = read_graph(&out).unwrap();
    let edges: Vec<_> = g.edges().collect();
    assert_eq!(edges, vec![(0, 1), (1, 2)]);
}

#[test]
fn corr_baseline_pairs_duplicate_columns() {
    let dir = tempfile::tempdir().unwrap();
    let panel = dir.path().join("panel.csv");
    let mut text = String::from("date,A,B,C\n");
    for t in 0..30u32 {
        let a = 5.0 + (t as f64 * 0.7).sin() * 3.0 + t as f64 * 0.1;
        let c = 4.0 + ((t * 7919) % 13) as f64;
        text.push_str(&format!("2001-01-{:02},{a},{a},{c}\n", 1 + t));
    }
    fs::write(&panel, text).unwrap();
    let out = dir.path().join("corr1.json");
    ok(&["baseline", "--method", "corr", "--m", "1", "--panel", s(&panel), "--out", s(&out)]);
    assert!(read_graph(&out).unwrap().has_edge(0, 1));
}

#[test]
fn dist_without_coordinates_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = gaugenet(&["baseline", "--method", "dist", "--out", s(&dir.path().join("d.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("coordinates"));
    assert!(!dir.path().join("d.json").exists());
}

#[test]
fn remove_path_graph() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("path.json");
    let ids = vec!["A".to_string(), "B".to_string(), "C".to_string()];
    write_graph(&graph, &GaugeGraph::from_edges(ids, [(0, 1), (1, 2)]).unwrap()).unwrap();
    let nse = dir.path().join("nse.json");
    fs::write(&nse, r#"{"A": 0.9, "B": 0.95, "C": 0.8}"#).unwrap();
    let out = dir.path().join("plan.json");
    ok(&["remove", "--graph", s(&graph), "--nse", s(&nse), "--out", s(&out)]);
    let plan: PlanFile = gaugenet::io::read_json(&out).unwrap();
    let queue: Vec<&str> = plan.queue.iter().map(|e| e.gauge_id.as_str()).collect();
    assert_eq!(queue, ["B"]);
    assert_eq!(plan.max_rem_rank, 1);
    assert_eq!(plan.queue[0].donors, ["A", "C"]);
}

#[test]
fn resample_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synth(dir.path(), 6, 300, 6);
    let graph = dir.path().join("truth.json");
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&[
            "resample", "--panel", s(&panel), "--graph", s(&graph), "--runs", "3", "--seed", "7",
            "--out", s(&out),
        ]);
        fs::read(out).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn score_compares_methods() {
    let dir = tempfile::tempdir().unwrap();
    let panel = synth(dir.path(), 8, 600, 10);
    let coords = dir.path().join("coords.csv");
    let truth = dir.path().join("truth.json");
    let corr = dir.path().join("corr2.json");
    let dist = dir.path().join("dist2.json");
    ok(&["baseline", "--method", "corr", "--m", "2", "--panel", s(&panel), "--out", s(&corr)]);
    ok(&[
        "baseline", "--method", "dist", "--m", "2", "--panel", s(&panel), "--coords", s(&coords),
        "--out", s(&dist),
    ]);
    let mut args = vec!["score".to_string(), "--panel".into(), s(&panel).into()];
    for g in [&truth, &corr, &dist] {
        let stem = g.file_stem().unwrap().to_str().unwrap();
        let eval_dir = dir.path().join(format!("eval_{stem}"));
        ok(&["infer", "--panel", s(&panel), "--graph", s(g), "--out", s(&eval_dir)]);
        let plan = dir.path().join(format!("plan_{stem}.json"));
        let nse = eval_dir.join("evaluation.json");
        ok(&["remove", "--graph", s(g), "--nse", s(&nse), "--out", s(&plan)]);
        let rs = dir.path().join(format!("rs_{stem}.json"));
        ok(&["resample", "--panel", s(&panel), "--graph", s(g), "--runs", "4", "--out", s(&rs)]);
        for (flag, path) in [("--nse-file", nse), ("--plan", plan), ("--resample", rs)] {
            args.push(flag.into());
            args.push(s(&path).into());
        }
    }
    let out = dir.path().join("score.json");
    args.extend(["--out".into(), s(&out).into()]);
    ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
    let v: serde_json::Value = gaugenet::io::read_json(&out).unwrap();
    assert_eq!(v["scores"].as_array().unwrap().len(), 3);
    assert_eq!(v["t_tests"].as_array().unwrap().len(), 6);
    assert!(v["m_rem"].as_u64().unwrap() >= 1);
}

#[test]
fn config_file_with_unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"lambda_min": 0.02, "lamda_max": 0.5}"#).unwrap();
    let out = gaugenet(&["select", "--config", s(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fetch_requires_sites() {
    let dir = tempfile::tempdir().unwrap();
    let out = gaugenet(&[
        "fetch", "--sites", "", "--start", "1951-01-01", "--end", "1951-01-03", "--endpoint",
        "http://127.0.0.1:9/nwis/dv/", "--out", s(&dir.path().join("p.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("site list is empty"));
}

fn rdb(site: &str, rows: &[(&str, f64)]) -> String {
    let mut s = String::from("# mock\nagency_cd\tsite_no\tdatetime\t1_00060_00003\t1_00060_00003_cd\n5s\t15s\t20d\t14n\t10s\n");
    for (d, v) in rows {
        s.push_str(&format!("USGS\t{site}\t{d}\t{v}\tA\n"));
    }
    s
}

#[test]
fn fetch_from_mock_service() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let server = std::thread::spawn(move || {
        for stream in listener.incoming().take(2) {
            let mut stream = stream.unwrap();
            let mut buf = [0u8; 4096];
            let n = stream.read(&mut buf).unwrap();
            let req = String::from_utf8_lossy(&buf[..n]).to_string();
            let (site, base) = if req.contains("sites=01") { ("01", 100.0) } else { ("02", 200.0) };
            let body = rdb(site, &[("1951-01-01", base), ("1951-01-02", base + 1.0), ("1951-01-03", base + 2.0)]);
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("panel.csv");
    let endpoint = format!("http://{addr}/nwis/dv/");
    ok(&[
        "fetch", "--sites", "01,02", "--start", "1951-01-01", "--end", "1951-01-03", "--endpoint",
        &endpoint, "--out", s(&out),
    ]);
    server.join().unwrap();
    let panel = gaugenet::dataset::load_panel(&out, gaugenet::dataset::MissingPolicy::Reject).unwrap();
    assert_eq!(panel.n_days(), 3);
    assert_eq!(panel.gauge_ids(), ["01", "02"]);
    assert!((panel.q()[[2, 1]] - 202.0 * gaugenet::nwis::CFS_TO_CMS).abs() < 1e-9);
}
