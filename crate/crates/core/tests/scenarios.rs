use std::fs;

use msogi::scenario::{
    compare, csv_header, export, metrics, parse_scenario, preset, preset_file, read_csv, run, run_all, write_csv,
    ExportPaths, Scenario,
};

fn shortened(name: &str, duration: f64) -> Scenario {
    let mut f = preset_file(name).unwrap();
    f.sim.as_mut().unwrap().duration_s = Some(duration);
    f.resolve().unwrap()
}

fn csv_bytes(s: &Scenario) -> Vec<u8> {
    let out = run(s).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &out.trace, s.gains.n()).unwrap();
    buf
}

#[test]
fn full_preset_has_one_row_per_step() {
    let s = preset("s1-msogi").unwrap();
    assert_eq!((s.sim.duration, s.sim.step, s.sim.log_every), (0.8, 1e-4, 1));
    let out = run(&s).unwrap();
    assert!(out.failure.is_none());
    assert_eq!(out.trace.len(), 8001);
    let mut buf = Vec::new();
    write_csv(&mut buf, &out.trace, s.gains.n()).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 8002);
}

#[test]
fn csv_round_trip_is_exact() {
    let mut f = preset_file("s2-ssogi").unwrap();
    let sim = f.sim.as_mut().unwrap();
    sim.duration_s = Some(0.02);
    sim.noise_amp = Some(3.0);
    let s = f.resolve().unwrap();
    let out = run(&s).unwrap();
    let mut buf = Vec::new();
    write_csv(&mut buf, &out.trace, s.gains.n()).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, out.trace);
}

#[test]
fn equal_inputs_give_bit_identical_csv() {
    for name in ["s1-anf", "s2-msogi"] {
        let s = shortened(name, 0.03);
        assert_eq!(csv_bytes(&s), csv_bytes(&s), "{name}");
    }
}

#[test]
fn empty_trace_writes_only_the_header() {
    let mut buf = Vec::new();
    write_csv(&mut buf, &[], 3).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert_eq!(text.trim_end(), csv_header(3).join(","));
}

#[test]
fn export_writes_both_files() {
    let s = shortened("s1-ssogi", 0.01);
    let out = run(&s).unwrap();
    let m = metrics(&s, &out).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let paths = ExportPaths::in_dir(dir.path(), &s.label);
    export(&out.trace, s.gains.n(), &m, &paths).unwrap();
    let csv = fs::read(paths.csv.as_ref().unwrap()).unwrap();
    assert_eq!(read_csv(csv.as_slice()).unwrap(), out.trace);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(paths.metrics.as_ref().unwrap()).unwrap()).unwrap();
    assert_eq!(json["label"], "s1-ssogi");
}

#[test]
fn missing_duration_is_named() {
    let mut f = preset_file("s1-msogi").unwrap();
    f.sim.as_mut().unwrap().duration_s = None;
    let err = parse_scenario(&f.to_toml().unwrap()).unwrap_err().to_string();
    assert!(err.contains("duration"), "{err}");
}

#[test]
fn single_scenario_comparison_has_no_ranking() {
    let s = shortened("s1-msogi", 0.3);
    let out = run(&s).unwrap();
    let m = metrics(&s, &out).unwrap();
    let table = compare(&[(&s, &out, &m)]).unwrap();
    assert!(!table.events.is_empty());
    for ev in &table.events {
        assert_eq!(ev.rows.len(), 1);
        assert!(ev.ranking.is_empty());
    }
}

#[test]
fn repeated_comparison_is_identical() {
    let scenarios = vec![shortened("s1-msogi", 0.3), shortened("s1-anf", 0.3)];
    let table = || {
        let results: Vec<_> = run_all(&scenarios).into_iter().map(Result::unwrap).collect();
        let refs: Vec<_> = scenarios.iter().zip(&results).map(|(s, (o, m))| (s, o, m)).collect();
        compare(&refs).unwrap()
    };
    let a = table();
    assert_eq!(a, table());
    assert_eq!(a.to_table(), table().to_table());
}

#[test]
fn comparison_rejects_different_signals() {
    let a = shortened("s1-msogi", 0.05);
    let b = shortened("s2-msogi", 0.05);
    let (oa, ob) = (run(&a).unwrap(), run(&b).unwrap());
    let (ma, mb) = (metrics(&a, &oa).unwrap(), metrics(&b, &ob).unwrap());
    assert!(compare(&[(&a, &oa, &ma), (&b, &ob, &mb)]).is_err());
}

#[test]
fn s1_trio_ranks_msogi_first() {
    let scenarios: Vec<_> = ["s1-msogi", "s1-ssogi", "s1-anf"].iter().map(|n| preset(n).unwrap()).collect();
    let results: Vec<_> = run_all(&scenarios).into_iter().map(Result::unwrap).collect();
    let refs: Vec<_> = scenarios.iter().zip(&results).map(|(s, (o, m))| (s, o, m)).collect();
    let table = compare(&refs).unwrap();
    for ev in &table.events {
        assert_eq!(ev.ranking[0], "s1-msogi", "window starting at {}", ev.start);
        let t = |i: usize| ev.rows[i].fundamental_settling.unwrap_or(f64::INFINITY);
        assert!(t(0) < t(1) && t(0) < t(2), "window starting at {}", ev.start);
    }
}

#[test]
fn s1_msogi_settles_within_20_ms_after_each_event() {
    let s = preset("s1-msogi").unwrap();
    let m = metrics(&s, &run(&s).unwrap()).unwrap();
    for ev in &m.events {
        let t = ev.settling_time.expect("unsettled window");
        assert!(t < 0.02, "window at {}: {t}", ev.start);
    }
}

#[test]
fn s2_msogi_frequency_stays_in_bounds_once_inside() {
    let s = preset("s2-msogi").unwrap();
    let (lo, hi) = (s.fll.params.omega_min, s.fll.params.omega_max);
    let out = run(&s).unwrap();
    assert!(out.failure.is_none());
    let entry = out.trace.iter().position(|r| r.omega_hat >= lo && r.omega_hat <= hi).unwrap();
    assert!(out.trace[entry..].iter().all(|r| r.omega_hat >= lo && r.omega_hat <= hi));
}
