use maropf::grid::CaseFile;
use maropf::maropf::Method;
use maropf::scenario::{
    bundled_case_file, gen_synthetic, resolve_case, run_scenario, summary_csv, ScenarioConfig,
    SyntheticSpec, BUNDLED,
};
use maropf::Error;

#[test]
fn single_method_writes_four_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = ScenarioConfig::new("bundled:case2", vec![Method::Maropf], dir.path());
    let rows = run_scenario(&config).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].feasible && rows[0].converged);
    for file in ["maropf/solution.json", "maropf/iterations.csv", "maropf/report.json", "summary.csv"] {
        assert!(dir.path().join(file).is_file(), "{file} missing");
    }
    let count = walk(dir.path());
    assert_eq!(count, 4);
}

fn walk(path: &std::path::Path) -> usize {
    std::fs::read_dir(path)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p)
            } else {
                1
            }
        })
        .sum()
}

#[test]
fn all_methods_compare_on_one_case() {
    let dir = tempfile::tempdir().unwrap();
    let methods = vec![Method::Maropf, Method::Ropf, Method::RelaxedLinear, Method::Enumerate];
    let config = ScenarioConfig::new("bundled:case2-arbitrage", methods.clone(), dir.path());
    let rows = run_scenario(&config).unwrap();
    assert_eq!(rows.iter().map(|r| r.method).collect::<Vec<_>>(), methods);
    let csv = std::fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert_eq!(csv, summary_csv(&rows).unwrap());
    assert_eq!(csv.lines().count(), 5);
    let maropf = &rows[0];
    let enumerate = &rows[3];
    assert!((maropf.objective - enumerate.objective).abs() <= 1e-6);
}

#[test]
fn missing_case_names_load_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = ScenarioConfig::new(
        dir.path().join("nope.json").display().to_string(),
        vec![Method::Maropf],
        dir.path(),
    );
    match run_scenario(&config).unwrap_err() {
        Error::Stage { stage, source } => {
            assert_eq!(stage, "load");
            assert!(matches!(*source, Error::Io { .. }));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn empty_method_list_names_config_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = ScenarioConfig::new("bundled:case2", vec![], dir.path());
    let err = run_scenario(&config).unwrap_err();
    assert!(err.to_string().starts_with("config stage failed"), "{err}");
}

#[test]
fn enumeration_refusal_names_method_stage() {
    let dir = tempfile::tempdir().unwrap();
    let config = ScenarioConfig::new("bundled:case34like", vec![Method::Enumerate], dir.path());
    match run_scenario(&config).unwrap_err() {
        Error::Stage { stage, source } => {
            assert_eq!(stage, "enumerate");
            assert!(matches!(*source, Error::EnumerationLimit { .. }));
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn config_json_defaults_and_unknown_fields() {
    let cfg: ScenarioConfig =
        serde_json::from_str(r#"{"case": "bundled:case2", "methods": ["ropf"], "out_dir": "x"}"#)
            .unwrap();
    assert_eq!(cfg, ScenarioConfig::new("bundled:case2", vec![Method::Ropf], "x"));
    let bad = r#"{"case": "c", "methods": [], "out_dir": "x", "extra": 1}"#;
    assert!(serde_json::from_str::<ScenarioConfig>(bad).is_err());
}

#[test]
fn synthetic_round_trip() {
    let spec = SyntheticSpec {
        seed: 7,
        nodes: 34,
        steps: 48,
        pv_penetration: 0.3,
        batteries: 2,
    };
    let file = gen_synthetic(&spec).unwrap();
    let text = file.to_json();
    let back = CaseFile::from_json(&text).unwrap();
    assert_eq!(back, file);
    let case = back.into_case().unwrap();
    assert_eq!(case.n_lines(), 33);
    assert_eq!(case.horizon(), 48);
    assert_eq!(case.batteries.len(), 2);

    let via_ref = resolve_case("synthetic:34:48:0.3:2", 7).unwrap();
    assert_eq!(via_ref.lines, case.lines);
    assert_eq!(via_ref.net_load, case.net_load);
}

#[test]
fn shipped_case_files_match_bundled() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases");
    for name in BUNDLED {
        let path = dir.join(format!("{name}.json"));
        let shipped = CaseFile::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(shipped, bundled_case_file(name).unwrap(), "{name}");
        assert!(resolve_case(path.to_str().unwrap(), 0).is_ok());
    }
}
