use risp_core::harness::{
    apply_override, load_spec, parse_spec, preset_spec, read_trace, run_experiment, save_spec, write_graymap,
    PhantomKind, RunStatus,
};
use risp_core::{Error, Signal};

const SPEC: &str = r#"
spec_version = 1
name = "smoke"
seed = 2
instances = 2

[problem]
kind = "inpaint"
missing = 0.5

[phantom]
kind = "checkerboard"
height = 12
width = 12
seed = 4

[prior]
kind = "mixture"
components = 2
variance = 0.5
sigma = 0.1
seed = 7

[[solver]]
name = "red"
algorithm = "red_prox"
step = 0.05
max_iter = 40

[[solver]]
name = "risp"
algorithm = "risp_prox"
step = 0.05
inertia = 0.2
restart_budget = 5000.0
max_iter = 40
"#;

#[test]
fn experiment_writes_traces_images_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = parse_spec(SPEC).unwrap();
    spec.output_dir = dir.path().join("out");
    let report = run_experiment(&spec, Some(2), None).unwrap();
    assert!(report.all_ok());
    assert_eq!(report.trace_paths.len(), 4);
    assert_eq!(report.image_paths.len(), 4);
    let table = read_trace(spec.output_dir.join("risp_i1.csv")).unwrap();
    assert!(!table.continuous);
    assert_eq!(table.rows.len(), 41);
    assert!(table.rows.iter().all(|r| r.psnr.is_some()));
    let summary = std::fs::read_to_string(&report.summary_path).unwrap();
    assert_eq!(summary.lines().count(), 5);
    assert_eq!(load_spec(spec.output_dir.join("spec.toml")).unwrap(), spec);
}

#[test]
fn divergence_is_a_row_not_an_abort() {
    let dir = tempfile::tempdir().unwrap();
    let mut spec = parse_spec(SPEC).unwrap();
    spec.output_dir = dir.path().to_path_buf();
    spec = apply_override(&spec, "solver.red.step", "1e3").unwrap();
    spec.problem.lambda = Some(50.0);
    spec.solvers[0].algorithm = risp_core::Algorithm::RedGm;
    let report = run_experiment(&spec, Some(1), None).unwrap();
    assert!(!report.all_ok());
    assert!(report.rows.iter().any(|r| r.status == RunStatus::Diverged));
    assert!(report.rows.iter().any(|r| r.status == RunStatus::Ok));
}

#[test]
fn file_phantoms_resolve_against_the_spec_directory() {
    let dir = tempfile::tempdir().unwrap();
    let img = Signal::image(8, 8, (0..64).map(|i| i as f64 / 63.0).collect()).unwrap();
    write_graymap(&img, dir.path().join("truth.pgm")).unwrap();
    let src = SPEC
        .replace("kind = \"checkerboard\"\nheight = 12\nwidth = 12\nseed = 4", "kind = \"file\"\npath = \"truth.pgm\"");
    let mut spec = parse_spec(&src).unwrap();
    assert_eq!(spec.phantom.kind, PhantomKind::File);
    spec.output_dir = dir.path().join("out");
    let report = run_experiment(&spec, None, Some(dir.path())).unwrap();
    assert!(report.all_ok());
}

#[test]
fn overrides_and_errors() {
    let spec = parse_spec(SPEC).unwrap();
    let changed = apply_override(&spec, "problem.lambda", "3.5").unwrap();
    assert_eq!(changed.problem.lambda, Some(3.5));
    assert!(apply_override(&spec, "solver.nope.step", "1.0").is_err());
    let dup = SPEC.replace("name = \"risp\"", "name = \"red\"");
    match parse_spec(&dup) {
        Err(Error::Config { line, .. }) => assert_eq!(dup.lines().nth(line - 1).unwrap().trim(), "name = \"red\""),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_spec(&SPEC.replace("spec_version = 1", "spec_version = 9")), Err(Error::Config { .. })));
}

#[test]
fn presets_run_at_small_size() {
    let dir = tempfile::tempdir().unwrap();
    for key in ["deblur", "sisr", "mri_x4", "rician"] {
        let mut spec = preset_spec(key, 16, 15).unwrap();
        spec.output_dir = dir.path().join(key);
        save_spec(&spec, dir.path().join(format!("{key}.toml"))).unwrap();
        let report = run_experiment(&spec, Some(2), None).unwrap();
        assert_eq!(report.rows.len(), 4, "{key}");
        assert!(report.rows.iter().all(|r| r.status != RunStatus::Failed), "{key}");
    }
}
