use std::f64::consts::PI;
use std::sync::OnceLock;

use elastica_cli::export::{fmt17, read_manifest, FOLD_COLUMNS, POINT_COLUMNS};
use elastica_cli::scenario::write_outputs;
use elastica_cli::svg::segments;
use elastica_cli::{
    parse_csv, render_svg, run_scenario, snap_pairs, write_csv, write_folds_csv, ScenarioConfig,
    ScenarioRun, SvgStyle,
};
use proptest::prelude::*;

/// Arm rotation at P = π²/4, ε = 0.25 over [−6π, 6π]: five folds.
fn rotate_arm() -> &'static ScenarioRun {
    static RUN: OnceLock<ScenarioRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let text = format!(
            r#"{{"scenario": "rotate-arm", "P": {}, "epsilon": 0.25, "start": 0.0,
                "range": [{}, {}], "labels": [1.5707963267948966], "periodicity": true}}"#,
            PI * PI / 4.0,
            -6.0 * PI,
            6.0 * PI
        );
        run_scenario(&ScenarioConfig::from_json(&text).unwrap()).unwrap()
    })
}

#[test]
fn branch_csv_round_trips_exactly() {
    let a = &rotate_arm().artifacts[0];
    let mut buf = Vec::new();
    write_csv(a, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), POINT_COLUMNS.join(","));
    let rows = parse_csv(buf.as_slice()).unwrap();
    assert_eq!(rows.len(), a.points.len());
    for (r, p) in rows.iter().zip(&a.points) {
        assert_eq!(
            [
                r.tau,
                r.xi,
                r.ordinate,
                r.theta0,
                r.theta1,
                r.theta_prime_0,
                r.theta_prime_1,
                r.x1,
                r.y1,
                r.energy
            ],
            [
                p.tau,
                p.xi,
                p.ordinate,
                p.theta0,
                p.theta1,
                p.theta_prime_0,
                p.theta_prime_1,
                p.x1,
                p.y1,
                p.energy
            ]
        );
        assert_eq!(r.index, p.index);
    }
}

#[test]
fn empty_branch_writes_only_headers() {
    let mut a = rotate_arm().artifacts[0].clone();
    a.points.clear();
    a.folds.clear();
    let mut buf = Vec::new();
    write_csv(&a, &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf.clone()).unwrap().trim_end(),
        POINT_COLUMNS.join(",")
    );
    assert!(parse_csv(buf.as_slice()).unwrap().is_empty());
    let mut buf = Vec::new();
    write_folds_csv(&a, &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap().trim_end(),
        FOLD_COLUMNS.join(",")
    );
}

#[test]
fn folds_csv_lists_every_fold() {
    let a = &rotate_arm().artifacts[0];
    let mut buf = Vec::new();
    write_folds_csv(a, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), FOLD_COLUMNS.join(","));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), a.folds.len());
    for (row, f) in rows.iter().zip(&a.folds) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), FOLD_COLUMNS.len());
        assert_eq!(cells[1].parse::<f64>().unwrap(), f.xi_star);
        assert_eq!(cells[7], "pass");
    }
}

#[test]
fn shapes_are_drawn_at_the_requested_labels() {
    let a = &rotate_arm().artifacts[0];
    assert!(!a.shapes.is_empty());
    for s in &a.shapes {
        let turns = (s.xi - s.label) / (2.0 * PI);
        assert!(
            (turns - turns.round()).abs() < 1e-9,
            "shape at {} for label {}",
            s.xi,
            s.label
        );
        assert_eq!(s.centerline[0], [0.0, 0.0]);
    }
}

fn svg_paths(svg: &str) -> (usize, usize, usize) {
    let doc = roxmltree::Document::parse(svg).expect("well-formed XML");
    let root = doc.root_element();
    assert_eq!(root.tag_name().name(), "svg");
    assert_eq!(
        root.tag_name().namespace(),
        Some("http://www.w3.org/2000/svg")
    );
    let mut stable = 0;
    let mut unstable = 0;
    let mut markers = 0;
    for n in doc.descendants() {
        for attr in n.attributes() {
            assert!(!attr.name().contains("href"), "external reference in {n:?}");
        }
        match (n.tag_name().name(), n.attribute("class")) {
            ("path", Some("stable")) => stable += 1,
            ("path", Some("unstable")) => unstable += 1,
            ("circle", Some("fold")) => markers += 1,
            _ => {}
        }
    }
    (stable, unstable, markers)
}

#[test]
fn svg_is_standalone_xml_with_one_path_per_segment() {
    let a = &rotate_arm().artifacts[0];
    let svg = render_svg(&[a], &SvgStyle::default());
    let (stable, unstable, markers) = svg_paths(&svg);
    assert_eq!(markers, a.folds.len());
    assert_eq!(stable + unstable, a.folds.len() + 1);
    assert!(stable > 0 && unstable > 0);
    // The namespace URI is the only URL in the document.
    assert_eq!(svg.matches("http").count(), 1);
}

#[test]
fn two_folds_give_three_segments_and_two_markers() {
    let mut a = rotate_arm().artifacts[0].clone();
    a.points.truncate(a.folds[2].point_before + 1);
    a.folds.truncate(2);
    a.shapes.clear();
    let (stable, unstable, markers) = svg_paths(&render_svg(&[&a], &SvgStyle::default()));
    assert_eq!((stable + unstable, markers), (3, 2));
}

#[test]
fn single_stable_segment_is_one_solid_path() {
    let mut a = rotate_arm().artifacts[0].clone();
    a.points.truncate(a.folds[0].point_before + 1);
    assert!(a.points.iter().all(|p| p.index == 0) || a.points.iter().all(|p| p.index == 1));
    let stable = a.points[0].index == 0;
    a.folds.clear();
    a.shapes.clear();
    let segs = segments(&a, false);
    assert_eq!(segs.len(), 1);
    let (s, u, m) = svg_paths(&render_svg(&[&a], &SvgStyle::default()));
    assert_eq!((s, u, m), if stable { (1, 0, 0) } else { (0, 1, 0) });
}

#[test]
fn wrapped_svg_stays_in_one_period() {
    let a = &rotate_arm().artifacts[0];
    for seg in segments(a, true) {
        for (x, _) in seg.points {
            assert!((0.0..2.0 * PI + 1e-12).contains(&x));
        }
    }
    svg_paths(&render_svg(
        &[a],
        &SvgStyle {
            wrap: true,
            ..SvgStyle::default()
        },
    ));
}

#[test]
fn each_stable_fold_of_the_arm_rotation_has_one_target() {
    let run = rotate_arm();
    let refs: Vec<_> = run.branches.iter().collect();
    let pairs = snap_pairs(&refs);
    assert!(!pairs.is_empty());
    for p in &pairs {
        assert_eq!(p.targets.len(), 1, "fold at {}: {:?}", p.xi_star, p.targets);
    }
}

#[test]
fn fold_free_stable_branch_has_no_snap_pairs() {
    let text = r#"{"scenario": "vary-load", "epsilon": 0.0, "range": [0.1, 2.0]}"#;
    let run = run_scenario(&ScenarioConfig::from_json(text).unwrap()).unwrap();
    assert!(run.branches[0].points.iter().all(|p| p.index == 0));
    assert!(snap_pairs(&[&run.branches[0]]).is_empty());
}

#[test]
fn echoed_config_reproduces_the_folds() {
    let run = rotate_arm();
    let dir = tempfile::tempdir().unwrap();
    let written = write_outputs(run, dir.path()).unwrap();
    let manifest = written
        .iter()
        .find(|p| p.to_string_lossy().ends_with("_1.json"))
        .unwrap();
    let a = read_manifest(manifest).unwrap();
    assert_eq!(a.points, run.artifacts[0].points);
    let again = run_scenario(&a.metadata.config).unwrap();
    let (f0, f1) = (&run.artifacts[0].folds, &again.artifacts[0].folds);
    assert_eq!(f0.len(), f1.len());
    for (x, y) in f0.iter().zip(f1) {
        assert!((x.xi_star - y.xi_star).abs() < 1e-6);
    }
}

#[test]
fn clamp_rotation_ordinate_is_the_clamp_slope() {
    let text = format!(
        r#"{{"scenario": "rotate-clamp", "P": {}, "epsilon": 0.25, "psi": 0.0, "start": 0.0, "range": [-3.0, 3.0]}}"#,
        PI * PI / 4.0
    );
    let run = run_scenario(&ScenarioConfig::from_json(&text).unwrap()).unwrap();
    let mut buf = Vec::new();
    write_csv(&run.artifacts[0], &mut buf).unwrap();
    for r in parse_csv(buf.as_slice()).unwrap() {
        assert_eq!(r.ordinate, r.theta_prime_0);
    }
}

proptest! {
    #[test]
    fn seventeen_digit_text_recovers_the_float(bits in any::<u64>()) {
        let v = f64::from_bits(bits);
        prop_assume!(v.is_finite());
        prop_assert_eq!(fmt17(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}
