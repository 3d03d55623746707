//! External interfaces: the CLI binary, config files, and the plain-text
//! chain / complex / cycle formats.

use std::path::PathBuf;
use std::process::Command;

use catfill::chain::SimplicialChain;
use catfill::cone::ConeReport;
use catfill::lp::{cycle_from_text, cycle_to_text, grid_on_flat, CellComplex};
use catfill::space::ProductSpace;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_catfill"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("catfill_iface_{tag}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn cli_exponent_writes_artifacts_and_is_deterministic() {
    let dir = temp_dir("exponent");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        format!(
            "# Euclidean regime fixture\nspace = H2xH2\nexperiment = flat_round_spheres\nk = 1\nschedule = 2,4,8\nfiller = flat_ball\nmesh = 0.05\nout = {}\nseed = 7\n",
            dir.display()
        ),
    )
    .unwrap();
    let out = bin()
        .args(["exponent", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.contains("expected 2, measured") && stdout.contains("verdict matches_euclidean"),
        "{stdout}"
    );
    let csv = std::fs::read_to_string(dir.join("flat_round_spheres.csv")).unwrap();
    assert!(csv.starts_with("size,cycle_volume,fill_volume\n"));
    assert_eq!(csv.lines().count(), 4);
    let svg = std::fs::read_to_string(dir.join("flat_round_spheres.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

    let out2 = bin()
        .args(["exponent", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out2.status.code(), Some(0));
    let csv2 = std::fs::read_to_string(dir.join("flat_round_spheres.csv")).unwrap();
    assert_eq!(csv, csv2, "CSV output must be byte-identical across runs");
}

#[test]
fn cli_mismatch_exits_two() {
    // small horosphere circles in the open space fill flat (exponent near
    // 2) while rank one expects linear: an honest mismatch
    let dir = temp_dir("mismatch");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        format!(
            "space = H3\nexperiment = horosphere_spheres_neutered\nk = 1\nschedule = 0.9,1.2,1.5\nfiller = lp\nmesh = 0.45\nlevel = 0\nout = {}\n",
            dir.display()
        ),
    )
    .unwrap();
    let out = bin()
        .args(["exponent", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(2), "{stdout}");
    assert!(stdout.contains("verdict mismatch"), "{stdout}");
}

#[test]
fn cli_short_schedule_exits_one() {
    let dir = temp_dir("short");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        "space = H2xH2\nexperiment = flat_round_spheres\nk = 1\nschedule = 2,4\n",
    )
    .unwrap();
    let out = bin()
        .args(["exponent", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("schedule too short"), "{stderr}");
}

#[test]
fn cli_cone_report_csv() {
    let dir = temp_dir("cone");
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        format!("space = H2\nk = 1\nradius = 2\nmesh = 0.2\nout = {}\n", dir.display()),
    )
    .unwrap();
    let out = bin()
        .args(["cone", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv = std::fs::read_to_string(dir.join("cone.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), ConeReport::csv_header());
    let row = lines.next().unwrap();
    assert!(row.starts_with("2,"), "{row}");
    assert_eq!(row.split(',').count(), 6);
}

#[test]
fn cli_lpfill_solves_files() {
    let dir = temp_dir("lpfill");
    let grid = grid_on_flat(2, &[0.0, 0.0], &[4.0, 4.0], &[4, 4]).unwrap();
    let ids = grid.select(2, 0b11, |b| b.iter().all(|&c| c > 1.0 && c < 3.0));
    let z = grid.boundary_cycle(2, &ids);
    std::fs::write(dir.join("complex.txt"), grid.complex.to_text()).unwrap();
    std::fs::write(dir.join("cycle.txt"), cycle_to_text(1, &z)).unwrap();
    let config = dir.join("run.cfg");
    std::fs::write(
        &config,
        format!(
            "complex = {}\ncycle = {}\nout = {}\n",
            dir.join("complex.txt").display(),
            dir.join("cycle.txt").display(),
            dir.display()
        ),
    )
    .unwrap();
    let out = bin()
        .args(["lpfill", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("value 4.0"), "{stdout}");
    assert!(dir.join("fill.txt").exists());

    // rational mode prints an exact value
    let config2 = dir.join("run2.cfg");
    std::fs::write(
        &config2,
        format!(
            "complex = {}\ncycle = {}\nout = {}\nrational = true\n",
            dir.join("complex.txt").display(),
            dir.join("cycle.txt").display(),
            dir.display()
        ),
    )
    .unwrap();
    let out = bin()
        .args(["lpfill", "--config"])
        .arg(&config2)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("value 4 "), "{stdout}");
}

#[test]
fn cli_jacobi_table() {
    let dir = temp_dir("jacobi");
    let config = dir.join("run.cfg");
    std::fs::write(&config, "root_system = G2\n").unwrap();
    let out = bin()
        .args(["jacobi", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("root system G2, rank 2"), "{stdout}");
    assert!(stdout.contains("rho_star = 0.267261"), "{stdout}");
    assert!(stdout.matches('\n').count() >= 10, "{stdout}");
}

#[test]
fn cli_rejects_unknown_space_token() {
    let dir = temp_dir("badspace");
    let config = dir.join("run.cfg");
    std::fs::write(&config, "space = H5xQ\n").unwrap();
    let out = bin()
        .args(["exponent", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("unresolvable space spec") && stderr.contains('Q'), "{stderr}");
}

#[test]
fn chain_text_format_documents_space_and_dimension() {
    let (sp, _) = ProductSpace::parse("H2xE1").unwrap();
    let sphere = catfill::chain::slice_sphere(&sp, 1.0, 1, 0.6).unwrap();
    let text = sphere.to_text("H2xE1");
    assert!(text.starts_with("# space: H2xE1\n# k: 1\n"));
    // one simplex per line: coefficient then two vertex blocks
    let line = text.lines().nth(2).unwrap();
    assert_eq!(line.split('|').count(), 3);
    let (spec, back) = SimplicialChain::from_text(&text).unwrap();
    assert_eq!(spec, "H2xE1");
    let diff = back.add(&sphere.negated()).unwrap().canonicalized();
    assert!(diff.terms().is_empty());
}

#[test]
fn complex_text_round_trips_through_files() {
    let grid = grid_on_flat(2, &[0.0, 0.0], &[2.0, 2.0], &[2, 2]).unwrap();
    let text = grid.complex.to_text();
    assert!(text.contains("cells 0 9"));
    assert!(text.contains("cells 2 4"));
    let back = CellComplex::from_text(&text).unwrap();
    let z = grid.boundary_cycle(2, &[0]);
    let (dim, z2) = cycle_from_text(&cycle_to_text(1, &z), &back).unwrap();
    assert_eq!(dim, 1);
    assert_eq!(z, z2);
}
