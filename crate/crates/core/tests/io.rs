use std::fs;
use std::path::Path;
use std::process::Command;

use chsh::config::parse_config_str;
use chsh::output::{read_snapshot_psi, write_snapshot, write_timeseries, TIMESERIES_FILE};
use chsh::run::{run, RunOptions};
use chsh::{build_mesh, ExperimentConfig, OutputFormat, Preset, State};
use vtkio::model::{Attribute, DataSet, Piece, VertexNumbers};

fn constant_state(n_nodes: usize, phi: f64, psi: f64) -> State {
    let mut s = State::new(vec![phi; n_nodes], vec![psi; n_nodes], vec![0.25; n_nodes]);
    s.w = (0..n_nodes).map(|j| j as f64 * 0.5).collect();
    s.step = 7;
    s
}

fn pgm_pixels(path: &Path) -> (usize, usize, Vec<u8>) {
    let bytes = fs::read(path).unwrap();
    let header_end = bytes
        .iter()
        .enumerate()
        .filter(|(_, &b)| b == b'\n')
        .nth(2)
        .unwrap()
        .0;
    let header = std::str::from_utf8(&bytes[..header_end]).unwrap();
    let mut tokens = header.split_whitespace();
    assert_eq!(tokens.next(), Some("P5"));
    let w: usize = tokens.next().unwrap().parse().unwrap();
    let h: usize = tokens.next().unwrap().parse().unwrap();
    assert_eq!(tokens.next(), Some("255"));
    (w, h, bytes[header_end + 1..].to_vec())
}

#[test]
fn pgm_endpoints_and_midpoint() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = build_mesh(4).unwrap();
    let formats = [OutputFormat::Pgm];

    write_snapshot(&constant_state(mesh.n_nodes(), 1.0, 0.0), &mesh, &formats, dir.path()).unwrap();
    let (w, h, px) = pgm_pixels(&dir.path().join("phi_00000007.pgm"));
    assert_eq!((w, h), (5, 5));
    assert!(px.iter().all(|&p| p == 255));
    let (_, _, px) = pgm_pixels(&dir.path().join("psi_00000007.pgm"));
    assert!(px.iter().all(|&p| p == 0));

    write_snapshot(&constant_state(mesh.n_nodes(), 0.0, 0.5), &mesh, &formats, dir.path()).unwrap();
    let (_, _, px) = pgm_pixels(&dir.path().join("phi_00000007.pgm"));
    assert!(px.iter().all(|&p| p == 128));
    let (_, _, px) = pgm_pixels(&dir.path().join("psi_00000007.pgm"));
    assert!(px.iter().all(|&p| p == 128));
}

#[test]
fn pgm_top_row_is_top_of_domain() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = build_mesh(3).unwrap();
    let mut s = constant_state(mesh.n_nodes(), -1.0, 0.0);
    for (j, p) in mesh.nodes.iter().enumerate() {
        if p[1] > 0.49 {
            s.phi[j] = 1.0;
        }
    }
    write_snapshot(&s, &mesh, &[OutputFormat::Pgm], dir.path()).unwrap();
    let (w, _, px) = pgm_pixels(&dir.path().join("phi_00000007.pgm"));
    assert!(px[..w].iter().all(|&p| p == 255));
    assert!(px[w..].iter().all(|&p| p == 0));
}

#[test]
fn vtk_reads_back_with_vtkio() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = build_mesh(5).unwrap();
    let mut state = constant_state(mesh.n_nodes(), 0.1, 0.3);
    state.psi = (0..mesh.n_nodes()).map(|j| 0.3 + 1e-3 * j as f64 / 7.0).collect();
    write_snapshot(&state, &mesh, &[OutputFormat::Vtk], dir.path()).unwrap();
    let path = dir.path().join("state_00000007.vtk");

    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
    assert!(text.contains("\nDATASET UNSTRUCTURED_GRID\n"));

    let vtk = vtkio::Vtk::import(&path).unwrap();
    let DataSet::UnstructuredGrid { pieces, .. } = vtk.data else {
        panic!("not an unstructured grid");
    };
    let Piece::Inline(piece) = pieces.into_iter().next().unwrap() else {
        panic!("expected inline piece");
    };
    let points: Vec<f64> = piece.points.cast_into().unwrap();
    assert_eq!(points.len(), 3 * mesh.n_nodes());
    for (j, p) in mesh.nodes.iter().enumerate() {
        assert_eq!(points[3 * j], p[0]);
        assert_eq!(points[3 * j + 1], p[1]);
    }
    match &piece.cells.cell_verts {
        VertexNumbers::Legacy { num_cells, vertices } => {
            assert_eq!(*num_cells as usize, mesh.n_elements());
            assert_eq!(&vertices[..4], &[3, mesh.elements[0][0] as u32, mesh.elements[0][1] as u32, mesh.elements[0][2] as u32]);
        }
        other => panic!("unexpected cell layout {other:?}"),
    }
    let mut names = Vec::new();
    for attr in piece.data.point {
        let Attribute::DataArray(arr) = attr else {
            panic!("expected data arrays");
        };
        let values: Vec<f64> = arr.data.cast_into().unwrap();
        let want = match arr.name.as_str() {
            "phi" => &state.phi,
            "psi" => &state.psi,
            "mu" => &state.w,
            "q" => &state.q,
            other => panic!("unexpected field {other}"),
        };
        assert_eq!(&values, want, "{}", arr.name);
        names.push(arr.name);
    }
    assert_eq!(names, ["phi", "psi", "mu", "q"]);

    let (psi, side) = read_snapshot_psi(&path).unwrap();
    assert_eq!((psi, side), (state.psi.clone(), 6));
}

#[test]
fn csv_snapshot_round_trips_psi() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = build_mesh(4).unwrap();
    let mut state = constant_state(mesh.n_nodes(), 0.0, 0.0);
    state.psi = (0..mesh.n_nodes()).map(|j| (j as f64).sin().abs() * 0.3).collect();
    write_snapshot(&state, &mesh, &[OutputFormat::Csv], dir.path()).unwrap();
    let path = dir.path().join("state_00000007.csv");
    let text = fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "node,x,y,phi,psi,mu,z,q");
    assert_eq!(text.lines().count(), mesh.n_nodes() + 1);
    assert_eq!(read_snapshot_psi(&path).unwrap(), (state.psi, 5));
}

#[test]
fn snapshot_io_errors_carry_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("not_a_dir");
    fs::write(&blocker, "x").unwrap();
    let mesh = build_mesh(2).unwrap();
    let err = write_snapshot(&constant_state(9, 0.0, 0.0), &mesh, &[OutputFormat::Csv], &blocker).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("not_a_dir"), "{err}");
    assert!(matches!(read_snapshot_psi(&dir.path().join("missing.csv")), Err(chsh::Error::MissingFile(_))));
}

fn small_config(dir: &Path, steps: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Preset::Chsh);
    cfg.mesh_n = 8;
    cfg.n_steps = steps;
    cfg.seed = 5;
    cfg.snapshot_steps = vec![0, steps];
    cfg.formats = vec![OutputFormat::Vtk, OutputFormat::Pgm, OutputFormat::Csv];
    cfg.out_dir = dir.to_path_buf();
    cfg
}

#[test]
fn one_step_run_writes_header_and_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run(&small_config(dir.path(), 1), &RunOptions::default()).unwrap();
    assert_eq!(summary.steps, 1);
    let ts = fs::read_to_string(dir.path().join(TIMESERIES_FILE)).unwrap();
    assert_eq!(ts.lines().count(), 2);
    assert_eq!(ts.lines().next().unwrap(), chsh::diagnostics::TimeSeriesRow::HEADER);
    for f in ["state_00000000.vtk", "phi_00000001.pgm", "psi_00000000.pgm", "state_00000001.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert!(write_timeseries(&[], dir.path()).is_err());
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn runs_are_bitwise_reproducible_across_thread_counts() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run(&small_config(a.path(), 12), &RunOptions { threads: 1, quiet: true }).unwrap();
    run(&small_config(b.path(), 12), &RunOptions { threads: 3, quiet: true }).unwrap();
    let (fa, fb) = (dir_bytes(a.path()), dir_bytes(b.path()));
    assert_eq!(fa.len(), 9);
    assert_eq!(fa, fb);
}

#[test]
fn timeseries_is_reproduced_from_snapshots() {
    // diagnostics recomputed from the saved CSV snapshot match the logged row
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), 4);
    let summary = run(&cfg, &RunOptions::default()).unwrap();
    let text = fs::read_to_string(dir.path().join("state_00000004.csv")).unwrap();
    let mut phi = Vec::new();
    let mut psi = Vec::new();
    let mut q = Vec::new();
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').skip(3).map(|v| v.parse().unwrap()).collect();
        phi.push(cols[0]);
        psi.push(cols[1]);
        q.push(cols[4]);
    }
    let mesh = build_mesh(cfg.mesh_n).unwrap();
    let ops = chsh::Operators::assemble(&mesh).unwrap();
    let mut state = State::new(phi, psi, q);
    state.step = 4;
    state.time = summary.final_state.time;
    let energy = chsh::model::energy_terms(&state, &ops.mass, &ops.stiffness, &cfg.params()).unwrap();
    let last = summary.rows.last().unwrap();
    let row = chsh::diagnostics::TimeSeriesRow::new(&state, &energy, last.dissipation, last.gs_sweeps, &ops.mass);
    let logged = fs::read_to_string(dir.path().join(TIMESERIES_FILE)).unwrap();
    assert_eq!(logged.lines().last().unwrap(), row.to_csv());
}

#[test]
fn steady_stop_ends_run_early() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config_str(&format!(
        "preset = custom\nalpha = 0\nlambda = 0\nmesh_n = 4\nn_steps = 50\nsteady_tol = 1e-3\nout_dir = {}\n",
        dir.path().display()
    ))
    .unwrap();
    let summary = run(&cfg, &RunOptions::default()).unwrap();
    assert!(summary.stopped_steady);
    assert!(summary.steps < 50);
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_chsh"))
        .args(args)
        .env("CHSH_THREADS", "2")
        .output()
        .unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn cli_simulate_check_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "preset = SH\nmesh_n = 16\nn_steps = 3\nformats = csv, vtk\n").unwrap();
    let out = dir.path().join("out");
    let cfg_s = cfg.to_str().unwrap();

    let (code, stdout, _) = cli(&["check", "--config", cfg_s]);
    assert_eq!(code, 0);
    assert!(stdout.contains("spd margin"), "{stdout}");

    let (code, _, stderr) = cli(&["simulate", "--config", cfg_s, "--out-dir", out.to_str().unwrap(), "--seed", "9", "--quiet"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stderr.is_empty(), "{stderr}");
    let snap = out.join("state_00000003.csv");
    assert!(snap.is_file());

    for snapshot in [snap, out.join("state_00000003.vtk")] {
        let (code, stdout, stderr) = cli(&["spectrum", "--snapshot", snapshot.to_str().unwrap()]);
        assert_eq!(code, 0, "{stderr}");
        let k: f64 = stdout.trim().parse().unwrap();
        assert!(k > 0.0);
    }
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        p.to_str().unwrap().to_string()
    };

    // configuration errors
    assert_eq!(cli(&["check", "--config", &write("a.cfg", "alpha = -5\n")]).0, 1);
    assert_eq!(cli(&["check", "--config", &write("b.cfg", "bogus = 1\n")]).0, 1);
    assert_eq!(cli(&["simulate", "--config", "/nonexistent/x.cfg"]).0, 1);
    assert_eq!(cli(&["simulate"]).0, 1);
    assert_eq!(cli(&["frobnicate"]).0, 1);
    assert_eq!(cli(&["--help"]).0, 0);

    // solver failures
    let (code, _, stderr) = cli(&["check", "--config", &write("c.cfg", "preset = CHSH\nsigma = 50\ntau = 1\nmesh_n = 32\n")]);
    assert_eq!(code, 2, "{stderr}");
    let (code, _, stderr) = cli(&[
        "simulate",
        "--quiet",
        "--config",
        &write("d.cfg", &format!("preset = CH\nmesh_n = 16\nn_steps = 2\nmax_sweeps = 1\nout_dir = {}\n", dir.path().join("o").display())),
    ]);
    assert_eq!(code, 2, "{stderr}");

    // I/O failure: out_dir is a file
    let blocker = write("blocker", "x");
    let (code, _, stderr) = cli(&[
        "simulate",
        "--quiet",
        "--config",
        &write("e.cfg", "preset = CH\nmesh_n = 4\nn_steps = 1\n"),
        "--out-dir",
        &blocker,
    ]);
    assert_eq!(code, 3, "{stderr}");
    let (code, _, _) = cli(&["spectrum", "--snapshot", &write("f.txt", "nope")]);
    assert_eq!(code, 1);
}
