use std::collections::HashMap;
use std::path::Path;

use overland::config::{basin_bottom, scenario_preset};
use overland::io::{field_vtk, run_config, write_field_vtk, HydrographSeries, LEDGER_HEADER};
use overland::mesh::{generate_rect_mesh, load_mesh};
use overland::FlowField;

/// Minimal legacy-VTK reader: returns cell connectivity and every CELL_DATA
/// scalar array by name.
struct VtkFile {
    cells: Vec<[usize; 3]>,
    cells_header: (usize, usize),
    cell_types: Vec<u32>,
    scalars: HashMap<String, Vec<f64>>,
}

fn read_vtk(text: &str) -> VtkFile {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# vtk DataFile Version 3.0"));
    lines.next();
    assert_eq!(lines.next(), Some("ASCII"));
    assert_eq!(lines.next(), Some("DATASET UNSTRUCTURED_GRID"));
    let tokens: Vec<&str> = lines.flat_map(str::split_whitespace).collect();
    let mut i = 0;
    let mut out = VtkFile { cells: vec![], cells_header: (0, 0), cell_types: vec![], scalars: HashMap::new() };
    while i < tokens.len() {
        match tokens[i] {
            "POINTS" => {
                let n: usize = tokens[i + 1].parse().unwrap();
                i += 3 + 3 * n;
            }
            "CELLS" => {
                let n: usize = tokens[i + 1].parse().unwrap();
                let size: usize = tokens[i + 2].parse().unwrap();
                out.cells_header = (n, size);
                i += 3;
                for _ in 0..n {
                    assert_eq!(tokens[i], "3");
                    out.cells.push([1, 2, 3].map(|k| tokens[i + k].parse().unwrap()));
                    i += 4;
                }
            }
            "CELL_TYPES" => {
                let n: usize = tokens[i + 1].parse().unwrap();
                out.cell_types = tokens[i + 2..i + 2 + n].iter().map(|t| t.parse().unwrap()).collect();
                i += 2 + n;
            }
            "CELL_DATA" => i += 2,
            "SCALARS" => {
                let name = tokens[i + 1].to_string();
                assert_eq!(tokens[i + 4..i + 6], ["LOOKUP_TABLE", "default"]);
                i += 6;
                let n = out.cells.len();
                let values = tokens[i..i + n].iter().map(|t| t.parse().unwrap()).collect();
                out.scalars.insert(name, values);
                i += n;
            }
            other => panic!("unexpected token {other}"),
        }
    }
    out
}

#[test]
fn two_cell_layout() {
    let mesh = generate_rect_mesh(2.0, 1.0, 1, 1, |_, _| 0.0).unwrap();
    let field = FlowField::uniform_depth(&mesh, 0.5);
    let text = field_vtk(&mesh, &field, &[0.0, 0.0], 1e-6);
    assert!(text.contains("\nCELLS 2 8\n"));
    let vtk = read_vtk(&text);
    assert_eq!(vtk.cells_header, (2, 8));
    assert_eq!(vtk.cell_types, vec![5, 5]);
    assert_eq!(vtk.cells[0], mesh.cells[0].vertices);
    let names: Vec<&str> = ["w", "h", "p", "q", "u", "v", "B", "Ic"].to_vec();
    for name in names {
        assert!(vtk.scalars.contains_key(name), "{name}");
    }
}

#[test]
fn lake_snapshot_round_trip() {
    let mesh = generate_rect_mesh(10.0, 8.0, 12, 10, basin_bottom).unwrap();
    let mut field = FlowField::still_water(&mesh, 1.05);
    // give a few cells motion so u, v are non-trivial
    for j in (0..field.len()).step_by(7) {
        field.p[j] = 1e-3 * j as f64;
        field.q[j] = -3.3e-4;
    }
    let ic: Vec<f64> = (0..field.len()).map(|j| 1e-4 * (j % 13) as f64).collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snap.vtk");
    write_field_vtk(&mesh, &field, &ic, 1e-6, &path).unwrap();
    let vtk = read_vtk(&std::fs::read_to_string(&path).unwrap());

    assert_eq!(vtk.scalars["w"], field.w);
    assert_eq!(vtk.scalars["p"], field.p);
    assert_eq!(vtk.scalars["q"], field.q);
    assert_eq!(vtk.scalars["Ic"], ic);
    for (j, cell) in mesh.cells.iter().enumerate() {
        let h = vtk.scalars["h"][j];
        assert_eq!(vtk.scalars["B"][j], cell.b_center);
        assert_eq!(h, (1.05f64).max(cell.b_center) - cell.b_center);
        let u = if h < 1e-6 { 0.0 } else { field.p[j] / h };
        assert_eq!(vtk.scalars["u"][j], u);
    }
}

#[test]
fn unwritable_path_reports_it() {
    let mesh = generate_rect_mesh(1.0, 1.0, 1, 1, |_, _| 0.0).unwrap();
    let field = FlowField::uniform_depth(&mesh, 0.1);
    let err = write_field_vtk(&mesh, &field, &[0.0; 2], 1e-6, Path::new("/nonexistent/dir/x.vtk")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/x.vtk"), "{err}");
}

#[test]
fn run_writes_csv_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let o = |k: &str, v: &str| (k.to_string(), v.to_string());
    let cfg = scenario_preset("complex_basin")
        .unwrap()
        .with_overrides(&[o("nx", "10"), o("ny", "8"), o("t_end", "20"), o("output_every", "5"), o("vtk_every", "10"), o("outdir", "out")])
        .unwrap();
    let record = run_config(&cfg, dir.path(), true).unwrap();
    let out = dir.path().join("out");

    let hydro_text = std::fs::read_to_string(out.join("hydrograph.csv")).unwrap();
    let hydro = HydrographSeries::from_csv(&hydro_text, "hydrograph.csv").unwrap();
    assert_eq!(hydro.times(), &[0.0, 5.0, 10.0, 15.0, 20.0]);
    assert!(hydro_text.lines().skip(1).all(|l| l.split(',').all(|f| f.len() == "1.0000000000e+00".len() || f.starts_with('-'))));

    let ledger = std::fs::read_to_string(out.join("ledger.csv")).unwrap();
    let mut rows = ledger.lines();
    assert_eq!(rows.next(), Some(LEDGER_HEADER));
    let last: Vec<f64> = rows.last().unwrap().split(',').map(|f| f.parse().unwrap()).collect();
    assert_eq!(last[0], 20.0);
    assert!((last[3] - 500.0 / 3.6e6 * 20.0 * 80.0).abs() < 1e-9);
    assert!(last[6].abs() < 1e-9 * last[3]);

    assert_eq!(record.snapshots.len(), 3);
    for (k, p) in record.snapshots.iter().enumerate() {
        assert_eq!(p, &out.join(format!("field_{k:04}.vtk")));
        assert_eq!(read_vtk(&std::fs::read_to_string(p).unwrap()).cells.len(), 160);
    }
}

#[test]
fn saved_mesh_reloads_bitwise() {
    let mesh = generate_rect_mesh(2.0, 1.0, 4, 2, |x, y| 0.1 * x - 0.05 * y).unwrap();
    let again = load_mesh(&mesh.to_node_text(), &mesh.to_ele_text(), None).unwrap();
    assert_eq!(again.cells, mesh.cells);
    assert_eq!(again.edges.len(), mesh.edges.len());
}
