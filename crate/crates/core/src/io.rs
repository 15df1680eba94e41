//! File output (legacy VTK snapshots, hydrograph and ledger CSV), hydrograph
//! input, and the driver that runs a configuration while writing results.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::solver::{FlowField, MassLedger, Simulation};

pub const HYDROGRAPH_HEADER: &str = "t_s,Q_m3s";
pub const LEDGER_HEADER: &str = "t_s,surface_m3,infiltrated_m3,rain_in_m3,outflow_m3,clamp_m3,residual_m3";

/// Formats like C's `%.10e`: ten mantissa decimals and an exponent with a
/// sign and at least two digits.
pub fn fmt_e10(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.10e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// Outlet discharge samples `(t [s], Q [m³/s])` with strictly increasing `t`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HydrographSeries {
    t: Vec<f64>,
    q: Vec<f64>,
}

impl HydrographSeries {
    pub fn new(t: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if t.len() != q.len() {
            return Err(Error::Numerical(format!("hydrograph has {} times but {} values", t.len(), q.len())));
        }
        let mut s = Self::default();
        for (t, q) in t.into_iter().zip(q) {
            s.push(t, q)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, t: f64, q: f64) -> Result<()> {
        if !(t.is_finite() && q.is_finite()) {
            return Err(Error::Numerical(format!("non-finite hydrograph sample ({t}, {q})")));
        }
        if self.t.last().is_some_and(|&last| t <= last) {
            return Err(Error::Numerical(format!("hydrograph time {t} does not increase")));
        }
        self.t.push(t);
        self.q.push(q);
        Ok(())
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.q.iter().copied())
    }

    /// Linear interpolation at `t`; `None` outside the sampled range.
    pub fn interpolate(&self, t: f64) -> Option<f64> {
        let (first, last) = (*self.t.first()?, *self.t.last()?);
        if !(t >= first && t <= last) {
            return None;
        }
        let k = self.t.partition_point(|&s| s <= t);
        if k == 0 || self.t[k - 1] == t {
            return Some(self.q[k.saturating_sub(1)]);
        }
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let (q0, q1) = (self.q[k - 1], self.q[k]);
        Some(q0 + (q1 - q0) * (t - t0) / (t1 - t0))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{HYDROGRAPH_HEADER}\n");
        for (t, q) in self.iter() {
            let _ = writeln!(out, "{},{}", fmt_e10(t), fmt_e10(q));
        }
        out
    }

    /// Reads two comma-separated columns `t, Q`. A non-numeric first line is
    /// taken as a header; `#` starts a comment.
    pub fn from_csv(text: &str, name: &str) -> Result<Self> {
        let mut series = Self::default();
        let mut first = true;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let cols: Vec<&str> = content.split(',').map(str::trim).collect();
            let parsed: Vec<Option<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
            if std::mem::take(&mut first) && parsed.iter().any(Option::is_none) {
                continue;
            }
            let [Some(t), Some(q)] = parsed[..] else {
                return Err(Error::parse(name, line, format!("expected two numbers `t,Q`, got '{content}'")));
            };
            series.push(t, q).map_err(|e| Error::parse(name, line, e.to_string()))?;
        }
        Ok(series)
    }
}

pub fn ledger_csv_row(t: f64, l: &MassLedger) -> String {
    [t, l.surface_volume, l.infiltrated_volume, l.rain_in, l.outflow_out, l.clamp_correction, l.residual()]
        .map(fmt_e10)
        .join(",")
}

/// Legacy ASCII VTK unstructured grid with per-cell `w h p q u v B Ic`.
pub fn field_vtk(mesh: &Mesh, field: &FlowField, infiltrated: &[f64], h_eps: f64) -> String {
    let n = mesh.num_cells();
    assert!(field.len() == n && infiltrated.len() == n, "field arrays do not match the mesh");
    let mut out = String::with_capacity(64 * n * 10);
    let _ = write!(
        out,
        "# vtk DataFile Version 3.0\nsurface flow t = {:e}\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS {} double\n",
        field.t,
        mesh.vertices.len()
    );
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:e} {:e} 0", v.x, v.y);
    }
    let _ = writeln!(out, "CELLS {n} {}", 4 * n);
    for c in &mesh.cells {
        let _ = writeln!(out, "3 {} {} {}", c.vertices[0], c.vertices[1], c.vertices[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {n}");
    for _ in 0..n {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "CELL_DATA {n}");
    let velocity: Vec<[f64; 2]> = (0..n).map(|j| field.velocity(mesh, j, h_eps)).collect();
    let b: Vec<f64> = mesh.cells.iter().map(|c| c.b_center).collect();
    let scalars: [(&str, Vec<f64>); 8] = [
        ("w", field.w.clone()),
        ("h", field.depths(mesh)),
        ("p", field.p.clone()),
        ("q", field.q.clone()),
        ("u", velocity.iter().map(|v| v[0]).collect()),
        ("v", velocity.iter().map(|v| v[1]).collect()),
        ("B", b),
        ("Ic", infiltrated.to_vec()),
    ];
    for (name, values) in scalars {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for x in values {
            let _ = writeln!(out, "{x:e}");
        }
    }
    out
}

pub fn write_field_vtk(mesh: &Mesh, field: &FlowField, infiltrated: &[f64], h_eps: f64, path: &Path) -> Result<()> {
    write_text(path, &field_vtk(mesh, field, infiltrated, h_eps))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Everything recorded while running a configuration.
#[derive(Debug, Clone, Default)]
pub struct RunRecord {
    /// Outlet discharge at each output time, if the mesh has outflow edges.
    pub hydrograph: Option<HydrographSeries>,
    pub ledger: Vec<(f64, MassLedger)>,
    pub snapshots: Vec<PathBuf>,
    pub steps: u64,
}

/// Runs `cfg` to `t_end`, sampling the hydrograph and ledger every
/// `output_every` (and at the start and end). With `write` set, CSV files and
/// VTK snapshots go to `cfg.outdir`, relative to `base_dir`.
pub fn run_config(cfg: &RunConfig, base_dir: &Path, write: bool) -> Result<RunRecord> {
    let mut sim = cfg.build_simulation(base_dir)?;
    let outdir = base_dir.join(&cfg.outdir);
    if write {
        fs::create_dir_all(&outdir).map_err(|e| Error::io(&outdir, e))?;
    }
    let mut record = RunRecord {
        hydrograph: sim.has_outflow().then(HydrographSeries::default),
        ..RunRecord::default()
    };
    let vtk_dir = write.then_some(outdir.as_path());
    drive(&mut sim, cfg.t_end, cfg.output_every, if write { cfg.vtk_every } else { None }, |sim, sample, snapshot| {
        if sample {
            let t = sim.time();
            if let Some(h) = record.hydrograph.as_mut() {
                h.push(t, sim.outlet_discharge()?)?;
            }
            record.ledger.push((t, sim.ledger()));
        }
        if let (true, Some(dir)) = (snapshot, vtk_dir) {
            let path = dir.join(format!("field_{:04}.vtk", record.snapshots.len()));
            write_field_vtk(sim.mesh(), &sim.field, &sim.infiltrated, sim.params.h_eps, &path)?;
            record.snapshots.push(path);
        }
        Ok(())
    })?;
    record.steps = sim.steps;
    if write {
        if let Some(h) = &record.hydrograph {
            write_text(&outdir.join("hydrograph.csv"), &h.to_csv())?;
        }
        let mut ledger = format!("{LEDGER_HEADER}\n");
        for (t, l) in &record.ledger {
            ledger.push_str(&ledger_csv_row(*t, l));
            ledger.push('\n');
        }
        write_text(&outdir.join("ledger.csv"), &ledger)?;
    }
    let last = record.ledger.last().map(|(_, l)| *l).unwrap_or_default();
    info!("finished after {} steps, mass residual {:e} m³", record.steps, last.residual());
    Ok(record)
}

/// Advances to `t_end`, landing exactly on every multiple of `sample_every`
/// and `snapshot_every`. `observer(sim, sample, snapshot)` is called at
/// `t = 0`, at each of those times and at `t_end` (as a sample).
pub fn drive<F>(sim: &mut Simulation, t_end: f64, sample_every: Option<f64>, snapshot_every: Option<f64>, mut observer: F) -> Result<()>
where
    F: FnMut(&Simulation, bool, bool) -> Result<()>,
{
    let start = sim.time();
    let next_after = |every: Option<f64>, t: f64| {
        every.map_or(f64::INFINITY, |e| {
            let k = ((t - start) / e).floor() + 1.0;
            let next = start + k * e;
            // guard against the floor landing on t itself
            if next <= t { start + (k + 1.0) * e } else { next }
        })
    };
    observer(sim, true, snapshot_every.is_some())?;
    while sim.time() < t_end {
        let t = sim.time();
        let (s, v) = (next_after(sample_every, t), next_after(snapshot_every, t));
        let target = s.min(v).min(t_end);
        while sim.time() < target {
            sim.step_towards(target)?;
        }
        let at = |x: f64| (x - target).abs() <= 1e-9 * target.abs().max(1.0);
        observer(sim, at(s) || target == t_end, at(v))?;
    }
    Ok(())
}
