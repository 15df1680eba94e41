//! Run configuration: a flat `key = value` text format, built-in scenarios,
//! and construction of a ready-to-run [`Simulation`].
//!
//! Values may carry a unit suffix that is converted to SI at parse time:
//! lengths accept `m`, `cm`, `mm`; rates accept `m/s`, `mm/h`, `cm/h`;
//! times accept `s`, `min`, `h`. A bare number is taken as SI. Blank lines
//! and text after `#` are ignored.
//!
//! ```text
//! domain = 2 1
//! nx = 56
//! ny = 28
//! init_depth = 10cm
//! soil = sandy_loam
//! t_end = 2h
//! output_every = 60
//! ```

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::infiltration::{SoilLayer, SoilModel, CM_PER_HOUR, MM_PER_HOUR};
use crate::mesh::{apply_boundary_tags, generate_rect_mesh, load_mesh, BoundaryTag, Mesh, Side};
use crate::solver::{FlowField, RainInterval, RainSchedule, Simulation, SolverParams};
use crate::sources::FrictionParams;

pub const PRESETS: [&str; 5] = [
    "slope_runoff",
    "conservation_one_layer",
    "conservation_two_layer",
    "complex_basin",
    "lake_at_rest",
];

/// Length of the laboratory plane of the slope scenario [m].
pub const SLOPE_LENGTH: f64 = 21.945;
/// Bed slope of the laboratory plane.
pub const SLOPE_GRADIENT: f64 = 0.04;

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    /// Structured triangulation of `[0, lx] × [0, ly]`.
    Rect { lx: f64, ly: f64, nx: usize, ny: usize },
    /// Node and element tables, optionally with a boundary tag table.
    Files { nodes: PathBuf, elements: PathBuf, tags: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bottom {
    Flat,
    /// `b0 + sx x + sy y`.
    Plane { b0: f64, sx: f64, sy: f64 },
    /// Plane falling with gradient `s` toward `x = lx` where it reaches 0.
    Slope { s: f64 },
    /// Undulating basin of the complex-topography scenario.
    Basin,
    /// Elevations stored in the node table.
    FromMesh,
    /// One elevation per vertex, whitespace separated.
    File(PathBuf),
}

impl Bottom {
    /// Elevation at `(x, y)` for analytic bottoms; `lx` is the domain length.
    pub fn eval(&self, x: f64, y: f64, lx: f64) -> Option<f64> {
        match *self {
            Bottom::Flat => Some(0.0),
            Bottom::Plane { b0, sx, sy } => Some(b0 + sx * x + sy * y),
            Bottom::Slope { s } => Some(s * (lx - x)),
            Bottom::Basin => Some(basin_bottom(x, y)),
            Bottom::FromMesh | Bottom::File(_) => None,
        }
    }
}

/// Bottom of the complex-basin scenario on `[0, 10] × [0, 8]`; it falls
/// toward `y = 0`.
pub fn basin_bottom(x: f64, y: f64) -> f64 {
    0.01 * y + 0.01 * (x - 0.5).abs() - 0.01 * (PI * x / 2.0).sin() - 0.01 * (PI * y / 2.0).sin() + 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Dry,
    /// Uniform depth above the cell-centre bottom [m].
    Depth(f64),
    /// Flat surface at this elevation, dry above it [m].
    Level(f64),
    /// One depth per cell [m].
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub bottom: Bottom,
    pub init: InitialCondition,
    pub rain: Vec<RainInterval>,
    /// Set by scenarios whose rainfall must come from the user.
    pub rain_required: bool,
    pub soil: Option<SoilModel>,
    pub manning: f64,
    /// Boundary tags applied in order after the mesh is built; untagged
    /// edges are walls.
    pub boundary: Vec<(Side, BoundaryTag)>,
    pub params: SolverParams,
    pub t_end: f64,
    pub output_every: Option<f64>,
    /// Interval between VTK snapshots; `None` disables them.
    pub vtk_every: Option<f64>,
    pub outdir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mesh: MeshSource::Rect { lx: 1.0, ly: 1.0, nx: 1, ny: 1 },
            bottom: Bottom::Flat,
            init: InitialCondition::Dry,
            rain: Vec::new(),
            rain_required: false,
            soil: None,
            manning: 0.0,
            boundary: Vec::new(),
            params: SolverParams::default(),
            t_end: 0.0,
            output_every: None,
            vtk_every: None,
            outdir: PathBuf::from("output"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Unit {
    Length,
    Rate,
    Time,
    None,
}

fn parse_quantity(token: &str, unit: Unit, key: &str, line: usize) -> Result<f64> {
    let split = token
        .char_indices()
        .find(|&(i, c)| c.is_ascii_alphabetic() && !is_exponent(token, i))
        .map_or(token.len(), |(i, _)| i);
    let (num, suffix) = token.split_at(split);
    let value: f64 = num
        .parse()
        .map_err(|_| Error::config_at(line, key, format!("'{token}' is not a number")))?;
    let factor = match (unit, suffix) {
        (_, "") => 1.0,
        (Unit::Length, "m") => 1.0,
        (Unit::Length, "cm") => 0.01,
        (Unit::Length, "mm") => 0.001,
        (Unit::Rate, "m/s") => 1.0,
        (Unit::Rate, "mm/h") => MM_PER_HOUR,
        (Unit::Rate, "cm/h") => CM_PER_HOUR,
        (Unit::Time, "s") => 1.0,
        (Unit::Time, "min") => 60.0,
        (Unit::Time, "h") => 3600.0,
        _ => return Err(Error::config_at(line, key, format!("unit '{suffix}' not accepted here"))),
    };
    if !value.is_finite() {
        return Err(Error::config_at(line, key, format!("'{token}' is not finite")));
    }
    Ok(value * factor)
}

// `e`/`E` between digits is an exponent, not a unit
fn is_exponent(token: &str, i: usize) -> bool {
    let b = token.as_bytes();
    matches!(b[i], b'e' | b'E')
        && i > 0
        && (b[i - 1].is_ascii_digit() || b[i - 1] == b'.')
        && b.get(i + 1).is_some_and(|c| c.is_ascii_digit() || *c == b'-' || *c == b'+')
}

/// Keys that may appear more than once; each occurrence adds an entry.
const LIST_KEYS: [&str; 2] = ["rain", "boundary"];

#[derive(Default)]
struct Pending {
    soil: Option<String>,
    layer1: Option<(SoilLayer, Option<f64>)>,
    layer2: Option<SoilLayer>,
    lx_ly: Option<(f64, f64)>,
    nx: Option<usize>,
    ny: Option<usize>,
    mesh_files: Option<MeshSource>,
    t_end: bool,
}

/// Parses a configuration file. `t_end` is required; everything else has a
/// default.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut pending = Pending::default();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| Error::config_at(line, content, "expected `key = value`"))?;
        let key = key.trim();
        if !LIST_KEYS.contains(&key) && !seen.insert(key.to_string()) {
            return Err(Error::config_at(line, key, "given more than once"));
        }
        apply_key(&mut cfg, &mut pending, key, value.trim(), line)?;
    }
    if !pending.t_end {
        return Err(Error::config("t_end", "missing required key"));
    }
    finish(&mut cfg, pending)?;
    Ok(cfg)
}

fn apply_key(cfg: &mut RunConfig, pending: &mut Pending, key: &str, value: &str, line: usize) -> Result<()> {
    let tokens: Vec<&str> = value.split_whitespace().collect();
    let err = |msg: &str| Error::config_at(line, key, msg.to_string());
    let arity = |n: std::ops::RangeInclusive<usize>| {
        if n.contains(&tokens.len()) {
            Ok(())
        } else {
            Err(Error::config_at(line, key, format!("expected {} value(s), got {}", fmt_range(&n), tokens.len())))
        }
    };
    let nonneg = |v: f64| if v >= 0.0 { Ok(v) } else { Err(err("must be non-negative")) };
    let positive = |v: f64| if v > 0.0 { Ok(v) } else { Err(err("must be positive")) };
    let count = |t: &str| -> Result<usize> {
        t.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| err("expected a positive integer"))
    };

    match key {
        "mesh" => {
            arity(1..=4)?;
            match tokens[0] {
                "rect" => arity(1..=1)?,
                "file" => {
                    arity(3..=4)?;
                    pending.mesh_files = Some(MeshSource::Files {
                        nodes: tokens[1].into(),
                        elements: tokens[2].into(),
                        tags: tokens.get(3).map(PathBuf::from),
                    });
                }
                _ => return Err(err("expected `rect` or `file <nodes> <elements> [tags]`")),
            }
        }
        "domain" => {
            arity(2..=2)?;
            let lx = positive(parse_quantity(tokens[0], Unit::Length, key, line)?)?;
            let ly = positive(parse_quantity(tokens[1], Unit::Length, key, line)?)?;
            pending.lx_ly = Some((lx, ly));
        }
        "nx" => {
            arity(1..=1)?;
            pending.nx = Some(count(tokens[0])?);
        }
        "ny" => {
            arity(1..=1)?;
            pending.ny = Some(count(tokens[0])?);
        }
        "bottom" => {
            arity(1..=4)?;
            let num = |i: usize| parse_quantity(tokens[i], Unit::None, key, line);
            cfg.bottom = match tokens[0] {
                "flat" => {
                    arity(1..=1)?;
                    Bottom::Flat
                }
                "basin" => {
                    arity(1..=1)?;
                    Bottom::Basin
                }
                "mesh" => {
                    arity(1..=1)?;
                    Bottom::FromMesh
                }
                "slope" => {
                    arity(2..=2)?;
                    Bottom::Slope { s: num(1)? }
                }
                "plane" => {
                    arity(4..=4)?;
                    Bottom::Plane { b0: parse_quantity(tokens[1], Unit::Length, key, line)?, sx: num(2)?, sy: num(3)? }
                }
                "file" => {
                    arity(2..=2)?;
                    Bottom::File(tokens[1].into())
                }
                _ => return Err(err("expected flat | basin | mesh | slope <s> | plane <b0> <sx> <sy> | file <path>")),
            };
        }
        "init_depth" => {
            arity(1..=2)?;
            cfg.init = match tokens[0] {
                "dry" => InitialCondition::Dry,
                "file" => {
                    arity(2..=2)?;
                    InitialCondition::File(tokens[1].into())
                }
                t => {
                    arity(1..=1)?;
                    InitialCondition::Depth(nonneg(parse_quantity(t, Unit::Length, key, line)?)?)
                }
            };
        }
        "init_level" => {
            arity(1..=1)?;
            cfg.init = InitialCondition::Level(parse_quantity(tokens[0], Unit::Length, key, line)?);
        }
        "rain" => {
            if tokens == ["required"] {
                cfg.rain_required = true;
                return Ok(());
            }
            arity(3..=3)?;
            let t0 = nonneg(parse_quantity(tokens[0], Unit::Time, key, line)?)?;
            let t1 = parse_quantity(tokens[1], Unit::Time, key, line)?;
            let rate = nonneg(parse_quantity(tokens[2], Unit::Rate, key, line)?)?;
            if t1 <= t0 {
                return Err(err("interval end must be after its start"));
            }
            cfg.rain.push(RainInterval { t0, t1, rate });
            RainSchedule::new(cfg.rain.clone()).map_err(|e| err(&e.to_string()))?;
        }
        "soil" => {
            arity(1..=1)?;
            pending.soil = Some(tokens[0].to_string());
        }
        "layer1" | "layer2" => {
            arity(3..=4)?;
            let ks = parse_quantity(tokens[0], Unit::Rate, key, line)?;
            let psi = parse_quantity(tokens[1], Unit::Length, key, line)?;
            let dtheta = parse_quantity(tokens[2], Unit::None, key, line)?;
            let layer = SoilLayer::new(ks, psi, dtheta).map_err(|e| err(&e.to_string()))?;
            let d1 = tokens.get(3).map(|t| parse_quantity(t, Unit::Length, key, line)).transpose()?;
            if key == "layer1" {
                pending.layer1 = Some((layer, d1));
            } else if d1.is_some() {
                return Err(err("thickness belongs on layer1"));
            } else {
                pending.layer2 = Some(layer);
            }
        }
        "manning" => {
            arity(1..=1)?;
            cfg.manning = nonneg(parse_quantity(tokens[0], Unit::None, key, line)?)?;
        }
        "boundary" => {
            arity(2..=2)?;
            let side: Side = tokens[0].parse().map_err(|e: String| err(&e))?;
            let tag: BoundaryTag = tokens[1].parse().map_err(|e: String| err(&e))?;
            cfg.boundary.push((side, tag));
        }
        "cfl" | "h_eps" | "u_max" | "dt_max" => {
            arity(1..=1)?;
            let unit = match key {
                "h_eps" => Unit::Length,
                "dt_max" => Unit::Time,
                _ => Unit::None,
            };
            let v = parse_quantity(tokens[0], unit, key, line)?;
            let p = &mut cfg.params;
            match key {
                "cfl" => p.cfl = v,
                "h_eps" => p.h_eps = v,
                "u_max" => p.u_max = v,
                _ => p.dt_max = v,
            }
            p.validate().map_err(|_| err("out of range"))?;
        }
        "t_end" => {
            arity(1..=1)?;
            cfg.t_end = nonneg(parse_quantity(tokens[0], Unit::Time, key, line)?)?;
            pending.t_end = true;
        }
        "output_every" | "vtk_every" => {
            arity(1..=1)?;
            let v = match tokens[0] {
                "none" => None,
                t => Some(positive(parse_quantity(t, Unit::Time, key, line)?)?),
            };
            if key == "output_every" {
                cfg.output_every = v;
            } else {
                cfg.vtk_every = v;
            }
        }
        "outdir" => {
            arity(1..=1)?;
            cfg.outdir = tokens[0].into();
        }
        _ => return Err(Error::config_at(line, key, "unknown key")),
    }
    Ok(())
}

fn fmt_range(r: &std::ops::RangeInclusive<usize>) -> String {
    if r.start() == r.end() {
        r.start().to_string()
    } else {
        format!("{}-{}", r.start(), r.end())
    }
}

fn finish(cfg: &mut RunConfig, p: Pending) -> Result<()> {
    match p.mesh_files {
        Some(files) => {
            if p.lx_ly.is_some() || p.nx.is_some() || p.ny.is_some() {
                return Err(Error::config("mesh", "domain/nx/ny do not apply to a mesh read from files"));
            }
            cfg.mesh = files;
        }
        None => {
            let (lx, ly) = p.lx_ly.ok_or_else(|| Error::config("domain", "missing required key"))?;
            let nx = p.nx.ok_or_else(|| Error::config("nx", "missing required key"))?;
            let ny = p.ny.ok_or_else(|| Error::config("ny", "missing required key"))?;
            cfg.mesh = MeshSource::Rect { lx, ly, nx, ny };
        }
    }
    let unused = |key: &str| Error::config(key, "given but not used by this soil model");
    cfg.soil = match p.soil.as_deref() {
        None if p.layer1.is_some() || p.layer2.is_some() => {
            return Err(Error::config("soil", "layers given without `soil = one_layer | two_layer`"))
        }
        None | Some("none") => None,
        Some(name @ ("silt_loam" | "sandy_loam" | "sandy_over_silt")) => {
            if p.layer1.is_some() {
                return Err(unused("layer1"));
            }
            if p.layer2.is_some() {
                return Err(unused("layer2"));
            }
            Some(match SoilLayer::preset(name) {
                Some(layer) => SoilModel::OneLayer(layer),
                None => SoilModel::layered_sandy_over_silt(),
            })
        }
        Some("one_layer") => {
            if p.layer2.is_some() {
                return Err(unused("layer2"));
            }
            match p.layer1 {
                Some((layer, None)) => Some(SoilModel::OneLayer(layer)),
                Some((_, Some(_))) => return Err(Error::config("layer1", "thickness only applies to two_layer")),
                None => return Err(Error::config("layer1", "missing required key")),
            }
        }
        Some("two_layer") => {
            let (upper, d1) = p.layer1.ok_or_else(|| Error::config("layer1", "missing required key"))?;
            let d1 = d1.ok_or_else(|| Error::config("layer1", "two_layer needs the upper thickness as 4th value"))?;
            let lower = p.layer2.ok_or_else(|| Error::config("layer2", "missing required key"))?;
            Some(SoilModel::two_layer(upper, lower, d1).map_err(|e| Error::config("layer1", e.to_string()))?)
        }
        Some(other) => {
            return Err(Error::config(
                "soil",
                format!("unknown soil '{other}' (expected none | silt_loam | sandy_loam | sandy_over_silt | one_layer | two_layer)"),
            ))
        }
    };
    Ok(())
}

/// Writes `cfg` back in the key-value format, in SI units. Parsing the
/// result gives an equal config.
pub fn serialize_config(cfg: &RunConfig) -> String {
    let mut out = String::new();
    let mut put = |key: &str, value: String| {
        let _ = writeln!(out, "{key} = {value}");
    };
    match &cfg.mesh {
        MeshSource::Rect { lx, ly, nx, ny } => {
            put("mesh", "rect".into());
            put("domain", format!("{lx:?} {ly:?}"));
            put("nx", nx.to_string());
            put("ny", ny.to_string());
        }
        MeshSource::Files { nodes, elements, tags } => {
            let mut v = format!("file {} {}", nodes.display(), elements.display());
            if let Some(t) = tags {
                let _ = write!(v, " {}", t.display());
            }
            put("mesh", v);
        }
    }
    put(
        "bottom",
        match &cfg.bottom {
            Bottom::Flat => "flat".into(),
            Bottom::Basin => "basin".into(),
            Bottom::FromMesh => "mesh".into(),
            Bottom::Slope { s } => format!("slope {s:?}"),
            Bottom::Plane { b0, sx, sy } => format!("plane {b0:?} {sx:?} {sy:?}"),
            Bottom::File(p) => format!("file {}", p.display()),
        },
    );
    match &cfg.init {
        InitialCondition::Dry => put("init_depth", "dry".into()),
        InitialCondition::Depth(h) => put("init_depth", format!("{h:?}")),
        InitialCondition::Level(w) => put("init_level", format!("{w:?}")),
        InitialCondition::File(p) => put("init_depth", format!("file {}", p.display())),
    }
    if cfg.rain_required {
        put("rain", "required".into());
    }
    for r in &cfg.rain {
        put("rain", format!("{:?} {:?} {:?}", r.t0, r.t1, r.rate));
    }
    let layer = |l: &SoilLayer| format!("{:?} {:?} {:?}", l.ks, l.psi, l.dtheta);
    match &cfg.soil {
        None => put("soil", "none".into()),
        Some(SoilModel::OneLayer(l)) => {
            put("soil", "one_layer".into());
            put("layer1", layer(l));
        }
        Some(SoilModel::TwoLayer { upper, lower, d1 }) => {
            put("soil", "two_layer".into());
            put("layer1", format!("{} {d1:?}", layer(upper)));
            put("layer2", layer(lower));
        }
    }
    put("manning", format!("{:?}", cfg.manning));
    for (side, tag) in &cfg.boundary {
        put("boundary", format!("{side} {tag}"));
    }
    let p = &cfg.params;
    put("cfl", format!("{:?}", p.cfl));
    put("h_eps", format!("{:?}", p.h_eps));
    put("u_max", format!("{:?}", p.u_max));
    put("dt_max", format!("{:?}", p.dt_max));
    put("t_end", format!("{:?}", cfg.t_end));
    let every = |v: Option<f64>| v.map_or("none".to_string(), |v| format!("{v:?}"));
    put("output_every", every(cfg.output_every));
    put("vtk_every", every(cfg.vtk_every));
    put("outdir", cfg.outdir.display().to_string());
    out
}

/// Built-in scenarios. Mesh resolutions give roughly the mean cell areas of
/// the reference experiments.
pub fn scenario_preset(name: &str) -> Result<RunConfig> {
    let base = RunConfig::default();
    let cfg = match name {
        "slope_runoff" => RunConfig {
            // 256 × 11 rectangles: 3.897e-3 m² per triangle
            mesh: MeshSource::Rect { lx: SLOPE_LENGTH, ly: 1.0, nx: 256, ny: 11 },
            bottom: Bottom::Slope { s: SLOPE_GRADIENT },
            rain_required: true,
            manning: 0.48,
            boundary: vec![(Side::Right, BoundaryTag::Outflow)],
            t_end: 3600.0,
            output_every: Some(10.0),
            ..base
        },
        "conservation_one_layer" | "conservation_two_layer" => RunConfig {
            mesh: MeshSource::Rect { lx: 2.0, ly: 1.0, nx: 56, ny: 28 },
            init: InitialCondition::Depth(0.1),
            soil: Some(if name.ends_with("one_layer") {
                SoilModel::OneLayer(SoilLayer::sandy_loam())
            } else {
                SoilModel::layered_sandy_over_silt()
            }),
            t_end: 7200.0,
            output_every: Some(60.0),
            ..base
        },
        "complex_basin" => RunConfig {
            // 79 × 63 rectangles: 9954 cells
            mesh: MeshSource::Rect { lx: 10.0, ly: 8.0, nx: 79, ny: 63 },
            bottom: Bottom::Basin,
            rain: vec![RainInterval { t0: 0.0, t1: 300.0, rate: 500.0 * MM_PER_HOUR }],
            soil: Some(SoilModel::OneLayer(SoilLayer::new(7.0 * MM_PER_HOUR, 0.05, 0.125)?)),
            manning: 0.013,
            boundary: vec![(Side::Bottom, BoundaryTag::Outflow)],
            t_end: 480.0,
            output_every: Some(30.0),
            vtk_every: Some(60.0),
            ..base
        },
        "lake_at_rest" => RunConfig {
            mesh: MeshSource::Rect { lx: 10.0, ly: 8.0, nx: 43, ny: 35 },
            bottom: Bottom::Basin,
            init: InitialCondition::Level(1.2),
            t_end: 10.0,
            output_every: Some(1.0),
            ..base
        },
        _ => {
            return Err(Error::config(
                "preset",
                format!("unknown scenario '{name}' (expected one of {})", PRESETS.join(", ")),
            ))
        }
    };
    Ok(RunConfig { outdir: PathBuf::from(format!("output/{name}")), ..cfg })
}

impl RunConfig {
    /// Applies `key = value` overrides on top of this config. The first
    /// override of a list key (`rain`, `boundary`) replaces the whole list.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<RunConfig> {
        let given: HashSet<&str> = overrides.iter().map(|(k, _)| k.as_str()).collect();
        let dropped = |key: &str| {
            given.contains(key)
                || (matches!(key, "init_depth" | "init_level") && (given.contains("init_depth") || given.contains("init_level")))
                || (matches!(key, "layer1" | "layer2") && given.contains("soil"))
        };
        let mut text: String = serialize_config(self)
            .lines()
            .filter(|l| !dropped(l.split('=').next().unwrap_or("").trim()))
            .map(|l| format!("{l}\n"))
            .collect();
        for (k, v) in overrides {
            let _ = writeln!(text, "{k} = {v}");
        }
        parse_config(&text)
    }

    /// Builds the mesh with bottom and boundary tags, resolving file paths
    /// against `base_dir`.
    pub fn build_mesh(&self, base_dir: &Path) -> Result<Mesh> {
        let read = |p: &Path| {
            let path = base_dir.join(p);
            std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        let mut mesh = match &self.mesh {
            MeshSource::Rect { lx, ly, nx, ny } => {
                let lx = *lx;
                let bottom = self.bottom.clone();
                generate_rect_mesh(lx, *ly, *nx, *ny, |x, y| bottom.eval(x, y, lx).unwrap_or(0.0))?
            }
            MeshSource::Files { nodes, elements, .. } => load_mesh(&read(nodes)?, &read(elements)?, None)?,
        };
        let lx = mesh.bounding_box()[2];
        match &self.bottom {
            Bottom::FromMesh => {
                if matches!(self.mesh, MeshSource::Rect { .. }) {
                    return Err(Error::config("bottom", "`mesh` bottom needs a mesh read from files"));
                }
            }
            Bottom::File(p) => {
                let text = read(p)?;
                let values = parse_values(&text, &p.display().to_string())?;
                mesh.set_vertex_bottom(&values)?;
            }
            analytic if matches!(self.mesh, MeshSource::Files { .. }) => {
                let b = analytic.clone();
                mesh.set_bottom(move |x, y| b.eval(x, y, lx).unwrap_or(0.0))?;
            }
            _ => {}
        }
        if let MeshSource::Files { tags: Some(t), .. } = &self.mesh {
            apply_boundary_tags(&mut mesh, &read(t)?)?;
        }
        for &(side, tag) in &self.boundary {
            if mesh.tag_side(side, tag) == 0 {
                return Err(Error::config("boundary", format!("no boundary edges on side {side}")));
            }
        }
        Ok(mesh)
    }

    pub fn initial_field(&self, mesh: &Mesh, base_dir: &Path) -> Result<FlowField> {
        Ok(match &self.init {
            InitialCondition::Dry => FlowField::uniform_depth(mesh, 0.0),
            InitialCondition::Depth(h) => FlowField::uniform_depth(mesh, *h),
            InitialCondition::Level(w) => FlowField::still_water(mesh, *w),
            InitialCondition::File(p) => {
                let path = base_dir.join(p);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                let depths = parse_values(&text, &p.display().to_string())?;
                if depths.len() != mesh.num_cells() {
                    return Err(Error::config(
                        "init_depth",
                        format!("{} depths for {} cells", depths.len(), mesh.num_cells()),
                    ));
                }
                if let Some(h) = depths.iter().find(|h| **h < 0.0) {
                    return Err(Error::config("init_depth", format!("negative depth {h}")));
                }
                let w = mesh.cells.iter().zip(&depths).map(|(c, h)| c.b_center + h).collect::<Vec<_>>();
                let n = w.len();
                FlowField::new(w, vec![0.0; n], vec![0.0; n])
            }
        })
    }

    /// Mesh, initial state and forcing assembled into a simulation.
    pub fn build_simulation(&self, base_dir: &Path) -> Result<Simulation> {
        if self.rain_required && self.rain.is_empty() {
            return Err(Error::config("rain", "this scenario needs a rainfall interval, e.g. `rain = 0 3600 50mm/h`"));
        }
        let mesh = self.build_mesh(base_dir)?;
        let field = self.initial_field(&mesh, base_dir)?;
        Ok(Simulation::new(mesh, field, self.params)?
            .with_soil(self.soil.clone())
            .with_rain(RainSchedule::new(self.rain.clone())?)
            .with_friction(FrictionParams::new(self.manning)))
    }
}

fn parse_values(text: &str, name: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        for tok in line.split('#').next().unwrap_or("").split_whitespace() {
            out.push(tok.parse().map_err(|_| Error::parse(name, idx + 1, format!("'{tok}' is not a number")))?);
        }
    }
    Ok(out)
}
