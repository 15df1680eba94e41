//! Time integration of the semi-discrete finite-volume scheme.
//!
//! One step of size `dt`:
//!
//! 1. infiltration rates are computed per cell from the step-start state and
//!    frozen for the step;
//! 2. `U1 = U + dt L(U)`, followed by the positivity clamp and implicit
//!    friction over `dt`;
//! 3. `U2 = (U + U1 + dt L(U1)) / 2`, followed by friction over `dt/2` and
//!    the clamp.
//!
//! `L` assembles the HLL edge fluxes (each edge evaluated once), the
//! well-balanced bed-slope source and the rain/infiltration mass source.
//! Every water volume crossing the system boundary is booked in a
//! [`MassLedger`].

use log::debug;

use crate::error::{Error, Result};
use crate::infiltration::{step_infiltration_cell, SoilModel};
use crate::mesh::{BoundaryTag, Edge, Mesh};
use crate::reconstruction::{reconstruct_cell, CellStencil};
use crate::riemann::{hll_flux, ConservedState};
use crate::sources::{friction_apply, hydrostatic_term, FrictionParams};
use crate::{DEFAULT_DRY_DEPTH, GRAVITY};

/// Cell averages of the conserved variables at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub w: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub t: f64,
}

impl FlowField {
    pub fn new(w: Vec<f64>, p: Vec<f64>, q: Vec<f64>) -> Self {
        assert!(w.len() == p.len() && w.len() == q.len(), "field arrays differ in length");
        Self { w, p, q, t: 0.0 }
    }

    /// Still water with surface `level`, dry where the bottom is higher.
    pub fn still_water(mesh: &Mesh, level: f64) -> Self {
        let w = mesh.cells.iter().map(|c| level.max(c.b_center)).collect::<Vec<_>>();
        let n = w.len();
        Self::new(w, vec![0.0; n], vec![0.0; n])
    }

    /// Still water of uniform depth `h` above the cell-centre bottom.
    pub fn uniform_depth(mesh: &Mesh, h: f64) -> Self {
        let w = mesh.cells.iter().map(|c| c.b_center + h).collect::<Vec<_>>();
        let n = w.len();
        Self::new(w, vec![0.0; n], vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn depth(&self, mesh: &Mesh, j: usize) -> f64 {
        self.w[j] - mesh.cells[j].b_center
    }

    pub fn depths(&self, mesh: &Mesh) -> Vec<f64> {
        (0..self.len()).map(|j| self.depth(mesh, j)).collect()
    }

    /// Velocity `(u, v)`, zero below `h_eps`.
    pub fn velocity(&self, mesh: &Mesh, j: usize, h_eps: f64) -> [f64; 2] {
        let h = self.depth(mesh, j);
        if h < h_eps {
            [0.0, 0.0]
        } else {
            [self.p[j] / h, self.q[j] / h]
        }
    }

    /// Surface water volume `Σ h |E|` [m³].
    pub fn surface_volume(&self, mesh: &Mesh) -> f64 {
        mesh.cells.iter().zip(&self.w).map(|(c, w)| (w - c.b_center) * c.area).sum()
    }

    fn state(&self, j: usize) -> ConservedState {
        ConservedState::new(self.w[j], self.p[j], self.q[j])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub cfl: f64,
    /// Wet/dry depth threshold [m].
    pub h_eps: f64,
    /// Velocity above which the run is declared unstable [m/s].
    pub u_max: f64,
    /// Time step used when the whole domain is dry [s].
    pub dt_max: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { cfl: 0.25, h_eps: DEFAULT_DRY_DEPTH, u_max: 100.0, dt_max: 1.0 }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("cfl", self.cfl > 0.0 && self.cfl <= 1.0),
            ("h_eps", self.h_eps > 0.0 && self.h_eps.is_finite()),
            ("u_max", self.u_max > 0.0),
            ("dt_max", self.dt_max > 0.0 && self.dt_max.is_finite()),
        ];
        match checks.iter().find(|(_, ok)| !ok) {
            Some((key, _)) => Err(Error::config(key, "out of range")),
            None => Ok(()),
        }
    }
}

/// Constant rainfall `rate` [m/s] on `[t0, t1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RainInterval {
    pub t0: f64,
    pub t1: f64,
    pub rate: f64,
}

/// Piecewise-constant rainfall over non-overlapping intervals.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RainSchedule {
    intervals: Vec<RainInterval>,
}

impl RainSchedule {
    pub fn new(mut intervals: Vec<RainInterval>) -> Result<Self> {
        for r in &intervals {
            if !(r.t0 >= 0.0 && r.t1 > r.t0 && r.t1.is_finite() && r.rate >= 0.0 && r.rate.is_finite()) {
                return Err(Error::config("rain", format!("invalid interval [{}, {}) with rate {}", r.t0, r.t1, r.rate)));
            }
        }
        intervals.sort_by(|a, b| a.t0.total_cmp(&b.t0));
        for pair in intervals.windows(2) {
            if pair[1].t0 < pair[0].t1 {
                return Err(Error::config(
                    "rain",
                    format!("intervals [{}, {}) and [{}, {}) overlap", pair[0].t0, pair[0].t1, pair[1].t0, pair[1].t1),
                ));
            }
        }
        Ok(Self { intervals })
    }

    pub fn constant(rate: f64, t0: f64, t1: f64) -> Result<Self> {
        Self::new(vec![RainInterval { t0, t1, rate }])
    }

    pub fn intervals(&self) -> &[RainInterval] {
        &self.intervals
    }

    pub fn rate_at(&self, t: f64) -> f64 {
        self.intervals.iter().find(|r| r.t0 <= t && t < r.t1).map_or(0.0, |r| r.rate)
    }

    /// First interval endpoint strictly after `t`.
    pub fn next_breakpoint(&self, t: f64) -> Option<f64> {
        self.intervals.iter().flat_map(|r| [r.t0, r.t1]).filter(|&b| b > t).reduce(f64::min)
    }
}

/// Running water budget [m³]. The identity
/// `surface + infiltrated + outflow = initial + rain_in + clamp` holds up to
/// rounding.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MassLedger {
    pub initial_volume: f64,
    pub surface_volume: f64,
    pub infiltrated_volume: f64,
    pub rain_in: f64,
    pub outflow_out: f64,
    /// Water added by raising negative depths to zero.
    pub clamp_correction: f64,
}

impl MassLedger {
    pub fn residual(&self) -> f64 {
        self.surface_volume + self.infiltrated_volume + self.outflow_out
            - self.initial_volume
            - self.rain_in
            - self.clamp_correction
    }
}

/// Ghost state across a boundary edge: the interior state with the normal
/// velocity reflected at walls. Outflow edges copy the interior state while
/// it leaves the domain and behave as walls otherwise, so they never draw
/// water in.
pub fn apply_boundary(edge: &Edge, interior: ConservedState) -> ConservedState {
    match edge.tag.unwrap_or(BoundaryTag::Wall) {
        BoundaryTag::Outflow if leaving(edge.normal, interior) => interior,
        _ => wall_ghost(edge.normal, interior),
    }
}

#[inline]
fn leaving(n: [f64; 2], s: ConservedState) -> bool {
    s.p * n[0] + s.q * n[1] >= 0.0
}

/// Stable step `cfl · min r_j / (|u_j| + sqrt(g h_j))` over wet cells, capped
/// at `dt_max`.
pub fn compute_dt(mesh: &Mesh, field: &FlowField, params: &SolverParams) -> f64 {
    let mut rate: f64 = 0.0;
    for (j, cell) in mesh.cells.iter().enumerate() {
        let h = field.w[j] - cell.b_center;
        if h > params.h_eps {
            let speed = (field.p[j] * field.p[j] + field.q[j] * field.q[j]).sqrt() / h;
            rate = rate.max((speed + (GRAVITY * h).sqrt()) / cell.inradius);
        }
    }
    if rate == 0.0 {
        params.dt_max
    } else {
        (params.cfl / rate).min(params.dt_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeKind {
    Interior,
    Wall,
    Outflow,
}

/// Edge data read by the flux loop.
#[derive(Debug, Clone, Copy)]
struct EdgeStencil {
    /// Flat `(cell, slot)` positions `3 cell + slot` of both sides.
    left: u32,
    right: u32,
    kind: EdgeKind,
    length: f64,
    normal: [f64; 2],
    b_mid: f64,
}

/// Precomputed geometry and buffers reused across stages.
#[derive(Debug, Clone)]
struct Workspace {
    cells: Vec<CellStencil>,
    edges: Vec<EdgeStencil>,
    inv_area: Vec<f64>,
    area: Vec<f64>,
    /// Midpoint states, flat by `3 cell + slot`.
    states: Vec<ConservedState>,
    /// Volumetric part of the bed-slope source, `-g ∇w (w̄ - B_j)`.
    volume_source: Vec<[f64; 2]>,
    /// Contribution of each edge to each adjacent cell, flat by
    /// `3 cell + slot`: `∓ l F` with the hydrostatic edge term of that side
    /// folded into the momentum.
    contrib: Vec<[f64; 3]>,
    stage: Option<FlowField>,
    infiltration: Vec<f64>,
    ic_new: Vec<f64>,
}

impl Workspace {
    fn new(mesh: &Mesh) -> Self {
        let n = mesh.num_cells();
        let edges = mesh
            .edges
            .iter()
            .map(|e| {
                let left = (3 * e.left + e.left_slot) as u32;
                let (right, kind) = match (e.right, e.tag) {
                    (Some((r, slot)), _) => ((3 * r + slot) as u32, EdgeKind::Interior),
                    (None, Some(BoundaryTag::Outflow)) => (left, EdgeKind::Outflow),
                    (None, _) => (left, EdgeKind::Wall),
                };
                EdgeStencil { left, right, kind, length: e.length, normal: e.normal, b_mid: e.b_mid }
            })
            .collect();
        Self {
            cells: CellStencil::all(mesh),
            edges,
            inv_area: mesh.cells.iter().map(|c| 1.0 / c.area).collect(),
            area: mesh.cells.iter().map(|c| c.area).collect(),
            states: vec![ConservedState::default(); 3 * n],
            volume_source: vec![[0.0; 2]; n],
            contrib: vec![[0.0; 3]; 3 * n],
            stage: None,
            infiltration: vec![0.0; n],
            ic_new: vec![0.0; n],
        }
    }

    /// Reconstruction and edge fluxes for `field`; returns the discharge
    /// leaving through outflow edges [m³/s].
    fn evaluate(&mut self, field: &FlowField, h_eps: f64) -> f64 {
        for (j, st) in self.cells.iter().enumerate() {
            let (grad, states) = st.reconstruct(field, j, h_eps);
            self.states[3 * j..3 * j + 3].copy_from_slice(&states);
            let g = grad.blend(st.b_grad);
            let depth = field.w[j] - st.b_center;
            self.volume_source[j] = [-(GRAVITY * g[0] * depth), -(GRAVITY * g[1] * depth)];
        }
        let mut outflow = 0.0;
        for e in &self.edges {
            let ul = self.states[e.left as usize];
            let n = e.normal;
            let l = e.length;
            let kind = match e.kind {
                EdgeKind::Outflow if !leaving(n, ul) => EdgeKind::Wall,
                k => k,
            };
            let ur = match kind {
                EdgeKind::Interior => self.states[e.right as usize],
                EdgeKind::Wall => wall_ghost(n, ul),
                EdgeKind::Outflow => ul,
            };
            let mut f = hll_flux(ul, ur, e.b_mid, n, h_eps).scale(l);
            match kind {
                EdgeKind::Wall => f.mass = 0.0,
                EdgeKind::Outflow => outflow += f.mass,
                EdgeKind::Interior => {}
            }
            let hydro = |h: f64| [hydrostatic_term(l, h, n[0]), hydrostatic_term(l, h, n[1])];
            let pl = hydro((ul.w - e.b_mid).max(0.0));
            self.contrib[e.left as usize] = [-f.mass, -(f.momentum_x - pl[0]), -(f.momentum_y - pl[1])];
            if e.kind == EdgeKind::Interior {
                let pr = hydro((ur.w - e.b_mid).max(0.0));
                self.contrib[e.right as usize] = [f.mass, f.momentum_x - pr[0], f.momentum_y - pr[1]];
            }
        }
        outflow
    }

    /// Tendency of cell `j` from the last [`Workspace::evaluate`], without
    /// the rain/infiltration term.
    #[inline]
    fn tendency(&self, j: usize) -> [f64; 3] {
        let c = &self.contrib[3 * j..3 * j + 3];
        let inv = self.inv_area[j];
        let s = self.volume_source[j];
        [
            (c[0][0] + c[1][0] + c[2][0]) * inv,
            (c[0][1] + c[1][1] + c[2][1]) * inv + s[0],
            (c[0][2] + c[1][2] + c[2][2]) * inv + s[1],
        ]
    }

    fn b_center(&self, j: usize) -> f64 {
        self.cells[j].b_center
    }
}

#[inline]
fn wall_ghost(n: [f64; 2], interior: ConservedState) -> ConservedState {
    let un = interior.p * n[0] + interior.q * n[1];
    ConservedState::new(interior.w, interior.p - 2.0 * un * n[0], interior.q - 2.0 * un * n[1])
}

/// Right-hand side `dU/dt` for every cell, including the mass source
/// `rain - infiltration[j]`. Friction is not part of it.
pub fn rhs(mesh: &Mesh, field: &FlowField, rain: f64, infiltration: &[f64], h_eps: f64) -> Vec<[f64; 3]> {
    let mut ws = Workspace::new(mesh);
    ws.evaluate(field, h_eps);
    (0..mesh.num_cells())
        .map(|j| {
            let mut t = ws.tendency(j);
            t[0] += rain - infiltration.get(j).copied().unwrap_or(0.0);
            t
        })
        .collect()
}

/// Discharge `Σ max((p, q)·n, 0) l` through the outflow edges [m³/s], from
/// the reconstructed interior states. Edges with inward flow are closed and
/// contribute nothing.
pub fn outlet_discharge(mesh: &Mesh, field: &FlowField, h_eps: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut any = false;
    for edge in mesh.edges.iter().filter(|e| e.is_boundary() && e.tag == Some(BoundaryTag::Outflow)) {
        any = true;
        let (_, states) = reconstruct_cell(mesh, field, edge.left, h_eps);
        let s = states[edge.left_slot];
        total += (s.p * edge.normal[0] + s.q * edge.normal[1]).max(0.0) * edge.length;
    }
    if any {
        Ok(total)
    } else {
        Err(Error::config("boundary", "no outflow edges to measure discharge"))
    }
}

/// Raises negative depths to zero and drops momentum of dry cells. Returns
/// the volume added.
fn clamp_depths(mesh: &Mesh, field: &mut FlowField, h_eps: f64) -> f64 {
    let mut added = 0.0;
    for (j, cell) in mesh.cells.iter().enumerate() {
        let h = field.w[j] - cell.b_center;
        if h < 0.0 {
            added -= h * cell.area;
            field.w[j] = cell.b_center;
        }
        if h < h_eps {
            field.p[j] = 0.0;
            field.q[j] = 0.0;
        }
    }
    added
}

fn apply_friction(mesh: &Mesh, field: &mut FlowField, friction: FrictionParams, dt: f64, h_eps: f64) {
    if friction.n_manning == 0.0 {
        return;
    }
    for (j, cell) in mesh.cells.iter().enumerate() {
        let h = field.w[j] - cell.b_center;
        let s = friction_apply(field.state(j), h, friction, dt, h_eps);
        field.p[j] = s.p;
        field.q[j] = s.q;
    }
}

/// A mesh, its flow state and all forcing, advanced step by step.
#[derive(Debug, Clone)]
pub struct Simulation {
    mesh: Mesh,
    pub field: FlowField,
    pub soil: Option<SoilModel>,
    /// Cumulative infiltration per cell [m].
    pub infiltrated: Vec<f64>,
    pub rain: RainSchedule,
    pub friction: FrictionParams,
    pub params: SolverParams,
    pub steps: u64,
    ledger: MassLedger,
    ws: Workspace,
}

impl Simulation {
    pub fn new(mesh: Mesh, mut field: FlowField, params: SolverParams) -> Result<Self> {
        params.validate()?;
        if field.len() != mesh.num_cells() {
            return Err(Error::config(
                "init",
                format!("field has {} cells, mesh has {}", field.len(), mesh.num_cells()),
            ));
        }
        for (j, cell) in mesh.cells.iter().enumerate() {
            let h = field.w[j] - cell.b_center;
            if !(h.is_finite() && field.p[j].is_finite() && field.q[j].is_finite()) {
                return Err(Error::config("init", format!("non-finite initial state in cell {j}")));
            }
            if h < -1e-12 {
                return Err(Error::config("init", format!("negative initial depth {h} in cell {j}")));
            }
            if h < 0.0 {
                field.w[j] = cell.b_center;
            }
        }
        let ledger = MassLedger {
            initial_volume: field.surface_volume(&mesh),
            ..MassLedger::default()
        };
        let ws = Workspace::new(&mesh);
        Ok(Self {
            infiltrated: vec![0.0; mesh.num_cells()],
            mesh,
            field,
            soil: None,
            rain: RainSchedule::default(),
            friction: FrictionParams::new(0.0),
            params,
            steps: 0,
            ledger,
            ws,
        })
    }

    pub fn with_soil(mut self, soil: Option<SoilModel>) -> Self {
        self.soil = soil;
        self
    }

    pub fn with_rain(mut self, rain: RainSchedule) -> Self {
        self.rain = rain;
        self
    }

    pub fn with_friction(mut self, friction: FrictionParams) -> Self {
        self.friction = friction;
        self
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn time(&self) -> f64 {
        self.field.t
    }

    /// Budget at the current time.
    pub fn ledger(&self) -> MassLedger {
        MassLedger {
            surface_volume: self.field.surface_volume(&self.mesh),
            ..self.ledger
        }
    }

    pub fn compute_dt(&self) -> f64 {
        compute_dt(&self.mesh, &self.field, &self.params)
    }

    pub fn outlet_discharge(&self) -> Result<f64> {
        outlet_discharge(&self.mesh, &self.field, self.params.h_eps)
    }

    pub fn has_outflow(&self) -> bool {
        self.mesh.edges.iter().any(|e| e.is_boundary() && e.tag == Some(BoundaryTag::Outflow))
    }

    /// Advances by exactly `dt`.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Numerical(format!("invalid time step {dt} at t = {}", self.field.t)));
        }
        let h_eps = self.params.h_eps;
        let n = self.mesh.num_cells();
        let rain = self.rain.rate_at(self.field.t);

        let mut infiltrated_volume = 0.0;
        match &self.soil {
            Some(soil) => {
                for j in 0..n {
                    let h = (self.field.w[j] - self.ws.b_center(j)).max(0.0);
                    let (rate, ic) = step_infiltration_cell(rain, h, soil, self.infiltrated[j], dt)?;
                    self.ws.infiltration[j] = rate;
                    self.ws.ic_new[j] = ic;
                    infiltrated_volume += rate * dt * self.ws.area[j];
                }
            }
            None => self.ws.infiltration.iter_mut().for_each(|i| *i = 0.0),
        }

        let mesh = &self.mesh;
        let mut stage = self.ws.stage.take().unwrap_or_else(|| self.field.clone());

        let out1 = self.ws.evaluate(&self.field, h_eps);
        for j in 0..n {
            let t = self.ws.tendency(j);
            stage.w[j] = self.field.w[j] + dt * (t[0] + (rain - self.ws.infiltration[j]));
            stage.p[j] = self.field.p[j] + dt * t[1];
            stage.q[j] = self.field.q[j] + dt * t[2];
        }
        let clamp1 = clamp_depths(mesh, &mut stage, h_eps);
        apply_friction(mesh, &mut stage, self.friction, dt, h_eps);

        let out2 = self.ws.evaluate(&stage, h_eps);
        for j in 0..n {
            let t = self.ws.tendency(j);
            let f = &mut self.field;
            f.w[j] = 0.5 * (f.w[j] + (stage.w[j] + dt * (t[0] + (rain - self.ws.infiltration[j]))));
            f.p[j] = 0.5 * (f.p[j] + (stage.p[j] + dt * t[1]));
            f.q[j] = 0.5 * (f.q[j] + (stage.q[j] + dt * t[2]));
        }
        self.ws.stage = Some(stage);
        apply_friction(mesh, &mut self.field, self.friction, 0.5 * dt, h_eps);
        let clamp2 = clamp_depths(mesh, &mut self.field, h_eps);

        if self.soil.is_some() {
            std::mem::swap(&mut self.infiltrated, &mut self.ws.ic_new);
        }
        self.ledger.rain_in += rain * dt * mesh.total_area();
        self.ledger.infiltrated_volume += infiltrated_volume;
        self.ledger.outflow_out += dt * 0.5 * (out1 + out2);
        self.ledger.clamp_correction += 0.5 * clamp1 + clamp2;
        self.field.t += dt;
        self.steps += 1;
        self.check_state()
    }

    fn check_state(&self) -> Result<()> {
        let h_eps = self.params.h_eps;
        for (j, cell) in self.mesh.cells.iter().enumerate() {
            let (w, p, q) = (self.field.w[j], self.field.p[j], self.field.q[j]);
            if !(w.is_finite() && p.is_finite() && q.is_finite()) {
                return Err(Error::Numerical(format!(
                    "non-finite state in cell {j} at t = {}: w = {w}, p = {p}, q = {q}, centroid = {:?}",
                    self.field.t, cell.centroid
                )));
            }
            let h = w - cell.b_center;
            if h >= h_eps {
                let speed = (p * p + q * q).sqrt() / h;
                if speed > self.params.u_max {
                    return Err(Error::Numerical(format!(
                        "velocity {speed:.3e} m/s exceeds u_max in cell {j} at t = {} (h = {h:e})",
                        self.field.t
                    )));
                }
            }
        }
        Ok(())
    }

    /// Takes one CFL-limited step that does not pass `t_limit` and lands on
    /// it exactly when within reach (rain breakpoints are honoured too).
    /// Returns the step size.
    pub fn step_towards(&mut self, t_limit: f64) -> Result<f64> {
        let t = self.field.t;
        let mut target = t_limit;
        if let Some(b) = self.rain.next_breakpoint(t) {
            target = target.min(b);
        }
        let room = target - t;
        if room <= 0.0 {
            return Ok(0.0);
        }
        let dt = self.compute_dt();
        if dt >= room * (1.0 - 1e-12) {
            self.step(room)?;
            self.field.t = target;
            Ok(room)
        } else {
            self.step(dt)?;
            Ok(dt)
        }
    }

    /// Runs to `t_end`, calling `observer` at `t = 0` and every
    /// `output_every` seconds (and at `t_end`).
    pub fn run<F>(&mut self, t_end: f64, output_every: Option<f64>, mut observer: F) -> Result<()>
    where
        F: FnMut(&Simulation) -> Result<()>,
    {
        if let Some(every) = output_every {
            if !(every > 0.0) {
                return Err(Error::config("output_every", "must be positive"));
            }
        }
        observer(self)?;
        let start = self.field.t;
        let mut k = 1u64;
        while self.field.t < t_end {
            let next_out = output_every.map_or(t_end, |every| (start + k as f64 * every).min(t_end));
            while self.field.t < next_out {
                self.step_towards(next_out)?;
            }
            debug!("t = {:.3} s after {} steps", self.field.t, self.steps);
            observer(self)?;
            k += 1;
        }
        Ok(())
    }
}
