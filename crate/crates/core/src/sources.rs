//! Source terms: the well-balanced bed-slope term, rainfall minus
//! infiltration, and point-implicit Manning friction.

use crate::mesh::{Cell, Mesh};
use crate::reconstruction::{CellGradient, EdgeStates};
use crate::riemann::ConservedState;
use crate::solver::FlowField;
use crate::GRAVITY;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionParams {
    /// Manning coefficient [s m^-1/3].
    pub n_manning: f64,
}

impl FrictionParams {
    pub fn new(n_manning: f64) -> Self {
        assert!(n_manning >= 0.0, "Manning coefficient must be non-negative");
        Self { n_manning }
    }
}

/// Hydrostatic edge term `l · (g h² / 2) · n_out`, one component.
///
/// The solver evaluates the pressure part of the HLL flux with the same
/// association, so for still water the two cancel exactly.
#[inline]
pub(crate) fn hydrostatic_term(length: f64, h: f64, n_out: f64) -> f64 {
    length * ((0.5 * GRAVITY * h * h) * n_out)
}

/// Bed-slope momentum source of one cell.
///
/// `edge_w` are the cell's own reconstructed surface values at its three edge
/// midpoints and `grad_w` the surface gradient used for that reconstruction.
/// The hydrostatic sum uses outward normals; combined with the inward flux
/// sum it vanishes for a lake at rest.
pub fn bed_slope_source_cell(cell: &Cell, w_bar: f64, edge_w: [f64; 3], grad_w: [f64; 2]) -> [f64; 2] {
    let mut s = [0.0; 2];
    for k in 0..3 {
        let h = (edge_w[k] - cell.b_mid[k]).max(0.0);
        let n_out = [-cell.inward_normals[k][0], -cell.inward_normals[k][1]];
        s[0] += hydrostatic_term(cell.lengths[k], h, n_out[0]);
        s[1] += hydrostatic_term(cell.lengths[k], h, n_out[1]);
    }
    let depth = w_bar - cell.b_center;
    [
        s[0] / cell.area - GRAVITY * grad_w[0] * depth,
        s[1] / cell.area - GRAVITY * grad_w[1] * depth,
    ]
}

/// Bed-slope source for every cell.
pub fn bed_slope_source(mesh: &Mesh, field: &FlowField, states: &EdgeStates, gradients: &[CellGradient]) -> Vec<[f64; 2]> {
    mesh.cells
        .iter()
        .enumerate()
        .map(|(j, cell)| {
            let edge_w = states.states[j].map(|s| s.w);
            bed_slope_source_cell(cell, field.w[j], edge_w, gradients[j].effective_w(cell))
        })
        .collect()
}

/// Mass source `R - I` [m/s].
#[inline]
pub fn rain_infiltration_source(rain: f64, infiltration: f64) -> f64 {
    rain - infiltration
}

/// Implicit Manning friction over `dt`: the backward-Euler update
/// `m' + dt g n² |m'| m' / h^(7/3) = m` for the momentum `m = (p, q)`,
/// solved in closed form as `m' = 2 m / (1 + sqrt(1 + 4 k))` with
/// `k = dt g n² |u| / h^(4/3)`. Momentum is zeroed below the dry threshold.
pub fn friction_apply(state: ConservedState, h: f64, params: FrictionParams, dt: f64, h_eps: f64) -> ConservedState {
    if h < h_eps {
        return ConservedState { p: 0.0, q: 0.0, ..state };
    }
    let n = params.n_manning;
    if n == 0.0 {
        return state;
    }
    let speed = (state.p * state.p + state.q * state.q).sqrt() / h;
    if speed == 0.0 {
        return state;
    }
    let k = dt * GRAVITY * n * n * speed / (h * h.cbrt());
    let factor = 2.0 / (1.0 + (1.0 + 4.0 * k).sqrt());
    ConservedState {
        w: state.w,
        p: state.p * factor,
        q: state.q * factor,
    }
}
