//! Piecewise-linear reconstruction of `(w, p, q)`.
//!
//! Gradients come from the Green-Gauss theorem with the arithmetic mean of
//! the two adjacent cell averages as interface value. On walls the ghost is
//! the cell itself; on outflow edges the ghost keeps the cell's depth over
//! the bottom mirrored across the edge, so the surface runs parallel to the
//! bed out of the domain. Each variable is then limited with a Barth–Jespersen
//! factor, and the surface gradient is blended toward the bed gradient by
//! the positivity parameter `alpha`:
//!
//! ```text
//! w~(x) = w_j + (alpha ∇w + (1 - alpha) ∇B) · (x - G_j)
//! ```
//!
//! so the reconstructed depth at each midpoint is `h_j + alpha * delta_k`,
//! where `delta_k` is its deviation at `alpha = 1`. `alpha` is the largest
//! value in `[0, 1]` keeping all three depths non-negative.

use crate::mesh::{BoundaryTag, Cell, Mesh, Neighbor};
use crate::riemann::ConservedState;
use crate::solver::FlowField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGradient {
    /// Limited surface-elevation gradient, before the alpha blend.
    pub w: [f64; 2],
    pub p: [f64; 2],
    pub q: [f64; 2],
    pub alpha: f64,
}

impl CellGradient {
    /// Surface gradient actually used by the reconstruction.
    #[inline]
    pub fn effective_w(&self, cell: &Cell) -> [f64; 2] {
        self.blend(cell.b_grad)
    }

    #[inline]
    pub(crate) fn blend(&self, b_grad: [f64; 2]) -> [f64; 2] {
        if self.alpha == 1.0 {
            self.w
        } else {
            let a = self.alpha;
            [a * self.w[0] + (1.0 - a) * b_grad[0], a * self.w[1] + (1.0 - a) * b_grad[1]]
        }
    }
}

/// Reconstructed states at the three edge midpoints of each cell, from that
/// cell's side. Boundary ghosts are built by the solver.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EdgeStates {
    pub states: Vec<[ConservedState; 3]>,
}

/// Compact per-cell geometry read by the reconstruction.
///
/// Boundary slots point back at the cell itself, which makes the interface
/// value the cell's own average without a branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct CellStencil {
    pub nb: [u32; 3],
    /// `l n_out / (2 |E|)` per edge: the gradient is `Σ gg_k (U_nb - U_j)`.
    pub gg: [[f64; 2]; 3],
    /// Edge midpoint minus centroid.
    pub offsets: [[f64; 2]; 3],
    pub b_mid: [f64; 3],
    /// `b_mid - b_center`.
    pub db: [f64; 3],
    pub b_center: f64,
    pub b_grad: [f64; 2],
    /// Extra surface jump to the ghost, `2 (b_mid - b_center)` on outflow
    /// edges and zero elsewhere.
    pub w_ghost: [f64; 3],
}

impl CellStencil {
    pub fn new(mesh: &Mesh, j: usize) -> Self {
        let c = &mesh.cells[j];
        let nb = c.neighbors.map(|n| match n {
            Neighbor::Cell(n) => n as u32,
            Neighbor::Boundary => j as u32,
        });
        let mut gg = [[0.0; 2]; 3];
        for k in 0..3 {
            let s = -0.5 * c.lengths[k] / c.area;
            gg[k] = [s * c.inward_normals[k][0], s * c.inward_normals[k][1]];
        }
        let mut w_ghost = [0.0; 3];
        for k in 0..3 {
            if c.neighbors[k] == Neighbor::Boundary && mesh.edges[c.edges[k]].tag == Some(BoundaryTag::Outflow) {
                w_ghost[k] = 2.0 * (c.b_mid[k] - c.b_center);
            }
        }
        Self {
            nb,
            gg,
            offsets: c.offsets,
            b_mid: c.b_mid,
            db: c.b_mid.map(|b| b - c.b_center),
            b_center: c.b_center,
            b_grad: c.b_grad,
            w_ghost,
        }
    }

    pub fn all(mesh: &Mesh) -> Vec<Self> {
        (0..mesh.num_cells()).map(|j| Self::new(mesh, j)).collect()
    }

    #[inline]
    fn jumps(&self, values: &[f64], j: usize) -> [f64; 3] {
        let v = values[j];
        self.nb.map(|n| values[n as usize] - v)
    }

    #[inline]
    fn w_jumps(&self, w: &[f64], j: usize) -> [f64; 3] {
        let d = self.jumps(w, j);
        [d[0] + self.w_ghost[0], d[1] + self.w_ghost[1], d[2] + self.w_ghost[2]]
    }

    /// Green-Gauss gradient `(1/|E|) Σ l (U_face - U_j) n_out` with the
    /// face value the mean of the two adjacent averages.
    #[inline]
    fn green_gauss(&self, d: [f64; 3]) -> [f64; 2] {
        let g = &self.gg;
        [
            g[0][0] * d[0] + g[1][0] * d[1] + g[2][0] * d[2],
            g[0][1] * d[0] + g[1][1] * d[1] + g[2][1] * d[2],
        ]
    }

    /// Barth–Jespersen: scales `grad` so that no midpoint value leaves the
    /// range spanned by the cell and its neighbours (`d` are the jumps to
    /// the neighbours).
    #[inline]
    fn limit(&self, d: [f64; 3], grad: [f64; 2]) -> [f64; 2] {
        if grad == [0.0, 0.0] {
            return grad;
        }
        let hi = d[0].max(d[1]).max(d[2]).max(0.0);
        let lo = d[0].min(d[1]).min(d[2]).min(0.0);
        let mut phi: f64 = 1.0;
        for r in &self.offsets {
            let dk = dot(grad, *r);
            if dk > hi {
                phi = phi.min(hi / dk);
            } else if dk < lo {
                phi = phi.min(lo / dk);
            }
        }
        if phi == 1.0 {
            grad
        } else {
            [phi * grad[0], phi * grad[1]]
        }
    }

    /// Largest `alpha` in `[0, 1]` with `h + alpha * delta_k >= 0` at every
    /// midpoint, where `delta_k` is the depth deviation of the unblended
    /// reconstruction. Dry cells get 0.
    #[inline]
    fn alpha(&self, w_bar: f64, grad_w: [f64; 2]) -> f64 {
        let h = w_bar - self.b_center;
        if h <= 0.0 {
            return 0.0;
        }
        let mut alpha: f64 = 1.0;
        for k in 0..3 {
            let delta = dot(grad_w, self.offsets[k]) - self.db[k];
            if h + delta < 0.0 {
                alpha = alpha.min(h / -delta);
            }
        }
        alpha
    }

    #[inline]
    fn limit_all(&self, field: &FlowField, j: usize, raw: &CellGradient) -> CellGradient {
        let w = self.limit(self.w_jumps(&field.w, j), raw.w);
        CellGradient {
            w,
            p: self.limit(self.jumps(&field.p, j), raw.p),
            q: self.limit(self.jumps(&field.q, j), raw.q),
            alpha: self.alpha(field.w[j], w),
        }
    }

    /// Midpoint states. Depths are clamped at zero against rounding and
    /// momentum is dropped where the reconstructed depth is below `h_eps`.
    #[inline]
    fn edge_states(&self, field: &FlowField, j: usize, grad: &CellGradient, h_eps: f64) -> [ConservedState; 3] {
        let gw = grad.blend(self.b_grad);
        let (w, p, q) = (field.w[j], field.p[j], field.q[j]);
        let mut out = [ConservedState::default(); 3];
        for k in 0..3 {
            let r = self.offsets[k];
            let b = self.b_mid[k];
            let ws = (w + dot(gw, r)).max(b);
            out[k] = if ws - b < h_eps {
                ConservedState::new(ws, 0.0, 0.0)
            } else {
                ConservedState::new(ws, p + dot(grad.p, r), q + dot(grad.q, r))
            };
        }
        out
    }

    /// Gradient, limiting, positivity correction and edge states in one pass.
    #[inline]
    pub fn reconstruct(&self, field: &FlowField, j: usize, h_eps: f64) -> (CellGradient, [ConservedState; 3]) {
        let (dw, dp, dq) = (self.w_jumps(&field.w, j), self.jumps(&field.p, j), self.jumps(&field.q, j));
        let w = self.limit(dw, self.green_gauss(dw));
        let grad = CellGradient {
            w,
            p: self.limit(dp, self.green_gauss(dp)),
            q: self.limit(dq, self.green_gauss(dq)),
            alpha: self.alpha(field.w[j], w),
        };
        let states = self.edge_states(field, j, &grad, h_eps);
        (grad, states)
    }
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Unlimited Green-Gauss gradients of a scalar cell field.
pub fn green_gauss(mesh: &Mesh, values: &[f64]) -> Vec<[f64; 2]> {
    assert_eq!(values.len(), mesh.num_cells());
    (0..mesh.num_cells())
        .map(|j| {
            let st = CellStencil::new(mesh, j);
            st.green_gauss(st.jumps(values, j))
        })
        .collect()
}

/// Unlimited gradients of `(w, p, q)` with `alpha = 1`.
pub fn green_gauss_gradients(mesh: &Mesh, field: &FlowField) -> Vec<CellGradient> {
    (0..mesh.num_cells())
        .map(|j| {
            let st = CellStencil::new(mesh, j);
            CellGradient {
                w: st.green_gauss(st.w_jumps(&field.w, j)),
                p: st.green_gauss(st.jumps(&field.p, j)),
                q: st.green_gauss(st.jumps(&field.q, j)),
                alpha: 1.0,
            }
        })
        .collect()
}

/// Applies the Barth–Jespersen limiter to every variable and computes the
/// positivity parameter from the limited surface gradient.
pub fn limit_and_correct(mesh: &Mesh, field: &FlowField, gradients: &[CellGradient]) -> Vec<CellGradient> {
    (0..mesh.num_cells())
        .map(|j| CellStencil::new(mesh, j).limit_all(field, j, &gradients[j]))
        .collect()
}

/// Reconstructed edge states for the whole mesh.
pub fn edge_states(mesh: &Mesh, field: &FlowField, gradients: &[CellGradient], h_eps: f64) -> EdgeStates {
    EdgeStates {
        states: (0..mesh.num_cells())
            .map(|j| CellStencil::new(mesh, j).edge_states(field, j, &gradients[j], h_eps))
            .collect(),
    }
}

/// Gradient, limiting, positivity correction and edge states of one cell.
pub fn reconstruct_cell(mesh: &Mesh, field: &FlowField, j: usize, h_eps: f64) -> (CellGradient, [ConservedState; 3]) {
    CellStencil::new(mesh, j).reconstruct(field, j, h_eps)
}
