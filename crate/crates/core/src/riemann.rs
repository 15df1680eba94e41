//! Normal fluxes and the HLL approximate Riemann solver.
//!
//! All functions take the bottom elevation of the edge midpoint and derive
//! the depth as `h = w - B`, so both sides of an edge see the same bottom.
//! The normal `n` points from the left state to the right state.

use crate::GRAVITY;

/// Conserved variables `(w, p, q) = (h + B, hu, hv)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConservedState {
    pub w: f64,
    pub p: f64,
    pub q: f64,
}

impl ConservedState {
    pub const fn new(w: f64, p: f64, q: f64) -> Self {
        Self { w, p, q }
    }

    pub fn depth(&self, b: f64) -> f64 {
        self.w - b
    }
}

/// Flux through an edge per unit length: mass, x-momentum, y-momentum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EdgeFlux {
    pub mass: f64,
    pub momentum_x: f64,
    pub momentum_y: f64,
}

impl EdgeFlux {
    pub fn scale(self, s: f64) -> Self {
        Self {
            mass: s * self.mass,
            momentum_x: s * self.momentum_x,
            momentum_y: s * self.momentum_y,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.mass.is_finite() && self.momentum_x.is_finite() && self.momentum_y.is_finite()
    }
}

fn depth_checked(u: &ConservedState, b: f64) -> f64 {
    let h = u.w - b;
    assert!(
        h >= -1e-12,
        "negative depth {h:e} reached the flux evaluation (w = {}, B = {b})",
        u.w
    );
    h.max(0.0)
}

/// Normal velocity `u·n`, zero below the dry threshold.
fn normal_velocity(u: &ConservedState, h: f64, n: [f64; 2], h_eps: f64) -> f64 {
    if h < h_eps {
        0.0
    } else {
        (u.p * n[0] + u.q * n[1]) / h
    }
}

/// Physical flux `H_x n_x + H_y n_y` of the conserved variables.
///
/// Below `h_eps` the velocities are taken as zero; the hydrostatic pressure
/// `g h² / 2` is always kept.
pub fn physical_flux_normal(u: ConservedState, b: f64, n: [f64; 2], h_eps: f64) -> EdgeFlux {
    let h = depth_checked(&u, b);
    let un = normal_velocity(&u, h, n, h_eps);
    let pressure = 0.5 * GRAVITY * h * h;
    EdgeFlux {
        mass: u.p * n[0] + u.q * n[1],
        momentum_x: u.p * un + pressure * n[0],
        momentum_y: u.q * un + pressure * n[1],
    }
}

/// Extreme-eigenvalue (Davis) estimates `(S_L, S_R)`. A side below the dry
/// threshold contributes nothing; both dry gives `(0, 0)`.
pub fn wave_speeds(ul: ConservedState, ur: ConservedState, b: f64, n: [f64; 2], h_eps: f64) -> (f64, f64) {
    let hl = depth_checked(&ul, b);
    let hr = depth_checked(&ur, b);
    let mut s = (f64::INFINITY, f64::NEG_INFINITY);
    for (u, h) in [(&ul, hl), (&ur, hr)] {
        if h >= h_eps {
            let un = normal_velocity(u, h, n, h_eps);
            let c = (GRAVITY * h).sqrt();
            s.0 = s.0.min(un - c);
            s.1 = s.1.max(un + c);
        }
    }
    if s.0 > s.1 {
        (0.0, 0.0)
    } else {
        s
    }
}

/// HLL numerical flux across an edge with normal `n` (pointing from `ul` to
/// `ur`).
pub fn hll_flux(ul: ConservedState, ur: ConservedState, b: f64, n: [f64; 2], h_eps: f64) -> EdgeFlux {
    if ul == ur {
        return physical_flux_normal(ul, b, n, h_eps);
    }
    let (sl, sr) = wave_speeds(ul, ur, b, n, h_eps);
    if sl == 0.0 && sr == 0.0 {
        return EdgeFlux::default();
    }
    debug_assert!(sr >= sl, "HLL wave speeds out of order: {sl} > {sr}");
    if sl >= 0.0 {
        return physical_flux_normal(ul, b, n, h_eps);
    }
    if sr <= 0.0 {
        return physical_flux_normal(ur, b, n, h_eps);
    }
    let fl = physical_flux_normal(ul, b, n, h_eps);
    let fr = physical_flux_normal(ur, b, n, h_eps);
    let inv = 1.0 / (sr - sl);
    let ss = sl * sr;
    EdgeFlux {
        mass: (sr * fl.mass - sl * fr.mass + ss * (ur.w - ul.w)) * inv,
        momentum_x: (sr * fl.momentum_x - sl * fr.momentum_x + ss * (ur.p - ul.p)) * inv,
        momentum_y: (sr * fl.momentum_y - sl * fr.momentum_y + ss * (ur.q - ul.q)) * inv,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_DRY_DEPTH as EPS;
    use proptest::prelude::*;

    const C1: f64 = 3.132091952673165; // sqrt(9.81)

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn still_water_flux() {
        let f = physical_flux_normal(ConservedState::new(1.0, 0.0, 0.0), 0.0, [1.0, 0.0], EPS);
        assert_eq!(f, EdgeFlux { mass: 0.0, momentum_x: 4.905, momentum_y: 0.0 });
    }

    #[test]
    fn moving_water_flux() {
        let f = physical_flux_normal(ConservedState::new(1.0, 2.0, 0.0), 0.0, [1.0, 0.0], EPS);
        assert_eq!(f.mass, 2.0);
        assert!(close(f.momentum_x, 8.905, 1e-14));
        assert_eq!(f.momentum_y, 0.0);
    }

    #[test]
    fn y_normal_matches_hy_column() {
        let (h, p, q, b) = (0.7, 0.3, -0.4, 0.2);
        let u = ConservedState::new(h + b, p, q);
        let f = physical_flux_normal(u, b, [0.0, 1.0], EPS);
        assert!(close(f.mass, q, 1e-15));
        assert!(close(f.momentum_x, p * q / h, 1e-15));
        assert!(close(f.momentum_y, q * q / h + 0.5 * GRAVITY * h * h, 1e-15));
    }

    #[test]
    fn thin_film_keeps_pressure_only() {
        let u = ConservedState::new(5e-7, 1e-3, 0.0);
        let f = physical_flux_normal(u, 0.0, [1.0, 0.0], EPS);
        assert_eq!(f.momentum_x, 0.5 * GRAVITY * 5e-7 * 5e-7);
    }

    #[test]
    fn speeds() {
        let still = ConservedState::new(1.0, 0.0, 0.0);
        let (sl, sr) = wave_speeds(still, still, 0.0, [1.0, 0.0], EPS);
        assert!(close(sl, -C1, 1e-15) && close(sr, C1, 1e-15));
        assert!(close(sl, -3.1321, 1e-4));

        let dry = ConservedState::new(0.0, 0.0, 0.0);
        assert_eq!(wave_speeds(still, dry, 0.0, [1.0, 0.0], EPS), (sl, sr));
        assert_eq!(wave_speeds(dry, dry, 0.0, [1.0, 0.0], EPS), (0.0, 0.0));

        let fast = ConservedState::new(1.0, 5.0, 0.0);
        let (sl, _) = wave_speeds(fast, fast, 0.0, [1.0, 0.0], EPS);
        assert!(close(sl, 5.0 - C1, 1e-15) && sl > 0.0);
    }

    #[test]
    fn hll_consistency_still_water() {
        let u = ConservedState::new(1.0, 0.0, 0.0);
        let n = [0.6, 0.8];
        let f = hll_flux(u, u, 0.0, n, EPS);
        assert_eq!(f.mass, 0.0);
        assert!(close(f.momentum_x, 4.905 * 0.6, 1e-15));
        assert!(close(f.momentum_y, 4.905 * 0.8, 1e-15));
    }

    #[test]
    fn hll_supercritical_takes_left_flux() {
        let ul = ConservedState::new(1.0, 5.0, 0.0);
        let ur = ConservedState::new(1.0, 5.0, 0.1);
        assert_eq!(
            hll_flux(ul, ur, 0.0, [1.0, 0.0], EPS),
            physical_flux_normal(ul, 0.0, [1.0, 0.0], EPS)
        );
    }

    #[test]
    fn hll_dam_break_middle_branch() {
        // independent evaluation of the HLL blend (python, float64)
        let f = hll_flux(
            ConservedState::new(1.0, 0.0, 0.0),
            ConservedState::new(0.1, 0.0, 0.0),
            0.0,
            [1.0, 0.0],
            EPS,
        );
        assert!(close(f.mass, 1.4094413787029243, 1e-14));
        assert!(close(f.momentum_x, 2.4770250000000003, 1e-14));
        assert_eq!(f.momentum_y, 0.0);
    }

    #[test]
    fn hll_both_dry_is_zero() {
        let a = ConservedState::new(0.3, 0.0, 0.0);
        let b = ConservedState::new(0.3 + 1e-8, 0.0, 0.0);
        assert_eq!(hll_flux(a, b, 0.3, [1.0, 0.0], EPS), EdgeFlux::default());
    }

    #[test]
    #[should_panic(expected = "negative depth")]
    fn negative_depth_panics() {
        physical_flux_normal(ConservedState::new(0.0, 0.0, 0.0), 1.0, [1.0, 0.0], EPS);
    }

    fn state() -> impl Strategy<Value = (f64, f64, f64)> {
        (0.0f64..3.0, -4.0f64..4.0, -4.0f64..4.0)
    }

    fn rotate(v: [f64; 2], a: f64) -> [f64; 2] {
        let (s, c) = a.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }

    proptest! {
        #[test]
        fn consistency((h, u, v) in state(), b in -1.0f64..1.0, a in 0.0f64..6.3) {
            let st = ConservedState::new(b + h, h * u, h * v);
            let n = [a.cos(), a.sin()];
            prop_assert_eq!(hll_flux(st, st, b, n, EPS), physical_flux_normal(st, b, n, EPS));
        }

        #[test]
        fn antisymmetry((hl, ul, vl) in state(), (hr, ur, vr) in state(), a in 0.0f64..6.3) {
            let l = ConservedState::new(hl, hl * ul, hl * vl);
            let r = ConservedState::new(hr, hr * ur, hr * vr);
            let n = [a.cos(), a.sin()];
            let f = hll_flux(l, r, 0.0, n, EPS);
            let g = hll_flux(r, l, 0.0, [-n[0], -n[1]], EPS);
            let scale = 1.0 + f.mass.abs() + f.momentum_x.abs() + f.momentum_y.abs();
            prop_assert!((f.mass + g.mass).abs() <= 1e-13 * scale);
            prop_assert!((f.momentum_x + g.momentum_x).abs() <= 1e-13 * scale);
            prop_assert!((f.momentum_y + g.momentum_y).abs() <= 1e-13 * scale);
        }

        #[test]
        fn rotation_invariance((hl, ul, vl) in state(), (hr, ur, vr) in state(), a in 0.0f64..6.3, rot in 0.0f64..6.3) {
            let mk = |h: f64, u: f64, v: f64, r: f64| {
                let vel = rotate([u, v], r);
                ConservedState::new(h, h * vel[0], h * vel[1])
            };
            let n = [a.cos(), a.sin()];
            let f = hll_flux(mk(hl, ul, vl, 0.0), mk(hr, ur, vr, 0.0), 0.0, n, EPS);
            let g = hll_flux(mk(hl, ul, vl, rot), mk(hr, ur, vr, rot), 0.0, rotate(n, rot), EPS);
            let m = rotate([f.momentum_x, f.momentum_y], rot);
            let scale = 1.0 + f.mass.abs() + f.momentum_x.abs() + f.momentum_y.abs();
            prop_assert!((f.mass - g.mass).abs() <= 1e-12 * scale);
            prop_assert!((m[0] - g.momentum_x).abs() <= 1e-12 * scale);
            prop_assert!((m[1] - g.momentum_y).abs() <= 1e-12 * scale);
        }

        #[test]
        fn still_water_mass_flux_is_zero(h in 0.0f64..5.0, b in -2.0f64..2.0, a in 0.0f64..6.3) {
            let st = ConservedState::new(b + h, 0.0, 0.0);
            prop_assert_eq!(hll_flux(st, st, b, [a.cos(), a.sin()], EPS).mass, 0.0);
        }
    }
}
