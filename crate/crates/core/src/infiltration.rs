//! Green-Ampt infiltration for one- and two-layer soils.
//!
//! The per-cell state is the cumulative infiltrated depth `Ic` [m], the
//! physical volume per unit area that has entered the soil. The wetting
//! front depth follows from it:
//!
//! ```text
//! d_f = Ic / Δθ1                          while Ic <= d1 Δθ1
//! d_f = d1 + (Ic - d1 Δθ1) / Δθ2          below the layer interface
//! ```
//!
//! Within one layer the capacity ODE `dIc/dt = I_r(Ic)` integrates in closed
//! form to an implicit equation for the increment `y` over a step,
//!
//! ```text
//! y = K dt + A ln(1 + y / (S + X))
//! ```
//!
//! with layer-dependent constants; [`solve_increment`] finds its root.

use crate::error::{Error, Result};

/// cm/h to m/s.
pub const CM_PER_HOUR: f64 = 1.0 / 360_000.0;
/// mm/h to m/s.
pub const MM_PER_HOUR: f64 = 1.0 / 3_600_000.0;

const SOLVER_TOL: f64 = 1e-12;
const SOLVER_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoilLayer {
    /// Saturated hydraulic conductivity [m/s].
    pub ks: f64,
    /// Suction head at the wetting front [m].
    pub psi: f64,
    /// Moisture deficit θs − θi.
    pub dtheta: f64,
}

impl SoilLayer {
    pub fn new(ks: f64, psi: f64, dtheta: f64) -> Result<Self> {
        if !(ks > 0.0 && ks.is_finite()) {
            return Err(Error::config("Ks", format!("must be positive, got {ks}")));
        }
        if !(psi >= 0.0 && psi.is_finite()) {
            return Err(Error::config("psi", format!("must be non-negative, got {psi}")));
        }
        if !(dtheta > 0.0 && dtheta < 1.0) {
            return Err(Error::config("dtheta", format!("must lie in (0, 1), got {dtheta}")));
        }
        Ok(Self { ks, psi, dtheta })
    }

    /// Silt loam: ψ = 16.7 cm, Ks = 0.65 cm/h, Δθ = 0.340.
    pub fn silt_loam() -> Self {
        Self { ks: 0.65 * CM_PER_HOUR, psi: 0.167, dtheta: 0.340 }
    }

    /// Sandy loam: ψ = 11.01 cm, Ks = 1.09 cm/h, Δθ = 0.247.
    pub fn sandy_loam() -> Self {
        Self { ks: 1.09 * CM_PER_HOUR, psi: 0.1101, dtheta: 0.247 }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "silt_loam" => Some(Self::silt_loam()),
            "sandy_loam" => Some(Self::sandy_loam()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SoilModel {
    OneLayer(SoilLayer),
    TwoLayer { upper: SoilLayer, lower: SoilLayer, d1: f64 },
}

impl SoilModel {
    pub fn two_layer(upper: SoilLayer, lower: SoilLayer, d1: f64) -> Result<Self> {
        if !(d1 > 0.0 && d1.is_finite()) {
            return Err(Error::config("d1", format!("upper layer thickness must be positive, got {d1}")));
        }
        Ok(SoilModel::TwoLayer { upper, lower, d1 })
    }

    /// Sandy loam 1 mm thick over silt loam.
    pub fn layered_sandy_over_silt() -> Self {
        SoilModel::TwoLayer { upper: SoilLayer::sandy_loam(), lower: SoilLayer::silt_loam(), d1: 0.001 }
    }

    pub fn wetting_front_depth(&self, ic: f64) -> f64 {
        match *self {
            SoilModel::OneLayer(l) => ic / l.dtheta,
            SoilModel::TwoLayer { upper, lower, d1 } => wetting_front_depth(upper, lower, d1, ic),
        }
    }

    /// Infiltration capacity [m/s]; `+inf` before any water has entered.
    pub fn capacity(&self, h_p: f64, ic: f64) -> f64 {
        match *self {
            SoilModel::OneLayer(l) => capacity_one_layer(l, h_p, ic),
            SoilModel::TwoLayer { .. } => capacity_two_layer(self, h_p, ic),
        }
    }

    /// Cumulative infiltration after `dt` of ponded conditions.
    pub fn advance(&self, h_p: f64, ic: f64, dt: f64) -> Result<f64> {
        match *self {
            SoilModel::OneLayer(l) => advance_one_layer(l, h_p, ic, dt),
            SoilModel::TwoLayer { .. } => advance_two_layer(self, h_p, ic, dt),
        }
    }
}

/// Capacity `Ks((ψ + h_p)Δθ/Ic + 1)`.
pub fn capacity_one_layer(layer: SoilLayer, h_p: f64, ic: f64) -> f64 {
    if ic <= 0.0 {
        return f64::INFINITY;
    }
    layer.ks * ((layer.psi + h_p) * layer.dtheta / ic + 1.0)
}

/// `ln(1 + z)`, with a truncated series for the tiny arguments that dominate
/// short steps.
#[inline]
fn ln_1p(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        z * (1.0 - z * (0.5 - z * (1.0 / 3.0 - z * (0.25 - z * (0.2 - z * (1.0 / 6.0))))))
    } else {
        z.ln_1p()
    }
}

/// Solves `y = k_dt + a ln(1 + y/s)` for the increment `y >= 0`.
///
/// This is the exact integral over `dt = k_dt / K` of
/// `dy/dt = K (s + y) / (s - a + y)`, and `f(y) = y - k_dt - a ln(1 + y/s)`
/// is increasing for `y > a - s` and convex for `a > 0`. Newton starts from
/// a second-order Taylor estimate of that ODE, so short steps converge in
/// one iteration; a bracket is kept as a safeguard.
pub fn solve_increment(k_dt: f64, a: f64, s: f64) -> Result<f64> {
    if k_dt == 0.0 {
        return Ok(0.0);
    }
    if a == 0.0 {
        return Ok(k_dt);
    }
    let f = |y: f64| y - k_dt - a * ln_1p(y / s);
    let df = |y: f64| 1.0 - a / (s + y);

    let gap = s - a;
    let mut y = if gap > 0.0 {
        // rate r0 = K s / gap, dr/dy = -K a / gap²
        let r0_dt = k_dt * s / gap;
        let taylor = r0_dt * (1.0 - 0.5 * k_dt * a / (gap * gap));
        if taylor > 0.0 {
            taylor
        } else {
            r0_dt
        }
    } else {
        // front at the surface: y ≈ sqrt(2 A K dt)
        (2.0 * a * k_dt).sqrt() + k_dt
    };
    let (mut lo, mut hi) = (0.0, if a < 0.0 { k_dt } else { f64::INFINITY });
    if !(y < hi) {
        y = 0.5 * hi;
    }
    for _ in 0..SOLVER_MAX_ITER {
        let fy = f(y);
        if fy == 0.0 {
            return Ok(y);
        }
        if fy < 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let mut next = y - fy / df(y);
        if !(next > lo && next < hi) {
            next = if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 * y.max(k_dt) };
        }
        if (next - y).abs() <= SOLVER_TOL || hi - lo <= SOLVER_TOL {
            return Ok(next);
        }
        y = next;
    }
    Err(Error::Numerical(format!(
        "Green-Ampt increment did not converge (K dt = {k_dt:e}, A = {a:e}, S = {s:e})"
    )))
}

/// Implicit one-layer update over a ponded step with constant `h_p`.
pub fn advance_one_layer(layer: SoilLayer, h_p: f64, ic: f64, dt: f64) -> Result<f64> {
    if dt < 0.0 || ic < 0.0 {
        return Err(Error::Numerical(format!("invalid infiltration step: Ic = {ic}, dt = {dt}")));
    }
    let s = layer.dtheta * (layer.psi + h_p);
    Ok(ic + solve_increment(layer.ks * dt, s, s + ic)?)
}

pub(crate) fn wetting_front_depth(upper: SoilLayer, lower: SoilLayer, d1: f64, ic: f64) -> f64 {
    let crossing = d1 * upper.dtheta;
    if ic <= crossing {
        ic / upper.dtheta
    } else {
        d1 + (ic - crossing) / lower.dtheta
    }
}

/// Thickness-weighted harmonic mean conductivity above the wetting front.
pub fn effective_conductivity(model: &SoilModel, d_f: f64) -> f64 {
    match *model {
        SoilModel::OneLayer(l) => l.ks,
        SoilModel::TwoLayer { upper, lower, d1 } => {
            if d_f <= d1 {
                upper.ks
            } else {
                d_f / (d1 / upper.ks + (d_f - d1) / lower.ks)
            }
        }
    }
}

/// Capacity `Ke((ψ + h_p)/d_f + 1)` with ψ of the layer holding the front.
pub fn capacity_two_layer(model: &SoilModel, h_p: f64, ic: f64) -> f64 {
    let d_f = model.wetting_front_depth(ic);
    if d_f <= 0.0 {
        return f64::INFINITY;
    }
    let psi = match *model {
        SoilModel::OneLayer(l) => l.psi,
        SoilModel::TwoLayer { upper, lower, d1 } => {
            if d_f <= d1 {
                upper.psi
            } else {
                lower.psi
            }
        }
    };
    effective_conductivity(model, d_f) * ((psi + h_p) / d_f + 1.0)
}

/// Implicit two-layer update. A step that carries the front across the
/// layer interface is split at the crossing time, which follows in closed
/// form from the upper-layer integral.
pub fn advance_two_layer(model: &SoilModel, h_p: f64, ic: f64, dt: f64) -> Result<f64> {
    let (upper, lower, d1) = match *model {
        SoilModel::OneLayer(l) => return advance_one_layer(l, h_p, ic, dt),
        SoilModel::TwoLayer { upper, lower, d1 } => (upper, lower, d1),
    };
    if dt < 0.0 || ic < 0.0 {
        return Err(Error::Numerical(format!("invalid infiltration step: Ic = {ic}, dt = {dt}")));
    }
    let crossing = d1 * upper.dtheta;
    let (mut ic, mut remaining) = (ic, dt);
    if ic < crossing {
        let s1 = upper.dtheta * (upper.psi + h_p);
        let gap = crossing - ic;
        let log_term = if s1 > 0.0 { s1 * (gap / (s1 + ic)).ln_1p() } else { 0.0 };
        let t_cross = ((gap - log_term) / upper.ks).max(0.0);
        if t_cross >= dt {
            return advance_one_layer(upper, h_p, ic, dt).map(|v| v.min(crossing));
        }
        ic = crossing;
        remaining = dt - t_cross;
    }
    // lower layer in terms of X = Δθ2 d_f, which differs from Ic by a constant
    let offset = d1 * (upper.dtheta - lower.dtheta);
    let x = ic - offset;
    let s = lower.dtheta * (lower.psi + h_p);
    let a = lower.dtheta * (lower.psi + h_p - d1 * (lower.ks / upper.ks - 1.0));
    Ok(ic + solve_increment(lower.ks * remaining, a, s + x)?)
}

/// Rainfall/ponding partition for one cell over one step.
///
/// Returns `(I, Ic_new)`. A cell is treated as ponded when it holds surface
/// water or the rain exceeds the capacity; the ponded rate is the implicit
/// Green-Ampt increment capped by the available depth `h/dt`. Otherwise all
/// rain infiltrates. In both branches `Ic_new = Ic + I dt`.
pub fn step_infiltration_cell(rain: f64, h: f64, model: &SoilModel, ic: f64, dt: f64) -> Result<(f64, f64)> {
    if dt <= 0.0 {
        return Ok((0.0, ic));
    }
    let h = h.max(0.0);
    let ponded = h > 0.0 || rain > model.capacity(h, ic);
    let rate = if ponded {
        let potential = (model.advance(h, ic, dt)? - ic) / dt;
        (h / dt).min(potential)
    } else {
        rain
    };
    Ok((rate, ic + rate * dt))
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CM: f64 = 0.01;

    #[test]
    fn unit_factors() {
        assert_eq!(CM_PER_HOUR, 1.0 / 360000.0);
        assert_eq!(MM_PER_HOUR, 1.0 / 3600000.0);
        assert!((SoilLayer::silt_loam().ks - 1.8056e-6).abs() < 1e-10);
    }

    #[test]
    fn silt_loam_capacity() {
        // 0.65 (16.7 * 0.340 / 1 + 1) cm/h
        let cap = capacity_one_layer(SoilLayer::silt_loam(), 0.0, 1.0 * CM);
        assert!((cap / CM_PER_HOUR - 4.3407).abs() < 1e-12, "{}", cap / CM_PER_HOUR);
    }

    #[test]
    fn capacity_limits() {
        let l = SoilLayer::silt_loam();
        assert_eq!(capacity_one_layer(l, 0.0, 0.0), f64::INFINITY);
        assert!((capacity_one_layer(l, 0.0, 1e15) - l.ks).abs() < 1e-12 * l.ks);
        let two = SoilModel::layered_sandy_over_silt();
        assert_eq!(capacity_two_layer(&two, 0.0, 0.0), f64::INFINITY);
    }

    #[test]
    fn advance_degenerate_cases() {
        let l = SoilLayer::new(2e-6, 0.0, 0.3).unwrap();
        assert_eq!(advance_one_layer(l, 0.0, 0.01, 30.0).unwrap(), 0.01 + 2e-6 * 30.0);
        let l = SoilLayer::silt_loam();
        assert_eq!(advance_one_layer(l, 0.02, 0.003, 0.0).unwrap(), 0.003);
    }

    #[test]
    fn advance_satisfies_implicit_equation() {
        let l = SoilLayer::sandy_loam();
        for (ic, h, dt) in [(0.0, 0.0, 60.0), (1e-4, 0.1, 1e-3), (0.05, 0.02, 3600.0)] {
            let new = advance_one_layer(l, h, ic, dt).unwrap();
            let s = l.dtheta * (l.psi + h);
            let rhs = ic + l.ks * dt + s * ((s + new) / (s + ic)).ln();
            assert!(new > ic);
            assert!((new - rhs).abs() < 1e-14, "{new} vs {rhs}");
        }
    }

    #[test]
    fn one_layer_matches_ode_oracle() {
        let l = SoilLayer::silt_loam();
        let mut ic = 0.0;
        for _ in 0..60 {
            ic = advance_one_layer(l, 0.0, ic, 60.0).unwrap();
        }
        let exact = oracle::rk4_cumulative(&SoilModel::OneLayer(l), 0.0, 3600.0, 0.01);
        assert!(((ic - exact) / exact).abs() < 1e-4, "{ic} vs {exact}");
    }

    #[test]
    fn effective_conductivity_values() {
        let m = SoilModel::two_layer(
            SoilLayer::new(1.09 * CM_PER_HOUR, 0.1101, 0.247).unwrap(),
            SoilLayer::new(0.65 * CM_PER_HOUR, 0.167, 0.340).unwrap(),
            0.1 * CM,
        )
        .unwrap();
        assert_eq!(effective_conductivity(&m, 0.05 * CM), 1.09 * CM_PER_HOUR);
        // 0.2 / (0.1/1.09 + 0.1/0.65)
        let ke = effective_conductivity(&m, 0.2 * CM) / CM_PER_HOUR;
        assert!((ke - 0.8143678160919541).abs() < 1e-12, "{ke}");
        let same = SoilModel::two_layer(SoilLayer::silt_loam(), SoilLayer::silt_loam(), 0.02).unwrap();
        for d in [0.0, 0.01, 0.05, 3.0] {
            assert!((effective_conductivity(&same, d) - SoilLayer::silt_loam().ks).abs() < 1e-20);
        }
    }

    #[test]
    fn two_layer_capacity_below_interface() {
        let m = SoilModel::layered_sandy_over_silt();
        // Ic with d_f = 0.2 cm
        let ic = 0.1 * CM * 0.247 + 0.1 * CM * 0.340;
        assert!((m.wetting_front_depth(ic) - 0.2 * CM).abs() < 1e-15);
        let cap = capacity_two_layer(&m, 0.0, ic) / CM_PER_HOUR;
        assert!((cap - 68.81408045977011).abs() < 1e-9, "{cap}");
    }

    #[test]
    fn identical_layers_reduce_to_one_layer() {
        let l = SoilLayer::sandy_loam();
        let m = SoilModel::two_layer(l, l, 0.004).unwrap();
        for ic in [1e-4, 5e-4, 0.003, 0.02] {
            let (a, b) = (capacity_two_layer(&m, 0.01, ic), capacity_one_layer(l, 0.01, ic));
            assert!((a - b).abs() <= 1e-14 * b, "{a} {b}");
        }
        let (mut a, mut b) = (0.0, 0.0);
        for _ in 0..120 {
            a = advance_two_layer(&m, 0.0, a, 60.0).unwrap();
            b = advance_one_layer(l, 0.0, b, 60.0).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn upper_layer_step_equals_one_layer() {
        let m = SoilModel::two_layer(SoilLayer::sandy_loam(), SoilLayer::silt_loam(), 0.05).unwrap();
        let a = advance_two_layer(&m, 0.01, 1e-3, 10.0).unwrap();
        let b = advance_one_layer(SoilLayer::sandy_loam(), 0.01, 1e-3, 10.0).unwrap();
        assert_eq!(a, b);
        assert!(m.wetting_front_depth(a) < 0.05);
    }

    #[test]
    fn two_layer_matches_ode_oracle() {
        let m = SoilModel::layered_sandy_over_silt();
        let mut ic = 0.0;
        for _ in 0..60 {
            ic = advance_two_layer(&m, 0.0, ic, 60.0).unwrap();
        }
        let exact = oracle::rk4_cumulative(&m, 0.0, 3600.0, 0.01);
        assert!((exact - 0.03174022112466632).abs() < 1e-9, "{exact}");
        assert!(((ic - exact) / exact).abs() < 1e-3, "{ic} vs {exact}");
    }

    #[test]
    fn partition_branches() {
        let m = SoilModel::OneLayer(SoilLayer::silt_loam());
        assert_eq!(step_infiltration_cell(0.0, 0.0, &m, 0.004, 1.0).unwrap(), (0.0, 0.004));
        // rain below capacity infiltrates entirely
        let r = 1e-6;
        let (i, ic) = step_infiltration_cell(r, 0.0, &m, 0.004, 2.0).unwrap();
        assert_eq!((i, ic), (r, 0.004 + r * 2.0));
        // a thin film drains completely
        let (i, ic) = step_infiltration_cell(0.0, 1e-9, &m, 0.004, 0.5).unwrap();
        assert_eq!(i, 1e-9 / 0.5);
        assert_eq!(ic, 0.004 + i * 0.5);
        // deep ponding is capacity-limited
        let (i, ic) = step_infiltration_cell(0.0, 0.1, &m, 0.004, 0.5).unwrap();
        let adv = advance_one_layer(SoilLayer::silt_loam(), 0.1, 0.004, 0.5).unwrap();
        assert!((i - (adv - 0.004) / 0.5).abs() < 1e-20);
        assert!(ic > 0.004);
    }

    proptest! {
        #[test]
        fn capacity_decreases_with_ic(ic in 1e-6f64..0.5, d in 1e-6f64..0.5, h in 0.0f64..0.2) {
            let l = SoilLayer::sandy_loam();
            prop_assert!(capacity_one_layer(l, h, ic + d) < capacity_one_layer(l, h, ic));
        }

        #[test]
        fn advance_is_monotone(ic in 0.0f64..0.2, h in 0.0f64..0.3, dt in 1e-4f64..1e4) {
            for m in [SoilModel::OneLayer(SoilLayer::silt_loam()), SoilModel::layered_sandy_over_silt()] {
                let new = m.advance(h, ic, dt).unwrap();
                prop_assert!(new > ic);
                prop_assert!(new.is_finite());
            }
        }

        #[test]
        fn partition_conserves_mass(r in 0.0f64..1e-4, h in 0.0f64..0.1, ic in 0.0f64..0.1, dt in 1e-3f64..10.0) {
            let m = SoilModel::layered_sandy_over_silt();
            let (i, new) = step_infiltration_cell(r, h, &m, ic, dt).unwrap();
            prop_assert!(i >= 0.0);
            prop_assert!(i * dt <= h.max(r * dt) * (1.0 + 1e-15));
            prop_assert_eq!(new, ic + i * dt);
        }
    }
}
