//! Near-field steering vectors and their analytic parameter derivatives.
//!
//! For target `q` and element `*` with offset `d = p_q - p_*`, range
//! `r = |d|` and radial speed `ρ = <v, d> / r`, entry `n` of a steering vector
//! at slow-time index `m` is
//!
//! ```text
//! a_n(m) = g_n exp(j k (ρ_n m T - r_n)),   g_n = λ / (4π r_n),   k = 2π f_c / c.
//! ```
//!
//! The two exponential factors are evaluated separately so that the small
//! Doppler phase is not swamped by rounding in the large propagation phase.

use crate::error::{degenerate, invalid, Result};
use crate::geometry::Point;
use crate::scene::{ParamKind, PhaseMode, Scene, Target};
use crate::C64;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Tx,
    Rx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn velocity_kind(self) -> ParamKind {
        match self {
            Axis::X => ParamKind::Vx,
            Axis::Y => ParamKind::Vy,
        }
    }

    pub fn location_kind(self) -> ParamKind {
        match self {
            Axis::X => ParamKind::X,
            Axis::Y => ParamKind::Y,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteeringVector {
    pub entries: Vec<C64>,
    pub side: Side,
    pub snapshot: usize,
    pub target_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteeringDerivative {
    pub entries: Vec<C64>,
    /// One of `X`, `Y`, `Vx`, `Vy`.
    pub with_respect_to: ParamKind,
    pub side: Side,
    pub snapshot: usize,
    pub target_index: usize,
}

/// `λ / (4π |p - e|)`.
pub fn pathloss(target: Point, element: Point, wavelength: f64) -> Result<f64> {
    let r = target.distance(element);
    if r == 0.0 {
        return Err(degenerate("pathloss evaluated at zero distance"));
    }
    Ok(wavelength / (4.0 * PI * r))
}

fn radial_speed(target: &Target, element: Point) -> Result<f64> {
    let (dx, dy) = (target.x - element.x, target.y - element.y);
    let r = dx.hypot(dy);
    if r == 0.0 {
        return Err(degenerate("target coincides with an array element"));
    }
    Ok((target.vx * dx + target.vy * dy) / r)
}

/// Bistatic Doppler shift of the path Tx element -> target -> Rx element, Hz.
pub fn doppler_shift(
    target: &Target,
    tx_element: Point,
    rx_element: Point,
    carrier_hz: f64,
    lightspeed: f64,
) -> Result<f64> {
    Ok(carrier_hz / lightspeed * (radial_speed(target, tx_element)? + radial_speed(target, rx_element)?))
}

/// The purely imaginary exponent `j k (ρ m T - r)` of one steering entry.
pub fn phase(target: &Target, element: Point, m: usize, scene: &Scene) -> Result<C64> {
    let r = target.position().distance(element);
    let rho = radial_speed(target, element)?;
    let r = match scene.phase_mode() {
        PhaseMode::Raw => r,
        PhaseMode::Reduced => r.rem_euclid(scene.wavelength()),
    };
    Ok(C64::new(0.0, scene.wavenumber() * (rho * m as f64 * scene.t_sym() - r)))
}

#[derive(Clone, Copy, Debug)]
struct ElementTerms {
    dx: f64,
    dy: f64,
    r: f64,
    gain: f64,
    /// `g exp(-j k r)`.
    base: C64,
    /// `k ρ`, the Doppler phase rate in rad/s.
    doppler_rate: f64,
}

/// Per-element quantities of one array as seen from one target, independent
/// of the snapshot index.
#[derive(Clone, Debug)]
pub struct ArrayResponse {
    k: f64,
    t_sym: f64,
    vx: f64,
    vy: f64,
    side: Side,
    target_index: usize,
    elements: Vec<ElementTerms>,
}

impl ArrayResponse {
    pub fn new(scene: &Scene, side: Side, q: usize) -> Result<Self> {
        let target = scene.target(q)?;
        let geom = match side {
            Side::Tx => scene.tx(),
            Side::Rx => scene.rx(),
        };
        let k = scene.wavenumber();
        let wl = scene.wavelength();
        let elements = geom
            .positions()
            .iter()
            .map(|&e| {
                let (dx, dy) = (target.x - e.x, target.y - e.y);
                let r = dx.hypot(dy);
                if r == 0.0 {
                    return Err(degenerate("target coincides with an array element"));
                }
                let gain = wl / (4.0 * PI * r);
                let prop_range = match scene.phase_mode() {
                    PhaseMode::Raw => r,
                    PhaseMode::Reduced => r.rem_euclid(wl),
                };
                let (s, c) = (k * prop_range).sin_cos();
                Ok(ElementTerms {
                    dx,
                    dy,
                    r,
                    gain,
                    base: C64::new(gain * c, -gain * s),
                    doppler_rate: k * (target.vx * dx + target.vy * dy) / r,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ArrayResponse {
            k,
            t_sym: scene.t_sym(),
            vx: target.vx,
            vy: target.vy,
            side,
            target_index: q,
            elements,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn gains(&self) -> impl Iterator<Item = f64> + '_ {
        self.elements.iter().map(|e| e.gain)
    }

    /// Steering entries at snapshot `m`.
    pub fn steering(&self, m: usize) -> Vec<C64> {
        let t = m as f64 * self.t_sym;
        self.elements
            .iter()
            .map(|e| e.base * C64::from_polar(1.0, e.doppler_rate * t))
            .collect()
    }

    /// Multiplier turning steering entry `n` at snapshot `m` into its
    /// derivative with respect to `kind` (one of x, y, vx, vy).
    fn factor(&self, e: &ElementTerms, m: usize, kind: ParamKind) -> C64 {
        let mt = m as f64 * self.t_sym;
        let k = self.k;
        let r = e.r;
        match kind {
            ParamKind::Vx => C64::new(0.0, k * mt * e.dx / r),
            ParamKind::Vy => C64::new(0.0, k * mt * e.dy / r),
            ParamKind::X => {
                let r3 = r * r * r;
                let doppler = mt * (self.vx * e.dx * e.dx + self.vy * e.dx * e.dy) / r3;
                C64::new(-e.dx / (r * r), k * ((self.vx * mt - e.dx) / r - doppler))
            }
            ParamKind::Y => {
                let r3 = r * r * r;
                let doppler = mt * (self.vy * e.dy * e.dy + self.vx * e.dx * e.dy) / r3;
                C64::new(-e.dy / (r * r), k * ((self.vy * mt - e.dy) / r - doppler))
            }
            ParamKind::AlphaR | ParamKind::AlphaI => C64::new(0.0, 0.0),
        }
    }

    /// Derivative of the steering vector at snapshot `m` with respect to a
    /// location or velocity parameter of this target.
    pub fn derivative(&self, m: usize, kind: ParamKind) -> Result<Vec<C64>> {
        if matches!(kind, ParamKind::AlphaR | ParamKind::AlphaI) {
            return Err(invalid("steering vectors do not depend on the reflectivity"));
        }
        let a = self.steering(m);
        Ok(self
            .elements
            .iter()
            .zip(a)
            .map(|(e, a)| self.factor(e, m, kind) * a)
            .collect())
    }

    /// Steering vector and its four derivatives `[x, y, vx, vy]` at snapshot `m`.
    pub fn with_derivatives(&self, m: usize) -> (Vec<C64>, [Vec<C64>; 4]) {
        let a = self.steering(m);
        let kinds = [ParamKind::X, ParamKind::Y, ParamKind::Vx, ParamKind::Vy];
        let d = kinds.map(|kind| {
            self.elements
                .iter()
                .zip(&a)
                .map(|(e, a)| self.factor(e, m, kind) * a)
                .collect()
        });
        (a, d)
    }

    fn wrap(&self, entries: Vec<C64>, m: usize) -> SteeringVector {
        SteeringVector {
            entries,
            side: self.side,
            snapshot: m,
            target_index: self.target_index,
        }
    }
}

pub fn steering_vector(scene: &Scene, side: Side, m: usize, q: usize) -> Result<SteeringVector> {
    let resp = ArrayResponse::new(scene, side, q)?;
    Ok(resp.wrap(resp.steering(m), m))
}

fn derivative(scene: &Scene, side: Side, m: usize, q: usize, kind: ParamKind) -> Result<SteeringDerivative> {
    let resp = ArrayResponse::new(scene, side, q)?;
    Ok(SteeringDerivative {
        entries: resp.derivative(m, kind)?,
        with_respect_to: kind,
        side,
        snapshot: m,
        target_index: q,
    })
}

/// `∂a/∂v_axis`: entry factor `j k m T (p_axis - e_axis) / r`.
pub fn d_steering_velocity(scene: &Scene, side: Side, m: usize, q: usize, axis: Axis) -> Result<SteeringDerivative> {
    derivative(scene, side, m, q, axis.velocity_kind())
}

/// `∂a/∂p_axis`, including the pathloss gradient and the Doppler-curvature
/// terms of the radial speed.
pub fn d_steering_location(scene: &Scene, side: Side, m: usize, q: usize, axis: Axis) -> Result<SteeringDerivative> {
    derivative(scene, side, m, q, axis.location_kind())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ArrayGeometry;
    use crate::scene::SceneConfig;
    use approx::assert_relative_eq;

    fn scene_with(n: usize, target: Target) -> Scene {
        let mut c = SceneConfig::default();
        c.tx = ArrayGeometry::ula(n, 0.01, 0.0).unwrap();
        c.rx = c.tx.clone();
        c.snapshots = 8;
        c.t_sym_s = 1e-4;
        c.targets = vec![target];
        Scene::new(c).unwrap()
    }

    fn moving() -> Target {
        Target { x: 34.2, y: 94.0, vx: 3.0, vy: -7.0, rcs_re: 1.0, rcs_im: 0.1 }
    }

    #[test]
    fn pathloss_values() {
        assert_relative_eq!(pathloss(Point::new(0.0, 1.0), Point::default(), 4.0 * PI).unwrap(), 1.0);
        assert_relative_eq!(
            pathloss(Point::new(0.0, 100.0), Point::default(), 0.02).unwrap(),
            1.591_549_430_918_953_4e-5,
            max_relative = 1e-14
        );
        let a = pathloss(Point::new(3.0, 4.0), Point::default(), 0.02).unwrap();
        let b = pathloss(Point::new(6.0, 8.0), Point::default(), 0.02).unwrap();
        assert_relative_eq!(a, 2.0 * b, max_relative = 1e-15);
        assert!(pathloss(Point::default(), Point::default(), 0.02).is_err());
    }

    #[test]
    fn doppler_values() {
        let o = Point::default();
        let t = Target { y: 100.0, vx: 5.0, ..Default::default() };
        assert_eq!(doppler_shift(&t, o, o, 15e9, 3e8).unwrap(), 0.0);
        let t = Target { y: 100.0, vy: -10.0, ..Default::default() };
        assert_relative_eq!(doppler_shift(&t, o, o, 15e9, 3e8).unwrap(), -1000.0, max_relative = 1e-14);
        let t = Target { x: 3.0, y: 100.0, ..Default::default() };
        assert_eq!(doppler_shift(&t, o, o, 15e9, 3e8).unwrap(), 0.0);
        assert!(doppler_shift(&Target::default(), o, o, 15e9, 3e8).is_err());
    }

    #[test]
    fn phase_values() {
        let scene = scene_with(1, Target { y: 100.0, rcs_re: 1.0, ..Default::default() });
        let wl = scene.wavelength();
        let t = Target { y: wl, ..Default::default() };
        let p = phase(&t, Point::new(0.0, 0.0), 3, &scene).unwrap();
        assert_eq!(p.re, 0.0);
        assert_relative_eq!(p.im, -2.0 * PI, max_relative = 1e-14);
        let static_t = Target { x: 1.0, y: 50.0, ..Default::default() };
        assert_eq!(
            phase(&static_t, Point::default(), 1, &scene).unwrap(),
            phase(&static_t, Point::default(), 9, &scene).unwrap()
        );

        let t = moving();
        let e = Point::new(0.02, 0.0);
        let step = phase(&t, e, 2, &scene).unwrap() - phase(&t, e, 1, &scene).unwrap();
        // single-path Doppler (f_c / c) <v, d> / r
        let d = (t.x - e.x, t.y - e.y);
        let f = scene.carrier_hz() / scene.lightspeed() * (t.vx * d.0 + t.vy * d.1) / d.0.hypot(d.1);
        assert_relative_eq!(step.im, 2.0 * PI * f * scene.t_sym(), max_relative = 1e-6);
    }

    #[test]
    fn single_element_vector() {
        let scene = scene_with(1, Target { y: 100.0, rcs_re: 1.0, ..Default::default() });
        let a = steering_vector(&scene, Side::Tx, 1, 0).unwrap();
        assert_eq!(a.entries.len(), 1);
        let g = 1.591_549_430_918_953_4e-5;
        let expected = C64::from_polar(g, -2.0 * PI * 100.0 / 0.02);
        // k r is about 3e4 rad, so a few ulps of phase are allowed
        assert_relative_eq!(a.entries[0].re, expected.re, epsilon = 1e-10 * g);
        assert_relative_eq!(a.entries[0].im, expected.im, epsilon = 1e-10 * g);
        assert_relative_eq!(a.entries[0].norm(), g, max_relative = 1e-14);
    }

    #[test]
    fn entry_modulus_is_pathloss() {
        let scene = scene_with(16, moving());
        for side in [Side::Tx, Side::Rx] {
            for m in [1, 4, 8] {
                let a = steering_vector(&scene, side, m, 0).unwrap();
                for (entry, e) in a.entries.iter().zip(scene.tx().positions()) {
                    let g = pathloss(moving().position(), *e, scene.wavelength()).unwrap();
                    assert_relative_eq!(entry.norm(), g, max_relative = 1e-13);
                }
            }
        }
    }

    #[test]
    fn static_target_is_snapshot_invariant() {
        let scene = scene_with(8, Target { x: 10.0, y: 40.0, rcs_re: 1.0, ..Default::default() });
        let a1 = steering_vector(&scene, Side::Rx, 1, 0).unwrap().entries;
        let a7 = steering_vector(&scene, Side::Rx, 7, 0).unwrap().entries;
        assert_eq!(a1, a7);
    }

    #[test]
    fn velocity_derivative_factor() {
        let scene = scene_with(4, moving());
        let a = steering_vector(&scene, Side::Tx, 3, 0).unwrap();
        let d = d_steering_velocity(&scene, Side::Tx, 3, 0, Axis::X).unwrap();
        for ((da, a), e) in d.entries.iter().zip(&a.entries).zip(scene.tx().positions()) {
            let r = moving().position().distance(*e);
            let expected = scene.wavenumber() * 3.0 * scene.t_sym() * (moving().x - e.x).abs() / r * a.norm();
            assert_relative_eq!(da.norm(), expected, max_relative = 1e-12);
        }
        // broadside element: zero lateral offset
        let scene = scene_with(1, Target { y: 50.0, vx: 2.0, rcs_re: 1.0, ..Default::default() });
        let d = d_steering_velocity(&scene, Side::Rx, 5, 0, Axis::X).unwrap();
        assert_eq!(d.entries[0].norm(), 0.0);
    }

    #[test]
    fn velocity_derivative_is_linear_in_snapshot() {
        let scene = scene_with(4, moving());
        let resp = ArrayResponse::new(&scene, Side::Rx, 0).unwrap();
        let d0 = resp.derivative(0, ParamKind::Vy).unwrap();
        assert!(d0.iter().all(|z| z.norm() == 0.0));
        let d2 = resp.derivative(2, ParamKind::Vy).unwrap();
        let d6 = resp.derivative(6, ParamKind::Vy).unwrap();
        for ((a, b), (s2, s6)) in d2.iter().zip(&d6).zip(resp.steering(2).iter().zip(resp.steering(6))) {
            // factor ratio, not entry ratio: the steering phase also moves with m
            assert_relative_eq!((b / s6).im, 3.0 * (a / s2).im, max_relative = 1e-12);
        }
    }

    #[test]
    fn static_location_factor() {
        let t = Target { x: 12.0, y: 30.0, rcs_re: 1.0, ..Default::default() };
        let scene = scene_with(3, t);
        let resp = ArrayResponse::new(&scene, Side::Tx, 0).unwrap();
        let a = resp.steering(4);
        let d = resp.derivative(4, ParamKind::X).unwrap();
        for ((d, a), e) in d.iter().zip(&a).zip(scene.tx().positions()) {
            let dx = t.x - e.x;
            let r = t.position().distance(*e);
            let f = C64::new(-dx / (r * r), -scene.wavenumber() * dx / r);
            let expected = f * a;
            assert_relative_eq!(d.re, expected.re, max_relative = 1e-12);
            assert_relative_eq!(d.im, expected.im, max_relative = 1e-12);
        }

        let broadside = scene_with(1, Target { y: 30.0, rcs_re: 1.0, ..Default::default() });
        let d = d_steering_location(&broadside, Side::Rx, 2, 0, Axis::X).unwrap();
        assert_eq!(d.entries[0].norm(), 0.0);
    }

    #[test]
    fn reduced_phase_mode_matches_raw() {
        let raw = scene_with(8, moving());
        let reduced = raw.modified(|c| c.phase_mode = PhaseMode::Reduced).unwrap();
        let a = steering_vector(&raw, Side::Tx, 5, 0).unwrap().entries;
        let b = steering_vector(&reduced, Side::Tx, 5, 0).unwrap().entries;
        for (a, b) in a.iter().zip(&b) {
            assert!((a - b).norm() <= 1e-9 * a.norm());
        }
    }

    #[test]
    fn reflectivity_has_no_steering_derivative() {
        let scene = scene_with(2, moving());
        let resp = ArrayResponse::new(&scene, Side::Tx, 0).unwrap();
        assert!(resp.derivative(1, ParamKind::AlphaR).is_err());
        assert!(steering_vector(&scene, Side::Tx, 1, 3).is_err());
    }
}
