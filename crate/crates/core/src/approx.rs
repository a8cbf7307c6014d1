//! Far-field and near-field closed-form approximations of the single-target
//! bounds, and the second-order correction terms behind them.
//!
//! Every expression uses the range `r` and angle `θ` of the target measured
//! from each array's own centroid (see [`crate::scene::polar_of`]), with
//! `θ` taken from the array broadside (+y) towards +x. The expansions assume
//! a uniform linear array along the x axis with the array's element spacing.

use crate::error::{Error, Result};
use crate::geometry::ArrayGeometry;
use crate::scene::{polar_of, Polar, Scene, Target};
use crate::steering::Axis;
use std::f64::consts::PI;

/// Angle factors with magnitude below this are treated as zero.
pub const ANGLE_FACTOR_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Direct element summation.
    Exact,
    FarField,
    NearField,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::FarField => "ff",
            Variant::NearField => "nf",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Some(Variant::Exact),
            "ff" => Some(Variant::FarField),
            "nf" => Some(Variant::NearField),
            _ => None,
        }
    }
}

/// Element-sum gain `g = Σ 1/r_n²` of one array and `G = λ² g / 16π²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArrayGain {
    pub g: f64,
    pub big_g: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainTerms {
    pub g_tx: f64,
    pub g_rx: f64,
    pub big_g_tx: f64,
    pub big_g_rx: f64,
    pub variant: Variant,
}

fn aperture_ratio(geom: &ArrayGeometry, range: f64) -> f64 {
    let n = geom.count() as f64;
    let d = geom.spacing();
    (n * n - 1.0) * d * d / (range * range)
}

/// Gain of `geom` towards `target` under the given variant.
pub fn gain(geom: &ArrayGeometry, target: &Target, wavelength: f64, variant: Variant) -> Result<ArrayGain> {
    let Polar { range, angle } = polar_of(target, geom)?;
    let n = geom.count() as f64;
    let g = match variant {
        Variant::Exact => {
            let p = target.position();
            let mut sum = 0.0;
            for e in geom.positions() {
                let r2 = {
                    let (dx, dy) = (p.x - e.x, p.y - e.y);
                    dx * dx + dy * dy
                };
                if r2 == 0.0 {
                    return Err(Error::DegenerateGeometry("target coincides with an element".into()));
                }
                sum += 1.0 / r2;
            }
            sum
        }
        Variant::FarField => n / (range * range),
        Variant::NearField => {
            let s = angle.sin();
            n / (range * range) * (1.0 + aperture_ratio(geom, range) * (4.0 * s * s - 1.0) / 12.0)
        }
    };
    Ok(ArrayGain {
        g,
        big_g: wavelength * wavelength * g / (16.0 * PI * PI),
    })
}

pub fn gain_terms(scene: &Scene, q: usize, variant: Variant) -> Result<GainTerms> {
    let t = scene.target(q)?;
    let tx = gain(scene.tx(), t, scene.wavelength(), variant)?;
    let rx = gain(scene.rx(), t, scene.wavelength(), variant)?;
    Ok(GainTerms {
        g_tx: tx.g,
        g_rx: rx.g,
        big_g_tx: tx.big_g,
        big_g_rx: rx.big_g,
        variant,
    })
}

/// Near-field correction factors for one target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionTerms {
    pub delta_tx: f64,
    pub delta_rx: f64,
    pub a_tx: f64,
    pub a_rx: f64,
    pub b_tx_x: f64,
    pub b_rx_x: f64,
    pub b_tx_y: f64,
    pub b_rx_y: f64,
    pub delta_nf_x_tx: f64,
    pub delta_nf_x_rx: f64,
    pub delta_nf_y_tx: f64,
    pub delta_nf_y_rx: f64,
    pub phi_x: f64,
    pub phi_y: f64,
    /// Infinite when `(sinθ_T + sinθ_R)²` vanishes.
    pub psi_x: f64,
    /// Infinite when `(cosθ_T + cosθ_R)²` vanishes.
    pub psi_y: f64,
    pub c_m: f64,
}

/// `M (M + 1) (2M + 1) / 6`.
pub fn c_m(snapshots: usize) -> f64 {
    let m = snapshots as f64;
    m * (m + 1.0) * (2.0 * m + 1.0) / 6.0
}

struct SideTerms {
    polar: Polar,
    n: f64,
    delta: f64,
    a: f64,
    b_x: f64,
    b_y: f64,
    dnf_x: f64,
    dnf_y: f64,
}

fn side_terms(geom: &ArrayGeometry, target: &Target) -> Result<SideTerms> {
    let polar = polar_of(target, geom)?;
    let ratio = aperture_ratio(geom, polar.range);
    let xi = ratio / 12.0;
    let (s, c) = polar.angle.sin_cos();
    let (s2, c2) = (s * s, c * c);
    let delta = xi * (4.0 * s2 - 1.0);
    Ok(SideTerms {
        polar,
        n: geom.count() as f64,
        delta,
        a: 1.0 + delta,
        b_x: s2 + xi * (12.0 * s2 * s2 - 10.0 * s2 + 1.0),
        b_y: c2 + xi * c2 * (12.0 * s2 - 2.0),
        dnf_x: ratio / 8.0 * (5.0 * s2 - 3.0),
        dnf_y: ratio / 8.0 * (5.0 * s2 - 1.0),
    })
}

fn ratio_or_inf(num: f64, den: f64) -> f64 {
    if den.abs() < ANGLE_FACTOR_FLOOR {
        f64::INFINITY
    } else {
        num / den
    }
}

fn angle_factor(t: &SideTerms, r: &SideTerms, axis: Axis) -> f64 {
    let f = |p: &Polar| match axis {
        Axis::X => p.angle.sin(),
        Axis::Y => p.angle.cos(),
    };
    let sum = f(&t.polar) + f(&r.polar);
    sum * sum
}

pub fn correction_terms(scene: &Scene, q: usize) -> Result<CorrectionTerms> {
    let target = scene.target(q)?;
    let t = side_terms(scene.tx(), target)?;
    let r = side_terms(scene.rx(), target)?;
    let (st, ct) = t.polar.angle.sin_cos();
    let (sr, cr) = r.polar.angle.sin_cos();
    let phi_x = t.a * r.b_x + r.a * t.b_x + 2.0 * st * sr * (1.0 + t.dnf_x + r.dnf_x);
    let phi_y = t.a * r.b_y + r.a * t.b_y + 2.0 * ct * cr * (1.0 + t.dnf_y + r.dnf_y);
    Ok(CorrectionTerms {
        delta_tx: t.delta,
        delta_rx: r.delta,
        a_tx: t.a,
        a_rx: r.a,
        b_tx_x: t.b_x,
        b_rx_x: r.b_x,
        b_tx_y: t.b_y,
        b_rx_y: r.b_y,
        delta_nf_x_tx: t.dnf_x,
        delta_nf_x_rx: r.dnf_x,
        delta_nf_y_tx: t.dnf_y,
        delta_nf_y_rx: r.dnf_y,
        phi_x,
        phi_y,
        psi_x: ratio_or_inf(phi_x, angle_factor(&t, &r, Axis::X)),
        psi_y: ratio_or_inf(phi_y, angle_factor(&t, &r, Axis::Y)),
        c_m: c_m(scene.snapshots()),
    })
}

/// Closed-form `CRB_α = CRB_αR + CRB_αI`. Only the far-field and near-field
/// variants are accepted.
pub fn crb_rcs_approx(scene: &Scene, q: usize, variant: Variant) -> Result<f64> {
    let target = scene.target(q)?;
    let t = side_terms(scene.tx(), target)?;
    let r = side_terms(scene.rx(), target)?;
    let lambda = scene.wavelength();
    let base = 256.0 * scene.noise_var() * PI.powi(4) * (t.polar.range * r.polar.range).powi(2)
        / (scene.power() * scene.snapshots() as f64 * t.n * r.n * lambda.powi(4));
    match variant {
        Variant::FarField => Ok(base),
        Variant::NearField => {
            if t.a <= 0.0 || r.a <= 0.0 {
                return Err(Error::ApproximationOutOfDomain(format!(
                    "1 + Δ is {:.3e} (Tx) and {:.3e} (Rx); the target is too close for the expansion",
                    t.a, r.a
                )));
            }
            Ok(base / (t.a * r.a))
        }
        Variant::Exact => Err(exact_not_closed_form()),
    }
}

fn exact_not_closed_form() -> Error {
    Error::InvalidArgument("the exact variant has no closed form; use the Fisher matrix".into())
}

/// Shared kinematic form `32π²σ²(r_T r_R)² / (|α|² P N_t N_r S λ² Φ)`, where
/// `S` is the slow-time factor and `Φ` is the squared angle sum (far field)
/// or the corrected numerator (near field).
fn kinematic(scene: &Scene, q: usize, axis: Axis, variant: Variant, slow_time: f64) -> Result<f64> {
    let target = scene.target(q)?;
    let alpha2 = target.rcs().norm_sqr();
    if alpha2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    let t = side_terms(scene.tx(), target)?;
    let r = side_terms(scene.rx(), target)?;
    let lambda = scene.wavelength();
    let numerator = 32.0 * PI * PI * scene.noise_var() * (t.polar.range * r.polar.range).powi(2);
    let prefix = alpha2 * scene.power() * t.n * r.n * slow_time * lambda * lambda;
    let factor = match variant {
        Variant::FarField => angle_factor(&t, &r, axis),
        Variant::NearField => {
            let c = correction_terms(scene, q)?;
            let phi = match axis {
                Axis::X => c.phi_x,
                Axis::Y => c.phi_y,
            };
            if phi < -ANGLE_FACTOR_FLOOR {
                return Err(Error::ApproximationOutOfDomain(format!(
                    "corrected angle factor is negative ({phi:.3e})"
                )));
            }
            phi
        }
        Variant::Exact => return Err(exact_not_closed_form()),
    };
    Ok(ratio_or_inf(numerator, prefix * factor).max(0.0))
}

pub fn crb_velocity_approx(scene: &Scene, q: usize, axis: Axis, variant: Variant) -> Result<f64> {
    let t = scene.t_sym();
    kinematic(scene, q, axis, variant, t * t * c_m(scene.snapshots()))
}

pub fn crb_location_approx(scene: &Scene, q: usize, axis: Axis, variant: Variant) -> Result<f64> {
    kinematic(scene, q, axis, variant, scene.snapshots() as f64)
}

/// `|approx - truth| / |truth|`. `None` when the truth is zero or not
/// finite; an infinite approximation of a finite truth gives infinity.
pub fn relative_error(approx: f64, truth: f64) -> Option<f64> {
    if !truth.is_finite() || truth == 0.0 || approx.is_nan() {
        return None;
    }
    if approx.is_infinite() {
        return Some(f64::INFINITY);
    }
    Some(((approx - truth) / truth).abs())
}
