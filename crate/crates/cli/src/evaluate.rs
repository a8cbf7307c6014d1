//! Bound evaluation shared by `eval` and `sweep`.

use nfcrb::approx::{self, crb_location_approx, crb_rcs_approx, crb_velocity_approx};
use nfcrb::crb::{diagonal_crb, full_crb, Bound, Conditioning, CrbReport};
use nfcrb::fim::{fim, TransmitMode};
use nfcrb::scene::polar_of;
use nfcrb::steering::Axis;
use nfcrb::{Scene, Target};

/// Which number a column reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    /// `1 / F_ii`.
    Exact,
    /// Diagonal of the full inverse.
    Full,
    FarField,
    NearField,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Exact, Variant::Full, Variant::FarField, Variant::NearField];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Exact => "exact",
            Variant::Full => "full",
            Variant::FarField => "ff",
            Variant::NearField => "nf",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        let s = s.to_ascii_lowercase();
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }

    /// Approximations carry a relative error against the exact value.
    pub fn has_relerr(self) -> bool {
        matches!(self, Variant::FarField | Variant::NearField)
    }
}

/// `inf` for divergence, empty for NaN, shortest round-trip scientific otherwise.
pub fn format_number(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:e}")
    }
}

/// Outcome of one bound under one variant.
#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub value: Option<f64>,
    pub relerr: Option<f64>,
    pub error: Option<String>,
}

/// Everything computed once per scene.
pub struct Evaluation {
    pub exact: CrbReport,
    pub full: Option<Result<CrbReport, String>>,
}

impl Evaluation {
    pub fn new(scene: &Scene, with_full: bool) -> nfcrb::Result<Self> {
        let f = fim(scene, &TransmitMode::Isotropic)?;
        let full = with_full.then(|| full_crb(&f).map(|(_, r)| r).map_err(|e| e.to_string()));
        Ok(Evaluation { exact: diagonal_crb(&f), full })
    }

    pub fn cell(&self, scene: &Scene, q: usize, bound: Bound, variant: Variant) -> Cell {
        let exact = self.exact.target(q).get(bound);
        let value = match variant {
            Variant::Exact => Ok(exact),
            Variant::Full => match &self.full {
                Some(Ok(r)) => Ok(r.target(q).get(bound)),
                Some(Err(e)) => Err(format!("full: {e}")),
                None => Err("full: not evaluated".into()),
            },
            Variant::FarField | Variant::NearField => {
                let v = if variant == Variant::FarField { approx::Variant::FarField } else { approx::Variant::NearField };
                let r = match bound {
                    Bound::Rcs => crb_rcs_approx(scene, q, v),
                    Bound::Vx => crb_velocity_approx(scene, q, Axis::X, v),
                    Bound::Vy => crb_velocity_approx(scene, q, Axis::Y, v),
                    Bound::X => crb_location_approx(scene, q, Axis::X, v),
                    Bound::Y => crb_location_approx(scene, q, Axis::Y, v),
                };
                r.map_err(|e| format!("{}_{}: {e}", bound.name(), variant.name()))
            }
        };
        match value {
            Ok(v) => Cell {
                value: Some(v),
                relerr: if variant.has_relerr() { approx::relative_error(v, exact) } else { None },
                error: None,
            },
            Err(e) => Cell { value: None, relerr: None, error: Some(e) },
        }
    }

    /// One-line description of the full-inverse status, if it was computed.
    pub fn conditioning_note(&self) -> Option<String> {
        self.full.as_ref().map(|r| match r {
            Ok(r) => {
                let cond = r.condition_number.map(format_number).unwrap_or_default();
                match r.conditioning {
                    Conditioning::Ok => format!("full inverse: condition number {cond}"),
                    Conditioning::IllConditioned => {
                        format!("full inverse: condition number {cond}, ill-conditioned, values unreliable")
                    }
                }
            }
            Err(e) => format!("full inverse unavailable: {e}"),
        })
    }
}

/// Region of `target` relative to the tx and rx arrays.
pub fn regions(scene: &Scene, target: &Target) -> (String, String) {
    let wl = scene.wavelength();
    let of = |geom| {
        polar_of(target, geom)
            .and_then(|p| geom.region_of(p.range, wl))
            .map(|r| r.as_str().to_string())
            .unwrap_or_default()
    };
    (of(scene.tx()), of(scene.rx()))
}
