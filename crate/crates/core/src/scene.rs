//! Physical scenario: waveform constants, arrays, targets, and the real
//! parameter vector `[x.., y.., vx.., vy.., αR.., αI..]`.

use crate::error::{degenerate, invalid, Result};
use crate::geometry::{ArrayGeometry, Point};
use crate::C64;

/// Speed of light used by the reference configuration.
pub const REFERENCE_LIGHTSPEED: f64 = 3.0e8;
/// Exact SI speed of light.
pub const SI_LIGHTSPEED: f64 = 299_792_458.0;

/// Minimum allowed target-to-element distance.
pub const MIN_ELEMENT_DISTANCE: f64 = 1e-6;
/// Threshold on `|v| M T_sym / min range` above which the small-displacement
/// assumption is flagged.
pub const DISPLACEMENT_WARN_RATIO: f64 = 1e-2;

/// A point scatterer with constant velocity and constant complex reflectivity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Target {
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub rcs_re: f64,
    pub rcs_im: f64,
}

impl Target {
    pub fn new(position: Point, velocity: (f64, f64), rcs: C64) -> Self {
        Target {
            x: position.x,
            y: position.y,
            vx: velocity.0,
            vy: velocity.1,
            rcs_re: rcs.re,
            rcs_im: rcs.im,
        }
    }

    /// Places a target at `range` and `angle` (radians from broadside, i.e.
    /// from the +y axis towards +x) about `origin`.
    pub fn at_polar(origin: Point, range: f64, angle: f64, velocity: (f64, f64), rcs: C64) -> Self {
        let (s, c) = angle.sin_cos();
        Target::new(
            Point::new(origin.x + range * s, origin.y + range * c),
            velocity,
            rcs,
        )
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn rcs(&self) -> C64 {
        C64::new(self.rcs_re, self.rcs_im)
    }

    pub fn speed(&self) -> f64 {
        self.vx.hypot(self.vy)
    }

    /// Rigid rotation of position and velocity about the origin.
    pub fn rotated(&self, angle: f64) -> Self {
        let p = self.position().rotated(angle);
        let v = Point::new(self.vx, self.vy).rotated(angle);
        Target {
            x: p.x,
            y: p.y,
            vx: v.x,
            vy: v.y,
            ..*self
        }
    }
}

/// Range and broadside angle of a target with respect to one array centroid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polar {
    pub range: f64,
    pub angle: f64,
}

/// `r = |(x - cx, y - cy)|`, `θ = atan2(x - cx, y - cy)`.
pub fn polar_of(target: &Target, geom: &ArrayGeometry) -> Result<Polar> {
    let c = geom.centroid();
    let (dx, dy) = (target.x - c.x, target.y - c.y);
    let range = dx.hypot(dy);
    if range == 0.0 {
        return Err(degenerate("target sits on the array centroid"));
    }
    Ok(Polar {
        range,
        angle: dx.atan2(dy),
    })
}

/// `10^((dBm - 30) / 10)` watts.
pub fn dbm_to_watts(level_dbm: f64) -> f64 {
    10f64.powf((level_dbm - 30.0) / 10.0)
}

/// Inputs to [`Scene::new`]. `Default` yields the reference monostatic setup:
/// 15 GHz carrier, 256 snapshots, two co-located 256-element half-wavelength
/// ULAs, 0.1 W transmit power, -114 dBm noise, and one target at 100 m / 20°
/// moving at (1, 4) m/s with reflectivity 1 + 0.1j.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneConfig {
    pub carrier_hz: f64,
    pub lightspeed: f64,
    pub t_sym_s: f64,
    pub snapshots: usize,
    pub power_w: f64,
    pub noise_var_w: f64,
    pub tx: ArrayGeometry,
    pub rx: ArrayGeometry,
    pub targets: Vec<Target>,
    pub phase_mode: PhaseMode,
}

/// How the propagation phase `k r` is evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PhaseMode {
    /// Use the raw argument `k r`.
    #[default]
    Raw,
    /// Reduce the range modulo the wavelength first. Useful for very long
    /// ranges where `k r` loses absolute phase precision.
    Reduced,
}

pub const DEFAULT_CARRIER_HZ: f64 = 15e9;
pub const DEFAULT_SNAPSHOTS: usize = 256;
pub const DEFAULT_ELEMENTS: usize = 256;
pub const DEFAULT_POWER_W: f64 = 0.1;
pub const DEFAULT_NOISE_DBM: f64 = -114.0;
pub const DEFAULT_T_SYM_S: f64 = 1e-7;
pub const DEFAULT_RANGE_M: f64 = 100.0;
pub const DEFAULT_ANGLE_DEG: f64 = 20.0;
pub const DEFAULT_VELOCITY: (f64, f64) = (1.0, 4.0);
pub const DEFAULT_RCS: C64 = C64::new(1.0, 0.1);

impl SceneConfig {
    pub fn wavelength(&self) -> f64 {
        self.lightspeed / self.carrier_hz
    }

    /// The reference target at 100 m, 20° from the origin.
    pub fn default_target() -> Target {
        Target::at_polar(
            Point::default(),
            DEFAULT_RANGE_M,
            DEFAULT_ANGLE_DEG.to_radians(),
            DEFAULT_VELOCITY,
            DEFAULT_RCS,
        )
    }
}

impl Default for SceneConfig {
    fn default() -> Self {
        let wavelength = REFERENCE_LIGHTSPEED / DEFAULT_CARRIER_HZ;
        let ula = ArrayGeometry::ula(DEFAULT_ELEMENTS, wavelength / 2.0, 0.0)
            .expect("reference array is valid");
        SceneConfig {
            carrier_hz: DEFAULT_CARRIER_HZ,
            lightspeed: REFERENCE_LIGHTSPEED,
            t_sym_s: DEFAULT_T_SYM_S,
            snapshots: DEFAULT_SNAPSHOTS,
            power_w: DEFAULT_POWER_W,
            noise_var_w: dbm_to_watts(DEFAULT_NOISE_DBM),
            tx: ula.clone(),
            rx: ula,
            targets: vec![SceneConfig::default_target()],
            phase_mode: PhaseMode::Raw,
        }
    }
}

/// A validated scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    config: SceneConfig,
    wavelength: f64,
    displacement_ratio: f64,
}

impl Scene {
    pub fn new(config: SceneConfig) -> Result<Self> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        positive("carrier frequency", config.carrier_hz)?;
        positive("speed of light", config.lightspeed)?;
        positive("symbol interval", config.t_sym_s)?;
        positive("transmit power", config.power_w)?;
        positive("noise variance", config.noise_var_w)?;
        if config.snapshots == 0 {
            return Err(invalid("snapshot count must be at least 1"));
        }
        if config.targets.is_empty() {
            return Err(invalid("scene needs at least one target"));
        }

        let mut min_range = f64::INFINITY;
        for (q, t) in config.targets.iter().enumerate() {
            let finite = [t.x, t.y, t.vx, t.vy, t.rcs_re, t.rcs_im]
                .iter()
                .all(|v| v.is_finite());
            if !finite {
                return Err(invalid(format!("target {} has non-finite parameters", q + 1)));
            }
            let p = t.position();
            for e in config.tx.positions().iter().chain(config.rx.positions()) {
                let d = p.distance(*e);
                if d <= MIN_ELEMENT_DISTANCE {
                    return Err(degenerate(format!(
                        "target {} coincides with an array element at ({}, {})",
                        q + 1,
                        e.x,
                        e.y
                    )));
                }
                min_range = min_range.min(d);
            }
        }

        let cpi = config.snapshots as f64 * config.t_sym_s;
        let displacement_ratio = config
            .targets
            .iter()
            .map(|t| t.speed() * cpi / min_range)
            .fold(0.0, f64::max);
        let wavelength = config.wavelength();
        Ok(Scene {
            config,
            wavelength,
            displacement_ratio,
        })
    }

    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    pub fn into_config(self) -> SceneConfig {
        self.config
    }

    pub fn carrier_hz(&self) -> f64 {
        self.config.carrier_hz
    }

    pub fn lightspeed(&self) -> f64 {
        self.config.lightspeed
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// `2π f_c / c`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.config.carrier_hz / self.config.lightspeed
    }

    pub fn phase_mode(&self) -> PhaseMode {
        self.config.phase_mode
    }

    pub fn t_sym(&self) -> f64 {
        self.config.t_sym_s
    }

    pub fn snapshots(&self) -> usize {
        self.config.snapshots
    }

    pub fn power(&self) -> f64 {
        self.config.power_w
    }

    pub fn noise_var(&self) -> f64 {
        self.config.noise_var_w
    }

    pub fn tx(&self) -> &ArrayGeometry {
        &self.config.tx
    }

    pub fn rx(&self) -> &ArrayGeometry {
        &self.config.rx
    }

    pub fn targets(&self) -> &[Target] {
        &self.config.targets
    }

    pub fn target(&self, q: usize) -> Result<&Target> {
        self.config
            .targets
            .get(q)
            .ok_or_else(|| invalid(format!("target index {q} out of range (Q = {})", self.num_targets())))
    }

    pub fn num_targets(&self) -> usize {
        self.config.targets.len()
    }

    /// `M T_sym`.
    pub fn cpi(&self) -> f64 {
        self.config.snapshots as f64 * self.config.t_sym_s
    }

    /// Largest `|v| M T_sym / min range` over targets.
    pub fn displacement_ratio(&self) -> f64 {
        self.displacement_ratio
    }

    /// Human-readable warnings about modelling assumptions that do not hold.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.displacement_ratio > DISPLACEMENT_WARN_RATIO {
            out.push(format!(
                "target displacement over the CPI is {:.3e} of the minimum range (> {:.0e}); \
                 snapshot-invariant pathloss may not hold",
                self.displacement_ratio, DISPLACEMENT_WARN_RATIO
            ));
        }
        out
    }

    /// Rebuilds the scene with different targets, revalidating.
    pub fn with_targets(&self, targets: Vec<Target>) -> Result<Self> {
        Scene::new(SceneConfig {
            targets,
            ..self.config.clone()
        })
    }

    /// Rebuilds the scene after applying `f` to a copy of its configuration.
    pub fn modified(&self, f: impl FnOnce(&mut SceneConfig)) -> Result<Self> {
        let mut config = self.config.clone();
        f(&mut config);
        Scene::new(config)
    }

    /// Rigid rotation of arrays and targets (positions and velocities) about
    /// the origin.
    pub fn rotated(&self, angle: f64) -> Result<Self> {
        self.modified(|c| {
            c.tx = c.tx.rotated(angle);
            c.rx = c.rx.rotated(angle);
            for t in &mut c.targets {
                *t = t.rotated(angle);
            }
        })
    }

    pub fn params(&self) -> ParamVector {
        ParamVector::pack(self.targets())
    }
}

/// The six real parameters per target, in block order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKind {
    X,
    Y,
    Vx,
    Vy,
    AlphaR,
    AlphaI,
}

impl ParamKind {
    pub const ALL: [ParamKind; 6] = [
        ParamKind::X,
        ParamKind::Y,
        ParamKind::Vx,
        ParamKind::Vy,
        ParamKind::AlphaR,
        ParamKind::AlphaI,
    ];

    pub fn block(self) -> usize {
        self as usize
    }

    /// Index of `(self, q)` in a parameter vector for `num_targets` targets.
    pub fn index(self, q: usize, num_targets: usize) -> usize {
        self.block() * num_targets + q
    }

    /// Inverse of [`ParamKind::index`].
    pub fn from_index(i: usize, num_targets: usize) -> (ParamKind, usize) {
        (ParamKind::ALL[i / num_targets], i % num_targets)
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamKind::X => "x",
            ParamKind::Y => "y",
            ParamKind::Vx => "vx",
            ParamKind::Vy => "vy",
            ParamKind::AlphaR => "alpha_r",
            ParamKind::AlphaI => "alpha_i",
        }
    }

    pub fn get(self, t: &Target) -> f64 {
        match self {
            ParamKind::X => t.x,
            ParamKind::Y => t.y,
            ParamKind::Vx => t.vx,
            ParamKind::Vy => t.vy,
            ParamKind::AlphaR => t.rcs_re,
            ParamKind::AlphaI => t.rcs_im,
        }
    }

    pub(crate) fn set(self, t: &mut Target, v: f64) {
        match self {
            ParamKind::X => t.x = v,
            ParamKind::Y => t.y = v,
            ParamKind::Vx => t.vx = v,
            ParamKind::Vy => t.vy = v,
            ParamKind::AlphaR => t.rcs_re = v,
            ParamKind::AlphaI => t.rcs_im = v,
        }
    }
}

/// Real parameter vector of length `6Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    values: Vec<f64>,
}

impl ParamVector {
    pub fn pack(targets: &[Target]) -> Self {
        let values = ParamKind::ALL
            .iter()
            .flat_map(|k| targets.iter().map(move |t| k.get(t)))
            .collect();
        ParamVector { values }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() % 6 != 0 {
            return Err(invalid(format!(
                "parameter vector length {} is not a positive multiple of 6",
                values.len()
            )));
        }
        Ok(ParamVector { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn num_targets(&self) -> usize {
        self.values.len() / 6
    }

    pub fn unpack(&self) -> Vec<Target> {
        let q_count = self.num_targets();
        (0..q_count)
            .map(|q| {
                let mut t = Target::default();
                for k in ParamKind::ALL {
                    k.set(&mut t, self.values[k.index(q, q_count)]);
                }
                t
            })
            .collect()
    }
}
