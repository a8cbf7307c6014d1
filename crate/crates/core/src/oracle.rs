//! Independent numeric references: central finite differences, direct
//! element sums and Monte Carlo averages over random symbols.

use crate::error::{invalid, Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::fim::{channel_matrix, Assembler, FimOptions, FisherInfo, TransmitMode};
use crate::geometry::{ArrayGeometry, Point};
use crate::scene::{ParamKind, Scene, SceneConfig, Target};
use crate::steering::{ArrayResponse, Side};
use crate::C64;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::fmt;

/// Denominator floor for relative errors.
pub const RELATIVE_FLOOR: f64 = 1e-30;

/// Central-difference step per parameter family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Steps {
    /// Metres.
    pub position: f64,
    /// Metres per second.
    pub velocity: f64,
    pub rcs: f64,
}

impl Default for Steps {
    fn default() -> Self {
        Steps {
            position: 1e-6,
            velocity: 1e-4,
            rcs: 1e-6,
        }
    }
}

impl Steps {
    pub fn for_kind(&self, kind: ParamKind) -> f64 {
        match kind {
            ParamKind::X | ParamKind::Y => self.position,
            ParamKind::Vx | ParamKind::Vy => self.velocity,
            ParamKind::AlphaR | ParamKind::AlphaI => self.rcs,
        }
    }

    pub fn scaled(&self, factor: f64) -> Steps {
        Steps {
            position: self.position * factor,
            velocity: self.velocity * factor,
            rcs: self.rcs * factor,
        }
    }

    pub fn as_fields(&self) -> Vec<(String, f64)> {
        vec![
            ("position".into(), self.position),
            ("velocity".into(), self.velocity),
            ("rcs".into(), self.rcs),
        ]
    }
}

/// Outcome of one comparison against an oracle.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub name: String,
    /// Scalar summary of the analytic side (a norm for matrix checks).
    pub analytic: f64,
    /// Scalar summary of the oracle side.
    pub oracle: f64,
    /// `|analytic - oracle| / max(|oracle|, floor)`, computed on the full
    /// vector or matrix for non-scalar checks.
    pub relative_error: f64,
    pub tolerance: f64,
    pub steps: Vec<(String, f64)>,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(name: impl Into<String>, analytic: f64, oracle: f64, relative_error: f64, tolerance: f64) -> Self {
        OracleReport {
            name: name.into(),
            analytic,
            oracle,
            relative_error,
            tolerance,
            steps: Vec::new(),
            passed: relative_error <= tolerance,
        }
    }

    pub fn scalar(name: impl Into<String>, analytic: f64, oracle: f64, tolerance: f64) -> Self {
        let err = relative(analytic - oracle, oracle);
        OracleReport::new(name, analytic, oracle, err, tolerance)
    }

    pub fn with_steps(mut self, steps: Vec<(String, f64)>) -> Self {
        self.steps = steps;
        self
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} analytic={:.9e} oracle={:.9e} relerr={:.3e} tol={:.1e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.analytic,
            self.oracle,
            self.relative_error,
            self.tolerance
        )?;
        for (k, v) in &self.steps {
            write!(f, " step_{k}={v:e}")?;
        }
        Ok(())
    }
}

fn relative(diff: f64, reference: f64) -> f64 {
    diff.abs() / reference.abs().max(RELATIVE_FLOOR)
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `‖a - b‖ / max(‖b‖, floor)` for complex vectors.
pub fn vector_relative_error(a: &[C64], b: &[C64]) -> f64 {
    let diff: Vec<C64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    vec_norm(&diff) / vec_norm(b).max(RELATIVE_FLOOR)
}

fn check_step(value: f64, step: f64) -> Result<()> {
    if !(step > 0.0) || !step.is_finite() || step < 10.0 * f64::EPSILON * value.abs() {
        return Err(invalid(format!(
            "finite-difference step {step:e} underflows against parameter value {value:e}"
        )));
    }
    Ok(())
}

fn shifted(scene: &Scene, q: usize, kind: ParamKind, delta: f64) -> Result<Scene> {
    let mut targets = scene.targets().to_vec();
    let t = targets
        .get_mut(q)
        .ok_or_else(|| invalid(format!("target index {q} out of range")))?;
    kind.set(t, kind.get(t) + delta);
    scene.with_targets(targets)
}

fn shifted_pair(scene: &Scene, q: usize, kind: ParamKind, step: f64) -> Result<(Scene, Scene)> {
    let value = kind.get(scene.target(q)?);
    check_step(value, step)?;
    Ok((shifted(scene, q, kind, step)?, shifted(scene, q, kind, -step)?))
}

/// Central difference of the steering vector of target `q` at snapshot `m`.
pub fn fd_steering(scene: &Scene, side: Side, m: usize, q: usize, kind: ParamKind, step: f64) -> Result<Vec<C64>> {
    let (plus, minus) = shifted_pair(scene, q, kind, step)?;
    let a = ArrayResponse::new(&plus, side, q)?.steering(m);
    let b = ArrayResponse::new(&minus, side, q)?.steering(m);
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * step)).collect())
}

/// [`fd_steering`] with the step picked from a ladder `base * 4^i`,
/// `i = -4..=4`: the step whose estimate moves least against the next
/// larger step wins. Near broadside the x-derivative is tiny compared with
/// `k |a|`, so a fixed step is dominated by rounding in the phase.
/// Returns the estimate and the chosen step.
pub fn fd_steering_adaptive(scene: &Scene, side: Side, m: usize, q: usize, kind: ParamKind, base: f64) -> Result<(Vec<C64>, f64)> {
    let ladder: Vec<f64> = (-4..=4).map(|i| base * 4f64.powi(i)).collect();
    let estimates = ladder
        .iter()
        .map(|&h| fd_steering(scene, side, m, q, kind, h))
        .collect::<Result<Vec<_>>>()?;
    let best = (0..ladder.len() - 1)
        .min_by(|&i, &j| {
            let e = |k: usize| vector_relative_error(&estimates[k], &estimates[k + 1]);
            e(i).total_cmp(&e(j))
        })
        .unwrap_or(0);
    Ok((estimates[best].clone(), ladder[best]))
}

/// Central difference of the channel matrix of target `q` at snapshot `m`.
pub fn fd_channel(scene: &Scene, m: usize, q: usize, kind: ParamKind, step: f64) -> Result<DMatrix<C64>> {
    let (plus, minus) = shifted_pair(scene, q, kind, step)?;
    Ok((channel_matrix(&plus, m, q)? - channel_matrix(&minus, m, q)?) / C64::new(2.0 * step, 0.0))
}

/// Fisher matrix from dense finite-difference channel derivatives. The
/// isotropic mode applies `Re tr(D_i^H D_j)` to the full matrices, the
/// symbol mode uses `Re (D_i x)^H (D_j x)`.
pub fn fd_fim(scene: &Scene, mode: &TransmitMode, steps: &Steps) -> Result<FisherInfo> {
    fd_fim_with(scene, mode, steps, Execution::default())
}

pub fn fd_fim_with(scene: &Scene, mode: &TransmitMode, steps: &Steps, execution: Execution) -> Result<FisherInfo> {
    let n_targets = scene.num_targets();
    let dim = 6 * n_targets;
    if let TransmitMode::Symbols(x) = mode {
        if x.nrows() != scene.tx().count() || x.ncols() != scene.snapshots() {
            return Err(invalid("symbol matrix dimensions do not match the scene"));
        }
    }
    struct Shift {
        h: f64,
        plus: (C64, ArrayResponse, ArrayResponse),
        minus: (C64, ArrayResponse, ArrayResponse),
    }
    let side_pair = |s: &Scene, q: usize| -> Result<(C64, ArrayResponse, ArrayResponse)> {
        Ok((s.target(q)?.rcs(), ArrayResponse::new(s, Side::Rx, q)?, ArrayResponse::new(s, Side::Tx, q)?))
    };
    let shifts = (0..dim)
        .map(|i| {
            let (kind, q) = ParamKind::from_index(i, n_targets);
            let h = steps.for_kind(kind);
            let (plus, minus) = shifted_pair(scene, q, kind, h)?;
            Ok(Shift {
                h,
                plus: side_pair(&plus, q)?,
                minus: side_pair(&minus, q)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let dense = |(alpha, rx, tx): &(C64, ArrayResponse, ArrayResponse), m: usize| {
        let a_r = rx.steering(m);
        let a_t = tx.steering(m);
        DMatrix::from_fn(a_r.len(), a_t.len(), |i, j| alpha * a_r[i] * a_t[j])
    };

    let per_snapshot = execution.map(scene.snapshots(), |idx| {
        let m = idx + 1;
        let derivs: Vec<DMatrix<C64>> = shifts
            .iter()
            .map(|s| (dense(&s.plus, m) - dense(&s.minus, m)) / C64::new(2.0 * s.h, 0.0))
            .collect();
        let mut out = vec![0.0; dim * dim];
        match mode {
            TransmitMode::Isotropic => {
                for i in 0..dim {
                    for j in i..dim {
                        out[i * dim + j] = derivs[i].iter().zip(derivs[j].iter()).map(|(a, b)| (a.conj() * b).re).sum();
                    }
                }
            }
            TransmitMode::Symbols(x) => {
                let col = x.column(idx).into_owned();
                let y: Vec<_> = derivs.iter().map(|d| d * &col).collect();
                for i in 0..dim {
                    for j in i..dim {
                        out[i * dim + j] = y[i].dotc(&y[j]).re;
                    }
                }
            }
        }
        out
    });
    let total = pairwise_sum(&per_snapshot);
    let scale = match mode {
        TransmitMode::Isotropic => 2.0 * scene.power() / scene.noise_var(),
        TransmitMode::Symbols(_) => 2.0 / scene.noise_var(),
    };
    let matrix = DMatrix::from_fn(dim, dim, |i, j| {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        scale * total[a * dim + b]
    });
    Ok(FisherInfo::with_context(matrix, scene))
}

/// Compares the analytic Fisher matrix with [`fd_fim`].
pub fn check_fim(scene: &Scene, steps: &Steps, tolerance: f64, opts: &FimOptions) -> Result<OracleReport> {
    let analytic = crate::fim::fim_with(scene, &TransmitMode::Isotropic, opts)?;
    let oracle = fd_fim_with(scene, &TransmitMode::Isotropic, steps, opts.execution)?;
    let err = analytic.relative_difference(&oracle);
    Ok(OracleReport::new("fd_fim", analytic.frobenius(), oracle.frobenius(), err, tolerance).with_steps(steps.as_fields()))
}

/// Element sums behind the gain closed forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GainKind {
    /// `Σ 1/r_n²`.
    G,
    /// `Σ (x_q - x_n)² / r_n⁴`.
    Gx,
    /// `Σ (y_q - y_n)² / r_n⁴`.
    Gy,
    /// `Σ (x_q - x_n) / r_n³`. The Tx/Rx double sum of the cross term is
    /// the product of the two arrays' values.
    CrossX,
    /// `Σ (y_q - y_n) / r_n³`.
    CrossY,
}

impl GainKind {
    pub const ALL: [GainKind; 5] = [GainKind::G, GainKind::Gx, GainKind::Gy, GainKind::CrossX, GainKind::CrossY];

    pub fn name(self) -> &'static str {
        match self {
            GainKind::G => "G",
            GainKind::Gx => "Gx",
            GainKind::Gy => "Gy",
            GainKind::CrossX => "cross-x",
            GainKind::CrossY => "cross-y",
        }
    }
}

/// Neumaier compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn brute_gain(geom: &ArrayGeometry, target: &Target, kind: GainKind) -> Result<f64> {
    let mut terms = Vec::with_capacity(geom.count());
    for e in geom.positions() {
        let (dx, dy) = (target.x - e.x, target.y - e.y);
        let r2 = dx * dx + dy * dy;
        if r2 == 0.0 {
            return Err(Error::DegenerateGeometry("target coincides with an element".into()));
        }
        let r = r2.sqrt();
        terms.push(match kind {
            GainKind::G => 1.0 / r2,
            GainKind::Gx => dx * dx / (r2 * r2),
            GainKind::Gy => dy * dy / (r2 * r2),
            GainKind::CrossX => dx / (r2 * r),
            GainKind::CrossY => dy / (r2 * r),
        });
    }
    Ok(compensated_sum(terms.into_iter()))
}

/// `N_t × M` matrix of independent circular Gaussian symbols with
/// `E|x|² = power`.
pub fn random_symbols(rng: &mut impl Rng, n_tx: usize, snapshots: usize, power: f64) -> DMatrix<C64> {
    let sd = (power / 2.0).sqrt();
    DMatrix::from_fn(n_tx, snapshots, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(sd * re, sd * im)
    })
}

/// Average of symbol-mode Fisher matrices over `draws` random symbol
/// matrices, compared against the isotropic matrix. Draw `i` uses stream `i`
/// of a ChaCha generator seeded with `seed`, so the result does not depend
/// on the worker count.
pub fn monte_carlo_isotropic(scene: &Scene, draws: usize, seed: u64) -> Result<OracleReport> {
    monte_carlo_isotropic_with(scene, draws, seed, Execution::default())
}

pub fn monte_carlo_isotropic_with(scene: &Scene, draws: usize, seed: u64, execution: Execution) -> Result<OracleReport> {
    if draws == 0 {
        return Err(invalid("at least one draw is required"));
    }
    let opts = FimOptions {
        execution: Execution::Sequential,
        fault: None,
    };
    let asm = Assembler::new(scene, &opts)?;
    let iso = asm.isotropic();
    let (n_tx, snapshots, power) = (scene.tx().count(), scene.snapshots(), scene.power());
    let parts = execution.try_map(draws, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let x = random_symbols(&mut rng, n_tx, snapshots, power);
        Ok::<_, Error>(asm.symbols(&x)?.into_matrix().as_slice().to_vec())
    })?;
    let sum = pairwise_sum(&parts);
    let dim = iso.dim();
    let mean = DMatrix::from_column_slice(dim, dim, &sum) / draws as f64;
    let mean = FisherInfo::with_context(mean, scene);
    let err = mean.relative_difference(&iso);
    let tolerance = 3.0 / (draws as f64).sqrt();
    Ok(OracleReport::new(format!("monte_carlo_isotropic[{draws}]"), iso.frobenius(), mean.frobenius(), err, tolerance)
        .with_steps(vec![("draws".into(), draws as f64), ("seed".into(), seed as f64)]))
}

/// Scene number `index` of the randomized verification battery: one or
/// two targets, 4 or 32 elements per array, 4 or 16 snapshots, ranges
/// 10 to 500 m and angles within ±60° of broadside.
pub fn battery_scene(seed: u64, index: usize) -> Result<Scene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let n = if rng.random::<bool>() { 32 } else { 4 };
    let q_count = if rng.random::<bool>() { 2 } else { 1 };
    let mut c = SceneConfig::default();
    c.snapshots = if rng.random::<bool>() { 16 } else { 4 };
    c.t_sym_s = 10f64.powf(rng.random_range(-7.0..-5.0));
    let wl = c.wavelength();
    c.tx = ArrayGeometry::ula(n, wl / 2.0, 0.0)?;
    c.rx = if rng.random::<bool>() {
        c.tx.clone()
    } else {
        ArrayGeometry::ula(n, wl / 2.0, rng.random_range(-2.0..2.0))?
    };
    c.targets = (0..q_count)
        .map(|_| {
            let range = 10f64.powf(rng.random_range(1.0..500f64.log10()));
            let angle = rng.random_range(-60f64..60.0).to_radians();
            let vel = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let rcs = C64::new(rng.random_range(0.2..1.5), rng.random_range(-1.0..1.0));
            Target::at_polar(Point::default(), range, angle, vel, rcs)
        })
        .collect();
    Scene::new(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fim::{d_channel, fim, DerivativeFault};
    use approx::assert_relative_eq;

    fn scene(n: usize, m: usize, targets: Vec<Target>) -> Scene {
        let mut c = SceneConfig::default();
        c.tx = ArrayGeometry::ula(n, 0.01, 0.0).unwrap();
        c.rx = c.tx.clone();
        c.snapshots = m;
        c.t_sym_s = 1e-5;
        c.targets = targets;
        Scene::new(c).unwrap()
    }

    fn canonical() -> Scene {
        scene(32, 16, vec![SceneConfig::default_target()])
    }

    #[test]
    fn step_underflow_is_rejected() {
        let s = canonical();
        assert!(fd_steering(&s, Side::Tx, 1, 0, ParamKind::Y, 1e-20).is_err());
        assert!(fd_steering(&s, Side::Tx, 1, 0, ParamKind::Y, 0.0).is_err());
        let bad = Steps { position: 1e-18, ..Default::default() };
        assert!(fd_fim(&s, &TransmitMode::Isotropic, &bad).is_err());
    }

    #[test]
    fn adaptive_step_handles_broadside_targets() {
        let t = Target::at_polar(Point::default(), 305.0, -0.0009, (8.0, -2.0), C64::new(1.0, -1.0));
        let s = scene(4, 4, vec![t]);
        let a = ArrayResponse::new(&s, Side::Tx, 0).unwrap().derivative(0, ParamKind::X).unwrap();
        let fixed = fd_steering(&s, Side::Tx, 0, 0, ParamKind::X, 1e-6).unwrap();
        let (adaptive, step) = fd_steering_adaptive(&s, Side::Tx, 0, 0, ParamKind::X, 1e-6).unwrap();
        let (e_fixed, e_adaptive) = (vector_relative_error(&a, &fixed), vector_relative_error(&a, &adaptive));
        assert!(e_adaptive < 1e-6 && e_adaptive < e_fixed, "{e_adaptive:e} vs {e_fixed:e} at {step:e}");
    }

    #[test]
    fn channel_derivatives_match_differences() {
        let s = canonical();
        for kind in ParamKind::ALL {
            let a = d_channel(&s, 5, 0, kind).unwrap().matrix;
            let b = fd_channel(&s, 5, 0, kind, Steps::default().for_kind(kind)).unwrap();
            let err = (&a - &b).norm() / b.norm();
            assert!(err < 1e-5, "{kind:?} {err:e}");
        }
    }

    #[test]
    fn fd_fim_matches_analytic() {
        let s = canonical();
        let r = check_fim(&s, &Steps::default(), 1e-5, &FimOptions::default()).unwrap();
        assert!(r.passed, "{r}");
    }

    #[test]
    fn fault_is_detected() {
        let s = canonical();
        let opts = FimOptions {
            fault: Some(DerivativeFault { kind: ParamKind::X, target: 0, relative: 1e-3 }),
            ..Default::default()
        };
        let r = check_fim(&s, &Steps::default(), 1e-5, &opts).unwrap();
        assert!(!r.passed, "{r}");
    }

    #[test]
    fn fd_symbols_mode_matches_analytic() {
        let s = scene(4, 4, vec![Target { x: 1.0, y: 7.0, vx: 2.0, vy: 1.0, rcs_re: 0.7, rcs_im: 0.2 }]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_symbols(&mut rng, 4, 4, s.power());
        let mode = TransmitMode::Symbols(x);
        let a = fim(&s, &mode).unwrap();
        let b = fd_fim(&s, &mode, &Steps::default()).unwrap();
        assert!(a.relative_difference(&b) < 1e-5);
    }

    #[test]
    fn zero_rcs_blocks_vanish_in_both() {
        let s = scene(4, 4, vec![Target { x: 1.0, y: 7.0, vx: 2.0, vy: 1.0, rcs_re: 0.0, rcs_im: 0.0 }]);
        let fd = fd_fim(&s, &TransmitMode::Isotropic, &Steps::default()).unwrap();
        let scale = fd.matrix()[(4, 4)];
        for i in 0..4 {
            assert!(fd.matrix()[(i, i)].abs() <= 1e-12 * scale);
        }
    }

    #[test]
    fn brute_gain_small_cases() {
        let one = ArrayGeometry::ula(1, 0.01, 0.0).unwrap();
        let t = Target { x: 3.0, y: 4.0, ..Default::default() };
        assert_relative_eq!(brute_gain(&one, &t, GainKind::G).unwrap(), 1.0 / 25.0, max_relative = 1e-15);
        assert_relative_eq!(brute_gain(&one, &t, GainKind::Gx).unwrap(), 9.0 / 625.0, max_relative = 1e-15);
        let three = ArrayGeometry::ula(3, 1.0, 0.0).unwrap();
        let t = Target { x: 0.0, y: 10.0, ..Default::default() };
        assert_relative_eq!(brute_gain(&three, &t, GainKind::G).unwrap(), 2.0 / 101.0 + 1.0 / 100.0, max_relative = 1e-15);
        assert!(brute_gain(&three, &t, GainKind::CrossX).unwrap().abs() < 1e-18);
    }

    #[test]
    fn brute_gain_matches_steering_norm() {
        let s = canonical();
        let a = ArrayResponse::new(&s, Side::Tx, 0).unwrap().steering(3);
        let norm2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let g = brute_gain(s.tx(), &s.targets()[0], GainKind::G).unwrap();
        let wl = s.wavelength();
        assert_relative_eq!(norm2, wl * wl / (16.0 * std::f64::consts::PI.powi(2)) * g, max_relative = 1e-12);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(v.into_iter()), 2.0);
    }

    #[test]
    fn monte_carlo_is_seeded_and_close() {
        let s = scene(4, 4, vec![Target { x: 1.0, y: 7.0, vx: 2.0, vy: 1.0, rcs_re: 0.7, rcs_im: 0.2 }]);
        let a = monte_carlo_isotropic(&s, 1000, 11).unwrap();
        let b = monte_carlo_isotropic_with(&s, 1000, 11, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        assert!(a.passed, "{a}");
    }

    #[test]
    fn battery_is_reproducible() {
        for i in 0..20 {
            let a = battery_scene(5, i).unwrap();
            assert_eq!(a, battery_scene(5, i).unwrap());
            assert!([4, 32].contains(&a.tx().count()));
            assert!([4, 16].contains(&a.snapshots()));
        }
    }
}
