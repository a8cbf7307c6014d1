use crate::CliError;
use nfcrb::approx::{gain, Variant};
use nfcrb::crb::{closed_form_single, diagonal_crb, full_crb, schur_crb, Bound};
use nfcrb::fim::{fim, DerivativeFault, FimOptions, TransmitMode};
use nfcrb::oracle::{battery_scene, brute_gain, check_fim, fd_steering_adaptive, monte_carlo_isotropic, vector_relative_error, GainKind, OracleReport, Steps};
use nfcrb::steering::{ArrayResponse, Side};
use nfcrb::{ArrayGeometry, Execution, ParamKind, Point, Scene, SceneConfig, Target, C64};
use std::io::Write;

pub const DEFAULT_SEED: u64 = 7;
pub const DEFAULT_BATTERY: usize = 20;
const DERIVATIVE_TOL: f64 = 1e-5;
const MONTE_CARLO_DRAWS: usize = 10_000;

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub battery: usize,
    /// Perturbs one analytic derivative to prove the checks can fail.
    pub fault: Option<DerivativeFault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: DEFAULT_SEED, battery: DEFAULT_BATTERY, fault: None }
    }
}

fn scene(n: usize, m: usize, t_sym: f64, targets: Vec<Target>) -> nfcrb::Result<Scene> {
    let mut c = SceneConfig::default();
    c.tx = ArrayGeometry::ula(n, c.wavelength() / 2.0, 0.0)?;
    c.rx = c.tx.clone();
    c.snapshots = m;
    c.t_sym_s = t_sym;
    c.targets = targets;
    Scene::new(c)
}

fn polar(range: f64, deg: f64, v: (f64, f64)) -> Target {
    Target::at_polar(Point::default(), range, deg.to_radians(), v, C64::new(1.0, 0.1))
}

fn failed(name: String, e: nfcrb::Error) -> OracleReport {
    let mut r = OracleReport::new(format!("{name} error={e}"), f64::NAN, f64::NAN, f64::INFINITY, 0.0);
    r.passed = false;
    r
}

fn steering_check(s: &Scene, i: usize) -> nfcrb::Result<OracleReport> {
    let steps = Steps::default();
    let mut worst = (0.0, 0.0, 0.0);
    for q in 0..s.num_targets() {
        for side in [Side::Tx, Side::Rx] {
            let resp = ArrayResponse::new(s, side, q)?;
            for m in 0..s.snapshots() {
                for kind in [ParamKind::X, ParamKind::Y, ParamKind::Vx, ParamKind::Vy] {
                    let a = resp.derivative(m, kind)?;
                    let (b, _) = fd_steering_adaptive(s, side, m, q, kind, steps.for_kind(kind))?;
                    let e = vector_relative_error(&a, &b);
                    if e >= worst.0 {
                        let norm = |v: &[C64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                        worst = (e, norm(&a), norm(&b));
                    }
                }
            }
        }
    }
    Ok(OracleReport::new(format!("steering[{i}]"), worst.1, worst.2, worst.0, DERIVATIVE_TOL)
        .with_steps(steps.as_fields()))
}

fn battery_checks(seed: u64, i: usize, opts: &FimOptions) -> Vec<OracleReport> {
    let s = match battery_scene(seed, i) {
        Ok(s) => s,
        Err(e) => return vec![failed(format!("battery_scene[{i}]"), e)],
    };
    let mut out = Vec::new();
    out.push(steering_check(&s, i).unwrap_or_else(|e| failed(format!("steering[{i}]"), e)));
    out.push(match check_fim(&s, &Steps::default(), DERIVATIVE_TOL, opts) {
        Ok(mut r) => {
            r.name = format!("fd_fim[{i}]");
            r
        }
        Err(e) => failed(format!("fd_fim[{i}]"), e),
    });
    out.push(match fim(&s, &TransmitMode::Isotropic) {
        Ok(f) => {
            let mut r = OracleReport::new(format!("symmetric_psd[{i}]"), f.symmetry_error(), f.min_eigenvalue_ratio(), f.symmetry_error(), 1e-10);
            r.passed = f.is_symmetric_psd();
            r
        }
        Err(e) => failed(format!("symmetric_psd[{i}]"), e),
    });
    out
}

fn gain_checks() -> nfcrb::Result<Vec<OracleReport>> {
    let wl = 0.02;
    let geom = ArrayGeometry::ula(256, wl / 2.0, 0.0)?;
    let mut out = Vec::new();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in [50.0, 100.0, 200.0, 400.0, 800.0, 1600.0] {
        let t = polar(r, 20.0, (0.0, 0.0));
        let exact = brute_gain(&geom, &t, GainKind::G)?;
        let summed = gain(&geom, &t, wl, Variant::Exact)?.g;
        out.push(OracleReport::scalar(format!("brute_gain[r={r}]"), summed, exact, 1e-12));
        let e_nf = ((gain(&geom, &t, wl, Variant::NearField)?.g - exact) / exact).abs();
        let e_ff = ((gain(&geom, &t, wl, Variant::FarField)?.g - exact) / exact).abs();
        let mut r_cmp = OracleReport::new(format!("gain_nf_below_ff[r={r}]"), e_nf, e_ff, e_nf / e_ff, 1.0);
        r_cmp.passed = e_nf < e_ff;
        out.push(r_cmp);
        xs.push(r.ln());
        ys.push(e_nf.ln());
    }
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    out.push(OracleReport::new("gain_nf_residual_slope", slope, -4.0, (slope + 4.0).abs(), 0.3));
    Ok(out)
}

fn invariant_checks() -> nfcrb::Result<Vec<OracleReport>> {
    let mut out = Vec::new();

    let canonical = scene(32, 16, SceneConfig::default().t_sym_s, vec![polar(100.0, 20.0, (1.0, 4.0))])?;
    let diag = diagonal_crb(&fim(&canonical, &TransmitMode::Isotropic)?);
    let closed = closed_form_single(&canonical, 0)?;
    for b in Bound::ALL {
        let (a, o) = (closed.target(0).get(b), diag.target(0).get(b));
        out.push(OracleReport::scalar(format!("closed_form[{}]", b.name()), a, o, 1e-10));
    }
    let d = diag.target(0);
    let mut halves = OracleReport::scalar("rcs_halves_equal", d.crb_alpha_r, d.crb_alpha_i, 0.0);
    halves.passed = d.crb_alpha_r == d.crb_alpha_i;
    out.push(halves);

    let near = scene(8, 8, 1e-4, vec![polar(0.5, 17.0, (1.0, 2.0)), polar(0.4, -23.0, (-1.0, 0.5))])?;
    let f = fim(&near, &TransmitMode::Isotropic)?;
    let (_, full) = full_crb(&f)?;
    let schur = schur_crb(&f)?;
    let (mut worst, mut at) = (0.0, (0.0, 0.0));
    for q in 0..2 {
        for k in ParamKind::ALL {
            let (a, o) = (schur.target(q).param(k), full.target(q).param(k));
            let e = (a - o).abs() / o.abs();
            if e >= worst {
                (worst, at) = (e, (a, o));
            }
        }
    }
    out.push(OracleReport::new("schur_matches_full", at.0, at.1, worst, 1e-6));

    let s = scene(32, 16, 1e-4, vec![polar(0.6, 25.0, (1.0, 2.0))])?;
    let rotated = s.rotated(30f64.to_radians())?;
    let (_, a) = full_crb(&fim(&s, &TransmitMode::Isotropic)?)?;
    let (_, b) = full_crb(&fim(&rotated, &TransmitMode::Isotropic)?)?;
    let (a, b) = (a.target(0), b.target(0));
    out.push(OracleReport::scalar("rotation_trace_xy", b.crb_x + b.crb_y, a.crb_x + a.crb_y, 1e-8));
    out.push(OracleReport::scalar("rotation_trace_v", b.crb_vx + b.crb_vy, a.crb_vx + a.crb_vy, 1e-8));
    Ok(out)
}

/// Runs every battery and returns the reports in a fixed order.
pub fn verify_reports(opts: &VerifyOptions) -> Vec<OracleReport> {
    let fim_opts = FimOptions { execution: Execution::Sequential, fault: opts.fault };
    let mut reports: Vec<OracleReport> = Execution::Parallel
        .map(opts.battery, |i| battery_checks(opts.seed, i, &fim_opts))
        .into_iter()
        .flatten()
        .collect();
    reports.extend(gain_checks().unwrap_or_else(|e| vec![failed("gain".into(), e)]));
    let mc = scene(4, 4, 1e-5, vec![Target::at_polar(Point::default(), 3.0, 0.4, (2.0, -1.0), C64::new(0.8, 0.3))])
        .and_then(|s| monte_carlo_isotropic(&s, MONTE_CARLO_DRAWS, opts.seed));
    reports.push(mc.unwrap_or_else(|e| failed("monte_carlo_isotropic".into(), e)));
    reports.extend(invariant_checks().unwrap_or_else(|e| vec![failed("invariants".into(), e)]));
    reports
}

/// Prints the report and fails with [`CliError::VerificationFailed`] when
/// any check did not pass.
pub fn run_verify(opts: &VerifyOptions, out: &mut dyn Write) -> Result<(), CliError> {
    let reports = verify_reports(opts);
    writeln!(out, "# nfcrb {} verify seed={} battery={}", env!("CARGO_PKG_VERSION"), opts.seed, opts.battery)?;
    if opts.fault.is_some() {
        writeln!(out, "# derivative fault injected")?;
    }
    for r in &reports {
        writeln!(out, "{r}")?;
    }
    let failures = reports.iter().filter(|r| !r.passed).count();
    writeln!(out, "summary: {} checks, {} passed, {} failed", reports.len(), reports.len() - failures, failures)?;
    if failures > 0 {
        return Err(CliError::VerificationFailed(failures));
    }
    Ok(())
}
