//! Cramér-Rao bounds from a Fisher matrix, plus the single-target closed
//! form built from steering-vector norms.

use crate::error::{invalid, Error, Result};
use crate::fim::FisherInfo;
use crate::scene::{ParamKind, Scene};
use crate::steering::{ArrayResponse, Side};
use crate::C64;
use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

/// Condition numbers above this mark a report as unreliable.
pub const ILL_CONDITIONED: f64 = 1e12;

/// The five reported bounds of one target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Bound {
    Rcs,
    Vx,
    Vy,
    X,
    Y,
}

impl Bound {
    pub const ALL: [Bound; 5] = [Bound::Rcs, Bound::Vx, Bound::Vy, Bound::X, Bound::Y];

    pub fn name(self) -> &'static str {
        match self {
            Bound::Rcs => "rcs",
            Bound::Vx => "vx",
            Bound::Vy => "vy",
            Bound::X => "x",
            Bound::Y => "y",
        }
    }

    pub fn parse(s: &str) -> Option<Bound> {
        Bound::ALL.into_iter().find(|b| b.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Diagonal of the full inverse.
    ExactFull,
    /// Per-target blocks through Schur complements.
    ExactSchur,
    /// `1 / F_ii`: every other parameter treated as known.
    ExactDiagonal,
    /// Norm-based single-target closed form.
    ClosedForm,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ExactFull => "exact-full",
            Method::ExactSchur => "exact-schur",
            Method::ExactDiagonal => "exact-diagonal",
            Method::ClosedForm => "closed-form",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conditioning {
    Ok,
    /// Condition number above [`ILL_CONDITIONED`]; values are unreliable.
    IllConditioned,
}

/// Variances for one target. Infinite entries mean zero information.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TargetBounds {
    pub crb_x: f64,
    pub crb_y: f64,
    pub crb_vx: f64,
    pub crb_vy: f64,
    pub crb_alpha_r: f64,
    pub crb_alpha_i: f64,
    pub crb_alpha: f64,
}

impl TargetBounds {
    fn from_fn(f: impl Fn(ParamKind) -> f64) -> Self {
        let (ar, ai) = (f(ParamKind::AlphaR), f(ParamKind::AlphaI));
        TargetBounds {
            crb_x: f(ParamKind::X),
            crb_y: f(ParamKind::Y),
            crb_vx: f(ParamKind::Vx),
            crb_vy: f(ParamKind::Vy),
            crb_alpha_r: ar,
            crb_alpha_i: ai,
            crb_alpha: ar + ai,
        }
    }

    pub fn get(&self, bound: Bound) -> f64 {
        match bound {
            Bound::Rcs => self.crb_alpha,
            Bound::Vx => self.crb_vx,
            Bound::Vy => self.crb_vy,
            Bound::X => self.crb_x,
            Bound::Y => self.crb_y,
        }
    }

    pub fn param(&self, kind: ParamKind) -> f64 {
        match kind {
            ParamKind::X => self.crb_x,
            ParamKind::Y => self.crb_y,
            ParamKind::Vx => self.crb_vx,
            ParamKind::Vy => self.crb_vy,
            ParamKind::AlphaR => self.crb_alpha_r,
            ParamKind::AlphaI => self.crb_alpha_i,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrbReport {
    pub targets: Vec<TargetBounds>,
    pub method: Method,
    /// Condition number of the equilibrated Fisher matrix, when one was used.
    pub condition_number: Option<f64>,
    pub conditioning: Conditioning,
}

impl CrbReport {
    fn from_diagonal(diag: &[f64], num_targets: usize, method: Method, condition_number: Option<f64>) -> Self {
        let conditioning = match condition_number {
            Some(c) if !(c <= ILL_CONDITIONED) => Conditioning::IllConditioned,
            _ => Conditioning::Ok,
        };
        CrbReport {
            targets: (0..num_targets)
                .map(|q| TargetBounds::from_fn(|k| diag[k.index(q, num_targets)]))
                .collect(),
            method,
            condition_number,
            conditioning,
        }
    }

    pub fn target(&self, q: usize) -> &TargetBounds {
        &self.targets[q]
    }
}

/// `D M D` with `D = diag(1 / sqrt(M_ii))`, reading only the upper triangle.
fn equilibrate(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = m.nrows();
    let mut scale = Vec::with_capacity(n);
    for i in 0..n {
        let d = m[(i, i)];
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::SingularFim(format!("diagonal entry {i} is {d:e}")));
        }
        scale.push(1.0 / d.sqrt());
    }
    let s = DMatrix::from_fn(n, n, |i, j| {
        let v = if i <= j { m[(i, j)] } else { m[(j, i)] };
        v * scale[i] * scale[j]
    });
    Ok((s, scale))
}

/// Symmetric positive definite inverse through Jacobi equilibration and a
/// Cholesky factor. Returns the inverse and the equilibrated condition number.
fn spd_inverse(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), 1.0));
    }
    let (s, scale) = equilibrate(m)?;
    let eig = SymmetricEigen::new(s.clone()).eigenvalues;
    let (lo, hi) = (eig.min(), eig.max());
    if lo <= 64.0 * n as f64 * f64::EPSILON * hi {
        return Err(Error::SingularFim(format!(
            "smallest equilibrated eigenvalue {lo:e} against largest {hi:e}"
        )));
    }
    let chol = Cholesky::new(s).ok_or_else(|| Error::SingularFim("Cholesky factorization failed".into()))?;
    let inv = chol.inverse();
    let out = DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * scale[i] * scale[j]);
    Ok((out, hi / lo))
}

/// `F^{-1}` and its diagonal mapped into a report.
pub fn full_crb(f: &FisherInfo) -> Result<(DMatrix<f64>, CrbReport)> {
    let (inv, cond) = spd_inverse(f.matrix())?;
    let diag: Vec<f64> = inv.diagonal().iter().copied().collect();
    let report = CrbReport::from_diagonal(&diag, f.num_targets(), Method::ExactFull, Some(cond));
    Ok((inv, report))
}

/// `(F_ss - F_sn F_nn^{-1} F_ns)^{-1}` for the parameter indices in `subset`,
/// returned in the order given.
///
/// The Schur complement is taken from a block Cholesky factor of the
/// equilibrated matrix ordered as `[nuisance, subset]`: its trailing block
/// `L22` satisfies `S = L22 L22^T`, which avoids forming the difference.
pub fn conditional_crb(f: &FisherInfo, subset: &[usize]) -> Result<DMatrix<f64>> {
    let dim = f.dim();
    let mut seen = vec![false; dim];
    for &i in subset {
        if i >= dim || seen[i] {
            return Err(invalid(format!("subset index {i} is out of range or repeated")));
        }
        seen[i] = true;
    }
    if subset.is_empty() {
        return Err(invalid("empty parameter subset"));
    }
    let nuisance: Vec<usize> = (0..dim).filter(|i| !seen[*i]).collect();
    let m = f.matrix();
    if !nuisance.is_empty() {
        let nn = DMatrix::from_fn(nuisance.len(), nuisance.len(), |i, j| m[(nuisance[i], nuisance[j])]);
        spd_inverse(&nn).map_err(|e| Error::SingularFim(format!("nuisance block: {e}")))?;
    }
    let order: Vec<usize> = nuisance.iter().chain(subset).copied().collect();
    let permuted = DMatrix::from_fn(dim, dim, |i, j| m[(order[i], order[j])]);
    let (scaled, scale) = equilibrate(&permuted)?;
    let l = Cholesky::new(scaled)
        .ok_or_else(|| Error::SingularFim("Cholesky factorization failed".into()))?
        .unpack();
    let (n, k) = (nuisance.len(), subset.len());
    let l22 = l.view((n, n), (k, k)).into_owned();
    let l22_inv = l22
        .solve_lower_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::SingularFim("Schur complement is singular".into()))?;
    let inv = l22_inv.transpose() * l22_inv;
    Ok(DMatrix::from_fn(k, k, |i, j| inv[(i, j)] * scale[n + i] * scale[n + j]))
}

/// Per-target bounds with every other target's parameters as nuisance.
pub fn schur_crb(f: &FisherInfo) -> Result<CrbReport> {
    let n_targets = f.num_targets();
    let mut diag = vec![0.0; f.dim()];
    for q in 0..n_targets {
        let idx: Vec<usize> = ParamKind::ALL.iter().map(|k| k.index(q, n_targets)).collect();
        let block = conditional_crb(f, &idx)?;
        for (a, &i) in idx.iter().enumerate() {
            diag[i] = block[(a, a)];
        }
    }
    let (_, cond) = spd_inverse(f.matrix())?;
    Ok(CrbReport::from_diagonal(&diag, n_targets, Method::ExactSchur, Some(cond)))
}

/// `1 / F_ii` for every parameter; zero information gives infinity.
pub fn diagonal_crb(f: &FisherInfo) -> CrbReport {
    let diag: Vec<f64> = f.matrix().diagonal().iter().map(|&d| reciprocal(d)).collect();
    CrbReport::from_diagonal(&diag, f.num_targets(), Method::ExactDiagonal, None)
}

fn reciprocal(d: f64) -> f64 {
    if d > 0.0 {
        1.0 / d
    } else {
        f64::INFINITY
    }
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Single-target closed form. RCS from `Σ_m ‖a_R‖²‖a_T‖²`, kinematic bounds
/// from `Σ_m ‖ȧ_R‖²‖a_T‖² + 2 Re{ȧ_R^H a_R a_T^H ȧ_T} + ‖a_R‖²‖ȧ_T‖²`, all
/// with the factor `2P|α|²/σ²` (`2P/σ²` for the reflectivity).
pub fn closed_form_single(scene: &Scene, q: usize) -> Result<CrbReport> {
    let alpha2 = scene.target(q)?.rcs().norm_sqr();
    let tx = ArrayResponse::new(scene, Side::Tx, q)?;
    let rx = ArrayResponse::new(scene, Side::Rx, q)?;
    let mut rcs = 0.0;
    let mut kin = [0.0; 4];
    for m in 1..=scene.snapshots() {
        let (a_t, d_t) = tx.with_derivatives(m);
        let (a_r, d_r) = rx.with_derivatives(m);
        let (nt, nr) = (norm_sqr(&a_t), norm_sqr(&a_r));
        rcs += nr * nt;
        for k in 0..4 {
            let cross = inner(&d_r[k], &a_r) * inner(&a_t, &d_t[k]);
            kin[k] += norm_sqr(&d_r[k]) * nt + 2.0 * cross.re + nr * norm_sqr(&d_t[k]);
        }
    }
    let scale = 2.0 * scene.power() / scene.noise_var();
    let alpha_bound = reciprocal(scale * rcs);
    let bounds = TargetBounds::from_fn(|kind| match kind {
        ParamKind::AlphaR | ParamKind::AlphaI => alpha_bound,
        k => reciprocal(scale * alpha2 * kin[k.block()]),
    });
    Ok(CrbReport {
        targets: vec![bounds],
        method: Method::ClosedForm,
        condition_number: None,
        conditioning: Conditioning::Ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fim::{fim, TransmitMode};
    use crate::geometry::ArrayGeometry;
    use crate::scene::{SceneConfig, Target};
    use approx::assert_relative_eq;

    fn small(targets: Vec<Target>, n: usize) -> Scene {
        let mut c = SceneConfig::default();
        c.tx = ArrayGeometry::ula(n, 0.01, 0.0).unwrap();
        c.rx = c.tx.clone();
        c.snapshots = 8;
        c.t_sym_s = 1e-4;
        c.targets = targets;
        Scene::new(c).unwrap()
    }

    fn target() -> Target {
        Target { x: 0.15, y: 0.4, vx: 1.0, vy: 4.0, rcs_re: 1.0, rcs_im: 0.1 }
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn diagonal_fisher_inverts_elementwise() {
        let d: Vec<f64> = (1..=6).map(|i| i as f64 * 10.0).collect();
        let f = FisherInfo::from_matrix(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.clone()))).unwrap();
        let (inv, report) = full_crb(&f).unwrap();
        for i in 0..6 {
            assert_relative_eq!(inv[(i, i)], 1.0 / d[i], max_relative = 1e-15);
        }
        assert_relative_eq!(report.targets[0].crb_x, 0.1, max_relative = 1e-15);
        assert_eq!(report.method, Method::ExactFull);
        assert_relative_eq!(report.condition_number.unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn coincident_targets_are_singular() {
        let scene = small(vec![target(), target()], 8);
        let f = fim(&scene, &TransmitMode::Isotropic).unwrap();
        assert!(matches!(full_crb(&f), Err(Error::SingularFim(_))));
    }

    #[test]
    fn schur_matches_full_inverse_blocks() {
        let other = Target { x: -0.2, y: 0.3, vx: -1.0, vy: 0.5, rcs_re: 0.4, rcs_im: 0.7 };
        let scene = small(vec![target(), other], 8);
        let f = fim(&scene, &TransmitMode::Isotropic).unwrap();
        let (inv, rep) = full_crb(&f).unwrap();
        assert_eq!(rep.conditioning, Conditioning::Ok);
        let subset = [0usize, 3, 7, 11];
        let block = conditional_crb(&f, &subset).unwrap();
        for (a, &i) in subset.iter().enumerate() {
            for (b, &j) in subset.iter().enumerate() {
                assert!((block[(a, b)] - inv[(i, j)]).abs() <= 1e-8 * inv[(i, i)].abs().max(inv[(j, j)].abs()));
            }
        }
        let all: Vec<usize> = (0..12).collect();
        let whole = conditional_crb(&f, &all).unwrap();
        assert!((&whole - &inv).norm() <= 1e-10 * inv.norm());

        let schur = schur_crb(&f).unwrap();
        let (_, full) = full_crb(&f).unwrap();
        for q in 0..2 {
            for k in ParamKind::ALL {
                assert!(rel(schur.targets[q].param(k), full.targets[q].param(k)) < 1e-8);
            }
        }
    }

    #[test]
    fn block_diagonal_schur_is_block_inverse() {
        let mut m = DMatrix::<f64>::identity(6, 6) * 4.0;
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        let f = FisherInfo::from_matrix(m.clone()).unwrap();
        let got = conditional_crb(&f, &[0, 1]).unwrap();
        let want = m.view((0, 0), (2, 2)).into_owned().try_inverse().unwrap();
        assert!((got - want).norm() < 1e-14);
    }

    #[test]
    fn subset_validation() {
        let f = FisherInfo::from_matrix(DMatrix::identity(6, 6)).unwrap();
        assert!(conditional_crb(&f, &[]).is_err());
        assert!(conditional_crb(&f, &[1, 1]).is_err());
        assert!(conditional_crb(&f, &[6]).is_err());
    }

    #[test]
    fn closed_form_is_reciprocal_diagonal() {
        let scene = small(vec![target()], 8);
        let f = fim(&scene, &TransmitMode::Isotropic).unwrap();
        let diag = diagonal_crb(&f);
        let closed = closed_form_single(&scene, 0).unwrap();
        for k in ParamKind::ALL {
            assert!(rel(closed.targets[0].param(k), diag.targets[0].param(k)) < 1e-10, "{k:?}");
        }
        assert_eq!(closed.targets[0].crb_alpha_r, closed.targets[0].crb_alpha_i);
    }

    #[test]
    fn zero_rcs_diverges_in_closed_form() {
        let scene = small(vec![Target { rcs_re: 0.0, rcs_im: 0.0, ..target() }], 4);
        let c = closed_form_single(&scene, 0).unwrap().targets[0];
        assert!(c.crb_x.is_infinite() && c.crb_vy.is_infinite());
        assert!(c.crb_alpha.is_finite());
    }

    #[test]
    fn full_inverse_dominates_reciprocal_diagonal() {
        let scene = small(vec![target()], 8);
        let f = fim(&scene, &TransmitMode::Isotropic).unwrap();
        let (_, full) = full_crb(&f).unwrap();
        let diag = diagonal_crb(&f);
        for k in ParamKind::ALL {
            assert!(full.targets[0].param(k) >= diag.targets[0].param(k) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn bound_names_round_trip() {
        for b in Bound::ALL {
            assert_eq!(Bound::parse(b.name()), Some(b));
        }
        assert_eq!(Bound::parse("z"), None);
    }
}
