//! Fisher information for the deterministic-mean, white-noise model.
//!
//! With `y(m) = Σ_q α_q a_R(m,q) a_T(m,q)^T x(m) + n(m)` and noise variance
//! `σ²`, entry `(i, j)` is `(2/σ²) Σ_m Re[(D_i(m) x(m))^H D_j(m) x(m)]`, where
//! `D_i(m)` is the derivative of the channel matrix with respect to parameter
//! `i`. Every `D_i(m)` is a sum of at most two rank-1 outer products, so all
//! traces reduce to products of vector inner products and no `N_r × N_t`
//! matrix is ever formed during assembly.

use crate::error::{invalid, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::scene::{ParamKind, Scene};
use crate::steering::{ArrayResponse, Side};
use crate::C64;
use nalgebra::{DMatrix, SymmetricEigen};

/// Transmit signal model.
#[derive(Clone, Debug, PartialEq)]
pub enum TransmitMode {
    /// `E{x(m) x(m)^H} = P I` for every snapshot.
    Isotropic,
    /// Known symbols, an `N_t × M` matrix whose column `m - 1` is `x(m)`.
    Symbols(DMatrix<C64>),
}

/// Deliberate corruption of one analytic derivative, used to check that the
/// verification battery notices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivativeFault {
    pub kind: ParamKind,
    pub target: usize,
    /// The derivative is multiplied by `1 + relative`.
    pub relative: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FimOptions {
    pub execution: Execution,
    pub fault: Option<DerivativeFault>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FisherInfo {
    matrix: DMatrix<f64>,
    num_targets: usize,
    noise_var: f64,
    power: f64,
    snapshots: usize,
}

impl FisherInfo {
    /// Wraps an explicit `6Q × 6Q` matrix in the standard parameter ordering.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let n = matrix.nrows();
        if n == 0 || n != matrix.ncols() || n % 6 != 0 {
            return Err(invalid(format!(
                "Fisher matrix must be square with a positive multiple of 6 rows, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(FisherInfo {
            matrix,
            num_targets: n / 6,
            noise_var: f64::NAN,
            power: f64::NAN,
            snapshots: 0,
        })
    }

    pub(crate) fn with_context(matrix: DMatrix<f64>, scene: &Scene) -> Self {
        FisherInfo {
            num_targets: scene.num_targets(),
            matrix,
            noise_var: scene.noise_var(),
            power: scene.power(),
            snapshots: scene.snapshots(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_targets(&self) -> usize {
        self.num_targets
    }

    /// Noise variance, transmit power and snapshot count the matrix was
    /// assembled for (NaN / 0 when built from a raw matrix).
    pub fn scale_context(&self) -> (f64, f64, usize) {
        (self.noise_var, self.power, self.snapshots)
    }

    pub fn index(&self, kind: ParamKind, q: usize) -> usize {
        kind.index(q, self.num_targets)
    }

    pub fn get(&self, a: (ParamKind, usize), b: (ParamKind, usize)) -> f64 {
        self.matrix[(self.index(a.0, a.1), self.index(b.0, b.1))]
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm()
    }

    /// `‖F - F^T‖ / ‖F‖`.
    pub fn symmetry_error(&self) -> f64 {
        let norm = self.frobenius();
        if norm == 0.0 {
            return 0.0;
        }
        (&self.matrix - self.matrix.transpose()).norm() / norm
    }

    /// Smallest eigenvalue of the symmetrised matrix divided by `‖F‖`.
    pub fn min_eigenvalue_ratio(&self) -> f64 {
        let norm = self.frobenius();
        if norm == 0.0 {
            return 0.0;
        }
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        SymmetricEigen::new(sym).eigenvalues.min() / norm
    }

    /// Symmetric to 1e-10 and no eigenvalue below `-1e-8 ‖F‖`.
    pub fn is_symmetric_psd(&self) -> bool {
        self.symmetry_error() <= 1e-10 && self.min_eigenvalue_ratio() >= -1e-8
    }

    /// `‖self - other‖ / ‖other‖`.
    pub fn relative_difference(&self, other: &FisherInfo) -> f64 {
        let denom = other.frobenius().max(1e-300);
        (&self.matrix - &other.matrix).norm() / denom
    }
}

/// Derivative of the channel matrix of one target at one snapshot.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelDerivative {
    pub matrix: DMatrix<C64>,
    pub kind: ParamKind,
    pub target: usize,
    pub snapshot: usize,
}

fn outer(u: &[C64], v: &[C64], scale: C64) -> DMatrix<C64> {
    DMatrix::from_fn(u.len(), v.len(), |i, j| scale * u[i] * v[j])
}

/// `α_q a_R(m,q) a_T(m,q)^T`.
pub fn channel_matrix(scene: &Scene, m: usize, q: usize) -> Result<DMatrix<C64>> {
    let alpha = scene.target(q)?.rcs();
    let a_t = ArrayResponse::new(scene, Side::Tx, q)?.steering(m);
    let a_r = ArrayResponse::new(scene, Side::Rx, q)?.steering(m);
    Ok(outer(&a_r, &a_t, alpha))
}

/// Analytic channel derivative: `a_R a_T^T` (times `j` for `αI`) for the
/// reflectivity, `α (ȧ_R a_T^T + a_R ȧ_T^T)` for location and velocity.
pub fn d_channel(scene: &Scene, m: usize, q: usize, kind: ParamKind) -> Result<ChannelDerivative> {
    let alpha = scene.target(q)?.rcs();
    let tx = ArrayResponse::new(scene, Side::Tx, q)?;
    let rx = ArrayResponse::new(scene, Side::Rx, q)?;
    let (a_t, a_r) = (tx.steering(m), rx.steering(m));
    let matrix = match kind {
        ParamKind::AlphaR => outer(&a_r, &a_t, C64::new(1.0, 0.0)),
        ParamKind::AlphaI => outer(&a_r, &a_t, C64::new(0.0, 1.0)),
        _ => {
            let d_t = tx.derivative(m, kind)?;
            let d_r = rx.derivative(m, kind)?;
            outer(&d_r, &a_t, alpha) + outer(&a_r, &d_t, alpha)
        }
    };
    Ok(ChannelDerivative {
        matrix,
        kind,
        target: q,
        snapshot: m,
    })
}

/// One rank-1 piece `coef · u v^T` of a channel derivative, with `u` and `v`
/// given as indices into the per-snapshot Rx and Tx vector tables.
#[derive(Clone, Copy)]
struct Rank1 {
    coef: C64,
    rx: usize,
    tx: usize,
}

/// Vector table layout per target: `[a, ∂x, ∂y, ∂vx, ∂vy]`.
const SLOTS: usize = 5;

fn derivative_terms(scene: &Scene, fault: Option<DerivativeFault>) -> Vec<Vec<Rank1>> {
    let n_targets = scene.num_targets();
    let mut terms = vec![Vec::new(); 6 * n_targets];
    for (q, target) in scene.targets().iter().enumerate() {
        let base = q * SLOTS;
        let alpha = target.rcs();
        for kind in ParamKind::ALL {
            let mut pieces = match kind {
                ParamKind::AlphaR => vec![Rank1 { coef: C64::new(1.0, 0.0), rx: base, tx: base }],
                ParamKind::AlphaI => vec![Rank1 { coef: C64::new(0.0, 1.0), rx: base, tx: base }],
                _ => {
                    let slot = base + 1 + kind.block();
                    vec![
                        Rank1 { coef: alpha, rx: slot, tx: base },
                        Rank1 { coef: alpha, rx: base, tx: slot },
                    ]
                }
            };
            if let Some(f) = fault.filter(|f| f.kind == kind && f.target == q) {
                for p in &mut pieces {
                    p.coef *= 1.0 + f.relative;
                }
            }
            terms[kind.index(q, n_targets)] = pieces;
        }
    }
    terms
}

fn gram(vectors: &[Vec<C64>]) -> Vec<C64> {
    let n = vectors.len();
    let mut g = vec![C64::new(0.0, 0.0); n * n];
    for a in 0..n {
        for b in a..n {
            let s: C64 = vectors[a].iter().zip(&vectors[b]).map(|(u, v)| u.conj() * v).sum();
            g[a * n + b] = s;
            g[b * n + a] = s.conj();
        }
    }
    g
}

fn transposed_products(vectors: &[Vec<C64>], x: &[C64]) -> Vec<C64> {
    vectors
        .iter()
        .map(|v| v.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn fim(scene: &Scene, mode: &TransmitMode) -> Result<FisherInfo> {
    fim_with(scene, mode, &FimOptions::default())
}

pub fn fim_with(scene: &Scene, mode: &TransmitMode, opts: &FimOptions) -> Result<FisherInfo> {
    let asm = Assembler::new(scene, opts)?;
    match mode {
        TransmitMode::Isotropic => Ok(asm.isotropic()),
        TransmitMode::Symbols(x) => asm.symbols(x),
    }
}

/// Steering vectors, derivatives and Gram matrices for every snapshot,
/// reusable across many symbol matrices.
pub(crate) struct Assembler<'a> {
    scene: &'a Scene,
    execution: Execution,
    dim: usize,
    slots: usize,
    terms: Vec<Vec<Rank1>>,
    tables: Vec<SnapshotTable>,
}

struct SnapshotTable {
    tx: Vec<Vec<C64>>,
    g_rx: Vec<C64>,
    g_tx: Vec<C64>,
}

impl<'a> Assembler<'a> {
    pub(crate) fn new(scene: &'a Scene, opts: &FimOptions) -> Result<Self> {
        let n_targets = scene.num_targets();
        let responses = (0..n_targets)
            .map(|q| Ok((ArrayResponse::new(scene, Side::Tx, q)?, ArrayResponse::new(scene, Side::Rx, q)?)))
            .collect::<Result<Vec<_>>>()?;
        let slots = SLOTS * n_targets;
        let tables = opts.execution.map(scene.snapshots(), |idx| {
            let m = idx + 1;
            let mut tx = Vec::with_capacity(slots);
            let mut rx = Vec::with_capacity(slots);
            for (t, r) in &responses {
                let (a, d) = t.with_derivatives(m);
                tx.push(a);
                tx.extend(d);
                let (a, d) = r.with_derivatives(m);
                rx.push(a);
                rx.extend(d);
            }
            SnapshotTable {
                g_rx: gram(&rx),
                g_tx: gram(&tx),
                tx,
            }
        });
        Ok(Assembler {
            scene,
            execution: opts.execution,
            dim: 6 * n_targets,
            slots,
            terms: derivative_terms(scene, opts.fault),
            tables,
        })
    }

    fn finish(&self, per_snapshot: Vec<Vec<f64>>, scale: f64) -> FisherInfo {
        let dim = self.dim;
        let total = pairwise_sum(&per_snapshot);
        let matrix = DMatrix::from_fn(dim, dim, |i, j| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            scale * total[a * dim + b]
        });
        FisherInfo::with_context(matrix, self.scene)
    }

    pub(crate) fn isotropic(&self) -> FisherInfo {
        let (dim, slots) = (self.dim, self.slots);
        let per_snapshot = self.execution.map(self.tables.len(), |idx| {
            let t = &self.tables[idx];
            let mut out = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in i..dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in &self.terms[i] {
                        for b in &self.terms[j] {
                            acc += a.coef.conj() * b.coef * t.g_rx[a.rx * slots + b.rx] * t.g_tx[a.tx * slots + b.tx];
                        }
                    }
                    out[i * dim + j] = acc.re;
                }
            }
            out
        });
        self.finish(per_snapshot, 2.0 * self.scene.power() / self.scene.noise_var())
    }

    pub(crate) fn symbols(&self, x: &DMatrix<C64>) -> Result<FisherInfo> {
        let (n_tx, snapshots) = (self.scene.tx().count(), self.scene.snapshots());
        if x.nrows() != n_tx || x.ncols() != snapshots {
            return Err(invalid(format!(
                "symbol matrix is {}x{}, expected {}x{} (N_t x M)",
                x.nrows(),
                x.ncols(),
                n_tx,
                snapshots
            )));
        }
        let (dim, slots) = (self.dim, self.slots);
        let per_snapshot = self.execution.map(snapshots, |idx| {
            let t = &self.tables[idx];
            let col: Vec<C64> = x.column(idx).iter().copied().collect();
            let s = transposed_products(&t.tx, &col);
            let mut out = vec![0.0; dim * dim];
            for i in 0..dim {
                for j in i..dim {
                    let mut acc = C64::new(0.0, 0.0);
                    for a in &self.terms[i] {
                        for b in &self.terms[j] {
                            acc += (a.coef * s[a.tx]).conj() * b.coef * s[b.tx] * t.g_rx[a.rx * slots + b.rx];
                        }
                    }
                    out[i * dim + j] = acc.re;
                }
            }
            out
        });
        Ok(self.finish(per_snapshot, 2.0 / self.scene.noise_var()))
    }
}
