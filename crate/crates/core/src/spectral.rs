//! Eigendecomposition of the discrete operator and the kernels built from
//! it: the spectral projection `χ_[0,Ω](H)`, general `F(H)`, and the heat
//! semigroup `e^{-tH}`.
//!
//! Eigenvectors are normalized in the grid inner product
//! `⟨f, g⟩ = h^d ∑ f_i g_i`, so a kernel `k(x_i, x_j) = ∑ F(λ_m) φ_m(x_i) φ_m(x_j)`
//! acts by quadrature: `(F(H) f)(x_i) = h^d ∑_j k(x_i, x_j) f(x_j)`.

use std::f64::consts::E;
use std::sync::Arc;

use faer::{Mat, Side};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridShift, GridSpec};
use crate::operator::DiscreteOperator;

/// Default largest matrix size accepted by [`eigendecompose`].
pub const DEFAULT_SIZE_CAP: usize = 4096;
/// Default relative spectral margin `ε_spec / Ω` below which a warning is recorded.
pub const DEFAULT_MARGIN_REL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub size_cap: usize,
    pub margin_rel: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            size_cap: DEFAULT_SIZE_CAP,
            margin_rel: DEFAULT_MARGIN_REL,
        }
    }
}

/// Non-fatal conditions recorded alongside spectral results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralWarning {
    /// Some eigenvalue lies within `threshold` of `Ω`; the projection is
    /// ill-conditioned there.
    SmallMargin { margin: f64, threshold: f64 },
    /// The resolved spectrum does not reach `8Ω`.
    InsufficientRange { lambda_max: f64, required: f64 },
}

/// Full eigendecomposition of a [`DiscreteOperator`] with a band cutoff `Ω`.
#[derive(Clone, Debug)]
pub struct SpectralData {
    operator: Arc<DiscreteOperator>,
    eigenvalues: Arc<Vec<f64>>,
    /// Column `m` holds `φ_m`, orthonormal in the weighted inner product.
    modes: Arc<Mat<f64>>,
    omega: f64,
    band_len: usize,
    margin: f64,
    warnings: Vec<SpectralWarning>,
    margin_rel: f64,
}

pub fn eigendecompose(op: &DiscreteOperator, omega: f64) -> Result<SpectralData> {
    eigendecompose_with(op, omega, &SpectralConfig::default())
}

pub fn eigendecompose_with(
    op: &DiscreteOperator,
    omega: f64,
    config: &SpectralConfig,
) -> Result<SpectralData> {
    let n = op.dim();
    if n > config.size_cap {
        return Err(Error::SizeCap {
            n,
            cap: config.size_cap,
        });
    }
    let dense = op.matrix().to_dense();
    let evd = dense.selfadjoint_eigendecomposition(Side::Lower);
    let s = evd.s().column_vector();
    let u = evd.u();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.read(a).total_cmp(&s.read(b)));
    let eigenvalues: Vec<f64> = order.iter().map(|&m| s.read(m)).collect();
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    let scale = 1.0 / op.grid().cell_volume().sqrt();
    let modes = Mat::<f64>::from_fn(n, n, |i, m| u.read(i, order[m]) * scale);
    if (0..n).any(|m| modes.col(m).iter().any(|v| !v.is_finite())) {
        return Err(Error::Eigensolver("non-finite eigenvector entry".into()));
    }

    SpectralData {
        operator: Arc::new(op.clone()),
        eigenvalues: Arc::new(eigenvalues),
        modes: Arc::new(modes),
        omega: 1.0,
        band_len: 0,
        margin: 0.0,
        warnings: Vec::new(),
        margin_rel: config.margin_rel,
    }
    .with_omega(omega)
}

impl SpectralData {
    /// Same eigenpairs, different band cutoff.
    pub fn with_omega(&self, omega: f64) -> Result<SpectralData> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!("Ω must be positive, got {omega}")));
        }
        let band_len = self.eigenvalues.iter().take_while(|&&l| l <= omega).count();
        let margin = self
            .eigenvalues
            .iter()
            .map(|l| (l - omega).abs())
            .fold(f64::INFINITY, f64::min);
        let threshold = self.margin_rel * omega;
        let mut warnings = Vec::new();
        if margin < threshold {
            warnings.push(SpectralWarning::SmallMargin { margin, threshold });
        }
        Ok(SpectralData {
            omega,
            band_len,
            margin,
            warnings,
            ..self.clone()
        })
    }

    pub fn grid(&self) -> &GridSpec {
        self.operator.grid()
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.operator
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// `max |λ|`, the spectral norm of the operator.
    pub fn norm(&self) -> f64 {
        self.eigenvalues
            .iter()
            .fold(0.0f64, |m, l| m.max(l.abs()))
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Indices `m` with `λ_m ≤ Ω` (a prefix, since eigenvalues are sorted).
    pub fn band(&self) -> std::ops::Range<usize> {
        0..self.band_len
    }

    pub fn band_dim(&self) -> usize {
        self.band_len
    }

    /// `min_m |λ_m - Ω|`.
    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn warnings(&self) -> &[SpectralWarning] {
        &self.warnings
    }

    /// Value of the weighted-orthonormal eigenvector `φ_m` at node `i`.
    pub fn mode_value(&self, m: usize, i: usize) -> f64 {
        self.modes.read(i, m)
    }

    pub fn mode(&self, m: usize) -> Vec<f64> {
        self.modes.col(m).iter().copied().collect()
    }

    /// Weighted inner product `h^d ∑ f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.grid().cell_volume() * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm_l2(&self, f: &[f64]) -> f64 {
        self.inner(f, f).sqrt()
    }

    /// `∑_m c_m φ_m` over the given modes.
    pub fn synthesize(&self, modes: &[usize], coeffs: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut f = vec![0.0; n];
        for (&m, &c) in modes.iter().zip(coeffs) {
            let col = self.modes.col(m);
            for (fi, v) in f.iter_mut().zip(col.iter()) {
                *fi += c * v;
            }
        }
        f
    }

    /// `max_{m,l} |⟨φ_m, φ_l⟩ - δ_ml|`.
    pub fn orthonormality_error(&self) -> f64 {
        let gram = self.modes.transpose() * self.modes.as_ref();
        let w = self.grid().cell_volume();
        let n = self.n();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((w * gram.read(i, j) - target).abs());
            }
        }
        worst
    }

    /// `max_m ‖Hφ_m - λ_m φ_m‖ / ‖φ_m‖`, relative to `‖H‖`.
    pub fn max_relative_residual(&self) -> f64 {
        let norm = self.norm().max(f64::MIN_POSITIVE);
        (0..self.n())
            .map(|m| {
                let v = self.mode(m);
                let hv = self.operator.apply(&v);
                let lam = self.eigenvalues[m];
                let r: f64 = hv.iter().zip(&v).map(|(a, b)| (a - lam * b).powi(2)).sum();
                let nv: f64 = v.iter().map(|x| x * x).sum();
                (r / nv).sqrt() / norm
            })
            .fold(0.0, f64::max)
    }

    /// Diagonal `x ↦ ∑_m F(λ_m) φ_m(x)²` of `F(H)`, without forming the
    /// full kernel.
    pub fn calculus_diagonal<F: Fn(f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        let weights = self.weights(f)?;
        let n = self.n();
        let mut diag = vec![0.0; n];
        for (m, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (d, v) in diag.iter_mut().zip(self.modes.col(m).iter()) {
                *d += w * v * v;
            }
        }
        Ok(diag)
    }

    fn weights<F: Fn(f64) -> f64>(&self, f: F) -> Result<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|&l| {
                let w = f(l);
                if w.is_finite() {
                    Ok(w)
                } else {
                    Err(Error::NonFinite(l))
                }
            })
            .collect()
    }

    fn provenance(&self) -> KernelProvenance {
        KernelProvenance {
            n: self.n(),
            omega: self.omega,
            band_dim: self.band_len,
            margin: self.margin,
        }
    }
}

/// What a kernel represents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    Projection,
    Calculus,
    Heat { t: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelProvenance {
    pub n: usize,
    pub omega: f64,
    pub band_dim: usize,
    pub margin: f64,
}

/// Dense symmetric kernel `k(x_i, x_j)` on the grid nodes, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    grid: GridSpec,
    values: Vec<f64>,
    kind: KernelKind,
    provenance: KernelProvenance,
}

impl KernelMatrix {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.node_count()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `x ↦ k(x, x)`.
    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.get(i, i)).collect()
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn omega(&self) -> f64 {
        self.provenance.omega
    }

    pub fn provenance(&self) -> &KernelProvenance {
        &self.provenance
    }

    /// `h^d ∑_j k(x_i, x_j) f(x_j)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let w = self.grid.cell_volume();
        (0..self.n())
            .map(|i| w * self.row(i).iter().zip(f).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    }

    /// Weighted L² norm of a node function on this kernel's grid.
    pub fn norm_l2(&self, f: &[f64]) -> f64 {
        (self.grid.cell_volume() * f.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// `max_i ‖k_{x_i + h e_0} - k_{x_i}‖₂`: the discrete modulus of
    /// continuity of `x ↦ k_x` for a one-step shift along axis 0.
    pub fn continuity_modulus(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|i| {
                let j = self.grid.shifted(i, GridShift::one_d(1));
                let d: Vec<f64> = self.row(j).iter().zip(self.row(i)).map(|(a, b)| a - b).collect();
                self.norm_l2(&d)
            })
            .fold(0.0, f64::max)
    }

    /// `max |k(x, y) - k(x + s, y + s)|` over all node pairs and all
    /// single-step shifts `s`; zero for translation-invariant kernels.
    pub fn translation_defect(&self) -> f64 {
        let n = self.n();
        let dim = self.grid.dim();
        let mut worst = 0.0f64;
        for axis in 0..dim {
            let mut s = [0isize; 2];
            s[axis] = 1;
            for i in 0..n {
                let si = self.grid.shifted(i, GridShift(s));
                for j in 0..n {
                    let sj = self.grid.shifted(j, GridShift(s));
                    worst = worst.max((self.get(i, j) - self.get(si, sj)).abs());
                }
            }
        }
        worst
    }
}

/// `∑_{m ∈ modes} w_m φ_m(x_i) φ_m(x_j)`, assembled on the upper triangle
/// and mirrored so the result is exactly symmetric.
fn assemble_kernel(
    spec: &SpectralData,
    modes: &[usize],
    weights: &[f64],
    kind: KernelKind,
) -> KernelMatrix {
    let n = spec.n();
    let b = modes.len();
    let mut p = vec![0.0; n * b];
    let mut q = vec![0.0; n * b];
    for (slot, (&m, &w)) in modes.iter().zip(weights).enumerate() {
        let col = spec.modes.col(m);
        for (i, v) in col.iter().enumerate() {
            p[i * b + slot] = *v;
            q[i * b + slot] = w * v;
        }
    }
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        let qi = &q[i * b..(i + 1) * b];
        for j in i..n {
            let v = dot(qi, &p[j * b..(j + 1) * b]);
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    KernelMatrix {
        grid: spec.grid().clone(),
        values,
        kind,
        provenance: spec.provenance(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * c + l] * b[4 * c + l];
        }
    }
    let mut tail = 0.0;
    for k in 4 * chunks..a.len() {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Kernel of the spectral projection `χ_[0,Ω](H)`.
pub fn reproducing_kernel(spec: &SpectralData) -> KernelMatrix {
    let modes: Vec<usize> = spec.band().collect();
    let weights = vec![1.0; modes.len()];
    assemble_kernel(spec, &modes, &weights, KernelKind::Projection)
}

/// Kernel of `F(H)`. Modes with `F(λ_m) = 0` are skipped, so the indicator
/// of `[0, Ω]` reproduces [`reproducing_kernel`] exactly.
pub fn functional_calculus<F: Fn(f64) -> f64>(spec: &SpectralData, f: F) -> Result<KernelMatrix> {
    let all = spec.weights(f)?;
    let (modes, weights): (Vec<usize>, Vec<f64>) = all
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(m, &w)| (m, w))
        .unzip();
    let kind = if modes == spec.band().collect::<Vec<_>>() && weights.iter().all(|&w| w == 1.0) {
        KernelKind::Projection
    } else {
        KernelKind::Calculus
    };
    Ok(assemble_kernel(spec, &modes, &weights, kind))
}

/// Heat kernel `p_t` together with the empirical on-diagonal constants
/// `t^{d/2} min_x p_t(x,x)` and `t^{d/2} max_x p_t(x,x)`.
#[derive(Clone, Debug)]
pub struct HeatKernel {
    pub kernel: KernelMatrix,
    pub lower_constant: f64,
    pub upper_constant: f64,
}

pub fn heat_kernel(spec: &SpectralData, t: f64) -> Result<HeatKernel> {
    check_time(t)?;
    let mut kernel = functional_calculus(spec, |l| (-t * l).exp())?;
    kernel.kind = KernelKind::Heat { t };
    let (lower_constant, upper_constant) = heat_constants(spec.grid(), t, &kernel.diagonal());
    Ok(HeatKernel {
        kernel,
        lower_constant,
        upper_constant,
    })
}

/// On-diagonal heat constants from the diagonal alone.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatDiagonalBounds {
    pub t: f64,
    pub lower_constant: f64,
    pub upper_constant: f64,
}

pub fn heat_diagonal_bounds(spec: &SpectralData, t: f64) -> Result<HeatDiagonalBounds> {
    check_time(t)?;
    let diag = spec.calculus_diagonal(|l| (-t * l).exp())?;
    let (lower_constant, upper_constant) = heat_constants(spec.grid(), t, &diag);
    Ok(HeatDiagonalBounds {
        t,
        lower_constant,
        upper_constant,
    })
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("heat time must be positive, got {t}")))
    }
}

fn heat_constants(grid: &GridSpec, t: f64, diag: &[f64]) -> (f64, f64) {
    let s = t.powf(grid.dim() as f64 / 2.0);
    let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = diag.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (s * lo, s * hi)
}

/// Outcome of the randomized Bernstein inequality test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinReport {
    pub seed: u64,
    pub trials: usize,
    pub k_max: u32,
    /// `max over trials of ‖H^k f‖ / (Ω^k ‖f‖)`, for `k = 1..=k_max`.
    pub max_ratio: Vec<f64>,
    pub tolerance: f64,
}

pub const BERNSTEIN_TOL: f64 = 1e-8;

/// `‖H^k f‖ / (Ω^k ‖f‖)` for `k = 1..=k_max`, applying the sparse
/// operator repeatedly.
pub fn power_ratios(spec: &SpectralData, f: &[f64], k_max: u32) -> Vec<f64> {
    let base = spec.norm_l2(f);
    let mut g = f.to_vec();
    let mut out = Vec::with_capacity(k_max as usize);
    for k in 1..=k_max {
        g = spec.operator.apply(&g);
        out.push(spec.norm_l2(&g) / (spec.omega.powi(k as i32) * base));
    }
    out
}

/// Draws `trials` random band functions (standard normal coefficients on
/// the band eigenvectors) and checks `‖H^k f‖ ≤ Ω^k ‖f‖ (1 + 10⁻⁸)`.
pub fn bernstein_check(
    spec: &SpectralData,
    trials: usize,
    k_max: u32,
    seed: u64,
) -> Result<BernsteinReport> {
    if trials == 0 || k_max == 0 {
        return Err(Error::InvalidParameter("trials and k_max must be at least 1".into()));
    }
    if spec.band_dim() == 0 {
        return Err(Error::EmptyBand);
    }
    let modes: Vec<usize> = spec.band().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = vec![0.0f64; k_max as usize];
    for _ in 0..trials {
        let coeffs: Vec<f64> = (0..modes.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let f = spec.synthesize(&modes, &coeffs);
        for (k, r) in power_ratios(spec, &f, k_max).into_iter().enumerate() {
            max_ratio[k] = max_ratio[k].max(r);
        }
    }
    for (k, &r) in max_ratio.iter().enumerate() {
        if r > 1.0 + BERNSTEIN_TOL {
            return Err(Error::Bernstein {
                power: k as u32 + 1,
                ratio: r,
            });
        }
    }
    Ok(BernsteinReport {
        seed,
        trials,
        k_max,
        max_ratio,
        tolerance: BERNSTEIN_TOL,
    })
}

/// Pointwise comparison `k(x,x) ≤ e · p_{1/Ω}(x,x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompkerReport {
    /// `max_x k(x,x) / (e p_{1/Ω}(x,x))`; at most one when the bound holds.
    pub max_ratio: f64,
    pub holds: bool,
}

pub fn compker_check(spec: &SpectralData) -> Result<CompkerReport> {
    let omega = spec.omega;
    let kdiag = spec.calculus_diagonal(|l| if l <= omega { 1.0 } else { 0.0 })?;
    let pdiag = spec.calculus_diagonal(|l| (-l / omega).exp())?;
    let max_ratio = kdiag
        .iter()
        .zip(&pdiag)
        .map(|(k, p)| k / (E * p))
        .fold(0.0, f64::max);
    Ok(CompkerReport {
        max_ratio,
        holds: max_ratio <= 1.0 + 1e-12,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicLevel {
    pub r: u32,
    pub t: f64,
    /// `min_x (rhs - lhs)`; nonnegative when the inequality holds.
    pub min_slack: f64,
    /// `min_x [p_t(x,x) - ∑_k χ_[0,2^{k+1}Ω](x,x) e^{-t 2^k Ω}]`, a lower
    /// bound for `min_x k(x,x)`.
    pub implied_lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicReport {
    pub levels: Vec<DyadicLevel>,
    pub shells: usize,
    pub insufficient_range: bool,
    pub min_kernel_diagonal: f64,
    /// Largest implied lower bound over the levels.
    pub best_lower_bound: f64,
    pub warnings: Vec<SpectralWarning>,
}

/// Evaluates both sides of
/// `e^{-tH} ≤ χ_[0,Ω](H) + ∑_{k≥0} χ_[0,2^{k+1}Ω](H) e^{-t 2^k Ω}`
/// on the diagonal at `t = 2^r / Ω`, `r = 0..=3`. The dyadic sum stops at the
/// first shell that covers the largest eigenvalue.
pub fn dyadic_lower_bound_check(spec: &SpectralData) -> Result<DyadicReport> {
    let omega = spec.omega;
    let lambda_max = spec.lambda_max();
    let mut warnings = Vec::new();
    let insufficient_range = lambda_max < 8.0 * omega;
    if insufficient_range {
        warnings.push(SpectralWarning::InsufficientRange {
            lambda_max,
            required: 8.0 * omega,
        });
    }
    let kdiag = spec.calculus_diagonal(|l| if l <= omega { 1.0 } else { 0.0 })?;
    let mut shells = 0usize;
    while 2f64.powi(shells as i32 + 1) * omega < lambda_max {
        shells += 1;
    }
    let shell_diags: Vec<Vec<f64>> = (0..=shells)
        .map(|k| {
            let cut = 2f64.powi(k as i32 + 1) * omega;
            spec.calculus_diagonal(|l| if l <= cut { 1.0 } else { 0.0 })
        })
        .collect::<Result<_>>()?;

    let mut levels = Vec::new();
    for r in 0..=3u32 {
        let t = 2f64.powi(r as i32) / omega;
        let lhs = spec.calculus_diagonal(|l| (-t * l).exp())?;
        let factors: Vec<f64> = (0..=shells)
            .map(|k| (-t * 2f64.powi(k as i32) * omega).exp())
            .collect();
        let mut min_slack = f64::INFINITY;
        let mut implied = f64::INFINITY;
        for x in 0..spec.n() {
            let tail: f64 = shell_diags.iter().zip(&factors).map(|(d, f)| d[x] * f).sum();
            let rhs = kdiag[x] + tail;
            if lhs[x] > rhs * (1.0 + 1e-12) {
                return Err(Error::DyadicBound {
                    node: x,
                    t,
                    lhs: lhs[x],
                    rhs,
                });
            }
            min_slack = min_slack.min(rhs - lhs[x]);
            implied = implied.min(lhs[x] - tail);
        }
        levels.push(DyadicLevel {
            r,
            t,
            min_slack,
            implied_lower_bound: implied,
        });
    }
    let best_lower_bound = levels
        .iter()
        .map(|l| l.implied_lower_bound)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(DyadicReport {
        levels,
        shells: shells + 1,
        insufficient_range,
        min_kernel_diagonal: kdiag.iter().copied().fold(f64::INFINITY, f64::min),
        best_lower_bound,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::discretize;
    use crate::symbol::{make_symbol, MatrixSpec, SymbolRecipe};
    use std::f64::consts::PI;

    fn laplacian_1d(l: f64, n: usize) -> DiscreteOperator {
        let g = GridSpec::one_d(l, n).unwrap();
        let a = make_symbol(&g, &SymbolRecipe::Constant { b: MatrixSpec::Scalar(1.0) }, 1.0)
            .unwrap();
        discretize(&a).unwrap()
    }

    #[test]
    fn size_cap_is_enforced() {
        let op = laplacian_1d(8.0, 64);
        let cfg = SpectralConfig {
            size_cap: 32,
            ..Default::default()
        };
        assert!(matches!(
            eigendecompose_with(&op, 1.0, &cfg),
            Err(Error::SizeCap { n: 64, cap: 32 })
        ));
        assert!(eigendecompose(&op, 0.0).is_err());
    }

    #[test]
    fn low_cutoff_keeps_only_constants() {
        let spec = eigendecompose(&laplacian_1d(8.0, 32), 0.1).unwrap();
        assert_eq!(spec.band_dim(), 1);
        let k = reproducing_kernel(&spec);
        for v in k.values() {
            assert!((v - 1.0 / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn full_band_is_scaled_delta() {
        let spec = eigendecompose(&laplacian_1d(8.0, 32), 1e6).unwrap();
        assert_eq!(spec.band_dim(), 32);
        let k = reproducing_kernel(&spec);
        let inv_h = 32.0 / 8.0;
        for i in 0..32 {
            for j in 0..32 {
                let target = if i == j { inv_h } else { 0.0 };
                assert!((k.get(i, j) - target).abs() < 1e-12);
            }
        }
        let one = functional_calculus(&spec, |_| 1.0).unwrap();
        assert_eq!(one.values(), k.values());
    }

    #[test]
    fn indicator_calculus_is_bitwise_projection() {
        let spec = eigendecompose(&laplacian_1d(16.0, 64), PI * PI).unwrap();
        let k = reproducing_kernel(&spec);
        let omega = spec.omega();
        let f = functional_calculus(&spec, |l| if l <= omega { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(k.values(), f.values());
        assert_eq!(f.kind(), &KernelKind::Projection);
    }

    #[test]
    fn non_finite_function_rejected() {
        let spec = eigendecompose(&laplacian_1d(8.0, 16), 1.0).unwrap();
        assert!(matches!(
            functional_calculus(&spec, |l| 1.0 / l.max(0.0)),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn kernel_reproduces_band_and_is_idempotent() {
        let spec = eigendecompose(&laplacian_1d(16.0, 64), 4.0).unwrap();
        let k = reproducing_kernel(&spec);
        for m in spec.band() {
            let phi = spec.mode(m);
            let back = k.apply(&phi);
            for (a, b) in back.iter().zip(&phi) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        let w = spec.grid().cell_volume();
        let n = spec.n();
        for i in (0..n).step_by(7) {
            for l in (0..n).step_by(5) {
                let kk: f64 = (0..n).map(|j| k.get(i, j) * k.get(j, l)).sum::<f64>() * w;
                assert!((kk - k.get(i, l)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn heat_kernel_tends_to_ground_state() {
        let spec = eigendecompose(&laplacian_1d(8.0, 32), 1.0).unwrap();
        let hk = heat_kernel(&spec, 200.0).unwrap();
        for v in hk.kernel.values() {
            assert!((v - 1.0 / 8.0).abs() < 1e-10);
        }
        let bounds = heat_diagonal_bounds(&spec, 200.0).unwrap();
        assert!((bounds.lower_constant - hk.lower_constant).abs() < 1e-12);
        assert!(heat_kernel(&spec, 0.0).is_err());
    }

    #[test]
    fn bernstein_ratio_for_eigenvector_is_exact_power() {
        let spec = eigendecompose(&laplacian_1d(16.0, 64), 3.0).unwrap();
        let m = spec.band_dim() - 1;
        let lam = spec.eigenvalues()[m];
        let ratios = power_ratios(&spec, &spec.mode(m), 4);
        for (k, r) in ratios.iter().enumerate() {
            let expected = (lam / 3.0).powi(k as i32 + 1);
            assert!((r - expected).abs() < 1e-10 * expected.max(1.0));
        }
        let ground = power_ratios(&spec, &spec.mode(0), 4);
        assert!(ground.iter().all(|r| *r < 1e-10));
    }

    #[test]
    fn bernstein_check_passes_and_is_seeded() {
        let spec = eigendecompose(&laplacian_1d(16.0, 64), 3.0).unwrap();
        let a = bernstein_check(&spec, 10, 4, 7).unwrap();
        let b = bernstein_check(&spec, 10, 4, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.max_ratio.iter().all(|&r| r <= 1.0 + 1e-8));
        assert!(bernstein_check(&spec, 0, 4, 7).is_err());
    }

    #[test]
    fn dyadic_bound_for_full_band() {
        let spec = eigendecompose(&laplacian_1d(8.0, 32), 1e4).unwrap();
        let rep = dyadic_lower_bound_check(&spec).unwrap();
        assert!(rep.insufficient_range);
        assert!(rep.levels.iter().all(|l| l.min_slack >= 0.0));
    }
}
