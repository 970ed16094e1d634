//! Sampling and interpolation bounds, localization curves, the
//! approximate-identity check and centered-kernel convergence.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::constcoef::{periodic_sum, Ellipsoid};
use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::grid::{GridShift, GridSpec};
use crate::spectral::{KernelMatrix, SpectralData};

/// Default relative threshold for declaring `A > 0`.
pub const SAMPLING_TOL_REL: f64 = 1e-8;
/// Default relative threshold (against the largest Gram diagonal) for
/// declaring the kernel Gram positive definite.
pub const RIESZ_TOL_REL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingVerdict {
    StableSampling,
    NotSampling,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationVerdict {
    Interpolating,
    NotInterpolating,
}

/// Frame bounds `A‖f‖² ≤ ∑_s |f(s)|² ≤ B‖f‖²` on the band, and the Riesz
/// bound of `{k_s}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub a: f64,
    pub b_upper: f64,
    pub riesz_min: f64,
    pub band_dim: usize,
    pub num_points: usize,
    pub sampling: SamplingVerdict,
    pub interpolation: InterpolationVerdict,
    pub tol_a: f64,
    pub tol_riesz: f64,
}

fn sorted_eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>> {
    let mut eig = m.selfadjoint_eigenvalues(Side::Lower);
    if eig.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigensolver("non-finite eigenvalue".into()));
    }
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Evaluation matrix `E_{s,m} = φ_m(s)` over the band.
fn evaluation_matrix(points: &PointSet, spec: &SpectralData) -> Mat<f64> {
    let band: Vec<usize> = spec.band().collect();
    let nodes = points.nodes();
    Mat::from_fn(nodes.len(), band.len(), |s, m| spec.mode_value(band[m], nodes[s]))
}

pub fn frame_bounds(points: &PointSet, spec: &SpectralData) -> Result<FrameReport> {
    if spec.band_dim() == 0 {
        return Err(Error::EmptyBand);
    }
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    if points.grid() != spec.grid() {
        return Err(Error::InvalidPoints("point set lives on a different grid".into()));
    }
    let e = evaluation_matrix(points, spec);
    let frame = sorted_eigenvalues(&(e.transpose() * &e))?;
    let gram = sorted_eigenvalues(&(&e * e.transpose()))?;
    let a = frame[0].max(0.0);
    let b_upper = *frame.last().unwrap();
    let riesz_min = gram[0];
    let max_diag = (0..e.nrows())
        .map(|s| (0..e.ncols()).map(|m| e.read(s, m).powi(2)).sum::<f64>())
        .fold(0.0, f64::max);
    let tol_a = SAMPLING_TOL_REL * b_upper;
    let tol_riesz = RIESZ_TOL_REL * max_diag;
    let sampling = if a > tol_a && points.len() >= spec.band_dim() {
        SamplingVerdict::StableSampling
    } else {
        SamplingVerdict::NotSampling
    };
    let interpolation = if riesz_min > tol_riesz {
        InterpolationVerdict::Interpolating
    } else {
        InterpolationVerdict::NotInterpolating
    };
    Ok(FrameReport {
        a,
        b_upper,
        riesz_min,
        band_dim: spec.band_dim(),
        num_points: points.len(),
        sampling,
        interpolation,
        tol_a,
        tol_riesz,
    })
}

/// Spectrum summary of the kernel Gram `G_st = k(s, t)` on `S`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RieszReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub max_diag: f64,
    pub tolerance: f64,
    pub interpolation: InterpolationVerdict,
}

pub fn riesz_lower_bound(points: &PointSet, kernel: &KernelMatrix) -> Result<RieszReport> {
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let nodes = points.nodes();
    let g = Mat::from_fn(nodes.len(), nodes.len(), |i, j| kernel.get(nodes[i], nodes[j]));
    let eig = sorted_eigenvalues(&g)?;
    let max_diag = nodes.iter().map(|&s| kernel.get(s, s)).fold(0.0, f64::max);
    let tolerance = RIESZ_TOL_REL * max_diag;
    let lambda_min = eig[0];
    Ok(RieszReport {
        lambda_min,
        lambda_max: *eig.last().unwrap(),
        max_diag,
        tolerance,
        interpolation: if lambda_min > tolerance {
            InterpolationVerdict::Interpolating
        } else {
            InterpolationVerdict::NotInterpolating
        },
    })
}

/// A curve `r ↦ value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
}

impl Curve {
    /// True if no value exceeds its predecessor by more than `slack`
    /// (absolute).
    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0] + slack)
    }

    pub fn value_at(&self, r: f64) -> Option<f64> {
        self.radii
            .iter()
            .position(|&x| (x - r).abs() <= 1e-12 * r.abs().max(1.0))
            .map(|i| self.values[i])
    }
}

fn check_localization_radii(grid: &GridSpec, radii: &[f64]) -> Result<()> {
    let cap = grid.min_length() / 2.0 - grid.max_spacing();
    for &r in radii {
        if !(r >= 0.0) {
            return Err(Error::InvalidParameter(format!("radius {r}")));
        }
        if r > cap * (1.0 + 1e-12) {
            return Err(Error::RadiusCap { radius: r, cap });
        }
    }
    Ok(())
}

/// For each row `x`, adds `weight(y)·|k(x, y)|²` to `tails[x][i]` for every
/// radius `r_i < |x - y|`.
fn tail_sums(kernel: &KernelMatrix, radii: &[f64], targets: &[usize]) -> Vec<f64> {
    let grid = kernel.grid();
    let n = grid.node_count();
    let mut sup = vec![0.0f64; radii.len()];
    let mut tails = vec![0.0f64; radii.len()];
    for x in 0..n {
        tails.iter_mut().for_each(|t| *t = 0.0);
        let row = kernel.row(x);
        for &y in targets {
            let d = grid.torus_distance(x, y);
            let v = row[y] * row[y];
            for (t, &r) in tails.iter_mut().zip(radii) {
                if d > r {
                    *t += v;
                }
            }
        }
        for (s, t) in sup.iter_mut().zip(&tails) {
            *s = s.max(*t);
        }
    }
    sup
}

/// `r ↦ sup_x h^d ∑_{|y - x| > r} |k(x, y)|²`.
pub fn weak_localization_curve(kernel: &KernelMatrix, radii: &[f64]) -> Result<Curve> {
    let grid = kernel.grid();
    check_localization_radii(grid, radii)?;
    let all: Vec<usize> = (0..grid.node_count()).collect();
    let dv = grid.cell_volume();
    let values = tail_sums(kernel, radii, &all).into_iter().map(|v| v * dv).collect();
    Ok(Curve {
        radii: radii.to_vec(),
        values,
    })
}

/// `r ↦ sup_x ∑_{s ∈ S, |s - x| > r} |k(x, s)|²`.
pub fn hap_check(kernel: &KernelMatrix, points: &PointSet, radii: &[f64]) -> Result<Curve> {
    let grid = kernel.grid();
    check_localization_radii(grid, radii)?;
    if points.grid() != grid {
        return Err(Error::InvalidPoints("point set lives on a different grid".into()));
    }
    Ok(Curve {
        radii: radii.to_vec(),
        values: tail_sums(kernel, radii, points.nodes()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxIdentityEntry {
    /// Cube width in nodes (odd).
    pub nodes: usize,
    /// Cube width in coordinates.
    pub width: f64,
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxIdentityReport {
    pub entries: Vec<ApproxIdentityEntry>,
    /// `log(err_{i+1}/err_i) / log(w_{i+1}/w_i)` for consecutive widths.
    pub observed_orders: Vec<f64>,
}

/// `sup_x ‖χ(H) φ_x^w - k_x‖₂` with `φ_x^w` the normalized indicator of
/// the node-centered cube of `w` nodes per axis. Since
/// `χ(H) φ_x^w` is the average of the kernel rows over the cube, this is
/// the distance from `k_x` to its local average.
pub fn approx_identity_check(
    spec: &SpectralData,
    kernel: &KernelMatrix,
    widths: &[usize],
) -> Result<ApproxIdentityReport> {
    let grid = kernel.grid();
    if spec.grid() != grid {
        return Err(Error::InvalidParameter("kernel and spectrum on different grids".into()));
    }
    let dim = grid.dim();
    let n = grid.node_count();
    let mut entries = Vec::with_capacity(widths.len());
    for &w in widths {
        if w % 2 == 0 || (0..dim).any(|a| w > grid.points(a)) {
            return Err(Error::InvalidParameter(format!(
                "cube width of {w} nodes is not an odd node count on this grid"
            )));
        }
        let half = (w / 2) as isize;
        let mut cube = Vec::new();
        let outer = if dim == 2 { half } else { 0 };
        for d1 in -outer..=outer {
            for d0 in -half..=half {
                cube.push(GridShift([d0, d1]));
            }
        }
        let scale = 1.0 / cube.len() as f64;
        let mut worst = 0.0f64;
        let mut avg = vec![0.0; n];
        for x in 0..n {
            avg.iter_mut().for_each(|v| *v = 0.0);
            for &s in &cube {
                for (a, k) in avg.iter_mut().zip(kernel.row(grid.shifted(x, s))) {
                    *a += k;
                }
            }
            let diff: Vec<f64> = avg
                .iter()
                .zip(kernel.row(x))
                .map(|(a, k)| a * scale - k)
                .collect();
            worst = worst.max(kernel.norm_l2(&diff));
        }
        entries.push(ApproxIdentityEntry {
            nodes: w,
            width: w as f64 * grid.spacing(0),
            error: worst,
        });
    }
    let observed_orders = entries
        .windows(2)
        .map(|p| (p[1].error / p[0].error).ln() / (p[1].width / p[0].width).ln())
        .collect();
    Ok(ApproxIdentityReport {
        entries,
        observed_orders,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEntry {
    pub distance: f64,
    /// `‖T_{-x} k_x - k̃^per‖₂`.
    pub l2_distance: f64,
    /// `|k(x, x) - k̃^per(0)|`.
    pub diagonal_gap_periodic: f64,
    /// `|k(x, x) - |Σ_Ω^b| / (2π)^d|`.
    pub diagonal_gap_continuum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCurve {
    pub entries: Vec<LimitEntry>,
    pub periodic_diagonal: f64,
    pub continuum_diagonal: f64,
}

impl LimitCurve {
    /// Each L² distance is at most `(1 + slack)` times its predecessor.
    pub fn is_nonincreasing(&self, slack: f64) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].l2_distance <= (1.0 + slack) * w[0].l2_distance)
    }

    pub fn is_strictly_decreasing(&self) -> bool {
        self.entries.windows(2).all(|w| w[1].l2_distance < w[0].l2_distance)
    }
}

/// Compares centered kernels `y ↦ k(x, x + y)` at points `x` at the given
/// distances (along axis 0) from `bump_center` with the periodic kernel of
/// the limit operator `H_b`. Points closer than `support_radius` to the
/// bump are rejected.
pub fn limit_kernel_convergence(
    kernel: &KernelMatrix,
    limit: &Ellipsoid,
    bump_center: usize,
    support_radius: f64,
    distances: &[f64],
) -> Result<LimitCurve> {
    let grid = kernel.grid();
    if (limit.omega() - kernel.omega()).abs() > 1e-12 * kernel.omega() {
        return Err(Error::InvalidParameter("limit ellipsoid and kernel use different Ω".into()));
    }
    let dim = grid.dim();
    let lengths: Vec<f64> = (0..dim).map(|a| grid.length(a)).collect();
    let modes = limit.torus_modes(&lengths)?;
    let n = grid.node_count();
    let reference: Vec<f64> = (0..n)
        .map(|j| {
            let o = grid.offset(0, j);
            periodic_sum(&modes, &lengths, &o[..dim])
        })
        .collect();
    let periodic_diagonal = reference[0];
    let continuum_diagonal = limit.diagonal_value();
    let mut entries = Vec::with_capacity(distances.len());
    for &dist in distances {
        if dist < support_radius {
            return Err(Error::OffsetInBump(dist));
        }
        let mut shift = [0.0; 2];
        shift[0] = dist;
        let s = grid.shift_from_coords(&shift[..dim])?;
        let x = grid.shifted(bump_center, s);
        if grid.torus_distance(bump_center, x) < support_radius {
            return Err(Error::OffsetInBump(dist));
        }
        let diff: Vec<f64> = (0..n)
            .map(|j| kernel.get(x, grid.shifted(x, step_of(grid, j))) - reference[j])
            .collect();
        let kxx = kernel.get(x, x);
        entries.push(LimitEntry {
            distance: dist,
            l2_distance: kernel.norm_l2(&diff),
            diagonal_gap_periodic: (kxx - periodic_diagonal).abs(),
            diagonal_gap_continuum: (kxx - continuum_diagonal).abs(),
        });
    }
    Ok(LimitCurve {
        entries,
        periodic_diagonal,
        continuum_diagonal,
    })
}

/// Grid shift that moves node 0 to node `j`.
fn step_of(grid: &GridSpec, j: usize) -> GridShift {
    GridShift(grid.step_offset(0, j))
}

/// Necessary-density consistency on one configuration: a stable sampling
/// set with a well-conditioned frame should have `D_0^- ≥ 1 - slack`, and an
/// interpolating set `D_0^+ ≤ 1 + slack`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityConsistency {
    pub sampling_applies: bool,
    pub sampling_holds: bool,
    pub interpolation_applies: bool,
    pub interpolation_holds: bool,
    pub slack: f64,
}

pub fn density_consistency(frame: &FrameReport, d0_lower: f64, d0_upper: f64, slack: f64) -> DensityConsistency {
    let sampling_applies =
        frame.sampling == SamplingVerdict::StableSampling && frame.a >= 1e-3 * frame.b_upper;
    let interpolation_applies = frame.interpolation == InterpolationVerdict::Interpolating;
    DensityConsistency {
        sampling_applies,
        sampling_holds: !sampling_applies || d0_lower >= 1.0 - slack,
        interpolation_applies,
        interpolation_holds: !interpolation_applies || d0_upper <= 1.0 + slack,
        slack,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_points, PointGenerator};
    use crate::operator::discretize;
    use crate::spectral::{eigendecompose, reproducing_kernel};
    use crate::symbol::{make_symbol, MatrixSpec, SymbolRecipe};
    use std::f64::consts::PI;

    fn classical(l: f64, n: usize, omega: f64) -> SpectralData {
        let g = GridSpec::one_d(l, n).unwrap();
        let a = make_symbol(&g, &SymbolRecipe::Constant { b: MatrixSpec::Scalar(1.0) }, 1.0).unwrap();
        eigendecompose(&discretize(&a).unwrap(), omega).unwrap()
    }

    fn integers(g: &GridSpec) -> PointSet {
        generate_points(&PointGenerator::Uniform { spacing: 1.0 }, g, None).unwrap()
    }

    #[test]
    fn shannon_grid_with_31_modes() {
        let spec = classical(32.0, 256, (31.0 * PI / 32.0).powi(2));
        assert_eq!(spec.band_dim(), 31);
        let r = frame_bounds(&integers(spec.grid()), &spec).unwrap();
        assert!((r.a - 1.0).abs() < 1e-8 && (r.b_upper - 1.0).abs() < 1e-8, "{r:?}");
        assert_eq!(r.sampling, SamplingVerdict::StableSampling);
        // 32 kernels in a 31-dimensional space cannot be independent
        assert!(r.riesz_min.abs() < 1e-10);
        assert_eq!(r.interpolation, InterpolationVerdict::NotInterpolating);
    }

    #[test]
    fn undersampled_band_is_rank_deficient() {
        let spec = classical(32.0, 256, PI * PI);
        assert_eq!(spec.band_dim(), 33);
        let r = frame_bounds(&integers(spec.grid()), &spec).unwrap();
        assert!(r.a < 1e-10);
        assert_eq!(r.sampling, SamplingVerdict::NotSampling);
    }

    #[test]
    fn gram_on_integer_grid_for_pi_band() {
        // Both modes ±16 alias onto one function on the integer grid, so
        // the Gram is I + vvᵀ/32 with v_s = (-1)^s.
        let spec = classical(32.0, 256, PI * PI);
        let k = reproducing_kernel(&spec);
        let r = riesz_lower_bound(&integers(spec.grid()), &k).unwrap();
        assert!((r.lambda_min - 1.0).abs() < 1e-10, "{r:?}");
        assert!((r.lambda_max - 2.0).abs() < 1e-10, "{r:?}");
        let single = PointSet::new(spec.grid().clone(), vec![17], "single".into(), None).unwrap();
        let r1 = riesz_lower_bound(&single, &k).unwrap();
        assert!((r1.lambda_min - k.get(17, 17)).abs() < 1e-15);
    }

    #[test]
    fn full_sampling_scale() {
        let spec = classical(8.0, 32, 20.0);
        let all = PointSet::new(spec.grid().clone(), (0..32).collect(), "all".into(), None).unwrap();
        let r = frame_bounds(&all, &spec).unwrap();
        // unweighted evaluation sums: EᵀE = h^{-1}·I
        assert!((r.a - 4.0).abs() < 1e-10 && (r.b_upper - 4.0).abs() < 1e-10);
    }

    #[test]
    fn localization_curves() {
        let spec = classical(32.0, 256, PI * PI);
        let k = reproducing_kernel(&spec);
        let radii = [1.0, 2.0, 4.0, 8.0];
        let wl = weak_localization_curve(&k, &radii).unwrap();
        assert!(wl.is_nonincreasing(0.0));
        assert!(wl.values[3] <= 0.2 * wl.values[0], "{wl:?}");
        let s = integers(spec.grid());
        let hap = hap_check(&k, &s, &radii).unwrap();
        assert!(hap.is_nonincreasing(0.0));
        let empty = hap_check(&k, &PointSet::empty(spec.grid().clone()), &radii).unwrap();
        assert!(empty.values.iter().all(|&v| v == 0.0));
        assert!(matches!(
            weak_localization_curve(&k, &[16.0]),
            Err(Error::RadiusCap { .. })
        ));
    }

    #[test]
    fn full_band_kernel_has_no_tail() {
        let spec = classical(4.0, 16, 1e6);
        let k = reproducing_kernel(&spec);
        let wl = weak_localization_curve(&k, &[0.25, 1.0]).unwrap();
        assert!(wl.values.iter().all(|&v| v < 1e-20), "{wl:?}");
    }

    #[test]
    fn approximate_identity() {
        let spec = classical(16.0, 128, PI * PI);
        let k = reproducing_kernel(&spec);
        let r = approx_identity_check(&spec, &k, &[1, 3, 9]).unwrap();
        assert!(r.entries[0].error < 1e-12);
        assert!(r.entries[1].error < r.entries[2].error);
        assert!(approx_identity_check(&spec, &k, &[2]).is_err());
    }
}
