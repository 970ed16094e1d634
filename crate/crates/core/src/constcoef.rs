//! Closed-form references for constant coefficients `a ≡ b`.
//!
//! The band of `H_b = -∇·b∇` on `ℝ^d` is the ellipsoid
//! `Σ = {ξ : bξ·ξ ≤ Ω}` in frequency space, and the projection kernel is
//! `(2π)^{-d} ∫_Σ e^{iξ·(x-y)} dξ`.

use std::collections::HashMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::special::{bessel_j0, bessel_j1, integrate};
use crate::symbol::Coeff;

/// Below this (scaled) offset the removable singularity is evaluated by
/// its Taylor series.
const SERIES_CUTOFF: f64 = 1e-6;

/// The frequency ellipsoid `Σ_Ω^b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipsoid {
    dim: usize,
    b: Coeff,
    omega: f64,
}

impl Ellipsoid {
    pub fn new(dim: usize, b: Coeff, omega: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParameter(format!("dimension {dim}")));
        }
        if !(b.min_eigenvalue(dim) > 0.0) {
            return Err(Error::InvalidParameter("b must be positive definite".into()));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParameter(format!("Ω must be positive, got {omega}")));
        }
        Ok(Ellipsoid { dim, b, omega })
    }

    pub fn scalar(b: f64, omega: f64) -> Result<Self> {
        Self::new(1, Coeff::new(b, 0.0, 0.0), omega)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn b(&self) -> Coeff {
        self.b
    }

    /// `|Σ_Ω^b| = det(b)^{-1/2} Ω^{d/2} |B_1|`.
    pub fn volume(&self) -> f64 {
        let unit_ball = if self.dim == 1 { 2.0 } else { PI };
        unit_ball * self.omega.powf(self.dim as f64 / 2.0) / self.b.det(self.dim).sqrt()
    }

    /// `k̃(0) = |Σ_Ω^b| / (2π)^d`.
    pub fn diagonal_value(&self) -> f64 {
        self.volume() / (2.0 * PI).powi(self.dim as i32)
    }

    /// `|b^{-1/2} u|`.
    fn scaled_norm(&self, u: &[f64]) -> f64 {
        if self.dim == 1 {
            return u[0].abs() / self.b.xx.sqrt();
        }
        let det = self.b.det(2);
        // uᵀ b⁻¹ u
        let q = (self.b.yy * u[0] * u[0] - 2.0 * self.b.xy * u[0] * u[1] + self.b.xx * u[1] * u[1])
            / det;
        q.max(0.0).sqrt()
    }

    /// Paley-Wiener kernel `k̃(u)` on `ℝ^d` at offset `u = x - y`.
    pub fn pw_kernel_exact(&self, u: &[f64]) -> f64 {
        let r = self.omega.sqrt();
        let v = self.scaled_norm(u);
        let det_factor = 1.0 / self.b.det(self.dim).sqrt();
        let z = r * v;
        if self.dim == 1 {
            let sinc = if v < SERIES_CUTOFF {
                let z2 = z * z;
                1.0 - z2 / 6.0 + z2 * z2 / 120.0 - z2 * z2 * z2 / 5040.0
            } else {
                z.sin() / z
            };
            det_factor * r / PI * sinc
        } else {
            // R J_1(R|v|) / (2π|v|) = R²/(2π) · J_1(z)/z
            let jinc = if v < SERIES_CUTOFF {
                let z2 = z * z;
                0.5 - z2 / 16.0 + z2 * z2 / 384.0 - z2 * z2 * z2 / 18432.0
            } else {
                bessel_j1(z) / z
            };
            det_factor * r * r / (2.0 * PI) * jinc
        }
    }

    /// Frequencies `ξ ∈ (2π/L)ℤ^d` inside the ellipsoid, as integer mode
    /// vectors. Only diagonal `b` is supported.
    pub fn torus_modes(&self, lengths: &[f64]) -> Result<Vec<[i64; 2]>> {
        if self.dim == 2 && self.b.xy != 0.0 {
            return Err(Error::InvalidParameter(
                "periodic kernels need a diagonal coefficient matrix".into(),
            ));
        }
        if lengths.len() != self.dim {
            return Err(Error::InvalidParameter("length count must match dimension".into()));
        }
        let diag = [self.b.xx, self.b.yy];
        let limit = self.omega * (1.0 + 1e-12);
        let bound = |axis: usize| -> i64 {
            (lengths[axis] * (self.omega / diag[axis]).sqrt() / (2.0 * PI)).floor() as i64 + 1
        };
        let m0 = bound(0);
        let m1 = if self.dim == 2 { bound(1) } else { 0 };
        let mut modes = Vec::new();
        for j in -m1..=m1 {
            for i in -m0..=m0 {
                let xi0 = 2.0 * PI * i as f64 / lengths[0];
                let mut q = diag[0] * xi0 * xi0;
                if self.dim == 2 {
                    let xi1 = 2.0 * PI * j as f64 / lengths[1];
                    q += diag[1] * xi1 * xi1;
                }
                if q <= limit {
                    modes.push([i, j]);
                }
            }
        }
        Ok(modes)
    }

    /// Torus analogue of [`pw_kernel_exact`](Self::pw_kernel_exact):
    /// `L^{-d} ∑_{ξ ∈ Σ ∩ (2π/L)ℤ^d} cos(ξ·u)`.
    pub fn periodic_pw_kernel(&self, lengths: &[f64], u: &[f64]) -> Result<f64> {
        let modes = self.torus_modes(lengths)?;
        Ok(periodic_sum(&modes, lengths, u))
    }
}

/// `L^{-d} ∑ cos(ξ·u)` over a precomputed mode list.
pub fn periodic_sum(modes: &[[i64; 2]], lengths: &[f64], u: &[f64]) -> f64 {
    let vol: f64 = lengths.iter().product();
    let s: f64 = modes
        .iter()
        .map(|m| {
            let mut phase = 2.0 * PI * m[0] as f64 * u[0] / lengths[0];
            if lengths.len() == 2 {
                phase += 2.0 * PI * m[1] as f64 * u[1] / lengths[1];
            }
            phase.cos()
        })
        .sum();
    s / vol
}

/// `⟨T_x κ, T_y κ⟩_{W_2^s}` as a function of `u = |x - y|`: the inverse
/// Fourier transform `(2π)^{-d/2} ∫ e^{-iuω} (1 + |ω|²)^{-s} dω`.
/// Closed forms for `d = 1, s ∈ {1, 2}`; quadrature otherwise.
pub fn sobolev_kernel_gram(s: f64, d: usize, u: f64) -> Result<f64> {
    check_sobolev(s, d)?;
    let u = u.abs();
    let c = (PI / 2.0).sqrt();
    if d == 1 && s == 1.0 {
        return Ok(c * (-u).exp());
    }
    if d == 1 && s == 2.0 {
        return Ok(0.5 * c * (1.0 + u) * (-u).exp());
    }
    sobolev_kernel_gram_quadrature(s, d, u)
}

fn check_sobolev(s: f64, d: usize) -> Result<()> {
    if !(1..=2).contains(&d) {
        return Err(Error::InvalidParameter(format!("dimension {d}")));
    }
    let half_dim = d as f64 / 2.0;
    if !(s > half_dim) {
        return Err(Error::SobolevOrder { s, half_dim });
    }
    Ok(())
}

/// Direct quadrature of the Fourier integral behind [`sobolev_kernel_gram`].
///
/// `d = 1`: `2 (2π)^{-1/2} ∫_0^∞ cos(uω) (1+ω²)^{-s} dω`, integrated on
/// quarter-period panels up to a cutoff `W` plus a three-term
/// integration-by-parts tail. `d = 2`: the Hankel form
/// `∫_0^∞ (1+r²)^{-s} J_0(ur) r dr`. At `u = 0` both use `ω = sinh t`.
pub fn sobolev_kernel_gram_quadrature(s: f64, d: usize, u: f64) -> Result<f64> {
    check_sobolev(s, d)?;
    let u = u.abs();
    if u == 0.0 {
        // ∫_0^∞ ω^{d-1} (1+ω²)^{-s} dω with ω = sinh t
        let decay = 2.0 * s - d as f64;
        let t_max = (40.0 + (2.0 * s).ln()) / decay;
        let panels = (t_max * 8.0).ceil() as usize;
        let integral = integrate(
            |t: f64| t.sinh().powi(d as i32 - 1) * t.cosh().powf(1.0 - 2.0 * s),
            0.0,
            t_max,
            panels,
        );
        return Ok(if d == 1 {
            2.0 * integral / (2.0 * PI).sqrt()
        } else {
            integral
        });
    }
    if d == 1 {
        let g = |w: f64| (1.0 + w * w).powf(-s);
        let w_max = 60.0f64.max(60.0 / u);
        let width = 1.0f64.min(PI / (2.0 * u));
        let panels = (w_max / width).ceil() as usize;
        let w_max = panels as f64 * width;
        let body = integrate(|w| (u * w).cos() * g(w), 0.0, w_max, panels);
        // ∫_W^∞ e^{iuω} g = -e^{iuW} ∑_k (-1)^k g^{(k)}(W) / (iu)^{k+1}
        let p = 1.0 + w_max * w_max;
        let g0 = p.powf(-s);
        let g1 = -2.0 * s * w_max * p.powf(-s - 1.0);
        let g2 = -2.0 * s * p.powf(-s - 1.0) + 4.0 * s * (s + 1.0) * w_max * w_max * p.powf(-s - 2.0);
        let g3 = 12.0 * s * (s + 1.0) * w_max * p.powf(-s - 2.0)
            - 8.0 * s * (s + 1.0) * (s + 2.0) * w_max.powi(3) * p.powf(-s - 3.0);
        let (sin, cos) = (u * w_max).sin_cos();
        // Real part of -e^{iuW}[g/(iu) - g'/(iu)² + g''/(iu)³ - g'''/(iu)⁴]
        let re_series_cos = g1 / (u * u) - g3 / u.powi(4);
        let im_series = -g0 / u + g2 / u.powi(3);
        let tail = -(cos * re_series_cos - sin * im_series);
        return Ok(2.0 * (body + tail) / (2.0 * PI).sqrt());
    }
    // d = 2: the tail beyond W is dropped; the integrand decays like
    // r^{1/2 - 2s} and oscillates, so the truncation error is O(W^{1/2-2s}/u).
    let w_max = 400.0f64.max(400.0 / u);
    let width = 0.5f64.min(PI / (2.0 * u));
    let panels = (w_max / width).ceil() as usize;
    Ok(integrate(
        |r| (1.0 + r * r).powf(-s) * bessel_j0(u * r) * r,
        0.0,
        panels as f64 * width,
        panels,
    ))
}

/// Schur-test certificate for the Sobolev Gramian on `S`:
/// `max_{x ∈ S} ∑_{y ∈ S} |G(|x - y|)|` with torus distances.
pub fn schur_row_bound(points: &PointSet, s: f64) -> Result<f64> {
    let grid = points.grid();
    let d = grid.dim();
    check_sobolev(s, d)?;
    if points.is_empty() {
        return Err(Error::EmptyPointSet);
    }
    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut best = 0.0f64;
    for &x in points.nodes() {
        let mut row = 0.0;
        for &y in points.nodes() {
            let dist = grid.torus_distance(x, y);
            let v = match cache.get(&dist.to_bits()) {
                Some(v) => *v,
                None => {
                    let v = sobolev_kernel_gram(s, d, dist)?.abs();
                    cache.insert(dist.to_bits(), v);
                    v
                }
            };
            row += v;
        }
        best = best.max(row);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_points, PointGenerator};
    use crate::grid::GridSpec;

    #[test]
    fn ellipsoid_volumes() {
        let e1 = Ellipsoid::scalar(1.0, PI * PI).unwrap();
        assert!((e1.volume() - 2.0 * PI).abs() < 1e-12);
        let e2 = Ellipsoid::new(2, Coeff::new(1.0, 0.0, 4.0), 4.0).unwrap();
        assert!((e2.volume() - 2.0 * PI).abs() < 1e-12);
        let disc = Ellipsoid::new(2, Coeff::scalar(1.0), 1.0).unwrap();
        assert!((disc.volume() - PI).abs() < 1e-15);
        assert!(Ellipsoid::new(2, Coeff::new(1.0, 2.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn exact_kernel_values() {
        let e = Ellipsoid::scalar(1.0, PI * PI).unwrap();
        assert!((e.pw_kernel_exact(&[0.0]) - 1.0).abs() < 1e-15);
        assert!(e.pw_kernel_exact(&[1.0]).abs() < 1e-15);
        assert!((e.pw_kernel_exact(&[0.5]) - 2.0 / PI).abs() < 1e-15);
        // series and closed form agree across the cutoff
        let a = e.pw_kernel_exact(&[0.999e-6]);
        let b = e.pw_kernel_exact(&[1.001e-6]);
        assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn exact_kernel_at_zero_is_volume_ratio() {
        for e in [
            Ellipsoid::scalar(2.5, 7.0).unwrap(),
            Ellipsoid::new(2, Coeff::new(1.0, 0.3, 2.0), 5.0).unwrap(),
        ] {
            assert!((e.pw_kernel_exact(&[0.0, 0.0]) - e.diagonal_value()).abs() < 1e-14);
        }
    }

    #[test]
    fn full_matrix_kernel_uses_inverse_quadratic_form() {
        // rotate diag(1, 4) by 45 degrees; the kernel at a rotated offset
        // must match the diagonal kernel at the unrotated one
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let rotated = Coeff::new(2.5, 1.5, 2.5);
        let er = Ellipsoid::new(2, rotated, 3.0).unwrap();
        let ed = Ellipsoid::new(2, Coeff::new(4.0, 0.0, 1.0), 3.0).unwrap();
        let u = [0.7, -0.2];
        let ru = [c * (u[0] - u[1]), c * (u[0] + u[1])];
        assert!((er.pw_kernel_exact(&ru) - ed.pw_kernel_exact(&u)).abs() < 1e-13);
    }

    #[test]
    fn periodic_kernel_mode_count_at_zero() {
        let e = Ellipsoid::scalar(1.0, PI * PI).unwrap();
        assert_eq!(e.torus_modes(&[32.0]).unwrap().len(), 33);
        assert!((e.periodic_pw_kernel(&[32.0], &[0.0]).unwrap() - 33.0 / 32.0).abs() < 1e-15);
        let off = Ellipsoid::new(2, Coeff::new(1.0, 0.1, 1.0), 1.0).unwrap();
        assert!(off.periodic_pw_kernel(&[8.0, 8.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn periodic_kernel_approaches_exact_kernel() {
        // with the band edge on a mode, the Dirichlet kernel differs from
        // sinc by about cos(πu)/L
        let e = Ellipsoid::scalar(1.0, PI * PI).unwrap();
        let u = [0.8];
        let err = |l: f64| (e.periodic_pw_kernel(&[l], &u).unwrap() - e.pw_kernel_exact(&u)).abs();
        let (e1, e2) = (err(32.0), err(64.0));
        assert!((e1 - (PI * 0.8).cos().abs() / 32.0).abs() < 0.1 * e1);
        let ratio = e1 / e2;
        assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn sobolev_closed_forms_match_quadrature() {
        for s in [1.0, 2.0] {
            for u in [0.0, 0.3, 1.0, 2.0, 7.5, 20.0] {
                let closed = sobolev_kernel_gram(s, 1, u).unwrap();
                let quad = sobolev_kernel_gram_quadrature(s, 1, u).unwrap();
                assert!((closed - quad).abs() < 1e-8, "s={s} u={u}: {closed} vs {quad}");
            }
        }
        let c = (PI / 2.0).sqrt();
        assert!((sobolev_kernel_gram(1.0, 1, 0.0).unwrap() - 1.2533141373155003).abs() < 1e-15);
        assert!((sobolev_kernel_gram(1.0, 1, 2.0).unwrap() - c * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn sobolev_two_d_three_halves_is_exponential() {
        // u^{s-1} K_{s-1}(u) / (2^{s-1} Γ(s)) with s = 3/2 reduces to e^{-u}
        for u in [0.0, 0.5, 1.0, 3.0] {
            let q = sobolev_kernel_gram(1.5, 2, u).unwrap();
            assert!((q - (-u).exp()).abs() < 1e-6, "u={u}: {q}");
        }
    }

    #[test]
    fn sobolev_order_guard_and_decay() {
        assert!(matches!(
            sobolev_kernel_gram(0.5, 1, 1.0),
            Err(Error::SobolevOrder { .. })
        ));
        assert!(sobolev_kernel_gram(1.0, 2, 1.0).is_err());
        let near = sobolev_kernel_gram(1.0, 1, 1.0).unwrap();
        let far = sobolev_kernel_gram(1.0, 1, 10.0).unwrap();
        assert!(far <= (-9.0f64).exp() * near * (1.0 + 1e-12));
    }

    #[test]
    fn schur_row_bound_on_integer_grid() {
        let g = GridSpec::one_d(32.0, 256).unwrap();
        let s = generate_points(&PointGenerator::Uniform { spacing: 1.0 }, &g, None).unwrap();
        let bound = schur_row_bound(&s, 1.0).unwrap();
        let c = (PI / 2.0).sqrt();
        // brute-force torus sum: offsets ±1..±15 and the antipode 16
        let torus: f64 = c * (1.0
            + 2.0 * (1..16).map(|k| (-(k as f64)).exp()).sum::<f64>()
            + (-16.0f64).exp());
        assert!((bound - torus).abs() < 1e-12);
        let series = c * (1.0 + 2.0 / (std::f64::consts::E - 1.0));
        assert!((bound - series).abs() < 1e-6);

        let single = PointSet::new(g.clone(), vec![5], "single".into(), None).unwrap();
        assert!((schur_row_bound(&single, 1.0).unwrap() - c).abs() < 1e-15);

        let half = generate_points(&PointGenerator::Uniform { spacing: 0.5 }, &g, None).unwrap();
        let ratio = schur_row_bound(&half, 1.0).unwrap() / bound;
        assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
    }
}
