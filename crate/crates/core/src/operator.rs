//! Conservative (flux-form) discretization of `H_a = -∑ ∂_j a_jk ∂_k`.
//!
//! One dimension:
//! `(Hf)_i = -(a_{i+½}(f_{i+1} - f_i) - a_{i-½}(f_i - f_{i-1})) / h²`
//! with `a_{i±½}` the mean of the neighbouring node values. In two
//! dimensions the diagonal entries `a_jj` use the same per-axis flux
//! stencil and the mixed entries use `-D_j(a_jk D_k f)` with centered
//! differences `D`. Boundaries are periodic.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{GridShift, GridSpec};
use crate::sparse::CsrMatrix;
use crate::symbol::{Coeff, SymbolField};

const ASYMMETRY_TOL: f64 = 1e-12;

/// Sparse symmetric positive-semidefinite discretization of `H_a`.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    matrix: CsrMatrix,
    symbol: Arc<SymbolField>,
}

impl DiscreteOperator {
    pub fn grid(&self) -> &GridSpec {
        self.symbol.grid()
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn symbol(&self) -> &SymbolField {
        &self.symbol
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(f)
    }

    /// Euclidean quadratic form `v · Hv`.
    pub fn quadratic_form(&self, v: &[f64]) -> f64 {
        self.apply(v).iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

fn midpoint(a: &Coeff, b: &Coeff, axis: usize) -> f64 {
    if axis == 0 {
        0.5 * (a.xx + b.xx)
    } else {
        0.5 * (a.yy + b.yy)
    }
}

fn unit(axis: usize, sign: isize) -> GridShift {
    let mut s = [0isize; 2];
    s[axis] = sign;
    GridShift(s)
}

/// Assembles the flux-form operator for `a`.
pub fn discretize(a: &SymbolField) -> Result<DiscreteOperator> {
    discretize_shared(Arc::new(a.clone()))
}

fn discretize_shared(a: Arc<SymbolField>) -> Result<DiscreteOperator> {
    let grid = a.grid();
    let dim = grid.dim();
    let n = grid.node_count();
    let values = a.values();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);

    for i in 0..n {
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(9);
        let mut diag = 0.0;
        let mut off = Vec::with_capacity(4);
        for axis in 0..dim {
            let c = 1.0 / (grid.spacing(axis) * grid.spacing(axis));
            let fwd = grid.shifted(i, unit(axis, 1));
            let bwd = grid.shifted(i, unit(axis, -1));
            let w_fwd = -(midpoint(&values[i], &values[fwd], axis) * c);
            let w_bwd = -(midpoint(&values[bwd], &values[i], axis) * c);
            diag -= w_fwd + w_bwd;
            off.push((fwd, w_fwd));
            off.push((bwd, w_bwd));
        }
        row.push((i, diag));
        row.extend(off);

        if dim == 2 {
            // -D_j(a_jk D_k f) for (j, k) = (0, 1) and (1, 0)
            let coef = 1.0 / (4.0 * grid.spacing(0) * grid.spacing(1));
            for (j, k) in [(0usize, 1usize), (1, 0)] {
                for sign in [1isize, -1] {
                    let p = grid.shifted(i, unit(j, sign));
                    let w = sign as f64 * coef * values[p].xy;
                    if w == 0.0 {
                        continue;
                    }
                    row.push((grid.shifted(p, unit(k, 1)), -w));
                    row.push((grid.shifted(p, unit(k, -1)), w));
                }
            }
        }
        rows.push(row);
    }

    let mut matrix = CsrMatrix::from_rows(n, rows);
    let asym = matrix.max_asymmetry();
    let scale = matrix.max_abs().max(f64::MIN_POSITIVE);
    if asym > ASYMMETRY_TOL * scale {
        return Err(Error::Asymmetric(asym / scale));
    }
    if asym > 0.0 {
        matrix = matrix.symmetrized();
    }
    Ok(DiscreteOperator { matrix, symbol: a })
}

/// Discretizes the translated symbol `T_{-x} a` and checks that it equals
/// the permutation conjugate `P_{-x} H P_x` of the original operator,
/// entry for entry and bit for bit.
pub fn conjugated_operator(a: &SymbolField, shift: GridShift) -> Result<DiscreteOperator> {
    let original = discretize(a)?;
    let translated = discretize(&a.translate(shift))?;
    let grid = a.grid();
    let (h0, h1) = (original.matrix(), translated.matrix());
    for i in 0..grid.node_count() {
        let src = grid.shifted(i, shift);
        let mut count = 0usize;
        for (j, v) in h1.row(i) {
            let w = h0.get(src, grid.shifted(j, shift));
            if v.to_bits() != w.to_bits() {
                return Err(Error::ConjugationMismatch { row: i, col: j });
            }
            count += 1;
        }
        if count != h0.row(src).count() {
            return Err(Error::ConjugationMismatch { row: i, col: i });
        }
    }
    Ok(translated)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{make_symbol, MatrixSpec, Profile1d, SymbolRecipe};
    use std::f64::consts::PI;

    fn constant_1d(l: f64, n: usize, b: f64) -> SymbolField {
        let g = GridSpec::one_d(l, n).unwrap();
        make_symbol(&g, &SymbolRecipe::Constant { b: MatrixSpec::Scalar(b) }, b).unwrap()
    }

    fn wavy_1d(n: usize) -> SymbolField {
        let g = GridSpec::one_d(8.0, n).unwrap();
        let recipe = SymbolRecipe::VariableBandwidth {
            profile: Profile1d::Sinusoid {
                mean: 2.0,
                amplitude: 0.7,
                periods: 1.0,
                phase: 0.3,
            },
        };
        make_symbol(&g, &recipe, 1.0).unwrap()
    }

    fn matrix_2d() -> SymbolField {
        let g = GridSpec::square(8.0, 8).unwrap();
        let vals = (0..g.node_count())
            .map(|i| {
                let x = g.coords(i);
                let s = (2.0 * PI * x[0] / 8.0).sin() * (2.0 * PI * x[1] / 8.0).cos();
                Coeff::new(2.0 + 0.5 * s, 0.4 + 0.2 * s, 1.5 - 0.3 * s)
            })
            .collect();
        SymbolField::from_values(g, vals, 0.5).unwrap()
    }

    #[test]
    fn unit_laplacian_is_circulant() {
        let h = discretize(&constant_1d(4.0, 4, 1.0)).unwrap();
        let m = h.matrix();
        for i in 0..4 {
            let row: Vec<f64> = (0..4).map(|j| m.get(i, (i + j) % 4)).collect();
            assert_eq!(row, vec![2.0, -1.0, 0.0, -1.0]);
        }
    }

    #[test]
    fn constants_are_in_the_kernel() {
        for a in [wavy_1d(32), matrix_2d()] {
            let h = discretize(&a).unwrap();
            let out = h.apply(&vec![1.0; h.dim()]);
            let scale = h.matrix().norm_inf();
            assert!(out.iter().all(|v| v.abs() <= 1e-13 * scale), "{out:?}");
        }
    }

    #[test]
    fn structurally_symmetric() {
        for a in [wavy_1d(32), matrix_2d()] {
            assert_eq!(discretize(&a).unwrap().matrix().max_asymmetry(), 0.0);
        }
    }

    #[test]
    fn circulant_eigenvalues_match_fourier_formula() {
        let n = 16;
        let l = 8.0;
        let h = discretize(&constant_1d(l, n, 1.0)).unwrap();
        let dense = h.matrix().to_dense();
        let mut eig = dense.selfadjoint_eigenvalues(faer::Side::Lower);
        eig.sort_by(f64::total_cmp);
        let hh = l / n as f64;
        let mut expected: Vec<f64> = (0..n)
            .map(|m| 4.0 / (hh * hh) * (PI * m as f64 / n as f64).sin().powi(2))
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12 * 4.0 / (hh * hh), "{a} vs {b}");
        }
    }

    #[test]
    fn conjugation_matches_translation() {
        let a = wavy_1d(8);
        let shifted = conjugated_operator(&a, GridShift::one_d(1)).unwrap();
        let base = discretize(&a).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(
                    shifted.matrix().get(i, j).to_bits(),
                    base.matrix().get((i + 1) % 8, (j + 1) % 8).to_bits()
                );
            }
        }
        let same = conjugated_operator(&a, GridShift::default()).unwrap();
        assert_eq!(same.matrix(), base.matrix());
    }

    #[test]
    fn conjugation_in_two_d_and_constant_invariance() {
        conjugated_operator(&matrix_2d(), GridShift([3, -2])).unwrap();
        let c = constant_1d(8.0, 16, 3.0);
        let t = conjugated_operator(&c, GridShift::one_d(5)).unwrap();
        assert_eq!(t.matrix(), discretize(&c).unwrap().matrix());
    }

    #[test]
    fn second_order_consistency() {
        let l = 8.0;
        let err = |n: usize| {
            let h = discretize(&constant_1d(l, n, 1.0)).unwrap();
            let g = h.grid().clone();
            let f: Vec<f64> = (0..n).map(|i| (2.0 * PI * g.coords(i)[0] / l).sin()).collect();
            let hf = h.apply(&f);
            let k2 = (2.0 * PI / l).powi(2);
            hf.iter()
                .zip(&f)
                .map(|(a, b)| (a - k2 * b).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(32) / err(64);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }
}
