//! Matrix symbols `a(x)` sampled on a periodic grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridShift, GridSpec};

/// A symmetric coefficient matrix at one node. In one dimension only `xx`
/// is meaningful.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct Coeff {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Coeff {
    pub fn scalar(v: f64) -> Self {
        Coeff { xx: v, xy: 0.0, yy: v }
    }

    pub fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Coeff { xx, xy, yy }
    }

    /// Entry `(j, k)` of the matrix.
    pub fn entry(&self, j: usize, k: usize) -> f64 {
        match (j, k) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            _ => self.xy,
        }
    }

    pub fn min_eigenvalue(&self, dim: usize) -> f64 {
        if dim == 1 {
            return self.xx;
        }
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        mean - half_diff.hypot(self.xy)
    }

    pub fn max_eigenvalue(&self, dim: usize) -> f64 {
        if dim == 1 {
            return self.xx;
        }
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        mean + half_diff.hypot(self.xy)
    }

    pub fn det(&self, dim: usize) -> f64 {
        if dim == 1 {
            self.xx
        } else {
            self.xx * self.yy - self.xy * self.xy
        }
    }

    /// Entries in row-major order (`1` or `4` values).
    pub fn row_major(&self, dim: usize) -> Vec<f64> {
        if dim == 1 {
            vec![self.xx]
        } else {
            vec![self.xx, self.xy, self.xy, self.yy]
        }
    }

    fn plus_identity(self, s: f64) -> Coeff {
        Coeff {
            xx: self.xx + s,
            xy: self.xy,
            yy: self.yy + s,
        }
    }

    fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

/// A constant matrix as written in a config: a scalar (times identity)
/// or a full `d × d` array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Full(Vec<Vec<f64>>),
}

impl MatrixSpec {
    pub fn to_coeff(&self, dim: usize) -> Result<Coeff> {
        match self {
            MatrixSpec::Scalar(v) => Ok(Coeff::scalar(*v)),
            MatrixSpec::Full(rows) => {
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return Err(Error::InvalidParameter(format!(
                        "matrix must be {dim}x{dim}"
                    )));
                }
                if dim == 1 {
                    return Ok(Coeff::new(rows[0][0], 0.0, 0.0));
                }
                if rows[0][1] != rows[1][0] {
                    return Err(Error::InvalidParameter(format!(
                        "matrix is not symmetric: {} vs {}",
                        rows[0][1], rows[1][0]
                    )));
                }
                Ok(Coeff::new(rows[0][0], rows[0][1], rows[1][1]))
            }
        }
    }
}

fn default_exponent() -> f64 {
    0.5
}

fn default_cutoff() -> f64 {
    1.0
}

/// One-dimensional coefficient profiles for variable-bandwidth studies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Profile1d {
    /// `mean + amplitude * sin(2π periods x / L + phase)`.
    Sinusoid {
        mean: f64,
        amplitude: f64,
        periods: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `low` outside `[start, end]`, `high` inside, with tanh transitions
    /// of width `width`.
    Plateau {
        low: f64,
        high: f64,
        start: f64,
        end: f64,
        width: f64,
    },
}

impl Profile1d {
    pub fn eval(&self, x: f64, length: f64) -> f64 {
        match *self {
            Profile1d::Sinusoid {
                mean,
                amplitude,
                periods,
                phase,
            } => mean + amplitude * (2.0 * PI * periods * x / length + phase).sin(),
            Profile1d::Plateau {
                low,
                high,
                start,
                end,
                width,
            } => {
                let step = 0.5 * (((x - start) / width).tanh() - ((x - end) / width).tanh());
                low + (high - low) * step
            }
        }
    }
}

/// How to generate a symbol field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolRecipe {
    /// `a ≡ b`.
    Constant { b: MatrixSpec },
    /// `a(x) = b + height * exp(-|x - c|² / width²) * Id`, with `|x - c|`
    /// the torus distance to `center` (default: the window center).
    AsymptoticallyConstant {
        b: MatrixSpec,
        height: f64,
        width: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// `a(x) = b + amplitude * sin(frequency * ρ^exponent) * (1 - exp(-ρ²/cutoff²)) * Id`
    /// where `ρ(x)` is a smooth periodic radius about the window center,
    /// `ρ² = ∑_j (L_j/π)² sin²(π (x_j - c_j) / L_j)`. Gradients decay like
    /// `ρ^(exponent - 1)` away from the center and vanish at the seam.
    SlowlyOscillating {
        b: MatrixSpec,
        amplitude: f64,
        frequency: f64,
        #[serde(default = "default_exponent")]
        exponent: f64,
        #[serde(default = "default_cutoff")]
        cutoff: f64,
    },
    /// Scalar one-dimensional profile.
    VariableBandwidth { profile: Profile1d },
}

impl SymbolRecipe {
    fn name(&self) -> &'static str {
        match self {
            SymbolRecipe::Constant { .. } => "constant",
            SymbolRecipe::AsymptoticallyConstant { .. } => "asymptotically_constant",
            SymbolRecipe::SlowlyOscillating { .. } => "slowly_oscillating",
            SymbolRecipe::VariableBandwidth { .. } => "variable_bandwidth",
        }
    }

    /// Whether the field tends to a constant away from the window center.
    pub fn limit_matrix(&self, dim: usize) -> Option<Result<Coeff>> {
        match self {
            SymbolRecipe::Constant { b } | SymbolRecipe::AsymptoticallyConstant { b, .. } => {
                Some(b.to_coeff(dim))
            }
            _ => None,
        }
    }
}

/// Matrix symbol sampled at the grid nodes, periodic with the box.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolField {
    grid: GridSpec,
    values: Vec<Coeff>,
    theta: f64,
}

impl SymbolField {
    /// Validates finiteness and the ellipticity floor `λ_min(a(x)) ≥ θ`.
    pub fn from_values(grid: GridSpec, values: Vec<Coeff>, theta: f64) -> Result<Self> {
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ellipticity floor must be positive, got {theta}"
            )));
        }
        if values.len() != grid.node_count() {
            return Err(Error::InvalidParameter(format!(
                "{} values for {} nodes",
                values.len(),
                grid.node_count()
            )));
        }
        let dim = grid.dim();
        for (node, c) in values.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::InvalidParameter(format!("non-finite symbol at node {node}")));
            }
            let min_eigenvalue = c.min_eigenvalue(dim);
            if min_eigenvalue < theta {
                return Err(Error::Ellipticity {
                    node,
                    min_eigenvalue,
                    theta,
                });
            }
        }
        Ok(SymbolField { grid, values, theta })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Coeff] {
        &self.values
    }

    pub fn at(&self, node: usize) -> Coeff {
        self.values[node]
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let dim = self.grid.dim();
        self.values
            .iter()
            .map(|c| c.min_eigenvalue(dim))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let dim = self.grid.dim();
        self.values
            .iter()
            .map(|c| c.max_eigenvalue(dim))
            .fold(0.0, f64::max)
    }

    /// `T_{-x} a`: the value at node `z` becomes `a(z + x)`.
    pub fn translate(&self, shift: GridShift) -> SymbolField {
        let values = (0..self.grid.node_count())
            .map(|i| self.values[self.grid.shifted(i, shift)])
            .collect();
        SymbolField {
            grid: self.grid.clone(),
            values,
            theta: self.theta,
        }
    }

    /// [`translate`](Self::translate) with the shift given in coordinates.
    pub fn translate_by(&self, x: &[f64]) -> Result<SymbolField> {
        Ok(self.translate(self.grid.shift_from_coords(x)?))
    }

    /// Radial profile of centered finite-difference gradient magnitudes.
    pub fn oscillation_report(&self, annuli: usize) -> Result<OscillationReport> {
        let grid = &self.grid;
        let dim = grid.dim();
        let per_axis = (0..dim).map(|a| grid.points(a)).min().unwrap_or(0);
        if annuli < 2 || per_axis / 2 < annuli {
            return Err(Error::TooFewNodes {
                nodes: per_axis,
                annuli,
            });
        }
        let center = grid.center_node();
        let n = grid.node_count();
        let radius: Vec<f64> = (0..n).map(|i| grid.torus_distance(center, i)).collect();
        let r_max = radius.iter().copied().fold(0.0, f64::max);

        let mut sup = vec![0.0f64; annuli];
        for i in 0..n {
            let g = self.gradient_magnitude(i);
            let k = ((radius[i] / r_max * annuli as f64) as usize).min(annuli - 1);
            sup[k] = sup[k].max(g);
        }
        let annuli_out: Vec<(f64, f64)> = sup
            .iter()
            .enumerate()
            .map(|(k, &s)| ((k + 1) as f64 * r_max / annuli as f64, s))
            .collect();
        let peak = sup.iter().copied().fold(0.0, f64::max);
        let outer = sup[annuli - 1];
        let verdict = if outer <= 0.1 * peak {
            OscillationVerdict::SlowlyOscillatingLike
        } else if outer >= 0.9 * peak {
            OscillationVerdict::NotSlowlyOscillating
        } else {
            OscillationVerdict::Inconclusive
        };
        Ok(OscillationReport {
            annuli: annuli_out,
            verdict,
        })
    }

    /// Largest gradient magnitude over the independent matrix entries.
    fn gradient_magnitude(&self, node: usize) -> f64 {
        let grid = &self.grid;
        let dim = grid.dim();
        let entries: &[fn(&Coeff) -> f64] = if dim == 1 {
            &[|c| c.xx]
        } else {
            &[|c| c.xx, |c| c.xy, |c| c.yy]
        };
        let mut best = 0.0f64;
        for entry in entries {
            let mut sq = 0.0;
            for axis in 0..dim {
                let mut step = [0isize; 2];
                step[axis] = 1;
                let fwd = grid.shifted(node, GridShift(step));
                let bwd = grid.shifted(node, -GridShift(step));
                let d = (entry(&self.values[fwd]) - entry(&self.values[bwd]))
                    / (2.0 * grid.spacing(axis));
                sq += d * d;
            }
            best = best.max(sq.sqrt());
        }
        best
    }
}

/// Builds a symbol from a recipe and checks it against the floor `theta`.
pub fn make_symbol(grid: &GridSpec, recipe: &SymbolRecipe, theta: f64) -> Result<SymbolField> {
    let dim = grid.dim();
    let n = grid.node_count();
    let window_center: Vec<f64> = (0..dim).map(|a| grid.length(a) / 2.0).collect();
    let values: Vec<Coeff> = match recipe {
        SymbolRecipe::Constant { b } => vec![b.to_coeff(dim)?; n],
        SymbolRecipe::AsymptoticallyConstant {
            b,
            height,
            width,
            center,
        } => {
            let b = b.to_coeff(dim)?;
            if !(*width > 0.0) {
                return Err(Error::InvalidParameter(format!("bump width {width}")));
            }
            let c = center.clone().unwrap_or(window_center);
            if c.len() != dim {
                return Err(Error::InvalidParameter("bump center has wrong dimension".into()));
            }
            (0..n)
                .map(|i| {
                    let d2 = torus_dist_sq(grid, &grid.coords(i), &c);
                    b.plus_identity(height * (-d2 / (width * width)).exp())
                })
                .collect()
        }
        SymbolRecipe::SlowlyOscillating {
            b,
            amplitude,
            frequency,
            exponent,
            cutoff,
        } => {
            let b = b.to_coeff(dim)?;
            if !(*cutoff > 0.0) || !(*exponent > 0.0) {
                return Err(Error::InvalidParameter(
                    "cutoff and exponent must be positive".into(),
                ));
            }
            (0..n)
                .map(|i| {
                    let x = grid.coords(i);
                    let rho2: f64 = (0..dim)
                        .map(|a| {
                            let l = grid.length(a);
                            let s = (PI * (x[a] - window_center[a]) / l).sin() * l / PI;
                            s * s
                        })
                        .sum();
                    let rho = rho2.sqrt();
                    let envelope = 1.0 - (-rho2 / (cutoff * cutoff)).exp();
                    b.plus_identity(amplitude * (frequency * rho.powf(*exponent)).sin() * envelope)
                })
                .collect()
        }
        SymbolRecipe::VariableBandwidth { profile } => {
            if dim != 1 {
                return Err(Error::RecipeDimension {
                    recipe: recipe.name(),
                    dim,
                });
            }
            let l = grid.length(0);
            (0..n)
                .map(|i| Coeff::new(profile.eval(grid.coords(i)[0], l), 0.0, 0.0))
                .collect()
        }
    };
    SymbolField::from_values(grid.clone(), values, theta)
}

fn torus_dist_sq(grid: &GridSpec, x: &[f64; 2], c: &[f64]) -> f64 {
    (0..grid.dim())
        .map(|a| {
            let l = grid.length(a);
            let d = (x[a] - c[a]).rem_euclid(l);
            let d = d.min(l - d);
            d * d
        })
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OscillationVerdict {
    SlowlyOscillatingLike,
    NotSlowlyOscillating,
    Inconclusive,
}

/// Heuristic proxy for slow oscillation: gradient suprema per annulus
/// around the window center. Not a proof of membership in any class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    /// `(outer radius, sup |∂a|)` per annulus, radii increasing.
    pub annuli: Vec<(f64, f64)>,
    pub verdict: OscillationVerdict,
}
