//! JSON experiment configuration.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use specband_core::geometry::{PointGenerator, WeightKind};
use specband_core::spectral::DEFAULT_SIZE_CAP;
use specband_core::{GridSpec, SymbolRecipe};

use crate::CliError;

/// Either a bare number or `{"sqrt_over_pi": s}` meaning `Ω = (sπ)²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OmegaSpec {
    Value(f64),
    Scaled { sqrt_over_pi: f64 },
}

impl OmegaSpec {
    pub fn value(&self) -> f64 {
        match *self {
            OmegaSpec::Value(v) => v,
            OmegaSpec::Scaled { sqrt_over_pi } => (sqrt_over_pi * PI).powi(2),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Box side lengths, one per dimension.
    pub lengths: Vec<f64>,
    /// Nodes per axis.
    pub points: Vec<usize>,
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec, CliError> {
        if self.lengths.len() != self.points.len() {
            return Err(CliError::Validation(
                "grid.lengths and grid.points must have the same length".into(),
            ));
        }
        GridSpec::new(&self.lengths, &self.points).map_err(|e| CliError::Validation(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedPoints {
    pub name: String,
    pub generator: PointGenerator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Check {
    Oscillation,
    Frame,
    Density,
    Trace,
    Conversion,
    Localization,
    Hap,
    Bernstein,
    Heat,
    Compker,
    Dyadic,
    ApproxIdentity,
    LimitKernel,
    Sweep,
    Consistency,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BernsteinConfig {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_k_max")]
    pub k_max: u32,
    /// Defaults to the global seed.
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_trials() -> usize {
    100
}

fn default_k_max() -> u32 {
    4
}

impl Default for BernsteinConfig {
    fn default() -> Self {
        BernsteinConfig {
            trials: default_trials(),
            k_max: default_k_max(),
            seed: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeatConfig {
    #[serde(default)]
    pub times: Vec<f64>,
    /// Hard bounds `[lo, hi]` on `t^{d/2} p_t(x,x)` at every listed time.
    #[serde(default)]
    pub constant_bounds: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailRatio {
    pub small: f64,
    pub large: f64,
    pub max: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalizationConfig {
    #[serde(default)]
    pub tail_ratio: Option<TailRatio>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConversionConfig {
    /// Extra Poisson sets drawn on top of the configured point sets.
    #[serde(default)]
    pub random_sets: usize,
    /// Rates are drawn uniformly from this range.
    #[serde(default = "default_rate_range")]
    pub rate_range: [f64; 2],
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_rate_range() -> [f64; 2] {
    [0.5, 1.5]
}

impl Default for ConversionConfig {
    fn default() -> Self {
        ConversionConfig {
            random_sets: 0,
            rate_range: default_rate_range(),
            seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitConfig {
    pub distances: Vec<f64>,
    pub support_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Target ν-densities as multiples of `Ω^{1/2}/π`.
    pub relative_densities: Vec<f64>,
    /// Required `A(last) / A(first)` and `λ_min(first) / λ_min(last)`.
    pub min_contrast: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub grid: GridConfig,
    pub symbol: SymbolRecipe,
    /// Ellipticity floor: `a(x) ≥ θ` everywhere.
    pub theta: f64,
    pub omega: OmegaSpec,
    #[serde(default = "default_weights")]
    pub weights: Vec<WeightKind>,
    #[serde(default)]
    pub point_sets: Vec<NamedPoints>,
    #[serde(default)]
    pub density_radii: Vec<f64>,
    #[serde(default)]
    pub localization_radii: Vec<f64>,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub bernstein: BernsteinConfig,
    #[serde(default)]
    pub heat: HeatConfig,
    #[serde(default)]
    pub localization: LocalizationConfig,
    #[serde(default)]
    pub conversion: ConversionConfig,
    #[serde(default)]
    pub approx_identity_widths: Vec<usize>,
    #[serde(default)]
    pub limit: Option<LimitConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default = "default_annuli")]
    pub annuli: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub seed: u64,
    #[serde(default = "default_size_cap")]
    pub size_cap: usize,
}

fn default_weights() -> Vec<WeightKind> {
    vec![WeightKind::Lebesgue, WeightKind::Nu]
}

fn default_annuli() -> usize {
    4
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("specband-out")
}

fn default_size_cap() -> usize {
    DEFAULT_SIZE_CAP
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| CliError::Validation(e.to_string()))?;
        cfg.materialize();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fills seeds that default to the global seed, so the stored config
    /// is self-describing.
    fn materialize(&mut self) {
        self.bernstein.seed.get_or_insert(self.seed);
        self.conversion.seed.get_or_insert(self.seed);
    }

    pub fn omega(&self) -> f64 {
        self.omega.value()
    }

    pub fn has(&self, check: Check) -> bool {
        self.checks.contains(&check)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        let grid = self.grid.build()?;
        let omega = self.omega();
        if !(omega.is_finite() && omega > 0.0) {
            return bad(format!("Ω must be positive, got {omega}"));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return bad(format!("θ must be positive, got {}", self.theta));
        }
        let density_cap = grid.min_length() / 4.0;
        for &r in &self.density_radii {
            if !(r > 0.0 && r <= density_cap) {
                return bad(format!("density radius {r} outside (0, L/4 = {density_cap}]"));
            }
        }
        let loc_cap = grid.min_length() / 2.0 - grid.max_spacing();
        for &r in &self.localization_radii {
            if !(r >= 0.0 && r <= loc_cap) {
                return bad(format!("localization radius {r} outside [0, L/2 - h = {loc_cap}]"));
            }
        }
        for radii in [&self.density_radii, &self.localization_radii] {
            if radii.windows(2).any(|w| w[0] >= w[1]) {
                return bad("radii must be strictly increasing".into());
            }
        }
        let needs = |c: Check, ok: bool, what: &str| -> Result<(), CliError> {
            if self.has(c) && !ok {
                Err(CliError::Validation(format!("check {c:?} needs {what}")))
            } else {
                Ok(())
            }
        };
        needs(Check::Density, !self.density_radii.is_empty(), "density_radii")?;
        needs(Check::Trace, !self.density_radii.is_empty(), "density_radii")?;
        needs(Check::Conversion, !self.density_radii.is_empty(), "density_radii")?;
        needs(Check::Consistency, !self.density_radii.is_empty(), "density_radii")?;
        needs(Check::Localization, !self.localization_radii.is_empty(), "localization_radii")?;
        needs(Check::Hap, !self.localization_radii.is_empty(), "localization_radii")?;
        needs(Check::Heat, !self.heat.times.is_empty(), "heat.times")?;
        needs(Check::ApproxIdentity, !self.approx_identity_widths.is_empty(), "approx_identity_widths")?;
        needs(Check::LimitKernel, self.limit.is_some(), "a limit section")?;
        needs(Check::LimitKernel, self.symbol.limit_matrix(grid.dim()).is_some(), "a symbol with a constant limit")?;
        needs(Check::Sweep, self.sweep.is_some(), "a sweep section")?;
        needs(Check::Sweep, grid.dim() == 1, "a one-dimensional grid")?;
        if let Some(t) = &self.localization.tail_ratio {
            for r in [t.small, t.large] {
                if !self.localization_radii.iter().any(|&x| x == r) {
                    return bad(format!("tail_ratio radius {r} is not in localization_radii"));
                }
            }
        }
        if self.weights.contains(&WeightKind::Custom) {
            return bad("custom weights cannot be requested from a config".into());
        }
        let mut names: Vec<&str> = self.point_sets.iter().map(|p| p.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("point set names must be unique".into());
        }
        let [lo, hi] = self.conversion.rate_range;
        if !(lo > 0.0 && lo <= hi) {
            return bad(format!("conversion.rate_range [{lo}, {hi}] is not a valid range"));
        }
        if self.heat.times.iter().any(|&t| !(t > 0.0)) {
            return bad("heat times must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "grid": {"lengths": [32], "points": [256]},
        "symbol": {"kind": "constant", "b": 1.0},
        "theta": 1.0,
        "omega": {"sqrt_over_pi": 1.0},
        "density_radii": [1, 8],
        "checks": ["density"],
        "seed": 5
    }"#;

    #[test]
    fn parses_and_materializes_seeds() {
        let c = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert!((c.omega() - PI * PI).abs() < 1e-15);
        assert_eq!(c.bernstein.seed, Some(5));
        assert_eq!(c.weights, vec![WeightKind::Lebesgue, WeightKind::Nu]);
    }

    #[test]
    fn rejects_radius_above_quarter_box() {
        let text = MINIMAL.replace("[1, 8]", "[1, 9]");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(CliError::Validation(_))));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_omega() {
        let text = MINIMAL.replace("\"seed\": 5", "\"seed\": 5, \"sede\": 1");
        assert!(ExperimentConfig::from_json(&text).is_err());
        let text = MINIMAL.replace("{\"sqrt_over_pi\": 1.0}", "-1.0");
        assert!(ExperimentConfig::from_json(&text).is_err());
    }
}
