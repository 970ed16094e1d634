//! symbol → operator → spectrum → kernel, shared by `run` and `verify`.

use specband_core::geometry::{generate_points, make_weight, PointSet, WeightField, WeightKind, WeightSource};
use specband_core::operator::discretize;
use specband_core::spectral::{eigendecompose_with, reproducing_kernel, SpectralConfig};
use specband_core::symbol::make_symbol;
use specband_core::{GridSpec, KernelMatrix, SpectralData, SymbolField};

use crate::config::ExperimentConfig;
use crate::CliError;

pub struct Prepared {
    pub config: ExperimentConfig,
    pub grid: GridSpec,
    pub symbol: SymbolField,
    pub spec: SpectralData,
    pub kernel: KernelMatrix,
    pub diagonal: Vec<f64>,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared, CliError> {
    let grid = config.grid.build()?;
    let symbol = make_symbol(&grid, &config.symbol, config.theta)?;
    let op = discretize(&symbol)?;
    let spec = eigendecompose_with(
        &op,
        config.omega(),
        &SpectralConfig {
            size_cap: config.size_cap,
            ..SpectralConfig::default()
        },
    )?;
    let kernel = reproducing_kernel(&spec);
    let diagonal = kernel.diagonal();
    Ok(Prepared {
        config: config.clone(),
        grid,
        symbol,
        spec,
        kernel,
        diagonal,
    })
}

impl Prepared {
    pub fn weight(&self, kind: WeightKind) -> Result<WeightField, CliError> {
        let w = match kind {
            WeightKind::Lebesgue => make_weight(WeightSource::Lebesgue(&self.grid)),
            WeightKind::Nu => make_weight(WeightSource::Nu(&self.symbol)),
            WeightKind::KernelDiagonal => {
                make_weight(WeightSource::KernelDiagonal(&self.grid, &self.diagonal))
            }
            WeightKind::Custom => {
                return Err(CliError::Validation("custom weights need explicit values".into()))
            }
        };
        Ok(w?)
    }

    /// The configured point sets, in configuration order.
    pub fn point_sets(&self) -> Result<Vec<(String, PointSet)>, CliError> {
        self.config
            .point_sets
            .iter()
            .map(|p| {
                let s = generate_points(&p.generator, &self.grid, Some(&self.symbol))?;
                Ok((p.name.clone(), s))
            })
            .collect()
    }
}

pub fn weight_label(kind: WeightKind) -> &'static str {
    match kind {
        WeightKind::Lebesgue => "lebesgue",
        WeightKind::Nu => "nu",
        WeightKind::KernelDiagonal => "kernel-diagonal",
        WeightKind::Custom => "custom",
    }
}
