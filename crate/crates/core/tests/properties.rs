//! Randomized invariants across modules.

use std::sync::OnceLock;

use proptest::prelude::*;
use specband_core::analysis::{frame_bounds, hap_check, riesz_lower_bound, weak_localization_curve};
use specband_core::geometry::{
    beurling_density, density_conversion_rows, generate_points, make_weight, PointGenerator,
    WeightSource,
};
use specband_core::operator::discretize;
use specband_core::spectral::{eigendecompose, reproducing_kernel};
use specband_core::symbol::{make_symbol, Profile1d};
use specband_core::{GridShift, GridSpec, KernelMatrix, PointSet, SpectralData, SymbolField, SymbolRecipe};

struct Fixture {
    grid: GridSpec,
    symbol: SymbolField,
    spec: SpectralData,
    kernel: KernelMatrix,
}

fn vbw(grid: &GridSpec) -> SymbolField {
    let recipe = SymbolRecipe::VariableBandwidth {
        profile: Profile1d::Sinusoid {
            mean: 2.0,
            amplitude: 1.0,
            periods: 1.0,
            phase: 0.3,
        },
    };
    make_symbol(grid, &recipe, 1.0).unwrap()
}

/// `L = 16`, `N = 96`, variable bandwidth, `Ω = 2`.
fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let grid = GridSpec::one_d(16.0, 96).unwrap();
        let symbol = vbw(&grid);
        let spec = eigendecompose(&discretize(&symbol).unwrap(), 2.0).unwrap();
        let kernel = reproducing_kernel(&spec);
        Fixture {
            grid,
            symbol,
            spec,
            kernel,
        }
    })
}

fn subset(grid: &GridSpec, mask: &[bool]) -> PointSet {
    let nodes = mask
        .iter()
        .enumerate()
        .filter(|(_, &keep)| keep)
        .map(|(i, _)| i)
        .collect();
    PointSet::new(grid.clone(), nodes, "mask".into(), None).unwrap()
}

fn node_mask() -> impl Strategy<Value = Vec<bool>> {
    proptest::collection::vec(proptest::bool::weighted(0.25), 96)
        .prop_filter("nonempty", |m| m.iter().any(|&b| b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kernel_follows_symbol_translation(steps in -40isize..40) {
        let f = fixture();
        let shift = GridShift::one_d(steps);
        let moved = f.symbol.translate(shift);
        let k = reproducing_kernel(&eigendecompose(&discretize(&moved).unwrap(), 2.0).unwrap());
        let n = f.grid.node_count();
        for x in (0..n).step_by(7) {
            for y in 0..n {
                let expected = f.kernel.get(f.grid.shifted(x, shift), f.grid.shifted(y, shift));
                prop_assert!((k.get(x, y) - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn translations_compose(a in -50isize..50, b in -50isize..50) {
        let f = fixture();
        let two = f.symbol.translate(GridShift::one_d(a)).translate(GridShift::one_d(b));
        let one = f.symbol.translate(GridShift::one_d(a) + GridShift::one_d(b));
        prop_assert_eq!(two, one);
        prop_assert_eq!(f.symbol.translate(GridShift::one_d(a)).translate(-GridShift::one_d(a)), f.symbol.clone());
    }

    #[test]
    fn removing_a_point_never_raises_density(mask in node_mask(), pick in any::<prop::sample::Index>()) {
        let f = fixture();
        let s = subset(&f.grid, &mask);
        let smaller = s.without(pick.index(s.len()));
        let nu = make_weight(WeightSource::Nu(&f.symbol)).unwrap();
        let radii = [1.0, 2.0, 4.0];
        let big = beurling_density(&s, &nu, &radii).unwrap();
        let small = beurling_density(&smaller, &nu, &radii).unwrap();
        for i in 0..radii.len() {
            prop_assert!(small.inf[i] <= big.inf[i] + 1e-15);
            prop_assert!(small.sup[i] <= big.sup[i] + 1e-15);
        }
    }

    #[test]
    fn adding_a_point_interlaces(mask in node_mask(), extra in 0usize..96) {
        let f = fixture();
        let s = subset(&f.grid, &mask);
        prop_assume!(!s.contains(extra));
        let bigger = s.with_node(extra).unwrap();
        let (before, after) = (frame_bounds(&s, &f.spec).unwrap(), frame_bounds(&bigger, &f.spec).unwrap());
        let tol = 1e-10 * after.b_upper;
        prop_assert!(after.a >= before.a - tol);
        prop_assert!(after.b_upper >= before.b_upper - tol);
        let (g0, g1) = (riesz_lower_bound(&s, &f.kernel).unwrap(), riesz_lower_bound(&bigger, &f.kernel).unwrap());
        prop_assert!(g1.lambda_min <= g0.lambda_min + 1e-10 * g1.lambda_max);
    }

    #[test]
    fn hap_curves_are_nonincreasing(mask in node_mask()) {
        let f = fixture();
        let s = subset(&f.grid, &mask);
        let c = hap_check(&f.kernel, &s, &[0.0, 0.5, 1.0, 2.0, 4.0, 7.5]).unwrap();
        prop_assert!(c.is_nonincreasing(0.0));
    }

    #[test]
    fn density_forward_implication_holds(rate in 0.3f64..2.0, seed in any::<u64>()) {
        let f = fixture();
        let s = generate_points(&PointGenerator::Poisson { rate, seed }, &f.grid, None).unwrap();
        prop_assume!(!s.is_empty());
        let diag = f.kernel.diagonal();
        for w in [
            make_weight(WeightSource::Lebesgue(&f.grid)).unwrap(),
            make_weight(WeightSource::Nu(&f.symbol)).unwrap(),
        ] {
            let report = density_conversion_rows(&s, &w, &diag, &[1.0, 2.0, 4.0]).unwrap();
            prop_assert!(report.rows.iter().all(|r| !r.violates_forward_implication()));
        }
    }
}

#[test]
fn weak_localization_is_nonincreasing() {
    let f = fixture();
    let radii: Vec<f64> = (0..=15).map(|k| k as f64 * 0.5).collect();
    let c = weak_localization_curve(&f.kernel, &radii).unwrap();
    assert!(c.is_nonincreasing(0.0));
    assert!(c.values[0] > c.values[15]);
}
