//! `specband verify`: the acceptance criteria, grouped into suites.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use specband_core::analysis::{
    frame_bounds, hap_check, limit_kernel_convergence, riesz_lower_bound, weak_localization_curve,
};
use specband_core::constcoef::{
    periodic_sum, schur_row_bound, sobolev_kernel_gram, sobolev_kernel_gram_quadrature,
};
use specband_core::geometry::{
    averaged_trace, density_conversion_check, generate_points, make_weight, PointGenerator,
    WeightSource,
};
use specband_core::operator::discretize;
use specband_core::spectral::{
    bernstein_check, compker_check, dyadic_lower_bound_check, eigendecompose, heat_diagonal_bounds,
    reproducing_kernel,
};
use specband_core::symbol::{make_symbol, MatrixSpec};
use specband_core::{Coeff, Ellipsoid, GridSpec, SymbolRecipe};

use crate::config::ExperimentConfig;
use crate::pipeline::{prepare, Prepared};
use crate::report::{write_json, write_metadata};
use crate::run::{sweep_contrasts, sweep_rows, trace_target};
use crate::CliError;

/// The shipped configurations, embedded so `verify` needs no files.
pub const SHIPPED: [(&str, &str); 5] = [
    ("classical_pw", include_str!("../../../configs/classical_pw.json")),
    ("vbw_phase_transition", include_str!("../../../configs/vbw_phase_transition.json")),
    ("slowly_oscillating_1d", include_str!("../../../configs/slowly_oscillating_1d.json")),
    ("asymptotic_bump", include_str!("../../../configs/asymptotic_bump.json")),
    ("matrix_2d", include_str!("../../../configs/matrix_2d.json")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Kernels,
    Densities,
    Localization,
    Heat,
    Sobolev,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Kernels => "kernels",
            Suite::Densities => "densities",
            Suite::Localization => "localization",
            Suite::Heat => "heat",
            Suite::Sobolev => "sobolev",
            Suite::All => "all",
        }
    }

    pub fn criteria(self) -> Vec<u32> {
        match self {
            Suite::Kernels => vec![1, 2, 3],
            Suite::Heat => vec![4],
            Suite::Densities => vec![5, 8, 9, 10],
            Suite::Localization => vec![6, 7],
            Suite::Sobolev => vec![11],
            Suite::All => (1..=11).collect(),
        }
    }
}

fn suite_of(id: u32) -> &'static str {
    match id {
        1..=3 => "kernels",
        4 => "heat",
        5 | 8 | 9 | 10 => "densities",
        6 | 7 => "localization",
        _ => "sobolev",
    }
}

/// Result of one acceptance criterion.
#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: u32,
    pub suite: &'static str,
    pub title: &'static str,
    pub passed: bool,
    /// One-line measured-vs-target summary.
    pub summary: String,
    pub measured: Value,
    pub target: Value,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} ({}) {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.suite,
            self.title,
            self.summary
        )
    }
}

/// Lazily prepared shipped configurations.
#[derive(Default)]
pub struct Lab {
    prepared: BTreeMap<&'static str, Prepared>,
}

impl Lab {
    pub fn new() -> Self {
        Lab::default()
    }

    pub fn config(name: &str) -> Result<ExperimentConfig, CliError> {
        let text = SHIPPED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| CliError::Validation(format!("no shipped config {name}")))?;
        ExperimentConfig::from_json(text)
    }

    pub fn get(&mut self, name: &'static str) -> Result<&Prepared, CliError> {
        if !self.prepared.contains_key(name) {
            let p = prepare(&Lab::config(name)?)?;
            self.prepared.insert(name, p);
        }
        Ok(&self.prepared[name])
    }
}

pub fn criterion(id: u32, lab: &mut Lab) -> Result<Criterion, CliError> {
    let (title, passed, summary, measured, target) = match id {
        1 => constant_kernel_oracle()?,
        2 => ellipsoid_volume()?,
        3 => bernstein_all(lab)?,
        4 => kernel_diagonal_bounds(lab)?,
        5 => shannon_frame(lab)?,
        6 => localization_curves(lab)?,
        7 => limit_kernel(lab)?,
        8 => averaged_trace_bump(lab)?,
        9 => phase_transition(lab)?,
        10 => conversion_agreement(lab)?,
        11 => sobolev_gramian()?,
        _ => return Err(CliError::Validation(format!("no criterion {id}"))),
    };
    Ok(Criterion {
        id,
        suite: suite_of(id),
        title,
        passed,
        summary,
        measured,
        target,
    })
}

type Outcome = (&'static str, bool, String, Value, Value);

pub struct SuiteSummary {
    pub suite: Suite,
    pub criteria: Vec<Criterion>,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn failed_ids(&self) -> Vec<u32> {
        self.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }
}

/// Runs a suite, printing one line per criterion, and writes
/// `verify_<suite>.json` plus `metadata.json` into `out_dir`.
pub fn run_suite(suite: Suite, out_dir: &Path) -> Result<SuiteSummary, CliError> {
    let mut lab = Lab::new();
    let mut criteria = Vec::new();
    for id in suite.criteria() {
        let c = criterion(id, &mut lab)?;
        println!("{}", c.line());
        criteria.push(c);
    }
    let summary = SuiteSummary { suite, criteria };
    let report = json!({
        "suite": suite.name(),
        "criteria": summary.criteria,
        "passed": summary.passed(),
        "failed": summary.failed_ids(),
        "seeds": shipped_seeds()?,
        "tolerances": crate::run::tolerances(),
    });
    write_json(&out_dir.join(format!("verify_{}.json", suite.name())), &report)?;
    write_metadata(out_dir, &format!("verify {}", suite.name()))?;
    Ok(summary)
}

fn shipped_seeds() -> Result<Value, CliError> {
    let mut m = serde_json::Map::new();
    for (name, _) in SHIPPED {
        let c = Lab::config(name)?;
        m.insert(
            name.to_string(),
            json!({ "global": c.seed, "bernstein": c.bernstein.seed, "conversion": c.conversion.seed }),
        );
    }
    m.insert("conversion_sets".into(), json!(CONVERSION_SEED));
    Ok(Value::Object(m))
}

fn constant_grid(length: f64, points: usize) -> Result<(GridSpec, specband_core::SymbolField), CliError> {
    let grid = GridSpec::one_d(length, points)?;
    let symbol = make_symbol(&grid, &SymbolRecipe::Constant { b: MatrixSpec::Scalar(1.0) }, 1.0)?;
    Ok((grid, symbol))
}

fn constant_kernel_oracle() -> Result<Outcome, CliError> {
    let started = Instant::now();
    let (grid, symbol) = constant_grid(32.0, 1024)?;
    let omega = PI * PI;
    let spec = eigendecompose(&discretize(&symbol)?, omega)?;
    let kernel = reproducing_kernel(&spec);
    let n = grid.node_count();
    let modes = Ellipsoid::scalar(1.0, omega)?.torus_modes(&[32.0])?;
    let reference: Vec<f64> = (0..n)
        .map(|j| periodic_sum(&modes, &[32.0], &[grid.offset(0, j)[0]]))
        .collect();
    let mut max_err = 0.0f64;
    for i in 0..n {
        for (j, k) in kernel.row(i).iter().enumerate() {
            max_err = max_err.max((k - reference[(j + n - i) % n]).abs());
        }
    }
    let exact = 33.0 / 32.0;
    let diag_err = (0..n)
        .map(|i| (kernel.get(i, i) - exact).abs())
        .fold(0.0, f64::max);
    let continuum = omega.sqrt() / PI;
    let gap = (exact - continuum).abs() / continuum;
    let runtime_ok = started.elapsed().as_secs_f64() < 30.0;
    let passed = max_err <= 1e-9 && diag_err <= 1e-12 * exact && modes.len() == 33 && runtime_ok;
    Ok((
        "constant-symbol kernel oracle",
        passed,
        format!(
            "max |K - K_per| = {max_err:.2e} (≤ 1e-9), |k(x,x) - 33/32| = {diag_err:.2e}, modes = {}, finite-size gap = {:.4}%",
            modes.len(),
            100.0 * gap
        ),
        json!({
            "max_abs_error": max_err,
            "diagonal_error": diag_err,
            "band_dim": spec.band_dim(),
            "torus_modes": modes.len(),
            "finite_size_gap": gap,
            "runtime_under_30s": runtime_ok,
        }),
        json!({ "max_abs_error": 1e-9, "diagonal": exact, "finite_size_gap": 1.0 / 32.0 }),
    ))
}

fn ellipsoid_volume() -> Result<Outcome, CliError> {
    let v2 = Ellipsoid::new(2, Coeff::new(1.0, 0.0, 4.0), 4.0)?.volume();
    let v1 = Ellipsoid::scalar(1.0, PI * PI)?.volume();
    let (e2, e1) = ((v2 - 2.0 * PI).abs(), (v1 - 2.0 * PI).abs());
    Ok((
        "ellipsoid volume",
        e2 <= 1e-12 && e1 <= 1e-12,
        format!("|vol - 2π| = {e2:.1e} (d=2), {e1:.1e} (d=1), target ≤ 1e-12"),
        json!({ "d2_volume": v2, "d1_volume": v1 }),
        json!({ "volume": 2.0 * PI, "tolerance": 1e-12 }),
    ))
}

fn bernstein_all(lab: &mut Lab) -> Result<Outcome, CliError> {
    let mut measured = serde_json::Map::new();
    let mut passed = true;
    let mut worst = 0.0f64;
    for (name, _) in SHIPPED {
        let p = lab.get(name)?;
        let seed = p.config.bernstein.seed.unwrap_or(p.config.seed);
        match bernstein_check(&p.spec, 100, 4, seed) {
            Ok(r) => {
                worst = r.max_ratio.iter().copied().fold(worst, f64::max);
                measured.insert(name.into(), json!({ "seed": seed, "max_ratio": r.max_ratio }));
            }
            Err(e) if e.is_check_failure() => {
                passed = false;
                measured.insert(name.into(), json!({ "seed": seed, "error": e.to_string() }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((
        "Bernstein inequality",
        passed,
        format!("max ‖H^k f‖/(Ω^k‖f‖) over k ≤ 4, 100 trials, 5 symbols = {worst:.4} (≤ 1 + 1e-8)"),
        Value::Object(measured),
        json!({ "max_ratio": 1.0 + 1e-8, "trials": 100, "k_max": 4 }),
    ))
}

const HEAT_TIMES: [f64; 6] = [0.1, 0.2, 0.3, 0.5, 0.7, 1.0];

fn kernel_diagonal_bounds(lab: &mut Lab) -> Result<Outcome, CliError> {
    let mut measured = serde_json::Map::new();
    let mut passed = true;
    for name in ["slowly_oscillating_1d", "asymptotic_bump"] {
        let p = lab.get(name)?;
        let min_kdiag = p.diagonal.iter().copied().fold(f64::INFINITY, f64::min);
        let comp = compker_check(&p.spec)?;
        let dyadic = match dyadic_lower_bound_check(&p.spec) {
            Ok(r) => json!({ "holds": true, "levels": r.levels, "best_lower_bound": r.best_lower_bound }),
            Err(e) if e.is_check_failure() => json!({ "holds": false, "error": e.to_string() }),
            Err(e) => return Err(e.into()),
        };
        passed &= min_kdiag > 0.0 && comp.holds && dyadic["holds"] == json!(true);
        measured.insert(
            name.into(),
            json!({ "min_kernel_diagonal": min_kdiag, "compker": comp, "dyadic": dyadic }),
        );
    }
    let p = lab.get("classical_pw")?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut constants = Vec::new();
    for t in HEAT_TIMES {
        let b = heat_diagonal_bounds(&p.spec, t)?;
        lo = lo.min(b.lower_constant);
        hi = hi.max(b.upper_constant);
        constants.push(b);
    }
    let heat_ok = lo >= 0.25 && hi <= 0.32;
    passed &= heat_ok;
    measured.insert("heat_constants".into(), json!(constants));
    let compker_worst = ["slowly_oscillating_1d", "asymptotic_bump"]
        .iter()
        .map(|n| measured[*n]["compker"]["max_ratio"].as_f64().unwrap_or(f64::NAN))
        .fold(0.0, f64::max);
    Ok((
        "kernel diagonal bounds",
        passed,
        format!(
            "k(x,x)/(e·p_{{1/Ω}}(x,x)) ≤ {compker_worst:.3}, dyadic chain holds, t^{{1/2}} p_t(x,x) ∈ [{lo:.4}, {hi:.4}] (target [0.25, 0.32])"
        ),
        Value::Object(measured),
        json!({
            "compker_ratio": 1.0,
            "heat_constant_range": [0.25, 0.32],
            "heat_constant": 1.0 / (4.0 * PI).sqrt(),
            "e": E,
        }),
    ))
}

fn shannon_frame(lab: &mut Lab) -> Result<Outcome, CliError> {
    let p = lab.get("classical_pw")?;
    let s = generate_points(&PointGenerator::Uniform { spacing: 1.0 }, &p.grid, None)?;
    let f = frame_bounds(&s, &p.spec)?;
    let g = riesz_lower_bound(&s, &p.kernel)?;
    let k00 = p.kernel.get(0, 0);
    let frame_ok = (f.a - 1.0).abs() <= 1e-8 && (f.b_upper - 1.0).abs() <= 1e-8;
    let gram_ok = (g.lambda_min - k00).abs() <= 1e-8;
    Ok((
        "Shannon grid frame bounds",
        frame_ok && gram_ok,
        format!(
            "A = {:.10}, B = {:.10} (target 1 ± 1e-8); Gram λ_min = {:.2e} vs k(0,0) = {k00:.6} ({} modes, {} points)",
            f.a,
            f.b_upper,
            g.lambda_min,
            f.band_dim,
            s.len()
        ),
        json!({
            "a": f.a,
            "b_upper": f.b_upper,
            "gram_lambda_min": g.lambda_min,
            "gram_lambda_max": g.lambda_max,
            "kernel_diagonal": k00,
            "band_dim": f.band_dim,
            "points": s.len(),
            "frame_holds": frame_ok,
            "gram_holds": gram_ok,
        }),
        json!({ "a": 1.0, "b_upper": 1.0, "gram_lambda_min": k00, "tolerance": 1e-8 }),
    ))
}

fn localization_curves(lab: &mut Lab) -> Result<Outcome, CliError> {
    let mut measured = serde_json::Map::new();
    let mut passed = true;
    let mut ratio = f64::NAN;
    for (name, _) in SHIPPED {
        let p = lab.get(name)?;
        let radii = &p.config.localization_radii;
        let wl = weak_localization_curve(&p.kernel, radii)?;
        let mut ok = wl.is_nonincreasing(1e-12);
        let mut hap = serde_json::Map::new();
        for (set, s) in p.point_sets()? {
            let c = hap_check(&p.kernel, &s, radii)?;
            ok &= c.is_nonincreasing(1e-12);
            hap.insert(set, json!(c.values));
        }
        if name == "slowly_oscillating_1d" {
            ratio = wl.value_at(8.0).unwrap_or(f64::NAN) / wl.value_at(1.0).unwrap_or(f64::NAN);
            ok &= ratio <= 0.2;
        }
        passed &= ok;
        measured.insert(
            name.into(),
            json!({ "radii": radii, "weak_localization": wl.values, "hap": hap, "holds": ok }),
        );
    }
    measured.insert("slowly_oscillating_tail_ratio".into(), json!(ratio));
    Ok((
        "weak localization and HAP",
        passed,
        format!("all curves nonincreasing: {passed}; slowly-oscillating tail(8)/tail(1) = {ratio:.4} (≤ 0.2)"),
        Value::Object(measured),
        json!({ "nonincreasing": true, "tail_ratio_max": 0.2 }),
    ))
}

fn limit_kernel(lab: &mut Lab) -> Result<Outcome, CliError> {
    let p = lab.get("asymptotic_bump")?;
    let ellipsoid = Ellipsoid::scalar(1.0, p.spec.omega())?;
    let curve = limit_kernel_convergence(&p.kernel, &ellipsoid, p.grid.center_node(), 4.0, &[4.0, 8.0, 16.0])?;
    let d: Vec<f64> = curve.entries.iter().map(|e| e.l2_distance).collect();
    let ratio = d[2] / d[0];
    let strict = curve.is_strictly_decreasing();
    Ok((
        "limit-kernel convergence",
        strict && ratio <= 0.1,
        format!(
            "L² distances at 4, 8, 16 = {:.4}, {:.4}, {:.4}; strictly decreasing: {strict}; final/initial = {ratio:.4} (≤ 0.1)",
            d[0], d[1], d[2]
        ),
        json!({ "curve": curve, "strictly_decreasing": strict, "final_over_initial": ratio }),
        json!({ "strictly_decreasing": true, "final_over_initial": 0.1 }),
    ))
}

fn averaged_trace_bump(lab: &mut Lab) -> Result<Outcome, CliError> {
    let p = lab.get("asymptotic_bump")?;
    let r = p.grid.length(0) / 4.0;
    let nu = make_weight(WeightSource::Nu(&p.symbol))?;
    let curve = averaged_trace(&p.diagonal, &nu, &[r])?;
    let target = trace_target(1, p.spec.omega());
    let err = (curve.lower() - target).abs().max((curve.upper() - target).abs()) / target;
    Ok((
        "averaged trace",
        err <= 0.05,
        format!(
            "tr_ν^- = {:.4}, tr_ν^+ = {:.4} at r = {r} vs |B_1|Ω^{{1/2}}/(2π) = {target:.4}; relative error {:.2}% (≤ 5%)",
            curve.lower(),
            curve.upper(),
            100.0 * err
        ),
        json!({ "radius": r, "lower": curve.lower(), "upper": curve.upper(), "relative_error": err }),
        json!({ "value": target, "relative_tolerance": 0.05 }),
    ))
}

fn phase_transition(lab: &mut Lab) -> Result<Outcome, CliError> {
    let p = lab.get("vbw_phase_transition")?;
    let rows = sweep_rows(p, &[0.8, 0.9, 1.0, 1.1, 1.25])?;
    let (sampling, interpolation) = sweep_contrasts(&rows, 100.0);
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    Ok((
        "variable-bandwidth phase transition",
        sampling && interpolation,
        format!(
            "A(0.8) = {:.2e}, A(1.25) = {:.3}; λ_min(0.8) = {:.3}, λ_min(1.25) = {:.2e}; contrasts ≥ 100: {sampling}, {interpolation}",
            first.a, last.a, first.lambda_min, last.lambda_min
        ),
        json!({ "rows": rows, "band_dim": p.spec.band_dim() }),
        json!({ "min_contrast": 100.0, "critical_density": p.spec.omega().sqrt() / PI }),
    ))
}

const CONVERSION_SEED: u64 = 20240110;
const CONVERSION_SETS: usize = 100;

fn conversion_agreement(lab: &mut Lab) -> Result<Outcome, CliError> {
    let p = lab.get("classical_pw")?;
    let spec = p.spec.with_omega(PI * PI)?;
    let diag = reproducing_kernel(&spec).diagonal();
    let nu = make_weight(WeightSource::Nu(&p.symbol))?;
    let radii = [1.0, 2.0, 4.0, 8.0];
    let mut rng = ChaCha8Rng::seed_from_u64(CONVERSION_SEED);
    let (mut disagreements, mut ties, mut sampling_rows, mut rows) = (0usize, 0usize, 0usize, 0usize);
    let mut failures = Vec::new();
    for i in 0..CONVERSION_SETS {
        let rate = rng.gen_range(0.5..1.5);
        let seed: u64 = rng.gen();
        let s = generate_points(&PointGenerator::Poisson { rate, seed }, &p.grid, None)?;
        match density_conversion_check(&s, &nu, &diag, &radii) {
            Ok(r) => {
                for row in r.rows {
                    rows += 1;
                    ties += row.tie as usize;
                    sampling_rows += row.abstract_predicate as usize;
                }
            }
            Err(e) if e.is_check_failure() => {
                disagreements += 1;
                failures.push(json!({ "set": i, "rate": rate, "seed": seed, "error": e.to_string() }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok((
        "density/measure conversion agreement",
        disagreements == 0,
        format!(
            "{disagreements} disagreements over {CONVERSION_SETS} sets × {} radii ({sampling_rows} of {rows} rows satisfy D_0^- ≥ 1, {ties} ties)",
            radii.len()
        ),
        json!({
            "sets": CONVERSION_SETS,
            "seed": CONVERSION_SEED,
            "rows": rows,
            "rows_with_d0_at_least_one": sampling_rows,
            "ties": ties,
            "disagreements": disagreements,
            "failures": failures,
            "band_dim": spec.band_dim(),
        }),
        json!({ "disagreements": 0 }),
    ))
}

fn sobolev_gramian() -> Result<Outcome, CliError> {
    let c = (PI / 2.0).sqrt();
    let mut max_err = 0.0f64;
    for k in 0..=400 {
        let u = k as f64 * 0.05;
        let closed = c * (-u).exp();
        max_err = max_err.max((closed - sobolev_kernel_gram_quadrature(1.0, 1, u)?).abs());
        max_err = max_err.max((closed - sobolev_kernel_gram(1.0, 1, u)?).abs());
    }
    let grid = GridSpec::one_d(32.0, 256)?;
    let s = generate_points(&PointGenerator::Uniform { spacing: 1.0 }, &grid, None)?;
    let bound = schur_row_bound(&s, 1.0)?;
    let series = c * (1.0 + 2.0 / (E - 1.0));
    let schur_err = (bound - series).abs();
    Ok((
        "Sobolev Gramian",
        max_err <= 1e-8 && schur_err <= 1e-6,
        format!(
            "max |closed form - quadrature| on [0, 20] = {max_err:.2e} (≤ 1e-8); Schur row bound {bound:.9} vs series {series:.9}, error {schur_err:.2e} (≤ 1e-6)"
        ),
        json!({ "max_quadrature_error": max_err, "schur_row_bound": bound, "schur_error": schur_err }),
        json!({ "quadrature_tolerance": 1e-8, "schur_series": series, "schur_tolerance": 1e-6 }),
    ))
}

/// Files in `a` and `b` (excluding `metadata.json`) that differ or exist in
/// only one of them.
pub fn compare_dirs(a: &Path, b: &Path) -> Result<Vec<String>, CliError> {
    let list = |d: &Path| -> Result<BTreeMap<String, Vec<u8>>, CliError> {
        let mut m = BTreeMap::new();
        for e in std::fs::read_dir(d)? {
            let e = e?;
            let name = e.file_name().to_string_lossy().into_owned();
            if name != "metadata.json" && e.file_type()?.is_file() {
                m.insert(name, std::fs::read(e.path())?);
            }
        }
        Ok(m)
    };
    let (ma, mb) = (list(a)?, list(b)?);
    let mut diff: Vec<String> = ma
        .iter()
        .filter(|(k, v)| mb.get(*k) != Some(*v))
        .map(|(k, _)| k.clone())
        .collect();
    diff.extend(mb.keys().filter(|k| !ma.contains_key(*k)).cloned());
    Ok(diff)
}
