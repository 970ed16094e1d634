//! `specband run`: executes the checks listed in a config and writes the
//! report bundle.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use specband_core::analysis::{
    approx_identity_check, density_consistency, frame_bounds, hap_check, limit_kernel_convergence,
    riesz_lower_bound, weak_localization_curve, Curve, RIESZ_TOL_REL, SAMPLING_TOL_REL,
};
use specband_core::geometry::{
    averaged_trace, beurling_density, density_conversion_rows, generate_points, PointGenerator,
    WeightKind, CONVERSION_TOL,
};
use specband_core::spectral::{
    bernstein_check, compker_check, dyadic_lower_bound_check, heat_diagonal_bounds, BERNSTEIN_TOL,
};
use specband_core::symbol::OscillationVerdict;
use specband_core::{Ellipsoid, Error, SymbolRecipe};

use crate::config::{Check, ExperimentConfig};
use crate::pipeline::{prepare, weight_label, Prepared};
use crate::report::{hash_json, write_json, write_metadata, write_tables, CheckOutcome, Table};
use crate::CliError;

/// Relative slack when testing curves for monotonicity.
const CURVE_SLACK: f64 = 1e-12;
/// Relative tolerance of the averaged-trace target.
const TRACE_TOL: f64 = 0.05;
/// Slack of the density-consistency property.
const CONSISTENCY_SLACK: f64 = 0.1;
/// Slack of the limit-kernel monotonicity requirement.
const LIMIT_SLACK: f64 = 0.1;
/// Smallest accepted observed order of the approximate identity.
const APPROX_MIN_ORDER: f64 = 0.9;

pub struct RunOutput {
    pub report: Value,
    pub tables: Vec<Table>,
    pub outcomes: Vec<CheckOutcome>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|c| !c.hard || c.passed)
    }

    pub fn failures(&self) -> Vec<&str> {
        self.outcomes
            .iter()
            .filter(|c| c.hard && !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Runs the config and writes `report.json`, the CSV tables and
/// `metadata.json` into `out_dir`.
pub fn run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutput, CliError> {
    let prepared = prepare(config)?;
    let output = execute(&prepared)?;
    write_tables(out_dir, &output.tables)?;
    write_json(&out_dir.join("report.json"), &output.report)?;
    write_metadata(out_dir, &format!("run {}", config.name))?;
    Ok(output)
}

/// Runs every configured check on an already prepared pipeline.
pub fn execute(p: &Prepared) -> Result<RunOutput, CliError> {
    let cfg = &p.config;
    let mut outcomes = Vec::new();
    let mut tables = Vec::new();
    for &check in &cfg.checks {
        let name = check_name(check);
        let outcome = match check {
            Check::Oscillation => oscillation(p)?,
            Check::Frame => frame(p, &mut tables)?,
            Check::Density => density(p, &mut tables)?,
            Check::Trace => trace(p, &mut tables)?,
            Check::Conversion => conversion(p, &mut tables)?,
            Check::Localization => localization(p, &mut tables)?,
            Check::Hap => hap(p, &mut tables)?,
            Check::Bernstein => bernstein(p)?,
            Check::Heat => heat(p, &mut tables)?,
            Check::Compker => compker(p)?,
            Check::Dyadic => dyadic(p, &mut tables)?,
            Check::ApproxIdentity => approx(p, &mut tables)?,
            Check::LimitKernel => limit(p, &mut tables)?,
            Check::Sweep => sweep(p, &mut tables)?,
            Check::Consistency => consistency(p)?,
        };
        outcomes.push(CheckOutcome {
            name: name.to_string(),
            ..outcome
        });
    }
    let passed = outcomes.iter().all(|c| !c.hard || c.passed);
    let point_seeds: Value = cfg
        .point_sets
        .iter()
        .map(|s| (s.name.clone(), json!(s.generator.seed())))
        .collect::<serde_json::Map<_, _>>()
        .into();
    let report = json!({
        "name": cfg.name,
        "config": cfg,
        "config_hash": hash_json(cfg),
        "seeds": {
            "global": cfg.seed,
            "bernstein": cfg.bernstein.seed,
            "conversion": cfg.conversion.seed,
            "point_sets": point_seeds,
        },
        "tolerances": tolerances(),
        "spectral": spectral_summary(p),
        "checks": outcomes,
        "passed": passed,
    });
    Ok(RunOutput {
        report,
        tables,
        outcomes,
    })
}

pub fn tolerances() -> Value {
    json!({
        "sampling_rel": SAMPLING_TOL_REL,
        "riesz_rel": RIESZ_TOL_REL,
        "bernstein": BERNSTEIN_TOL,
        "conversion": CONVERSION_TOL,
        "curve_slack": CURVE_SLACK,
        "trace_rel": TRACE_TOL,
        "consistency_slack": CONSISTENCY_SLACK,
        "limit_slack": LIMIT_SLACK,
        "approx_identity_min_order": APPROX_MIN_ORDER,
    })
}

pub fn spectral_summary(p: &Prepared) -> Value {
    json!({
        "n": p.spec.n(),
        "omega": p.spec.omega(),
        "band_dim": p.spec.band_dim(),
        "margin": p.spec.margin(),
        "lambda_max": p.spec.lambda_max(),
        "warnings": p.spec.warnings(),
    })
}

fn check_name(c: Check) -> &'static str {
    match c {
        Check::Oscillation => "oscillation",
        Check::Frame => "frame",
        Check::Density => "density",
        Check::Trace => "trace",
        Check::Conversion => "conversion",
        Check::Localization => "localization",
        Check::Hap => "hap",
        Check::Bernstein => "bernstein",
        Check::Heat => "heat",
        Check::Compker => "compker",
        Check::Dyadic => "dyadic",
        Check::ApproxIdentity => "approx-identity",
        Check::LimitKernel => "limit-kernel",
        Check::Sweep => "sweep",
        Check::Consistency => "consistency",
    }
}

/// Turns a core check failure into a failed outcome; other errors abort.
fn failed_or<T>(r: Result<T, Error>) -> Result<Result<T, String>, CliError> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e) if e.is_check_failure() => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn curve_table(file: String, curve: &Curve) -> Table {
    let mut t = Table::new(file, &["r", "value"]);
    for (r, v) in curve.radii.iter().zip(&curve.values) {
        t.push(vec![(*r).into(), (*v).into()]);
    }
    t
}

fn largest_radius(cfg: &ExperimentConfig) -> f64 {
    *cfg.density_radii.last().expect("validated")
}

fn oscillation(p: &Prepared) -> Result<CheckOutcome, CliError> {
    let report = p.symbol.oscillation_report(p.config.annuli)?;
    let details = serde_json::to_value(&report).expect("serializable");
    Ok(match p.config.symbol {
        SymbolRecipe::VariableBandwidth { .. } => CheckOutcome::soft("", details),
        _ => CheckOutcome::hard(
            "",
            report.verdict != OscillationVerdict::NotSlowlyOscillating,
            details,
        ),
    })
}

fn frame(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    let mut t = Table::new(
        "frame.csv",
        &["set", "points", "band_dim", "a", "b_upper", "riesz_min", "gram_lambda_min", "sampling", "interpolation"],
    );
    let mut sets = serde_json::Map::new();
    for (name, s) in p.point_sets()? {
        let f = frame_bounds(&s, &p.spec)?;
        let g = riesz_lower_bound(&s, &p.kernel)?;
        t.push(vec![
            name.as_str().into(),
            s.len().into(),
            f.band_dim.into(),
            f.a.into(),
            f.b_upper.into(),
            f.riesz_min.into(),
            g.lambda_min.into(),
            label(&f.sampling).as_str().into(),
            label(&f.interpolation).as_str().into(),
        ]);
        sets.insert(name, json!({ "frame": f, "gram": g }));
    }
    tables.push(t);
    Ok(CheckOutcome::soft("", Value::Object(sets)))
}

/// The serde name of a unit enum variant.
fn label<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v).expect("serializable") {
        Value::String(s) => s,
        other => other.to_string(),
    }
}

fn density(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    let cfg = &p.config;
    let mut out = serde_json::Map::new();
    for (name, s) in p.point_sets()? {
        let mut per_weight = serde_json::Map::new();
        for &kind in &cfg.weights {
            let w = p.weight(kind)?;
            let curve = beurling_density(&s, &w, &cfg.density_radii)?;
            let mut t = Table::new(format!("density_{}_{}.csv", name, weight_label(kind)), &["r", "inf", "sup"]);
            for i in 0..curve.radii.len() {
                t.push(vec![curve.radii[i].into(), curve.inf[i].into(), curve.sup[i].into()]);
            }
            tables.push(t);
            per_weight.insert(
                weight_label(kind).to_string(),
                json!({ "lower": curve.lower(), "upper": curve.upper(), "curve": curve }),
            );
        }
        out.insert(name, Value::Object(per_weight));
    }
    Ok(CheckOutcome::soft("", Value::Object(out)))
}

/// `|B_1| Ω^{d/2} / (2π)^d`: the ν-averaged trace of a constant-coefficient
/// kernel.
pub fn trace_target(dim: usize, omega: f64) -> f64 {
    let unit_ball = if dim == 1 { 2.0 } else { PI };
    unit_ball * omega.powf(dim as f64 / 2.0) / (2.0 * PI).powi(dim as i32)
}

fn trace(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    let cfg = &p.config;
    let target = trace_target(p.grid.dim(), p.spec.omega());
    let has_limit = cfg.symbol.limit_matrix(p.grid.dim()).is_some();
    let mut out = serde_json::Map::new();
    let mut passed = true;
    for &kind in &cfg.weights {
        let w = p.weight(kind)?;
        let curve = averaged_trace(&p.diagonal, &w, &cfg.density_radii)?;
        let mut t = Table::new(format!("trace_{}.csv", weight_label(kind)), &["r", "inf", "sup"]);
        for i in 0..curve.radii.len() {
            t.push(vec![curve.radii[i].into(), curve.inf[i].into(), curve.sup[i].into()]);
        }
        tables.push(t);
        let mut entry = json!({ "lower": curve.lower(), "upper": curve.upper(), "curve": curve });
        if kind == WeightKind::Nu {
            let err = ((curve.lower() - target).abs()).max((curve.upper() - target).abs()) / target;
            entry["target"] = json!(target);
            entry["relative_error"] = json!(err);
            if has_limit {
                passed &= err <= TRACE_TOL;
            }
        }
        out.insert(weight_label(kind).to_string(), entry);
    }
    let details = Value::Object(out);
    Ok(if has_limit && cfg.weights.contains(&WeightKind::Nu) {
        CheckOutcome::hard("", passed, details)
    } else {
        CheckOutcome::soft("", details)
    })
}

fn conversion(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    let cfg = &p.config;
    let mut sets = p.point_sets()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.conversion.seed.unwrap_or(cfg.seed));
    let [lo, hi] = cfg.conversion.rate_range;
    for i in 0..cfg.conversion.random_sets {
        let rate = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let seed: u64 = rng.gen();
        let gen = PointGenerator::Poisson { rate, seed };
        sets.push((format!("random{i}"), generate_points(&gen, &p.grid, None)?));
    }
    let mut t = Table::new(
        "conversion.csv",
        &["set", "weight", "r", "d0_lower", "d_mu_lower", "trace_lower", "trace_upper", "abstract", "measure", "tie"],
    );
    // D_0^- ≥ 1 ⇒ D_μ^- ≥ tr_μ^- holds at every radius. The converse needs
    // the averaged trace to be asymptotically constant, so a converse
    // disagreement only counts where tr_μ^+/tr_μ^- - 1 ≤ TRACE_TOL.
    let mut disagreements = Vec::new();
    let mut outside_hypothesis = Vec::new();
    let mut ties = 0usize;
    let mut comparisons = 0usize;
    for &kind in &cfg.weights {
        let w = p.weight(kind)?;
        for (name, s) in &sets {
            let report = density_conversion_rows(s, &w, &p.diagonal, &cfg.density_radii)?;
            for row in &report.rows {
                comparisons += 1;
                ties += row.tie as usize;
                if row.disagrees() {
                    let entry = json!({
                        "set": name,
                        "weight": weight_label(kind),
                        "radius": row.radius,
                        "d0_lower": row.d0_lower,
                        "d_mu_over_trace": row.d_mu_lower / row.trace_lower,
                        "trace_spread": row.trace_spread(),
                    });
                    if row.violates_forward_implication() || row.trace_spread() <= TRACE_TOL {
                        disagreements.push(entry);
                    } else {
                        outside_hypothesis.push(entry);
                    }
                }
                t.push(vec![
                    name.as_str().into(),
                    weight_label(kind).into(),
                    row.radius.into(),
                    row.d0_lower.into(),
                    row.d_mu_lower.into(),
                    row.trace_lower.into(),
                    row.trace_upper.into(),
                    (row.abstract_predicate as usize).into(),
                    (row.measure_predicate as usize).into(),
                    (row.tie as usize).into(),
                ]);
            }
        }
    }
    tables.push(t);
    Ok(CheckOutcome::hard(
        "",
        disagreements.is_empty(),
        json!({
            "sets": sets.len(),
            "comparisons": comparisons,
            "ties": ties,
            "disagreements": disagreements,
            "outside_hypothesis": outside_hypothesis,
            "trace_spread_tolerance": TRACE_TOL,
        }),
    ))
}

fn localization(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    let cfg = &p.config;
    let curve = weak_localization_curve(&p.kernel, &cfg.localization_radii)?;
    let monotone = curve.is_nonincreasing(CURVE_SLACK);
    let mut passed = monotone;
    let mut details = json!({ "curve": curve, "nonincreasing": monotone });
    if let Some(tr) = &cfg.localization.tail_ratio {
        let small = curve.value_at(tr.small).expect("validated");
        let large = curve.value_at(tr.large).expect("validated");
        let ratio = large / small;
        let ok = ratio <= tr.max;
        passed &= ok;
        details["tail_ratio"] = json!({
            "small": tr.small, "large": tr.large, "ratio": ratio, "max": tr.max, "holds": ok,
        });
    }
    tables.push(curve_table("localization.csv".into(), &curve));
    Ok(CheckOutcome::hard("", passed, details))
}

fn hap(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    let mut out = serde_json::Map::new();
    let mut passed = true;
    for (name, s) in p.point_sets()? {
        let curve = hap_check(&p.kernel, &s, &p.config.localization_radii)?;
        let monotone = curve.is_nonincreasing(CURVE_SLACK);
        passed &= monotone;
        tables.push(curve_table(format!("hap_{name}.csv"), &curve));
        out.insert(name, json!({ "curve": curve, "nonincreasing": monotone }));
    }
    Ok(CheckOutcome::hard("", passed, Value::Object(out)))
}

fn bernstein(p: &Prepared) -> Result<CheckOutcome, CliError> {
    let b = &p.config.bernstein;
    let seed = b.seed.unwrap_or(p.config.seed);
    Ok(match failed_or(bernstein_check(&p.spec, b.trials, b.k_max, seed))? {
        Ok(r) => CheckOutcome::hard("", true, serde_json::to_value(r).expect("serializable")),
        Err(msg) => CheckOutcome::hard("", false, json!({ "seed": seed, "error": msg })),
    })
}

fn heat(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    let cfg = &p.config;
    let min_kdiag = p.diagonal.iter().copied().fold(f64::INFINITY, f64::min);
    let mut passed = min_kdiag > 0.0;
    let mut t = Table::new("heat.csv", &["t", "lower_constant", "upper_constant"]);
    let mut rows = Vec::new();
    for &time in &cfg.heat.times {
        let b = heat_diagonal_bounds(&p.spec, time)?;
        if let Some([lo, hi]) = cfg.heat.constant_bounds {
            passed &= b.lower_constant >= lo && b.upper_constant <= hi;
        }
        t.push(vec![b.t.into(), b.lower_constant.into(), b.upper_constant.into()]);
        rows.push(b);
    }
    tables.push(t);
    Ok(CheckOutcome::hard(
        "",
        passed,
        json!({
            "min_kernel_diagonal": min_kdiag,
            "constants": rows,
            "constant_bounds": cfg.heat.constant_bounds,
        }),
    ))
}

fn compker(p: &Prepared) -> Result<CheckOutcome, CliError> {
    let r = compker_check(&p.spec)?;
    Ok(CheckOutcome::hard("", r.holds, serde_json::to_value(r).expect("serializable")))
}

fn dyadic(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    Ok(match failed_or(dyadic_lower_bound_check(&p.spec))? {
        Ok(r) => {
            let mut t = Table::new("dyadic.csv", &["r", "t", "min_slack", "implied_lower_bound"]);
            for l in &r.levels {
                t.push(vec![(l.r as usize).into(), l.t.into(), l.min_slack.into(), l.implied_lower_bound.into()]);
            }
            tables.push(t);
            let ok = r.min_kernel_diagonal > 0.0;
            CheckOutcome::hard("", ok, serde_json::to_value(r).expect("serializable"))
        }
        Err(msg) => CheckOutcome::hard("", false, json!({ "error": msg })),
    })
}

fn approx(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    let r = approx_identity_check(&p.spec, &p.kernel, &p.config.approx_identity_widths)?;
    let mut t = Table::new("approx_identity.csv", &["nodes", "width", "error"]);
    for e in &r.entries {
        t.push(vec![e.nodes.into(), e.width.into(), e.error.into()]);
    }
    tables.push(t);
    let scale = p.diagonal.iter().copied().fold(0.0, f64::max).sqrt();
    let delta_exact = r
        .entries
        .iter()
        .filter(|e| e.nodes == 1)
        .all(|e| e.error <= 1e-10 * scale);
    let increasing = r.entries.windows(2).all(|w| w[1].error > w[0].error);
    let orders: Vec<f64> = r
        .entries
        .windows(2)
        .filter(|w| w[0].nodes > 1)
        .map(|w| (w[1].error / w[0].error).ln() / (w[1].width / w[0].width).ln())
        .collect();
    let orders_ok = orders.iter().all(|&o| o >= APPROX_MIN_ORDER);
    Ok(CheckOutcome::hard(
        "",
        delta_exact && increasing && orders_ok,
        json!({
            "report": r,
            "orders_excluding_delta": orders,
            "delta_exact": delta_exact,
            "increasing": increasing,
        }),
    ))
}

fn limit(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    let cfg = &p.config;
    let lc = cfg.limit.as_ref().expect("validated");
    let dim = p.grid.dim();
    let b = cfg.symbol.limit_matrix(dim).expect("validated")?;
    let ellipsoid = Ellipsoid::new(dim, b, p.spec.omega())?;
    let center = match &cfg.symbol {
        SymbolRecipe::AsymptoticallyConstant { center: Some(c), .. } => p.grid.nearest_node(c),
        _ => p.grid.center_node(),
    };
    let curve = limit_kernel_convergence(&p.kernel, &ellipsoid, center, lc.support_radius, &lc.distances)?;
    let mut t = Table::new(
        "limit_kernel.csv",
        &["distance", "l2_distance", "diagonal_gap_periodic", "diagonal_gap_continuum"],
    );
    for e in &curve.entries {
        t.push(vec![
            e.distance.into(),
            e.l2_distance.into(),
            e.diagonal_gap_periodic.into(),
            e.diagonal_gap_continuum.into(),
        ]);
    }
    tables.push(t);
    let ratio = match (curve.entries.first(), curve.entries.last()) {
        (Some(a), Some(b)) => b.l2_distance / a.l2_distance,
        _ => f64::NAN,
    };
    Ok(CheckOutcome::hard(
        "",
        curve.is_nonincreasing(LIMIT_SLACK),
        json!({
            "curve": curve,
            "strictly_decreasing": curve.is_strictly_decreasing(),
            "final_over_initial": ratio,
        }),
    ))
}

/// One row of the ν-density sweep.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SweepRow {
    pub relative: f64,
    pub density: f64,
    pub points: usize,
    pub a: f64,
    pub b_upper: f64,
    pub lambda_min: f64,
}

pub fn sweep_rows(p: &Prepared, relative: &[f64]) -> Result<Vec<SweepRow>, CliError> {
    let critical = p.spec.omega().sqrt() / PI;
    relative
        .iter()
        .map(|&rel| {
            let density = rel * critical;
            let s = generate_points(&PointGenerator::NuTargeted { density }, &p.grid, Some(&p.symbol))?;
            let f = frame_bounds(&s, &p.spec)?;
            Ok(SweepRow {
                relative: rel,
                density,
                points: s.len(),
                a: f.a,
                b_upper: f.b_upper,
                lambda_min: f.riesz_min,
            })
        })
        .collect()
}

/// `(A(last) ≥ c·A(first), λ_min(first) ≥ c·λ_min(last))`.
pub fn sweep_contrasts(rows: &[SweepRow], min_contrast: f64) -> (bool, bool) {
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    (
        last.a >= min_contrast * first.a,
        first.lambda_min >= min_contrast * last.lambda_min,
    )
}

fn sweep(p: &Prepared, tables: &mut Vec<Table>) -> Result<CheckOutcome, CliError> {
    let sc = p.config.sweep.as_ref().expect("validated");
    let rows = sweep_rows(p, &sc.relative_densities)?;
    let mut t = Table::new("sweep.csv", &["relative", "density", "points", "a", "b_upper", "lambda_min"]);
    for r in &rows {
        t.push(vec![r.relative.into(), r.density.into(), r.points.into(), r.a.into(), r.b_upper.into(), r.lambda_min.into()]);
    }
    tables.push(t);
    let (sampling, interpolation) = sweep_contrasts(&rows, sc.min_contrast);
    Ok(CheckOutcome::hard(
        "",
        sampling && interpolation,
        json!({
            "rows": rows,
            "critical_density": p.spec.omega().sqrt() / PI,
            "band_dim": p.spec.band_dim(),
            "min_contrast": sc.min_contrast,
            "sampling_contrast": sampling,
            "interpolation_contrast": interpolation,
        }),
    ))
}

fn consistency(p: &Prepared) -> Result<CheckOutcome, CliError> {
    let r = largest_radius(&p.config);
    let kw = p.weight(WeightKind::KernelDiagonal)?;
    let mut out = serde_json::Map::new();
    let mut passed = true;
    for (name, s) in p.point_sets()? {
        let f = frame_bounds(&s, &p.spec)?;
        let d0 = beurling_density(&s, &kw, &[r])?;
        let c = density_consistency(&f, d0.lower(), d0.upper(), CONSISTENCY_SLACK);
        passed &= c.sampling_holds && c.interpolation_holds;
        out.insert(
            name,
            json!({
                "radius": r,
                "d0_lower": d0.lower(),
                "d0_upper": d0.upper(),
                "a": f.a,
                "b_upper": f.b_upper,
                "riesz_min": f.riesz_min,
                "consistency": c,
            }),
        );
    }
    Ok(CheckOutcome::hard("", passed, Value::Object(out)))
}
