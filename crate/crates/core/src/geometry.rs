//! Measures, windowed Beurling densities, averaged traces and point sets.
//!
//! Every window is a torus ball centered at a grid node. In one dimension
//! the ball is the half-open interval `[x - r, x + r)`, so that its
//! measure is exactly `2r` and a lattice `αℤ` has identical counts in
//! every window whose radius is a multiple of `α`. In two dimensions the
//! ball is `|y - x| < r`. Node membership is decided on integer step
//! offsets, so the same node set is used for every center.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridShift, GridSpec};
use crate::symbol::SymbolField;

/// Relative slack used when comparing a node offset against a radius.
const RADIUS_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    Lebesgue,
    Nu,
    KernelDiagonal,
    Custom,
}

/// Node-wise density `w` of a measure `dμ = w dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField {
    grid: GridSpec,
    weights: Vec<f64>,
    kind: WeightKind,
}

/// What a weight is built from.
pub enum WeightSource<'a> {
    Lebesgue(&'a GridSpec),
    /// `det(a)^{-1/2}`.
    Nu(&'a SymbolField),
    /// A kernel diagonal `k(x, x)`.
    KernelDiagonal(&'a GridSpec, &'a [f64]),
    Custom(&'a GridSpec, Vec<f64>),
}

pub fn make_weight(source: WeightSource<'_>) -> Result<WeightField> {
    match source {
        WeightSource::Lebesgue(g) => WeightField::new(g.clone(), vec![1.0; g.node_count()], WeightKind::Lebesgue),
        WeightSource::Nu(a) => {
            let dim = a.grid().dim();
            let w = a.values().iter().map(|c| 1.0 / c.det(dim).sqrt()).collect();
            WeightField::new(a.grid().clone(), w, WeightKind::Nu)
        }
        WeightSource::KernelDiagonal(g, d) => {
            WeightField::new(g.clone(), d.to_vec(), WeightKind::KernelDiagonal)
        }
        WeightSource::Custom(g, w) => WeightField::new(g.clone(), w, WeightKind::Custom),
    }
}

impl WeightField {
    pub fn new(grid: GridSpec, weights: Vec<f64>, kind: WeightKind) -> Result<Self> {
        if weights.len() != grid.node_count() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} nodes",
                weights.len(),
                grid.node_count()
            )));
        }
        if let Some((node, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::NonPositiveWeight { node, value });
        }
        Ok(WeightField { grid, weights, kind })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// `μ(B_r(x))` for the window centered at node `center`.
    pub fn ball_measure(&self, center: usize, r: f64) -> Result<f64> {
        let offsets = ball_offsets(&self.grid, r)?;
        Ok(window_sum(&self.grid, &self.weights, center, &offsets) * self.grid.cell_volume())
    }
}

/// Step offsets of the nodes inside a ball of radius `r` around any node.
pub fn ball_offsets(grid: &GridSpec, r: f64) -> Result<Vec<GridShift>> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
    }
    let mut out = Vec::new();
    if grid.dim() == 1 {
        let h = grid.spacing(0);
        let n = grid.points(0) as isize;
        // minimum-image offsets in (-N/2, N/2]
        for d in (-(n - 1) / 2)..=(n / 2) {
            let x = d as f64 * h;
            if x >= -r - RADIUS_SLACK * h && x < r - RADIUS_SLACK * h {
                out.push(GridShift::one_d(d));
            }
        }
        return Ok(out);
    }
    let (h0, h1) = (grid.spacing(0), grid.spacing(1));
    let (n0, n1) = (grid.points(0) as isize, grid.points(1) as isize);
    let r2 = r * r * (1.0 - 2.0 * RADIUS_SLACK);
    for d1 in (-(n1 - 1) / 2)..=(n1 / 2) {
        for d0 in (-(n0 - 1) / 2)..=(n0 / 2) {
            let (x, y) = (d0 as f64 * h0, d1 as f64 * h1);
            if x * x + y * y < r2 {
                out.push(GridShift([d0, d1]));
            }
        }
    }
    Ok(out)
}

fn window_sum(grid: &GridSpec, field: &[f64], center: usize, offsets: &[GridShift]) -> f64 {
    offsets.iter().map(|&s| field[grid.shifted(center, s)]).sum()
}

/// A finite set of grid nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    grid: GridSpec,
    nodes: Vec<usize>,
    generator: String,
    seed: Option<u64>,
}

impl PointSet {
    /// Sorts `nodes`; duplicates and out-of-range indices are rejected.
    pub fn new(grid: GridSpec, mut nodes: Vec<usize>, generator: String, seed: Option<u64>) -> Result<Self> {
        let n = grid.node_count();
        if let Some(bad) = nodes.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidPoints(format!("node {bad} outside a grid of {n}")));
        }
        nodes.sort_unstable();
        if let Some(w) = nodes.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPoints(format!("duplicate node {}", w[0])));
        }
        Ok(PointSet {
            grid,
            nodes,
            generator,
            seed,
        })
    }

    pub fn empty(grid: GridSpec) -> Self {
        PointSet {
            grid,
            nodes: Vec::new(),
            generator: "empty".into(),
            seed: None,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn generator(&self) -> &str {
        &self.generator
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn coords(&self) -> Vec<[f64; 2]> {
        self.nodes.iter().map(|&i| self.grid.coords(i)).collect()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    /// Disjoint union; fails on a shared node.
    pub fn union(&self, other: &PointSet) -> Result<PointSet> {
        if self.grid != other.grid {
            return Err(Error::InvalidPoints("point sets live on different grids".into()));
        }
        let mut nodes = self.nodes.clone();
        nodes.extend_from_slice(&other.nodes);
        PointSet::new(
            self.grid.clone(),
            nodes,
            format!("union({}, {})", self.generator, other.generator),
            self.seed.or(other.seed),
        )
    }

    pub fn with_node(&self, node: usize) -> Result<PointSet> {
        let mut nodes = self.nodes.clone();
        nodes.push(node);
        PointSet::new(self.grid.clone(), nodes, self.generator.clone(), self.seed)
    }

    /// The set without its `index`-th point (in sorted order).
    pub fn without(&self, index: usize) -> PointSet {
        let mut out = self.clone();
        out.nodes.remove(index);
        out
    }

    fn occupancy(&self) -> Vec<f64> {
        let mut occ = vec![0.0; self.grid.node_count()];
        for &i in &self.nodes {
            occ[i] = 1.0;
        }
        occ
    }
}

/// Point-set generators. Generated points are snapped to grid nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PointGenerator {
    /// The lattice `αℤ^d ∩ [0, L)^d`.
    Uniform { spacing: f64 },
    /// `αk + U(-j, j)` per axis.
    Jittered { spacing: f64, jitter: f64, seed: u64 },
    /// Each node is kept independently with probability `rate·h^d`.
    Poisson { rate: f64, seed: u64 },
    /// One-dimensional points with `∫_0^{s_k} a^{-1/2} = k/ρ`.
    #[serde(rename = "nu-targeted-1d")]
    NuTargeted { density: f64 },
}

impl PointGenerator {
    pub fn seed(&self) -> Option<u64> {
        match self {
            PointGenerator::Jittered { seed, .. } | PointGenerator::Poisson { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    fn label(&self) -> String {
        match self {
            PointGenerator::Uniform { spacing } => format!("uniform(α={spacing})"),
            PointGenerator::Jittered { spacing, jitter, .. } => {
                format!("jittered(α={spacing}, j={jitter})")
            }
            PointGenerator::Poisson { rate, .. } => format!("poisson(rate={rate})"),
            PointGenerator::NuTargeted { density } => format!("nu-targeted-1d(ρ={density})"),
        }
    }
}

pub fn generate_points(
    gen: &PointGenerator,
    grid: &GridSpec,
    symbol: Option<&SymbolField>,
) -> Result<PointSet> {
    let nodes = match *gen {
        PointGenerator::Uniform { spacing } => lattice(grid, spacing, 0.0, 0)?,
        PointGenerator::Jittered { spacing, jitter, seed } => {
            if !(jitter >= 0.0 && jitter.is_finite()) {
                return Err(Error::InvalidParameter(format!("jitter {jitter}")));
            }
            lattice(grid, spacing, jitter, seed)?
        }
        PointGenerator::Poisson { rate, seed } => {
            let p = rate * grid.cell_volume();
            if !(rate >= 0.0 && p <= 1.0) {
                return Err(Error::PointGeneration(format!(
                    "rate {rate} gives per-node probability {p} outside [0, 1]"
                )));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..grid.node_count()).filter(|_| rng.gen::<f64>() < p).collect()
        }
        PointGenerator::NuTargeted { density } => {
            let a = symbol.ok_or_else(|| {
                Error::PointGeneration("nu-targeted points need a symbol".into())
            })?;
            if a.grid() != grid {
                return Err(Error::PointGeneration("symbol lives on a different grid".into()));
            }
            nu_targeted(a, density)?
        }
    };
    PointSet::new(grid.clone(), nodes, gen.label(), gen.seed())
}

/// Places `target` (in coordinates) on the nearest free node, trying one
/// node to either side on collision.
fn snap(grid: &GridSpec, taken: &mut [bool], target: [f64; 2]) -> Result<usize> {
    let node = grid.nearest_node(&target[..grid.dim()]);
    if !taken[node] {
        taken[node] = true;
        return Ok(node);
    }
    let frac = target[0] / grid.spacing(0) - (target[0] / grid.spacing(0)).round();
    let first = if frac >= 0.0 { 1 } else { -1 };
    for step in [first, -first] {
        let alt = grid.shifted(node, GridShift([step, 0]));
        if !taken[alt] {
            taken[alt] = true;
            return Ok(alt);
        }
    }
    Err(Error::PointGeneration(format!(
        "cannot place a point near {:?} without duplicates",
        &target[..grid.dim()]
    )))
}

fn lattice(grid: &GridSpec, spacing: f64, jitter: f64, seed: u64) -> Result<Vec<usize>> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidParameter(format!("spacing {spacing}")));
    }
    let dim = grid.dim();
    let counts: Vec<usize> = (0..dim)
        .map(|axis| (grid.length(axis) / spacing - 1e-9).ceil() as usize)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut taken = vec![false; grid.node_count()];
    let mut nodes = Vec::new();
    let outer = if dim == 2 { counts[1] } else { 1 };
    for k1 in 0..outer {
        for k0 in 0..counts[0] {
            let mut x = [k0 as f64 * spacing, k1 as f64 * spacing];
            for xa in x.iter_mut().take(dim) {
                if jitter > 0.0 {
                    *xa += rng.gen_range(-jitter..=jitter);
                }
            }
            nodes.push(snap(grid, &mut taken, x)?);
        }
    }
    Ok(nodes)
}

/// Inverse-CDF placement for the ν-measure `a^{-1/2} dx`, with the density
/// linearly interpolated between nodes.
fn nu_targeted(a: &SymbolField, density: f64) -> Result<Vec<usize>> {
    let grid = a.grid();
    if grid.dim() != 1 {
        return Err(Error::RecipeDimension {
            recipe: "nu-targeted-1d",
            dim: grid.dim(),
        });
    }
    if !(density.is_finite() && density > 0.0) {
        return Err(Error::InvalidParameter(format!("density {density}")));
    }
    let n = grid.points(0);
    let h = grid.spacing(0);
    let l = grid.length(0);
    let q: Vec<f64> = a.values().iter().map(|c| 1.0 / c.xx.sqrt()).collect();
    // cumulative ν-mass at node i
    let mut cum = vec![0.0; n + 1];
    for i in 0..n {
        cum[i + 1] = cum[i] + 0.5 * h * (q[i] + q[(i + 1) % n]);
    }
    let total = cum[n];
    let mass_at = |x: f64| -> f64 {
        let i = ((x / h).floor() as usize).min(n - 1);
        let t = x - i as f64 * h;
        let (q0, q1) = (q[i], q[(i + 1) % n]);
        cum[i] + q0 * t + (q1 - q0) * t * t / (2.0 * h)
    };
    let mut taken = vec![false; n];
    let mut nodes = Vec::new();
    let mut k = 0usize;
    loop {
        let tau = k as f64 / density;
        if tau >= total * (1.0 - 1e-12) {
            break;
        }
        let (mut lo, mut hi) = (0.0f64, l);
        while hi - lo > 1e-10 * l {
            let mid = 0.5 * (lo + hi);
            if mass_at(mid) < tau {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        nodes.push(snap(grid, &mut taken, [0.5 * (lo + hi), 0.0])?);
        k += 1;
    }
    Ok(nodes)
}

/// Per-radius inf/sup over window centers of a windowed ratio.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub radii: Vec<f64>,
    pub inf: Vec<f64>,
    pub sup: Vec<f64>,
}

impl DensityCurve {
    /// Value of the inf-curve at the largest radius.
    pub fn lower(&self) -> f64 {
        self.inf.last().copied().unwrap_or(f64::NAN)
    }

    pub fn upper(&self) -> f64 {
        self.sup.last().copied().unwrap_or(f64::NAN)
    }
}

fn check_radii(grid: &GridSpec, radii: &[f64]) -> Result<()> {
    let cap = grid.min_length() / 4.0;
    if radii.is_empty() {
        return Err(Error::InvalidParameter("no radii given".into()));
    }
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::InvalidParameter(format!("radius must be positive, got {r}")));
        }
        if r > cap * (1.0 + 1e-12) {
            return Err(Error::RadiusCap { radius: r, cap });
        }
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("radii must be strictly increasing".into()));
    }
    Ok(())
}

/// Windowed ratio `∫_B f dx / μ(B)` for each radius and center.
fn windowed_ratio(field: &[f64], field_is_count: bool, w: &WeightField, radii: &[f64]) -> Result<DensityCurve> {
    let grid = w.grid();
    check_radii(grid, radii)?;
    let dv = grid.cell_volume();
    let mut curve = DensityCurve {
        radii: radii.to_vec(),
        inf: Vec::with_capacity(radii.len()),
        sup: Vec::with_capacity(radii.len()),
    };
    for &r in radii {
        let offsets = ball_offsets(grid, r)?;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in 0..grid.node_count() {
            let num = window_sum(grid, field, x, &offsets);
            let num = if field_is_count { num } else { num * dv };
            let v = num / (window_sum(grid, w.weights(), x, &offsets) * dv);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        curve.inf.push(lo);
        curve.sup.push(hi);
    }
    Ok(curve)
}

/// `#(S ∩ B_r(x)) / μ(B_r(x))`, inf and sup over all grid centers.
pub fn beurling_density(points: &PointSet, w: &WeightField, radii: &[f64]) -> Result<DensityCurve> {
    if points.grid() != w.grid() {
        return Err(Error::InvalidPoints("point set and weight live on different grids".into()));
    }
    windowed_ratio(&points.occupancy(), true, w, radii)
}

/// `μ(B_r(x))^{-1} ∫_{B_r(x)} f dz`, inf and sup over all grid centers.
pub fn averaged_trace(field: &[f64], w: &WeightField, radii: &[f64]) -> Result<DensityCurve> {
    if field.len() != w.grid().node_count() {
        return Err(Error::InvalidParameter("field length does not match the grid".into()));
    }
    windowed_ratio(field, false, w, radii)
}

/// `max_x #(S ∩ B_ρ(x))` over grid centers.
pub fn separation_report(points: &PointSet, rho: f64) -> Result<usize> {
    let grid = points.grid();
    let offsets = ball_offsets(grid, rho)?;
    let occ = points.occupancy();
    Ok((0..grid.node_count())
        .map(|x| window_sum(grid, &occ, x, &offsets) as usize)
        .max()
        .unwrap_or(0))
}

/// Relative tolerance below which a density is treated as tied with its
/// threshold.
pub const CONVERSION_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionRow {
    pub radius: f64,
    /// `D_0^-` with respect to `k(x,x) dx`.
    pub d0_lower: f64,
    pub d_mu_lower: f64,
    pub trace_lower: f64,
    pub trace_upper: f64,
    /// `D_0^- ≥ 1`.
    pub abstract_predicate: bool,
    /// `D_μ^- ≥ tr_μ^-`.
    pub measure_predicate: bool,
    pub tie: bool,
}

impl ConversionRow {
    pub fn disagrees(&self) -> bool {
        self.abstract_predicate != self.measure_predicate && !self.tie
    }

    /// `D_0^- ≥ 1` with `D_μ^- < tr_μ^-`. This is impossible at any radius:
    /// `#(S ∩ B) ≥ ∫_B k` for every ball gives `#/μ(B) ≥ ∫_B k/μ(B) ≥ tr_μ^-`.
    pub fn violates_forward_implication(&self) -> bool {
        self.abstract_predicate && !self.measure_predicate && !self.tie
    }

    /// `tr_μ^+ / tr_μ^- - 1`; the converse implication needs this to vanish.
    pub fn trace_spread(&self) -> f64 {
        self.trace_upper / self.trace_lower - 1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConversionReport {
    pub rows: Vec<ConversionRow>,
    pub tolerance: f64,
}

/// Both density criteria `D_0^- ≥ 1` and `D_μ^- ≥ tr_μ^-(k)` radius by
/// radius, without judging them.
pub fn density_conversion_rows(
    points: &PointSet,
    mu: &WeightField,
    kernel_diagonal: &[f64],
    radii: &[f64],
) -> Result<ConversionReport> {
    let k_weight = make_weight(WeightSource::KernelDiagonal(mu.grid(), kernel_diagonal))?;
    let d0 = beurling_density(points, &k_weight, radii)?;
    let dmu = beurling_density(points, mu, radii)?;
    let tr = averaged_trace(kernel_diagonal, mu, radii)?;
    let rows = radii
        .iter()
        .enumerate()
        .map(|(i, &radius)| {
            let (d0_lower, d_mu_lower, trace_lower) = (d0.inf[i], dmu.inf[i], tr.inf[i]);
            let ratio = d_mu_lower / trace_lower;
            ConversionRow {
                radius,
                d0_lower,
                d_mu_lower,
                trace_lower,
                trace_upper: tr.sup[i],
                abstract_predicate: d0_lower >= 1.0,
                measure_predicate: d_mu_lower >= trace_lower,
                tie: (d0_lower - 1.0).abs() <= CONVERSION_TOL || (ratio - 1.0).abs() <= CONVERSION_TOL,
            }
        })
        .collect();
    Ok(ConversionReport {
        rows,
        tolerance: CONVERSION_TOL,
    })
}

/// Compares the two density criteria radius by radius. Fails if they
/// disagree away from a tie.
pub fn density_conversion_check(
    points: &PointSet,
    mu: &WeightField,
    kernel_diagonal: &[f64],
    radii: &[f64],
) -> Result<ConversionReport> {
    let report = density_conversion_rows(points, mu, kernel_diagonal, radii)?;
    if let Some(row) = report.rows.iter().find(|r| r.disagrees()) {
        return Err(Error::PredicateDisagreement {
            radius: row.radius,
            d0: row.d0_lower,
            ratio: row.d_mu_lower / row.trace_lower,
        });
    }
    Ok(report)
}
