//! Subcommand implementations. Each returns a serializable report; printing
//! and exit codes live in `main`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use arbrepair::constraints::{
    build_constraints, detect_violations, ConstraintKind, ConstraintSystem,
};
use arbrepair::normalize::{normalize_surface, NormalizedSurface};
use arbrepair::repair::{
    effective_mask, extract_executable_arbitrage, repair, ArbitragePortfolio, Objective,
    RepairConfig,
};
use arbrepair::stress::{run_stress, BandPolicy, NoiseSpec, StressConfig, StressReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::snapshot::{read_snapshot, write_repaired, RepairedRow, Snapshot};

fn millis(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

struct Loaded {
    snapshot: Snapshot,
    surface: NormalizedSurface,
}

fn load(path: &Path) -> Result<Loaded> {
    let snapshot = read_snapshot(path).with_context(|| format!("reading {}", path.display()))?;
    let surface = normalize_surface(&snapshot.quotes(), &snapshot.curves)
        .with_context(|| format!("normalizing {} (quote i is on line i + 2)", path.display()))?;
    Ok(Loaded { snapshot, surface })
}

fn require_bands(snapshot: &Snapshot, objective: Objective, allow_floor: bool) -> Result<()> {
    if objective == Objective::L1ba && !snapshot.has_bid_ask() && !allow_floor {
        bail!(
            "l1ba needs bid and ask on every row; pass --allow-spread-floor to use the minimal spread instead"
        );
    }
    Ok(())
}

fn repair_config(objective: Objective) -> RepairConfig {
    RepairConfig {
        objective,
        ..RepairConfig::default()
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ViolationEntry {
    pub row: usize,
    pub kind: ConstraintKind,
    pub residual: f64,
    /// Snapshot lines of the quotes in the violated constraint.
    pub lines: Vec<u64>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct DetectReport {
    pub snapshot: String,
    pub tolerance: f64,
    pub quotes: usize,
    pub constraint_count: usize,
    pub total: usize,
    pub per_category: BTreeMap<ConstraintKind, usize>,
    pub calendar_fraction: f64,
    pub worst_residual: Option<f64>,
    pub violations: Vec<ViolationEntry>,
}

fn row_lines(loaded: &Loaded, system: &ConstraintSystem, row: usize) -> Vec<u64> {
    system.rows()[row]
        .nodes
        .iter()
        .filter_map(|&id| loaded.surface.node(id).source)
        .map(|q| loaded.snapshot.rows[q].line)
        .collect()
}

pub fn detect(path: &Path, tol: f64) -> Result<DetectReport> {
    let loaded = load(path)?;
    let system = build_constraints(&loaded.surface);
    let report = detect_violations(&system, &loaded.surface.prices(), tol)?;
    let violations = report
        .violations
        .iter()
        .map(|v| ViolationEntry {
            row: v.index,
            kind: v.kind,
            residual: v.residual,
            lines: row_lines(&loaded, &system, v.index),
        })
        .collect();
    Ok(DetectReport {
        snapshot: path.display().to_string(),
        tolerance: tol,
        quotes: loaded.snapshot.rows.len(),
        constraint_count: system.len(),
        total: report.total,
        per_category: report.per_category,
        calendar_fraction: report.calendar_fraction,
        worst_residual: report.worst_residual,
        violations,
    })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Timing {
    pub load_ms: f64,
    pub build_ms: f64,
    pub solve_ms: f64,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RepairSummary {
    pub snapshot: String,
    pub output: String,
    pub objective: Objective,
    pub objective_value: f64,
    pub n_perturbed: usize,
    pub n_effective: usize,
    pub delta0: Option<f64>,
    pub constraint_count: usize,
    pub violations_before: usize,
    pub min_residual: Option<f64>,
    pub iterations: usize,
    pub timing: Timing,
    /// Rows violated even at executable prices; leg `quote` is the 0-based data row.
    pub executable_arbitrage: Vec<ArbitragePortfolio>,
}

pub struct RepairArgs<'a> {
    pub snapshot: &'a Path,
    pub out: &'a Path,
    pub objective: Objective,
    pub allow_spread_floor: bool,
}

pub fn repair_snapshot(args: &RepairArgs) -> Result<RepairSummary> {
    let t = Instant::now();
    let loaded = load(args.snapshot)?;
    require_bands(&loaded.snapshot, args.objective, args.allow_spread_floor)?;
    let load_ms = millis(t);

    let t = Instant::now();
    let system = build_constraints(&loaded.surface);
    let build_ms = millis(t);

    let t = Instant::now();
    let config = repair_config(args.objective);
    let result = repair(&loaded.surface, &system, &config).context("repair failed")?;
    let solve_ms = millis(t);

    let surface = &loaded.surface;
    let prices = surface.prices();
    let violations_before = detect_violations(&system, &prices, config.feas_tol)?.total;
    let mask = effective_mask(&result.epsilon, surface, config.zero_tol)?;
    let mut rows = vec![
        RepairedRow {
            mid_repaired: 0.0,
            perturbation: 0.0,
            effective: false,
        };
        loaded.snapshot.rows.len()
    ];
    for v in 0..surface.n_vars() {
        let scale = surface.slice(surface.var_node(v).expiry).scale();
        rows[surface.source_of(v)] = RepairedRow {
            mid_repaired: result.repaired[v] * scale,
            perturbation: result.epsilon[v],
            effective: mask[v],
        };
    }
    let file =
        File::create(args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_repaired(BufWriter::new(file), &loaded.snapshot, &rows)
        .with_context(|| format!("writing {}", args.out.display()))?;

    Ok(RepairSummary {
        snapshot: args.snapshot.display().to_string(),
        output: args.out.display().to_string(),
        objective: result.objective,
        objective_value: result.objective_value,
        n_perturbed: result.n_perturbed,
        n_effective: result.n_effective,
        delta0: result.delta0_used,
        constraint_count: system.len(),
        violations_before,
        min_residual: result.min_residual,
        iterations: result.iterations,
        timing: Timing {
            load_ms,
            build_ms,
            solve_ms,
        },
        executable_arbitrage: extract_executable_arbitrage(&system, surface, config.feas_tol),
    })
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StressOutput {
    pub snapshot: String,
    pub objective: Objective,
    pub bands: BandPolicy,
    #[serde(flatten)]
    pub report: StressReport,
}

pub struct StressArgs<'a> {
    pub snapshot: &'a Path,
    pub spec: NoiseSpec,
    pub objective: Objective,
    pub bands: BandPolicy,
    pub allow_spread_floor: bool,
}

pub fn stress(args: &StressArgs) -> Result<StressOutput> {
    args.spec.validate()?;
    let loaded = load(args.snapshot)?;
    require_bands(&loaded.snapshot, args.objective, args.allow_spread_floor)?;
    let config = StressConfig {
        repair: repair_config(args.objective),
        bands: args.bands,
        ..StressConfig::default()
    };
    let report = run_stress(&loaded.surface, &args.spec, &config)?;
    Ok(StressOutput {
        snapshot: args.snapshot.display().to_string(),
        objective: args.objective,
        bands: args.bands,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesRow {
    pub snapshot: String,
    pub n_perturbed: Option<usize>,
    pub n_effective: Option<usize>,
    pub portfolios: Option<usize>,
    pub error: Option<String>,
}

fn series_row(
    path: &Path,
    objective: Objective,
    allow_floor: bool,
) -> Result<(usize, usize, usize)> {
    let loaded = load(path)?;
    require_bands(&loaded.snapshot, objective, allow_floor)?;
    let system = build_constraints(&loaded.surface);
    let config = repair_config(objective);
    let result = repair(&loaded.surface, &system, &config)?;
    let portfolios = extract_executable_arbitrage(&system, &loaded.surface, config.feas_tol).len();
    Ok((result.n_perturbed, result.n_effective, portfolios))
}

pub fn snapshot_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let entry = entry?;
        if entry.file_type()?.is_file() {
            files.push(entry.path());
        }
    }
    if files.is_empty() {
        bail!("no snapshot files in {}", dir.display());
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// One row per file in name order; failures become error rows.
pub fn timeseries(
    dir: &Path,
    objective: Objective,
    allow_spread_floor: bool,
    jobs: Option<usize>,
) -> Result<Vec<SeriesRow>> {
    let files = snapshot_files(dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()?;
    Ok(pool.install(|| {
        files
            .par_iter()
            .map(|path| {
                let snapshot = path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                match series_row(path, objective, allow_spread_floor) {
                    Ok((p, e, k)) => SeriesRow {
                        snapshot,
                        n_perturbed: Some(p),
                        n_effective: Some(e),
                        portfolios: Some(k),
                        error: None,
                    },
                    Err(err) => SeriesRow {
                        snapshot,
                        n_perturbed: None,
                        n_effective: None,
                        portfolios: None,
                        error: Some(format!("{err:#}")),
                    },
                }
            })
            .collect()
    }))
}
