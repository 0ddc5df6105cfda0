//! Subcommand implementations. Each returns the artifact paths it wrote so
//! `report` can assemble its index; `comply` additionally reports a verdict
//! exit code. All outputs are deterministic for a fixed config and inputs:
//! snapshot work may fan out across threads, but results are collected and
//! written in snapshot-id order and no artifact embeds a timestamp.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridres_core::fitting::{fit_auto, fit_rational, FitReport, RationalModel};
use gridres_core::harmonics::{
    check_compliance, percent_of_fundamental, propagate, thd, ComplianceReport, HarmonicSpectrum,
    LimitTable, SourceLocation,
};
use gridres_core::ingest::{envelope, flag_outliers, ManifestEntry, ParseOptions};
use gridres_core::network::{ImpedanceExpr, NetworkSpec};
use gridres_core::resonance::{
    branch_count_sweep, compose_network, dominant_parallel, magnification_map, resonance_drift,
    resonance_report_csv, scan_resonances, ResonancePoint, ScanConfig, SourceKind,
};
use gridres_core::synth::{generate, SynthConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, FitOrder};
use crate::io_util::{load_manifest_sweeps, load_models_dir, model_loader, write_file};
use crate::svg::{LineChart, Series};

fn scan_config(cfg: &Config) -> ScanConfig {
    ScanConfig {
        f_min: cfg.fmin,
        f_max: cfg.fmax,
        step: cfg.step,
        prominence_min: cfg.prominence,
    }
}

fn parse_options(cfg: &Config) -> ParseOptions {
    ParseOptions {
        allow_extended: cfg.allow_extended,
        ..Default::default()
    }
}

fn scan_grid(scan: &ScanConfig) -> Vec<f64> {
    let mut grid = Vec::new();
    let mut k = 0u64;
    loop {
        let f = scan.f_min + k as f64 * scan.step;
        if f > scan.f_max * (1.0 + 1e-12) {
            break;
        }
        grid.push(f);
        k += 1;
    }
    grid
}

fn thread_pool(cfg: &Config) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.max(1))
        .build()
        .context("cannot build worker pool")
}

// ---------------------------------------------------------------------------
// synth

pub fn cmd_synth(cfg: &Config) -> Result<Vec<PathBuf>> {
    let synth_cfg = SynthConfig {
        snapshots: cfg.snapshots,
        f_min: cfg.fmin,
        f_max: cfg.fmax,
        step: cfg.step,
        spread: cfg.spread,
        spread_center_hz: cfg.spread_center_hz,
        seed: cfg.seed,
    };
    let sweeps = generate(&synth_cfg)?;

    let dir = cfg.out.join("synth");
    let mut artifacts = Vec::new();
    let mut entries = Vec::new();
    for sweep in &sweeps {
        let name = format!("{}.csv", sweep.snapshot_id());
        let path = dir.join(&name);
        write_file(&path, &gridres_core::ingest::serialize_sweep(sweep))?;
        entries.push(ManifestEntry {
            id: sweep.snapshot_id().to_string(),
            path: name,
            meta: sweep
                .metadata()
                .iter()
                .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                .collect(),
        });
        artifacts.push(path);
    }
    let manifest = dir.join("manifest.json");
    write_file(&manifest, &serde_json::to_string_pretty(&entries)?)?;
    artifacts.push(manifest);
    log::info!(
        "synthesized {} snapshots (seed {}) into {}",
        sweeps.len(),
        cfg.seed,
        dir.display()
    );
    Ok(artifacts)
}

// ---------------------------------------------------------------------------
// fit

struct FitRow {
    id: String,
    outcome: Result<(RationalModel, FitReport), String>,
}

pub fn cmd_fit(cfg: &Config) -> Result<Vec<PathBuf>> {
    let sweeps = load_manifest_sweeps(&cfg.manifest_path(), &parse_options(cfg))?;
    let pool = thread_pool(cfg)?;
    let rows: Vec<FitRow> = pool.install(|| {
        sweeps
            .par_iter()
            .map(|sweep| {
                let outcome = match cfg.fit_order {
                    FitOrder::Fixed(order) => {
                        fit_rational(sweep, order, cfg.include_e, cfg.fit_max_iter, cfg.fit_tol)
                    }
                    FitOrder::Auto(_) => {
                        fit_auto(sweep, cfg.include_e, cfg.fit_max_iter, cfg.fit_tol)
                    }
                }
                .map_err(|e| e.to_string());
                FitRow {
                    id: sweep.snapshot_id().to_string(),
                    outcome,
                }
            })
            .collect()
    });

    let models_dir = cfg.models_dir();
    let mut artifacts = Vec::new();
    let mut summary = String::from(
        "snapshot_id,order,rms_rel_error,max_rel_error,iterations,converged,passive,status\n",
    );
    let mut succeeded = 0usize;
    for row in &rows {
        match &row.outcome {
            Ok((model, report)) => {
                let path = models_dir.join(format!("{}.json", row.id));
                write_file(&path, &model.to_json(Some(report)))?;
                artifacts.push(path);
                let _ = writeln!(
                    summary,
                    "{},{},{},{},{},{},{},ok",
                    row.id,
                    model.order(),
                    report.rms_rel_error,
                    report.max_rel_error,
                    report.iterations_used,
                    report.converged,
                    report.passive_on_fit_grid
                );
                succeeded += 1;
            }
            Err(e) => {
                log::warn!("fit failed for {}: {e}", row.id);
                let _ = writeln!(summary, "{},,,,,,,failed: {}", row.id, e.replace(',', ";"));
            }
        }
    }
    if succeeded == 0 {
        bail!("every snapshot failed to fit");
    }
    let summary_path = cfg.out.join("fit_summary.csv");
    write_file(&summary_path, &summary)?;
    artifacts.push(summary_path);
    log::info!("fitted {succeeded}/{} snapshots", rows.len());
    Ok(artifacts)
}

// ---------------------------------------------------------------------------
// resonance

#[derive(Serialize)]
struct ResonanceSummary {
    dominant_parallel_min: Option<(String, f64)>,
    dominant_parallel_max: Option<(String, f64)>,
    per_snapshot: BTreeMap<String, Option<f64>>,
}

pub fn cmd_resonance(cfg: &Config, from_csv: bool) -> Result<Vec<PathBuf>> {
    let scan = scan_config(cfg);
    let grid = scan_grid(&scan);

    // (id, resonances, overlay curve)
    let mut rows: Vec<(String, Vec<ResonancePoint>, Vec<(f64, f64)>)> = Vec::new();
    if from_csv {
        let sweeps = load_manifest_sweeps(&cfg.manifest_path(), &parse_options(cfg))?;
        for sweep in &sweeps {
            let (lo, hi) = sweep.range();
            let local = ScanConfig {
                f_min: scan.f_min.max(lo),
                f_max: scan.f_max.min(hi),
                ..scan.clone()
            };
            if local.f_min >= local.f_max {
                log::warn!("{}: sweep does not overlap the scan range", sweep.snapshot_id());
                continue;
            }
            let points = scan_resonances(sweep, &local)?;
            let curve = sweep
                .frequencies()
                .iter()
                .zip(sweep.samples())
                .map(|(&f, z)| (f, z.norm()))
                .collect();
            rows.push((sweep.snapshot_id().to_string(), points, curve));
        }
    } else {
        let models = load_models_dir(&cfg.models_dir())?;
        for (id, model) in &models {
            let points = scan_resonances(model, &scan)?;
            let curve = grid.iter().map(|&f| (f, model.evaluate(f).norm())).collect();
            rows.push((id.clone(), points, curve));
        }
    }
    if rows.is_empty() {
        bail!("nothing to scan");
    }

    let mut artifacts = Vec::new();
    let csv_path = cfg.out.join("resonances.csv");
    write_file(
        &csv_path,
        &resonance_report_csv(rows.iter().map(|(id, pts, _)| (id.as_str(), pts.as_slice()))),
    )?;
    artifacts.push(csv_path);

    let mut summary = ResonanceSummary {
        dominant_parallel_min: None,
        dominant_parallel_max: None,
        per_snapshot: BTreeMap::new(),
    };
    for (id, points, _) in &rows {
        let dom = dominant_parallel(points).map(|p| p.frequency);
        summary.per_snapshot.insert(id.clone(), dom);
        if let Some(f) = dom {
            if summary
                .dominant_parallel_min
                .as_ref()
                .map(|(_, m)| f < *m)
                .unwrap_or(true)
            {
                summary.dominant_parallel_min = Some((id.clone(), f));
            }
            if summary
                .dominant_parallel_max
                .as_ref()
                .map(|(_, m)| f > *m)
                .unwrap_or(true)
            {
                summary.dominant_parallel_max = Some((id.clone(), f));
            }
        }
    }
    let summary_path = cfg.out.join("resonance_summary.json");
    write_file(&summary_path, &serde_json::to_string_pretty(&summary)?)?;
    artifacts.push(summary_path);

    let mut chart = LineChart::new("grid impedance magnitude");
    chart.log_y = true;
    chart.y_label = "|Z| / ohm".into();
    for (id, _, curve) in &rows {
        chart.series.push(Series {
            label: id.clone(),
            points: curve.clone(),
        });
    }
    let svg_path = cfg.out.join("impedance_overlay.svg");
    write_file(&svg_path, &chart.to_svg())?;
    artifacts.push(svg_path);
    Ok(artifacts)
}

// ---------------------------------------------------------------------------
// drift

#[derive(Serialize)]
struct DriftSummaryJson {
    min: Option<(String, f64)>,
    max: Option<(String, f64)>,
}

pub fn cmd_drift(cfg: &Config) -> Result<Vec<PathBuf>> {
    let models = load_models_dir(&cfg.models_dir())?;
    let inv_z = cfg
        .inv_z
        .resolve(&model_loader(Path::new(".")))
        .map_err(|e| anyhow::anyhow!("bad inv_z expression: {e}"))?;
    let scan = scan_config(cfg);
    let table = resonance_drift(&models, &cfg.lcl, &inv_z, &scan)?;

    let mut artifacts = Vec::new();
    let csv_path = cfg.out.join("drift.csv");
    write_file(
        &csv_path,
        &resonance_report_csv(
            table
                .rows
                .iter()
                .map(|r| (r.snapshot_id.as_str(), r.resonances.as_slice())),
        ),
    )?;
    artifacts.push(csv_path);

    let summary_path = cfg.out.join("drift_summary.json");
    write_file(
        &summary_path,
        &serde_json::to_string_pretty(&DriftSummaryJson {
            min: table.summary.min.clone(),
            max: table.summary.max.clone(),
        })?,
    )?;
    artifacts.push(summary_path);

    let grid = scan_grid(&scan);
    let mut chart = LineChart::new("composed node impedance");
    chart.log_y = true;
    chart.y_label = "|Z_node| / ohm".into();
    for (id, model) in &models {
        let net = compose_network(model, &cfg.lcl, &inv_z)?;
        let points = grid
            .iter()
            .map(|&f| (f, net.node_impedance(f).map(|z| z.norm()).unwrap_or(f64::NAN)))
            .collect();
        chart.series.push(Series {
            label: id.clone(),
            points,
        });
    }
    let svg_path = cfg.out.join("node_overlay.svg");
    write_file(&svg_path, &chart.to_svg())?;
    artifacts.push(svg_path);

    if let (Some((id_min, f_min)), Some((id_max, f_max))) =
        (&table.summary.min, &table.summary.max)
    {
        log::info!("dominant parallel resonance drifts {f_min:.1} Hz ({id_min}) .. {f_max:.1} Hz ({id_max})");
    }
    Ok(artifacts)
}

// ---------------------------------------------------------------------------
// branches

pub fn cmd_branches(cfg: &Config) -> Result<Vec<PathBuf>> {
    let base = gridres_core::network::lcl_expr(
        &cfg.lcl,
        gridres_core::network::LclSide::InverterFacing,
    )?
    .z_shunt;
    let z_grid = ImpedanceExpr::series(vec![
        ImpedanceExpr::Resistor(cfg.grid_r_ohm),
        ImpedanceExpr::Inductor(cfg.grid_l_henry),
    ]);
    let rows = branch_count_sweep(&base, &z_grid, &cfg.branch_counts, &scan_config(cfg))?;

    let mut csv = String::from("n,dominant_freq_hz,status\n");
    for row in &rows {
        match row.dominant_freq_hz {
            Some(f) => {
                let _ = writeln!(csv, "{},{},ok", row.n, f);
            }
            None => {
                let _ = writeln!(csv, "{},,no_resonance", row.n);
            }
        }
    }
    let path = cfg.out.join("branches.csv");
    write_file(&path, &csv)?;
    Ok(vec![path])
}

// ---------------------------------------------------------------------------
// magnify

pub fn cmd_magnify(cfg: &Config, source: SourceKind) -> Result<Vec<PathBuf>> {
    let models = load_models_dir(&cfg.models_dir())?;
    let inv_z = cfg
        .inv_z
        .resolve(&model_loader(Path::new(".")))
        .map_err(|e| anyhow::anyhow!("bad inv_z expression: {e}"))?;
    let mut nets = Vec::with_capacity(models.len());
    for (id, model) in &models {
        nets.push((id.clone(), compose_network(model, &cfg.lcl, &inv_z)?));
    }
    let map = magnification_map(&nets, cfg.f1_hz, &cfg.orders, source)?;
    let path = cfg.out.join("magnification.csv");
    write_file(&path, &map.to_csv())?;
    Ok(vec![path])
}

// ---------------------------------------------------------------------------
// comply

#[derive(Serialize)]
struct ComplianceOutput {
    thd_percent: f64,
    propagated_through_network: bool,
    report: ComplianceReport,
}

pub fn cmd_comply(
    cfg: &Config,
    spectrum_path: &Path,
    through_network: Option<&Path>,
    location: SourceLocation,
) -> Result<(u8, Vec<PathBuf>)> {
    let csv = std::fs::read_to_string(spectrum_path)
        .with_context(|| format!("cannot read spectrum {}", spectrum_path.display()))?;
    let sidecar_path = spectrum_path.with_extension("json");
    let sidecar = std::fs::read_to_string(&sidecar_path)
        .with_context(|| format!("cannot read spectrum sidecar {}", sidecar_path.display()))?;
    let source = HarmonicSpectrum::parse(&csv, &sidecar)?;

    let limits = match &cfg.limits {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read limit table {}", path.display()))?;
            LimitTable::from_json(&text)?
        }
        None => LimitTable::builtin(),
    };

    let spectrum = match through_network {
        Some(net_path) => {
            let text = std::fs::read_to_string(net_path)
                .with_context(|| format!("cannot read network {}", net_path.display()))?;
            let spec: NetworkSpec = serde_json::from_str(&text)
                .with_context(|| format!("bad network JSON in {}", net_path.display()))?;
            let base = net_path.parent().unwrap_or_else(|| Path::new("."));
            let net = spec
                .resolve(&model_loader(base))
                .map_err(|e| anyhow::anyhow!("cannot resolve network: {e}"))?;
            let propagated = propagate(&source, &net, location)?;
            for (order, why) in &propagated.failed_orders {
                log::warn!("order {order} could not be propagated: {why}");
            }
            propagated.spectrum
        }
        None => source,
    };

    let max_order = spectrum.entries().keys().max().copied().unwrap_or(1);
    let percents = percent_of_fundamental(&spectrum)?;
    let report = check_compliance(&percents, &limits);
    let output = ComplianceOutput {
        thd_percent: thd(&spectrum, max_order)?,
        propagated_through_network: through_network.is_some(),
        report,
    };

    let json_path = cfg.out.join("compliance.json");
    write_file(&json_path, &serde_json::to_string_pretty(&output)?)?;
    let mut text = output.report.to_text();
    let _ = writeln!(text, "thd (orders <= {max_order}): {:.4} %", output.thd_percent);
    let text_path = cfg.out.join("compliance.txt");
    write_file(&text_path, &text)?;
    print!("{text}");

    let exit = if output.report.overall_pass { 0 } else { 1 };
    Ok((exit, vec![json_path, text_path]))
}

// ---------------------------------------------------------------------------
// envelope

#[derive(Serialize)]
struct EnvelopeSummary {
    worst_ratio: Option<(f64, f64)>,
    outliers: Vec<OutlierJson>,
}

#[derive(Serialize)]
struct OutlierJson {
    snapshot_id: String,
    score: f64,
    flagged: bool,
}

pub fn cmd_envelope(cfg: &Config) -> Result<Vec<PathBuf>> {
    let sweeps = load_manifest_sweeps(&cfg.manifest_path(), &parse_options(cfg))?;
    let env = envelope(&sweeps, cfg.step)?;

    let mut artifacts = Vec::new();
    let csv_path = cfg.out.join("envelope.csv");
    write_file(&csv_path, &env.to_csv())?;
    artifacts.push(csv_path);

    let outliers = if sweeps.len() >= 3 {
        flag_outliers(&sweeps, cfg.outlier_threshold)?
            .into_iter()
            .map(|s| OutlierJson {
                snapshot_id: s.snapshot_id,
                score: s.score,
                flagged: s.flagged,
            })
            .collect()
    } else {
        log::warn!("fewer than 3 snapshots; skipping outlier scores");
        Vec::new()
    };
    if let Some((f, r)) = env.worst_ratio {
        log::info!("worst magnitude spread: {r:.2}x at {f:.1} Hz");
    }
    let summary_path = cfg.out.join("envelope_summary.json");
    write_file(
        &summary_path,
        &serde_json::to_string_pretty(&EnvelopeSummary {
            worst_ratio: env.worst_ratio,
            outliers,
        })?,
    )?;
    artifacts.push(summary_path);
    Ok(artifacts)
}

// ---------------------------------------------------------------------------
// report

#[derive(Serialize)]
struct ReportIndex {
    config: String,
    stages: BTreeMap<String, Vec<String>>,
    comply_pass: Option<bool>,
}

pub fn cmd_report(cfg: &Config, spectrum: Option<&Path>) -> Result<Vec<PathBuf>> {
    let mut stages: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let rel = |paths: &[PathBuf]| -> Vec<String> {
        let mut out: Vec<String> = paths
            .iter()
            .map(|p| {
                p.strip_prefix(&cfg.out)
                    .unwrap_or(p)
                    .to_string_lossy()
                    .into_owned()
            })
            .collect();
        out.sort();
        out
    };

    let mut effective = cfg.clone();
    if effective.manifest.is_none() {
        let synth_artifacts = cmd_synth(&effective)?;
        stages.insert("synth".into(), rel(&synth_artifacts));
    }
    stages.insert("envelope".into(), rel(&cmd_envelope(&effective)?));
    stages.insert("fit".into(), rel(&cmd_fit(&effective)?));
    effective.models = Some(effective.models_dir());
    stages.insert("resonance".into(), rel(&cmd_resonance(&effective, false)?));
    stages.insert("drift".into(), rel(&cmd_drift(&effective)?));
    stages.insert("branches".into(), rel(&cmd_branches(&effective)?));
    stages.insert(
        "magnify".into(),
        rel(&cmd_magnify(&effective, SourceKind::Injection)?),
    );

    let mut comply_pass = None;
    if let Some(spectrum_path) = spectrum {
        let (exit, artifacts) =
            cmd_comply(&effective, spectrum_path, None, SourceLocation::GridSide)?;
        comply_pass = Some(exit == 0);
        stages.insert("comply".into(), rel(&artifacts));
    }

    let index = ReportIndex {
        config: "config.json".into(),
        stages,
        comply_pass,
    };
    let index_path = cfg.out.join("index.json");
    write_file(&index_path, &serde_json::to_string_pretty(&index)?)?;
    Ok(vec![index_path])
}
