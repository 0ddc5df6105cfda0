//! File-level plumbing shared by the subcommands: manifest/sweep loading,
//! fitted-model directories, and model-path resolution for network files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gridres_core::fitting::RationalModel;
use gridres_core::ingest::{parse_manifest, parse_sweep_with, ImpedanceSweep, ParseOptions};

/// Loads every sweep listed in a manifest, attaching manifest `meta` values
/// as sweep metadata. Paths resolve relative to the manifest's directory;
/// the result is sorted by snapshot id.
pub fn load_manifest_sweeps(manifest: &Path, opts: &ParseOptions) -> Result<Vec<ImpedanceSweep>> {
    let text = std::fs::read_to_string(manifest)
        .with_context(|| format!("cannot read manifest {}", manifest.display()))?;
    let entries = parse_manifest(&text)
        .with_context(|| format!("cannot parse manifest {}", manifest.display()))?;
    if entries.is_empty() {
        bail!("manifest {} lists no sweeps", manifest.display());
    }
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));

    let mut sweeps = Vec::with_capacity(entries.len());
    for entry in entries {
        let path = base.join(&entry.path);
        let csv = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read sweep {}", path.display()))?;
        let sweep = parse_sweep_with(&csv, &entry.id, opts)
            .with_context(|| format!("cannot parse sweep {}", path.display()))?;
        let metadata: BTreeMap<String, String> = entry
            .meta
            .iter()
            .map(|(k, v)| {
                let text = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                (k.clone(), text)
            })
            .collect();
        sweeps.push(
            ImpedanceSweep::new(
                entry.id.clone(),
                sweep.frequencies().to_vec(),
                sweep.samples().to_vec(),
                metadata,
            )
            .with_context(|| format!("invalid sweep {}", entry.id))?,
        );
    }
    sweeps.sort_by(|a, b| a.snapshot_id().cmp(b.snapshot_id()));
    Ok(sweeps)
}

/// Loads every `*.json` model in a directory, keyed by file stem, sorted.
pub fn load_models_dir(dir: &Path) -> Result<Vec<(String, RationalModel)>> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read model directory {}", dir.display()))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "json").unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no model files in {}", dir.display());
    }
    let mut models = Vec::with_capacity(paths.len());
    for path in paths {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read model {}", path.display()))?;
        let (model, _) = RationalModel::from_json(&text)
            .with_context(|| format!("cannot parse model {}", path.display()))?;
        models.push((id, model));
    }
    Ok(models)
}

/// Model loader for network description files: `model` nodes reference
/// paths relative to the network file's directory.
pub fn model_loader(base: &Path) -> impl Fn(&str) -> std::result::Result<RationalModel, String> + '_ {
    move |rel: &str| {
        let path = base.join(rel);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| format!("cannot read model {}: {e}", path.display()))?;
        RationalModel::from_json(&text)
            .map(|(m, _)| m)
            .map_err(|e| format!("cannot parse model {}: {e}", path.display()))
    }
}

/// Writes a file, creating parent directories as needed.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create {}", parent.display()))?;
    }
    std::fs::write(path, contents.as_bytes())
        .with_context(|| format!("cannot write {}", path.display()))
}
