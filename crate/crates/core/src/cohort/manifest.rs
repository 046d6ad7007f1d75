//! Cohort directory layout:
//!
//! ```text
//! config.toml        effective configuration
//! manifest.csv       one row per (mesh, scenario)
//! replicates.csv     healthy replicates used for z-scores
//! samples/           <mesh>__<scenario>.ctsamp
//! ecg/               <mesh>__<scenario>.ctecg (normalized leads)
//! replicates/        <mesh>__healthy_r<k>.ctecg
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use log::{error, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::ecg::EcgRecord;
use crate::error::{Error, Result};
use crate::infarct::catalog::{scenario_catalog_with, Scenario};
use crate::io::Annotated;

use super::pipeline::{derive_seed, Heart};
use super::sample::CohortSample;

pub const MANIFEST: &str = "manifest.csv";
pub const REPLICATES: &str = "replicates.csv";
pub const CONFIG: &str = "config.toml";
pub const STATUS_OK: &str = "ok";
pub const MESH_EXT: &str = "ctmesh";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub file: String,
    pub mesh_id: String,
    pub scenario: String,
    pub transmurality: String,
    pub seed: u64,
    pub sha256: String,
    pub split: String,
    pub status: String,
    pub ecg_file: String,
    pub ecg_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub file: String,
    pub mesh_id: String,
    pub replicate: usize,
    pub seed: u64,
    pub sha256: String,
    pub status: String,
}

#[derive(Debug, Clone, Default)]
pub struct CohortSummary {
    pub samples: Vec<ManifestRow>,
    pub replicates: Vec<ReplicateRow>,
}

impl CohortSummary {
    pub fn failures(&self) -> usize {
        self.samples.iter().filter(|r| r.status != STATUS_OK).count()
            + self.replicates.iter().filter(|r| r.status != STATUS_OK).count()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path)?))
}

/// `*.ctmesh` files in `dir`, sorted by name.
pub fn list_meshes(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == MESH_EXT))
        .collect();
    out.sort();
    Ok(out)
}

pub fn mesh_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Seeded shuffle of the mesh ids into train/val/test.
pub fn assign_splits(ids: &[String], cfg: &RunConfig) -> Vec<(String, &'static str)> {
    let mut order: Vec<String> = ids.to_vec();
    order.sort();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(cfg.cohort.seed, "split")));
    let m = order.len() as f64;
    let n_train = (cfg.cohort.split_train * m).round() as usize;
    let n_val = (cfg.cohort.split_val * m).round() as usize;
    order
        .into_iter()
        .enumerate()
        .map(|(k, id)| {
            let split = if k < n_train.max(1) {
                "train"
            } else if k < n_train.max(1) + n_val {
                "val"
            } else {
                "test"
            };
            (id, split)
        })
        .collect()
}

/// Scar noise seed shared by every scenario of one mesh.
pub fn scenario_seed(cfg: &RunConfig, mesh_id: &str) -> u64 {
    derive_seed(cfg.cohort.seed, &format!("{mesh_id}/scar"))
}

pub fn replicate_seed(cfg: &RunConfig, mesh_id: &str, k: usize) -> u64 {
    derive_seed(cfg.cohort.seed, &format!("{mesh_id}/replicate/{k}"))
}

/// Runs every catalog scenario plus the healthy replicates on each mesh and
/// writes the cohort directory. `jobs` caps the worker pool. Failed
/// scenarios are recorded in the manifest and reported as an error after
/// everything else has been written.
pub fn generate_cohort(meshes: &[PathBuf], out: &Path, cfg: &RunConfig, jobs: Option<usize>) -> Result<CohortSummary> {
    if meshes.is_empty() {
        return Err(Error::Parameter("no meshes given".into()));
    }
    cfg.check()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| Error::Parameter(format!("worker pool: {e}")))?;
    pool.install(|| generate_in_pool(meshes, out, cfg))
}

fn generate_in_pool(meshes: &[PathBuf], out: &Path, cfg: &RunConfig) -> Result<CohortSummary> {
    for d in ["samples", "ecg", "replicates"] {
        fs::create_dir_all(out.join(d))?;
    }
    fs::write(out.join(CONFIG), cfg.to_toml())?;
    let ids: Vec<String> = meshes.iter().map(|p| mesh_id(p)).collect();
    let splits = assign_splits(&ids, cfg);
    let catalog = scenario_catalog_with(&cfg.scar);
    let mut summary = CohortSummary::default();
    for (path, id) in meshes.iter().zip(&ids) {
        let split = splits.iter().find(|(m, _)| m == id).map(|(_, s)| *s).unwrap_or("train");
        info!("mesh {id}: preparing");
        let heart = Annotated::read(path).and_then(|a| Heart::prepare(id, a, cfg));
        let heart = match heart {
            Ok(h) => h,
            Err(e) => {
                error!("mesh {id}: {e}");
                let status = format!("failed: {e}");
                for s in &catalog {
                    summary.samples.push(failed_row(id, s, scenario_seed(cfg, id), split, &status));
                }
                continue;
            }
        };
        let seed = scenario_seed(cfg, id);
        let sampled = match heart.sample_nodes() {
            Ok(s) => s,
            Err(e) => {
                error!("mesh {id}: {e}");
                let status = format!("failed: {e}");
                summary.samples.extend(catalog.iter().map(|s| failed_row(id, s, seed, split, &status)));
                continue;
            }
        };
        let rows: Vec<ManifestRow> =
            catalog.par_iter().map(|s| write_scenario(&heart, s, seed, split, &sampled, out)).collect();
        let reps: Vec<ReplicateRow> = (0..cfg.cohort.healthy_replicates)
            .into_par_iter()
            .map(|k| write_replicate(&heart, k, out))
            .collect();
        info!("mesh {id}: {} scenarios, {} replicates", rows.len(), reps.len());
        summary.samples.extend(rows);
        summary.replicates.extend(reps);
    }
    write_csv(&out.join(MANIFEST), &summary.samples)?;
    write_csv(&out.join(REPLICATES), &summary.replicates)?;
    let failed = summary.failures();
    if failed > 0 {
        return Err(Error::Validation(format!("{failed} cohort entries failed; see {MANIFEST}")));
    }
    Ok(summary)
}

fn failed_row(id: &str, s: &Scenario, seed: u64, split: &str, status: &str) -> ManifestRow {
    ManifestRow {
        file: format!("samples/{id}__{}.ctsamp", s.name),
        mesh_id: id.into(),
        scenario: s.name.clone(),
        transmurality: s.transmurality_name().into(),
        seed,
        sha256: String::new(),
        split: split.into(),
        status: status.into(),
        ecg_file: format!("ecg/{id}__{}.ctecg", s.name),
        ecg_sha256: String::new(),
    }
}

fn write_scenario(heart: &Heart, s: &Scenario, seed: u64, split: &str, sampled: &[usize], out: &Path) -> ManifestRow {
    let mut row = failed_row(&heart.mesh_id, s, seed, split, "");
    let result = (|| -> Result<(String, String)> {
        let run = heart.run_scenario(s, seed)?;
        let bytes = heart.assemble(s, seed, &run, sampled).to_bytes()?;
        fs::write(out.join(&row.file), &bytes)?;
        let text = run.ecg.to_ctecg();
        fs::write(out.join(&row.ecg_file), text.as_bytes())?;
        Ok((sha256_hex(&bytes), sha256_hex(text.as_bytes())))
    })();
    match result {
        Ok((a, b)) => {
            row.sha256 = a;
            row.ecg_sha256 = b;
            row.status = STATUS_OK.into();
        }
        Err(e) => {
            error!("{}: {e}", heart.mesh_id);
            row.status = format!("failed: {e}");
        }
    }
    row
}

fn write_replicate(heart: &Heart, k: usize, out: &Path) -> ReplicateRow {
    let seed = replicate_seed(&heart.config, &heart.mesh_id, k);
    let file = format!("replicates/{}__healthy_r{k}.ctecg", heart.mesh_id);
    let result = heart.run_replicate(seed).and_then(|mut run| {
        run.ecg.meta.insert("replicate".into(), k.to_string());
        let text = run.ecg.to_ctecg();
        fs::write(out.join(&file), text.as_bytes())?;
        Ok(sha256_hex(text.as_bytes()))
    });
    let (sha256, status) = match result {
        Ok(h) => (h, STATUS_OK.to_owned()),
        Err(e) => {
            error!("{}: {e}", heart.mesh_id);
            (String::new(), format!("failed: {e}"))
        }
    };
    ReplicateRow { file, mesh_id: heart.mesh_id.clone(), replicate: k, seed, sha256, status }
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Format(format!("csv: {other:?}")),
    }
}

/// A cohort directory as read back from disk.
pub struct Cohort {
    pub root: PathBuf,
    pub config: RunConfig,
    pub samples: Vec<ManifestRow>,
    pub replicates: Vec<ReplicateRow>,
}

impl Cohort {
    pub fn open(root: &Path) -> Result<Cohort> {
        let config = RunConfig::from_toml(&fs::read_to_string(root.join(CONFIG))?)?;
        let samples = read_csv(&root.join(MANIFEST))?;
        let replicates = if root.join(REPLICATES).exists() { read_csv(&root.join(REPLICATES))? } else { Vec::new() };
        Ok(Cohort { root: root.to_owned(), config, samples, replicates })
    }

    /// Mesh ids in manifest order of first appearance.
    pub fn mesh_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for r in &self.samples {
            if !ids.contains(&r.mesh_id) {
                ids.push(r.mesh_id.clone());
            }
        }
        ids
    }

    /// Normalized scenario records of one mesh in manifest order.
    pub fn scenario_records(&self, mesh_id: &str) -> Result<Vec<EcgRecord>> {
        self.samples
            .iter()
            .filter(|r| r.mesh_id == mesh_id)
            .map(|r| {
                if r.status != STATUS_OK {
                    return Err(Error::Validation(format!("scenario `{}` of {mesh_id} failed", r.scenario)));
                }
                EcgRecord::read(&self.root.join(&r.ecg_file))
            })
            .collect()
    }

    pub fn replicate_records(&self, mesh_id: &str) -> Result<Vec<EcgRecord>> {
        self.replicates
            .iter()
            .filter(|r| r.mesh_id == mesh_id && r.status == STATUS_OK)
            .map(|r| EcgRecord::read(&self.root.join(&r.file)))
            .collect()
    }

    /// Re-checks every manifest entry: status, checksums, sample schema and
    /// record shape. Returns the number of files checked.
    pub fn validate(&self) -> Result<usize> {
        let nodes = self.config.cohort.nodes;
        let t = self.config.cohort.samples;
        let expected = scenario_catalog_with(&self.config.scar).len();
        let mut problems = Vec::new();
        let mut checked = 0;
        for id in self.mesh_ids() {
            let n = self.samples.iter().filter(|r| r.mesh_id == id).count();
            if n != expected {
                problems.push(format!("{id}: {n} samples, expected {expected}"));
            }
        }
        let check_sample = |r: &ManifestRow| -> Result<()> {
            if r.status != STATUS_OK {
                return Err(Error::Validation(r.status.clone()));
            }
            let bytes = fs::read(self.root.join(&r.file))?;
            if sha256_hex(&bytes) != r.sha256 {
                return Err(Error::Validation("sample checksum mismatch".into()));
            }
            let s = CohortSample::from_bytes(&bytes)?;
            s.check_schema(nodes, t)?;
            if s.meta.scenario != r.scenario || s.meta.mesh_id != r.mesh_id || s.meta.seed != r.seed {
                return Err(Error::Validation("sample metadata disagrees with the manifest".into()));
            }
            check_record(&self.root.join(&r.ecg_file), &r.ecg_sha256, t)
        };
        for r in &self.samples {
            match check_sample(r) {
                Ok(()) => checked += 2,
                Err(e) => problems.push(format!("{}: {e}", r.file)),
            }
        }
        for r in &self.replicates {
            let res = if r.status == STATUS_OK {
                check_record(&self.root.join(&r.file), &r.sha256, t)
            } else {
                Err(Error::Validation(r.status.clone()))
            };
            match res {
                Ok(()) => checked += 1,
                Err(e) => problems.push(format!("{}: {e}", r.file)),
            }
        }
        if problems.is_empty() {
            Ok(checked)
        } else {
            Err(Error::Validation(problems.join("; ")))
        }
    }
}

fn check_record(path: &Path, sha: &str, t: usize) -> Result<()> {
    let text = fs::read(path)?;
    if sha256_hex(&text) != sha {
        return Err(Error::Validation("record checksum mismatch".into()));
    }
    let rec = EcgRecord::from_ctecg(std::str::from_utf8(&text).map_err(|e| Error::Format(e.to_string()))?)?;
    rec.check()?;
    if rec.len() != t {
        return Err(Error::Validation(format!("record has {} samples, expected {t}", rec.len())));
    }
    Ok(())
}
