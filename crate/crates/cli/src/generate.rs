use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tomo_core::herm::{random_density, DensityLike, HermitianMatrix};
use tomo_core::operators::{read_data_csv, write_data_csv, MeasurementData};
use tomo_core::rng::derive_seed;

use crate::config::ExperimentSpec;
use crate::{simulate_data, tags, write_atomic, write_json};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub id: String,
    pub rank: usize,
    /// Stable index used for seed derivation.
    pub index: u64,
    pub truth_seed: u64,
    pub noise_seed: Option<u64>,
    pub truth: FileEntry,
    pub exact: FileEntry,
    pub noisy: Option<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub generator: String,
    pub seed: u64,
    pub spec: ExperimentSpec,
    pub instances: Vec<InstanceEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        crate::read_json(&dir.join(MANIFEST))
    }
}

pub fn instance_id(rank: usize, k: usize) -> String {
    format!("r{rank:02}_{k:03}")
}

pub fn instance_index(rank: usize, k: usize) -> u64 {
    ((rank as u64) << 32) | k as u64
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn put(dir: &Path, name: String, bytes: Vec<u8>) -> Result<FileEntry> {
    write_atomic(&dir.join(&name), &bytes)?;
    Ok(FileEntry {
        sha256: digest(&bytes),
        path: name,
    })
}

fn data_bytes(data: &MeasurementData) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_data_csv(data, &mut buf)?;
    Ok(buf)
}

/// Writes `truth_{id}.json`, `exact_{id}.csv`, `noisy_{id}.csv` (when noise
/// is enabled) for every instance and then `manifest.json`.
pub fn cmd_generate(spec: &ExperimentSpec, out: &Path) -> Result<Manifest> {
    spec.check()?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let op = spec.operator.build()?;
    let n = spec.ensemble.dim;
    let jobs: Vec<(usize, usize)> = spec
        .ensemble
        .ranks
        .iter()
        .flat_map(|&r| (0..spec.ensemble.count_per_rank).map(move |k| (r, k)))
        .collect();

    let instances = jobs
        .par_iter()
        .map(|&(rank, k)| -> Result<InstanceEntry> {
            let id = instance_id(rank, k);
            let index = instance_index(rank, k);
            let truth_seed = derive_seed(spec.seed, tags::TRUTH, index);
            let truth = random_density(n, rank, truth_seed)?;
            let mut truth_json = serde_json::to_vec_pretty(&truth)?;
            truth_json.push(b'\n');
            let truth_file = put(out, format!("truth_{id}.json"), truth_json)?;

            let exact = simulate_data(&op, &truth, spec.noise.scale, 0, false)?;
            let exact_file = put(out, format!("exact_{id}.csv"), data_bytes(&exact)?)?;

            let (noise_seed, noisy_file) = if spec.noise.enabled {
                let seed = derive_seed(spec.seed, tags::NOISE, index);
                let noisy = simulate_data(&op, &truth, spec.noise.scale, seed, true)?;
                (Some(seed), Some(put(out, format!("noisy_{id}.csv"), data_bytes(&noisy)?)?))
            } else {
                (None, None)
            };
            Ok(InstanceEntry {
                id,
                rank,
                index,
                truth_seed,
                noise_seed,
                truth: truth_file,
                exact: exact_file,
                noisy: noisy_file,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut resolved = spec.clone();
    resolved.output_dir = out.to_path_buf();
    let manifest = Manifest {
        generator: format!("tomo {}", env!("CARGO_PKG_VERSION")),
        seed: spec.seed,
        spec: resolved,
        instances,
    };
    write_json(&out.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// A generated instance read back from disk, with digests verified.
pub struct LoadedInstance {
    pub entry: InstanceEntry,
    pub truth: DensityLike,
    pub exact: MeasurementData,
    pub noisy: Option<MeasurementData>,
}

fn read_checked(dir: &Path, f: &FileEntry) -> Result<Vec<u8>> {
    let path: PathBuf = dir.join(&f.path);
    let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
    anyhow::ensure!(digest(&bytes) == f.sha256, "{} does not match its manifest digest", path.display());
    Ok(bytes)
}

pub fn load_instance(dir: &Path, entry: &InstanceEntry) -> Result<LoadedInstance> {
    let truth: HermitianMatrix = serde_json::from_slice(&read_checked(dir, &entry.truth)?)
        .with_context(|| format!("parsing {}", entry.truth.path))?;
    let truth = DensityLike::new(truth, 1.0)?;
    let exact = read_data_csv(read_checked(dir, &entry.exact)?.as_slice())?;
    let noisy = match &entry.noisy {
        Some(f) => Some(read_data_csv(read_checked(dir, f)?.as_slice())?),
        None => None,
    };
    Ok(LoadedInstance {
        entry: entry.clone(),
        truth,
        exact,
        noisy,
    })
}
