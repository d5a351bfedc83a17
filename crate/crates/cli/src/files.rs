//! On-disk layout of models, noise factors and sensor sets.
//!
//! A model directory holds `U.dsm1` (points x rank), `sigma.dsm1`
//! (rank x 1), `V.dsm1` (instances x rank), `mean.dsm1` (points x 1, only
//! for centered fits) and `rom.json`. A noise factor is a DSM1 matrix with
//! its ridge in a sibling file carrying an extra `.json` suffix.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use corrsense::io::{decode_csv, decode_dsm1, write_matrix, MAGIC};
use corrsense::rom::default_ridge;
use corrsense::selection::SensorSet;
use corrsense::{Matrix, NoiseFactor, ReducedOrderModel, Vector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::Failure;

#[derive(Debug, Serialize, Deserialize)]
pub struct RomMeta {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub centered: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct NoiseMeta {
    pub n: usize,
    pub q: usize,
    pub ridge: f64,
}

/// Reads input files and remembers their SHA-256 digests.
#[derive(Default)]
pub struct Inputs {
    digests: BTreeMap<String, String>,
}

impl Inputs {
    pub fn digests(&self) -> &BTreeMap<String, String> {
        &self.digests
    }

    pub fn bytes(&mut self, path: &Path) -> Result<Vec<u8>, Failure> {
        let bytes = fs::read(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        self.digests.insert(path.display().to_string(), hex::encode(Sha256::digest(&bytes)));
        Ok(bytes)
    }

    pub fn matrix(&mut self, path: &Path) -> Result<Matrix, Failure> {
        let bytes = self.bytes(path)?;
        let parsed = if bytes.starts_with(&MAGIC) {
            decode_dsm1(&bytes)
        } else {
            match std::str::from_utf8(&bytes) {
                Ok(text) => decode_csv(text),
                Err(_) => Err(corrsense::Error::Format("neither DSM1 nor CSV".into())),
            }
        };
        parsed.map_err(|e| Failure::io(format!("{}: {e}", path.display())))
    }

    pub fn json<T: for<'de> Deserialize<'de>>(&mut self, path: &Path) -> Result<T, Failure> {
        let bytes = self.bytes(path)?;
        serde_json::from_slice(&bytes).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
    }

    pub fn rom(&mut self, dir: &Path) -> Result<ReducedOrderModel, Failure> {
        let meta: RomMeta = self.json(&dir.join("rom.json"))?;
        let modes = self.matrix(&dir.join("U.dsm1"))?;
        let sigma = self.matrix(&dir.join("sigma.dsm1"))?;
        let temporal = self.matrix(&dir.join("V.dsm1"))?;
        let mean = if meta.centered {
            Some(column(self.matrix(&dir.join("mean.dsm1"))?, "mean")?)
        } else {
            None
        };
        if modes.shape() != (meta.n, meta.r) || temporal.shape() != (meta.m, meta.r) {
            return Err(Failure::io(format!("{}: matrix shapes disagree with rom.json", dir.display())));
        }
        let rom = ReducedOrderModel::from_parts(modes, column(sigma, "sigma")?, temporal, mean)?;
        Ok(rom)
    }

    /// Noise factor with the stored ridge, the override, or the default.
    pub fn noise(&mut self, path: &Path, ridge: Option<f64>) -> Result<NoiseFactor, Failure> {
        let factor = self.matrix(path)?;
        let meta_path = meta_path(path);
        let stored = if meta_path.exists() {
            let meta: NoiseMeta = self.json(&meta_path)?;
            if meta.n != factor.nrows() || meta.q != factor.ncols() {
                return Err(Failure::io(format!("{}: shape disagrees with metadata", path.display())));
            }
            meta.ridge
        } else {
            default_ridge(&factor)
        };
        Ok(NoiseFactor::new(factor, ridge.unwrap_or(stored))?)
    }

    pub fn sensors(&mut self, path: &Path) -> Result<SensorSet, Failure> {
        let bytes = self.bytes(path)?;
        let text = String::from_utf8(bytes).map_err(|_| Failure::io("sensor set is not UTF-8"))?;
        Ok(SensorSet::from_json(&text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?)
    }
}

fn column(m: Matrix, what: &str) -> Result<Vector, Failure> {
    if m.ncols() != 1 {
        return Err(Failure::io(format!("{what} must be a single column, got {}x{}", m.nrows(), m.ncols())));
    }
    Ok(m.column(0).into_owned())
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

pub fn write_dsm1(path: &Path, m: &Matrix) -> Result<(), Failure> {
    write_matrix(path, m).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

pub fn write_rom(dir: &Path, rom: &ReducedOrderModel, instances: usize) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::io(format!("{}: {e}", dir.display())))?;
    write_dsm1(&dir.join("U.dsm1"), rom.modes())?;
    write_dsm1(&dir.join("sigma.dsm1"), &Matrix::from_column_slice(rom.rank(), 1, rom.singular_values().as_slice()))?;
    write_dsm1(&dir.join("V.dsm1"), rom.temporal())?;
    if let Some(mean) = rom.mean() {
        write_dsm1(&dir.join("mean.dsm1"), &Matrix::from_column_slice(mean.len(), 1, mean.as_slice()))?;
    }
    let meta = RomMeta { n: rom.points(), m: instances, r: rom.rank(), centered: rom.mean().is_some() };
    write_json(&dir.join("rom.json"), &meta)
}

pub fn write_noise(path: &Path, noise: &NoiseFactor) -> Result<(), Failure> {
    write_dsm1(path, noise.factor())?;
    let meta = NoiseMeta { n: noise.candidates(), q: noise.rank(), ridge: noise.ridge() };
    write_json(&meta_path(path), &meta)
}
