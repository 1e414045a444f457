//! Material descriptors, their numeric encoding, training datasets and the
//! synthetic data generator.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{config, domain, Error, Result};
use crate::rng::{stream, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadType {
    Bending,
    Stress,
    Strain,
}

impl LoadType {
    pub const ALL: [LoadType; 3] = [LoadType::Bending, LoadType::Stress, LoadType::Strain];

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for LoadType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LoadType::Bending => "bending",
            LoadType::Stress => "stress",
            LoadType::Strain => "strain",
        })
    }
}

impl FromStr for LoadType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bending" => Ok(LoadType::Bending),
            "stress" => Ok(LoadType::Stress),
            "strain" => Ok(LoadType::Strain),
            other => Err(domain(format!("unknown load type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFeatures")]
pub struct MaterialFeatures {
    /// Loaded volume.
    pub v90: f64,
    pub edge_hardness: f64,
    pub load_type: LoadType,
    /// Ratio of minimum to maximum load.
    pub load_ratio_r: f64,
}

#[derive(Deserialize)]
struct RawFeatures {
    v90: f64,
    edge_hardness: f64,
    load_type: LoadType,
    load_ratio_r: f64,
}

impl TryFrom<RawFeatures> for MaterialFeatures {
    type Error = Error;
    fn try_from(r: RawFeatures) -> Result<Self> {
        MaterialFeatures::new(r.v90, r.edge_hardness, r.load_type, r.load_ratio_r)
    }
}

impl MaterialFeatures {
    pub fn new(v90: f64, edge_hardness: f64, load_type: LoadType, load_ratio_r: f64) -> Result<Self> {
        if !(v90 > 0.0 && v90.is_finite()) {
            return Err(domain(format!("v90 must be positive, got {v90}")));
        }
        if !(edge_hardness > 0.0 && edge_hardness.is_finite()) {
            return Err(domain(format!("edge hardness must be positive, got {edge_hardness}")));
        }
        if !load_ratio_r.is_finite() {
            return Err(domain("load ratio must be finite"));
        }
        Ok(Self { v90, edge_hardness, load_type, load_ratio_r })
    }
}

/// Number of encoded input dimensions: three z-scored continuous features and
/// a one-hot load type.
pub const ENCODED_DIM: usize = 6;

/// Z-scores the continuous features with constants taken from a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub means: [f64; 3],
    pub stds: [f64; 3],
}

impl FeatureEncoder {
    pub fn fit(features: &[MaterialFeatures]) -> Self {
        let cols = |f: &MaterialFeatures| [f.v90, f.edge_hardness, f.load_ratio_r];
        let n = features.len().max(1) as f64;
        let mut means = [0.0; 3];
        for f in features {
            for (m, v) in means.iter_mut().zip(cols(f)) {
                *m += v / n;
            }
        }
        let mut stds = [0.0; 3];
        for f in features {
            for ((s, m), v) in stds.iter_mut().zip(&means).zip(cols(f)) {
                *s += (v - m).powi(2) / n;
            }
        }
        for s in &mut stds {
            *s = if *s > 0.0 { s.sqrt() } else { 1.0 };
        }
        Self { means, stds }
    }

    pub fn encode(&self, f: &MaterialFeatures) -> Vec<f64> {
        let mut x = vec![0.0; ENCODED_DIM];
        for (i, v) in [f.v90, f.edge_hardness, f.load_ratio_r].into_iter().enumerate() {
            x[i] = (v - self.means[i]) / self.stds[i];
        }
        x[3 + f.load_type.slot()] = 1.0;
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub features: MaterialFeatures,
    pub mu_l: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    v90: f64,
    edge_hardness: f64,
    load_type: LoadType,
    load_ratio_r: f64,
    mu_l: f64,
}

pub type Dataset = Vec<TrainingRow>;

pub fn write_dataset_csv<W: std::io::Write>(rows: &[TrainingRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        let f = r.features;
        w.serialize(CsvRow {
            v90: f.v90,
            edge_hardness: f.edge_hardness,
            load_type: f.load_type,
            load_ratio_r: f.load_ratio_r,
            mu_l: r.mu_l,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: std::io::Read>(input: R) -> Result<Dataset> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize::<CsvRow>()
        .map(|row| {
            let row = row?;
            if !(row.mu_l > 0.0 && row.mu_l.is_finite()) {
                return Err(domain(format!("mu_l must be positive, got {}", row.mu_l)));
            }
            let features = MaterialFeatures::new(row.v90, row.edge_hardness, row.load_type, row.load_ratio_r)?;
            Ok(TrainingRow { features, mu_l: row.mu_l })
        })
        .collect()
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    read_dataset_csv(std::fs::File::open(path)?)
}

/// Default noise on the synthetic log10 targets.
pub const SYNTHETIC_NOISE_LOG10: f64 = 0.02;
pub const SYNTHETIC_DEFAULT_ROWS: usize = 114;

/// Ground truth of the synthetic generator, in log10 N.
///
/// Strength is proportional to hardness, decays weakly with loaded volume
/// (size effect), shrinks as the mean load grows with R, and carries a fixed
/// offset per load type.
pub fn synthetic_truth_log10(f: &MaterialFeatures) -> f64 {
    let type_offset = match f.load_type {
        LoadType::Bending => 0.05,
        LoadType::Stress => 0.0,
        LoadType::Strain => -0.03,
    };
    (1.6 * f.edge_hardness).log10() - 0.03 * (f.v90 / 100.0).log10()
        + (1.0 - 0.3 * (f.load_ratio_r + 1.0) / 2.0).log10()
        + type_offset
}

/// Samples `n` materials uniformly over hardness 150..550 HV, loaded volume
/// 5..2000 mm^3 (log-uniform), R in -1..0.5 and the three load types.
pub fn synthesize_training_data(seed: u64, n: usize) -> Result<Dataset> {
    synthesize_training_data_with_noise(seed, n, SYNTHETIC_NOISE_LOG10)
}

pub fn synthesize_training_data_with_noise(seed: u64, n: usize, noise_log10: f64) -> Result<Dataset> {
    if n < 10 {
        return Err(config(format!("need at least 10 synthetic rows, got {n}")));
    }
    if !(noise_log10 >= 0.0 && noise_log10.is_finite()) {
        return Err(config(format!("noise must be nonnegative, got {noise_log10}")));
    }
    let mut rng = StreamRng::derived(seed, &[stream::DATA]);
    (0..n)
        .map(|_| {
            let v90 = 10f64.powf(5f64.log10() + rng.uniform() * (2000f64.log10() - 5f64.log10()));
            let hardness = 150.0 + 400.0 * rng.uniform();
            let r = -1.0 + 1.5 * rng.uniform();
            let load_type = LoadType::ALL[((rng.uniform() * 3.0) as usize).min(2)];
            let features = MaterialFeatures::new(v90, hardness, load_type, r)?;
            let eps: f64 = StandardNormal.sample(&mut rng);
            let mu_l = 10f64.powf(synthetic_truth_log10(&features) + noise_log10 * eps);
            Ok(TrainingRow { features, mu_l })
        })
        .collect()
}
