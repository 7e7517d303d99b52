//! TOML run configuration. Flags override file values; relative paths in the
//! file resolve against the file's directory.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer};
use vdisc::ranking::{RankingMode, Stratum};
use vdisc::scenario::ScenarioKind;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_dir: Option<PathBuf>,
    pub municipalities: Option<PathBuf>,
    pub centers: Option<PathBuf>,
    pub relations: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub consumers: Option<PathBuf>,
    pub complaints: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub k: Option<usize>,
    pub operators: Option<Vec<String>>,
    pub mode: Option<RankingMode>,
    pub month: Option<String>,
    #[serde(default, deserialize_with = "date_opt")]
    pub date: Option<NaiveDate>,
    #[serde(default, deserialize_with = "date_opt")]
    pub from: Option<NaiveDate>,
    #[serde(default, deserialize_with = "date_opt")]
    pub to: Option<NaiveDate>,
    pub strata: Option<Vec<Stratum>>,
    #[serde(default)]
    pub cusum: CusumSection,
    #[serde(default)]
    pub simulate: SimulateSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CusumSection {
    pub target_mean: Option<f64>,
    pub allowance: Option<f64>,
    pub threshold: Option<f64>,
    pub reset_on_alarm: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub kind: Option<ScenarioKind>,
    pub seed: Option<u64>,
    pub regions: Option<usize>,
    #[serde(default, deserialize_with = "date_opt")]
    pub start: Option<NaiveDate>,
    pub days: Option<usize>,
    pub operators: Option<Vec<String>>,
    pub target: Option<String>,
    pub affected_operator: Option<String>,
    pub magnitude: Option<f64>,
    #[serde(default, deserialize_with = "date_opt")]
    pub onset: Option<NaiveDate>,
    pub jitter: Option<f64>,
}

impl FileConfig {
    /// Loads `path`, or an empty configuration.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", path.display(), e.message())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [
            &mut cfg.data_dir,
            &mut cfg.municipalities,
            &mut cfg.centers,
            &mut cfg.relations,
            &mut cfg.graph,
            &mut cfg.consumers,
            &mut cfg.complaints,
            &mut cfg.out_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Input file locations after merging.
#[derive(Debug, Clone, Default)]
pub struct Inputs {
    pub municipalities: Option<PathBuf>,
    pub centers: Option<PathBuf>,
    pub relations: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub consumers: Option<PathBuf>,
    pub complaints: Option<PathBuf>,
}

impl Inputs {
    /// Explicit paths win; a data directory supplies the standard file names.
    pub fn resolve(flags: Inputs, flag_dir: Option<PathBuf>, file: &FileConfig) -> Inputs {
        let dir = flag_dir.or_else(|| file.data_dir.clone());
        let pick = |flag: Option<PathBuf>, conf: &Option<PathBuf>, name: &str| {
            flag.or_else(|| conf.clone())
                .or_else(|| dir.as_ref().map(|d| d.join(name)))
        };
        Inputs {
            municipalities: pick(flags.municipalities, &file.municipalities, "municipalities.csv"),
            centers: pick(flags.centers, &file.centers, "centers.csv"),
            relations: pick(flags.relations, &file.relations, "relations.csv"),
            // a data directory never implies a prebuilt graph
            graph: flags.graph.or_else(|| file.graph.clone()),
            consumers: pick(flags.consumers, &file.consumers, "consumers.csv"),
            complaints: pick(flags.complaints, &file.complaints, "complaints.csv"),
        }
    }
}

pub fn required(path: &Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    path.clone()
        .ok_or_else(|| CliError::Usage(format!("missing input: pass --{what} or --data-dir")))
}

/// Accepts TOML dates and `YYYY-MM-DD` strings.
fn date_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<NaiveDate>, D::Error> {
    let text = match Option::<toml::Value>::deserialize(d)? {
        None => return Ok(None),
        Some(toml::Value::String(s)) => s,
        Some(toml::Value::Datetime(dt)) => dt.to_string(),
        Some(other) => return Err(serde::de::Error::custom(format!("expected a date, found {}", other.type_str()))),
    };
    NaiveDate::parse_from_str(&text, "%Y-%m-%d")
        .map(Some)
        .map_err(|_| serde::de::Error::custom(format!("`{text}` is not a YYYY-MM-DD date")))
}
