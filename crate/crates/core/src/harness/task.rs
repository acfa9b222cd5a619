//! Task files.
//!
//! ```toml
//! name = "conflict"
//! symbols = ["A", "B", "C", "D", "E"]   # optional, defaults to A-H plus ( )
//! max_len = 14
//! fingerprint_bits = 2048               # optional
//!
//! [[oracles]]                           # optional derived oracles
//! id = "b_x10"
//! base = "frac_B"
//! scale = 10.0
//! offset = 0.0
//!
//! [[oracles]]                           # or a weighted sum
//! id = "ab"
//! terms = [{ oracle = "frac_A", weight = 5.0 }, { oracle = "frac_B", weight = 5.0 }]
//!
//! [[properties]]
//! name = "wide"
//! direction = 1                          # +1 maximize, -1 minimize
//! delta = 1.0
//! theta = 3.0
//! oracle = "b_x10"
//!
//! [[sources]]
//! tokens = "C D C E A C D B C E"
//! ```
//!
//! Every source becomes one task (and one policy slot) sharing the property
//! list.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::property::{OracleRegistry, PropertySpec, TaskSet, TaskSpec, DEFAULT_FP_WIDTH};
use crate::vocab::Vocabulary;

/// A derived oracle: either `scale * base + offset`, or a weighted sum of
/// `terms` plus `offset`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleDef {
    pub id: String,
    #[serde(default)]
    pub base: Option<String>,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub terms: Vec<TermDef>,
    #[serde(default)]
    pub offset: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDef {
    pub oracle: String,
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDef {
    pub tokens: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub name: String,
    #[serde(default)]
    pub symbols: Option<Vec<String>>,
    pub max_len: usize,
    #[serde(default)]
    pub fingerprint_bits: Option<usize>,
    #[serde(default)]
    pub oracles: Vec<OracleDef>,
    pub properties: Vec<PropertySpec>,
    pub sources: Vec<SourceDef>,
}

/// Task files compiled into the library, addressable as `builtin:<name>`.
pub const BUILTIN_TASKS: &[(&str, &str)] = &[
    ("conflict", include_str!("../../configs/tasks/conflict.toml")),
    ("cooperative", include_str!("../../configs/tasks/cooperative.toml")),
    ("bracketed", include_str!("../../configs/tasks/bracketed.toml")),
];

/// A loaded task set with its shared oracle registry.
#[derive(Debug, Clone)]
pub struct LoadedTasks {
    pub name: String,
    pub registry: Arc<OracleRegistry>,
    pub tasks: TaskSet,
}

impl LoadedTasks {
    pub fn vocab(&self) -> &Arc<Vocabulary> {
        self.registry.vocab()
    }

    pub fn max_len(&self) -> usize {
        self.registry.max_len()
    }

    pub fn property_names(&self) -> Vec<String> {
        self.tasks[0].properties.iter().map(|p| p.name.clone()).collect()
    }
}

impl TaskFile {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse { path: origin.to_path_buf(), message: e.to_string() })
    }

    pub fn build(&self) -> Result<LoadedTasks> {
        let vocab = Arc::new(match &self.symbols {
            Some(s) => Vocabulary::new(s)?,
            None => Vocabulary::standard(),
        });
        if self.max_len == 0 {
            return Err(Error::Config("task max_len must be >= 1".into()));
        }
        if self.sources.is_empty() {
            return Err(Error::Config(format!("task `{}` has no sources", self.name)));
        }
        let mut reg = OracleRegistry::new(vocab.clone(), self.max_len);
        for o in &self.oracles {
            match (&o.base, o.terms.is_empty()) {
                (Some(base), true) => reg.define_affine(&o.id, base, o.scale, o.offset)?,
                (None, false) => {
                    let terms: Vec<(&str, f64)> = o.terms.iter().map(|t| (t.oracle.as_str(), t.weight)).collect();
                    reg.define_linear(&o.id, &terms, o.offset)?
                }
                _ => {
                    return Err(Error::Config(format!("oracle `{}` needs exactly one of `base` or `terms`", o.id)))
                }
            }
        }
        for p in &self.properties {
            if reg.get(&p.oracle_id).is_err() {
                reg.resolve(&p.oracle_id)?;
            }
        }
        let width = self.fingerprint_bits.unwrap_or(DEFAULT_FP_WIDTH);
        let tasks = self
            .sources
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let toks = vocab.parse(&s.tokens)?;
                TaskSpec::new(&format!("{}/{i}", self.name), i, toks, self.properties.clone(), &reg, width)
                    .map(Arc::new)
            })
            .collect::<Result<TaskSet>>()?;
        Ok(LoadedTasks { name: self.name.clone(), registry: Arc::new(reg), tasks })
    }
}

/// Where a task reference points.
pub fn resolve_task_ref(reference: &str, base_dir: &Path) -> TaskRef {
    match reference.strip_prefix("builtin:") {
        Some(name) => TaskRef::Builtin(name.to_string()),
        None => TaskRef::File(base_dir.join(reference)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskRef {
    Builtin(String),
    File(PathBuf),
}

pub fn load_tasks(reference: &TaskRef) -> Result<LoadedTasks> {
    match reference {
        TaskRef::Builtin(name) => {
            let text = BUILTIN_TASKS
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| *t)
                .ok_or_else(|| Error::Unknown { kind: "builtin task", name: name.clone() })?;
            TaskFile::parse(text, Path::new(&format!("builtin:{name}")))?.build()
        }
        TaskRef::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            TaskFile::parse(&text, path)?.build()
        }
    }
}
