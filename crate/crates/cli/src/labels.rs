//! Label files as class names (with a mapping) or as bare integer ids.

use std::path::Path;

use anyhow::{Context, Result};
use simseg::io::{self, ClassMapping};
use simseg::LabelSequence;

pub enum Codec {
    Named(ClassMapping),
    Numeric,
}

impl Codec {
    pub fn new(mapping: Option<&Path>) -> Result<Self> {
        Ok(match mapping {
            Some(p) => Codec::Named(ClassMapping::load(p)?),
            None => Codec::Numeric,
        })
    }

    pub fn load(&self, path: &Path) -> Result<LabelSequence> {
        match self {
            Codec::Named(m) => Ok(io::load_labels(path, m)?),
            Codec::Numeric => load_numeric(path),
        }
    }

    pub fn save(&self, path: &Path, labels: &LabelSequence) -> Result<()> {
        match self {
            Codec::Named(m) => io::save_labels(path, labels, m)?,
            Codec::Numeric => {
                io::save_labels(path, labels, &ClassMapping::identity(labels.class_count()))?
            }
        }
        Ok(())
    }

    pub fn class_id(&self, name: &str) -> Result<usize> {
        match self {
            Codec::Named(m) => m
                .id(name)
                .with_context(|| format!("class `{name}` not in the mapping")),
            Codec::Numeric => name
                .parse()
                .with_context(|| format!("`{name}` is not a class id")),
        }
    }

    pub fn class_name(&self, id: usize) -> String {
        match self {
            Codec::Named(m) => m.name(id).map_or_else(|| format!("#{id}"), str::to_string),
            Codec::Numeric => id.to_string(),
        }
    }
}

/// Class count is one past the largest id in the file.
pub fn load_numeric(path: &Path) -> Result<LabelSequence> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let largest = text
        .lines()
        .filter_map(|l| l.trim().parse::<usize>().ok())
        .max()
        .unwrap_or(0);
    Ok(io::parse_labels(
        &text,
        &ClassMapping::identity(largest + 1),
        path,
    )?)
}
