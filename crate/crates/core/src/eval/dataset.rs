use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stance::Stance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

/// One claim/perspective pair with its gold stance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExamplePair {
    pub id: String,
    pub claim: String,
    pub perspective: String,
    pub label: Stance,
    pub split: Split,
}

#[derive(Deserialize)]
struct RawPair {
    id: String,
    claim: String,
    perspective: String,
    label: String,
    split: String,
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Vec<ExamplePair>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io("<dataset>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::DatasetParse { line: lineno, message };
        let raw: RawPair = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let label = match raw.label.as_str() {
            "support" => Stance::Support,
            "oppose" => Stance::Oppose,
            other => return Err(bad(format!("unknown label `{other}`"))),
        };
        let split = match raw.split.as_str() {
            "train" => Split::Train,
            "dev" => Split::Dev,
            "test" => Split::Test,
            other => return Err(bad(format!("unknown split `{other}`"))),
        };
        if !seen.insert(raw.id.clone()) {
            return Err(Error::DuplicateId(raw.id));
        }
        out.push(ExamplePair {
            id: raw.id,
            claim: raw.claim,
            perspective: raw.perspective,
            label,
            split,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<ExamplePair>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(std::io::BufReader::new(file))
}

pub fn write_dataset<W: Write>(mut out: W, pairs: &[ExamplePair]) -> Result<()> {
    for p in pairs {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n").map_err(|e| Error::io("<dataset>", e))?;
    }
    Ok(())
}

pub fn save_dataset(path: impl AsRef<Path>, pairs: &[ExamplePair]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_dataset(&mut w, pairs)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn split_of(pairs: &[ExamplePair], split: Split) -> Vec<ExamplePair> {
    pairs.iter().filter(|p| p.split == split).cloned().collect()
}
