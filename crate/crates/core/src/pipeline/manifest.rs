//! `manifest.tsv`: one line per completed step with the content hashes it saw and wrote.
//!
//! Columns are `step`, `config_hash`, `inputs` and `outputs`; the last two are
//! `name=sha256` lists joined by `;`.

use std::collections::BTreeMap;
use std::path::Path;

use super::PipelineError;

pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const MANIFEST_HEADER: &str = "step\tconfig_hash\tinputs\toutputs";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    entries: BTreeMap<String, ManifestEntry>,
}

fn render(m: &BTreeMap<String, String>) -> String {
    m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn parse_map(s: &str, line: usize) -> Result<BTreeMap<String, String>, PipelineError> {
    s.split(';')
        .filter(|x| !x.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| PipelineError::Data(format!("{MANIFEST_FILE} line {line}: bad hash list")))
        })
        .collect()
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Self::default()),
            Err(e) => return Err(PipelineError::io(&path, e)),
        };
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if i == 0 {
                if line != MANIFEST_HEADER {
                    return Err(PipelineError::Data(format!("{MANIFEST_FILE}: unexpected header")));
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let [step, config_hash, inputs, outputs] = cols[..] else {
                return Err(PipelineError::Data(format!("{MANIFEST_FILE} line {}: expected 4 columns", i + 1)));
            };
            entries.insert(
                step.to_string(),
                ManifestEntry {
                    config_hash: config_hash.to_string(),
                    inputs: parse_map(inputs, i + 1)?,
                    outputs: parse_map(outputs, i + 1)?,
                },
            );
        }
        Ok(Self { entries })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{MANIFEST_HEADER}\n");
        for (step, e) in &self.entries {
            s.push_str(&format!("{step}\t{}\t{}\t{}\n", e.config_hash, render(&e.inputs), render(&e.outputs)));
        }
        s
    }

    pub fn get(&self, step: &str) -> Option<&ManifestEntry> {
        self.entries.get(step)
    }

    pub fn insert(&mut self, step: &str, entry: ManifestEntry) {
        self.entries.insert(step.to_string(), entry);
    }

    pub fn steps(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// The step that last wrote `artifact`, with the hash it recorded.
    pub fn producer(&self, artifact: &str) -> Option<(&str, &str)> {
        self.entries.iter().find_map(|(step, e)| e.outputs.get(artifact).map(|h| (step.as_str(), h.as_str())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = Manifest::default();
        m.insert(
            "score",
            ManifestEntry {
                config_hash: "abc".into(),
                inputs: BTreeMap::from([("model.txt".into(), "11".into()), ("corpus.jsonl".into(), "22".into())]),
                outputs: BTreeMap::from([("scored.tsv".into(), "33".into())]),
            },
        );
        std::fs::write(dir.path().join(MANIFEST_FILE), m.to_text()).unwrap();
        let back = Manifest::load(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.producer("scored.tsv"), Some(("score", "33")));
        assert_eq!(back.producer("model.txt"), None);
    }

    #[test]
    fn missing_file_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(Manifest::load(dir.path()).unwrap(), Manifest::default());
    }
}
