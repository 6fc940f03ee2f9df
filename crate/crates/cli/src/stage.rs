// Copyright 2026 The ljp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Upstream checks and manifest writing shared by every pipeline command.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use ljp_core::provenance::{config_digest, file_digest, merge_lineage, ArtifactRef, LineageConflict, StageManifest};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::CliError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One running command: the inputs it has checked and the lineage they carry.
pub struct Stage<'a> {
    name: &'static str,
    run_dir: &'a Path,
    force: bool,
    inputs: Vec<ArtifactRef>,
    lineages: Vec<BTreeMap<String, String>>,
    /// Artifact digests as seen by the manifests read so far.
    seen: HashMap<String, Seen>,
}

struct Seen {
    seer: String,
    digest: String,
    current: bool,
}

impl<'a> Stage<'a> {
    pub fn new(name: &'static str, run_dir: &'a Path, force: bool) -> Result<Self, CliError> {
        fs::create_dir_all(run_dir).map_err(|e| CliError::io(run_dir, e))?;
        Ok(Stage {
            name,
            run_dir,
            force,
            inputs: Vec::new(),
            lineages: Vec::new(),
            seen: HashMap::new(),
        })
    }

    pub fn run_dir(&self) -> &Path {
        self.run_dir
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.run_dir.join(rel)
    }

    fn tolerate(&self, err: CliError) -> Result<(), CliError> {
        if self.force {
            log::warn!("{err} (continuing because of --force)");
            Ok(())
        } else {
            Err(err)
        }
    }

    /// Remember which digest of `path` the stage `seer` worked from.
    /// `current` marks the digest of the file on disk now.
    fn note_seen(&mut self, seer: &str, path: &str, digest: &str, current: bool) -> Result<(), CliError> {
        match self.seen.get(path) {
            Some(prev) if prev.digest != digest => {
                let rerun = if prev.current { seer } else { prev.seer.as_str() };
                let err = CliError::Inconsistent {
                    stage: rerun.to_string(),
                    artifact: path.to_string(),
                };
                self.tolerate(err)
            }
            Some(_) => Ok(()),
            None => {
                self.seen.insert(
                    path.to_string(),
                    Seen {
                        seer: seer.to_string(),
                        digest: digest.to_string(),
                        current,
                    },
                );
                Ok(())
            }
        }
    }

    /// Check an artifact written by `upstream` and return its path.
    pub fn input(&mut self, upstream: &str, rel: &str) -> Result<PathBuf, CliError> {
        let missing = || CliError::MissingUpstream {
            stage: upstream.to_string(),
            artifact: rel.to_string(),
        };
        let manifest_path = StageManifest::path_for(self.run_dir, upstream);
        let path = self.path(rel);
        if !manifest_path.exists() || !path.exists() {
            return Err(missing());
        }
        let manifest = StageManifest::read(&manifest_path)?;
        let recorded = manifest.output(rel).ok_or_else(missing)?;
        let actual = file_digest(&path)?;
        if actual != recorded.sha256 {
            self.tolerate(CliError::StaleInput {
                stage: upstream.to_string(),
                artifact: rel.to_string(),
            })?;
        }
        self.note_seen(upstream, rel, &actual, true)?;
        for inp in manifest.inputs.iter().filter(|i| i.stage.is_some()) {
            self.note_seen(upstream, &inp.path, &inp.sha256, false)?;
        }
        self.inputs.push(ArtifactRef {
            path: rel.to_string(),
            sha256: actual,
            stage: Some(upstream.to_string()),
        });
        self.lineages.push(manifest.lineage);
        Ok(path)
    }

    /// Record a file from outside the run directory.
    pub fn external(&mut self, path: &Path) -> Result<(), CliError> {
        if !path.exists() {
            return Err(CliError::Io {
                path: path.display().to_string(),
                message: "not found".into(),
            });
        }
        let sha256 = if path.is_dir() {
            dir_digest(path)?
        } else {
            file_digest(path)?
        };
        self.inputs.push(ArtifactRef {
            path: path.display().to_string(),
            sha256,
            stage: None,
        });
        Ok(())
    }

    /// Write the manifest. `outputs` are paths relative to the run directory.
    pub fn finish<S: Serialize>(self, settings: &S, seed: u64, outputs: &[String]) -> Result<StageManifest, CliError> {
        let mut lineage = match merge_lineage(self.lineages.iter()) {
            Ok(l) => l,
            Err(c) => {
                self.tolerate(mismatch(c))?;
                self.lineages
                    .iter()
                    .flatten()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect()
            }
        };
        let settings = serde_json::to_value(settings).expect("settings serialize");
        let digest = config_digest(&settings);
        lineage.insert(self.name.to_string(), digest.clone());
        let out: Result<Vec<ArtifactRef>, CliError> = outputs
            .iter()
            .map(|rel| {
                Ok(ArtifactRef {
                    path: rel.clone(),
                    sha256: file_digest(&self.run_dir.join(rel))?,
                    stage: None,
                })
            })
            .collect();
        let manifest = StageManifest {
            stage: self.name.to_string(),
            tool_version: TOOL_VERSION.to_string(),
            config_digest: digest,
            settings,
            seed: Some(seed),
            inputs: self.inputs,
            outputs: out?,
            lineage,
        };
        manifest.write(self.run_dir)?;
        Ok(manifest)
    }

    /// Check lineage consistency before doing any work.
    pub fn check_lineage(&self) -> Result<(), CliError> {
        match merge_lineage(self.lineages.iter()) {
            Ok(_) => Ok(()),
            Err(c) => self.tolerate(mismatch(c)),
        }
    }
}

fn mismatch(c: LineageConflict) -> CliError {
    let short = |d: &str| d[..12.min(d.len())].to_string();
    CliError::ConfigMismatch {
        left: short(&c.left),
        right: short(&c.right),
        stage: c.stage,
    }
}

fn dir_digest(dir: &Path) -> Result<String, CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    let mut buf = String::new();
    for p in entries {
        buf.push_str(&format!(
            "{}  {}\n",
            file_digest(&p)?,
            p.file_name().unwrap().to_string_lossy()
        ));
    }
    Ok(ljp_core::text::sha256_hex(buf))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    let f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| CliError::Record {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CliError> {
    let mut s = String::new();
    for it in items {
        s.push_str(&serde_json::to_string(it).expect("record serializes"));
        s.push('\n');
    }
    write_file(path, &s)
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
