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

//! Stage manifests: which artifacts a pipeline step read and wrote, their
//! digests, and the digest of the settings that produced them.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Error)]
pub enum ProvenanceError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bad manifest {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub fn file_digest(path: &Path) -> Result<String, ProvenanceError> {
    let err = |source| ProvenanceError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = File::open(path).map_err(err)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(err)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Digest of a serializable settings value (canonical JSON).
pub fn config_digest<T: Serialize>(value: &T) -> String {
    crate::text::sha256_hex(serde_json::to_vec(value).expect("settings serialize"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    /// Path relative to the run directory.
    pub path: String,
    pub sha256: String,
    /// Stage that wrote the artifact, for inputs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub tool_version: String,
    pub config_digest: String,
    pub settings: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub inputs: Vec<ArtifactRef>,
    pub outputs: Vec<ArtifactRef>,
    /// Config digest of this stage and of every stage upstream of it.
    #[serde(default)]
    pub lineage: BTreeMap<String, String>,
}

/// Two inputs that were produced under different settings of one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineageConflict {
    pub stage: String,
    pub left: String,
    pub right: String,
}

/// Union of upstream lineages; fails on the first stage recorded with two
/// different config digests.
pub fn merge_lineage<'a, I>(lineages: I) -> Result<BTreeMap<String, String>, LineageConflict>
where
    I: IntoIterator<Item = &'a BTreeMap<String, String>>,
{
    let mut merged: BTreeMap<String, String> = BTreeMap::new();
    for l in lineages {
        for (stage, digest) in l {
            match merged.get(stage) {
                Some(prev) if prev != digest => {
                    return Err(LineageConflict {
                        stage: stage.clone(),
                        left: prev.clone(),
                        right: digest.clone(),
                    })
                }
                Some(_) => {}
                None => {
                    merged.insert(stage.clone(), digest.clone());
                }
            }
        }
    }
    Ok(merged)
}

impl StageManifest {
    pub fn path_for(run_dir: &Path, stage: &str) -> PathBuf {
        run_dir.join(format!("{stage}{MANIFEST_SUFFIX}"))
    }

    pub fn write(&self, run_dir: &Path) -> Result<PathBuf, ProvenanceError> {
        let path = Self::path_for(run_dir, &self.stage);
        let body = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(&path, body).map_err(|source| ProvenanceError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self, ProvenanceError> {
        let s = fs::read_to_string(path).map_err(|source| ProvenanceError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&s).map_err(|e| ProvenanceError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn output(&self, rel: &str) -> Option<&ArtifactRef> {
        self.outputs.iter().find(|a| a.path == rel)
    }
}

/// One problem found while walking the manifests of a run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChainIssue {
    pub stage: String,
    pub artifact: String,
    pub problem: String,
}

/// Check every manifest in `run_dir`: outputs still match their digests,
/// and every input digest matches what the producing stage recorded.
pub fn verify_chain(run_dir: &Path) -> Result<(Vec<StageManifest>, Vec<ChainIssue>), ProvenanceError> {
    let mut manifests = Vec::new();
    let entries = fs::read_dir(run_dir).map_err(|source| ProvenanceError::Io {
        path: run_dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with(MANIFEST_SUFFIX))
        })
        .collect();
    paths.sort();
    for p in paths {
        manifests.push(StageManifest::read(&p)?);
    }
    let mut issues = Vec::new();
    for m in &manifests {
        for out in &m.outputs {
            match file_digest(&run_dir.join(&out.path)) {
                Ok(d) if d == out.sha256 => {}
                Ok(_) => issues.push(ChainIssue {
                    stage: m.stage.clone(),
                    artifact: out.path.clone(),
                    problem: "output changed since it was written".into(),
                }),
                Err(_) => issues.push(ChainIssue {
                    stage: m.stage.clone(),
                    artifact: out.path.clone(),
                    problem: "output missing".into(),
                }),
            }
        }
        for input in &m.inputs {
            let Some(stage) = &input.stage else { continue };
            let producer = manifests.iter().find(|p| &p.stage == stage);
            let recorded = producer.and_then(|p| p.output(&input.path));
            match recorded {
                None => issues.push(ChainIssue {
                    stage: m.stage.clone(),
                    artifact: input.path.clone(),
                    problem: format!("no manifest from `{stage}` lists this input"),
                }),
                Some(r) if r.sha256 != input.sha256 => issues.push(ChainIssue {
                    stage: m.stage.clone(),
                    artifact: input.path.clone(),
                    problem: format!("input digest differs from the one `{stage}` recorded"),
                }),
                Some(_) => {}
            }
        }
    }
    Ok((manifests, issues))
}
