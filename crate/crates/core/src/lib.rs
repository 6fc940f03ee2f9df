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

//! Legal judgment prediction pipeline: corpus construction, labeling,
//! dataset splits, chunked inputs, prompting, evaluation and annotation.

pub mod annotate;
pub mod chunker;
pub mod datasets;
pub mod ingest;
pub mod labeler;
pub mod metrics;
pub mod prompts;
pub mod provenance;
pub mod report;
pub mod synthetic;
pub mod text;
