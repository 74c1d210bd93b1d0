// Copyright 2026 The hqmm-rila Authors
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

// File formats. Models are JSON documents; observation matrices are headerless
// integer CSV; run traces are CSV with a JSON summary.
//
// Quantum model:  {"name", "n", "m", "w", "rho0": n x n of [re, im],
//                  "kraus": m*w blocks, each n x n of [re, im]}
// Classical HMM:  {"name", "A": n x n, "C": m x n, "x0": n}
//
// Doubles are written in shortest round-trip form, so read(write(x)) == x.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "hqmm/gen.hpp"
#include "hqmm/learn.hpp"

namespace hqmm::io {

std::string model_to_string(const HqmmModel& model);
std::string model_to_string(const StackedKraus& kraus, const CMatrixXd& rho0,
                            const std::string& name = "");
std::string hmm_to_string(const HmmSpec& spec);
std::string spec_to_string(const ModelSpec& spec);

/// Parses either document kind; throws IoError on malformed text and
/// ValidationError when the contents break the model invariants.
ModelSpec parse_spec(const std::string& text);
HqmmModel parse_model(const std::string& text);

std::string obs_to_csv(const ObsMatrix& y);
ObsMatrix parse_obs_csv(const std::string& text);

/// One row per (batch, iteration).
std::string iterations_to_csv(const RunRecord& rec);
/// One row per (batch, iteration): chosen index, then L_1..L_P, w_1..w_P and
/// the row pairs.
std::string resample_trace_to_csv(const ResampleTrace& trace);
/// One row per EM iteration of the best restart.
std::string em_trace_to_csv(const RunRecord& rec);
/// Final scores as sums and per-observation means. Wall time is excluded so
/// the document is reproducible byte for byte.
std::string summary_json(const RunRecord& rec, std::uint64_t seed);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace hqmm::io
