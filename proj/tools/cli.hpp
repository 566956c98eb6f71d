// Copyright 2026 The qsimkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/**
 * @file
 * The qsimkit command line: simulate, pathfind, contract, bench, convert.
 */
#pragma once

#include "qsimkit/tn.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace qsimkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitVerify = 2;
inline constexpr int kExitInfeasible = 3;

/// Default worker count for commands that take --workers.
inline constexpr const char* kWorkersEnv = "QSIMKIT_WORKERS";

/// Runs one command. `args` excludes the program name. Reports go to `out`
/// (or the --report file), diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Network file: a JSON document {"format": "qsimkit-network", "version": 1,
/// "expression", "shapes", "constant", "data_file"} with the tensors' data
/// in a raw side file, concatenated in tensor order, each row-major and
/// stored as little-endian (re, im) float64 pairs. "data_file" is relative
/// to the JSON file and may be absent for structure-only networks.
void save_network(const TensorNetwork& tn, const std::string& json_path);
/// Structure-only networks get seeded random data when `fill` is set.
TensorNetwork load_network(const std::string& json_path, bool fill, std::uint64_t seed);

/// Raw tensor file: 8-byte little-endian element count, then (re, im)
/// float64 pairs.
void save_raw(const TensorData& data, const std::string& path);
TensorData load_raw(const std::string& path);

/// FNV-1a over the raw bytes, as 16 hex digits.
std::string digest(const TensorData& data);

}  // namespace qsimkit::cli
