/*
 * Copyright (C) 2026 The mixsafe Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#ifndef MIXSAFE__CHECKPOINT_HPP
#define MIXSAFE__CHECKPOINT_HPP

#include <mixsafe/mlp.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace mixsafe {
namespace autodiff {

//==============================================================================
struct NamedNetwork
{
  std::string name;
  MlpParams params;

  bool operator==(const NamedNetwork&) const = default;
};

//==============================================================================
/// A set of MLPs plus a free-form JSON object of metadata.
///
/// File layout (all integers little-endian):
///   bytes 0..3    magic "MXCK"
///   bytes 4..7    uint32 format version (1)
///   bytes 8..15   uint64 header length N
///   next N bytes  UTF-8 JSON header:
///                   {"networks": [{"name", "seed",
///                                  "layers": [{"in", "out", "activation"}]}],
///                    "meta": {...}, "payload_doubles": count}
///   remainder     IEEE-754 binary64 values, little-endian: for each network,
///                 for each layer, the weight in row-major order then the bias.
struct Checkpoint
{
  std::vector<NamedNetwork> networks;

  /// Serialized JSON object, "{}" when empty.
  std::string meta_json = "{}";

  /// Throws LookupError when no network has the given name.
  const MlpParams& network(const std::string& name) const;

  bool operator==(const Checkpoint&) const = default;
};

/// Throws CheckpointError on I/O failure.
void save_checkpoint(const std::filesystem::path& file, const Checkpoint& checkpoint);

/// Throws CheckpointError when the file is missing, truncated or malformed.
Checkpoint load_checkpoint(const std::filesystem::path& file);

} // namespace autodiff
} // namespace mixsafe

#endif // MIXSAFE__CHECKPOINT_HPP
