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

#ifndef MIXSAFE__TRACE_HPP
#define MIXSAFE__TRACE_HPP

#include <mixsafe/env.hpp>
#include <mixsafe/safety.hpp>

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace mixsafe {
namespace harness {

//==============================================================================
/// Streams one JSON object per line: a header, one record per step and a
/// closing record.
///
///   {"type": "header", "seed": s, "variant": v, "dt": dt, "max_steps": n,
///    "agents": [{"id", "kind", "route_length", "max_speed"}, ...]}
///   {"type": "step", "t": k, "agents": [...], "collisions": [...],
///    "arrivals": [...], "corrections": [...]}
///   {"type": "end", "steps_taken": n}
class TraceWriter
{
public:
  explicit TraceWriter(std::ostream& out) : _out(out) {}

  void header(
    const env::WorldState& world,
    const env::EpisodeConfig& config,
    std::uint64_t seed,
    const std::string& variant);

  /// world is the state after the step; actions are the filtered actions.
  void step(
    const env::WorldState& world,
    const env::JointAction& actions,
    const env::StepResult& result,
    const std::vector<safety::CorrectionRecord>& corrections);

  void end(const env::WorldState& world);

private:
  std::ostream& _out;
};

//==============================================================================
struct TraceSummary
{
  std::string variant;
  env::EpisodeTrace episode;
  std::size_t steps = 0;
  std::size_t corrections = 0;
  std::size_t rejected_corrections = 0;
  double total_reward = 0.0;
};

/// Rebuilds the episode record from a trace file. Throws ConfigError for a
/// malformed file.
TraceSummary read_trace(const std::filesystem::path& file);

} // namespace harness
} // namespace mixsafe

#endif // MIXSAFE__TRACE_HPP
