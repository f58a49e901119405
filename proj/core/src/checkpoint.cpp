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

#include <mixsafe/checkpoint.hpp>
#include <mixsafe/errors.hpp>

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace mixsafe {
namespace autodiff {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'M', 'X', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
  "checkpoint I/O assumes a little-endian host");

//==============================================================================
template<typename T>
void write_raw(std::ostream& out, const T& value)
{
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

//==============================================================================
template<typename T>
T read_raw(std::istream& in, const std::filesystem::path& file)
{
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in)
    throw CheckpointError("truncated checkpoint " + file.string());
  return value;
}

} // anonymous namespace

//==============================================================================
const MlpParams& Checkpoint::network(const std::string& name) const
{
  for (const auto& n : networks)
  {
    if (n.name == name)
      return n.params;
  }
  throw LookupError("checkpoint has no network named '" + name + "'");
}

//==============================================================================
void save_checkpoint(
  const std::filesystem::path& file, const Checkpoint& checkpoint)
{
  json header;
  header["networks"] = json::array();
  std::uint64_t payload = 0;
  for (const auto& n : checkpoint.networks)
  {
    json layers = json::array();
    for (const auto& l : n.params.layers)
    {
      layers.push_back({
        {"in", l.weight.cols()}, {"out", l.weight.rows()},
        {"activation", std::string(to_string(l.activation))}});
      payload += static_cast<std::uint64_t>(l.weight.size() + l.bias.size());
    }
    header["networks"].push_back(
      {{"name", n.name}, {"seed", n.params.seed}, {"layers", layers}});
  }
  header["meta"] = json::parse(checkpoint.meta_json);
  header["payload_doubles"] = payload;

  const std::string text = header.dump();
  std::ofstream out(file, std::ios::binary);
  if (!out)
    throw CheckpointError("cannot write checkpoint " + file.string());

  out.write(kMagic, 4);
  write_raw(out, kVersion);
  write_raw(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));

  for (const auto& n : checkpoint.networks)
  {
    for (const auto& l : n.params.layers)
    {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      {
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
          write_raw(out, l.weight(r, c));
      }
      for (Eigen::Index i = 0; i < l.bias.size(); ++i)
        write_raw(out, l.bias[i]);
    }
  }

  if (!out)
    throw CheckpointError("failed writing checkpoint " + file.string());
}

//==============================================================================
Checkpoint load_checkpoint(const std::filesystem::path& file)
{
  std::ifstream in(file, std::ios::binary);
  if (!in)
    throw CheckpointError("cannot open checkpoint " + file.string());

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw CheckpointError("not a checkpoint file: " + file.string());

  const auto version = read_raw<std::uint32_t>(in, file);
  if (version != kVersion)
  {
    throw CheckpointError(
      "unsupported checkpoint version " + std::to_string(version));
  }

  const auto length = read_raw<std::uint64_t>(in, file);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in)
    throw CheckpointError("truncated checkpoint header in " + file.string());

  Checkpoint checkpoint;
  try
  {
    const json header = json::parse(text);
    checkpoint.meta_json = header.at("meta").dump();
    for (const auto& n : header.at("networks"))
    {
      NamedNetwork net;
      net.name = n.at("name").get<std::string>();
      net.params.seed = n.at("seed").get<std::uint64_t>();
      for (const auto& l : n.at("layers"))
      {
        DenseLayer layer;
        const auto rows = l.at("out").get<Eigen::Index>();
        const auto cols = l.at("in").get<Eigen::Index>();
        layer.weight.resize(rows, cols);
        layer.bias.resize(rows);
        layer.activation =
          activation_from_string(l.at("activation").get<std::string>());
        net.params.layers.push_back(std::move(layer));
      }
      checkpoint.networks.push_back(std::move(net));
    }
  }
  catch (const json::exception& e)
  {
    throw CheckpointError(
      "malformed checkpoint header in " + file.string() + ": " + e.what());
  }

  for (auto& n : checkpoint.networks)
  {
    for (auto& l : n.params.layers)
    {
      for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      {
        for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
          l.weight(r, c) = read_raw<double>(in, file);
      }
      for (Eigen::Index i = 0; i < l.bias.size(); ++i)
        l.bias[i] = read_raw<double>(in, file);
    }
  }

  if (in.peek() != std::char_traits<char>::eof())
    throw CheckpointError("trailing bytes in checkpoint " + file.string());

  return checkpoint;
}

} // namespace autodiff
} // namespace mixsafe
