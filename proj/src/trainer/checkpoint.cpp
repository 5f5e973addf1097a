// Copyright 2026 The Dynamark Authors. All Rights Reserved.
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

#include "dynamark/trainer/checkpoint.hpp"

#include <zlib.h>

#include "dynamark/common/error.hpp"
#include "dynamark/common/io.hpp"

namespace dynamark::trainer {

namespace {

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

constexpr std::size_t kHeaderBytes = 12;  // magic, version, checksum

}  // namespace

Checkpoint capture(const model::Network& net, nlohmann::json meta) {
  Checkpoint cp;
  cp.model = net.config();
  cp.meta = std::move(meta);
  for (const auto& [name, t] : net.params()) {
    cp.tensors[name] = {t.shape(), std::vector<float>(t.data().begin(), t.data().end())};
  }
  for (const auto& [name, bn] : net.bn_states()) {
    cp.tensors[name + ".running_mean"] = {{bn.running_mean.size()}, bn.running_mean};
    cp.tensors[name + ".running_var"] = {{bn.running_var.size()}, bn.running_var};
  }
  return cp;
}

void restore(model::Network& net, const Checkpoint& cp) {
  std::size_t expected = net.params().size() + 2 * net.bn_states().size();
  if (cp.tensors.size() != expected) {
    throw SchemaError("checkpoint holds " + std::to_string(cp.tensors.size()) + " tensors, the model needs " +
                      std::to_string(expected));
  }
  auto find = [&](const std::string& name, const tensor::Shape& shape) -> const NamedTensor& {
    const auto it = cp.tensors.find(name);
    if (it == cp.tensors.end()) throw SchemaError("checkpoint is missing tensor '" + name + "'");
    if (it->second.shape != shape) {
      throw SchemaError("checkpoint tensor '" + name + "' has shape " + tensor::to_string(it->second.shape) +
                        ", expected " + tensor::to_string(shape));
    }
    return it->second;
  };
  // Validate everything before mutating the network.
  for (const auto& [name, t] : net.params()) find(name, t.shape());
  for (const auto& [name, bn] : net.bn_states()) {
    find(name + ".running_mean", {bn.running_mean.size()});
    find(name + ".running_var", {bn.running_var.size()});
  }
  for (auto& [name, t] : net.params()) {
    const auto& src = cp.tensors.at(name).values;
    std::copy(src.begin(), src.end(), t.mutable_data().begin());
  }
  for (auto& [name, bn] : net.bn_states()) {
    bn.running_mean = cp.tensors.at(name + ".running_mean").values;
    bn.running_var = cp.tensors.at(name + ".running_var").values;
  }
}

model::Network instantiate(const Checkpoint& cp) {
  model::Network net(cp.model, 0);
  restore(net, cp);
  return net;
}

std::vector<std::uint8_t> serialize(const Checkpoint& cp) {
  io::ByteWriter body;
  nlohmann::json config{{"model", cp.model}, {"meta", cp.meta}};
  const std::string blob = config.dump();
  body.u32(static_cast<std::uint32_t>(blob.size()));
  body.raw(blob);
  body.u32(static_cast<std::uint32_t>(cp.tensors.size()));
  for (const auto& [name, t] : cp.tensors) {
    if (name.size() > 0xffff) throw SchemaError("checkpoint: tensor name too long");
    body.u16(static_cast<std::uint16_t>(name.size()));
    body.raw(name);
    body.u8(static_cast<std::uint8_t>(t.shape.size()));
    for (auto d : t.shape) body.u32(static_cast<std::uint32_t>(d));
    body.f32(t.values);
  }
  io::ByteWriter out;
  out.raw("DYNC");
  out.u32(cp.version);
  out.u32(crc32_of(body.bytes()));
  auto& bytes = out.bytes();
  bytes.insert(bytes.end(), body.bytes().begin(), body.bytes().end());
  return std::move(bytes);
}

Checkpoint deserialize(std::span<const std::uint8_t> bytes, const std::string& source) {
  if (bytes.size() < kHeaderBytes) throw ChecksumError(source + ": file too short to be a checkpoint");
  io::ByteReader header(bytes.first(kHeaderBytes), source);
  if (header.raw(4) != "DYNC") throw SchemaError(source + ": not a checkpoint (bad magic)");
  const std::uint32_t version = header.u32();
  if (version != kCheckpointVersion) {
    throw VersionError(source + ": checkpoint format version " + std::to_string(version) +
                       " is not supported (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  }
  const std::uint32_t checksum = header.u32();
  const auto body = bytes.subspan(kHeaderBytes);
  if (crc32_of(body) != checksum) throw ChecksumError(source + ": checksum mismatch (file corrupt or truncated)");

  Checkpoint cp;
  cp.version = version;
  io::ByteReader r(body, source);
  try {
    const auto config = nlohmann::json::parse(r.raw(r.u32()));
    cp.model = config.at("model").get<model::ModelConfig>();
    cp.meta = config.value("meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(source + ": bad config blob: " + e.what());
  }
  cp.model.validate();
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.raw(r.u16());
    NamedTensor t;
    const std::uint8_t rank = r.u8();
    for (std::uint8_t d = 0; d < rank; ++d) t.shape.push_back(r.u32());
    t.values.resize(tensor::numel(t.shape));
    r.f32(t.values);
    if (!cp.tensors.emplace(name, std::move(t)).second) throw SchemaError(source + ": duplicate tensor '" + name + "'");
  }
  if (r.remaining() != 0) throw SchemaError(source + ": trailing bytes after tensors");
  return cp;
}

void save_checkpoint(const Checkpoint& cp, const std::filesystem::path& path) {
  io::write_file_atomic(path, serialize(cp));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return deserialize(io::read_file(path), path.string());
}

}  // namespace dynamark::trainer
