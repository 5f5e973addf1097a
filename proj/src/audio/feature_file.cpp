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

#include "dynamark/audio/feature_file.hpp"

#include <string>

#include "dynamark/common/error.hpp"
#include "dynamark/common/io.hpp"

namespace dynamark::audio {

void write_features(const std::filesystem::path& path, const FeatureFile& features) {
  io::ByteWriter w;
  w.raw("DYNF");
  w.u32(kFeatureFileVersion);
  w.u8(static_cast<std::uint8_t>(features.kind));
  w.u32(static_cast<std::uint32_t>(features.values.rows));
  w.u32(static_cast<std::uint32_t>(features.values.cols));
  w.f32(features.values.values);
  io::write_file_atomic(path, w.bytes());
}

FeatureFile read_features(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes, "feature file " + path.string());
  if (r.raw(4) != "DYNF") throw SchemaError("feature file " + path.string() + ": bad magic");
  const std::uint32_t version = r.u32();
  if (version != kFeatureFileVersion) {
    throw VersionError("feature file " + path.string() + ": unsupported version " + std::to_string(version));
  }
  const std::uint8_t kind = r.u8();
  if (kind > 1) throw SchemaError("feature file " + path.string() + ": unknown kind " + std::to_string(kind));
  const std::uint32_t rows = r.u32();
  const std::uint32_t cols = r.u32();
  const std::size_t expected = static_cast<std::size_t>(rows) * cols * sizeof(float);
  if (r.remaining() != expected) {
    throw SchemaError("feature file " + path.string() + ": payload is " + std::to_string(r.remaining()) +
                      " bytes, expected " + std::to_string(expected));
  }
  FeatureFile out;
  out.kind = static_cast<FeatureKind>(kind);
  out.values = Matrix(rows, cols);
  r.f32(out.values.values);
  return out;
}

std::string_view feature_kind_name(FeatureKind kind) { return kind == FeatureKind::kLogMel ? "logmel" : "bssl"; }

FeatureKind parse_feature_kind(std::string_view name) {
  if (name == "bssl") return FeatureKind::kBssl;
  if (name == "logmel") return FeatureKind::kLogMel;
  throw ConfigError("unknown feature '" + std::string(name) + "' (expected bssl or logmel)");
}

FeatureFile extract_features(const Waveform& wav, FeatureKind kind) {
  const auto spec = stft_power(wav);
  FeatureFile out;
  out.kind = kind;
  out.values = kind == FeatureKind::kLogMel ? log_mel(spec).values : bssl(spec).sone;
  return out;
}

}  // namespace dynamark::audio
