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

#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>

#include "dynamark/audio/features.hpp"

namespace dynamark::audio {

enum class FeatureKind : std::uint8_t { kBssl = 0, kLogMel = 1 };

inline constexpr std::uint32_t kFeatureFileVersion = 1;

struct FeatureFile {
  FeatureKind kind = FeatureKind::kBssl;
  Matrix values;  // rows = bands, cols = frames
};

// Little-endian "DYNF" file; written to a temporary sibling then renamed.
void write_features(const std::filesystem::path& path, const FeatureFile& features);

// Throws SchemaError on bad magic, kind, or payload size; VersionError on an
// unknown version.
FeatureFile read_features(const std::filesystem::path& path);

// "bssl" or "logmel".
std::string_view feature_kind_name(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view name);

// STFT followed by the chosen feature; `wav` must be at 22050 Hz.
FeatureFile extract_features(const Waveform& wav, FeatureKind kind);

}  // namespace dynamark::audio
