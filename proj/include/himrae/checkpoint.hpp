/**
 * Copyright 2026 The himrae Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "himrae/tensor.hpp"

namespace himrae {

inline constexpr char kCheckpointMagic[4] = {'H', 'M', 'R', 'A'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Binary checkpoint: magic "HMRA", u32 version, then one record per key
/// (u32 key length, key bytes, u32 rank, u32 dims[rank], f64 values), all
/// little-endian. Records are written in key order.
std::string encode_checkpoint(const std::map<std::string, Tensor>& records);
std::map<std::string, Tensor> decode_checkpoint(const std::string& bytes);

void save_checkpoint(const std::filesystem::path& path, const std::map<std::string, Tensor>& records);
std::map<std::string, Tensor> load_checkpoint(const std::filesystem::path& path);

}  // namespace himrae
