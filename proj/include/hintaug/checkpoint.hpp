// Copyright 2026 The hintaug Authors
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

#pragma once

// HAC1 container:
//
//   "HAC1" | u32 version | u64 header length | UTF-8 JSON header
//   | float64 payload (little-endian) | u64 FNV-1a of the payload
//
// All integers are little-endian. The header's "tensors" array lists each
// tensor's name, shape, byte offset into the payload and value count.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"

#include "hintaug/pet.hpp"
#include "hintaug/vit.hpp"

namespace hintaug {

inline constexpr std::uint32_t hac1_version = 1;

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_payload(const NamedTensors& tensors);
std::string hash_to_hex(std::uint64_t hash);

struct Hac1Contents {
    std::uint32_t version = hac1_version;
    nlohmann::json meta; // header without the tensor directory
    NamedTensors tensors;
    std::uint64_t payload_hash = 0;
};

std::vector<std::uint8_t> encode_hac1(const nlohmann::json& meta, const NamedTensors& tensors);
// Throws ParseError on bad magic, version, layout or hash mismatch.
Hac1Contents decode_hac1(std::span<const std::uint8_t> bytes);

nlohmann::json to_json(const ViTConfig& config);
ViTConfig vit_config_from_json(const nlohmann::json& j);

struct Checkpoint {
    ViT model;
    std::vector<double> epoch_loss;
    std::vector<double> epoch_accuracy;

    std::uint64_t hash() const { return model.content_hash(); }
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// A tuned artifact: PET tensors under the `pet.` namespace plus the hash of
// the backbone they were trained against.
struct PetArtifact {
    PetModule pet;
    ViTConfig config;
    std::uint64_t backbone_hash = 0;
};

std::vector<std::uint8_t> encode_pet(const PetModule& pet, const ViT& backbone);
PetArtifact decode_pet(std::span<const std::uint8_t> bytes);
void save_pet(const std::filesystem::path& path, const PetModule& pet, const ViT& backbone);
PetArtifact load_pet(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

} // namespace hintaug
