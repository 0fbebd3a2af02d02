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

// Flat `key = value` run configuration with dotted keys, `#` comments and a
// canonical sorted serialization.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hintaug/dataset.hpp"
#include "hintaug/harness.hpp"
#include "hintaug/vit.hpp"

namespace hintaug {

struct DataSpec {
    std::string source = "synthetic"; // synthetic | folder
    std::string path;                 // folder only
    std::size_t crop = 0;             // folder only, 0 disables cropping
    SyntheticSpec synthetic;
};

class RunConfig {
public:
    // Every known key at its default value.
    RunConfig();

    static RunConfig parse(const std::string& text, const std::string& origin = "<config>");
    static RunConfig load(const std::filesystem::path& path);
    static std::vector<std::string> known_keys();

    // Unknown keys and malformed values throw ConfigError. Values are stored
    // in canonical form, so serialize() does not depend on how they were written.
    void set(const std::string& key, const std::string& value);
    // "key=value"
    void apply_override(const std::string& assignment);

    const std::string& get(const std::string& key) const;
    double real(const std::string& key) const;
    std::size_t count(const std::string& key) const;
    long integer(const std::string& key) const;
    bool flag(const std::string& key) const;
    const std::map<std::string, std::string>& values() const { return values_; }

    std::string serialize() const;

    ViTConfig model_config() const;
    PetHyper pet_hyper() const;
    PetKind pet_kind() const;
    TrainConfig train_config() const;
    PretrainConfig pretrain_config() const;
    // prefix "data" (tuning domain) or "pretrain.data" (upstream domain).
    DataSpec data_spec(const std::string& prefix) const;
    Dataset load_dataset(const std::string& prefix) const;

    // Builds every typed view and checks cross-field constraints.
    void validate() const;

    bool operator==(const RunConfig&) const = default;

private:
    std::map<std::string, std::string> values_;
};

std::string canonical_number(double value);

} // namespace hintaug
