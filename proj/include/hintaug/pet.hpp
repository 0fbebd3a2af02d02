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

#include <cstdint>
#include <memory>
#include <string>

#include "hintaug/vit.hpp"

namespace hintaug {

enum class PetKind { adapter, lora, vpt };

std::string to_string(PetKind kind);
PetKind parse_pet_kind(const std::string& text);

struct PetHyper {
    std::size_t bottleneck = 8; // adapter
    std::size_t rank = 4;       // lora
    double alpha = 4.0;         // lora; delta is scaled by alpha / rank
    std::size_t prompts = 8;    // vpt

    bool operator==(const PetHyper&) const = default;
};

// Trainable tensors of one tuning method. Adapter and LoRA start as exact
// identities (zero up-projection / zero B); VPT prompts are random.
class PetModule {
public:
    static PetModule create(const ViTConfig& config, PetKind kind, const PetHyper& hyper, std::uint64_t seed);
    static PetModule from_named(const ViTConfig& config, PetKind kind, const PetHyper& hyper, NamedTensors params);

    PetKind kind() const { return kind_; }
    const PetHyper& hyper() const { return hyper_; }
    const NamedTensors& parameters() const { return params_; }
    NamedTensors& parameters() { return params_; }
    std::size_t parameter_count() const { return count_parameters(params_); }
    std::size_t num_prompts() const { return kind_ == PetKind::vpt ? hyper_.prompts : 0; }

    const Tensor& tensor(const std::string& name) const { return find_tensor(params_, name); }

    // Names are stable: pet.adapter.<l>.{down,down_bias,up,up_bias},
    // pet.lora.<l>.{q_a,q_b,v_a,v_b}, pet.vpt.prompts.
    static std::string name(PetKind kind, std::size_t layer, const char* leaf);

    // Throws AttachError when shapes do not fit `config`.
    void check_compatible(const ViTConfig& config) const;

    PetModule clone() const;

private:
    PetModule(PetKind kind, PetHyper hyper, NamedTensors params)
        : kind_(kind), hyper_(hyper), params_(std::move(params))
    {
    }

    PetKind kind_;
    PetHyper hyper_;
    NamedTensors params_;
};

// A frozen backbone with a tuning module routed into its forward pass. The
// backbone is only reachable through a pointer-to-const.
struct TunedModel {
    std::shared_ptr<const ViT> backbone;
    PetModule pet;

    ForwardResult forward(const Tensor& image, Tape& tape) const;
    ForwardResult forward(const Tensor& image) const;
};

TunedModel attach(std::shared_ptr<const ViT> backbone, PetKind kind, const PetHyper& hyper, std::uint64_t seed);
// Re-attaches an existing module (e.g. loaded from disk).
TunedModel attach(std::shared_ptr<const ViT> backbone, PetModule pet);
std::shared_ptr<const ViT> detach(const TunedModel& model);

// Handles to exactly the module's tensors, with requires_grad set.
NamedTensors trainable_parameters(PetModule& pet);

} // namespace hintaug
