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

#include "hintaug/pet.hpp"

#include <cmath>

#include "hintaug/error.hpp"
#include "hintaug/rng.hpp"

namespace hintaug {

std::string to_string(PetKind kind)
{
    switch (kind) {
    case PetKind::adapter:
        return "adapter";
    case PetKind::lora:
        return "lora";
    case PetKind::vpt:
        return "vpt";
    }
    return "unknown";
}

PetKind parse_pet_kind(const std::string& text)
{
    if (text == "adapter") {
        return PetKind::adapter;
    }
    if (text == "lora") {
        return PetKind::lora;
    }
    if (text == "vpt") {
        return PetKind::vpt;
    }
    throw ConfigError("unknown PET kind '" + text + "' (expected adapter, lora or vpt)");
}

std::string PetModule::name(PetKind kind, std::size_t layer, const char* leaf)
{
    if (kind == PetKind::vpt) {
        return std::string("pet.vpt.") + leaf;
    }
    return "pet." + to_string(kind) + "." + std::to_string(layer) + "." + leaf;
}

namespace {

struct PetSlot {
    std::string name;
    Shape shape;
    enum Init { zero, random } init;
};

std::vector<PetSlot> pet_layout(const ViTConfig& c, PetKind kind, const PetHyper& hyper)
{
    const std::size_t d = c.embed_dim;
    std::vector<PetSlot> out;
    switch (kind) {
    case PetKind::adapter: {
        const std::size_t r = hyper.bottleneck;
        if (r == 0 || r >= d) {
            throw ConfigError("adapter bottleneck " + std::to_string(r) + " must be in [1, embed_dim="
                              + std::to_string(d) + ")");
        }
        for (std::size_t l = 0; l < c.num_layers; ++l) {
            out.push_back({PetModule::name(kind, l, "down"), {d, r}, PetSlot::random});
            out.push_back({PetModule::name(kind, l, "down_bias"), {r}, PetSlot::zero});
            out.push_back({PetModule::name(kind, l, "up"), {r, d}, PetSlot::zero});
            out.push_back({PetModule::name(kind, l, "up_bias"), {d}, PetSlot::zero});
        }
        break;
    }
    case PetKind::lora: {
        const std::size_t r = hyper.rank;
        if (r == 0 || r >= d) {
            throw ConfigError("LoRA rank " + std::to_string(r) + " must be in [1, embed_dim=" + std::to_string(d)
                              + ")");
        }
        if (!(hyper.alpha > 0.0)) {
            throw ConfigError("LoRA alpha must be positive");
        }
        for (std::size_t l = 0; l < c.num_layers; ++l) {
            out.push_back({PetModule::name(kind, l, "q_a"), {d, r}, PetSlot::random});
            out.push_back({PetModule::name(kind, l, "q_b"), {r, d}, PetSlot::zero});
            out.push_back({PetModule::name(kind, l, "v_a"), {d, r}, PetSlot::random});
            out.push_back({PetModule::name(kind, l, "v_b"), {r, d}, PetSlot::zero});
        }
        break;
    }
    case PetKind::vpt:
        if (hyper.prompts == 0) {
            throw ConfigError("VPT needs at least one prompt token");
        }
        out.push_back({PetModule::name(kind, 0, "prompts"), {hyper.prompts, d}, PetSlot::random});
        break;
    }
    return out;
}

} // namespace

PetModule PetModule::create(const ViTConfig& config, PetKind kind, const PetHyper& hyper, std::uint64_t seed)
{
    config.validate();
    Rng rng(seed);
    NamedTensors params;
    for (const PetSlot& slot : pet_layout(config, kind, hyper)) {
        Tensor t(slot.shape);
        if (slot.init == PetSlot::random) {
            // Down-projections and LoRA A see D inputs; prompts live in token space.
            const double stddev = kind == PetKind::vpt ? 0.02 : 1.0 / std::sqrt(static_cast<double>(slot.shape[0]));
            for (double& v : t.mutable_data()) {
                v = rng.truncated_normal(stddev);
            }
        }
        params.push_back({slot.name, t});
    }
    return PetModule(kind, hyper, std::move(params));
}

PetModule PetModule::from_named(const ViTConfig& config, PetKind kind, const PetHyper& hyper, NamedTensors params)
{
    NamedTensors ordered;
    for (const PetSlot& slot : pet_layout(config, kind, hyper)) {
        const Tensor* found = nullptr;
        for (const auto& p : params) {
            if (p.name == slot.name) {
                found = &p.tensor;
            }
        }
        if (!found) {
            throw AttachError("PET tensor '" + slot.name + "' missing");
        }
        if (found->shape() != slot.shape) {
            throw AttachError("PET tensor '" + slot.name + "' has shape " + shape_to_string(found->shape())
                              + ", expected " + shape_to_string(slot.shape));
        }
        ordered.push_back({slot.name, found->clone()});
    }
    if (ordered.size() != params.size()) {
        throw AttachError("unexpected extra tensors in PET module");
    }
    return PetModule(kind, hyper, std::move(ordered));
}

void PetModule::check_compatible(const ViTConfig& config) const
{
    std::vector<PetSlot> layout;
    try {
        layout = pet_layout(config, kind_, hyper_);
    } catch (const ConfigError& e) {
        throw AttachError(e.what());
    }
    if (layout.size() != params_.size()) {
        throw AttachError(to_string(kind_) + " module has " + std::to_string(params_.size())
                          + " tensors, backbone needs " + std::to_string(layout.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (params_[i].name != layout[i].name || params_[i].tensor.shape() != layout[i].shape) {
            throw AttachError("PET tensor '" + params_[i].name + "' " + shape_to_string(params_[i].tensor.shape())
                              + " incompatible with backbone (expected '" + layout[i].name + "' "
                              + shape_to_string(layout[i].shape) + ")");
        }
    }
}

PetModule PetModule::clone() const
{
    NamedTensors copy;
    copy.reserve(params_.size());
    for (const auto& p : params_) {
        copy.push_back({p.name, p.tensor.clone()});
    }
    return PetModule(kind_, hyper_, std::move(copy));
}

ForwardResult TunedModel::forward(const Tensor& image, Tape& tape) const
{
    return hintaug::forward(*backbone, image, &pet, tape);
}

ForwardResult TunedModel::forward(const Tensor& image) const
{
    Tape tape(Tape::no_grad);
    return hintaug::forward(*backbone, image, &pet, tape);
}

TunedModel attach(std::shared_ptr<const ViT> backbone, PetKind kind, const PetHyper& hyper, std::uint64_t seed)
{
    if (!backbone) {
        throw AttachError("attach: no backbone");
    }
    PetModule pet = PetModule::create(backbone->config, kind, hyper, seed);
    return TunedModel{std::move(backbone), std::move(pet)};
}

TunedModel attach(std::shared_ptr<const ViT> backbone, PetModule pet)
{
    if (!backbone) {
        throw AttachError("attach: no backbone");
    }
    pet.check_compatible(backbone->config);
    return TunedModel{std::move(backbone), std::move(pet)};
}

std::shared_ptr<const ViT> detach(const TunedModel& model) { return model.backbone; }

NamedTensors trainable_parameters(PetModule& pet)
{
    NamedTensors out = pet.parameters();
    for (auto& p : out) {
        p.tensor.set_requires_grad(true);
    }
    return out;
}

} // namespace hintaug
