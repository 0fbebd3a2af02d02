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

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hintaug/tensor.hpp"

namespace hintaug {

struct Dataset;
class PetModule;

// trunc_normal: every projection and embedding ~ N(0, 0.02^2) cut at 2 sigma.
// fan_in: projections use sigma = 1/sqrt(fan_in) instead, which plain SGD
// can train from scratch; embeddings stay at 0.02.
enum class InitScheme { trunc_normal, fan_in };

std::string to_string(InitScheme scheme);
InitScheme parse_init_scheme(const std::string& text);

struct ViTConfig {
    std::size_t image_size = 32;
    std::size_t patch_size = 4;
    std::size_t channels = 3;
    std::size_t embed_dim = 64;
    std::size_t num_layers = 6;
    std::size_t num_heads = 4;
    double mlp_ratio = 2.0;
    std::size_t num_classes = 6;
    // Layer and image-patch query (CLS excluded) read by the over-fitting
    // detector. A negative query selects the grid center.
    std::size_t aod_layer = 5;
    long query_patch = -1;

    std::size_t grid() const { return image_size / patch_size; }
    std::size_t num_patches() const { return grid() * grid(); }
    std::size_t head_dim() const { return embed_dim / num_heads; }
    std::size_t patch_dim() const { return channels * patch_size * patch_size; }
    std::size_t mlp_hidden() const;
    std::size_t center_patch() const { return (grid() / 2) * grid() + grid() / 2; }
    std::size_t resolved_query_patch() const;

    // Throws ConfigError naming the first violated constraint.
    void validate() const;

    bool operator==(const ViTConfig&) const = default;
};

struct NamedTensor {
    std::string name;
    Tensor tensor;
};
using NamedTensors = std::vector<NamedTensor>;

const Tensor& find_tensor(const NamedTensors& tensors, const std::string& name);
std::size_t count_parameters(const NamedTensors& tensors);

struct BlockWeights {
    Tensor ln1_gamma, ln1_beta;
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln2_gamma, ln2_beta;
    Tensor fc1_weight, fc1_bias, fc2_weight, fc2_bias;
};

// Pre-norm ViT: patch projection, CLS token, learned positional embedding,
// transformer blocks, final norm and a linear head on the CLS embedding.
struct ViT {
    ViTConfig config;
    Tensor patch_weight, patch_bias;
    Tensor cls_token, pos_embed;
    std::vector<BlockWeights> blocks;
    Tensor norm_gamma, norm_beta;
    Tensor head_weight, head_bias;

    // Truncated-normal(0.02) projections and embeddings, zero biases, unit
    // norm gains.
    static ViT initialize(const ViTConfig& config, std::uint64_t seed, InitScheme scheme = InitScheme::trunc_normal);
    // Rebuilds from the canonical names produced by named_weights().
    static ViT from_named(const ViTConfig& config, const NamedTensors& weights);

    // Canonical order; this order defines the serialized payload and hash.
    NamedTensors named_weights() const;
    std::size_t parameter_count() const;
    std::uint64_t content_hash() const;
    ViT clone() const;
    void set_trainable(bool on);
};

// Softmax attention probabilities of the latest forward pass, per layer and
// head, each a [S×S] tensor with S = prefix + N. Token 0 is CLS, tokens
// 1..prefix-1 are prompts, image patch j sits at token prefix + j.
struct AttentionRecord {
    std::size_t num_layers = 0;
    std::size_t num_heads = 0;
    std::size_t seq_len = 0;
    std::size_t prefix = 1;
    std::vector<Tensor> maps; // index layer * num_heads + head

    const Tensor& map(std::size_t layer, std::size_t head) const;
    std::size_t patch_token(std::size_t patch) const { return prefix + patch; }
};

struct ForwardResult {
    Tensor logits; // [M], pre-softmax
    AttentionRecord attention;
};

// [C×H×W] -> [N × C·P²]; row i is patch i in row-major grid order, each row
// laid out channel-major.
Tensor patchify(Tape& tape, const Tensor& image, const ViTConfig& config);
Tensor unpatchify(const Tensor& patches, const ViTConfig& config);
// Flat pixel indices of the given patches, for masking perturbations.
std::vector<std::size_t> patch_pixel_indices(const ViTConfig& config, const std::vector<std::size_t>& patches);

ForwardResult forward(const ViT& model, const Tensor& image, const PetModule* pet, Tape& tape);
// Inference only; runs on a no_grad tape.
ForwardResult forward(const ViT& model, const Tensor& image, const PetModule* pet = nullptr);

std::size_t argmax(std::span<const double> values);

struct PretrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    double lr = 0.05;
    double momentum = 0.9;
    // Global gradient-norm clip per step; 0 disables.
    double clip_norm = 1.0;
    std::uint64_t seed = 1;
};

struct PretrainResult {
    ViT model;
    std::vector<double> epoch_loss;
    std::vector<double> epoch_accuracy; // train accuracy after each epoch
};

// SGD on all weights with mini-batch mean cross-entropy. `model` is the
// starting point and is not modified. Throws TrainingError on a non-finite loss.
PretrainResult pretrain(const ViT& model, const Dataset& data, const PretrainConfig& config);

double accuracy(const ViT& model, const PetModule* pet, const Dataset& data, const std::vector<std::size_t>& indices);

} // namespace hintaug
