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

#include "hintaug/vit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hintaug/checkpoint.hpp"
#include "hintaug/dataset.hpp"
#include "hintaug/error.hpp"
#include "hintaug/pet.hpp"
#include "hintaug/rng.hpp"

namespace hintaug {

// ---- config ----------------------------------------------------------------

std::size_t ViTConfig::mlp_hidden() const
{
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(mlp_ratio * static_cast<double>(embed_dim))));
}

std::size_t ViTConfig::resolved_query_patch() const
{
    return query_patch < 0 ? center_patch() : static_cast<std::size_t>(query_patch);
}

void ViTConfig::validate() const
{
    auto fail = [](const std::string& what) { throw ConfigError("invalid model config: " + what); };
    if (image_size == 0 || patch_size == 0 || channels == 0) {
        fail("image_size, patch_size and channels must be positive");
    }
    if (image_size % patch_size != 0) {
        fail("image_size " + std::to_string(image_size) + " is not a multiple of patch_size "
             + std::to_string(patch_size));
    }
    if (embed_dim == 0 || num_heads == 0 || embed_dim % num_heads != 0) {
        fail("embed_dim " + std::to_string(embed_dim) + " must be a positive multiple of num_heads "
             + std::to_string(num_heads));
    }
    if (num_layers == 0) {
        fail("num_layers must be positive");
    }
    if (!(mlp_ratio > 0.0) || !std::isfinite(mlp_ratio)) {
        fail("mlp_ratio must be positive");
    }
    if (num_classes < 2) {
        fail("num_classes must be at least 2");
    }
    if (aod_layer >= num_layers) {
        fail("aod_layer " + std::to_string(aod_layer) + " must be below num_layers " + std::to_string(num_layers));
    }
    if (query_patch >= 0 && static_cast<std::size_t>(query_patch) >= num_patches()) {
        fail("query_patch " + std::to_string(query_patch) + " must be below N = " + std::to_string(num_patches()));
    }
}

// ---- named tensors ---------------------------------------------------------

const Tensor& find_tensor(const NamedTensors& tensors, const std::string& name)
{
    for (const auto& t : tensors) {
        if (t.name == name) {
            return t.tensor;
        }
    }
    throw IndexError("no tensor named '" + name + "'");
}

std::size_t count_parameters(const NamedTensors& tensors)
{
    std::size_t n = 0;
    for (const auto& t : tensors) {
        n += t.tensor.numel();
    }
    return n;
}

// ---- ViT weights -----------------------------------------------------------

namespace {

struct WeightShape {
    std::string name;
    Shape shape;
};

std::string block_name(std::size_t layer, const char* leaf)
{
    return "blocks." + std::to_string(layer) + "." + leaf;
}

std::vector<WeightShape> weight_layout(const ViTConfig& c)
{
    const std::size_t d = c.embed_dim, hidden = c.mlp_hidden();
    std::vector<WeightShape> out = {
        {"patch_embed.weight", {c.patch_dim(), d}},
        {"patch_embed.bias", {d}},
        {"cls_token", {1, d}},
        {"pos_embed", {c.num_patches() + 1, d}},
    };
    for (std::size_t l = 0; l < c.num_layers; ++l) {
        out.push_back({block_name(l, "ln1.gamma"), {d}});
        out.push_back({block_name(l, "ln1.beta"), {d}});
        out.push_back({block_name(l, "attn.q.weight"), {d, d}});
        out.push_back({block_name(l, "attn.q.bias"), {d}});
        out.push_back({block_name(l, "attn.k.weight"), {d, d}});
        out.push_back({block_name(l, "attn.k.bias"), {d}});
        out.push_back({block_name(l, "attn.v.weight"), {d, d}});
        out.push_back({block_name(l, "attn.v.bias"), {d}});
        out.push_back({block_name(l, "attn.out.weight"), {d, d}});
        out.push_back({block_name(l, "attn.out.bias"), {d}});
        out.push_back({block_name(l, "ln2.gamma"), {d}});
        out.push_back({block_name(l, "ln2.beta"), {d}});
        out.push_back({block_name(l, "mlp.fc1.weight"), {d, hidden}});
        out.push_back({block_name(l, "mlp.fc1.bias"), {hidden}});
        out.push_back({block_name(l, "mlp.fc2.weight"), {hidden, d}});
        out.push_back({block_name(l, "mlp.fc2.bias"), {d}});
    }
    out.push_back({"norm.gamma", {d}});
    out.push_back({"norm.beta", {d}});
    out.push_back({"head.weight", {d, c.num_classes}});
    out.push_back({"head.bias", {c.num_classes}});
    return out;
}

// Pointers into the struct in weight_layout() order.
std::vector<Tensor*> weight_slots(ViT& m)
{
    std::vector<Tensor*> out = {&m.patch_weight, &m.patch_bias, &m.cls_token, &m.pos_embed};
    for (auto& b : m.blocks) {
        for (Tensor* t : {&b.ln1_gamma, &b.ln1_beta, &b.wq, &b.bq, &b.wk, &b.bk, &b.wv, &b.bv, &b.wo, &b.bo,
                          &b.ln2_gamma, &b.ln2_beta, &b.fc1_weight, &b.fc1_bias, &b.fc2_weight, &b.fc2_bias}) {
            out.push_back(t);
        }
    }
    for (Tensor* t : {&m.norm_gamma, &m.norm_beta, &m.head_weight, &m.head_bias}) {
        out.push_back(t);
    }
    return out;
}

bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

std::string to_string(InitScheme scheme)
{
    return scheme == InitScheme::fan_in ? "fan_in" : "trunc_normal";
}

InitScheme parse_init_scheme(const std::string& text)
{
    if (text == "fan_in") {
        return InitScheme::fan_in;
    }
    if (text == "trunc_normal") {
        return InitScheme::trunc_normal;
    }
    throw ConfigError("unknown init scheme '" + text + "' (expected trunc_normal or fan_in)");
}

ViT ViT::initialize(const ViTConfig& config, std::uint64_t seed, InitScheme scheme)
{
    config.validate();
    ViT m;
    m.config = config;
    m.blocks.resize(config.num_layers);
    Rng rng(seed);
    const auto layout = weight_layout(config);
    const auto slots = weight_slots(m);
    for (std::size_t i = 0; i < layout.size(); ++i) {
        Tensor t(layout[i].shape);
        const std::string& name = layout[i].name;
        if (ends_with(name, ".gamma")) {
            std::fill(t.mutable_data().begin(), t.mutable_data().end(), 1.0);
        } else if (!ends_with(name, ".bias") && !ends_with(name, ".beta")) {
            double stddev = 0.02;
            if (scheme == InitScheme::fan_in && ends_with(name, ".weight")) {
                stddev = 1.0 / std::sqrt(static_cast<double>(layout[i].shape[0]));
            }
            for (double& v : t.mutable_data()) {
                v = rng.truncated_normal(stddev);
            }
        }
        *slots[i] = t;
    }
    return m;
}

ViT ViT::from_named(const ViTConfig& config, const NamedTensors& weights)
{
    config.validate();
    ViT m;
    m.config = config;
    m.blocks.resize(config.num_layers);
    const auto layout = weight_layout(config);
    const auto slots = weight_slots(m);
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const Tensor& src = find_tensor(weights, layout[i].name);
        if (src.shape() != layout[i].shape) {
            throw DimensionError("weight '" + layout[i].name + "' has shape " + shape_to_string(src.shape())
                                 + ", config expects " + shape_to_string(layout[i].shape));
        }
        *slots[i] = src.clone();
    }
    return m;
}

NamedTensors ViT::named_weights() const
{
    const auto layout = weight_layout(config);
    auto slots = weight_slots(const_cast<ViT&>(*this));
    NamedTensors out;
    out.reserve(layout.size());
    for (std::size_t i = 0; i < layout.size(); ++i) {
        out.push_back({layout[i].name, *slots[i]});
    }
    return out;
}

std::size_t ViT::parameter_count() const { return count_parameters(named_weights()); }

std::uint64_t ViT::content_hash() const { return fnv1a64(encode_payload(named_weights())); }

ViT ViT::clone() const { return from_named(config, named_weights()); }

void ViT::set_trainable(bool on)
{
    for (Tensor* t : weight_slots(*this)) {
        t->set_requires_grad(on);
    }
}

// ---- attention record --------------------------------------------------------

const Tensor& AttentionRecord::map(std::size_t layer, std::size_t head) const
{
    if (layer >= num_layers || head >= num_heads) {
        throw IndexError("attention map (" + std::to_string(layer) + "," + std::to_string(head) + ") outside "
                         + std::to_string(num_layers) + " layers x " + std::to_string(num_heads) + " heads");
    }
    return maps[layer * num_heads + head];
}

// ---- patches ---------------------------------------------------------------

namespace {

void check_image(const Tensor& image, const ViTConfig& c)
{
    const Shape want = {c.channels, c.image_size, c.image_size};
    if (image.shape() != want) {
        throw ConfigError("image shape " + shape_to_string(image.shape()) + " does not match model input "
                          + shape_to_string(want));
    }
}

// index[row * patch_dim + col] = flat pixel index.
std::vector<std::size_t> patch_index(const ViTConfig& c)
{
    const std::size_t g = c.grid(), p = c.patch_size, s = c.image_size;
    std::vector<std::size_t> idx;
    idx.reserve(c.num_patches() * c.patch_dim());
    for (std::size_t gy = 0; gy < g; ++gy) {
        for (std::size_t gx = 0; gx < g; ++gx) {
            for (std::size_t ch = 0; ch < c.channels; ++ch) {
                for (std::size_t y = 0; y < p; ++y) {
                    for (std::size_t x = 0; x < p; ++x) {
                        idx.push_back(ch * s * s + (gy * p + y) * s + gx * p + x);
                    }
                }
            }
        }
    }
    return idx;
}

} // namespace

Tensor patchify(Tape& tape, const Tensor& image, const ViTConfig& config)
{
    check_image(image, config);
    return gather(tape, image, patch_index(config), {config.num_patches(), config.patch_dim()});
}

Tensor unpatchify(const Tensor& patches, const ViTConfig& config)
{
    const Shape want = {config.num_patches(), config.patch_dim()};
    if (patches.shape() != want) {
        throw ConfigError("patch matrix " + shape_to_string(patches.shape()) + " does not match "
                          + shape_to_string(want));
    }
    const auto idx = patch_index(config);
    Tensor image({config.channels, config.image_size, config.image_size});
    auto out = image.mutable_data();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out[idx[i]] = patches[i];
    }
    return image;
}

std::vector<std::size_t> patch_pixel_indices(const ViTConfig& config, const std::vector<std::size_t>& patches)
{
    const auto idx = patch_index(config);
    const std::size_t pd = config.patch_dim();
    std::vector<std::size_t> out;
    out.reserve(patches.size() * pd);
    for (std::size_t p : patches) {
        if (p >= config.num_patches()) {
            throw IndexError("patch " + std::to_string(p) + " outside N = " + std::to_string(config.num_patches()));
        }
        out.insert(out.end(), idx.begin() + static_cast<std::ptrdiff_t>(p * pd),
                   idx.begin() + static_cast<std::ptrdiff_t>((p + 1) * pd));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// ---- forward ---------------------------------------------------------------

namespace {

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b)
{
    return add_row(tape, matmul(tape, x, w), b);
}

Tensor lora_delta(Tape& tape, const Tensor& x, const Tensor& a, const Tensor& b, double factor)
{
    return scale(tape, matmul(tape, matmul(tape, x, a), b), factor);
}

} // namespace

ForwardResult forward(const ViT& model, const Tensor& image, const PetModule* pet, Tape& tape)
{
    const ViTConfig& c = model.config;
    if (pet) {
        pet->check_compatible(c);
    }
    const std::size_t n = c.num_patches(), hd = c.head_dim();
    const std::size_t prompts = pet ? pet->num_prompts() : 0;

    Tensor x = linear(tape, patchify(tape, image, c), model.patch_weight, model.patch_bias);
    x = add(tape, concat_rows(tape, {model.cls_token, x}), model.pos_embed);
    if (prompts > 0) {
        x = concat_rows(tape, {slice_rows(tape, x, 0, 1), pet->tensor(PetModule::name(PetKind::vpt, 0, "prompts")),
                               slice_rows(tape, x, 1, n)});
    }

    ForwardResult result;
    AttentionRecord& rec = result.attention;
    rec.num_layers = c.num_layers;
    rec.num_heads = c.num_heads;
    rec.prefix = 1 + prompts;
    rec.seq_len = rec.prefix + n;
    rec.maps.reserve(c.num_layers * c.num_heads);

    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(hd));
    const bool use_lora = pet && pet->kind() == PetKind::lora;
    const bool use_adapter = pet && pet->kind() == PetKind::adapter;
    const double lora_factor = use_lora ? pet->hyper().alpha / static_cast<double>(pet->hyper().rank) : 0.0;

    for (std::size_t l = 0; l < c.num_layers; ++l) {
        const BlockWeights& b = model.blocks[l];
        const Tensor h = layer_norm(tape, x, b.ln1_gamma, b.ln1_beta);
        Tensor q = linear(tape, h, b.wq, b.bq);
        const Tensor k = linear(tape, h, b.wk, b.bk);
        Tensor v = linear(tape, h, b.wv, b.bv);
        if (use_lora) {
            q = add(tape, q,
                    lora_delta(tape, h, pet->tensor(PetModule::name(PetKind::lora, l, "q_a")),
                               pet->tensor(PetModule::name(PetKind::lora, l, "q_b")), lora_factor));
            v = add(tape, v,
                    lora_delta(tape, h, pet->tensor(PetModule::name(PetKind::lora, l, "v_a")),
                               pet->tensor(PetModule::name(PetKind::lora, l, "v_b")), lora_factor));
        }
        std::vector<Tensor> heads;
        heads.reserve(c.num_heads);
        for (std::size_t head = 0; head < c.num_heads; ++head) {
            const Tensor qh = slice_cols(tape, q, head * hd, hd);
            const Tensor kh = slice_cols(tape, k, head * hd, hd);
            const Tensor vh = slice_cols(tape, v, head * hd, hd);
            const Tensor att = softmax(tape, scale(tape, matmul(tape, qh, transpose(tape, kh)), inv_sqrt_d), 1);
            rec.maps.push_back(att);
            heads.push_back(matmul(tape, att, vh));
        }
        x = add(tape, x, linear(tape, concat_cols(tape, heads), b.wo, b.bo));

        const Tensor h2 = layer_norm(tape, x, b.ln2_gamma, b.ln2_beta);
        const Tensor mlp = linear(tape, gelu(tape, linear(tape, h2, b.fc1_weight, b.fc1_bias)), b.fc2_weight,
                                  b.fc2_bias);
        x = add(tape, x, mlp);

        if (use_adapter) {
            const Tensor down = gelu(tape, linear(tape, x, pet->tensor(PetModule::name(PetKind::adapter, l, "down")),
                                                  pet->tensor(PetModule::name(PetKind::adapter, l, "down_bias"))));
            x = add(tape, x,
                    linear(tape, down, pet->tensor(PetModule::name(PetKind::adapter, l, "up")),
                           pet->tensor(PetModule::name(PetKind::adapter, l, "up_bias"))));
        }
    }

    const Tensor cls = layer_norm(tape, slice_rows(tape, x, 0, 1), model.norm_gamma, model.norm_beta);
    const Tensor logits = linear(tape, cls, model.head_weight, model.head_bias);
    std::vector<std::size_t> flat(c.num_classes);
    std::iota(flat.begin(), flat.end(), 0);
    result.logits = gather(tape, logits, std::move(flat), {c.num_classes});
    return result;
}

ForwardResult forward(const ViT& model, const Tensor& image, const PetModule* pet)
{
    Tape tape(Tape::no_grad);
    return forward(model, image, pet, tape);
}

std::size_t argmax(std::span<const double> values)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) {
            best = i;
        }
    }
    return best;
}

double accuracy(const ViT& model, const PetModule* pet, const Dataset& data, const std::vector<std::size_t>& indices)
{
    if (indices.empty()) {
        return 0.0;
    }
    std::size_t correct = 0;
    for (std::size_t i : indices) {
        const ForwardResult r = forward(model, data.images.at(i), pet);
        correct += argmax(r.logits.data()) == data.labels.at(i) ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(indices.size());
}

// ---- pretraining -------------------------------------------------------------

PretrainResult pretrain(const ViT& model, const Dataset& data, const PretrainConfig& config)
{
    if (data.num_classes() != model.config.num_classes) {
        throw ConfigError("dataset has " + std::to_string(data.num_classes()) + " classes, model expects "
                          + std::to_string(model.config.num_classes));
    }
    if (config.batch_size == 0) {
        throw ConfigError("pretrain batch_size must be positive");
    }
    PretrainResult result{model.clone(), {}, {}};
    if (config.epochs == 0) {
        return result;
    }
    ViT& m = result.model;
    m.set_trainable(true);
    NamedTensors params = m.named_weights();
    std::vector<std::vector<double>> velocity(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i].assign(params[i].tensor.numel(), 0.0);
    }

    Rng order_rng(Rng::derive(config.seed, 1));
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        order_rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            for (std::size_t s = start; s < stop; ++s) {
                const std::size_t idx = order[s];
                Tape tape;
                Tensor target(Shape{m.config.num_classes});
                target.mutable_data()[data.labels[idx]] = 1.0;
                try {
                    const ForwardResult r = forward(m, data.images[idx], nullptr, tape);
                    const Tensor loss = cross_entropy(tape, r.logits, target);
                    loss_sum += loss.item();
                    correct += argmax(r.logits.data()) == data.labels[idx] ? 1 : 0;
                    backward(scale(tape, loss, inv_batch), tape);
                } catch (const NumericError&) {
                    throw TrainingError("pretraining diverged (non-finite loss) in epoch " + std::to_string(epoch));
                }
            }
            double grad_scale = 1.0;
            if (config.clip_norm > 0.0) {
                double norm2 = 0.0;
                for (const auto& p : params) {
                    if (p.tensor.has_grad()) {
                        for (double g : p.tensor.grad()) {
                            norm2 += g * g;
                        }
                    }
                }
                const double norm = std::sqrt(norm2);
                if (norm > config.clip_norm) {
                    grad_scale = config.clip_norm / norm;
                }
            }
            for (std::size_t i = 0; i < params.size(); ++i) {
                Tensor& p = params[i].tensor;
                if (!p.has_grad()) {
                    continue;
                }
                auto w = p.mutable_data();
                auto g = p.grad();
                auto& v = velocity[i];
                for (std::size_t j = 0; j < w.size(); ++j) {
                    v[j] = config.momentum * v[j] + grad_scale * g[j];
                    w[j] -= config.lr * v[j];
                }
                p.zero_grad();
            }
        }
        const double mean_loss = loss_sum / static_cast<double>(order.size());
        if (!std::isfinite(mean_loss)) {
            throw TrainingError("pretraining diverged (non-finite loss) in epoch " + std::to_string(epoch));
        }
        result.epoch_loss.push_back(mean_loss);
        result.epoch_accuracy.push_back(static_cast<double>(correct) / static_cast<double>(order.size()));
    }
    m.set_trainable(false);
    return result;
}

} // namespace hintaug
