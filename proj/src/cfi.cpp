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

#include "hintaug/cfi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hintaug/error.hpp"
#include "hintaug/rng.hpp"

namespace hintaug {

// ---- confusion matrix --------------------------------------------------------

ConfusionMatrix::ConfusionMatrix(std::size_t num_classes)
    : m_(num_classes), values_(num_classes * num_classes, 0.0), counts_(num_classes, 0)
{
    if (num_classes < 2) {
        throw ConfigError("confusion matrix needs at least 2 classes");
    }
}

void ConfusionMatrix::update(std::span<const double> logits, std::size_t label)
{
    if (logits.size() != m_) {
        throw DimensionError("confusion update: " + std::to_string(logits.size()) + " logits for " +
                             std::to_string(m_) + " classes");
    }
    if (label >= m_) {
        throw LabelError("confusion update: label " + std::to_string(label) + " outside [0, " + std::to_string(m_)
                         + ")");
    }
    if (!all_finite(logits)) {
        throw NumericError("confusion update: non-finite logits");
    }
    const double lo = *std::min_element(logits.begin(), logits.end());
    for (std::size_t i = 0; i < m_; ++i) {
        values_[i * m_ + label] += logits[i] - lo;
    }
    ++counts_[label];
}

void ConfusionMatrix::reset()
{
    std::fill(values_.begin(), values_.end(), 0.0);
    std::fill(counts_.begin(), counts_.end(), 0);
}

ConfusionMatrix& update_confusion(ConfusionMatrix& c, const Tensor& logits, std::size_t label)
{
    c.update(logits.data(), label);
    return c;
}

AttackLabel attack_label(const ConfusionMatrix& c, std::size_t label)
{
    const std::size_t m = c.num_classes();
    if (label >= m) {
        throw LabelError("attack label: class " + std::to_string(label) + " outside [0, " + std::to_string(m) + ")");
    }
    AttackLabel out;
    out.source = label;
    out.target.assign(m, 0.0);
    double denom = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        denom += c(j, label);
    }
    denom -= c(label, label);
    if (!(denom > attack_label_tolerance)) {
        out.fallback = true;
        for (std::size_t i = 0; i < m; ++i) {
            out.target[i] = i == label ? 0.0 : 1.0 / static_cast<double>(m - 1);
        }
        return out;
    }
    for (std::size_t i = 0; i < m; ++i) {
        out.target[i] = i == label ? 0.0 : c(i, label) / denom;
    }
    return out;
}

Tensor target_loss(Tape& tape, const Tensor& logits, const std::vector<double>& target, bool target_softmax)
{
    if (logits.numel() != target.size()) {
        throw DimensionError("target_loss: " + std::to_string(logits.numel()) + " logits vs "
                             + std::to_string(target.size()) + " target entries");
    }
    Tensor q = Tensor::vector(target);
    if (target_softmax) {
        Tape scratch;
        q = softmax(scratch, q);
    }
    return cross_entropy(tape, logits, q);
}

// ---- attacks -----------------------------------------------------------------

std::string to_string(AttackObjective objective)
{
    switch (objective) {
    case AttackObjective::proposed:
        return "proposed";
    case AttackObjective::untarget:
        return "untarget";
    case AttackObjective::random:
        return "random";
    case AttackObjective::full:
        return "full";
    }
    return "unknown";
}

AttackObjective parse_objective(const std::string& text)
{
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (t == "proposed") {
        return AttackObjective::proposed;
    }
    if (t == "untarget") {
        return AttackObjective::untarget;
    }
    if (t == "random") {
        return AttackObjective::random;
    }
    if (t == "full") {
        return AttackObjective::full;
    }
    throw ConfigError("unknown attack objective '" + text + "' (expected proposed, untarget, random or full)");
}

void AttackConfig::validate() const
{
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
        throw ConfigError("attack epsilon must be positive");
    }
    if (steps < 1) {
        throw ConfigError("attack steps must be at least 1");
    }
}

namespace {

// Moves from `origin` by `delta` (already signed), clamps to [0, 1], and then
// pulls the result back until |x - origin| <= epsilon holds exactly.
double bounded_move(double origin, double current, double delta, double epsilon)
{
    double x = std::clamp(current + delta, origin - epsilon, origin + epsilon);
    x = std::clamp(x, 0.0, 1.0);
    while (std::abs(x - origin) > epsilon) {
        x = std::nextafter(x, origin);
    }
    return x;
}

enum class Direction { descend, ascend };

Tensor signed_gradient_attack(const Tensor& image, const std::vector<std::size_t>& pixels, const ViT& model,
                              const std::vector<double>& target, bool target_softmax, Direction direction,
                              const AttackConfig& config)
{
    config.validate();
    const Tensor origin = image.clone();
    Tensor x = image.clone();
    const double step = config.epsilon / static_cast<double>(config.steps);
    const double sign_dir = direction == Direction::descend ? -1.0 : 1.0;
    for (std::size_t s = 0; s < config.steps; ++s) {
        Tensor probe = x.clone();
        probe.set_requires_grad(true);
        Tape tape;
        const ForwardResult r = forward(model, probe, nullptr, tape);
        const Tensor loss = target_loss(tape, r.logits, target, target_softmax);
        backward(loss, tape);
        Tensor next = x.clone();
        if (probe.has_grad()) {
            const auto g = probe.grad();
            auto out = next.mutable_data();
            for (std::size_t p : pixels) {
                const double sg = g[p] > 0.0 ? 1.0 : (g[p] < 0.0 ? -1.0 : 0.0);
                if (sg != 0.0) {
                    out[p] = bounded_move(origin[p], x[p], sign_dir * step * sg, config.epsilon);
                }
            }
        }
        x = next;
    }
    return x;
}

std::vector<std::size_t> all_pixels(const Tensor& image)
{
    std::vector<std::size_t> idx(image.numel());
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

} // namespace

Tensor infuse_patch(const Tensor& image, const std::vector<std::size_t>& patches, const ViT& pretrained,
                    const std::vector<double>& target, const AttackConfig& config)
{
    if (patches.empty()) {
        throw ContractError("infuse_patch: empty patch list");
    }
    return signed_gradient_attack(image, patch_pixel_indices(pretrained.config, patches), pretrained, target,
                                  config.target_softmax, Direction::descend, config);
}

Tensor ablation_objective(const Tensor& image, std::size_t label, const std::vector<std::size_t>& patches,
                          const ViT& pretrained, const ConfusionMatrix& confusion, const AttackConfig& config,
                          Rng& rng)
{
    const std::size_t m = confusion.num_classes();
    switch (config.objective) {
    case AttackObjective::proposed:
        return infuse_patch(image, patches, pretrained, attack_label(confusion, label).target, config);
    case AttackObjective::full:
        return signed_gradient_attack(image, all_pixels(image), pretrained, attack_label(confusion, label).target,
                                      config.target_softmax, Direction::descend, config);
    case AttackObjective::untarget: {
        if (patches.empty()) {
            throw ContractError("untargeted attack: empty patch list");
        }
        std::vector<double> onehot(m, 0.0);
        onehot.at(label) = 1.0;
        return signed_gradient_attack(image, patch_pixel_indices(pretrained.config, patches), pretrained, onehot,
                                      false, Direction::ascend, config);
    }
    case AttackObjective::random: {
        if (label >= m) {
            throw LabelError("random attack: label " + std::to_string(label) + " outside [0, " + std::to_string(m)
                             + ")");
        }
        std::size_t other = rng.below(m - 1);
        if (other >= label) {
            ++other;
        }
        std::vector<double> onehot(m, 0.0);
        onehot[other] = 1.0;
        return infuse_patch(image, patches, pretrained, onehot, config);
    }
    }
    throw ConfigError("unknown attack objective");
}

} // namespace hintaug
