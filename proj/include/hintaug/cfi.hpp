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

// Confusion-based feature infusion: class-confusion evidence from
// pre-softmax logits, per-sample attack targets, and patch-restricted
// targeted FGSM against the pretrained backbone.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hintaug/tensor.hpp"
#include "hintaug/vit.hpp"

namespace hintaug {

class Rng;

// C(i, j) accumulates f_i - min f over samples whose true class is j.
class ConfusionMatrix {
public:
    explicit ConfusionMatrix(std::size_t num_classes);

    std::size_t num_classes() const { return m_; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * m_ + j]; }
    std::size_t samples(std::size_t cls) const { return counts_.at(cls); }
    const std::vector<double>& values() const { return values_; } // row-major

    // Throws NumericError on non-finite logits, LabelError on a bad class.
    void update(std::span<const double> logits, std::size_t label);
    void reset();

    bool operator==(const ConfusionMatrix&) const = default;

private:
    std::size_t m_;
    std::vector<double> values_;
    std::vector<std::size_t> counts_;
};

ConfusionMatrix& update_confusion(ConfusionMatrix& c, const Tensor& logits, std::size_t label);

struct AttackLabel {
    std::vector<double> target; // zero at `source`, sums to 1
    std::size_t source = 0;
    bool fallback = false; // degenerate column, uniform over the other classes
};

inline constexpr double attack_label_tolerance = 1e-12;

AttackLabel attack_label(const ConfusionMatrix& c, std::size_t label);

// Cross-entropy of softmax(logits) against softmax(target) (default) or the
// raw target vector.
Tensor target_loss(Tape& tape, const Tensor& logits, const std::vector<double>& target, bool target_softmax = true);

enum class AttackObjective { proposed, untarget, random, full };

std::string to_string(AttackObjective objective);
AttackObjective parse_objective(const std::string& text);

inline constexpr double default_epsilon = 0.001;

struct AttackConfig {
    double epsilon = default_epsilon; // L-inf radius in pixel units
    std::size_t steps = 1;            // 1 = FGSM
    AttackObjective objective = AttackObjective::proposed;
    bool target_softmax = true;

    void validate() const;
};

// Signed-gradient descent on the target loss through `pretrained`, with the
// update confined to the pixels of `patches`. Pixels outside the patches are
// returned bit-identical; |x' - x| <= epsilon holds in floating point and x'
// stays in [0, 1].
Tensor infuse_patch(const Tensor& image, const std::vector<std::size_t>& patches, const ViT& pretrained,
                    const std::vector<double>& target, const AttackConfig& config);

// Ablation variants. `patches` are ignored by Full (all pixels). Random
// draws its target class from `rng`.
Tensor ablation_objective(const Tensor& image, std::size_t label, const std::vector<std::size_t>& patches,
                          const ViT& pretrained, const ConfusionMatrix& confusion, const AttackConfig& config,
                          Rng& rng);

} // namespace hintaug
