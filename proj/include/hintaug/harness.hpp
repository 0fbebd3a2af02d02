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

// Few-shot sampling, the detect-then-augment tuning loop, baselines and the
// ablation driver.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hintaug/aod.hpp"
#include "hintaug/cfi.hpp"
#include "hintaug/dataset.hpp"
#include "hintaug/pet.hpp"
#include "hintaug/rng.hpp"
#include "hintaug/vit.hpp"

namespace hintaug {

struct FewShotTask {
    std::size_t shots = 0;
    std::vector<std::size_t> classes;
    std::uint64_t seed = 0;
    std::vector<std::size_t> train; // dataset indices, class-major
    std::vector<std::size_t> eval;  // everything else
};

// Stratified: `shots` images per class for training, the rest for
// evaluation. Every class needs at least shots + 1 images.
FewShotTask sample_few_shot(const Dataset& data, std::size_t shots, std::uint64_t seed);

enum class AugmentMode { hint_aug, no_aug, random_baseline };

std::string to_string(AugmentMode mode);
AugmentMode parse_augment_mode(const std::string& text);

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    double lr = 0.01;
    double lambda = default_lambda;
    AttackConfig attack;
    std::size_t num_patches = 1; // 0 means every patch
    AugmentMode augment_mode = AugmentMode::hint_aug;
    PetKind pet_kind = PetKind::adapter;
    PetHyper pet_hyper;
    std::uint64_t seed = 0;
    bool keep_clean = false; // also train on the clean sample
    double jitter = 0.4;     // random_baseline colour jitter factor

    std::size_t resolved_num_patches(const ViTConfig& model) const;
    void validate(const ViTConfig& model) const;

    // 100 epochs, batch 256, lr 0.01: the large-scale recipe. Kept for
    // reference; desk-scale runs use the defaults above.
    static TrainConfig large_scale_preset();
};

struct EpochMetrics {
    std::size_t epoch = 0; // 0 is the untrained starting point
    double loss = 0.0;
    double accuracy = 0.0;
    double indicator_rate = 0.0;
    std::size_t augmented = 0;
    std::size_t samples = 0;
};

struct Metrics {
    std::vector<EpochMetrics> epochs;
    std::size_t best_epoch = 0;
    double best_accuracy = 0.0;

    // epoch,loss,acc,indicator_rate,n_augmented
    std::string to_csv() const;
};

struct StepStats {
    double loss_sum = 0.0; // sum of per-sample training losses
    std::size_t samples = 0;
    std::size_t overfit = 0;
    std::size_t augmented = 0;
};

struct BatchItem {
    const Tensor* image = nullptr;
    std::size_t label = 0;
    // Pretrained score map for this sample; computed on demand when null.
    const AttentionScoreMap* pretrained_map = nullptr;
};

// One SGD step on the PET tensors over `batch`. Per sample: detect over-fit
// from pretrained vs tuned attention, pick patches, infuse confusion
// features through the pretrained backbone, then train on the augmented image.
StepStats hint_aug_step(const std::vector<BatchItem>& batch, TunedModel& model, const ConfusionMatrix& confusion,
                        const TrainConfig& config, Rng& aug_rng);

// Brightness/contrast jitter in [1 - jitter, 1 + jitter] and, when `erase`
// is set, one random rectangle of at most 25% of the area filled with noise.
Tensor baseline_augment(const Tensor& image, std::uint64_t seed, double jitter = 0.4, bool erase = true);

struct TuneResult {
    PetModule best_pet;
    Metrics metrics;
    std::uint64_t backbone_hash = 0;
};

// Full loop: per epoch refresh the confusion matrix and pretrained score
// maps, run hint_aug_step over shuffled batches, evaluate. Returns the PET
// with the best eval accuracy (earliest on ties). Throws TrainingError on
// divergence or if the backbone changes.
TuneResult tune(const FewShotTask& task, const Dataset& data, std::shared_ptr<const ViT> backbone,
                const TrainConfig& config);

// Builds the confusion matrix over `indices` from pretrained logits.
ConfusionMatrix build_confusion(const ViT& backbone, const Dataset& data, const std::vector<std::size_t>& indices);

enum class AblationAxis { epsilon, num_patches, lambda, objective };

std::string to_string(AblationAxis axis);
AblationAxis parse_ablation_axis(const std::string& text);
std::vector<std::string> default_grid(AblationAxis axis);

struct AblationRow {
    std::string axis;
    std::string value;
    std::vector<double> accuracies; // one per seed
    double mean = 0.0;
    double stddev = 0.0; // population standard deviation
};

// Applies one grid value to a copy of `base`.
TrainConfig apply_grid_value(const TrainConfig& base, AblationAxis axis, const std::string& value);

// One tune() per grid point and seed (seeds base.seed, base.seed + 1, ...);
// each seed also draws its own few-shot split.
std::vector<AblationRow> run_ablation(AblationAxis axis, const std::vector<std::string>& grid,
                                      const TrainConfig& base, std::size_t num_seeds, std::size_t shots,
                                      const Dataset& data, std::shared_ptr<const ViT> backbone);

// axis,value,seeds,mean_acc,std_acc,mean_pm_std,accuracies
std::string ablation_csv(const std::vector<AblationRow>& rows);

std::string format_number(double value);

} // namespace hintaug
