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

// Attentive over-fitting detection: compares the attention a query patch pays
// to every image patch in the pretrained backbone against the tuned model.

#include <cstddef>
#include <vector>

#include "hintaug/vit.hpp"

namespace hintaug {

enum class ScoreSource { pretrained, tuned };

struct AttentionScoreMap {
    std::vector<double> scores; // one entry per image patch
    std::size_t layer = 0;
    std::size_t query = 0;
    ScoreSource source = ScoreSource::pretrained;
};

// s_j = sum over heads of the attention from image patch `query` to image
// patch j at `layer`. CLS and prompt columns are skipped, so the map sums to
// at most num_heads.
AttentionScoreMap score_map(const AttentionRecord& attention, std::size_t layer, std::size_t query,
                            ScoreSource source = ScoreSource::pretrained);

inline constexpr double default_lambda = 0.1;

// 1 when sum|s^P - s^T| >= lambda * sum|s^P|, else 0.
int overfit_indicator(const std::vector<double>& pretrained, const std::vector<double>& tuned, double lambda);

// argmax |s^P - s^T| when over-fitting, otherwise argmax s^T. Lowest index
// wins ties.
std::size_t select_patch(const std::vector<double>& pretrained, const std::vector<double>& tuned, int indicator);

// The n best patches under the same criterion, best first, stable on ties.
std::vector<std::size_t> top_patches(const std::vector<double>& pretrained, const std::vector<double>& tuned,
                                     int indicator, std::size_t n);

struct OverfitReport {
    int indicator = 0;
    std::vector<double> drift; // |s^P_i - s^T_i|
    std::size_t selected_patch = 0;
    double lambda_used = default_lambda;
    double total_drift = 0.0;
    double threshold = 0.0; // lambda * sum|s^P|
};

OverfitReport detect_overfit(const AttentionScoreMap& pretrained, const AttentionScoreMap& tuned, double lambda);

} // namespace hintaug
