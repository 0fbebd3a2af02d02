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

#include "hintaug/aod.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hintaug/error.hpp"

namespace hintaug {

AttentionScoreMap score_map(const AttentionRecord& attention, std::size_t layer, std::size_t query,
                            ScoreSource source)
{
    if (layer >= attention.num_layers) {
        throw IndexError("score_map: layer " + std::to_string(layer) + " outside " +
                         std::to_string(attention.num_layers) + " layers");
    }
    const std::size_t n = attention.seq_len - attention.prefix;
    if (query >= n) {
        throw IndexError("score_map: query patch " + std::to_string(query) + " outside N = " + std::to_string(n));
    }
    AttentionScoreMap out;
    out.layer = layer;
    out.query = query;
    out.source = source;
    out.scores.assign(n, 0.0);
    const std::size_t s = attention.seq_len;
    const std::size_t row = attention.patch_token(query);
    for (std::size_t h = 0; h < attention.num_heads; ++h) {
        const auto a = attention.map(layer, h).data();
        for (std::size_t j = 0; j < n; ++j) {
            out.scores[j] += a[row * s + attention.patch_token(j)];
        }
    }
    return out;
}

namespace {

void require_same_length(const std::vector<double>& a, const std::vector<double>& b, const char* op)
{
    if (a.size() != b.size()) {
        throw DimensionError(std::string(op) + ": score maps of length " + std::to_string(a.size()) + " and "
                             + std::to_string(b.size()));
    }
    if (a.empty()) {
        throw DimensionError(std::string(op) + ": empty score maps");
    }
}

std::vector<double> ranking_key(const std::vector<double>& pretrained, const std::vector<double>& tuned,
                                int indicator)
{
    if (indicator == 0) {
        return tuned;
    }
    std::vector<double> drift(pretrained.size());
    for (std::size_t i = 0; i < drift.size(); ++i) {
        drift[i] = std::abs(pretrained[i] - tuned[i]);
    }
    return drift;
}

} // namespace

int overfit_indicator(const std::vector<double>& pretrained, const std::vector<double>& tuned, double lambda)
{
    require_same_length(pretrained, tuned, "overfit_indicator");
    if (!(lambda > 0.0)) {
        throw ConfigError("lambda must be positive");
    }
    double drift = 0.0, mass = 0.0;
    for (std::size_t i = 0; i < pretrained.size(); ++i) {
        drift += std::abs(pretrained[i] - tuned[i]);
        mass += std::abs(pretrained[i]);
    }
    return drift < lambda * mass ? 0 : 1;
}

std::size_t select_patch(const std::vector<double>& pretrained, const std::vector<double>& tuned, int indicator)
{
    require_same_length(pretrained, tuned, "select_patch");
    return argmax(ranking_key(pretrained, tuned, indicator));
}

std::vector<std::size_t> top_patches(const std::vector<double>& pretrained, const std::vector<double>& tuned,
                                     int indicator, std::size_t n)
{
    require_same_length(pretrained, tuned, "top_patches");
    if (n < 1 || n > pretrained.size()) {
        throw ConfigError("number of patches " + std::to_string(n) + " must be in [1, "
                          + std::to_string(pretrained.size()) + "]");
    }
    const std::vector<double> key = ranking_key(pretrained, tuned, indicator);
    std::vector<std::size_t> order(key.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return key[a] > key[b]; });
    order.resize(n);
    return order;
}

OverfitReport detect_overfit(const AttentionScoreMap& pretrained, const AttentionScoreMap& tuned, double lambda)
{
    OverfitReport r;
    r.lambda_used = lambda;
    r.indicator = overfit_indicator(pretrained.scores, tuned.scores, lambda);
    r.selected_patch = select_patch(pretrained.scores, tuned.scores, r.indicator);
    r.drift.resize(pretrained.scores.size());
    double mass = 0.0;
    for (std::size_t i = 0; i < r.drift.size(); ++i) {
        r.drift[i] = std::abs(pretrained.scores[i] - tuned.scores[i]);
        r.total_drift += r.drift[i];
        mass += std::abs(pretrained.scores[i]);
    }
    r.threshold = lambda * mass;
    return r;
}

} // namespace hintaug
