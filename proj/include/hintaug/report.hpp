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

// File exports for the attention-map and confusion commands.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hintaug/aod.hpp"
#include "hintaug/cfi.hpp"
#include "hintaug/pet.hpp"

namespace hintaug {

// Min-max scaled to 0..255 (rounded); a constant map becomes all zeros.
std::vector<std::uint8_t> scores_to_gray(const std::vector<double>& scores);

struct AttentionExport {
    AttentionScoreMap pretrained;
    AttentionScoreMap tuned;
    OverfitReport report;
};

AttentionExport attention_maps(const ViT& backbone, const PetModule* pet, const Tensor& image, double lambda);

// patch,row,col,s_pretrained,s_tuned,drift
std::string attention_scores_csv(const AttentionExport& maps, std::size_t grid);
// indicator,selected_patch,lambda,total_drift,threshold,layer,query
std::string overfit_report_csv(const AttentionExport& maps);

// Writes <prefix>_pretrained.pgm, <prefix>_tuned.pgm, <prefix>_scores.csv and
// <prefix>_report.csv; returns the paths written.
std::vector<std::filesystem::path> write_attention_export(const AttentionExport& maps, std::size_t grid,
                                                          const std::filesystem::path& prefix);

// Header row "true\pred" then class names; C(i, j) at row j (true class),
// column i, matching how the matrix is accumulated.
std::string confusion_csv(const ConfusionMatrix& confusion, const std::vector<std::string>& class_names);

// Group map file: one "class,group" line per class, optional header
// "class,group", '#' comments.
std::map<std::string, std::string> read_group_map(const std::filesystem::path& path);

struct GroupBlock {
    std::string true_group;
    std::string other_group;
    double mean = 0.0;   // mean off-diagonal C(i, j), j in true_group, i in other_group
    std::size_t cells = 0;
};

struct GroupReport {
    std::vector<GroupBlock> blocks;
    double within_mean = 0.0;
    double cross_mean = 0.0;
};

// Diagonal cells (i == j) are excluded. Classes missing from `groups`
// raise LabelError.
GroupReport group_report(const ConfusionMatrix& confusion, const std::vector<std::string>& class_names,
                         const std::map<std::string, std::string>& groups);
// true_group,other_group,cells,mean followed by within/cross summary rows.
std::string group_report_csv(const GroupReport& report);

} // namespace hintaug
