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

#include "hintaug/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "hintaug/checkpoint.hpp"
#include "hintaug/dataset.hpp"
#include "hintaug/error.hpp"
#include "hintaug/harness.hpp"

namespace hintaug {

std::vector<std::uint8_t> scores_to_gray(const std::vector<double>& scores)
{
    std::vector<std::uint8_t> out(scores.size(), 0);
    if (scores.empty()) {
        return out;
    }
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    const double range = *hi - *lo;
    if (!(range > 0.0)) {
        return out;
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(std::lround((scores[i] - *lo) / range * 255.0));
    }
    return out;
}

AttentionExport attention_maps(const ViT& backbone, const PetModule* pet, const Tensor& image, double lambda)
{
    const ViTConfig& c = backbone.config;
    AttentionExport e;
    e.pretrained = score_map(forward(backbone, image).attention, c.aod_layer, c.resolved_query_patch(),
                             ScoreSource::pretrained);
    e.tuned = score_map(forward(backbone, image, pet).attention, c.aod_layer, c.resolved_query_patch(),
                        ScoreSource::tuned);
    e.report = detect_overfit(e.pretrained, e.tuned, lambda);
    return e;
}

std::string attention_scores_csv(const AttentionExport& maps, std::size_t grid)
{
    std::ostringstream os;
    os << "patch,row,col,s_pretrained,s_tuned,drift\n";
    for (std::size_t j = 0; j < maps.pretrained.scores.size(); ++j) {
        os << j << ',' << j / grid << ',' << j % grid << ',' << format_number(maps.pretrained.scores[j]) << ','
           << format_number(maps.tuned.scores[j]) << ',' << format_number(maps.report.drift[j]) << '\n';
    }
    return os.str();
}

std::string overfit_report_csv(const AttentionExport& maps)
{
    const OverfitReport& r = maps.report;
    std::ostringstream os;
    os << "indicator,selected_patch,lambda,total_drift,threshold,layer,query\n";
    os << r.indicator << ',' << r.selected_patch << ',' << format_number(r.lambda_used) << ','
       << format_number(r.total_drift) << ',' << format_number(r.threshold) << ',' << maps.pretrained.layer << ','
       << maps.pretrained.query << '\n';
    return os.str();
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text)
{
    write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::filesystem::path with_suffix(const std::filesystem::path& prefix, const std::string& suffix)
{
    return prefix.parent_path() / (prefix.filename().string() + suffix);
}

} // namespace

std::vector<std::filesystem::path> write_attention_export(const AttentionExport& maps, std::size_t grid,
                                                          const std::filesystem::path& prefix)
{
    if (grid * grid != maps.pretrained.scores.size()) {
        throw DimensionError("score map of " + std::to_string(maps.pretrained.scores.size())
                             + " entries does not fill a " + std::to_string(grid) + "x" + std::to_string(grid)
                             + " grid");
    }
    std::vector<std::filesystem::path> written = {
        with_suffix(prefix, "_pretrained.pgm"), with_suffix(prefix, "_tuned.pgm"),
        with_suffix(prefix, "_scores.csv"), with_suffix(prefix, "_report.csv")};
    if (!prefix.parent_path().empty()) {
        std::filesystem::create_directories(prefix.parent_path());
    }
    write_pgm(written[0], grid, grid, scores_to_gray(maps.pretrained.scores));
    write_pgm(written[1], grid, grid, scores_to_gray(maps.tuned.scores));
    write_text(written[2], attention_scores_csv(maps, grid));
    write_text(written[3], overfit_report_csv(maps));
    return written;
}

std::string confusion_csv(const ConfusionMatrix& confusion, const std::vector<std::string>& class_names)
{
    const std::size_t m = confusion.num_classes();
    if (class_names.size() != m) {
        throw DimensionError("confusion matrix has " + std::to_string(m) + " classes but "
                             + std::to_string(class_names.size()) + " names were given");
    }
    std::ostringstream os;
    os << "true\\pred";
    for (const auto& n : class_names) {
        os << ',' << n;
    }
    os << '\n';
    for (std::size_t j = 0; j < m; ++j) {
        os << class_names[j];
        for (std::size_t i = 0; i < m; ++i) {
            os << ',' << format_number(confusion(i, j));
        }
        os << '\n';
    }
    return os.str();
}

std::map<std::string, std::string> read_group_map(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open group map " + path.string());
    }
    std::map<std::string, std::string> groups;
    std::string line;
    std::size_t number = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    while (std::getline(in, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError(path.string() + ":" + std::to_string(number) + ": expected 'class,group'");
        }
        const std::string cls = trim(line.substr(0, comma));
        const std::string group = trim(line.substr(comma + 1));
        if (number == 1 && cls == "class" && group == "group") {
            continue;
        }
        if (cls.empty() || group.empty()) {
            throw ParseError(path.string() + ":" + std::to_string(number) + ": empty class or group");
        }
        groups[cls] = group;
    }
    return groups;
}

GroupReport group_report(const ConfusionMatrix& confusion, const std::vector<std::string>& class_names,
                         const std::map<std::string, std::string>& groups)
{
    const std::size_t m = confusion.num_classes();
    if (class_names.size() != m) {
        throw DimensionError("class name count does not match the confusion matrix");
    }
    std::vector<std::string> group_of(m);
    std::set<std::string> names;
    for (std::size_t k = 0; k < m; ++k) {
        const auto it = groups.find(class_names[k]);
        if (it == groups.end()) {
            throw LabelError("class '" + class_names[k] + "' has no group in the group map");
        }
        group_of[k] = it->second;
        names.insert(it->second);
    }
    GroupReport report;
    double within = 0.0, cross = 0.0;
    std::size_t within_n = 0, cross_n = 0;
    for (const auto& tg : names) {
        for (const auto& og : names) {
            GroupBlock block{tg, og, 0.0, 0};
            for (std::size_t j = 0; j < m; ++j) {
                for (std::size_t i = 0; i < m; ++i) {
                    if (i == j || group_of[j] != tg || group_of[i] != og) {
                        continue;
                    }
                    block.mean += confusion(i, j);
                    ++block.cells;
                }
            }
            if (block.cells == 0) {
                continue;
            }
            (tg == og ? within : cross) += block.mean;
            (tg == og ? within_n : cross_n) += block.cells;
            block.mean /= static_cast<double>(block.cells);
            report.blocks.push_back(block);
        }
    }
    report.within_mean = within_n ? within / static_cast<double>(within_n) : 0.0;
    report.cross_mean = cross_n ? cross / static_cast<double>(cross_n) : 0.0;
    return report;
}

std::string group_report_csv(const GroupReport& report)
{
    std::ostringstream os;
    os << "true_group,other_group,cells,mean\n";
    for (const auto& b : report.blocks) {
        os << b.true_group << ',' << b.other_group << ',' << b.cells << ',' << format_number(b.mean) << '\n';
    }
    os << "*,within,," << format_number(report.within_mean) << '\n';
    os << "*,cross,," << format_number(report.cross_mean) << '\n';
    return os.str();
}

} // namespace hintaug
