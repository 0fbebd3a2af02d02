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
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hintaug/tensor.hpp"

namespace hintaug {

enum class Provenance { synthetic, folder };

// Labelled images, each a [C×H×W] tensor with values in [0, 1].
struct Dataset {
    std::vector<Tensor> images;
    std::vector<std::size_t> labels;
    std::vector<std::string> class_names; // index order == sorted name order
    std::size_t channels = 3;
    std::size_t height = 0;
    std::size_t width = 0;
    Provenance provenance = Provenance::synthetic;

    std::size_t size() const { return images.size(); }
    std::size_t num_classes() const { return class_names.size(); }
    std::vector<std::size_t> class_histogram() const;
    // Throws DatasetError / DimensionError / LabelError.
    void validate() const;
};

struct SyntheticSpec {
    std::size_t classes = 6;
    std::size_t samples_per_class = 20;
    std::size_t image_size = 32;
    std::uint64_t seed = 7;
    // Strength of a fixed style change (channel rotation and a stripe
    // overlay) used to separate a tuning domain from the pretraining domain.
    double shift = 0.0;
};

// Textured blobs: the texture family (rings, stripes, checkers) and its
// frequency are class-conditional; blob shape, position, colour and the
// background gradient are nuisance. Classes sharing a family form the
// confusable pairs. Pixels are multiples of 1/255 so PPM export is lossless.
Dataset generate_synthetic(const SyntheticSpec& spec);

struct FolderOptions {
    // When set, every image is center-cropped to crop_size×crop_size.
    std::optional<std::size_t> crop_size;
};

// Reads `labels.csv` (filename,class) and binary PPM (P6) images.
Dataset load_folder(const std::filesystem::path& dir, const FolderOptions& options = {});
void save_folder(const Dataset& data, const std::filesystem::path& dir);

// Binary PPM (P6, 3 channels) and PGM (P5, 1 channel), maxval 255.
Tensor read_pnm(const std::filesystem::path& path);
void write_pnm(const std::filesystem::path& path, const Tensor& image);
void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels);

} // namespace hintaug
