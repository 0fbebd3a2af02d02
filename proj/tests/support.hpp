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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "hintaug/rng.hpp"
#include "hintaug/tensor.hpp"
#include "hintaug/vit.hpp"

namespace hintaug::testing {

// 16x16 RGB, 4x4 patches (N = 16), two blocks.
inline ViTConfig toy_config(std::size_t num_classes = 4)
{
    ViTConfig c;
    c.image_size = 16;
    c.patch_size = 4;
    c.channels = 3;
    c.embed_dim = 16;
    c.num_layers = 2;
    c.num_heads = 2;
    c.mlp_ratio = 2.0;
    c.num_classes = num_classes;
    c.aod_layer = 1;
    return c;
}

inline Tensor random_image(const ViTConfig& c, std::uint64_t seed)
{
    Rng rng(seed);
    Tensor image(Shape{c.channels, c.image_size, c.image_size});
    for (double& v : image.mutable_data()) {
        v = rng.uniform();
    }
    return image;
}

// Adds N(0, sigma^2) to every weight so gradients are not dominated by the
// near-zero initial head.
inline ViT perturbed_model(const ViTConfig& c, std::uint64_t seed, double sigma = 0.15)
{
    ViT model = ViT::initialize(c, seed);
    Rng rng(seed + 999);
    for (auto& w : model.named_weights()) {
        Tensor t = w.tensor;
        for (double& v : t.mutable_data()) {
            v += sigma * rng.normal();
        }
    }
    return model;
}

inline std::shared_ptr<const ViT> share(ViT model) { return std::make_shared<const ViT>(std::move(model)); }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        path_ = std::filesystem::temp_directory_path()
                / ("hintaug_" + tag + "_" + std::to_string(Rng(std::random_device{}()).next() % 1000000007ull));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& leaf) const { return path_ / leaf; }

private:
    std::filesystem::path path_;
};

} // namespace hintaug::testing
