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

#include "hintaug/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hintaug/error.hpp"
#include "hintaug/rng.hpp"

namespace hintaug {

std::vector<std::size_t> Dataset::class_histogram() const
{
    std::vector<std::size_t> h(num_classes(), 0);
    for (std::size_t y : labels) {
        ++h.at(y);
    }
    return h;
}

void Dataset::validate() const
{
    if (images.empty()) {
        throw DatasetError("dataset is empty");
    }
    if (images.size() != labels.size()) {
        throw DatasetError("dataset has " + std::to_string(images.size()) + " images but "
                           + std::to_string(labels.size()) + " labels");
    }
    const Shape want = {channels, height, width};
    for (std::size_t i = 0; i < images.size(); ++i) {
        if (images[i].shape() != want) {
            throw DimensionError("image " + std::to_string(i) + " has shape " + shape_to_string(images[i].shape())
                                 + ", dataset expects " + shape_to_string(want));
        }
        if (labels[i] >= num_classes()) {
            throw LabelError("label " + std::to_string(labels[i]) + " of image " + std::to_string(i)
                             + " outside [0, " + std::to_string(num_classes()) + ")");
        }
    }
}

// ---- synthetic data ------------------------------------------------------------

namespace {

constexpr double two_pi = 6.28318530717958647692;
const char* const family_names[] = {"rings", "stripes", "checkers"};

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

Tensor render(std::size_t cls, std::size_t size, double shift, Rng& rng)
{
    const std::size_t family = cls % 3;
    const std::size_t variant = cls / 3;
    const double s = static_cast<double>(size);
    const double freq = (0.085 + 0.075 * static_cast<double>(variant)) * 32.0 / s; // cycles per pixel

    const double cx = rng.uniform(0.3, 0.7) * s, cy = rng.uniform(0.3, 0.7) * s;
    const double radius = rng.uniform(0.3, 0.45) * s;
    const bool square = rng.uniform() < 0.5;
    const double phase = rng.uniform(0.0, two_pi);
    const double theta = (rng.uniform() < 0.5 ? 0.0 : two_pi / 4) + rng.uniform(-0.26, 0.26);
    double fg_hi[3], fg_lo[3], bg_a[3], bg_b[3];
    for (int ch = 0; ch < 3; ++ch) {
        fg_hi[ch] = rng.uniform(0.55, 1.0);
        fg_lo[ch] = rng.uniform(0.0, 0.4);
        bg_a[ch] = rng.uniform(0.2, 0.8);
        bg_b[ch] = rng.uniform(0.2, 0.8);
    }
    const double bg_angle = rng.uniform(0.0, two_pi);

    Tensor img({3, size, size});
    auto px = img.mutable_data();
    const double ct = std::cos(theta), st = std::sin(theta);
    for (std::size_t y = 0; y < size; ++y) {
        for (std::size_t x = 0; x < size; ++x) {
            const double dx = static_cast<double>(x) + 0.5 - cx, dy = static_cast<double>(y) + 0.5 - cy;
            const bool inside = square ? std::max(std::abs(dx), std::abs(dy)) <= radius * 0.85
                                       : dx * dx + dy * dy <= radius * radius;
            double tex = 0.0;
            const double u = dx * ct + dy * st, v = -dx * st + dy * ct;
            switch (family) {
            case 0:
                tex = 0.5 + 0.5 * std::cos(two_pi * freq * std::sqrt(dx * dx + dy * dy) + phase);
                break;
            case 1:
                tex = 0.5 + 0.5 * std::cos(two_pi * freq * u + phase);
                break;
            default:
                tex = std::cos(two_pi * freq * u + phase) * std::cos(two_pi * freq * v + phase) >= 0.0 ? 1.0 : 0.0;
                break;
            }
            const double t = (static_cast<double>(x) * std::cos(bg_angle) + static_cast<double>(y) * std::sin(bg_angle))
                             / s * 0.5 + 0.5;
            for (std::size_t ch = 0; ch < 3; ++ch) {
                double val = inside ? fg_hi[ch] * tex + fg_lo[ch] * (1.0 - tex)
                                    : bg_a[ch] * (1.0 - t) + bg_b[ch] * t;
                val += 0.03 * rng.normal();
                px[ch * size * size + y * size + x] = val;
            }
        }
    }
    if (shift > 0.0) {
        Tensor styled = img.clone();
        auto out = styled.mutable_data();
        for (std::size_t y = 0; y < size; ++y) {
            for (std::size_t x = 0; x < size; ++x) {
                const double overlay = 0.25 * shift * std::cos(two_pi * static_cast<double>(x + y) / 5.0);
                for (std::size_t ch = 0; ch < 3; ++ch) {
                    const std::size_t src = ((ch + 1) % 3) * size * size + y * size + x;
                    const std::size_t dst = ch * size * size + y * size + x;
                    out[dst] = (1.0 - shift) * px[dst] + shift * px[src] + overlay;
                }
            }
        }
        img = styled;
        px = img.mutable_data();
    }
    for (double& v : px) {
        v = quantize(v);
    }
    return img;
}

} // namespace

Dataset generate_synthetic(const SyntheticSpec& spec)
{
    if (spec.classes < 2) {
        throw ConfigError("synthetic data needs at least 2 classes");
    }
    if (spec.samples_per_class == 0 || spec.image_size < 4) {
        throw ConfigError("synthetic data needs samples_per_class >= 1 and image_size >= 4");
    }
    Dataset d;
    d.channels = 3;
    d.height = d.width = spec.image_size;
    d.provenance = Provenance::synthetic;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        char name[64];
        std::snprintf(name, sizeof(name), "c%02zu_%s_f%zu", c, family_names[c % 3], c / 3);
        d.class_names.emplace_back(name);
    }
    Rng rng(spec.seed);
    for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
        for (std::size_t c = 0; c < spec.classes; ++c) {
            d.images.push_back(render(c, spec.image_size, spec.shift, rng));
            d.labels.push_back(c);
        }
    }
    return d;
}

// ---- PNM codec -------------------------------------------------------------------

namespace {

std::size_t read_header_int(const std::string& bytes, std::size_t& pos, const std::string& file)
{
    for (;;) {
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        }
        if (pos < bytes.size() && bytes[pos] == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') {
                ++pos;
            }
            continue;
        }
        break;
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
    }
    if (start == pos || pos - start > 9) {
        throw ParseError(file + ": malformed PNM header");
    }
    return std::stoul(bytes.substr(start, pos - start));
}

} // namespace

Tensor read_pnm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open image '" + path.string() + "'");
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const std::string file = path.filename().string();
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '6' && bytes[1] != '5')) {
        throw ParseError(file + ": not a binary PPM (P6) or PGM (P5) image");
    }
    const std::size_t channels = bytes[1] == '6' ? 3 : 1;
    std::size_t pos = 2;
    const std::size_t width = read_header_int(bytes, pos, file);
    const std::size_t height = read_header_int(bytes, pos, file);
    const std::size_t maxval = read_header_int(bytes, pos, file);
    if (width == 0 || height == 0 || maxval == 0 || maxval > 255) {
        throw ParseError(file + ": unsupported PNM dimensions or maxval");
    }
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        throw ParseError(file + ": malformed PNM header");
    }
    ++pos;
    const std::size_t count = width * height * channels;
    if (bytes.size() - pos < count) {
        throw ParseError(file + ": truncated pixel data");
    }
    Tensor img({channels, height, width});
    auto out = img.mutable_data();
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t ch = 0; ch < channels; ++ch) {
                const auto v = static_cast<unsigned char>(bytes[pos + (y * width + x) * channels + ch]);
                out[ch * height * width + y * width + x] = static_cast<double>(v) / static_cast<double>(maxval);
            }
        }
    }
    return img;
}

void write_pnm(const std::filesystem::path& path, const Tensor& image)
{
    if (image.rank() != 3 || (image.dim(0) != 3 && image.dim(0) != 1)) {
        throw DimensionError("write_pnm expects [3×H×W] or [1×H×W], got " + shape_to_string(image.shape()));
    }
    const std::size_t channels = image.dim(0), height = image.dim(1), width = image.dim(2);
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write image '" + path.string() + "'");
    }
    out << (channels == 3 ? "P6" : "P5") << '\n' << width << ' ' << height << "\n255\n";
    std::string buf(width * height * channels, '\0');
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            for (std::size_t ch = 0; ch < channels; ++ch) {
                const double v = std::clamp(image[ch * height * width + y * width + x], 0.0, 1.0);
                buf[(y * width + x) * channels + ch] = static_cast<char>(std::lround(v * 255.0));
            }
        }
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& pixels)
{
    if (pixels.size() != width * height) {
        throw DimensionError("write_pgm: " + std::to_string(pixels.size()) + " pixels for " + std::to_string(width)
                             + "x" + std::to_string(height));
    }
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write image '" + path.string() + "'");
    }
    out << "P5\n" << width << ' ' << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

// ---- folders -------------------------------------------------------------------

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

Tensor center_crop(const Tensor& img, std::size_t size, const std::string& file)
{
    const std::size_t c = img.dim(0), h = img.dim(1), w = img.dim(2);
    if (h < size || w < size) {
        throw DimensionError(file + ": " + std::to_string(w) + "x" + std::to_string(h) + " is smaller than crop "
                             + std::to_string(size));
    }
    const std::size_t oy = (h - size) / 2, ox = (w - size) / 2;
    Tensor out({c, size, size});
    auto dst = out.mutable_data();
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < size; ++y) {
            for (std::size_t x = 0; x < size; ++x) {
                dst[ch * size * size + y * size + x] = img[ch * h * w + (y + oy) * w + (x + ox)];
            }
        }
    }
    return out;
}

} // namespace

Dataset load_folder(const std::filesystem::path& dir, const FolderOptions& options)
{
    const auto csv = dir / "labels.csv";
    std::ifstream in(csv);
    if (!in) {
        throw DatasetError("no labels.csv in '" + dir.string() + "'");
    }
    std::vector<std::pair<std::string, std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw ParseError("labels.csv: malformed line '" + line + "'");
        }
        std::string file = trim(line.substr(0, comma)), cls = trim(line.substr(comma + 1));
        if (first && file == "filename" && cls == "class") {
            first = false;
            continue;
        }
        first = false;
        rows.emplace_back(std::move(file), std::move(cls));
    }
    if (rows.empty()) {
        throw DatasetError("'" + dir.string() + "' contains no labelled images");
    }

    std::set<std::string> names;
    const auto class_file = dir / "classes.txt";
    const bool declared = std::filesystem::exists(class_file);
    if (declared) {
        std::ifstream cf(class_file);
        while (std::getline(cf, line)) {
            if (!trim(line).empty()) {
                names.insert(trim(line));
            }
        }
    } else {
        for (const auto& r : rows) {
            names.insert(r.second);
        }
    }
    std::map<std::string, std::size_t> index;
    Dataset d;
    d.provenance = Provenance::folder;
    for (const auto& n : names) {
        index[n] = d.class_names.size();
        d.class_names.push_back(n);
    }
    for (const auto& [file, cls] : rows) {
        const auto it = index.find(cls);
        if (it == index.end()) {
            throw LabelError("labels.csv: unknown class '" + cls + "' for " + file);
        }
        Tensor img = read_pnm(dir / file);
        if (options.crop_size) {
            img = center_crop(img, *options.crop_size, file);
        }
        if (d.images.empty()) {
            d.channels = img.dim(0);
            d.height = img.dim(1);
            d.width = img.dim(2);
        } else if (img.shape() != Shape{d.channels, d.height, d.width}) {
            throw DimensionError(file + ": shape " + shape_to_string(img.shape()) + " differs from "
                                 + shape_to_string({d.channels, d.height, d.width}) + " (enable cropping)");
        }
        d.images.push_back(img);
        d.labels.push_back(it->second);
    }
    d.validate();
    return d;
}

void save_folder(const Dataset& data, const std::filesystem::path& dir)
{
    data.validate();
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "labels.csv", std::ios::binary | std::ios::trunc);
    std::ofstream classes(dir / "classes.txt", std::ios::binary | std::ios::trunc);
    if (!csv || !classes) {
        throw IoError("cannot write dataset index in '" + dir.string() + "'");
    }
    for (const auto& n : data.class_names) {
        classes << n << '\n';
    }
    csv << "filename,class\n";
    for (std::size_t i = 0; i < data.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img_%05zu.%s", i, data.channels == 3 ? "ppm" : "pgm");
        write_pnm(dir / name, data.images[i]);
        csv << name << ',' << data.class_names[data.labels[i]] << '\n';
    }
}

} // namespace hintaug
