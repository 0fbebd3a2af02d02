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

#include "hintaug/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hintaug/error.hpp"

namespace hintaug {

namespace {

enum class Kind { count, integer, real, flag, text, choice };

struct KeySpec {
    const char* key;
    Kind kind;
    const char* fallback;
    std::vector<std::string> choices = {};
};

const std::vector<KeySpec>& schema()
{
    static const std::vector<KeySpec> keys = {
        {"seed", Kind::count, "0"},
        {"shots", Kind::count, "4"},
        {"lambda", Kind::real, "0.1"},
        {"epsilon", Kind::real, "0.001"},
        {"num_patches", Kind::text, "1"},
        {"attack.steps", Kind::count, "1"},
        {"attack.objective", Kind::choice, "proposed", {"full", "untarget", "random", "proposed"}},
        {"attack.target_softmax", Kind::flag, "true"},
        {"model.image_size", Kind::count, "32"},
        {"model.patch_size", Kind::count, "4"},
        {"model.channels", Kind::count, "3"},
        {"model.embed_dim", Kind::count, "64"},
        {"model.num_layers", Kind::count, "6"},
        {"model.num_heads", Kind::count, "4"},
        {"model.mlp_ratio", Kind::real, "2"},
        {"model.num_classes", Kind::count, "6"},
        {"model.aod_layer", Kind::count, "5"},
        {"model.query_patch", Kind::integer, "-1"},
        {"model.init", Kind::choice, "fan_in", {"fan_in", "trunc_normal"}},
        {"pet.kind", Kind::choice, "adapter", {"adapter", "lora", "vpt"}},
        {"pet.bottleneck", Kind::count, "8"},
        {"pet.rank", Kind::count, "4"},
        {"pet.alpha", Kind::real, "4"},
        {"pet.prompts", Kind::count, "8"},
        {"train.epochs", Kind::count, "30"},
        {"train.batch_size", Kind::count, "16"},
        {"train.lr", Kind::real, "0.01"},
        {"train.augment_mode", Kind::choice, "hint_aug", {"hint_aug", "no_aug", "random_baseline"}},
        {"train.keep_clean", Kind::flag, "false"},
        {"train.jitter", Kind::real, "0.4"},
        {"data.source", Kind::choice, "synthetic", {"synthetic", "folder"}},
        {"data.path", Kind::text, ""},
        {"data.crop", Kind::count, "0"},
        {"data.classes", Kind::count, "6"},
        {"data.samples_per_class", Kind::count, "20"},
        {"data.seed", Kind::count, "7"},
        {"data.shift", Kind::real, "0.5"},
        {"pretrain.epochs", Kind::count, "30"},
        {"pretrain.batch_size", Kind::count, "16"},
        {"pretrain.lr", Kind::real, "0.05"},
        {"pretrain.momentum", Kind::real, "0.9"},
        {"pretrain.clip_norm", Kind::real, "1"},
        {"pretrain.data.source", Kind::choice, "synthetic", {"synthetic", "folder"}},
        {"pretrain.data.path", Kind::text, ""},
        {"pretrain.data.crop", Kind::count, "0"},
        {"pretrain.data.classes", Kind::count, "6"},
        {"pretrain.data.samples_per_class", Kind::count, "40"},
        {"pretrain.data.seed", Kind::count, "3"},
        {"pretrain.data.shift", Kind::real, "0"},
        {"ablate.seeds", Kind::count, "3"},
        {"paths.out", Kind::text, "out"},
    };
    return keys;
}

const KeySpec& spec_for(const std::string& key)
{
    for (const auto& k : schema()) {
        if (key == k.key) {
            return k;
        }
    }
    throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    return s;
}

bool parse_real(const std::string& text, double& out)
{
    const char* b = text.data();
    const char* e = b + text.size();
    const auto r = std::from_chars(b, e, out);
    return r.ec == std::errc() && r.ptr == e && std::isfinite(out);
}

bool parse_long(const std::string& text, long& out)
{
    const char* b = text.data();
    const char* e = b + text.size();
    if (b != e && *b == '+') {
        ++b;
    }
    const auto r = std::from_chars(b, e, out);
    return r.ec == std::errc() && r.ptr == e;
}

std::string normalize(const KeySpec& spec, const std::string& raw)
{
    const std::string value = trim(raw);
    auto bad = [&](const std::string& expected) {
        return ConfigError("config key '" + std::string(spec.key) + "': expected " + expected + ", got '" + value
                           + "'");
    };
    if (value.find('#') != std::string::npos || value.find('\n') != std::string::npos) {
        throw bad("a value without '#' or newlines");
    }
    switch (spec.kind) {
    case Kind::count: {
        long v = 0;
        if (!parse_long(value, v) || v < 0) {
            throw bad("a non-negative integer");
        }
        return std::to_string(v);
    }
    case Kind::integer: {
        long v = 0;
        if (!parse_long(value, v)) {
            throw bad("an integer");
        }
        return std::to_string(v);
    }
    case Kind::real: {
        double v = 0.0;
        if (!parse_real(value, v)) {
            throw bad("a finite number");
        }
        return canonical_number(v);
    }
    case Kind::flag: {
        const std::string v = lower(value);
        if (v == "true" || v == "1" || v == "yes" || v == "on") {
            return "true";
        }
        if (v == "false" || v == "0" || v == "no" || v == "off") {
            return "false";
        }
        throw bad("true or false");
    }
    case Kind::choice: {
        std::string v = lower(value);
        std::replace(v.begin(), v.end(), '-', '_');
        if (v == "hintaug") {
            v = "hint_aug";
        }
        if (std::find(spec.choices.begin(), spec.choices.end(), v) == spec.choices.end()) {
            std::string all;
            for (const auto& c : spec.choices) {
                all += (all.empty() ? "" : ", ") + c;
            }
            throw bad("one of " + all);
        }
        return v;
    }
    case Kind::text:
        if (std::string(spec.key) == "num_patches") {
            if (lower(value) == "all" || value == "0") {
                return "all";
            }
            long v = 0;
            if (!parse_long(value, v) || v < 1) {
                throw bad("a positive integer or 'all'");
            }
            return std::to_string(v);
        }
        return value;
    }
    return value;
}

} // namespace

std::string canonical_number(double value)
{
    // Shortest round-trip digits; plain decimals across the range configs use.
    char buf[400];
    const double mag = std::abs(value);
    const bool plain = value == 0.0 || (mag >= 1e-6 && mag < 1e15);
    const auto r = plain ? std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::fixed)
                         : std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, r.ptr);
}

RunConfig::RunConfig()
{
    for (const auto& k : schema()) {
        values_[k.key] = k.fallback;
    }
}

std::vector<std::string> RunConfig::known_keys()
{
    std::vector<std::string> keys;
    for (const auto& k : schema()) {
        keys.emplace_back(k.key);
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

void RunConfig::set(const std::string& key, const std::string& value)
{
    values_[key] = normalize(spec_for(key), value);
}

void RunConfig::apply_override(const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) {
        throw ConfigError("override '" + assignment + "' is not of the form key=value");
    }
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

RunConfig RunConfig::parse(const std::string& text, const std::string& origin)
{
    RunConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line.erase(hash);
        }
        line = trim(line);
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(number) + ": expected 'key = value'");
        }
        try {
            cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(number) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config file " + path.string());
    }
    std::ostringstream os;
    os << in.rdbuf();
    return parse(os.str(), path.string());
}

const std::string& RunConfig::get(const std::string& key) const
{
    spec_for(key);
    return values_.at(key);
}

double RunConfig::real(const std::string& key) const
{
    double v = 0.0;
    parse_real(get(key), v);
    return v;
}

long RunConfig::integer(const std::string& key) const
{
    long v = 0;
    parse_long(get(key), v);
    return v;
}

std::size_t RunConfig::count(const std::string& key) const
{
    return static_cast<std::size_t>(integer(key));
}

bool RunConfig::flag(const std::string& key) const
{
    return get(key) == "true";
}

std::string RunConfig::serialize() const
{
    std::ostringstream os;
    for (const auto& [k, v] : values_) {
        os << k << " = " << v << '\n';
    }
    return os.str();
}

ViTConfig RunConfig::model_config() const
{
    ViTConfig c;
    c.image_size = count("model.image_size");
    c.patch_size = count("model.patch_size");
    c.channels = count("model.channels");
    c.embed_dim = count("model.embed_dim");
    c.num_layers = count("model.num_layers");
    c.num_heads = count("model.num_heads");
    c.mlp_ratio = real("model.mlp_ratio");
    c.num_classes = count("model.num_classes");
    c.aod_layer = count("model.aod_layer");
    c.query_patch = integer("model.query_patch");
    return c;
}

PetHyper RunConfig::pet_hyper() const
{
    PetHyper h;
    h.bottleneck = count("pet.bottleneck");
    h.rank = count("pet.rank");
    h.alpha = real("pet.alpha");
    h.prompts = count("pet.prompts");
    return h;
}

PetKind RunConfig::pet_kind() const
{
    return parse_pet_kind(get("pet.kind"));
}

TrainConfig RunConfig::train_config() const
{
    TrainConfig t;
    t.epochs = count("train.epochs");
    t.batch_size = count("train.batch_size");
    t.lr = real("train.lr");
    t.lambda = real("lambda");
    t.attack.epsilon = real("epsilon");
    t.attack.steps = count("attack.steps");
    t.attack.objective = parse_objective(get("attack.objective"));
    t.attack.target_softmax = flag("attack.target_softmax");
    t.num_patches = get("num_patches") == "all" ? 0 : count("num_patches");
    t.augment_mode = parse_augment_mode(get("train.augment_mode"));
    t.pet_kind = pet_kind();
    t.pet_hyper = pet_hyper();
    t.seed = count("seed");
    t.keep_clean = flag("train.keep_clean");
    t.jitter = real("train.jitter");
    return t;
}

PretrainConfig RunConfig::pretrain_config() const
{
    PretrainConfig p;
    p.epochs = count("pretrain.epochs");
    p.batch_size = count("pretrain.batch_size");
    p.lr = real("pretrain.lr");
    p.momentum = real("pretrain.momentum");
    p.clip_norm = real("pretrain.clip_norm");
    p.seed = Rng::derive(count("seed"), 2);
    return p;
}

DataSpec RunConfig::data_spec(const std::string& prefix) const
{
    if (prefix != "data" && prefix != "pretrain.data") {
        throw ConfigError("unknown data prefix '" + prefix + "'");
    }
    DataSpec d;
    d.source = get(prefix + ".source");
    d.path = get(prefix + ".path");
    d.crop = count(prefix + ".crop");
    d.synthetic.classes = count(prefix + ".classes");
    d.synthetic.samples_per_class = count(prefix + ".samples_per_class");
    d.synthetic.seed = count(prefix + ".seed");
    d.synthetic.shift = real(prefix + ".shift");
    d.synthetic.image_size = count("model.image_size");
    return d;
}

Dataset RunConfig::load_dataset(const std::string& prefix) const
{
    const DataSpec d = data_spec(prefix);
    if (d.source == "folder") {
        if (d.path.empty()) {
            throw ConfigError(prefix + ".path must be set when " + prefix + ".source = folder");
        }
        FolderOptions opt;
        if (d.crop > 0) {
            opt.crop_size = d.crop;
        }
        return load_folder(d.path, opt);
    }
    return generate_synthetic(d.synthetic);
}

void RunConfig::validate() const
{
    const ViTConfig model = model_config();
    model.validate();
    train_config().validate(model);
    (void)PetModule::create(model, pet_kind(), pet_hyper(), 0); // rank/bottleneck against embed_dim
    if (count("shots") < 1) {
        throw ConfigError("shots must be at least 1");
    }
    if (count("ablate.seeds") < 1) {
        throw ConfigError("ablate.seeds must be at least 1");
    }
    const PretrainConfig p = pretrain_config();
    if (p.batch_size < 1 || !(p.lr > 0.0) || p.momentum < 0.0 || p.momentum >= 1.0 || p.clip_norm < 0.0) {
        throw ConfigError("pretrain needs batch_size >= 1, lr > 0, momentum in [0, 1) and clip_norm >= 0");
    }
    for (const std::string prefix : {"data", "pretrain.data"}) {
        const DataSpec d = data_spec(prefix);
        if (d.source == "synthetic") {
            if (d.synthetic.classes != model.num_classes) {
                throw ConfigError(prefix + ".classes = " + std::to_string(d.synthetic.classes)
                                  + " but model.num_classes = " + std::to_string(model.num_classes));
            }
            if (model.channels != 3) {
                throw ConfigError("synthetic data is RGB; model.channels must be 3");
            }
        } else if (d.path.empty()) {
            throw ConfigError(prefix + ".path must be set when " + prefix + ".source = folder");
        } else if (d.crop > 0 && d.crop != model.image_size) {
            throw ConfigError(prefix + ".crop must equal model.image_size");
        }
    }
}

} // namespace hintaug
