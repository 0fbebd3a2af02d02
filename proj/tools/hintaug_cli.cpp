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

// Command-line front end. Talks to the library only through hintaug.h.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "hintaug/hintaug.h"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr int exit_usage = 1;
constexpr int exit_runtime = 2;

struct Failure {
    hintaug_status status;
    std::string message;
};

void check(hintaug_status s)
{
    if (s != HINTAUG_OK) {
        throw Failure{s, hintaug_last_error()};
    }
}

std::string take(char* text)
{
    std::string out = text ? text : "";
    hintaug_string_free(text);
    return out;
}

template <typename T, void (*Destroy)(T*)>
struct Handle {
    T* p = nullptr;
    Handle() = default;
    Handle(const Handle&) = delete;
    Handle& operator=(const Handle&) = delete;
    ~Handle() { Destroy(p); }
    T** out() { return &p; }
    T* get() const { return p; }
};

using Config = Handle<hintaug_config, hintaug_config_destroy>;
using Data = Handle<hintaug_dataset, hintaug_dataset_destroy>;
using Model = Handle<hintaug_model, hintaug_model_destroy>;
using Pet = Handle<hintaug_pet, hintaug_pet_destroy>;
using TuneResult = Handle<hintaug_tune_result, hintaug_tune_result_destroy>;

std::string hex(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string file_hash(const fs::path& p)
{
    std::uint64_t h = 0;
    check(hintaug_file_hash(p.string().c_str(), &h));
    return hex(h);
}

void write_text(const fs::path& path, const std::string& text)
{
    if (!path.parent_path().empty()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    out << text;
    if (!out) {
        throw Failure{HINTAUG_ERR_IO, "cannot write " + path.string()};
    }
}

// Everything a run depends on; the manifest stores exactly this.
struct Invocation {
    std::string command;
    std::string config_file;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string manifest;
    std::string out;
    std::map<std::string, std::string> args; // ckpt, pet, image, axis, grid, groups, prefix, dir
};

class Run {
public:
    explicit Run(const Invocation& inv) : inv_(inv) {}

    int execute();

private:
    void build_config();
    fs::path out_dir() const;
    std::string arg(const std::string& key) const;
    void require(const std::string& key) const;
    void load_backbone(Model& model);
    void record_input(const fs::path& p) { inputs_[p.generic_string()] = file_hash(p); }
    void record_output(const fs::path& p) { outputs_[p.generic_string()] = file_hash(p); }
    void record_classes(const hintaug_dataset* data);
    void write_manifest();

    void gen_data();
    void pretrain();
    void tune();
    void eval();
    void ablate();
    void attn_map();
    void confusion();

    Invocation inv_;
    Config config_;
    std::string config_text_;
    json classes_ = json::array();
    std::map<std::string, std::string> inputs_, outputs_;
    json results_ = json::object();
};

void Run::build_config()
{
    if (!inv_.manifest.empty()) {
        std::ifstream in(inv_.manifest);
        if (!in) {
            throw Failure{HINTAUG_ERR_IO, "cannot open manifest " + inv_.manifest};
        }
        json m;
        try {
            in >> m;
        } catch (const json::exception& e) {
            throw Failure{HINTAUG_ERR_PARSE, "manifest " + inv_.manifest + ": " + e.what()};
        }
        const std::string cmd = m.value("command", "");
        if (cmd != inv_.command) {
            throw Failure{HINTAUG_ERR_CONFIG, "manifest records command '" + cmd + "', not '" + inv_.command + "'"};
        }
        check(hintaug_config_parse(m.at("config").get<std::string>().c_str(), config_.out()));
        const json recorded = m.value("args", json::object());
        for (const auto& [k, v] : recorded.items()) {
            if (arg(k).empty()) {
                inv_.args[k] = v.get<std::string>();
            }
        }
    } else if (!inv_.config_file.empty()) {
        check(hintaug_config_load(inv_.config_file.c_str(), config_.out()));
    } else {
        check(hintaug_config_create(config_.out()));
    }
    for (const auto& o : inv_.overrides) {
        check(hintaug_config_override(config_.get(), o.c_str()));
    }
    if (inv_.seed) {
        check(hintaug_config_set(config_.get(), "seed", std::to_string(*inv_.seed).c_str()));
    }
    if (!inv_.out.empty()) {
        check(hintaug_config_set(config_.get(), "paths.out", inv_.out.c_str()));
    }
    check(hintaug_config_validate(config_.get()));
    char* text = nullptr;
    check(hintaug_config_serialize(config_.get(), &text));
    config_text_ = take(text);
}

fs::path Run::out_dir() const
{
    char* v = nullptr;
    check(hintaug_config_get(config_.get(), "paths.out", &v));
    return take(v);
}

std::string Run::arg(const std::string& key) const
{
    const auto it = inv_.args.find(key);
    return it == inv_.args.end() ? std::string() : it->second;
}

void Run::require(const std::string& key) const
{
    if (arg(key).empty()) {
        throw Failure{HINTAUG_ERR_CONFIG, inv_.command + " needs --" + key};
    }
}

void Run::load_backbone(Model& model)
{
    require("ckpt");
    check(hintaug_model_load(arg("ckpt").c_str(), model.out()));
    record_input(arg("ckpt"));
}

void Run::record_classes(const hintaug_dataset* data)
{
    std::size_t m = 0;
    check(hintaug_dataset_num_classes(data, &m));
    classes_ = json::array();
    for (std::size_t i = 0; i < m; ++i) {
        char* name = nullptr;
        check(hintaug_dataset_class_name(data, i, &name));
        classes_.push_back(take(name));
    }
}

void Run::write_manifest()
{
    json args = json::object();
    for (const auto& [k, v] : inv_.args) {
        if (!v.empty()) {
            args[k] = v;
        }
    }
    json m = {{"tool", "hintaug"},
              {"version", hintaug_version()},
              {"command", inv_.command},
              {"config", config_text_},
              {"args", args},
              {"class_names", classes_},
              {"inputs", inputs_},
              {"outputs", outputs_},
              {"results", results_}};
    const fs::path path = out_dir() / (inv_.command + "_manifest.json");
    write_text(path, m.dump(2) + "\n");
    std::cout << "manifest: " << path.generic_string() << "\n";
}

void Run::gen_data()
{
    const std::string prefix = arg("prefix").empty() ? "data" : arg("prefix");
    Data data;
    check(hintaug_dataset_from_config(config_.get(), prefix.c_str(), data.out()));
    const fs::path dir = arg("dir").empty() ? out_dir() / "dataset" : fs::path(arg("dir"));
    check(hintaug_dataset_save_folder(data.get(), dir.string().c_str()));
    record_classes(data.get());
    record_output(dir / "labels.csv");
    record_output(dir / "classes.txt");
    std::size_t n = 0;
    check(hintaug_dataset_size(data.get(), &n));
    results_["images"] = n;
    std::cout << "wrote " << n << " images to " << dir.generic_string() << "\n";
}

void Run::pretrain()
{
    Data data;
    check(hintaug_dataset_from_config(config_.get(), "pretrain.data", data.out()));
    record_classes(data.get());
    Model model;
    check(hintaug_model_pretrain(config_.get(), data.get(), model.out()));
    const fs::path ckpt = out_dir() / "backbone.hac";
    check(hintaug_model_save(model.get(), ckpt.string().c_str()));
    std::size_t epochs = 0;
    check(hintaug_model_curve(model.get(), nullptr, nullptr, 0, &epochs));
    std::vector<double> loss(epochs), acc(epochs);
    check(hintaug_model_curve(model.get(), loss.data(), acc.data(), epochs, &epochs));
    std::ostringstream csv;
    csv.precision(10);
    csv << "epoch,loss,train_acc\n";
    for (std::size_t e = 0; e < epochs; ++e) {
        csv << e + 1 << ',' << loss[e] << ',' << acc[e] << '\n';
    }
    write_text(out_dir() / "pretrain.csv", csv.str());
    record_output(ckpt);
    record_output(out_dir() / "pretrain.csv");
    std::uint64_t h = 0;
    check(hintaug_model_hash(model.get(), &h));
    results_["backbone_hash"] = hex(h);
    results_["final_train_accuracy"] = epochs ? acc.back() : 0.0;
    std::cout << "backbone " << hex(h) << " train acc " << (epochs ? acc.back() : 0.0) << "\n";
}

void Run::tune()
{
    Model model;
    load_backbone(model);
    Data data;
    check(hintaug_dataset_from_config(config_.get(), "data", data.out()));
    record_classes(data.get());
    TuneResult result;
    check(hintaug_tune(config_.get(), model.get(), data.get(), result.out()));
    char* csv = nullptr;
    check(hintaug_tune_result_metrics_csv(result.get(), &csv));
    write_text(out_dir() / "metrics.csv", take(csv));
    Pet pet;
    check(hintaug_tune_result_pet(result.get(), pet.out()));
    const fs::path pet_path = out_dir() / "pet.hac";
    check(hintaug_pet_save(pet.get(), model.get(), pet_path.string().c_str()));
    record_output(out_dir() / "metrics.csv");
    record_output(pet_path);
    std::size_t best_epoch = 0;
    double best = 0.0;
    check(hintaug_tune_result_best(result.get(), &best_epoch, &best));
    results_["best_epoch"] = best_epoch;
    results_["best_accuracy"] = best;
    std::cout << "best eval accuracy " << best << " at epoch " << best_epoch << "\n";
}

void Run::eval()
{
    Model model;
    load_backbone(model);
    Pet pet;
    if (!arg("pet").empty()) {
        check(hintaug_pet_load(arg("pet").c_str(), model.get(), pet.out()));
        record_input(arg("pet"));
    }
    Data data;
    check(hintaug_dataset_from_config(config_.get(), "data", data.out()));
    record_classes(data.get());
    double split = 0.0, all = 0.0;
    check(hintaug_model_eval_split(config_.get(), model.get(), pet.get(), data.get(), &split));
    check(hintaug_model_accuracy(model.get(), pet.get(), data.get(), &all));
    std::ostringstream csv;
    csv.precision(10);
    csv << "split,accuracy\neval," << split << "\nall," << all << '\n';
    write_text(out_dir() / "eval.csv", csv.str());
    record_output(out_dir() / "eval.csv");
    results_["eval_accuracy"] = split;
    std::cout << "eval accuracy " << split << " (all samples " << all << ")\n";
}

void Run::ablate()
{
    require("axis");
    Model model;
    load_backbone(model);
    Data data;
    check(hintaug_dataset_from_config(config_.get(), "data", data.out()));
    record_classes(data.get());
    char* csv = nullptr;
    const std::string grid = arg("grid");
    check(hintaug_ablate(config_.get(), model.get(), data.get(), arg("axis").c_str(),
                         grid.empty() ? nullptr : grid.c_str(), &csv));
    const std::string text = take(csv);
    const fs::path path = out_dir() / ("ablation_" + arg("axis") + ".csv");
    write_text(path, text);
    record_output(path);
    std::cout << text;
}

void Run::attn_map()
{
    require("image");
    Model model;
    load_backbone(model);
    Pet pet;
    if (!arg("pet").empty()) {
        check(hintaug_pet_load(arg("pet").c_str(), model.get(), pet.out()));
        record_input(arg("pet"));
    }
    record_input(arg("image"));
    char* v = nullptr;
    check(hintaug_config_get(config_.get(), "lambda", &v));
    const double lambda = std::stod(take(v));
    const fs::path prefix = arg("prefix").empty() ? out_dir() / "attn" : fs::path(arg("prefix"));
    char* report = nullptr;
    check(hintaug_attention_export(model.get(), pet.get(), arg("image").c_str(), lambda, prefix.string().c_str(),
                                   &report));
    for (const char* suffix : {"_pretrained.pgm", "_tuned.pgm", "_scores.csv", "_report.csv"}) {
        record_output(prefix.parent_path() / (prefix.filename().string() + suffix));
    }
    std::cout << take(report);
}

void Run::confusion()
{
    Model model;
    load_backbone(model);
    Data data;
    check(hintaug_dataset_from_config(config_.get(), "data", data.out()));
    record_classes(data.get());
    const std::string groups = arg("groups");
    if (!groups.empty()) {
        record_input(groups);
    }
    char* cm = nullptr;
    char* gr = nullptr;
    check(hintaug_confusion_export(model.get(), data.get(), groups.empty() ? nullptr : groups.c_str(), &cm, &gr));
    write_text(out_dir() / "confusion.csv", take(cm));
    record_output(out_dir() / "confusion.csv");
    if (!groups.empty()) {
        const std::string g = take(gr);
        write_text(out_dir() / "groups.csv", g);
        record_output(out_dir() / "groups.csv");
        std::cout << g;
    }
}

int Run::execute()
{
    build_config();
    if (inv_.command == "gen-data") {
        gen_data();
    } else if (inv_.command == "pretrain") {
        pretrain();
    } else if (inv_.command == "tune") {
        tune();
    } else if (inv_.command == "eval") {
        eval();
    } else if (inv_.command == "ablate") {
        ablate();
    } else if (inv_.command == "attn-map") {
        attn_map();
    } else if (inv_.command == "confusion") {
        confusion();
    }
    write_manifest();
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Few-shot PET tuning with attention-guided, confusion-driven augmentation"};
    app.require_subcommand(1);
    Invocation inv;
    std::uint64_t seed = 0;

    struct Spec {
        const char* name;
        const char* help;
        std::vector<std::pair<const char*, const char*>> args;
    };
    const std::vector<Spec> commands = {
        {"gen-data", "write the configured synthetic dataset as PPM files",
         {{"prefix", "data or pretrain.data"}, {"dir", "output folder"}}},
        {"pretrain", "train a backbone on the pretrain.data domain", {}},
        {"tune", "few-shot PET tuning of a frozen backbone", {{"ckpt", "backbone checkpoint"}}},
        {"eval", "accuracy on the held-out split", {{"ckpt", "backbone checkpoint"}, {"pet", "PET artifact"}}},
        {"ablate", "sweep one hyper-parameter over several seeds",
         {{"ckpt", "backbone checkpoint"}, {"axis", "epsilon, num_patches, lambda or objective"},
          {"grid", "comma-separated values (default: the axis grid)"}}},
        {"attn-map", "pretrained vs tuned attention-score maps for one image",
         {{"ckpt", "backbone checkpoint"}, {"pet", "PET artifact"}, {"image", "PPM image"},
          {"prefix", "output path prefix"}}},
        {"confusion", "confusion matrix and group report",
         {{"ckpt", "backbone checkpoint"}, {"groups", "class,group map file"}}},
    };
    for (const auto& spec : commands) {
        CLI::App* sub = app.add_subcommand(spec.name, spec.help);
        sub->add_option("--config", inv.config_file, "key = value config file");
        sub->add_option("--set", inv.overrides, "override, key=value (repeatable)");
        sub->add_option("--seed", seed, "run seed");
        sub->add_option("--manifest", inv.manifest, "re-run a recorded manifest");
        sub->add_option("--out", inv.out, "output directory (paths.out)");
        for (const auto& [name, help] : spec.args) {
            sub->add_option(std::string("--") + name, inv.args[name], help);
        }
        sub->callback([&inv, &seed, sub, name = std::string(spec.name)] {
            inv.command = name;
            if (sub->count("--seed") > 0) {
                inv.seed = seed;
            }
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return exit_usage;
    }

    try {
        return Run(inv).execute();
    } catch (const Failure& f) {
        std::cerr << "error: " << hintaug_status_name(f.status) << ": " << f.message << "\n";
        return f.status == HINTAUG_ERR_CONFIG ? exit_usage : exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_runtime;
    }
}
