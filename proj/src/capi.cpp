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

#include "hintaug/hintaug.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "hintaug/checkpoint.hpp"
#include "hintaug/config.hpp"
#include "hintaug/error.hpp"
#include "hintaug/harness.hpp"
#include "hintaug/report.hpp"

using namespace hintaug;

struct hintaug_config {
    RunConfig value;
};

struct hintaug_dataset {
    Dataset value;
};

struct hintaug_model {
    std::shared_ptr<const ViT> model;
    std::vector<double> epoch_loss;
    std::vector<double> epoch_accuracy;
};

struct hintaug_pet {
    PetModule value;
};

struct hintaug_tune_result {
    TuneResult value;
};

namespace {

thread_local std::string last_error;

struct NullArgument {
    const char* what;
};

template <typename T>
T& deref(T* p, const char* what)
{
    if (p == nullptr) {
        throw NullArgument{what};
    }
    return *p;
}

template <typename T>
T* need(T* p, const char* what)
{
    if (p == nullptr) {
        throw NullArgument{what};
    }
    return p;
}

template <typename Fn>
hintaug_status guarded(Fn&& fn)
{
    try {
        fn();
        last_error.clear();
        return HINTAUG_OK;
    } catch (const NullArgument& e) {
        last_error = std::string("null argument: ") + e.what;
        return HINTAUG_ERR_ARGUMENT;
    } catch (const Error& e) {
        last_error = e.what();
        return static_cast<hintaug_status>(static_cast<int>(e.code()));
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return HINTAUG_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return HINTAUG_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown failure";
        return HINTAUG_ERR_INTERNAL;
    }
}

char* dup_string(const std::string& s)
{
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) {
        throw std::bad_alloc();
    }
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

const PetModule* pet_ptr(const hintaug_pet* pet)
{
    return pet ? &pet->value : nullptr;
}

void check_pet(const hintaug_model& model, const hintaug_pet* pet)
{
    if (pet) {
        pet->value.check_compatible(model.model->config);
    }
}

std::vector<std::string> split_grid(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b != std::string::npos) {
            out.push_back(item.substr(b, e - b + 1));
        }
    }
    return out;
}

std::shared_ptr<const ViT> initial_model(const RunConfig& cfg)
{
    return std::make_shared<const ViT>(ViT::initialize(cfg.model_config(), Rng::derive(cfg.count("seed"), 1),
                                                       parse_init_scheme(cfg.get("model.init"))));
}

} // namespace

extern "C" {

const char* hintaug_version(void)
{
    return "1.0.0";
}

const char* hintaug_status_name(hintaug_status status)
{
    switch (status) {
    case HINTAUG_OK:
        return "ok";
    case HINTAUG_ERR_CONFIG:
        return "config error";
    case HINTAUG_ERR_DIMENSION:
        return "dimension error";
    case HINTAUG_ERR_NUMERIC:
        return "numeric error";
    case HINTAUG_ERR_IO:
        return "io error";
    case HINTAUG_ERR_PARSE:
        return "parse error";
    case HINTAUG_ERR_DATASET:
        return "dataset error";
    case HINTAUG_ERR_LABEL:
        return "label error";
    case HINTAUG_ERR_INDEX:
        return "index error";
    case HINTAUG_ERR_ATTACH:
        return "attach error";
    case HINTAUG_ERR_TRAINING:
        return "training error";
    case HINTAUG_ERR_CONTRACT:
        return "contract error";
    case HINTAUG_ERR_ARGUMENT:
        return "invalid argument";
    case HINTAUG_ERR_INTERNAL:
        return "internal error";
    }
    return "unknown status";
}

const char* hintaug_last_error(void)
{
    return last_error.c_str();
}

void hintaug_string_free(char* text)
{
    std::free(text);
}

// ---- configuration

hintaug_status hintaug_config_create(hintaug_config** out)
{
    return guarded([&] { deref(out, "out") = new hintaug_config{RunConfig()}; });
}

hintaug_status hintaug_config_parse(const char* text, hintaug_config** out)
{
    return guarded([&] {
        auto cfg = RunConfig::parse(need(text, "text"));
        deref(out, "out") = new hintaug_config{std::move(cfg)};
    });
}

hintaug_status hintaug_config_load(const char* path, hintaug_config** out)
{
    return guarded([&] {
        auto cfg = RunConfig::load(need(path, "path"));
        deref(out, "out") = new hintaug_config{std::move(cfg)};
    });
}

hintaug_status hintaug_config_set(hintaug_config* config, const char* key, const char* value)
{
    return guarded([&] { deref(config, "config").value.set(need(key, "key"), need(value, "value")); });
}

hintaug_status hintaug_config_override(hintaug_config* config, const char* assignment)
{
    return guarded([&] { deref(config, "config").value.apply_override(need(assignment, "assignment")); });
}

hintaug_status hintaug_config_get(const hintaug_config* config, const char* key, char** value)
{
    return guarded([&] { deref(value, "value") = dup_string(deref(config, "config").value.get(need(key, "key"))); });
}

hintaug_status hintaug_config_serialize(const hintaug_config* config, char** text)
{
    return guarded([&] { deref(text, "text") = dup_string(deref(config, "config").value.serialize()); });
}

hintaug_status hintaug_config_validate(const hintaug_config* config)
{
    return guarded([&] { deref(config, "config").value.validate(); });
}

void hintaug_config_destroy(hintaug_config* config)
{
    delete config;
}

// ---- datasets

hintaug_status hintaug_dataset_from_config(const hintaug_config* config, const char* prefix, hintaug_dataset** out)
{
    return guarded([&] {
        auto data = deref(config, "config").value.load_dataset(need(prefix, "prefix"));
        deref(out, "out") = new hintaug_dataset{std::move(data)};
    });
}

hintaug_status hintaug_dataset_generate(size_t classes, size_t per_class, size_t image_size, uint64_t seed,
                                        double shift, hintaug_dataset** out)
{
    return guarded([&] {
        SyntheticSpec spec;
        spec.classes = classes;
        spec.samples_per_class = per_class;
        spec.image_size = image_size;
        spec.seed = seed;
        spec.shift = shift;
        auto data = generate_synthetic(spec);
        deref(out, "out") = new hintaug_dataset{std::move(data)};
    });
}

hintaug_status hintaug_dataset_load_folder(const char* dir, size_t crop, hintaug_dataset** out)
{
    return guarded([&] {
        FolderOptions opt;
        if (crop > 0) {
            opt.crop_size = crop;
        }
        auto data = load_folder(need(dir, "dir"), opt);
        deref(out, "out") = new hintaug_dataset{std::move(data)};
    });
}

hintaug_status hintaug_dataset_save_folder(const hintaug_dataset* data, const char* dir)
{
    return guarded([&] { save_folder(deref(data, "data").value, need(dir, "dir")); });
}

hintaug_status hintaug_dataset_size(const hintaug_dataset* data, size_t* size)
{
    return guarded([&] { deref(size, "size") = deref(data, "data").value.size(); });
}

hintaug_status hintaug_dataset_num_classes(const hintaug_dataset* data, size_t* classes)
{
    return guarded([&] { deref(classes, "classes") = deref(data, "data").value.num_classes(); });
}

hintaug_status hintaug_dataset_class_name(const hintaug_dataset* data, size_t index, char** name)
{
    return guarded([&] {
        const auto& names = deref(data, "data").value.class_names;
        if (index >= names.size()) {
            throw IndexError("class index " + std::to_string(index) + " out of range");
        }
        deref(name, "name") = dup_string(names[index]);
    });
}

hintaug_status hintaug_dataset_label(const hintaug_dataset* data, size_t index, size_t* label)
{
    return guarded([&] {
        const auto& labels = deref(data, "data").value.labels;
        if (index >= labels.size()) {
            throw IndexError("sample index " + std::to_string(index) + " out of range");
        }
        deref(label, "label") = labels[index];
    });
}

void hintaug_dataset_destroy(hintaug_dataset* data)
{
    delete data;
}

// ---- backbones

hintaug_status hintaug_model_init(const hintaug_config* config, hintaug_model** out)
{
    return guarded([&] {
        const RunConfig& cfg = deref(config, "config").value;
        cfg.model_config().validate();
        deref(out, "out") = new hintaug_model{initial_model(cfg), {}, {}};
    });
}

hintaug_status hintaug_model_pretrain(const hintaug_config* config, const hintaug_dataset* data, hintaug_model** out)
{
    return guarded([&] {
        const RunConfig& cfg = deref(config, "config").value;
        const Dataset& d = deref(data, "data").value;
        deref(out, "out");
        cfg.validate();
        PretrainResult r = pretrain(*initial_model(cfg), d, cfg.pretrain_config());
        *out = new hintaug_model{std::make_shared<const ViT>(std::move(r.model)), std::move(r.epoch_loss),
                                 std::move(r.epoch_accuracy)};
    });
}

hintaug_status hintaug_model_load(const char* path, hintaug_model** out)
{
    return guarded([&] {
        Checkpoint c = load_checkpoint(need(path, "path"));
        deref(out, "out") = new hintaug_model{std::make_shared<const ViT>(std::move(c.model)),
                                              std::move(c.epoch_loss), std::move(c.epoch_accuracy)};
    });
}

hintaug_status hintaug_model_save(const hintaug_model* model, const char* path)
{
    return guarded([&] {
        const hintaug_model& m = deref(model, "model");
        save_checkpoint(need(path, "path"), Checkpoint{m.model->clone(), m.epoch_loss, m.epoch_accuracy});
    });
}

hintaug_status hintaug_model_hash(const hintaug_model* model, uint64_t* hash)
{
    return guarded([&] { deref(hash, "hash") = deref(model, "model").model->content_hash(); });
}

hintaug_status hintaug_model_num_classes(const hintaug_model* model, size_t* classes)
{
    return guarded([&] { deref(classes, "classes") = deref(model, "model").model->config.num_classes; });
}

hintaug_status hintaug_model_curve(const hintaug_model* model, double* loss, double* accuracy, size_t capacity,
                                   size_t* epochs)
{
    return guarded([&] {
        const hintaug_model& m = deref(model, "model");
        deref(epochs, "epochs") = m.epoch_loss.size();
        for (std::size_t i = 0; i < m.epoch_loss.size() && i < capacity; ++i) {
            if (loss) {
                loss[i] = m.epoch_loss[i];
            }
            if (accuracy) {
                accuracy[i] = m.epoch_accuracy[i];
            }
        }
    });
}

hintaug_status hintaug_model_accuracy(const hintaug_model* model, const hintaug_pet* pet, const hintaug_dataset* data,
                                      double* accuracy)
{
    return guarded([&] {
        const hintaug_model& m = deref(model, "model");
        const Dataset& d = deref(data, "data").value;
        check_pet(m, pet);
        std::vector<std::size_t> all(d.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            all[i] = i;
        }
        deref(accuracy, "accuracy") = hintaug::accuracy(*m.model, pet_ptr(pet), d, all);
    });
}

hintaug_status hintaug_model_eval_split(const hintaug_config* config, const hintaug_model* model,
                                        const hintaug_pet* pet, const hintaug_dataset* data, double* accuracy)
{
    return guarded([&] {
        const RunConfig& cfg = deref(config, "config").value;
        const hintaug_model& m = deref(model, "model");
        const Dataset& d = deref(data, "data").value;
        check_pet(m, pet);
        const FewShotTask task = sample_few_shot(d, cfg.count("shots"), cfg.count("seed"));
        deref(accuracy, "accuracy") = hintaug::accuracy(*m.model, pet_ptr(pet), d, task.eval);
    });
}

hintaug_status hintaug_model_predict(const hintaug_model* model, const hintaug_pet* pet, const double* pixels,
                                     size_t count, size_t* label, double* logits, size_t logits_capacity)
{
    return guarded([&] {
        const hintaug_model& m = deref(model, "model");
        check_pet(m, pet);
        const ViTConfig& c = m.model->config;
        const std::size_t expected = c.channels * c.image_size * c.image_size;
        if (count != expected) {
            throw DimensionError("expected " + std::to_string(expected) + " pixel values, got "
                                 + std::to_string(count));
        }
        Tensor image(Shape{c.channels, c.image_size, c.image_size},
                     std::vector<double>(need(pixels, "pixels"), pixels + count));
        const ForwardResult r = forward(*m.model, image, pet_ptr(pet));
        deref(label, "label") = argmax(r.logits.data());
        if (logits) {
            for (std::size_t i = 0; i < r.logits.numel() && i < logits_capacity; ++i) {
                logits[i] = r.logits[i];
            }
        }
    });
}

void hintaug_model_destroy(hintaug_model* model)
{
    delete model;
}

// ---- PET modules

hintaug_status hintaug_pet_load(const char* path, const hintaug_model* backbone, hintaug_pet** out)
{
    return guarded([&] {
        PetArtifact a = load_pet(need(path, "path"));
        if (backbone) {
            if (a.backbone_hash != backbone->model->content_hash()) {
                throw AttachError("PET artifact was tuned against backbone " + hash_to_hex(a.backbone_hash)
                                  + ", not " + hash_to_hex(backbone->model->content_hash()));
            }
            a.pet.check_compatible(backbone->model->config);
        }
        deref(out, "out") = new hintaug_pet{std::move(a.pet)};
    });
}

hintaug_status hintaug_pet_save(const hintaug_pet* pet, const hintaug_model* backbone, const char* path)
{
    return guarded([&] {
        save_pet(need(path, "path"), deref(pet, "pet").value, *deref(backbone, "backbone").model);
    });
}

hintaug_status hintaug_pet_kind(const hintaug_pet* pet, char** kind)
{
    return guarded([&] { deref(kind, "kind") = dup_string(to_string(deref(pet, "pet").value.kind())); });
}

hintaug_status hintaug_pet_parameter_count(const hintaug_pet* pet, size_t* count)
{
    return guarded([&] { deref(count, "count") = deref(pet, "pet").value.parameter_count(); });
}

void hintaug_pet_destroy(hintaug_pet* pet)
{
    delete pet;
}

// ---- tuning

hintaug_status hintaug_tune(const hintaug_config* config, const hintaug_model* backbone, const hintaug_dataset* data,
                            hintaug_tune_result** out)
{
    return guarded([&] {
        const RunConfig& cfg = deref(config, "config").value;
        const hintaug_model& m = deref(backbone, "backbone");
        const Dataset& d = deref(data, "data").value;
        deref(out, "out");
        cfg.validate();
        const FewShotTask task = sample_few_shot(d, cfg.count("shots"), cfg.count("seed"));
        *out = new hintaug_tune_result{tune(task, d, m.model, cfg.train_config())};
    });
}

hintaug_status hintaug_tune_result_pet(const hintaug_tune_result* result, hintaug_pet** out)
{
    return guarded([&] { deref(out, "out") = new hintaug_pet{deref(result, "result").value.best_pet.clone()}; });
}

hintaug_status hintaug_tune_result_metrics_csv(const hintaug_tune_result* result, char** csv)
{
    return guarded([&] { deref(csv, "csv") = dup_string(deref(result, "result").value.metrics.to_csv()); });
}

hintaug_status hintaug_tune_result_best(const hintaug_tune_result* result, size_t* epoch, double* accuracy)
{
    return guarded([&] {
        const Metrics& m = deref(result, "result").value.metrics;
        deref(epoch, "epoch") = m.best_epoch;
        deref(accuracy, "accuracy") = m.best_accuracy;
    });
}

void hintaug_tune_result_destroy(hintaug_tune_result* result)
{
    delete result;
}

hintaug_status hintaug_ablate(const hintaug_config* config, const hintaug_model* backbone, const hintaug_dataset* data,
                              const char* axis, const char* grid, char** csv)
{
    return guarded([&] {
        const RunConfig& cfg = deref(config, "config").value;
        const hintaug_model& m = deref(backbone, "backbone");
        const Dataset& d = deref(data, "data").value;
        deref(csv, "csv");
        cfg.validate();
        const AblationAxis a = parse_ablation_axis(need(axis, "axis"));
        const std::vector<std::string> values = grid ? split_grid(grid) : default_grid(a);
        const auto rows =
            run_ablation(a, values, cfg.train_config(), cfg.count("ablate.seeds"), cfg.count("shots"), d, m.model);
        *csv = dup_string(ablation_csv(rows));
    });
}

hintaug_status hintaug_ablation_grid(const char* axis, char** grid)
{
    return guarded([&] {
        std::string joined;
        for (const auto& v : default_grid(parse_ablation_axis(need(axis, "axis")))) {
            joined += (joined.empty() ? "" : ",") + v;
        }
        deref(grid, "grid") = dup_string(joined);
    });
}

// ---- exports

hintaug_status hintaug_attention_export(const hintaug_model* backbone, const hintaug_pet* pet, const char* image_path,
                                        double lambda, const char* prefix, char** report_csv)
{
    return guarded([&] {
        const hintaug_model& m = deref(backbone, "backbone");
        check_pet(m, pet);
        const Tensor image = read_pnm(need(image_path, "image_path"));
        const ViTConfig& c = m.model->config;
        if (image.shape() != Shape{c.channels, c.image_size, c.image_size}) {
            throw DimensionError("image " + std::string(image_path) + " is " + shape_to_string(image.shape())
                                 + ", model expects " + shape_to_string({c.channels, c.image_size, c.image_size}));
        }
        const AttentionExport e = attention_maps(*m.model, pet_ptr(pet), image, lambda);
        write_attention_export(e, c.grid(), need(prefix, "prefix"));
        if (report_csv) {
            *report_csv = dup_string(overfit_report_csv(e));
        }
    });
}

hintaug_status hintaug_confusion_export(const hintaug_model* backbone, const hintaug_dataset* data,
                                        const char* group_map, char** confusion_csv_out, char** group_csv)
{
    return guarded([&] {
        const hintaug_model& m = deref(backbone, "backbone");
        const Dataset& d = deref(data, "data").value;
        deref(confusion_csv_out, "confusion_csv");
        std::vector<std::size_t> all(d.size());
        for (std::size_t i = 0; i < all.size(); ++i) {
            all[i] = i;
        }
        const ConfusionMatrix cm = build_confusion(*m.model, d, all);
        std::string groups;
        if (group_map) {
            groups = group_report_csv(group_report(cm, d.class_names, read_group_map(group_map)));
        }
        *confusion_csv_out = dup_string(confusion_csv(cm, d.class_names));
        if (group_csv) {
            *group_csv = group_map ? dup_string(groups) : nullptr;
        }
    });
}

hintaug_status hintaug_file_hash(const char* path, uint64_t* hash)
{
    return guarded([&] { deref(hash, "hash") = fnv1a64(read_file(need(path, "path"))); });
}

} // extern "C"
