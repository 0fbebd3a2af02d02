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

/*
 * C interface to the hintaug library. Every object is an opaque handle
 * released with its *_destroy function; every call returns a status code
 * and leaves a message for hintaug_last_error() on failure. Strings handed
 * out through char** must be released with hintaug_string_free().
 */
#ifndef HINTAUG_HINTAUG_H
#define HINTAUG_HINTAUG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define HINTAUG_API __declspec(dllexport)
#else
#define HINTAUG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum hintaug_status {
    HINTAUG_OK = 0,
    HINTAUG_ERR_CONFIG = 1,
    HINTAUG_ERR_DIMENSION = 2,
    HINTAUG_ERR_NUMERIC = 3,
    HINTAUG_ERR_IO = 4,
    HINTAUG_ERR_PARSE = 5,
    HINTAUG_ERR_DATASET = 6,
    HINTAUG_ERR_LABEL = 7,
    HINTAUG_ERR_INDEX = 8,
    HINTAUG_ERR_ATTACH = 9,
    HINTAUG_ERR_TRAINING = 10,
    HINTAUG_ERR_CONTRACT = 11,
    HINTAUG_ERR_ARGUMENT = 12, /* null handle or pointer */
    HINTAUG_ERR_INTERNAL = 13
} hintaug_status;

typedef struct hintaug_config hintaug_config;
typedef struct hintaug_dataset hintaug_dataset;
typedef struct hintaug_model hintaug_model;
typedef struct hintaug_pet hintaug_pet;
typedef struct hintaug_tune_result hintaug_tune_result;

HINTAUG_API const char* hintaug_version(void);
HINTAUG_API const char* hintaug_status_name(hintaug_status status);
/* Message of the last failed call on this thread; "" if none. */
HINTAUG_API const char* hintaug_last_error(void);
HINTAUG_API void hintaug_string_free(char* text);

/* ---- configuration ---- */
HINTAUG_API hintaug_status hintaug_config_create(hintaug_config** out);
HINTAUG_API hintaug_status hintaug_config_parse(const char* text, hintaug_config** out);
HINTAUG_API hintaug_status hintaug_config_load(const char* path, hintaug_config** out);
HINTAUG_API hintaug_status hintaug_config_set(hintaug_config* config, const char* key, const char* value);
/* "key=value" */
HINTAUG_API hintaug_status hintaug_config_override(hintaug_config* config, const char* assignment);
HINTAUG_API hintaug_status hintaug_config_get(const hintaug_config* config, const char* key, char** value);
HINTAUG_API hintaug_status hintaug_config_serialize(const hintaug_config* config, char** text);
HINTAUG_API hintaug_status hintaug_config_validate(const hintaug_config* config);
HINTAUG_API void hintaug_config_destroy(hintaug_config* config);

/* ---- datasets ---- */
/* prefix is "data" (tuning domain) or "pretrain.data". */
HINTAUG_API hintaug_status hintaug_dataset_from_config(const hintaug_config* config, const char* prefix,
                                                       hintaug_dataset** out);
HINTAUG_API hintaug_status hintaug_dataset_generate(size_t classes, size_t per_class, size_t image_size, uint64_t seed,
                                                    double shift, hintaug_dataset** out);
/* crop 0 disables center cropping. */
HINTAUG_API hintaug_status hintaug_dataset_load_folder(const char* dir, size_t crop, hintaug_dataset** out);
HINTAUG_API hintaug_status hintaug_dataset_save_folder(const hintaug_dataset* data, const char* dir);
HINTAUG_API hintaug_status hintaug_dataset_size(const hintaug_dataset* data, size_t* size);
HINTAUG_API hintaug_status hintaug_dataset_num_classes(const hintaug_dataset* data, size_t* classes);
HINTAUG_API hintaug_status hintaug_dataset_class_name(const hintaug_dataset* data, size_t index, char** name);
HINTAUG_API hintaug_status hintaug_dataset_label(const hintaug_dataset* data, size_t index, size_t* label);
HINTAUG_API void hintaug_dataset_destroy(hintaug_dataset* data);

/* ---- backbones ---- */
/* Fresh weights from the model.* keys and the run seed. */
HINTAUG_API hintaug_status hintaug_model_init(const hintaug_config* config, hintaug_model** out);
/* Initializes and trains on `data` with the pretrain.* keys. */
HINTAUG_API hintaug_status hintaug_model_pretrain(const hintaug_config* config, const hintaug_dataset* data,
                                                  hintaug_model** out);
HINTAUG_API hintaug_status hintaug_model_load(const char* path, hintaug_model** out);
HINTAUG_API hintaug_status hintaug_model_save(const hintaug_model* model, const char* path);
HINTAUG_API hintaug_status hintaug_model_hash(const hintaug_model* model, uint64_t* hash);
HINTAUG_API hintaug_status hintaug_model_num_classes(const hintaug_model* model, size_t* classes);
/* Per-epoch pretraining loss and train accuracy. Pass NULL arrays to query the length. */
HINTAUG_API hintaug_status hintaug_model_curve(const hintaug_model* model, double* loss, double* accuracy,
                                               size_t capacity, size_t* epochs);
/* Top-1 accuracy over the whole dataset; pet may be NULL. */
HINTAUG_API hintaug_status hintaug_model_accuracy(const hintaug_model* model, const hintaug_pet* pet,
                                                  const hintaug_dataset* data, double* accuracy);
/* Accuracy on the held-out split of the few-shot task given by the shots and seed keys. */
HINTAUG_API hintaug_status hintaug_model_eval_split(const hintaug_config* config, const hintaug_model* model,
                                                    const hintaug_pet* pet, const hintaug_dataset* data,
                                                    double* accuracy);
/* pixels: C*H*W values in [0,1], channel-major. logits may be NULL. */
HINTAUG_API hintaug_status hintaug_model_predict(const hintaug_model* model, const hintaug_pet* pet,
                                                 const double* pixels, size_t count, size_t* label, double* logits,
                                                 size_t logits_capacity);
HINTAUG_API void hintaug_model_destroy(hintaug_model* model);

/* ---- PET modules ---- */
HINTAUG_API hintaug_status hintaug_pet_load(const char* path, const hintaug_model* backbone, hintaug_pet** out);
HINTAUG_API hintaug_status hintaug_pet_save(const hintaug_pet* pet, const hintaug_model* backbone, const char* path);
HINTAUG_API hintaug_status hintaug_pet_kind(const hintaug_pet* pet, char** kind);
HINTAUG_API hintaug_status hintaug_pet_parameter_count(const hintaug_pet* pet, size_t* count);
HINTAUG_API void hintaug_pet_destroy(hintaug_pet* pet);

/* ---- tuning ---- */
/* Samples the few-shot task (shots, seed) from `data` and tunes a PET on it. */
HINTAUG_API hintaug_status hintaug_tune(const hintaug_config* config, const hintaug_model* backbone,
                                        const hintaug_dataset* data, hintaug_tune_result** out);
HINTAUG_API hintaug_status hintaug_tune_result_pet(const hintaug_tune_result* result, hintaug_pet** out);
/* epoch,loss,acc,indicator_rate,n_augmented */
HINTAUG_API hintaug_status hintaug_tune_result_metrics_csv(const hintaug_tune_result* result, char** csv);
HINTAUG_API hintaug_status hintaug_tune_result_best(const hintaug_tune_result* result, size_t* epoch,
                                                    double* accuracy);
HINTAUG_API void hintaug_tune_result_destroy(hintaug_tune_result* result);

/* axis: epsilon | num_patches | lambda | objective. grid: comma-separated
 * values, or NULL for the default grid of the axis. Seeds: ablate.seeds. */
HINTAUG_API hintaug_status hintaug_ablate(const hintaug_config* config, const hintaug_model* backbone,
                                          const hintaug_dataset* data, const char* axis, const char* grid,
                                          char** csv);
/* Comma-separated default grid of an axis. */
HINTAUG_API hintaug_status hintaug_ablation_grid(const char* axis, char** grid);

/* ---- exports ---- */
/* Reads a PPM/PGM image and writes <prefix>_pretrained.pgm, <prefix>_tuned.pgm,
 * <prefix>_scores.csv and <prefix>_report.csv. pet may be NULL. */
HINTAUG_API hintaug_status hintaug_attention_export(const hintaug_model* backbone, const hintaug_pet* pet,
                                                    const char* image_path, double lambda, const char* prefix,
                                                    char** report_csv);
/* Confusion matrix of the backbone's logits over `data`; group_map may be
 * NULL, in which case *group_csv is set to NULL. */
HINTAUG_API hintaug_status hintaug_confusion_export(const hintaug_model* backbone, const hintaug_dataset* data,
                                                    const char* group_map, char** confusion_csv, char** group_csv);

/* FNV-1a 64 of a file's bytes. */
HINTAUG_API hintaug_status hintaug_file_hash(const char* path, uint64_t* hash);

#ifdef __cplusplus
}
#endif

#endif /* HINTAUG_HINTAUG_H */
