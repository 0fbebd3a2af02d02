/*
 * Copyright 2026 The hintaug Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* Exercises the C API from C. Usage: test_capi <scratch dir> */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "hintaug/hintaug.h"

static int failures = 0;

#define EXPECT(cond)                                                                 \
    do {                                                                             \
        if (!(cond)) {                                                               \
            fprintf(stderr, "%s:%d: expected %s (%s)\n", __FILE__, __LINE__, #cond, \
                    hintaug_last_error());                                           \
            ++failures;                                                              \
        }                                                                            \
    } while (0)

#define EXPECT_OK(call) EXPECT((call) == HINTAUG_OK)

static const char* tiny_config =
    "model.image_size = 16\n"
    "model.patch_size = 4\n"
    "model.embed_dim = 16\n"
    "model.num_layers = 2\n"
    "model.num_heads = 2\n"
    "model.num_classes = 3\n"
    "model.aod_layer = 1\n"
    "pet.bottleneck = 4\n"
    "pet.rank = 2\n"
    "pet.prompts = 2\n"
    "data.classes = 3\n"
    "data.samples_per_class = 5\n"
    "pretrain.data.classes = 3\n"
    "pretrain.data.samples_per_class = 4\n"
    "pretrain.epochs = 2\n"
    "train.epochs = 1\n"
    "train.batch_size = 4\n"
    "shots = 2\n"
    "ablate.seeds = 1\n";

static char* join(const char* dir, const char* leaf)
{
    char* out = malloc(strlen(dir) + strlen(leaf) + 2);
    sprintf(out, "%s/%s", dir, leaf);
    return out;
}

int main(int argc, char** argv)
{
    const char* dir = argc > 1 ? argv[1] : ".";
    hintaug_config* cfg = NULL;
    hintaug_dataset* pre_data = NULL;
    hintaug_dataset* data = NULL;
    hintaug_model* model = NULL;
    hintaug_model* loaded = NULL;
    hintaug_tune_result* result = NULL;
    hintaug_pet* pet = NULL;
    hintaug_pet* pet_back = NULL;
    char* text = NULL;
    size_t n = 0;
    uint64_t hash = 0, hash_back = 0;
    double acc = 0.0;

    EXPECT(strlen(hintaug_version()) > 0);
    EXPECT(strcmp(hintaug_status_name(HINTAUG_OK), "ok") == 0);
    EXPECT(strcmp(hintaug_status_name(HINTAUG_ERR_CONFIG), "config error") == 0);

    /* error paths */
    EXPECT(hintaug_config_parse("shots = x\n", &cfg) == HINTAUG_ERR_CONFIG);
    EXPECT(cfg == NULL);
    EXPECT(strlen(hintaug_last_error()) > 0);
    EXPECT(hintaug_config_parse(NULL, &cfg) == HINTAUG_ERR_ARGUMENT);
    EXPECT(hintaug_model_load("/nonexistent/model.hac", &model) == HINTAUG_ERR_IO);
    EXPECT(hintaug_dataset_size(NULL, &n) == HINTAUG_ERR_ARGUMENT);

    EXPECT_OK(hintaug_config_parse(tiny_config, &cfg));
    EXPECT(hintaug_config_set(cfg, "nope", "1") == HINTAUG_ERR_CONFIG);
    EXPECT_OK(hintaug_config_override(cfg, "lambda=0.2"));
    EXPECT_OK(hintaug_config_get(cfg, "lambda", &text));
    EXPECT(text && strcmp(text, "0.2") == 0);
    hintaug_string_free(text);
    EXPECT_OK(hintaug_config_validate(cfg));
    EXPECT_OK(hintaug_config_serialize(cfg, &text));
    EXPECT(text && strstr(text, "model.embed_dim = 16") != NULL);
    hintaug_string_free(text);

    EXPECT_OK(hintaug_dataset_from_config(cfg, "pretrain.data", &pre_data));
    EXPECT_OK(hintaug_dataset_from_config(cfg, "data", &data));
    EXPECT_OK(hintaug_dataset_size(data, &n));
    EXPECT(n == 15);
    EXPECT_OK(hintaug_dataset_num_classes(data, &n));
    EXPECT(n == 3);
    EXPECT(hintaug_dataset_label(data, 99, &n) == HINTAUG_ERR_INDEX);

    EXPECT_OK(hintaug_model_pretrain(cfg, pre_data, &model));
    EXPECT_OK(hintaug_model_curve(model, NULL, NULL, 0, &n));
    EXPECT(n == 2);
    EXPECT_OK(hintaug_model_hash(model, &hash));

    char* ckpt = join(dir, "capi_backbone.hac");
    EXPECT_OK(hintaug_model_save(model, ckpt));
    EXPECT_OK(hintaug_model_load(ckpt, &loaded));
    EXPECT_OK(hintaug_model_hash(loaded, &hash_back));
    EXPECT(hash == hash_back);

    {
        double pixels[3 * 16 * 16];
        double logits[3];
        size_t label = 99;
        for (size_t i = 0; i < sizeof pixels / sizeof pixels[0]; ++i) {
            pixels[i] = 0.5;
        }
        EXPECT_OK(hintaug_model_predict(loaded, NULL, pixels, 3 * 16 * 16, &label, logits, 3));
        EXPECT(label < 3);
        EXPECT(hintaug_model_predict(loaded, NULL, pixels, 10, &label, NULL, 0) != HINTAUG_OK);
    }

    EXPECT_OK(hintaug_tune(cfg, loaded, data, &result));
    EXPECT_OK(hintaug_tune_result_metrics_csv(result, &text));
    EXPECT(text && strncmp(text, "epoch,loss,acc,indicator_rate,n_augmented\n", 42) == 0);
    hintaug_string_free(text);
    EXPECT_OK(hintaug_tune_result_best(result, &n, &acc));
    EXPECT(acc >= 0.0 && acc <= 1.0);
    EXPECT_OK(hintaug_tune_result_pet(result, &pet));
    EXPECT_OK(hintaug_pet_kind(pet, &text));
    EXPECT(text && strcmp(text, "adapter") == 0);
    hintaug_string_free(text);
    EXPECT_OK(hintaug_pet_parameter_count(pet, &n));
    EXPECT(n == 2 * (2 * 16 * 4 + 4 + 16));

    char* pet_path = join(dir, "capi_pet.hac");
    EXPECT_OK(hintaug_pet_save(pet, loaded, pet_path));
    EXPECT_OK(hintaug_pet_load(pet_path, loaded, &pet_back));
    EXPECT_OK(hintaug_model_eval_split(cfg, loaded, pet_back, data, &acc));
    EXPECT(acc >= 0.0 && acc <= 1.0);

    /* a PET refuses a backbone it was not trained against */
    {
        hintaug_model* other = NULL;
        hintaug_pet* wrong = NULL;
        EXPECT_OK(hintaug_config_set(cfg, "seed", "5"));
        EXPECT_OK(hintaug_model_init(cfg, &other));
        EXPECT(hintaug_pet_load(pet_path, other, &wrong) == HINTAUG_ERR_ATTACH);
        EXPECT(wrong == NULL);
        hintaug_model_destroy(other);
        EXPECT_OK(hintaug_config_set(cfg, "seed", "0"));
    }

    EXPECT_OK(hintaug_ablation_grid("epsilon", &text));
    EXPECT(text && strcmp(text, "0.01,0.005,0.001,0.0002,0.0001") == 0);
    hintaug_string_free(text);
    EXPECT(hintaug_ablation_grid("depth", &text) == HINTAUG_ERR_CONFIG);
    EXPECT_OK(hintaug_ablate(cfg, loaded, data, "lambda", "0.2", &text));
    EXPECT(text && strncmp(text, "axis,value,seeds,", 17) == 0);
    hintaug_string_free(text);

    {
        char* groups = NULL;
        EXPECT_OK(hintaug_confusion_export(loaded, data, NULL, &text, &groups));
        EXPECT(text && strncmp(text, "true\\pred,", 10) == 0);
        EXPECT(groups == NULL);
        hintaug_string_free(text);
    }

    {
        char* data_dir = join(dir, "capi_data");
        char* image = join(data_dir, "img_00000.ppm");
        char* prefix = join(dir, "capi_attn");
        hintaug_dataset* back = NULL;
        EXPECT_OK(hintaug_dataset_save_folder(data, data_dir));
        EXPECT_OK(hintaug_dataset_load_folder(data_dir, 0, &back));
        EXPECT_OK(hintaug_dataset_size(back, &n));
        EXPECT(n == 15);
        hintaug_dataset_destroy(back);
        if (hintaug_file_hash(image, &hash) == HINTAUG_OK) {
            EXPECT_OK(hintaug_attention_export(loaded, pet, image, 0.1, prefix, &text));
            EXPECT(text && strncmp(text, "indicator,", 10) == 0);
            hintaug_string_free(text);
        } else {
            fprintf(stderr, "no exported image at %s\n", image);
            ++failures;
        }
        free(data_dir);
        free(image);
        free(prefix);
    }

    hintaug_pet_destroy(pet_back);
    hintaug_pet_destroy(pet);
    hintaug_tune_result_destroy(result);
    hintaug_model_destroy(loaded);
    hintaug_model_destroy(model);
    hintaug_dataset_destroy(data);
    hintaug_dataset_destroy(pre_data);
    hintaug_config_destroy(cfg);
    hintaug_config_destroy(NULL);
    free(ckpt);
    free(pet_path);

    if (failures) {
        fprintf(stderr, "%d check(s) failed\n", failures);
        return 1;
    }
    printf("C API checks passed\n");
    return 0;
}
