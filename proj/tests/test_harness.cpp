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


#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "hintaug/dataset.hpp"
#include "hintaug/error.hpp"
#include "hintaug/harness.hpp"
#include "support.hpp"

using namespace hintaug;
using hintaug::testing::toy_config;

namespace {

Dataset toy_data(std::size_t classes = 4, std::size_t per_class = 8, std::uint64_t seed = 7)
{
    SyntheticSpec s;
    s.classes = classes;
    s.samples_per_class = per_class;
    s.image_size = 16;
    s.seed = seed;
    s.shift = 0.5;
    return generate_synthetic(s);
}

TrainConfig toy_train(AugmentMode mode, std::size_t epochs = 2)
{
    TrainConfig t;
    t.epochs = epochs;
    t.batch_size = 4;
    t.lr = 0.05;
    t.augment_mode = mode;
    t.pet_hyper = PetHyper{4, 2, 2.0, 2};
    t.seed = 3;
    return t;
}

std::vector<double> flat_params(const PetModule& pet)
{
    std::vector<double> out;
    for (const auto& p : pet.parameters()) {
        out.insert(out.end(), p.tensor.data().begin(), p.tensor.data().end());
    }
    return out;
}

std::vector<std::string> split_lines(const std::string& text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        out.push_back(line);
    }
    return out;
}

} // namespace

TEST_CASE("few-shot sampling")
{
    SyntheticSpec s;
    s.classes = 3;
    s.samples_per_class = 10;
    s.image_size = 8;
    const Dataset d = generate_synthetic(s);
    const FewShotTask t = sample_few_shot(d, 1, 5);
    CHECK(t.train.size() == 3);
    CHECK(t.eval.size() == 27);
    CHECK(t.classes == std::vector<std::size_t>{0, 1, 2});
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(d.labels[t.train[k]] == k);
    }
    std::set<std::size_t> seen(t.train.begin(), t.train.end());
    for (std::size_t i : t.eval) {
        CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == d.size());

    const FewShotTask again = sample_few_shot(d, 1, 5);
    CHECK(again.train == t.train);
    CHECK(again.eval == t.eval);
    CHECK(sample_few_shot(d, 1, 6).train != t.train);

    const FewShotTask four = sample_few_shot(d, 4, 0);
    std::vector<std::size_t> per_class(3, 0);
    for (std::size_t i : four.train) {
        ++per_class[d.labels[i]];
    }
    CHECK(per_class == std::vector<std::size_t>{4, 4, 4});

    try {
        (void)sample_few_shot(d, 10, 0);
        FAIL("expected DatasetError");
    } catch (const DatasetError& e) {
        CHECK(std::string(e.what()).find("class '") != std::string::npos);
    }
    CHECK_THROWS_AS(sample_few_shot(d, 0, 0), ConfigError);
}

TEST_CASE("train config")
{
    const ViTConfig c;
    TrainConfig t;
    CHECK(t.lambda == 0.1);
    CHECK(t.attack.epsilon == 0.001);
    CHECK(t.resolved_num_patches(c) == 1);
    t.num_patches = 0;
    CHECK(t.resolved_num_patches(c) == c.num_patches());
    t.num_patches = 65;
    CHECK_THROWS_AS(t.validate(c), ConfigError);
    t = TrainConfig{};
    t.epochs = 0;
    CHECK_THROWS_AS(t.validate(c), ConfigError);
    const TrainConfig large = TrainConfig::large_scale_preset();
    CHECK(large.epochs == 100);
    CHECK(large.batch_size == 256);
    CHECK(large.lr == 0.01);
    CHECK(parse_augment_mode("HINT_AUG") == AugmentMode::hint_aug);
    CHECK(parse_augment_mode("no_aug") == AugmentMode::no_aug);
    CHECK_THROWS_AS(parse_augment_mode("mixup"), ConfigError);
}

TEST_CASE("baseline augmentation")
{
    const ViTConfig c = toy_config();
    const Tensor x = testing::random_image(c, 2);
    const Tensor same = baseline_augment(x, 9, 0.0, false);
    CHECK(std::equal(same.data().begin(), same.data().end(), x.data().begin()));

    const Tensor a = baseline_augment(x, 9);
    const Tensor b = baseline_augment(x, 9);
    CHECK(std::equal(a.data().begin(), a.data().end(), b.data().begin()));
    CHECK_FALSE(std::equal(a.data().begin(), a.data().end(), x.data().begin()));

    const Tensor bright(Shape{3, 16, 16}, 0.98);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        for (double v : baseline_augment(bright, seed, 0.4, true).data()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("hint-aug step keeps the backbone and matches no-aug as epsilon vanishes")
{
    const ViTConfig c = toy_config();
    const auto backbone = testing::share(testing::perturbed_model(c, 4));
    const std::uint64_t hash = backbone->content_hash();
    const Dataset data = toy_data();
    const ConfusionMatrix conf = build_confusion(*backbone, data, {0, 1, 8, 9, 16, 17, 24, 25});
    std::vector<BatchItem> batch;
    for (std::size_t i : {0, 9, 17, 26}) {
        batch.push_back({&data.images[i], data.labels[i], nullptr});
    }

    auto run = [&](AugmentMode mode, double epsilon) {
        TunedModel m = attach(backbone, PetKind::adapter, PetHyper{4, 2, 2.0, 2}, 1);
        TrainConfig cfg = toy_train(mode);
        cfg.attack.epsilon = epsilon;
        Rng rng(2);
        for (int step = 0; step < 3; ++step) {
            const StepStats st = hint_aug_step(batch, m, conf, cfg, rng);
            CHECK(st.samples == 4);
            CHECK(st.augmented == (mode == AugmentMode::no_aug ? 0u : 4u));
        }
        return flat_params(m.pet);
    };
    const auto plain = run(AugmentMode::no_aug, 0.001);
    const auto tiny = run(AugmentMode::hint_aug, 1e-12);
    const auto real = run(AugmentMode::hint_aug, 0.05);
    REQUIRE(plain.size() == tiny.size());
    double max_tiny = 0, max_real = 0;
    for (std::size_t i = 0; i < plain.size(); ++i) {
        max_tiny = std::max(max_tiny, std::abs(plain[i] - tiny[i]));
        max_real = std::max(max_real, std::abs(plain[i] - real[i]));
    }
    CHECK(max_tiny < 1e-9);
    CHECK(max_real > 1e-6);
    CHECK(backbone->content_hash() == hash);

    TunedModel m = attach(backbone, PetKind::adapter, PetHyper{4, 2, 2.0, 2}, 1);
    Rng rng(0);
    CHECK_THROWS_AS(hint_aug_step({}, m, conf, toy_train(AugmentMode::hint_aug), rng), ContractError);
}

TEST_CASE("tune is deterministic and reports the trace")
{
    const ViTConfig c = toy_config();
    const auto backbone = testing::share(testing::perturbed_model(c, 4));
    const Dataset data = toy_data();
    const FewShotTask task = sample_few_shot(data, 2, 1);
    const TuneResult a = tune(task, data, backbone, toy_train(AugmentMode::hint_aug));
    const TuneResult b = tune(task, data, backbone, toy_train(AugmentMode::hint_aug));
    CHECK(a.metrics.to_csv() == b.metrics.to_csv());
    CHECK(flat_params(a.best_pet) == flat_params(b.best_pet));
    CHECK(a.backbone_hash == backbone->content_hash());

    REQUIRE(a.metrics.epochs.size() == 3);
    CHECK(a.metrics.epochs[0].epoch == 0);
    CHECK(a.metrics.epochs[0].indicator_rate == 0.0);
    for (const auto& e : a.metrics.epochs) {
        CHECK(e.accuracy >= 0.0);
        CHECK(e.accuracy <= 1.0);
        CHECK(e.indicator_rate >= 0.0);
        CHECK(e.indicator_rate <= 1.0);
    }
    CHECK(a.metrics.epochs[1].augmented == task.train.size());
    CHECK(a.metrics.best_accuracy == a.metrics.epochs[a.metrics.best_epoch].accuracy);

    const auto lines = split_lines(a.metrics.to_csv());
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "epoch,loss,acc,indicator_rate,n_augmented");
    CHECK(lines[1].rfind("0,", 0) == 0);
}

TEST_CASE("no-aug and hint-aug share initialization and batch order")
{
    const ViTConfig c = toy_config();
    const auto backbone = testing::share(testing::perturbed_model(c, 4));
    const Dataset data = toy_data();
    const FewShotTask task = sample_few_shot(data, 2, 1);
    TrainConfig hint = toy_train(AugmentMode::hint_aug);
    hint.attack.epsilon = 1e-12;
    const TuneResult h = tune(task, data, backbone, hint);
    const TuneResult n = tune(task, data, backbone, toy_train(AugmentMode::no_aug));
    REQUIRE(h.metrics.epochs.size() == n.metrics.epochs.size());
    CHECK(h.metrics.epochs[0].loss == n.metrics.epochs[0].loss);
    CHECK(h.metrics.epochs[0].accuracy == n.metrics.epochs[0].accuracy);
    for (std::size_t e = 1; e < h.metrics.epochs.size(); ++e) {
        CHECK(std::abs(h.metrics.epochs[e].loss - n.metrics.epochs[e].loss) < 1e-9);
        CHECK(n.metrics.epochs[e].indicator_rate == 0.0);
    }
}

TEST_CASE("tune rejects bad inputs")
{
    const ViTConfig c = toy_config();
    const auto backbone = testing::share(ViT::initialize(c, 0));
    const Dataset data = toy_data();
    const FewShotTask task = sample_few_shot(data, 2, 1);
    CHECK_THROWS_AS(tune(task, toy_data(3), backbone, toy_train(AugmentMode::no_aug)), ConfigError);
    CHECK_THROWS_AS(tune(task, data, backbone, toy_train(AugmentMode::no_aug, 0)), ConfigError);
    CHECK_THROWS_AS(tune(task, data, nullptr, toy_train(AugmentMode::no_aug)), ContractError);
    TrainConfig diverge = toy_train(AugmentMode::no_aug);
    diverge.lr = 1e200;
    CHECK_THROWS_AS(tune(task, data, backbone, diverge), TrainingError);
}

TEST_CASE("one epoch on the default model finishes quickly")
{
    const ViTConfig c; // default desk-scale model
    const auto backbone = testing::share(ViT::initialize(c, 1, InitScheme::fan_in));
    SyntheticSpec s;
    s.classes = 6;
    s.samples_per_class = 20;
    s.shift = 0.5;
    const Dataset data = generate_synthetic(s);
    const FewShotTask task = sample_few_shot(data, 4, 0);
    TrainConfig cfg;
    cfg.epochs = 1;
    const auto start = std::chrono::steady_clock::now();
    const TuneResult r = tune(task, data, backbone, cfg);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    MESSAGE("one 4-shot epoch took " << seconds << " s");
    CHECK(r.metrics.epochs.size() == 2);
    CHECK(seconds < 60.0);
}

TEST_CASE("ablation grids and csv")
{
    CHECK(default_grid(AblationAxis::epsilon) == std::vector<std::string>{"0.01", "0.005", "0.001", "0.0002", "0.0001"});
    CHECK(default_grid(AblationAxis::num_patches) == std::vector<std::string>{"1", "2", "3", "8", "32", "All"});
    CHECK(default_grid(AblationAxis::lambda) == std::vector<std::string>{"0.2", "0.1", "0.05"});
    CHECK(default_grid(AblationAxis::objective) == std::vector<std::string>{"Full", "Untarget", "Random", "Proposed"});
    CHECK(parse_ablation_axis("num_patches") == AblationAxis::num_patches);
    CHECK_THROWS_AS(parse_ablation_axis("depth"), ConfigError);

    const TrainConfig base = toy_train(AugmentMode::no_aug);
    CHECK(apply_grid_value(base, AblationAxis::epsilon, "0.0002").attack.epsilon == 0.0002);
    CHECK(apply_grid_value(base, AblationAxis::epsilon, "0.0002").augment_mode == AugmentMode::hint_aug);
    CHECK(apply_grid_value(base, AblationAxis::num_patches, "All").num_patches == 0);
    CHECK(apply_grid_value(base, AblationAxis::lambda, "0.05").lambda == 0.05);
    CHECK(apply_grid_value(base, AblationAxis::objective, "Untarget").attack.objective == AttackObjective::untarget);
    CHECK_THROWS_AS(apply_grid_value(base, AblationAxis::epsilon, "abc"), ConfigError);

    const ViTConfig c = toy_config();
    const auto backbone = testing::share(testing::perturbed_model(c, 4));
    const Dataset data = toy_data();
    TrainConfig one = toy_train(AugmentMode::hint_aug, 1);
    const auto rows = run_ablation(AblationAxis::lambda, {"0.2", "0.05"}, one, 2, 2, data, backbone);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].accuracies.size() == 2);
    const double m = (rows[0].accuracies[0] + rows[0].accuracies[1]) / 2;
    CHECK(rows[0].mean == doctest::Approx(m));
    CHECK(rows[0].stddev == doctest::Approx(std::abs(rows[0].accuracies[0] - m)));
    const auto lines = split_lines(ablation_csv(rows));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "axis,value,seeds,mean_acc,std_acc,mean_pm_std,accuracies");
    CHECK(lines[1].rfind("lambda,0.2,2,", 0) == 0);
    CHECK_THROWS_AS(run_ablation(AblationAxis::lambda, {}, one, 1, 2, data, backbone), ConfigError);
}
