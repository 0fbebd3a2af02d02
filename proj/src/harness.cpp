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

#include "hintaug/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "hintaug/error.hpp"
#include "hintaug/rng.hpp"

namespace hintaug {

// ---- few-shot sampling -----------------------------------------------------------

FewShotTask sample_few_shot(const Dataset& data, std::size_t shots, std::uint64_t seed)
{
    if (shots == 0) {
        throw ConfigError("shots must be at least 1");
    }
    data.validate();
    FewShotTask task;
    task.shots = shots;
    task.seed = seed;
    std::vector<std::vector<std::size_t>> by_class(data.num_classes());
    for (std::size_t i = 0; i < data.size(); ++i) {
        by_class[data.labels[i]].push_back(i);
    }
    Rng rng(Rng::derive(seed, 101));
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        if (members.size() < shots + 1) {
            throw DatasetError("class '" + data.class_names[c] + "' has " + std::to_string(members.size())
                               + " images; " + std::to_string(shots) + "-shot sampling needs at least "
                               + std::to_string(shots + 1));
        }
        rng.shuffle(std::span<std::size_t>(members));
        task.classes.push_back(c);
        task.train.insert(task.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(shots));
        task.eval.insert(task.eval.end(), members.begin() + static_cast<std::ptrdiff_t>(shots), members.end());
    }
    std::sort(task.eval.begin(), task.eval.end());
    return task;
}

// ---- config --------------------------------------------------------------------------

std::string to_string(AugmentMode mode)
{
    switch (mode) {
    case AugmentMode::hint_aug:
        return "hint_aug";
    case AugmentMode::no_aug:
        return "no_aug";
    case AugmentMode::random_baseline:
        return "random_baseline";
    }
    return "unknown";
}

AugmentMode parse_augment_mode(const std::string& text)
{
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return std::tolower(ch); });
    t.erase(std::remove(t.begin(), t.end(), '_'), t.end());
    t.erase(std::remove(t.begin(), t.end(), '-'), t.end());
    if (t == "hintaug") {
        return AugmentMode::hint_aug;
    }
    if (t == "noaug") {
        return AugmentMode::no_aug;
    }
    if (t == "randombaseline") {
        return AugmentMode::random_baseline;
    }
    throw ConfigError("unknown augment_mode '" + text + "' (expected hint_aug, no_aug or random_baseline)");
}

std::size_t TrainConfig::resolved_num_patches(const ViTConfig& model) const
{
    return num_patches == 0 ? model.num_patches() : num_patches;
}

void TrainConfig::validate(const ViTConfig& model) const
{
    if (epochs < 1) {
        throw ConfigError("epochs must be at least 1");
    }
    if (batch_size < 1) {
        throw ConfigError("batch_size must be at least 1");
    }
    if (!(lr > 0.0) || !std::isfinite(lr)) {
        throw ConfigError("lr must be positive");
    }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("lambda must be positive");
    }
    if (resolved_num_patches(model) > model.num_patches()) {
        throw ConfigError("num_patches " + std::to_string(num_patches) + " exceeds N = "
                          + std::to_string(model.num_patches()));
    }
    if (jitter < 0.0 || jitter >= 1.0) {
        throw ConfigError("jitter must be in [0, 1)");
    }
    attack.validate();
}

TrainConfig TrainConfig::large_scale_preset()
{
    TrainConfig c;
    c.epochs = 100;
    c.batch_size = 256;
    c.lr = 0.01;
    return c;
}

std::string format_number(double value)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.10g", value);
    return buf;
}

std::string Metrics::to_csv() const
{
    std::ostringstream os;
    os << "epoch,loss,acc,indicator_rate,n_augmented\n";
    for (const auto& e : epochs) {
        os << e.epoch << ',' << format_number(e.loss) << ',' << format_number(e.accuracy) << ','
           << format_number(e.indicator_rate) << ',' << e.augmented << '\n';
    }
    return os.str();
}

// ---- augmentation ----------------------------------------------------------------------

Tensor baseline_augment(const Tensor& image, std::uint64_t seed, double jitter, bool erase)
{
    if (image.rank() != 3) {
        throw DimensionError("baseline_augment expects [C×H×W], got " + shape_to_string(image.shape()));
    }
    Rng rng(seed);
    Tensor out = image.clone();
    auto px = out.mutable_data();
    const double brightness = 1.0 + rng.uniform(-jitter, jitter);
    const double contrast = 1.0 + rng.uniform(-jitter, jitter);
    if (jitter > 0.0) {
        double m = 0.0;
        for (double& v : px) {
            v *= brightness;
            m += v;
        }
        m /= static_cast<double>(px.size());
        for (double& v : px) {
            v = std::clamp((v - m) * contrast + m, 0.0, 1.0);
        }
    }
    if (erase) {
        const std::size_t c = image.dim(0), h = image.dim(1), w = image.dim(2);
        const double area = rng.uniform(0.02, 0.25) * static_cast<double>(h * w);
        const double aspect = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
        std::size_t eh = std::clamp<std::size_t>(static_cast<std::size_t>(std::sqrt(area * aspect)), 1, h);
        std::size_t ew = std::clamp<std::size_t>(static_cast<std::size_t>(std::sqrt(area / aspect)), 1, w);
        while (eh * ew * 4 > h * w) {
            (eh >= ew ? eh : ew) -= 1;
        }
        const std::size_t y0 = rng.below(h - eh + 1), x0 = rng.below(w - ew + 1);
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t y = y0; y < y0 + eh; ++y) {
                for (std::size_t x = x0; x < x0 + ew; ++x) {
                    px[ch * h * w + y * w + x] = rng.uniform();
                }
            }
        }
    }
    return out;
}

// ---- one step ------------------------------------------------------------------------------

namespace {

Tensor onehot(std::size_t m, std::size_t label)
{
    Tensor t(Shape{m});
    t.mutable_data()[label] = 1.0;
    return t;
}

AttentionScoreMap pretrained_map_for(const ViT& backbone, const Tensor& image)
{
    const ViTConfig& c = backbone.config;
    return score_map(forward(backbone, image).attention, c.aod_layer, c.resolved_query_patch(),
                     ScoreSource::pretrained);
}

} // namespace

StepStats hint_aug_step(const std::vector<BatchItem>& batch, TunedModel& model, const ConfusionMatrix& confusion,
                        const TrainConfig& config, Rng& aug_rng)
{
    const ViT& backbone = *model.backbone;
    const ViTConfig& c = backbone.config;
    config.validate(c);
    if (batch.empty()) {
        throw ContractError("hint_aug_step: empty batch");
    }
    NamedTensors params = trainable_parameters(model.pet);
    for (auto& p : params) {
        p.tensor.zero_grad();
    }

    StepStats stats;
    const std::size_t inputs_per_sample = config.keep_clean && config.augment_mode != AugmentMode::no_aug ? 2 : 1;
    const double weight = 1.0 / static_cast<double>(batch.size() * inputs_per_sample);
    const std::size_t n_aug = config.resolved_num_patches(c);

    for (const BatchItem& item : batch) {
        const Tensor& x = *item.image;
        Tensor augmented = x;
        switch (config.augment_mode) {
        case AugmentMode::no_aug:
            break;
        case AugmentMode::random_baseline:
            augmented = baseline_augment(x, aug_rng.next(), config.jitter, true);
            ++stats.augmented;
            break;
        case AugmentMode::hint_aug: {
            const AttentionScoreMap sp = item.pretrained_map ? *item.pretrained_map : pretrained_map_for(backbone, x);
            const AttentionScoreMap st =
                score_map(model.forward(x).attention, c.aod_layer, c.resolved_query_patch(), ScoreSource::tuned);
            const int indicator = overfit_indicator(sp.scores, st.scores, config.lambda);
            stats.overfit += static_cast<std::size_t>(indicator);
            const std::vector<std::size_t> patches = top_patches(sp.scores, st.scores, indicator, n_aug);
            augmented = ablation_objective(x, item.label, patches, backbone, confusion, config.attack, aug_rng);
            ++stats.augmented;
            break;
        }
        }

        auto train_on = [&](const Tensor& input) {
            Tape tape;
            const ForwardResult r = model.forward(input, tape);
            const Tensor loss = cross_entropy(tape, r.logits, onehot(c.num_classes, item.label));
            stats.loss_sum += loss.item();
            backward(scale(tape, loss, weight), tape);
        };
        try {
            train_on(augmented);
            if (inputs_per_sample == 2) {
                train_on(x);
            }
        } catch (const NumericError& e) {
            throw TrainingError(std::string("tuning diverged: ") + e.what());
        }
        ++stats.samples;
    }
    if (inputs_per_sample == 2) {
        stats.loss_sum /= 2.0;
    }
    for (auto& p : params) {
        sgd_step(p.tensor, config.lr);
        p.tensor.zero_grad();
    }
    return stats;
}

// ---- tuning loop ------------------------------------------------------------------------------

ConfusionMatrix build_confusion(const ViT& backbone, const Dataset& data, const std::vector<std::size_t>& indices)
{
    ConfusionMatrix cm(backbone.config.num_classes);
    for (std::size_t i : indices) {
        cm.update(forward(backbone, data.images.at(i)).logits.data(), data.labels.at(i));
    }
    return cm;
}

namespace {

void check_backbone(const ViT& backbone, std::uint64_t expected, std::size_t epoch)
{
    if (backbone.content_hash() != expected) {
        throw TrainingError("backbone weights changed during tuning (epoch " + std::to_string(epoch) + ")");
    }
}

} // namespace

TuneResult tune(const FewShotTask& task, const Dataset& data, std::shared_ptr<const ViT> backbone,
                const TrainConfig& config)
{
    if (!backbone) {
        throw ContractError("tune: no backbone");
    }
    const ViTConfig& c = backbone->config;
    config.validate(c);
    if (data.num_classes() != c.num_classes) {
        throw ConfigError("dataset has " + std::to_string(data.num_classes()) + " classes, backbone expects "
                          + std::to_string(c.num_classes));
    }
    if (task.train.empty()) {
        throw DatasetError("few-shot task has no training samples");
    }

    const std::uint64_t expected_hash = backbone->content_hash();
    TunedModel model = attach(backbone, config.pet_kind, config.pet_hyper, Rng::derive(config.seed, 11));
    Rng order_rng(Rng::derive(config.seed, 12));
    Rng aug_rng(Rng::derive(config.seed, 13));

    const std::size_t layer = c.aod_layer, query = c.resolved_query_patch();
    ConfusionMatrix confusion(c.num_classes);
    std::vector<AttentionScoreMap> pretrained_maps(data.size());
    auto refresh = [&]() {
        confusion.reset();
        for (std::size_t i : task.train) {
            const ForwardResult r = forward(*backbone, data.images[i]);
            confusion.update(r.logits.data(), data.labels[i]);
            pretrained_maps[i] = score_map(r.attention, layer, query, ScoreSource::pretrained);
        }
    };

    TuneResult result{model.pet.clone(), {}, expected_hash};
    Metrics& metrics = result.metrics;

    // Epoch 0: the untouched starting point.
    refresh();
    {
        EpochMetrics e;
        std::size_t overfit = 0;
        double loss = 0.0;
        for (std::size_t i : task.train) {
            const ForwardResult r = model.forward(data.images[i]);
            Tape scratch(Tape::no_grad);
            loss += cross_entropy(scratch, r.logits, onehot(c.num_classes, data.labels[i])).item();
            const AttentionScoreMap st = score_map(r.attention, layer, query, ScoreSource::tuned);
            overfit += static_cast<std::size_t>(overfit_indicator(pretrained_maps[i].scores, st.scores, config.lambda));
        }
        e.samples = task.train.size();
        e.loss = loss / static_cast<double>(e.samples);
        e.indicator_rate = static_cast<double>(overfit) / static_cast<double>(e.samples);
        e.accuracy = accuracy(*backbone, &model.pet, data, task.eval);
        metrics.epochs.push_back(e);
        metrics.best_accuracy = e.accuracy;
        metrics.best_epoch = 0;
    }

    std::vector<std::size_t> order = task.train;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        refresh();
        order_rng.shuffle(std::span<std::size_t>(order));
        EpochMetrics e;
        e.epoch = epoch;
        std::size_t overfit = 0;
        double loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            std::vector<BatchItem> batch;
            for (std::size_t s = start; s < stop; ++s) {
                const std::size_t i = order[s];
                batch.push_back({&data.images[i], data.labels[i], &pretrained_maps[i]});
            }
            const StepStats st = hint_aug_step(batch, model, confusion, config, aug_rng);
            loss += st.loss_sum;
            overfit += st.overfit;
            e.augmented += st.augmented;
            e.samples += st.samples;
        }
        e.loss = loss / static_cast<double>(e.samples);
        if (!std::isfinite(e.loss)) {
            throw TrainingError("tuning diverged (non-finite loss) in epoch " + std::to_string(epoch));
        }
        e.indicator_rate =
            config.augment_mode == AugmentMode::hint_aug ? static_cast<double>(overfit) / static_cast<double>(e.samples)
                                                         : 0.0;
        e.accuracy = accuracy(*backbone, &model.pet, data, task.eval);
        check_backbone(*backbone, expected_hash, epoch);
        metrics.epochs.push_back(e);
        if (e.accuracy > metrics.best_accuracy) {
            metrics.best_accuracy = e.accuracy;
            metrics.best_epoch = epoch;
            result.best_pet = model.pet.clone();
        }
    }
    return result;
}

// ---- ablations -------------------------------------------------------------------------------

std::string to_string(AblationAxis axis)
{
    switch (axis) {
    case AblationAxis::epsilon:
        return "epsilon";
    case AblationAxis::num_patches:
        return "num_patches";
    case AblationAxis::lambda:
        return "lambda";
    case AblationAxis::objective:
        return "objective";
    }
    return "unknown";
}

AblationAxis parse_ablation_axis(const std::string& text)
{
    for (AblationAxis a : {AblationAxis::epsilon, AblationAxis::num_patches, AblationAxis::lambda,
                           AblationAxis::objective}) {
        if (text == to_string(a)) {
            return a;
        }
    }
    throw ConfigError("unknown ablation axis '" + text + "' (expected epsilon, num_patches, lambda or objective)");
}

std::vector<std::string> default_grid(AblationAxis axis)
{
    switch (axis) {
    case AblationAxis::epsilon:
        return {"0.01", "0.005", "0.001", "0.0002", "0.0001"};
    case AblationAxis::num_patches:
        return {"1", "2", "3", "8", "32", "All"};
    case AblationAxis::lambda:
        return {"0.2", "0.1", "0.05"};
    case AblationAxis::objective:
        return {"Full", "Untarget", "Random", "Proposed"};
    }
    return {};
}

namespace {

double parse_positive(const std::string& text, const char* what)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != text.size() || !(v > 0.0)) {
        throw ConfigError(std::string("invalid ") + what + " value '" + text + "'");
    }
    return v;
}

} // namespace

TrainConfig apply_grid_value(const TrainConfig& base, AblationAxis axis, const std::string& value)
{
    TrainConfig c = base;
    c.augment_mode = AugmentMode::hint_aug;
    switch (axis) {
    case AblationAxis::epsilon:
        c.attack.epsilon = parse_positive(value, "epsilon");
        break;
    case AblationAxis::lambda:
        c.lambda = parse_positive(value, "lambda");
        break;
    case AblationAxis::num_patches: {
        std::string lower = value;
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (lower == "all") {
            c.num_patches = 0;
        } else {
            const double v = parse_positive(value, "num_patches");
            if (v != std::floor(v)) {
                throw ConfigError("num_patches must be an integer or All, got '" + value + "'");
            }
            c.num_patches = static_cast<std::size_t>(v);
        }
        break;
    }
    case AblationAxis::objective:
        c.attack.objective = parse_objective(value);
        break;
    }
    return c;
}

std::vector<AblationRow> run_ablation(AblationAxis axis, const std::vector<std::string>& grid,
                                      const TrainConfig& base, std::size_t num_seeds, std::size_t shots,
                                      const Dataset& data, std::shared_ptr<const ViT> backbone)
{
    if (grid.empty()) {
        throw ConfigError("ablation grid is empty");
    }
    if (num_seeds == 0) {
        throw ConfigError("ablation needs at least one seed");
    }
    std::vector<TrainConfig> configs;
    for (const auto& v : grid) {
        configs.push_back(apply_grid_value(base, axis, v));
        configs.back().validate(backbone->config);
    }
    std::vector<AblationRow> rows;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        AblationRow row;
        row.axis = to_string(axis);
        row.value = grid[g];
        for (std::size_t s = 0; s < num_seeds; ++s) {
            TrainConfig cfg = configs[g];
            cfg.seed = base.seed + s;
            const FewShotTask task = sample_few_shot(data, shots, cfg.seed);
            row.accuracies.push_back(tune(task, data, backbone, cfg).metrics.best_accuracy);
        }
        const double n = static_cast<double>(row.accuracies.size());
        row.mean = std::accumulate(row.accuracies.begin(), row.accuracies.end(), 0.0) / n;
        double var = 0.0;
        for (double a : row.accuracies) {
            var += (a - row.mean) * (a - row.mean);
        }
        row.stddev = std::sqrt(var / n);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string ablation_csv(const std::vector<AblationRow>& rows)
{
    std::ostringstream os;
    os << "axis,value,seeds,mean_acc,std_acc,mean_pm_std,accuracies\n";
    for (const auto& r : rows) {
        char pm[96];
        std::snprintf(pm, sizeof(pm), "%.4f\xC2\xB1%.4f", r.mean, r.stddev);
        os << r.axis << ',' << r.value << ',' << r.accuracies.size() << ',' << format_number(r.mean) << ','
           << format_number(r.stddev) << ',' << pm << ',';
        for (std::size_t i = 0; i < r.accuracies.size(); ++i) {
            os << (i ? ";" : "") << format_number(r.accuracies[i]);
        }
        os << '\n';
    }
    return os.str();
}

} // namespace hintaug
