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

// Acceptance run: prints one PASS/FAIL line per criterion, exits non-zero
// if any criterion fails. Tolerances are fixed below.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "hintaug/aod.hpp"
#include "hintaug/cfi.hpp"
#include "hintaug/config.hpp"
#include "hintaug/harness.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace hintaug;

namespace {

constexpr double fd_tolerance = 1e-6;
constexpr double fd_step = 2e-3;
constexpr double fd_budget_seconds = 120.0;
constexpr std::size_t fd_seeds = 20;
constexpr double score_tolerance = 1e-12;
constexpr std::size_t threshold_pairs = 100;
constexpr double threshold_margin = 1e-9; // relative offset from lambda*
constexpr std::size_t fgsm_pairs = 100;
constexpr std::size_t tune_epochs = 30;
constexpr double identity_tolerance = 1e-12;
constexpr double noninferiority_margin = 0.02;
constexpr std::size_t desk_seeds = 5;
constexpr std::size_t monotone_required = 4;
constexpr double desk_budget_seconds = 30.0 * 60.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void progress(const std::string& text)
{
    std::cerr << "[acceptance] " << text << std::endl;
}

std::string fmt(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
    return buf;
}

// 1. Analytic gradients of the input and of every PET tensor against a
// fourth-order central difference.
Outcome gradient_oracle()
{
    const auto start = Clock::now();
    const ViTConfig c = testing::toy_config();
    std::size_t passed = 0;
    double worst = 0;
    for (std::size_t seed = 0; seed < fd_seeds; ++seed) {
        double seed_worst = 0;
        for (PetKind kind : {PetKind::adapter, PetKind::lora, PetKind::vpt}) {
            const ViT vit = testing::perturbed_model(c, seed);
            PetModule pet = PetModule::create(c, kind, PetHyper{4, 2, 2.0, 2}, seed + 100);
            Rng r(seed + 7);
            for (auto& p : pet.parameters()) {
                for (double& v : p.tensor.mutable_data()) {
                    v = r.normal() * 0.15;
                }
            }
            Tensor x(Shape{c.channels, c.image_size, c.image_size});
            for (double& v : x.mutable_data()) {
                v = r.uniform();
            }
            const std::size_t y = seed % c.num_classes;
            Tensor onehot(Shape{c.num_classes});
            onehot.mutable_data()[y] = 1.0;
            auto loss = [&](Tape& t, const Tensor& img) {
                return cross_entropy(t, forward(vit, img, &pet, t).logits, onehot);
            };
            seed_worst = std::max(seed_worst, finite_diff_check(loss, x, fd_step, FdStencil::central4));
            for (auto& p : pet.parameters()) {
                const double e = finite_diff_check([&](Tape& t) { return loss(t, x); }, p.tensor, fd_step,
                                                   FdStencil::central4);
                seed_worst = std::max(seed_worst, e);
            }
        }
        passed += seed_worst < fd_tolerance ? 1 : 0;
        worst = std::max(worst, seed_worst);
    }
    const double elapsed = seconds_since(start);
    return {passed == fd_seeds && elapsed < fd_budget_seconds,
            std::to_string(passed) + "/" + std::to_string(fd_seeds) + " seeds, worst rel err " + fmt(worst)
                + ", " + fmt(elapsed, 3) + " s"};
}

AttentionRecord random_record(std::size_t heads, std::size_t n, std::size_t prefix, Rng& rng)
{
    AttentionRecord rec;
    rec.num_layers = 2;
    rec.num_heads = heads;
    rec.prefix = prefix;
    rec.seq_len = prefix + n;
    Tape tape(Tape::no_grad);
    for (std::size_t k = 0; k < 2 * heads; ++k) {
        Tensor logits(Shape{rec.seq_len, rec.seq_len});
        for (double& v : logits.mutable_data()) {
            v = 3.0 * rng.normal();
        }
        rec.maps.push_back(softmax(tape, logits));
    }
    return rec;
}

// 2. Score map against an independent per-head summation.
Outcome score_map_oracle()
{
    Rng rng(2);
    double worst = 0;
    std::size_t checked = 0;
    for (std::size_t heads : {1, 2, 4}) {
        for (std::size_t trial = 0; trial < 10; ++trial) {
            const std::size_t n = 4 + rng.below(30);
            const std::size_t prefix = 1 + rng.below(4);
            const AttentionRecord rec = random_record(heads, n, prefix, rng);
            for (std::size_t layer = 0; layer < 2; ++layer) {
                for (std::size_t q = 0; q < n; ++q) {
                    const AttentionScoreMap s = score_map(rec, layer, q);
                    for (std::size_t j = 0; j < n; ++j) {
                        double want = 0;
                        for (std::size_t h = 0; h < heads; ++h) {
                            const Tensor& m = rec.maps[layer * heads + h];
                            want += m.data()[(prefix + q) * rec.seq_len + prefix + j];
                        }
                        worst = std::max(worst, std::abs(s.scores.at(j) - want));
                        ++checked;
                    }
                }
            }
        }
    }
    return {worst <= score_tolerance, std::to_string(checked) + " entries, max abs diff " + fmt(worst)};
}

// 3. The indicator switches at lambda* = sum|dS| / sum|S^P|.
Outcome threshold_flip()
{
    Rng rng(3);
    std::size_t ok = 0;
    for (std::size_t t = 0; t < threshold_pairs; ++t) {
        const std::size_t n = 4 + rng.below(60);
        std::vector<double> p(n), q(n);
        const double spread = rng.uniform(0.01, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            p[i] = rng.uniform();
            q[i] = std::max(0.0, p[i] + spread * (rng.uniform() - 0.5));
        }
        double drift = 0, mass = 0;
        for (std::size_t i = 0; i < n; ++i) {
            drift += std::abs(p[i] - q[i]);
            mass += std::abs(p[i]);
        }
        const double star = drift / mass;
        const bool below = overfit_indicator(p, q, star * (1 - threshold_margin)) == 1;
        const bool above = overfit_indicator(p, q, star * (1 + threshold_margin)) == 0;
        ok += below && above ? 1 : 0;
    }
    return {ok == threshold_pairs, std::to_string(ok) + "/" + std::to_string(threshold_pairs) + " pairs flip at lambda*"};
}

// 4. Confusion accumulation, attack-label properties and the worked example.
Outcome confusion_oracles()
{
    Rng rng(4);
    bool accum_ok = true, labels_ok = true;
    for (std::size_t m : {2, 3, 5, 8}) {
        ConfusionMatrix c(m);
        std::vector<std::vector<double>> logits;
        std::vector<std::size_t> labels;
        for (std::size_t s = 0; s < 60; ++s) {
            std::vector<double> f(m);
            for (double& v : f) {
                v = 4.0 * rng.normal();
            }
            labels.push_back(rng.below(m));
            logits.push_back(f);
            c.update(f, labels.back());
        }
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
                double want = 0;
                for (std::size_t s = 0; s < logits.size(); ++s) {
                    if (labels[s] == j) {
                        want += logits[s][i] - *std::min_element(logits[s].begin(), logits[s].end());
                    }
                }
                accum_ok = accum_ok && c(i, j) == want;
            }
        }
        for (std::size_t y = 0; y < m; ++y) {
            const AttackLabel a = attack_label(c, y);
            double total = 0;
            for (double v : a.target) {
                labels_ok = labels_ok && v >= 0.0;
                total += v;
            }
            labels_ok = labels_ok && a.target.size() == m && a.target[y] == 0.0
                        && std::abs(total - 1.0) <= attack_label_tolerance;
        }
    }
    ConfusionMatrix ex(3);
    ex.update(std::vector<double>{10, 6, 0}, 0);
    ex.update(std::vector<double>{0, 0, 2}, 0);
    const bool example_ok = ex(0, 0) == 10 && ex(1, 0) == 6 && ex(2, 0) == 2
                            && attack_label(ex, 0).target == std::vector<double>{0.0, 0.75, 0.25};
    return {accum_ok && labels_ok && example_ok, std::string("accumulation ") + (accum_ok ? "exact" : "MISMATCH")
                                                     + ", labels " + (labels_ok ? "valid" : "INVALID")
                                                     + ", [10,6,2] example " + (example_ok ? "exact" : "WRONG")};
}

// 5. Patch-restricted FGSM touches only the chosen patches and stays in the ball.
Outcome fgsm_containment()
{
    ViTConfig c; // default model, 8x8 patch grid
    const ViT vit = testing::perturbed_model(c, 5, 0.05);
    Rng rng(5);
    AttackConfig ac; // epsilon = default_epsilon
    std::size_t ok = 0, moved = 0;
    for (std::size_t t = 0; t < fgsm_pairs; ++t) {
        const Tensor x = testing::random_image(c, 1000 + t);
        std::vector<std::size_t> patches;
        for (std::size_t k = 0, n = 1 + rng.below(3); k < n; ++k) {
            patches.push_back(rng.below(c.num_patches()));
        }
        const std::size_t y = rng.below(c.num_classes);
        std::vector<double> target(c.num_classes);
        for (std::size_t i = 0; i < target.size(); ++i) {
            target[i] = i == y ? 0.0 : rng.uniform();
        }
        const double norm = std::accumulate(target.begin(), target.end(), 0.0);
        for (double& v : target) {
            v /= norm;
        }
        const Tensor adv = infuse_patch(x, patches, vit, target, ac);
        std::vector<char> inside(x.numel(), 0);
        for (std::size_t idx : patch_pixel_indices(c, patches)) {
            inside[idx] = 1;
        }
        bool good = adv.shape() == x.shape();
        bool changed = false;
        for (std::size_t i = 0; good && i < x.numel(); ++i) {
            const double a = adv.data()[i], b = x.data()[i];
            if (!inside[i]) {
                good = a == b && std::signbit(a) == std::signbit(b);
            } else {
                good = std::abs(a - b) <= ac.epsilon && a >= 0.0 && a <= 1.0;
                changed = changed || a != b;
            }
        }
        ok += good ? 1 : 0;
        moved += changed ? 1 : 0;
    }
    return {ok == fgsm_pairs && moved > 0, std::to_string(ok) + "/" + std::to_string(fgsm_pairs)
                                               + " contained at eps " + fmt(ac.epsilon) + ", "
                                               + std::to_string(moved) + " perturbed"};
}

std::vector<std::size_t> all_indices(const Dataset& d)
{
    std::vector<std::size_t> out(d.size());
    std::iota(out.begin(), out.end(), 0);
    return out;
}

struct DeskModel {
    RunConfig config;
    std::shared_ptr<const ViT> backbone;
    Dataset tuning;
    double pretrain_seconds = 0;
};

DeskModel pretrain_default()
{
    DeskModel d;
    const auto start = Clock::now();
    const Dataset upstream = d.config.load_dataset("pretrain.data");
    const ViT init = ViT::initialize(d.config.model_config(), Rng::derive(d.config.count("seed"), 1),
                                     parse_init_scheme(d.config.get("model.init")));
    const PretrainResult r = pretrain(init, upstream, d.config.pretrain_config());
    d.backbone = std::make_shared<const ViT>(r.model);
    d.tuning = d.config.load_dataset("data");
    d.pretrain_seconds = seconds_since(start);
    progress("pretrained default model in " + fmt(d.pretrain_seconds, 3) + " s, train acc "
             + fmt(r.epoch_accuracy.back(), 3) + ", upstream acc "
             + fmt(accuracy(*d.backbone, nullptr, upstream, all_indices(upstream)), 3));
    return d;
}

// 6 and 7 share the per-kind tuning runs.
struct KindRun {
    PetKind kind;
    bool hash_same = false;
    bool detached_same = false;
    double detached_before = 0, detached_after = 0;
    double epoch0_indicator = -1;
    double identity_err = 0;
};

KindRun tune_kind(const DeskModel& d, PetKind kind)
{
    KindRun k{kind};
    const FewShotTask task = sample_few_shot(d.tuning, 4, 0);
    TrainConfig cfg = d.config.train_config();
    cfg.pet_kind = kind;
    cfg.epochs = tune_epochs;
    const std::uint64_t hash = d.backbone->content_hash();
    k.detached_before = accuracy(*d.backbone, nullptr, d.tuning, task.eval);

    if (kind != PetKind::vpt) {
        const TunedModel fresh = attach(d.backbone, kind, cfg.pet_hyper, cfg.seed);
        const std::size_t layer = d.backbone->config.aod_layer;
        const std::size_t query = d.backbone->config.resolved_query_patch();
        for (std::size_t i = 0; i < 8; ++i) {
            const Tensor& img = d.tuning.images[task.train[i]];
            const AttentionScoreMap sp = score_map(forward(*d.backbone, img).attention, layer, query);
            const AttentionScoreMap st = score_map(fresh.forward(img).attention, layer, query, ScoreSource::tuned);
            for (std::size_t j = 0; j < sp.scores.size(); ++j) {
                k.identity_err = std::max(k.identity_err, std::abs(sp.scores[j] - st.scores[j]));
            }
        }
    }

    const TuneResult r = tune(task, d.tuning, d.backbone, cfg);
    const TunedModel tuned = attach(d.backbone, r.best_pet);
    const std::shared_ptr<const ViT> detached = detach(tuned);
    k.hash_same = r.backbone_hash == hash && d.backbone->content_hash() == hash && detached->content_hash() == hash;
    k.detached_after = accuracy(*detached, nullptr, d.tuning, task.eval);
    k.detached_same = k.detached_after == k.detached_before;
    k.epoch0_indicator = r.metrics.epochs.front().indicator_rate;
    progress(to_string(kind) + ": best acc " + fmt(r.metrics.best_accuracy, 3) + ", backbone acc "
             + fmt(k.detached_before, 3));
    return k;
}

Outcome frozen_backbone(const std::vector<KindRun>& runs)
{
    bool ok = true;
    std::string detail;
    for (const auto& k : runs) {
        ok = ok && k.hash_same && k.detached_same;
        detail += (detail.empty() ? "" : "; ") + to_string(k.kind) + " hash " + (k.hash_same ? "same" : "CHANGED")
                  + ", detached acc " + fmt(k.detached_before) + "->" + fmt(k.detached_after);
    }
    return {ok, detail};
}

Outcome identity_at_init(const std::vector<KindRun>& runs)
{
    bool ok = true;
    std::string detail;
    for (const auto& k : runs) {
        if (k.kind == PetKind::vpt) {
            continue;
        }
        ok = ok && k.identity_err <= identity_tolerance && k.epoch0_indicator == 0.0;
        detail += (detail.empty() ? "" : "; ") + to_string(k.kind) + " max |S^P-S^T| " + fmt(k.identity_err)
                  + ", epoch-0 indicator rate " + fmt(k.epoch0_indicator);
    }
    return {ok, detail};
}

// 8. hint_aug against no augmentation on 4-shot adapter tuning. Accuracy is
// the final-epoch eval accuracy, so no model selection touches the eval split.
Outcome desk_scale(const DeskModel& d)
{
    const auto start = Clock::now();
    double hint_sum = 0, none_sum = 0;
    std::size_t monotone = 0, hint_wins = 0;
    std::string per_seed;
    for (std::size_t seed = 0; seed < desk_seeds; ++seed) {
        const FewShotTask task = sample_few_shot(d.tuning, 4, seed);
        TrainConfig cfg = d.config.train_config();
        cfg.seed = seed;
        cfg.pet_kind = PetKind::adapter;
        cfg.augment_mode = AugmentMode::hint_aug;
        const TuneResult h = tune(task, d.tuning, d.backbone, cfg);
        cfg.augment_mode = AugmentMode::no_aug;
        const TuneResult n = tune(task, d.tuning, d.backbone, cfg);
        const double ha = h.metrics.epochs.back().accuracy;
        const double na = n.metrics.epochs.back().accuracy;
        hint_sum += ha;
        none_sum += na;
        hint_wins += ha > na ? 1 : 0;
        bool mono = true;
        for (std::size_t e = 2; e < h.metrics.epochs.size(); ++e) {
            mono = mono && h.metrics.epochs[e].loss < h.metrics.epochs[e - 1].loss;
        }
        monotone += mono ? 1 : 0;
        per_seed += " " + fmt(ha, 3) + "/" + fmt(na, 3);
        progress("seed " + std::to_string(seed) + ": hint " + fmt(ha, 3) + " no-aug " + fmt(na, 3) + " loss "
                 + fmt(h.metrics.epochs[1].loss) + "->" + fmt(h.metrics.epochs.back().loss)
                 + (mono ? " monotone" : " non-monotone") + ", indicator rate (last epoch) "
                 + fmt(h.metrics.epochs.back().indicator_rate, 3));
    }
    const double hint_mean = hint_sum / desk_seeds;
    const double none_mean = none_sum / desk_seeds;
    const double elapsed = seconds_since(start) + d.pretrain_seconds;
    const bool ok =
        hint_mean >= none_mean - noninferiority_margin && monotone >= monotone_required && elapsed < desk_budget_seconds;
    return {ok, "hint mean " + fmt(hint_mean, 4) + " vs no-aug " + fmt(none_mean, 4) + " (hint/no-aug:" + per_seed
                    + "), hint better on " + std::to_string(hint_wins) + "/" + std::to_string(desk_seeds)
                    + ", monotone loss " + std::to_string(monotone) + "/" + std::to_string(desk_seeds) + ", "
                    + fmt(elapsed / 60.0, 3) + " min incl. pretrain"};
}

const char* tiny_config =
    "model.image_size = 16\n"
    "model.patch_size = 4\n"
    "model.embed_dim = 16\n"
    "model.num_layers = 2\n"
    "model.num_heads = 2\n"
    "model.num_classes = 3\n"
    "model.aod_layer = 1\n"
    "pet.bottleneck = 4\n"
    "data.classes = 3\n"
    "data.samples_per_class = 6\n"
    "pretrain.data.classes = 3\n"
    "pretrain.data.samples_per_class = 6\n"
    "pretrain.epochs = 3\n"
    "train.epochs = 2\n"
    "train.batch_size = 4\n"
    "shots = 2\n"
    "ablate.seeds = 3\n";

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args, const fs::path& log)
{
    const std::string cmd = std::string("'") + HINTAUG_CLI + "' " + args + " > '" + log.string() + "' 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        out.push_back(item);
    }
    return out;
}

// 9. The CLI sweeps each axis over its published grid with three seeds.
Outcome ablation_fidelity(const fs::path& root)
{
    const fs::path dir = root / "ablate";
    fs::create_directories(dir);
    // The patch grid reaches 32, so the image needs an 8x8 patch grid.
    std::ofstream(dir / "tiny.cfg") << tiny_config << "model.image_size = 32\n";
    const std::string base = "--config '" + (dir / "tiny.cfg").string() + "' --out '" + dir.string() + "'";
    if (run_cli("pretrain " + base, dir / "pretrain.log") != 0) {
        return {false, "pretrain failed: " + slurp(dir / "pretrain.log")};
    }
    const std::string ckpt = (dir / "backbone.hac").string();
    const std::map<std::string, std::vector<std::string>> grids = {
        {"epsilon", {"0.01", "0.005", "0.001", "0.0002", "0.0001"}},
        {"num_patches", {"1", "2", "3", "8", "32", "All"}},
        {"lambda", {"0.2", "0.1", "0.05"}},
        {"objective", {"Full", "Untarget", "Random", "Proposed"}}};
    std::string detail;
    bool ok = true;
    for (const auto& [axis, grid] : grids) {
        const int code = run_cli("ablate " + base + " --ckpt '" + ckpt + "' --axis " + axis, dir / (axis + ".log"));
        const auto lines = split(slurp(dir / ("ablation_" + axis + ".csv")), '\n');
        bool good = code == 0 && lines.size() == grid.size() + 1
                    && lines[0] == "axis,value,seeds,mean_acc,std_acc,mean_pm_std,accuracies";
        for (std::size_t r = 0; good && r < grid.size(); ++r) {
            const auto cells = split(lines[r + 1], ',');
            good = cells.size() == 7 && cells[0] == axis && cells[1] == grid[r] && cells[2] == "3";
            if (!good) {
                break;
            }
            const auto accs = split(cells[6], ';');
            good = accs.size() == 3;
            double mean = 0, var = 0;
            for (const auto& a : accs) {
                mean += std::stod(a) / 3.0;
            }
            for (const auto& a : accs) {
                var += (std::stod(a) - mean) * (std::stod(a) - mean) / 3.0;
            }
            good = good && std::abs(std::stod(cells[3]) - mean) < 1e-9
                   && std::abs(std::stod(cells[4]) - std::sqrt(var)) < 1e-9
                   && cells[5].find("\xC2\xB1") != std::string::npos;
        }
        ok = ok && good;
        detail += (detail.empty() ? "" : ", ") + axis + " " + std::to_string(grid.size()) + (good ? " ok" : " BAD");
    }
    return {ok, detail};
}

std::map<std::string, std::string> tree_contents(const fs::path& dir)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        const std::string name = e.path().filename().string();
        if (e.is_regular_file() && name.find("_manifest.json") == std::string::npos && e.path().extension() != ".log") {
            out[fs::relative(e.path(), dir).generic_string()] = slurp(e.path());
        }
    }
    return out;
}

// 10. Every command re-run from its manifest reproduces its outputs byte for byte.
Outcome manifest_determinism(const fs::path& root)
{
    const fs::path prep = root / "prep";
    fs::create_directories(prep);
    const fs::path cfg = prep / "tiny.cfg";
    std::ofstream(cfg) << tiny_config;
    const std::string pbase = "--config '" + cfg.string() + "' --out '" + prep.string() + "'";
    if (run_cli("gen-data " + pbase, prep / "g.log") != 0 || run_cli("pretrain " + pbase, prep / "p.log") != 0
        || run_cli("tune " + pbase + " --ckpt '" + (prep / "backbone.hac").string() + "'", prep / "t.log") != 0) {
        return {false, "preparation failed"};
    }
    const std::string ckpt = (prep / "backbone.hac").string();
    const std::string pet = (prep / "pet.hac").string();
    const std::string image = (prep / "dataset" / "img_00000.ppm").string();
    const std::vector<std::pair<std::string, std::string>> commands = {
        {"gen-data", ""},
        {"pretrain", ""},
        {"tune", "--ckpt '" + ckpt + "'"},
        {"eval", "--ckpt '" + ckpt + "' --pet '" + pet + "'"},
        {"attn-map", "--ckpt '" + ckpt + "' --pet '" + pet + "' --image '" + image + "'"},
        {"confusion", "--ckpt '" + ckpt + "'"},
        {"ablate", "--ckpt '" + ckpt + "' --axis epsilon --grid 0.01,0.001"}};
    bool ok = true;
    std::size_t files = 0;
    std::string detail;
    for (const auto& [name, extra] : commands) {
        const fs::path first = root / ("m_" + name + "_a");
        const fs::path second = root / ("m_" + name + "_b");
        fs::create_directories(first);
        fs::create_directories(second);
        const int a = run_cli(name + " --config '" + cfg.string() + "' --out '" + first.string() + "' " + extra,
                              first / "run.log");
        const int b = run_cli(name + " --manifest '" + (first / (name + "_manifest.json")).string() + "' --out '"
                                  + second.string() + "'",
                              second / "run.log");
        const auto ta = tree_contents(first);
        const auto tb = tree_contents(second);
        const bool same = a == 0 && b == 0 && !ta.empty() && ta == tb;
        files += ta.size();
        ok = ok && same;
        if (!same) {
            detail += " " + name + " differs (exit " + std::to_string(a) + "/" + std::to_string(b) + ")";
        }
    }
    return {ok, std::to_string(commands.size()) + " commands, " + std::to_string(files) + " files byte-identical"
                    + (detail.empty() ? "" : ";" + detail)};
}

} // namespace

int main(int argc, char** argv)
{
    const fs::path root = argc > 1 ? fs::path(argv[1]) / "acceptance_work" : fs::temp_directory_path() / "hintaug_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);

    std::array<Outcome, 10> results;
    auto guarded = [](const std::function<Outcome()>& f) {
        try {
            return f();
        } catch (const std::exception& e) {
            return Outcome{false, std::string("exception: ") + e.what()};
        }
    };
    progress("criterion 1");
    results[0] = guarded(gradient_oracle);
    results[1] = guarded(score_map_oracle);
    results[2] = guarded(threshold_flip);
    results[3] = guarded(confusion_oracles);
    progress("criterion 5");
    results[4] = guarded(fgsm_containment);
    progress("criterion 9");
    results[8] = guarded([&] { return ablation_fidelity(root); });
    progress("criterion 10");
    results[9] = guarded([&] { return manifest_determinism(root); });

    try {
        const DeskModel desk = pretrain_default();
        std::vector<KindRun> runs;
        for (PetKind kind : {PetKind::adapter, PetKind::lora, PetKind::vpt}) {
            runs.push_back(tune_kind(desk, kind));
        }
        results[5] = frozen_backbone(runs);
        results[6] = identity_at_init(runs);
        results[7] = guarded([&] { return desk_scale(desk); });
    } catch (const std::exception& e) {
        for (std::size_t i : {5, 6, 7}) {
            results[i] = {false, std::string("exception: ") + e.what()};
        }
    }

    static const char* names[] = {"gradient oracle",       "score map oracle",    "indicator threshold",
                                  "confusion oracles",     "fgsm containment",    "frozen backbone",
                                  "identity at init",      "desk-scale tuning",   "ablation grids",
                                  "manifest determinism"};
    int failures = 0;
    std::ostringstream report;
    for (std::size_t i = 0; i < results.size(); ++i) {
        report << "criterion " << i + 1 << ' ' << names[i] << ": " << (results[i].pass ? "PASS" : "FAIL") << " ("
               << results[i].detail << ")\n";
        failures += results[i].pass ? 0 : 1;
    }
    std::cout << report.str();
    std::ofstream(root.parent_path() / "acceptance_results.txt") << report.str();
    return failures == 0 ? 0 : 1;
}
