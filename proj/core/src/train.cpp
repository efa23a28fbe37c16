#include "ata/train.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "ata/error.hpp"
#include "ata/ops.hpp"
#include "ata/parallel.hpp"
#include "ata/random.hpp"

namespace ata {
namespace {

std::size_t label_of(const SyntheticClip& clip, const ModelConfig& cfg) {
  if (!clip.label) throw ConfigError("training clip without a label");
  if (*clip.label >= cfg.classes)
    throw ConfigError("label " + std::to_string(*clip.label) + " outside " + std::to_string(cfg.classes) + " classes");
  return *clip.label;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

std::vector<Tensor*> param_slots(ModelParams& params) {
  std::vector<Tensor*> slots;
  params.for_each([&](const std::string&, Tensor& t) { slots.push_back(&t); });
  return slots;
}

struct ClipStep {
  std::vector<std::vector<double>> grads;
  double loss = 0.0;
  bool correct = false;
};

}  // namespace

double evaluate_accuracy(std::span<const SyntheticClip> clips, ModelParams& params, const ModelConfig& cfg,
                         std::size_t threads) {
  if (clips.empty()) return 0.0;
  std::vector<char> hit(clips.size(), 0);
  parallel_for(clips.size(), resolve_threads(threads), [&](std::size_t i) {
    Tape tape;
    const ModelVars vars = bind_params(tape, params, BindMode::constant);
    const Var logits = forward_classifier(clips[i].volume, vars, cfg);
    hit[i] = argmax(logits.value().data()) == label_of(clips[i], cfg);
  });
  return static_cast<double>(std::count(hit.begin(), hit.end(), 1)) / static_cast<double>(clips.size());
}

TrainResult train(std::span<const SyntheticClip> train_set, std::span<const SyntheticClip> val_set,
                  const ModelConfig& cfg, const TrainHyper& hyper, const EpochCallback& on_epoch) {
  return train_from(init_params(cfg), train_set, val_set, cfg, hyper, on_epoch);
}

TrainResult train_from(ModelParams params, std::span<const SyntheticClip> train_set,
                       std::span<const SyntheticClip> val_set, const ModelConfig& cfg, const TrainHyper& hyper,
                       const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw ConfigError("train: empty dataset");
  if (hyper.batch == 0) throw ConfigError("train: batch size must be positive");
  for (const auto& clip : train_set) label_of(clip, cfg);
  for (const auto& clip : val_set) label_of(clip, cfg);

  const std::size_t threads = resolve_threads(hyper.threads);
  TrainResult result{std::move(params), {}};
  std::vector<Tensor*> slots = param_slots(result.params);
  std::vector<std::vector<double>> velocity;
  for (Tensor* t : slots) velocity.emplace_back(t->size(), 0.0);

  std::mt19937_64 rng(derive_seed(hyper.seed, 0x7A1));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 1; epoch <= hyper.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    // Indexed by clip so the epoch loss sums in a fixed order.
    std::vector<double> clip_loss(train_set.size(), 0.0);
    std::size_t correct = 0;

    for (std::size_t start = 0; start < order.size(); start += hyper.batch) {
      const std::size_t count = std::min(hyper.batch, order.size() - start);
      std::vector<ClipStep> steps(count);
      parallel_for(count, threads, [&](std::size_t k) {
        const SyntheticClip& clip = train_set[order[start + k]];
        Tape tape;
        const ModelVars vars = bind_params(tape, result.params, BindMode::variable);
        const Var logits = forward_classifier(clip.volume, vars, cfg);
        const std::size_t label = label_of(clip, cfg);
        const Var loss = cross_entropy(logits, label);
        tape.backward(loss);
        ClipStep& step = steps[k];
        step.loss = loss.value().item();
        step.correct = argmax(logits.value().data()) == label;
        std::vector<Var> leaves;
        ModelVars copy = vars;
        copy.for_each([&](const std::string&, Var& v) { leaves.push_back(v); });
        for (const Var& v : leaves) {
          auto g = tape.grad(v);
          step.grads.emplace_back(v.value().size(), 0.0);
          std::copy(g.begin(), g.end(), step.grads.back().begin());
        }
      });

      const double inv = 1.0 / static_cast<double>(count);
      for (std::size_t s = 0; s < slots.size(); ++s) {
        auto data = slots[s]->data();
        for (std::size_t i = 0; i < data.size(); ++i) {
          double g = 0.0;
          for (const ClipStep& step : steps) g += step.grads[s][i];
          velocity[s][i] = hyper.momentum * velocity[s][i] + g * inv;
          data[i] -= hyper.lr * velocity[s][i];
        }
      }
      for (std::size_t k = 0; k < count; ++k) {
        clip_loss[order[start + k]] = steps[k].loss;
        correct += steps[k].correct ? 1 : 0;
      }
    }

    EpochMetrics m;
    m.epoch = epoch;
    m.loss = std::accumulate(clip_loss.begin(), clip_loss.end(), 0.0) / static_cast<double>(train_set.size());
    m.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    m.val_acc = evaluate_accuracy(val_set, result.params, cfg, threads);
    result.history.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

}  // namespace ata
