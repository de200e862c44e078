/*
 * Copyright 2026 The avseg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "avseg/annotation.hpp"
#include "avseg/augment.hpp"
#include "avseg/error.hpp"
#include "avseg/losses.hpp"
#include "avseg/metrics/evaluation.hpp"
#include "avseg/nn/adam.hpp"
#include "avseg/nn/unet.hpp"
#include "avseg/preprocess.hpp"
#include "avseg/rng.hpp"

namespace avseg {

struct TrainingConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int patience_epochs = 200;
  int max_epochs = 5000;  // safety cap; early stopping normally ends training
  int batch_size = 1;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  Approach approach = Approach::ms;
  bool use_enhanced = true;
  int val_images = 5;
  std::uint64_t split_seed = 0;
  bool deterministic = true;

  nn::AdamConfig adam() const { return {lr, beta1, beta2, 1e-8}; }

  void validate() const {
    if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta1 and beta2 must lie in [0, 1)");
    if (patience_epochs < 1) throw ConfigError("patience_epochs must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (seeds.empty()) throw ConfigError("seeds must not be empty");
    if (val_images < 1) throw ConfigError("val_images must be >= 1");
  }
};

// approach ms <-> bce3 <-> 3 sigmoid channels; traditional <-> ce4 <-> 4 softmax channels.
inline void check_consistency(const TrainingConfig& t, const nn::UNetConfig& u, const LossConfig& l) {
  t.validate();
  u.validate();
  l.validate();
  const bool ms = t.approach == Approach::ms;
  const LossKind want_loss = ms ? LossKind::bce3 : LossKind::ce4;
  const int want_channels = avseg::output_channels(t.approach);
  const Head want_head = ms ? Head::sigmoid : Head::softmax;
  if (l.kind != want_loss || u.out_channels != want_channels || u.head != want_head)
    throw ConfigError(std::string("inconsistent configuration: approach ") + avseg::to_string(t.approach) + " requires loss " +
                      to_string(want_loss) + " and " + std::to_string(want_channels) + " " + to_string(want_head) +
                      " outputs, got loss " + to_string(l.kind) + " and " + std::to_string(u.out_channels) + " " + to_string(u.head) +
                      " outputs");
}

// Network and loss settings implied by an approach.
inline void apply_approach(Approach a, nn::UNetConfig& u, LossConfig& l) {
  const bool ms = a == Approach::ms;
  u.out_channels = avseg::output_channels(a);
  u.head = ms ? Head::sigmoid : Head::softmax;
  l.kind = ms ? LossKind::bce3 : LossKind::ce4;
}

// ---------------------------------------------------------------------------
// Samples

using Target = std::variant<MultiSegTarget, Ce4Target>;

struct TrainingSample {
  std::string id;
  Tensor3<float> image;
  Mask roi;
  Target target;
};

inline Tensor3<float> network_input(const AnnotatedFundusImage& a, bool enhanced, const EnhancementConfig& ecfg = {}) {
  return enhanced ? enhance(a.image, a.roi, ecfg) : a.image;
}

inline TrainingSample make_sample(const AnnotatedFundusImage& a, Approach approach, bool enhanced, const LossConfig& l,
                                  const EnhancementConfig& ecfg = {}) {
  TrainingSample s{a.id, network_input(a, enhanced, ecfg), a.roi, {}};
  if (approach == Approach::ms)
    s.target = build_ms_target(a.annotation, a.roi);
  else
    s.target = build_ce4_target(a.annotation, a.roi, l.class_weights);
  return s;
}

inline Target pad_target(const Target& t, Size2 ps) {
  if (const auto* ms = std::get_if<MultiSegTarget>(&t))
    return MultiSegTarget{nn::zero_pad_to(ms->channels, ps), nn::zero_pad_to(ms->loss_roi, ps)};
  const auto& ce = std::get<Ce4Target>(t);
  return Ce4Target{nn::zero_pad_to(ce.labels, ps), ce.class_weights, nn::zero_pad_to(ce.roi, ps)};
}

// Network-ready sample: image reflect-padded to a multiple of 2^depth, the
// padding excluded from every loss mask.
inline TrainingSample pad_sample(const TrainingSample& s, int multiple) {
  const Size2 ps = nn::padded_size(s.image.size(), multiple);
  return {s.id, nn::pad_to_multiple(s.image, multiple), nn::zero_pad_to(s.roi, ps), pad_target(s.target, ps)};
}

inline TrainingSample augment(const TrainingSample& s, const AugmentConfig& cfg, Rng& rng) {
  return std::visit(
      [&](const auto& t) {
        auto a = augment_sample(s.image, t, s.roi, cfg, rng);
        return TrainingSample{s.id, std::move(a.image), std::move(a.roi), Target{std::move(a.target)}};
      },
      s.target);
}

template <typename T>
LossAndGrad<T> loss_and_grad(const Tensor3<T>& logits, const Target& target, const LossConfig& cfg) {
  if (const auto* ms = std::get_if<MultiSegTarget>(&target)) return bce3_loss_and_grad(logits, *ms, cfg);
  return ce4_loss_and_grad(logits, std::get<Ce4Target>(target), cfg);
}

// Loss of the current model on padded samples, averaged over samples.
template <typename T>
double evaluate_loss(const nn::UNet<T>& model, const std::vector<TrainingSample>& padded, const LossConfig& cfg) {
  if (padded.empty()) throw ConfigError("evaluate_loss: no samples");
  double total = 0.0;
  for (const auto& s : padded) total += loss_and_grad(model.forward(tensor_cast<T>(s.image)), s.target, cfg).loss;
  return total / static_cast<double>(padded.size());
}

// One optimizer step on a batch of padded samples; gradients are summed over
// the batch. Returns the mean batch loss measured before the update.
template <typename T>
double train_step(nn::UNet<T>& model, nn::Adam<T>& adam, const std::vector<const TrainingSample*>& batch, const LossConfig& cfg) {
  model.zero_grad();
  double total = 0.0;
  for (const TrainingSample* s : batch) {
    typename nn::UNet<T>::Tape tape;
    const Tensor3<T> logits = model.forward(tensor_cast<T>(s->image), &tape);
    const auto lg = loss_and_grad(logits, s->target, cfg);
    if (!std::isfinite(lg.loss)) throw NumericalError("training loss is not finite (sample '" + s->id + "')");
    total += lg.loss;
    model.backward(tape, lg.grad);
  }
  adam.step();
  return total / static_cast<double>(batch.size());
}

// ---------------------------------------------------------------------------
// Early stopping

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct EarlyStoppingResult {
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  bool stopped_early = false;
};

// Runs epochs until the validation loss has not improved for `patience`
// consecutive epochs or `max_epochs` is reached. `on_improve(epoch)` fires
// whenever a new best validation loss is seen.
template <typename TrainEpoch, typename Validate, typename OnImprove>
EarlyStoppingResult run_early_stopping(int max_epochs, int patience, TrainEpoch&& train_epoch, Validate&& validate,
                                       OnImprove&& on_improve,
                                       const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  if (patience < 1) throw ConfigError("patience must be >= 1");
  EarlyStoppingResult r;
  int since_best = 0;
  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_epoch(epoch);
    rec.val_loss = validate(epoch);
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!std::isfinite(rec.val_loss)) throw NumericalError("validation loss is not finite at epoch " + std::to_string(epoch));
    r.log.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (r.best_epoch == 0 || rec.val_loss < r.best_val_loss) {
      r.best_epoch = epoch;
      r.best_val_loss = rec.val_loss;
      since_best = 0;
      on_improve(epoch);
    } else if (++since_best >= patience) {
      r.stopped_early = true;
      break;
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Training

struct Split {
  std::vector<std::size_t> train, val;  // indices into the dataset
};

// Seeded shuffle of the id-sorted dataset; the last `val_images` go to
// validation (at least one image stays in training).
inline Split split_train_val(const std::vector<AnnotatedFundusImage>& data, int val_images, std::uint64_t seed) {
  if (data.size() < 2) throw DataError("training needs at least 2 images, got " + std::to_string(data.size()));
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data[a].id < data[b].id; });
  Rng rng(seed);
  shuffle(order, rng);
  const std::size_t nval = std::min<std::size_t>(static_cast<std::size_t>(val_images), data.size() - 1);
  Split s;
  s.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(nval));
  s.val.assign(order.end() - static_cast<std::ptrdiff_t>(nval), order.end());
  return s;
}

struct TrainHooks {
  std::function<void(const EpochRecord&)> on_epoch;
  // Called with the diverged model before training aborts.
  std::function<void(const nn::UNet<float>&, int epoch)> on_divergence;
};

struct TrainResult {
  std::vector<float> best_params;
  EarlyStoppingResult history;
  std::vector<std::string> train_ids, val_ids;
  std::uint64_t seed = 0;
};

inline TrainResult train_model(const std::vector<AnnotatedFundusImage>& data, const TrainingConfig& cfg, std::uint64_t seed,
                               nn::UNetConfig ucfg, LossConfig lcfg, AugmentConfig acfg, const TrainHooks& hooks = {},
                               const EnhancementConfig& ecfg = {}) {
  check_consistency(cfg, ucfg, lcfg);
  const Split split = split_train_val(data, cfg.val_images, cfg.split_seed);
  const int multiple = ucfg.multiple();

  TrainResult result;
  result.seed = seed;
  std::vector<TrainingSample> train, val;
  for (std::size_t i : split.train) {
    train.push_back(make_sample(data[i], cfg.approach, cfg.use_enhanced, lcfg, ecfg));
    result.train_ids.push_back(data[i].id);
  }
  for (std::size_t i : split.val) {
    val.push_back(pad_sample(make_sample(data[i], cfg.approach, cfg.use_enhanced, lcfg, ecfg), multiple));
    result.val_ids.push_back(data[i].id);
  }

  nn::UNet<float> model(ucfg);
  model.init_params(seed);
  nn::Adam<float> adam(model.parameters(), cfg.adam());
  Rng order_rng = Rng(seed).split(1);
  Rng aug_rng = Rng(seed).split(2);

  auto train_epoch = [&](int epoch) {
    std::vector<std::size_t> order(train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, order_rng);
    double total = 0.0;
    int steps = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      std::vector<TrainingSample> batch;
      for (std::size_t k = b; k < std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size)); ++k)
        batch.push_back(pad_sample(augment(train[order[k]], acfg, aug_rng), multiple));
      std::vector<const TrainingSample*> ptrs;
      for (const auto& s : batch) ptrs.push_back(&s);
      try {
        total += train_step(model, adam, ptrs, lcfg);
      } catch (const NumericalError&) {
        if (hooks.on_divergence) hooks.on_divergence(model, epoch);
        throw;
      }
      ++steps;
    }
    return total / steps;
  };
  auto validate = [&](int epoch) {
    try {
      return evaluate_loss(model, val, lcfg);
    } catch (const NumericalError&) {
      if (hooks.on_divergence) hooks.on_divergence(model, epoch);
      throw;
    }
  };
  auto on_improve = [&](int) { result.best_params = model.flat_values(); };

  result.history = run_early_stopping(cfg.max_epochs, cfg.patience_epochs, train_epoch, validate, on_improve, hooks.on_epoch);
  return result;
}

// ---------------------------------------------------------------------------
// Repetitions

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single run
  std::size_t n = 0;
};

// Metrics that come out NaN in a run (undefined for that run) are left out
// of that metric's summary.
inline MetricSummary summarize(const std::vector<double>& values) {
  MetricSummary s;
  double sum = 0.0;
  for (double v : values)
    if (std::isfinite(v)) {
      sum += v;
      ++s.n;
    }
  if (s.n == 0) return {std::nan(""), std::nan(""), 0};
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values)
      if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

using MetricMap = std::map<std::string, double>;

struct RunRecord {
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  MetricMap metrics;
};

struct RepetitionReport {
  std::vector<RunRecord> runs;  // in seed order
  std::map<std::string, MetricSummary> aggregate;
  bool partial = false;
};

inline std::map<std::string, MetricSummary> aggregate_runs(const std::vector<RunRecord>& runs) {
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : runs)
    if (r.ok)
      for (const auto& [k, v] : r.metrics) values[k].push_back(v);
  std::map<std::string, MetricSummary> out;
  for (const auto& [k, v] : values) out[k] = summarize(v);
  return out;
}

// Runs `run(seed) -> MetricMap` for every seed, up to `jobs` at a time. A
// failing seed is recorded and the remaining seeds still run.
template <typename RunFn>
RepetitionReport run_repetitions(const std::vector<std::uint64_t>& seeds, RunFn&& run, int jobs = 1) {
  if (seeds.empty()) throw ConfigError("run_repetitions: no seeds");
  RepetitionReport report;
  report.runs.resize(seeds.size());
  auto one = [&](std::size_t i) {
    RunRecord& r = report.runs[i];
    r.seed = seeds[i];
    try {
      r.metrics = run(seeds[i]);
      r.ok = true;
    } catch (const std::exception& e) {
      r.error = e.what();
    }
  };
  if (jobs <= 1) {
    for (std::size_t i = 0; i < seeds.size(); ++i) one(i);
  } else {
    std::mutex m;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (int j = 0; j < std::min<int>(jobs, static_cast<int>(seeds.size())); ++j)
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(m);
            if (next >= seeds.size()) return;
            i = next++;
          }
          one(i);
        }
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& r : report.runs) report.partial |= !r.ok;
  report.aggregate = aggregate_runs(report.runs);
  return report;
}

}  // namespace avseg
