#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mrnet/errors.hpp"
#include "mrnet/grid.hpp"
#include "mrnet/network.hpp"
#include "mrnet/stage.hpp"
#include "mrnet/tape.hpp"

namespace mrnet {

using ops::he_init;

/// Defaults mirror the training protocol: 70 epochs, batch 128, SGD with
/// momentum 0.9, learning rate 0.1 divided by 10 every 20 epochs.
struct TrainConfig {
  int epochs = 70;
  int batch_size = 128;
  double lr0 = 0.1;
  double lr_decay_factor = 0.1;
  int lr_decay_every = 20;
  double momentum = 0.9;
  std::uint64_t seed = 42;
  double stop_at_train_acc = 0.0;  // 0 = run all epochs
  int min_epochs = 0;              // epochs to run before the stop check
};

inline double lr_at(int epoch, const TrainConfig& cfg = TrainConfig{}) {
  if (epoch < 0) throw ContractError("lr_at: negative epoch");
  return cfg.lr0 * std::pow(cfg.lr_decay_factor, epoch / cfg.lr_decay_every);
}

/// Heavy-ball update: v <- momentum * v + g; p <- p - lr * v.
template <typename T>
void sgd_momentum_step(Grid<T>& param, const Grid<T>& grad, Grid<T>& velocity, double lr,
                       double momentum) {
  require_same_shape(param, grad, "sgd_momentum_step");
  require_same_shape(param, velocity, "sgd_momentum_step velocity");
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(static_cast<double>(grad.raw()[i]))) {
      throw NumericError("sgd_momentum_step: non-finite gradient at index " +
                         std::to_string(i));
    }
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    velocity.raw()[i] =
        static_cast<T>(momentum) * velocity.raw()[i] + grad.raw()[i];
    param.raw()[i] -= static_cast<T>(lr) * velocity.raw()[i];
  }
}

template <typename T>
void sgd_momentum_step(std::vector<Parameter<T>>& params, double lr, double momentum) {
  for (auto& p : params) {
    if (!p.trainable) continue;
    sgd_momentum_step(p.value, p.grad, p.velocity, lr, momentum);
  }
}

/// Contiguous test span for one record in one cross-validation fold.
struct FoldPlan {
  std::size_t record = 0;
  int fold = 0;
  std::size_t test_begin = 0;
  std::size_t test_end = 0;  // exclusive
};

/// Fold f of a record with N epochs tests [floor(f*N/k), floor((f+1)*N/k));
/// the spans partition each record across the k folds.
inline std::vector<std::vector<FoldPlan>> make_folds(
    std::span<const std::size_t> record_lengths, int k = 10) {
  if (k < 1) throw ContractError("make_folds: k must be >= 1");
  for (std::size_t r = 0; r < record_lengths.size(); ++r) {
    if (record_lengths[r] < static_cast<std::size_t>(k)) {
      throw ContractError("make_folds: record " + std::to_string(r) + " has " +
                          std::to_string(record_lengths[r]) + " epochs, fewer than k=" +
                          std::to_string(k));
    }
  }
  std::vector<std::vector<FoldPlan>> folds(k);
  for (int f = 0; f < k; ++f) {
    folds[f].reserve(record_lengths.size());
    for (std::size_t r = 0; r < record_lengths.size(); ++r) {
      const std::size_t n = record_lengths[r];
      folds[f].push_back(FoldPlan{r, f, f * n / k, (f + 1ull) * n / k});
    }
  }
  return folds;
}

template <typename T>
struct Sample {
  Grid<T> epoch;
  Stage label = Stage::Wake;
};

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  std::optional<double> val_acc;
};

inline nlohmann::json to_json(const EpochLog& e) {
  nlohmann::json j{{"epoch", e.epoch},
                   {"lr", e.lr},
                   {"train_loss", e.train_loss},
                   {"train_acc", e.train_acc}};
  if (e.val_acc) {
    j["val_acc"] = *e.val_acc;
  } else {
    j["val_acc"] = nullptr;
  }
  return j;
}

template <typename T>
double evaluate_accuracy(Model<T>& model, std::span<const Sample<T>> samples) {
  if (samples.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : samples) {
    auto [p, stage] = model.predict(s.epoch);
    if (stage == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

/// One SGD run over the sample set. Training order reshuffles every epoch
/// from the run seed; evaluation order is never shuffled. A trailing batch
/// of one sample joins the previous batch so batch-norm statistics stay
/// well defined. Emits one log entry per epoch (JSONL if a stream is given).
template <typename T>
std::vector<EpochLog> train(Model<T>& model, std::span<const Sample<T>> train_set,
                            std::span<const Sample<T>> val_set, const TrainConfig& cfg,
                            std::ostream* log_stream = nullptr) {
  if (train_set.empty()) throw ContractError("train: empty training set");
  ops::Rng rng(cfg.seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<EpochLog> logs;
  logs.reserve(cfg.epochs);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch_index = 0;
    std::size_t i = 0;
    while (i < order.size()) {
      std::size_t take = std::min<std::size_t>(cfg.batch_size, order.size() - i);
      if (order.size() - i - take == 1) take += 1;  // absorb trailing singleton
      std::vector<Grid<T>> batch;
      std::vector<int> labels;
      batch.reserve(take);
      labels.reserve(take);
      for (std::size_t b = 0; b < take; ++b) {
        batch.push_back(train_set[order[i + b]].epoch);
        labels.push_back(static_cast<int>(train_set[order[i + b]].label));
      }
      i += take;

      Tape<T> tape;
      auto in = tape.leaf(std::move(batch));
      auto f = model.forward(tape, in, /*training=*/true, rng);
      auto losses = tape.softmax_xent(f.logits, labels);
      auto loss = tape.batch_mean(losses);
      const double batch_loss = static_cast<double>(tape.value(loss)[0](0, 0));
      if (!std::isfinite(batch_loss)) {
        throw NumericError("train: non-finite loss in epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(batch_index));
      }
      loss_sum += batch_loss * static_cast<double>(take);

      for (std::size_t b = 0; b < take; ++b) {
        const auto& logit = tape.value(f.logits)[b];
        int best = 0;
        for (int c = 1; c < kNumStages; ++c) {
          if (logit(c, 0) > logit(best, 0)) best = c;
        }
        if (best == labels[b]) ++correct;
      }

      model.zero_grads();
      tape.backward(loss);
      model.collect_grads(tape, f);
      sgd_momentum_step(model.parameters(), lr, cfg.momentum);
      ++batch_index;
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    entry.train_loss = loss_sum / static_cast<double>(order.size());
    entry.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    if (!val_set.empty()) entry.val_acc = evaluate_accuracy(model, val_set);
    if (log_stream) *log_stream << to_json(entry).dump() << "\n";
    logs.push_back(entry);
    if (cfg.stop_at_train_acc > 0.0 && entry.train_acc >= cfg.stop_at_train_acc &&
        epoch + 1 >= cfg.min_epochs) {
      break;
    }
  }
  return logs;
}

}  // namespace mrnet
