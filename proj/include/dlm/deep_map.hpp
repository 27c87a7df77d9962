#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dlm/network.hpp"

namespace dlm {

enum class EpochCap {
  early_stop,  ///< stop when validation accuracy stalls for `patience` epochs
  fixed,       ///< run exactly `fixed_epochs` epochs
};

struct TrainConfig {
  std::size_t batch_size = 512;
  std::size_t max_epochs = 500;
  std::size_t patience = 20;
  double learning_rate = 0.001;
  std::optional<Loss> loss;  ///< defaults to the task's loss
  EpochCap epoch_cap = EpochCap::early_stop;
  std::size_t fixed_epochs = 2000;
  std::uint64_t seed = 0;
  /// Passes over the token distribution in train_token_distribution.
  std::size_t token_epochs = 1;
  /// Above this many tokens per epoch, tokens are sampled proportionally
  /// to frequency instead of expanded.
  std::uint64_t token_cap = 10'000'000;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double loss = 0;                  ///< full training-set loss after the epoch
  std::optional<double> val_accuracy;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  ///< epoch whose parameters were kept (1-based)
  bool stopped_early = false;
};

/// Minibatch gradient descent. In early-stop mode the returned network holds
/// the parameters of the best-validation epoch; validation accuracy is
/// correlation accuracy against validation plus training targets.
TrainHistory train(DeepNetwork& net, const Matrix& train_input, const Matrix& train_target,
                   const Matrix& val_input, const Matrix& val_target, const TrainConfig& cfg);

/// Trains on the token distribution: every epoch presents word i
/// frequencies[i] times in shuffled order, for cfg.token_epochs epochs.
TrainHistory train_token_distribution(DeepNetwork& net, const Matrix& input, const Matrix& target,
                                      std::span<const double> frequencies, const TrainConfig& cfg);

/// The per-epoch presentation list used by train_token_distribution.
std::vector<std::size_t> token_list(std::span<const double> frequencies, std::uint64_t cap,
                                    Rng& rng);

}  // namespace dlm
