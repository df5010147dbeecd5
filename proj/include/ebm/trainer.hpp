#pragma once

#include <cstddef>
#include <cstdint>

#include "ebm/config.hpp"
#include "ebm/dataset.hpp"
#include "ebm/model.hpp"

namespace ebm {

struct TrainOptions {
  // Worker threads for outer bags; 0 picks the hardware concurrency. Results
  // do not depend on this value.
  std::size_t threads = 0;
  // Records the training deviance after every round in BagRecord.
  bool record_training_deviance = false;
};

// Cyclic gradient boosting of per-feature shape functions over fixed bins,
// bagged, with early stopping, followed by boosting of the selected pair terms
// on top of the frozen main effects. Every term ends up centered.
EbmModel train(const Dataset& train_data, const TrainConfig& config, const TrainOptions& options = {});

// Deterministic per-stream seed derivation (SplitMix64 mix of seed and tags).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace ebm
