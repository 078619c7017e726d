// Local learning model: multinomial logistic regression or a one-hidden-layer
// ReLU MLP over flat features, with softmax cross-entropy loss and a
// mini-batch SGD local solver.
#pragma once

#include <cstdint>
#include <vector>

#include "cflsim/param_vector.hpp"

namespace cflsim {

struct ModelSpec {
  int input_dim = 0;
  int hidden_dim = 0;  // 0 selects plain logistic regression
  int num_classes = 0;

  int param_count() const;
  void validate() const;  // throws std::invalid_argument
};

struct DataShard {
  int num_samples = 0;
  int feature_dim = 0;
  std::vector<double> features;  // row-major num_samples x feature_dim
  std::vector<int> labels;       // class ids, length num_samples
  int distribution_id = 0;

  const double* row(int i) const {
    return features.data() + static_cast<std::size_t>(i) * feature_dim;
  }
  void validate(int num_classes) const;
};

// Number of SGD steps one participant performs per round: E epochs over
// ceil(D_k / b) batches each.
int local_update_count(int epochs, int samples, int batch_size);

// Mean cross-entropy of the model over the shard.
double loss(const ParamVector& params, const DataShard& shard,
            const ModelSpec& spec);

// Analytical gradient of `loss` with respect to params.
ParamVector gradient(const ParamVector& params, const DataShard& shard,
                     const ModelSpec& spec);

// Fraction of argmax-correct predictions; argmax ties go to the lowest class.
double accuracy(const ParamVector& params, const DataShard& shard,
                const ModelSpec& spec);

struct LocalTrainResult {
  ParamVector params;  // parameters after training
  ParamVector delta;   // params - start
  int steps = 0;       // SGD steps actually taken
};

// Runs exactly local_update_count(epochs, D_k, batch_size) mini-batch SGD
// steps with per-epoch shuffling driven by rng_seed. Deterministic.
LocalTrainResult local_train(const ParamVector& start, const DataShard& shard,
                             const ModelSpec& spec, int epochs, int batch_size,
                             double learning_rate, std::uint64_t rng_seed);

}  // namespace cflsim
