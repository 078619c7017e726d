#include "cflsim/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "cflsim/rng.hpp"

namespace cflsim {
namespace {

// Parameter layout:
//   logistic (hidden_dim == 0):  [W (C x d), b (C)]
//   MLP:                         [W1 (H x d), b1 (H), W2 (C x H), b2 (C)]

void check_dims(const ParamVector& params, const DataShard& shard,
                const ModelSpec& spec) {
  spec.validate();
  if (static_cast<int>(params.size()) != spec.param_count()) {
    throw std::invalid_argument(
        "params dimension " + std::to_string(params.size()) +
        " does not match model parameter count " +
        std::to_string(spec.param_count()));
  }
  if (shard.feature_dim != spec.input_dim) {
    throw std::invalid_argument("shard feature_dim does not match input_dim");
  }
  shard.validate(spec.num_classes);
}

// Computes class log-probabilities for one sample into `logp` (size C).
// `hidden` must have size H when hidden_dim > 0 (receives post-ReLU values).
void forward_logp(const ParamVector& params, const ModelSpec& spec,
                  const double* x, std::vector<double>& hidden,
                  std::vector<double>& logp) {
  const int d = spec.input_dim;
  const int h = spec.hidden_dim;
  const int c = spec.num_classes;
  if (h == 0) {
    const double* w = params.data();
    const double* b = params.data() + static_cast<std::size_t>(c) * d;
    for (int j = 0; j < c; ++j) {
      double z = b[j];
      const double* wj = w + static_cast<std::size_t>(j) * d;
      for (int i = 0; i < d; ++i) z += wj[i] * x[i];
      logp[j] = z;
    }
  } else {
    const double* w1 = params.data();
    const double* b1 = w1 + static_cast<std::size_t>(h) * d;
    const double* w2 = b1 + h;
    const double* b2 = w2 + static_cast<std::size_t>(c) * h;
    for (int j = 0; j < h; ++j) {
      double z = b1[j];
      const double* wj = w1 + static_cast<std::size_t>(j) * d;
      for (int i = 0; i < d; ++i) z += wj[i] * x[i];
      hidden[j] = z > 0.0 ? z : 0.0;
    }
    for (int j = 0; j < c; ++j) {
      double z = b2[j];
      const double* wj = w2 + static_cast<std::size_t>(j) * h;
      for (int i = 0; i < h; ++i) z += wj[i] * hidden[i];
      logp[j] = z;
    }
  }
  // log-softmax with max subtraction
  double zmax = logp[0];
  for (int j = 1; j < c; ++j) zmax = std::max(zmax, logp[j]);
  double sum = 0.0;
  for (int j = 0; j < c; ++j) sum += std::exp(logp[j] - zmax);
  const double lse = zmax + std::log(sum);
  for (int j = 0; j < c; ++j) logp[j] -= lse;
}

// Accumulates the gradient of the mean cross-entropy over the given sample
// indices into `grad` (scaled by 1/count) and returns the mean loss.
double grad_accumulate(const ParamVector& params, const DataShard& shard,
                       const ModelSpec& spec, const int* idx, int count,
                       ParamVector& grad) {
  const int d = spec.input_dim;
  const int h = spec.hidden_dim;
  const int c = spec.num_classes;
  std::fill(grad.begin(), grad.end(), 0.0);
  std::vector<double> hidden(static_cast<std::size_t>(std::max(h, 1)));
  std::vector<double> logp(static_cast<std::size_t>(c));
  std::vector<double> dz(static_cast<std::size_t>(c));
  std::vector<double> dh(static_cast<std::size_t>(std::max(h, 1)));
  const double inv = 1.0 / count;
  double loss_acc = 0.0;

  for (int s = 0; s < count; ++s) {
    const int i = idx[s];
    const double* x = shard.row(i);
    const int y = shard.labels[static_cast<std::size_t>(i)];
    forward_logp(params, spec, x, hidden, logp);
    loss_acc -= logp[static_cast<std::size_t>(y)];
    for (int j = 0; j < c; ++j) {
      dz[static_cast<std::size_t>(j)] =
          (std::exp(logp[static_cast<std::size_t>(j)]) - (j == y ? 1.0 : 0.0)) *
          inv;
    }
    if (h == 0) {
      double* gw = grad.data();
      double* gb = grad.data() + static_cast<std::size_t>(c) * d;
      for (int j = 0; j < c; ++j) {
        const double g = dz[static_cast<std::size_t>(j)];
        double* gwj = gw + static_cast<std::size_t>(j) * d;
        for (int k = 0; k < d; ++k) gwj[k] += g * x[k];
        gb[j] += g;
      }
    } else {
      double* gw1 = grad.data();
      double* gb1 = gw1 + static_cast<std::size_t>(h) * d;
      double* gw2 = gb1 + h;
      double* gb2 = gw2 + static_cast<std::size_t>(c) * h;
      const double* w2 = params.data() + static_cast<std::size_t>(h) * d + h;
      for (int j = 0; j < h; ++j) dh[static_cast<std::size_t>(j)] = 0.0;
      for (int j = 0; j < c; ++j) {
        const double g = dz[static_cast<std::size_t>(j)];
        const double* w2j = w2 + static_cast<std::size_t>(j) * h;
        double* gw2j = gw2 + static_cast<std::size_t>(j) * h;
        for (int k = 0; k < h; ++k) {
          gw2j[k] += g * hidden[static_cast<std::size_t>(k)];
          dh[static_cast<std::size_t>(k)] += g * w2j[k];
        }
        gb2[j] += g;
      }
      for (int j = 0; j < h; ++j) {
        if (hidden[static_cast<std::size_t>(j)] <= 0.0) continue;
        const double g = dh[static_cast<std::size_t>(j)];
        double* gw1j = gw1 + static_cast<std::size_t>(j) * d;
        for (int k = 0; k < d; ++k) gw1j[k] += g * x[k];
        gb1[j] += g;
      }
    }
  }
  return loss_acc * inv;
}

}  // namespace

int ModelSpec::param_count() const {
  if (hidden_dim == 0) {
    return num_classes * input_dim + num_classes;
  }
  return hidden_dim * input_dim + hidden_dim + num_classes * hidden_dim +
         num_classes;
}

void ModelSpec::validate() const {
  if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
  if (hidden_dim < 0) throw std::invalid_argument("hidden_dim must be >= 0");
  if (num_classes < 2) throw std::invalid_argument("num_classes must be >= 2");
}

void DataShard::validate(int num_classes) const {
  if (num_samples < 1) throw std::invalid_argument("shard must be non-empty");
  if (feature_dim < 1) throw std::invalid_argument("feature_dim must be >= 1");
  if (static_cast<int>(labels.size()) != num_samples ||
      features.size() !=
          static_cast<std::size_t>(num_samples) * feature_dim) {
    throw std::invalid_argument("shard buffer sizes inconsistent");
  }
  for (int y : labels) {
    if (y < 0 || y >= num_classes) {
      throw std::invalid_argument("label out of range");
    }
  }
}

int local_update_count(int epochs, int samples, int batch_size) {
  if (epochs < 1 || samples < 1 || batch_size < 1) {
    throw std::invalid_argument(
        "local_update_count requires positive epochs, samples and batch size");
  }
  const int batches = (samples + batch_size - 1) / batch_size;
  return batches * epochs;
}

double loss(const ParamVector& params, const DataShard& shard,
            const ModelSpec& spec) {
  check_dims(params, shard, spec);
  std::vector<double> hidden(
      static_cast<std::size_t>(std::max(spec.hidden_dim, 1)));
  std::vector<double> logp(static_cast<std::size_t>(spec.num_classes));
  double acc = 0.0;
  for (int i = 0; i < shard.num_samples; ++i) {
    forward_logp(params, spec, shard.row(i), hidden, logp);
    acc -= logp[static_cast<std::size_t>(shard.labels[i])];
  }
  return acc / shard.num_samples;
}

ParamVector gradient(const ParamVector& params, const DataShard& shard,
                     const ModelSpec& spec) {
  check_dims(params, shard, spec);
  std::vector<int> idx(static_cast<std::size_t>(shard.num_samples));
  std::iota(idx.begin(), idx.end(), 0);
  ParamVector grad(params.size());
  grad_accumulate(params, shard, spec, idx.data(), shard.num_samples, grad);
  return grad;
}

double accuracy(const ParamVector& params, const DataShard& shard,
                const ModelSpec& spec) {
  check_dims(params, shard, spec);
  std::vector<double> hidden(
      static_cast<std::size_t>(std::max(spec.hidden_dim, 1)));
  std::vector<double> logp(static_cast<std::size_t>(spec.num_classes));
  int correct = 0;
  for (int i = 0; i < shard.num_samples; ++i) {
    forward_logp(params, spec, shard.row(i), hidden, logp);
    int best = 0;
    for (int j = 1; j < spec.num_classes; ++j) {
      if (logp[static_cast<std::size_t>(j)] >
          logp[static_cast<std::size_t>(best)]) {
        best = j;
      }
    }
    if (best == shard.labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / shard.num_samples;
}

LocalTrainResult local_train(const ParamVector& start, const DataShard& shard,
                             const ModelSpec& spec, int epochs, int batch_size,
                             double learning_rate, std::uint64_t rng_seed) {
  check_dims(start, shard, spec);
  if (epochs < 1 || batch_size < 1) {
    throw std::invalid_argument("epochs and batch_size must be positive");
  }
  if (learning_rate < 0.0) {
    throw std::invalid_argument("learning rate must be non-negative");
  }

  LocalTrainResult out;
  out.params = start;
  ParamVector grad(start.size());
  std::vector<int> idx(static_cast<std::size_t>(shard.num_samples));
  std::iota(idx.begin(), idx.end(), 0);
  RngStream rng(rng_seed);

  for (int e = 0; e < epochs; ++e) {
    rng.shuffle(idx);
    for (int begin = 0; begin < shard.num_samples; begin += batch_size) {
      const int count = std::min(batch_size, shard.num_samples - begin);
      grad_accumulate(out.params, shard, spec, idx.data() + begin, count,
                      grad);
      add_scaled(out.params, grad, -learning_rate);
      ++out.steps;
    }
  }
  out.delta = subtract(out.params, start);
  return out;
}

}  // namespace cflsim
