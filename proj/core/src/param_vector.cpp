#include "cflsim/param_vector.hpp"

#include <cmath>

namespace cflsim {

void check_same_dim(const ParamVector& a, const ParamVector& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("parameter vector dimension mismatch: " +
                                std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
}

bool all_finite(const ParamVector& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

double dot(const ParamVector& a, const ParamVector& b) {
  check_same_dim(a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(const ParamVector& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

void add_scaled(ParamVector& y, const ParamVector& x, double scale) {
  check_same_dim(y, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += scale * x[i];
}

ParamVector subtract(const ParamVector& a, const ParamVector& b) {
  check_same_dim(a, b);
  ParamVector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

void scale_in_place(ParamVector& v, double s) {
  for (double& x : v) x *= s;
}

ParamVector zeros(std::size_t dim) { return ParamVector(dim, 0.0); }

}  // namespace cflsim
