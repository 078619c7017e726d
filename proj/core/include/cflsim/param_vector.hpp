// Flat parameter/update vectors and the handful of vector operations the
// simulator needs. All model weights, deltas and gradients are ParamVectors.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace cflsim {

using ParamVector = std::vector<double>;

void check_same_dim(const ParamVector& a, const ParamVector& b);
bool all_finite(const ParamVector& v);

double dot(const ParamVector& a, const ParamVector& b);
double l2_norm(const ParamVector& v);

// y += scale * x
void add_scaled(ParamVector& y, const ParamVector& x, double scale);

ParamVector subtract(const ParamVector& a, const ParamVector& b);

void scale_in_place(ParamVector& v, double s);

ParamVector zeros(std::size_t dim);

}  // namespace cflsim
