// Per-round contraction/offset factors of the convergence recursion for
// locally-updated SGD under fair full participation, plus an empirical
// validation harness on synthetic strongly convex quadratics where every
// constant is known in closed form.
#pragma once

#include <cstdint>
#include <vector>

#include "cflsim/param_vector.hpp"

namespace cflsim {

// zeta1(t) = 1 - alpha*eta*(T - eta*(T - 1))
double zeta1(double alpha, double eta, int local_steps);

// zeta2(t) = (1 + alpha*(1 - eta*zeta1)) * eta^2 * rho^2 * T(T-1)(2T-1)/6
//          + eta^2 * (T^2 + T - 1) * rho^2
//          + 2 * eta * zeta1 * (T - 1) * het
// (the bare learning-rate symbols in the published factor are read as the
// per-round eta; see zeta2_plain for the variant without the zeta1 factors).
double zeta2(double alpha, double eta, int local_steps, double rho_sq,
             double het);

// Alternate reading with plain eta in the first and third terms.
double zeta2_plain(double alpha, double eta, int local_steps, double rho_sq,
                   double het);

struct BoundParams {
  double alpha = 1.0;
  double rho_sq = 1.0;
  double het = 0.0;          // heterogeneity constant
  int local_steps = 10;      // T
  std::vector<double> eta;   // per-round schedule; size >= rounds evaluated
};

// b(0) = initial_sq_dist, b(r+1) = zeta1(r) * b(r) + zeta2(r); returns
// b(0..rounds) inclusive.
std::vector<double> bound_trajectory(double initial_sq_dist,
                                     const BoundParams& params, int rounds);

// K quadratic clients F_k(w) = 1/2 (w - c_k)^T A_k (w - c_k), with diagonal
// curvatures drawn in [alpha, beta]. alpha/beta are the realized extreme
// eigenvalues across clients.
struct QuadraticProblem {
  int dim = 0;
  int clients = 0;
  std::vector<std::vector<double>> curvatures;  // per client, diagonal of A_k
  std::vector<ParamVector> centers;             // c_k
  ParamVector w0;
  double alpha = 0.0;
  double beta = 0.0;

  ParamVector optimum() const;        // minimizer of (1/K) sum F_k
  double client_loss(int k, const ParamVector& w) const;
  ParamVector client_gradient(int k, const ParamVector& w) const;
  double global_loss(const ParamVector& w) const;  // (1/K) sum F_k
  // max_k F_k(W*) - F_k*; the measured heterogeneity constant.
  double het_constant() const;
  // F(W*) - (1/K) sum_k F_k*, the optimality gap between the cluster
  // objective and its members' local optima.
  double optimal_gap() const;
};

QuadraticProblem make_quadratic_problem(int dim, int clients, double alpha,
                                        double beta, double center_spread,
                                        std::uint64_t seed);

struct EmpiricalCheckReport {
  int local_steps = 0;
  int rounds = 0;
  int seeds = 0;
  double eta = 0.0;
  double rho_sq_measured = 0.0;
  double het_measured = 0.0;
  double slack = 1.0;
  std::vector<double> empirical_mean;  // E|W(r) - W*|^2 over seeds, r=0..R
  std::vector<double> bound;           // bound_trajectory, r=0..R
  std::vector<double> loss_gap_mean;   // E[F(W(r))] - F*, r=0..R
  int violations = 0;             // rounds with empirical > slack * bound
  int corollary_violations = 0;   // rounds with loss gap > slack*(beta/2)*bound
};

// Runs full-participation rounds of T local SGD steps per client with
// learning rate 1/(alpha*T) and optional Gaussian gradient noise, measures
// rho^2 (max squared stochastic gradient norm seen) and the heterogeneity
// constant, then evaluates the recursion bound against the measured mean
// squared distance to the optimum.
EmpiricalCheckReport empirical_check(const QuadraticProblem& problem,
                                     int local_steps, int rounds,
                                     int num_seeds, double noise_std,
                                     double slack, std::uint64_t seed);

}  // namespace cflsim
