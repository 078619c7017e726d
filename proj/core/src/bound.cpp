#include "cflsim/bound.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cflsim/rng.hpp"

namespace cflsim {

double zeta1(double alpha, double eta, int local_steps) {
  if (local_steps < 1) throw std::invalid_argument("local_steps must be >= 1");
  const double t = static_cast<double>(local_steps);
  return 1.0 - alpha * eta * (t - eta * (t - 1.0));
}

double zeta2(double alpha, double eta, int local_steps, double rho_sq,
             double het) {
  if (local_steps < 1) throw std::invalid_argument("local_steps must be >= 1");
  const double t = static_cast<double>(local_steps);
  const double z1 = zeta1(alpha, eta, local_steps);
  const double drift = (1.0 + alpha * (1.0 - eta * z1)) * eta * eta * rho_sq *
                       t * (t - 1.0) * (2.0 * t - 1.0) / 6.0;
  const double variance = eta * eta * (t * t + t - 1.0) * rho_sq;
  const double hetero = 2.0 * eta * z1 * (t - 1.0) * het;
  return drift + variance + hetero;
}

double zeta2_plain(double alpha, double eta, int local_steps, double rho_sq,
                   double het) {
  if (local_steps < 1) throw std::invalid_argument("local_steps must be >= 1");
  const double t = static_cast<double>(local_steps);
  const double drift = (1.0 + alpha * (1.0 - eta)) * eta * eta * rho_sq * t *
                       (t - 1.0) * (2.0 * t - 1.0) / 6.0;
  const double variance = eta * eta * (t * t + t - 1.0) * rho_sq;
  const double hetero = 2.0 * eta * (t - 1.0) * het;
  return drift + variance + hetero;
}

std::vector<double> bound_trajectory(double initial_sq_dist,
                                     const BoundParams& params, int rounds) {
  if (rounds < 0) throw std::invalid_argument("rounds must be >= 0");
  if (static_cast<int>(params.eta.size()) < rounds) {
    throw std::invalid_argument("eta schedule shorter than requested rounds");
  }
  std::vector<double> b;
  b.reserve(static_cast<std::size_t>(rounds) + 1);
  b.push_back(initial_sq_dist);
  for (int r = 0; r < rounds; ++r) {
    const double eta = params.eta[static_cast<std::size_t>(r)];
    b.push_back(zeta1(params.alpha, eta, params.local_steps) * b.back() +
                zeta2(params.alpha, eta, params.local_steps, params.rho_sq,
                      params.het));
  }
  return b;
}

ParamVector QuadraticProblem::optimum() const {
  // Diagonal case: per coordinate, w* = (sum_k a_k c_k) / (sum_k a_k).
  ParamVector num(static_cast<std::size_t>(dim), 0.0);
  ParamVector den(static_cast<std::size_t>(dim), 0.0);
  for (int k = 0; k < clients; ++k) {
    for (int i = 0; i < dim; ++i) {
      const double a =
          curvatures[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      num[static_cast<std::size_t>(i)] +=
          a * centers[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
      den[static_cast<std::size_t>(i)] += a;
    }
  }
  ParamVector w(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    w[static_cast<std::size_t>(i)] =
        num[static_cast<std::size_t>(i)] / den[static_cast<std::size_t>(i)];
  }
  return w;
}

double QuadraticProblem::client_loss(int k, const ParamVector& w) const {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double d =
        w[static_cast<std::size_t>(i)] -
        centers[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
    acc += 0.5 *
           curvatures[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
           d * d;
  }
  return acc;
}

ParamVector QuadraticProblem::client_gradient(int k,
                                              const ParamVector& w) const {
  ParamVector g(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    g[static_cast<std::size_t>(i)] =
        curvatures[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] *
        (w[static_cast<std::size_t>(i)] -
         centers[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)]);
  }
  return g;
}

double QuadraticProblem::global_loss(const ParamVector& w) const {
  double acc = 0.0;
  for (int k = 0; k < clients; ++k) acc += client_loss(k, w);
  return acc / clients;
}

double QuadraticProblem::het_constant() const {
  const ParamVector w_star = optimum();
  double worst = 0.0;
  for (int k = 0; k < clients; ++k) {
    worst = std::max(worst, client_loss(k, w_star));  // F_k* is zero
  }
  return worst;
}

double QuadraticProblem::optimal_gap() const {
  return global_loss(optimum());  // every F_k* is zero
}

QuadraticProblem make_quadratic_problem(int dim, int clients, double alpha,
                                        double beta, double center_spread,
                                        std::uint64_t seed) {
  if (dim < 1 || clients < 1) {
    throw std::invalid_argument("dim and clients must be >= 1");
  }
  if (alpha <= 0.0 || beta < alpha) {
    throw std::invalid_argument("need 0 < alpha <= beta");
  }
  if (center_spread < 0.0) {
    throw std::invalid_argument("center_spread must be >= 0");
  }
  QuadraticProblem p;
  p.dim = dim;
  p.clients = clients;
  RngStream rng(derive_seed(seed, "quadratic"));
  p.curvatures.resize(static_cast<std::size_t>(clients));
  p.centers.resize(static_cast<std::size_t>(clients));
  for (int k = 0; k < clients; ++k) {
    auto& a = p.curvatures[static_cast<std::size_t>(k)];
    auto& c = p.centers[static_cast<std::size_t>(k)];
    a.resize(static_cast<std::size_t>(dim));
    c.resize(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) {
      a[static_cast<std::size_t>(i)] = rng.uniform(alpha, beta);
      c[static_cast<std::size_t>(i)] = center_spread * rng.normal();
    }
  }
  // Pin the extreme eigenvalues so the declared constants are exact.
  p.curvatures[0][0] = alpha;
  if (clients > 1 || dim > 1) {
    p.curvatures[static_cast<std::size_t>(clients - 1)]
                [static_cast<std::size_t>(dim - 1)] = beta;
  }
  p.alpha = alpha;
  p.beta = beta;
  p.w0.assign(static_cast<std::size_t>(dim), 0.0);
  for (int i = 0; i < dim; ++i) {
    p.w0[static_cast<std::size_t>(i)] = 1.0 + rng.uniform01();
  }
  return p;
}

EmpiricalCheckReport empirical_check(const QuadraticProblem& problem,
                                     int local_steps, int rounds,
                                     int num_seeds, double noise_std,
                                     double slack, std::uint64_t seed) {
  if (local_steps < 1 || rounds < 0 || num_seeds < 1) {
    throw std::invalid_argument("invalid harness sizes");
  }
  EmpiricalCheckReport rep;
  rep.local_steps = local_steps;
  rep.rounds = rounds;
  rep.seeds = num_seeds;
  rep.slack = slack;
  rep.eta = 1.0 / (problem.alpha * local_steps);
  rep.het_measured = problem.het_constant();

  const ParamVector w_star = problem.optimum();
  const double f_star = problem.global_loss(w_star);
  rep.empirical_mean.assign(static_cast<std::size_t>(rounds) + 1, 0.0);
  rep.loss_gap_mean.assign(static_cast<std::size_t>(rounds) + 1, 0.0);

  double rho_sq = 0.0;
  for (int s = 0; s < num_seeds; ++s) {
    RngStream rng(derive_seed(seed, "bound.seed", static_cast<std::uint64_t>(s)));
    ParamVector w = problem.w0;
    for (int r = 0; r <= rounds; ++r) {
      const ParamVector diff = subtract(w, w_star);
      rep.empirical_mean[static_cast<std::size_t>(r)] +=
          dot(diff, diff) / num_seeds;
      rep.loss_gap_mean[static_cast<std::size_t>(r)] +=
          (problem.global_loss(w) - f_star) / num_seeds;
      if (r == rounds) break;

      ParamVector accumulated(w.size(), 0.0);
      for (int k = 0; k < problem.clients; ++k) {
        ParamVector wk = w;
        for (int t = 0; t < local_steps; ++t) {
          ParamVector g = problem.client_gradient(k, wk);
          if (noise_std > 0.0) {
            for (double& x : g) x += noise_std * rng.normal();
          }
          rho_sq = std::max(rho_sq, dot(g, g));
          add_scaled(wk, g, -rep.eta);
        }
        add_scaled(accumulated, subtract(wk, w), 1.0 / problem.clients);
      }
      add_scaled(w, accumulated, 1.0);
    }
  }
  rep.rho_sq_measured = rho_sq;

  BoundParams params;
  params.alpha = problem.alpha;
  params.rho_sq = rho_sq;
  params.het = rep.het_measured;
  params.local_steps = local_steps;
  params.eta.assign(static_cast<std::size_t>(rounds), rep.eta);
  const ParamVector init_diff = subtract(problem.w0, w_star);
  rep.bound = bound_trajectory(dot(init_diff, init_diff), params, rounds);

  for (int r = 0; r <= rounds; ++r) {
    if (rep.empirical_mean[static_cast<std::size_t>(r)] >
        slack * rep.bound[static_cast<std::size_t>(r)]) {
      ++rep.violations;
    }
    if (rep.loss_gap_mean[static_cast<std::size_t>(r)] >
        slack * 0.5 * problem.beta * rep.bound[static_cast<std::size_t>(r)]) {
      ++rep.corollary_violations;
    }
  }
  return rep;
}

}  // namespace cflsim
