#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vulnboost/common.hpp"
#include "vulnboost/gbdt.hpp"

namespace vulnboost {

// ---------------------------------------------------------------------------
// Search space
// ---------------------------------------------------------------------------

struct SpaceDim {
  std::string name;
  double lo = 0.0;
  double hi = 1.0;
  bool integer = false;
};

struct SearchSpace {
  std::vector<SpaceDim> dims;

  void validate() const {
    std::vector<std::string> seen;
    for (const auto& d : dims) {
      if (!(d.lo < d.hi))
        throw ConfigError("search dimension '" + d.name +
                          "' needs lo < hi");
      for (const auto& s : seen)
        if (s == d.name)
          throw ConfigError("duplicate search dimension '" + d.name + "'");
      seen.push_back(d.name);
    }
    if (dims.empty()) throw ConfigError("empty search space");
  }

  std::size_t size() const { return dims.size(); }

  void clamp(std::vector<double>& x) const {
    for (std::size_t d = 0; d < dims.size(); ++d) {
      if (x[d] < dims[d].lo) x[d] = dims[d].lo;
      if (x[d] > dims[d].hi) x[d] = dims[d].hi;
    }
  }

  bool contains(const std::vector<double>& x) const {
    for (std::size_t d = 0; d < dims.size(); ++d)
      if (x[d] < dims[d].lo || x[d] > dims[d].hi) return false;
    return true;
  }

  /// The six tunable model parameters and their boxes. The open num_leaves
  /// interval (1,1024) is realized as the integer range [2,1023].
  static SearchSpace gbdt_default() {
    return SearchSpace{{
        {"learning_rate", 0.01, 0.2, false},
        {"n_estimators", 1000, 3000, true},
        {"max_depth", 5, 12, true},
        {"num_leaves", 2, 1023, true},
        {"feature_fraction", 0.5, 1.0, false},
        {"bagging_fraction", 0.5, 1.0, false},
    }};
  }

  /// Same box with the tree-count range shrunk for desk-scale runs.
  static SearchSpace gbdt_desk() {
    SearchSpace s = gbdt_default();
    for (auto& d : s.dims)
      if (d.name == "n_estimators") {
        d.lo = 50;
        d.hi = 300;
      }
    return s;
  }
};

// ---------------------------------------------------------------------------
// Swarm state
// ---------------------------------------------------------------------------

struct Particle {
  std::vector<double> position;
  std::vector<double> personal_best;
  double personal_best_fitness = std::numeric_limits<double>::infinity();
};

struct QpsoConfig {
  int n_particles = 30;
  int n_iterations = 50;
  double beta_start = 1.0;  // contraction-expansion schedule, interpolated
  double beta_end = 0.5;    // linearly over the iterations
  std::uint64_t seed = 0;

  void validate() const {
    if (n_particles < 2) throw ConfigError("need at least 2 particles");
    if (n_iterations < 1) throw ConfigError("need at least 1 iteration");
    if (!(beta_end > 0.0) || !(beta_start >= beta_end))
      throw ConfigError("beta schedule must satisfy beta_start >= beta_end > 0");
  }
};

// ---------------------------------------------------------------------------
// Update steps
// ---------------------------------------------------------------------------

/// Componentwise mean of the personal bests.
inline std::vector<double> mean_best(const std::vector<Particle>& particles) {
  if (particles.empty()) throw InternalError("mean_best of empty swarm");
  std::vector<double> m(particles[0].personal_best.size(), 0.0);
  for (const auto& p : particles)
    for (std::size_t d = 0; d < m.size(); ++d) m[d] += p.personal_best[d];
  for (double& v : m) v /= static_cast<double>(particles.size());
  return m;
}

using UniformSource = std::function<double()>;

/// Local attractor between a particle's personal best and the global best:
/// per dimension, phi*P_i + (1-phi)*P_g with phi uniform in [0,1).
inline std::vector<double> attractor(const std::vector<double>& personal_best,
                                     const std::vector<double>& global_best,
                                     const UniformSource& uniform) {
  if (personal_best.size() != global_best.size())
    throw InternalError("attractor dimensionality mismatch");
  std::vector<double> p(personal_best.size());
  for (std::size_t d = 0; d < p.size(); ++d) {
    double phi = uniform();
    p[d] = phi * personal_best[d] + (1.0 - phi) * global_best[d];
  }
  return p;
}

/// One position move: X(t+1) = P +/- beta*|mbest - X(t)|*ln(1/mu), the sign
/// fair per dimension and mu uniform in (0,1], then a hard clamp into the
/// box.
inline std::vector<double> update_position(const std::vector<double>& position,
                                           const std::vector<double>& attract,
                                           const std::vector<double>& mbest,
                                           double beta, const SearchSpace& space,
                                           const UniformSource& uniform) {
  std::vector<double> x(position.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    double mu = 1.0 - uniform();  // (0,1]
    double sign = uniform() < 0.5 ? -1.0 : 1.0;
    x[d] = attract[d] +
           sign * beta * std::fabs(mbest[d] - position[d]) * std::log(1.0 / mu);
  }
  space.clamp(x);
  return x;
}

/// Strict-improvement personal-best update; equal fitness keeps the old
/// best.
inline void update_personal_best(Particle& particle, double fitness) {
  if (std::isnan(fitness))
    throw InternalError("fitness evaluated to NaN");
  if (fitness < particle.personal_best_fitness) {
    particle.personal_best = particle.position;
    particle.personal_best_fitness = fitness;
  }
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct OptimizeResult {
  std::vector<double> best;
  double best_fitness = std::numeric_limits<double>::infinity();
  std::vector<double> history;  // global best after init and each iteration
  std::vector<std::vector<double>> history_positions;
};

using FitnessFn = std::function<double(const std::vector<double>&)>;

namespace detail {

inline double evaluate_with_retries(const FitnessFn& fitness,
                                    const std::vector<double>& x) {
  for (int attempt = 0;; ++attempt) {
    try {
      double f = fitness(x);
      if (std::isnan(f)) throw InternalError("fitness evaluated to NaN");
      return f;
    } catch (...) {
      if (attempt >= 3) throw;
    }
  }
}

}  // namespace detail

/// Swarm minimization of a black-box fitness over the box. Particles start
/// uniformly in the box; beta interpolates linearly from beta_start to
/// beta_end; evaluations within an iteration may run in parallel, and every
/// random draw comes from a stream keyed by (seed, particle, iteration,
/// use), so the result is schedule independent. The fitness may return +inf
/// to reject a point; thrown errors propagate after 3 retries.
inline OptimizeResult optimize(const FitnessFn& fitness,
                               const SearchSpace& space,
                               const QpsoConfig& cfg) {
  space.validate();
  cfg.validate();
  const std::size_t n_dims = space.size();
  const auto n_particles = static_cast<std::size_t>(cfg.n_particles);

  std::vector<Particle> particles(n_particles);
  std::vector<double> fitness_now(n_particles);
  for (std::size_t p = 0; p < n_particles; ++p) {
    RngStream rng(cfg.seed, 0x696e6974ULL, p);
    particles[p].position.resize(n_dims);
    for (std::size_t d = 0; d < n_dims; ++d)
      particles[p].position[d] =
          rng.uniform(space.dims[d].lo, space.dims[d].hi);
  }
  parallel_for(n_particles, [&](std::size_t p) {
    fitness_now[p] = detail::evaluate_with_retries(fitness,
                                                   particles[p].position);
  });
  for (auto& p : particles) p.personal_best = p.position;
  for (std::size_t p = 0; p < n_particles; ++p)
    particles[p].personal_best_fitness = fitness_now[p];

  auto global_best_of = [&]() {
    std::size_t g = 0;
    for (std::size_t p = 1; p < n_particles; ++p)
      if (particles[p].personal_best_fitness <
          particles[g].personal_best_fitness)
        g = p;
    return g;
  };

  OptimizeResult result;
  std::size_t g = global_best_of();
  result.best = particles[g].personal_best;
  result.best_fitness = particles[g].personal_best_fitness;
  result.history.push_back(result.best_fitness);
  result.history_positions.push_back(result.best);

  for (int t = 1; t <= cfg.n_iterations; ++t) {
    double beta =
        cfg.n_iterations == 1
            ? cfg.beta_start
            : cfg.beta_start + (cfg.beta_end - cfg.beta_start) *
                                   static_cast<double>(t - 1) /
                                   static_cast<double>(cfg.n_iterations - 1);
    std::vector<double> mbest = mean_best(particles);
    const std::vector<double> global_best = result.best;

    for (std::size_t p = 0; p < n_particles; ++p) {
      RngStream rng(cfg.seed, 0x73746570ULL, p,
                    static_cast<std::uint64_t>(t));
      UniformSource uniform = [&rng]() { return rng.next_unit(); };
      auto attract =
          attractor(particles[p].personal_best, global_best, uniform);
      particles[p].position = update_position(
          particles[p].position, attract, mbest, beta, space, uniform);
    }
    parallel_for(n_particles, [&](std::size_t p) {
      fitness_now[p] = detail::evaluate_with_retries(fitness,
                                                     particles[p].position);
    });
    for (std::size_t p = 0; p < n_particles; ++p)
      update_personal_best(particles[p], fitness_now[p]);

    g = global_best_of();
    if (particles[g].personal_best_fitness < result.best_fitness) {
      result.best = particles[g].personal_best;
      result.best_fitness = particles[g].personal_best_fitness;
    }
    result.history.push_back(result.best_fitness);
    result.history_positions.push_back(result.best);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Decoding positions into model parameters
// ---------------------------------------------------------------------------

/// Maps a position to GbdtParams on top of `base`: integer dimensions round
/// half away from zero, then everything clamps back into the box. Fields not
/// named by the space keep their base values.
inline GbdtParams decode_params(const std::vector<double>& position,
                                const SearchSpace& space,
                                const GbdtParams& base = GbdtParams{}) {
  if (position.size() != space.size())
    throw ConfigError("position arity does not match search space");
  GbdtParams out = base;
  for (std::size_t d = 0; d < space.size(); ++d) {
    const SpaceDim& dim = space.dims[d];
    double v = position[d];
    if (dim.integer) v = static_cast<double>(std::llround(v));
    if (v < dim.lo) v = dim.lo;
    if (v > dim.hi) v = dim.hi;
    if (dim.name == "learning_rate")
      out.learning_rate = v;
    else if (dim.name == "n_estimators")
      out.n_estimators = static_cast<int>(v);
    else if (dim.name == "max_depth")
      out.max_depth = static_cast<int>(v);
    else if (dim.name == "num_leaves")
      out.num_leaves = static_cast<int>(v);
    else if (dim.name == "feature_fraction")
      out.feature_fraction = v;
    else if (dim.name == "bagging_fraction")
      out.bagging_fraction = v;
    else if (dim.name == "lambda_l2")
      out.lambda_l2 = v;
    else if (dim.name == "min_data_in_leaf")
      out.min_data_in_leaf = static_cast<int>(v);
    else
      throw ConfigError("search dimension '" + dim.name +
                        "' does not map to a model parameter");
  }
  return out;
}

/// Tuning trace rows: iteration, global best fitness, best position.
inline void write_tuning_trace(std::ostream& out, const OptimizeResult& result,
                               const SearchSpace& space) {
  out << "iteration,best_fitness";
  for (const auto& d : space.dims) out << ',' << d.name;
  out << '\n';
  for (std::size_t t = 0; t < result.history.size(); ++t) {
    out << t << ',' << format_real(result.history[t]);
    const auto& pos = result.history_positions[t];
    for (std::size_t d = 0; d < pos.size(); ++d)
      out << ',' << format_real(pos[d]);
    out << '\n';
  }
}

}  // namespace vulnboost
