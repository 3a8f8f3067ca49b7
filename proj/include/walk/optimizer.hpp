#pragma once

#include <array>
#include <cstdint>

#include "walk/sim.hpp"

namespace walk {

/// Per-parameter search ranges for the 8 gait parameters.
struct GABounds {
  struct Range {
    double lo = 0.0;
    double hi = 1.0;
  };
  Range step_x{0.0, 0.12};
  Range step_y{-0.05, 0.05};
  Range step_theta{-0.3, 0.3};
  Range z_swing{0.01, 0.06};
  Range t_ss{0.2, 0.8};
  Range ti_to{-0.2, 0.2};
  Range a_z{0.0, 0.04};
  Range a_to{0.0, 0.15};

  std::array<Range, 8> ranges() const {
    return {step_x, step_y, step_theta, z_swing, t_ss, ti_to, a_z, a_to};
  }
  void validate() const;
};

using Genome = std::array<double, 8>;

Genome to_genome(const GaitParams& g);
GaitParams from_genome(const Genome& g);
Genome clamp_genome(Genome g, const GABounds& b);

struct GAConfig {
  int population = 20;
  int generations = 30;
  double crossover_rate = 0.9;
  double mutation_rate = 0.15;        ///< per-gene probability
  double mutation_sigma_scale = 0.1;  ///< sigma as a fraction of each range
  int elitism = 2;
  int tournament = 3;
  int repeats = 3;
  std::uint64_t seed = 1;
  int threads = 0;  ///< 0 = hardware concurrency

  double eval_duration = 10.0;
  double eval_sigma_pos = 0.002;
  double eval_sigma_vel = 0.002;
  double eval_sigma_theta = 0.005;
  double eval_sigma_thetad = 0.005;

  void validate() const;
};

struct GenerationStats {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
  GaitParams best_genome;
  int distinct_genotypes = 0;
};

struct GAResult {
  GaitParams best;
  double best_fitness = 0.0;
  std::vector<GenerationStats> history;  ///< generations + 1 rows
  long evaluations = 0;
};

/// Mean fitness of `repeats` runs of the fixed forward-walking scenario with
/// seeds derived from eval_seed_base. A diverged run contributes +100 with
/// zero progress. Individuals whose step command is all zero stand in place.
double evaluate(const GaitParams& individual, const SimSetup& setup,
                const GAConfig& cfg, std::uint64_t eval_seed_base);

using ProgressFn = void (*)(const GenerationStats&);

/// Generational real-coded GA over the gait parameters: tournament selection,
/// blend crossover, Gaussian mutation, elitism. Deterministic given the master
/// seed; population evaluation may run on several threads with per-individual
/// derived seeds, so results are independent of execution order.
GAResult optimize(const GABounds& bounds, const GAConfig& cfg,
                  const SimSetup& setup, ProgressFn progress = nullptr);

}  // namespace walk
