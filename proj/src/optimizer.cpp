#include "walk/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <thread>

namespace walk {

void GABounds::validate() const {
  for (const Range& r : ranges()) {
    if (!(r.lo < r.hi)) {
      throw ConfigError("GABounds: every range needs lo < hi");
    }
  }
}

void GAConfig::validate() const {
  if (population < 2) {
    throw ConfigError("GAConfig: population must be >= 2");
  }
  if (generations < 0) {
    throw ConfigError("GAConfig: generations must be >= 0");
  }
  if (crossover_rate < 0.0 || crossover_rate > 1.0 || mutation_rate < 0.0 ||
      mutation_rate > 1.0) {
    throw ConfigError("GAConfig: rates must lie in [0, 1]");
  }
  if (mutation_sigma_scale < 0.0) {
    throw ConfigError("GAConfig: mutation_sigma_scale must be >= 0");
  }
  if (elitism < 1 || elitism > population) {
    throw ConfigError("GAConfig: elitism must lie in [1, population]");
  }
  if (tournament < 1 || tournament > population) {
    throw ConfigError("GAConfig: tournament must lie in [1, population]");
  }
  if (repeats < 1) {
    throw ConfigError("GAConfig: repeats must be >= 1");
  }
  if (!(eval_duration > 0.0)) {
    throw ConfigError("GAConfig: eval_duration must be positive");
  }
}

Genome to_genome(const GaitParams& g) {
  return {g.step_x, g.step_y, g.step_theta, g.z_swing,
          g.t_ss,   g.ti_to,  g.a_z,       g.a_to};
}

GaitParams from_genome(const Genome& g) {
  GaitParams p;
  p.step_x = g[0];
  p.step_y = g[1];
  p.step_theta = g[2];
  p.z_swing = g[3];
  p.t_ss = g[4];
  p.ti_to = g[5];
  p.a_z = g[6];
  p.a_to = g[7];
  return p;
}

Genome clamp_genome(Genome g, const GABounds& b) {
  const auto r = b.ranges();
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = std::clamp(g[i], r[i].lo, r[i].hi);
  }
  return g;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b));
}

bool has_step(const GaitParams& g) {
  return g.step_x != 0.0 || g.step_y != 0.0 || g.step_theta != 0.0;
}

}  // namespace

double evaluate(const GaitParams& individual, const SimSetup& setup,
                const GAConfig& cfg, std::uint64_t eval_seed_base) {
  SimSetup s = setup;
  s.engine.gait = individual;
  s.record_trace = false;

  Scenario scenario;
  scenario.duration = cfg.eval_duration;
  scenario.meas_sigma_pos = cfg.eval_sigma_pos;
  scenario.meas_sigma_vel = cfg.eval_sigma_vel;
  scenario.meas_sigma_theta = cfg.eval_sigma_theta;
  scenario.meas_sigma_thetad = cfg.eval_sigma_thetad;
  if (has_step(individual)) {
    StepCommand cmd{individual.step_x, individual.step_y, individual.step_theta,
                    individual.t_ss, 0.0};
    scenario.commands.push_back({0.0, cmd});
  }

  double sum = 0.0;
  for (int r = 0; r < cfg.repeats; ++r) {
    scenario.seed = mix_seed(eval_seed_base, static_cast<std::uint64_t>(r));
    try {
      const SimTrace trace = run_scenario(scenario, s);
      if (trace.status == RunStatus::Diverged) {
        sum += 100.0;  // divergence counts as a fall with zero progress
      } else {
        sum += evaluate_fitness(trace);
      }
    } catch (const NoConvergenceError&) {
      sum += 100.0;
    } catch (const SingularityError&) {
      sum += 100.0;
    }
  }
  return sum / static_cast<double>(cfg.repeats);
}

namespace {

void evaluate_population(const std::vector<Genome>& genomes,
                         const std::vector<int>& todo, const SimSetup& setup,
                         const GAConfig& cfg, int generation,
                         std::vector<double>& fitness) {
  auto seed_of = [&](int idx) {
    return mix_seed(mix_seed(cfg.seed, static_cast<std::uint64_t>(generation)),
                    static_cast<std::uint64_t>(idx));
  };
  int n_threads = cfg.threads > 0
                      ? cfg.threads
                      : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(todo.size())));
  if (n_threads == 1) {
    for (int idx : todo) {
      fitness[static_cast<std::size_t>(idx)] =
          evaluate(from_genome(genomes[static_cast<std::size_t>(idx)]), setup,
                   cfg, seed_of(idx));
    }
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_threads));
  std::atomic<std::size_t> cursor{0};
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const std::size_t i = cursor.fetch_add(1);
        if (i >= todo.size()) {
          return;
        }
        const int idx = todo[i];
        fitness[static_cast<std::size_t>(idx)] =
            evaluate(from_genome(genomes[static_cast<std::size_t>(idx)]), setup,
                     cfg, seed_of(idx));
      }
    });
  }
  for (auto& th : pool) {
    th.join();
  }
}

int count_distinct(const std::vector<Genome>& genomes) {
  std::set<Genome> s(genomes.begin(), genomes.end());
  return static_cast<int>(s.size());
}

}  // namespace

GAResult optimize(const GABounds& bounds, const GAConfig& cfg,
                  const SimSetup& setup, ProgressFn progress) {
  bounds.validate();
  cfg.validate();
  const auto ranges = bounds.ranges();
  const int n = cfg.population;

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<Genome> pop(static_cast<std::size_t>(n));
  for (Genome& g : pop) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      g[j] = ranges[j].lo + unit(rng) * (ranges[j].hi - ranges[j].lo);
    }
  }

  std::vector<double> fitness(static_cast<std::size_t>(n), 0.0);
  std::vector<int> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), 0);
  evaluate_population(pop, all, setup, cfg, 0, fitness);

  GAResult result;
  result.evaluations = n;

  auto record = [&](int gen) {
    GenerationStats st;
    st.generation = gen;
    const auto it = std::min_element(fitness.begin(), fitness.end());
    st.best = *it;
    st.mean = std::accumulate(fitness.begin(), fitness.end(), 0.0) /
              static_cast<double>(n);
    st.best_genome =
        from_genome(pop[static_cast<std::size_t>(it - fitness.begin())]);
    st.distinct_genotypes = count_distinct(pop);
    result.history.push_back(st);
    if (progress) {
      progress(st);
    }
  };
  record(0);

  auto tournament = [&]() {
    int best = static_cast<int>(unit(rng) * n) % n;
    for (int k = 1; k < cfg.tournament; ++k) {
      const int c = static_cast<int>(unit(rng) * n) % n;
      if (fitness[static_cast<std::size_t>(c)] <
          fitness[static_cast<std::size_t>(best)]) {
        best = c;
      }
    }
    return best;
  };

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return fitness[static_cast<std::size_t>(a)] <
             fitness[static_cast<std::size_t>(b)];
    });

    std::vector<Genome> next;
    std::vector<double> next_fitness;
    next.reserve(static_cast<std::size_t>(n));
    next_fitness.reserve(static_cast<std::size_t>(n));
    for (int e = 0; e < cfg.elitism; ++e) {
      const int idx = order[static_cast<std::size_t>(e)];
      next.push_back(pop[static_cast<std::size_t>(idx)]);
      next_fitness.push_back(fitness[static_cast<std::size_t>(idx)]);
    }

    std::vector<int> todo;
    while (static_cast<int>(next.size()) < n) {
      const Genome& p1 = pop[static_cast<std::size_t>(tournament())];
      const Genome& p2 = pop[static_cast<std::size_t>(tournament())];
      Genome child = p1;
      if (unit(rng) < cfg.crossover_rate) {
        for (std::size_t j = 0; j < child.size(); ++j) {
          const double w = -0.1 + 1.2 * unit(rng);
          child[j] = w * p1[j] + (1.0 - w) * p2[j];
        }
      }
      for (std::size_t j = 0; j < child.size(); ++j) {
        if (unit(rng) < cfg.mutation_rate) {
          child[j] += gauss(rng) * cfg.mutation_sigma_scale *
                      (ranges[j].hi - ranges[j].lo);
        }
      }
      child = clamp_genome(child, bounds);
      todo.push_back(static_cast<int>(next.size()));
      next.push_back(child);
      next_fitness.push_back(0.0);
    }

    pop = std::move(next);
    fitness = std::move(next_fitness);
    evaluate_population(pop, todo, setup, cfg, gen, fitness);
    result.evaluations += static_cast<long>(todo.size());
    record(gen);
  }

  const auto it = std::min_element(fitness.begin(), fitness.end());
  result.best_fitness = *it;
  result.best =
      from_genome(pop[static_cast<std::size_t>(it - fitness.begin())]);
  return result;
}

}  // namespace walk
