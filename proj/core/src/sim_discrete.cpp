#include "mutforest/sim_discrete.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

#include "mutforest/parallel.hpp"

namespace mutforest {

ProgenySampler::ProgenySampler(const ProgenyLaw& law) : dim_(law.dim()), laws_(law.laws()) {
  for (const auto& p : laws_) {
    std::vector<double> cum;
    double acc = 0.0;
    for (double q : p.probs()) cum.push_back(acc += q);
    for (double& c : cum) c /= acc;
    cumulative_.push_back(std::move(cum));
  }
}

std::size_t ProgenySampler::draw_index(int type, Rng& rng) const {
  const auto& cum = cumulative_[static_cast<std::size_t>(type)];
  const double u = uniform01(rng);
  const auto it = std::upper_bound(cum.begin(), cum.end() - 1, u);
  return static_cast<std::size_t>(it - cum.begin());
}

void SampleConfig::validate() const {
  if (static_cast<int>(roots.size()) != law.dim()) throw std::invalid_argument("root vector length differs from the law dimension");
  std::int64_t total = 0;
  for (auto r : roots) {
    if (r < 0) throw std::invalid_argument("root counts must be nonnegative");
    total += r;
  }
  if (vertex_budget < total) throw std::invalid_argument("vertex budget is smaller than the number of roots");
}

ForestSample sample_forest(const SampleConfig& cfg, Rng& rng) {
  return sample_forest(cfg, ProgenySampler(cfg.law), rng);
}

ForestSample sample_forest(const SampleConfig& cfg, const ProgenySampler& sampler, Rng& rng) {
  cfg.validate();
  const int d = cfg.law.dim();
  ForestBuilder b(d);
  ForestSample out;
  std::vector<std::pair<VertexId, int>> root_list;
  for (int i = 0; i < d; ++i) {
    for (std::int64_t r = 0; r < cfg.roots[static_cast<std::size_t>(i)]; ++r) root_list.emplace_back(b.add_root(i), i);
  }
  // Trees are grown one after another, each level by level.
  std::deque<std::pair<VertexId, int>> queue;
  for (const auto& root : root_list) {
    queue.push_back(root);
    while (!queue.empty() && !out.censored) {
      const auto [v, t] = queue.front();
      queue.pop_front();
      const auto k = sampler.draw(t, rng);
      for (int j = 0; j < d && !out.censored; ++j) {
        for (int c = 0; c < k[static_cast<std::size_t>(j)]; ++c) {
          if (static_cast<std::int64_t>(b.size()) >= cfg.vertex_budget) {
            out.censored = true;
            break;
          }
          queue.emplace_back(b.add_child(v, j), j);
        }
      }
    }
    if (out.censored) break;
  }
  out.forest = std::move(b).finish();
  return out;
}

WalkCensus sample_census_walk(const SampleConfig& cfg, Rng& rng) {
  return sample_census_walk(cfg, ProgenySampler(cfg.law), rng);
}

WalkCensus sample_census_walk(const SampleConfig& cfg, const ProgenySampler& sampler, Rng& rng) {
  cfg.validate();
  const int d = cfg.law.dim();
  const auto ud = static_cast<std::size_t>(d);
  std::vector<std::int64_t> steps(ud, 0);      // N_j
  std::vector<std::int64_t> value(ud * ud, 0);  // X^{i,j}(N_i)
  WalkCensus out;
  std::int64_t total = 0;
  bool changed = true;
  while (changed && !out.censored) {
    changed = false;
    ++out.relaxation_rounds;
    for (int j = 0; j < d && !out.censored; ++j) {
      const auto uj = static_cast<std::size_t>(j);
      std::int64_t target = -cfg.roots[uj];
      for (std::size_t i = 0; i < ud; ++i) {
        if (i != uj) target -= value[i * ud + uj];
      }
      // X^{jj} is skip-free downward, so it reaches the target exactly.
      while (value[uj * ud + uj] > target) {
        if (total >= cfg.vertex_budget) {
          out.censored = true;
          break;
        }
        const auto k = sampler.draw(j, rng);
        for (std::size_t c = 0; c < ud; ++c) value[uj * ud + c] += k[c] - (c == uj ? 1 : 0);
        ++steps[uj];
        ++total;
        changed = true;
      }
    }
  }
  auto c = MutationCensus::zeros(d);
  for (std::size_t i = 0; i < ud; ++i) {
    c.total(static_cast<Eigen::Index>(i)) = steps[i];
    c.roots(static_cast<Eigen::Index>(i)) = cfg.roots[i];
    for (std::size_t j = 0; j < ud; ++j) {
      if (i == j) continue;
      c.cross(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value[i * ud + j];
      c.mutations(static_cast<Eigen::Index>(j)) += value[i * ud + j];
    }
  }
  for (std::size_t j = 0; j < ud; ++j) {
    const auto e = static_cast<Eigen::Index>(j);
    c.self_births(e) = c.total(e) - c.roots(e) - c.mutations(e);
  }
  out.census = std::move(c);
  out.walk_values = std::move(value);
  return out;
}

MutationChildCounts empirical_mutation_children(const SampleConfig& cfg, int type, std::int64_t replicates,
                                                std::uint64_t seed, int workers) {
  cfg.validate();
  const ProgenySampler sampler(cfg.law);
  using Local = std::pair<std::map<LatticeVector, std::int64_t>, bool>;
  auto per = map_replicates<Local>(replicates, workers, [&](std::int64_t r) {
    auto rng = make_rng(seed, static_cast<std::uint64_t>(r), Stream::forest);
    auto s = sample_forest(cfg, sampler, rng);
    Local local;
    local.second = s.censored;
    if (s.censored) return local;
    const auto mf = mutation_forest(s.forest);
    for (std::size_t v = 0; v < mf.size(); ++v) {
      if (mf.type(static_cast<VertexId>(v)) == type) ++local.first[mf.child_counts(static_cast<VertexId>(v))];
    }
    return local;
  });
  MutationChildCounts out;
  for (const auto& [counts, censored] : per) {
    if (censored) {
      ++out.censored_forests;
      continue;
    }
    for (const auto& [k, c] : counts) {
      out.counts[k] += c;
      out.vertices += c;
    }
  }
  return out;
}

double total_variation(const SparsePmf& pmf, const std::map<LatticeVector, std::int64_t>& counts) {
  std::int64_t n = 0;
  for (const auto& [k, c] : counts) n += c;
  if (n == 0) throw std::invalid_argument("total_variation: no observations");
  double sum = 0.0;
  double covered = 0.0;
  for (const auto& [k, c] : counts) {
    const double p = pmf(k);
    covered += p;
    sum += std::abs(static_cast<double>(c) / static_cast<double>(n) - p);
  }
  // Support points never observed.
  sum += std::max(0.0, pmf.mass() - covered);
  return 0.5 * sum;
}

Eigen::MatrixXd fundamental_matrix(const Eigen::MatrixXd& m) {
  const auto d = m.rows();
  return (Eigen::MatrixXd::Identity(d, d) - m).inverse();
}

DirectionExperiment direction_asymptotics(const ProgenyLaw& law, const std::vector<std::int64_t>& w,
                                          const std::vector<std::int64_t>& scales, const DirectionOptions& opts) {
  const int d = law.dim();
  if (static_cast<int>(w.size()) != d) throw std::invalid_argument("direction has wrong length");
  if (std::all_of(w.begin(), w.end(), [](auto x) { return x == 0; })) throw std::invalid_argument("direction must be nonzero");
  if (std::any_of(w.begin(), w.end(), [](auto x) { return x < 0; })) throw std::invalid_argument("direction must be nonnegative");
  const auto report = mean_report(law);
  if (!report.primitive) throw std::domain_error("direction_asymptotics: the mean matrix is not primitive");
  if (report.criticality == Criticality::supercritical) throw std::domain_error("direction_asymptotics: supercritical law rejected");

  DirectionExperiment out;
  out.direction = w;
  out.scales = scales;
  out.criticality = report.criticality;
  const auto& m = report.mean_matrix;
  for (int i = 0; i < d; ++i) out.ratio_target.push_back(1.0 - m(i, i));
  if (report.criticality == Criticality::subcritical) {
    const Eigen::MatrixXd f = fundamental_matrix(m);
    for (int i = 0; i < d; ++i) {
      double ci = 0.0;
      for (int k = 0; k < d; ++k) ci += static_cast<double>(w[static_cast<std::size_t>(k)]) * f(k, i);
      out.c.push_back(ci);
      const double wi = static_cast<double>(w[static_cast<std::size_t>(i)]);
      out.mutation_target_stated.push_back(wi + (1.0 - m(i, i)) * ci);
      out.mutation_target_pathwise.push_back(-wi + (1.0 - m(i, i)) * ci);
    }
  }

  const ProgenySampler sampler(law);
  for (std::size_t s = 0; s < scales.size(); ++s) {
    const std::int64_t n = scales[s];
    if (n < 1) throw std::invalid_argument("scales must be >= 1");
    SampleConfig cfg{law, {}, opts.vertex_budget};
    for (auto wk : w) cfg.roots.push_back(wk * n);
    struct Rep {
      MutationCensus census;
      bool censored = false;
    };
    auto reps = map_replicates<Rep>(opts.replicates, opts.workers, [&](std::int64_t r) {
      const auto key = (static_cast<std::uint64_t>(s) << 40) | static_cast<std::uint64_t>(r);
      if (opts.engine == CensusEngine::walk) {
        auto rng = make_rng(opts.seed, key, Stream::walk);
        auto wc = sample_census_walk(cfg, sampler, rng);
        return Rep{std::move(wc.census), wc.censored};
      }
      auto rng = make_rng(opts.seed, key, Stream::forest);
      auto fs = sample_forest(cfg, sampler, rng);
      return Rep{fs.censored ? MutationCensus::zeros(d) : census(fs.forest), fs.censored};
    });
    std::int64_t censored = 0;
    std::vector<DirectionRow> rows(static_cast<std::size_t>(d));
    for (const auto& rep : reps) {
      if (rep.censored) {
        ++censored;
        continue;
      }
      for (int i = 0; i < d; ++i) {
        auto& row = rows[static_cast<std::size_t>(i)];
        const double ni = static_cast<double>(rep.census.total(i));
        const double mi = static_cast<double>(rep.census.mutations(i));
        row.total_per_n.add(ni / static_cast<double>(n));
        row.mutations_per_n.add(mi / static_cast<double>(n));
        if (ni > 0) row.mutation_ratio.add(mi / ni);
      }
    }
    for (int i = 0; i < d; ++i) {
      auto& row = rows[static_cast<std::size_t>(i)];
      row.scale = n;
      row.type = i;
      row.replicates = opts.replicates;
      row.censored = censored;
      out.rows.push_back(row);
    }
    if (static_cast<double>(censored) > 1e-3 * static_cast<double>(opts.replicates)) out.censoring_exceeded = true;
  }
  return out;
}

}  // namespace mutforest
