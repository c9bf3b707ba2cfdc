#include "runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include <boost/version.hpp>
#include <Eigen/Core>

#include "mutforest/emergence.hpp"
#include "mutforest/model_io.hpp"
#include "mutforest/mutation_law.hpp"
#include "mutforest/parallel.hpp"
#include "mutforest/sim_continuous.hpp"
#include "mutforest/sim_discrete.hpp"
#include "mutforest/version.hpp"

namespace mutforest::cli {
namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ModelError("model: cannot open " + p.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Small CSV builder; every double goes through format_double.
class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }
  Csv& operator<<(double v) { return cell(format_double(v)); }
  Csv& operator<<(std::int64_t v) { return cell(std::to_string(v)); }
  Csv& operator<<(int v) { return cell(std::to_string(v)); }
  Csv& operator<<(const std::string& v) { return cell(v); }
  Csv& operator<<(const char* v) { return cell(v); }
  void end_row() {
    os_ << '\n';
    first_ = true;
  }
  std::string str() const { return os_.str(); }

 private:
  Csv& cell(const std::string& s) {
    os_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }
  std::ostringstream os_;
  bool first_ = true;
};

std::vector<std::string> indexed(const std::string& prefix, int d) {
  std::vector<std::string> out;
  for (int i = 1; i <= d; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

json moments_json(const Moments& m) { return {{"mean", m.mean()}, {"se", m.se()}, {"n", m.count()}}; }

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::int64_t reps_or(const RunOptions& o, std::int64_t fallback) {
  const auto r = o.reps.value_or(fallback);
  if (r <= 0) throw ConfigError("config: --reps must be positive");
  return r;
}

ModelDocument load_law(const RunOptions& o) {
  try {
    return load_model(o.model);
  } catch (const std::exception& e) {
    throw ModelError(e.what());
  }
}

ChainModel load_chain_model(const RunOptions& o) {
  try {
    return load_chain(o.model);
  } catch (const std::exception& e) {
    throw ModelError(e.what());
  }
}

std::vector<std::int64_t> roots_or_first(const RunOptions& o, int d) {
  if (o.roots.empty()) {
    std::vector<std::int64_t> x(static_cast<std::size_t>(d), 0);
    x[0] = 1;
    return x;
  }
  if (static_cast<int>(o.roots.size()) != d) throw ConfigError("config: --roots needs " + std::to_string(d) + " entries");
  for (auto v : o.roots)
    if (v < 0) throw ConfigError("config: --roots entries must be nonnegative");
  return o.roots;
}

// 0-based target from a 1-based option, defaulting to the last type.
int chain_target(const RunOptions& o, int d) {
  const int t = o.target.value_or(d);
  if (t < 2 || t > d) throw ConfigError("config: --target must lie in 2.." + std::to_string(d));
  return t - 1;
}

RunOutput run_mutation_law(const RunOptions& o) {
  const auto doc = load_law(o);
  const auto& law = doc.law;
  const int d = law.dim();
  MutationProgenyOptions mopts;
  mopts.eps = o.eps;
  std::vector<int> types;
  if (o.type) {
    if (*o.type < 1 || *o.type > d) throw ConfigError("config: --type must lie in 1.." + std::to_string(d));
    types.push_back(*o.type - 1);
  } else {
    for (int i = 0; i < d; ++i) types.push_back(i);
  }

  RunOutput out;
  json mu = {{"d", d}, {"eps", o.eps}, {"types", json::array()}};
  Csv table(concat(concat({"type"}, indexed("k", d)), {"p"}));
  for (int i : types) {
    MutationProgeny m;
    try {
      m = mutation_progeny(law, i, mopts);
    } catch (const std::domain_error& e) {
      throw ModelError(std::string("model: ") + e.what());
    }
    const double mass = m.pmf.mass();
    json t = {{"type", i + 1},
              {"mode", m.mode == SeriesMode::dirac ? "dirac" : "series"},
              {"terms", m.terms},
              {"truncation_error", m.truncation_error},
              {"support_dropped_mass", m.support_dropped_mass},
              {"mass", mass},
              {"entries", to_json(m.pmf)["entries"]}};
    mu["types"].push_back(t);
    for (const auto& [k, p] : m.pmf.entries()) {
      table << i + 1;
      for (int c : k) table << c;
      table << p;
      table.end_row();
    }
    char line[160];
    std::snprintf(line, sizeof line, "mu_%d: %zu atoms, %lld terms, mass %.12f, truncation %.3g", i + 1, m.pmf.size(),
                  static_cast<long long>(m.terms), mass, m.truncation_error);
    out.summary.emplace_back(line);
  }

  const auto r = mean_report(law);
  const auto rbar = mutation_mean_report(r);
  Csv means({"i", "j", "m", "mbar", "mbar_infinite"});
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      means << i + 1 << j + 1 << r.mean_matrix(i, j) << rbar.finite_values(i, j) << (rbar.is_infinite(i, j) ? 1 : 0);
      means.end_row();
    }
  json mean = {{"m", matrix_json(r.mean_matrix)},
               {"rho", r.spectral_radius},
               {"criticality", to_string(r.criticality)},
               {"mbar_any_infinite", rbar.any_infinite},
               {"identity_residual", mean_identity_residual(r, rbar)}};
  if (rbar.spectral_radius) {
    mean["rho_bar"] = *rbar.spectral_radius;
    mean["criticality_bar"] = to_string(rbar.criticality);
    const auto rel = eigen_relation_check(r, rbar);
    mean["eigen_relation"] = {{"applicable", rel.applicable},
                              {"right_error", rel.right_error},
                              {"left_error", rel.left_error},
                              {"holds", rel.holds()}};
  }
  mu["mean"] = mean;
  out.files.push_back({"mutation_law.json", mu.dump(2) + "\n"});
  out.files.push_back({"mutation_law.csv", table.str()});
  out.files.push_back({"mutation_mean.csv", means.str()});
  return out;
}

CensusEngine parse_census_engine(const std::string& e) {
  if (e.empty() || e == "walk") return CensusEngine::walk;
  if (e == "forest") return CensusEngine::forest;
  throw ConfigError("config: --engine must be walk or forest");
}

RunOutput run_simulate_discrete(const RunOptions& o) {
  const auto doc = load_law(o);
  const int d = doc.law.dim();
  SampleConfig cfg{doc.law, roots_or_first(o, d), o.budget};
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  const auto engine = parse_census_engine(o.engine);
  const auto reps = reps_or(o, 1000);
  const ProgenySampler sampler(cfg.law);

  struct Row {
    MutationCensus census;
    bool censored = false;
    bool consistent = true;
  };
  auto rows = map_replicates<Row>(reps, o.workers, [&](std::int64_t r) {
    Row row;
    if (engine == CensusEngine::walk) {
      auto rng = make_rng(o.seed, static_cast<std::uint64_t>(r), Stream::walk);
      auto w = sample_census_walk(cfg, sampler, rng);
      row.census = w.census;
      row.censored = w.censored;
      if (!w.censored)
        for (int j = 0; j < d; ++j) {
          std::int64_t s = cfg.roots[static_cast<std::size_t>(j)];
          for (int i = 0; i < d; ++i) s += w.walk_value(i, j);
          row.consistent = row.consistent && s == 0;
        }
    } else {
      auto rng = make_rng(o.seed, static_cast<std::uint64_t>(r), Stream::forest);
      auto f = sample_forest(cfg, sampler, rng);
      row.census = census(f.forest);
      row.censored = f.censored;
    }
    if (!row.censored)
      for (int j = 0; j < d; ++j) {
        std::int64_t incoming = 0;
        for (int i = 0; i < d; ++i) incoming += row.census.cross(i, j);
        row.consistent = row.consistent && incoming == row.census.mutations(j) &&
                         row.census.total(j) == row.census.roots(j) + row.census.mutations(j) + row.census.self_births(j);
      }
    return row;
  });

  std::vector<std::string> header{"replicate", "censored"};
  header = concat(header, indexed("N_", d));
  header = concat(header, indexed("M_", d));
  for (int i = 1; i <= d; ++i)
    for (int j = 1; j <= d; ++j)
      if (i != j) header.push_back("M_" + std::to_string(i) + "_" + std::to_string(j));
  Csv csv(header);
  std::vector<Moments> total(static_cast<std::size_t>(d)), muts(static_cast<std::size_t>(d));
  std::int64_t censored = 0;
  for (std::int64_t r = 0; r < reps; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.consistent) throw InvariantError("invariant: census identities fail on replicate " + std::to_string(r));
    csv << r << (row.censored ? 1 : 0);
    for (int i = 0; i < d; ++i) csv << static_cast<std::int64_t>(row.census.total(i));
    for (int i = 0; i < d; ++i) csv << static_cast<std::int64_t>(row.census.mutations(i));
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        if (i != j) csv << static_cast<std::int64_t>(row.census.cross(i, j));
    csv.end_row();
    if (row.censored) {
      ++censored;
      continue;
    }
    for (int i = 0; i < d; ++i) {
      total[static_cast<std::size_t>(i)].add(static_cast<double>(row.census.total(i)));
      muts[static_cast<std::size_t>(i)].add(static_cast<double>(row.census.mutations(i)));
    }
  }

  RunOutput out;
  json summary = {{"engine", engine == CensusEngine::walk ? "walk" : "forest"},
                  {"replicates", reps},
                  {"censored", censored},
                  {"roots", cfg.roots},
                  {"total", json::array()},
                  {"mutations", json::array()}};
  for (int i = 0; i < d; ++i) {
    summary["total"].push_back(moments_json(total[static_cast<std::size_t>(i)]));
    summary["mutations"].push_back(moments_json(muts[static_cast<std::size_t>(i)]));
  }
  const auto mr = mean_report(cfg.law);
  if (mr.criticality == Criticality::subcritical) {
    const Eigen::MatrixXd f = fundamental_matrix(mr.mean_matrix);
    Eigen::RowVectorXd x(d);
    for (int i = 0; i < d; ++i) x(i) = static_cast<double>(cfg.roots[static_cast<std::size_t>(i)]);
    summary["expected_total"] = vector_json((x * f).transpose());
  }
  out.files.push_back({"census.csv", csv.str()});

  if (o.type) {
    if (*o.type < 1 || *o.type > d) throw ConfigError("config: --type must lie in 1.." + std::to_string(d));
    const int t = *o.type - 1;
    const auto counts = empirical_mutation_children(cfg, t, reps, o.seed, o.workers);
    MutationProgenyOptions mopts;
    mopts.eps = o.eps;
    const auto mu = mutation_progeny(cfg.law, t, mopts);
    Csv mc(concat(indexed("k", d), {"count", "frequency", "mu"}));
    auto entries = mu.pmf.entries();
    std::map<LatticeVector, std::pair<std::int64_t, double>> joint;
    for (const auto& [k, c] : counts.counts) joint[k].first = c;
    for (const auto& [k, p] : entries) joint[k].second = p;
    for (const auto& [k, cp] : joint) {
      for (int c : k) mc << c;
      mc << cp.first << (counts.vertices ? static_cast<double>(cp.first) / static_cast<double>(counts.vertices) : 0.0)
         << cp.second;
      mc.end_row();
    }
    out.files.push_back({"mutation_children.csv", mc.str()});
    const double tv = counts.vertices ? total_variation(mu.pmf, counts.counts) : 1.0;
    summary["mutation_children"] = {{"type", t + 1},
                                    {"vertices", counts.vertices},
                                    {"censored_forests", counts.censored_forests},
                                    {"total_variation", tv}};
    out.summary.push_back("mutation children of type " + std::to_string(t + 1) + ": TV = " + format_double(tv));
  }
  const bool over = mr.criticality != Criticality::supercritical && censored * 1000 > reps;
  summary["censoring_exceeded"] = over;
  out.files.push_back({"summary.json", summary.dump(2) + "\n"});
  out.summary.push_back(std::to_string(reps) + " replicates, " + std::to_string(censored) + " censored");
  if (over) out.summary.push_back("WARNING: more than 0.1% of replicates censored; estimates are biased, raise --budget");
  return out;
}

RunOutput run_direction(const RunOptions& o) {
  const auto doc = load_law(o);
  const int d = doc.law.dim();
  std::vector<std::int64_t> w = o.direction;
  if (w.empty()) {
    w.assign(static_cast<std::size_t>(d), 0);
    w[0] = 1;
  }
  const std::vector<std::int64_t> scales = o.scales.empty() ? std::vector<std::int64_t>{50, 100, 200} : o.scales;
  DirectionOptions dopts;
  dopts.replicates = reps_or(o, 2000);
  dopts.seed = o.seed;
  dopts.workers = o.workers;
  dopts.vertex_budget = o.budget;
  dopts.engine = parse_census_engine(o.engine);
  DirectionExperiment e;
  try {
    e = direction_asymptotics(doc.law, w, scales, dopts);
  } catch (const std::domain_error& ex) {
    throw ModelError(std::string("model: ") + ex.what());
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("config: ") + ex.what());
  }

  Csv csv({"scale", "type", "quantity", "estimate", "se", "replicates", "censored"});
  for (const auto& row : e.rows) {
    const std::pair<const char*, const Moments*> qs[] = {
        {"total_per_n", &row.total_per_n}, {"mutations_per_n", &row.mutations_per_n}, {"mutation_ratio", &row.mutation_ratio}};
    for (const auto& [name, m] : qs) {
      csv << row.scale << row.type + 1 << name << m->mean() << m->se() << m->count() << row.censored;
      csv.end_row();
    }
  }
  json report = {{"direction", e.direction},
                 {"scales", e.scales},
                 {"criticality", to_string(e.criticality)},
                 {"c", e.c},
                 {"mutation_target_stated", e.mutation_target_stated},
                 {"mutation_target_pathwise", e.mutation_target_pathwise},
                 {"ratio_target", e.ratio_target},
                 {"censoring_exceeded", e.censoring_exceeded}};
  RunOutput out;
  out.files.push_back({"direction.csv", csv.str()});
  out.files.push_back({"direction.json", report.dump(2) + "\n"});
  out.summary.push_back(std::to_string(e.rows.size()) + " (scale, type) rows; criticality " + to_string(e.criticality));
  if (e.censoring_exceeded)
    out.summary.push_back("WARNING: more than 0.1% of replicates censored at some scale; ratios are biased, raise --budget");
  return out;
}

Rates require_rates(const ModelDocument& doc) {
  if (!doc.rates) throw ModelError("model: this command needs \"rates\"");
  return *doc.rates;
}

RunOutput run_simulate_ct(const RunOptions& o) {
  const auto doc = load_law(o);
  const int d = doc.law.dim();
  const auto rates = require_rates(doc);
  const auto x = roots_or_first(o, d);
  const double horizon = o.horizon.value_or(2.0);
  if (!(horizon > 0.0)) throw ConfigError("config: --horizon must be positive");
  std::vector<double> times = o.times.empty() ? std::vector<double>{0.5, 1.0, 2.0} : o.times;
  std::erase_if(times, [&](double t) { return t > horizon; });
  const std::string engine = o.engine.empty() ? "direct" : o.engine;
  if (engine != "direct" && engine != "lamperti") throw ConfigError("config: --engine must be direct or lamperti");
  if (!doc.law.no_single_self_child()) throw ModelError("model: continuous time needs nu_i(e_i) = 0 for every type");
  const auto reps = reps_or(o, 1000);
  CTOptions copts;
  copts.population_cap = o.budget;
  constexpr std::int64_t kDumped = 5;

  struct Row {
    std::vector<std::vector<std::int64_t>> z, m;  // per time
    bool truncated = false;
    bool decomposition = true;
    CTTrajectory path;  // kept for the first few replicates only
  };
  auto rows = map_replicates<Row>(reps, o.workers, [&](std::int64_t r) {
    const bool lamperti = engine == "lamperti";
    auto rng = make_rng(o.seed, static_cast<std::uint64_t>(r), lamperti ? Stream::ct_lamperti : Stream::ct_direct);
    auto tr = lamperti ? simulate_lamperti(doc.law, rates, x, horizon, rng, copts)
                       : simulate_direct(doc.law, rates, x, horizon, rng, copts);
    Row row;
    row.truncated = tr.truncated();
    row.decomposition = tr.decomposition_holds();
    for (double t : times) {
      const auto s = tr.state_at(std::min(t, tr.horizon()));
      row.z.push_back(s.z);
      row.m.push_back(s.mutations);
    }
    if (r < kDumped) row.path = std::move(tr);
    return row;
  });

  Csv traj(concat(concat({"replicate", "event", "time", "parent_type"}, indexed("Z_", d)), indexed("M_", d)));
  Csv marg({"t", "type", "mean_z", "se_z", "mean_mutations", "se_mutations", "replicates"});
  std::int64_t truncated = 0;
  for (std::int64_t r = 0; r < reps; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    if (!row.decomposition) throw InvariantError("invariant: population decomposition fails on replicate " + std::to_string(r));
    truncated += row.truncated;
    if (r >= kDumped) continue;
    const auto& tr = row.path;
    for (std::size_t k = 0; k <= tr.event_count(); ++k) {
      const auto s = tr.state_after(k);
      traj << r << static_cast<std::int64_t>(k) << (k ? tr.events()[k - 1].time : 0.0)
           << (k ? tr.events()[k - 1].parent_type + 1 : 0);
      for (auto v : s.z) traj << v;
      for (auto v : s.mutations) traj << v;
      traj.end_row();
    }
  }
  for (std::size_t ti = 0; ti < times.size(); ++ti)
    for (int j = 0; j < d; ++j) {
      Moments z, m;
      for (const auto& row : rows) {
        if (row.truncated) continue;
        z.add(static_cast<double>(row.z[ti][static_cast<std::size_t>(j)]));
        m.add(static_cast<double>(row.m[ti][static_cast<std::size_t>(j)]));
      }
      marg << times[ti] << j + 1 << z.mean() << z.se() << m.mean() << m.se() << z.count();
      marg.end_row();
    }
  json summary = {{"engine", engine}, {"replicates", reps}, {"truncated", truncated}, {"horizon", horizon},
                  {"decomposition_holds", true}};
  try {
    const auto mal = malthus(mean_report(doc.law), rates);
    summary["malthus"] = {{"rho1", mal.rho1}, {"a", matrix_json(mal.a)}};
  } catch (const std::exception&) {
    // reducible mean matrices have no Perron pair; the summary just omits it
  }
  RunOutput out;
  out.files.push_back({"trajectories.csv", traj.str()});
  out.files.push_back({"marginals.csv", marg.str()});
  out.files.push_back({"summary.json", summary.dump(2) + "\n"});
  out.summary.push_back(std::to_string(reps) + " " + engine + " paths to t = " + format_double(horizon) +
                        ", decomposition holds on all");
  return out;
}

RunOutput run_growth(const RunOptions& o) {
  const auto doc = load_law(o);
  const int d = doc.law.dim();
  const auto rates = require_rates(doc);
  GrowthOptions g;
  if (!o.times.empty()) g.t_grid = o.times;
  g.replicates = reps_or(o, 400);
  g.seed = o.seed;
  g.workers = o.workers;
  if (o.exact_until) g.exact_until = *o.exact_until;
  GrowthReport rep;
  try {
    rep = supercritical_growth(doc.law, rates, roots_or_first(o, d), g);
  } catch (const std::domain_error& e) {
    throw ModelError(std::string("model: ") + e.what());
  }
  Csv csv({"t", "type", "survivors", "scaled_mean", "scaled_se", "ratio_mean", "ratio_se", "log_slope_mean",
           "log_slope_se"});
  for (const auto& row : rep.rows) {
    csv << row.t << row.type + 1 << row.survivors << row.scaled_population.mean() << row.scaled_population.se()
        << row.ratio.mean() << row.ratio.se() << row.log_slope.mean() << row.log_slope.se();
    csv.end_row();
  }
  json report = {{"rho1", rep.malthus.rho1},
                 {"a", matrix_json(rep.malthus.a)},
                 {"replicates", rep.replicates},
                 {"extinct", rep.extinct},
                 {"survival_fraction", rep.survival_fraction},
                 {"survival_theory", rep.survival_theory},
                 {"ratio_printed", rep.ratio_printed},
                 {"ratio_derived", rep.ratio_derived},
                 {"printed_within_3se", rep.printed_within_3se},
                 {"derived_within_3se", rep.derived_within_3se},
                 {"exact_until", g.exact_until}};
  json verdict = json::array();
  for (int i = 0; i < d; ++i) {
    const bool p = rep.printed_within_3se[static_cast<std::size_t>(i)];
    const bool q = rep.derived_within_3se[static_cast<std::size_t>(i)];
    const std::string v = p && q ? "both" : p ? "printed" : q ? "derived" : "neither";
    verdict.push_back(v);
  }
  report["candidate_within_3se"] = verdict;
  RunOutput out;
  out.files.push_back({"growth.csv", csv.str()});
  out.files.push_back({"growth.json", report.dump(2) + "\n"});
  out.summary.push_back("rho1 = " + format_double(rep.malthus.rho1) + ", survivors " +
                        std::to_string(rep.replicates - rep.extinct) + "/" + std::to_string(rep.replicates));
  for (int i = 0; i < d; ++i)
    out.summary.push_back("type " + std::to_string(i + 1) + " ratio candidate within 3 SE: " +
                          verdict[static_cast<std::size_t>(i)].get<std::string>());
  return out;
}

RunOutput run_tau(const RunOptions& o, const ChainModel& chain) {
  const int target = chain_target(o, chain.dim());
  const auto reps = reps_or(o, 10'000);
  const std::string engine = o.engine.empty() ? "direct" : o.engine;
  if (engine != "direct" && engine != "representation")
    throw ConfigError("config: --engine must be direct or representation");
  TauOptions t;
  t.horizon = o.horizon;
  t.population_cap = o.budget;
  struct Row {
    double tau = 0.0;
    double theta_sum = 0.0;
    bool censored = false;
  };
  auto rows = map_replicates<Row>(reps, o.workers, [&](std::int64_t r) {
    Row row;
    if (engine == "direct") {
      auto rng = make_rng(o.seed, static_cast<std::uint64_t>(r), Stream::tau_direct);
      auto s = sample_tau_direct(chain, target, rng, t);
      row.tau = s.value();
      row.censored = s.censored;
    } else {
      auto rng = make_rng(o.seed, static_cast<std::uint64_t>(r), Stream::tau_representation);
      auto s = sample_tau_representation(chain, target, rng);
      row.tau = s.tau.back();
      row.theta_sum = s.sum_theta();
    }
    return row;
  });
  std::vector<std::string> header{"replicate", "tau", "censored"};
  if (engine == "representation") header.push_back("theta_sum");
  Csv csv(header);
  Moments m;
  std::int64_t censored = 0;
  for (std::int64_t r = 0; r < reps; ++r) {
    const auto& row = rows[static_cast<std::size_t>(r)];
    csv << r << row.tau << (row.censored ? 1 : 0);
    if (engine == "representation") csv << row.theta_sum;
    csv.end_row();
    if (row.censored)
      ++censored;
    else
      m.add(row.tau);
  }
  json summary = {{"engine", engine}, {"target", target + 1}, {"replicates", reps}, {"censored", censored},
                  {"tau", moments_json(m)}};
  RunOutput out;
  out.files.push_back({"tau.csv", csv.str()});
  out.files.push_back({"tau.json", summary.dump(2) + "\n"});
  out.summary.push_back("E tau_" + std::to_string(target + 1) + " = " + format_double(m.mean()) + " +- " +
                        format_double(m.se()) + " (" + std::to_string(censored) + " censored)");
  return out;
}

RunOutput run_theta(const RunOptions& o, const ChainModel& chain) {
  const int k = chain_target(o, chain.dim());
  const auto reps = reps_or(o, 10'000);
  auto rows = map_replicates<ThetaSample>(reps, o.workers, [&](std::int64_t r) {
    auto rng = make_rng(o.seed, static_cast<std::uint64_t>(r), Stream::theta);
    return sample_theta(chain, k, rng);
  });
  Csv csv({"replicate", "theta", "gamma", "endpoint"});
  Moments m;
  for (std::int64_t r = 0; r < reps; ++r) {
    const auto& s = rows[static_cast<std::size_t>(r)];
    csv << r << s.theta << s.gamma << s.endpoint;
    csv.end_row();
    m.add(s.theta);
  }
  json summary = {{"target", k + 1}, {"replicates", reps}, {"theta", moments_json(m)}};
  if (chain.binary_fission) {
    double err = 0.0;
    summary["expected_theta_quadrature"] = expected_theta_quadrature(chain.mutation_rate(k - 1), chain.self_rate(k - 1), &err);
    summary["quadrature_error"] = err;
  }
  RunOutput out;
  out.files.push_back({"theta.csv", csv.str()});
  out.files.push_back({"theta.json", summary.dump(2) + "\n"});
  out.summary.push_back("E theta_" + std::to_string(k + 1) + " = " + format_double(m.mean()) + " +- " + format_double(m.se()));
  return out;
}

RunOutput run_bound(const RunOptions& o, const ChainModel& chain) {
  const int target = chain_target(o, chain.dim());
  std::vector<double> grid = o.times;
  if (grid.empty()) {
    // E theta_k <= 1 / lambda_{k-1,k}, so five times the sum covers the bulk
    double scale = 0.0;
    for (int k = 1; k <= target; ++k) scale += 1.0 / chain.mutation_rate(k - 1);
    for (int g = 1; g <= 20; ++g) grid.push_back(0.25 * scale * g);
  }
  McOptions mc{reps_or(o, 10'000), o.seed, o.workers};
  TauOptions t;
  t.horizon = o.horizon;
  t.population_cap = o.budget;
  const auto rep = bound_check(chain, target, grid, mc, t);
  Csv csv({"t", "tau_survival", "tau_se", "theta_sum_survival", "theta_sum_se", "holds"});
  for (std::size_t g = 0; g < grid.size(); ++g) {
    csv << rep.tau.grid[g] << rep.tau.survival[g] << rep.tau.se[g] << rep.theta_sum.survival[g] << rep.theta_sum.se[g]
        << (rep.holds[g] ? 1 : 0);
    csv.end_row();
  }
  json summary = {{"target", target + 1}, {"replicates", mc.replicates}, {"censored", rep.censored},
                  {"grid_points", grid.size()}, {"all_hold", rep.all_hold()}};
  RunOutput out;
  out.files.push_back({"bound.csv", csv.str()});
  out.files.push_back({"bound.json", summary.dump(2) + "\n"});
  out.summary.push_back(std::string("tail bound ") + (rep.all_hold() ? "holds" : "fails") + " at all " +
                        std::to_string(grid.size()) + " grid points");
  return out;
}

RunOutput run_ladder(const RunOptions& o) {
  int target = 0;
  std::vector<ChainModel> ladder;
  try {
    ladder = load_ladder(o.model, target);
  } catch (const std::exception& e) {
    throw ModelError(e.what());
  }
  if (o.target) target = chain_target(o, ladder.front().dim());
  McOptions mc{reps_or(o, 20'000), o.seed, o.workers};
  LadderReport rep;
  try {
    rep = ratio_convergence(ladder, target, mc);
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("model: ") + e.what());
  }
  Csv csv({"rung", "last_ratio", "replicates", "p_far_10", "se_far_10", "p_far_5", "se_far_5", "p_single_birth_last",
           "se_single_birth_last", "tau_mean", "tau_se", "theta_sum_mean", "theta_sum_se", "sum_expected_theta",
           "sum_inverse", "sum_inverse_square"});
  json rungs = json::array();
  for (std::size_t k = 0; k < rep.rungs.size(); ++k) {
    const auto& r = rep.rungs[k];
    csv << static_cast<std::int64_t>(k + 1) << r.ratios.back() << r.replicates << r.p_far_10 << r.se_far_10 << r.p_far_5
        << r.se_far_5 << r.p_single_birth.back() << r.se_single_birth.back() << r.tau.mean() << r.tau.se()
        << r.theta_sum.mean() << r.theta_sum.se() << r.sum_expected_theta << r.sum_inverse << r.sum_inverse_square;
    csv.end_row();
    rungs.push_back({{"ratios", r.ratios},
                     {"p_far_10", r.p_far_10},
                     {"p_far_5", r.p_far_5},
                     {"p_single_birth", r.p_single_birth},
                     {"tau", moments_json(r.tau)},
                     {"theta_sum", moments_json(r.theta_sum)},
                     {"expectation_candidates",
                      {{"sum_expected_theta", r.sum_expected_theta},
                       {"sum_inverse", r.sum_inverse},
                       {"sum_inverse_square", r.sum_inverse_square}}}});
  }
  json report = {{"target", target + 1},
                 {"rungs", rungs},
                 {"far_monotone", rep.far_monotone},
                 {"single_birth_monotone", rep.single_birth_monotone}};
  RunOutput out;
  out.files.push_back({"ladder.csv", csv.str()});
  out.files.push_back({"ladder.json", report.dump(2) + "\n"});
  out.summary.push_back(std::string("P(|tau/sum theta - 1| > 0.1) ") + (rep.far_monotone ? "decreases" : "does not decrease") +
                        " along the ladder; last rung " + format_double(rep.rungs.back().p_far_10));
  return out;
}

RunOutput run_laplace(const RunOptions& o, const ChainModel& chain) {
  const int target = chain_target(o, chain.dim());
  const std::vector<double> alphas = o.alphas.empty() ? std::vector<double>{0.0, 0.5, 1.0, 2.0} : o.alphas;
  Csv csv({"alpha", "value", "printed_value", "tail_bound", "terms", "converged"});
  json rows = json::array();
  for (double a : alphas) {
    LaplaceResult r;
    try {
      r = laplace_tau(chain, target, a, 100'000, o.eps < 1e-15 ? o.eps : 1e-15);
    } catch (const std::invalid_argument& e) {
      throw ModelError(std::string("model: ") + e.what());
    }
    csv << a << r.value << r.printed_value << r.tail_bound << r.terms << (r.converged ? 1 : 0);
    csv.end_row();
    rows.push_back({{"alpha", a}, {"value", r.value}, {"printed_value", r.printed_value}, {"converged", r.converged}});
  }
  RunOutput out;
  out.files.push_back({"laplace.csv", csv.str()});
  out.files.push_back({"laplace.json", json{{"target", target + 1}, {"rows", rows}}.dump(2) + "\n"});
  out.summary.push_back(std::to_string(alphas.size()) + " Laplace transform values of tau_" + std::to_string(target + 1));
  return out;
}

RunOutput run_expectation(const RunOptions& o, const ChainModel& chain) {
  const int target = chain_target(o, chain.dim());
  ExpectationReport r;
  try {
    r = expected_tau(chain, target, o.eps < 1e-9 ? o.eps : 1e-9);
  } catch (const std::invalid_argument& e) {
    throw ModelError(std::string("model: ") + e.what());
  }
  json report = {{"target", target + 1},
                 {"start_type", target},
                 {"printed_value", r.printed_value},
                 {"derived_value", r.derived_value},
                 {"oracle_value", r.oracle_value},
                 {"oracle_error", r.oracle_error},
                 {"printed_supported", r.printed_supported},
                 {"derived_supported", r.derived_supported}};
  RunOutput out;
  out.files.push_back({"expectation.json", report.dump(2) + "\n"});
  out.summary.push_back("quadrature " + format_double(r.oracle_value) + "; printed prefactor " +
                        (r.printed_supported ? "supported" : "unsupported") + "; derived form " +
                        (r.derived_supported ? "supported" : "unsupported"));
  return out;
}

RunOutput run_emergence(const RunOptions& o) {
  const auto& s = o.subcommand;
  if (s == "ladder") return run_ladder(o);
  if (s != "tau" && s != "theta" && s != "bound" && s != "laplace" && s != "expectation")
    throw ConfigError("config: unknown emergence subcommand '" + s + "'");
  const auto chain = load_chain_model(o);
  try {
    if (s == "tau") return run_tau(o, chain);
    if (s == "theta") return run_theta(o, chain);
    if (s == "bound") return run_bound(o, chain);
    if (s == "laplace") return run_laplace(o, chain);
    return run_expectation(o, chain);
  } catch (const std::domain_error& e) {
    throw ModelError(std::string("model: ") + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

RunOutput run(const RunOptions& o) {
  if (o.workers < 1) throw ConfigError("config: --workers must be at least 1");
  if (o.budget < 1) throw ConfigError("config: --budget must be positive");
  if (!(o.eps > 0.0 && o.eps < 1.0)) throw ConfigError("config: --eps must lie in (0, 1)");
  if (o.command == "mutation-law") return run_mutation_law(o);
  if (o.command == "simulate-discrete") return run_simulate_discrete(o);
  if (o.command == "direction-asymptotics") return run_direction(o);
  if (o.command == "simulate-ct") return run_simulate_ct(o);
  if (o.command == "growth") return run_growth(o);
  if (o.command == "emergence") return run_emergence(o);
  throw ConfigError("config: unknown command '" + o.command + "'");
}

json canonical_config(const RunOptions& o) {
  json c = {{"command", o.command},
            {"subcommand", o.subcommand},
            {"model", o.model.filename().string()},
            {"model_fnv1a", hex64(fnv1a(read_bytes(o.model)))},
            {"seed", o.seed},
            {"eps", o.eps},
            {"budget", o.budget},
            {"engine", o.engine},
            {"roots", o.roots},
            {"direction", o.direction},
            {"scales", o.scales},
            {"times", o.times},
            {"alphas", o.alphas}};
  c["reps"] = o.reps ? json(*o.reps) : json(nullptr);
  c["horizon"] = o.horizon ? json(*o.horizon) : json(nullptr);
  c["type"] = o.type ? json(*o.type) : json(nullptr);
  c["target"] = o.target ? json(*o.target) : json(nullptr);
  c["exact_until"] = o.exact_until ? json(*o.exact_until) : json(nullptr);
  return c;
}

std::string config_hash(const RunOptions& o) { return hex64(fnv1a(canonical_config(o).dump())); }

json manifest(const RunOptions& o, const RunOutput& out, double runtime_seconds) {
  json files = json::array();
  for (const auto& f : out.files) files.push_back({{"name", f.name}, {"fnv1a", hex64(fnv1a(f.content))}});
  return {{"tool", "mutforest"},
          {"config", canonical_config(o)},
          {"config_hash", config_hash(o)},
          {"seed", o.seed},
          {"workers", o.workers},
          {"versions",
           {{"mutforest", kVersion},
            {"compiler", __VERSION__},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"boost", BOOST_LIB_VERSION},
            {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
          {"files", files},
          {"runtime_seconds", runtime_seconds}};
}

void write_outputs(const std::filesystem::path& dir, const RunOptions& o, const RunOutput& out, double runtime_seconds) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("output: cannot write " + (dir / name).string());
    f << content;
  };
  for (const auto& f : out.files) write(f.name, f.content);
  write("manifest.json", manifest(o, out, runtime_seconds).dump(2) + "\n");
}

}  // namespace mutforest::cli
