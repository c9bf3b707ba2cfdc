#include "mutforest/model_io.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

namespace mutforest {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error("model: " + what); }

const nlohmann::json& field(const nlohmann::json& obj, const char* name) {
  if (!obj.is_object() || !obj.contains(name)) fail(std::string("missing field '") + name + "'");
  return obj.at(name);
}

std::vector<std::pair<double, double>> parse_pairs(const nlohmann::json& arr, const std::string& where) {
  if (!arr.is_array() || arr.empty()) fail(where + " must be a nonempty array of [self_rate, mutation_rate] pairs");
  std::vector<std::pair<double, double>> out;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      fail(where + " entries must be [self_rate, mutation_rate]");
    }
    out.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return out;
}

}  // namespace

nlohmann::json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

ModelDocument parse_model(const nlohmann::json& doc) {
  const auto& dj = field(doc, "d");
  if (!dj.is_number_integer() || dj.get<int>() < 1) fail("'d' must be a positive integer");
  const int d = dj.get<int>();
  const auto& laws = field(doc, "laws");
  if (!laws.is_array() || static_cast<int>(laws.size()) != d) fail("'laws' must list exactly d laws");
  std::vector<SparsePmf> pmfs;
  for (std::size_t i = 0; i < laws.size(); ++i) {
    const std::string where = "law " + std::to_string(i + 1);
    const auto& entries = field(laws[i], "entries");
    if (!entries.is_array() || entries.empty()) fail(where + ": 'entries' must be a nonempty array");
    std::vector<std::pair<LatticeVector, double>> list;
    double mass = 0.0;
    for (const auto& e : entries) {
      const auto& k = field(e, "k");
      const auto& p = field(e, "p");
      if (!k.is_array() || static_cast<int>(k.size()) != d) fail(where + ": each 'k' must have d entries");
      LatticeVector kv;
      for (const auto& c : k) {
        if (!c.is_number_integer() || c.get<int>() < 0) fail(where + ": child counts must be nonnegative integers");
        kv.push_back(c.get<int>());
      }
      if (!p.is_number() || p.get<double>() < 0.0) fail(where + ": probabilities must be nonnegative numbers");
      mass += p.get<double>();
      list.emplace_back(std::move(kv), p.get<double>());
    }
    if (std::abs(mass - 1.0) > 1e-9) fail(where + ": total mass " + std::to_string(mass) + " differs from 1 by more than 1e-9");
    pmfs.push_back(SparsePmf::from_entries(d, std::move(list)));
  }
  ModelDocument out{ProgenyLaw(std::move(pmfs)), std::nullopt};
  if (doc.contains("rates")) {
    const auto& r = doc.at("rates");
    if (!r.is_array()) fail("'rates' must be an array");
    Rates rates;
    for (const auto& v : r) {
      if (!v.is_number()) fail("'rates' must contain numbers");
      rates.lambda.push_back(v.get<double>());
    }
    try {
      rates.validate(d);
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    out.rates = std::move(rates);
  }
  return out;
}

ModelDocument load_model(const std::filesystem::path& path) {
  try {
    return parse_model(read_json_file(path));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const SparsePmf& pmf) {
  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t e = 0; e < pmf.size(); ++e) {
    const auto k = pmf.point(e);
    entries.push_back({{"k", std::vector<int>(k.begin(), k.end())}, {"p", pmf.prob(e)}});
  }
  return {{"entries", entries}};
}

nlohmann::json to_json(const ProgenyLaw& law, const std::optional<Rates>& rates) {
  nlohmann::json doc;
  doc["d"] = law.dim();
  doc["laws"] = nlohmann::json::array();
  for (const auto& l : law.laws()) doc["laws"].push_back(to_json(l));
  if (rates) doc["rates"] = rates->lambda;
  return doc;
}

ChainModel parse_chain(const nlohmann::json& doc) {
  try {
    if (doc.contains("binary_chain")) {
      const double last = doc.value("last_rate", 1.0);
      return make_binary_chain(parse_pairs(doc.at("binary_chain"), "'binary_chain'"), last);
    }
    auto m = parse_model(doc);
    if (!m.rates) fail("a chain model needs 'rates'");
    ChainCondition cond = ChainCondition::general;
    if (doc.contains("condition")) {
      const auto c = doc.at("condition").get<std::string>();
      if (c == "single_mutant") {
        cond = ChainCondition::single_mutant;
      } else if (c != "general") {
        fail("'condition' must be 'general' or 'single_mutant'");
      }
    }
    return validate_chain(m.law, *m.rates, cond);
  } catch (const std::invalid_argument& e) {
    fail(e.what());
  }
}

ChainModel load_chain(const std::filesystem::path& path) { return parse_chain(read_json_file(path)); }

std::vector<ChainModel> parse_ladder(const nlohmann::json& doc, int& target) {
  const auto& t = field(doc, "target");
  if (!t.is_number_integer() || t.get<int>() < 2) fail("'target' must be an integer >= 2");
  target = t.get<int>() - 1;
  const double last = doc.value("last_rate", 1.0);
  const auto& rungs = field(doc, "rungs");
  if (!rungs.is_array() || rungs.empty()) fail("'rungs' must be a nonempty array");
  std::vector<ChainModel> out;
  for (std::size_t r = 0; r < rungs.size(); ++r) {
    try {
      out.push_back(make_binary_chain(parse_pairs(rungs[r], "rung " + std::to_string(r + 1)), last));
    } catch (const std::invalid_argument& e) {
      fail("rung " + std::to_string(r + 1) + ": " + e.what());
    }
    if (target >= out.back().dim()) fail("'target' exceeds the number of types in rung " + std::to_string(r + 1));
  }
  return out;
}

std::vector<ChainModel> load_ladder(const std::filesystem::path& path, int& target) {
  return parse_ladder(read_json_file(path), target);
}

}  // namespace mutforest
