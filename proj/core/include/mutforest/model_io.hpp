#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "mutforest/emergence.hpp"
#include "mutforest/lattice_pmf.hpp"
#include "mutforest/sim_continuous.hpp"

namespace mutforest {

/// Progeny law document:
///   {"d": 2, "laws": [{"entries": [{"k": [0, 0], "p": 0.5}, ...]}, ...], "rates": [1, 1]}
/// Types are 1-based in the document order of "laws". "rates" is optional.
struct ModelDocument {
  ProgenyLaw law;
  std::optional<Rates> rates;
};

/// Throws std::runtime_error with a description of the first problem found.
ModelDocument parse_model(const nlohmann::json& doc);
ModelDocument load_model(const std::filesystem::path& path);

nlohmann::json to_json(const SparsePmf& pmf);
nlohmann::json to_json(const ProgenyLaw& law, const std::optional<Rates>& rates = {});

/// Chain model document: either a progeny law document (with rates) plus an
/// optional "condition": "general" | "single_mutant", or a binary chain
///   {"binary_chain": [[l11, l12], [l22, l23], ...], "last_rate": 1}
ChainModel parse_chain(const nlohmann::json& doc);
ChainModel load_chain(const std::filesystem::path& path);

/// Ladder document: {"target": 3, "last_rate": 1, "rungs": [[[l11, l12], [l22, l23]], ...]};
/// target is 1-based. Returns the rungs and sets target (0-based).
std::vector<ChainModel> parse_ladder(const nlohmann::json& doc, int& target);
std::vector<ChainModel> load_ladder(const std::filesystem::path& path, int& target);

nlohmann::json read_json_file(const std::filesystem::path& path);

}  // namespace mutforest
