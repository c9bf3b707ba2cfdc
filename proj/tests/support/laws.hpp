#pragma once

#include "mutforest/lattice_pmf.hpp"

namespace mutforest::testing_laws {

// Subcritical two-type law used throughout the tests.
inline ProgenyLaw diamond() {
  return ProgenyLaw({SparsePmf::from_entries(2, {{{0, 0}, 0.5}, {{2, 0}, 0.3}, {{1, 1}, 0.2}}),
                     SparsePmf::from_entries(2, {{{0, 0}, 0.6}, {{0, 2}, 0.3}, {{1, 0}, 0.1}})});
}

// Supercritical two-type law.
inline ProgenyLaw triangle() {
  return ProgenyLaw({SparsePmf::from_entries(2, {{{2, 0}, 0.6}, {{1, 1}, 0.2}, {{0, 0}, 0.2}}),
                     SparsePmf::from_entries(2, {{{0, 2}, 0.6}, {{1, 0}, 0.1}, {{0, 0}, 0.3}})});
}

// Critical law with m_11 = 1/2 and mean matrix [[1/2, 1/2], [1/2, 1/2]].
inline ProgenyLaw critical() {
  return ProgenyLaw({SparsePmf::from_entries(2, {{{0, 0}, 0.25}, {{2, 0}, 0.25}, {{0, 1}, 0.5}}),
                     SparsePmf::from_entries(2, {{{0, 0}, 0.25}, {{1, 0}, 0.5}, {{0, 2}, 0.25}})});
}

}  // namespace mutforest::testing_laws
