// Exact verification of the algebraic/differential identity lattice on
// seeded random polynomial fields. Failures are report entries, never
// exceptions.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dfc/field.hpp"

namespace dfc {

struct IdentityResult {
  std::string name;
  int d = 0;
  int checked = 0;
  int failed = 0;
};

struct IdentityReport {
  std::vector<IdentityResult> entries;
  bool all_pass() const {
    for (const auto& e : entries)
      if (e.failed != 0) return false;
    return true;
  }
  long total_checked() const {
    long t = 0;
    for (const auto& e : entries) t += e.checked;
    return t;
  }
};

// Runs every identity for d in [d_min, d_max], all applicable (k,m), with
// `fields_per_case` random polynomial fields of degree <= degree_cap each.
IdentityReport verify_identities(std::uint64_t seed, int d_min, int d_max,
                                 int degree_cap = 3, int fields_per_case = 20);

}  // namespace dfc
