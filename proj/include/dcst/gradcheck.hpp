#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dcst/autograd.hpp"
#include "dcst/params.hpp"

namespace dcst {

struct GradCheckOptions {
  double h = 1e-5;
  double tol = 1e-4;
  // Relative error is |analytic - numeric| / max(|analytic|, |numeric|,
  // floor * max(1, |f|)).
  double floor = 1e-6;
  // 0 checks every entry; otherwise a seeded sample of at most this many
  // entries per tensor.
  std::size_t max_entries_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckEntry {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  bool ok = true;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;

  bool ok() const;
  std::string describe() const;
};

// Builds the scalar to differentiate on a fresh tape. Must be deterministic
// (no dropout) and read parameters from the stores being checked.
using ScalarFunction = std::function<ad::Var(ad::Tape&)>;

using NamedStore = std::pair<std::string, ParameterStore*>;

// Central finite differences against tape gradients. Throws NumericError on
// non-finite values.
GradCheckReport grad_check(const ScalarFunction& f,
                           const std::vector<NamedStore>& stores,
                           const GradCheckOptions& options = {});
GradCheckReport grad_check(const ScalarFunction& f, ParameterStore& store,
                           const GradCheckOptions& options = {});

}  // namespace dcst
