#include "dcst/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dcst/errors.hpp"
#include "dcst/rng.hpp"

namespace dcst {

bool GradCheckReport::ok() const {
  return std::all_of(entries.begin(), entries.end(),
                     [](const GradCheckEntry& e) { return e.ok; });
}

std::string GradCheckReport::describe() const {
  std::ostringstream os;
  os << "max relative error " << max_rel_error << " over " << entries.size()
     << " tensors";
  for (const auto& e : entries)
    if (!e.ok) os << "\n  FAIL " << e.name << ": " << e.max_rel_error;
  return os.str();
}

namespace {

double evaluate(const ScalarFunction& f) {
  ad::Tape tape;
  const double v = f(tape).scalar();
  if (!std::isfinite(v)) throw NumericError("grad_check: non-finite function value");
  return v;
}

}  // namespace

GradCheckReport grad_check(const ScalarFunction& f,
                           const std::vector<NamedStore>& stores,
                           const GradCheckOptions& options) {
  for (auto& [_, store] : stores) store->zero_grad();
  double scale = 1.0;
  {
    ad::Tape tape;
    ad::Var out = f(tape);
    if (out.value().size() != 1) throw ShapeError("grad_check: function must be scalar");
    if (!std::isfinite(out.scalar()))
      throw NumericError("grad_check: non-finite function value");
    scale = std::max(1.0, std::abs(out.scalar()));
    tape.backward(out);
  }

  // Rounding noise in the central difference grows with |f|, so the floor
  // below which errors count as absolute scales with it too.
  const double floor = options.floor * scale;
  GradCheckReport report;
  Rng rng(options.seed);
  for (auto& [label, store] : stores) {
    for (auto& [name, p] : *store) {
      GradCheckEntry entry;
      entry.name = label.empty() ? name : label + "/" + name;
      const Matrix analytic = p.grad;
      const Eigen::Index n = p.value.size();
      std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), 0);
      if (options.max_entries_per_param && order.size() > options.max_entries_per_param) {
        Rng pick = rng.substream(entry.name);
        pick.shuffle(order);
        order.resize(options.max_entries_per_param);
      }
      for (Eigen::Index flat : order) {
        double& x = p.value.data()[flat];
        const double saved = x;
        x = saved + options.h;
        const double up = evaluate(f);
        x = saved - options.h;
        const double down = evaluate(f);
        x = saved;
        const double numeric = (up - down) / (2.0 * options.h);
        const double a = analytic.data()[flat];
        if (!std::isfinite(a)) throw NumericError("grad_check: non-finite gradient");
        const double denom = std::max({std::abs(a), std::abs(numeric), floor});
        entry.max_rel_error = std::max(entry.max_rel_error, std::abs(a - numeric) / denom);
        ++entry.checked;
      }
      entry.ok = entry.max_rel_error <= options.tol;
      report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
      report.entries.push_back(std::move(entry));
    }
  }
  for (auto& [_, store] : stores) store->zero_grad();
  return report;
}

GradCheckReport grad_check(const ScalarFunction& f, ParameterStore& store,
                           const GradCheckOptions& options) {
  return grad_check(f, std::vector<NamedStore>{{"", &store}}, options);
}

}  // namespace dcst
