#include "dcst/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "dcst/errors.hpp"

namespace dcst {
namespace {

constexpr std::string_view kRootPos = "<ROOT>";

void check_aligned(const DepTree& gold, const DepTree& pred) {
  if (gold.size() != pred.size())
    throw UsageError("gold and predicted trees differ in length (" +
                     std::to_string(gold.size()) + " vs " + std::to_string(pred.size()) + ")");
}

void check_corpora(std::size_t gold, std::size_t pred) {
  if (gold != pred)
    throw UsageError("gold and predicted corpora differ in size (" + std::to_string(gold) +
                     " vs " + std::to_string(pred) + " sentences)");
}

std::string_view label_at(const DepTree& t, std::size_t i) {
  return t.labels.empty() ? std::string_view("_") : std::string_view(t.labels[i]);
}

double safe_div(double num, std::size_t den) {
  return den == 0 ? 0.0 : num / static_cast<double>(den);
}

}  // namespace

int head_distance(int dep, int head, PdhMode mode) {
  const int sign = dep > head ? -1 : 1;
  const int gap = std::abs(head - dep);
  return sign * (mode == PdhMode::Intervening ? gap - 1 : gap);
}

AttachmentScores uas_las(std::span<const DepTree> gold, std::span<const DepTree> pred) {
  check_corpora(gold.size(), pred.size());
  AttachmentScores s;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    check_aligned(gold[k], pred[k]);
    for (std::size_t i = 0; i < gold[k].heads.size(); ++i) {
      ++s.tokens;
      if (gold[k].heads[i] != pred[k].heads[i]) continue;
      ++s.correct_heads;
      if (label_at(gold[k], i) == label_at(pred[k], i)) ++s.correct_labeled;
    }
  }
  s.uas = safe_div(static_cast<double>(s.correct_heads), s.tokens);
  s.las = safe_div(static_cast<double>(s.correct_labeled), s.tokens);
  return s;
}

double SentenceMetrics::uas() const { return safe_div(static_cast<double>(correct_heads), tokens); }
double SentenceMetrics::las() const {
  return safe_div(static_cast<double>(correct_labeled), tokens);
}

SentenceMetrics sentence_metrics(const DepTree& gold, const DepTree& pred,
                                 std::span<const std::string> pos, PdhMode mode) {
  check_aligned(gold, pred);
  if (pos.size() != gold.heads.size())
    throw UsageError("POS sequence length differs from the tree length");
  if (!is_valid_tree(gold.heads) || !is_valid_tree(pred.heads))
    throw UsageError("metrics need valid trees");
  SentenceMetrics s;
  const auto nc_g = children_counts(gold.heads), nc_p = children_counts(pred.heads);
  const auto dr_g = depths(gold.heads), dr_p = depths(pred.heads);
  auto head_pos = [&](int head) -> std::string_view {
    return head == 0 ? kRootPos : std::string_view(pos[static_cast<std::size_t>(head - 1)]);
  };
  for (std::size_t i = 0; i < gold.heads.size(); ++i) {
    const int hg = gold.heads[i], hp = pred.heads[i];
    const int dep = static_cast<int>(i) + 1;
    ++s.tokens;
    if (hg == hp) {
      ++s.correct_heads;
      if (label_at(gold, i) == label_at(pred, i)) ++s.correct_labeled;
    }
    s.nc_abs += std::abs(nc_g[i] - nc_p[i]);
    s.dr_abs += std::abs(dr_g[i] - dr_p[i]);
    if (hg != 0 && hp != 0) {
      s.pdh_abs += std::abs(head_distance(dep, hg, mode) - head_distance(dep, hp, mode));
      ++s.pdh_tokens;
    }
    if (head_pos(hg) != head_pos(hp)) ++s.pos_head_errors;
  }
  return s;
}

namespace {

EvalReport aggregate(std::vector<SentenceMetrics> per_sentence) {
  EvalReport r;
  double heads = 0, labeled = 0, nc = 0, dr = 0, pdh = 0, phe = 0;
  std::size_t pdh_tokens = 0;
  for (const auto& s : per_sentence) {
    r.tokens += s.tokens;
    heads += static_cast<double>(s.correct_heads);
    labeled += static_cast<double>(s.correct_labeled);
    nc += s.nc_abs;
    dr += s.dr_abs;
    pdh += s.pdh_abs;
    pdh_tokens += s.pdh_tokens;
    phe += static_cast<double>(s.pos_head_errors);
  }
  r.sentences = per_sentence.size();
  r.uas = safe_div(heads, r.tokens);
  r.las = safe_div(labeled, r.tokens);
  r.ad_nc = safe_div(nc, r.tokens);
  r.ad_dr = safe_div(dr, r.tokens);
  r.ad_pdh = safe_div(pdh, pdh_tokens);
  r.pos_head_error = safe_div(phe, r.tokens);
  r.per_sentence = std::move(per_sentence);
  return r;
}

std::vector<std::vector<std::string>> underscores(std::span<const DepTree> trees) {
  std::vector<std::vector<std::string>> out;
  for (const auto& t : trees) out.emplace_back(t.heads.size(), "_");
  return out;
}

}  // namespace

EvalReport evaluate(std::span<const DepTree> gold, std::span<const DepTree> pred,
                    std::span<const std::vector<std::string>> pos, PdhMode mode) {
  check_corpora(gold.size(), pred.size());
  check_corpora(gold.size(), pos.size());
  std::vector<SentenceMetrics> per;
  per.reserve(gold.size());
  for (std::size_t k = 0; k < gold.size(); ++k)
    per.push_back(sentence_metrics(gold[k], pred[k], pos[k], mode));
  return aggregate(std::move(per));
}

EvalReport evaluate(std::span<const Sentence> gold, std::span<const Sentence> pred,
                    PdhMode mode, bool pos_from_pred) {
  check_corpora(gold.size(), pred.size());
  std::vector<DepTree> g, p;
  std::vector<std::vector<std::string>> pos;
  for (std::size_t k = 0; k < gold.size(); ++k) {
    if (gold[k].size() != pred[k].size())
      throw DataError("sentence " + std::to_string(k + 1) +
                      ": gold and predicted token counts differ");
    g.push_back(tree_from_sentence(gold[k]));
    p.push_back(tree_from_sentence(pred[k]));
    pos.push_back(pos_from_pred ? pred[k].pos() : gold[k].pos());
  }
  return evaluate(g, p, pos, mode);
}

double ad_nc(std::span<const DepTree> gold, std::span<const DepTree> pred) {
  return evaluate(gold, pred, underscores(gold)).ad_nc;
}

double ad_dr(std::span<const DepTree> gold, std::span<const DepTree> pred) {
  return evaluate(gold, pred, underscores(gold)).ad_dr;
}

double ad_pdh(std::span<const DepTree> gold, std::span<const DepTree> pred, PdhMode mode) {
  return evaluate(gold, pred, underscores(gold), mode).ad_pdh;
}

double pos_head_error(std::span<const DepTree> gold, std::span<const DepTree> pred,
                      std::span<const std::vector<std::string>> pos) {
  return evaluate(gold, pred, pos).pos_head_error;
}

std::vector<double> EvalReport::sentence_uas() const {
  std::vector<double> out;
  for (const auto& s : per_sentence) out.push_back(s.uas());
  return out;
}

std::vector<double> EvalReport::sentence_las() const {
  std::vector<double> out;
  for (const auto& s : per_sentence) out.push_back(s.las());
  return out;
}

nlohmann::json EvalReport::to_json(bool with_sentences) const {
  nlohmann::json j = {{"uas", uas},       {"las", las},
                      {"ad_nc", ad_nc},   {"ad_dr", ad_dr},
                      {"ad_pdh", ad_pdh}, {"pos_head_error", pos_head_error},
                      {"sentences", sentences}, {"tokens", tokens}};
  if (with_sentences) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& s : per_sentence)
      rows.push_back({{"tokens", s.tokens},
                      {"uas", s.uas()},
                      {"las", s.las()},
                      {"ad_nc", safe_div(s.nc_abs, s.tokens)},
                      {"ad_dr", safe_div(s.dr_abs, s.tokens)},
                      {"ad_pdh", safe_div(s.pdh_abs, s.pdh_tokens)},
                      {"pos_head_error", safe_div(static_cast<double>(s.pos_head_errors), s.tokens)}});
    j["per_sentence"] = std::move(rows);
  }
  return j;
}

std::string EvalReport::to_text() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "sentences       %zu\n"
                "tokens          %zu\n"
                "UAS             %.3f\n"
                "LAS             %.3f\n"
                "AD-NC           %.4f\n"
                "AD-DR           %.4f\n"
                "AD-PDH          %.4f\n"
                "POS-head-error  %.4f\n",
                sentences, tokens, 100.0 * uas, 100.0 * las, ad_nc, ad_dr, ad_pdh,
                pos_head_error);
  return buf;
}

// ---- statistics -----------------------------------------------------------

Regression regression_r2(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("regression_r2: x and y differ in length");
  if (x.size() < 2) throw UsageError("regression_r2 needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw UsageError("regression_r2: x is constant");
  Regression r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    ss_res += e * e;
  }
  // Constant y is fitted exactly by the flat line.
  r.r2 = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  return r;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) return h;
  }
  throw NumericError("incomplete beta continued fraction did not converge");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw UsageError("incomplete_beta needs a, b > 0");
  if (!(x >= 0.0 && x <= 1.0)) throw UsageError("incomplete_beta needs x in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
  if (!(df > 0.0)) throw UsageError("student_t_cdf needs df > 0");
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return t > 0 ? 1.0 - tail : tail;
}

TTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("paired_t_test: samples differ in length");
  if (a.size() < 2) throw UsageError("paired_t_test needs at least two pairs");
  const double n = static_cast<double>(a.size());
  double mean = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mean += a[i] - b[i];
  mean /= n;
  double ss = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  const double var = ss / (n - 1.0);
  // Relative threshold: a constant difference leaves only rounding noise.
  if (!(var > 1e-24 * std::max(1.0, mean * mean)))
    throw UsageError("paired_t_test: differences have zero variance");
  TTest r;
  r.df = n - 1.0;
  r.t = mean / std::sqrt(var / n);
  r.p = incomplete_beta(0.5 * r.df, 0.5, r.df / (r.df + r.t * r.t));
  return r;
}

}  // namespace dcst
