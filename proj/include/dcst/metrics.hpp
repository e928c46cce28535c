#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "dcst/conllu.hpp"
#include "dcst/tree.hpp"

namespace dcst {

// Signed head distance for AD-PDH: sign * (|head - dep| - 1) counts the
// intervening words; Offset uses sign * |head - dep|. The sign is -1 when the
// dependent is right of its head.
enum class PdhMode { Intervening, Offset };

int head_distance(int dep, int head, PdhMode mode);

struct AttachmentScores {
  double uas = 0.0;
  double las = 0.0;
  std::size_t tokens = 0;
  std::size_t correct_heads = 0;
  std::size_t correct_labeled = 0;
};

// Micro-averaged over tokens. Labels compare as strings; a tree without
// labels has label "_" everywhere.
AttachmentScores uas_las(std::span<const DepTree> gold, std::span<const DepTree> pred);

// Sums and counts per sentence, so corpus values are micro averages.
struct SentenceMetrics {
  std::size_t tokens = 0;
  std::size_t correct_heads = 0;
  std::size_t correct_labeled = 0;
  double nc_abs = 0.0;   // sum of |children_gold - children_pred|
  double dr_abs = 0.0;   // sum of |depth_gold - depth_pred|
  double pdh_abs = 0.0;  // sum over non-root-attached tokens
  std::size_t pdh_tokens = 0;
  std::size_t pos_head_errors = 0;

  double uas() const;
  double las() const;
};

// pos: POS of each token (used for the head-POS comparison; ROOT is its own
// pseudo-POS).
SentenceMetrics sentence_metrics(const DepTree& gold, const DepTree& pred,
                                 std::span<const std::string> pos,
                                 PdhMode mode = PdhMode::Intervening);

double ad_nc(std::span<const DepTree> gold, std::span<const DepTree> pred);
double ad_dr(std::span<const DepTree> gold, std::span<const DepTree> pred);
double ad_pdh(std::span<const DepTree> gold, std::span<const DepTree> pred,
              PdhMode mode = PdhMode::Intervening);
double pos_head_error(std::span<const DepTree> gold, std::span<const DepTree> pred,
                      std::span<const std::vector<std::string>> pos);

struct EvalReport {
  double uas = 0.0;
  double las = 0.0;
  double ad_nc = 0.0;
  double ad_dr = 0.0;
  double ad_pdh = 0.0;
  double pos_head_error = 0.0;
  std::size_t sentences = 0;
  std::size_t tokens = 0;
  std::vector<SentenceMetrics> per_sentence;

  std::vector<double> sentence_uas() const;
  std::vector<double> sentence_las() const;
  nlohmann::json to_json(bool with_sentences = false) const;
  std::string to_text() const;
};

EvalReport evaluate(std::span<const DepTree> gold, std::span<const DepTree> pred,
                    std::span<const std::vector<std::string>> pos,
                    PdhMode mode = PdhMode::Intervening);
// Gold and predicted corpora must align token for token; POS is read from the
// gold sentences unless pos_from_pred is set.
EvalReport evaluate(std::span<const Sentence> gold, std::span<const Sentence> pred,
                    PdhMode mode = PdhMode::Intervening, bool pos_from_pred = false);

struct Regression {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Ordinary least squares of y on x.
Regression regression_r2(std::span<const double> x, std::span<const double> y);

struct TTest {
  double t = 0.0;
  double p = 1.0;
  double df = 0.0;
};

// Paired two-sided t-test on a - b.
TTest paired_t_test(std::span<const double> a, std::span<const double> b);

// Regularized incomplete beta function I_x(a, b).
double incomplete_beta(double a, double b, double x);
// CDF of Student's t distribution with df degrees of freedom.
double student_t_cdf(double t, double df);

}  // namespace dcst
