#include "dcst/gating.hpp"

#include "dcst/errors.hpp"
#include "dcst/rng.hpp"

namespace dcst {
namespace {

void check_streams(ad::Var h_parser, std::span<const ad::Var> h_taggers) {
  if (h_taggers.empty()) throw UsageError("gate needs at least one tagger stream");
  for (const auto& h : h_taggers)
    if (h.rows() != h_parser.rows() || h.cols() != h_parser.cols())
      throw ShapeError("gate streams differ in shape: " + std::to_string(h_parser.rows()) +
                       "x" + std::to_string(h_parser.cols()) + " vs " +
                       std::to_string(h.rows()) + "x" + std::to_string(h.cols()));
}

std::string w_name(const std::string& prefix, const GateSpec& spec, int i) {
  return spec.taggers == 1 ? prefix + ".w" : prefix + ".w" + std::to_string(i);
}

std::string b_name(const std::string& prefix, const GateSpec& spec, int i) {
  return spec.taggers == 1 ? prefix + ".b" : prefix + ".b" + std::to_string(i);
}

}  // namespace

void add_gate_params(ParameterStore& store, const std::string& prefix,
                     const GateSpec& spec, Rng& rng) {
  if (spec.dim < 1 || spec.taggers < 1)
    throw UsageError("gate needs a positive dimension and at least one tagger");
  Rng r = rng.substream(prefix);
  const int outputs = spec.taggers == 1 ? 1 : spec.streams();
  for (int i = 0; i < outputs; ++i) {
    init_glorot(store.add(w_name(prefix, spec, i), spec.streams() * spec.dim, spec.dim), r);
    store.add(b_name(prefix, spec, i), 1, spec.dim);
  }
}

ad::Var gate2(ad::Var h_parser, ad::Var h_tagger, ad::Var w, ad::Var b) {
  const ad::Var taggers[] = {h_tagger};
  check_streams(h_parser, taggers);
  ad::Var a = ad::sigmoid(ad::affine(ad::concat_cols({h_parser, h_tagger}), w, b));
  return ad::add(ad::mul(a, h_parser), ad::mul(ad::one_minus(a), h_tagger));
}

ad::Var gate_n(ad::Var h_parser, std::span<const ad::Var> h_taggers,
               std::span<const ad::Var> w, std::span<const ad::Var> b) {
  check_streams(h_parser, h_taggers);
  const std::size_t streams = h_taggers.size() + 1;
  if (w.size() != streams || b.size() != streams)
    throw UsageError("gate_n needs one weight and bias per stream");
  std::vector<ad::Var> all{h_parser};
  all.insert(all.end(), h_taggers.begin(), h_taggers.end());
  ad::Var joint = ad::concat_cols(all);
  std::vector<ad::Var> scores;
  for (std::size_t i = 0; i < streams; ++i) scores.push_back(ad::affine(joint, w[i], b[i]));
  return ad::mix_softmax(scores, all);
}

ad::Var apply_gate(Binder& bind, const std::string& prefix, const GateSpec& spec,
                   ad::Var h_parser, std::span<const ad::Var> h_taggers) {
  if (static_cast<int>(h_taggers.size()) != spec.taggers)
    throw UsageError("gate expects " + std::to_string(spec.taggers) + " tagger streams, got " +
                     std::to_string(h_taggers.size()));
  if (spec.taggers == 1)
    return gate2(h_parser, h_taggers[0], bind(prefix + ".w"), bind(prefix + ".b"));
  std::vector<ad::Var> w, b;
  for (int i = 0; i < spec.streams(); ++i) {
    w.push_back(bind(w_name(prefix, spec, i)));
    b.push_back(bind(b_name(prefix, spec, i)));
  }
  return gate_n(h_parser, h_taggers, w, b);
}

std::vector<Matrix> gate_weights(const ParameterStore& store, const std::string& prefix,
                                 const GateSpec& spec, const Matrix& h_parser,
                                 std::span<const Matrix> h_taggers) {
  if (static_cast<int>(h_taggers.size()) != spec.taggers)
    throw UsageError("gate_weights: wrong number of tagger streams");
  Matrix joint(h_parser.rows(), h_parser.cols() * spec.streams());
  joint.leftCols(h_parser.cols()) = h_parser;
  for (int i = 0; i < spec.taggers; ++i)
    joint.middleCols((i + 1) * h_parser.cols(), h_parser.cols()) = h_taggers[i];
  auto score = [&](int i) -> Matrix {
    Matrix s = joint * store.get(w_name(prefix, spec, i)).value;
    s.rowwise() += store.get(b_name(prefix, spec, i)).value.row(0);
    return s;
  };
  if (spec.taggers == 1) {
    Matrix a = score(0).unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
    Matrix rest = Matrix::Ones(a.rows(), a.cols()) - a;
    return {a, rest};
  }
  std::vector<Matrix> scores;
  for (int i = 0; i < spec.streams(); ++i) scores.push_back(score(i));
  return ad::stream_softmax(scores);
}

}  // namespace dcst
