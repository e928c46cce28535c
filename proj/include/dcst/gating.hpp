#pragma once

#include <span>
#include <string>
#include <vector>

#include "dcst/autograd.hpp"
#include "dcst/layers.hpp"
#include "dcst/params.hpp"

namespace dcst {

class Rng;

// Fusion of the parser encoder with n tagger encoders, applied row-wise to
// m x d encoder outputs.
//   n = 1: a = sigmoid([hp; ht] W + b), g = a * hp + (1 - a) * ht
//   n > 1: s_i = [hp; ht_1; ...; ht_n] W_i + b_i for i = 0..n,
//          a_i = softmax over i (per element), g = sum_i a_i * stream_i
// with stream_0 = hp. W is stored in row convention ((n + 1) d x d).
struct GateSpec {
  int dim = 0;
  int taggers = 1;

  int streams() const noexcept { return taggers + 1; }
};

void add_gate_params(ParameterStore& store, const std::string& prefix,
                     const GateSpec& spec, Rng& rng);

ad::Var gate2(ad::Var h_parser, ad::Var h_tagger, ad::Var w, ad::Var b);
ad::Var gate_n(ad::Var h_parser, std::span<const ad::Var> h_taggers,
               std::span<const ad::Var> w, std::span<const ad::Var> b);

// Binds the gate parameters under prefix and applies the form matching the
// number of taggers.
ad::Var apply_gate(Binder& bind, const std::string& prefix, const GateSpec& spec,
                   ad::Var h_parser, std::span<const ad::Var> h_taggers);

// Mixing weights of every stream (stream 0 = parser) for plain matrices, for
// inspection and tests.
std::vector<Matrix> gate_weights(const ParameterStore& store, const std::string& prefix,
                                 const GateSpec& spec, const Matrix& h_parser,
                                 std::span<const Matrix> h_taggers);

}  // namespace dcst
