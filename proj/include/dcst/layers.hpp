#pragma once

#include <map>
#include <string>
#include <utility>

#include "dcst/autograd.hpp"
#include "dcst/conllu.hpp"
#include "dcst/params.hpp"
#include "dcst/vocab.hpp"

namespace dcst {

class Rng;
struct PretrainedEmbeddings;

// Forward-pass mode shared by all layers.
struct Ctx {
  bool train = false;
  double dropout = 0.0;
  Rng* rng = nullptr;  // required when train && dropout > 0
};

ad::Var dropout(ad::Var x, const Ctx& ctx);

// Binds store parameters onto a tape, once per name. Untracked binders turn
// parameters into constants (frozen weights).
class Binder {
 public:
  Binder(ad::Tape& tape, ParameterStore& store, bool track = true)
      : tape_(&tape), store_(&store), const_store_(&store), track_(track) {}
  Binder(ad::Tape& tape, const ParameterStore& store)
      : tape_(&tape), const_store_(&store), track_(false) {}

  ad::Var operator()(const std::string& name);
  ad::Tape& tape() const noexcept { return *tape_; }
  bool tracking() const noexcept { return track_; }

 private:
  ad::Tape* tape_;
  ParameterStore* store_ = nullptr;
  const ParameterStore* const_store_;
  bool track_;
  std::map<std::string, ad::Var> bound_;
};

// ---- LSTM -----------------------------------------------------------------
// Gate order i, f, g, o. w_ih: input x 4H, w_hh: H x 4H, b: 1 x 4H.

struct LstmWeights {
  ad::Var w_ih;
  ad::Var w_hh;
  ad::Var b;
};

void add_lstm_params(ParameterStore& store, const std::string& prefix,
                     int input_dim, int hidden, Rng& rng);
LstmWeights bind_lstm(Binder& bind, const std::string& prefix);

// Single cell step built from primitives: returns (h, c), each 1 x H.
std::pair<ad::Var, ad::Var> lstm_step(ad::Var x, ad::Var h_prev, ad::Var c_prev,
                                      const LstmWeights& w);
// Whole sequence (m x input) -> m x H through the fused recurrence.
ad::Var lstm_run(ad::Var x, const LstmWeights& w, bool reverse);
// Same result as lstm_run, composed from lstm_step (reference path).
ad::Var lstm_run_stepwise(ad::Var x, const LstmWeights& w, bool reverse);

struct BiLstmSpec {
  int input_dim = 0;
  int hidden = 0;  // per direction
  int layers = 1;

  int output_dim() const noexcept { return 2 * hidden; }
};

// Joint: layer l+1 reads both directions of layer l. Separated: each
// direction of layer l+1 reads only its own direction of layer l (the other
// half of the input is zero), so the forward stack never sees the future.
enum class DirectionMix { Joint, Separated };

void add_bilstm_params(ParameterStore& store, const std::string& prefix,
                       const BiLstmSpec& spec, Rng& rng);
ad::Var bilstm_encode(Binder& bind, const std::string& prefix,
                      const BiLstmSpec& spec, ad::Var x, const Ctx& ctx,
                      DirectionMix mix = DirectionMix::Joint);

// ---- input embedding + encoder ---------------------------------------------

struct EmbedderSpec {
  int word_dim = 0;
  int char_dim = 0;
  int char_filters = 0;
  int pos_dim = 0;

  int output_dim() const noexcept { return word_dim + char_filters + pos_dim; }
};

struct InputVocab {
  Vocab words;
  Vocab chars;
  Vocab pos;

  static InputVocab build(std::span<const Sentence> corpus);
  nlohmann::json to_json() const;
  static InputVocab from_json(const nlohmann::json& j);
};

struct EncoderSpec {
  EmbedderSpec embed;
  BiLstmSpec lstm;

  int output_dim() const noexcept { return lstm.output_dim(); }
  nlohmann::json to_json() const;
  static EncoderSpec from_json(const nlohmann::json& j);
};

// Word + char-CNN + POS embedding followed by a stacked BiLSTM. Parameters
// live in a store under a caller-chosen prefix.
class Encoder {
 public:
  Encoder() = default;
  Encoder(EncoderSpec spec, InputVocab vocab)
      : spec_(spec), vocab_(std::move(vocab)) {}

  void add_params(ParameterStore& store, const std::string& prefix, Rng& rng,
                  const PretrainedEmbeddings* pretrained = nullptr) const;

  // m x embed.output_dim()
  ad::Var embed(Binder& bind, const std::string& prefix, const Sentence& s,
                const Ctx& ctx) const;
  // m x 2H
  ad::Var encode(Binder& bind, const std::string& prefix, const Sentence& s,
                 const Ctx& ctx, DirectionMix mix = DirectionMix::Joint) const;

  const EncoderSpec& spec() const noexcept { return spec_; }
  const InputVocab& vocab() const noexcept { return vocab_; }
  int word_id(std::string_view form) const;

 private:
  EncoderSpec spec_;
  InputVocab vocab_;
};

}  // namespace dcst
