#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "dcst/config.hpp"
#include "dcst/conllu.hpp"
#include "dcst/gating.hpp"
#include "dcst/layers.hpp"
#include "dcst/params.hpp"
#include "dcst/tree.hpp"

namespace dcst {

struct PretrainedEmbeddings;

// ---- biaffine scoring ------------------------------------------------------

// r: (m + 1) x a arc representations, row 0 = ROOT. u: a x a, w: a x 1.
// Returns m x (m + 1) with s(i - 1, j) = r_i U r_j^T + r_j w.
ad::Var biaffine_arcs(ad::Var r, ad::Var u, ad::Var w);

// q: (m + 1) x l label representations, row 0 = ROOT. heads: one per token.
// u: (K * l) x l, w: 2l x K, b: 1 x K. Returns m x K with
// l(i - 1, k) = q_i U_k q_h^T + [q_i; q_h] w_k + b_k, h = heads[i - 1].
ad::Var biaffine_labels(ad::Var q, std::span<const int> heads, ad::Var u, ad::Var w,
                        ad::Var b);

// Head cross-entropy over the m + 1 candidates plus label cross-entropy given
// the gold heads (labels < 0 are skipped).
ad::Var parse_loss(ad::Var arcs, ad::Var labels, std::span<const int> heads,
                   std::span<const int> label_ids);

// ---- model -----------------------------------------------------------------

// A pre-trained encoder fused into a parser through the gate. Its parameters
// live under "encoder." in its own store.
struct FusedEncoder {
  std::string name;
  Encoder encoder;
  ParameterStore store;
  bool frozen = false;

  static constexpr const char* kPrefix = "encoder";
};

class ParserModel {
 public:
  ParserModel() = default;

  // Fresh parser whose vocabularies come from train. Pretrained vectors, when
  // given, initialize matching word rows and extend the word vocabulary.
  // `stream` names the RNG substream used for initialization.
  static ParserModel create(const ModelConfig& config, std::span<const Sentence> train,
                            const PretrainedEmbeddings* pretrained = nullptr,
                            const std::string& stream = "parser");

  // Adds gated auxiliary encoders with freshly initialized gates. Encoder
  // output widths must equal the parser's.
  void attach_encoders(std::vector<FusedEncoder> encoders);

  struct Scores {
    ad::Var arcs;  // m x (m + 1)
    ad::Var q;     // (m + 1) x label_mlp
    std::shared_ptr<Binder> bind;
  };

  // Tracked forward pass (gradients flow into the parser store and into
  // non-frozen fused stores).
  Scores scores(ad::Tape& tape, const Sentence& s, const Ctx& ctx);
  ad::Var label_scores(const Scores& scores, std::span<const int> heads) const;
  ad::Var loss(ad::Tape& tape, const Sentence& gold, const Ctx& ctx);

  // Inference.
  Matrix arc_scores(const Sentence& s) const;
  DepTree predict(const Sentence& s) const;
  std::vector<DepTree> predict(std::span<const Sentence> sentences) const;
  // Copies of the sentences with predicted heads and labels.
  Corpus parse(std::span<const Sentence> sentences) const;

  const ModelConfig& config() const noexcept { return config_; }
  void set_config(const ModelConfig& c) { config_ = c; }
  const Encoder& encoder() const noexcept { return encoder_; }
  ParameterStore& store() noexcept { return store_; }
  const ParameterStore& store() const noexcept { return store_; }
  std::vector<FusedEncoder>& fused() noexcept { return fused_; }
  const std::vector<FusedEncoder>& fused() const noexcept { return fused_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  int label_id(const std::string& label) const;
  bool hybrid() const noexcept { return !fused_.empty(); }

  // Stores updated by training (parser plus non-frozen fused encoders).
  std::vector<ParameterStore*> trainable_stores();

  Archive to_archive() const;
  static ParserModel from_archive(const Archive& archive);

  static constexpr const char* kEncoderPrefix = "parser";

 private:
  Scores run(std::shared_ptr<Binder> main, std::vector<Binder>& aux, const Sentence& s,
             const Ctx& ctx) const;
  GateSpec gate_spec() const;

  ModelConfig config_;
  Encoder encoder_;
  ParameterStore store_;
  std::vector<std::string> labels_;
  std::vector<FusedEncoder> fused_;
  std::string stream_ = "parser";
};

// ---- training --------------------------------------------------------------

struct TrainReport {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> dev_score;   // per epoch (LAS for parsers)
  int epochs_run = 0;
  int best_epoch = 0;  // 1-based; 0 when no dev set
  double best_dev = 0.0;

  nlohmann::json to_json() const;
};

using LogFn = std::function<void(const std::string&)>;

// Mini-batch Adam on the parser loss; after each epoch the dev LAS is
// measured and the best parameters kept. Training stops after `patience`
// epochs without improvement. `stream` names the RNG substream.
TrainReport train_parser(ParserModel& model, std::span<const Sentence> train,
                         std::span<const Sentence> dev, const std::string& stream = "parser",
                         const LogFn& log = {});

ParserModel train_parser(std::span<const Sentence> train, std::span<const Sentence> dev,
                         const ModelConfig& config, TrainReport* report = nullptr,
                         const PretrainedEmbeddings* pretrained = nullptr,
                         const LogFn& log = {});

// Dev LAS of a model on annotated sentences.
double dev_las(const ParserModel& model, std::span<const Sentence> dev);

}  // namespace dcst
