#pragma once

#include <span>
#include <string>
#include <vector>

#include "dcst/config.hpp"
#include "dcst/conllu.hpp"
#include "dcst/layers.hpp"
#include "dcst/params.hpp"
#include "dcst/parser.hpp"
#include "dcst/tree.hpp"
#include "dcst/vocab.hpp"

namespace dcst {

// Sentences paired with one tag sequence each, all under one scheme. For the
// LM scheme the tags are the word forms themselves.
struct TaggedCorpus {
  Scheme scheme = Scheme::NC;
  Corpus sentences;
  std::vector<TagSequence> tags;

  std::size_t size() const noexcept { return sentences.size(); }
  bool empty() const noexcept { return sentences.empty(); }
};

TaggedCorpus derive_tagged_corpus(std::span<const Sentence> sentences,
                                  std::span<const DepTree> trees, Scheme scheme,
                                  const CoarsePos& coarse = CoarsePos());
// Uses each sentence's own heads.
TaggedCorpus derive_tagged_corpus(std::span<const Sentence> sentences, Scheme scheme,
                                  const CoarsePos& coarse = CoarsePos());
TaggedCorpus lm_corpus(std::span<const Sentence> sentences);

// Tag vocabulary of a corpus (id 0 = unknown).
Vocab build_tag_vocab(const TaggedCorpus& corpus);
// Word-prediction vocabulary: the `size` most frequent forms (ties broken by
// string order).
Vocab build_lm_vocab(std::span<const Sentence> sentences, int size);

// BiLSTM encoder followed by FC -> ELU -> dropout -> FC -> ELU -> dropout ->
// softmax over tags. The LM variant splits the final BiLSTM layer: the
// forward half predicts the next word and the backward half the previous
// word, each through its own decoder.
class TaggerModel {
 public:
  TaggerModel() = default;

  static TaggerModel create(const ModelConfig& config, const TaggedCorpus& train,
                            const PretrainedEmbeddings* pretrained = nullptr);
  static TaggerModel create_lm(const ModelConfig& config, std::span<const Sentence> train,
                               const PretrainedEmbeddings* pretrained = nullptr);

  Scheme scheme() const noexcept { return scheme_; }
  const ModelConfig& config() const noexcept { return config_; }
  const Encoder& encoder() const noexcept { return encoder_; }
  const Vocab& tags() const noexcept { return tags_; }
  ParameterStore& store() noexcept { return store_; }
  const ParameterStore& store() const noexcept { return store_; }

  // Target ids for a sentence (-1 where the gold tag is unknown or, for the
  // LM, where no neighbour exists). The LM returns forward targets followed
  // by backward targets.
  std::vector<int> targets(const Sentence& s, const TagSequence& tags) const;

  // Tag logits: m x |tags| (scheme taggers) or 2m x |tags| (LM: forward rows
  // then backward rows).
  ad::Var logits(Binder& bind, const Sentence& s, const Ctx& ctx) const;
  ad::Var loss(ad::Tape& tape, const Sentence& s, const TagSequence& tags, const Ctx& ctx);

  // Predicted tag per token (LM: next-word predictions).
  std::vector<std::string> predict(const Sentence& s) const;

  // The encoder as a fused stream for a hybrid parser.
  FusedEncoder extract_encoder(const std::string& name, bool frozen) const;

  Archive to_archive() const;
  static TaggerModel from_archive(const Archive& archive);

  static constexpr const char* kEncoderPrefix = "encoder";

 private:
  DirectionMix mix() const noexcept {
    return scheme_ == Scheme::LM ? DirectionMix::Separated : DirectionMix::Joint;
  }
  void add_decoder(const std::string& prefix, int input_dim, Rng& rng);
  ad::Var decode(Binder& bind, const std::string& prefix, ad::Var h, const Ctx& ctx) const;
  void build_layout(Rng& rng, const PretrainedEmbeddings* pretrained);

  Scheme scheme_ = Scheme::NC;
  ModelConfig config_;
  Encoder encoder_;
  Vocab tags_;
  ParameterStore store_;
};

struct AccuracyReport {
  std::vector<double> per_sentence;  // sentences without targets are skipped
  std::vector<std::size_t> sentence_index;  // corpus position of each entry
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy = 0.0;  // micro average
};

// Token accuracy; predictions never match through the unknown tag.
AccuracyReport tag_accuracy(const TaggerModel& model, const TaggedCorpus& corpus);

TaggerModel train_tagger(const TaggedCorpus& train, const TaggedCorpus& dev,
                         const ModelConfig& config, TrainReport* report = nullptr,
                         const PretrainedEmbeddings* pretrained = nullptr,
                         const LogFn& log = {});
TaggerModel train_lm_tagger(std::span<const Sentence> train, std::span<const Sentence> dev,
                            const ModelConfig& config, TrainReport* report = nullptr,
                            const PretrainedEmbeddings* pretrained = nullptr,
                            const LogFn& log = {});

}  // namespace dcst
