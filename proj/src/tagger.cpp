#include "dcst/tagger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "dcst/embeddings.hpp"
#include "dcst/errors.hpp"
#include "dcst/rng.hpp"

namespace dcst {

// ---- corpora ----------------------------------------------------------------

TaggedCorpus derive_tagged_corpus(std::span<const Sentence> sentences,
                                  std::span<const DepTree> trees, Scheme scheme,
                                  const CoarsePos& coarse) {
  if (sentences.size() != trees.size())
    throw UsageError("derive_tagged_corpus: " + std::to_string(sentences.size()) +
                     " sentences but " + std::to_string(trees.size()) + " trees");
  if (scheme == Scheme::LM) return lm_corpus(sentences);
  TaggedCorpus out;
  out.scheme = scheme;
  for (std::size_t k = 0; k < sentences.size(); ++k) {
    if (trees[k].heads.size() != sentences[k].size())
      throw UsageError("derive_tagged_corpus: tree " + std::to_string(k + 1) +
                       " does not match its sentence length");
    out.sentences.push_back(sentences[k]);
    out.tags.push_back(encode(scheme, trees[k], sentences[k].pos(), coarse));
  }
  return out;
}

TaggedCorpus derive_tagged_corpus(std::span<const Sentence> sentences, Scheme scheme,
                                  const CoarsePos& coarse) {
  std::vector<DepTree> trees;
  for (const auto& s : sentences) trees.push_back(tree_from_sentence(s));
  return derive_tagged_corpus(sentences, trees, scheme, coarse);
}

TaggedCorpus lm_corpus(std::span<const Sentence> sentences) {
  TaggedCorpus out;
  out.scheme = Scheme::LM;
  for (const auto& s : sentences) {
    out.sentences.push_back(s);
    out.tags.push_back({Scheme::LM, s.forms()});
  }
  return out;
}

Vocab build_tag_vocab(const TaggedCorpus& corpus) {
  Vocab v;
  for (const auto& seq : corpus.tags)
    for (const auto& t : seq.tags) v.add(t);
  return v;
}

Vocab build_lm_vocab(std::span<const Sentence> sentences, int size) {
  std::map<std::string, long> counts;
  for (const auto& s : sentences)
    for (const auto& t : s.tokens) ++counts[t.form];
  std::vector<std::pair<std::string, long>> items(counts.begin(), counts.end());
  std::stable_sort(items.begin(), items.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (std::size_t i = 0; i < items.size() && static_cast<int>(i) < size; ++i)
    v.add(items[i].first);
  return v;
}

// ---- model --------------------------------------------------------------------

void TaggerModel::add_decoder(const std::string& prefix, int input_dim, Rng& rng) {
  const int f1 = config_.tagger_fc1, f2 = config_.tagger_fc2;
  init_glorot(store_.add(prefix + ".fc1.w", input_dim, f1), rng);
  store_.add(prefix + ".fc1.b", 1, f1);
  init_glorot(store_.add(prefix + ".fc2.w", f1, f2), rng);
  store_.add(prefix + ".fc2.b", 1, f2);
  init_glorot(store_.add(prefix + ".out.w", f2, tags_.size()), rng);
  store_.add(prefix + ".out.b", 1, tags_.size());
}

void TaggerModel::build_layout(Rng& rng, const PretrainedEmbeddings* pretrained) {
  encoder_.add_params(store_, kEncoderPrefix, rng, pretrained);
  if (scheme_ == Scheme::LM) {
    add_decoder("fwd_dec", config_.hidden, rng);
    add_decoder("bwd_dec", config_.hidden, rng);
  } else {
    add_decoder("dec", encoder_.spec().output_dim(), rng);
  }
}

namespace {

InputVocab input_vocab(std::span<const Sentence> train, const PretrainedEmbeddings* pretrained) {
  InputVocab vocab = InputVocab::build(train);
  if (pretrained)
    for (const auto& w : pretrained->vocab.tokens()) vocab.words.add(w);
  return vocab;
}

}  // namespace

TaggerModel TaggerModel::create(const ModelConfig& config, const TaggedCorpus& train,
                                const PretrainedEmbeddings* pretrained) {
  config.validate();
  if (train.empty()) throw UsageError("cannot build a tagger from an empty corpus");
  if (train.scheme == Scheme::LM) return create_lm(config, train.sentences, pretrained);
  TaggerModel model;
  model.scheme_ = train.scheme;
  model.config_ = config;
  model.encoder_ = Encoder(config.encoder_spec(), input_vocab(train.sentences, pretrained));
  model.tags_ = build_tag_vocab(train);
  Rng rng = Rng(config.seed).substream("tagger." + std::string(scheme_name(train.scheme)) + ".init");
  model.build_layout(rng, pretrained);
  return model;
}

TaggerModel TaggerModel::create_lm(const ModelConfig& config, std::span<const Sentence> train,
                                   const PretrainedEmbeddings* pretrained) {
  config.validate();
  if (train.empty()) throw UsageError("cannot build a language model from an empty corpus");
  TaggerModel model;
  model.scheme_ = Scheme::LM;
  model.config_ = config;
  model.encoder_ = Encoder(config.encoder_spec(), input_vocab(train, pretrained));
  model.tags_ = build_lm_vocab(train, config.lm_vocab);
  Rng rng = Rng(config.seed).substream("tagger.lm.init");
  model.build_layout(rng, pretrained);
  return model;
}

std::vector<int> TaggerModel::targets(const Sentence& s, const TagSequence& tags) const {
  if (tags.tags.size() != s.size())
    throw UsageError("tag sequence length differs from the sentence length");
  if (tags.scheme != scheme_)
    throw UsageError("tag scheme " + std::string(scheme_name(tags.scheme)) +
                     " does not match the tagger's " + std::string(scheme_name(scheme_)));
  const std::size_t m = s.size();
  if (scheme_ != Scheme::LM) {
    std::vector<int> out;
    for (const auto& t : tags.tags) out.push_back(tags_.find(t).value_or(-1));
    return out;
  }
  // Forward rows predict word t + 1, backward rows word t - 1. Rare words map
  // to the unknown class, which is a legitimate target here.
  std::vector<int> out(2 * m, -1);
  for (std::size_t t = 0; t + 1 < m; ++t) out[t] = tags_.id(tags.tags[t + 1]);
  for (std::size_t t = 1; t < m; ++t) out[m + t] = tags_.id(tags.tags[t - 1]);
  return out;
}

ad::Var TaggerModel::decode(Binder& bind, const std::string& prefix, ad::Var h,
                            const Ctx& ctx) const {
  ad::Var z = dropout(ad::elu(ad::affine(h, bind(prefix + ".fc1.w"), bind(prefix + ".fc1.b"))), ctx);
  z = dropout(ad::elu(ad::affine(z, bind(prefix + ".fc2.w"), bind(prefix + ".fc2.b"))), ctx);
  return ad::affine(z, bind(prefix + ".out.w"), bind(prefix + ".out.b"));
}

ad::Var TaggerModel::logits(Binder& bind, const Sentence& s, const Ctx& ctx) const {
  ad::Var h = encoder_.encode(bind, kEncoderPrefix, s, ctx, mix());
  if (scheme_ != Scheme::LM) return decode(bind, "dec", dropout(h, ctx), ctx);
  const Eigen::Index H = config_.hidden;
  ad::Var fwd = decode(bind, "fwd_dec", dropout(ad::slice_cols(h, 0, H), ctx), ctx);
  ad::Var bwd = decode(bind, "bwd_dec", dropout(ad::slice_cols(h, H, H), ctx), ctx);
  return ad::concat_rows({fwd, bwd});
}

ad::Var TaggerModel::loss(ad::Tape& tape, const Sentence& s, const TagSequence& tags,
                          const Ctx& ctx) {
  const std::vector<int> gold = targets(s, tags);
  Binder bind(tape, store_, true);
  return ad::cross_entropy_rows(logits(bind, s, ctx), gold);
}

std::vector<std::string> TaggerModel::predict(const Sentence& s) const {
  ad::Tape tape;
  Binder bind(tape, store_);
  const Matrix& l = logits(bind, s, Ctx{}).value();
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(s.size()); ++i) {
    Eigen::Index best = 0;
    l.row(i).maxCoeff(&best);
    out.push_back(tags_.token(static_cast<int>(best)));
  }
  return out;
}

FusedEncoder TaggerModel::extract_encoder(const std::string& name, bool frozen) const {
  FusedEncoder f;
  f.name = name;
  f.frozen = frozen;
  f.encoder = encoder_;
  Rng rng(0);
  f.encoder.add_params(f.store, FusedEncoder::kPrefix, rng);
  f.store.copy_values_from(store_, std::string(kEncoderPrefix) + ".");
  return f;
}

Archive TaggerModel::to_archive() const {
  Archive a;
  a.meta["kind"] = "tagger";
  a.meta["scheme"] = std::string(scheme_name(scheme_));
  a.meta["config"] = config_.to_json();
  a.meta["encoder"] = encoder_.spec().to_json();
  a.meta["vocab"] = encoder_.vocab().to_json();
  a.meta["tags"] = tags_.to_json();
  a.meta["step"] = store_.step();
  export_store(store_, "", a);
  return a;
}

TaggerModel TaggerModel::from_archive(const Archive& archive) {
  try {
    if (archive.meta.at("kind") != "tagger") throw DataError("archive is not a tagger model");
    TaggerModel model;
    model.scheme_ = parse_scheme(archive.meta.at("scheme").get<std::string>());
    model.config_ = ModelConfig::from_json(archive.meta.at("config"));
    model.encoder_ = Encoder(EncoderSpec::from_json(archive.meta.at("encoder")),
                             InputVocab::from_json(archive.meta.at("vocab")));
    model.tags_ = Vocab::from_json(archive.meta.at("tags"));
    Rng rng(0);
    model.build_layout(rng, nullptr);
    import_store(model.store_, "", archive);
    if (archive.tensors.size() != model.store_.size())
      throw DataError("tagger archive holds unexpected tensors");
    model.store_.set_step(archive.meta.at("step"));
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed tagger archive metadata: ") + e.what());
  }
}

// ---- evaluation -----------------------------------------------------------------

AccuracyReport tag_accuracy(const TaggerModel& model, const TaggedCorpus& corpus) {
  if (corpus.empty()) throw UsageError("tag_accuracy needs a non-empty corpus");
  if (corpus.scheme != model.scheme())
    throw UsageError("corpus scheme " + std::string(scheme_name(corpus.scheme)) +
                     " does not match the tagger's " + std::string(scheme_name(model.scheme())));
  AccuracyReport r;
  for (std::size_t k = 0; k < corpus.size(); ++k) {
    const Sentence& s = corpus.sentences[k];
    const std::vector<int> gold = model.targets(s, corpus.tags[k]);
    ad::Tape tape;
    Binder bind(tape, model.store());
    const Matrix& l = model.logits(bind, s, Ctx{}).value();
    std::size_t correct = 0, total = 0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
      const int g = gold[static_cast<std::size_t>(i)];
      if (g < 0 && model.scheme() == Scheme::LM) continue;  // no neighbour
      ++total;
      Eigen::Index best = 0;
      l.row(i).maxCoeff(&best);
      if (g > 0 && best == g) ++correct;
    }
    if (total == 0) continue;
    r.correct += correct;
    r.total += total;
    r.per_sentence.push_back(static_cast<double>(correct) / static_cast<double>(total));
    r.sentence_index.push_back(k);
  }
  r.accuracy = r.total == 0 ? 0.0 : static_cast<double>(r.correct) / static_cast<double>(r.total);
  return r;
}

// ---- training ---------------------------------------------------------------------

namespace {

TrainReport fit(TaggerModel& model, const TaggedCorpus& train, const TaggedCorpus& dev,
                const LogFn& log) {
  const ModelConfig& cfg = model.config();
  const std::string stream = "tagger." + std::string(scheme_name(model.scheme()));
  Rng base(cfg.seed);
  Rng shuffle_rng = base.substream(stream + ".shuffle");
  Rng dropout_rng = base.substream(stream + ".dropout");
  Ctx ctx{true, cfg.dropout, &dropout_rng};
  const AdamConfig adam = cfg.adam();

  TrainReport report;
  TaggerModel best;
  bool have_best = false;
  int since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const int epochs = cfg.effective_tagger_epochs();

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      model.store().zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        ad::Tape tape;
        ad::Var loss = model.loss(tape, train.sentences[order[k]], train.tags[order[k]], ctx);
        const double value = loss.scalar();
        if (!std::isfinite(value))
          throw NumericError("non-finite tagger loss in epoch " + std::to_string(epoch));
        epoch_loss += value;
        tape.backward(loss);
      }
      adam_update(model.store(), adam);
    }
    report.train_loss.push_back(epoch_loss);
    report.epochs_run = epoch;
    if (dev.empty()) {
      if (log) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%s epoch %d loss %.4f", stream.c_str(), epoch, epoch_loss);
        log(buf);
      }
      continue;
    }
    const double acc = tag_accuracy(model, dev).accuracy;
    report.dev_score.push_back(acc);
    if (log) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s epoch %d loss %.4f dev accuracy %.4f", stream.c_str(),
                    epoch, epoch_loss, acc);
      log(buf);
    }
    if (!have_best || acc > report.best_dev) {
      report.best_dev = acc;
      report.best_epoch = epoch;
      best = model;
      have_best = true;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (have_best) model = std::move(best);
  return report;
}

}  // namespace

TaggerModel train_tagger(const TaggedCorpus& train, const TaggedCorpus& dev,
                         const ModelConfig& config, TrainReport* report,
                         const PretrainedEmbeddings* pretrained, const LogFn& log) {
  if (train.empty()) throw UsageError("cannot train a tagger on an empty corpus");
  if (!dev.empty() && dev.scheme != train.scheme)
    throw UsageError("tagger train and dev corpora use different schemes");
  TaggerModel model = TaggerModel::create(config, train, pretrained);
  TrainReport r = fit(model, train, dev, log);
  if (report) *report = std::move(r);
  return model;
}

TaggerModel train_lm_tagger(std::span<const Sentence> train, std::span<const Sentence> dev,
                            const ModelConfig& config, TrainReport* report,
                            const PretrainedEmbeddings* pretrained, const LogFn& log) {
  if (train.empty()) throw UsageError("cannot train a language model on an empty corpus");
  TaggerModel model = TaggerModel::create_lm(config, train, pretrained);
  // Dev sentences without any neighbour pair carry no targets.
  Corpus usable_dev;
  for (const auto& s : dev)
    if (s.size() >= 2) usable_dev.push_back(s);
  TrainReport r = fit(model, lm_corpus(train), lm_corpus(usable_dev), log);
  if (report) *report = std::move(r);
  return model;
}

}  // namespace dcst
