#include "dcst/parser.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>

#include "dcst/embeddings.hpp"
#include "dcst/errors.hpp"
#include "dcst/metrics.hpp"
#include "dcst/mst.hpp"
#include "dcst/rng.hpp"

namespace dcst {

// ---- biaffine scoring ------------------------------------------------------

ad::Var biaffine_arcs(ad::Var r, ad::Var u, ad::Var w) {
  const Eigen::Index m = r.rows() - 1;
  if (m < 1) throw ShapeError("biaffine_arcs: need ROOT plus at least one token");
  ad::Var deps = ad::slice_rows(r, 1, m);
  ad::Var bilinear = ad::matmul(ad::matmul(deps, u), ad::transpose(r));
  ad::Var head_bias = ad::transpose(ad::matmul(r, w));
  return ad::add_row(bilinear, head_bias);
}

ad::Var biaffine_labels(ad::Var q, std::span<const int> heads, ad::Var u, ad::Var w,
                        ad::Var b) {
  const Eigen::Index m = q.rows() - 1;
  if (static_cast<Eigen::Index>(heads.size()) != m)
    throw ShapeError("biaffine_labels: " + std::to_string(heads.size()) + " heads for " +
                     std::to_string(m) + " tokens");
  ad::Var deps = ad::slice_rows(q, 1, m);
  ad::Var head_rows = ad::gather_rows(q, heads);
  ad::Var bilinear = ad::bilinear_rows(deps, head_rows, u);
  ad::Var linear = ad::matmul(ad::concat_cols({deps, head_rows}), w);
  return ad::add_row(ad::add(bilinear, linear), b);
}

ad::Var parse_loss(ad::Var arcs, ad::Var labels, std::span<const int> heads,
                   std::span<const int> label_ids) {
  if (!is_valid_tree(heads)) throw DataError("parse_loss: gold heads do not form a tree");
  return ad::add(ad::cross_entropy_rows(arcs, heads), ad::cross_entropy_rows(labels, label_ids));
}

// ---- model -----------------------------------------------------------------

namespace {

constexpr const char* kGatePrefix = "gate";

std::vector<std::string> collect_labels(std::span<const Sentence> train) {
  std::vector<std::string> labels;
  std::map<std::string, int> seen;
  for (const auto& s : train)
    for (const auto& t : s.tokens) {
      const std::string l = t.deprel.value_or("_");
      if (seen.emplace(l, 0).second) labels.push_back(l);
    }
  if (labels.empty()) labels.push_back("_");
  return labels;
}

std::vector<int> heads_of(const Sentence& s, std::size_t index) {
  std::vector<int> heads;
  heads.reserve(s.size());
  for (const auto& t : s.tokens) {
    if (!t.head)
      throw DataError("training sentence " + std::to_string(index + 1) + " lacks gold heads");
    heads.push_back(*t.head);
  }
  return heads;
}

}  // namespace

ParserModel ParserModel::create(const ModelConfig& config, std::span<const Sentence> train,
                                const PretrainedEmbeddings* pretrained,
                                const std::string& stream) {
  config.validate();
  if (train.empty()) throw UsageError("cannot build a parser from an empty corpus");
  ParserModel model;
  model.config_ = config;
  model.stream_ = stream;
  InputVocab vocab = InputVocab::build(train);
  if (pretrained)
    for (const auto& w : pretrained->vocab.tokens()) vocab.words.add(w);
  model.encoder_ = Encoder(config.encoder_spec(), std::move(vocab));
  model.labels_ = collect_labels(train);

  Rng rng = Rng(config.seed).substream(stream + ".init");
  model.encoder_.add_params(model.store_, kEncoderPrefix, rng, pretrained);
  const int d = model.encoder_.spec().output_dim();
  const int a = config.arc_mlp, l = config.label_mlp;
  const int k = static_cast<int>(model.labels_.size());
  ParameterStore& st = model.store_;
  init_glorot(st.add("root", 1, d), rng);
  init_glorot(st.add("arc_mlp.w", d, a), rng);
  st.add("arc_mlp.b", 1, a);
  init_glorot(st.add("label_mlp.w", d, l), rng);
  st.add("label_mlp.b", 1, l);
  init_glorot(st.add("arc.U", a, a), rng);
  st.add("arc.w", a, 1);
  init_glorot(st.add("label.U", k * l, l), rng);
  init_glorot(st.add("label.W", 2 * l, k), rng);
  st.add("label.b", 1, k);
  return model;
}

GateSpec ParserModel::gate_spec() const {
  return {encoder_.spec().output_dim(), static_cast<int>(fused_.size())};
}

void ParserModel::attach_encoders(std::vector<FusedEncoder> encoders) {
  if (!fused_.empty()) throw UsageError("parser already has fused encoders");
  if (encoders.empty()) throw UsageError("attach_encoders needs at least one encoder");
  const int d = encoder_.spec().output_dim();
  for (const auto& f : encoders)
    if (f.encoder.spec().output_dim() != d)
      throw ShapeError("fused encoder '" + f.name + "' outputs " +
                       std::to_string(f.encoder.spec().output_dim()) + " dims, parser uses " +
                       std::to_string(d));
  fused_ = std::move(encoders);
  Rng rng = Rng(config_.seed).substream(stream_ + ".gate.init");
  add_gate_params(store_, kGatePrefix, gate_spec(), rng);
}

int ParserModel::label_id(const std::string& label) const {
  for (std::size_t k = 0; k < labels_.size(); ++k)
    if (labels_[k] == label) return static_cast<int>(k);
  return -1;
}

ParserModel::Scores ParserModel::run(std::shared_ptr<Binder> main, std::vector<Binder>& aux,
                                     const Sentence& s, const Ctx& ctx) const {
  Binder& bind = *main;
  ad::Var h = encoder_.encode(bind, kEncoderPrefix, s, ctx);
  if (!fused_.empty()) {
    std::vector<ad::Var> streams;
    for (std::size_t i = 0; i < fused_.size(); ++i)
      streams.push_back(fused_[i].encoder.encode(aux[i], FusedEncoder::kPrefix, s, ctx));
    h = apply_gate(bind, kGatePrefix, gate_spec(), h, streams);
  }
  // The ROOT state joins after gating: taggers have no ROOT position.
  ad::Var states = dropout(ad::concat_rows({bind("root"), h}), ctx);
  ad::Var r = dropout(ad::elu(ad::affine(states, bind("arc_mlp.w"), bind("arc_mlp.b"))), ctx);
  ad::Var q =
      dropout(ad::elu(ad::affine(states, bind("label_mlp.w"), bind("label_mlp.b"))), ctx);
  Scores out;
  out.arcs = biaffine_arcs(r, bind("arc.U"), bind("arc.w"));
  out.q = q;
  out.bind = std::move(main);
  return out;
}

ParserModel::Scores ParserModel::scores(ad::Tape& tape, const Sentence& s, const Ctx& ctx) {
  auto main = std::make_shared<Binder>(tape, store_, true);
  std::vector<Binder> aux;
  for (auto& f : fused_) aux.emplace_back(tape, f.store, !f.frozen);
  return run(std::move(main), aux, s, ctx);
}

ad::Var ParserModel::label_scores(const Scores& scores, std::span<const int> heads) const {
  Binder& bind = *scores.bind;
  return biaffine_labels(scores.q, heads, bind("label.U"), bind("label.W"), bind("label.b"));
}

ad::Var ParserModel::loss(ad::Tape& tape, const Sentence& gold, const Ctx& ctx) {
  const std::vector<int> heads = heads_of(gold, 0);
  std::vector<int> label_ids;
  for (const auto& t : gold.tokens) label_ids.push_back(label_id(t.deprel.value_or("_")));
  Scores sc = scores(tape, gold, ctx);
  return parse_loss(sc.arcs, label_scores(sc, heads), heads, label_ids);
}

Matrix ParserModel::arc_scores(const Sentence& s) const {
  ad::Tape tape;
  auto main = std::make_shared<Binder>(tape, store_);
  std::vector<Binder> aux;
  for (const auto& f : fused_) aux.emplace_back(tape, f.store);
  return run(std::move(main), aux, s, Ctx{}).arcs.value();
}

DepTree ParserModel::predict(const Sentence& s) const {
  ad::Tape tape;
  auto main = std::make_shared<Binder>(tape, store_);
  std::vector<Binder> aux;
  for (const auto& f : fused_) aux.emplace_back(tape, f.store);
  Scores sc = run(std::move(main), aux, s, Ctx{});
  DepTree tree;
  tree.heads = decode_mst(sc.arcs.value());
  const Matrix& l = label_scores(sc, tree.heads).value();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    Eigen::Index best = 0;
    l.row(i).maxCoeff(&best);
    tree.labels.push_back(labels_[static_cast<std::size_t>(best)]);
  }
  return tree;
}

std::vector<DepTree> ParserModel::predict(std::span<const Sentence> sentences) const {
  std::vector<DepTree> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) out.push_back(predict(s));
  return out;
}

Corpus ParserModel::parse(std::span<const Sentence> sentences) const {
  Corpus out(sentences.begin(), sentences.end());
  for (auto& s : out) apply_tree(s, predict(s));
  return out;
}

std::vector<ParameterStore*> ParserModel::trainable_stores() {
  std::vector<ParameterStore*> out{&store_};
  for (auto& f : fused_)
    if (!f.frozen) out.push_back(&f.store);
  return out;
}

Archive ParserModel::to_archive() const {
  Archive a;
  a.meta["kind"] = "parser";
  a.meta["config"] = config_.to_json();
  a.meta["encoder"] = encoder_.spec().to_json();
  a.meta["vocab"] = encoder_.vocab().to_json();
  a.meta["labels"] = labels_;
  a.meta["step"] = store_.step();
  nlohmann::json aux = nlohmann::json::array();
  for (std::size_t i = 0; i < fused_.size(); ++i) {
    const auto& f = fused_[i];
    aux.push_back({{"name", f.name},
                   {"frozen", f.frozen},
                   {"encoder", f.encoder.spec().to_json()},
                   {"vocab", f.encoder.vocab().to_json()},
                   {"step", f.store.step()}});
    export_store(f.store, "aux" + std::to_string(i) + "/", a);
  }
  a.meta["fused"] = std::move(aux);
  export_store(store_, "", a);
  return a;
}

ParserModel ParserModel::from_archive(const Archive& archive) {
  try {
    if (archive.meta.at("kind") != "parser") throw DataError("archive is not a parser model");
    ParserModel model;
    model.config_ = ModelConfig::from_json(archive.meta.at("config"));
    model.encoder_ = Encoder(EncoderSpec::from_json(archive.meta.at("encoder")),
                             InputVocab::from_json(archive.meta.at("vocab")));
    model.labels_ = archive.meta.at("labels").get<std::vector<std::string>>();
    if (model.labels_.empty()) throw DataError("parser archive has no labels");

    // Rebuild the parameter layout, then overwrite it from the archive.
    const ModelConfig shape = model.config_;
    Rng rng(0);
    model.encoder_.add_params(model.store_, kEncoderPrefix, rng);
    const int d = model.encoder_.spec().output_dim();
    const int a = shape.arc_mlp, l = shape.label_mlp;
    const int k = static_cast<int>(model.labels_.size());
    ParameterStore& st = model.store_;
    st.add("root", 1, d);
    st.add("arc_mlp.w", d, a);
    st.add("arc_mlp.b", 1, a);
    st.add("label_mlp.w", d, l);
    st.add("label_mlp.b", 1, l);
    st.add("arc.U", a, a);
    st.add("arc.w", a, 1);
    st.add("label.U", k * l, l);
    st.add("label.W", 2 * l, k);
    st.add("label.b", 1, k);

    const auto& aux = archive.meta.at("fused");
    for (std::size_t i = 0; i < aux.size(); ++i) {
      FusedEncoder f;
      f.name = aux[i].at("name");
      f.frozen = aux[i].at("frozen");
      f.encoder = Encoder(EncoderSpec::from_json(aux[i].at("encoder")),
                          InputVocab::from_json(aux[i].at("vocab")));
      f.encoder.add_params(f.store, FusedEncoder::kPrefix, rng);
      import_store(f.store, "aux" + std::to_string(i) + "/", archive);
      f.store.set_step(aux[i].at("step"));
      model.fused_.push_back(std::move(f));
    }
    if (!model.fused_.empty()) add_gate_params(st, kGatePrefix, model.gate_spec(), rng);
    import_store(st, "", archive);
    st.set_step(archive.meta.at("step"));

    std::size_t expected = st.size();
    for (const auto& f : model.fused_) expected += f.store.size();
    if (archive.tensors.size() != expected)
      throw DataError("parser archive holds unexpected tensors");
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed parser archive metadata: ") + e.what());
  }
}

// ---- training --------------------------------------------------------------

nlohmann::json TrainReport::to_json() const {
  return {{"train_loss", train_loss}, {"dev_score", dev_score}, {"epochs_run", epochs_run},
          {"best_epoch", best_epoch}, {"best_dev", best_dev}};
}

double dev_las(const ParserModel& model, std::span<const Sentence> dev) {
  std::vector<DepTree> gold;
  for (const auto& s : dev) gold.push_back(tree_from_sentence(s));
  return uas_las(gold, model.predict(dev)).las;
}

TrainReport train_parser(ParserModel& model, std::span<const Sentence> train,
                         std::span<const Sentence> dev, const std::string& stream,
                         const LogFn& log) {
  if (train.empty()) throw UsageError("cannot train a parser on an empty corpus");
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto heads = heads_of(train[i], i);
    if (auto v = validate_tree(heads))
      throw DataError("training sentence " + std::to_string(i + 1) + ": " + v->describe());
  }
  const ModelConfig& cfg = model.config();
  const AdamConfig adam = cfg.adam();
  Rng base(cfg.seed);
  Rng shuffle_rng = base.substream(stream + ".shuffle");
  Rng dropout_rng = base.substream(stream + ".dropout");
  Ctx ctx{true, cfg.dropout, &dropout_rng};

  TrainReport report;
  ParserModel best;
  bool have_best = false;
  int since_best = 0;
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch));
      auto stores = model.trainable_stores();
      for (auto* st : stores) st->zero_grad();
      for (std::size_t k = start; k < end; ++k) {
        ad::Tape tape;
        ad::Var loss = model.loss(tape, train[order[k]], ctx);
        const double value = loss.scalar();
        if (!std::isfinite(value))
          throw NumericError("non-finite parser loss in epoch " + std::to_string(epoch));
        epoch_loss += value;
        tape.backward(loss);
      }
      for (auto* st : stores) adam_update(*st, adam);
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
    const double las = dev_las(model, dev);
    report.dev_score.push_back(las);
    if (log) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s epoch %d loss %.4f dev LAS %.4f", stream.c_str(), epoch,
                    epoch_loss, las);
      log(buf);
    }
    if (!have_best || las > report.best_dev) {
      report.best_dev = las;
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

ParserModel train_parser(std::span<const Sentence> train, std::span<const Sentence> dev,
                         const ModelConfig& config, TrainReport* report,
                         const PretrainedEmbeddings* pretrained, const LogFn& log) {
  ParserModel model = ParserModel::create(config, train, pretrained);
  TrainReport r = train_parser(model, train, dev, "parser", log);
  if (report) *report = std::move(r);
  return model;
}

}  // namespace dcst
