#include "dcst/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include "dcst/embeddings.hpp"
#include "dcst/errors.hpp"
#include "dcst/rng.hpp"
#include "dcst/synth.hpp"

namespace dcst {
namespace {

struct SplitIndices {
  std::vector<std::size_t> labeled, dev, unlabeled;
};

SplitIndices split_indices(std::size_t n, std::size_t n_train, std::size_t n_dev,
                           std::uint64_t seed) {
  if (n_train + n_dev > n)
    throw UsageError("corpus of " + std::to_string(n) + " sentences cannot supply " +
                     std::to_string(n_train) + " labeled and " + std::to_string(n_dev) +
                     " dev sentences");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng(seed).substream("split");
  rng.shuffle(order);
  SplitIndices out;
  out.labeled.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.dev.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                 order.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev));
  out.unlabeled.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + n_dev), order.end());
  std::sort(out.labeled.begin(), out.labeled.end());
  std::sort(out.dev.begin(), out.dev.end());
  std::sort(out.unlabeled.begin(), out.unlabeled.end());
  return out;
}

Corpus pick(std::span<const Sentence> corpus, const std::vector<std::size_t>& idx) {
  Corpus out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(corpus[i]);
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string join_schemes(std::span<const Scheme> schemes) {
  std::string out;
  for (Scheme s : schemes) {
    if (!out.empty()) out += "+";
    out += scheme_name(s);
  }
  return out;
}

}  // namespace

Split sample_split(std::span<const Sentence> corpus, std::size_t n_train, std::size_t n_dev,
                   std::uint64_t seed) {
  const SplitIndices idx = split_indices(corpus.size(), n_train, n_dev, seed);
  Split out;
  out.labeled = pick(corpus, idx.labeled);
  out.dev = pick(corpus, idx.dev);
  out.unlabeled = strip_annotations(pick(corpus, idx.unlabeled));
  return out;
}

std::pair<Corpus, Corpus> split_by_length(std::span<const Sentence> corpus, int threshold) {
  std::pair<Corpus, Corpus> out;
  for (const auto& s : corpus)
    (static_cast<int>(s.size()) <= threshold ? out.first : out.second).push_back(s);
  return out;
}

// ---- Pipeline -------------------------------------------------------------------

Pipeline::Pipeline(Corpus labeled, Corpus dev, Corpus unlabeled, PipelineOptions options)
    : labeled_(std::move(labeled)),
      dev_(std::move(dev)),
      unlabeled_(std::move(unlabeled)),
      options_(std::move(options)) {
  if (labeled_.empty()) throw UsageError("the labeled set L is empty");
  options_.model.validate();
  if (!options_.archive_dir.empty()) std::filesystem::create_directories(options_.archive_dir);
}

void Pipeline::log(const std::string& line) const {
  if (options_.log) options_.log(line);
}

void Pipeline::save(const std::string& name, const Archive& archive) const {
  if (options_.archive_dir.empty()) return;
  write_archive(options_.archive_dir / (name + ".dcst"), archive);
}

const ParserModel& Pipeline::base() {
  if (!base_) {
    const auto start = std::chrono::steady_clock::now();
    log("stage 1: training the base parser on " + std::to_string(labeled_.size()) +
        " sentences");
    ParserModel model =
        ParserModel::create(options_.model, labeled_, options_.pretrained, "base");
    TrainReport r = train_parser(model, labeled_, dev_, "base", options_.log);
    report_["base"] = {{"dev_las", r.best_dev}, {"train", r.to_json()}};
    timings_["base"] = seconds_since(start);
    save("base", model.to_archive());
    base_ = std::move(model);
  }
  return *base_;
}

const std::vector<DepTree>& Pipeline::auto_trees() {
  if (!auto_trees_) {
    const ParserModel& parser = base();
    const auto start = std::chrono::steady_clock::now();
    log("stage 2: parsing " + std::to_string(unlabeled_.size()) + " unlabeled sentences");
    auto_trees_ = parser.predict(unlabeled_);
    timings_["auto_parse"] = seconds_since(start);
  }
  return *auto_trees_;
}

const TaggerModel& Pipeline::tagger(Scheme scheme) {
  if (auto it = taggers_.find(scheme); it != taggers_.end()) return it->second;
  if (unlabeled_.empty()) throw UsageError("the unlabeled set U is empty");
  const std::string name(scheme_name(scheme));
  const Corpus& dev_source = options_.tagger_dev ? *options_.tagger_dev : dev_;
  TrainReport r;
  TaggerModel model;
  if (scheme == Scheme::LM) {
    const auto start = std::chrono::steady_clock::now();
    log("stage 4: training the language-model tagger");
    model = train_lm_tagger(unlabeled_, strip_annotations(dev_source), options_.model, &r,
                            options_.pretrained, options_.log);
    timings_["tagger_" + name] = seconds_since(start);
  } else {
    const TaggedCorpus train = derive_tagged_corpus(unlabeled_, auto_trees(), scheme);
    const auto start = std::chrono::steady_clock::now();
    // Tagger dev data: the base parser's parses of the dev sentences.
    const Corpus dev_raw = strip_annotations(dev_source);
    const TaggedCorpus dev = derive_tagged_corpus(dev_raw, base().predict(dev_raw), scheme);
    log("stage 3-4: training the " + name + " tagger on " + std::to_string(train.size()) +
        " auto-tagged sentences");
    model = train_tagger(train, dev, options_.model, &r, options_.pretrained, options_.log);
    timings_["tagger_" + name] = seconds_since(start);
  }
  report_["taggers"][name] = {{"dev_accuracy", r.best_dev}, {"train", r.to_json()}};
  save("tagger-" + name, model.to_archive());
  return taggers_.emplace(scheme, std::move(model)).first->second;
}

HybridRun Pipeline::train_hybrid(std::vector<FusedEncoder> encoders, const std::string& stream,
                                 bool frozen) {
  for (auto& f : encoders) f.frozen = frozen;
  HybridRun run;
  run.frozen = frozen;
  run.parser = ParserModel::create(options_.model, labeled_, options_.pretrained, stream);
  run.parser.attach_encoders(std::move(encoders));
  run.train = train_parser(run.parser, labeled_, dev_, stream, options_.log);
  return run;
}

HybridRun Pipeline::fused_run(std::vector<FusedEncoder> encoders, const std::string& stream,
                              FreezeMode mode) {
  const auto start = std::chrono::steady_clock::now();
  HybridRun run;
  if (mode == FreezeMode::TuneOnDev) {
    HybridRun frozen = train_hybrid(encoders, stream + ".frozen", true);
    HybridRun tuned = train_hybrid(std::move(encoders), stream + ".tuned", false);
    const bool pick_tuned = tuned.train.best_dev > frozen.train.best_dev;
    nlohmann::json tune = {{"frozen_dev_las", frozen.train.best_dev},
                           {"tuned_dev_las", tuned.train.best_dev}};
    run = pick_tuned ? std::move(tuned) : std::move(frozen);
    run.report["tune_on_dev"] = std::move(tune);
  } else {
    run = train_hybrid(std::move(encoders), stream, mode == FreezeMode::Freeze);
  }
  run.report["frozen"] = run.frozen;
  run.report["dev_las"] = run.train.best_dev;
  run.report["train"] = run.train.to_json();
  timings_[stream] = seconds_since(start);
  return run;
}

HybridRun Pipeline::hybrid(std::span<const Scheme> schemes) {
  if (schemes.empty()) throw UsageError("a hybrid parser needs at least one tagging scheme");
  std::vector<FusedEncoder> encoders;
  for (Scheme s : schemes) encoders.push_back(tagger(s).extract_encoder(std::string(scheme_name(s)), false));
  const std::string name = join_schemes(schemes);
  log("stage 5: training the hybrid parser with " + name + " encoders");
  HybridRun run = fused_run(std::move(encoders), "hybrid." + name, options_.freeze);
  run.report["schemes"] = name;
  report_["hybrid"][name] = run.report;
  save("hybrid-" + name, run.parser.to_archive());
  return run;
}

ParserModel Pipeline::self_training() {
  const std::vector<DepTree>& trees = auto_trees();
  Corpus combined = labeled_;
  for (std::size_t i = 0; i < unlabeled_.size(); ++i) {
    Sentence s = unlabeled_[i];
    apply_tree(s, trees[i]);
    combined.push_back(std::move(s));
  }
  const auto start = std::chrono::steady_clock::now();
  log("self-training: retraining on " + std::to_string(combined.size()) + " sentences");
  ParserModel model =
      ParserModel::create(options_.model, combined, options_.pretrained, "selftrain");
  TrainReport r = train_parser(model, combined, dev_, "selftrain", options_.log);
  report_["self_training"] = {{"dev_las", r.best_dev},
                              {"train_sentences", combined.size()},
                              {"train", r.to_json()}};
  timings_["self_training"] = seconds_since(start);
  save("selftrain", model.to_archive());
  return model;
}

HybridRun Pipeline::random_gating() {
  FusedEncoder f;
  f.name = "random";
  f.encoder = Encoder(options_.model.encoder_spec(), InputVocab::build(labeled_));
  Rng rng = Rng(options_.model.seed).substream("rg.encoder");
  f.encoder.add_params(f.store, FusedEncoder::kPrefix, rng, options_.pretrained);
  log("random gating: training a hybrid with an untrained encoder");
  std::vector<FusedEncoder> encoders;
  encoders.push_back(std::move(f));
  HybridRun run = fused_run(std::move(encoders), "rg",
                            options_.rg_freeze ? FreezeMode::Freeze : FreezeMode::Train);
  report_["random_gating"] = run.report;
  save("hybrid-rg", run.parser.to_archive());
  return run;
}

HybridRun run_dcst(std::span<const Sentence> labeled, std::span<const Sentence> dev,
                   std::span<const Sentence> unlabeled, std::span<const Scheme> schemes,
                   const PipelineOptions& options) {
  if (schemes.empty()) throw UsageError("DCST needs at least one tagging scheme");
  for (Scheme s : schemes)
    if (s == Scheme::LM) throw UsageError("DCST schemes are nc, dr and rpe; use run_lm for lm");
  Pipeline p(Corpus(labeled.begin(), labeled.end()), Corpus(dev.begin(), dev.end()),
             Corpus(unlabeled.begin(), unlabeled.end()), options);
  HybridRun run = p.hybrid(schemes);
  run.report = p.report();
  return run;
}

HybridRun run_lm(std::span<const Sentence> labeled, std::span<const Sentence> dev,
                 std::span<const Sentence> unlabeled, const PipelineOptions& options) {
  Pipeline p(Corpus(labeled.begin(), labeled.end()), Corpus(dev.begin(), dev.end()),
             Corpus(unlabeled.begin(), unlabeled.end()), options);
  const Scheme lm[] = {Scheme::LM};
  HybridRun run = p.hybrid(lm);
  run.report = p.report();
  return run;
}

ParserModel run_self_training(std::span<const Sentence> labeled, std::span<const Sentence> dev,
                              std::span<const Sentence> unlabeled, const PipelineOptions& options,
                              nlohmann::json* report) {
  Pipeline p(Corpus(labeled.begin(), labeled.end()), Corpus(dev.begin(), dev.end()),
             Corpus(unlabeled.begin(), unlabeled.end()), options);
  ParserModel model = p.self_training();
  if (report) *report = p.report();
  return model;
}

HybridRun run_random_gating(std::span<const Sentence> labeled, std::span<const Sentence> dev,
                            const PipelineOptions& options) {
  Pipeline p(Corpus(labeled.begin(), labeled.end()), Corpus(dev.begin(), dev.end()), Corpus{},
             options);
  HybridRun run = p.random_gating();
  run.report = p.report();
  return run;
}

// ---- experiments ------------------------------------------------------------------

const std::vector<std::string>& experiment_models() {
  static const std::vector<std::string> models = {
      "Base", "Base-FS", "Base+RG", "Self-Training", "DCST-LM",
      "DCST-NC", "DCST-DR", "DCST-RPE", "DCST-ENS"};
  return models;
}

namespace {

std::size_t model_rank(const std::string& name) {
  const auto& all = experiment_models();
  return static_cast<std::size_t>(std::find(all.begin(), all.end(), name) - all.begin());
}

struct ExperimentData {
  Corpus pool;        // labeled pool to sample L and dev from
  Corpus unlabeled;   // fixed U (domain / length adaptation); empty: from split
  Corpus tagger_dev;  // raw sentences for tagger dev; empty: parser dev
  Corpus full_train;  // Base-FS training data (fixed setups)
  Corpus test;
  Corpus fixed_dev;   // dev for setups that do not sample it from pool
};

Corpus read_optional(const std::string& path) {
  return path.empty() ? Corpus{} : read_conllu_file(path);
}

Corpus cap(Corpus c, int n) {
  if (n > 0 && c.size() > static_cast<std::size_t>(n)) c.resize(static_cast<std::size_t>(n));
  return c;
}

ExperimentData load_data(const ExperimentConfig& e) {
  ExperimentData d;
  auto synth_pool = [&] {
    return generate_synthetic_corpus(static_cast<std::size_t>(e.synth_sentences), e.synth_seed);
  };
  auto synth_test = [&] {
    return generate_synthetic_corpus(static_cast<std::size_t>(e.synth_test),
                                     mix64(e.synth_seed ^ 0x7465737400ULL));
  };
  switch (e.setup) {
    case Setup::LightlySupervised: {
      if (e.synth_sentences > 0) {
        d.pool = synth_pool();
        d.test = synth_test();
      } else {
        if (e.train.empty() || e.test.empty())
          throw UsageError("lightly_supervised needs train and test corpora (or synth_sentences)");
        d.pool = read_conllu_file(e.train);
        for (auto& s : read_optional(e.dev)) d.pool.push_back(std::move(s));
        d.test = read_conllu_file(e.test);
      }
      break;
    }
    case Setup::DomainAdaptation: {
      if (e.train.empty() || e.dev.empty() || e.target_train.empty() || e.target_test.empty())
        throw UsageError(
            "domain_adaptation needs train, dev, target_train and target_test corpora");
      d.pool = read_conllu_file(e.train);
      d.fixed_dev = cap(read_conllu_file(e.dev), e.dev_budget);
      d.full_train = d.pool;
      d.unlabeled = cap(strip_annotations(read_conllu_file(e.target_train)), e.unlabeled);
      d.tagger_dev = strip_annotations(read_optional(e.target_dev));
      d.test = read_conllu_file(e.target_test);
      break;
    }
    case Setup::LengthAdaptation: {
      Corpus pool, test;
      if (e.synth_sentences > 0) {
        pool = synth_pool();
        test = synth_test();
      } else {
        if (e.train.empty() || e.test.empty())
          throw UsageError("length_adaptation needs train and test corpora (or synth_sentences)");
        pool = read_conllu_file(e.train);
        for (auto& s : read_optional(e.dev)) pool.push_back(std::move(s));
        test = read_conllu_file(e.test);
      }
      auto [short_part, long_part] = split_by_length(pool, e.length_threshold);
      d.pool = std::move(short_part);
      d.unlabeled = cap(strip_annotations(long_part), e.unlabeled);
      d.test = split_by_length(test, e.length_threshold).second;
      if (d.test.empty()) throw DataError("length_adaptation: no test sentence is longer than the threshold");
      break;
    }
  }
  if (d.test.empty()) throw DataError("the test corpus is empty");
  return d;
}

nlohmann::json regression_json(const TaggerModel& tagger, std::span<const Sentence> test,
                               const EvalReport& eval) {
  const TaggedCorpus gold = tagger.scheme() == Scheme::LM
                                ? lm_corpus(test)
                                : derive_tagged_corpus(test, tagger.scheme());
  const AccuracyReport acc = tag_accuracy(tagger, gold);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < acc.per_sentence.size(); ++i) {
    x.push_back(acc.per_sentence[i]);
    y.push_back(eval.per_sentence[acc.sentence_index[i]].las());
  }
  nlohmann::json j = {{"tagger_test_accuracy", acc.accuracy}};
  try {
    const Regression r = regression_r2(x, y);
    j["regression"] = {{"slope", r.slope}, {"intercept", r.intercept}, {"r2", r.r2}};
  } catch (const UsageError&) {
    j["regression"] = nullptr;  // constant tagger accuracy
  }
  return j;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& experiment, const ModelConfig& model,
                                const LogFn& log,
                                const std::function<void(const ExperimentRecord&)>& on_record,
                                const std::filesystem::path& archive_dir) {
  model.validate();
  const ExperimentData data = load_data(experiment);
  const std::optional<PretrainedEmbeddings> pretrained =
      load_pretrained_or_fallback(model.embeddings, model.word_dim);
  if (!model.embeddings.empty() && !pretrained && log)
    log("embeddings file " + model.embeddings + " not found; using random word vectors");
  std::vector<std::string> models = experiment.models;
  std::sort(models.begin(), models.end(),
            [](const auto& a, const auto& b) { return model_rank(a) < model_rank(b); });
  models.erase(std::unique(models.begin(), models.end()), models.end());

  std::vector<DepTree> test_gold;
  std::vector<std::vector<std::string>> test_pos;
  for (const auto& s : data.test) {
    test_gold.push_back(tree_from_sentence(s));
    test_pos.push_back(s.pos());
  }

  ExperimentResult result;
  for (const std::uint64_t seed : experiment.seeds) {
    ModelConfig cfg = model;
    cfg.seed = seed;
    if (log) log("seed " + std::to_string(seed));

    Corpus labeled, dev, unlabeled, full_train;
    const bool fixed_dev = experiment.setup == Setup::DomainAdaptation;
    const std::size_t n_dev = fixed_dev ? 0
                              : experiment.dev_budget > 0
                                  ? static_cast<std::size_t>(experiment.dev_budget)
                                  : data.pool.size() / 10;
    if (n_dev > data.pool.size())
      throw UsageError("dev budget exceeds the labeled pool (" +
                       std::to_string(data.pool.size()) + " sentences)");
    const std::size_t n_train = experiment.budget > 0
                                    ? static_cast<std::size_t>(experiment.budget)
                                    : data.pool.size() - n_dev;
    const SplitIndices idx = split_indices(data.pool.size(), n_train, n_dev, seed);
    labeled = pick(data.pool, idx.labeled);
    dev = fixed_dev ? data.fixed_dev : pick(data.pool, idx.dev);
    if (experiment.setup == Setup::LightlySupervised) {
      unlabeled = cap(strip_annotations(pick(data.pool, idx.unlabeled)), experiment.unlabeled);
      // All labeled data available: everything except dev.
      std::vector<std::size_t> rest = idx.labeled;
      rest.insert(rest.end(), idx.unlabeled.begin(), idx.unlabeled.end());
      std::sort(rest.begin(), rest.end());
      full_train = pick(data.pool, rest);
    } else {
      unlabeled = data.unlabeled;
      if (experiment.setup == Setup::DomainAdaptation) {
        full_train = data.full_train;
      } else {
        std::vector<std::size_t> rest = idx.labeled;
        rest.insert(rest.end(), idx.unlabeled.begin(), idx.unlabeled.end());
        std::sort(rest.begin(), rest.end());
        full_train = pick(data.pool, rest);
      }
    }

    PipelineOptions opts;
    opts.model = cfg;
    opts.freeze = experiment.freeze;
    opts.rg_freeze = experiment.rg_freeze;
    opts.log = log;
    opts.pretrained = pretrained ? &*pretrained : nullptr;
    if (!data.tagger_dev.empty()) opts.tagger_dev = data.tagger_dev;
    if (!archive_dir.empty()) opts.archive_dir = archive_dir / ("seed-" + std::to_string(seed));
    Pipeline pipeline(labeled, dev, unlabeled, opts);

    std::optional<EvalReport> base_eval;
    for (const auto& name : models) {
      ExperimentRecord rec;
      rec.model = name;
      rec.seed = seed;
      const ParserModel* parser = nullptr;
      ParserModel owned;
      std::optional<Scheme> single;
      if (name == "Base") {
        parser = &pipeline.base();
        rec.details["dev_las"] = pipeline.report()["base"]["dev_las"];
      } else if (name == "Base-FS") {
        TrainReport r;
        owned = train_parser(full_train, dev, cfg, &r, opts.pretrained, log);
        rec.details = {{"dev_las", r.best_dev}, {"train_sentences", full_train.size()}};
        parser = &owned;
      } else if (name == "Base+RG") {
        HybridRun run = pipeline.random_gating();
        rec.details = run.report;
        owned = std::move(run.parser);
        parser = &owned;
      } else if (name == "Self-Training") {
        owned = pipeline.self_training();
        rec.details = pipeline.report()["self_training"];
        rec.details.erase("train");
        parser = &owned;
      } else {
        std::vector<Scheme> schemes;
        if (name == "DCST-ENS")
          schemes = {Scheme::NC, Scheme::DR, Scheme::RPE};
        else
          schemes = {parse_scheme(name.substr(5))};
        if (schemes.size() == 1) single = schemes[0];
        HybridRun run = pipeline.hybrid(schemes);
        rec.details = run.report;
        rec.details.erase("train");
        nlohmann::json tagger_dev = nlohmann::json::object();
        for (Scheme s : schemes) {
          const std::string sn(scheme_name(s));
          tagger_dev[sn] = pipeline.report()["taggers"][sn]["dev_accuracy"];
        }
        rec.details["tagger_dev_accuracy"] = std::move(tagger_dev);
        owned = std::move(run.parser);
        parser = &owned;
      }
      if (name == "Base+RG") rec.details.erase("train");

      const std::vector<DepTree> pred = parser->predict(data.test);
      rec.eval = evaluate(test_gold, pred, test_pos, experiment.pdh_mode);
      if (single) {
        nlohmann::json reg = regression_json(pipeline.tagger(*single), data.test, rec.eval);
        rec.details.update(reg);
      }
      if (name == "Base") {
        base_eval = rec.eval;
      } else if (base_eval) {
        try {
          const TTest t = paired_t_test(rec.eval.sentence_uas(), base_eval->sentence_uas());
          rec.details["vs_base_uas"] = {{"t", t.t}, {"p", t.p}};
        } catch (const UsageError&) {
          rec.details["vs_base_uas"] = nullptr;  // identical per-sentence scores
        }
      }
      if (log) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s seed %llu: test UAS %.2f LAS %.2f", name.c_str(),
                      static_cast<unsigned long long>(seed), 100.0 * rec.eval.uas,
                      100.0 * rec.eval.las);
        log(buf);
      }
      if (on_record) on_record(rec);
      result.records.push_back(std::move(rec));
    }
  }
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const ExperimentRecord& a, const ExperimentRecord& b) {
                     if (a.model != b.model) return model_rank(a.model) < model_rank(b.model);
                     return a.seed < b.seed;
                   });
  return result;
}

nlohmann::json ExperimentResult::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : records)
    rows.push_back({{"model", r.model},
                    {"seed", r.seed},
                    {"metrics", r.eval.to_json()},
                    {"details", r.details}});
  nlohmann::json means = nlohmann::json::object();
  for (const auto& name : experiment_models()) {
    double uas = 0, las = 0;
    int n = 0;
    for (const auto& r : records)
      if (r.model == name) {
        uas += r.eval.uas;
        las += r.eval.las;
        ++n;
      }
    if (n > 0) means[name] = {{"uas", uas / n}, {"las", las / n}, {"seeds", n}};
  }
  return {{"records", rows}, {"means", means}};
}

double ExperimentResult::mean_uas(const std::string& model) const {
  double total = 0;
  int n = 0;
  for (const auto& r : records)
    if (r.model == model) {
      total += r.eval.uas;
      ++n;
    }
  if (n == 0) throw UsageError("no records for model " + model);
  return total / n;
}

std::string ExperimentResult::table() const {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-14s %6s %7s %7s %7s %7s %7s %7s\n", "model", "seed", "UAS",
                "LAS", "AD-NC", "AD-DR", "AD-PDH", "POS-HE");
  out += buf;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    std::snprintf(buf, sizeof buf, "%-14s %6llu %7.2f %7.2f %7.3f %7.3f %7.3f %7.3f\n",
                  r.model.c_str(), static_cast<unsigned long long>(r.seed), 100.0 * r.eval.uas,
                  100.0 * r.eval.las, r.eval.ad_nc, r.eval.ad_dr, r.eval.ad_pdh,
                  r.eval.pos_head_error);
    out += buf;
    const bool last_of_model = i + 1 == records.size() || records[i + 1].model != r.model;
    if (!last_of_model) continue;
    double uas = 0, las = 0, nc = 0, dr = 0, pdh = 0, phe = 0;
    int n = 0;
    for (const auto& q : records)
      if (q.model == r.model) {
        uas += q.eval.uas;
        las += q.eval.las;
        nc += q.eval.ad_nc;
        dr += q.eval.ad_dr;
        pdh += q.eval.ad_pdh;
        phe += q.eval.pos_head_error;
        ++n;
      }
    if (n < 2) continue;
    std::snprintf(buf, sizeof buf, "%-14s %6s %7.2f %7.2f %7.3f %7.3f %7.3f %7.3f\n",
                  r.model.c_str(), "mean", 100.0 * uas / n, 100.0 * las / n, nc / n, dr / n,
                  pdh / n, phe / n);
    out += buf;
  }
  return out;
}

}  // namespace dcst
