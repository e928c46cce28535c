#include "dcst/commands.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <optional>

#include "dcst/conllu.hpp"
#include "dcst/embeddings.hpp"
#include "dcst/errors.hpp"
#include "dcst/synth.hpp"
#include "dcst/tagger.hpp"

namespace dcst {
namespace fs = std::filesystem;

namespace {

// Output directory of one command: echoes the resolved configuration, keeps
// log.txt open and writes the closing report files.
class RunDir {
 public:
  RunDir(fs::path out, const RunConfig* config, LogFn echo)
      : out_(std::move(out)), echo_(std::move(echo)), start_(std::chrono::steady_clock::now()) {
    if (out_.empty()) throw UsageError("an output directory is required");
    fs::create_directories(out_);
    if (config) write_text_file(out_ / "config.resolved", config->resolved_text());
    log_.open(out_ / "log.txt", std::ios::trunc);
    if (!log_) throw DataError("cannot open " + (out_ / "log.txt").string() + " for writing");
  }

  const fs::path& path() const noexcept { return out_; }

  LogFn logger() {
    return [this](const std::string& line) {
      log_ << line << '\n';
      log_.flush();
      if (echo_) echo_(line);
    };
  }

  void finish(const nlohmann::json& report, const std::string& text,
              nlohmann::json timings = nlohmann::json::object()) {
    write_text_file(out_ / "report.json", report.dump(2) + "\n");
    write_text_file(out_ / "report.txt", text);
    timings["total"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text_file(out_ / "timings.json", timings.dump(2) + "\n");
  }

 private:
  fs::path out_;
  LogFn echo_;
  std::chrono::steady_clock::time_point start_;
  std::ofstream log_;
};

std::optional<PretrainedEmbeddings> load_embeddings(const ModelConfig& model) {
  return load_pretrained_or_fallback(model.embeddings, model.word_dim);
}

void note_embeddings(const ModelConfig& model, bool loaded, const LogFn& log) {
  if (!model.embeddings.empty() && !loaded)
    log("embeddings file " + model.embeddings + " not found; using random word vectors");
}

Corpus read_optional(const fs::path& path) {
  return path.empty() ? Corpus{} : read_conllu_file(path);
}

Corpus require_trees(Corpus corpus, const fs::path& path) {
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (!corpus[i].has_heads())
      throw DataError("sentence " + std::to_string(i + 1) + " has no gold heads", path.string());
  return corpus;
}

EvalReport evaluate_parser(const ParserModel& parser, const Corpus& gold, PdhMode mode) {
  std::vector<DepTree> trees;
  std::vector<std::vector<std::string>> pos;
  for (const auto& s : gold) {
    trees.push_back(tree_from_sentence(s));
    pos.push_back(s.pos());
  }
  return evaluate(trees, parser.predict(gold), pos, mode);
}

// CoNLL-U rows have ten tab-separated fields; tag files have two.
bool looks_like_conllu(std::string_view text) {
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty() || line.front() == '#' || line.find_first_not_of(" \t\r") == line.npos)
      continue;
    return std::count(line.begin(), line.end(), '\t') >= 9;
  }
  return true;
}

TaggedCorpus read_tagged(const fs::path& path, Scheme scheme) {
  const std::string text = read_text_file(path);
  if (looks_like_conllu(text)) {
    Corpus corpus = parse_conllu(text, path.string());
    if (scheme == Scheme::LM) return lm_corpus(corpus);
    return derive_tagged_corpus(require_trees(std::move(corpus), path), scheme);
  }
  TaggedCorpus out;
  out.scheme = scheme;
  for (auto& entry : parse_tag_file(text, path.string())) {
    Sentence s;
    for (std::size_t i = 0; i < entry.forms.size(); ++i) {
      Token t;
      t.id = static_cast<int>(i) + 1;
      t.form = entry.forms[i];
      s.tokens.push_back(std::move(t));
    }
    out.sentences.push_back(std::move(s));
    out.tags.push_back(TagSequence{scheme, std::move(entry.tags)});
  }
  if (scheme == Scheme::LM) return lm_corpus(out.sentences);
  return out;
}

std::string describe_tagger(const TrainReport& r, double dev_accuracy, bool has_dev) {
  char buf[200];
  if (has_dev)
    std::snprintf(buf, sizeof buf, "epochs %d, best epoch %d, dev accuracy %.4f\n",
                  r.epochs_run, r.best_epoch, dev_accuracy);
  else
    std::snprintf(buf, sizeof buf, "epochs %d, no dev data\n", r.epochs_run);
  return buf;
}

}  // namespace

SelftrainMode parse_selftrain_mode(std::string_view name) {
  if (name == "dcst") return SelftrainMode::Dcst;
  if (name == "classic") return SelftrainMode::Classic;
  if (name == "rg") return SelftrainMode::RandomGating;
  if (name == "lm") return SelftrainMode::LanguageModel;
  throw UsageError("unknown selftrain mode '" + std::string(name) +
                   "' (expected dcst, classic, rg or lm)");
}

std::string_view selftrain_mode_name(SelftrainMode mode) {
  switch (mode) {
    case SelftrainMode::Dcst: return "dcst";
    case SelftrainMode::Classic: return "classic";
    case SelftrainMode::RandomGating: return "rg";
    case SelftrainMode::LanguageModel: return "lm";
  }
  return "dcst";
}

fs::path resolve_parser_archive(const fs::path& model) {
  if (fs::is_directory(model)) {
    const fs::path p = model / kParserArchive;
    if (!fs::exists(p)) throw DataError("no " + std::string(kParserArchive) + " in " + model.string());
    return p;
  }
  if (!fs::exists(model)) throw DataError("model not found: " + model.string());
  return model;
}

nlohmann::json cmd_train_base(const RunConfig& config, const fs::path& train, const fs::path& dev,
                              const fs::path& out, const LogFn& echo) {
  const ModelConfig model = config.model();
  const PdhMode pdh = config.experiment().pdh_mode;
  const Corpus train_set = require_trees(read_conllu_file(train), train);
  const Corpus dev_set = require_trees(read_optional(dev), dev);
  const auto pretrained = load_embeddings(model);

  RunDir run(out, &config, echo);
  LogFn log = run.logger();
  note_embeddings(model, pretrained.has_value(), log);
  log("train-base: " + std::to_string(train_set.size()) + " training sentences, " +
      std::to_string(dev_set.size()) + " dev sentences");
  TrainReport r;
  ParserModel parser =
      train_parser(train_set, dev_set, model, &r, pretrained ? &*pretrained : nullptr, log);
  write_archive(run.path() / kParserArchive, parser.to_archive());

  nlohmann::json report = {{"command", "train-base"},
                           {"inputs", {{"train", train.string()}, {"dev", dev.string()}}},
                           {"config", model.to_json()},
                           {"train", r.to_json()}};
  std::string text = "train-base\n";
  if (!dev_set.empty()) {
    const EvalReport eval = evaluate_parser(parser, dev_set, pdh);
    report["dev_metrics"] = eval.to_json();
    text += eval.to_text();
  }
  run.finish(report, text);
  return report;
}

std::size_t cmd_parse(const fs::path& model, const fs::path& input, const fs::path& out) {
  const ParserModel parser = ParserModel::from_archive(read_archive(resolve_parser_archive(model)));
  const Corpus sentences = read_conllu_file(input);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_conllu_file(out, parser.parse(sentences));
  return sentences.size();
}

std::size_t cmd_encode_tags(Scheme scheme, const fs::path& input, const fs::path& out) {
  if (scheme == Scheme::LM) throw UsageError("encode-tags supports nc, dr and rpe");
  const TaggedCorpus tagged = derive_tagged_corpus(require_trees(read_conllu_file(input), input), scheme);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_text_file(out, write_tag_file(tagged.sentences, tagged.tags));
  return tagged.size();
}

nlohmann::json cmd_train_tagger(const RunConfig& config, Scheme scheme, const fs::path& input,
                                const fs::path& dev, const fs::path& out, const LogFn& echo) {
  const ModelConfig model = config.model();
  const TaggedCorpus train = read_tagged(input, scheme);
  const TaggedCorpus dev_set = dev.empty() ? TaggedCorpus{scheme, {}, {}} : read_tagged(dev, scheme);
  const auto pretrained = load_embeddings(model);

  RunDir run(out, &config, echo);
  LogFn log = run.logger();
  note_embeddings(model, pretrained.has_value(), log);
  log("train-tagger: scheme " + std::string(scheme_name(scheme)) + ", " +
      std::to_string(train.size()) + " training sentences");
  TrainReport r;
  TaggerModel tagger;
  if (scheme == Scheme::LM)
    tagger = train_lm_tagger(train.sentences, dev_set.sentences, model, &r,
                             pretrained ? &*pretrained : nullptr, log);
  else
    tagger = train_tagger(train, dev_set, model, &r, pretrained ? &*pretrained : nullptr, log);
  write_archive(run.path() / kTaggerArchive, tagger.to_archive());

  nlohmann::json report = {{"command", "train-tagger"},
                           {"scheme", scheme_name(scheme)},
                           {"inputs", {{"train", input.string()}, {"dev", dev.string()}}},
                           {"config", model.to_json()},
                           {"train", r.to_json()}};
  double dev_accuracy = 0.0;
  if (!dev_set.empty()) {
    dev_accuracy = tag_accuracy(tagger, dev_set).accuracy;
    report["dev_accuracy"] = dev_accuracy;
  }
  report["train_accuracy"] = tag_accuracy(tagger, train).accuracy;
  run.finish(report, "train-tagger " + std::string(scheme_name(scheme)) + ": " +
                         describe_tagger(r, dev_accuracy, !dev_set.empty()));
  return report;
}

nlohmann::json cmd_selftrain(const RunConfig& config, SelftrainMode mode,
                             std::span<const Scheme> schemes, const fs::path& labeled,
                             const fs::path& unlabeled, const fs::path& dev, const fs::path& out,
                             const LogFn& echo) {
  const ModelConfig model = config.model();
  const ExperimentConfig experiment = config.experiment();
  if (mode == SelftrainMode::Dcst) {
    if (schemes.empty()) throw UsageError("selftrain --mode dcst needs --schemes");
    for (Scheme s : schemes)
      if (s == Scheme::LM) throw UsageError("use --mode lm for the language-model tagger");
  }
  Corpus labeled_set = require_trees(read_conllu_file(labeled), labeled);
  Corpus dev_set = require_trees(read_optional(dev), dev);
  Corpus unlabeled_set;
  if (mode != SelftrainMode::RandomGating) {
    if (unlabeled.empty()) throw UsageError("selftrain needs --unlabeled");
    unlabeled_set = strip_annotations(read_conllu_file(unlabeled));
  }
  const auto pretrained = load_embeddings(model);

  RunDir run(out, &config, echo);
  note_embeddings(model, pretrained.has_value(), run.logger());
  PipelineOptions options;
  options.model = model;
  options.freeze = experiment.freeze;
  options.rg_freeze = experiment.rg_freeze;
  options.pretrained = pretrained ? &*pretrained : nullptr;
  options.archive_dir = run.path();
  options.log = run.logger();
  options.log("selftrain: mode " + std::string(selftrain_mode_name(mode)) + ", |L| = " +
              std::to_string(labeled_set.size()) + ", |U| = " +
              std::to_string(unlabeled_set.size()) + ", |dev| = " + std::to_string(dev_set.size()));
  Pipeline pipeline(std::move(labeled_set), dev_set, std::move(unlabeled_set), options);

  ParserModel final_parser;
  switch (mode) {
    case SelftrainMode::Dcst: final_parser = pipeline.hybrid(schemes).parser; break;
    case SelftrainMode::Classic: final_parser = pipeline.self_training(); break;
    case SelftrainMode::RandomGating: final_parser = pipeline.random_gating().parser; break;
    case SelftrainMode::LanguageModel: {
      const Scheme lm[] = {Scheme::LM};
      final_parser = pipeline.hybrid(lm).parser;
      break;
    }
  }
  write_archive(run.path() / kParserArchive, final_parser.to_archive());

  nlohmann::json scheme_names = nlohmann::json::array();
  for (Scheme s : schemes) scheme_names.push_back(scheme_name(s));
  nlohmann::json report = {
      {"command", "selftrain"},
      {"mode", selftrain_mode_name(mode)},
      {"schemes", scheme_names},
      {"inputs",
       {{"labeled", labeled.string()}, {"unlabeled", unlabeled.string()}, {"dev", dev.string()}}},
      {"config", model.to_json()},
      {"freeze", freeze_name(experiment.freeze)},
      {"stages", pipeline.report()}};
  std::string text = "selftrain " + std::string(selftrain_mode_name(mode)) + "\n";
  if (!dev_set.empty()) {
    const EvalReport eval = evaluate_parser(final_parser, dev_set, experiment.pdh_mode);
    report["dev_metrics"] = eval.to_json();
    text += eval.to_text();
  }
  run.finish(report, text, pipeline.timings());
  return report;
}

EvalReport cmd_evaluate(const fs::path& gold, const fs::path& pred, bool pos_from_pred,
                        PdhMode mode, const fs::path& out) {
  const Corpus gold_set = require_trees(read_conllu_file(gold), gold);
  const Corpus pred_set = require_trees(read_conllu_file(pred), pred);
  EvalReport report = evaluate(gold_set, pred_set, mode, pos_from_pred);
  if (!out.empty()) {
    fs::create_directories(out);
    write_text_file(out / "report.json", report.to_json(true).dump(2) + "\n");
    write_text_file(out / "report.txt", report.to_text());
  }
  return report;
}

ExperimentResult cmd_experiment(const RunConfig& config, const fs::path& out, const LogFn& echo) {
  const ModelConfig model = config.model();
  const ExperimentConfig experiment = config.experiment();
  RunDir run(out, &config, echo);
  LogFn log = run.logger();
  ExperimentResult result =
      run_experiment(experiment, model, log, {}, run.path() / "archives");
  nlohmann::json report = result.to_json();
  report["command"] = "experiment";
  report["setup"] = setup_name(experiment.setup);
  report["config"] = model.to_json();
  run.finish(report, result.table());
  return result;
}

fs::path cmd_synth_corpus(std::uint64_t seed, std::size_t n, const fs::path& out) {
  if (n == 0) throw UsageError("synth-corpus needs --n > 0");
  if (out.empty()) throw UsageError("an output directory is required");
  fs::create_directories(out);
  const fs::path path = out / "synth.conllu";
  write_conllu_file(path, generate_synthetic_corpus(n, seed));
  return path;
}

}  // namespace dcst
