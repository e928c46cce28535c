// dcst: command-line front end of the dcst library.
//
//   dcst train-base   --train L.conllu [--dev dev.conllu] --out DIR
//   dcst parse        --model DIR --input raw.conllu --out pred.conllu
//   dcst encode-tags  --scheme nc|dr|rpe --input trees.conllu --out tags.txt
//   dcst train-tagger --scheme S --input tags-or-trees [--dev ...] --out DIR
//   dcst selftrain    --mode dcst|classic|rg|lm [--schemes nc,dr,rpe] --labeled L
//                     --unlabeled U [--dev dev] --out DIR
//   dcst evaluate     --gold g.conllu --pred p.conllu [--pos-source gold|pred]
//   dcst experiment   --config run.cfg [--out DIR]
//   dcst synth-corpus --seed K --n N --out DIR
//
// Every subcommand accepts --config FILE and repeated --set key=value (flags
// win over the file). Exit codes: 0 success, 1 usage, 2 data, 3 numeric.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dcst/dcst.h"

namespace {

struct ConfigDeleter {
  void operator()(dcst_config* c) const { dcst_config_free(c); }
};
using ConfigPtr = std::unique_ptr<dcst_config, ConfigDeleter>;

struct CommonOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  std::string seed;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonOptions& common) {
  cmd->add_option("--config", common.config_file, "key=value configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", common.overrides, "override one key (key=value), repeatable");
  cmd->add_option("--seed", common.seed, "shorthand for --set seed=K");
  cmd->add_flag("-q,--quiet", common.quiet, "do not echo progress lines to stderr");
}

void echo_line(void* user, const char* line) {
  if (user == nullptr) std::fprintf(stderr, "%s\n", line);
}

dcst_log_fn log_fn(const CommonOptions& common) {
  return common.quiet ? nullptr : &echo_line;
}

int report(dcst_status status) {
  if (status != DCST_OK) std::fprintf(stderr, "dcst: error: %s\n", dcst_last_error());
  return static_cast<int>(status);
}

// Builds the configuration: defaults < --config file < --set / --seed flags.
dcst_status make_config(const CommonOptions& common, ConfigPtr& out) {
  dcst_config* raw = nullptr;
  if (dcst_status st = dcst_config_new(&raw); st != DCST_OK) return st;
  out.reset(raw);
  if (!common.config_file.empty())
    if (dcst_status st = dcst_config_load(raw, common.config_file.c_str()); st != DCST_OK)
      return st;
  for (const auto& kv : common.overrides)
    if (dcst_status st = dcst_config_assign(raw, kv.c_str()); st != DCST_OK) return st;
  if (!common.seed.empty())
    if (dcst_status st = dcst_config_set(raw, "seed", common.seed.c_str()); st != DCST_OK)
      return st;
  return DCST_OK;
}

void print_file(const std::string& path) {
  std::ifstream in(path);
  if (in) std::cout << in.rdbuf();
  std::cout.flush();
}

const char* c_or_null(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

std::string default_out_dir(const std::string& name) {
  const char* base = std::getenv("DCST_OUT_DIR");
  return (base && *base ? std::string(base) + "/" : std::string()) + name;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dcst: dependency parsing with deep contextualized self-training"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(dcst_version()));

  CommonOptions common;
  std::string train, dev, out, model, input, scheme, mode, schemes, labeled, unlabeled, gold,
      pred, pos_source = "gold";
  std::uint64_t synth_seed = 1;
  std::size_t synth_n = 0;

  auto* train_base = app.add_subcommand("train-base", "train the base parser on labeled trees");
  add_common(train_base, common);
  train_base->add_option("--train", train, "labeled CoNLL-U")->required();
  train_base->add_option("--dev", dev, "dev CoNLL-U (early stopping)");
  train_base->add_option("--out", out, "run directory")->required();

  auto* parse = app.add_subcommand("parse", "parse CoNLL-U sentences with a trained parser");
  add_common(parse, common);
  parse->add_option("--model", model, "run directory or parser archive")->required();
  parse->add_option("--input", input, "CoNLL-U input")->required();
  parse->add_option("--out", out, "CoNLL-U output")->required();

  auto* encode_tags = app.add_subcommand("encode-tags", "dump the tag encoding of gold trees");
  add_common(encode_tags, common);
  encode_tags->add_option("--scheme", scheme, "nc, dr or rpe")->required();
  encode_tags->add_option("--input", input, "CoNLL-U trees")->required();
  encode_tags->add_option("--out", out, "two-column tag file")->required();

  auto* train_tagger = app.add_subcommand("train-tagger", "train one sequence tagger");
  add_common(train_tagger, common);
  train_tagger->add_option("--scheme", scheme, "nc, dr, rpe or lm")->required();
  train_tagger->add_option("--input", input, "CoNLL-U trees or a two-column tag file")
      ->required();
  train_tagger->add_option("--dev", dev, "dev data in the same formats");
  train_tagger->add_option("--out", out, "run directory")->required();

  auto* selftrain = app.add_subcommand("selftrain", "self-training with unlabeled data");
  add_common(selftrain, common);
  selftrain->add_option("--mode", mode, "dcst, classic, rg or lm")->required();
  selftrain->add_option("--schemes", schemes, "comma-separated schemes for --mode dcst");
  selftrain->add_option("--labeled", labeled, "labeled CoNLL-U (L)")->required();
  selftrain->add_option("--unlabeled", unlabeled, "unlabeled CoNLL-U (U)");
  selftrain->add_option("--dev", dev, "dev CoNLL-U");
  selftrain->add_option("--out", out, "run directory")->required();

  auto* evaluate = app.add_subcommand("evaluate", "score predicted trees against gold trees");
  add_common(evaluate, common);
  evaluate->add_option("--gold", gold, "gold CoNLL-U")->required();
  evaluate->add_option("--pred", pred, "predicted CoNLL-U")->required();
  evaluate->add_option("--pos-source", pos_source, "POS tags for POS-head errors: gold or pred")
      ->check(CLI::IsMember({"gold", "pred"}));
  evaluate->add_option("--out", out, "optional directory for report.json / report.txt");

  auto* experiment = app.add_subcommand("experiment", "run a full model comparison");
  add_common(experiment, common);
  experiment->add_option("--out", out, "run directory (default: $DCST_OUT_DIR/experiment)");

  auto* synth = app.add_subcommand("synth-corpus", "generate a synthetic treebank");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--n", synth_n, "number of sentences")->required();
  synth->add_option("--out", out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (synth->parsed()) {
    if (dcst_status st = dcst_run_synth_corpus(synth_seed, synth_n, out.c_str()); st != DCST_OK)
      return report(st);
    std::printf("wrote %zu sentences to %s/synth.conllu\n", synth_n, out.c_str());
    return 0;
  }

  ConfigPtr config;
  if (dcst_status st = make_config(common, config); st != DCST_OK) return report(st);
  const dcst_log_fn log = log_fn(common);

  if (train_base->parsed()) {
    dcst_status st = dcst_run_train_base(config.get(), train.c_str(), c_or_null(dev), out.c_str(),
                                         log, nullptr);
    if (st == DCST_OK) print_file(out + "/report.txt");
    return report(st);
  }
  if (parse->parsed()) {
    std::size_t n = 0;
    dcst_status st = dcst_run_parse(model.c_str(), input.c_str(), out.c_str(), &n);
    if (st == DCST_OK) std::printf("parsed %zu sentences into %s\n", n, out.c_str());
    return report(st);
  }
  if (encode_tags->parsed()) {
    std::size_t n = 0;
    dcst_status st = dcst_run_encode_tags(scheme.c_str(), input.c_str(), out.c_str(), &n);
    if (st == DCST_OK) std::printf("encoded %zu sentences into %s\n", n, out.c_str());
    return report(st);
  }
  if (train_tagger->parsed()) {
    dcst_status st = dcst_run_train_tagger(config.get(), scheme.c_str(), input.c_str(),
                                           c_or_null(dev), out.c_str(), log, nullptr);
    if (st == DCST_OK) print_file(out + "/report.txt");
    return report(st);
  }
  if (selftrain->parsed()) {
    dcst_status st =
        dcst_run_selftrain(config.get(), mode.c_str(), c_or_null(schemes), labeled.c_str(),
                           c_or_null(unlabeled), c_or_null(dev), out.c_str(), log, nullptr);
    if (st == DCST_OK) print_file(out + "/report.txt");
    return report(st);
  }
  if (evaluate->parsed()) {
    dcst_eval_summary s{};
    dcst_status st = dcst_run_evaluate(config.get(), gold.c_str(), pred.c_str(),
                                       pos_source == "pred", c_or_null(out), &s);
    if (st == DCST_OK) {
      std::printf("sentences %zu tokens %zu\n", s.sentences, s.tokens);
      std::printf("UAS %.3f\nLAS %.3f\n", s.uas, s.las);
      std::printf("AD-NC %.4f\nAD-DR %.4f\nAD-PDH %.4f\nPOS-head error %.4f\n", s.ad_nc,
                  s.ad_dr, s.ad_pdh, s.pos_head_error);
    }
    return report(st);
  }
  if (experiment->parsed()) {
    if (common.config_file.empty() && common.overrides.empty()) {
      std::fprintf(stderr, "dcst: error: experiment needs --config or --set\n");
      return DCST_ERR_USAGE;
    }
    if (out.empty()) out = default_out_dir("experiment");
    dcst_status st = dcst_run_experiment(config.get(), out.c_str(), log, nullptr);
    if (st == DCST_OK) print_file(out + "/report.txt");
    return report(st);
  }
  return DCST_ERR_USAGE;
}
