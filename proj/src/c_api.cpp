#include "dcst/dcst.h"

#include <cstring>
#include <filesystem>
#include <string>

#include "dcst/commands.hpp"
#include "dcst/config.hpp"
#include "dcst/conllu.hpp"
#include "dcst/errors.hpp"
#include "dcst/metrics.hpp"
#include "dcst/parser.hpp"
#include "dcst/synth.hpp"
#include "dcst/tagger.hpp"

struct dcst_config {
  dcst::RunConfig config;
};
struct dcst_corpus {
  dcst::Corpus sentences;
};
struct dcst_parser {
  dcst::ParserModel model;
};
struct dcst_tagger {
  dcst::TaggerModel model;
};

namespace {

thread_local std::string g_last_error;

dcst_status fail(dcst_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `fn`, translating exceptions into status codes.
template <class Fn>
dcst_status guarded(Fn&& fn) {
  try {
    fn();
    return DCST_OK;
  } catch (const dcst::UsageError& e) {
    return fail(DCST_ERR_USAGE, e.what());
  } catch (const dcst::DataError& e) {
    return fail(DCST_ERR_DATA, e.what());
  } catch (const dcst::NumericError& e) {
    return fail(DCST_ERR_NUMERIC, e.what());
  } catch (const dcst::ShapeError& e) {
    return fail(DCST_ERR_USAGE, std::string("shape mismatch: ") + e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(DCST_ERR_DATA, std::string("malformed archive metadata: ") + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(DCST_ERR_DATA, e.what());
  } catch (const std::exception& e) {
    return fail(DCST_ERR_DATA, e.what());
  }
}

#define DCST_REQUIRE(cond, what)                                     \
  do {                                                               \
    if (!(cond)) return fail(DCST_ERR_USAGE, std::string(what));     \
  } while (0)

std::filesystem::path opt_path(const char* p) {
  return p ? std::filesystem::path(p) : std::filesystem::path();
}

dcst_status copy_out(const std::string& text, char* buffer, std::size_t capacity,
                     std::size_t* length) {
  if (length) *length = text.size();
  if (buffer && capacity > 0) {
    const std::size_t n = std::min(capacity - 1, text.size());
    std::memcpy(buffer, text.data(), n);
    buffer[n] = '\0';
  }
  return DCST_OK;
}

dcst::LogFn make_log(dcst_log_fn log, void* user) {
  if (!log) return {};
  return [log, user](const std::string& line) { log(user, line.c_str()); };
}

void fill_summary(const dcst::EvalReport& r, dcst_eval_summary* out) {
  out->uas = r.uas;
  out->las = r.las;
  out->ad_nc = r.ad_nc;
  out->ad_dr = r.ad_dr;
  out->ad_pdh = r.ad_pdh;
  out->pos_head_error = r.pos_head_error;
  out->sentences = r.sentences;
  out->tokens = r.tokens;
}

}  // namespace

extern "C" {

DCST_API const char* dcst_last_error(void) { return g_last_error.c_str(); }

DCST_API const char* dcst_version(void) { return "1.0.0"; }

// ---- configuration ----------------------------------------------------------------

DCST_API dcst_status dcst_config_new(dcst_config** out) {
  DCST_REQUIRE(out, "dcst_config_new: out is NULL");
  return guarded([&] { *out = new dcst_config(); });
}

DCST_API void dcst_config_free(dcst_config* config) { delete config; }

DCST_API dcst_status dcst_config_load(dcst_config* config, const char* path) {
  DCST_REQUIRE(config && path, "dcst_config_load: NULL argument");
  return guarded([&] { config->config.load_file(path); });
}

DCST_API dcst_status dcst_config_set(dcst_config* config, const char* key, const char* value) {
  DCST_REQUIRE(config && key && value, "dcst_config_set: NULL argument");
  return guarded([&] { config->config.set(key, value); });
}

DCST_API dcst_status dcst_config_assign(dcst_config* config, const char* assignment) {
  DCST_REQUIRE(config && assignment, "dcst_config_assign: NULL argument");
  return guarded([&] { config->config.set_assignment(assignment); });
}

DCST_API dcst_status dcst_config_get(const dcst_config* config, const char* key, char* buffer,
                                     size_t capacity, size_t* length) {
  DCST_REQUIRE(config && key, "dcst_config_get: NULL argument");
  std::string value;
  const dcst_status st = guarded([&] { value = config->config.get(key); });
  if (st != DCST_OK) return st;
  return copy_out(value, buffer, capacity, length);
}

DCST_API dcst_status dcst_config_resolved(const dcst_config* config, char* buffer,
                                          size_t capacity, size_t* length) {
  DCST_REQUIRE(config, "dcst_config_resolved: config is NULL");
  std::string text;
  const dcst_status st = guarded([&] { text = config->config.resolved_text(); });
  if (st != DCST_OK) return st;
  return copy_out(text, buffer, capacity, length);
}

// ---- corpora ------------------------------------------------------------------------

DCST_API dcst_status dcst_corpus_read(const char* path, dcst_corpus** out) {
  DCST_REQUIRE(path && out, "dcst_corpus_read: NULL argument");
  return guarded([&] { *out = new dcst_corpus{dcst::read_conllu_file(path)}; });
}

DCST_API dcst_status dcst_corpus_synthetic(uint64_t seed, size_t sentences, dcst_corpus** out) {
  DCST_REQUIRE(out, "dcst_corpus_synthetic: out is NULL");
  return guarded(
      [&] { *out = new dcst_corpus{dcst::generate_synthetic_corpus(sentences, seed)}; });
}

DCST_API dcst_status dcst_corpus_write(const dcst_corpus* corpus, const char* path) {
  DCST_REQUIRE(corpus && path, "dcst_corpus_write: NULL argument");
  return guarded([&] { dcst::write_conllu_file(path, corpus->sentences); });
}

DCST_API size_t dcst_corpus_size(const dcst_corpus* corpus) {
  return corpus ? corpus->sentences.size() : 0;
}

DCST_API size_t dcst_corpus_sentence_length(const dcst_corpus* corpus, size_t index) {
  if (!corpus || index >= corpus->sentences.size()) return 0;
  return corpus->sentences[index].size();
}

DCST_API int dcst_corpus_head(const dcst_corpus* corpus, size_t index, size_t token) {
  if (!corpus || index >= corpus->sentences.size()) return -1;
  const auto& s = corpus->sentences[index];
  if (token == 0 || token > s.size()) return -1;
  const auto& head = s.tokens[token - 1].head;
  return head ? *head : -1;
}

DCST_API void dcst_corpus_free(dcst_corpus* corpus) { delete corpus; }

// ---- parsers ------------------------------------------------------------------------

DCST_API dcst_status dcst_parser_train(const dcst_config* config, const dcst_corpus* train,
                                       const dcst_corpus* dev, dcst_log_fn log, void* user,
                                       dcst_parser** out) {
  DCST_REQUIRE(config && train && out, "dcst_parser_train: NULL argument");
  return guarded([&] {
    const dcst::Corpus empty;
    auto model = dcst::train_parser(train->sentences, dev ? dev->sentences : empty,
                                    config->config.model(), nullptr, nullptr,
                                    make_log(log, user));
    *out = new dcst_parser{std::move(model)};
  });
}

DCST_API dcst_status dcst_parser_load(const char* path, dcst_parser** out) {
  DCST_REQUIRE(path && out, "dcst_parser_load: NULL argument");
  return guarded([&] {
    auto archive = dcst::read_archive(dcst::resolve_parser_archive(path));
    *out = new dcst_parser{dcst::ParserModel::from_archive(archive)};
  });
}

DCST_API dcst_status dcst_parser_save(const dcst_parser* parser, const char* path) {
  DCST_REQUIRE(parser && path, "dcst_parser_save: NULL argument");
  return guarded([&] { dcst::write_archive(path, parser->model.to_archive()); });
}

DCST_API dcst_status dcst_parser_parse(const dcst_parser* parser, const dcst_corpus* input,
                                       dcst_corpus** out) {
  DCST_REQUIRE(parser && input && out, "dcst_parser_parse: NULL argument");
  return guarded([&] { *out = new dcst_corpus{parser->model.parse(input->sentences)}; });
}

DCST_API dcst_status dcst_parser_evaluate(const dcst_parser* parser, const dcst_corpus* gold,
                                          dcst_eval_summary* out) {
  DCST_REQUIRE(parser && gold && out, "dcst_parser_evaluate: NULL argument");
  return guarded([&] {
    const dcst::Corpus pred = parser->model.parse(gold->sentences);
    fill_summary(dcst::evaluate(gold->sentences, pred, dcst::PdhMode::Intervening, false), out);
  });
}

DCST_API void dcst_parser_free(dcst_parser* parser) { delete parser; }

// ---- taggers ------------------------------------------------------------------------

DCST_API dcst_status dcst_tagger_load(const char* path, dcst_tagger** out) {
  DCST_REQUIRE(path && out, "dcst_tagger_load: NULL argument");
  return guarded([&] {
    std::filesystem::path p(path);
    if (std::filesystem::is_directory(p)) p /= dcst::kTaggerArchive;
    *out = new dcst_tagger{dcst::TaggerModel::from_archive(dcst::read_archive(p))};
  });
}

DCST_API dcst_status dcst_tagger_save(const dcst_tagger* tagger, const char* path) {
  DCST_REQUIRE(tagger && path, "dcst_tagger_save: NULL argument");
  return guarded([&] { dcst::write_archive(path, tagger->model.to_archive()); });
}

DCST_API dcst_status dcst_tagger_accuracy(const dcst_tagger* tagger, const dcst_corpus* gold,
                                          double* accuracy) {
  DCST_REQUIRE(tagger && gold && accuracy, "dcst_tagger_accuracy: NULL argument");
  return guarded([&] {
    const dcst::Scheme scheme = tagger->model.scheme();
    const dcst::TaggedCorpus tagged = scheme == dcst::Scheme::LM
                                          ? dcst::lm_corpus(gold->sentences)
                                          : dcst::derive_tagged_corpus(gold->sentences, scheme);
    *accuracy = dcst::tag_accuracy(tagger->model, tagged).accuracy;
  });
}

DCST_API void dcst_tagger_free(dcst_tagger* tagger) { delete tagger; }

// ---- metrics ------------------------------------------------------------------------

DCST_API dcst_status dcst_evaluate(const dcst_corpus* gold, const dcst_corpus* pred,
                                   int pos_from_pred, dcst_eval_summary* out) {
  DCST_REQUIRE(gold && pred && out, "dcst_evaluate: NULL argument");
  return guarded([&] {
    fill_summary(dcst::evaluate(gold->sentences, pred->sentences, dcst::PdhMode::Intervening,
                                pos_from_pred != 0),
                 out);
  });
}

// ---- commands -----------------------------------------------------------------------

DCST_API dcst_status dcst_run_train_base(const dcst_config* config, const char* train,
                                         const char* dev, const char* out_dir, dcst_log_fn log,
                                         void* user) {
  DCST_REQUIRE(config && train && out_dir, "train-base needs a config, --train and --out");
  return guarded([&] {
    dcst::cmd_train_base(config->config, train, opt_path(dev), out_dir, make_log(log, user));
  });
}

DCST_API dcst_status dcst_run_parse(const char* model, const char* input, const char* output,
                                    size_t* sentences) {
  DCST_REQUIRE(model && input && output, "parse needs --model, --input and --out");
  return guarded([&] {
    const std::size_t n = dcst::cmd_parse(model, input, output);
    if (sentences) *sentences = n;
  });
}

DCST_API dcst_status dcst_run_encode_tags(const char* scheme, const char* input,
                                          const char* output, size_t* sentences) {
  DCST_REQUIRE(scheme && input && output, "encode-tags needs --scheme, --input and --out");
  return guarded([&] {
    const std::size_t n = dcst::cmd_encode_tags(dcst::parse_scheme(scheme), input, output);
    if (sentences) *sentences = n;
  });
}

DCST_API dcst_status dcst_run_train_tagger(const dcst_config* config, const char* scheme,
                                           const char* input, const char* dev,
                                           const char* out_dir, dcst_log_fn log, void* user) {
  DCST_REQUIRE(config && scheme && input && out_dir,
               "train-tagger needs a config, --scheme, --input and --out");
  return guarded([&] {
    dcst::cmd_train_tagger(config->config, dcst::parse_scheme(scheme), input, opt_path(dev),
                           out_dir, make_log(log, user));
  });
}

DCST_API dcst_status dcst_run_selftrain(const dcst_config* config, const char* mode,
                                        const char* schemes, const char* labeled,
                                        const char* unlabeled, const char* dev,
                                        const char* out_dir, dcst_log_fn log, void* user) {
  DCST_REQUIRE(config && mode && labeled && out_dir,
               "selftrain needs a config, --mode, --labeled and --out");
  return guarded([&] {
    const auto parsed_mode = dcst::parse_selftrain_mode(mode);
    std::vector<dcst::Scheme> list;
    if (schemes && *schemes) list = dcst::parse_scheme_list(schemes);
    dcst::cmd_selftrain(config->config, parsed_mode, list, labeled, opt_path(unlabeled),
                        opt_path(dev), out_dir, make_log(log, user));
  });
}

DCST_API dcst_status dcst_run_evaluate(const dcst_config* config, const char* gold,
                                       const char* pred, int pos_from_pred, const char* out_dir,
                                       dcst_eval_summary* out) {
  DCST_REQUIRE(gold && pred, "evaluate needs --gold and --pred");
  return guarded([&] {
    const dcst::PdhMode mode =
        config ? config->config.experiment().pdh_mode : dcst::PdhMode::Intervening;
    const auto report = dcst::cmd_evaluate(gold, pred, pos_from_pred != 0, mode, opt_path(out_dir));
    if (out) fill_summary(report, out);
  });
}

DCST_API dcst_status dcst_run_experiment(const dcst_config* config, const char* out_dir,
                                         dcst_log_fn log, void* user) {
  DCST_REQUIRE(config && out_dir, "experiment needs a config and --out");
  return guarded([&] { dcst::cmd_experiment(config->config, out_dir, make_log(log, user)); });
}

DCST_API dcst_status dcst_run_synth_corpus(uint64_t seed, size_t sentences, const char* out_dir) {
  DCST_REQUIRE(out_dir, "synth-corpus needs --out");
  return guarded([&] { dcst::cmd_synth_corpus(seed, sentences, out_dir); });
}

}  // extern "C"
