#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "json.hpp"

#include "dcst/config.hpp"
#include "dcst/metrics.hpp"
#include "dcst/parser.hpp"
#include "dcst/pipeline.hpp"
#include "dcst/tree.hpp"

namespace dcst {

// One command invocation writing into an output directory. Every run leaves
// config.resolved, log.txt, report.json, report.txt and timings.json behind;
// archives (*.dcst) are added by the commands that train models.
//
// report.json holds no wall-clock data, so two runs with the same inputs and
// configuration produce byte-identical reports.

enum class SelftrainMode { Dcst, Classic, RandomGating, LanguageModel };

SelftrainMode parse_selftrain_mode(std::string_view name);  // dcst|classic|rg|lm
std::string_view selftrain_mode_name(SelftrainMode mode);

// Archive file name used for the final parser of a run directory.
inline constexpr const char* kParserArchive = "parser.dcst";
inline constexpr const char* kTaggerArchive = "tagger.dcst";

// A parser archive path, or a run directory holding parser.dcst.
std::filesystem::path resolve_parser_archive(const std::filesystem::path& model);

nlohmann::json cmd_train_base(const RunConfig& config, const std::filesystem::path& train,
                              const std::filesystem::path& dev,
                              const std::filesystem::path& out, const LogFn& echo = {});

// Returns the number of sentences parsed.
std::size_t cmd_parse(const std::filesystem::path& model, const std::filesystem::path& input,
                      const std::filesystem::path& out);

// Two-column dump (form TAB tag) of the gold trees of `input`.
std::size_t cmd_encode_tags(Scheme scheme, const std::filesystem::path& input,
                            const std::filesystem::path& out);

// `input` and `dev` may be CoNLL-U trees (tags derived from their heads) or
// two-column tag files. The lm scheme reads the word forms of CoNLL-U files.
nlohmann::json cmd_train_tagger(const RunConfig& config, Scheme scheme,
                                const std::filesystem::path& input,
                                const std::filesystem::path& dev,
                                const std::filesystem::path& out, const LogFn& echo = {});

nlohmann::json cmd_selftrain(const RunConfig& config, SelftrainMode mode,
                             std::span<const Scheme> schemes,
                             const std::filesystem::path& labeled,
                             const std::filesystem::path& unlabeled,
                             const std::filesystem::path& dev,
                             const std::filesystem::path& out, const LogFn& echo = {});

// With an empty `out` nothing is written.
EvalReport cmd_evaluate(const std::filesystem::path& gold, const std::filesystem::path& pred,
                        bool pos_from_pred, PdhMode mode, const std::filesystem::path& out);

ExperimentResult cmd_experiment(const RunConfig& config, const std::filesystem::path& out,
                                const LogFn& echo = {});

// Writes <out>/synth.conllu; returns its path.
std::filesystem::path cmd_synth_corpus(std::uint64_t seed, std::size_t n,
                                       const std::filesystem::path& out);

}  // namespace dcst
