#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "dcst/config.hpp"
#include "dcst/conllu.hpp"
#include "dcst/metrics.hpp"
#include "dcst/parser.hpp"
#include "dcst/tagger.hpp"

namespace dcst {

struct PretrainedEmbeddings;

// ---- data splits --------------------------------------------------------------

struct Split {
  Corpus labeled;
  Corpus dev;
  Corpus unlabeled;  // annotations stripped
};

// Seeded sampling without replacement: n_train labeled, n_dev dev, the rest
// unlabeled. Sentence order inside each part follows the corpus order.
Split sample_split(std::span<const Sentence> corpus, std::size_t n_train, std::size_t n_dev,
                   std::uint64_t seed);

// (sentences with m <= threshold, the rest), in corpus order.
std::pair<Corpus, Corpus> split_by_length(std::span<const Sentence> corpus, int threshold = 10);

// ---- Algorithm 1 and baselines ---------------------------------------------------

struct PipelineOptions {
  ModelConfig model;
  FreezeMode freeze = FreezeMode::Train;
  bool rg_freeze = false;
  const PretrainedEmbeddings* pretrained = nullptr;
  // Sentences whose auto-parses serve as tagger dev data (default: dev).
  std::optional<Corpus> tagger_dev;
  // When set, stage archives are written here.
  std::filesystem::path archive_dir;
  LogFn log;
};

struct HybridRun {
  ParserModel parser;
  TrainReport train;
  bool frozen = false;
  nlohmann::json report = nlohmann::json::object();
};

// Stage cache for one (L, dev, U, config): the base parser, its parses of U
// and the taggers trained on them are computed once and shared by every model
// built on top.
class Pipeline {
 public:
  Pipeline(Corpus labeled, Corpus dev, Corpus unlabeled, PipelineOptions options);

  // Step 1: base parser on L.
  const ParserModel& base();
  // Step 2: MST parses of U by the base parser.
  const std::vector<DepTree>& auto_trees();
  // Steps 3-4: tagger trained on the auto-parsed U (LM: language model on U).
  const TaggerModel& tagger(Scheme scheme);
  // Step 5: fresh parser fused with the encoders of the given taggers.
  HybridRun hybrid(std::span<const Scheme> schemes);

  // Base retrained from scratch on L plus the auto-parsed U.
  ParserModel self_training();
  // Hybrid with one untrained, randomly initialized encoder.
  HybridRun random_gating();

  const Corpus& labeled() const noexcept { return labeled_; }
  const Corpus& dev() const noexcept { return dev_; }
  const Corpus& unlabeled() const noexcept { return unlabeled_; }
  const PipelineOptions& options() const noexcept { return options_; }
  // Per-stage metrics (base dev LAS, tagger dev accuracies, hybrid dev LAS).
  const nlohmann::json& report() const noexcept { return report_; }
  // Wall-clock seconds per stage; kept apart from the report so that reports
  // stay byte-identical across runs.
  const nlohmann::json& timings() const noexcept { return timings_; }

 private:
  HybridRun train_hybrid(std::vector<FusedEncoder> encoders, const std::string& stream,
                         bool frozen);
  HybridRun fused_run(std::vector<FusedEncoder> encoders, const std::string& stream,
                      FreezeMode mode);
  void log(const std::string& line) const;
  void save(const std::string& name, const Archive& archive) const;

  Corpus labeled_, dev_, unlabeled_;
  PipelineOptions options_;
  std::optional<ParserModel> base_;
  std::optional<std::vector<DepTree>> auto_trees_;
  std::map<Scheme, TaggerModel> taggers_;
  nlohmann::json report_ = nlohmann::json::object();
  nlohmann::json timings_ = nlohmann::json::object();
};

// Convenience wrappers over a fresh Pipeline.
HybridRun run_dcst(std::span<const Sentence> labeled, std::span<const Sentence> dev,
                   std::span<const Sentence> unlabeled, std::span<const Scheme> schemes,
                   const PipelineOptions& options);
HybridRun run_lm(std::span<const Sentence> labeled, std::span<const Sentence> dev,
                 std::span<const Sentence> unlabeled, const PipelineOptions& options);
ParserModel run_self_training(std::span<const Sentence> labeled, std::span<const Sentence> dev,
                              std::span<const Sentence> unlabeled, const PipelineOptions& options,
                              nlohmann::json* report = nullptr);
HybridRun run_random_gating(std::span<const Sentence> labeled, std::span<const Sentence> dev,
                            const PipelineOptions& options);

// ---- experiments -----------------------------------------------------------------

struct ExperimentRecord {
  std::string model;
  std::uint64_t seed = 0;
  EvalReport eval;
  nlohmann::json details = nlohmann::json::object();
};

struct ExperimentResult {
  std::vector<ExperimentRecord> records;  // sorted by model order, then seed

  nlohmann::json to_json() const;
  // Fixed-width table: one row per (model, seed) plus a mean row per model.
  std::string table() const;
  double mean_uas(const std::string& model) const;
};

// Runs every requested model for every seed. on_record is called as soon as a
// record is complete, so partial results can be flushed.
ExperimentResult run_experiment(const ExperimentConfig& experiment, const ModelConfig& model,
                                const LogFn& log = {},
                                const std::function<void(const ExperimentRecord&)>& on_record = {},
                                const std::filesystem::path& archive_dir = {});

// Model names in canonical order.
const std::vector<std::string>& experiment_models();

}  // namespace dcst
