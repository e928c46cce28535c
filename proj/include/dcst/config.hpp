#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dcst/layers.hpp"
#include "dcst/metrics.hpp"
#include "dcst/params.hpp"
#include "dcst/tree.hpp"

namespace dcst {

// Hyperparameters shared by parsers, taggers and hybrids. `hidden` is the
// per-direction LSTM size, so encoder outputs are 2 * hidden wide.
struct ModelConfig {
  std::string profile = "desk";
  std::uint64_t seed = 1;

  int word_dim = 100;
  int char_dim = 30;
  int char_filters = 30;
  int pos_dim = 30;
  int hidden = 128;
  int layers = 3;
  int arc_mlp = 64;
  int label_mlp = 64;
  int tagger_fc1 = 128;
  int tagger_fc2 = 64;

  int epochs = 30;
  int tagger_epochs = 0;  // 0: same as epochs
  int batch = 16;
  int patience = 5;
  double lr = 0.002;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double dropout = 0.33;
  int lm_vocab = 10000;
  std::string embeddings;  // optional pretrained word vectors

  void validate() const;
  EncoderSpec encoder_spec() const;
  AdamConfig adam() const;
  int effective_tagger_epochs() const { return tagger_epochs > 0 ? tagger_epochs : epochs; }

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

enum class FreezeMode { Train, Freeze, TuneOnDev };
enum class Setup { LightlySupervised, DomainAdaptation, LengthAdaptation };

std::string_view freeze_name(FreezeMode mode);
std::string_view setup_name(Setup setup);

struct ExperimentConfig {
  Setup setup = Setup::LightlySupervised;
  std::vector<std::string> models;
  int budget = 100;      // labeled training sentences; 0 = all
  int dev_budget = 100;  // 0 = all remaining dev
  int unlabeled = 0;     // cap on |U|; 0 = all
  std::vector<std::uint64_t> seeds{1};
  FreezeMode freeze = FreezeMode::Train;
  bool rg_freeze = false;
  PdhMode pdh_mode = PdhMode::Intervening;
  int length_threshold = 10;

  // Corpus files. Lightly supervised: train (+ dev, pooled) and test.
  // Domain adaptation: train/dev are the source domain, target_* the target.
  std::string train, dev, test;
  std::string target_train, target_dev, target_test;
  // Synthetic corpus instead of files (sentences > 0).
  int synth_sentences = 0;
  int synth_test = 500;
  std::uint64_t synth_seed = 7;
};

// Flat key=value configuration. Values given explicitly override the defaults
// of the selected profile (desk, paper or tiny); unknown keys are rejected.
class RunConfig {
 public:
  RunConfig() = default;

  void set(const std::string& key, const std::string& value);
  // "key=value" form.
  void set_assignment(std::string_view assignment);
  // Lines of key=value; '#' starts a comment.
  void parse_text(std::string_view text, std::string_view source);
  void load_file(const std::filesystem::path& path);

  std::string get(const std::string& key) const;
  bool is_set(const std::string& key) const { return values_.count(key) > 0; }
  // Every known key with its effective value, sorted by key.
  std::map<std::string, std::string> resolved() const;
  std::string resolved_text() const;

  ModelConfig model() const;
  ExperimentConfig experiment() const;

  static const std::vector<std::string>& known_keys();

 private:
  std::map<std::string, std::string> values_;
};

std::vector<std::string> split_list(std::string_view text, char sep = ',');
std::vector<Scheme> parse_scheme_list(std::string_view text);

}  // namespace dcst
