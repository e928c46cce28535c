#include "dcst/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "dcst/conllu.hpp"
#include "dcst/errors.hpp"

namespace dcst {
namespace {

using Table = std::map<std::string, std::string>;

const Table& common_defaults() {
  static const Table t = {
      {"seed", "1"},
      {"batch", "16"},
      {"lr", "0.002"},
      {"beta1", "0.9"},
      {"beta2", "0.999"},
      {"eps", "1e-8"},
      {"dropout", "0.33"},
      {"lm_vocab", "10000"},
      {"tagger_epochs", "0"},
      {"embeddings", ""},
      {"setup", "lightly_supervised"},
      {"models", "Base,DCST-ENS"},
      {"budget", "100"},
      {"dev_budget", "100"},
      {"unlabeled", "0"},
      {"seeds", "1"},
      {"freeze", "false"},
      {"rg_freeze", "false"},
      {"pdh_mode", "intervening"},
      {"length_threshold", "10"},
      {"train", ""},
      {"dev", ""},
      {"test", ""},
      {"target_train", ""},
      {"target_dev", ""},
      {"target_test", ""},
      {"synth_sentences", "0"},
      {"synth_test", "500"},
      {"synth_seed", "7"},
  };
  return t;
}

const Table& profile_defaults(const std::string& profile) {
  static const Table desk = {
      {"word_dim", "100"},  {"char_dim", "30"},    {"char_filters", "30"},
      {"pos_dim", "30"},    {"hidden", "128"},     {"layers", "3"},
      {"arc_mlp", "64"},    {"label_mlp", "64"},   {"tagger_fc1", "128"},
      {"tagger_fc2", "64"}, {"epochs", "30"},      {"patience", "5"},
  };
  static const Table paper = {
      {"word_dim", "300"},  {"char_dim", "100"},   {"char_filters", "100"},
      {"pos_dim", "100"},   {"hidden", "512"},     {"layers", "3"},
      {"arc_mlp", "512"},   {"label_mlp", "128"},  {"tagger_fc1", "128"},
      {"tagger_fc2", "64"}, {"epochs", "100"},     {"patience", "10"},
  };
  static const Table tiny = {
      {"word_dim", "32"},   {"char_dim", "16"},    {"char_filters", "16"},
      {"pos_dim", "16"},    {"hidden", "32"},      {"layers", "2"},
      {"arc_mlp", "32"},    {"label_mlp", "32"},   {"tagger_fc1", "32"},
      {"tagger_fc2", "16"}, {"epochs", "20"},      {"patience", "4"},
  };
  if (profile == "desk") return desk;
  if (profile == "paper") return paper;
  if (profile == "tiny") return tiny;
  throw UsageError("unknown profile '" + profile + "' (expected desk, paper or tiny)");
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError("config key '" + key + "' expects an integer, got '" + v + "'");
  return out;
}

int to_int32(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < 0 || x > 1'000'000'000)
    throw UsageError("config key '" + key + "' is out of range: " + v);
  return static_cast<int>(x);
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size())
    throw UsageError("config key '" + key + "' expects an unsigned integer, got '" + v + "'");
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::istringstream in(v);
  in.imbue(std::locale::classic());
  double x = 0.0;
  in >> x;
  if (in.fail() || !in.eof() || !std::isfinite(x))
    throw UsageError("config key '" + key + "' expects a number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw UsageError("config key '" + key + "' expects true or false, got '" + v + "'");
}

}  // namespace

// ---- ModelConfig ----------------------------------------------------------

void ModelConfig::validate() const {
  const std::pair<const char*, int> dims[] = {
      {"word_dim", word_dim},     {"char_dim", char_dim},   {"char_filters", char_filters},
      {"pos_dim", pos_dim},       {"hidden", hidden},       {"layers", layers},
      {"arc_mlp", arc_mlp},       {"label_mlp", label_mlp}, {"tagger_fc1", tagger_fc1},
      {"tagger_fc2", tagger_fc2}, {"epochs", epochs},       {"batch", batch},
      {"patience", patience},     {"lm_vocab", lm_vocab}};
  for (const auto& [name, v] : dims)
    if (v < 1) throw UsageError(std::string(name) + " must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw UsageError("dropout must be in [0, 1)");
  if (!(lr > 0.0)) throw UsageError("lr must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw UsageError("Adam betas must be in [0, 1)");
  if (!(eps > 0.0)) throw UsageError("eps must be positive");
}

EncoderSpec ModelConfig::encoder_spec() const {
  EncoderSpec s;
  s.embed = {word_dim, char_dim, char_filters, pos_dim};
  s.lstm = {s.embed.output_dim(), hidden, layers};
  return s;
}

AdamConfig ModelConfig::adam() const { return {lr, beta1, beta2, eps}; }

nlohmann::json ModelConfig::to_json() const {
  return {{"profile", profile},       {"seed", seed},
          {"word_dim", word_dim},     {"char_dim", char_dim},
          {"char_filters", char_filters}, {"pos_dim", pos_dim},
          {"hidden", hidden},         {"layers", layers},
          {"arc_mlp", arc_mlp},       {"label_mlp", label_mlp},
          {"tagger_fc1", tagger_fc1}, {"tagger_fc2", tagger_fc2},
          {"epochs", epochs},         {"tagger_epochs", tagger_epochs},
          {"batch", batch},           {"patience", patience},
          {"lr", lr},                 {"beta1", beta1},
          {"beta2", beta2},           {"eps", eps},
          {"dropout", dropout},       {"lm_vocab", lm_vocab},
          {"embeddings", embeddings}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.profile = j.at("profile");
  c.seed = j.at("seed");
  c.word_dim = j.at("word_dim");
  c.char_dim = j.at("char_dim");
  c.char_filters = j.at("char_filters");
  c.pos_dim = j.at("pos_dim");
  c.hidden = j.at("hidden");
  c.layers = j.at("layers");
  c.arc_mlp = j.at("arc_mlp");
  c.label_mlp = j.at("label_mlp");
  c.tagger_fc1 = j.at("tagger_fc1");
  c.tagger_fc2 = j.at("tagger_fc2");
  c.epochs = j.at("epochs");
  c.tagger_epochs = j.at("tagger_epochs");
  c.batch = j.at("batch");
  c.patience = j.at("patience");
  c.lr = j.at("lr");
  c.beta1 = j.at("beta1");
  c.beta2 = j.at("beta2");
  c.eps = j.at("eps");
  c.dropout = j.at("dropout");
  c.lm_vocab = j.at("lm_vocab");
  c.embeddings = j.at("embeddings");
  return c;
}

std::string_view freeze_name(FreezeMode mode) {
  switch (mode) {
    case FreezeMode::Train: return "false";
    case FreezeMode::Freeze: return "true";
    case FreezeMode::TuneOnDev: return "tune_on_dev";
  }
  return "?";
}

std::string_view setup_name(Setup setup) {
  switch (setup) {
    case Setup::LightlySupervised: return "lightly_supervised";
    case Setup::DomainAdaptation: return "domain_adaptation";
    case Setup::LengthAdaptation: return "length_adaptation";
  }
  return "?";
}

// ---- RunConfig ------------------------------------------------------------

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k{"profile"};
    for (const auto& [name, v] : common_defaults()) k.push_back(name);
    for (const auto& [name, v] : profile_defaults("desk")) k.push_back(name);
    std::sort(k.begin(), k.end());
    return k;
  }();
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (!std::binary_search(keys.begin(), keys.end(), key))
    throw UsageError("unknown config key '" + key + "'");
  if (key == "profile") profile_defaults(value);  // validates the name
  values_[key] = value;
}

void RunConfig::set_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw UsageError("expected key=value, got '" + std::string(assignment) + "'");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void RunConfig::parse_text(std::string_view text, std::string_view source) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw DataError("expected key=value", std::string(source), line_no);
    try {
      set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
    } catch (const UsageError& e) {
      throw DataError(e.what(), std::string(source), line_no);
    }
  }
}

void RunConfig::load_file(const std::filesystem::path& path) {
  parse_text(read_text_file(path), path.string());
}

std::string RunConfig::get(const std::string& key) const {
  if (auto it = values_.find(key); it != values_.end()) return it->second;
  if (key == "profile") return "desk";
  const auto& common = common_defaults();
  if (auto it = common.find(key); it != common.end()) return it->second;
  const auto& prof = profile_defaults(get("profile"));
  if (auto it = prof.find(key); it != prof.end()) return it->second;
  throw UsageError("unknown config key '" + key + "'");
}

std::map<std::string, std::string> RunConfig::resolved() const {
  std::map<std::string, std::string> out;
  for (const auto& key : known_keys()) out[key] = get(key);
  return out;
}

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& [k, v] : resolved()) out += k + "=" + v + "\n";
  return out;
}

ModelConfig RunConfig::model() const {
  ModelConfig c;
  c.profile = get("profile");
  c.seed = to_u64("seed", get("seed"));
  c.word_dim = to_int32("word_dim", get("word_dim"));
  c.char_dim = to_int32("char_dim", get("char_dim"));
  c.char_filters = to_int32("char_filters", get("char_filters"));
  c.pos_dim = to_int32("pos_dim", get("pos_dim"));
  c.hidden = to_int32("hidden", get("hidden"));
  c.layers = to_int32("layers", get("layers"));
  c.arc_mlp = to_int32("arc_mlp", get("arc_mlp"));
  c.label_mlp = to_int32("label_mlp", get("label_mlp"));
  c.tagger_fc1 = to_int32("tagger_fc1", get("tagger_fc1"));
  c.tagger_fc2 = to_int32("tagger_fc2", get("tagger_fc2"));
  c.epochs = to_int32("epochs", get("epochs"));
  c.tagger_epochs = to_int32("tagger_epochs", get("tagger_epochs"));
  c.batch = to_int32("batch", get("batch"));
  c.patience = to_int32("patience", get("patience"));
  c.lr = to_double("lr", get("lr"));
  c.beta1 = to_double("beta1", get("beta1"));
  c.beta2 = to_double("beta2", get("beta2"));
  c.eps = to_double("eps", get("eps"));
  c.dropout = to_double("dropout", get("dropout"));
  c.lm_vocab = to_int32("lm_vocab", get("lm_vocab"));
  c.embeddings = get("embeddings");
  c.validate();
  return c;
}

ExperimentConfig RunConfig::experiment() const {
  ExperimentConfig e;
  const std::string setup = get("setup");
  if (setup == "lightly_supervised")
    e.setup = Setup::LightlySupervised;
  else if (setup == "domain_adaptation")
    e.setup = Setup::DomainAdaptation;
  else if (setup == "length_adaptation")
    e.setup = Setup::LengthAdaptation;
  else
    throw UsageError("unknown setup '" + setup + "'");

  static const std::vector<std::string> valid_models = {
      "Base", "Base-FS", "Base+RG", "Self-Training", "DCST-LM",
      "DCST-NC", "DCST-DR", "DCST-RPE", "DCST-ENS"};
  e.models = split_list(get("models"));
  if (e.models.empty()) throw UsageError("models must name at least one model");
  for (const auto& m : e.models)
    if (std::find(valid_models.begin(), valid_models.end(), m) == valid_models.end())
      throw UsageError("unknown model '" + m + "'");

  const std::string budget = get("budget");
  e.budget = budget == "all" ? 0 : to_int32("budget", budget);
  const std::string dev_budget = get("dev_budget");
  e.dev_budget = dev_budget == "all" ? 0 : to_int32("dev_budget", dev_budget);
  e.unlabeled = to_int32("unlabeled", get("unlabeled"));

  e.seeds.clear();
  for (const auto& s : split_list(get("seeds"))) e.seeds.push_back(to_u64("seeds", s));
  if (e.seeds.empty()) throw UsageError("seeds must list at least one seed");

  const std::string freeze = get("freeze");
  if (freeze == "tune_on_dev")
    e.freeze = FreezeMode::TuneOnDev;
  else
    e.freeze = to_bool("freeze", freeze) ? FreezeMode::Freeze : FreezeMode::Train;
  e.rg_freeze = to_bool("rg_freeze", get("rg_freeze"));

  const std::string pdh = get("pdh_mode");
  if (pdh == "intervening")
    e.pdh_mode = PdhMode::Intervening;
  else if (pdh == "offset")
    e.pdh_mode = PdhMode::Offset;
  else
    throw UsageError("pdh_mode must be intervening or offset");
  e.length_threshold = to_int32("length_threshold", get("length_threshold"));

  e.train = get("train");
  e.dev = get("dev");
  e.test = get("test");
  e.target_train = get("target_train");
  e.target_dev = get("target_dev");
  e.target_test = get("target_test");
  e.synth_sentences = to_int32("synth_sentences", get("synth_sentences"));
  e.synth_test = to_int32("synth_test", get("synth_test"));
  e.synth_seed = to_u64("synth_seed", get("synth_seed"));
  return e;
}

std::vector<std::string> split_list(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find(sep, pos);
    if (end == std::string_view::npos) end = text.size();
    std::string item = trim(text.substr(pos, end - pos));
    if (!item.empty()) out.push_back(std::move(item));
    pos = end + 1;
  }
  return out;
}

std::vector<Scheme> parse_scheme_list(std::string_view text) {
  std::vector<Scheme> out;
  for (const auto& name : split_list(text)) {
    const Scheme s = parse_scheme(name);
    if (std::find(out.begin(), out.end(), s) != out.end())
      throw UsageError("scheme listed twice: " + name);
    out.push_back(s);
  }
  return out;
}

}  // namespace dcst
