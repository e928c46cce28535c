#include "dcst/layers.hpp"

#include <cmath>

#include "dcst/embeddings.hpp"
#include "dcst/errors.hpp"
#include "dcst/rng.hpp"

namespace dcst {

// ---- Vocab ----------------------------------------------------------------

Vocab::Vocab() { add(std::string(kUnkToken)); }

int Vocab::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

std::optional<int> Vocab::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

nlohmann::json Vocab::to_json() const { return tokens_; }

Vocab Vocab::from_json(const nlohmann::json& j) {
  Vocab v;
  const auto tokens = j.get<std::vector<std::string>>();
  if (tokens.empty() || tokens[0] != kUnkToken)
    throw DataError("vocabulary must start with " + std::string(kUnkToken));
  for (std::size_t i = 1; i < tokens.size(); ++i) v.add(tokens[i]);
  if (v.size() != static_cast<int>(tokens.size()))
    throw DataError("vocabulary contains duplicates");
  return v;
}

std::vector<std::string> utf8_chars(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if (c >= 0xF0)
      len = 4;
    else if (c >= 0xE0)
      len = 3;
    else if (c >= 0xC0)
      len = 2;
    if (i + len > s.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k)
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) len = 1;
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

// ---- basics ---------------------------------------------------------------

ad::Var dropout(ad::Var x, const Ctx& ctx) {
  if (!ctx.train || ctx.dropout == 0.0) return x;
  if (!ctx.rng) throw UsageError("training-mode dropout needs an Rng");
  return ad::dropout(x, ctx.dropout, true, *ctx.rng);
}

ad::Var Binder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  ad::Var v = track_ ? tape_->param(store_->get(name), true)
                     : tape_->param(const_store_->get(name));
  bound_.emplace(name, v);
  return v;
}

// ---- LSTM -----------------------------------------------------------------

void add_lstm_params(ParameterStore& store, const std::string& prefix,
                     int input_dim, int hidden, Rng& rng) {
  const double bound = std::sqrt(1.0 / hidden);
  init_uniform(store.add(prefix + ".w_ih", input_dim, 4 * hidden), bound, rng);
  init_uniform(store.add(prefix + ".w_hh", hidden, 4 * hidden), bound, rng);
  Param& b = store.add(prefix + ".b", 1, 4 * hidden);
  init_uniform(b, bound, rng);
  b.value.middleCols(hidden, hidden).setConstant(1.0);  // forget gate
}

LstmWeights bind_lstm(Binder& bind, const std::string& prefix) {
  return {bind(prefix + ".w_ih"), bind(prefix + ".w_hh"), bind(prefix + ".b")};
}

std::pair<ad::Var, ad::Var> lstm_step(ad::Var x, ad::Var h_prev, ad::Var c_prev,
                                      const LstmWeights& w) {
  const Eigen::Index H = w.w_hh.rows();
  ad::Var pre = ad::add(ad::affine(x, w.w_ih, w.b), ad::matmul(h_prev, w.w_hh));
  ad::Var i = ad::sigmoid(ad::slice_cols(pre, 0, H));
  ad::Var f = ad::sigmoid(ad::slice_cols(pre, H, H));
  ad::Var g = ad::tanh(ad::slice_cols(pre, 2 * H, H));
  ad::Var o = ad::sigmoid(ad::slice_cols(pre, 3 * H, H));
  ad::Var c = ad::add(ad::mul(f, c_prev), ad::mul(i, g));
  ad::Var h = ad::mul(o, ad::tanh(c));
  return {h, c};
}

ad::Var lstm_run(ad::Var x, const LstmWeights& w, bool reverse) {
  return ad::lstm_sequence(ad::affine(x, w.w_ih, w.b), w.w_hh, reverse);
}

ad::Var lstm_run_stepwise(ad::Var x, const LstmWeights& w, bool reverse) {
  ad::Tape& tape = *x.tape();
  const Eigen::Index m = x.rows();
  const Eigen::Index H = w.w_hh.rows();
  if (m == 0) throw ShapeError("lstm_run_stepwise: empty sequence");
  ad::Var h = tape.constant(Matrix::Zero(1, H));
  ad::Var c = tape.constant(Matrix::Zero(1, H));
  std::vector<ad::Var> out(static_cast<std::size_t>(m));
  for (Eigen::Index s = 0; s < m; ++s) {
    const Eigen::Index t = reverse ? m - 1 - s : s;
    std::tie(h, c) = lstm_step(ad::slice_rows(x, t, 1), h, c, w);
    out[static_cast<std::size_t>(t)] = h;
  }
  return ad::concat_rows(out);
}

void add_bilstm_params(ParameterStore& store, const std::string& prefix,
                       const BiLstmSpec& spec, Rng& rng) {
  if (spec.layers < 1 || spec.hidden < 1 || spec.input_dim < 1)
    throw UsageError("BiLSTM needs positive dimensions and at least one layer");
  for (int l = 0; l < spec.layers; ++l) {
    const int in = l == 0 ? spec.input_dim : spec.output_dim();
    const std::string base = prefix + ".l" + std::to_string(l);
    add_lstm_params(store, base + ".fwd", in, spec.hidden, rng);
    add_lstm_params(store, base + ".bwd", in, spec.hidden, rng);
  }
}

ad::Var bilstm_encode(Binder& bind, const std::string& prefix,
                      const BiLstmSpec& spec, ad::Var x, const Ctx& ctx,
                      DirectionMix mix) {
  if (x.rows() == 0) throw ShapeError("bilstm_encode: empty sequence");
  ad::Tape& tape = bind.tape();
  ad::Var fwd_in = x, bwd_in = x;
  ad::Var out;
  for (int l = 0; l < spec.layers; ++l) {
    const std::string base = prefix + ".l" + std::to_string(l);
    ad::Var fwd = lstm_run(fwd_in, bind_lstm(bind, base + ".fwd"), false);
    ad::Var bwd = lstm_run(bwd_in, bind_lstm(bind, base + ".bwd"), true);
    out = ad::concat_cols({fwd, bwd});
    if (l + 1 < spec.layers) {
      if (mix == DirectionMix::Joint) {
        fwd_in = bwd_in = dropout(out, ctx);
      } else {
        ad::Var zeros = tape.constant(Matrix::Zero(x.rows(), spec.hidden));
        fwd_in = ad::concat_cols({dropout(fwd, ctx), zeros});
        bwd_in = ad::concat_cols({zeros, dropout(bwd, ctx)});
      }
    }
  }
  return out;
}

// ---- encoder --------------------------------------------------------------

InputVocab InputVocab::build(std::span<const Sentence> corpus) {
  InputVocab v;
  for (const auto& s : corpus)
    for (const auto& t : s.tokens) {
      v.words.add(t.form);
      for (const auto& ch : utf8_chars(t.form)) v.chars.add(ch);
      if (t.upos) v.pos.add(*t.upos);
    }
  return v;
}

nlohmann::json InputVocab::to_json() const {
  return {{"words", words.to_json()}, {"chars", chars.to_json()}, {"pos", pos.to_json()}};
}

InputVocab InputVocab::from_json(const nlohmann::json& j) {
  InputVocab v;
  v.words = Vocab::from_json(j.at("words"));
  v.chars = Vocab::from_json(j.at("chars"));
  v.pos = Vocab::from_json(j.at("pos"));
  return v;
}

nlohmann::json EncoderSpec::to_json() const {
  return {{"word_dim", embed.word_dim},   {"char_dim", embed.char_dim},
          {"char_filters", embed.char_filters}, {"pos_dim", embed.pos_dim},
          {"input_dim", lstm.input_dim},  {"hidden", lstm.hidden},
          {"layers", lstm.layers}};
}

EncoderSpec EncoderSpec::from_json(const nlohmann::json& j) {
  EncoderSpec s;
  s.embed.word_dim = j.at("word_dim");
  s.embed.char_dim = j.at("char_dim");
  s.embed.char_filters = j.at("char_filters");
  s.embed.pos_dim = j.at("pos_dim");
  s.lstm.input_dim = j.at("input_dim");
  s.lstm.hidden = j.at("hidden");
  s.lstm.layers = j.at("layers");
  return s;
}

void Encoder::add_params(ParameterStore& store, const std::string& prefix,
                         Rng& rng, const PretrainedEmbeddings* pretrained) const {
  const EmbedderSpec& e = spec_.embed;
  if (e.word_dim < 1 || e.char_dim < 1 || e.char_filters < 1 || e.pos_dim < 1)
    throw UsageError("embedding dimensions must be positive");
  if (spec_.lstm.input_dim != e.output_dim())
    throw UsageError("BiLSTM input dim does not match the embedding width");
  Rng r = rng.substream(prefix);

  Param& words = store.add(prefix + ".word_emb", vocab_.words.size(), e.word_dim);
  init_normal(words, 1.0 / std::sqrt(static_cast<double>(e.word_dim)), r);
  words.value.row(Vocab::kUnk).setZero();
  if (pretrained) {
    if (pretrained->dim() != e.word_dim)
      throw UsageError("pretrained embedding dim " + std::to_string(pretrained->dim()) +
                       " differs from word_dim " + std::to_string(e.word_dim));
    for (int id = 1; id < vocab_.words.size(); ++id) {
      const int row = pretrained->lookup(vocab_.words.token(id));
      if (row != Vocab::kUnk) words.value.row(id) = pretrained->table.row(row);
    }
  }
  init_normal(store.add(prefix + ".char_emb", vocab_.chars.size(), e.char_dim),
              1.0 / std::sqrt(static_cast<double>(e.char_dim)), r);
  init_glorot(store.add(prefix + ".char_conv.w", 3 * e.char_dim, e.char_filters), r);
  store.add(prefix + ".char_conv.b", 1, e.char_filters);
  init_normal(store.add(prefix + ".pos_emb", vocab_.pos.size(), e.pos_dim),
              1.0 / std::sqrt(static_cast<double>(e.pos_dim)), r);
  add_bilstm_params(store, prefix + ".lstm", spec_.lstm, r);
}

int Encoder::word_id(std::string_view form) const {
  if (auto id = vocab_.words.find(form)) return *id;
  if (auto id = vocab_.words.find(ascii_lower(form))) return *id;
  return Vocab::kUnk;
}

ad::Var Encoder::embed(Binder& bind, const std::string& prefix,
                       const Sentence& s, const Ctx& ctx) const {
  if (s.empty()) throw UsageError("cannot embed an empty sentence");
  std::vector<int> word_ids, pos_ids;
  for (const auto& t : s.tokens) {
    word_ids.push_back(word_id(t.form));
    // Raw text without tags gets a zero POS vector.
    pos_ids.push_back(t.upos ? vocab_.pos.id(*t.upos) : -1);
  }
  ad::Var words = ad::lookup_rows(bind(prefix + ".word_emb"), word_ids);
  ad::Var pos = ad::lookup_rows(bind(prefix + ".pos_emb"), pos_ids);

  ad::Var char_table = bind(prefix + ".char_emb");
  ad::Var conv_w = bind(prefix + ".char_conv.w");
  ad::Var conv_b = bind(prefix + ".char_conv.b");
  std::vector<ad::Var> char_feats;
  char_feats.reserve(s.size());
  for (const auto& t : s.tokens) {
    std::vector<int> ids;
    for (const auto& ch : utf8_chars(t.form)) ids.push_back(vocab_.chars.id(ch));
    if (ids.empty()) ids.push_back(Vocab::kUnk);
    ad::Var chars = ad::lookup_rows(char_table, ids);
    ad::Var conv = ad::affine(ad::window_rows(chars, 3), conv_w, conv_b);
    char_feats.push_back(ad::relu(ad::max_rows(conv)));
  }
  ad::Var chars = ad::concat_rows(char_feats);
  return dropout(ad::concat_cols({words, chars, pos}), ctx);
}

ad::Var Encoder::encode(Binder& bind, const std::string& prefix,
                        const Sentence& s, const Ctx& ctx, DirectionMix mix) const {
  ad::Var x = embed(bind, prefix, s, ctx);
  return bilstm_encode(bind, prefix + ".lstm", spec_.lstm, x, ctx, mix);
}

}  // namespace dcst
