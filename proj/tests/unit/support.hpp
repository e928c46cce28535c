#pragma once

#include <string>
#include <vector>

#include "dcst/config.hpp"
#include "dcst/conllu.hpp"
#include "dcst/rng.hpp"
#include "dcst/tree.hpp"

namespace dcst::testing {

// Random valid single-rooted tree: tokens are visited in random order, the
// first attaches to ROOT and every later one to an already placed token.
inline std::vector<int> random_heads(int m, Rng& rng) {
  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i + 1;
  rng.shuffle(order);
  std::vector<int> heads(m, 0);
  for (int k = 1; k < m; ++k)
    heads[order[k] - 1] = order[rng.below(static_cast<std::size_t>(k))];
  return heads;
}

inline std::vector<std::string> random_pos(int m, Rng& rng) {
  static const std::vector<std::string> tags = {"NOUN", "VERB", "DET", "ADJ", "PROPN", "PUNCT"};
  std::vector<std::string> pos(m);
  for (auto& p : pos) p = tags[rng.below(tags.size())];
  return pos;
}

inline Sentence make_sentence(const std::vector<int>& heads,
                              const std::vector<std::string>& pos = {},
                              const std::vector<std::string>& labels = {}) {
  Sentence s;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    Token t;
    t.id = static_cast<int>(i) + 1;
    t.form = "w" + std::to_string(i % 7);
    t.upos = pos.empty() ? std::string("NOUN") : pos[i];
    t.head = heads[i];
    t.deprel = labels.empty() ? std::string("dep") : labels[i];
    s.tokens.push_back(std::move(t));
  }
  return s;
}

inline DepTree make_tree(std::vector<int> heads, std::vector<std::string> labels = {}) {
  return DepTree{std::move(heads), std::move(labels)};
}

// Small dimensions that keep full training runs to a fraction of a second.
inline ModelConfig micro_config() {
  RunConfig rc;
  rc.set("profile", "tiny");
  ModelConfig c = rc.model();
  c.word_dim = 8;
  c.char_dim = 4;
  c.char_filters = 4;
  c.pos_dim = 4;
  c.hidden = 6;
  c.layers = 1;
  c.arc_mlp = 8;
  c.label_mlp = 6;
  c.tagger_fc1 = 8;
  c.tagger_fc2 = 6;
  c.epochs = 2;
  c.patience = 2;
  return c;
}

}  // namespace dcst::testing
