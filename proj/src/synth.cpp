#include "dcst/synth.hpp"

#include <span>

#include "dcst/errors.hpp"
#include "dcst/rng.hpp"

namespace dcst {
namespace {

const std::vector<std::string> kDet = {"the", "a", "every", "this"};
const std::vector<std::string> kAdj = {"big", "small", "red", "old", "happy", "quiet"};
const std::vector<std::string> kNoun = {"dog",  "cat",   "man",  "woman", "park",
                                        "house", "book", "table", "river", "city",
                                        "friend", "car"};
// Nouns that make a "with" phrase attach to the verb.
const std::vector<std::string> kInstrument = {"telescope", "hammer", "spoon"};
const std::vector<std::string> kPropn = {"Anna", "Boris", "Clara"};
const std::vector<std::string> kPron = {"she", "he", "they"};
const std::vector<std::string> kTransitive = {"saw", "liked", "found", "took", "read", "built"};
const std::vector<std::string> kIntransitive = {"slept", "ran", "arrived", "laughed"};
const std::vector<std::string> kAux = {"will", "can", "must"};
const std::vector<std::string> kVerbPrep = {"in", "on", "near"};
const std::vector<std::string> kAdv = {"quickly", "often", "yesterday"};

struct Node {
  std::string form;
  std::string upos;
  int head = -1;  // index into the node list; -1 = ROOT
  std::string deprel;
};

class Builder {
 public:
  explicit Builder(Rng& rng) : rng_(rng) {}

  const std::string& pick(const std::vector<std::string>& words) {
    return words[rng_.below(words.size())];
  }

  int add(const std::string& form, const std::string& upos, const std::string& deprel) {
    nodes_.push_back({form, upos, -1, deprel});
    return static_cast<int>(nodes_.size()) - 1;
  }
  void attach(int dep, int head) { nodes_[static_cast<std::size_t>(dep)].head = head; }
  void relabel(int node, const std::string& deprel) {
    nodes_[static_cast<std::size_t>(node)].deprel = deprel;
  }
  const Node& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }

  // Noun phrase; returns the index of its head. depth bounds recursion.
  int noun_phrase(int depth, bool allow_pronoun) {
    const double r = rng_.uniform();
    if (allow_pronoun && r < 0.12) return add(pick(kPron), "PRON", "");
    if (r < 0.25) return add(pick(kPropn), "PROPN", "");
    const int det = add(pick(kDet), "DET", "det");
    int adj = -1;
    if (rng_.bernoulli(0.35)) adj = add(pick(kAdj), "ADJ", "amod");
    const int noun = add(pick(kNoun), "NOUN", "");
    attach(det, noun);
    if (adj >= 0) attach(adj, noun);
    if (depth > 0 && rng_.bernoulli(0.25)) {
      // "with" + non-instrument noun modifies the noun.
      const int prep = add("with", "ADP", "case");
      const int obj = noun_phrase(depth - 1, false);
      attach(prep, obj);
      attach(obj, noun);
      relabel(obj, "nmod");
    } else if (depth > 0 && rng_.bernoulli(0.15)) {
      // Relative clause: "that" + transitive verb + object.
      const int that = add("that", "PRON", "nsubj");
      const int verb = add(pick(kTransitive), "VERB", "acl:relcl");
      const int obj = noun_phrase(depth - 1, false);
      attach(that, verb);
      attach(obj, verb);
      relabel(obj, "obj");
      attach(verb, noun);
    }
    return noun;
  }

  int instrument_phrase() {
    const int prep = add("with", "ADP", "case");
    const int det = add(pick(kDet), "DET", "det");
    const int noun = add(pick(kInstrument), "NOUN", "obl");
    attach(prep, noun);
    attach(det, noun);
    return noun;
  }

  int verb_pp() {
    const int prep = add(pick(kVerbPrep), "ADP", "case");
    const int obj = noun_phrase(0, false);
    attach(prep, obj);
    relabel(obj, "obl");
    return obj;
  }

  void clause() {
    std::vector<int> pre_verb;
    const int subj = noun_phrase(1, true);
    relabel(subj, "nsubj");
    pre_verb.push_back(subj);
    if (rng_.bernoulli(0.3)) pre_verb.push_back(add(pick(kAux), "AUX", "aux"));
    const bool transitive = rng_.bernoulli(0.65);
    const int verb = add(pick(transitive ? kTransitive : kIntransitive), "VERB", "root");
    for (int d : pre_verb) attach(d, verb);
    if (transitive) {
      const int obj = noun_phrase(1, true);
      relabel(obj, "obj");
      attach(obj, verb);
    }
    const int extras = static_cast<int>(rng_.below(3));
    for (int e = 0; e < extras; ++e) {
      const double r = rng_.uniform();
      int dep;
      if (r < 0.4)
        dep = verb_pp();
      else if (r < 0.7)
        dep = instrument_phrase();
      else
        dep = add(pick(kAdv), "ADV", "advmod");
      attach(dep, verb);
    }
    attach(add(".", "PUNCT", "punct"), verb);
  }

  Sentence sentence() const {
    Sentence s;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      const Node& n = nodes_[i];
      Token t;
      t.id = static_cast<int>(i) + 1;
      t.form = n.form;
      t.lemma = n.form;
      t.upos = n.upos;
      t.head = n.head + 1;
      t.deprel = n.deprel;
      s.tokens.push_back(std::move(t));
    }
    return s;
  }

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  Rng& rng_;
  std::vector<Node> nodes_;
};

void add_words(std::vector<LexiconEntry>& out, const std::vector<std::string>& words,
               const std::string& upos) {
  for (const auto& w : words) out.push_back({w, upos});
}

}  // namespace

const std::vector<LexiconEntry>& synthetic_lexicon() {
  static const std::vector<LexiconEntry> lexicon = [] {
    std::vector<LexiconEntry> out;
    add_words(out, kDet, "DET");
    add_words(out, kAdj, "ADJ");
    add_words(out, kNoun, "NOUN");
    add_words(out, kInstrument, "NOUN");
    add_words(out, kPropn, "PROPN");
    add_words(out, kPron, "PRON");
    add_words(out, {"that"}, "PRON");
    add_words(out, kTransitive, "VERB");
    add_words(out, kIntransitive, "VERB");
    add_words(out, kAux, "AUX");
    add_words(out, kVerbPrep, "ADP");
    add_words(out, {"with"}, "ADP");
    add_words(out, kAdv, "ADV");
    add_words(out, {"."}, "PUNCT");
    return out;
  }();
  return lexicon;
}

Corpus generate_synthetic_corpus(std::size_t sentences, std::uint64_t seed,
                                 const SynthOptions& options) {
  if (options.min_length < 1 || options.max_length < options.min_length)
    throw UsageError("synthetic corpus length bounds are inconsistent");
  if (options.min_length > 30 || options.max_length < 3)
    throw UsageError("synthetic corpus length bounds cannot be met by the grammar");
  Rng rng = Rng(seed).substream("synth");
  Corpus out;
  out.reserve(sentences);
  while (out.size() < sentences) {
    Builder b(rng);
    b.clause();
    const int m = static_cast<int>(b.size());
    if (m < options.min_length || m > options.max_length) continue;
    out.push_back(b.sentence());
  }
  return out;
}

}  // namespace dcst
