#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "dcst/conllu.hpp"

namespace dcst {

struct SynthOptions {
  int min_length = 3;
  int max_length = 12;
};

// Seeded template grammar over a fixed vocabulary of about fifty words:
// clauses of subject, optional auxiliary, verb, object, prepositional phrases,
// adverbs and final punctuation, with relative clauses inside noun phrases.
// Heads follow deterministic rules; the attachment of a "with" phrase depends
// on its noun (instrument nouns attach to the verb, others to the preceding
// noun). Every sentence carries UPOS, heads and labels.
Corpus generate_synthetic_corpus(std::size_t sentences, std::uint64_t seed,
                                 const SynthOptions& options = {});

struct LexiconEntry {
  std::string form;
  std::string upos;
};
const std::vector<LexiconEntry>& synthetic_lexicon();

}  // namespace dcst
