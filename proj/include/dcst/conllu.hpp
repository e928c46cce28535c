#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dcst {

// One basic-tree token row. Heads follow the CoNLL-U convention:
// 0 is ROOT, k refers to the token with id k.
struct Token {
  int id = 0;
  std::string form;
  std::optional<std::string> lemma;
  std::optional<std::string> upos;
  std::optional<int> head;
  std::optional<std::string> deprel;

  bool operator==(const Token&) const = default;
};

struct Sentence {
  std::vector<Token> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  bool has_heads() const;
  // UPOS per token; absent tags become "_".
  std::vector<std::string> pos() const;
  std::vector<std::string> forms() const;

  bool operator==(const Sentence&) const = default;
};

using Corpus = std::vector<Sentence>;

// Multiword-token ranges and empty nodes are skipped. Throws DataError with
// the offending line number on malformed rows or non-contiguous ids.
Corpus parse_conllu(std::string_view text, std::string_view source = "<input>");

std::string write_conllu(std::span<const Sentence> sentences);

Sentence strip_annotations(const Sentence& sentence);
Corpus strip_annotations(std::span<const Sentence> corpus);

Corpus read_conllu_file(const std::filesystem::path& path);
void write_conllu_file(const std::filesystem::path& path,
                       std::span<const Sentence> sentences);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace dcst
