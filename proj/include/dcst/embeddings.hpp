#pragma once

#include <filesystem>
#include <optional>

#include "dcst/autograd.hpp"
#include "dcst/vocab.hpp"

namespace dcst {

// Word vectors read from a text file with lines "token v1 ... vdim". Row 0 is
// the zero-initialized unknown entry.
struct PretrainedEmbeddings {
  Vocab vocab;
  Matrix table;

  int dim() const noexcept { return static_cast<int>(table.cols()); }
  // Exact form first, then its lowercase, else the unknown row.
  int lookup(std::string_view word) const;
};

// Throws DataError (with line number) on a dimension mismatch and when the
// file cannot be opened.
PretrainedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path,
                                                int dim);

// Configuration-level loader: an empty path or a missing file yields
// std::nullopt, so the model falls back to a randomly initialized, trainable
// word table. Malformed files still throw.
std::optional<PretrainedEmbeddings> load_pretrained_or_fallback(
    const std::filesystem::path& path, int dim);

}  // namespace dcst
