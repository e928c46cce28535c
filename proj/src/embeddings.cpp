#include "dcst/embeddings.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "dcst/errors.hpp"

namespace dcst {

int PretrainedEmbeddings::lookup(std::string_view word) const {
  if (auto id = vocab.find(word)) return *id;
  if (auto id = vocab.find(ascii_lower(word))) return *id;
  return Vocab::kUnk;
}

PretrainedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path,
                                                int dim) {
  if (dim < 1) throw UsageError("embedding dimension must be positive");
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embedding file", path.string());

  PretrainedEmbeddings out;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string word;
    ss >> word;
    std::vector<double> values;
    std::string field;
    while (ss >> field) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (ec != std::errc() || ptr != field.data() + field.size())
        throw DataError("non-numeric embedding value '" + field + "'",
                        path.string(), line_no);
      values.push_back(v);
    }
    if (static_cast<int>(values.size()) != dim)
      throw DataError("expected " + std::to_string(dim) + " values, found " +
                          std::to_string(values.size()),
                      path.string(), line_no);
    if (out.vocab.find(word)) continue;  // first occurrence wins
    out.vocab.add(word);
    rows.push_back(std::move(values));
  }
  out.table = Matrix::Zero(static_cast<Eigen::Index>(rows.size()) + 1, dim);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < dim; ++c)
      out.table(static_cast<Eigen::Index>(r) + 1, c) = rows[r][static_cast<std::size_t>(c)];
  return out;
}

std::optional<PretrainedEmbeddings> load_pretrained_or_fallback(
    const std::filesystem::path& path, int dim) {
  if (path.empty() || !std::filesystem::exists(path)) return std::nullopt;
  return load_pretrained_embeddings(path, dim);
}

}  // namespace dcst
