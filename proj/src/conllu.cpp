#include "dcst/conllu.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "dcst/errors.hpp"

namespace dcst {
namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> cols;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      cols.push_back(line.substr(start));
      return cols;
    }
    cols.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

std::optional<int> to_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::optional<std::string> optional_field(std::string_view s) {
  if (s == "_") return std::nullopt;
  return std::string(s);
}

struct Pending {
  Sentence sentence;
  std::size_t first_line = 0;
};

void finish(Pending& pending, Corpus& out, std::string_view source) {
  if (pending.sentence.empty()) return;
  const auto& toks = pending.sentence.tokens;
  const int m = static_cast<int>(toks.size());
  for (int i = 0; i < m; ++i) {
    if (toks[i].id != i + 1) {
      throw DataError("token ids are not contiguous 1.." + std::to_string(m) +
                          " (found id " + std::to_string(toks[i].id) +
                          " at position " + std::to_string(i + 1) + ")",
                      std::string(source), pending.first_line);
    }
    if (toks[i].head && *toks[i].head > m) {
      throw DataError("head " + std::to_string(*toks[i].head) +
                          " of token " + std::to_string(i + 1) +
                          " exceeds sentence length " + std::to_string(m),
                      std::string(source), pending.first_line);
    }
  }
  out.push_back(std::move(pending.sentence));
  pending = Pending{};
}

}  // namespace

bool Sentence::has_heads() const {
  if (tokens.empty()) return false;
  for (const auto& t : tokens)
    if (!t.head) return false;
  return true;
}

std::vector<std::string> Sentence::pos() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.upos.value_or("_"));
  return out;
}

std::vector<std::string> Sentence::forms() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.form);
  return out;
}

Corpus parse_conllu(std::string_view text, std::string_view source) {
  Corpus out;
  Pending pending;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  const std::string src(source);
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      finish(pending, out, source);
      if (nl == text.size()) break;
      continue;
    }
    if (line.front() == '#') continue;

    auto cols = split_tabs(line);
    if (cols.size() != 10) {
      throw DataError("expected 10 tab-separated columns, found " +
                          std::to_string(cols.size()),
                      src, line_no);
    }
    const std::string_view id = cols[0];
    if (id.find('-') != std::string_view::npos ||
        id.find('.') != std::string_view::npos) {
      continue;  // multiword range or empty node
    }
    auto id_value = to_int(id);
    if (!id_value || *id_value < 1)
      throw DataError("invalid token id '" + std::string(id) + "'", src,
                      line_no);

    Token tok;
    tok.id = *id_value;
    tok.form = std::string(cols[1]);
    tok.lemma = optional_field(cols[2]);
    tok.upos = optional_field(cols[3]);
    if (cols[6] != "_") {
      auto head = to_int(cols[6]);
      if (!head || *head < 0)
        throw DataError("invalid head '" + std::string(cols[6]) + "'", src,
                        line_no);
      if (*head == tok.id)
        throw DataError("token " + std::to_string(tok.id) + " heads itself",
                        src, line_no);
      tok.head = *head;
    }
    tok.deprel = optional_field(cols[7]);
    if (pending.sentence.empty()) pending.first_line = line_no;
    pending.sentence.tokens.push_back(std::move(tok));
    if (nl == text.size()) break;
  }
  finish(pending, out, source);
  return out;
}

std::string write_conllu(std::span<const Sentence> sentences) {
  std::ostringstream os;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) {
      os << t.id << '\t' << t.form << '\t' << t.lemma.value_or("_") << '\t'
         << t.upos.value_or("_") << "\t_\t_\t";
      if (t.head)
        os << *t.head;
      else
        os << '_';
      os << '\t' << t.deprel.value_or("_") << "\t_\t_\n";
    }
    os << '\n';
  }
  return os.str();
}

Sentence strip_annotations(const Sentence& sentence) {
  Sentence out = sentence;
  for (auto& t : out.tokens) {
    t.head.reset();
    t.deprel.reset();
  }
  return out;
}

Corpus strip_annotations(std::span<const Sentence> corpus) {
  Corpus out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) out.push_back(strip_annotations(s));
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file", path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

Corpus read_conllu_file(const std::filesystem::path& path) {
  return parse_conllu(read_text_file(path), path.string());
}

void write_conllu_file(const std::filesystem::path& path,
                       std::span<const Sentence> sentences) {
  write_text_file(path, write_conllu(sentences));
}

}  // namespace dcst
