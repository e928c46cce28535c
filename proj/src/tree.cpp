#include "dcst/tree.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include "dcst/errors.hpp"

namespace dcst {

std::string TreeViolation::describe() const {
  std::ostringstream os;
  auto list = [&os](const std::vector<int>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  };
  const char* sep = "";
  if (!out_of_range.empty()) {
    os << sep << "heads out of range at {";
    list(out_of_range);
    os << "}";
    sep = "; ";
  }
  if (!self_loops.empty()) {
    os << sep << "self-attached tokens {";
    list(self_loops);
    os << "}";
    sep = "; ";
  }
  if (no_root) {
    os << sep << "no root";
    sep = "; ";
  }
  if (!roots.empty()) {
    os << sep << "multiple roots {";
    list(roots);
    os << "}";
    sep = "; ";
  }
  for (const auto& c : cycles) {
    os << sep << "cycle {";
    list(c);
    os << "}";
    sep = "; ";
  }
  return os.str();
}

std::optional<TreeViolation> validate_tree(std::span<const int> heads) {
  const int m = static_cast<int>(heads.size());
  TreeViolation v;
  std::vector<int> roots;
  for (int i = 0; i < m; ++i) {
    const int h = heads[i];
    if (h < 0 || h > m)
      v.out_of_range.push_back(i + 1);
    else if (h == i + 1)
      v.self_loops.push_back(i + 1);
    else if (h == 0)
      roots.push_back(i + 1);
  }
  if (roots.empty())
    v.no_root = true;
  else if (roots.size() > 1)
    v.roots = roots;

  // Colour walk: 0 unvisited, 1 on current path, 2 reaches ROOT or a
  // known-bad node.
  std::vector<int> state(m + 1, 0);
  state[0] = 2;
  for (int start = 1; start <= m; ++start) {
    if (state[start] != 0) continue;
    std::vector<int> path;
    int cur = start;
    while (true) {
      const int h = heads[cur - 1];
      if (h < 0 || h > m || h == cur) {  // already reported above
        state[cur] = 2;
        break;
      }
      state[cur] = 1;
      path.push_back(cur);
      if (state[h] == 2) break;
      if (state[h] == 1) {
        auto it = std::find(path.begin(), path.end(), h);
        std::vector<int> cycle(it, path.end());
        std::sort(cycle.begin(), cycle.end());
        v.cycles.push_back(std::move(cycle));
        break;
      }
      cur = h;
    }
    for (int p : path) state[p] = 2;
  }

  if (v.out_of_range.empty() && v.self_loops.empty() && !v.no_root &&
      v.roots.empty() && v.cycles.empty())
    return std::nullopt;
  return v;
}

DepTree tree_from_sentence(const Sentence& sentence) {
  DepTree t;
  bool any_label = false;
  for (const auto& tok : sentence.tokens) {
    if (!tok.head)
      throw DataError("token " + std::to_string(tok.id) + " has no head");
    t.heads.push_back(*tok.head);
    t.labels.push_back(tok.deprel.value_or("_"));
    any_label = any_label || tok.deprel.has_value();
  }
  if (!any_label) t.labels.clear();
  if (auto bad = validate_tree(t.heads))
    throw DataError("invalid dependency tree: " + bad->describe());
  return t;
}

void apply_tree(Sentence& sentence, const DepTree& tree) {
  if (static_cast<int>(sentence.size()) != tree.size())
    throw UsageError("apply_tree: length mismatch");
  for (int i = 0; i < tree.size(); ++i) {
    sentence.tokens[i].head = tree.heads[i];
    if (!tree.labels.empty())
      sentence.tokens[i].deprel = tree.labels[i];
    else
      sentence.tokens[i].deprel.reset();
  }
}

namespace {
void check_position(const DepTree& tree, int position) {
  if (position < 1 || position > tree.size())
    throw UsageError("position " + std::to_string(position) +
                     " outside 1.." + std::to_string(tree.size()));
}
}  // namespace

std::vector<int> children_counts(std::span<const int> heads) {
  std::vector<int> out(heads.size(), 0);
  for (int h : heads)
    if (h > 0 && h <= static_cast<int>(heads.size())) ++out[h - 1];
  return out;
}

std::vector<int> depths(std::span<const int> heads) {
  const int m = static_cast<int>(heads.size());
  std::vector<int> depth(m, 0);
  for (int i = 0; i < m; ++i) {
    if (depth[i]) continue;
    std::vector<int> path;
    int cur = i + 1;
    int base = 0;
    while (cur != 0) {
      if (depth[cur - 1]) {
        base = depth[cur - 1];
        break;
      }
      path.push_back(cur);
      if (static_cast<int>(path.size()) > m)
        throw UsageError("depths: head array contains a cycle");
      cur = heads[cur - 1];
    }
    for (auto it = path.rbegin(); it != path.rend(); ++it)
      depth[*it - 1] = ++base;
  }
  return depth;
}

int children_count(const DepTree& tree, int position) {
  check_position(tree, position);
  return static_cast<int>(
      std::count(tree.heads.begin(), tree.heads.end(), position));
}

int depth_of(const DepTree& tree, int position) {
  check_position(tree, position);
  return depths(tree.heads)[position - 1];
}

std::string_view scheme_name(Scheme scheme) {
  switch (scheme) {
    case Scheme::NC: return "nc";
    case Scheme::DR: return "dr";
    case Scheme::RPE: return "rpe";
    case Scheme::LM: return "lm";
  }
  return "?";
}

Scheme parse_scheme(std::string_view name) {
  std::string lower;
  for (char c : name)
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower == "nc") return Scheme::NC;
  if (lower == "dr") return Scheme::DR;
  if (lower == "rpe") return Scheme::RPE;
  if (lower == "lm") return Scheme::LM;
  throw UsageError("unknown tagging scheme '" + std::string(name) + "'");
}

CoarsePos::CoarsePos()
    : table_{{"NOUN", "N"},  {"PROPN", "PN"}, {"VERB", "V"},
             {"AUX", "V"},   {"ADJ", "J"},    {"PUNCT", "PU"},
             {"SYM", "PU"}} {}

CoarsePos::CoarsePos(std::map<std::string, std::string, std::less<>> table)
    : table_(std::move(table)) {}

std::string CoarsePos::operator()(std::string_view pos) const {
  auto it = table_.find(pos);
  return it == table_.end() ? std::string(pos) : it->second;
}

void CoarsePos::set(std::string fine, std::string coarse) {
  table_[std::move(fine)] = std::move(coarse);
}

std::string coarsen_pos(std::string_view upos) {
  static const CoarsePos table;
  return table(upos);
}

std::string RpeTag::str() const { return pos + "@" + std::to_string(offset); }

std::optional<RpeTag> RpeTag::parse(std::string_view text) {
  auto at = text.rfind('@');
  if (at == std::string_view::npos || at == 0) return std::nullopt;
  std::string_view num = text.substr(at + 1);
  int offset = 0;
  auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), offset);
  if (ec != std::errc() || ptr != num.data() + num.size() || num.empty())
    return std::nullopt;
  return RpeTag{std::string(text.substr(0, at)), offset};
}

namespace {
void require_tree(const DepTree& tree) {
  if (auto bad = validate_tree(tree.heads))
    throw UsageError("invalid dependency tree: " + bad->describe());
}
}  // namespace

TagSequence encode_nc(const DepTree& tree) {
  require_tree(tree);
  TagSequence out{Scheme::NC, {}};
  for (int c : children_counts(tree.heads)) out.tags.push_back(std::to_string(c));
  return out;
}

TagSequence encode_dr(const DepTree& tree) {
  require_tree(tree);
  TagSequence out{Scheme::DR, {}};
  for (int d : depths(tree.heads)) out.tags.push_back(std::to_string(d));
  return out;
}

TagSequence encode_rpe(const DepTree& tree, std::span<const std::string> pos,
                       const CoarsePos& coarse) {
  require_tree(tree);
  const int m = tree.size();
  if (static_cast<int>(pos.size()) != m)
    throw UsageError("encode_rpe: POS length differs from tree length");
  std::vector<std::string> cpos;
  cpos.reserve(m);
  for (const auto& p : pos) cpos.push_back(coarse(p));

  TagSequence out{Scheme::RPE, {}};
  for (int i = 1; i <= m; ++i) {
    const int h = tree.heads[i - 1];
    if (h == 0) {
      out.tags.emplace_back(kRootRpeTag);
      continue;
    }
    const std::string& p = cpos[h - 1];
    int k = 0;
    if (h > i) {
      for (int j = i + 1; j <= h; ++j) k += cpos[j - 1] == p;
    } else {
      for (int j = h; j < i; ++j) k += cpos[j - 1] == p;
      k = -k;
    }
    out.tags.push_back(RpeTag{p, k}.str());
  }
  return out;
}

TagSequence encode(Scheme scheme, const DepTree& tree,
                   std::span<const std::string> pos, const CoarsePos& coarse) {
  switch (scheme) {
    case Scheme::NC: return encode_nc(tree);
    case Scheme::DR: return encode_dr(tree);
    case Scheme::RPE: return encode_rpe(tree, pos, coarse);
    case Scheme::LM: break;
  }
  throw UsageError("the lm scheme has no tree encoding");
}

bool RpeDecoding::any_failed() const {
  return std::find(failed.begin(), failed.end(), true) != failed.end();
}

RpeDecoding decode_rpe(const TagSequence& tags,
                       std::span<const std::string> pos,
                       const CoarsePos& coarse) {
  const int m = static_cast<int>(tags.tags.size());
  if (static_cast<int>(pos.size()) != m)
    throw UsageError("decode_rpe: POS length differs from tag length");
  std::vector<std::string> cpos;
  cpos.reserve(m);
  for (const auto& p : pos) cpos.push_back(coarse(p));

  RpeDecoding out{std::vector<int>(m, 0), std::vector<bool>(m, false)};
  for (int i = 1; i <= m; ++i) {
    const std::string& text = tags.tags[i - 1];
    if (text == kRootRpeTag) continue;
    auto tag = RpeTag::parse(text);
    if (!tag || tag->offset == 0) {
      out.failed[i - 1] = true;
      continue;
    }
    int remaining = std::abs(tag->offset);
    const int step = tag->offset > 0 ? 1 : -1;
    int found = 0;
    for (int j = i + step; j >= 1 && j <= m; j += step) {
      if (cpos[j - 1] == tag->pos && --remaining == 0) {
        found = j;
        break;
      }
    }
    if (found == 0)
      out.failed[i - 1] = true;
    else
      out.heads[i - 1] = found;
  }
  return out;
}

std::string write_tag_file(std::span<const Sentence> sentences,
                           std::span<const TagSequence> tags) {
  if (sentences.size() != tags.size())
    throw UsageError("write_tag_file: sentence/tag count mismatch");
  std::ostringstream os;
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    if (sentences[s].size() != tags[s].tags.size())
      throw UsageError("write_tag_file: tag length mismatch");
    for (std::size_t i = 0; i < tags[s].tags.size(); ++i)
      os << sentences[s].tokens[i].form << '\t' << tags[s].tags[i] << '\n';
    os << '\n';
  }
  return os.str();
}

std::vector<TagFileEntry> parse_tag_file(std::string_view text,
                                         std::string_view source) {
  std::vector<TagFileEntry> out;
  TagFileEntry cur;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (!cur.forms.empty()) out.push_back(std::move(cur));
      cur = {};
      continue;
    }
    auto tab = line.find('\t');
    if (tab == std::string_view::npos ||
        line.find('\t', tab + 1) != std::string_view::npos)
      throw DataError("expected 2 tab-separated columns", std::string(source),
                      line_no);
    cur.forms.emplace_back(line.substr(0, tab));
    cur.tags.emplace_back(line.substr(tab + 1));
  }
  if (!cur.forms.empty()) out.push_back(std::move(cur));
  return out;
}

}  // namespace dcst
