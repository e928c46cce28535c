#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dcst/conllu.hpp"

namespace dcst {

// Heads are 1-based token positions with 0 = ROOT; heads[i] is the head of
// token i + 1. Labels are either empty or one per token.
struct DepTree {
  std::vector<int> heads;
  std::vector<std::string> labels;

  int size() const noexcept { return static_cast<int>(heads.size()); }
  bool operator==(const DepTree&) const = default;
};

// Why a head array is not a single-rooted arborescence. Indices are 1-based
// token positions.
struct TreeViolation {
  std::vector<int> out_of_range;
  std::vector<int> self_loops;
  std::vector<int> roots;  // all ROOT-attached tokens when there is not exactly one
  bool no_root = false;
  std::vector<std::vector<int>> cycles;

  std::string describe() const;
};

// std::nullopt means the heads form a valid single-rooted tree.
std::optional<TreeViolation> validate_tree(std::span<const int> heads);
inline bool is_valid_tree(std::span<const int> heads) {
  return !validate_tree(heads).has_value();
}

// Throws DataError if the sentence lacks heads or they do not form a tree.
DepTree tree_from_sentence(const Sentence& sentence);
void apply_tree(Sentence& sentence, const DepTree& tree);

int children_count(const DepTree& tree, int position);
int depth_of(const DepTree& tree, int position);
std::vector<int> children_counts(std::span<const int> heads);
// Root distances for a valid head array.
std::vector<int> depths(std::span<const int> heads);

enum class Scheme { NC, DR, RPE, LM };

std::string_view scheme_name(Scheme scheme);  // "nc", "dr", "rpe", "lm"
Scheme parse_scheme(std::string_view name);   // case-insensitive

struct TagSequence {
  Scheme scheme = Scheme::NC;
  std::vector<std::string> tags;

  bool operator==(const TagSequence&) const = default;
};

// Maps fine POS tags onto the coarse categories used by the relative
// POS-based encoding. Unlisted tags map to themselves.
class CoarsePos {
 public:
  CoarsePos();  // UD default table
  explicit CoarsePos(std::map<std::string, std::string, std::less<>> table);

  std::string operator()(std::string_view pos) const;
  void set(std::string fine, std::string coarse);
  const auto& table() const noexcept { return table_; }

 private:
  std::map<std::string, std::string, std::less<>> table_;
};

std::string coarsen_pos(std::string_view upos);

struct RpeTag {
  std::string pos;
  int offset = 0;

  std::string str() const;
  static std::optional<RpeTag> parse(std::string_view text);
  bool operator==(const RpeTag&) const = default;
};

inline constexpr std::string_view kRootRpeTag = "ROOT@0";

TagSequence encode_nc(const DepTree& tree);
TagSequence encode_dr(const DepTree& tree);
TagSequence encode_rpe(const DepTree& tree, std::span<const std::string> pos,
                       const CoarsePos& coarse = CoarsePos());
TagSequence encode(Scheme scheme, const DepTree& tree,
                   std::span<const std::string> pos,
                   const CoarsePos& coarse = CoarsePos());

struct RpeDecoding {
  std::vector<int> heads;
  std::vector<bool> failed;  // per token: reference could not be resolved

  bool any_failed() const;
};

// Inverse of encode_rpe. Unresolvable references fall back to head 0 and are
// flagged; the result is not validated.
RpeDecoding decode_rpe(const TagSequence& tags,
                       std::span<const std::string> pos,
                       const CoarsePos& coarse = CoarsePos());

// Two-column dump: form TAB tag, blank line between sentences.
std::string write_tag_file(std::span<const Sentence> sentences,
                           std::span<const TagSequence> tags);
struct TagFileEntry {
  std::vector<std::string> forms;
  std::vector<std::string> tags;
};
std::vector<TagFileEntry> parse_tag_file(std::string_view text,
                                         std::string_view source = "<input>");

}  // namespace dcst
