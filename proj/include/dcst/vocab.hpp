#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dcst {

// String <-> id table. Id 0 is always the unknown entry.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();

  int add(const std::string& token);
  std::optional<int> find(std::string_view token) const;
  int id(std::string_view token) const { return find(token).value_or(kUnk); }
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  int size() const noexcept { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  nlohmann::json to_json() const;
  static Vocab from_json(const nlohmann::json& j);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int, std::less<>> index_;
};

// UTF-8 code points of s as separate strings (invalid bytes pass through
// one at a time).
std::vector<std::string> utf8_chars(std::string_view s);
std::string ascii_lower(std::string_view s);

}  // namespace dcst
