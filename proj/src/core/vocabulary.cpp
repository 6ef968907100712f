#include "radar/core/vocabulary.hpp"

#include <cctype>
#include <set>

#include "radar/core/rng.hpp"

namespace radar {
namespace {

constexpr std::string_view kReserved[] = {"<pad>", "<unk>", "<bos>", "<eos>"};

bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }
bool is_space(unsigned char c) { return c < 0x80 && std::isspace(c); }

bool attaches_left(const std::string& t) {
  return t.size() == 1 && std::string_view(".,:;!?)]}%").find(t[0]) != std::string_view::npos;
}
bool attaches_right(const std::string& t) {
  return t.size() == 1 && std::string_view("([{").find(t[0]) != std::string_view::npos;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (unsigned char c : text) {
    if (is_space(c)) {
      flush();
    } else if (is_punct(c)) {
      flush();
      out.emplace_back(1, static_cast<char>(c));
    } else {
      cur.push_back(static_cast<char>(c));
    }
  }
  flush();
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  bool glue = true;
  for (const auto& t : tokens) {
    if (!glue && !attaches_left(t)) out.push_back(' ');
    out += t;
    glue = attaches_right(t);
  }
  return out;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>(std::begin(kReserved), std::end(kReserved))) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < kNumReserved) throw Error("vocabulary lacks reserved tokens");
  for (std::size_t i = 0; i < kNumReserved; ++i) {
    if (tokens_[i] != kReserved[i]) throw Error("vocabulary reserved token mismatch at id " + std::to_string(i));
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::span<const std::string> extra) {
  std::vector<std::string> tokens(std::begin(kReserved), std::end(kReserved));
  std::set<std::string> seen(tokens.begin(), tokens.end());
  for (const auto& e : extra) {
    if (seen.insert(e).second) tokens.push_back(e);
  }
  std::set<std::string> corpus;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) {
      if (!seen.contains(tok)) corpus.insert(std::move(tok));
    }
  }
  tokens.insert(tokens.end(), corpus.begin(), corpus.end());
  return Vocabulary(std::move(tokens));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!contains(id)) throw Error("token id " + std::to_string(id) + " out of vocabulary");
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

TokenSequence Vocabulary::encode(std::string_view text) const {
  TokenSequence ids;
  for (const auto& t : tokenize(text)) ids.push_back(id(t));
  return ids;
}

std::string Vocabulary::decode(TokenSpan ids) const {
  std::vector<std::string> words;
  words.reserve(ids.size());
  for (TokenId id : ids) {
    if (is_special(id)) continue;
    words.push_back(token(id));
  }
  return detokenize(words);
}

void Vocabulary::validate(TokenSpan ids) const {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!contains(ids[i])) {
      throw Error("token id " + std::to_string(ids[i]) + " at position " + std::to_string(i) +
                  " is out of vocabulary (size " + std::to_string(size()) + ")");
    }
  }
}

std::uint64_t Vocabulary::checksum() const {
  std::uint64_t h = fnv1a("");
  for (const auto& t : tokens_) {
    h = fnv1a(t, h);
    h = fnv1a(std::string_view("\n", 1), h);
  }
  return h;
}

TokenSequence strip_eos(TokenSpan ids) {
  TokenSequence out(ids.begin(), ids.end());
  if (!out.empty() && out.back() == Vocabulary::kEos) out.pop_back();
  return out;
}

}  // namespace radar
