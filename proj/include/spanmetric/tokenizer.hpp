#pragma once

// Hashed-chunk tokenizer and unified-input assembly for the toy encoder.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spanmetric/annotations.hpp"

namespace spanmetric::net {

class Vocab {
 public:
  static constexpr std::int32_t kCls = 0;        // "<s>" opening the sequence
  static constexpr std::int32_t kTransSep = 1;   // "<s>" closing the translation
  static constexpr std::int32_t kSep = 2;        // "</s>" around additional inputs
  static constexpr std::int32_t kReserved = 3;

  explicit Vocab(std::int32_t bucket_count = 4096);

  std::int32_t bucket_count() const { return buckets_; }
  // FNV-1a of the UTF-8 bytes folded into [kReserved, bucket_count).
  std::int32_t id(std::string_view token) const;

 private:
  std::int32_t buckets_;
};

struct Token {
  std::string text;
  std::int32_t id = 0;
  CharRange range;
};

inline constexpr std::size_t kMaxChunk = 4;

// Splits on whitespace, then cuts every word into chunks of at most four
// scalar values. Offsets index the original text.
std::vector<Token> tokenize(std::string_view text, const Vocab& vocab);

std::vector<CharRange> offsets_of(std::span<const Token> tokens);

// Which additional input accompanies the translation in one forward pass.
enum class PassKind { Src = 0, Ref = 1, SrcRef = 2 };
inline constexpr std::size_t kPassKinds = 3;

std::string_view to_string(PassKind k);

enum class SegmentType : std::int32_t { Special = 0, Translation = 1, Source = 2, Reference = 3 };
inline constexpr std::int32_t kSegmentTypes = 4;

struct ModelInput {
  std::vector<std::int32_t> ids;
  std::vector<std::int32_t> types;
  // Translation tokens occupy positions 1 .. translation_length.
  std::size_t translation_length = 0;
  bool truncated = false;

  std::size_t size() const { return ids.size(); }
};

// Layout: <s> translation <s> </s> src </s> </s> ref </s>, keeping only the
// segments the pass needs. When the sequence exceeds max_length the
// additional inputs are shortened (longest first); the translation is never
// cut, and a translation that cannot fit raises ShapeError.
ModelInput assemble_input(std::span<const Token> translation, PassKind kind,
                          std::span<const Token> source, std::span<const Token> reference,
                          std::size_t max_length);

}  // namespace spanmetric::net
