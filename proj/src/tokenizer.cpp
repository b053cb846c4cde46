#include "spanmetric/tokenizer.hpp"

#include "spanmetric/error.hpp"
#include "spanmetric/rng.hpp"
#include "spanmetric/utf8.hpp"

namespace spanmetric::net {

Vocab::Vocab(std::int32_t bucket_count) : buckets_(bucket_count) {
  if (bucket_count <= kReserved) {
    throw ConfigError("vocab bucket count must exceed the " + std::to_string(kReserved) +
                      " reserved ids");
  }
}

std::int32_t Vocab::id(std::string_view token) const {
  const auto span = static_cast<std::uint64_t>(buckets_ - kReserved);
  return kReserved + static_cast<std::int32_t>(fnv1a64(token) % span);
}

std::vector<Token> tokenize(std::string_view text, const Vocab& vocab) {
  const std::u32string cps = utf8::decode(text);
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < cps.size()) {
    if (utf8::is_space(cps[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && !utf8::is_space(cps[j])) ++j;
    for (std::size_t s = i; s < j; s += kMaxChunk) {
      const std::size_t e = std::min(j, s + kMaxChunk);
      Token t;
      t.text = utf8::encode(std::u32string_view(cps).substr(s, e - s));
      t.id = vocab.id(t.text);
      t.range = {s, e};
      out.push_back(std::move(t));
    }
    i = j;
  }
  return out;
}

std::vector<CharRange> offsets_of(std::span<const Token> tokens) {
  std::vector<CharRange> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.range);
  return out;
}

std::string_view to_string(PassKind k) {
  switch (k) {
    case PassKind::Src:
      return "src";
    case PassKind::Ref:
      return "ref";
    case PassKind::SrcRef:
      return "src+ref";
  }
  return "src";
}

ModelInput assemble_input(std::span<const Token> translation, PassKind kind,
                          std::span<const Token> source, std::span<const Token> reference,
                          std::size_t max_length) {
  const bool use_src = kind == PassKind::Src || kind == PassKind::SrcRef;
  const bool use_ref = kind == PassKind::Ref || kind == PassKind::SrcRef;
  const std::size_t n = translation.size();
  const std::size_t fixed = n + 2 + (use_src ? 2 : 0) + (use_ref ? 2 : 0);
  if (fixed > max_length) {
    throw ShapeError("translation of " + std::to_string(n) +
                     " tokens does not fit a maximum sequence length of " +
                     std::to_string(max_length));
  }
  std::size_t src_len = use_src ? source.size() : 0;
  std::size_t ref_len = use_ref ? reference.size() : 0;
  const std::size_t budget = max_length - fixed;
  bool truncated = false;
  while (src_len + ref_len > budget) {
    truncated = true;
    if (src_len >= ref_len) {
      --src_len;
    } else {
      --ref_len;
    }
  }

  ModelInput in;
  in.truncated = truncated;
  in.translation_length = n;
  in.ids.reserve(fixed + src_len + ref_len);
  auto push = [&in](std::int32_t id, SegmentType type) {
    in.ids.push_back(id);
    in.types.push_back(static_cast<std::int32_t>(type));
  };
  push(Vocab::kCls, SegmentType::Special);
  for (const auto& t : translation) push(t.id, SegmentType::Translation);
  push(Vocab::kTransSep, SegmentType::Special);
  if (use_src) {
    push(Vocab::kSep, SegmentType::Special);
    for (std::size_t i = 0; i < src_len; ++i) push(source[i].id, SegmentType::Source);
    push(Vocab::kSep, SegmentType::Special);
  }
  if (use_ref) {
    push(Vocab::kSep, SegmentType::Special);
    for (std::size_t i = 0; i < ref_len; ++i) push(reference[i].id, SegmentType::Reference);
    push(Vocab::kSep, SegmentType::Special);
  }
  return in;
}

}  // namespace spanmetric::net
