#pragma once

// Shared structural checks on perturbation outputs.

#include <string>
#include <vector>

#include "spanmetric/perturb.hpp"
#include "spanmetric/utf8.hpp"

namespace checks {

inline std::vector<std::u32string> split_words(const std::u32string& t) {
  std::vector<std::u32string> out;
  std::u32string cur;
  for (char32_t c : t) {
    if (c == U' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Number of consecutive copies of the n-gram right before the injected span
// when the span is made of further copies of it; 0 when no n in {2,3,4} fits.
inline std::size_t oscillation_repeats(const spanmetric::perturb::PerturbedSegment& p) {
  if (p.injected_spans.size() != 1) return 0;
  const auto& sp = p.injected_spans[0];
  const auto t = spanmetric::utf8::decode(p.perturbed_translation);
  if (sp.start == 0 || sp.end > t.size() || t[sp.start - 1] != U' ') return 0;
  const auto before = split_words(t.substr(0, sp.start - 1));
  const auto inside = split_words(t.substr(sp.start, sp.end - sp.start));
  const auto after = t.substr(sp.end);
  if (!after.empty() && after.front() != U' ') return 0;
  for (std::size_t n = 2; n <= 4; ++n) {
    if (before.size() < n || inside.empty() || inside.size() % n) continue;
    const std::vector<std::u32string> gram(before.end() - static_cast<std::ptrdiff_t>(n), before.end());
    bool ok = true;
    for (std::size_t i = 0; i < inside.size() && ok; ++i) ok = inside[i] == gram[i % n];
    if (ok) {
      const std::size_t copies = 1 + inside.size() / n;
      if (copies >= 2 && copies <= 11) return copies;
    }
  }
  return 0;
}

}  // namespace checks
