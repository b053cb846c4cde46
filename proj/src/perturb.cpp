#include "spanmetric/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "spanmetric/error.hpp"
#include "spanmetric/utf8.hpp"

namespace spanmetric::perturb {

namespace {

constexpr std::array<std::string_view, 8> kKindNames = {
    "detached_random", "detached_similar", "oscillatory", "add_text",
    "negation",        "mask_infill",      "swap_num",    "swap_ne"};

bool is_ascii_digit(char32_t c) { return c >= U'0' && c <= U'9'; }
bool is_ascii_upper(char32_t c) { return c >= U'A' && c <= U'Z'; }
bool is_ascii_alnum(char32_t c) {
  return is_ascii_digit(c) || is_ascii_upper(c) || (c >= U'a' && c <= U'z');
}
bool is_word_char(char32_t c) {
  return is_ascii_alnum(c) || c == U'\'' || (c >= 0x80 && !utf8::is_space(c));
}
char32_t ascii_lower(char32_t c) { return is_ascii_upper(c) ? c + 32 : c; }
char32_t ascii_upper(char32_t c) { return (c >= U'a' && c <= U'z') ? c - 32 : c; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<CharRange> words_of(const std::u32string& t) {
  std::vector<CharRange> out;
  std::size_t i = 0;
  while (i < t.size()) {
    while (i < t.size() && utf8::is_space(t[i])) ++i;
    if (i >= t.size()) break;
    std::size_t j = i;
    while (j < t.size() && !utf8::is_space(t[j])) ++j;
    out.push_back({i, j});
    i = j;
  }
  return out;
}

PerturbedSegment make(const Segment& seg, Kind kind, std::u32string text,
                      std::vector<ErrorSpan> spans) {
  PerturbedSegment p;
  p.base = seg;
  p.kind = kind;
  p.perturbed_translation = utf8::encode(text);
  p.injected_spans = std::move(spans);
  if (p.perturbed_translation == seg.translation) {
    throw NotApplicable(std::string(to_string(kind)) + ": perturbation left the text unchanged");
  }
  return p;
}

// Replaces [start, end) of t with `with`; span covers the replacement.
PerturbedSegment replace_region(const Segment& seg, Kind kind, const std::u32string& t,
                                std::size_t start, std::size_t end, const std::u32string& with,
                                Severity sev) {
  std::u32string out = t.substr(0, start) + with + t.substr(end);
  return make(seg, kind, std::move(out), {ErrorSpan{start, start + with.size(), sev, std::nullopt}});
}

std::vector<std::string> usable_pool(std::span<const std::string> pool, const std::string& exclude) {
  std::vector<std::string> out;
  for (const auto& s : pool) {
    if (s != exclude && !trim(s).empty()) out.push_back(s);
  }
  return out;
}

PerturbedSegment full_cover(const Segment& seg, Kind kind, const std::string& text) {
  const std::size_t len = utf8::length(text);
  return make(seg, kind, utf8::decode(text),
              {ErrorSpan{0, len, Severity::Critical, std::nullopt}});
}

}  // namespace

std::string_view to_string(Kind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::optional<Kind> parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<Kind>(i);
  }
  return std::nullopt;
}

bool is_hallucination(Kind k) {
  return k == Kind::DetachedRandom || k == Kind::DetachedSimilar || k == Kind::Oscillatory;
}

std::vector<CharRange> words_of(std::string_view text) { return words_of(utf8::decode(text)); }

double trigram_cosine(std::string_view a, std::string_view b) {
  auto profile = [](std::string_view s) {
    const auto t = utf8::decode(s);
    std::map<std::u32string, double> counts;
    if (t.empty()) return counts;
    if (t.size() < 3) {
      counts[t] = 1.0;
      return counts;
    }
    for (std::size_t i = 0; i + 3 <= t.size(); ++i) counts[t.substr(i, 3)] += 1.0;
    return counts;
  };
  const auto pa = profile(a);
  const auto pb = profile(b);
  if (pa.empty() && pb.empty()) return 1.0;
  if (pa.empty() || pb.empty()) return 0.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (const auto& [g, c] : pa) {
    na += c * c;
    auto it = pb.find(g);
    if (it != pb.end()) dot += c * it->second;
  }
  for (const auto& [g, c] : pb) nb += c * c;
  return dot / std::sqrt(na * nb);
}

std::vector<NegationRule> parse_negation_lexicon(std::string_view text) {
  std::vector<NegationRule> rules;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto arrow = line.find("=>");
    if (arrow == std::string_view::npos) {
      throw ConfigError("negation lexicon line " + std::to_string(line_no) + ": missing '=>'");
    }
    NegationRule r{std::string(trim(line.substr(0, arrow))), std::string(trim(line.substr(arrow + 2)))};
    if (r.from.empty() || r.to.empty()) {
      throw ConfigError("negation lexicon line " + std::to_string(line_no) +
                        ": both sides must be non-empty");
    }
    rules.push_back(std::move(r));
  }
  return rules;
}

const std::vector<NegationRule>& default_negation_lexicon() {
  static const std::vector<NegationRule> rules = parse_negation_lexicon(
      "is not => is\n"
      "are not => are\n"
      "was not => was\n"
      "were not => were\n"
      "does not => does\n"
      "do not => do\n"
      "did not => did\n"
      "cannot => can\n"
      "will not => will\n"
      "should not => should\n"
      "has not => has\n"
      "have not => have\n"
      "may => does not\n"
      "might => does not\n"
      "can => cannot\n"
      "will => will not\n"
      "should => should not\n"
      "could => could not\n"
      "must => must not\n"
      "is => is not\n"
      "are => are not\n"
      "was => was not\n"
      "were => were not\n"
      "has => has not\n"
      "have => have not\n");
  return rules;
}

UnigramTable UnigramTable::from_texts(std::span<const std::string> texts) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& t : texts) {
    const auto u = utf8::decode(t);
    for (const auto& w : words_of(u)) counts[utf8::encode(u.substr(w.start, w.end - w.start))]++;
  }
  UnigramTable table;
  std::uint64_t run = 0;
  for (const auto& [w, c] : counts) {
    run += c;
    table.words_.push_back(w);
    table.cumulative_.push_back(run);
  }
  return table;
}

const std::string& UnigramTable::sample(Rng& rng) const {
  if (words_.empty()) throw ConfigError("unigram table is empty");
  const std::uint64_t r = rng.below(cumulative_.back());
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
  return words_[static_cast<std::size_t>(it - cumulative_.begin())];
}

PerturbedSegment hallucinate_random(const Segment& seg, std::span<const std::string> pool,
                                    Rng& rng) {
  const auto usable = usable_pool(pool, seg.translation);
  if (usable.empty()) throw NotApplicable("detached_random: no usable pool sentence");
  return full_cover(seg, Kind::DetachedRandom, usable[rng.below(usable.size())]);
}

PerturbedSegment hallucinate_similar(const Segment& seg, std::span<const std::string> pool,
                                     const Similarity& similarity) {
  const auto usable = usable_pool(pool, seg.translation);
  if (usable.empty()) throw NotApplicable("detached_similar: no usable pool sentence");
  std::size_t best = 0;
  double best_sim = similarity(seg.source, usable[0]);
  for (std::size_t i = 1; i < usable.size(); ++i) {
    const double s = similarity(seg.source, usable[i]);
    if (s > best_sim) {
      best_sim = s;
      best = i;
    }
  }
  return full_cover(seg, Kind::DetachedSimilar, usable[best]);
}

PerturbedSegment hallucinate_oscillatory(const Segment& seg, Rng& rng) {
  const auto t = utf8::decode(seg.translation);
  const auto words = words_of(t);
  std::vector<std::size_t> feasible;
  for (std::size_t n = 2; n <= 4; ++n) {
    if (words.size() >= n) feasible.push_back(n);
  }
  if (feasible.empty()) throw NotApplicable("oscillatory: translation needs at least two words");
  const std::size_t n = feasible[rng.below(feasible.size())];
  const std::size_t first = rng.below(words.size() - n + 1);
  const std::size_t k = static_cast<std::size_t>(rng.between(1, 10));
  const std::size_t g_start = words[first].start;
  const std::size_t g_end = words[first + n - 1].end;
  const std::u32string gram = t.substr(g_start, g_end - g_start);
  std::u32string inserted;
  for (std::size_t i = 0; i < k; ++i) inserted += U" " + gram;
  std::u32string out = t.substr(0, g_end) + inserted + t.substr(g_end);
  return make(seg, Kind::Oscillatory, std::move(out),
              {ErrorSpan{g_end + 1, g_end + inserted.size(), Severity::Critical, std::nullopt}});
}

PerturbedSegment swap_number(const Segment& seg, Rng& rng) {
  const auto t = utf8::decode(seg.translation);
  std::vector<CharRange> runs;
  for (std::size_t i = 0; i < t.size();) {
    if (!is_ascii_digit(t[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < t.size() && is_ascii_digit(t[j])) ++j;
    runs.push_back({i, j});
    i = j;
  }
  if (runs.empty()) throw NotApplicable("swap_num: no digits in translation");
  const auto run = runs[rng.below(runs.size())];
  const std::u32string original = t.substr(run.start, run.end - run.start);
  std::u32string repl;
  do {
    const auto digits = static_cast<std::size_t>(rng.between(1, 4));
    repl.clear();
    for (std::size_t d = 0; d < digits; ++d) {
      const auto lo = (d == 0 && digits > 1) ? 1 : 0;
      repl.push_back(static_cast<char32_t>(U'0' + rng.between(lo, 9)));
    }
  } while (repl == original);
  return replace_region(seg, Kind::SwapNum, t, run.start, run.end, repl, Severity::Major);
}

PerturbedSegment swap_entity(const Segment& seg, Rng& rng, std::span<const std::string> entity_pool) {
  std::vector<std::u32string> pool;
  for (const auto& e : entity_pool) {
    if (!trim(e).empty()) pool.push_back(utf8::decode(trim(e)));
  }
  if (pool.empty()) throw ConfigError("swap_ne: entity pool is empty");
  const auto t = utf8::decode(seg.translation);
  const auto words = words_of(t);

  std::vector<CharRange> found;
  auto add = [&](CharRange r) {
    if (r.end > r.start && std::find(found.begin(), found.end(), r) == found.end()) found.push_back(r);
  };
  for (std::size_t w = 0; w < words.size(); ++w) {
    std::size_t s = words[w].start, e = words[w].end;
    while (s < e && !is_word_char(t[s])) ++s;
    while (e > s && !is_word_char(t[e - 1])) --e;
    if (s == e || !is_ascii_upper(t[s])) continue;
    bool sentence_initial = w == 0;
    if (!sentence_initial) {
      const char32_t prev = t[words[w - 1].end - 1];
      sentence_initial = prev == U'.' || prev == U'!' || prev == U'?';
    }
    if (!sentence_initial) add({s, e});
  }
  for (const auto& ent : pool) {
    for (std::size_t pos = t.find(ent); pos != std::u32string::npos; pos = t.find(ent, pos + 1)) {
      const std::size_t end = pos + ent.size();
      const bool left_ok = pos == 0 || !is_word_char(t[pos - 1]);
      const bool right_ok = end == t.size() || !is_word_char(t[end]);
      if (left_ok && right_ok) add({pos, end});
    }
  }
  std::sort(found.begin(), found.end(),
            [](const CharRange& a, const CharRange& b) { return a.start != b.start ? a.start < b.start : a.end < b.end; });
  if (found.empty()) throw NotApplicable("swap_ne: no entity found");
  const auto r = found[rng.below(found.size())];
  const std::u32string original = t.substr(r.start, r.end - r.start);
  std::vector<const std::u32string*> options;
  for (const auto& e : pool) {
    if (e != original) options.push_back(&e);
  }
  if (options.empty()) throw NotApplicable("swap_ne: pool has no entity different from the original");
  const auto& repl = *options[rng.below(options.size())];
  return replace_region(seg, Kind::SwapNe, t, r.start, r.end, repl, Severity::Major);
}

PerturbedSegment negate(const Segment& seg, std::span<const NegationRule> lexicon, Rng& rng) {
  if (lexicon.empty()) throw ConfigError("negation: lexicon is empty");
  const auto t = utf8::decode(seg.translation);
  struct Match {
    std::size_t start;
    std::size_t end;
    std::size_t rule;
  };
  std::vector<Match> best_at(t.size(), Match{0, 0, 0});
  std::vector<std::u32string> froms;
  for (const auto& r : lexicon) froms.push_back(utf8::decode(r.from));
  for (std::size_t pos = 0; pos < t.size(); ++pos) {
    if (pos > 0 && is_word_char(t[pos - 1])) continue;
    for (std::size_t ri = 0; ri < froms.size(); ++ri) {
      const auto& f = froms[ri];
      if (pos + f.size() > t.size()) continue;
      bool eq = true;
      for (std::size_t k = 0; k < f.size() && eq; ++k) eq = ascii_lower(t[pos + k]) == ascii_lower(f[k]);
      if (!eq) continue;
      const std::size_t end = pos + f.size();
      if (end < t.size() && is_word_char(t[end])) continue;
      if (end - pos > best_at[pos].end - best_at[pos].start) best_at[pos] = {pos, end, ri};
    }
  }
  std::vector<Match> matches;
  for (const auto& m : best_at) {
    if (m.end > m.start) matches.push_back(m);
  }
  if (matches.empty()) throw NotApplicable("negation: no lexicon pattern matches");
  const auto m = matches[rng.below(matches.size())];
  std::u32string repl = utf8::decode(lexicon[m.rule].to);
  if (is_ascii_upper(t[m.start]) && !repl.empty()) repl[0] = ascii_upper(repl[0]);
  return replace_region(seg, Kind::Negation, t, m.start, m.end, repl, Severity::Major);
}

PerturbedSegment add_text(const Segment& seg, std::span<const std::string> pool, Rng& rng) {
  std::vector<std::u32string> usable;
  for (const auto& s : pool) {
    auto u = utf8::decode(s);
    if (!words_of(u).empty()) usable.push_back(std::move(u));
  }
  if (usable.empty()) throw NotApplicable("add_text: pool is empty");
  const auto& src = usable[rng.below(usable.size())];
  const auto words = words_of(src);
  const std::size_t lo = std::min<std::size_t>(3, words.size());
  const std::size_t hi = std::min<std::size_t>(12, words.size());
  const auto len = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(lo),
                                                        static_cast<std::int64_t>(hi)));
  const std::size_t first = rng.below(words.size() - len + 1);
  const std::u32string frag =
      src.substr(words[first].start, words[first + len - 1].end - words[first].start);
  const auto t = utf8::decode(seg.translation);
  const bool append = rng.coin();
  if (t.empty()) {
    return make(seg, Kind::AddText, frag, {ErrorSpan{0, frag.size(), Severity::Major, std::nullopt}});
  }
  if (append) {
    std::u32string out = t + U" " + frag;
    return make(seg, Kind::AddText, std::move(out),
                {ErrorSpan{t.size(), t.size() + 1 + frag.size(), Severity::Major, std::nullopt}});
  }
  std::u32string out = frag + U" " + t;
  return make(seg, Kind::AddText, std::move(out),
              {ErrorSpan{0, frag.size() + 1, Severity::Major, std::nullopt}});
}

PerturbedSegment mask_infill(const Segment& seg, const UnigramTable& unigrams, Rng& rng) {
  if (unigrams.empty()) throw ConfigError("mask_infill: unigram table is empty");
  const auto t = utf8::decode(seg.translation);
  const auto words = words_of(t);
  if (words.size() < 4) throw NotApplicable("mask_infill: translation needs at least four words");
  for (int attempt = 0; attempt < 100; ++attempt) {
    const auto width = static_cast<std::size_t>(rng.between(1, 3));
    const std::size_t first = rng.below(words.size() - width + 1);
    const auto count = rng.between(1, 4);
    std::u32string repl;
    for (std::int64_t i = 0; i < count; ++i) {
      if (i) repl += U' ';
      repl += utf8::decode(unigrams.sample(rng));
    }
    const std::size_t start = words[first].start;
    const std::size_t end = words[first + width - 1].end;
    if (t.compare(start, end - start, repl) == 0) continue;
    return replace_region(seg, Kind::MaskInfill, t, start, end, repl, Severity::Major);
  }
  throw NotApplicable("mask_infill: could not sample a different in-fill");
}

std::optional<std::string> missing_resource(Kind kind, const Resources& res) {
  switch (kind) {
    case Kind::DetachedRandom:
    case Kind::DetachedSimilar:
    case Kind::AddText:
      if (res.sentence_pool.empty()) return std::string("sentence pool");
      break;
    case Kind::SwapNe:
      if (res.entity_pool.empty()) return std::string("entity pool");
      break;
    case Kind::Negation:
      if (res.negation_lexicon.empty()) return std::string("negation lexicon");
      break;
    case Kind::MaskInfill:
      if (res.unigrams.empty()) return std::string("unigram table");
      break;
    case Kind::Oscillatory:
    case Kind::SwapNum:
      break;
  }
  return std::nullopt;
}

PerturbedSegment apply(Kind kind, const Segment& seg, const Resources& res, Rng& rng) {
  switch (kind) {
    case Kind::DetachedRandom:
      return hallucinate_random(seg, res.sentence_pool, rng);
    case Kind::DetachedSimilar:
      return hallucinate_similar(seg, res.sentence_pool, res.similarity);
    case Kind::Oscillatory:
      return hallucinate_oscillatory(seg, rng);
    case Kind::AddText:
      return add_text(seg, res.sentence_pool, rng);
    case Kind::Negation:
      return negate(seg, res.negation_lexicon, rng);
    case Kind::MaskInfill:
      return mask_infill(seg, res.unigrams, rng);
    case Kind::SwapNum:
      return swap_number(seg, rng);
    case Kind::SwapNe:
      return swap_entity(seg, rng, res.entity_pool);
  }
  throw ConfigError("unknown perturbation kind");
}

std::uint64_t item_seed(std::uint64_t seed, std::string_view segment_id, Kind kind) {
  return derive_seed(seed, perturbed_id(segment_id, kind));
}

std::string perturbed_id(std::string_view base_id, Kind kind) {
  return std::string(base_id) + "::" + std::string(to_string(kind));
}

Segment to_segment(const PerturbedSegment& p, bool keep_base_spans) {
  Segment s = p.base;
  s.id = perturbed_id(p.base.id, p.kind);
  s.translation = p.perturbed_translation;
  std::vector<ErrorSpan> spans;
  if (keep_base_spans && !is_hallucination(p.kind) && p.base.gold_spans) {
    const auto a = utf8::decode(p.base.translation);
    const auto b = utf8::decode(p.perturbed_translation);
    std::size_t pre = 0;
    while (pre < a.size() && pre < b.size() && a[pre] == b[pre]) ++pre;
    std::size_t suf = 0;
    while (suf < a.size() - pre && suf < b.size() - pre &&
           a[a.size() - 1 - suf] == b[b.size() - 1 - suf]) {
      ++suf;
    }
    const std::size_t old_edit_end = a.size() - suf;
    for (const auto& sp : *p.base.gold_spans) {
      if (sp.end <= pre) {
        spans.push_back(sp);
      } else if (sp.start >= old_edit_end) {
        ErrorSpan moved = sp;
        moved.start = sp.start - old_edit_end + (b.size() - suf);
        moved.end = sp.end - old_edit_end + (b.size() - suf);
        spans.push_back(moved);
      }
    }
  }
  spans.insert(spans.end(), p.injected_spans.begin(), p.injected_spans.end());
  std::sort(spans.begin(), spans.end(), [](const ErrorSpan& x, const ErrorSpan& y) {
    return x.start != y.start ? x.start < y.start : x.end < y.end;
  });
  s.gold_score = mqm_score(spans);
  s.gold_spans = std::move(spans);
  return s;
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw UndefinedStatistic("quantile of empty data");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<KindReport> stress_report(std::span<const StressPair> pairs) {
  std::vector<KindReport> out;
  for (Kind kind : kAllKinds) {
    KindReport rep;
    rep.kind = kind;
    std::vector<double> deltas;
    for (const auto& p : pairs) {
      if (p.kind != kind) continue;
      ++rep.count;
      if (p.perturbed.spans.empty()) ++rep.no_error;
      Severity worst = Severity::Ok;
      for (const auto& s : p.perturbed.spans) {
        ++rep.span_severity[index_of(s.severity)];
        worst = max_severity(worst, s.severity);
      }
      ++rep.item_severity[index_of(worst)];
      deltas.push_back(100.0 * (p.original.score - p.perturbed.score));
      const double clamped = std::clamp(p.perturbed.score, 0.0, 1.0);
      const auto bin = std::min<std::size_t>(9, static_cast<std::size_t>(clamped * 10.0));
      ++rep.score_histogram[bin];
    }
    if (rep.count == 0) continue;
    rep.no_error_rate = 100.0 * static_cast<double>(rep.no_error) / static_cast<double>(rep.count);
    std::sort(deltas.begin(), deltas.end());
    rep.delta.median = quantile_sorted(deltas, 0.5);
    rep.delta.q1 = quantile_sorted(deltas, 0.25);
    rep.delta.q3 = quantile_sorted(deltas, 0.75);
    rep.delta.min = deltas.front();
    rep.delta.max = deltas.back();
    rep.delta.mean =
        std::accumulate(deltas.begin(), deltas.end(), 0.0) / static_cast<double>(deltas.size());
    const auto below = std::count_if(deltas.begin(), deltas.end(), [](double d) { return d < 1.0; });
    rep.delta.fraction_below_one_point =
        static_cast<double>(below) / static_cast<double>(deltas.size());
    out.push_back(rep);
  }
  return out;
}

}  // namespace spanmetric::perturb
