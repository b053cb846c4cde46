#include "spanmetric/synthetic.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "spanmetric/error.hpp"
#include "spanmetric/perturb.hpp"
#include "spanmetric/rng.hpp"

namespace spanmetric::synthetic {

namespace {

constexpr std::size_t kVocab = 32;
constexpr std::size_t kEntities = 16;
constexpr std::size_t kPoolSentences = 400;

std::vector<std::string> pick(std::vector<std::string> all, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  rng.shuffle(all);
  all.resize(n);
  return all;
}

std::vector<std::string> make_target() {
  std::vector<std::string> all;
  for (char a : std::string("bdfgklmnprst")) {
    for (char b : std::string("aeiou")) {
      for (char c : std::string("bdfgklmnprst")) all.push_back({a, b, c});
    }
  }
  return pick(std::move(all), kVocab, 11);
}

// Vowel-consonant-vowel, so no source word can equal a target word.
std::vector<std::string> make_source() {
  std::vector<std::string> all;
  for (char a : std::string("aeiouy")) {
    for (char b : std::string("cjqvwxz")) {
      for (char c : std::string("aeiouy")) all.push_back({a, b, c});
    }
  }
  return pick(std::move(all), kVocab, 12);
}

std::vector<std::string> make_entities() {
  std::vector<std::string> all;
  for (char a : std::string("BDKLMNRST")) {
    for (char b : std::string("aeiou")) {
      for (char c : std::string("klmnrst")) {
        for (char d : std::string("aio")) all.push_back({a, b, c, d});
      }
    }
  }
  return pick(std::move(all), kEntities, 13);
}

enum class TokKind { Word, Entity, Number };

struct Tok {
  std::string text;
  std::string source;
  TokKind kind = TokKind::Word;
  std::size_t word = 0;  // lexicon index for words
};

struct Sentence {
  std::vector<Tok> toks;
};

Sentence make_sentence(Rng& rng, const Config& cfg) {
  const auto& tw = target_words();
  const auto& sw = source_words();
  const auto& ents = entities();
  const auto n = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(cfg.min_words),
                                                      static_cast<std::int64_t>(cfg.max_words)));
  Sentence s;
  for (std::size_t i = 0; i < n; ++i) {
    Tok t;
    t.word = rng.below(tw.size());
    t.text = tw[t.word];
    t.source = sw[t.word];
    s.toks.push_back(t);
  }
  // At most one entity and one number, never in first position.
  if (rng.uniform() < 0.6) {
    auto& t = s.toks[1 + rng.below(n - 1)];
    t.kind = TokKind::Entity;
    t.text = t.source = ents[rng.below(ents.size())];
  }
  if (rng.uniform() < 0.5) {
    auto& t = s.toks[1 + rng.below(n - 1)];
    if (t.kind == TokKind::Word) {
      t.kind = TokKind::Number;
      t.text = t.source = std::to_string(rng.between(1, 99));
    }
  }
  return s;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ' ';
    out += parts[i];
  }
  return out;
}

// Renders target tokens and returns their scalar ranges (all ASCII).
std::vector<CharRange> ranges_of(const std::vector<std::string>& parts) {
  std::vector<CharRange> out;
  std::size_t pos = 0;
  for (const auto& p : parts) {
    out.push_back({pos, pos + p.size()});
    pos += p.size() + 1;
  }
  return out;
}

enum class Profile { Clean, Minor, Major, Mixed, Detached, Oscillatory };

Profile draw_profile(Rng& rng) {
  const double u = rng.uniform();
  if (u < 0.30) return Profile::Clean;
  if (u < 0.45) return Profile::Minor;
  if (u < 0.70) return Profile::Major;
  if (u < 0.80) return Profile::Mixed;
  if (u < 0.90) return Profile::Detached;
  return Profile::Oscillatory;
}

struct Builder {
  const Config& cfg;
  const std::vector<std::string>& pool;
  perturb::Resources resources;

  // Word-level edits that need the token structure: minor variant forms and
  // major wrong-word substitutions.
  void edit_words(std::vector<std::string>& parts, const Sentence& s,
                  std::vector<std::pair<std::size_t, Severity>>& marks, Rng& rng, Severity sev) {
    std::vector<std::size_t> free;
    for (std::size_t i = 0; i < s.toks.size(); ++i) {
      const bool used = std::any_of(marks.begin(), marks.end(),
                                    [&](const auto& m) { return m.first == i; });
      if (!used && s.toks[i].kind == TokKind::Word) free.push_back(i);
    }
    if (free.empty()) return;
    const std::size_t i = free[rng.below(free.size())];
    if (sev == Severity::Minor) {
      parts[i] = s.toks[i].text + "e";
    } else {
      const auto& tw = target_words();
      std::size_t w = rng.below(tw.size() - 1);
      if (w >= s.toks[i].word) ++w;
      parts[i] = tw[w];
    }
    marks.emplace_back(i, sev);
  }

  Segment localized_major(const Segment& seg, const Sentence& s, Rng& rng) {
    std::vector<perturb::Kind> options = {perturb::Kind::AddText};
    for (const auto& t : s.toks) {
      if (t.kind == TokKind::Number) options.push_back(perturb::Kind::SwapNum);
      if (t.kind == TokKind::Entity) options.push_back(perturb::Kind::SwapNe);
    }
    const auto kind = options[rng.below(options.size())];
    return perturb::to_segment(perturb::apply(kind, seg, resources, rng), true);
  }

  Segment build(const std::string& id, const Sentence& s, Profile profile, Rng& rng) {
    std::vector<std::string> clean, src;
    for (const auto& t : s.toks) {
      clean.push_back(t.text);
      src.push_back(t.source);
    }
    Segment seg;
    seg.id = id;
    seg.source = join(src);
    seg.reference = join(clean);
    seg.system = "sys" + std::string(1, static_cast<char>('A' + rng.below(5)));

    std::vector<std::string> parts = clean;
    std::vector<std::pair<std::size_t, Severity>> marks;
    bool localized = false;
    switch (profile) {
      case Profile::Clean:
      case Profile::Detached:
      case Profile::Oscillatory:
        break;
      case Profile::Minor: {
        const int n = rng.coin() ? 1 : 2;
        for (int k = 0; k < n; ++k) edit_words(parts, s, marks, rng, Severity::Minor);
        break;
      }
      case Profile::Major:
        if (rng.coin()) {
          edit_words(parts, s, marks, rng, Severity::Major);
        } else {
          localized = true;
        }
        break;
      case Profile::Mixed:
        edit_words(parts, s, marks, rng, rng.coin() ? Severity::Minor : Severity::Major);
        if (rng.coin()) {
          edit_words(parts, s, marks, rng, Severity::Major);
        } else {
          localized = true;
        }
        break;
    }
    seg.translation = join(parts);
    const auto ranges = ranges_of(parts);
    std::vector<ErrorSpan> spans;
    for (const auto& [i, sev] : marks) spans.push_back({ranges[i].start, ranges[i].end, sev, std::nullopt});
    std::sort(spans.begin(), spans.end(),
              [](const ErrorSpan& a, const ErrorSpan& b) { return a.start < b.start; });
    seg.gold_spans = spans;
    seg.gold_score = mqm_score(spans);

    if (localized) {
      seg = localized_major(seg, s, rng);
    } else if (profile == Profile::Detached) {
      seg = perturb::to_segment(perturb::hallucinate_random(seg, pool, rng));
    } else if (profile == Profile::Oscillatory) {
      seg = perturb::to_segment(perturb::hallucinate_oscillatory(seg, rng));
    }
    seg.id = id;
    return seg;
  }
};

}  // namespace

const std::vector<std::string>& target_words() {
  static const auto v = make_target();
  return v;
}

const std::vector<std::string>& source_words() {
  static const auto v = make_source();
  return v;
}

const std::vector<std::string>& entities() {
  static const auto v = make_entities();
  return v;
}

Corpus generate(const Config& cfg) {
  if (cfg.min_words < 4 || cfg.max_words < cfg.min_words) {
    throw ConfigError("synthetic: need 4 <= min_words <= max_words");
  }
  const double used = cfg.phase_one_fraction + cfg.phase_two_fraction + cfg.phase_three_fraction;
  if (cfg.phase_one_fraction < 0 || cfg.phase_two_fraction < 0 || cfg.phase_three_fraction < 0 ||
      used >= 1.0) {
    throw ConfigError("synthetic: split fractions must be non-negative and leave a held-out split");
  }

  Rng pool_rng(derive_seed(cfg.seed, "pool"));
  std::vector<std::string> pool;
  for (std::size_t i = 0; i < kPoolSentences; ++i) {
    std::vector<std::string> parts;
    for (const auto& t : make_sentence(pool_rng, cfg).toks) parts.push_back(t.text);
    pool.push_back(join(parts));
  }

  Builder b{cfg, pool, {}};
  b.resources.sentence_pool = pool;
  b.resources.entity_pool = entities();

  Corpus c;
  const auto n1 = static_cast<std::size_t>(cfg.phase_one_fraction * static_cast<double>(cfg.segments));
  const auto n2 = static_cast<std::size_t>(cfg.phase_two_fraction * static_cast<double>(cfg.segments));
  const auto n3 = static_cast<std::size_t>(cfg.phase_three_fraction * static_cast<double>(cfg.segments));
  std::vector<Sentence> held_bases;
  for (std::size_t i = 0; i < cfg.segments; ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    const Sentence s = make_sentence(rng, cfg);
    const Profile profile = draw_profile(rng);
    char id[32];
    std::snprintf(id, sizeof id, "syn-%05zu", i);
    Segment seg = b.build(id, s, profile, rng);
    if (i < n1) {
      seg.gold_spans.reset();
      c.phase_one.push_back(std::move(seg));
    } else if (i < n1 + n2) {
      c.phase_two.push_back(std::move(seg));
    } else if (i < n1 + n2 + n3) {
      c.phase_three.push_back(std::move(seg));
    } else {
      if (profile != Profile::Detached && profile != Profile::Oscillatory &&
          *seg.gold_score >= 0.76) {
        c.detection.push_back(seg);
        c.is_positive.push_back(0);
      }
      held_bases.push_back(s);
      c.held_out.push_back(std::move(seg));
    }
  }
  for (std::size_t k = 0; k < cfg.detection_positives && !held_bases.empty(); ++k) {
    Rng rng(derive_seed(derive_seed(cfg.seed, "detection"), k));
    const auto& s = held_bases[k % held_bases.size()];
    char id[32];
    std::snprintf(id, sizeof id, "det-%05zu", k);
    Segment clean = b.build(id, s, Profile::Clean, rng);
    Segment det = perturb::to_segment(perturb::hallucinate_random(clean, pool, rng));
    det.id = id;
    c.detection.push_back(std::move(det));
    c.is_positive.push_back(1);
  }
  return c;
}

}  // namespace spanmetric::synthetic
