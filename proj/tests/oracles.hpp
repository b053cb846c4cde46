#pragma once

// Brute-force reference implementations used by the unit and acceptance
// tests. Each works straight from the definition (pair enumeration, per-char
// labelling) and shares no code with the library beyond the plain types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spanmetric/annotations.hpp"

namespace oracle {

using spanmetric::ErrorSpan;
using spanmetric::Severity;

inline int penalty(const std::vector<ErrorSpan>& spans) {
  int minor = 0, major = 0, critical = 0;
  for (const auto& s : spans) {
    if (s.severity == Severity::Minor) ++minor;
    if (s.severity == Severity::Major) ++major;
    if (s.severity == Severity::Critical) ++critical;
  }
  return minor + 5 * major + 10 * critical;
}

inline double mqm(const std::vector<ErrorSpan>& spans) {
  const int e = penalty(spans);
  if (e >= 25) return 0.0;
  return (25.0 - e) / 25.0;
}

inline int sign(double v) { return v > 0 ? 1 : (v < 0 ? -1 : 0); }

inline double kendall_tau_b(const std::vector<double>& x, const std::vector<double>& y) {
  long long s = 0, nx = 0, ny = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const int a = sign(x[i] - x[j]);
      const int b = sign(y[i] - y[j]);
      s += a * b;
      nx += a != 0;
      ny += b != 0;
    }
  }
  return static_cast<double>(s) / std::sqrt(static_cast<double>(nx) * static_cast<double>(ny));
}

inline double pairwise_accuracy(const std::vector<double>& m, const std::vector<double>& h) {
  long long agree = 0, total = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (j <= i) continue;
      ++total;
      if (sign(m[i] - m[j]) == sign(h[i] - h[j])) ++agree;
    }
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

// Per-character label: 0 none, 1 minor, 2 major (critical folds into major).
inline int char_label(const std::vector<ErrorSpan>& spans, std::size_t c) {
  int best = 0;
  for (const auto& s : spans) {
    if (c < s.start || c >= s.end) continue;
    best = std::max(best, s.severity == Severity::Minor ? 1 : 2);
  }
  return best;
}

struct F1Counts {
  long long tp[2] = {0, 0};
  long long pred[2] = {0, 0};
  long long gold[2] = {0, 0};
};

inline void count_chars(F1Counts& c, const std::vector<ErrorSpan>& pred,
                        const std::vector<ErrorSpan>& gold, std::size_t length) {
  for (std::size_t i = 0; i < length; ++i) {
    const int p = char_label(pred, i);
    const int g = char_label(gold, i);
    for (int k = 1; k <= 2; ++k) {
      c.pred[k - 1] += p == k;
      c.gold[k - 1] += g == k;
      c.tp[k - 1] += p == k && g == k;
    }
  }
}

inline double f1_of(long long tp, long long pred, long long gold) {
  if (pred == 0 && gold == 0) return 1.0;
  const double p = pred ? static_cast<double>(tp) / static_cast<double>(pred) : 0.0;
  const double r = gold ? static_cast<double>(tp) / static_cast<double>(gold) : 0.0;
  return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0;
}

inline double f1_overall(const F1Counts& c) {
  const long long g = c.gold[0] + c.gold[1];
  if (g == 0) return c.pred[0] + c.pred[1] == 0 ? 1.0 : 0.0;
  return (static_cast<double>(c.gold[0]) * f1_of(c.tp[0], c.pred[0], c.gold[0]) +
          static_cast<double>(c.gold[1]) * f1_of(c.tp[1], c.pred[1], c.gold[1])) /
         static_cast<double>(g);
}

// Positives should score lower; ties count one half.
inline double auroc(const std::vector<double>& s, const std::vector<std::uint8_t>& pos) {
  long long twice = 0, p = 0, n = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    (pos[i] ? p : n) += 1;
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      twice += s[i] < s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
    }
  }
  return static_cast<double>(twice) / static_cast<double>(2 * p * n);
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Error mask of a tag sequence.
inline std::vector<bool> mask(const std::vector<Severity>& tags) {
  std::vector<bool> m;
  for (auto t : tags) m.push_back(t != Severity::Ok);
  return m;
}

}  // namespace oracle
