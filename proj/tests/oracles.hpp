#pragma once

// Brute-force reference implementations used only by tests. None of these
// share code with the library paths they check.

#include <cstddef>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace oracle {

// Plain double loop; strict '>' keeps the earliest maximum.
inline std::vector<std::size_t> argmax_rows(const std::vector<std::vector<float>>& m) {
  std::vector<std::size_t> out;
  for (const auto& row : m) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
      if (row[j] > row[best]) best = j;
    out.push_back(best);
  }
  return out;
}

// Full (m+1)x(n+1) Levenshtein table.
inline std::size_t levenshtein(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t best = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      if (d[i - 1][j] + 1 < best) best = d[i - 1][j] + 1;
      if (d[i][j - 1] + 1 < best) best = d[i][j - 1] + 1;
      d[i][j] = best;
    }
  return d[a.size()][b.size()];
}

struct Split {
  std::vector<std::size_t> boundaries;
  std::size_t distance = std::numeric_limits<std::size_t>::max();
};

// Enumerates every non-decreasing boundary vector in lexicographic order and
// keeps the first one with the smallest summed distance.
inline Split exhaustive_resegment(const std::vector<std::string>& hyp,
                                  const std::vector<std::vector<std::string>>& refs) {
  const std::size_t K = refs.size(), n = hyp.size();
  Split best;
  std::vector<std::size_t> b(K + 1, 0);
  b[K] = n;
  auto cost = [&] {
    std::size_t total = 0;
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<std::string> piece(hyp.begin() + static_cast<std::ptrdiff_t>(b[k]),
                                     hyp.begin() + static_cast<std::ptrdiff_t>(b[k + 1]));
      total += levenshtein(piece, refs[k]);
    }
    return total;
  };
  // Recursive enumeration of b[1..K-1].
  auto rec = [&](auto&& self, std::size_t k) -> void {
    if (k == K) {
      const std::size_t c = cost();
      if (c < best.distance) {
        best.distance = c;
        best.boundaries = b;
      }
      return;
    }
    for (std::size_t v = b[k - 1]; v <= n; ++v) {
      b[k] = v;
      self(self, k + 1);
    }
  };
  if (K == 1) {
    best.boundaries = b;
    best.distance = cost();
  } else {
    rec(rec, 1);
  }
  return best;
}

// Direct transcription of the length-adaptive lagging definition with 1-based
// indices: d*_i = (i-1) * T / max(|Y|, |Y*|), tau = min{i : d_i >= T}.
inline double laal_direct(const std::vector<double>& d, double T, std::size_t ref_len) {
  if (d.empty()) return 0.0;
  const double denom = static_cast<double>(d.size() > ref_len ? d.size() : ref_len);
  std::size_t tau = d.size();
  for (std::size_t i = 1; i <= d.size(); ++i)
    if (d[i - 1] >= T) {
      tau = i;
      break;
    }
  double s = 0.0;
  for (std::size_t i = 1; i <= tau; ++i) s += d[i - 1] - static_cast<double>(i - 1) * T / denom;
  return s / static_cast<double>(tau);
}

}  // namespace oracle
