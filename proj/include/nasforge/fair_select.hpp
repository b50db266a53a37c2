#pragma once

// Part assignment patterns for weight-shared axis slicing. A pattern over n
// candidates splits a super kernel axis into n parts; candidate i (0-based)
// owns i+1 parts and only those parts receive gradient when it is sampled.
//
// naive_pattern gives candidate i the prefix {0..i}: part 0 is updated by
// every candidate while part n-1 is updated by one, which biases training
// toward small candidates. fair_pattern balances part usage: for odd n every
// part appears in exactly (n+1)/2 rows, so uniform candidate sampling
// updates each part with probability (n+1)/(2n).

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace nasforge {

struct FairPattern {
  int n = 0;
  // rows[i]: sorted part indices owned by candidate i; rows[i].size() == i+1.
  std::vector<std::vector<int>> rows;
};

inline FairPattern naive_pattern(int n) {
  if (n < 1) throw std::invalid_argument("naive_pattern: n must be >= 1");
  FairPattern p;
  p.n = n;
  for (int i = 0; i < n; ++i) {
    std::vector<int> row(static_cast<std::size_t>(i) + 1);
    for (int j = 0; j <= i; ++j) row[static_cast<std::size_t>(j)] = j;
    p.rows.push_back(std::move(row));
  }
  return p;
}

// Row n-1 is the full part set. Remaining rows are filled from the largest
// down, always taking the currently least-covered parts, ties broken by
// lowest part index. Coverage spread stays <= 1 throughout, which makes the
// per-part totals exactly (n+1)/2 when n is odd and within 1 otherwise.
inline FairPattern fair_pattern(int n) {
  if (n < 1) throw std::invalid_argument("fair_pattern: n must be >= 1");
  FairPattern p;
  p.n = n;
  p.rows.assign(static_cast<std::size_t>(n), {});
  std::vector<int> coverage(static_cast<std::size_t>(n), 0);
  for (int i = n - 1; i >= 0; --i) {
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) order[static_cast<std::size_t>(j)] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&coverage](int a, int b) { return coverage[a] < coverage[b]; });
    std::vector<int>& row = p.rows[static_cast<std::size_t>(i)];
    row.assign(order.begin(), order.begin() + i + 1);
    std::sort(row.begin(), row.end());
    for (int j : row) ++coverage[static_cast<std::size_t>(j)];
  }
  return p;
}

inline const std::vector<int>& candidate_parts(const FairPattern& p, int candidate) {
  if (candidate < 0 || candidate >= p.n) {
    throw std::out_of_range("candidate_parts: candidate index out of range");
  }
  return p.rows[static_cast<std::size_t>(candidate)];
}

// Per-part totals over all rows (column sums of the assignment matrix).
inline std::vector<int> part_counts(const FairPattern& p) {
  std::vector<int> counts(static_cast<std::size_t>(p.n), 0);
  for (const std::vector<int>& row : p.rows) {
    for (int j : row) ++counts[static_cast<std::size_t>(j)];
  }
  return counts;
}

}  // namespace nasforge
