// Strictly increasing multi-indices and the combinatorics behind wedge,
// contraction and Hodge complements.
#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace dfc {

using Index = std::vector<int>;  // strictly increasing entries in [1..d]

inline bool index_valid(const Index& idx, int d) {
  int prev = 0;
  for (int v : idx) {
    if (v <= prev || v > d) return false;
    prev = v;
  }
  return true;
}

inline long long binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  long long r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

// All strictly increasing k-subsets of {1..d}, lexicographic.
inline std::vector<Index> enumerate_subsets(int d, int k) {
  std::vector<Index> out;
  if (k < 0 || k > d) return out;
  Index cur(k);
  // iterative lexicographic enumeration
  for (int i = 0; i < k; ++i) cur[i] = i + 1;
  if (k == 0) {
    out.push_back({});
    return out;
  }
  while (true) {
    out.push_back(cur);
    int i = k - 1;
    while (i >= 0 && cur[i] == d - (k - 1 - i)) --i;
    if (i < 0) break;
    ++cur[i];
    for (int j = i + 1; j < k; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

// Merge two disjoint increasing indices; sign counts the transpositions needed
// to sort the concatenation (shuffle sign). Returns 0 on overlap.
inline int merge_sign(const Index& a, const Index& b, Index& out) {
  out.clear();
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  int sign = 1;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return 0;
    if (a[i] < b[j]) {
      out.push_back(a[i++]);
    } else {
      // b[j] jumps over the remaining entries of a
      if ((a.size() - i) % 2 == 1) sign = -sign;
      out.push_back(b[j++]);
    }
  }
  while (i < a.size()) out.push_back(a[i++]);
  while (j < b.size()) out.push_back(b[j++]);
  return sign;
}

// Position (1-based) of x in idx, or 0 if absent.
inline int index_position(const Index& idx, int x) {
  auto it = std::lower_bound(idx.begin(), idx.end(), x);
  if (it == idx.end() || *it != x) return 0;
  return int(it - idx.begin()) + 1;
}

inline bool index_contains(const Index& idx, int x) { return index_position(idx, x) != 0; }

inline Index index_without(const Index& idx, int x) {
  Index out;
  out.reserve(idx.size() - 1);
  for (int v : idx) {
    if (v != x) out.push_back(v);
  }
  return out;
}

// Complement of idx in {1..d}.
inline Index index_complement(const Index& idx, int d) {
  Index out;
  out.reserve(d - idx.size());
  std::size_t i = 0;
  for (int v = 1; v <= d; ++v) {
    if (i < idx.size() && idx[i] == v) {
      ++i;
    } else {
      out.push_back(v);
    }
  }
  return out;
}

// Sign of the permutation (idx, complement) relative to (1..d): the Hodge
// sign, so that e_idx ^ (sign * e_comp) = e_1 ^ ... ^ e_d.
inline int hodge_sign(const Index& idx, int d) {
  Index comp = index_complement(idx, d);
  Index merged;
  int s = merge_sign(idx, comp, merged);
  return s;  // merged == (1..d) by construction
}

// Basis label of one fiber Lambda^{k,m}: a pair of increasing indices.
struct MultiIndexPair {
  Index form;
  Index vec;

  friend bool operator==(const MultiIndexPair& a, const MultiIndexPair& b) {
    return a.form == b.form && a.vec == b.vec;
  }
  friend bool operator<(const MultiIndexPair& a, const MultiIndexPair& b) {
    if (a.form != b.form) return a.form < b.form;
    return a.vec < b.vec;
  }
};

// Canonical basis order for all matrices in the repo: lexicographic on
// (form, vec).
inline std::vector<MultiIndexPair> enumerate_basis(int d, int k, int m) {
  if (d < 0 || k < 0 || k > d || m < 0 || m > d)
    throw std::domain_error("enumerate_basis: degrees out of range");
  std::vector<MultiIndexPair> out;
  auto fs = enumerate_subsets(d, k);
  auto vs = enumerate_subsets(d, m);
  out.reserve(fs.size() * vs.size());
  for (const auto& f : fs)
    for (const auto& v : vs) out.push_back({f, v});
  return out;
}

}  // namespace dfc
