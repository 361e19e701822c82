#pragma once

// Test-only brute-force oracle: counts time-respecting dynamic walks through a
// snapshot sequence by expanding each resolvent as a truncated power series.
// A dynamic walk may use zero, one, or more edges per time point; a walk with
// k edges in total carries weight a^k. Entries of prod_k (I - a A_k)^{-1}
// are reproduced up to the truncation tail, which is bounded analytically.

#include <dyncomm/core.hpp>

#include <vector>

namespace walk_oracle {

using dyncomm::Matrix;
using dyncomm::SparseSnapshot;

// Coefficients c[k](i,j) = number of dynamic walks from i to j using exactly k
// edges, k = 0..K.
struct WalkCounts {
  int n = 0;
  int K = 0;
  std::vector<Matrix> c;
};

inline WalkCounts count_dynamic_walks(const std::vector<Matrix>& snapshots, int K) {
  const int n = static_cast<int>(snapshots.front().rows());
  WalkCounts out{n, K, std::vector<Matrix>(K + 1, Matrix::Zero(n, n))};
  out.c[0] = Matrix::Identity(n, n);
  for (const Matrix& A : snapshots) {
    // Powers A^m for m = 0..K.
    std::vector<Matrix> pow(K + 1);
    pow[0] = Matrix::Identity(n, n);
    for (int m = 1; m <= K; ++m) pow[m] = pow[m - 1] * A;
    // Polynomial product (sum_k c_k x^k) * (sum_m A^m x^m) mod x^{K+1}.
    std::vector<Matrix> next(K + 1, Matrix::Zero(n, n));
    for (int k = 0; k <= K; ++k)
      for (int m = 0; m + k <= K; ++m) next[k + m] += out.c[k] * pow[m];
    out.c = std::move(next);
  }
  return out;
}

// sum_{k=0..K} a^k c_k(i, j): the truncated walk-weight sum.
inline Matrix truncated_walk_weight(const WalkCounts& w, double a) {
  Matrix acc = Matrix::Zero(w.n, w.n);
  double ak = 1.0;
  for (int k = 0; k <= w.K; ++k) {
    acc += ak * w.c[k];
    ak *= a;
  }
  return acc;
}

// Entrywise tail bound: the number of dynamic walks with exactly k edges over
// N snapshots is at most C(k + N - 1, N - 1) d^k where d bounds every row sum,
// so the neglected weight is sum_{k > K} C(k + N - 1, N - 1) (a d)^k.
inline double truncation_tail_bound(int N, double a, double d, int K) {
  double ad = a * std::max(d, 1.0);
  if (ad >= 1.0) return std::numeric_limits<double>::infinity();
  double tail = 0.0;
  for (int k = K + 1; k <= K + 400; ++k) {
    double binom = 1.0;
    for (int r = 1; r < N; ++r) binom *= static_cast<double>(k + r) / r;
    double term = binom * std::pow(ad, k);
    tail += term;
    if (term < 1e-18 * (tail + 1e-300)) break;
  }
  return tail;
}

}  // namespace walk_oracle
