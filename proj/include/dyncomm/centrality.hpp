#pragma once

#include <dyncomm/core.hpp>
#include <dyncomm/ode_engine.hpp>
#include <dyncomm/temporal_graph.hpp>

#include <algorithm>
#include <utility>
#include <vector>

namespace dyncomm {

// Sampled centrality time series. broadcast is empty for receive-only runs;
// bandwidth is empty in message mode.
struct CentralitySeries {
  std::vector<double> times;
  std::vector<Vector> broadcast;
  std::vector<Vector> receive;
  Vector bandwidth;
};

struct GroupTrace {
  std::vector<int> group;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<bool> zero_denominator;  // value forced to 0 at these samples
};

// b(t) = U(t) 1 (row sums), r(t) = U(t)^T 1 (column sums).
inline std::pair<Vector, Vector> broadcast_receive(const CommunicabilityState& state) {
  return {state.U.rowwise().sum(), state.U.colwise().sum().transpose()};
}

// Top-k nodes by value, descending; ties broken by ascending node index.
inline std::vector<std::pair<int, double>> rank(const Vector& v, int k) {
  if (k > v.size()) throw ValidationError("rank: k exceeds the number of nodes");
  std::vector<std::pair<int, double>> order(v.size());
  for (int i = 0; i < v.size(); ++i) order[i] = {i, v[i]};
  std::sort(order.begin(), order.end(), [](const auto& x, const auto& y) {
    if (x.second != y.second) return x.second > y.second;
    return x.first < y.first;
  });
  order.resize(k);
  return order;
}

// 1-based descending rank of one node within v (ties favor lower index).
inline int rank_of(const Vector& v, int node) {
  int r = 1;
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] > v[node] || (v[i] == v[node] && i < node)) ++r;
  }
  return r;
}

// Group running-communicability trace: mean of S_ij + S_ji over unordered
// pairs within G, scaled by the same mean over all unordered pairs. A zero
// denominator (for example at t = 0) yields value 0 with the flag set.
inline GroupTrace group_trace(const std::vector<CommunicabilityState>& samples,
                              std::vector<int> group) {
  if (group.size() < 2) throw ValidationError("group_trace: need at least 2 nodes in the group");
  {
    auto sorted = group;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ValidationError("group_trace: duplicate node in group");
  }
  GroupTrace out;
  out.group = std::move(group);
  for (const auto& sample : samples) {
    const Matrix& U = sample.U;
    const int n = static_cast<int>(U.rows());
    for (int g : out.group)
      if (g < 0 || g >= n) throw ValidationError("group_trace: node index out of range");

    double num = 0;
    for (std::size_t x = 0; x < out.group.size(); ++x)
      for (std::size_t y = x + 1; y < out.group.size(); ++y) {
        int i = out.group[x], j = out.group[y];
        num += (U(i, j) + U(j, i));
      }
    num /= 0.5 * out.group.size() * (out.group.size() - 1);

    // Full-set mean of S_ij + S_ji: off-diagonal sum of U over n(n-1)/2 pairs.
    double den = (U.sum() - U.trace()) / (0.5 * n * (n - 1));

    out.times.push_back(sample.t);
    if (den > 0) {
      out.values.push_back(num / den);
      out.zero_denominator.push_back(false);
    } else {
      out.values.push_back(0.0);
      out.zero_denominator.push_back(true);
    }
  }
  return out;
}

// Builds the full series (broadcast + receive + bandwidth) from a matrix run.
inline CentralitySeries centrality_series(const MatrixRun& run, const TemporalAdjacency& g) {
  CentralitySeries s;
  for (const auto& sample : run.samples) {
    auto [b, r] = broadcast_receive(sample);
    s.times.push_back(sample.t);
    s.broadcast.push_back(std::move(b));
    s.receive.push_back(std::move(r));
  }
  if (g.mode() == Mode::Call) s.bandwidth = bandwidth(g);
  return s;
}

// Receive-only path: integrates the vector ODE and never materializes U.
inline CentralitySeries receive_fast_path(const TemporalAdjacency& g, const Params& params,
                                          double T, const IntegratorConfig& cfg,
                                          std::span<const double> schedule) {
  auto run = integrate_receive(g, params, T, cfg, schedule);
  CentralitySeries s;
  for (auto& sample : run.samples) {
    s.times.push_back(sample.t);
    s.receive.push_back(std::move(sample.r));
  }
  if (g.mode() == Mode::Call) s.bandwidth = bandwidth(g);
  return s;
}

}  // namespace dyncomm
