#pragma once

#include <dyncomm/core.hpp>
#include <dyncomm/matrix_kernels.hpp>
#include <dyncomm/ode_engine.hpp>
#include <dyncomm/temporal_graph.hpp>

#include <cmath>
#include <span>
#include <vector>

namespace dyncomm {

// Uniformly spaced snapshot sequence A(1..N), spacing dt seconds.
struct SnapshotSequence {
  std::vector<SparseSnapshot> snapshots;
  double dt = 1.0;
};

// Choice of per-step walk generator H(A): the full resolvent (I - aA)^{-1} or
// the truncated power series I + aA + ... + a^p A^p, which counts only dynamic
// walks using at most p edges per time step.
struct WalkGenerator {
  enum class Kind { Resolvent, TruncatedPower };
  Kind kind = Kind::Resolvent;
  int p_walk = 1;
};

// One step of the discrete iteration:
// S(t + dt) = (I + e^{-b dt} S(t)) (I - a A(t + dt))^{-dt} - I,
// with the fractional power computed as exp(dt * -log-series). dt must lie in
// (0, 1] for the power identity to apply.
inline Matrix discrete_update(const Matrix& S, const SparseSnapshot& A_next, double a,
                              double b_decay, double dt, int p = 5) {
  if (!(dt > 0) || dt > 1.0)
    throw ValidationError("discrete_update: dt must lie in (0, 1], got " + format_double(dt));
  const Eigen::Index n = S.rows();
  Matrix G = fractional_resolvent_power(A_next, a, dt, p);
  Matrix grown = std::exp(-b_decay * dt) * S;
  grown.diagonal().array() += 1.0;
  return grown * G - Matrix::Identity(n, n);
}

// Eq.-(2) product: S(N) + I = prod_k (I - a A(k))^{-1} with exact resolvents,
// composed left to right. Entries are attenuation-downweighted counts of
// time-respecting dynamic walks.
inline Matrix discrete_product(std::span<const SparseSnapshot> snapshots, double a) {
  if (snapshots.empty()) throw ValidationError("discrete_product: empty snapshot sequence");
  const Eigen::Index n = snapshots.front().rows();
  Matrix R = Matrix::Identity(n, n);
  for (const auto& A : snapshots) R = R * katz_resolvent(A, a);
  return R - Matrix::Identity(n, n);
}

inline Matrix discrete_product(const SnapshotSequence& seq, double a) {
  return discrete_product(std::span<const SparseSnapshot>(seq.snapshots), a);
}

// Generalized iteration S(t + dt) = (I + e^{-b dt} S(t)) H(A)^{dt} - I for a
// configurable walk generator H. The Resolvent kind reduces exactly to
// discrete_update; TruncatedPower forms H densely and takes H^{dt} through
// exp(dt log H) with the Mercator series on H - I.
inline Matrix generalized_update(const Matrix& S, const SparseSnapshot& A_next,
                                 const WalkGenerator& gen, double a, double b_decay, double dt,
                                 int p = 5) {
  if (gen.kind == WalkGenerator::Kind::Resolvent)
    return discrete_update(S, A_next, a, b_decay, dt, p);
  if (gen.p_walk < 1) throw ValidationError("generalized_update: p_walk must be >= 1");
  if (!(dt > 0) || dt > 1.0)
    throw ValidationError("generalized_update: dt must lie in (0, 1], got " + format_double(dt));

  const Eigen::Index n = S.rows();
  Matrix Adense = Matrix(A_next);
  Matrix term = Adense;
  Matrix Y = a * Adense;  // H - I
  double coeff = a;
  for (int k = 2; k <= gen.p_walk; ++k) {
    term = term * Adense;
    coeff *= a;
    Y.noalias() += coeff * term;
  }
  Matrix L = log_one_plus_series(Y);
  Matrix G = matrix_exp(dt * L);
  Matrix grown = std::exp(-b_decay * dt) * S;
  grown.diagonal().array() += 1.0;
  return grown * G - Matrix::Identity(n, n);
}

struct CompareRow {
  double dt = 0;
  double frobenius_rel_err = 0;
};

// Continuum-limit verification: steps the discrete iteration on a uniform
// grid over [0, T], sampling A at the right endpoint of each step interval,
// and reports the Frobenius-relative distance to the ODE solution at T.
inline std::vector<CompareRow> refine_and_compare(const TemporalAdjacency& g, const Params& params,
                                                  double T, std::span<const double> dt_list,
                                                  const IntegratorConfig& cfg) {
  if (g.mode() != Mode::Call)
    throw UnsupportedModeError("refine_and_compare requires call-mode data");
  params.validate();
  if (!(T > 0)) throw ValidationError("refine_and_compare: T must be > 0");

  MatrixRun ode = integrate_matrix(g, params, T, cfg);
  const double ode_norm = ode.state.U.norm();

  std::vector<CompareRow> rows;
  for (double dt : dt_list) {
    double steps_real = T / dt;
    long m = std::lround(steps_real);
    if (m < 1 || std::abs(steps_real - static_cast<double>(m)) > 1e-9 * steps_real)
      throw ValidationError("refine_and_compare: dt = " + format_double(dt) +
                            " does not divide T = " + format_double(T));
    Matrix S = Matrix::Zero(g.node_count(), g.node_count());
    for (long k = 1; k <= m; ++k) {
      double t_right = (k == m) ? T : dt * static_cast<double>(k);
      S = discrete_update(S, g.adjacency_at(t_right), params.a, params.b, dt, params.p);
    }
    Matrix U_disc = S + Matrix::Identity(g.node_count(), g.node_count());
    rows.push_back({dt, (U_disc - ode.state.U).norm() / ode_norm});
  }
  return rows;
}

}  // namespace dyncomm
