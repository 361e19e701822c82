#pragma once

#include <dyncomm/core.hpp>
#include <dyncomm/matrix_kernels.hpp>
#include <dyncomm/temporal_graph.hpp>

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

namespace dyncomm {

struct IntegratorConfig {
  double abs_tol = 1e-4;
  double rel_tol = 1e-4;
  double h_init = 0;  // 0 = auto: start with the distance to the first stop time
  double h_max = 0;   // 0 = unlimited
  double safety = 0.9;
  long max_steps = 5'000'000;
  bool nonneg_check = true;  // assert U - I >= -1e-10 entrywise at accepted steps

  void validate() const {
    if (!(abs_tol > 0) || !(rel_tol > 0))
      throw ValidationError("integrator: tolerances must be > 0");
    if (!(safety > 0) || !(safety < 1))
      throw ValidationError("integrator: safety factor must lie in (0, 1)");
    if (h_init < 0 || h_max < 0) throw ValidationError("integrator: negative step bound");
    if (max_steps < 1) throw ValidationError("integrator: max_steps must be >= 1");
  }
};

struct CommunicabilityState {
  double t = 0;
  Matrix U;
};

struct StepRecord {
  double t_begin = 0;
  double t_end = 0;
  double err_norm = 0;
  bool accepted = false;
  std::size_t piece_index = 0;
};

using StepObserver = std::function<void(const StepRecord&)>;

struct IntegrationStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
  std::size_t pieces = 0;
};

struct MatrixRun {
  CommunicabilityState state;  // at t = T
  std::vector<CommunicabilityState> samples;
  IntegrationStats stats;
};

struct ReceiveSample {
  double t = 0;
  Vector r;
};

struct ReceiveRun {
  double t = 0;
  Vector r;
  std::vector<ReceiveSample> samples;
  IntegrationStats stats;
};

// Right-hand side of the matrix ODE: U' = -b (U - I) + U M with
// M = neg_log_series(A, a, p).
inline Matrix rhs_matrix(const Matrix& U, const SparseSnapshot& A, const Params& params) {
  NegLogSeriesOp op(A, params.a, params.p);
  Matrix out = op.apply_right(U);
  if (params.b != 0) {
    out.noalias() -= params.b * U;
    out.diagonal().array() += params.b;
  }
  return out;
}

namespace detail {

constexpr double kNonnegSlack = -1e-10;

inline void check_schedule(std::span<const double> schedule, double T) {
  double prev = -1;
  for (double s : schedule) {
    if (!(s >= 0) || s > T)
      throw ValidationError("schedule time " + format_double(s) + " outside [0, T]");
    if (s <= prev) throw ValidationError("schedule times must be strictly increasing");
    prev = s;
  }
}

// Max-entry weighted error norm: max |err| / (abs_tol + rel_tol * max(|y0|, |y1|)).
template <class State>
double error_norm(const State& err, const State& y0, const State& y1, double atol, double rtol) {
  auto scale = atol + rtol * y0.array().abs().max(y1.array().abs());
  double norm = (err.array().abs() / scale).maxCoeff();
  return std::isfinite(norm) ? norm : std::numeric_limits<double>::infinity();
}

// Adaptive Bogacki-Shampine 3(2) stepper on one smooth stretch [t, target].
// FSAL: k1 of the next step reuses k4 of the accepted step; callers must set
// fsal_valid = false whenever the right-hand side jumps (piece changes).
template <class State, class Rhs, class NonnegSlack>
void rk32_advance(Rhs&& rhs, State& y, double& t, double target, State& k1, bool& fsal_valid,
                  double& h_prop, const IntegratorConfig& cfg, double T_total,
                  std::size_t piece_index, IntegrationStats& stats, const StepObserver& observer,
                  NonnegSlack&& nonneg_slack) {
  const double h_cap = cfg.h_max > 0 ? cfg.h_max : std::numeric_limits<double>::infinity();
  const double h_floor = 1e-12 * T_total;
  State k2, k3, k4, y_new, y_stage, err;
  while (t < target) {
    if (stats.accepted + stats.rejected >= cfg.max_steps)
      throw IntegrationError("max_steps exceeded at t = " + format_double(t));
    double remaining = target - t;
    double h = std::min({h_prop, remaining, h_cap});
    bool clipped = h >= remaining;
    if (h <= 0 || t + h == t)
      throw IntegrationError("step size underflow (stiffness) at t = " + format_double(t));
    if (!clipped && h < h_floor)
      throw IntegrationError("step size below 1e-12 * T (stiffness) at t = " + format_double(t));

    if (!fsal_valid) {
      k1 = rhs(t, y);
      ++stats.rhs_evals;
      fsal_valid = true;
    }
    y_stage = y + (0.5 * h) * k1;
    k2 = rhs(t + 0.5 * h, y_stage);
    y_stage = y + (0.75 * h) * k2;
    k3 = rhs(t + 0.75 * h, y_stage);
    y_new = y + h * ((2.0 / 9.0) * k1 + (1.0 / 3.0) * k2 + (4.0 / 9.0) * k3);
    double t_new = clipped ? target : t + h;
    k4 = rhs(t_new, y_new);
    stats.rhs_evals += 3;
    err = h * ((-5.0 / 72.0) * k1 + (1.0 / 12.0) * k2 + (1.0 / 9.0) * k3 + (-1.0 / 8.0) * k4);
    double norm = error_norm(err, y, y_new, cfg.abs_tol, cfg.rel_tol);

    if (observer) observer({t, t_new, norm, norm <= 1.0, piece_index});

    double factor = cfg.safety * std::pow(std::max(norm, 1e-300), -1.0 / 3.0);
    factor = std::clamp(factor, 0.2, 5.0);
    if (norm <= 1.0) {
      ++stats.accepted;
      y.swap(y_new);
      t = t_new;
      k1.swap(k4);  // first-same-as-last
      if (cfg.nonneg_check) {
        double slack = nonneg_slack(y);
        if (slack < kNonnegSlack)
          throw IntegrationError("nonnegativity violated: min(U - I) = " + format_double(slack) +
                                 " at t = " + format_double(t));
      }
    } else {
      ++stats.rejected;
    }
    h_prop = std::min(h * factor, h_cap);
  }
}

template <class State>
struct PieceRun {
  double t = 0;
  State y;
  std::vector<std::pair<double, State>> samples;
  IntegrationStats stats;
};

// Shared driver: walks the piece decomposition of [0, T], keeps steps inside
// pieces, forces schedule times to be step endpoints, and records samples.
// make_rhs(piece) must return a callable (t, State) -> State valid on that piece.
template <class State, class MakeRhs, class NonnegSlack>
PieceRun<State> integrate_pieces(const TemporalAdjacency& g, double T, const IntegratorConfig& cfg,
                                 std::span<const double> schedule, const StepObserver& observer,
                                 State y0, MakeRhs&& make_rhs, NonnegSlack&& nonneg_slack) {
  cfg.validate();
  if (g.node_count() < 1) throw ValidationError("integrate: empty node set");
  if (!(T > 0)) throw ValidationError("integrate: T must be > 0");
  check_schedule(schedule, T);

  PieceRun<State> run;
  run.y = std::move(y0);
  run.t = 0;
  std::size_t next_sample = 0;
  if (next_sample < schedule.size() && schedule[next_sample] == 0.0) {
    run.samples.emplace_back(0.0, run.y);
    ++next_sample;
  }

  auto pieces = g.pieces(0, T);
  run.stats.pieces = pieces.size();
  double h_prop = cfg.h_init > 0 ? cfg.h_init : pieces.front().t_end;
  State k1;
  for (std::size_t pi = 0; pi < pieces.size(); ++pi) {
    const Piece& piece = pieces[pi];
    auto rhs = make_rhs(piece);
    bool fsal_valid = false;  // the RHS jumps at piece boundaries
    double stop = piece.t_begin;
    while (stop < piece.t_end) {
      stop = (next_sample < schedule.size() && schedule[next_sample] < piece.t_end)
                 ? schedule[next_sample]
                 : piece.t_end;
      rk32_advance(rhs, run.y, run.t, stop, k1, fsal_valid, h_prop, cfg, T, pi, run.stats,
                   observer, nonneg_slack);
      if (next_sample < schedule.size() && schedule[next_sample] == stop) {
        run.samples.emplace_back(stop, run.y);
        ++next_sample;
      }
    }
  }
  return run;
}

// Builds the per-piece RHS for the matrix or the receive equation. Call mode
// caches the series operator for the piece; message mode rebuilds the decayed,
// clipped snapshot at every stage evaluation.
template <bool Transposed>
struct RhsFactory {
  const Params& prm;
  Mode mode;
  double decay_rate;

  template <class State>
  State apply_series(const SparseSnapshot& A, const State& y) const {
    NegLogSeriesOp op(A, prm.a, prm.p);
    if constexpr (Transposed)
      return op.apply_transpose(y);
    else
      return op.apply_right(y);
  }

  template <class State>
  State decay_term(const State& y) const {
    State out = (-prm.b) * y;
    if constexpr (Transposed)
      out.array() += prm.b;  // -b (r - 1)
    else
      out.diagonal().array() += prm.b;  // -b (U - I)
    return out;
  }

  auto operator()(const Piece& piece) const {
    return [this, &piece](double t, const auto& y) {
      using State = std::decay_t<decltype(y)>;
      State out;
      if (mode == Mode::Call) {
        out = apply_series(piece.base, y);
      } else {
        double scale = std::exp(-decay_rate * (t - piece.t_begin));
        SparseSnapshot At = piece.base * scale;
        for (int k = 0; k < At.outerSize(); ++k)
          for (SparseSnapshot::InnerIterator it(At, k); it; ++it)
            it.valueRef() = std::min(1.0 - kClipEps, it.value());
        out = apply_series(At, y);
      }
      if (prm.b != 0) out += decay_term(y);
      return out;
    };
  }
};

}  // namespace detail

// Integrates U' = -b(U - I) - U log(I - a A(t)) from U(0) = I to t = T with an
// embedded Bogacki-Shampine 3(2) pair. Steps never straddle adjacency
// breakpoints; schedule times are forced step endpoints, so samples are exact
// integration states.
inline MatrixRun integrate_matrix(const TemporalAdjacency& g, const Params& params, double T,
                                  const IntegratorConfig& cfg, std::span<const double> schedule = {},
                                  const StepObserver& observer = {}) {
  params.validate();
  const int n = g.node_count();
  detail::RhsFactory<false> factory{params, g.mode(), g.decay_rate()};
  auto run = detail::integrate_pieces<Matrix>(
      g, T, cfg, schedule, observer, Matrix::Identity(n, n), factory,
      [](const Matrix& U) { return (U - Matrix::Identity(U.rows(), U.cols())).minCoeff(); });
  MatrixRun out;
  out.state = {run.t, std::move(run.y)};
  out.stats = run.stats;
  out.samples.reserve(run.samples.size());
  for (auto& [t, U] : run.samples) out.samples.push_back({t, std::move(U)});
  return out;
}

// Receive-only fast path: r' = -b(r - 1) + M(t)^T r, r(0) = 1. A factor of n
// smaller in state than the matrix run.
inline ReceiveRun integrate_receive(const TemporalAdjacency& g, const Params& params, double T,
                                    const IntegratorConfig& cfg,
                                    std::span<const double> schedule = {},
                                    const StepObserver& observer = {}) {
  params.validate();
  const int n = g.node_count();
  detail::RhsFactory<true> factory{params, g.mode(), g.decay_rate()};
  auto run = detail::integrate_pieces<Vector>(
      g, T, cfg, schedule, observer, Vector::Ones(n), factory,
      [](const Vector& r) { return (r.array() - 1.0).minCoeff(); });
  ReceiveRun out;
  out.t = run.t;
  out.r = std::move(run.y);
  out.stats = run.stats;
  out.samples.reserve(run.samples.size());
  for (auto& [t, r] : run.samples) out.samples.push_back({t, std::move(r)});
  return out;
}

// Closed-form advance of U' = U (M - bI) + bI across a piece where M is
// constant: exponentiate the block matrix [[M - bI, 0], [bI, 0]] * h, which
// maps [U, I] to [U(t+h), I]. No inversion, so b in spec(M) is harmless.
inline Matrix exact_piece_propagate(const Matrix& U, const Matrix& M, double b, double h) {
  if (!(h > 0)) throw ValidationError("exact_piece_propagate: h must be > 0");
  const Eigen::Index n = M.rows();
  Matrix B = Matrix::Zero(2 * n, 2 * n);
  B.topLeftCorner(n, n) = h * M;
  B.topLeftCorner(n, n).diagonal().array() -= h * b;
  B.bottomLeftCorner(n, n).diagonal().array() += h * b;
  Matrix E = matrix_exp(B);
  return U * E.topLeftCorner(n, n) + E.bottomLeftCorner(n, n);
}

// Exact piecewise propagator over call-mode data: one closed-form advance per
// constant piece (split at schedule times). Fewer, exact steps; preferable
// when pieces are long and n is moderate.
inline MatrixRun integrate_exact(const TemporalAdjacency& g, const Params& params, double T,
                                 std::span<const double> schedule = {}, bool nonneg_check = true) {
  params.validate();
  if (g.mode() != Mode::Call)
    throw UnsupportedModeError("exact engine requires call mode (piecewise-constant A)");
  if (!(T > 0)) throw ValidationError("integrate: T must be > 0");
  detail::check_schedule(schedule, T);

  const int n = g.node_count();
  MatrixRun run;
  run.state = {0.0, Matrix::Identity(n, n)};
  std::size_t next_sample = 0;
  if (next_sample < schedule.size() && schedule[next_sample] == 0.0) {
    run.samples.push_back({0.0, run.state.U});
    ++next_sample;
  }

  auto pieces = g.pieces(0, T);
  run.stats.pieces = pieces.size();
  for (const Piece& piece : pieces) {
    bool empty = piece.base.nonZeros() == 0;
    Matrix M;
    if (!empty) M = neg_log_series(piece.base, params.a, params.p);
    double t = piece.t_begin;
    while (t < piece.t_end) {
      double stop = (next_sample < schedule.size() && schedule[next_sample] < piece.t_end)
                        ? schedule[next_sample]
                        : piece.t_end;
      double h = stop - t;
      if (h > 0) {
        if (empty) {
          // Pure decay: U(t+h) = I + e^{-bh} (U - I).
          double f = std::exp(-params.b * h);
          run.state.U *= f;
          run.state.U.diagonal().array() += 1.0 - f;
        } else if (params.b == 0) {
          run.state.U = run.state.U * matrix_exp(h * M);
        } else {
          run.state.U = exact_piece_propagate(run.state.U, M, params.b, h);
        }
        ++run.stats.accepted;
      }
      t = stop;
      run.state.t = stop;
      if (nonneg_check) {
        double slack = (run.state.U - Matrix::Identity(n, n)).minCoeff();
        if (slack < detail::kNonnegSlack)
          throw IntegrationError("nonnegativity violated: min(U - I) = " + format_double(slack) +
                                 " at t = " + format_double(stop));
      }
      if (next_sample < schedule.size() && schedule[next_sample] == stop) {
        run.samples.push_back({stop, run.state.U});
        ++next_sample;
      }
    }
  }
  return run;
}

}  // namespace dyncomm
