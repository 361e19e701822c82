#pragma once

#include <dyncomm/core.hpp>
#include <dyncomm/io.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dyncomm {

struct CallEvent {
  int src = 0;
  int dst = 0;
  double start = 0;     // seconds
  double duration = 0;  // seconds, > 0
};

struct MessageEvent {
  int src = 0;
  int dst = 0;
  double time = 0;  // seconds
};

// One maximal interval [t_begin, t_end) on which A(t) has a simple description:
// Call mode: A(t) == base (constant 0/1 symmetric matrix).
// Message mode: raw edge sums decay as base * exp(-c (t - t_begin)); entries are
// clipped to 1 - kClipEps at evaluation time.
struct Piece {
  double t_begin = 0;
  double t_end = 0;
  SparseSnapshot base;
};

struct AttenuationReport {
  enum class Status { Valid, Warning, Invalid };
  Status status = Status::Valid;
  std::string detail;
  bool valid() const { return status == Status::Valid; }
};

inline const char* to_string(AttenuationReport::Status s) {
  switch (s) {
    case AttenuationReport::Status::Valid: return "valid";
    case AttenuationReport::Status::Warning: return "warning";
    default: return "invalid";
  }
}

namespace detail {

// Edge-count delta used by the call-mode sweep: +1 at call start, -1 at end.
struct EdgeDelta {
  double time;
  int i, j;  // ordered i < j
  int delta;
};

inline void add_symmetric_entry(std::vector<Eigen::Triplet<double>>& trips, int i, int j, double v) {
  trips.emplace_back(i, j, v);
  trips.emplace_back(j, i, v);
}

}  // namespace detail

// Immutable view of the time-dependent adjacency A(t) built from an event list.
// Safe to share across threads once constructed.
class TemporalAdjacency {
 public:
  static TemporalAdjacency from_call_events(std::vector<CallEvent> events, int n_hint = 0) {
    TemporalAdjacency g;
    g.mode_ = Mode::Call;
    g.calls_ = std::move(events);
    int max_idx = -1;
    for (const auto& e : g.calls_) {
      validate_call_event(e);
      max_idx = std::max({max_idx, e.src, e.dst});
    }
    g.n_ = std::max(n_hint, max_idx + 1);
    std::sort(g.calls_.begin(), g.calls_.end(), [](const CallEvent& x, const CallEvent& y) {
      return std::tie(x.start, x.src, x.dst, x.duration) < std::tie(y.start, y.src, y.dst, y.duration);
    });
    g.deltas_.reserve(2 * g.calls_.size());
    for (const auto& e : g.calls_) {
      int i = std::min(e.src, e.dst), j = std::max(e.src, e.dst);
      g.deltas_.push_back({e.start, i, j, +1});
      g.deltas_.push_back({e.start + e.duration, i, j, -1});
    }
    std::sort(g.deltas_.begin(), g.deltas_.end(),
              [](const detail::EdgeDelta& x, const detail::EdgeDelta& y) {
                return std::tie(x.time, x.i, x.j, x.delta) < std::tie(y.time, y.i, y.j, y.delta);
              });
    for (const auto& d : g.deltas_) g.breakpoints_.push_back(d.time);
    std::sort(g.breakpoints_.begin(), g.breakpoints_.end());
    g.breakpoints_.erase(std::unique(g.breakpoints_.begin(), g.breakpoints_.end()),
                         g.breakpoints_.end());
    return g;
  }

  static TemporalAdjacency from_message_events(std::vector<MessageEvent> events, double decay_rate,
                                               int n_hint = 0) {
    if (!(decay_rate > 0)) throw ValidationError("message decay rate c must be > 0");
    TemporalAdjacency g;
    g.mode_ = Mode::Message;
    g.decay_rate_ = decay_rate;
    g.messages_ = std::move(events);
    int max_idx = -1;
    for (const auto& e : g.messages_) {
      validate_message_event(e);
      max_idx = std::max({max_idx, e.src, e.dst});
    }
    g.n_ = std::max(n_hint, max_idx + 1);
    std::sort(g.messages_.begin(), g.messages_.end(), [](const MessageEvent& x, const MessageEvent& y) {
      return std::tie(x.time, x.src, x.dst) < std::tie(y.time, y.src, y.dst);
    });
    for (const auto& e : g.messages_) g.breakpoints_.push_back(e.time);
    std::sort(g.breakpoints_.begin(), g.breakpoints_.end());
    g.breakpoints_.erase(std::unique(g.breakpoints_.begin(), g.breakpoints_.end()),
                         g.breakpoints_.end());
    return g;
  }

  Mode mode() const { return mode_; }
  int node_count() const { return n_; }
  double decay_rate() const { return decay_rate_; }
  const std::vector<CallEvent>& call_events() const { return calls_; }
  const std::vector<MessageEvent>& message_events() const { return messages_; }

  // Times at which A(t) jumps: call starts/ends, or message spike instants.
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  bool empty() const { return calls_.empty() && messages_.empty(); }

  // External-ID table when ingest had to remap non-integer node labels.
  const std::vector<std::string>& external_ids() const { return external_ids_; }
  void set_external_ids(std::vector<std::string> ids) { external_ids_ = std::move(ids); }

  // A(t). Right-continuous: an event at exactly t is included.
  SparseSnapshot adjacency_at(double t) const {
    if (mode_ == Mode::Call) {
      std::map<std::pair<int, int>, int> active;
      for (const auto& e : calls_) {
        if (e.start > t) break;
        if (t < e.start + e.duration) {
          int i = std::min(e.src, e.dst), j = std::max(e.src, e.dst);
          ++active[{i, j}];
        }
      }
      return snapshot_from_counts(active);
    }
    std::map<std::pair<int, int>, double> raw;
    for (const auto& e : messages_) {
      if (e.time > t) break;
      raw[{e.src, e.dst}] += std::exp(-decay_rate_ * (t - e.time));
    }
    return snapshot_from_raw(raw, /*clip=*/true);
  }

  // Decomposes [t_begin, t_end] into pieces between discontinuities.
  // Call mode: each piece carries the constant snapshot valid on it.
  // Message mode: each piece carries the raw (unclipped) sums at its left edge.
  std::vector<Piece> pieces(double t_begin, double t_end) const {
    if (!(t_end >= t_begin)) throw ValidationError("pieces: t_end must be >= t_begin");
    std::vector<double> bounds;
    bounds.push_back(t_begin);
    for (double b : breakpoints_)
      if (b > t_begin && b < t_end) bounds.push_back(b);
    bounds.push_back(t_end);

    std::vector<Piece> out;
    out.reserve(bounds.size());
    if (mode_ == Mode::Call) {
      std::map<std::pair<int, int>, int> active;
      std::size_t cursor = 0;
      // Bring the sweep to t_begin (right-continuous: deltas at exactly t_begin apply).
      while (cursor < deltas_.size() && deltas_[cursor].time <= t_begin) {
        apply_delta(active, deltas_[cursor]);
        ++cursor;
      }
      for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        Piece p;
        p.t_begin = bounds[k];
        p.t_end = bounds[k + 1];
        p.base = snapshot_from_counts(active);
        out.push_back(std::move(p));
        while (cursor < deltas_.size() && deltas_[cursor].time <= bounds[k + 1]) {
          apply_delta(active, deltas_[cursor]);
          ++cursor;
        }
      }
    } else {
      std::map<std::pair<int, int>, double> raw;
      std::size_t cursor = 0;
      double ref = 0;  // raw holds sums as of time `ref`
      auto advance_raw = [&](double to) {
        double f = std::exp(-decay_rate_ * (to - ref));
        for (auto& kv : raw) kv.second *= f;
        while (cursor < messages_.size() && messages_[cursor].time <= to) {
          const auto& e = messages_[cursor];
          raw[{e.src, e.dst}] += std::exp(-decay_rate_ * (to - e.time));
          ++cursor;
        }
        ref = to;
      };
      advance_raw(t_begin);
      for (std::size_t k = 0; k + 1 < bounds.size(); ++k) {
        Piece p;
        p.t_begin = bounds[k];
        p.t_end = bounds[k + 1];
        p.base = snapshot_from_raw(raw, /*clip=*/false);
        out.push_back(std::move(p));
        advance_raw(bounds[k + 1]);
      }
    }
    return out;
  }

 private:
  static void validate_call_event(const CallEvent& e) {
    if (e.src == e.dst) throw ValidationError("call event: self-call src == dst rejected");
    if (e.src < 0 || e.dst < 0) throw ValidationError("call event: negative node index");
    if (!(e.start >= 0)) throw ValidationError("call event: start must be >= 0");
    if (!(e.duration > 0)) throw ValidationError("call event: duration must be > 0");
  }
  static void validate_message_event(const MessageEvent& e) {
    if (e.src == e.dst) throw ValidationError("message event: self-message src == dst rejected");
    if (e.src < 0 || e.dst < 0) throw ValidationError("message event: negative node index");
    if (!(e.time >= 0)) throw ValidationError("message event: time must be >= 0");
  }

  static void apply_delta(std::map<std::pair<int, int>, int>& active, const detail::EdgeDelta& d) {
    auto it = active.find({d.i, d.j});
    if (it == active.end()) {
      if (d.delta > 0) active[{d.i, d.j}] = 1;
      // A -1 for an unseen pair means the call started before the sweep window; ignore.
    } else {
      it->second += d.delta;
      if (it->second <= 0) active.erase(it);
    }
  }

  SparseSnapshot snapshot_from_counts(const std::map<std::pair<int, int>, int>& active) const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(2 * active.size());
    for (const auto& [pair, count] : active)
      if (count > 0) detail::add_symmetric_entry(trips, pair.first, pair.second, 1.0);
    SparseSnapshot A(n_, n_);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
  }

  SparseSnapshot snapshot_from_raw(const std::map<std::pair<int, int>, double>& raw, bool clip) const {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(raw.size());
    for (const auto& [pair, value] : raw) {
      double v = clip ? std::min(1.0 - kClipEps, value) : value;
      if (v > 0) trips.emplace_back(pair.first, pair.second, v);
    }
    SparseSnapshot A(n_, n_);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
  }

  Mode mode_ = Mode::Call;
  int n_ = 0;
  double decay_rate_ = 0;
  std::vector<CallEvent> calls_;
  std::vector<MessageEvent> messages_;
  std::vector<double> breakpoints_;
  std::vector<detail::EdgeDelta> deltas_;
  std::vector<std::string> external_ids_;
};

namespace detail {

inline bool parse_index_token(std::string_view tok, long& out) {
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc{} && res.ptr == tok.data() + tok.size();
}

}  // namespace detail

// Parses event CSV. Call mode header: src,dst,start,duration.
// Message mode header: src,dst,time. Node labels that are all nonnegative
// integers are used as indices directly; otherwise labels are remapped densely
// in order of first appearance and the table is kept on the result.
inline TemporalAdjacency ingest_events(std::string_view text, Mode mode, int n_hint = 0,
                                       double message_decay_rate = 1.0 / 3600.0) {
  const std::size_t want_fields = mode == Mode::Call ? 4 : 3;
  const char* want_header = mode == Mode::Call ? "src,dst,start,duration" : "src,dst,time";

  struct Row {
    std::size_t line_no;
    std::string src_tok, dst_tok;
    double t0, dur;
  };
  std::vector<Row> rows;
  bool header_seen = false;
  bool all_integer_ids = true;

  for_each_csv_line(text, [&](std::size_t line_no, std::string_view line) {
    auto fields = split_csv_line(line);
    if (!header_seen) {
      std::string got;
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) got += ',';
        got += std::string(fields[i]);
      }
      if (got != want_header)
        throw ParseError("line " + std::to_string(line_no) + ": expected header '" +
                         std::string(want_header) + "', got '" + got + "'");
      header_seen = true;
      return;
    }
    if (fields.size() != want_fields)
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(want_fields) + " fields, got " +
                       std::to_string(fields.size()));
    Row r;
    r.line_no = line_no;
    r.src_tok = std::string(fields[0]);
    r.dst_tok = std::string(fields[1]);
    if (r.src_tok.empty() || r.dst_tok.empty())
      throw ParseError("line " + std::to_string(line_no) + ": empty node id");
    long tmp;
    if (!detail::parse_index_token(fields[0], tmp) || tmp < 0) all_integer_ids = false;
    if (!detail::parse_index_token(fields[1], tmp) || tmp < 0) all_integer_ids = false;
    if (mode == Mode::Call) {
      r.t0 = parse_double_field(fields[2], line_no, "start");
      r.dur = parse_double_field(fields[3], line_no, "duration");
      if (!(r.t0 >= 0))
        throw ParseError("line " + std::to_string(line_no) + ": negative start time");
      if (!(r.dur > 0))
        throw ParseError("line " + std::to_string(line_no) + ": duration must be > 0");
    } else {
      r.t0 = parse_double_field(fields[2], line_no, "time");
      r.dur = 0;
      if (!(r.t0 >= 0)) throw ParseError("line " + std::to_string(line_no) + ": negative time");
    }
    rows.push_back(std::move(r));
  });
  if (!header_seen) throw ParseError("line 1: missing header '" + std::string(want_header) + "'");

  std::map<std::string, int> remap;
  std::vector<std::string> external_ids;
  auto to_index = [&](const std::string& tok, std::size_t line_no) -> int {
    if (all_integer_ids) {
      long v = 0;
      detail::parse_index_token(tok, v);
      if (v > 100'000'000)
        throw ParseError("line " + std::to_string(line_no) + ": node id " + tok + " too large");
      return static_cast<int>(v);
    }
    auto it = remap.find(tok);
    if (it != remap.end()) return it->second;
    int idx = static_cast<int>(external_ids.size());
    remap.emplace(tok, idx);
    external_ids.push_back(tok);
    return idx;
  };

  TemporalAdjacency g;
  if (mode == Mode::Call) {
    std::vector<CallEvent> events;
    events.reserve(rows.size());
    for (const auto& r : rows) {
      CallEvent e{to_index(r.src_tok, r.line_no), to_index(r.dst_tok, r.line_no), r.t0, r.dur};
      if (e.src == e.dst)
        throw ParseError("line " + std::to_string(r.line_no) + ": self-call rejected");
      events.push_back(e);
    }
    g = TemporalAdjacency::from_call_events(std::move(events), n_hint);
  } else {
    std::vector<MessageEvent> events;
    events.reserve(rows.size());
    for (const auto& r : rows) {
      MessageEvent e{to_index(r.src_tok, r.line_no), to_index(r.dst_tok, r.line_no), r.t0};
      if (e.src == e.dst)
        throw ParseError("line " + std::to_string(r.line_no) + ": self-message rejected");
      events.push_back(e);
    }
    g = TemporalAdjacency::from_message_events(std::move(events), message_decay_rate, n_hint);
  }
  g.set_external_ids(std::move(external_ids));
  return g;
}

// Per-node aggregate seconds of call activity as sender or receiver, counting
// overlapping calls per-call. Optional [t0, t1) window filters on call start.
inline Vector bandwidth(const TemporalAdjacency& g, double t0 = 0,
                        double t1 = std::numeric_limits<double>::infinity()) {
  if (g.mode() != Mode::Call)
    throw UnsupportedModeError("bandwidth is defined for call mode only");
  Vector out = Vector::Zero(g.node_count());
  for (const auto& e : g.call_events()) {
    if (e.start < t0 || e.start >= t1) continue;
    out[e.src] += e.duration;
    out[e.dst] += e.duration;
  }
  return out;
}

namespace detail {

// Largest real eigenvalue of a (generally unsymmetric) nonnegative snapshot.
inline double max_real_eigenvalue(const SparseSnapshot& A) {
  Matrix dense = Matrix(A);
  Eigen::EigenSolver<Matrix> es(dense, /*computeEigenvectors=*/false);
  double best = -std::numeric_limits<double>::infinity();
  const auto& ev = es.eigenvalues();
  const double imag_tol = 1e-9 * std::max(1.0, dense.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (std::abs(ev[i].imag()) <= imag_tol) best = std::max(best, ev[i].real());
  return best;
}

}  // namespace detail

// Checks that -log(I - a A(t)) is well-defined along the trajectory:
// 1 - a*lambda > 0 for all real eigenvalues lambda of every snapshot.
// Matching-only call data reduces to a < 1; otherwise a row-sum bound is tried
// first and only offending snapshots get an exact eigenvalue check (n <= 2000).
inline AttenuationReport validate_attenuation(const TemporalAdjacency& g, const Params& params) {
  using Status = AttenuationReport::Status;
  if (!(params.a > 0)) return {Status::Invalid, "attenuation a must be > 0"};
  if (g.empty()) return {Status::Valid, "no events; A(t) is identically zero"};

  double t_last = g.breakpoints().back();
  auto pieces = g.pieces(0, t_last + 1.0);

  bool matching_only = g.mode() == Mode::Call;
  double max_row_sum = 0;
  std::vector<SparseSnapshot> offenders;
  for (const auto& p : pieces) {
    Vector row_sums = Vector::Zero(g.node_count());
    for (int k = 0; k < p.base.outerSize(); ++k)
      for (SparseSnapshot::InnerIterator it(p.base, k); it; ++it) {
        // Message-mode raw sums can exceed 1; clip before bounding.
        double v = g.mode() == Mode::Message ? std::min(1.0 - kClipEps, it.value()) : it.value();
        row_sums[it.row()] += v;
      }
    double rs = row_sums.size() ? row_sums.maxCoeff() : 0.0;
    max_row_sum = std::max(max_row_sum, rs);
    if (matching_only && rs > 1.0) matching_only = false;
    if (params.a * rs >= 1.0) {
      SparseSnapshot clipped = p.base;
      if (g.mode() == Mode::Message)
        clipped = clipped.unaryExpr([](double v) { return std::min(1.0 - kClipEps, v); });
      offenders.push_back(std::move(clipped));
    }
  }

  if (matching_only) {
    if (params.a < 1.0)
      return {Status::Valid, "matching-only call data; a < 1"};
    return {Status::Invalid, "matching-only call data requires a < 1, got a = " +
                                 format_double(params.a)};
  }
  if (offenders.empty())
    return {Status::Valid, "row-sum bound holds: a * max row sum = " +
                               format_double(params.a * max_row_sum) + " < 1"};
  if (g.node_count() > 2000)
    return {Status::Warning,
            "row-sum bound exceeded and n > 2000; exact eigenvalue check skipped"};
  for (const SparseSnapshot& A : offenders) {
    double lam = detail::max_real_eigenvalue(A);
    if (1.0 - params.a * lam <= 0)
      return {Status::Invalid, "1 - a*lambda <= 0 for a snapshot with max real eigenvalue " +
                                   format_double(lam)};
  }
  return {Status::Valid, "eigenvalue check passed on " + std::to_string(offenders.size()) +
                             " snapshot(s) exceeding the row-sum bound"};
}

}  // namespace dyncomm
