#pragma once

#include <dyncomm/core.hpp>
#include <dyncomm/io.hpp>
#include <dyncomm/temporal_graph.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace dyncomm {

// Deterministic random source: std::mt19937_64 (fully specified by the
// standard) with hand-rolled inverse-CDF transforms, so identical
// (config, seed) pairs produce byte-identical scenarios on any platform.
// Cross-language runs share scenarios through the CSV export instead.
class SynthRng {
 public:
  explicit SynthRng(std::uint64_t seed) : eng_(seed) {}

  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  double exponential(double mean) { return -mean * std::log1p(-uniform01()); }

  // Uniform integer in [0, k). k is small here; the floor-of-uniform bias is
  // far below anything observable.
  int below(int k) { return std::min(k - 1, static_cast<int>(uniform01() * k)); }

  // Knuth's product method; fine for the small rates used here.
  int poisson(double lambda) {
    double limit = std::exp(-lambda);
    double prod = 1.0;
    int k = 0;
    do {
      prod *= uniform01();
      ++k;
    } while (prod > limit);
    return k - 1;
  }

 private:
  std::mt19937_64 eng_;
};

struct InnerCircleSpec {
  int leader = 0;
  std::vector<int> members;
};

// Desk-scale stand-in for the voice-call experiment: background traffic plus a
// planted inner circle. The leader places short coordination calls to the
// members, who then relay through many longer calls to random outsiders, so the
// leader's broadcast reach decouples from its (deliberately low) bandwidth.
// At switch_time the pattern migrates to the mapped IDs and the old IDs fall
// back to background-only behavior.
struct ScenarioConfig {
  int n = 400;
  double horizon = 10 * 86400.0;
  double background_rate = 3.0;       // background calls per node per day
  double call_duration_mean = 240.0;  // seconds
  std::optional<InnerCircleSpec> inner_circle = InnerCircleSpec{200, {1, 2, 3, 5}};
  double relay_fanout = 30.0;  // relay calls per member per day
  std::optional<double> switch_time = 7 * 86400.0;
  std::map<int, int> id_map = {{200, 300}, {1, 306}, {2, 309}, {3, 360}, {5, 392}};
  int bursts_per_day = 4;
  double leader_call_duration_mean = 45.0;
  double relay_call_duration_mean = 600.0;

  void validate() const {
    if (n < 2) throw ValidationError("scenario: need n >= 2");
    if (!(horizon > 0)) throw ValidationError("scenario: horizon must be > 0");
    if (background_rate < 0 || relay_fanout < 0)
      throw ValidationError("scenario: rates must be >= 0");
    if (!(call_duration_mean > 0) || !(leader_call_duration_mean > 0) ||
        !(relay_call_duration_mean > 0))
      throw ValidationError("scenario: call duration means must be > 0");
    if (bursts_per_day < 1) throw ValidationError("scenario: bursts_per_day must be >= 1");
    if (switch_time && !(*switch_time < horizon))
      throw ValidationError("scenario: switch_time must be < horizon");
    if (inner_circle) {
      std::set<int> ids(inner_circle->members.begin(), inner_circle->members.end());
      ids.insert(inner_circle->leader);
      if (ids.size() != inner_circle->members.size() + 1)
        throw ValidationError("scenario: inner-circle indices must be distinct");
      for (int id : ids)
        if (id < 0 || id >= n) throw ValidationError("scenario: inner-circle index out of range");
      if (switch_time) {
        std::set<int> mapped;
        for (int id : ids) {
          auto it = id_map.find(id);
          if (it == id_map.end())
            throw ValidationError("scenario: id_map must cover every inner-circle id");
          if (it->second < 0 || it->second >= n)
            throw ValidationError("scenario: id_map target out of range");
          mapped.insert(it->second);
        }
        if (mapped.size() != ids.size())
          throw ValidationError("scenario: id_map targets must be distinct");
      }
    }
  }
};

struct GroundTruth {
  InnerCircleSpec before;
  InnerCircleSpec after;  // equal to `before` when there is no switch
  std::optional<double> switch_time;
};

struct Scenario {
  std::vector<CallEvent> events;
  GroundTruth truth;
};

namespace detail {

inline constexpr std::size_t kMaxSynthEvents = 10'000'000;

// Uniform choice from [0, n) excluding a sorted list of indices.
inline int pick_excluding(SynthRng& rng, int n, const std::vector<int>& sorted_excluded) {
  int k = rng.below(n - static_cast<int>(sorted_excluded.size()));
  for (int e : sorted_excluded) {
    if (k >= e) ++k;
    else break;
  }
  return k;
}

}  // namespace detail

inline Scenario generate(const ScenarioConfig& cfg, std::uint64_t seed) {
  cfg.validate();

  const double day = 86400.0;
  const double days = cfg.horizon / day;
  double est = cfg.background_rate * cfg.n * days;
  if (cfg.inner_circle) {
    double per_day = cfg.inner_circle->members.size() *
                     (cfg.bursts_per_day + cfg.relay_fanout);
    est += per_day * days;
  }
  if (est > static_cast<double>(detail::kMaxSynthEvents))
    throw ValidationError("scenario: configuration would generate more than 1e7 events");

  SynthRng rng(seed);
  Scenario out;

  InnerCircleSpec before, after;
  if (cfg.inner_circle) {
    before = *cfg.inner_circle;
    after = before;
    if (cfg.switch_time) {
      after.leader = cfg.id_map.at(before.leader);
      after.members.clear();
      for (int m : before.members) after.members.push_back(cfg.id_map.at(m));
    }
  }
  out.truth = {before, after, cfg.switch_time};

  std::set<int> covert_before_set, covert_after_set;
  if (cfg.inner_circle) {
    covert_before_set.insert(before.leader);
    covert_before_set.insert(before.members.begin(), before.members.end());
    covert_after_set.insert(after.leader);
    covert_after_set.insert(after.members.begin(), after.members.end());
  }
  const double switch_at = cfg.switch_time.value_or(cfg.horizon);
  auto covert_at = [&](double t) -> const std::set<int>& {
    return t < switch_at ? covert_before_set : covert_after_set;
  };

  auto emit = [&](int src, int dst, double start, double duration) {
    out.events.push_back({src, dst, start, std::max(duration, 1e-3)});
    if (out.events.size() > detail::kMaxSynthEvents)
      throw ValidationError("scenario: generated more than 1e7 events");
  };

  // Background traffic. Covert ids are silent while covert: pre-switch circle
  // ids get background only after the switch, post-switch ids only before it.
  if (cfg.background_rate > 0) {
    const double mean_gap = day / cfg.background_rate;
    for (int u = 0; u < cfg.n; ++u) {
      bool covert_pre = covert_before_set.count(u) > 0;
      bool covert_post = covert_after_set.count(u) > 0;
      double w0 = covert_pre ? switch_at : 0.0;
      double w1 = covert_post ? switch_at : cfg.horizon;
      if (covert_pre && covert_post) continue;  // id stays covert throughout
      double t = w0;
      while (true) {
        t += rng.exponential(mean_gap);
        if (t >= w1) break;
        const auto& covert = covert_at(t);
        std::vector<int> excluded(covert.begin(), covert.end());
        if (!covert.count(u)) {
          excluded.push_back(u);
          std::sort(excluded.begin(), excluded.end());
        }
        int partner = detail::pick_excluding(rng, cfg.n, excluded);
        emit(u, partner, t, rng.exponential(cfg.call_duration_mean));
      }
    }
  }

  // Inner-circle pattern: several daily bursts. In each burst the leader
  // briefly calls every member; each member then relays to distinct random
  // outsiders over the following hours.
  if (cfg.inner_circle) {
    for (int d = 0; d * day < cfg.horizon; ++d) {
      double day_start = d * day;
      for (int burst = 0; burst < cfg.bursts_per_day; ++burst) {
        double hour = 8.0 + 12.0 * burst / cfg.bursts_per_day;
        double burst_t = day_start + hour * 3600.0 + rng.uniform(0.0, 1800.0);
        if (burst_t >= cfg.horizon) continue;
        bool after_switch = burst_t >= switch_at;
        const InnerCircleSpec& circle = after_switch ? after : before;
        // Pattern calls never straddle the switch: the old circle's last
        // pattern call starts strictly before switch_time.
        double limit = after_switch ? cfg.horizon : switch_at;

        std::vector<int> circle_ids(circle.members.begin(), circle.members.end());
        circle_ids.push_back(circle.leader);
        std::sort(circle_ids.begin(), circle_ids.end());

        double t_call = burst_t;
        for (int member : circle.members) {
          t_call += rng.uniform(30.0, 120.0);
          if (t_call >= limit) continue;
          emit(circle.leader, member, t_call, rng.exponential(cfg.leader_call_duration_mean));

          int relays = rng.poisson(cfg.relay_fanout / cfg.bursts_per_day);
          std::set<int> used;
          for (int rix = 0; rix < relays; ++rix) {
            double relay_t = t_call + rng.uniform(120.0, 7200.0);
            int outsider;
            int guard = 0;
            do {
              outsider = detail::pick_excluding(rng, cfg.n, circle_ids);
            } while (used.count(outsider) && ++guard < 64);
            used.insert(outsider);
            if (relay_t >= limit) continue;
            emit(member, outsider, relay_t, rng.exponential(cfg.relay_call_duration_mean));
          }
        }
      }
    }
  }

  std::sort(out.events.begin(), out.events.end(), [](const CallEvent& x, const CallEvent& y) {
    return std::tie(x.start, x.src, x.dst, x.duration) <
           std::tie(y.start, y.src, y.dst, y.duration);
  });
  return out;
}

// CSV in the call-mode ingest format; round-trips losslessly.
inline std::string export_csv(const Scenario& scenario) {
  std::string out = "src,dst,start,duration\n";
  for (const auto& e : scenario.events) {
    out += std::to_string(e.src);
    out += ',';
    out += std::to_string(e.dst);
    out += ',';
    out += format_double(e.start);
    out += ',';
    out += format_double(e.duration);
    out += '\n';
  }
  return out;
}

}  // namespace dyncomm
