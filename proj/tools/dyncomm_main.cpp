// dyncomm: continuous-time communicability for temporal networks.
// Subcommands: run, track-group, compare-discrete, synth.

#include <dyncomm/dyncomm.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw dyncomm::ParseError("cannot open input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw dyncomm::Error("cannot write output file: " + path.string());
  out << content;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (auto field : dyncomm::split_csv_line(text))
    out.push_back(dyncomm::parse_double_field(field, 0, "list entry"));
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (double v : parse_double_list(text)) out.push_back(static_cast<int>(v));
  return out;
}

struct RunOptions {
  std::string input;
  std::string mode = "call";
  int n_hint = 0;
  double a = 1e-4;
  double b = 1.0 / 86400.0;
  std::string half_life;
  std::string decay_per_day;
  int p = 5;
  double message_decay = 1.0 / 3600.0;
  double abs_tol = 1e-4;
  double rel_tol = 1e-4;
  double h_max = 0;
  long max_steps = 5'000'000;
  double horizon = 0;  // 0 = end of data
  int samples = 40;
  std::string sample_times;
  std::string engine = "auto";
  std::string out_dir = ".";
  std::string from_manifest;
  // resolved state
  std::vector<double> resolved_times;
  bool b_given = false;
};

void add_run_options(CLI::App* cmd, RunOptions& o) {
  cmd->add_option("--input", o.input, "event CSV (call: src,dst,start,duration)");
  cmd->add_option("--mode", o.mode, "call|message")->check(CLI::IsMember({"call", "message"}));
  cmd->add_option("--n-hint", o.n_hint, "minimum node count");
  cmd->add_option("--a", o.a, "edge attenuation");
  auto* b_opt = cmd->add_option("--b", o.b, "temporal decay rate [1/s]");
  auto* hl = cmd->add_option("--half-life", o.half_life, "decay given as half-life in seconds");
  auto* dpd = cmd->add_option("--decay-per-day", o.decay_per_day,
                              "decay given as downweighting factor per day ('e' or a number > 1)");
  b_opt->excludes(hl)->excludes(dpd);
  hl->excludes(dpd);
  cmd->add_option("--p", o.p, "series order for -log(I - aA)");
  cmd->add_option("--message-decay", o.message_decay, "message edge decay rate c [1/s]");
  cmd->add_option("--abs-tol", o.abs_tol, "absolute error tolerance");
  cmd->add_option("--rel-tol", o.rel_tol, "relative error tolerance");
  cmd->add_option("--h-max", o.h_max, "max step size (0 = unlimited)");
  cmd->add_option("--max-steps", o.max_steps, "max integrator steps");
  cmd->add_option("--horizon", o.horizon, "integration end time T (default: end of data)");
  cmd->add_option("--samples", o.samples, "number of uniform sample intervals over [0, T]");
  cmd->add_option("--sample-times", o.sample_times, "explicit comma-separated sample times");
  cmd->add_option("--engine", o.engine, "auto|rk|exact|receive")
      ->check(CLI::IsMember({"auto", "rk", "exact", "receive"}));
  cmd->add_option("--out", o.out_dir, "output directory");
  cmd->add_option("--from-manifest", o.from_manifest,
                  "re-run with the parameters recorded in a manifest.json");
}

double resolve_b(const RunOptions& o) {
  if (!o.half_life.empty()) {
    double h = std::stod(o.half_life);
    if (!(h > 0)) throw dyncomm::ValidationError("--half-life must be > 0");
    return std::log(2.0) / h;
  }
  if (!o.decay_per_day.empty()) {
    if (o.decay_per_day == "e") return 1.0 / 86400.0;
    double f = std::stod(o.decay_per_day);
    if (!(f >= 1.0)) throw dyncomm::ValidationError("--decay-per-day factor must be >= 1");
    return std::log(f) / 86400.0;
  }
  return o.b;
}

struct LoadedRun {
  dyncomm::TemporalAdjacency graph;
  dyncomm::Params params;
  dyncomm::IntegratorConfig config;
  double T = 0;
  std::vector<double> times;
  std::string engine_resolved;
  std::string attenuation;
};

// Exact engine pays one (2n)^3 exponential per piece; take it only when that
// is clearly cheap, otherwise adaptive RK.
std::string choose_engine(const std::string& requested, const dyncomm::TemporalAdjacency& g,
                          std::size_t piece_count) {
  if (requested != "auto") return requested;
  if (g.mode() != dyncomm::Mode::Call) return "rk";
  double n2 = 2.0 * g.node_count();
  double flops = static_cast<double>(piece_count) * 13.0 * n2 * n2 * n2;
  return (g.node_count() <= 500 && flops <= 2e10) ? "exact" : "rk";
}

LoadedRun load_run(RunOptions& o, const std::string& command) {
  if (o.input.empty()) throw dyncomm::ValidationError("--input is required");
  LoadedRun r;
  dyncomm::Mode mode = o.mode == "call" ? dyncomm::Mode::Call : dyncomm::Mode::Message;
  r.graph = dyncomm::ingest_events(read_file(o.input), mode, o.n_hint, o.message_decay);

  r.params.a = o.a;
  r.params.b = resolve_b(o);
  r.params.p = o.p;
  r.params.c = o.message_decay;
  r.params.validate();

  auto report = dyncomm::validate_attenuation(r.graph, r.params);
  r.attenuation = dyncomm::to_string(report.status);
  if (report.status == dyncomm::AttenuationReport::Status::Invalid)
    throw dyncomm::ValidationError("attenuation check failed: " + report.detail);
  if (report.status == dyncomm::AttenuationReport::Status::Warning)
    std::cerr << "warning: " << report.detail << "\n";

  r.T = o.horizon;
  if (r.T <= 0) {
    if (r.graph.breakpoints().empty())
      throw dyncomm::ValidationError("no events in input; provide --horizon");
    r.T = r.graph.breakpoints().back();
  }

  if (!o.sample_times.empty()) {
    r.times = parse_double_list(o.sample_times);
  } else if (!o.resolved_times.empty()) {
    r.times = o.resolved_times;
  } else {
    if (o.samples < 1) throw dyncomm::ValidationError("--samples must be >= 1");
    for (int k = 0; k <= o.samples; ++k)
      r.times.push_back(k == o.samples ? r.T : r.T * k / o.samples);
  }

  r.config.abs_tol = o.abs_tol;
  r.config.rel_tol = o.rel_tol;
  r.config.h_max = o.h_max;
  r.config.max_steps = o.max_steps;
  r.config.validate();

  std::size_t piece_count = r.graph.breakpoints().size() + 1;
  r.engine_resolved = choose_engine(o.engine, r.graph, piece_count);
  if (command == "track-group" && r.engine_resolved == "receive")
    throw dyncomm::ValidationError("track-group needs matrix state; --engine receive unsupported");
  if (r.engine_resolved == "exact" && r.graph.mode() != dyncomm::Mode::Call)
    throw dyncomm::ValidationError("--engine exact requires call mode");
  return r;
}

json manifest_parameters(const RunOptions& o, const LoadedRun& r) {
  json p;
  p["input"] = o.input;
  p["mode"] = o.mode;
  p["n_hint"] = o.n_hint;
  p["a"] = r.params.a;
  p["b"] = r.params.b;
  p["p"] = r.params.p;
  p["message_decay"] = r.params.c;
  p["abs_tol"] = r.config.abs_tol;
  p["rel_tol"] = r.config.rel_tol;
  p["h_max"] = r.config.h_max;
  p["max_steps"] = r.config.max_steps;
  p["horizon"] = r.T;
  p["sample_times"] = r.times;
  p["engine"] = o.engine;
  p["engine_resolved"] = r.engine_resolved;
  p["out"] = o.out_dir;
  return p;
}

void apply_manifest(RunOptions& o) {
  json m = json::parse(read_file(o.from_manifest));
  const json& p = m.at("parameters");
  o.input = p.at("input").get<std::string>();
  o.mode = p.at("mode").get<std::string>();
  o.n_hint = p.at("n_hint").get<int>();
  o.a = p.at("a").get<double>();
  o.b = p.at("b").get<double>();
  o.half_life.clear();
  o.decay_per_day.clear();
  o.p = p.at("p").get<int>();
  o.message_decay = p.at("message_decay").get<double>();
  o.abs_tol = p.at("abs_tol").get<double>();
  o.rel_tol = p.at("rel_tol").get<double>();
  o.h_max = p.at("h_max").get<double>();
  o.max_steps = p.at("max_steps").get<long>();
  o.horizon = p.at("horizon").get<double>();
  o.resolved_times = p.at("sample_times").get<std::vector<double>>();
  o.sample_times.clear();
  o.engine = p.at("engine").get<std::string>();
  o.out_dir = p.at("out").get<std::string>();
}

void write_id_map(const LoadedRun& r, const fs::path& out_dir) {
  if (r.graph.external_ids().empty()) return;
  std::string csv = "external_id,index\n";
  for (std::size_t i = 0; i < r.graph.external_ids().size(); ++i)
    csv += r.graph.external_ids()[i] + "," + std::to_string(i) + "\n";
  write_file(out_dir / "id_map.csv", csv);
}

void write_manifest(const fs::path& out_dir, const std::string& command, json parameters,
                    json results) {
  json m;
  m["tool"] = "dyncomm";
  m["version"] = dyncomm::kVersion;
  m["command"] = command;
  m["parameters"] = std::move(parameters);
  m["results"] = std::move(results);
  write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

json stats_json(const dyncomm::IntegrationStats& stats) {
  json s;
  s["pieces"] = stats.pieces;
  s["steps_accepted"] = stats.accepted;
  s["steps_rejected"] = stats.rejected;
  s["rhs_evals"] = stats.rhs_evals;
  return s;
}

int cmd_run(RunOptions& o) {
  if (!o.from_manifest.empty()) apply_manifest(o);
  auto t0 = std::chrono::steady_clock::now();
  LoadedRun r = load_run(o, "run");
  fs::path out_dir(o.out_dir);
  fs::create_directories(out_dir);

  dyncomm::CentralitySeries series;
  dyncomm::IntegrationStats stats;
  if (r.engine_resolved == "receive") {
    series = dyncomm::receive_fast_path(r.graph, r.params, r.T, r.config, r.times);
  } else if (r.engine_resolved == "exact") {
    auto run = dyncomm::integrate_exact(r.graph, r.params, r.T, r.times);
    stats = run.stats;
    series = dyncomm::centrality_series(run, r.graph);
  } else {
    auto run = dyncomm::integrate_matrix(r.graph, r.params, r.T, r.config, r.times);
    stats = run.stats;
    series = dyncomm::centrality_series(run, r.graph);
  }

  const bool has_broadcast = !series.broadcast.empty();
  const int n = r.graph.node_count();

  std::string series_csv = has_broadcast ? "t,node,broadcast,receive\n" : "t,node,receive\n";
  for (std::size_t s = 0; s < series.times.size(); ++s)
    for (int i = 0; i < n; ++i) {
      series_csv += dyncomm::format_double(series.times[s]);
      series_csv += ',';
      series_csv += std::to_string(i);
      series_csv += ',';
      if (has_broadcast) {
        series_csv += dyncomm::format_double(series.broadcast[s][i]);
        series_csv += ',';
      }
      series_csv += dyncomm::format_double(series.receive[s][i]);
      series_csv += '\n';
    }
  write_file(out_dir / "series.csv", series_csv);

  const dyncomm::Vector& final_receive = series.receive.back();
  const dyncomm::Vector& rank_key = has_broadcast ? series.broadcast.back() : final_receive;
  auto ranking = dyncomm::rank(rank_key, n);
  dyncomm::Vector bw = r.graph.mode() == dyncomm::Mode::Call ? series.bandwidth
                                                             : dyncomm::Vector::Zero(n);
  std::string rank_csv =
      has_broadcast ? "rank,node,broadcast,receive,bandwidth\n" : "rank,node,receive,bandwidth\n";
  for (std::size_t i = 0; i < ranking.size(); ++i) {
    auto [node, value] = ranking[i];
    rank_csv += std::to_string(i + 1);
    rank_csv += ',';
    rank_csv += std::to_string(node);
    rank_csv += ',';
    if (has_broadcast) {
      rank_csv += dyncomm::format_double(value);
      rank_csv += ',';
      rank_csv += dyncomm::format_double(final_receive[node]);
    } else {
      rank_csv += dyncomm::format_double(final_receive[node]);
    }
    rank_csv += ',';
    rank_csv += dyncomm::format_double(bw[node]);
    rank_csv += '\n';
  }
  write_file(out_dir / "rank.csv", rank_csv);
  write_id_map(r, out_dir);

  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json results = stats_json(stats);
  results["n"] = n;
  results["events"] = r.graph.mode() == dyncomm::Mode::Call ? r.graph.call_events().size()
                                                            : r.graph.message_events().size();
  results["attenuation"] = r.attenuation;
  results["wall_clock_s"] = wall;
  write_manifest(out_dir, "run", manifest_parameters(o, r), std::move(results));
  return 0;
}

int cmd_track_group(RunOptions& o, std::string& group_arg) {
  json extra;
  if (!o.from_manifest.empty()) {
    json m = json::parse(read_file(o.from_manifest));
    apply_manifest(o);
    group_arg = m.at("parameters").at("group_arg").get<std::string>();
  }
  auto t0 = std::chrono::steady_clock::now();
  LoadedRun r = load_run(o, "track-group");
  auto group = parse_int_list(group_arg);
  for (int gnode : group)
    if (gnode < 0 || gnode >= r.graph.node_count())
      throw dyncomm::ValidationError("unknown node in --group: " + std::to_string(gnode));

  fs::path out_dir(o.out_dir);
  fs::create_directories(out_dir);

  dyncomm::MatrixRun run;
  if (r.engine_resolved == "exact")
    run = dyncomm::integrate_exact(r.graph, r.params, r.T, r.times);
  else
    run = dyncomm::integrate_matrix(r.graph, r.params, r.T, r.config, r.times);
  auto trace = dyncomm::group_trace(run.samples, group);

  std::string csv = "t,value,flag\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    csv += dyncomm::format_double(trace.times[i]);
    csv += ',';
    csv += dyncomm::format_double(trace.values[i]);
    csv += ',';
    csv += trace.zero_denominator[i] ? '1' : '0';
    csv += '\n';
  }
  write_file(out_dir / "group.csv", csv);
  write_id_map(r, out_dir);

  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json params = manifest_parameters(o, r);
  params["group"] = group;
  params["group_arg"] = group_arg;
  json results = stats_json(run.stats);
  results["n"] = r.graph.node_count();
  results["attenuation"] = r.attenuation;
  results["wall_clock_s"] = wall;
  write_manifest(out_dir, "track-group", std::move(params), std::move(results));
  return 0;
}

int cmd_compare_discrete(RunOptions& o, const std::string& dt_arg) {
  auto t0 = std::chrono::steady_clock::now();
  LoadedRun r = load_run(o, "compare-discrete");
  auto dt_list = parse_double_list(dt_arg);
  fs::path out_dir(o.out_dir);
  fs::create_directories(out_dir);

  auto rows = dyncomm::refine_and_compare(r.graph, r.params, r.T, dt_list, r.config);
  std::string csv = "dt,frobenius_rel_err\n";
  for (const auto& row : rows) {
    csv += dyncomm::format_double(row.dt);
    csv += ',';
    csv += dyncomm::format_double(row.frobenius_rel_err);
    csv += '\n';
  }
  write_file(out_dir / "compare.csv", csv);

  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  json params = manifest_parameters(o, r);
  params["dt_list"] = dt_list;
  json results;
  results["wall_clock_s"] = wall;
  results["attenuation"] = r.attenuation;
  write_manifest(out_dir, "compare-discrete", std::move(params), std::move(results));
  return 0;
}

struct SynthOptions {
  dyncomm::ScenarioConfig cfg;
  double horizon_days = 10;
  double switch_day = 7;
  bool no_switch = false;
  bool no_inner_circle = false;
  int leader = 200;
  std::string members = "1,2,3,5";
  std::string id_map = "200:300,1:306,2:309,3:360,5:392";
  std::uint64_t seed = 20080101;
  std::string out_dir = ".";
  std::string config_file;
};

std::map<int, int> parse_id_map(const std::string& text) {
  std::map<int, int> out;
  for (auto field : dyncomm::split_csv_line(text)) {
    auto colon = field.find(':');
    if (colon == std::string_view::npos)
      throw dyncomm::ValidationError("--id-map entries must look like old:new");
    out[static_cast<int>(dyncomm::parse_double_field(field.substr(0, colon), 0, "id-map key"))] =
        static_cast<int>(dyncomm::parse_double_field(field.substr(colon + 1), 0, "id-map value"));
  }
  return out;
}

void apply_synth_config_file(SynthOptions& so) {
  json j = json::parse(read_file(so.config_file));
  auto& c = so.cfg;
  if (j.contains("n")) c.n = j["n"].get<int>();
  if (j.contains("horizon_days")) so.horizon_days = j["horizon_days"].get<double>();
  if (j.contains("background_rate")) c.background_rate = j["background_rate"].get<double>();
  if (j.contains("call_duration_mean")) c.call_duration_mean = j["call_duration_mean"].get<double>();
  if (j.contains("relay_fanout")) c.relay_fanout = j["relay_fanout"].get<double>();
  if (j.contains("switch_day")) so.switch_day = j["switch_day"].get<double>();
  if (j.contains("leader")) so.leader = j["leader"].get<int>();
  if (j.contains("members")) {
    so.members.clear();
    for (auto& m : j["members"]) {
      if (!so.members.empty()) so.members += ',';
      so.members += std::to_string(m.get<int>());
    }
  }
  if (j.contains("id_map")) {
    so.id_map.clear();
    for (auto& [k, v] : j["id_map"].items()) {
      if (!so.id_map.empty()) so.id_map += ',';
      so.id_map += k + ":" + std::to_string(v.get<int>());
    }
  }
  if (j.contains("bursts_per_day")) c.bursts_per_day = j["bursts_per_day"].get<int>();
  if (j.contains("leader_call_duration_mean"))
    c.leader_call_duration_mean = j["leader_call_duration_mean"].get<double>();
  if (j.contains("relay_call_duration_mean"))
    c.relay_call_duration_mean = j["relay_call_duration_mean"].get<double>();
  if (j.contains("seed")) so.seed = j["seed"].get<std::uint64_t>();
}

int cmd_synth(SynthOptions& so) {
  if (!so.config_file.empty()) apply_synth_config_file(so);
  auto& cfg = so.cfg;
  cfg.horizon = so.horizon_days * 86400.0;
  if (so.no_inner_circle) {
    cfg.inner_circle.reset();
    cfg.switch_time.reset();
  } else {
    cfg.inner_circle = dyncomm::InnerCircleSpec{so.leader, parse_int_list(so.members)};
    if (so.no_switch || so.switch_day < 0)
      cfg.switch_time.reset();
    else
      cfg.switch_time = so.switch_day * 86400.0;
    cfg.id_map = parse_id_map(so.id_map);
  }

  auto scenario = dyncomm::generate(cfg, so.seed);
  fs::path out_dir(so.out_dir);
  fs::create_directories(out_dir);
  write_file(out_dir / "scenario.csv", dyncomm::export_csv(scenario));

  json truth;
  truth["leader_before"] = scenario.truth.before.leader;
  truth["members_before"] = scenario.truth.before.members;
  truth["leader_after"] = scenario.truth.after.leader;
  truth["members_after"] = scenario.truth.after.members;
  if (scenario.truth.switch_time)
    truth["switch_time"] = *scenario.truth.switch_time;
  else
    truth["switch_time"] = nullptr;
  truth["events"] = scenario.events.size();
  truth["seed"] = so.seed;
  json jc;
  jc["n"] = cfg.n;
  jc["horizon"] = cfg.horizon;
  jc["background_rate"] = cfg.background_rate;
  jc["call_duration_mean"] = cfg.call_duration_mean;
  jc["relay_fanout"] = cfg.relay_fanout;
  jc["bursts_per_day"] = cfg.bursts_per_day;
  jc["leader_call_duration_mean"] = cfg.leader_call_duration_mean;
  jc["relay_call_duration_mean"] = cfg.relay_call_duration_mean;
  truth["config"] = jc;
  write_file(out_dir / "ground_truth.json", truth.dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-time dynamic communicability for temporal networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", dyncomm::kVersion);

  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "integrate and emit centrality series + ranking");
  add_run_options(run, run_opts);

  RunOptions group_opts;
  std::string group_arg;
  auto* track = app.add_subcommand("track-group", "emit the group communicability trace");
  add_run_options(track, group_opts);
  track->add_option("--group", group_arg, "comma-separated node indices (>= 2)");

  RunOptions cmp_opts;
  std::string dt_arg;
  auto* cmp = app.add_subcommand("compare-discrete",
                                 "discrete-iteration error vs the ODE for a dt grid");
  add_run_options(cmp, cmp_opts);
  cmp->add_option("--dt", dt_arg, "comma-separated dt values, each dividing T")->required();

  SynthOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "generate a synthetic call scenario");
  synth->add_option("--config", synth_opts.config_file, "JSON scenario config (flags override)");
  synth->add_option("--n", synth_opts.cfg.n, "node count");
  synth->add_option("--horizon-days", synth_opts.horizon_days, "scenario length in days");
  synth->add_option("--background-rate", synth_opts.cfg.background_rate, "calls/node/day");
  synth->add_option("--call-duration-mean", synth_opts.cfg.call_duration_mean, "seconds");
  synth->add_option("--leader", synth_opts.leader, "inner-circle leader id");
  synth->add_option("--members", synth_opts.members, "inner-circle member ids");
  synth->add_option("--relay-fanout", synth_opts.cfg.relay_fanout, "relay calls/member/day");
  synth->add_option("--switch-day", synth_opts.switch_day, "identity-switch day (< 0: none)");
  synth->add_option("--id-map", synth_opts.id_map, "old:new id pairs for the switch");
  synth->add_option("--bursts-per-day", synth_opts.cfg.bursts_per_day, "pattern bursts per day");
  synth->add_option("--leader-call-duration-mean", synth_opts.cfg.leader_call_duration_mean,
                    "seconds");
  synth->add_option("--relay-call-duration-mean", synth_opts.cfg.relay_call_duration_mean,
                    "seconds");
  synth->add_flag("--no-switch", synth_opts.no_switch, "disable the identity switch");
  synth->add_flag("--no-inner-circle", synth_opts.no_inner_circle, "background traffic only");
  synth->add_option("--seed", synth_opts.seed, "RNG seed");
  synth->add_option("--out", synth_opts.out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts);
    if (track->parsed()) return cmd_track_group(group_opts, group_arg);
    if (cmp->parsed()) return cmd_compare_discrete(cmp_opts, dt_arg);
    if (synth->parsed()) return cmd_synth(synth_opts);
  } catch (const dyncomm::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const dyncomm::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 3;
  } catch (const dyncomm::IntegrationError& e) {
    std::cerr << "integrator error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
