#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mrexplore/mrexplore.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliError : std::runtime_error {
  int code;
  CliError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CliError(2, "cannot read '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) throw CliError(2, "cannot write '" + path.string() + "'");
}

void check(mrx_status s, const char* what) {
  if (s != MRX_OK) throw CliError(s == MRX_ERR_CONFIG || s == MRX_ERR_SCENARIO ? 2 : 1,
                                  std::string(what) + ": " + mrx_last_error());
}

std::string take(char* s) {
  std::string out = s ? s : "";
  mrx_string_free(s);
  return out;
}

/// 0 = no trace lines, 1 = trace lines (default), 2 = trace lines plus a per-tick log on stderr.
int log_level() {
  const char* v = std::getenv("EXPLORE_LOG");
  if (!v || !*v) return 1;
  const std::string s = v;
  if (s == "0" || s == "off" || s == "quiet") return 0;
  if (s == "2" || s == "debug" || s == "verbose") return 2;
  return 1;
}

void log_tick(mrx_mission* m) {
  int64_t now = 0;
  int count = 0;
  mrx_mission_now(m, &now);
  mrx_mission_robot_count(m, &count);
  double vol = 0;
  mrx_mission_union_volume(m, &vol);
  std::fprintf(stderr, "tick %lld vol %.3f", static_cast<long long>(now), vol);
  for (int id = 1; id <= count; ++id) {
    mrx_robot_info r{};
    mrx_mission_robot(m, id, &r);
    std::fprintf(stderr, " | r%d (%.2f, %.2f)%s%s", id, r.x, r.y, r.completed ? " done" : "", r.stopped ? " stopped" : "");
  }
  std::fprintf(stderr, "\n");
}

struct RunOptions {
  std::string scenario;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string mode;
  std::string map;
  std::optional<int> serve;
  int64_t decimation = 5;
  double linger = 0.0;
  std::string out = "out";
};

int cmd_run(const RunOptions& o) {
  const std::string scenario = read_file(o.scenario);
  std::string overrides = o.config.empty() ? "" : read_file(o.config) + "\n";
  if (o.seed) overrides += "mission_seed=" + std::to_string(*o.seed) + "\n";
  if (!o.mode.empty()) overrides += "mode=" + o.mode + "\n";
  std::optional<std::string> map;
  if (!o.map.empty()) map = read_file(o.map);
  if (o.mode == "coverage" && !map) throw CliError(2, "coverage mode needs --map");

  mrx_mission* m = nullptr;
  check(mrx_mission_create(scenario.c_str(), overrides.c_str(), map ? map->c_str() : nullptr, &m), "create");
  std::unique_ptr<mrx_mission, void (*)(mrx_mission*)> guard(m, mrx_mission_destroy);
  const int level = log_level();
  check(mrx_mission_set_trace_recording(m, level >= 1), "trace");

  if (o.serve) {
    int port = 0;
    check(mrx_mission_serve(m, *o.serve, o.decimation, &port), "serve");
    std::fprintf(stderr, "serving on 127.0.0.1:%d\n", port);
  }
  int finished = 0;
  check(mrx_mission_finished(m, &finished), "finished");
  while (!finished) {
    check(mrx_mission_step(m, 1, &finished), "step");
    if (level >= 2) log_tick(m);
  }
  if (o.serve && o.linger > 0) {
    const auto until = std::chrono::steady_clock::now() + std::chrono::duration<double>(o.linger);
    while (std::chrono::steady_clock::now() < until) {
      check(mrx_mission_serve_pump(m, nullptr), "pump");
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }

  fs::create_directories(o.out);
  char* s = nullptr;
  check(mrx_mission_metrics_csv(m, &s), "metrics");
  write_file(fs::path(o.out) / "metrics.csv", take(s));
  check(mrx_mission_summary_json(m, &s), "summary");
  const std::string summary = take(s);
  write_file(fs::path(o.out) / "summary.json", summary + "\n");
  if (level >= 1) {
    check(mrx_mission_trace(m, &s), "trace");
    json header = {{"ev", "header"}, {"scenario", scenario}, {"config", overrides}};
    header["coverage_map"] = map ? json(*map) : json(nullptr);
    write_file(fs::path(o.out) / "trace.jsonl", header.dump() + "\n" + take(s));
  }
  int count = 0;
  check(mrx_mission_robot_count(m, &count), "robots");
  for (int id = 1; id <= count; ++id) {
    check(mrx_mission_export_point_map(m, id, &s), "export");
    write_file(fs::path(o.out) / ("point_map_r" + std::to_string(id) + ".txt"), take(s));
  }
  check(mrx_mission_save(m, (fs::path(o.out) / "final.snapshot").string().c_str()), "save");
  std::cout << summary << "\n";
  return 0;
}

int cmd_replay(const std::string& trace_path) {
  std::ifstream in(trace_path);
  if (!in) throw CliError(2, "cannot read '" + trace_path + "'");
  std::string line;
  if (!std::getline(in, line)) throw CliError(2, "empty trace");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception&) {
    throw CliError(2, "trace has no header line");
  }
  if (header.value("ev", "") != "header") throw CliError(2, "trace has no header line");
  std::vector<std::string> expected;
  std::multimap<int64_t, json> commands;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    expected.push_back(line);
    const json e = json::parse(line);
    if (e.value("ev", "") == "command") commands.emplace(e.at("tick").get<int64_t>(), e.at("cmd"));
  }
  const std::string scenario = header.at("scenario").get<std::string>();
  const std::string config = header.at("config").get<std::string>();
  const json& map = header.at("coverage_map");
  const std::string map_text = map.is_null() ? "" : map.get<std::string>();

  mrx_mission* m = nullptr;
  check(mrx_mission_create(scenario.c_str(), config.c_str(), map.is_null() ? nullptr : map_text.c_str(), &m),
        "create");
  std::unique_ptr<mrx_mission, void (*)(mrx_mission*)> guard(m, mrx_mission_destroy);
  auto apply_at = [&](int64_t tick) {
    auto [lo, hi] = commands.equal_range(tick);
    for (auto it = lo; it != hi; ++it) {
      const std::string args = it->second.at("args").dump();
      check(mrx_mission_control(m, it->second.at("cmd").get<std::string>().c_str(), args.c_str(), nullptr), "control");
    }
  };
  int64_t now = 0;
  apply_at(0);
  int finished = 0;
  check(mrx_mission_finished(m, &finished), "finished");
  while (!finished) {
    check(mrx_mission_step(m, 1, &finished), "step");
    check(mrx_mission_now(m, &now), "now");
    apply_at(now);
    check(mrx_mission_finished(m, &finished), "finished");
  }
  char* s = nullptr;
  check(mrx_mission_trace(m, &s), "trace");
  std::istringstream got(take(s));
  std::size_t n = 0;
  while (std::getline(got, line)) {
    if (n >= expected.size() || expected[n] != line) {
      std::cerr << "replay diverges at event " << n + 1 << "\n";
      return 1;
    }
    ++n;
  }
  if (n != expected.size()) {
    std::cerr << "replay diverges at event " << n + 1 << " (trace is longer)\n";
    return 1;
  }
  uint64_t digest = 0;
  mrx_mission_trace_digest(m, &digest);
  std::printf("replay ok: %zu events, %lld ticks, digest %016llx\n", n, static_cast<long long>(now),
              static_cast<unsigned long long>(digest));
  return 0;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

int cmd_report(const std::string& path, const std::string& format) {
  std::ifstream in(path);
  if (!in) throw CliError(2, "cannot read '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw CliError(2, "metrics file is empty");
  const auto cols = split(line, ',');
  if (cols.size() < 2 || cols[0] != "tick" || cols[1] != "vol_union") throw CliError(2, "not a metrics file");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto r = split(line, ',');
    if (r.size() != cols.size()) throw CliError(2, "metrics row has " + std::to_string(r.size()) + " columns");
    rows.push_back(std::move(r));
  }
  if (format == "csv") {
    std::cout << cols[0];
    for (std::size_t i = 1; i < cols.size(); ++i) std::cout << ',' << cols[i];
    std::cout << '\n';
    for (const auto& r : rows) {
      std::cout << r[0];
      for (std::size_t i = 1; i < r.size(); ++i) std::cout << ',' << r[i];
      std::cout << '\n';
    }
    return 0;
  }
  json j;
  j["ticks"] = rows.empty() ? 0 : std::stoll(rows.back()[0]);
  std::vector<std::size_t> dist_cols;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (cols[i].rfind("dist_r", 0) == 0) dist_cols.push_back(i);
  }
  json completion = nullptr;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (std::size_t c : dist_cols) {
      const double prev = k == 0 ? 0.0 : std::stod(rows[k - 1][c]);
      if (std::stod(rows[k][c]) > prev) completion = std::stoll(rows[k][0]);
    }
  }
  j["completion_tick"] = completion;
  json last = json::object();
  if (!rows.empty()) {
    for (std::size_t i = 1; i < cols.size(); ++i) last[cols[i]] = std::stod(rows.back()[i]);
  }
  j["final"] = last;
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-robot exploration simulator"};
  app.require_subcommand(1);

  RunOptions ro;
  auto* run = app.add_subcommand("run", "Run a mission");
  run->add_option("--scenario", ro.scenario, "Scenario file")->required();
  run->add_option("--config", ro.config, "key=value configuration overrides");
  run->add_option("--seed", ro.seed, "Mission seed");
  run->add_option("--mode", ro.mode, "exploration or coverage")->check(CLI::IsMember({"exploration", "coverage"}));
  run->add_option("--map", ro.map, "Point map for coverage mode");
  run->add_option("--serve", ro.serve, "Control/telemetry port on 127.0.0.1 (0 picks one)");
  run->add_option("--decimation", ro.decimation, "Telemetry every N ticks")->check(CLI::PositiveNumber);
  run->add_option("--linger", ro.linger, "Seconds to keep serving after the mission ends");
  run->add_option("--out", ro.out, "Output directory");

  std::string trace;
  auto* replay = app.add_subcommand("replay", "Re-run a recorded trace and compare");
  replay->add_option("--trace", trace, "trace.jsonl written by run")->required();

  std::string metrics, format = "json";
  auto* report = app.add_subcommand("report", "Summarize a metrics file");
  report->add_option("--metrics", metrics, "metrics.csv written by run")->required();
  report->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  try {
    if (*run) return cmd_run(ro);
    if (*replay) return cmd_replay(trace);
    return cmd_report(metrics, format);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
