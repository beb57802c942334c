// quafl_sim: drive the simulator library from the command line.
//   run        simulate every (config, seed) cell and write traces + summary
//   presets    list the named experiment grids
//   dump-task  emit the configured task dataset as csv
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "quafl/quafl.h"

namespace {

using ojson = nlohmann::ordered_json;

[[noreturn]] void die(const std::string& msg) {
  std::cerr << "quafl_sim: " << msg << "\n";
  std::exit(1);
}

void check(quafl_status st, const std::string& what) {
  if (st != QUAFL_OK) die(what + ": " + quafl_last_error());
}

std::string take_string(char* s) {
  if (!s) die("library returned no data");
  std::string out(s);
  quafl_string_free(s);
  return out;
}

// Owns whatever configs a subcommand resolved to (preset grid, file, or the
// defaults); `configs` is the borrowed view the rest of the code uses.
struct ConfigSet {
  std::vector<quafl_config*> configs;
  quafl_config** preset_items = nullptr;
  size_t preset_count = 0;
  std::vector<quafl_config*> owned;

  ~ConfigSet() {
    quafl_config_list_free(preset_items, preset_count);
    for (auto* cfg : owned) quafl_config_free(cfg);
  }
};

struct CommonOpts {
  std::string config_path;
  std::string preset_name;
  std::string seed_list;
  bool strict = false;
  std::vector<std::pair<std::string, std::string>> overrides;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "json config file");
  cmd->add_option("--preset", opts.preset_name, "named experiment grid (see `presets`)");
  auto field = [cmd, &opts](const std::string& flag, const char* key) {
    cmd->add_option_function<std::string>(
        flag, [&opts, key](const std::string& v) { opts.overrides.emplace_back(key, v); },
        std::string("override config field ") + key);
  };
  field("--algo", "algo");
  field("--n", "n");
  field("--s", "s");
  field("--K", "K");
  field("--bits", "bits");
  field("--lossless", "lossless");
  field("--window", "window");
  field("--gamma-q", "gamma_q");
  field("--eta", "eta");
  field("--T", "T");
  field("--time-horizon", "time_horizon");
  field("--swt", "swt");
  field("--sit", "sit");
  field("--timing", "timing");
  field("--step-time", "step_time");
  field("--lambda-fast", "lambda_fast");
  field("--lambda-slow", "lambda_slow");
  field("--slow-fraction", "slow_fraction");
  field("--task", "task");
  field("--d", "d");
  field("--task-seed", "task_seed");
  field("--spread", "spread");
  field("--noise-sigma", "noise_sigma");
  field("--samples-per-client", "samples_per_client");
  field("--batch", "batch");
  field("--skew", "skew");
  field("--blob-std", "blob_std");
  field("--failure-mode", "failure_mode");
  field("--record-vectors", "record_vectors");
  cmd->add_option("--seed-list", opts.seed_list, "comma separated seeds, e.g. 1,2,3");
  cmd->add_flag("--strict-quantization", opts.strict, "abort on any decode failure");
}

void load_configs(const CommonOpts& opts, ConfigSet& set) {
  if (!opts.config_path.empty() && !opts.preset_name.empty())
    die("use --config or --preset, not both");
  if (!opts.preset_name.empty()) {
    check(quafl_preset(opts.preset_name.c_str(), &set.preset_items, &set.preset_count),
          "preset " + opts.preset_name);
    for (size_t i = 0; i < set.preset_count; ++i) set.configs.push_back(set.preset_items[i]);
  } else if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path, std::ios::binary);
    if (!in) die("cannot open " + opts.config_path);
    std::stringstream ss;
    ss << in.rdbuf();
    quafl_config* cfg = nullptr;
    check(quafl_config_from_json(ss.str().c_str(), &cfg), opts.config_path);
    set.owned.push_back(cfg);
    set.configs.push_back(cfg);
  } else {
    quafl_config* cfg = quafl_config_default();
    if (!cfg) die("out of memory");
    set.owned.push_back(cfg);
    set.configs.push_back(cfg);
  }
  for (auto* cfg : set.configs) {
    for (const auto& [key, value] : opts.overrides)
      check(quafl_config_set(cfg, key.c_str(), value.c_str()), key);
    if (!opts.seed_list.empty())
      check(quafl_config_set(cfg, "seeds", opts.seed_list.c_str()), "seed-list");
    if (opts.strict) check(quafl_config_set(cfg, "failure_mode", "strict"), "failure-mode");
    check(quafl_config_validate(cfg), "config");
  }
}

std::vector<uint64_t> config_seeds(quafl_config* cfg) {
  char* js = nullptr;
  check(quafl_config_to_json(cfg, &js), "config json");
  const auto j = nlohmann::json::parse(take_string(js));
  std::vector<uint64_t> seeds;
  for (const auto& s : j.at("seeds")) seeds.push_back(s.get<uint64_t>());
  return seeds;
}

struct Cell {
  size_t config_index;
  uint64_t seed;
};

struct CellResult {
  std::string run_id;
  std::string csv;
  std::string summary;
  std::string error;
};

int cmd_run(const CommonOpts& opts, const std::string& out_dir_opt, unsigned jobs) {
  ConfigSet set;
  load_configs(opts, set);

  std::vector<std::vector<uint64_t>> seeds_by_config;
  std::vector<Cell> cells;
  for (size_t ci = 0; ci < set.configs.size(); ++ci) {
    seeds_by_config.push_back(config_seeds(set.configs[ci]));
    for (uint64_t seed : seeds_by_config.back()) cells.push_back({ci, seed});
  }

  std::string out_dir = out_dir_opt;
  if (out_dir.empty()) {
    const char* env = std::getenv("QUAFL_SIM_OUT");
    out_dir = env && *env ? env : "out";
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) die("cannot create " + out_dir + ": " + ec.message());

  std::vector<CellResult> results(cells.size());
  std::atomic<size_t> next{0};
  auto work = [&] {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      auto& res = results[i];
      quafl_trace* trace = nullptr;
      if (quafl_run(set.configs[cells[i].config_index], cells[i].seed, &trace) != QUAFL_OK) {
        res.error = quafl_last_error();
        continue;
      }
      res.run_id = quafl_trace_run_id(trace);
      char* csv = nullptr;
      if (quafl_trace_csv(trace, &csv) == QUAFL_OK) res.csv = take_string(csv);
      else res.error = quafl_last_error();
      if (res.error.empty()) {
        char* summary = nullptr;
        if (quafl_trace_summary_json(trace, &summary) == QUAFL_OK)
          res.summary = take_string(summary);
        else res.error = quafl_last_error();
      }
      quafl_trace_free(trace);
    }
  };
  const auto limit = static_cast<unsigned>(std::max<size_t>(cells.size(), 1));
  const unsigned workers = std::max(1u, std::min(jobs, limit));
  std::vector<std::thread> pool;
  for (unsigned w = 0; w + 1 < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  for (const auto& res : results)
    if (!res.error.empty()) die(res.error);

  ojson runs = ojson::array();
  for (size_t i = 0; i < cells.size(); ++i) {
    const auto& res = results[i];
    const std::string file = res.run_id + ".csv";
    std::ofstream out(std::filesystem::path(out_dir) / file, std::ios::binary);
    if (!out) die("cannot write " + file);
    out << res.csv;
    if (!out.good()) die("failed writing " + file);
    ojson entry = ojson::parse(res.summary);
    entry["csv"] = file;
    entry["config_index"] = cells[i].config_index;
    runs.push_back(std::move(entry));
  }

  ojson cfgs = ojson::array();
  for (size_t ci = 0; ci < set.configs.size(); ++ci) {
    char* js = nullptr;
    check(quafl_config_to_json(set.configs[ci], &js), "config json");
    double loss = 0, sim_time = 0, emp_h = 0;
    size_t count = 0;
    for (size_t i = 0; i < cells.size(); ++i) {
      if (cells[i].config_index != ci) continue;
      const ojson sj = ojson::parse(results[i].summary);
      loss += sj.at("final_loss").get<double>();
      sim_time += sj.at("total_sim_time").get<double>();
      emp_h += sj.at("empirical_H").get<double>();
      ++count;
    }
    ojson entry;
    entry["config"] = ojson::parse(take_string(js));
    entry["seeds"] = seeds_by_config[ci];
    if (count > 0) {
      entry["mean_final_loss"] = loss / static_cast<double>(count);
      entry["mean_total_sim_time"] = sim_time / static_cast<double>(count);
      entry["mean_empirical_H"] = emp_h / static_cast<double>(count);
    }
    cfgs.push_back(std::move(entry));
  }

  ojson summary;
  summary["runs"] = std::move(runs);
  summary["configs"] = std::move(cfgs);
  std::ofstream sj(std::filesystem::path(out_dir) / "summary.json", std::ios::binary);
  if (!sj) die("cannot write summary.json");
  sj << summary.dump(2) << "\n";
  if (!sj.good()) die("failed writing summary.json");

  std::cout << "wrote " << cells.size() << " runs to " << out_dir << "\n";
  return 0;
}

int cmd_presets() {
  char* js = nullptr;
  check(quafl_preset_names(&js), "presets");
  const auto arr = nlohmann::json::parse(take_string(js));
  for (const auto& p : arr)
    std::printf("%-18s %s\n", p.at("name").get<std::string>().c_str(),
                p.at("description").get<std::string>().c_str());
  return 0;
}

int cmd_dump_task(const CommonOpts& opts, const std::string& out_file) {
  ConfigSet set;
  load_configs(opts, set);
  char* csv = nullptr;
  check(quafl_task_csv(set.configs.front(), &csv), "task");
  const std::string body = take_string(csv);
  if (out_file.empty()) {
    std::cout << body;
  } else {
    std::ofstream out(out_file, std::ios::binary);
    if (!out) die("cannot write " + out_file);
    out << body;
    if (!out.good()) die("failed writing " + out_file);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asynchronous federated averaging simulator"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  std::string out_dir;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* run = app.add_subcommand("run", "simulate every (config, seed) cell and write traces");
  add_common(run, run_opts);
  run->add_option("--out", out_dir, "output directory (default $QUAFL_SIM_OUT or ./out)");
  run->add_option("--jobs", jobs, "worker threads");

  auto* presets = app.add_subcommand("presets", "list the named experiment grids");

  CommonOpts dump_opts;
  std::string out_file;
  auto* dump = app.add_subcommand("dump-task", "emit the configured task dataset as csv");
  add_common(dump, dump_opts);
  dump->add_option("--out-file", out_file, "write here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(run_opts, out_dir, jobs);
    if (presets->parsed()) return cmd_presets();
    if (dump->parsed()) return cmd_dump_task(dump_opts, out_file);
  } catch (const std::exception& e) {
    die(e.what());
  }
  return 0;
}
