#include "quafl/quafl.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "json.hpp"

#include "core/config.hpp"
#include "core/error.hpp"
#include "core/runner.hpp"
#include "core/simclock.hpp"

struct quafl_config {
  quafl::config::RunConfig cfg;
};

struct quafl_trace {
  quafl::simclock::SimTrace trace;
};

namespace {

thread_local std::string g_last_error;

quafl_status status_of(quafl::Errc code) {
  switch (code) {
    case quafl::Errc::invalid_argument: return QUAFL_ERR_INVALID_ARGUMENT;
    case quafl::Errc::parse: return QUAFL_ERR_PARSE;
    case quafl::Errc::decode_failure: return QUAFL_ERR_DECODE_FAILURE;
    case quafl::Errc::io: return QUAFL_ERR_IO;
    case quafl::Errc::internal: return QUAFL_ERR_INTERNAL;
  }
  return QUAFL_ERR_INTERNAL;
}

template <typename Fn>
quafl_status wrap(Fn&& fn) {
  try {
    fn();
    return QUAFL_OK;
  } catch (const quafl::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return QUAFL_ERR_INTERNAL;
  }
}

quafl_status null_arg(const char* what) {
  g_last_error = std::string(what) + " must not be null";
  return QUAFL_ERR_INVALID_ARGUMENT;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* quafl_version(void) { return "0.1.0"; }

const char* quafl_last_error(void) { return g_last_error.c_str(); }

quafl_config* quafl_config_default(void) {
  try {
    return new quafl_config{};
  } catch (...) {
    return nullptr;
  }
}

quafl_status quafl_config_from_json(const char* json, quafl_config** out) {
  if (!json) return null_arg("json");
  if (!out) return null_arg("out");
  *out = nullptr;
  return wrap([&] {
    auto holder = std::make_unique<quafl_config>();
    holder->cfg = quafl::config::parse_json(json);
    *out = holder.release();
  });
}

quafl_status quafl_config_set(quafl_config* cfg, const char* key, const char* value) {
  if (!cfg) return null_arg("cfg");
  if (!key) return null_arg("key");
  if (!value) return null_arg("value");
  return wrap([&] { quafl::config::apply_override(cfg->cfg, key, value); });
}

quafl_status quafl_config_to_json(const quafl_config* cfg, char** out) {
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  *out = nullptr;
  return wrap([&] { *out = dup_string(quafl::config::to_json(cfg->cfg)); });
}

quafl_status quafl_config_validate(const quafl_config* cfg) {
  if (!cfg) return null_arg("cfg");
  return wrap([&] { quafl::config::validate(cfg->cfg); });
}

void quafl_config_free(quafl_config* cfg) { delete cfg; }

quafl_status quafl_preset(const char* name, quafl_config*** out_configs, size_t* out_count) {
  if (!name) return null_arg("name");
  if (!out_configs) return null_arg("out_configs");
  if (!out_count) return null_arg("out_count");
  *out_configs = nullptr;
  *out_count = 0;
  return wrap([&] {
    const auto preset = quafl::config::preset(name);
    const size_t count = preset.configs.size();
    auto** list = new quafl_config*[count]();
    try {
      for (size_t i = 0; i < count; ++i) list[i] = new quafl_config{preset.configs[i]};
    } catch (...) {
      for (size_t i = 0; i < count; ++i) delete list[i];
      delete[] list;
      throw;
    }
    *out_configs = list;
    *out_count = count;
  });
}

void quafl_config_list_free(quafl_config** configs, size_t count) {
  if (!configs) return;
  for (size_t i = 0; i < count; ++i) delete configs[i];
  delete[] configs;
}

quafl_status quafl_preset_names(char** out_json) {
  if (!out_json) return null_arg("out_json");
  *out_json = nullptr;
  return wrap([&] {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& p : quafl::config::presets()) {
      nlohmann::ordered_json item;
      item["name"] = p.name;
      item["description"] = p.description;
      arr.push_back(item);
    }
    *out_json = dup_string(arr.dump(2));
  });
}

quafl_status quafl_run(const quafl_config* cfg, uint64_t seed, quafl_trace** out) {
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  *out = nullptr;
  return wrap([&] {
    auto holder = std::make_unique<quafl_trace>();
    holder->trace = quafl::runner::run_one(cfg->cfg, seed);
    *out = holder.release();
  });
}

size_t quafl_trace_rows(const quafl_trace* trace) {
  return trace ? trace->trace.rows.size() : 0;
}

const char* quafl_trace_run_id(const quafl_trace* trace) {
  return trace ? trace->trace.run_id.c_str() : nullptr;
}

quafl_status quafl_trace_csv(const quafl_trace* trace, char** out) {
  if (!trace) return null_arg("trace");
  if (!out) return null_arg("out");
  *out = nullptr;
  return wrap([&] { *out = dup_string(quafl::runner::trace_csv(trace->trace)); });
}

quafl_status quafl_trace_summary_json(const quafl_trace* trace, char** out) {
  if (!trace) return null_arg("trace");
  if (!out) return null_arg("out");
  *out = nullptr;
  return wrap([&] { *out = dup_string(quafl::runner::summary_json(trace->trace)); });
}

void quafl_trace_free(quafl_trace* trace) { delete trace; }

quafl_status quafl_task_csv(const quafl_config* cfg, char** out) {
  if (!cfg) return null_arg("cfg");
  if (!out) return null_arg("out");
  *out = nullptr;
  return wrap([&] {
    quafl::config::validate(cfg->cfg);
    const auto task = quafl::runner::build_task(cfg->cfg);
    *out = dup_string(task.dump_csv());
  });
}

void quafl_string_free(char* str) { std::free(str); }

}  // extern "C"
