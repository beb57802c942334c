#include "core/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"

#include "core/error.hpp"
#include "core/strfmt.hpp"

namespace quafl::config {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const char* to_string(Algo a) {
  switch (a) {
    case Algo::quafl: return "quafl";
    case Algo::fedavg: return "fedavg";
    case Algo::baseline: return "baseline";
  }
  return "?";
}
const char* to_string(TimingKind k) { return k == TimingKind::uniform ? "uniform" : "exponential"; }
const char* to_string(TaskKind k) { return k == TaskKind::quadratic ? "quadratic" : "logistic"; }
const char* to_string(FailureMode m) { return m == FailureMode::record ? "record" : "strict"; }

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& msg) {
  fail(Errc::invalid_argument, "config." + field + ": " + msg);
}

Algo algo_from_string(const std::string& s) {
  if (s == "quafl") return Algo::quafl;
  if (s == "fedavg") return Algo::fedavg;
  if (s == "baseline") return Algo::baseline;
  bad("algo", "unknown value '" + s + "' (quafl|fedavg|baseline)");
}
TimingKind timing_from_string(const std::string& s) {
  if (s == "uniform") return TimingKind::uniform;
  if (s == "exponential") return TimingKind::exponential;
  bad("timing", "unknown value '" + s + "' (uniform|exponential)");
}
TaskKind task_from_string(const std::string& s) {
  if (s == "quadratic") return TaskKind::quadratic;
  if (s == "logistic") return TaskKind::logistic;
  bad("task", "unknown value '" + s + "' (quadratic|logistic)");
}
FailureMode failure_from_string(const std::string& s) {
  if (s == "record") return FailureMode::record;
  if (s == "strict") return FailureMode::strict;
  bad("failure_mode", "unknown value '" + s + "' (record|strict)");
}

long long want_int(const json& v, const char* field) {
  if (!v.is_number_integer() && !v.is_number_unsigned()) bad(field, "must be an integer");
  return v.get<long long>();
}

int want_int32(const json& v, const char* field) {
  const long long x = want_int(v, field);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    bad(field, "out of range");
  return static_cast<int>(x);
}

uint64_t want_u64(const json& v, const char* field) {
  if (v.is_number_unsigned()) return v.get<uint64_t>();
  const long long x = want_int(v, field);
  if (x < 0) bad(field, "must be >= 0");
  return static_cast<uint64_t>(x);
}

double want_num(const json& v, const char* field) {
  if (!v.is_number()) bad(field, "must be a number");
  return v.get<double>();
}

bool want_bool(const json& v, const char* field) {
  if (!v.is_boolean()) bad(field, "must be true or false");
  return v.get<bool>();
}

std::string want_str(const json& v, const char* field) {
  if (!v.is_string()) bad(field, "must be a string");
  return v.get<std::string>();
}

std::vector<uint64_t> seeds_from_string(const std::string& text) {
  std::vector<uint64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    std::size_t b = pos, e = comma;
    while (b < e && text[b] == ' ') ++b;
    while (e > b && text[e - 1] == ' ') --e;
    uint64_t v = 0;
    const auto res = std::from_chars(text.data() + b, text.data() + e, v);
    if (res.ec != std::errc() || res.ptr != text.data() + e)
      bad("seeds", "expected a comma-separated list of nonnegative integers");
    out.push_back(v);
    pos = comma + 1;
    if (comma == text.size()) break;
  }
  return out;
}

void set_field(RunConfig& c, const std::string& key, const json& v) {
  if (key == "algo") c.algo = algo_from_string(want_str(v, "algo"));
  else if (key == "n") c.n = want_int32(v, "n");
  else if (key == "s") c.s = want_int32(v, "s");
  else if (key == "K") c.K = want_int32(v, "K");
  else if (key == "bits") c.bits = want_int32(v, "bits");
  else if (key == "lossless") c.lossless = want_bool(v, "lossless");
  else if (key == "window") c.window = want_num(v, "window");
  else if (key == "gamma_q") c.gamma_q = want_num(v, "gamma_q");
  else if (key == "eta") {
    if (v.is_string()) {
      if (v.get<std::string>() != "theorem")
        bad("eta", "must be a number or the string \"theorem\"");
      c.eta_theorem = true;
    } else {
      c.eta = want_num(v, "eta");
      c.eta_theorem = false;
    }
  } else if (key == "T") c.T = want_int(v, "T");
  else if (key == "time_horizon") c.time_horizon = want_num(v, "time_horizon");
  else if (key == "swt") c.swt = want_num(v, "swt");
  else if (key == "sit") c.sit = want_num(v, "sit");
  else if (key == "timing") c.timing = timing_from_string(want_str(v, "timing"));
  else if (key == "step_time") c.step_time = want_num(v, "step_time");
  else if (key == "lambda_fast") c.lambda_fast = want_num(v, "lambda_fast");
  else if (key == "lambda_slow") c.lambda_slow = want_num(v, "lambda_slow");
  else if (key == "slow_fraction") c.slow_fraction = want_num(v, "slow_fraction");
  else if (key == "task") c.task = task_from_string(want_str(v, "task"));
  else if (key == "d") c.d = want_int32(v, "d");
  else if (key == "task_seed") c.task_seed = want_u64(v, "task_seed");
  else if (key == "spread") c.spread = want_num(v, "spread");
  else if (key == "noise_sigma") c.noise_sigma = want_num(v, "noise_sigma");
  else if (key == "samples_per_client") c.samples_per_client = want_int32(v, "samples_per_client");
  else if (key == "batch") c.batch = want_int32(v, "batch");
  else if (key == "skew") c.skew = want_num(v, "skew");
  else if (key == "blob_std") c.blob_std = want_num(v, "blob_std");
  else if (key == "seeds") {
    if (v.is_string()) {
      c.seeds = seeds_from_string(v.get<std::string>());
    } else if (v.is_array()) {
      c.seeds.clear();
      for (const auto& e : v) c.seeds.push_back(want_u64(e, "seeds"));
    } else if (v.is_number()) {
      c.seeds = {want_u64(v, "seeds")};
    } else {
      bad("seeds", "must be an array of nonnegative integers");
    }
  } else if (key == "failure_mode") c.failure_mode = failure_from_string(want_str(v, "failure_mode"));
  else if (key == "record_vectors") c.record_vectors = want_bool(v, "record_vectors");
  else fail(Errc::invalid_argument, "config: unknown key '" + key + "'");
}

}  // namespace

RunConfig parse_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(Errc::parse, std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(Errc::parse, "config: top level must be a JSON object");
  RunConfig c;
  for (const auto& [key, value] : doc.items()) set_field(c, key, value);
  return c;
}

std::string to_json(const RunConfig& c) {
  ojson o;
  o["algo"] = to_string(c.algo);
  o["n"] = c.n;
  o["s"] = c.s;
  o["K"] = c.K;
  o["bits"] = c.bits;
  o["lossless"] = c.lossless;
  o["window"] = c.window;
  if (c.gamma_q) o["gamma_q"] = *c.gamma_q;
  if (c.eta_theorem) o["eta"] = "theorem";
  else o["eta"] = c.eta;
  if (c.T) o["T"] = *c.T;
  if (c.time_horizon) o["time_horizon"] = *c.time_horizon;
  if (c.swt) o["swt"] = *c.swt;
  o["sit"] = c.sit;
  o["timing"] = to_string(c.timing);
  o["step_time"] = c.step_time;
  o["lambda_fast"] = c.lambda_fast;
  o["lambda_slow"] = c.lambda_slow;
  o["slow_fraction"] = c.slow_fraction;
  o["task"] = to_string(c.task);
  o["d"] = c.d;
  o["task_seed"] = c.task_seed;
  o["spread"] = c.spread;
  o["noise_sigma"] = c.noise_sigma;
  o["samples_per_client"] = c.samples_per_client;
  o["batch"] = c.batch;
  o["skew"] = c.skew;
  o["blob_std"] = c.blob_std;
  o["seeds"] = c.seeds;
  o["failure_mode"] = to_string(c.failure_mode);
  o["record_vectors"] = c.record_vectors;
  return o.dump(2);
}

void apply_override(RunConfig& cfg, const std::string& key, const std::string& value) {
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;  // bare words (enum values, seed lists) arrive as strings
  }
  set_field(cfg, key, v);
}

void validate(const RunConfig& c) {
  auto fin = [](double x) { return std::isfinite(x); };
  if (c.n < 1) bad("n", "must be >= 1");
  if (c.s < 1) bad("s", "must be >= 1");
  if (c.s > c.n) bad("s", "s exceeds n");
  if (c.K < 1) bad("K", "must be >= 1");
  if (c.bits < 1 || c.bits > 32) bad("bits", "must be in [1, 32]");
  if (!(c.window > 0) || !fin(c.window)) bad("window", "must be positive and finite");
  if (c.gamma_q && (!(*c.gamma_q > 0) || !fin(*c.gamma_q)))
    bad("gamma_q", "must be positive and finite");
  if (!c.eta_theorem && (!(c.eta > 0) || !fin(c.eta)))
    bad("eta", "must be positive and finite, or the string \"theorem\"");
  if (c.eta_theorem && c.task != TaskKind::quadratic)
    bad("eta", "theorem mode needs the quadratic task (closed-form constants)");
  if (c.T && c.time_horizon) bad("T", "set either T or time_horizon, not both");
  if (c.eta_theorem && c.time_horizon) bad("eta", "theorem mode needs a fixed T");
  if (c.T && *c.T < 0) bad("T", "must be >= 0");
  if (c.time_horizon && (!(*c.time_horizon >= 0) || !fin(*c.time_horizon)))
    bad("time_horizon", "must be >= 0 and finite");
  if (c.swt && (!(*c.swt >= 0) || !fin(*c.swt))) bad("swt", "must be >= 0 and finite");
  if (!(c.sit >= 0) || !fin(c.sit)) bad("sit", "must be >= 0 and finite");
  if (!(c.step_time > 0) || !fin(c.step_time)) bad("step_time", "must be positive and finite");
  if (!(c.lambda_fast > 0) || !fin(c.lambda_fast)) bad("lambda_fast", "must be positive and finite");
  if (!(c.lambda_slow > 0) || !fin(c.lambda_slow)) bad("lambda_slow", "must be positive and finite");
  if (!(c.slow_fraction >= 0 && c.slow_fraction <= 1)) bad("slow_fraction", "must be in [0, 1]");
  if (c.d < 1) bad("d", "must be >= 1");
  if (!(c.spread >= 0) || !fin(c.spread)) bad("spread", "must be >= 0 and finite");
  if (!(c.noise_sigma >= 0) || !fin(c.noise_sigma)) bad("noise_sigma", "must be >= 0 and finite");
  if (c.samples_per_client < 1) bad("samples_per_client", "must be >= 1");
  if (c.batch < 1) bad("batch", "must be >= 1");
  if (!(c.skew >= 0 && c.skew <= 1)) bad("skew", "must be in [0, 1]");
  if (!(c.blob_std >= 0) || !fin(c.blob_std)) bad("blob_std", "must be >= 0 and finite");
  if (c.seeds.empty()) bad("seeds", "need at least one seed");
  if (c.time_horizon && c.algo == Algo::quafl && !(c.resolved_swt() + c.sit > 0))
    bad("time_horizon", "needs swt + sit > 0 with algo quafl");
}

namespace {

RunConfig sweep_base() {
  RunConfig c;
  c.n = 32;
  c.s = 8;
  c.K = 10;
  c.bits = 8;
  c.window = 8.0;
  c.eta = 0.001;
  c.T = 300;
  c.sit = 1.0;
  c.task = TaskKind::quadratic;
  c.d = 10;
  c.task_seed = 8;
  c.spread = 1.0;
  c.noise_sigma = 0.05;
  c.seeds = {1, 2, 3, 4, 5};
  return c;
}

RunConfig logistic_base() {
  RunConfig c;
  c.n = 32;
  c.s = 6;
  c.K = 9;
  c.bits = 8;
  c.window = 8.0;
  c.eta = 0.05;
  c.T = 300;
  c.sit = 1.0;
  c.task = TaskKind::logistic;
  c.d = 10;
  c.task_seed = 8;
  c.samples_per_client = 40;
  c.batch = 10;
  c.skew = 0.5;
  c.blob_std = 1.0;
  c.seeds = {1, 2, 3, 4, 5};
  return c;
}

std::vector<Preset> build_presets() {
  std::vector<Preset> out;

  out.push_back({"default", "One QuAFL run on the default quadratic scenario.", {RunConfig{}}});

  {
    Preset p{"sweep-K", "QuAFL local-step sweep K in {5,10,20}, quadratic task, 5 seeds.", {}};
    for (int K : {5, 10, 20}) {
      RunConfig c = sweep_base();
      c.s = 8;
      c.K = K;
      p.configs.push_back(c);
    }
    out.push_back(std::move(p));
  }
  {
    Preset p{"sweep-s", "QuAFL interacting-peer sweep s in {4,8,16}, quadratic task, 5 seeds.", {}};
    for (int s : {4, 8, 16}) {
      RunConfig c = sweep_base();
      c.K = 10;
      c.s = s;
      p.configs.push_back(c);
    }
    out.push_back(std::move(p));
  }
  {
    Preset p{"sweep-b",
             "QuAFL quantization-bits sweep b in {12,16,32} at a fixed wrap window, "
             "quadratic task, 5 seeds.",
             {}};
    for (int b : {12, 16, 32}) {
      RunConfig c = sweep_base();
      c.s = 8;
      c.K = 10;
      c.bits = b;
      c.window = 8192.0;
      p.configs.push_back(c);
    }
    out.push_back(std::move(p));
  }
  {
    Preset p{"sweep-K-logistic",
             "QuAFL local-step sweep K in {3,9,15} on the skewed logistic task, 5 seeds.",
             {}};
    for (int K : {3, 9, 15}) {
      RunConfig c = logistic_base();
      c.s = 6;
      c.K = K;
      p.configs.push_back(c);
    }
    out.push_back(std::move(p));
  }
  {
    Preset p{"sweep-s-logistic",
             "QuAFL peer sweep s in {3,6,10} on the skewed logistic task, 5 seeds.",
             {}};
    for (int s : {3, 6, 10}) {
      RunConfig c = logistic_base();
      c.K = 9;
      c.s = s;
      p.configs.push_back(c);
    }
    out.push_back(std::move(p));
  }
  {
    Preset p{"timing",
             "QuAFL vs synchronous FedAvg vs a single slow sequential node under "
             "exponential step times, 25% slow clients.",
             {}};
    RunConfig base;
    base.n = 20;
    base.s = 4;
    base.K = 5;
    base.bits = 8;
    base.window = 8.0;
    base.eta = 0.05;
    base.sit = 1.0;
    base.timing = TimingKind::exponential;
    base.lambda_fast = 0.5;
    base.lambda_slow = 0.125;
    base.slow_fraction = 0.25;
    base.task = TaskKind::quadratic;
    base.d = 10;
    base.task_seed = 1234;
    base.spread = 1.0;
    base.noise_sigma = 0.1;
    base.seeds = {1, 2, 3, 4, 5};

    RunConfig q = base;
    q.algo = Algo::quafl;
    q.swt = 4.0;
    q.T = 300;
    RunConfig f = base;
    f.algo = Algo::fedavg;
    f.T = 60;
    RunConfig b = base;
    b.algo = Algo::baseline;
    b.T = 500;
    p.configs = {q, f, b};
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

const std::vector<Preset>& presets() {
  static const std::vector<Preset> all = build_presets();
  return all;
}

const Preset& preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  std::string known;
  for (const auto& p : presets()) {
    if (!known.empty()) known += ", ";
    known += p.name;
  }
  fail(Errc::invalid_argument, "unknown preset '" + name + "' (known: " + known + ")");
}

namespace {

uint64_t fnv1a64(const std::string& text) {
  uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string sanitize(std::string s) {
  for (char& ch : s)
    if (!(('0' <= ch && ch <= '9') || ('a' <= ch && ch <= 'z') || ('A' <= ch && ch <= 'Z')))
      ch = '_';
  return s;
}

}  // namespace

std::string run_id(const RunConfig& cfg, uint64_t seed) {
  RunConfig keyed = cfg;
  keyed.seeds.clear();
  const uint64_t h = fnv1a64(to_json(keyed));

  std::string horizon;
  if (cfg.T) horizon = "T" + std::to_string(*cfg.T);
  else if (cfg.time_horizon) horizon = "h" + sanitize(format_double(*cfg.time_horizon));
  else horizon = "T" + std::to_string(cfg.resolved_T());

  char hash8[16];
  std::snprintf(hash8, sizeof hash8, "%08llx",
                static_cast<unsigned long long>(h & 0xffffffffULL));

  std::string id = to_string(cfg.algo);
  id += "_";
  id += to_string(cfg.task);
  id += "_n" + std::to_string(cfg.n) + "s" + std::to_string(cfg.s) + "K" + std::to_string(cfg.K);
  id += cfg.lossless ? "_lossless" : "_" + std::to_string(cfg.bits) + "b";
  id += "_" + horizon;
  id += "_seed" + std::to_string(seed);
  id += "_";
  id += hash8;
  return id;
}

}  // namespace quafl::config
