#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace quafl::config {

enum class Algo { quafl, fedavg, baseline };
enum class TimingKind { uniform, exponential };
enum class TaskKind { quadratic, logistic };
enum class FailureMode { record, strict };

const char* to_string(Algo a);
const char* to_string(TimingKind k);
const char* to_string(TaskKind k);
const char* to_string(FailureMode m);

// One simulation cell (minus the seed, which is swept separately). Optional
// fields are resolved at run time: swt defaults to K*step_time, and exactly one
// of T / time_horizon bounds the run (neither set means T = 300).
struct RunConfig {
  Algo algo = Algo::quafl;
  int n = 16;
  int s = 4;
  int K = 5;

  int bits = 8;
  bool lossless = false;
  double window = 8.0;            // modular wrap length; spacing = window / 2^bits
  std::optional<double> gamma_q;  // explicit spacing; takes precedence over window

  double eta = 0.05;
  bool eta_theorem = false;  // learning rate and spacing from the horizon formulas

  std::optional<long long> T;          // server rounds (baseline: optimization steps)
  std::optional<double> time_horizon;  // stop once a record would pass this sim time

  std::optional<double> swt;  // server waiting time between rounds
  double sit = 1.0;           // server interaction time per round

  TimingKind timing = TimingKind::uniform;
  double step_time = 1.0;    // uniform profile: constant per-step duration
  double lambda_fast = 0.5;  // exponential profile rates (mean duration 1/lambda)
  double lambda_slow = 0.125;
  double slow_fraction = 0.25;

  TaskKind task = TaskKind::quadratic;
  int d = 10;
  uint64_t task_seed = 1234;
  double spread = 1.0;       // quadratic: center dispersion
  double noise_sigma = 0.1;  // quadratic: per-coordinate gradient noise
  int samples_per_client = 50;  // logistic
  int batch = 10;               // logistic
  double skew = 0.5;            // logistic: label-proportion heterogeneity
  double blob_std = 1.0;        // logistic

  std::vector<uint64_t> seeds = {1};
  FailureMode failure_mode = FailureMode::record;
  bool record_vectors = false;  // keep per-round mean vectors and consumed updates

  double resolved_swt() const { return swt ? *swt : K * step_time; }
  long long resolved_T() const { return T ? *T : 300; }
};

// Strict JSON parsing: unknown keys are rejected, violations report the field
// path ("config.s: ..."). eta accepts a number or the string "theorem".
RunConfig parse_json(const std::string& json_text);

// Canonical JSON with a stable field order; parse_json(to_json(c)) round-trips.
std::string to_json(const RunConfig& cfg);

// Set one field from its JSON key and a string value ("seeds" takes a
// comma-separated list, "eta" accepts "theorem"). Used for flag overrides.
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

void validate(const RunConfig& cfg);

struct Preset {
  std::string name;
  std::string description;
  std::vector<RunConfig> configs;
};

const std::vector<Preset>& presets();
const Preset& preset(const std::string& name);  // unknown name error lists the known ones

// "<algo>_<task>_n{n}s{s}K{K}_{bits}b_T{T}_seed{seed}_{hash8}": stable over
// reruns, distinct for configs that differ in any field other than seeds.
std::string run_id(const RunConfig& cfg, uint64_t seed);

}  // namespace quafl::config
