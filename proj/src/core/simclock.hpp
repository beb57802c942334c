#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/quant.hpp"
#include "core/tasks.hpp"
#include "core/vec.hpp"

namespace quafl::simclock {

// One record per server round (per optimization step for the baseline), plus
// the initial record at t = 0.
struct TraceRow {
  long long t = 0;
  double sim_time = 0;
  long long total_local_steps = 0;
  double train_loss = 0;
  std::optional<double> accuracy;  // logistic tasks: test-split accuracy
  double grad_norm_mu_sq = 0;      // ||grad f(mu_t)||^2, mu_t the mean over all models
  double grad_norm_server_sq = 0;  // ||grad f(X_t)||^2
  double phi = 0;                  // squared dispersion of all models around mu_t
  long long cum_bits = 0;
  double empirical_h = 0;          // running mean of local steps consumed per contact
  long long decode_failures = 0;   // cumulative
  double sum_h_sq = 0;     // sum_i ||h~_i||^2 at the start of the round this row opens;
                           // NaN on the final row and for fedavg/baseline
  double mu_drift_sq = 0;  // ||mu_t - mu_{t-1}||^2; NaN on row 0
};

struct SimTrace {
  std::string run_id;  // stamped by the runner
  std::string algo;
  uint64_t seed = 0;
  std::vector<TraceRow> rows;
  long long total_contacts = 0;
  long long zero_step_contacts = 0;

  // record_vectors mode only:
  std::vector<Vec> mu_by_round;          // one entry per row
  std::vector<Vec> consumed_h_by_round;  // round r: sum over contacted clients of the
                                         // h~ consumed by their interactions
  std::vector<std::vector<int>> sampled_by_round;
};

// Timed simulation of one (config, seed) cell. cfg must already be validated;
// eta and codec are the resolved values (the caller handles theorem mode).
SimTrace run(const config::RunConfig& cfg, const tasks::TaskSet& task, const quant::Codec& codec,
             double eta, uint64_t seed);

}  // namespace quafl::simclock
