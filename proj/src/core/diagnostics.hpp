#pragma once

#include <optional>
#include <vector>

#include "core/fedcore.hpp"
#include "core/simclock.hpp"
#include "core/vec.hpp"

namespace quafl::diagnostics {

// Mean over the n+1 models in the system: (X_t + sum_i X^i) / (n+1).
Vec compute_mu(const Vec& server_x, const std::vector<fedcore::ClientState>& clients);

// ||X_t - mu||^2 + sum_i ||X^i - mu||^2.
double compute_phi(const Vec& server_x, const std::vector<fedcore::ClientState>& clients,
                   const Vec& mu);

struct CheckpointResult {
  long long t = 0;
  double lhs = 0;
  double rhs = 0;
  bool pass = false;
};

struct CheckReport {
  std::vector<CheckpointResult> checkpoints;
  long long passed = 0;
  double pass_fraction = 0;
};

// One-step potential contraction, checked on ensemble means at each checkpoint t:
//   mean phi[t+1] <= (1 - 1/4n) * mean phi[t] + 8*s*eta^2 * mean sum_h_sq[t]
//                    + 16*n*codec_bound^2
// codec_bound is the codec's l2 error bound (0 for lossless). Needs >= 100
// seeds; every trace must cover rows t and t+1.
CheckReport check_potential_step(const std::vector<simclock::SimTrace>& ensemble,
                                 const std::vector<long long>& checkpoints, int n, int s,
                                 double eta, double codec_bound);

// One-step drift of the system mean, on ensemble means at each checkpoint t:
//   mean mu_drift_sq[t+1] <= (2*s^2*eta^2 / (n*(n+1)^2)) * mean sum_h_sq[t]
//                            + (2/(n+1)^2) * codec_bound^2
CheckReport check_mu_drift(const std::vector<simclock::SimTrace>& ensemble,
                           const std::vector<long long>& checkpoints, int n, int s, double eta,
                           double codec_bound);

struct TraceSummary {
  double avg_grad_norm_mu_sq = 0;  // (1/T) * sum_{t<T} of row t's value
  double avg_grad_norm_server_sq = 0;
  double final_loss = 0;
  std::optional<double> final_accuracy;
  long long total_bits = 0;
  double bits_per_step = 0;
  double empirical_h = 0;
  long long decode_failures = 0;
  double total_sim_time = 0;
  long long total_local_steps = 0;
  double zero_step_contact_fraction = 0;
};

TraceSummary trace_summary(const simclock::SimTrace& trace);

}  // namespace quafl::diagnostics
