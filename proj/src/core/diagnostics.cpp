#include "core/diagnostics.hpp"

#include <cmath>
#include <string>

#include "core/error.hpp"

namespace quafl::diagnostics {

Vec compute_mu(const Vec& server_x, const std::vector<fedcore::ClientState>& clients) {
  Vec mu = server_x;
  for (const auto& client : clients) {
    if (client.x.size() != mu.size())
      fail(Errc::invalid_argument, "client dimension mismatch in compute_mu");
    axpy(1.0, client.x, mu);
  }
  const double inv = 1.0 / (static_cast<double>(clients.size()) + 1.0);
  for (double& v : mu) v *= inv;
  return mu;
}

double compute_phi(const Vec& server_x, const std::vector<fedcore::ClientState>& clients,
                   const Vec& mu) {
  double phi = dist_sq(server_x, mu);
  for (const auto& client : clients) phi += dist_sq(client.x, mu);
  return phi;
}

namespace {

constexpr long long kMinSeeds = 100;

// Ensemble means of the per-round quantities needed by both checks, averaged
// across traces at a fixed round index.
struct EnsembleAt {
  double mean_phi = 0;       // potential after round t
  double mean_phi_next = 0;  // potential after round t+1
  double mean_sum_h = 0;     // sum over clients of |h_i|^2 when round t+1 opens
  double mean_drift = 0;     // |mu_{t+1} - mu_t|^2
};

EnsembleAt ensemble_at(const std::vector<simclock::SimTrace>& traces, long long t) {
  EnsembleAt e;
  for (const auto& trace : traces) {
    const auto idx = static_cast<std::size_t>(t);
    if (idx + 1 >= trace.rows.size())
      fail(Errc::invalid_argument,
           "checkpoint " + std::to_string(t) + " needs rows t and t+1 in every trace");
    const auto& row = trace.rows[idx];
    const auto& next = trace.rows[idx + 1];
    if (!(row.sum_h_sq == row.sum_h_sq))  // NaN: trace lacks the accumulator
      fail(Errc::invalid_argument, "trace has no local-progress accumulator at round " +
                                       std::to_string(t) + " (wrong algorithm?)");
    e.mean_phi += row.phi;
    e.mean_phi_next += next.phi;
    e.mean_sum_h += row.sum_h_sq;
    e.mean_drift += next.mu_drift_sq;
  }
  const auto m = static_cast<double>(traces.size());
  e.mean_phi /= m;
  e.mean_phi_next /= m;
  e.mean_sum_h /= m;
  e.mean_drift /= m;
  return e;
}

void require_ensemble(const std::vector<simclock::SimTrace>& traces) {
  if (static_cast<long long>(traces.size()) < kMinSeeds)
    fail(Errc::invalid_argument, "ensemble checks need at least " + std::to_string(kMinSeeds) +
                                     " seeds, got " + std::to_string(traces.size()));
}

CheckReport finish(std::vector<CheckpointResult> checkpoints) {
  CheckReport report;
  report.passed = 0;
  for (const auto& c : checkpoints)
    if (c.pass) ++report.passed;
  report.pass_fraction = checkpoints.empty()
                             ? 0.0
                             : static_cast<double>(report.passed) /
                                   static_cast<double>(checkpoints.size());
  report.checkpoints = std::move(checkpoints);
  return report;
}

}  // namespace

CheckReport check_potential_step(const std::vector<simclock::SimTrace>& traces,
                                 const std::vector<long long>& checkpoints, int n, int s,
                                 double eta, double codec_bound) {
  require_ensemble(traces);
  std::vector<CheckpointResult> results;
  results.reserve(checkpoints.size());
  for (long long t : checkpoints) {
    const auto e = ensemble_at(traces, t);
    CheckpointResult r;
    r.t = t;
    r.lhs = e.mean_phi_next;
    r.rhs = (1.0 - 1.0 / (4.0 * n)) * e.mean_phi + 8.0 * s * eta * eta * e.mean_sum_h +
            16.0 * n * codec_bound * codec_bound;
    r.pass = r.lhs <= r.rhs;
    results.push_back(r);
  }
  return finish(std::move(results));
}

CheckReport check_mu_drift(const std::vector<simclock::SimTrace>& traces,
                           const std::vector<long long>& checkpoints, int n, int s, double eta,
                           double codec_bound) {
  require_ensemble(traces);
  const double np1 = static_cast<double>(n) + 1.0;
  std::vector<CheckpointResult> results;
  results.reserve(checkpoints.size());
  for (long long t : checkpoints) {
    const auto e = ensemble_at(traces, t);
    CheckpointResult r;
    r.t = t;
    r.lhs = e.mean_drift;
    r.rhs = 2.0 * s * s * eta * eta / (n * np1 * np1) * e.mean_sum_h +
            2.0 / (np1 * np1) * codec_bound * codec_bound;
    r.pass = r.lhs <= r.rhs;
    results.push_back(r);
  }
  return finish(std::move(results));
}

TraceSummary trace_summary(const simclock::SimTrace& trace) {
  if (trace.rows.empty()) fail(Errc::invalid_argument, "trace has no rows");
  TraceSummary s;
  const auto& rows = trace.rows;
  const std::size_t T = rows.size() - 1;

  const std::size_t upto = T == 0 ? 1 : T;  // average over t = 0..T-1
  double mu_acc = 0, srv_acc = 0;
  for (std::size_t t = 0; t < upto; ++t) {
    mu_acc += rows[t].grad_norm_mu_sq;
    srv_acc += rows[t].grad_norm_server_sq;
  }
  s.avg_grad_norm_mu_sq = mu_acc / static_cast<double>(upto);
  s.avg_grad_norm_server_sq = srv_acc / static_cast<double>(upto);

  const auto& last = rows.back();
  s.final_loss = last.train_loss;
  s.final_accuracy = last.accuracy;
  s.total_bits = last.cum_bits;
  s.bits_per_step = last.total_local_steps > 0
                        ? static_cast<double>(last.cum_bits) /
                              static_cast<double>(last.total_local_steps)
                        : 0.0;
  s.empirical_h = last.empirical_h;
  s.decode_failures = last.decode_failures;
  s.total_sim_time = last.sim_time;
  s.total_local_steps = last.total_local_steps;
  s.zero_step_contact_fraction =
      trace.total_contacts > 0 ? static_cast<double>(trace.zero_step_contacts) /
                                     static_cast<double>(trace.total_contacts)
                               : 0.0;
  return s;
}

}  // namespace quafl::diagnostics
