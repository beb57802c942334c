#include "core/runner.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

#include "core/diagnostics.hpp"
#include "core/error.hpp"
#include "core/strfmt.hpp"

namespace quafl::runner {

using ojson = nlohmann::ordered_json;

tasks::TaskSet build_task(const config::RunConfig& cfg) {
  if (cfg.task == config::TaskKind::quadratic)
    return tasks::TaskSet::quadratic(cfg.n, cfg.d, cfg.spread, cfg.noise_sigma, cfg.task_seed);
  return tasks::TaskSet::logistic(cfg.n, cfg.d, cfg.samples_per_client, cfg.skew, cfg.batch,
                                  cfg.blob_std, cfg.task_seed);
}

Resolved resolve(const config::RunConfig& cfg, const tasks::TaskSet& task) {
  config::validate(cfg);

  double eta = cfg.eta;
  double spacing = cfg.gamma_q ? *cfg.gamma_q : std::ldexp(cfg.window, -cfg.bits);
  if (cfg.eta_theorem) {
    const auto ac = task.analytic_constants();
    const double f0_gap =
        task.loss(zeros(static_cast<std::size_t>(cfg.d))) - ac.f_star;
    const auto tp = quant::theorem_params(cfg.resolved_T(), cfg.n, cfg.d, cfg.K, ac.sigma, ac.G,
                                          ac.L, f0_gap);
    eta = tp.eta;
    spacing = tp.gamma_q;
  }

  if (cfg.lossless) return Resolved{eta, quant::Codec::lossless(cfg.d)};
  return Resolved{eta, quant::Codec::grid(quant::make_grid(cfg.bits, spacing, cfg.d))};
}

simclock::SimTrace run_one(const config::RunConfig& cfg, uint64_t seed) {
  config::validate(cfg);
  const auto task = build_task(cfg);
  const auto res = resolve(cfg, task);
  auto trace = simclock::run(cfg, task, res.codec, res.eta, seed);
  trace.run_id = config::run_id(cfg, seed);
  return trace;
}

std::string trace_csv(const simclock::SimTrace& trace) {
  std::string out =
      "run_id,algo,seed,t,sim_time,total_local_steps,train_loss,accuracy,"
      "grad_norm_mu_sq,grad_norm_server_sq,phi,cum_bits,empirical_H,decode_failures\n";
  for (const auto& r : trace.rows) {
    out += trace.run_id;
    out += ',';
    out += trace.algo;
    out += ',';
    out += std::to_string(trace.seed);
    out += ',';
    out += std::to_string(r.t);
    out += ',';
    out += format_double(r.sim_time);
    out += ',';
    out += std::to_string(r.total_local_steps);
    out += ',';
    out += format_double(r.train_loss);
    out += ',';
    if (r.accuracy) out += format_double(*r.accuracy);
    out += ',';
    out += format_double(r.grad_norm_mu_sq);
    out += ',';
    out += format_double(r.grad_norm_server_sq);
    out += ',';
    out += format_double(r.phi);
    out += ',';
    out += std::to_string(r.cum_bits);
    out += ',';
    out += format_double(r.empirical_h);
    out += ',';
    out += std::to_string(r.decode_failures);
    out += '\n';
  }
  return out;
}

std::string summary_json(const simclock::SimTrace& trace) {
  const auto s = diagnostics::trace_summary(trace);
  ojson j;
  j["run_id"] = trace.run_id;
  j["algo"] = trace.algo;
  j["seed"] = trace.seed;
  j["rows"] = trace.rows.size();
  j["final_loss"] = s.final_loss;
  if (s.final_accuracy) j["final_accuracy"] = *s.final_accuracy;
  j["avg_grad_norm_mu_sq"] = s.avg_grad_norm_mu_sq;
  j["avg_grad_norm_server_sq"] = s.avg_grad_norm_server_sq;
  j["total_bits"] = s.total_bits;
  j["bits_per_step"] = s.bits_per_step;
  j["empirical_H"] = s.empirical_h;
  j["decode_failures"] = s.decode_failures;
  j["total_sim_time"] = s.total_sim_time;
  j["total_local_steps"] = s.total_local_steps;
  j["zero_step_contact_fraction"] = s.zero_step_contact_fraction;
  return j.dump(2);
}

}  // namespace quafl::runner
