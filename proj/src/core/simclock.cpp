#include "core/simclock.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "core/diagnostics.hpp"
#include "core/error.hpp"
#include "core/fedcore.hpp"
#include "core/rng.hpp"

namespace quafl::simclock {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr long long kRoundCap = 10'000'000;  // horizon-mode runaway guard

// Per-client step durations. The exponential profile designates
// floor(slow_fraction * n) clients as slow, sampled from the run rng before
// any other draw.
struct Durations {
  config::TimingKind kind = config::TimingKind::uniform;
  double step_time = 1.0;
  double mean_fast = 2.0;
  double mean_slow = 8.0;
  std::vector<char> slow;

  static Durations build(const config::RunConfig& cfg, Rng& rng) {
    Durations d;
    d.kind = cfg.timing;
    d.step_time = cfg.step_time;
    d.mean_fast = 1.0 / cfg.lambda_fast;
    d.mean_slow = 1.0 / cfg.lambda_slow;
    d.slow.assign(static_cast<std::size_t>(cfg.n), 0);
    if (cfg.timing == config::TimingKind::exponential) {
      const int n_slow =
          std::min(cfg.n, static_cast<int>(std::floor(cfg.slow_fraction * cfg.n + 1e-9)));
      for (int i : rng.sample_without_replacement(cfg.n, n_slow))
        d.slow[static_cast<std::size_t>(i)] = 1;
    }
    return d;
  }

  double draw(int i, Rng& rng) const {
    if (kind == config::TimingKind::uniform) return step_time;
    return rng.exponential_mean(slow[static_cast<std::size_t>(i)] ? mean_slow : mean_fast);
  }
};

TraceRow make_row(const tasks::TaskSet& task, long long t, double time, long long steps,
                  const Vec& server_x, const Vec& mu, double phi, long long bits, double emp_h,
                  long long failures, double mu_drift_sq) {
  TraceRow r;
  r.t = t;
  r.sim_time = time;
  r.total_local_steps = steps;
  const auto train = task.loss_and_accuracy(server_x, tasks::Split::train);
  r.train_loss = train.loss;
  r.grad_norm_server_sq = train.grad_norm_sq;
  if (!task.is_quadratic())
    r.accuracy = task.loss_and_accuracy(server_x, tasks::Split::test).accuracy;
  r.grad_norm_mu_sq = norm_sq(task.grad(mu));
  r.phi = phi;
  r.cum_bits = bits;
  r.empirical_h = emp_h;
  r.decode_failures = failures;
  r.sum_h_sq = kNaN;
  r.mu_drift_sq = mu_drift_sq;
  return r;
}

struct StopPlan {
  bool horizon_mode = false;
  double horizon = 0;
  long long T = 0;  // round bound when not horizon_mode

  static StopPlan of(const config::RunConfig& cfg) {
    StopPlan p;
    p.horizon_mode = cfg.time_horizon.has_value();
    p.horizon = cfg.time_horizon.value_or(0);
    p.T = p.horizon_mode ? std::numeric_limits<long long>::max() : cfg.resolved_T();
    return p;
  }
};

SimTrace run_quafl(const config::RunConfig& cfg, const tasks::TaskSet& task,
                   const quant::Codec& codec, double eta, uint64_t seed) {
  const int n = cfg.n, s = cfg.s, K = cfg.K, d = cfg.d;
  const double swt = cfg.resolved_swt(), sit = cfg.sit;
  const StopPlan stop = StopPlan::of(cfg);
  const bool strict = cfg.failure_mode == config::FailureMode::strict;

  SimTrace trace;
  Rng rng(seed);
  const Durations dur = Durations::build(cfg, rng);

  auto server = fedcore::ServerState::initial(d);
  std::vector<fedcore::ClientState> clients(static_cast<std::size_t>(n),
                                            fedcore::ClientState::initial(d));
  std::vector<char> marked(static_cast<std::size_t>(n), 0);

  // (time, kind priority, client): step completions first, then the round's
  // aggregation, then the next round's contact. Deterministic tie-breaks.
  using Ev = std::tuple<double, int, int>;
  std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> queue;

  long long total_steps = 0, failures_total = 0;
  long long contacts = 0, zero_contacts = 0, steps_consumed = 0;

  std::vector<int> round_sampled;
  int pending = 0, round_failures = 0;
  double begin_time = 0, last_reply = 0;
  Vec sum_decoded = zeros(static_cast<std::size_t>(d));
  Vec consumed_h;

  Vec prev_mu;
  auto emit_row = [&](double time) {
    const Vec mu = diagnostics::compute_mu(server.x, clients);
    const double phi = diagnostics::compute_phi(server.x, clients, mu);
    const double drift = trace.rows.empty() ? kNaN : dist_sq(mu, prev_mu);
    const double emp_h = contacts > 0 ? static_cast<double>(steps_consumed) /
                                            static_cast<double>(contacts)
                                      : 0.0;
    trace.rows.push_back(make_row(task, server.t, time, total_steps, server.x, mu, phi,
                                  server.cumulative_bits, emp_h, failures_total, drift));
    if (cfg.record_vectors) trace.mu_by_round.push_back(mu);
    prev_mu = mu;
  };

  auto interact = [&](int i, double time) {
    auto& client = clients[static_cast<std::size_t>(i)];
    const auto msg = codec.encode(server.x, rng);
    server.cumulative_bits += quant::bits_accounting(msg);
    if (cfg.record_vectors) axpy(1.0, client.h_tilde, consumed_h);
    auto res = fedcore::client_interact(client, msg, codec, s, eta, rng);
    server.cumulative_bits += quant::bits_accounting(res.reply);
    const auto dec = codec.decode_with_oracle(server.x, res.reply, res.reply.hat);
    const int fails = (res.decode_failed ? 1 : 0) + (dec.failed ? 1 : 0);
    if (fails > 0 && strict)
      fail(Errc::decode_failure, "decode failure (seed " + std::to_string(seed) +
                                     ", server step " + std::to_string(server.t) + ", client " +
                                     std::to_string(i) + ")");
    round_failures += fails;
    axpy(1.0, dec.value, sum_decoded);
    ++contacts;
    steps_consumed += res.steps_reported;
    if (res.steps_reported == 0) ++zero_contacts;
    marked[static_cast<std::size_t>(i)] = 0;
    last_reply = time;
    --pending;
    if (pending == 0) queue.push({std::max(begin_time + sit, last_reply), 1, -1});
  };

  emit_row(0.0);
  if (stop.T == 0) {
    trace.total_contacts = contacts;
    trace.zero_step_contacts = zero_contacts;
    return trace;
  }

  for (int i = 0; i < n; ++i) queue.push({dur.draw(i, rng), 0, i});
  queue.push({swt, 2, -1});

  long long rounds_done = 0;
  while (!queue.empty()) {
    const auto [time, prio, who] = queue.top();
    queue.pop();

    if (prio == 0) {  // a client finishes one local step
      auto& client = clients[static_cast<std::size_t>(who)];
      fedcore::local_step(client, task, eta, who, K, rng);
      ++total_steps;
      if (marked[static_cast<std::size_t>(who)]) {
        // pending contact: reply now, without further steps, then resume
        interact(who, time);
        queue.push({time + dur.draw(who, rng), 0, who});
      } else if (client.q < K) {
        queue.push({time + dur.draw(who, rng), 0, who});
      }
    } else if (prio == 2) {  // the server opens a round
      // accumulators as they stand when the round opens, attached to the row
      // the round departs from
      double sum_h_sq = 0;
      for (const auto& client : clients) sum_h_sq += norm_sq(client.h_tilde);
      trace.rows.back().sum_h_sq = sum_h_sq;

      round_sampled = rng.sample_without_replacement(n, s);
      begin_time = time;
      last_reply = time;
      pending = s;
      round_failures = 0;
      std::fill(sum_decoded.begin(), sum_decoded.end(), 0.0);
      if (cfg.record_vectors) consumed_h = zeros(static_cast<std::size_t>(d));
      for (int i : round_sampled) {
        if (clients[static_cast<std::size_t>(i)].q == K) {
          interact(i, time);  // idle client: interacts at the contact time
          queue.push({time + dur.draw(i, rng), 0, i});
        } else {
          marked[static_cast<std::size_t>(i)] = 1;
        }
      }
    } else {  // all replies in and the interaction window elapsed: aggregate
      fedcore::server_aggregate(server, sum_decoded, s);
      failures_total += round_failures;
      if (stop.horizon_mode && time > stop.horizon) break;
      emit_row(time);
      if (cfg.record_vectors) {
        trace.consumed_h_by_round.push_back(consumed_h);
        trace.sampled_by_round.push_back(round_sampled);
      }
      ++rounds_done;
      if (server.t >= stop.T) break;
      if (stop.horizon_mode && rounds_done >= kRoundCap)
        fail(Errc::internal, "time horizon exceeded 1e7 rounds; check swt/sit");
      queue.push({time + swt, 2, -1});
    }
  }

  trace.total_contacts = contacts;
  trace.zero_step_contacts = zero_contacts;
  return trace;
}

SimTrace run_fedavg(const config::RunConfig& cfg, const tasks::TaskSet& task, double eta,
                    uint64_t seed) {
  const int n = cfg.n, s = cfg.s, K = cfg.K, d = cfg.d;
  const double sit = cfg.sit;  // swt is 0 by definition for FedAvg
  const StopPlan stop = StopPlan::of(cfg);

  SimTrace trace;
  Rng rng(seed);
  const Durations dur = Durations::build(cfg, rng);

  auto server = fedcore::ServerState::initial(d);
  long long total_steps = 0, contacts = 0, steps_consumed = 0;

  Vec prev = server.x;
  auto emit_row = [&](double time) {
    const double emp_h = contacts > 0 ? static_cast<double>(steps_consumed) /
                                            static_cast<double>(contacts)
                                      : 0.0;
    const double drift = trace.rows.empty() ? kNaN : dist_sq(server.x, prev);
    trace.rows.push_back(make_row(task, server.t, time, total_steps, server.x, server.x, 0.0,
                                  server.cumulative_bits, emp_h, 0, drift));
    if (cfg.record_vectors) trace.mu_by_round.push_back(server.x);
    prev = server.x;
  };

  emit_row(0.0);
  double time = 0;
  long long rounds_done = 0;
  while (server.t < stop.T) {
    const auto sampled = rng.sample_without_replacement(n, s);
    double latest = time;
    Vec sum = zeros(static_cast<std::size_t>(d));
    for (int i : sampled) {
      Vec xi = server.x;
      double finish = time;
      for (int k = 0; k < K; ++k) {
        finish += dur.draw(i, rng);
        const Vec g = task.stoch_grad_i(i, xi, rng);
        axpy(-eta, g, xi);
      }
      latest = std::max(latest, finish);
      axpy(1.0, xi, sum);
    }
    for (std::size_t j = 0; j < server.x.size(); ++j)
      server.x[j] = sum[j] / static_cast<double>(s);
    ++server.t;
    server.cumulative_bits += 2LL * s * (32LL * d + quant::kHeaderBits);
    total_steps += static_cast<long long>(s) * K;
    contacts += s;
    steps_consumed += static_cast<long long>(s) * K;
    time = latest + sit;

    if (stop.horizon_mode && time > stop.horizon) break;
    emit_row(time);
    if (cfg.record_vectors) trace.sampled_by_round.push_back(sampled);
    ++rounds_done;
    if (stop.horizon_mode && rounds_done >= kRoundCap)
      fail(Errc::internal, "time horizon exceeded 1e7 rounds; check sit/step durations");
  }

  trace.total_contacts = contacts;
  return trace;
}

SimTrace run_baseline(const config::RunConfig& cfg, const tasks::TaskSet& task, double eta,
                      uint64_t seed) {
  const StopPlan stop = StopPlan::of(cfg);

  SimTrace trace;
  Rng rng(seed);

  Vec x = zeros(static_cast<std::size_t>(cfg.d));
  Vec prev = x;
  long long t = 0;
  auto emit_row = [&](double time) {
    const double drift = trace.rows.empty() ? kNaN : dist_sq(x, prev);
    trace.rows.push_back(make_row(task, t, time, t, x, x, 0.0, 0, 0.0, 0, drift));
    if (cfg.record_vectors) trace.mu_by_round.push_back(x);
    prev = x;
  };

  emit_row(0.0);
  double time = 0;
  while (t < stop.T) {
    // the single node runs at the slow profile's rate
    const double dt = cfg.timing == config::TimingKind::uniform
                          ? cfg.step_time
                          : rng.exponential_mean(1.0 / cfg.lambda_slow);
    time += dt;
    fedcore::sequential_baseline_step(x, task, eta, rng);
    ++t;
    if (stop.horizon_mode && time > stop.horizon) break;
    emit_row(time);
    if (stop.horizon_mode && t >= kRoundCap)
      fail(Errc::internal, "time horizon exceeded 1e7 steps; check step durations");
  }
  return trace;
}

}  // namespace

SimTrace run(const config::RunConfig& cfg, const tasks::TaskSet& task, const quant::Codec& codec,
             double eta, uint64_t seed) {
  config::validate(cfg);
  if (task.n() != cfg.n || task.d() != cfg.d)
    fail(Errc::invalid_argument, "task does not match the config's n and d");

  SimTrace trace;
  switch (cfg.algo) {
    case config::Algo::quafl: trace = run_quafl(cfg, task, codec, eta, seed); break;
    case config::Algo::fedavg: trace = run_fedavg(cfg, task, eta, seed); break;
    case config::Algo::baseline: trace = run_baseline(cfg, task, eta, seed); break;
  }
  trace.algo = config::to_string(cfg.algo);
  trace.seed = seed;
  return trace;
}

}  // namespace quafl::simclock
