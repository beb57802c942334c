// Acceptance harness: one line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "core/config.hpp"
#include "core/diagnostics.hpp"
#include "core/error.hpp"
#include "core/quant.hpp"
#include "core/rng.hpp"
#include "core/runner.hpp"
#include "core/simclock.hpp"
#include "core/tasks.hpp"
#include "core/vec.hpp"

using namespace quafl;

namespace {

int g_failures = 0;

void report(int idx, bool ok, const std::string& what) {
  std::printf("[%s] criterion %d: %s\n", ok ? "PASS" : "FAIL", idx, what.c_str());
  if (!ok) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

double mean_final_loss(const config::RunConfig& cfg) {
  double acc = 0;
  for (uint64_t seed : cfg.seeds) acc += runner::run_one(cfg, seed).rows.back().train_loss;
  return acc / static_cast<double>(cfg.seeds.size());
}

// ---- 1: round trips recover the grid point and the rounding is unbiased ----
void criterion_1() {
  const auto start = std::chrono::steady_clock::now();
  const int d = 32;
  const double spacing = 0.01;
  const auto g = quant::make_grid(8, spacing, d);
  const auto codec = quant::Codec::grid(g);
  Rng rng(1001);

  const int trials = 100000;
  long long exact = 0;
  Vec err_sum(d, 0.0);
  for (int t = 0; t < trials; ++t) {
    Vec x(d), key(d);
    for (int j = 0; j < d; ++j) {
      x[j] = rng.uniform(-2.0, 2.0);
      key[j] = x[j] + rng.uniform(-g.window / 4, g.window / 4);
    }
    const auto msg = codec.encode(x, rng);
    const auto dec = codec.decode(key, msg);
    if (dec == msg.hat) ++exact;
    for (int j = 0; j < d; ++j) err_sum[j] += msg.hat[j] - x[j];
  }
  double worst_mean = 0;  // per-coordinate bias
  for (int j = 0; j < d; ++j)
    worst_mean = std::max(worst_mean, std::fabs(err_sum[j] / static_cast<double>(trials)));
  const double tol = 4.0 * spacing / std::sqrt(static_cast<double>(trials));
  const double elapsed = seconds_since(start);
  const bool ok = exact == trials && worst_mean <= tol && elapsed < 5.0;
  report(1, ok,
         fmt("keys within W/4 recover the grid point (%lld/%d) and every coordinate is "
             "unbiased (max |mean err| %.2e <= %.2e) in %.2fs",
             exact, trials, worst_mean, tol, elapsed));
}

// ---- 2: worst case decode error stays within one grid cell ----
void criterion_2() {
  const int d = 32;
  const double spacing = 0.01;
  const auto g = quant::make_grid(8, spacing, d);
  const auto codec = quant::Codec::grid(g);
  Rng rng(1002);

  int violations = 0;
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    Vec x(d), key(d);
    for (int j = 0; j < d; ++j) {
      x[j] = rng.uniform(-2.0, 2.0);
      key[j] = x[j] + rng.uniform(-(g.window / 2 - 1.5 * spacing), g.window / 2 - 1.5 * spacing);
    }
    const auto msg = codec.encode(x, rng);
    const auto dec = codec.decode(key, msg);
    const double err = linf_dist(dec, x);
    worst = std::max(worst, err);
    if (err > spacing) ++violations;
  }
  report(2, violations == 0,
         fmt("decode error stays within one cell for in-window keys (worst %.3e <= %.3e, "
             "%d violations)",
             worst, spacing, violations));
}

// ---- 3: the wrap flips exactly at half a window of key drift ----
void criterion_3() {
  const double spacing = 0.125;
  const auto codec = quant::Codec::grid(quant::make_grid(8, spacing, 1));
  const double w = 32.0;  // 2^8 * 0.125
  Rng rng(1003);

  int bad = 0;
  for (int t = 0; t < 100; ++t) {
    const double hat = static_cast<double>(static_cast<int>(rng.below(201)) - 100) * spacing;
    const auto msg = codec.encode({hat}, rng);  // on-grid, exact
    const double delta = spacing / 2;

    // `failed` flips within one grid cell of +-W/2 key drift, values wrap by W
    auto at = [&](double key) { return codec.decode_with_oracle({key}, msg, msg.hat); };
    if (at(hat + w / 2 - delta).failed || at(hat + w / 2 - delta).value[0] != hat) ++bad;
    if (!at(hat + w / 2 + delta).failed || at(hat + w / 2 + delta).value[0] != hat + w) ++bad;
    if (at(hat - w / 2 + delta).failed || at(hat - w / 2 + delta).value[0] != hat) ++bad;
    if (!at(hat - w / 2 - delta).failed || at(hat - w / 2 - delta).value[0] != hat - w) ++bad;
    // the window is closed below and open above
    if (at(hat + w / 2).failed || at(hat + w / 2).value[0] != hat) ++bad;
    if (!at(hat - w / 2).failed || at(hat - w / 2).value[0] != hat - w) ++bad;
  }
  report(3, bad == 0,
         fmt("decode failure flag flips exactly at W/2 key drift, values wrap by one window "
             "(%d bad edges)",
             bad));
}

// ---- 4: wire accounting matches the documented formula ----
void criterion_4() {
  Rng rng(1004);
  bool ok = true;
  std::string detail;

  const Vec x10(10, 0.25);
  const auto c12 = quant::Codec::grid(quant::make_grid(12, 0.5, 10));
  const auto c16 = quant::Codec::grid(quant::make_grid(16, 0.5, 10));
  const auto m12 = c12.encode(x10, rng);
  const auto m16 = c16.encode(x10, rng);
  ok = ok && quant::bits_accounting(m12) == 248 && quant::bits_accounting(m16) == 288;
  ok = ok && quant::serialize(c12.grid_spec(), m12).size() == 16 + 15;
  ok = ok && quant::serialize(c16.grid_spec(), m16).size() == 16 + 20;

  config::RunConfig cfg;
  cfg.n = 8;
  cfg.s = 3;
  cfg.K = 2;
  cfg.d = 7;
  cfg.bits = 9;
  cfg.T = 4;
  const auto trace = runner::run_one(cfg, 2);
  const long long per_round = 2LL * cfg.s * (cfg.d * cfg.bits + 128);
  for (std::size_t t = 1; t < trace.rows.size(); ++t) {
    if (trace.rows[t].cum_bits - trace.rows[t - 1].cum_bits != per_round) ok = false;
  }
  report(4, ok,
         fmt("bit accounting: 248/288 header+payload, byte-exact serialization, "
             "2s(db+128)=%lld per round",
             per_round));
}

// ---- 5: the running mean follows the consumed local progress ----
void criterion_5() {
  config::RunConfig cfg;
  cfg.n = 8;
  cfg.s = 2;
  cfg.K = 3;
  cfg.d = 10;
  cfg.lossless = true;
  cfg.noise_sigma = 0.0;
  cfg.spread = 1.0;
  cfg.eta = 0.05;
  cfg.T = 200;
  cfg.record_vectors = true;
  const auto trace = runner::run_one(cfg, 1);

  double worst = 0;
  const std::size_t rounds = trace.consumed_h_by_round.size();
  bool shape_ok = trace.mu_by_round.size() == rounds + 1;
  for (std::size_t t = 0; t < rounds && shape_ok; ++t) {
    Vec expected = trace.mu_by_round[t];
    axpy(-cfg.eta / (cfg.n + 1), trace.consumed_h_by_round[t], expected);
    worst = std::max(worst, linf_dist(trace.mu_by_round[t + 1], expected));
  }
  const bool ok = shape_ok && rounds == 200 && worst <= 1e-10;
  report(5, ok,
         fmt("lossless mean recursion mu' = mu - eta/(n+1) sum h over %zu rounds "
             "(worst dev %.2e <= 1e-10)",
             rounds, worst));
}

// ---- 6: more local steps or more peers per round speed convergence ----
void criterion_6() {
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> k_losses, s_losses;
  for (const auto& c : config::preset("sweep-K").configs) k_losses.push_back(mean_final_loss(c));
  for (const auto& c : config::preset("sweep-s").configs) s_losses.push_back(mean_final_loss(c));

  bool ok = true;
  for (std::size_t i = 1; i < k_losses.size(); ++i) ok = ok && k_losses[i] <= k_losses[i - 1];
  for (std::size_t i = 1; i < s_losses.size(); ++i) ok = ok && s_losses[i] <= s_losses[i - 1];
  const double elapsed = seconds_since(start);
  ok = ok && elapsed < 60.0;
  report(6, ok,
         fmt("final loss falls monotonically in K (%.4g >= %.4g >= %.4g) and s "
             "(%.4g >= %.4g >= %.4g) in %.1fs",
             k_losses[0], k_losses[1], k_losses[2], s_losses[0], s_losses[1], s_losses[2],
             elapsed));
}

// ---- 7: more bits approach the lossless loss from above ----
void criterion_7() {
  const auto grid = config::preset("sweep-b").configs;
  std::vector<double> losses;
  for (const auto& c : grid) losses.push_back(mean_final_loss(c));

  auto lossless_cfg = grid.back();
  lossless_cfg.lossless = true;
  const double lossless_loss = mean_final_loss(lossless_cfg);

  const bool ordered = losses[0] >= losses[1] && losses[1] >= losses[2];
  const bool converged = std::fabs(losses[2] - lossless_loss) <= 0.05 * lossless_loss;
  report(7, ordered && converged,
         fmt("coarse-to-fine losses %.6g >= %.6g >= %.6g with 32b within 5%% of lossless %.6g",
             losses[0], losses[1], losses[2], lossless_loss));
}

// ---- 8: under heterogeneous speeds the async run reaches the synchronous
// ----    half-time loss strictly earlier
void criterion_8() {
  const auto timing = config::preset("timing").configs;
  const auto& quafl_cfg = timing[0];
  const auto& fedavg_cfg = timing[1];

  int wins = 0, tried = 0;
  bool h_ok = true;
  double min_h = 1e300;
  for (uint64_t seed : quafl_cfg.seeds) {
    const auto async_trace = runner::run_one(quafl_cfg, seed);
    const auto sync_trace = runner::run_one(fedavg_cfg, seed);
    ++tried;

    const double t_final = sync_trace.rows.back().sim_time;
    const simclock::TraceRow* half = nullptr;
    for (const auto& row : sync_trace.rows)
      if (row.t > 0 && row.sim_time <= t_final / 2) half = &row;
    if (!half) continue;

    double t_async = -1;
    for (const auto& row : async_trace.rows) {
      if (row.train_loss <= half->train_loss) {
        t_async = row.sim_time;
        break;
      }
    }
    if (t_async >= 0 && t_async < half->sim_time) ++wins;

    const double h = async_trace.rows.back().empirical_h;
    min_h = std::min(min_h, h);
    h_ok = h_ok && h >= 2.5;
  }
  const bool ok = wins >= 4 && h_ok;
  report(8, ok,
         fmt("async run beats the synchronous half-time loss on %d/%d seeds with "
             "min empirical H %.2f >= 2.5",
             wins, tried, min_h));
}

// ---- 9: full participation with one local step is plain gradient descent ----
void criterion_9() {
  config::RunConfig cfg;
  cfg.algo = config::Algo::fedavg;
  cfg.n = 8;
  cfg.s = 8;
  cfg.K = 1;
  cfg.d = 6;
  cfg.lossless = true;
  cfg.noise_sigma = 0.0;
  cfg.eta = 0.05;
  cfg.T = 100;
  cfg.record_vectors = true;
  const auto trace = runner::run_one(cfg, 1);

  const auto task = runner::build_task(cfg);
  const Vec target = task.center_mean();
  Vec x = zeros(static_cast<std::size_t>(cfg.d));
  double worst = 0;
  for (std::size_t t = 0; t < trace.mu_by_round.size(); ++t) {
    worst = std::max(worst, linf_dist(trace.mu_by_round[t], x));
    // x <- x - eta (x - c_bar)
    for (std::size_t j = 0; j < x.size(); ++j) x[j] -= cfg.eta * (x[j] - target[j]);
  }
  const bool ok = trace.mu_by_round.size() == 101 && worst <= 1e-10;
  report(9, ok,
         fmt("full-participation synchronous run tracks x <- x - eta(x - c_bar) over 100 "
             "rounds (worst dev %.2e <= 1e-10)",
             worst));
}

// ---- 10: the derived step size and grid tighten with the round budget ----
void criterion_10() {
  const auto start = std::chrono::steady_clock::now();
  config::RunConfig cfg;
  cfg.n = 16;
  cfg.s = 4;
  cfg.K = 5;
  cfg.d = 10;
  cfg.spread = 1.0;
  cfg.noise_sigma = 0.1 / std::sqrt(10.0);
  cfg.eta_theorem = true;
  cfg.bits = 8;

  long long failures = 0;
  double means[2] = {0, 0};
  const long long budgets[2] = {500, 2000};
  for (int b = 0; b < 2; ++b) {
    cfg.T = budgets[b];
    for (uint64_t seed = 1; seed <= 20; ++seed) {
      const auto trace = runner::run_one(cfg, seed);
      const auto s = diagnostics::trace_summary(trace);
      means[b] += s.avg_grad_norm_mu_sq / 20.0;
      failures += s.decode_failures;
    }
  }
  const double elapsed = seconds_since(start);
  const bool ok = means[1] < means[0] && failures == 0 && elapsed < 30.0;
  report(10, ok,
         fmt("theorem schedule: avg grad norm %.3e (T=2000) < %.3e (T=500) with %lld decode "
             "failures in %.1fs",
             means[1], means[0], failures, elapsed));
}

// ---- 11: the potential and drift recursions hold on ensemble means ----
void criterion_11() {
  config::RunConfig cfg;
  cfg.T = 20;

  std::vector<simclock::SimTrace> traces;
  for (uint64_t seed = 1; seed <= 100; ++seed) traces.push_back(runner::run_one(cfg, seed));

  const auto task = runner::build_task(cfg);
  const auto resolved = runner::resolve(cfg, task);
  const double bound = resolved.codec.error_bound_l2();
  std::vector<long long> checkpoints;
  for (long long t = 0; t < 20; t += 2) checkpoints.push_back(t);

  const auto phi = diagnostics::check_potential_step(traces, checkpoints, cfg.n, cfg.s,
                                                     resolved.eta, bound);
  const auto drift =
      diagnostics::check_mu_drift(traces, checkpoints, cfg.n, cfg.s, resolved.eta, bound);
  const bool ok = phi.pass_fraction >= 0.9 && drift.pass_fraction >= 0.9;
  report(11, ok,
         fmt("100-seed ensemble satisfies the potential step at %.0f%% and the mean drift at "
             "%.0f%% of checkpoints (codec bound %.4f)",
             100.0 * phi.pass_fraction, 100.0 * drift.pass_fraction, bound));
}

// ---- 12: traces are byte stable across reruns ----
void criterion_12() {
  config::RunConfig cfg;
  cfg.T = 30;
  cfg.noise_sigma = 0.1;
  const auto a = runner::run_one(cfg, 7);
  const auto b = runner::run_one(cfg, 7);
  const bool ok = runner::trace_csv(a) == runner::trace_csv(b) &&
                  runner::summary_json(a) == runner::summary_json(b);
  report(12, ok, "identical seeds reproduce byte-identical trace csv and summary json");
}

}  // namespace

int main() {
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
    criterion_12();
  } catch (const std::exception& e) {
    std::printf("[FAIL] unexpected error: %s\n", e.what());
    ++g_failures;
  }
  if (g_failures > 0) {
    std::printf("%d criteria failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
