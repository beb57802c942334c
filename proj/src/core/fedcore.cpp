#include "core/fedcore.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace quafl::fedcore {

void local_step(ClientState& c, const tasks::TaskSet& task, double eta, int i, int K, Rng& rng) {
  if (c.q >= K) fail(Errc::internal, "local_step called with q == K (protocol bug)");
  Vec iterate = c.x;
  axpy(-eta, c.h_tilde, iterate);
  const Vec h = task.stoch_grad_i(i, iterate, rng);
  axpy(1.0, h, c.h_tilde);
  ++c.q;
}

InteractResult client_interact(ClientState& c, const quant::Encoded& incoming,
                               const quant::Codec& codec, int s, double eta, Rng& rng) {
  Vec progress = c.x;  // X_i - eta*h_tilde
  axpy(-eta, c.h_tilde, progress);

  InteractResult out;
  out.reply = codec.encode(progress, rng);  // encoded before the model changes
  const auto dec = codec.decode_with_oracle(c.x, incoming, incoming.hat);
  out.decode_failed = dec.failed;
  out.steps_reported = c.q;

  const double w_own = static_cast<double>(s) / (s + 1.0);
  for (std::size_t j = 0; j < c.x.size(); ++j)
    c.x[j] = dec.value[j] / (s + 1.0) + w_own * progress[j];

  c.steps_at_last_contact.push_back(c.q);
  std::fill(c.h_tilde.begin(), c.h_tilde.end(), 0.0);
  c.q = 0;
  return out;
}

void server_aggregate(ServerState& srv, const Vec& sum_decoded, int s) {
  for (std::size_t j = 0; j < srv.x.size(); ++j) srv.x[j] = (srv.x[j] + sum_decoded[j]) / (s + 1.0);
  ++srv.t;
}

RoundReport server_round(ServerState& srv, std::vector<ClientState>& clients,
                         const quant::Codec& codec, int s, double eta, Rng& rng) {
  const int n = static_cast<int>(clients.size());
  if (s < 1 || s > n) fail(Errc::invalid_argument, "s must be in [1, n]");

  RoundReport rep;
  rep.sampled = rng.sample_without_replacement(n, s);
  Vec sum_decoded = zeros(srv.x.size());
  for (int i : rep.sampled) {
    const auto msg = codec.encode(srv.x, rng);
    srv.cumulative_bits += quant::bits_accounting(msg);
    auto res = client_interact(clients[static_cast<std::size_t>(i)], msg, codec, s, eta, rng);
    srv.cumulative_bits += quant::bits_accounting(res.reply);
    const auto dec = codec.decode_with_oracle(srv.x, res.reply, res.reply.hat);
    rep.decode_failures += (res.decode_failed ? 1 : 0) + (dec.failed ? 1 : 0);
    axpy(1.0, dec.value, sum_decoded);
  }
  server_aggregate(srv, sum_decoded, s);
  return rep;
}

std::vector<int> fedavg_round(ServerState& srv, const tasks::TaskSet& task, int s, int K,
                              double eta, Rng& rng) {
  const int n = task.n();
  if (s < 1 || s > n) fail(Errc::invalid_argument, "s must be in [1, n]");
  if (K < 1) fail(Errc::invalid_argument, "K must be >= 1");

  const auto sampled = rng.sample_without_replacement(n, s);
  Vec sum = zeros(srv.x.size());
  for (int i : sampled) {
    Vec xi = srv.x;
    for (int k = 0; k < K; ++k) {
      const Vec g = task.stoch_grad_i(i, xi, rng);
      axpy(-eta, g, xi);
    }
    axpy(1.0, xi, sum);
  }
  for (std::size_t j = 0; j < srv.x.size(); ++j) srv.x[j] = sum[j] / static_cast<double>(s);
  ++srv.t;
  srv.cumulative_bits += 2LL * s * (32LL * task.d() + quant::kHeaderBits);
  return sampled;
}

void sequential_baseline_step(Vec& x, const tasks::TaskSet& task, double eta, Rng& rng) {
  const Vec g = task.global_stoch_grad(x, rng);
  axpy(-eta, g, x);
}

}  // namespace quafl::fedcore
