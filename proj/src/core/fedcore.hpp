#pragma once

#include <vector>

#include "core/quant.hpp"
#include "core/rng.hpp"
#include "core/tasks.hpp"
#include "core/vec.hpp"

namespace quafl::fedcore {

struct ServerState {
  Vec x;  // server model X_t
  long long t = 0;
  long long cumulative_bits = 0;

  static ServerState initial(int d) {
    ServerState s;
    s.x = zeros(static_cast<std::size_t>(d));
    return s;
  }
};

struct ClientState {
  Vec x;        // base model since the last server interaction
  Vec h_tilde;  // accumulated local gradient steps since the last interaction
  int q = 0;    // local steps folded into h_tilde, 0..K
  std::vector<int> steps_at_last_contact;  // q consumed at each interaction

  static ClientState initial(int d) {
    ClientState c;
    c.x = zeros(static_cast<std::size_t>(d));
    c.h_tilde = zeros(static_cast<std::size_t>(d));
    return c;
  }
};

// One local update: the gradient is taken at the virtual iterate
// x - eta*h_tilde (the base model advanced by the steps already accumulated),
// then folded into h_tilde. Calling with q == K is a protocol bug.
void local_step(ClientState& c, const tasks::TaskSet& task, double eta, int i, int K, Rng& rng);

struct InteractResult {
  quant::Encoded reply;       // Enc(x - eta*h_tilde), built before the update below
  bool decode_failed = false; // the incoming message decoded to something other than
                              // the server's rounded vector
  int steps_reported = 0;     // q consumed by this interaction
};

// Server contact at the client: the client first encodes its current progress
// X_i - eta*h_tilde as the reply, then decodes the incoming server model with
// its OLD base model as the key, then averages:
//   X_i <- 1/(s+1) * Dec(X_i, incoming) + s/(s+1) * (X_i - eta*h_tilde)
// and resets h_tilde and q. May arrive at any q, including 0 and K.
InteractResult client_interact(ClientState& c, const quant::Encoded& incoming,
                               const quant::Codec& codec, int s, double eta, Rng& rng);

// X_{t+1} = (X_t + sum_decoded) / (s+1); bumps t.
void server_aggregate(ServerState& srv, const Vec& sum_decoded, int s);

struct RoundReport {
  std::vector<int> sampled;  // ascending client indices
  int decode_failures = 0;   // client-side plus server-side failures this round
};

// One untimed QuAFL round: sample s clients without replacement, interact each
// in index order (send Enc(X_t), decode the reply with X_t as the key), then
// aggregate. Bits for all 2s messages are added to srv.cumulative_bits.
RoundReport server_round(ServerState& srv, std::vector<ClientState>& clients,
                         const quant::Codec& codec, int s, double eta, Rng& rng);

// One synchronous FedAvg round: sampled clients each run exactly K plain SGD
// steps from X_t and return their models uncompressed (accounted at 32 bits per
// coordinate each way); the server adopts the plain average.
std::vector<int> fedavg_round(ServerState& srv, const tasks::TaskSet& task, int s, int K,
                              double eta, Rng& rng);

// One mini-batch SGD step on the full task (the single-node baseline).
void sequential_baseline_step(Vec& x, const tasks::TaskSet& task, double eta, Rng& rng);

}  // namespace quafl::fedcore
