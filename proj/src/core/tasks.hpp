#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/vec.hpp"

namespace quafl::tasks {

enum class Split { train, test };

struct EvalResult {
  double loss = 0;
  std::optional<double> accuracy;  // empty when the task has no notion of accuracy
  double grad_norm_sq = 0;
};

// Closed-form constants of the heterogeneous-quadratic family: smoothness L,
// gradient-noise bound sigma, dissimilarity pair (G, B), and the loss lower
// bound f_star.
struct AnalyticConstants {
  double sigma = 0;
  double G = 0;
  double B = 0;
  double L = 0;
  double f_star = 0;
};

struct Sample {
  Vec features;
  int label = 0;  // 0 or 1
};

// n client objectives f_i with stochastic-gradient oracles; the global loss is
// f = (1/n) sum f_i. Immutable after construction.
class TaskSet {
 public:
  // f_i(x) = 0.5*||x - c_i||^2 with centers drawn uniformly from
  // [-spread, spread]^d; g~_i(x) = (x - c_i) + noise_sigma * N(0, I).
  static TaskSet quadratic(int n, int d, double spread, double noise_sigma, uint64_t seed);
  static TaskSet quadratic_from_centers(std::vector<Vec> centers, double noise_sigma);

  // Two-class Gaussian blobs (means +-margin/sqrt(d)*1, std blob_std) split
  // into n shards whose class-1 proportion interpolates with `skew` between
  // 1/2 (iid) and single-class shards; f_i is the mean logistic loss over the
  // shard and g~_i a mini-batch gradient of `batch` samples.
  static TaskSet logistic(int n, int d, int samples_per_client, double skew, int batch,
                          double blob_std, uint64_t seed);

  int n() const { return n_; }
  int d() const { return d_; }
  bool is_quadratic() const { return quadratic_; }

  double loss_i(int i, const Vec& x) const;
  Vec grad_i(int i, const Vec& x) const;  // exact gradient of f_i
  Vec stoch_grad_i(int i, const Vec& x, Rng& rng) const;
  double loss(const Vec& x) const;  // (1/n) sum f_i(x)
  Vec grad(const Vec& x) const;     // exact gradient of the global loss
  // (1/n) sum g~_i(x): the full-task stochastic gradient the sequential
  // baseline steps with.
  Vec global_stoch_grad(const Vec& x, Rng& rng) const;

  EvalResult loss_and_accuracy(const Vec& x, Split split) const;

  AnalyticConstants analytic_constants() const;  // quadratic only

  // One row per sample: features..., label, client_id (quadratic tasks dump
  // one row per client center with an empty label; test samples carry
  // client_id -1). load_csv inverts dump_csv exactly.
  std::string dump_csv() const;
  static TaskSet load_csv(const std::string& csv);

  const std::vector<Vec>& centers() const;  // quadratic only
  Vec center_mean() const;                  // quadratic only

 private:
  TaskSet() = default;
  void require_quadratic(const char* op) const;

  bool quadratic_ = true;
  int n_ = 0;
  int d_ = 0;

  // quadratic
  std::vector<Vec> centers_;
  double noise_sigma_ = 0;
  double spread_ = 0;

  // logistic
  std::vector<std::vector<Sample>> shards_;
  std::vector<Sample> test_set_;
  int batch_ = 0;
  int samples_per_client_ = 0;
  double skew_ = 0;
  double blob_std_ = 0;
};

}  // namespace quafl::tasks
