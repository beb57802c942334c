#include "core/tasks.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "core/error.hpp"
#include "core/strfmt.hpp"

namespace quafl::tasks {

namespace {

constexpr double kBlobMargin = 1.0;  // blob means sit at +-margin/sqrt(d) * (1,...,1)

double softplus(double t) {
  // log(1 + e^t), stable for large |t|
  if (t > 30.0) return t;
  return std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

TaskSet TaskSet::quadratic(int n, int d, double spread, double noise_sigma, uint64_t seed) {
  if (n < 1 || d < 1) fail(Errc::invalid_argument, "n and d must be >= 1");
  if (spread < 0.0 || noise_sigma < 0.0)
    fail(Errc::invalid_argument, "spread and noise_sigma must be nonnegative");
  Rng rng(seed);
  std::vector<Vec> centers(static_cast<std::size_t>(n));
  for (auto& c : centers) {
    c.resize(static_cast<std::size_t>(d));
    for (auto& v : c) v = rng.uniform(-spread, spread);
  }
  TaskSet t = quadratic_from_centers(std::move(centers), noise_sigma);
  t.spread_ = spread;
  return t;
}

TaskSet TaskSet::quadratic_from_centers(std::vector<Vec> centers, double noise_sigma) {
  if (centers.empty()) fail(Errc::invalid_argument, "need at least one center");
  if (noise_sigma < 0.0) fail(Errc::invalid_argument, "noise_sigma must be nonnegative");
  TaskSet t;
  t.quadratic_ = true;
  t.n_ = static_cast<int>(centers.size());
  t.d_ = static_cast<int>(centers.front().size());
  for (const auto& c : centers)
    if (static_cast<int>(c.size()) != t.d_)
      fail(Errc::invalid_argument, "centers must share one dimension");
  t.centers_ = std::move(centers);
  t.noise_sigma_ = noise_sigma;
  return t;
}

TaskSet TaskSet::logistic(int n, int d, int samples_per_client, double skew, int batch,
                          double blob_std, uint64_t seed) {
  if (n < 1 || d < 1) fail(Errc::invalid_argument, "n and d must be >= 1");
  if (samples_per_client < 1) fail(Errc::invalid_argument, "samples_per_client must be >= 1");
  if (skew < 0.0 || skew > 1.0) fail(Errc::invalid_argument, "skew must be in [0, 1]");
  if (batch < 1) fail(Errc::invalid_argument, "batch must be >= 1");
  if (blob_std < 0.0) fail(Errc::invalid_argument, "blob_std must be nonnegative");

  TaskSet t;
  t.quadratic_ = false;
  t.n_ = n;
  t.d_ = d;
  t.batch_ = batch;
  t.samples_per_client_ = samples_per_client;
  t.skew_ = skew;
  t.blob_std_ = blob_std;

  Rng rng(seed);
  const double m = kBlobMargin / std::sqrt(static_cast<double>(d));
  auto draw_sample = [&](int label) {
    Sample s;
    s.label = label;
    s.features.resize(static_cast<std::size_t>(d));
    const double mean = label == 1 ? m : -m;
    for (auto& v : s.features) v = mean + blob_std * rng.normal();
    return s;
  };

  t.shards_.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Class-1 proportion alternates around 1/2: skew=0 gives iid shards,
    // skew=1 single-class shards.
    const double p1 = 0.5 + (i % 2 == 0 ? -0.5 : 0.5) * skew;
    const int count1 = static_cast<int>(std::llround(p1 * samples_per_client));
    auto& shard = t.shards_[static_cast<std::size_t>(i)];
    shard.reserve(static_cast<std::size_t>(samples_per_client));
    for (int j = 0; j < samples_per_client; ++j) shard.push_back(draw_sample(j < count1 ? 1 : 0));
  }

  int test_size = std::max(200, n * samples_per_client / 4);
  test_size += test_size % 2;
  t.test_set_.reserve(static_cast<std::size_t>(test_size));
  for (int j = 0; j < test_size; ++j) t.test_set_.push_back(draw_sample(j % 2));
  return t;
}

void TaskSet::require_quadratic(const char* op) const {
  if (!quadratic_) fail(Errc::invalid_argument, std::string(op) + " requires a quadratic task");
}

double TaskSet::loss_i(int i, const Vec& x) const {
  if (quadratic_) return 0.5 * dist_sq(x, centers_[static_cast<std::size_t>(i)]);
  const auto& shard = shards_[static_cast<std::size_t>(i)];
  double s = 0.0;
  for (const auto& smp : shard) {
    const double y = smp.label == 1 ? 1.0 : -1.0;
    s += softplus(-y * dot(x, smp.features));
  }
  return s / static_cast<double>(shard.size());
}

Vec TaskSet::grad_i(int i, const Vec& x) const {
  Vec g = zeros(static_cast<std::size_t>(d_));
  if (quadratic_) {
    const auto& c = centers_[static_cast<std::size_t>(i)];
    for (int j = 0; j < d_; ++j) g[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j)] - c[static_cast<std::size_t>(j)];
    return g;
  }
  const auto& shard = shards_[static_cast<std::size_t>(i)];
  for (const auto& smp : shard) {
    const double y = smp.label == 1 ? 1.0 : -1.0;
    axpy(-y * sigmoid(-y * dot(x, smp.features)), smp.features, g);
  }
  for (auto& v : g) v /= static_cast<double>(shard.size());
  return g;
}

Vec TaskSet::stoch_grad_i(int i, const Vec& x, Rng& rng) const {
  if (quadratic_) {
    Vec g = grad_i(i, x);
    if (noise_sigma_ > 0.0)
      for (auto& v : g) v += noise_sigma_ * rng.normal();
    return g;
  }
  const auto& shard = shards_[static_cast<std::size_t>(i)];
  const int m = static_cast<int>(shard.size());
  if (batch_ >= m) return grad_i(i, x);  // full shard: exact, no sampling
  const std::vector<int> pick = rng.sample_without_replacement(m, batch_);
  Vec g = zeros(static_cast<std::size_t>(d_));
  for (int idx : pick) {
    const auto& smp = shard[static_cast<std::size_t>(idx)];
    const double y = smp.label == 1 ? 1.0 : -1.0;
    axpy(-y * sigmoid(-y * dot(x, smp.features)), smp.features, g);
  }
  for (auto& v : g) v /= static_cast<double>(batch_);
  return g;
}

double TaskSet::loss(const Vec& x) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += loss_i(i, x);
  return s / static_cast<double>(n_);
}

Vec TaskSet::grad(const Vec& x) const {
  if (quadratic_) {
    const Vec cbar = center_mean();
    Vec g(x);
    axpy(-1.0, cbar, g);
    return g;
  }
  Vec g = zeros(static_cast<std::size_t>(d_));
  for (int i = 0; i < n_; ++i) axpy(1.0, grad_i(i, x), g);
  for (auto& v : g) v /= static_cast<double>(n_);
  return g;
}

Vec TaskSet::global_stoch_grad(const Vec& x, Rng& rng) const {
  Vec g = zeros(static_cast<std::size_t>(d_));
  for (int i = 0; i < n_; ++i) axpy(1.0, stoch_grad_i(i, x, rng), g);
  for (auto& v : g) v /= static_cast<double>(n_);
  return g;
}

EvalResult TaskSet::loss_and_accuracy(const Vec& x, Split split) const {
  EvalResult r;
  if (quadratic_) {
    // No samples and no accuracy notion; both splits evaluate f itself.
    r.loss = loss(x);
    r.grad_norm_sq = norm_sq(grad(x));
    return r;
  }
  double lsum = 0.0;
  long long correct = 0;
  long long total = 0;
  Vec g = zeros(static_cast<std::size_t>(d_));
  auto eat = [&](const Sample& smp) {
    const double z = dot(x, smp.features);
    const double y = smp.label == 1 ? 1.0 : -1.0;
    lsum += softplus(-y * z);
    axpy(-y * sigmoid(-y * z), smp.features, g);
    correct += ((z > 0.0) == (smp.label == 1)) ? 1 : 0;
    ++total;
  };
  if (split == Split::train) {
    for (const auto& shard : shards_)
      for (const auto& smp : shard) eat(smp);
  } else {
    for (const auto& smp : test_set_) eat(smp);
  }
  r.loss = lsum / static_cast<double>(total);
  r.accuracy = static_cast<double>(correct) / static_cast<double>(total);
  for (auto& v : g) v /= static_cast<double>(total);
  r.grad_norm_sq = norm_sq(g);
  return r;
}

AnalyticConstants TaskSet::analytic_constants() const {
  require_quadratic("analytic_constants");
  AnalyticConstants c;
  c.L = 1.0;
  c.B = 1.0;
  c.sigma = noise_sigma_ * std::sqrt(static_cast<double>(d_));
  const Vec cbar = center_mean();
  double g2 = 0.0;
  for (const auto& ci : centers_) g2 += dist_sq(ci, cbar);
  c.G = std::sqrt(g2 / static_cast<double>(n_));
  c.f_star = loss(cbar);
  return c;
}

const std::vector<Vec>& TaskSet::centers() const {
  require_quadratic("centers");
  return centers_;
}

Vec TaskSet::center_mean() const {
  require_quadratic("center_mean");
  Vec m = zeros(static_cast<std::size_t>(d_));
  for (const auto& c : centers_) axpy(1.0, c, m);
  for (auto& v : m) v /= static_cast<double>(n_);
  return m;
}

std::string TaskSet::dump_csv() const {
  std::ostringstream out;
  if (quadratic_) {
    out << "# task=quadratic n=" << n_ << " d=" << d_ << " spread=" << format_double(spread_)
        << " noise_sigma=" << format_double(noise_sigma_) << "\n";
  } else {
    out << "# task=logistic n=" << n_ << " d=" << d_
        << " samples_per_client=" << samples_per_client_ << " skew=" << format_double(skew_)
        << " batch=" << batch_ << " blob_std=" << format_double(blob_std_) << "\n";
  }
  for (int j = 0; j < d_; ++j) out << "f" << j << ",";
  out << "label,client_id\n";
  auto row = [&](const Vec& features, const char* label, long long client) {
    for (double v : features) out << format_double(v) << ",";
    out << label << "," << client << "\n";
  };
  if (quadratic_) {
    for (int i = 0; i < n_; ++i) row(centers_[static_cast<std::size_t>(i)], "", i);
  } else {
    for (int i = 0; i < n_; ++i)
      for (const auto& smp : shards_[static_cast<std::size_t>(i)])
        row(smp.features, smp.label == 1 ? "1" : "0", i);
    for (const auto& smp : test_set_) row(smp.features, smp.label == 1 ? "1" : "0", -1);
  }
  return out.str();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string meta_value(const std::string& header, const std::string& key) {
  const std::string needle = key + "=";
  const auto pos = header.find(needle);
  if (pos == std::string::npos) fail(Errc::parse, "task csv missing metadata key " + key);
  auto end = header.find(' ', pos);
  if (end == std::string::npos) end = header.size();
  return header.substr(pos + needle.size(), end - pos - needle.size());
}

}  // namespace

TaskSet TaskSet::load_csv(const std::string& csv) {
  std::istringstream in(csv);
  std::string meta;
  if (!std::getline(in, meta) || meta.rfind("# task=", 0) != 0)
    fail(Errc::parse, "task csv must start with a '# task=' metadata line");
  std::string header;
  std::getline(in, header);  // column names, not used beyond position

  const std::string kind = meta_value(meta, "task");
  const int n = std::stoi(meta_value(meta, "n"));
  const int d = std::stoi(meta_value(meta, "d"));

  std::vector<std::vector<Sample>> shards(static_cast<std::size_t>(n));
  std::vector<Sample> test;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (static_cast<int>(cells.size()) != d + 2)
      fail(Errc::parse, "task csv row has wrong column count");
    Sample s;
    s.features.resize(static_cast<std::size_t>(d));
    for (int j = 0; j < d; ++j) s.features[static_cast<std::size_t>(j)] = parse_double(cells[static_cast<std::size_t>(j)]);
    const std::string& label = cells[static_cast<std::size_t>(d)];
    s.label = label.empty() ? 0 : std::stoi(label);
    const long long client = std::stoll(cells[static_cast<std::size_t>(d) + 1]);
    if (client < 0) {
      test.push_back(std::move(s));
    } else if (client < n) {
      shards[static_cast<std::size_t>(client)].push_back(std::move(s));
    } else {
      fail(Errc::parse, "task csv row has client_id out of range");
    }
  }

  if (kind == "quadratic") {
    std::vector<Vec> centers;
    centers.reserve(static_cast<std::size_t>(n));
    for (const auto& shard : shards) {
      if (shard.size() != 1) fail(Errc::parse, "quadratic task csv needs one center per client");
      centers.push_back(shard.front().features);
    }
    TaskSet t = quadratic_from_centers(std::move(centers), parse_double(meta_value(meta, "noise_sigma")));
    t.spread_ = parse_double(meta_value(meta, "spread"));
    return t;
  }
  if (kind != "logistic") fail(Errc::parse, "unknown task kind " + kind);

  TaskSet t;
  t.quadratic_ = false;
  t.n_ = n;
  t.d_ = d;
  t.samples_per_client_ = std::stoi(meta_value(meta, "samples_per_client"));
  t.skew_ = parse_double(meta_value(meta, "skew"));
  t.batch_ = std::stoi(meta_value(meta, "batch"));
  t.blob_std_ = parse_double(meta_value(meta, "blob_std"));
  t.shards_ = std::move(shards);
  t.test_set_ = std::move(test);
  for (const auto& shard : t.shards_)
    if (shard.empty()) fail(Errc::parse, "logistic task csv has an empty shard");
  return t;
}

}  // namespace quafl::tasks
