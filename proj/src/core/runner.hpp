#pragma once

#include <cstdint>
#include <string>

#include "core/config.hpp"
#include "core/quant.hpp"
#include "core/simclock.hpp"
#include "core/tasks.hpp"

namespace quafl::runner {

// Task construction from a validated config (seeded by cfg.task_seed, so every
// seed of a run shares the same objective).
tasks::TaskSet build_task(const config::RunConfig& cfg);

struct Resolved {
  double eta;
  quant::Codec codec;
};

// Resolves the learning rate (fixed or derived from the analytic constants)
// and the codec (lossless, explicit spacing, or window/2^bits).
Resolved resolve(const config::RunConfig& cfg, const tasks::TaskSet& task);

// Validate, build, resolve, simulate one seed, and stamp the run id.
simclock::SimTrace run_one(const config::RunConfig& cfg, uint64_t seed);

// Full per-round trace in the documented 14-column schema.
std::string trace_csv(const simclock::SimTrace& trace);

// Aggregate metrics for one trace as a JSON object.
std::string summary_json(const simclock::SimTrace& trace);

}  // namespace quafl::runner
