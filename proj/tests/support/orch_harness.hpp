// Copyright 2026 The crashgym Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Workload drivers shared by the orchestrator unit tests and the
// acceptance binary.

#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "crashgym/orch/cluster.hpp"
#include "crashgym/util/fs.hpp"

namespace crashgym::testing {

// Succeeds unless params carry "fail": true. Build-like steps publish an
// image artifact that the next step receives.
class EchoExecutor : public orch::StepExecutor {
 public:
  orch::StepResult execute(orch::StepKind kind, const nlohmann::json& params,
                           const orch::StepContext& ctx) override {
    ++calls;
    orch::StepResult r;
    r.ok = !params.value("fail", false);
    if (!r.ok) {
      r.error = "CompileError";
      return r;
    }
    const std::string ref = orch::to_string(kind) + "-" + ctx.job_id + "-" +
                            std::to_string(ctx.step_index);
    r.artifact_ref = ref;
    if (kind == orch::StepKind::kBuild) r.output = {{"image", ref}};
    return r;
  }
  int calls = 0;
};

inline std::map<std::string, std::shared_ptr<orch::StepExecutor>> echo_executors() {
  auto e = std::make_shared<EchoExecutor>();
  return {{"build", e}, {"reproduce", e}, {"retrieve", e}};
}

inline std::vector<orch::StepSpec> build_reproduce(bool fail_build = false, bool fail_repro = false) {
  return {{orch::StepKind::kBuild, {{"commit_id", std::string(40, 'a')}, {"fail", fail_build}}},
          {orch::StepKind::kReproduce, {{"reproducer", "r1"}, {"fail", fail_repro}}}};
}

// Status a job must end in when its recorded step outcomes are replayed
// in (step_index, attempt) order.
inline orch::JobStatus sequential_replay(const std::vector<orch::Event>& events, int steps) {
  std::vector<std::pair<int, int>> order;
  std::map<std::pair<int, int>, bool> ok;
  for (const auto& e : events) {
    if (e.type == "succeeded" || e.type == "failed" || e.type == "timeout") {
      order.emplace_back(e.step_index, e.attempt);
      ok[{e.step_index, e.attempt}] = e.type == "succeeded";
    }
    if (e.type == "job_cancelled") return orch::JobStatus::kCancelled;
  }
  std::sort(order.begin(), order.end());
  int done = 0;
  for (const auto& key : order) {
    if (!ok[key]) return orch::JobStatus::kFailed;
    ++done;
  }
  if (done == steps) return orch::JobStatus::kSucceeded;
  return done == 0 ? orch::JobStatus::kQueued : orch::JobStatus::kRunning;
}

struct KillRecoverReport {
  int crashes = 0;
  int jobs = 0;
  int succeeded_jobs = 0;
  int lost_successes = 0;
  std::vector<std::string> audit_problems;
};

// Runs `jobs` two-step jobs inline, abandoning the whole cluster (queue
// included) at `crash_points` randomly chosen hook invocations and
// restarting from the store with recover().
inline KillRecoverReport kill_and_recover(std::uint64_t seed, int jobs, int crash_points) {
  util::TempDir dir("crashgym-kill");
  const auto db = dir.path() / "jobs.db";
  std::mt19937_64 rng(seed);
  // Each job passes roughly five hook points; spread crashes over them.
  std::set<int> crash_at;
  while (static_cast<int>(crash_at.size()) < crash_points)
    crash_at.insert(std::uniform_int_distribution<int>(1, jobs * 5)(rng));

  int hook_calls = 0;
  orch::SimulatedClock clock;
  orch::ClusterOptions opts;
  opts.db_path = db;
  opts.scheduler.crash_hook = [&](std::string_view point) {
    if (crash_at.count(++hook_calls)) throw orch::SimulatedCrash{std::string(point)};
  };

  KillRecoverReport report;
  report.jobs = jobs;
  std::set<std::pair<std::string, int>> seen_succeeded;
  auto note_successes = [&](orch::JobStore& store) {
    for (const auto& e : store.events())
      if (e.type == "succeeded") seen_succeeded.insert({e.job_id, e.step_index});
  };

  auto cluster = std::make_unique<orch::LocalCluster>(opts, echo_executors(), clock);
  int submitted = 0;
  for (;;) {
    try {
      while (submitted < jobs) {
        ++submitted;
        cluster->scheduler().submit_job(build_reproduce());
      }
      cluster->drain();
      break;
    } catch (const orch::SimulatedCrash&) {
      ++report.crashes;
      note_successes(cluster->store());
      cluster = std::make_unique<orch::LocalCluster>(opts, echo_executors(), clock);
      cluster->scheduler().recover();
    }
  }
  note_successes(cluster->store());
  for (const auto& [job_id, step] : seen_succeeded) {
    const auto job = cluster->scheduler().query_status(job_id);
    if (job.steps[static_cast<size_t>(step)].status != orch::StepStatus::kSucceeded)
      ++report.lost_successes;
  }
  for (const auto& id : cluster->scheduler().list_jobs())
    report.succeeded_jobs += cluster->scheduler().query_status(id).status == orch::JobStatus::kSucceeded;
  report.audit_problems = orch::audit_event_log(cluster->store().events());
  return report;
}

struct InterleavingReport {
  std::vector<std::string> audit_problems;
  int replay_mismatches = 0;
  int unfinished = 0;
};

// Random interleaving of worker steps, scheduler steps, duplicated result
// envelopes, lost messages and visibility timeouts.
inline InterleavingReport random_interleaving(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  orch::SimulatedClock clock;
  orch::ClusterOptions opts;
  opts.db_path = ":memory:";
  opts.workers = {{"build", 3}, {"reproduce", 3}};
  orch::LocalCluster cluster(opts, echo_executors(), clock);
  auto& sched = cluster.scheduler();

  std::vector<std::string> ids;
  const int jobs = pick(2, 6);
  for (int j = 0; j < jobs; ++j) {
    const int steps = pick(1, 4);
    std::vector<orch::StepSpec> spec;
    for (int s = 0; s < steps; ++s)
      spec.push_back({s % 2 ? orch::StepKind::kReproduce : orch::StepKind::kBuild,
                      {{"fail", pick(0, 9) == 0}}});
    ids.push_back(sched.submit_job(spec));
  }
  std::vector<orch::ResultEnvelope> history;
  for (int round = 0; round < 400; ++round) {
    switch (pick(0, 5)) {
      case 0:
      case 1: {
        auto& w = cluster.workers()[static_cast<size_t>(pick(0, static_cast<int>(cluster.workers().size()) - 1))];
        if (pick(0, 7) == 0) w->lose_next(1);
        w->run_once(std::chrono::milliseconds(0));
        break;
      }
      case 2:
      case 3: {
        auto m = cluster.queue().receive(orch::kResultsTopic, std::chrono::milliseconds(0));
        if (!m) break;
        auto env = m->payload.get<orch::ResultEnvelope>();
        if (env.type == "result") history.push_back(env);
        // Occasionally deliver the same envelope twice.
        const int copies = pick(0, 4) == 0 ? 2 : 1;
        for (int c = 0; c < copies; ++c) {
          if (env.type == "started")
            sched.handle_step_started(env);
          else
            sched.handle_worker_result(env);
        }
        cluster.queue().ack(orch::kResultsTopic, m->message_id);
        break;
      }
      case 4:
        if (!history.empty())
          sched.handle_worker_result(history[static_cast<size_t>(pick(0, static_cast<int>(history.size()) - 1))]);
        break;
      case 5:
        clock.advance(pick(0, 40) * orch::kMinuteMs);
        cluster.queue().sweep();
        break;
    }
  }
  // Let everything settle.
  for (int i = 0; i < 10; ++i) {
    cluster.drain();
    clock.advance(31 * orch::kMinuteMs);
    cluster.queue().sweep();
  }
  cluster.drain();

  InterleavingReport report;
  report.audit_problems = orch::audit_event_log(cluster.store().events());
  for (const auto& id : ids) {
    const auto job = sched.query_status(id);
    if (!orch::is_terminal(job.status)) ++report.unfinished;
    if (sequential_replay(cluster.store().events(id), static_cast<int>(job.steps.size())) != job.status)
      ++report.replay_mismatches;
  }
  return report;
}

}  // namespace crashgym::testing
