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

#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crashgym/orch/queue.hpp"
#include "crashgym/orch/store.hpp"
#include "crashgym/orch/types.hpp"

namespace crashgym::orch {

// Thrown by a test crash hook to abandon a scheduler mid-operation.
struct SimulatedCrash {
  std::string point;
};

struct SchedulerOptions {
  // Throws ValidationError for bad params. `has_predecessor` is true for
  // every step but the first, whose inputs may come from earlier outputs.
  std::function<void(StepKind, const nlohmann::json& params, bool has_predecessor)> validate_step;
  // Test-only: called at named points between persisting and publishing.
  std::function<void(std::string_view point)> crash_hook;
};

enum class ResultDisposition { kApplied, kDuplicate, kStale };

// Single logical writer of the job store. All public methods are safe to
// call from any thread; state transitions are serialized.
class Scheduler {
 public:
  Scheduler(JobStore& store, MessageQueue& queue, const Clock& clock,
            SchedulerOptions options = {});

  std::string submit_job(const std::vector<StepSpec>& steps);

  // Throws UnknownJob. Results for terminal steps are duplicates; results
  // older than the stored attempt, for undispatched steps, or for
  // cancelled jobs are stale. Both are logged and otherwise ignored.
  ResultDisposition handle_worker_result(const ResultEnvelope& envelope);
  void handle_step_started(const ResultEnvelope& envelope);

  // Queue callbacks for visibility timeouts.
  void on_redelivered(const std::string& topic, const QueueMessage& message);
  void on_dead_letter(const std::string& topic, const QueueMessage& message);

  // Re-enqueues every Dispatched or Running step with attempt + 1. Returns
  // the number of jobs resumed.
  int recover();

  Job query_status(const std::string& job_id);
  std::vector<std::string> list_jobs();
  void cancel_job(const std::string& job_id);

  // Blocks until the job is terminal or the timeout passes.
  Job wait(const std::string& job_id, std::chrono::milliseconds timeout);

  // Handles one message from the results topic, waiting up to `wait`.
  bool process_one(std::chrono::milliseconds wait);

 private:
  void publish_step(const Job& job, int index);
  void crash_point(std::string_view point);
  void event(const std::string& job_id, int step, int attempt, const std::string& type,
             nlohmann::json detail = nlohmann::json::object());
  Job load(const std::string& job_id);

  JobStore& store_;
  MessageQueue& queue_;
  const Clock& clock_;
  SchedulerOptions options_;
  std::mutex mu_;
  std::condition_variable changed_;
};

// Violations of the step-ordering and single-application rules found in an
// event log; empty when the log is clean.
std::vector<std::string> audit_event_log(const std::vector<Event>& events);

}  // namespace crashgym::orch
