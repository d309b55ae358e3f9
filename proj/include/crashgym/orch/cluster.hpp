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

// Workers and an in-process cluster wiring store, queue, scheduler and
// worker pools together.

#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "crashgym/orch/queue.hpp"
#include "crashgym/orch/scheduler.hpp"
#include "crashgym/orch/store.hpp"

namespace crashgym::orch {

struct StepContext {
  std::string job_id;
  int step_index = 0;
  int attempt = 0;
  std::string worker_id;
};

class StepExecutor {
 public:
  virtual ~StepExecutor() = default;
  // May throw crashgym::Error; the worker turns it into a failed result
  // whose output carries "infrastructure": true for infrastructure errors.
  virtual StepResult execute(StepKind kind, const nlohmann::json& params,
                             const StepContext& context) = 0;
};

StepResult run_executor(StepExecutor& executor, StepKind kind, const nlohmann::json& params,
                        const StepContext& context);

class Worker {
 public:
  Worker(std::string id, std::string topic, MessageQueue& queue, StepExecutor& executor);

  // Receives, executes and reports one message. False when none arrived.
  bool run_once(std::chrono::milliseconds wait);

  // Test hook: the next `n` received messages are dropped without an ack
  // or result, as if the worker died mid-step.
  void lose_next(int n) { lose_ += n; }

  const std::string& id() const { return id_; }
  const std::string& topic() const { return topic_; }

 private:
  std::string id_;
  std::string topic_;
  MessageQueue& queue_;
  StepExecutor& executor_;
  std::atomic<int> lose_{0};
};

struct ClusterOptions {
  std::filesystem::path db_path;
  // Worker count per topic.
  std::map<std::string, int> workers = {{"build", 1}, {"reproduce", 1}, {"retrieve", 1}};
  QueueOptions queue;
  SchedulerOptions scheduler;
};

class LocalCluster {
 public:
  LocalCluster(ClusterOptions options,
               std::map<std::string, std::shared_ptr<StepExecutor>> executors,
               const Clock& clock);
  ~LocalCluster();
  LocalCluster(const LocalCluster&) = delete;
  LocalCluster& operator=(const LocalCluster&) = delete;

  Scheduler& scheduler() { return scheduler_; }
  JobStore& store() { return store_; }
  InProcessQueue& queue() { return queue_; }
  std::vector<std::unique_ptr<Worker>>& workers() { return workers_; }

  // Background threads for the scheduler loop and every worker.
  void start();
  void stop();

  // Single-threaded alternative to start(): alternates workers and the
  // scheduler until nothing is ready.
  void drain();

  // Submits and waits (threaded) or drains (inline) until terminal.
  Job run_job(const std::vector<StepSpec>& steps);
  Job await_job(const std::string& job_id);

 private:
  ClusterOptions options_;
  std::map<std::string, std::shared_ptr<StepExecutor>> executors_;
  const Clock& clock_;
  JobStore store_;
  InProcessQueue queue_;
  Scheduler scheduler_;
  std::vector<std::unique_ptr<Worker>> workers_;
  std::vector<std::thread> threads_;
  std::atomic<bool> running_{false};
};

struct ThroughputConfig {
  int builders = 10;
  int reproducers = 10;
  std::int64_t build_ms = 15 * kMinuteMs;
  std::int64_t reproduce_ms = 10 * kMinuteMs;
  std::int64_t horizon_ms = 24 * 60 * kMinuteMs;
  int jobs = 1200;
};

struct ThroughputReport {
  int submitted = 0;
  int completed_pairs = 0;
  std::int64_t last_completion_ms = 0;
  std::vector<std::string> audit_problems;
};

// Discrete-event run of build+reproduce jobs through the real scheduler,
// queue and store, with step durations on a simulated clock.
ThroughputReport simulate_throughput(const ThroughputConfig& config);

}  // namespace crashgym::orch
