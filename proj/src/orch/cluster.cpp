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

#include "crashgym/orch/cluster.hpp"

#include <algorithm>
#include <limits>

#include "crashgym/errors.hpp"

namespace crashgym::orch {

StepResult run_executor(StepExecutor& executor, StepKind kind, const nlohmann::json& params,
                        const StepContext& context) {
  try {
    return executor.execute(kind, params, context);
  } catch (const Error& e) {
    StepResult r;
    r.ok = false;
    r.error = e.code();
    r.message = e.what();
    r.output = {{"infrastructure", e.kind() == ErrorKind::kInfrastructure}};
    return r;
  } catch (const std::exception& e) {
    StepResult r;
    r.ok = false;
    r.error = "InfrastructureError";
    r.message = e.what();
    r.output = {{"infrastructure", true}};
    return r;
  }
}

Worker::Worker(std::string id, std::string topic, MessageQueue& queue, StepExecutor& executor)
    : id_(std::move(id)), topic_(std::move(topic)), queue_(queue), executor_(executor) {}

bool Worker::run_once(std::chrono::milliseconds wait) {
  auto m = queue_.receive(topic_, wait);
  if (!m) return false;
  if (lose_ > 0) {
    --lose_;
    return true;
  }
  ResultEnvelope env;
  env.job_id = m->job_id;
  env.step_index = m->step_index;
  env.attempt = m->attempt;
  env.worker_id = id_;
  env.type = "started";
  QueueMessage started;
  started.job_id = m->job_id;
  started.step_index = m->step_index;
  started.attempt = m->attempt;
  started.payload = env;
  queue_.publish(kResultsTopic, std::move(started));

  StepContext ctx{m->job_id, m->step_index, m->attempt, id_};
  StepKind kind = StepKind::kBuild;
  StepResult result;
  try {
    kind = step_kind_from_string(m->payload.at("kind").get<std::string>());
    result = run_executor(executor_, kind, m->payload.value("params", nlohmann::json::object()), ctx);
  } catch (const std::exception& e) {
    result.ok = false;
    result.error = "ValidationError";
    result.message = e.what();
  }
  env.type = "result";
  env.result = std::move(result);
  QueueMessage out;
  out.job_id = m->job_id;
  out.step_index = m->step_index;
  out.attempt = m->attempt;
  out.payload = env;
  queue_.publish(kResultsTopic, std::move(out));
  queue_.ack(topic_, m->message_id);
  return true;
}

LocalCluster::LocalCluster(ClusterOptions options,
                           std::map<std::string, std::shared_ptr<StepExecutor>> executors,
                           const Clock& clock)
    : options_(std::move(options)),
      executors_(std::move(executors)),
      clock_(clock),
      store_(options_.db_path),
      queue_(clock, options_.queue),
      scheduler_(store_, queue_, clock, options_.scheduler) {
  queue_.set_redelivery_listener(
      [this](const std::string& topic, const QueueMessage& m) { scheduler_.on_redelivered(topic, m); });
  queue_.set_dead_letter_listener(
      [this](const std::string& topic, const QueueMessage& m) { scheduler_.on_dead_letter(topic, m); });
  for (const auto& [topic, count] : options_.workers) {
    auto it = executors_.find(topic);
    if (it == executors_.end() || !it->second) continue;
    for (int i = 0; i < count; ++i)
      workers_.push_back(
          std::make_unique<Worker>(topic + "-" + std::to_string(i), topic, queue_, *it->second));
  }
}

LocalCluster::~LocalCluster() { stop(); }

void LocalCluster::start() {
  if (running_.exchange(true)) return;
  threads_.emplace_back([this] {
    while (running_) scheduler_.process_one(std::chrono::milliseconds(50));
  });
  for (auto& w : workers_) {
    Worker* worker = w.get();
    threads_.emplace_back([this, worker] {
      while (running_) worker->run_once(std::chrono::milliseconds(50));
    });
  }
}

void LocalCluster::stop() {
  running_ = false;
  for (auto& t : threads_)
    if (t.joinable()) t.join();
  threads_.clear();
}

void LocalCluster::drain() {
  bool progress = true;
  while (progress) {
    progress = false;
    for (auto& w : workers_)
      while (w->run_once(std::chrono::milliseconds(0))) progress = true;
    while (scheduler_.process_one(std::chrono::milliseconds(0))) progress = true;
  }
}

Job LocalCluster::run_job(const std::vector<StepSpec>& steps) {
  return await_job(scheduler_.submit_job(steps));
}

Job LocalCluster::await_job(const std::string& job_id) {
  if (running_) return scheduler_.wait(job_id, std::chrono::hours(24));
  drain();
  return scheduler_.query_status(job_id);
}

ThroughputReport simulate_throughput(const ThroughputConfig& config) {
  SimulatedClock clock;
  JobStore store(":memory:");
  InProcessQueue queue(clock);
  Scheduler scheduler(store, queue, clock);
  queue.set_redelivery_listener(
      [&](const std::string& t, const QueueMessage& m) { scheduler.on_redelivered(t, m); });
  queue.set_dead_letter_listener(
      [&](const std::string& t, const QueueMessage& m) { scheduler.on_dead_letter(t, m); });

  struct SimWorker {
    std::string id;
    std::string topic;
    std::int64_t duration;
    std::optional<QueueMessage> current;
    std::int64_t busy_until = 0;
  };
  std::vector<SimWorker> workers;
  for (int i = 0; i < config.builders; ++i)
    workers.push_back({"build-" + std::to_string(i), "build", config.build_ms, std::nullopt, 0});
  for (int i = 0; i < config.reproducers; ++i)
    workers.push_back(
        {"reproduce-" + std::to_string(i), "reproduce", config.reproduce_ms, std::nullopt, 0});

  ThroughputReport report;
  std::vector<std::string> ids;
  for (int j = 0; j < config.jobs; ++j) {
    ids.push_back(scheduler.submit_job(
        {{StepKind::kBuild, {{"commit_id", std::string(40, 'a')}}},
         {StepKind::kReproduce, {{"reproducer", "r"}}}}));
  }
  report.submitted = config.jobs;

  for (;;) {
    while (scheduler.process_one(std::chrono::milliseconds(0))) {
    }
    for (auto& w : workers) {
      if (w.current) continue;
      if (auto m = queue.receive(w.topic, std::chrono::milliseconds(0))) {
        w.current = std::move(*m);
        w.busy_until = clock.now_ms() + w.duration;
      }
    }
    std::int64_t next = std::numeric_limits<std::int64_t>::max();
    for (const auto& w : workers)
      if (w.current) next = std::min(next, w.busy_until);
    if (next == std::numeric_limits<std::int64_t>::max() || next > config.horizon_ms) break;
    clock.set(next);
    for (auto& w : workers) {
      if (!w.current || w.busy_until != next) continue;
      ResultEnvelope env;
      env.job_id = w.current->job_id;
      env.step_index = w.current->step_index;
      env.attempt = w.current->attempt;
      env.worker_id = w.id;
      env.result.ok = true;
      if (w.topic == "build") {
        env.result.output = {{"image", "img-" + env.job_id}};
        env.result.artifact_ref = "img-" + env.job_id;
      } else {
        env.result.output = {{"crashed", false}};
      }
      QueueMessage out;
      out.job_id = env.job_id;
      out.step_index = env.step_index;
      out.attempt = env.attempt;
      out.payload = env;
      queue.publish(kResultsTopic, std::move(out));
      queue.ack(w.topic, w.current->message_id);
      w.current.reset();
    }
  }
  while (scheduler.process_one(std::chrono::milliseconds(0))) {
  }
  for (const auto& id : ids) {
    const Job job = scheduler.query_status(id);
    if (job.status == JobStatus::kSucceeded && job.updated_at <= config.horizon_ms) {
      ++report.completed_pairs;
      report.last_completion_ms = std::max(report.last_completion_ms, job.updated_at);
    }
  }
  report.audit_problems = audit_event_log(store.events());
  return report;
}

}  // namespace crashgym::orch
