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

#include "crashgym/orch/scheduler.hpp"

#include <map>
#include <set>

#include "crashgym/errors.hpp"

namespace crashgym::orch {

Scheduler::Scheduler(JobStore& store, MessageQueue& queue, const Clock& clock,
                     SchedulerOptions options)
    : store_(store), queue_(queue), clock_(clock), options_(std::move(options)) {}

void Scheduler::crash_point(std::string_view point) {
  if (options_.crash_hook) options_.crash_hook(point);
}

void Scheduler::event(const std::string& job_id, int step, int attempt, const std::string& type,
                      nlohmann::json detail) {
  Event e;
  e.job_id = job_id;
  e.step_index = step;
  e.attempt = attempt;
  e.type = type;
  e.detail = std::move(detail);
  e.at = clock_.now_ms();
  store_.append_event(e);
}

Job Scheduler::load(const std::string& job_id) {
  auto job = store_.load_job(job_id);
  if (!job) throw UnknownJob("unknown job " + job_id);
  return std::move(*job);
}

void Scheduler::publish_step(const Job& job, int index) {
  const JobStep& step = job.steps[static_cast<size_t>(index)];
  QueueMessage m;
  m.job_id = job.job_id;
  m.step_index = index;
  m.attempt = step.attempt;
  m.payload = {{"kind", to_string(step.kind)}, {"params", step.params}};
  queue_.publish(topic_for(step.kind), std::move(m));
}

std::string Scheduler::submit_job(const std::vector<StepSpec>& steps) {
  if (steps.empty()) throw ValidationError("a job needs at least one step");
  for (size_t i = 0; i < steps.size(); ++i) {
    if (!steps[i].params.is_object()) throw ValidationError("step params must be an object");
    if (options_.validate_step) options_.validate_step(steps[i].kind, steps[i].params, i > 0);
  }
  Job job;
  job.job_id = new_uuid();
  job.created_at = job.updated_at = clock_.now_ms();
  job.status = JobStatus::kQueued;
  for (const auto& s : steps) {
    JobStep step;
    step.kind = s.kind;
    step.params = s.params;
    job.steps.push_back(std::move(step));
  }
  job.steps[0].status = StepStatus::kDispatched;
  {
    std::lock_guard lock(mu_);
    JobStore::Transaction tx(store_);
    store_.insert_job(job);
    event(job.job_id, -1, 0, "submitted", {{"steps", static_cast<int>(steps.size())}});
    event(job.job_id, 0, 0, "dispatched");
    tx.commit();
    crash_point("submit:after_commit");
    publish_step(job, 0);
  }
  changed_.notify_all();
  return job.job_id;
}

ResultDisposition Scheduler::handle_worker_result(const ResultEnvelope& env) {
  ResultDisposition disposition = ResultDisposition::kApplied;
  {
    std::lock_guard lock(mu_);
    JobStore::Transaction tx(store_);
    Job job = load(env.job_id);
    if (env.step_index < 0 || env.step_index >= static_cast<int>(job.steps.size()))
      throw ValidationError("result for nonexistent step " + std::to_string(env.step_index));
    JobStep& step = job.steps[static_cast<size_t>(env.step_index)];
    const nlohmann::json who = {{"worker_id", env.worker_id}, {"ok", env.result.ok}};
    if (is_terminal(step.status)) {
      event(env.job_id, env.step_index, env.attempt, "duplicate_ignored", who);
      tx.commit();
      return ResultDisposition::kDuplicate;
    }
    if (job.status == JobStatus::kCancelled || step.status == StepStatus::kPending ||
        env.attempt < step.attempt) {
      event(env.job_id, env.step_index, env.attempt, "stale_ignored", who);
      tx.commit();
      return ResultDisposition::kStale;
    }

    const std::int64_t now = clock_.now_ms();
    step.status = env.result.ok ? StepStatus::kSucceeded : StepStatus::kFailed;
    step.result = env.result;
    step.attempt = env.attempt;
    step.worker_id = env.worker_id;
    store_.update_step(env.job_id, env.step_index, step);
    std::optional<int> next;
    if (env.result.ok) {
      if (env.result.artifact_ref)
        store_.set_artifact(env.job_id, env.step_index, *env.result.artifact_ref);
      event(env.job_id, env.step_index, env.attempt, "succeeded", who);
      const int n = env.step_index + 1;
      if (n < static_cast<int>(job.steps.size())) {
        JobStep& following = job.steps[static_cast<size_t>(n)];
        if (env.result.output.is_object())
          for (const auto& [key, value] : env.result.output.items())
            if (!following.params.contains(key)) following.params[key] = value;
        following.status = StepStatus::kDispatched;
        store_.update_step(env.job_id, n, following);
        event(env.job_id, n, following.attempt, "dispatched");
        job.status = JobStatus::kRunning;
        next = n;
      } else {
        job.status = JobStatus::kSucceeded;
        event(env.job_id, -1, 0, "job_succeeded");
      }
    } else {
      event(env.job_id, env.step_index, env.attempt, "failed",
            {{"worker_id", env.worker_id}, {"error", env.result.error}});
      job.status = JobStatus::kFailed;
      event(env.job_id, -1, 0, "job_failed");
    }
    store_.update_job_status(env.job_id, job.status, now);
    crash_point("result:before_commit");
    tx.commit();
    crash_point("result:after_commit");
    if (next) publish_step(job, *next);
    crash_point("result:after_publish");
  }
  changed_.notify_all();
  return disposition;
}

void Scheduler::handle_step_started(const ResultEnvelope& env) {
  std::lock_guard lock(mu_);
  JobStore::Transaction tx(store_);
  Job job = load(env.job_id);
  if (env.step_index < 0 || env.step_index >= static_cast<int>(job.steps.size())) return;
  JobStep& step = job.steps[static_cast<size_t>(env.step_index)];
  if (step.status != StepStatus::kDispatched || env.attempt < step.attempt ||
      is_terminal(job.status))
    return;
  step.status = StepStatus::kRunning;
  step.attempt = env.attempt;
  step.worker_id = env.worker_id;
  store_.update_step(env.job_id, env.step_index, step);
  if (job.status == JobStatus::kQueued)
    store_.update_job_status(env.job_id, JobStatus::kRunning, clock_.now_ms());
  event(env.job_id, env.step_index, env.attempt, "started", {{"worker_id", env.worker_id}});
  tx.commit();
}

void Scheduler::on_redelivered(const std::string& topic, const QueueMessage& m) {
  if (topic == kResultsTopic) return;
  std::lock_guard lock(mu_);
  JobStore::Transaction tx(store_);
  auto job = store_.load_job(m.job_id);
  if (!job || is_terminal(job->status)) return;
  JobStep& step = job->steps.at(static_cast<size_t>(m.step_index));
  if (is_terminal(step.status) || m.attempt <= step.attempt) return;
  step.attempt = m.attempt;
  step.status = StepStatus::kDispatched;
  step.worker_id.reset();
  store_.update_step(m.job_id, m.step_index, step);
  event(m.job_id, m.step_index, m.attempt, "redelivered");
  event(m.job_id, m.step_index, m.attempt, "dispatched");
  tx.commit();
}

void Scheduler::on_dead_letter(const std::string& topic, const QueueMessage& m) {
  if (topic == kResultsTopic) return;
  {
    std::lock_guard lock(mu_);
    JobStore::Transaction tx(store_);
    auto job = store_.load_job(m.job_id);
    if (!job || is_terminal(job->status)) return;
    JobStep& step = job->steps.at(static_cast<size_t>(m.step_index));
    if (is_terminal(step.status) || m.attempt < step.attempt) return;
    StepResult lost;
    lost.ok = false;
    lost.error = "WorkerLost";
    lost.message = "no result after " + std::to_string(m.delivery_count) + " deliveries";
    step.status = StepStatus::kFailed;
    step.result = lost;
    store_.update_step(m.job_id, m.step_index, step);
    store_.update_job_status(m.job_id, JobStatus::kFailed, clock_.now_ms());
    event(m.job_id, m.step_index, m.attempt, "timeout", {{"deliveries", m.delivery_count}});
    event(m.job_id, -1, 0, "job_failed");
    tx.commit();
  }
  changed_.notify_all();
}

int Scheduler::recover() {
  std::vector<std::pair<Job, int>> to_publish;
  {
    std::lock_guard lock(mu_);
    JobStore::Transaction tx(store_);
    for (const auto& [job_id, index] : store_.inflight_steps()) {
      Job job = load(job_id);
      JobStep& step = job.steps[static_cast<size_t>(index)];
      ++step.attempt;
      step.status = StepStatus::kDispatched;
      step.worker_id.reset();
      store_.update_step(job_id, index, step);
      event(job_id, index, step.attempt, "recovered");
      event(job_id, index, step.attempt, "dispatched");
      to_publish.emplace_back(std::move(job), index);
    }
    tx.commit();
  }
  std::set<std::string> jobs;
  for (const auto& [job, index] : to_publish) {
    publish_step(job, index);
    jobs.insert(job.job_id);
  }
  return static_cast<int>(jobs.size());
}

Job Scheduler::query_status(const std::string& job_id) {
  std::lock_guard lock(mu_);
  return load(job_id);
}

std::vector<std::string> Scheduler::list_jobs() {
  std::lock_guard lock(mu_);
  return store_.job_ids();
}

void Scheduler::cancel_job(const std::string& job_id) {
  {
    std::lock_guard lock(mu_);
    JobStore::Transaction tx(store_);
    Job job = load(job_id);
    if (is_terminal(job.status)) return;
    store_.update_job_status(job_id, JobStatus::kCancelled, clock_.now_ms());
    event(job_id, -1, 0, "job_cancelled");
    tx.commit();
  }
  changed_.notify_all();
}

Job Scheduler::wait(const std::string& job_id, std::chrono::milliseconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  std::unique_lock lock(mu_);
  for (;;) {
    Job job = load(job_id);
    if (is_terminal(job.status)) return job;
    if (changed_.wait_until(lock, deadline) == std::cv_status::timeout) return load(job_id);
  }
}

bool Scheduler::process_one(std::chrono::milliseconds wait) {
  auto m = queue_.receive(kResultsTopic, wait);
  if (!m) return false;
  ResultEnvelope env = m->payload.get<ResultEnvelope>();
  try {
    if (env.type == "started")
      handle_step_started(env);
    else
      handle_worker_result(env);
  } catch (const UnknownJob&) {
    // Nothing to attach the result to; drop it.
  }
  queue_.ack(kResultsTopic, m->message_id);
  return true;
}

std::vector<std::string> audit_event_log(const std::vector<Event>& events) {
  std::vector<std::string> problems;
  std::map<std::pair<std::string, int>, int> terminal;
  std::set<std::pair<std::string, int>> succeeded;
  for (const auto& e : events) {
    const auto key = std::pair{e.job_id, e.step_index};
    if (e.type == "succeeded" || e.type == "failed" || e.type == "timeout") {
      if (++terminal[key] > 1)
        problems.push_back(e.job_id + " step " + std::to_string(e.step_index) +
                           " reached a terminal state twice");
      if (e.type == "succeeded") succeeded.insert(key);
    } else if (e.type == "dispatched" && e.step_index > 0) {
      if (!succeeded.count({e.job_id, e.step_index - 1}))
        problems.push_back(e.job_id + " step " + std::to_string(e.step_index) +
                           " dispatched before step " + std::to_string(e.step_index - 1) +
                           " succeeded");
    }
  }
  return problems;
}

}  // namespace crashgym::orch
