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

#include "crashgym/orch/types.hpp"

#include <cstdio>
#include <random>

#include "crashgym/errors.hpp"

namespace crashgym::orch {
namespace {

template <typename E, size_t N>
E from_table(const std::string& s, const std::pair<E, const char*> (&table)[N], const char* what) {
  for (const auto& [e, name] : table)
    if (s == name) return e;
  throw ValidationError(std::string("unknown ") + what + ": " + s);
}

template <typename E, size_t N>
std::string to_table(E e, const std::pair<E, const char*> (&table)[N]) {
  for (const auto& [v, name] : table)
    if (v == e) return name;
  return "unknown";
}

constexpr std::pair<JobStatus, const char*> kJobStatus[] = {
    {JobStatus::kQueued, "Queued"},
    {JobStatus::kRunning, "Running"},
    {JobStatus::kSucceeded, "Succeeded"},
    {JobStatus::kFailed, "Failed"},
    {JobStatus::kCancelled, "Cancelled"}};

constexpr std::pair<StepKind, const char*> kStepKind[] = {
    {StepKind::kBuild, "build"},
    {StepKind::kReproduce, "reproduce"},
    {StepKind::kParallelReproduce, "parallel_reproduce"},
    {StepKind::kRetrieveFile, "retrieve_file"},
    {StepKind::kCollectKernelLog, "collect_kernel_log"}};

constexpr std::pair<StepStatus, const char*> kStepStatus[] = {
    {StepStatus::kPending, "Pending"},
    {StepStatus::kDispatched, "Dispatched"},
    {StepStatus::kRunning, "Running"},
    {StepStatus::kSucceeded, "Succeeded"},
    {StepStatus::kFailed, "Failed"}};

}  // namespace

std::string to_string(JobStatus s) { return to_table(s, kJobStatus); }
std::string to_string(StepKind k) { return to_table(k, kStepKind); }
std::string to_string(StepStatus s) { return to_table(s, kStepStatus); }
JobStatus job_status_from_string(const std::string& s) { return from_table(s, kJobStatus, "job status"); }
StepKind step_kind_from_string(const std::string& s) { return from_table(s, kStepKind, "step kind"); }
StepStatus step_status_from_string(const std::string& s) {
  return from_table(s, kStepStatus, "step status");
}

bool is_terminal(JobStatus s) {
  return s == JobStatus::kSucceeded || s == JobStatus::kFailed || s == JobStatus::kCancelled;
}

bool is_terminal(StepStatus s) { return s == StepStatus::kSucceeded || s == StepStatus::kFailed; }

std::string topic_for(StepKind kind) {
  switch (kind) {
    case StepKind::kBuild: return "build";
    case StepKind::kRetrieveFile: return "retrieve";
    case StepKind::kReproduce:
    case StepKind::kParallelReproduce:
    case StepKind::kCollectKernelLog: return "reproduce";
  }
  return "build";
}

void to_json(nlohmann::json& j, const StepResult& r) {
  j = {{"ok", r.ok}, {"output", r.output}, {"artifact_ref", nullptr}};
  if (r.artifact_ref) j["artifact_ref"] = *r.artifact_ref;
  if (!r.error.empty()) j["error"] = r.error;
  if (!r.message.empty()) j["message"] = r.message;
}

void from_json(const nlohmann::json& j, StepResult& r) {
  r.ok = j.at("ok").get<bool>();
  r.output = j.value("output", nlohmann::json::object());
  r.artifact_ref.reset();
  if (j.contains("artifact_ref") && !j["artifact_ref"].is_null())
    r.artifact_ref = j["artifact_ref"].get<std::string>();
  r.error = j.value("error", "");
  r.message = j.value("message", "");
}

void to_json(nlohmann::json& j, const JobStep& s) {
  j = {{"kind", to_string(s.kind)},
       {"params", s.params},
       {"status", to_string(s.status)},
       {"attempt", s.attempt},
       {"worker_id", nullptr},
       {"result", nullptr}};
  if (s.worker_id) j["worker_id"] = *s.worker_id;
  if (s.result) j["result"] = *s.result;
}

void to_json(nlohmann::json& j, const Job& job) {
  nlohmann::json artifacts = nlohmann::json::object();
  for (const auto& [i, ref] : job.artifacts) artifacts[std::to_string(i)] = ref;
  j = {{"job_id", job.job_id},
       {"status", to_string(job.status)},
       {"created_at", job.created_at},
       {"updated_at", job.updated_at},
       {"steps", job.steps},
       {"artifacts", artifacts}};
}

void from_json(const nlohmann::json& j, Job& job) {
  job.job_id = j.at("job_id").get<std::string>();
  job.status = job_status_from_string(j.at("status").get<std::string>());
  job.created_at = j.value("created_at", std::int64_t{0});
  job.updated_at = j.value("updated_at", std::int64_t{0});
  job.steps.clear();
  for (const auto& s : j.at("steps")) {
    JobStep step;
    step.kind = step_kind_from_string(s.at("kind").get<std::string>());
    step.params = s.value("params", nlohmann::json::object());
    step.status = step_status_from_string(s.at("status").get<std::string>());
    step.attempt = s.value("attempt", 0);
    if (s.contains("worker_id") && !s["worker_id"].is_null())
      step.worker_id = s["worker_id"].get<std::string>();
    if (s.contains("result") && !s["result"].is_null()) step.result = s["result"].get<StepResult>();
    job.steps.push_back(std::move(step));
  }
  job.artifacts.clear();
  for (const auto& [k, v] : j.value("artifacts", nlohmann::json::object()).items())
    job.artifacts[std::stoi(k)] = v.get<std::string>();
}

void to_json(nlohmann::json& j, const ResultEnvelope& e) {
  j = {{"type", e.type},
       {"job_id", e.job_id},
       {"step_index", e.step_index},
       {"attempt", e.attempt},
       {"worker_id", e.worker_id},
       {"result", e.result}};
}

void from_json(const nlohmann::json& j, ResultEnvelope& e) {
  e.type = j.value("type", "result");
  e.job_id = j.at("job_id").get<std::string>();
  e.step_index = j.at("step_index").get<int>();
  e.attempt = j.at("attempt").get<int>();
  e.worker_id = j.value("worker_id", "");
  e.result = j.contains("result") ? j["result"].get<StepResult>() : StepResult{};
}

std::vector<StepSpec> parse_job_spec(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("steps") || !spec["steps"].is_array())
    throw ValidationError("job spec must be an object with a \"steps\" array");
  std::vector<StepSpec> steps;
  for (const auto& s : spec["steps"]) {
    if (!s.is_object() || !s.contains("kind") || !s["kind"].is_string())
      throw ValidationError("each step needs a string \"kind\"");
    StepSpec step;
    step.kind = step_kind_from_string(s["kind"].get<std::string>());
    step.params = s.value("params", nlohmann::json::object());
    if (!step.params.is_object()) throw ValidationError("step params must be an object");
    steps.push_back(std::move(step));
  }
  return steps;
}

nlohmann::json to_job_spec(const std::vector<StepSpec>& steps) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : steps) arr.push_back({{"kind", to_string(s.kind)}, {"params", s.params}});
  return {{"steps", arr}};
}

std::string new_uuid() {
  thread_local std::mt19937_64 rng(std::random_device{}() ^
                                   (static_cast<std::uint64_t>(std::random_device{}()) << 32));
  const std::uint64_t hi = rng();
  const std::uint64_t lo = rng();
  unsigned char b[16];
  for (int i = 0; i < 8; ++i) {
    b[i] = static_cast<unsigned char>(hi >> (56 - 8 * i));
    b[8 + i] = static_cast<unsigned char>(lo >> (56 - 8 * i));
  }
  b[6] = static_cast<unsigned char>((b[6] & 0x0f) | 0x40);
  b[8] = static_cast<unsigned char>((b[8] & 0x3f) | 0x80);
  char out[37];
  std::snprintf(out, sizeof(out),
                "%02x%02x%02x%02x-%02x%02x-%02x%02x-%02x%02x-%02x%02x%02x%02x%02x%02x", b[0], b[1],
                b[2], b[3], b[4], b[5], b[6], b[7], b[8], b[9], b[10], b[11], b[12], b[13], b[14],
                b[15]);
  return out;
}

}  // namespace crashgym::orch
