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

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace crashgym::orch {

enum class JobStatus { kQueued, kRunning, kSucceeded, kFailed, kCancelled };
enum class StepKind { kBuild, kReproduce, kParallelReproduce, kRetrieveFile, kCollectKernelLog };
enum class StepStatus { kPending, kDispatched, kRunning, kSucceeded, kFailed };

std::string to_string(JobStatus s);
std::string to_string(StepKind k);
std::string to_string(StepStatus s);
JobStatus job_status_from_string(const std::string& s);
StepKind step_kind_from_string(const std::string& s);
StepStatus step_status_from_string(const std::string& s);

bool is_terminal(JobStatus s);
bool is_terminal(StepStatus s);

// Queue topic serving a step kind.
std::string topic_for(StepKind kind);
inline constexpr const char* kResultsTopic = "results";

struct StepResult {
  bool ok = false;
  // Kind-specific output. Keys are merged into the next step's params.
  nlohmann::json output = nlohmann::json::object();
  std::optional<std::string> artifact_ref;
  // Error code for failures ("PatchRejected", "WorkerLost", ...).
  std::string error;
  std::string message;

  friend bool operator==(const StepResult&, const StepResult&) = default;
};

struct JobStep {
  StepKind kind = StepKind::kBuild;
  nlohmann::json params = nlohmann::json::object();
  StepStatus status = StepStatus::kPending;
  int attempt = 0;
  std::optional<std::string> worker_id;
  std::optional<StepResult> result;

  friend bool operator==(const JobStep&, const JobStep&) = default;
};

struct Job {
  std::string job_id;
  std::vector<JobStep> steps;
  JobStatus status = JobStatus::kQueued;
  std::int64_t created_at = 0;
  std::int64_t updated_at = 0;
  std::map<int, std::string> artifacts;

  friend bool operator==(const Job&, const Job&) = default;
};

struct StepSpec {
  StepKind kind = StepKind::kBuild;
  nlohmann::json params = nlohmann::json::object();
};

struct QueueMessage {
  std::string message_id;
  std::string job_id;
  int step_index = 0;
  int attempt = 0;
  nlohmann::json payload = nlohmann::json::object();
  int delivery_count = 0;
};

// A worker's report for one (job_id, step_index, attempt): either that it
// started ("started") or its outcome ("result").
struct ResultEnvelope {
  std::string type = "result";
  std::string job_id;
  int step_index = 0;
  int attempt = 0;
  std::string worker_id;
  StepResult result;
};

void to_json(nlohmann::json& j, const StepResult& r);
void from_json(const nlohmann::json& j, StepResult& r);
void to_json(nlohmann::json& j, const JobStep& s);
void to_json(nlohmann::json& j, const Job& job);
void from_json(const nlohmann::json& j, Job& job);
void to_json(nlohmann::json& j, const ResultEnvelope& e);
void from_json(const nlohmann::json& j, ResultEnvelope& e);

// Parses `{"steps":[{"kind":"build","params":{...}}, ...]}`.
std::vector<StepSpec> parse_job_spec(const nlohmann::json& spec);
nlohmann::json to_job_spec(const std::vector<StepSpec>& steps);

std::string new_uuid();

}  // namespace crashgym::orch
