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

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "crashgym/build/builder.hpp"
#include "crashgym/orch/cluster.hpp"
#include "crashgym/repro/reproducer.hpp"

namespace crashgym::worker {

namespace fs = std::filesystem;

// Output: {"image", "source_digest"}; the image id is also the artifact.
class BuildExecutor : public orch::StepExecutor {
 public:
  explicit BuildExecutor(build::Builder& builder) : builder_(builder) {}
  orch::StepResult execute(orch::StepKind kind, const nlohmann::json& params,
                           const orch::StepContext& ctx) override;

 private:
  build::Builder& builder_;
};

// Reproduce, ParallelReproduce (vm_count defaults to 4) and
// CollectKernelLog. Without a "seed" param the seed comes from the job id.
class ReproduceExecutor : public orch::StepExecutor {
 public:
  explicit ReproduceExecutor(repro::Reproducer& reproducer) : reproducer_(reproducer) {}
  orch::StepResult execute(orch::StepKind kind, const nlohmann::json& params,
                           const orch::StepContext& ctx) override;

 private:
  repro::Reproducer& reproducer_;
};

// Params {git_url, commit_id, path}; output {"found", "content"}.
class RetrieveExecutor : public orch::StepExecutor {
 public:
  explicit RetrieveExecutor(build::GitCache& cache) : cache_(cache) {}
  orch::StepResult execute(orch::StepKind kind, const nlohmann::json& params,
                           const orch::StepContext& ctx) override;

 private:
  build::GitCache& cache_;
};

// Submission-time check used by the scheduler.
void validate_step_params(orch::StepKind kind, const nlohmann::json& params, bool has_predecessor);

struct StackConfig {
  fs::path home;
  // "mock" or "shell".
  std::string backend = "mock";
  std::string build_command;
  std::string vm_command;
};

// Everything a host needs to run the three worker pools.
class WorkerStack {
 public:
  explicit WorkerStack(const StackConfig& config);

  build::GitCache& git() { return cache_; }
  build::ArtifactStore& artifacts() { return store_; }
  build::Builder& builder() { return *builder_; }
  repro::Reproducer& reproducer() { return *reproducer_; }
  std::map<std::string, std::shared_ptr<orch::StepExecutor>> executors();

 private:
  build::GitCache cache_;
  build::ArtifactStore store_;
  std::unique_ptr<build::CompileBackend> compile_;
  std::unique_ptr<repro::VmBackend> vm_;
  std::unique_ptr<build::Builder> builder_;
  std::unique_ptr<repro::Reproducer> reproducer_;
};

orch::SchedulerOptions default_scheduler_options();

}  // namespace crashgym::worker
