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

#include "crashgym/worker/executors.hpp"

#include "crashgym/errors.hpp"
#include "crashgym/util/hash.hpp"

namespace crashgym::worker {
namespace {

repro::ReproduceSpec reproduce_spec(orch::StepKind kind, const nlohmann::json& params,
                                    const orch::StepContext& ctx) {
  nlohmann::json p = params;
  if (!p.contains("vm_count")) p["vm_count"] = kind == orch::StepKind::kParallelReproduce ? 4 : 1;
  auto spec = p.get<repro::ReproduceSpec>();
  if (!params.contains("seed"))
    spec.seed = util::stable_seed({ctx.job_id, std::to_string(ctx.step_index)});
  return spec;
}

}  // namespace

orch::StepResult BuildExecutor::execute(orch::StepKind kind, const nlohmann::json& params,
                                        const orch::StepContext&) {
  if (kind != orch::StepKind::kBuild) throw ValidationError("build worker got " + orch::to_string(kind));
  const auto artifact = builder_.build(params.get<build::BuildSpec>());
  orch::StepResult r;
  r.ok = true;
  r.artifact_ref = artifact.artifact_id;
  r.output = {{"image", artifact.artifact_id}, {"source_digest", artifact.source_digest}};
  return r;
}

orch::StepResult ReproduceExecutor::execute(orch::StepKind kind, const nlohmann::json& params,
                                            const orch::StepContext& ctx) {
  orch::StepResult r;
  r.ok = true;
  switch (kind) {
    case orch::StepKind::kReproduce: {
      auto spec = reproduce_spec(kind, params, ctx);
      const auto res = spec.vm_count > 1 ? reproducer_.parallel_reproduce(spec)
                                         : reproducer_.reproduce_once(spec);
      r.output = res;
      return r;
    }
    case orch::StepKind::kParallelReproduce: {
      const auto res = reproducer_.parallel_reproduce(reproduce_spec(kind, params, ctx));
      r.output = res;
      return r;
    }
    case orch::StepKind::kCollectKernelLog: {
      const auto ref = reproducer_.collect_kernel_log(params.value("run_id", ""));
      r.artifact_ref = ref;
      r.output = {{"kernel_log_ref", ref}};
      return r;
    }
    default:
      throw ValidationError("reproduce worker got " + orch::to_string(kind));
  }
}

orch::StepResult RetrieveExecutor::execute(orch::StepKind kind, const nlohmann::json& params,
                                           const orch::StepContext&) {
  if (kind != orch::StepKind::kRetrieveFile)
    throw ValidationError("retrieve worker got " + orch::to_string(kind));
  const auto content = cache_.read_file(params.value("git_url", ""), params.value("commit_id", ""),
                                        params.value("path", ""));
  orch::StepResult r;
  r.ok = true;
  r.output = {{"found", content.has_value()}, {"content", content.value_or("")}};
  return r;
}

void validate_step_params(orch::StepKind kind, const nlohmann::json& params, bool has_predecessor) {
  switch (kind) {
    case orch::StepKind::kBuild:
      build::validate(params.get<build::BuildSpec>());
      return;
    case orch::StepKind::kReproduce:
    case orch::StepKind::kParallelReproduce: {
      nlohmann::json p = params;
      if (has_predecessor && !p.contains("image")) p["image"] = "pending";
      repro::validate(p.get<repro::ReproduceSpec>());
      return;
    }
    case orch::StepKind::kCollectKernelLog:
      if (!has_predecessor && !params.contains("run_id"))
        throw ValidationError("collect_kernel_log needs run_id");
      return;
    case orch::StepKind::kRetrieveFile:
      for (const char* key : {"git_url", "commit_id", "path"})
        if (!params.contains(key)) throw ValidationError(std::string("retrieve_file needs ") + key);
      return;
  }
}

WorkerStack::WorkerStack(const StackConfig& config)
    : cache_(config.home / "git"), store_(config.home / "artifacts") {
  if (config.backend == "mock") {
    compile_ = std::make_unique<build::MockBackend>();
    vm_ = std::make_unique<repro::MockVmBackend>();
  } else if (config.backend == "shell") {
    if (config.build_command.empty() || config.vm_command.empty())
      throw ValidationError("shell backend needs build_command and vm_command");
    compile_ = std::make_unique<build::ShellBackend>(config.build_command);
    vm_ = std::make_unique<repro::ShellVmBackend>(config.vm_command);
  } else {
    throw ValidationError("unknown backend \"" + config.backend + "\"");
  }
  builder_ = std::make_unique<build::Builder>(cache_, store_, *compile_);
  reproducer_ = std::make_unique<repro::Reproducer>(store_, *vm_, config.home / "runs");
}

std::map<std::string, std::shared_ptr<orch::StepExecutor>> WorkerStack::executors() {
  return {{"build", std::make_shared<BuildExecutor>(*builder_)},
          {"reproduce", std::make_shared<ReproduceExecutor>(*reproducer_)},
          {"retrieve", std::make_shared<RetrieveExecutor>(cache_)}};
}

orch::SchedulerOptions default_scheduler_options() {
  orch::SchedulerOptions o;
  o.validate_step = validate_step_params;
  return o;
}

}  // namespace crashgym::worker
