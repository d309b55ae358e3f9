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

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crashgym/build/artifacts.hpp"
#include "crashgym/model/crash.hpp"
#include "crashgym/model/sample.hpp"

namespace crashgym::repro {

namespace fs = std::filesystem;

struct ReproduceSpec {
  std::string image;  // artifact id
  model::Reproducer reproducer;
  int timeout_minutes = 10;
  int vm_count = 1;
  std::uint64_t seed = 0;
};

void validate(const ReproduceSpec& spec);
void to_json(nlohmann::json& j, const ReproduceSpec& s);
void from_json(const nlohmann::json& j, ReproduceSpec& s);

struct ReproduceResult {
  bool crashed = false;
  std::optional<model::CrashReport> crash;
  double elapsed_seconds = 0;
  int vm_index = 0;
  std::optional<std::string> kernel_log_ref;
  // Handle for collect_kernel_log.
  std::string run_id;
};

void to_json(nlohmann::json& j, const ReproduceResult& r);
void from_json(const nlohmann::json& j, ReproduceResult& r);

// Console of one booted VM. Time is measured in seconds since boot.
class VmRun {
 public:
  virtual ~VmRun() = default;
  // Appends every console line emitted up to time `t`. Returns false once
  // the VM has exited and will produce nothing more.
  virtual bool poll(double t, std::vector<std::string>& lines) = 0;
};

class VmBackend {
 public:
  virtual ~VmBackend() = default;
  // Throws BootFailure.
  virtual std::unique_ptr<VmRun> boot(const fs::path& image, const model::Reproducer& reproducer,
                                      int vm_index, std::uint64_t seed) = 0;
};

// Plays back the behaviour embedded by build::MockBackend in simulated
// time. Reproducer ids are the first line of the reproducer text.
class MockVmBackend : public VmBackend {
 public:
  std::unique_ptr<VmRun> boot(const fs::path& image, const model::Reproducer& reproducer,
                              int vm_index, std::uint64_t seed) override;
};

std::string reproducer_id(const model::Reproducer& reproducer);

// Runs a command template per VM and treats its stdout as the serial
// console, in wall-clock time. Placeholders: {image}, {reproducer}, {vm}.
class ShellVmBackend : public VmBackend {
 public:
  explicit ShellVmBackend(std::string command_template,
                          std::chrono::milliseconds boot_timeout = std::chrono::minutes(5));
  std::unique_ptr<VmRun> boot(const fs::path& image, const model::Reproducer& reproducer,
                              int vm_index, std::uint64_t seed) override;

 private:
  std::string template_;
  std::chrono::milliseconds boot_timeout_;
};

struct MonitorOptions {
  double poll_interval_s = 0.5;
  // Console time collected after the title line for the full report.
  double report_grace_s = 2.0;
  std::vector<std::string> prefixes = model::default_title_prefixes();
};

class Reproducer {
 public:
  // Console logs of finished runs are kept under `runs_dir`.
  Reproducer(build::ArtifactStore& store, VmBackend& backend, fs::path runs_dir,
             MonitorOptions options = {});

  // Ignores spec.vm_count. Throws BootFailure, ArtifactMissing.
  ReproduceResult reproduce_once(const ReproduceSpec& spec, int vm_index = 0);

  // vm_count concurrent runs. The crash with the smallest elapsed time
  // wins, ties going to the lower vm_index; BootFailure only when every
  // VM failed to boot.
  ReproduceResult parallel_reproduce(const ReproduceSpec& spec);

  // Streams the run's console into an artifact. Throws LogUnavailable.
  std::string collect_kernel_log(const std::string& run_id);

 private:
  std::optional<ReproduceResult> monitor(const ReproduceSpec& spec, int vm_index, const fs::path& image,
                          const std::atomic<std::int64_t>* cancel_after_ms);

  build::ArtifactStore& store_;
  VmBackend& backend_;
  fs::path runs_dir_;
  MonitorOptions options_;
};

}  // namespace crashgym::repro
