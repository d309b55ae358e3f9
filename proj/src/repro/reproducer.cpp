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

#include "crashgym/repro/reproducer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <thread>

#include "crashgym/build/builder.hpp"
#include "crashgym/errors.hpp"
#include "crashgym/orch/types.hpp"
#include "crashgym/util/fs.hpp"
#include "crashgym/util/hash.hpp"
#include "crashgym/util/process.hpp"
#include "crashgym/util/text.hpp"

namespace crashgym::repro {
namespace {

std::string stamp(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "[%12.6f] ", t);
  return buf;
}

class MockRun : public VmRun {
 public:
  explicit MockRun(std::vector<std::pair<double, std::string>> events)
      : events_(std::move(events)) {}

  bool poll(double t, std::vector<std::string>& lines) override {
    while (next_ < events_.size() && events_[next_].first <= t) lines.push_back(events_[next_++].second);
    return true;
  }

 private:
  std::vector<std::pair<double, std::string>> events_;
  size_t next_ = 0;
};

class ShellRun : public VmRun {
 public:
  ShellRun(std::unique_ptr<util::LineProcess> proc, util::TempDir scratch)
      : proc_(std::move(proc)), scratch_(std::move(scratch)), start_(Clock::now()) {}
  ~ShellRun() override { proc_->kill(); }

  // Waits for the first console line; false when the process exits first.
  bool await_boot(std::chrono::milliseconds limit) {
    std::string line;
    const auto s = proc_->read_line(limit, line);
    if (s != util::LineProcess::Status::kLine) return false;
    pending_ = std::move(line);
    return true;
  }

  bool poll(double t, std::vector<std::string>& lines) override {
    if (pending_) {
      lines.push_back(std::move(*pending_));
      pending_.reset();
    }
    if (done_) return false;
    const auto deadline = start_ + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(t));
    for (;;) {
      const auto now = Clock::now();
      const auto left = deadline > now ? std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
                                       : std::chrono::milliseconds(0);
      std::string line;
      const auto s = proc_->read_line(left, line);
      if (s == util::LineProcess::Status::kLine) {
        lines.push_back(std::move(line));
        continue;
      }
      if (s == util::LineProcess::Status::kEof) done_ = true;
      return !done_;
    }
  }

 private:
  using Clock = std::chrono::steady_clock;
  std::unique_ptr<util::LineProcess> proc_;
  util::TempDir scratch_;
  Clock::time_point start_;
  std::optional<std::string> pending_;
  bool done_ = false;
};

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size())
    s.replace(pos, from.size(), to);
  return s;
}

}  // namespace

void validate(const ReproduceSpec& spec) {
  std::vector<std::string> problems;
  if (spec.image.empty()) problems.push_back("image is empty");
  if (spec.timeout_minutes <= 0) problems.push_back("timeout_minutes must be positive");
  if (spec.vm_count < 1) problems.push_back("vm_count must be at least 1");
  if (!problems.empty()) throw ValidationError(util::join(problems, "; "));
}

void to_json(nlohmann::json& j, const ReproduceSpec& s) {
  j = {{"image", s.image},
       {"reproducer", s.reproducer},
       {"timeout_minutes", s.timeout_minutes},
       {"vm_count", s.vm_count},
       {"seed", s.seed}};
}

void from_json(const nlohmann::json& j, ReproduceSpec& s) {
  if (!j.is_object()) throw ValidationError("reproduce params must be an object");
  s.image = j.value("image", "");
  if (!j.contains("reproducer")) throw ValidationError("reproducer is missing");
  s.reproducer = j.at("reproducer").get<model::Reproducer>();
  s.timeout_minutes = j.value("timeout_minutes", 10);
  s.vm_count = j.value("vm_count", 1);
  s.seed = j.value("seed", std::uint64_t{0});
}

void to_json(nlohmann::json& j, const ReproduceResult& r) {
  j = {{"crashed", r.crashed},
       {"crash", r.crash ? nlohmann::json(*r.crash) : nlohmann::json(nullptr)},
       {"elapsed_seconds", r.elapsed_seconds},
       {"vm_index", r.vm_index},
       {"run_id", r.run_id}};
  if (r.kernel_log_ref) j["kernel_log_ref"] = *r.kernel_log_ref;
}

void from_json(const nlohmann::json& j, ReproduceResult& r) {
  r.crashed = j.value("crashed", false);
  r.crash.reset();
  if (j.contains("crash") && !j["crash"].is_null()) r.crash = j["crash"].get<model::CrashReport>();
  r.elapsed_seconds = j.value("elapsed_seconds", 0.0);
  r.vm_index = j.value("vm_index", 0);
  r.run_id = j.value("run_id", "");
  r.kernel_log_ref.reset();
  if (j.contains("kernel_log_ref")) r.kernel_log_ref = j["kernel_log_ref"].get<std::string>();
}

std::string reproducer_id(const model::Reproducer& reproducer) {
  const auto nl = reproducer.bytes.find('\n');
  return std::string(util::trim(std::string_view(reproducer.bytes).substr(0, nl)));
}

std::unique_ptr<VmRun> MockVmBackend::boot(const fs::path& image,
                                           const model::Reproducer& reproducer, int vm_index,
                                           std::uint64_t seed) {
  build::MockImage img;
  try {
    img = build::parse_mock_image(util::read_file(image));
  } catch (const ValidationError& e) {
    throw BootFailure(image.string() + ": " + e.what());
  }
  if (!img.boots) throw BootFailure("mock kernel did not reach login");

  const std::string id = reproducer_id(reproducer);
  std::vector<std::pair<double, std::string>> ev = {
      {0.0, stamp(0) + "Linux version 6.1.0-crashgym-mock (gcc) #1 SMP PREEMPT"},
      {0.0, stamp(0) + "Command line: console=ttyS0 root=/dev/sda1 panic_on_warn=1"},
      {1.2, stamp(1.2) + "Run /sbin/init as init process"},
      {2.0, stamp(2.0) + "syzkaller login: executing program " + id},
  };
  auto it = img.behaviors.find(id);
  if (it != img.behaviors.end()) {
    const auto& b = it->second;
    std::mt19937_64 rng(util::splitmix64(seed + util::splitmix64(static_cast<std::uint64_t>(vm_index))));
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u < b.crash_probability) {
      const double d = std::max(b.crash_delay_s, 2.0);
      const std::string p = stamp(d);
      const std::string fn = b.function.empty() ? "crashgym_fault" : b.function;
      for (const std::string& line :
           {std::string("=================================================================="),
            b.crash_title,
            "CPU: " + std::to_string(vm_index) + " PID: 3120 Comm: syz-executor Not tainted 6.1.0-crashgym-mock",
            std::string("Call Trace:"), std::string(" <TASK>"),
            " " + fn + "+0x1c4/0x2a0 " + b.location,
            std::string(" do_syscall_64+0x3d/0xb0 arch/x86/entry/common.c:80"),
            std::string(" entry_SYSCALL_64_after_hwframe+0x63/0xcd"), std::string(" </TASK>"),
            std::string("==================================================================")})
        ev.emplace_back(d, p + line);
    }
  }
  return std::make_unique<MockRun>(std::move(ev));
}

ShellVmBackend::ShellVmBackend(std::string command_template, std::chrono::milliseconds boot_timeout)
    : template_(std::move(command_template)), boot_timeout_(boot_timeout) {}

std::unique_ptr<VmRun> ShellVmBackend::boot(const fs::path& image,
                                            const model::Reproducer& reproducer, int vm_index,
                                            std::uint64_t) {
  util::TempDir scratch("crashgym-vm");
  const fs::path repro = scratch.path() / "reproducer";
  util::write_file(repro, reproducer.bytes);
  std::string cmd = template_;
  cmd = replace_all(cmd, "{image}", util::shell_quote(image.string()));
  cmd = replace_all(cmd, "{reproducer}", util::shell_quote(repro.string()));
  cmd = replace_all(cmd, "{vm}", std::to_string(vm_index));
  auto proc = std::make_unique<util::LineProcess>(std::vector<std::string>{"/bin/sh", "-c", cmd});
  auto run = std::make_unique<ShellRun>(std::move(proc), std::move(scratch));
  if (!run->await_boot(boot_timeout_)) throw BootFailure("VM command produced no console output");
  return run;
}

Reproducer::Reproducer(build::ArtifactStore& store, VmBackend& backend, fs::path runs_dir,
                       MonitorOptions options)
    : store_(store), backend_(backend), runs_dir_(std::move(runs_dir)), options_(std::move(options)) {
  fs::create_directories(runs_dir_);
}

ReproduceResult Reproducer::reproduce_once(const ReproduceSpec& spec, int vm_index) {
  validate(spec);
  const fs::path image = store_.payload(spec.image);
  return *monitor(spec, vm_index, image, nullptr);
}

std::optional<ReproduceResult> Reproducer::monitor(const ReproduceSpec& spec, int vm_index,
                                                   const fs::path& image,
                                                   const std::atomic<std::int64_t>* cancel_after_ms) {
  ReproduceResult result;
  result.run_id = orch::new_uuid();
  result.vm_index = vm_index;
  const fs::path dir = runs_dir_ / result.run_id;
  fs::create_directories(dir);
  std::ofstream console(dir / "console.log", std::ios::binary);
  if (!console) throw StorageError("cannot write console log in " + dir.string());

  auto vm = backend_.boot(image, spec.reproducer, vm_index, spec.seed);
  const double timeout_s = spec.timeout_minutes * 60.0;
  std::optional<double> crash_at;
  std::string report;
  std::vector<std::string> lines;
  bool alive = true;
  for (long step = 1;; ++step) {
    const double t = std::min(timeout_s, step * options_.poll_interval_s);
    if (cancel_after_ms && !crash_at &&
        std::llround(t * 1000) > cancel_after_ms->load(std::memory_order_acquire))
      return std::nullopt;
    lines.clear();
    alive = vm->poll(t, lines);
    for (const auto& line : lines) {
      console << line << '\n';
      if (!crash_at && model::detect_title(line, options_.prefixes)) crash_at = t;
      if (crash_at) report += line + "\n";
    }
    if (crash_at && t >= *crash_at + options_.report_grace_s) break;
    if (t >= timeout_s || !alive) break;
  }
  console.flush();
  if (crash_at) {
    result.crashed = true;
    result.elapsed_seconds = *crash_at;
    result.crash = model::make_crash_report(report);
  } else {
    // A VM that exits early never crashed within the budget either.
    result.elapsed_seconds = timeout_s;
  }
  return result;
}

ReproduceResult Reproducer::parallel_reproduce(const ReproduceSpec& spec) {
  validate(spec);
  const fs::path image = store_.payload(spec.image);
  const int m = spec.vm_count;
  std::atomic<std::int64_t> best_ms{std::numeric_limits<std::int64_t>::max()};
  std::vector<std::optional<ReproduceResult>> results(static_cast<size_t>(m));
  std::vector<std::string> boot_errors(static_cast<size_t>(m));
  std::vector<std::thread> vms;
  for (int i = 0; i < m; ++i) {
    vms.emplace_back([&, i] {
      try {
        auto r = monitor(spec, i, image, &best_ms);
        if (r && r->crashed) {
          const auto ms = std::llround(r->elapsed_seconds * 1000);
          auto cur = best_ms.load();
          while (ms < cur && !best_ms.compare_exchange_weak(cur, ms)) {
          }
        }
        results[static_cast<size_t>(i)] = std::move(r);
      } catch (const BootFailure& e) {
        boot_errors[static_cast<size_t>(i)] = e.what();
      } catch (const std::exception& e) {
        boot_errors[static_cast<size_t>(i)] = std::string("InfrastructureError: ") + e.what();
      }
    });
  }
  for (auto& t : vms) t.join();

  std::optional<ReproduceResult> winner;
  for (auto& r : results) {
    if (!r || !r->crashed) continue;
    if (!winner || r->elapsed_seconds < winner->elapsed_seconds) winner = r;
  }
  if (winner) return *winner;
  for (auto& r : results)
    if (r) return *r;
  throw BootFailure("all " + std::to_string(m) + " VMs failed: " + boot_errors.front());
}

std::string Reproducer::collect_kernel_log(const std::string& run_id) {
  bool safe = !run_id.empty();
  for (char c : run_id) safe = safe && (std::isalnum(static_cast<unsigned char>(c)) || c == '-');
  const fs::path path = runs_dir_ / run_id / "console.log";
  if (!safe || !fs::exists(path)) throw LogUnavailable("no console log for run " + run_id);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LogUnavailable("cannot read console log for run " + run_id);
  return store_.put_stream("log", "console.log", in, {{"run_id", run_id}});
}

}  // namespace crashgym::repro
