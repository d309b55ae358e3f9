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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crashgym/model/crash.hpp"

namespace crashgym::model {

enum class ReproducerKind { kSyz, kCProgram, kMockScript };

std::string to_string(ReproducerKind kind);
ReproducerKind reproducer_kind_from_string(const std::string& s);

struct Reproducer {
  ReproducerKind kind = ReproducerKind::kMockScript;
  std::string bytes;

  friend bool operator==(const Reproducer&, const Reproducer&) = default;
};

struct BenchSample {
  std::string bug_id;
  std::string commit_bug;
  std::string config;
  Reproducer reproducer;
  std::string commit_fix;
  std::string commit_parent;
  CrashReport crash_parent;
  std::string gold_fix;
  std::optional<std::string> bisect;
  std::vector<std::string> email_refs;
  std::string subsystem;
  std::string kernel_version;
  int fix_year = 0;

  friend bool operator==(const BenchSample&, const BenchSample&) = default;
};

bool is_commit_id(const std::string& s);

// Throws ValidationError naming every violated invariant.
void validate(const BenchSample& sample);

void to_json(nlohmann::json& j, const Reproducer& r);
void from_json(const nlohmann::json& j, Reproducer& r);
void to_json(nlohmann::json& j, const BenchSample& s);
void from_json(const nlohmann::json& j, BenchSample& s);

// JSON-lines datasets, one sample per line.
std::vector<BenchSample> load_samples(const std::string& path);
void save_samples(const std::string& path, const std::vector<BenchSample>& samples);

enum class FixClass {
  kSingleLine,
  kSingleFunctionMultiLine,
  kMultiFunctionSingleFile,
  kMultiFile,
};

inline constexpr FixClass kAllFixClasses[] = {
    FixClass::kSingleLine, FixClass::kSingleFunctionMultiLine,
    FixClass::kMultiFunctionSingleFile, FixClass::kMultiFile};

std::string to_string(FixClass c);
// Short label used in tables: "single-line", "single-function", ...
std::string label(FixClass c);

// Throws MalformedDiff for an unparseable fix.
FixClass classify_fix(const std::string& fix);

struct SummaryStats {
  int count = 0;
  double lines_avg = 0;
  int lines_max = 0;
  double files_avg = 0;
  int files_max = 0;
  double crash_lines_avg = 0;
  int crash_lines_max = 0;
};

int fix_lines_changed(const std::string& fix);
int fix_files_changed(const std::string& fix);

SummaryStats fix_stats(const std::vector<BenchSample>& samples);

// Major version bucket of a kernel_version string: "5.10.2" -> "5.x".
std::string version_bucket(const std::string& kernel_version);

struct DistributionReport {
  // bucket -> year -> count
  std::map<std::string, std::map<int, int>> by_version_year;
  std::map<FixClass, int> by_class;
  std::map<std::string, int> by_subsystem;
  SummaryStats stats;
};

DistributionReport distribution(const std::vector<BenchSample>& samples);
nlohmann::json to_json(const DistributionReport& report);

}  // namespace crashgym::model
