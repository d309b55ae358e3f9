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

#include "crashgym/model/sample.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "crashgym/errors.hpp"
#include "crashgym/patch/diff.hpp"
#include "crashgym/util/hash.hpp"
#include "crashgym/util/text.hpp"

namespace crashgym::model {

std::string to_string(ReproducerKind kind) {
  switch (kind) {
    case ReproducerKind::kSyz: return "syz";
    case ReproducerKind::kCProgram: return "c-program";
    case ReproducerKind::kMockScript: return "mock-script";
  }
  return "unknown";
}

ReproducerKind reproducer_kind_from_string(const std::string& s) {
  if (s == "syz") return ReproducerKind::kSyz;
  if (s == "c-program") return ReproducerKind::kCProgram;
  if (s == "mock-script") return ReproducerKind::kMockScript;
  throw ValidationError("unknown reproducer kind: " + s);
}

bool is_commit_id(const std::string& s) {
  return s.size() == 40 && std::all_of(s.begin(), s.end(), [](char c) {
           return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
         });
}

void validate(const BenchSample& s) {
  std::vector<std::string> problems;
  if (s.bug_id.empty()) problems.push_back("bug_id is empty");
  for (const auto& [name, value] : {std::pair{"commit_bug", &s.commit_bug},
                                    std::pair{"commit_fix", &s.commit_fix},
                                    std::pair{"commit_parent", &s.commit_parent}})
    if (!is_commit_id(*value)) problems.push_back(std::string(name) + " is not a 40-hex commit id");
  if (s.commit_bug == s.commit_fix || s.commit_bug == s.commit_parent ||
      s.commit_fix == s.commit_parent)
    problems.push_back("commit_bug, commit_fix and commit_parent must be distinct");
  if (util::trim(s.crash_parent.raw_console).empty()) problems.push_back("crash_parent is empty");
  try {
    patch::parse(s.gold_fix);
  } catch (const patch::MalformedDiff& e) {
    problems.push_back(std::string("gold_fix: ") + e.what());
  }
  if (!problems.empty())
    throw ValidationError(s.bug_id + ": " + util::join(problems, "; "));
}

void to_json(nlohmann::json& j, const Reproducer& r) {
  j = {{"kind", to_string(r.kind)}, {"data", util::base64_encode(r.bytes)}};
}

void from_json(const nlohmann::json& j, Reproducer& r) {
  r.kind = reproducer_kind_from_string(j.at("kind").get<std::string>());
  r.bytes = util::base64_decode(j.at("data").get<std::string>());
}

void to_json(nlohmann::json& j, const BenchSample& s) {
  j = {{"bug_id", s.bug_id},
       {"commit_bug", s.commit_bug},
       {"config", s.config},
       {"reproducer", s.reproducer},
       {"commit_fix", s.commit_fix},
       {"commit_parent", s.commit_parent},
       {"crash_parent", s.crash_parent},
       {"gold_fix", s.gold_fix},
       {"bisect", nullptr},
       {"email_refs", s.email_refs},
       {"subsystem", s.subsystem},
       {"kernel_version", s.kernel_version},
       {"fix_year", s.fix_year}};
  if (s.bisect) j["bisect"] = *s.bisect;
}

void from_json(const nlohmann::json& j, BenchSample& s) {
  s.bug_id = j.at("bug_id").get<std::string>();
  s.commit_bug = j.at("commit_bug").get<std::string>();
  s.config = j.value("config", "");
  s.reproducer = j.at("reproducer").get<Reproducer>();
  s.commit_fix = j.at("commit_fix").get<std::string>();
  s.commit_parent = j.at("commit_parent").get<std::string>();
  s.crash_parent = j.at("crash_parent").get<CrashReport>();
  s.gold_fix = j.at("gold_fix").get<std::string>();
  s.bisect.reset();
  if (j.contains("bisect") && !j["bisect"].is_null()) s.bisect = j["bisect"].get<std::string>();
  s.email_refs = j.value("email_refs", std::vector<std::string>{});
  s.subsystem = j.value("subsystem", "");
  s.kernel_version = j.value("kernel_version", "");
  s.fix_year = j.value("fix_year", 0);
}

std::vector<BenchSample> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputNotFound("cannot open dataset " + path);
  std::vector<BenchSample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (util::trim(line).empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<BenchSample>());
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_samples(const std::string& path, const std::vector<BenchSample>& samples) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw StorageError("cannot write dataset " + path);
  for (const auto& s : samples) out << nlohmann::json(s).dump() << '\n';
  if (!out) throw StorageError("write failed for " + path);
}

std::string to_string(FixClass c) {
  switch (c) {
    case FixClass::kSingleLine: return "SingleLine";
    case FixClass::kSingleFunctionMultiLine: return "SingleFunctionMultiLine";
    case FixClass::kMultiFunctionSingleFile: return "MultiFunctionSingleFile";
    case FixClass::kMultiFile: return "MultiFile";
  }
  return "Unknown";
}

std::string label(FixClass c) {
  switch (c) {
    case FixClass::kSingleLine: return "single-line";
    case FixClass::kSingleFunctionMultiLine: return "single-function";
    case FixClass::kMultiFunctionSingleFile: return "multi-function";
    case FixClass::kMultiFile: return "multi-file";
  }
  return "unknown";
}

FixClass classify_fix(const std::string& fix) {
  const patch::Patch p = patch::parse(fix);
  std::set<std::string> files;
  for (const auto& f : p) files.insert(f.target_path());
  if (files.size() > 1) return FixClass::kMultiFile;
  std::set<std::string> functions;
  for (const auto& f : p)
    for (const auto& h : f.hunks) functions.insert(patch::function_from_context(h.context_header));
  if (functions.size() > 1) return FixClass::kMultiFunctionSingleFile;
  if (patch::changed_lines(p) == 1) return FixClass::kSingleLine;
  return FixClass::kSingleFunctionMultiLine;
}

int fix_lines_changed(const std::string& fix) { return patch::changed_lines(patch::parse(fix)); }

int fix_files_changed(const std::string& fix) {
  std::set<std::string> files;
  for (const auto& f : patch::parse(fix)) files.insert(f.target_path());
  return static_cast<int>(files.size());
}

SummaryStats fix_stats(const std::vector<BenchSample>& samples) {
  SummaryStats s;
  if (samples.empty()) return s;
  long lines = 0;
  long files = 0;
  long crash = 0;
  for (const auto& sample : samples) {
    const int l = fix_lines_changed(sample.gold_fix);
    const int f = fix_files_changed(sample.gold_fix);
    const int c = sample.crash_parent.line_count;
    lines += l;
    files += f;
    crash += c;
    s.lines_max = std::max(s.lines_max, l);
    s.files_max = std::max(s.files_max, f);
    s.crash_lines_max = std::max(s.crash_lines_max, c);
  }
  s.count = static_cast<int>(samples.size());
  s.lines_avg = static_cast<double>(lines) / s.count;
  s.files_avg = static_cast<double>(files) / s.count;
  s.crash_lines_avg = static_cast<double>(crash) / s.count;
  return s;
}

std::string version_bucket(const std::string& kernel_version) {
  const size_t dot = kernel_version.find('.');
  if (dot == std::string::npos || dot == 0) return kernel_version.empty() ? "unknown" : kernel_version;
  return kernel_version.substr(0, dot) + ".x";
}

DistributionReport distribution(const std::vector<BenchSample>& samples) {
  DistributionReport r;
  for (const auto& s : samples) {
    ++r.by_version_year[version_bucket(s.kernel_version)][s.fix_year];
    ++r.by_class[classify_fix(s.gold_fix)];
    ++r.by_subsystem[s.subsystem];
  }
  r.stats = fix_stats(samples);
  return r;
}

nlohmann::json to_json(const DistributionReport& r) {
  nlohmann::json versions = nlohmann::json::object();
  for (const auto& [bucket, years] : r.by_version_year) {
    nlohmann::json y = nlohmann::json::object();
    int total = 0;
    for (const auto& [year, n] : years) {
      y[std::to_string(year)] = n;
      total += n;
    }
    versions[bucket] = {{"by_year", y}, {"total", total}};
  }
  nlohmann::json classes = nlohmann::json::object();
  for (FixClass c : kAllFixClasses) {
    auto it = r.by_class.find(c);
    classes[label(c)] = it == r.by_class.end() ? 0 : it->second;
  }
  const SummaryStats& s = r.stats;
  return {{"samples", s.count},
          {"versions", versions},
          {"fix_classes", classes},
          {"subsystems", r.by_subsystem},
          {"stats",
           {{"lines_changed", {{"avg", s.lines_avg}, {"max", s.lines_max}}},
            {"files_changed", {{"avg", s.files_avg}, {"max", s.files_max}}},
            {"crash_lines", {{"avg", s.crash_lines_avg}, {"max", s.crash_lines_max}}}}}};
}

}  // namespace crashgym::model
