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

// Metrics over trial outcome logs: apply and solve rates, union solve,
// fault localization against the gold fix, and crash/fix overlap.

#pragma once

#include <compare>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "crashgym/model/sample.hpp"
#include "crashgym/resolve/resolver.hpp"

namespace crashgym::eval {

// Two-decimal percentage of count / total, rounded half away from zero.
double percent(int count, int total);

struct RateRow {
  std::string model;
  std::string setting;
  int n = 0;
  int dataset_size = 0;
  int applied = 0;
  int solved = 0;
  double apply_pct = 0;
  double solve_pct = 0;
};

// A bug is applied (solved) when any of its first n candidates is.
// Infrastructure outcomes are ignored. Rows are sorted by model, setting, n.
std::vector<RateRow> apply_solve_rates(const std::vector<resolve::TrialOutcome>& log,
                                       int dataset_size, const std::vector<int>& ns = {1, 10});

struct UnionResult {
  int unique_solved = 0;
  // Sum of the per (model, setting) solved counts.
  int total_solved = 0;
  double union_pct = 0;
};

UnionResult union_solve(const std::vector<std::vector<resolve::TrialOutcome>>& logs,
                        int dataset_size);

struct LocTuple {
  std::string function_name;
  std::string file_name;

  auto operator<=>(const LocTuple&) const = default;
};

// Throws MalformedDiff.
std::set<LocTuple> extract_loc_tuples(const std::string& diff);

enum class OverlapClass { kComplete, kPartial, kNone };

std::string to_string(OverlapClass c);

struct OverlapVerdict {
  OverlapClass cls = OverlapClass::kNone;
  // |candidate ∩ gold| / |gold|; 0 for an empty gold set.
  double recall = 0;
};

OverlapVerdict overlap(const std::set<LocTuple>& candidate, const std::set<LocTuple>& gold);

struct LocalizationRow {
  std::string model;
  std::string setting;
  std::map<model::FixClass, int> complete;
  int complete_total = 0;
  int partial = 0;
  // Mean best recall over partial bugs, in percent, truncated to two
  // decimals.
  double overlap_pct = 0;
};

// Per bug, the best candidate across all its parseable extracted patches.
// Throws ValidationError for bug ids missing from the dataset.
std::vector<LocalizationRow> localization_report(const std::vector<resolve::TrialOutcome>& log,
                                                 const std::vector<model::BenchSample>& dataset);

struct CrashFixOverlap {
  std::string subset;
  int evaluated = 0;
  int complete = 0;
  int partial = 0;
  int none = 0;
  // Samples in the subset whose crash has no stack frames; not evaluated.
  int frameless = 0;
};

// Function names in the parent crash's frames against the named functions
// of the gold fix, over the samples whose ids are in `subset`.
OverlapClass crash_fix_class(const model::BenchSample& sample);
CrashFixOverlap crash_fix_overlap(const std::vector<model::BenchSample>& dataset,
                                  const std::set<std::string>& subset,
                                  const std::string& subset_name);

std::string rates_csv(const std::vector<RateRow>& rows);
std::string localization_csv(const std::vector<LocalizationRow>& rows);
std::string partial_csv(const std::vector<LocalizationRow>& rows);
std::string crash_fix_csv(const std::vector<CrashFixOverlap>& rows);

nlohmann::json to_json(const RateRow& r);
nlohmann::json to_json(const UnionResult& r);
nlohmann::json to_json(const LocalizationRow& r);
nlohmann::json to_json(const CrashFixOverlap& r);

}  // namespace crashgym::eval
