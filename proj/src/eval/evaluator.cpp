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

#include "crashgym/eval/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "crashgym/errors.hpp"
#include "crashgym/patch/diff.hpp"

namespace crashgym::eval {
namespace {

using Key = std::pair<std::string, std::string>;

std::map<Key, std::vector<const resolve::TrialOutcome*>> group(
    const std::vector<resolve::TrialOutcome>& log) {
  std::map<Key, std::vector<const resolve::TrialOutcome*>> groups;
  for (const auto& o : log)
    if (!o.infrastructure) groups[{o.model, o.setting}].push_back(&o);
  return groups;
}

std::string fixed2(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

}  // namespace

double percent(int count, int total) {
  if (total <= 0) return 0;
  return static_cast<double>(std::llround(count * 10000.0 / total)) / 100.0;
}

std::vector<RateRow> apply_solve_rates(const std::vector<resolve::TrialOutcome>& log,
                                       int dataset_size, const std::vector<int>& ns) {
  std::vector<RateRow> rows;
  for (const auto& [key, outcomes] : group(log)) {
    for (int n : ns) {
      std::set<std::string> applied, solved;
      for (const auto* o : outcomes) {
        if (o->candidate_index >= n) continue;
        if (o->applied) applied.insert(o->bug_id);
        if (o->resolved) solved.insert(o->bug_id);
      }
      RateRow r;
      r.model = key.first;
      r.setting = key.second;
      r.n = n;
      r.dataset_size = dataset_size;
      r.applied = static_cast<int>(applied.size());
      r.solved = static_cast<int>(solved.size());
      r.apply_pct = percent(r.applied, dataset_size);
      r.solve_pct = percent(r.solved, dataset_size);
      rows.push_back(r);
    }
  }
  return rows;
}

UnionResult union_solve(const std::vector<std::vector<resolve::TrialOutcome>>& logs,
                        int dataset_size) {
  std::set<std::string> unique;
  std::map<Key, std::set<std::string>> per_group;
  for (const auto& log : logs) {
    for (const auto& o : log) {
      if (o.infrastructure || !o.resolved) continue;
      unique.insert(o.bug_id);
      per_group[{o.model, o.setting}].insert(o.bug_id);
    }
  }
  UnionResult r;
  r.unique_solved = static_cast<int>(unique.size());
  for (const auto& [key, bugs] : per_group) r.total_solved += static_cast<int>(bugs.size());
  r.union_pct = percent(r.unique_solved, dataset_size);
  return r;
}

std::set<LocTuple> extract_loc_tuples(const std::string& diff) {
  std::set<LocTuple> out;
  for (const auto& file : patch::parse(diff))
    for (const auto& hunk : file.hunks)
      out.insert({patch::function_from_context(hunk.context_header), file.target_path()});
  return out;
}

std::string to_string(OverlapClass c) {
  switch (c) {
    case OverlapClass::kComplete: return "Complete";
    case OverlapClass::kPartial: return "Partial";
    case OverlapClass::kNone: return "None";
  }
  return "None";
}

OverlapVerdict overlap(const std::set<LocTuple>& candidate, const std::set<LocTuple>& gold) {
  OverlapVerdict v;
  if (gold.empty()) return v;
  int hit = 0;
  for (const auto& t : gold) hit += candidate.count(t) ? 1 : 0;
  v.recall = static_cast<double>(hit) / static_cast<double>(gold.size());
  v.cls = hit == 0 ? OverlapClass::kNone
          : hit == static_cast<int>(gold.size()) ? OverlapClass::kComplete
                                                  : OverlapClass::kPartial;
  return v;
}

std::vector<LocalizationRow> localization_report(const std::vector<resolve::TrialOutcome>& log,
                                                 const std::vector<model::BenchSample>& dataset) {
  std::map<std::string, const model::BenchSample*> by_id;
  for (const auto& s : dataset) by_id[s.bug_id] = &s;
  std::map<std::string, std::pair<std::set<LocTuple>, model::FixClass>> gold_cache;
  auto gold = [&](const std::string& bug) -> const auto& {
    auto it = gold_cache.find(bug);
    if (it != gold_cache.end()) return it->second;
    auto s = by_id.find(bug);
    if (s == by_id.end()) throw ValidationError("outcome for unknown bug " + bug);
    return gold_cache
        .emplace(bug, std::pair{extract_loc_tuples(s->second->gold_fix),
                                model::classify_fix(s->second->gold_fix)})
        .first->second;
  };

  std::vector<LocalizationRow> rows;
  for (const auto& [key, outcomes] : group(log)) {
    LocalizationRow row;
    row.model = key.first;
    row.setting = key.second;
    for (auto c : model::kAllFixClasses) row.complete[c] = 0;
    std::map<std::string, OverlapVerdict> best;
    for (const auto* o : outcomes) {
      const auto& [gold_tuples, cls] = gold(o->bug_id);
      auto& b = best[o->bug_id];
      if (!o->extracted || o->candidate_patch.empty()) continue;
      std::set<LocTuple> tuples;
      try {
        tuples = extract_loc_tuples(o->candidate_patch);
      } catch (const patch::MalformedDiff&) {
        continue;
      }
      const auto v = overlap(tuples, gold_tuples);
      if (v.recall > b.recall) b = v;
    }
    double recall_sum = 0;
    for (const auto& [bug, v] : best) {
      if (v.cls == OverlapClass::kComplete) {
        ++row.complete[gold(bug).second];
        ++row.complete_total;
      } else if (v.cls == OverlapClass::kPartial) {
        ++row.partial;
        recall_sum += v.recall;
      }
    }
    if (row.partial > 0)
      row.overlap_pct = std::floor(recall_sum / row.partial * 10000.0 + 1e-6) / 100.0;
    rows.push_back(row);
  }
  return rows;
}

namespace {

std::vector<model::Frame> frames_of(const model::BenchSample& sample) {
  return sample.crash_parent.frames.empty()
             ? model::extract_frames(sample.crash_parent.raw_console)
             : sample.crash_parent.frames;
}

}  // namespace

OverlapClass crash_fix_class(const model::BenchSample& sample) {
  const auto frames = frames_of(sample);
  std::set<LocTuple> crash, gold;
  for (const auto& f : frames) crash.insert({f.function_name, ""});
  for (const auto& t : extract_loc_tuples(sample.gold_fix))
    if (!t.function_name.empty()) gold.insert({t.function_name, ""});
  return overlap(crash, gold).cls;
}

CrashFixOverlap crash_fix_overlap(const std::vector<model::BenchSample>& dataset,
                                  const std::set<std::string>& subset,
                                  const std::string& subset_name) {
  CrashFixOverlap r;
  r.subset = subset_name;
  for (const auto& s : dataset) {
    if (!subset.count(s.bug_id)) continue;
    if (frames_of(s).empty()) {
      ++r.frameless;
      continue;
    }
    ++r.evaluated;
    switch (crash_fix_class(s)) {
      case OverlapClass::kComplete: ++r.complete; break;
      case OverlapClass::kPartial: ++r.partial; break;
      case OverlapClass::kNone: ++r.none; break;
    }
  }
  return r;
}

std::string rates_csv(const std::vector<RateRow>& rows) {
  std::string out = "model,setting,n,applied,solved,apply_pct,solve_pct\n";
  for (const auto& r : rows)
    out += r.model + "," + r.setting + "," + std::to_string(r.n) + "," +
           std::to_string(r.applied) + "," + std::to_string(r.solved) + "," +
           fixed2(r.apply_pct) + "," + fixed2(r.solve_pct) + "\n";
  return out;
}

std::string localization_csv(const std::vector<LocalizationRow>& rows) {
  std::string out = "model,setting";
  for (auto c : model::kAllFixClasses) out += "," + model::label(c);
  out += ",total\n";
  for (const auto& r : rows) {
    out += r.model + "," + r.setting;
    for (auto c : model::kAllFixClasses) out += "," + std::to_string(r.complete.at(c));
    out += "," + std::to_string(r.complete_total) + "\n";
  }
  return out;
}

std::string partial_csv(const std::vector<LocalizationRow>& rows) {
  std::string out = "model,setting,partial,overlap_pct\n";
  for (const auto& r : rows)
    out += r.model + "," + r.setting + "," + std::to_string(r.partial) + "," +
           fixed2(r.overlap_pct) + "\n";
  return out;
}

std::string crash_fix_csv(const std::vector<CrashFixOverlap>& rows) {
  std::string out = "subset,evaluated,complete,partial,none\n";
  for (const auto& r : rows)
    out += r.subset + "," + std::to_string(r.evaluated) + "," + std::to_string(r.complete) + "," +
           std::to_string(r.partial) + "," + std::to_string(r.none) + "\n";
  return out;
}

nlohmann::json to_json(const RateRow& r) {
  return {{"model", r.model},       {"setting", r.setting},     {"n", r.n},
          {"dataset_size", r.dataset_size}, {"applied", r.applied}, {"solved", r.solved},
          {"apply_pct", r.apply_pct}, {"solve_pct", r.solve_pct}};
}

nlohmann::json to_json(const UnionResult& r) {
  return {{"unique_solved", r.unique_solved},
          {"total_solved", r.total_solved},
          {"union_pct", r.union_pct}};
}

nlohmann::json to_json(const LocalizationRow& r) {
  nlohmann::json complete = nlohmann::json::object();
  for (const auto& [c, n] : r.complete) complete[model::label(c)] = n;
  return {{"model", r.model},          {"setting", r.setting},
          {"complete", complete},      {"complete_total", r.complete_total},
          {"partial", r.partial},      {"overlap_pct", r.overlap_pct}};
}

nlohmann::json to_json(const CrashFixOverlap& r) {
  return {{"subset", r.subset},   {"evaluated", r.evaluated}, {"complete", r.complete},
          {"partial", r.partial}, {"none", r.none}, {"frameless", r.frameless}};
}

}  // namespace crashgym::eval
