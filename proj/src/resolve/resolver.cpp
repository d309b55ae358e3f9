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

#include "crashgym/resolve/resolver.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "crashgym/build/builder.hpp"
#include "crashgym/errors.hpp"
#include "crashgym/patch/diff.hpp"
#include "crashgym/util/fs.hpp"
#include "crashgym/util/hash.hpp"
#include "crashgym/util/text.hpp"

namespace crashgym::resolve {
namespace {

const std::map<FailureStage, std::string>& stage_names() {
  static const std::map<FailureStage, std::string> names = {
      {FailureStage::kNoPatch, "NoPatch"},
      {FailureStage::kMalformed, "Malformed"},
      {FailureStage::kHunkMismatch, "HunkMismatch"},
      {FailureStage::kCompileError, "CompileError"},
      {FailureStage::kStillCrashes, "StillCrashes"},
      {FailureStage::kInfrastructure, "Infrastructure"},
  };
  return names;
}

std::string first_line(const std::string& s) {
  const auto nl = s.find('\n');
  return nl == std::string::npos ? s : s.substr(0, nl);
}

// Build-step errors that belong to the candidate rather than the platform.
bool is_candidate_error(const std::string& code) {
  return code == "PatchRejected" || code == "CompileError";
}

struct Verdict {
  bool infrastructure = false;
  bool applied = false;
  bool resolved = false;
  std::optional<FailureStage> stage;
  std::string detail;
};

Verdict judge(const orch::Job& job) {
  Verdict v;
  if (job.status == orch::JobStatus::kSucceeded) {
    const auto run = job.steps.back().result->output.get<repro::ReproduceResult>();
    v.applied = true;
    v.resolved = !run.crashed;
    if (run.crashed) {
      v.stage = FailureStage::kStillCrashes;
      v.detail = run.crash ? run.crash->crash_title : "crashed";
    }
    return v;
  }
  for (size_t i = 0; i < job.steps.size(); ++i) {
    const auto& r = job.steps[i].result;
    if (!r || r->ok) continue;
    const bool infra = r->output.is_object() && r->output.value("infrastructure", false);
    if (i == 0 && !infra && is_candidate_error(r->error)) {
      if (r->error == "CompileError") {
        v.stage = FailureStage::kCompileError;
      } else if (r->message.rfind("MalformedDiff", 0) == 0) {
        v.stage = FailureStage::kMalformed;
      } else {
        v.stage = FailureStage::kHunkMismatch;
      }
      v.detail = first_line(r->message);
      return v;
    }
    v.infrastructure = true;
    v.stage = FailureStage::kInfrastructure;
    v.detail = r->error + ": " + first_line(r->message);
    return v;
  }
  v.infrastructure = true;
  v.stage = FailureStage::kInfrastructure;
  v.detail = "job ended " + orch::to_string(job.status);
  return v;
}

}  // namespace

FixtureProvider::FixtureProvider(fs::path dir, std::string model)
    : dir_(std::move(dir)), model_(std::move(model)) {
  if (!fs::is_directory(dir_)) throw InputNotFound("provider directory not found: " + dir_.string());
}

std::vector<std::string> FixtureProvider::complete(const CompletionRequest& request) {
  std::vector<std::string> out;
  const fs::path bug_dir = dir_ / request.bug_id;
  for (int i = request.first_index; i < request.first_index + request.n; ++i) {
    const fs::path file = bug_dir / (std::to_string(i) + ".txt");
    if (!fs::is_regular_file(file)) break;
    out.push_back(util::read_file(file));
  }
  return out;
}

ScriptedProvider::ScriptedProvider(Script script, std::string model, bool multiple)
    : script_(std::move(script)), model_(std::move(model)), multiple_(multiple) {}

ScriptedProvider::ScriptedProvider(Outputs outputs,
                                   std::string model, bool multiple)
    : model_(std::move(model)), multiple_(multiple) {
  script_ = [outputs = std::move(outputs)](const CompletionRequest& r) {
    std::vector<std::string> out;
    auto it = outputs.find(r.bug_id);
    if (it == outputs.end()) return out;
    for (int i = r.first_index; i < r.first_index + r.n && i < static_cast<int>(it->second.size());
         ++i)
      out.push_back(it->second[i]);
    return out;
  };
}

std::vector<std::string> ScriptedProvider::complete(const CompletionRequest& request) {
  ++calls_;
  return script_(request);
}

std::vector<std::string> request_candidates(CompletionProvider& provider,
                                            const std::string& bug_id,
                                            const std::string& prompt, int n) {
  if (n < 1) throw ValidationError("candidate count must be at least 1");
  std::vector<std::string> out;
  if (provider.supports_multiple()) {
    out = provider.complete({bug_id, prompt, n, 0});
  } else {
    for (int i = 0; i < n; ++i) {
      auto one = provider.complete({bug_id, prompt, 1, i});
      if (one.empty()) break;
      out.push_back(std::move(one.front()));
    }
  }
  if (static_cast<int>(out.size()) > n) out.resize(n);
  return out;
}

std::string to_string(FailureStage stage) { return stage_names().at(stage); }

FailureStage failure_stage_from_string(const std::string& s) {
  for (const auto& [stage, name] : stage_names())
    if (name == s) return stage;
  throw ValidationError("unknown failure stage: " + s);
}

void to_json(nlohmann::json& j, const TrialOutcome& o) {
  j = {{"bug_id", o.bug_id},
       {"model", o.model},
       {"setting", o.setting},
       {"candidate_index", o.candidate_index},
       {"candidates", o.candidates},
       {"extracted", o.extracted},
       {"applied", o.applied},
       {"resolved", o.resolved},
       {"failure_stage", nullptr},
       {"infrastructure", o.infrastructure},
       {"job_ids", o.job_ids},
       {"candidate_patch", o.candidate_patch},
       {"seed", o.seed},
       {"detail", o.detail}};
  if (o.failure_stage) j["failure_stage"] = to_string(*o.failure_stage);
}

void from_json(const nlohmann::json& j, TrialOutcome& o) {
  o.bug_id = j.at("bug_id").get<std::string>();
  o.model = j.value("model", "");
  o.setting = j.value("setting", "");
  o.candidate_index = j.at("candidate_index").get<int>();
  o.candidates = j.value("candidates", 0);
  o.extracted = j.at("extracted").get<bool>();
  o.applied = j.at("applied").get<bool>();
  o.resolved = j.at("resolved").get<bool>();
  o.failure_stage.reset();
  if (j.contains("failure_stage") && !j["failure_stage"].is_null())
    o.failure_stage = failure_stage_from_string(j["failure_stage"].get<std::string>());
  o.infrastructure = j.value("infrastructure", false);
  o.job_ids = j.value("job_ids", std::vector<std::string>{});
  o.candidate_patch = j.value("candidate_patch", "");
  o.seed = j.value("seed", std::uint64_t{0});
  o.detail = j.value("detail", "");
  if ((o.resolved && !o.applied) || (o.applied && !o.extracted))
    throw ValidationError("outcome for " + o.bug_id + " violates resolved => applied => extracted");
  if (o.resolved == o.failure_stage.has_value())
    throw ValidationError("outcome for " + o.bug_id + " must have a failure stage unless resolved");
}

std::vector<TrialOutcome> load_outcomes(const fs::path& path) {
  if (!fs::exists(path)) throw InputNotFound("outcome log not found: " + path.string());
  const std::string text = util::read_file(path);
  std::vector<TrialOutcome> out;
  const auto lines = util::split_lines(text);
  for (size_t i = 0; i < lines.size(); ++i) {
    if (util::trim(lines[i]).empty()) continue;
    const bool last = i + 1 == lines.size() && (text.empty() || text.back() != '\n');
    try {
      out.push_back(nlohmann::json::parse(lines[i]).get<TrialOutcome>());
    } catch (const nlohmann::json::exception&) {
      if (last) break;
      throw ValidationError(path.string() + ":" + std::to_string(i + 1) + ": not an outcome");
    }
  }
  return out;
}

std::string outcome_lines(const std::vector<TrialOutcome>& outcomes) {
  std::string out;
  for (const auto& o : outcomes) out += nlohmann::json(o).dump() + "\n";
  return out;
}

Resolver::Resolver(orch::LocalCluster& cluster, TrialConfig config)
    : cluster_(cluster), config_(std::move(config)) {
  if (config_.max_inflight < 1) throw ValidationError("in-flight limit must be at least 1");
}

std::vector<orch::StepSpec> Resolver::chain(const model::BenchSample& sample,
                                            const std::string& patch, std::uint64_t seed) const {
  build::BuildSpec b;
  b.git_url = config_.git_url;
  b.commit_id = sample.commit_parent;
  b.kernel_config = sample.config;
  b.patch = patch;
  repro::ReproduceSpec r;
  r.reproducer = sample.reproducer;
  r.timeout_minutes = config_.timeout_minutes;
  r.vm_count = config_.vm_count;
  r.seed = seed;
  nlohmann::json rp = r;
  rp.erase("image");
  const auto kind = config_.vm_count > 1 ? orch::StepKind::kParallelReproduce
                                         : orch::StepKind::kReproduce;
  return {{orch::StepKind::kBuild, b}, {kind, rp}};
}

std::vector<TrialOutcome> Resolver::run_trial(const model::BenchSample& sample,
                                              const prompt::AssembledPrompt& prompt,
                                              CompletionProvider& provider, int n) {
  const auto texts = request_candidates(provider, sample.bug_id, prompt.text, n);
  std::vector<TrialOutcome> outcomes(texts.size());

  struct Chain {
    std::string patch;
    std::uint64_t seed = 0;
    std::vector<std::string> job_ids;
    std::optional<Verdict> verdict;
    int attempts = 0;
  };
  std::vector<Chain> chains;
  std::map<std::string, size_t> by_patch;
  std::vector<std::optional<size_t>> chain_of(texts.size());

  for (size_t i = 0; i < texts.size(); ++i) {
    TrialOutcome& o = outcomes[i];
    o.bug_id = sample.bug_id;
    o.model = provider.name();
    o.setting = retrieval::to_string(prompt.setting);
    o.candidate_index = static_cast<int>(i);
    o.candidates = static_cast<int>(texts.size());
    std::string raw;
    try {
      raw = patch::extract_patch(texts[i]);
    } catch (const NoPatchFound& e) {
      o.failure_stage = FailureStage::kNoPatch;
      o.detail = e.what();
      continue;
    }
    o.extracted = true;
    try {
      o.candidate_patch = patch::render(patch::parse(raw));
    } catch (const patch::MalformedDiff& e) {
      o.candidate_patch = patch::normalize(raw);
      o.failure_stage = FailureStage::kMalformed;
      o.detail = e.what();
      continue;
    }
    auto [it, fresh] = by_patch.emplace(o.candidate_patch, chains.size());
    if (fresh) {
      Chain c;
      c.patch = o.candidate_patch;
      c.seed = util::stable_seed({sample.bug_id, c.patch, std::to_string(config_.seed)});
      chains.push_back(std::move(c));
    }
    chain_of[i] = it->second;
  }

  // Waves of at most max_inflight chains; infrastructure failures are
  // resubmitted in later waves.
  for (;;) {
    std::vector<size_t> todo;
    for (size_t c = 0; c < chains.size(); ++c)
      if (!chains[c].verdict) todo.push_back(c);
    if (todo.empty()) break;
    for (size_t from = 0; from < todo.size(); from += config_.max_inflight) {
      const size_t to = std::min(todo.size(), from + config_.max_inflight);
      std::vector<std::string> ids;
      for (size_t k = from; k < to; ++k) {
        Chain& c = chains[todo[k]];
        ids.push_back(cluster_.scheduler().submit_job(chain(sample, c.patch, c.seed)));
        c.job_ids.push_back(ids.back());
        ++c.attempts;
        ++chains_;
      }
      for (size_t k = from; k < to; ++k) {
        Chain& c = chains[todo[k]];
        Verdict v = judge(cluster_.await_job(ids[k - from]));
        if (!v.infrastructure || c.attempts > config_.infra_retries) c.verdict = std::move(v);
      }
    }
  }

  for (size_t i = 0; i < texts.size(); ++i) {
    if (!chain_of[i]) continue;
    const Chain& c = chains[*chain_of[i]];
    TrialOutcome& o = outcomes[i];
    o.job_ids = c.job_ids;
    o.seed = c.seed;
    o.applied = c.verdict->applied;
    o.resolved = c.verdict->resolved;
    o.failure_stage = c.verdict->stage;
    o.infrastructure = c.verdict->infrastructure;
    o.detail = c.verdict->detail;
  }
  return outcomes;
}

repro::ReproduceResult Resolver::replay(const model::BenchSample& sample,
                                        const TrialOutcome& outcome) {
  if (!outcome.extracted || outcome.candidate_patch.empty())
    throw ValidationError("outcome has no patch to replay");
  const auto job = cluster_.run_job(chain(sample, outcome.candidate_patch, outcome.seed));
  ++chains_;
  if (job.status != orch::JobStatus::kSucceeded) {
    const Verdict v = judge(job);
    throw InfrastructureError("replay of " + sample.bug_id + " failed: " + v.detail);
  }
  return job.steps.back().result->output.get<repro::ReproduceResult>();
}

const retrieval::FileCorpus& GitSourceView::corpus(const std::string& commit) {
  auto it = corpora_.find(commit);
  if (it != corpora_.end()) return it->second;
  std::map<std::string, std::string> entries;
  for (const auto& path : cache_.list_files(url_, commit)) {
    if (!retrieval::FileCorpus::is_source_path(path)) continue;
    auto text = cache_.read_file(url_, commit, path);
    if (text && text->find('\0') == std::string::npos) entries.emplace(path, std::move(*text));
  }
  return corpora_.emplace(commit, retrieval::FileCorpus(commit, std::move(entries))).first->second;
}

retrieval::RetrievalResult GitSourceView::retrieve(const model::BenchSample& sample,
                                                   retrieval::Mode mode) {
  if (mode == retrieval::Mode::kOracle) {
    retrieval::RetrievalResult r;
    r.mode = mode;
    r.ranked_paths = retrieval::oracle_files(sample);
    r.k = static_cast<int>(r.ranked_paths.size());
    return r;
  }
  const auto& c = corpus(sample.commit_parent);
  if (c.size() == 0) return {retrieval::Mode::kBm25, 0, {}, {}};
  return retrieval::bm25_rank(c, sample.crash_parent.raw_console, static_cast<int>(c.size()));
}

std::optional<std::string> GitSourceView::read(const model::BenchSample& sample,
                                               const std::string& path) {
  return cache_.read_file(url_, sample.commit_parent, path);
}

RecordedSourceView::RecordedSourceView(const fs::path& path) {
  if (!fs::exists(path)) throw InputNotFound("source record not found: " + path.string());
  data_ = nlohmann::json::parse(util::read_file(path));
}

retrieval::RetrievalResult RecordedSourceView::retrieve(const model::BenchSample& sample,
                                                        retrieval::Mode mode) {
  retrieval::RetrievalResult r;
  r.mode = mode;
  if (mode == retrieval::Mode::kOracle) {
    r.ranked_paths = retrieval::oracle_files(sample);
  } else if (data_.contains(sample.bug_id)) {
    r.ranked_paths = data_[sample.bug_id].value("bm25", std::vector<std::string>{});
  }
  r.k = static_cast<int>(r.ranked_paths.size());
  return r;
}

std::optional<std::string> RecordedSourceView::read(const model::BenchSample& sample,
                                                    const std::string& path) {
  if (!data_.contains(sample.bug_id)) return std::nullopt;
  const auto& files = data_[sample.bug_id].value("files", nlohmann::json::object());
  if (!files.contains(path)) return std::nullopt;
  return filler_text(files[path].get<size_t>());
}

std::string filler_text(size_t bytes) {
  std::string out;
  out.reserve(bytes);
  while (out.size() < bytes) {
    const size_t row = std::min<size_t>(80, bytes - out.size());
    out.append(row - 1, 'x');
    out.push_back('\n');
  }
  return out;
}

std::vector<std::string> eligible_bug_ids(const std::vector<model::BenchSample>& dataset,
                                          SourceView& sources, retrieval::Mode mode,
                                          const prompt::PromptBudget& budget) {
  std::vector<std::string> out;
  for (const auto& s : dataset) {
    try {
      const auto result = prompt::assemble(
          s, sources.retrieve(s, mode),
          [&](const std::string& path) { return sources.read(s, path); }, budget);
      if (std::holds_alternative<prompt::AssembledPrompt>(result)) out.push_back(s.bug_id);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kInfrastructure) throw;
    }
  }
  return out;
}

nlohmann::json to_json(const CampaignSummary& s) {
  return {{"samples", s.samples},   {"eligible", s.eligible}, {"skipped", s.skipped},
          {"resumed", s.resumed},   {"outcomes", s.outcomes}, {"chains", s.chains},
          {"quarantined", s.quarantined}};
}

namespace {

// Keeps only complete candidate groups; returns the bug ids they cover.
std::set<std::string> checkpoint(const fs::path& log) {
  std::set<std::string> done;
  if (!fs::exists(log)) {
    util::write_file(log, "");
    return done;
  }
  const auto outcomes = load_outcomes(log);
  std::map<std::string, std::vector<TrialOutcome>> groups;
  for (const auto& o : outcomes) groups[o.bug_id].push_back(o);
  std::vector<TrialOutcome> kept;
  for (const auto& o : outcomes) {
    const auto& g = groups[o.bug_id];
    if (static_cast<int>(g.size()) == o.candidates) kept.push_back(o);
  }
  for (const auto& o : kept) done.insert(o.bug_id);
  const std::string text = outcome_lines(kept);
  if (text != util::read_file(log)) util::write_file_atomic(log, text);
  return done;
}

}  // namespace

CampaignSummary run_campaign(const std::vector<model::BenchSample>& dataset, SourceView& sources,
                             CompletionProvider& provider, Resolver& resolver,
                             const CampaignConfig& config) {
  if (config.log_path.empty()) throw ValidationError("campaign needs an outcome log path");
  if (config.log_path.has_parent_path()) fs::create_directories(config.log_path.parent_path());
  const fs::path prompts_path = config.prompts_path.empty()
                                    ? fs::path(config.log_path.string() + ".prompts.jsonl")
                                    : config.prompts_path;
  const auto done = checkpoint(config.log_path);

  std::vector<const model::BenchSample*> order;
  for (const auto& s : dataset) order.push_back(&s);
  std::sort(order.begin(), order.end(),
            [](const auto* a, const auto* b) { return a->bug_id < b->bug_id; });

  CampaignSummary summary;
  summary.samples = static_cast<int>(dataset.size());
  const int chains_before = resolver.chains_submitted();
  std::string sidecars;
  std::ofstream log(config.log_path, std::ios::app | std::ios::binary);
  if (!log) throw StorageError("cannot append to " + config.log_path.string());

  for (const auto* sample : order) {
    prompt::AssembleResult assembled = prompt::Skip{"no retrieval result"};
    try {
      const auto retrieved = sources.retrieve(*sample, config.setting);
      assembled = prompt::assemble(
          *sample, retrieved,
          [&](const std::string& path) { return sources.read(*sample, path); }, config.budget);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::kInfrastructure) throw;
      assembled = prompt::Skip{e.code() + ": " + e.what()};
    }
    sidecars += prompt::sidecar(sample->bug_id, config.setting, assembled).dump() + "\n";
    const auto* prompt = std::get_if<prompt::AssembledPrompt>(&assembled);
    if (!prompt) {
      ++summary.skipped;
      continue;
    }
    ++summary.eligible;
    if (done.count(sample->bug_id)) {
      ++summary.resumed;
      continue;
    }
    std::vector<TrialOutcome> outcomes;
    try {
      outcomes = resolver.run_trial(*sample, *prompt, provider, config.n);
    } catch (const ProviderError&) {
      summary.quarantined.push_back(sample->bug_id);
      continue;
    }
    if (std::any_of(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.infrastructure; }))
      summary.quarantined.push_back(sample->bug_id);
    summary.outcomes += static_cast<int>(outcomes.size());
    log << outcome_lines(outcomes);
    log.flush();
    if (!log) throw StorageError("write to " + config.log_path.string() + " failed");
  }
  summary.chains = resolver.chains_submitted() - chains_before;
  util::write_file_atomic(prompts_path, sidecars);
  return summary;
}

}  // namespace crashgym::resolve
