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

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "crashgym/curate/curator.hpp"
#include "crashgym/errors.hpp"
#include "crashgym/orch/queue.hpp"
#include "crashgym/eval/evaluator.hpp"
#include "crashgym/mock/minikernel.hpp"
#include "crashgym/model/sample.hpp"
#include "crashgym/orch/cluster.hpp"
#include "crashgym/resolve/resolver.hpp"
#include "crashgym/retrieval/bm25.hpp"
#include "crashgym/util/fs.hpp"
#include "crashgym/util/text.hpp"
#include "crashgym/worker/executors.hpp"

namespace {

using namespace crashgym;
namespace fs = std::filesystem;

constexpr int kUsageExit = 2;

struct GlobalFlags {
  std::string home;
  std::string backend;
  std::string build_command;
  std::string vm_command;
  std::string seed;
  bool embedded = false;
};

struct Settings {
  fs::path home;
  std::string backend;
  std::string build_command;
  std::string vm_command;
  std::uint64_t seed = 0;
  bool embedded = false;
};

// Flag, then environment, then <home>/config.json, then the fallback.
Settings resolve_settings(const GlobalFlags& flags) {
  Settings s;
  s.home = flags.home.empty() ? util::crashgym_home() : fs::path(flags.home);
  nlohmann::json file = nlohmann::json::object();
  const fs::path config = s.home / "config.json";
  if (fs::exists(config)) {
    try {
      file = nlohmann::json::parse(util::read_file(config));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(config.string() + ": " + e.what());
    }
  }
  auto pick = [&](const std::string& flag, const char* env, const char* key,
                  const std::string& fallback) -> std::string {
    if (!flag.empty()) return flag;
    if (const char* v = std::getenv(env); v && *v) return v;
    if (file.contains(key)) {
      const auto& v = file[key];
      return v.is_string() ? v.get<std::string>() : v.dump();
    }
    return fallback;
  };
  s.backend = pick(flags.backend, "CRASHGYM_BACKEND", "backend", "mock");
  if (s.backend != "mock" && s.backend != "shell")
    throw ValidationError("backend must be mock or shell, got " + s.backend);
  s.build_command = pick(flags.build_command, "CRASHGYM_BUILD_COMMAND", "build_command", "");
  s.vm_command = pick(flags.vm_command, "CRASHGYM_VM_COMMAND", "vm_command", "");
  const std::string seed = pick(flags.seed, "CRASHGYM_SEED", "seed", "0");
  try {
    s.seed = std::stoull(seed);
  } catch (const std::exception&) {
    throw ValidationError("seed is not an unsigned integer: " + seed);
  }
  s.embedded = flags.embedded;
  return s;
}

// Worker stack and inline cluster over the job database under home.
class Runtime {
 public:
  explicit Runtime(const Settings& s)
      : stack_(make_stack(s)), cluster_(options(s), stack_.executors(), clock_) {}

  worker::WorkerStack& stack() { return stack_; }
  orch::LocalCluster& cluster() { return cluster_; }

 private:
  static worker::StackConfig make_stack(const Settings& s) {
    fs::create_directories(s.home);
    return worker::StackConfig{s.home, s.backend, s.build_command, s.vm_command};
  }

  static orch::ClusterOptions options(const Settings& s) {
    orch::ClusterOptions o;
    o.db_path = s.home / "jobs.db";
    o.scheduler = worker::default_scheduler_options();
    return o;
  }

  orch::SystemClock clock_;
  worker::WorkerStack stack_;
  orch::LocalCluster cluster_;
};

std::string read_input(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), {}};
  if (!fs::exists(path)) throw InputNotFound("no such file: " + path);
  return util::read_file(path);
}

nlohmann::json parse_json(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

std::vector<model::BenchSample> load_dataset(const std::string& path) {
  if (!fs::exists(path)) throw InputNotFound("dataset not found: " + path);
  return model::load_samples(path);
}

std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  std::istringstream in(csv);
  for (std::string part; std::getline(in, part, ',');) {
    try {
      out.push_back(std::stoi(std::string(util::trim(part))));
    } catch (const std::exception&) {
      throw ValidationError("not an integer list: " + csv);
    }
  }
  return out;
}

prompt::PromptBudget budget_of(int max_tokens) {
  prompt::PromptBudget b;
  b.max_context_tokens = max_tokens;
  prompt::validate(b);
  return b;
}

// ---- job ----

struct JobArgs {
  std::string spec;
  std::string job_id;
  int step = -1;
};

int job_submit(const Settings& s, const JobArgs& a) {
  const auto steps = orch::parse_job_spec(parse_json(read_input(a.spec), "job spec"));
  Runtime rt(s);
  if (s.embedded) {
    std::cout << rt.cluster().run_job(steps).job_id << '\n';
  } else {
    std::cout << rt.cluster().scheduler().submit_job(steps) << '\n';
  }
  return 0;
}

int job_status(const Settings& s, const JobArgs& a) {
  Runtime rt(s);
  std::cout << nlohmann::json(rt.cluster().scheduler().query_status(a.job_id)).dump(2) << '\n';
  return 0;
}

int job_logs(const Settings& s, const JobArgs& a) {
  Runtime rt(s);
  const auto job = rt.cluster().scheduler().query_status(a.job_id);
  const int index = a.step < 0 ? static_cast<int>(job.steps.size()) - 1 : a.step;
  if (index < 0 || index >= static_cast<int>(job.steps.size()))
    throw InputNotFound("job " + a.job_id + " has no step " + std::to_string(index));
  const auto& step = job.steps[index];
  if (!step.result) throw LogUnavailable("step " + std::to_string(index) + " has not finished");
  if (step.result->artifact_ref && rt.stack().artifacts().exists(*step.result->artifact_ref)) {
    std::cout << rt.stack().artifacts().read(*step.result->artifact_ref);
    return 0;
  }
  std::cout << nlohmann::json(*step.result).dump(2) << '\n';
  return 0;
}

int job_list(const Settings& s) {
  Runtime rt(s);
  for (const auto& id : rt.cluster().scheduler().list_jobs()) std::cout << id << '\n';
  return 0;
}

int worker_drain(const Settings& s) {
  Runtime rt(s);
  const int recovered = rt.cluster().scheduler().recover();
  rt.cluster().drain();
  std::cout << nlohmann::json{{"recovered", recovered}}.dump() << '\n';
  return 0;
}

// ---- dataset ----

struct CurateArgs {
  std::string raw;
  std::string git_url;
  std::string out;
  int vms = 4;
  int timeout_minutes = 10;
};

int dataset_curate(const Settings& s, const CurateArgs& a) {
  if (!fs::exists(a.raw)) throw InputNotFound("raw records not found: " + a.raw);
  const auto raws = curate::load_raw_records(a.raw);
  Runtime rt(s);
  curate::GitCommitGraph graph(rt.stack().git(), a.git_url);
  curate::CurationConfig config{a.git_url, a.vms, a.timeout_minutes, s.seed};
  curate::Curator curator(rt.cluster(), graph, config);
  const auto result = curator.build_dataset(raws);
  curate::write_dataset(a.out, result);
  std::cout << nlohmann::json{{"accepted", result.samples.size()},
                              {"rejected", result.rejected.size()},
                              {"quarantined", result.quarantined.size()}}
                   .dump()
            << '\n';
  return 0;
}

int dataset_report(const std::string& path) {
  std::cout << model::to_json(model::distribution(load_dataset(path))).dump(2) << '\n';
  return 0;
}

// ---- resolve ----

struct SourceArgs {
  std::string sources;
};

std::unique_ptr<resolve::SourceView> make_sources(const std::string& spec, Runtime* rt) {
  if (spec.rfind("recorded:", 0) == 0)
    return std::make_unique<resolve::RecordedSourceView>(fs::path(spec.substr(9)));
  if (spec.rfind("git:", 0) == 0) {
    if (!rt) throw ValidationError("git sources need a worker stack");
    return std::make_unique<resolve::GitSourceView>(rt->stack().git(), spec.substr(4));
  }
  throw ValidationError("sources must be recorded:<file> or git:<url>, got " + spec);
}

struct CampaignArgs {
  std::string dataset;
  std::string setting = "oracle";
  int budget = 16000;
  int n = 10;
  std::string provider;
  std::string model;
  std::string sources;
  std::string git_url;
  std::string log;
  int timeout_minutes = 10;
  int vm_count = 1;
};

std::unique_ptr<resolve::CompletionProvider> make_provider(
    const CampaignArgs& a, const std::vector<model::BenchSample>& dataset) {
  if (a.provider.rfind("fixture:", 0) == 0)
    return std::make_unique<resolve::FixtureProvider>(fs::path(a.provider.substr(8)),
                                                      a.model.empty() ? "fixture" : a.model);
  if (a.provider == "gold") {
    resolve::ScriptedProvider::Outputs outputs;
    for (const auto& s : dataset) outputs[s.bug_id] = {"```diff\n" + s.gold_fix + "```\n"};
    return std::make_unique<resolve::ScriptedProvider>(std::move(outputs),
                                                       a.model.empty() ? "gold" : a.model);
  }
  throw ValidationError("provider must be fixture:<dir> or gold, got " + a.provider);
}

int resolve_campaign(const Settings& s, const CampaignArgs& a) {
  const auto dataset = load_dataset(a.dataset);
  auto provider = make_provider(a, dataset);
  Runtime rt(s);
  auto sources = make_sources(a.sources, &rt);
  std::string git_url = a.git_url;
  if (git_url.empty() && a.sources.rfind("git:", 0) == 0) git_url = a.sources.substr(4);
  resolve::TrialConfig trial;
  trial.git_url = git_url;
  trial.timeout_minutes = a.timeout_minutes;
  trial.vm_count = a.vm_count;
  trial.seed = s.seed;
  resolve::Resolver resolver(rt.cluster(), trial);
  resolve::CampaignConfig config;
  config.setting = retrieval::mode_from_string(a.setting);
  config.budget = budget_of(a.budget);
  config.n = a.n;
  config.log_path = a.log;
  const auto summary = resolve::run_campaign(dataset, *sources, *provider, resolver, config);
  std::cout << resolve::to_json(summary).dump() << '\n';
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::vector<std::string> logs;
  std::string dataset;
  int dataset_size = 0;
  std::string ns = "1,10";
  bool union_only = false;
  std::string format = "csv";
  std::string out;
};

int dataset_size_of(const EvalArgs& a, const std::vector<model::BenchSample>* dataset) {
  if (a.dataset_size > 0) return a.dataset_size;
  if (dataset) return static_cast<int>(dataset->size());
  throw ValidationError("eval needs --dataset or --dataset-size");
}

int eval_report(const EvalArgs& a) {
  if (a.format != "csv" && a.format != "json") throw ValidationError("format must be csv or json");
  std::optional<std::vector<model::BenchSample>> dataset;
  if (!a.dataset.empty()) dataset = load_dataset(a.dataset);
  const int size = dataset_size_of(a, dataset ? &*dataset : nullptr);

  std::vector<std::vector<resolve::TrialOutcome>> logs;
  std::vector<resolve::TrialOutcome> all;
  for (const auto& path : a.logs) {
    logs.push_back(resolve::load_outcomes(path));
    all.insert(all.end(), logs.back().begin(), logs.back().end());
  }
  const auto rates = eval::apply_solve_rates(all, size, parse_int_list(a.ns));
  const auto united = eval::union_solve(logs, size);
  std::vector<eval::LocalizationRow> localization;
  if (dataset) localization = eval::localization_report(all, *dataset);

  nlohmann::json report = {{"dataset_size", size}, {"outcomes", all.size()},
                           {"rates", nlohmann::json::array()}, {"union", eval::to_json(united)},
                           {"localization", nlohmann::json::array()}};
  for (const auto& r : rates) report["rates"].push_back(eval::to_json(r));
  for (const auto& r : localization) report["localization"].push_back(eval::to_json(r));

  if (!a.out.empty()) {
    fs::create_directories(a.out);
    const fs::path out(a.out);
    util::write_file_atomic(out / "rates.csv", eval::rates_csv(rates));
    util::write_file_atomic(out / "report.json", report.dump(2) + "\n");
    util::write_file_atomic(out / "union.csv",
                            "unique_solved,total_solved,union_pct\n" +
                                std::to_string(united.unique_solved) + "," +
                                std::to_string(united.total_solved) + "," +
                                util::format_fixed(united.union_pct, 2) + "\n");
    if (dataset) {
      util::write_file_atomic(out / "localization.csv", eval::localization_csv(localization));
      util::write_file_atomic(out / "partial.csv", eval::partial_csv(localization));
    }
  }

  if (a.union_only) {
    if (a.format == "json")
      std::cout << eval::to_json(united).dump() << '\n';
    else
      std::cout << "unique_solved,total_solved,union_pct\n"
                << united.unique_solved << ',' << united.total_solved << ','
                << util::format_fixed(united.union_pct, 2) << '\n';
    return 0;
  }
  if (a.format == "json")
    std::cout << report.dump(2) << '\n';
  else
    std::cout << eval::rates_csv(rates);
  return 0;
}

struct RecallArgs {
  std::string dataset;
  std::string sources;
  int budget = 16000;
  std::string ks = "3,5,10,20";
  std::string setting = "bm25";
};

int eval_recall(const RecallArgs& a) {
  const auto dataset = load_dataset(a.dataset);
  auto sources = make_sources(a.sources, nullptr);
  const auto eligible =
      resolve::eligible_bug_ids(dataset, *sources, retrieval::Mode::kBm25, budget_of(a.budget));
  std::map<std::string, std::vector<std::string>> oracle, rankings;
  for (const auto& s : dataset) {
    oracle[s.bug_id] = retrieval::oracle_files(s);
    rankings[s.bug_id] = sources->retrieve(s, retrieval::Mode::kBm25).ranked_paths;
  }
  std::cout << retrieval::recall_csv(retrieval::recall_report(
      oracle, rankings, eligible, parse_int_list(a.ks), std::to_string(a.budget / 1000) + "K"));
  return 0;
}

int eval_crash_fix(const RecallArgs& a) {
  const auto dataset = load_dataset(a.dataset);
  auto sources = make_sources(a.sources, nullptr);
  const auto mode = retrieval::mode_from_string(a.setting);
  const auto eligible = resolve::eligible_bug_ids(dataset, *sources, mode, budget_of(a.budget));
  const auto row = eval::crash_fix_overlap(dataset, {eligible.begin(), eligible.end()},
                                           a.setting + "-" + std::to_string(a.budget / 1000) + "K");
  std::cout << eval::crash_fix_csv({row});
  return 0;
}

// ---- mock ----

struct MiniKernelArgs {
  std::string out;
  int bugs = 20;
  bool no_rejects = false;
};

int mock_minikernel(const MiniKernelArgs& a) {
  mock::MiniKernelOptions options;
  options.accepted_bugs = a.bugs;
  options.with_rejects = !a.no_rejects;
  const auto mk = mock::make_minikernel(a.out, options);
  const fs::path records = fs::absolute(fs::path(a.out) / "raw.jsonl");
  curate::save_raw_records(records.string(), mk.records());
  std::cout << nlohmann::json{{"git_url", mk.git_url},
                              {"records", records.string()},
                              {"bugs", mk.bugs.size()}}
                   .dump()
            << '\n';
  return 0;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSemantic: return 1;
    case ErrorKind::kNotFound: return 2;
    case ErrorKind::kInfrastructure: return 3;
  }
  return 1;
}

int report_error(const std::string& code, const std::string& message, int exit_code) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}, {"exit_code", exit_code}}.dump()
            << '\n';
  return exit_code;
}

int run(int argc, char** argv) {
  CLI::App app{"crashgym: kernel crash resolution platform"};
  app.require_subcommand(1);
  GlobalFlags flags;
  app.add_option("--home", flags.home, "State directory (env CRASHGYM_HOME)");
  app.add_option("--backend", flags.backend, "mock or shell (env CRASHGYM_BACKEND)");
  app.add_option("--build-command", flags.build_command, "Shell backend build command");
  app.add_option("--vm-command", flags.vm_command, "Shell backend VM command");
  app.add_option("--seed", flags.seed, "Seed for reproductions (env CRASHGYM_SEED)");
  app.add_flag("--embedded", flags.embedded, "Run submitted jobs in this process");

  std::function<int()> action;
  auto settings = [&] { return resolve_settings(flags); };

  auto* job = app.add_subcommand("job", "Submit and inspect jobs");
  job->require_subcommand(1);
  JobArgs job_args;
  auto* submit = job->add_subcommand("submit", "Submit a job spec; prints the job id");
  submit->add_option("spec", job_args.spec, "Job spec JSON file, or - for stdin")->required();
  submit->callback([&] { action = [&] { return job_submit(settings(), job_args); }; });
  auto* status = job->add_subcommand("status", "Print a job snapshot");
  status->add_option("job_id", job_args.job_id)->required();
  status->callback([&] { action = [&] { return job_status(settings(), job_args); }; });
  auto* logs = job->add_subcommand("logs", "Print a step's artifact or result");
  logs->add_option("job_id", job_args.job_id)->required();
  logs->add_option("--step", job_args.step, "Step index (default: last)");
  logs->callback([&] { action = [&] { return job_logs(settings(), job_args); }; });
  auto* list = job->add_subcommand("list", "List job ids");
  list->callback([&] { action = [&] { return job_list(settings()); }; });

  auto* worker = app.add_subcommand("worker", "Run workers");
  worker->require_subcommand(1);
  auto* drain = worker->add_subcommand("drain", "Recover in-flight steps and run jobs until idle");
  drain->callback([&] { action = [&] { return worker_drain(settings()); }; });

  auto* dataset = app.add_subcommand("dataset", "Build and describe benchmarks");
  dataset->require_subcommand(1);
  CurateArgs curate_args;
  auto* curate = dataset->add_subcommand("curate", "Validate raw records into a benchmark");
  curate->add_option("raw", curate_args.raw, "Raw records (JSON lines)")->required();
  curate->add_option("--git-url", curate_args.git_url, "Kernel repository")->required();
  curate->add_option("--out", curate_args.out, "Output directory")->required();
  curate->add_option("--vms", curate_args.vms, "VMs for the crash checks");
  curate->add_option("--timeout-minutes", curate_args.timeout_minutes);
  curate->callback([&] { action = [&] { return dataset_curate(settings(), curate_args); }; });
  std::string report_path;
  auto* report = dataset->add_subcommand("report", "Distribution report for a benchmark");
  report->add_option("samples", report_path, "Benchmark (JSON lines)")->required();
  report->callback([&] { action = [&] { return dataset_report(report_path); }; });

  auto* resolve = app.add_subcommand("resolve", "Run repair campaigns");
  resolve->require_subcommand(1);
  CampaignArgs campaign_args;
  auto* campaign = resolve->add_subcommand("campaign", "Prompt, patch and judge every sample");
  campaign->add_option("--dataset", campaign_args.dataset)->required();
  campaign->add_option("--setting", campaign_args.setting, "oracle or bm25");
  campaign->add_option("--budget", campaign_args.budget, "Context size in tokens");
  campaign->add_option("--n", campaign_args.n, "Candidates per bug");
  campaign->add_option("--provider", campaign_args.provider, "fixture:<dir> or gold")->required();
  campaign->add_option("--model", campaign_args.model, "Model name recorded in the log");
  campaign->add_option("--sources", campaign_args.sources, "recorded:<file> or git:<url>")
      ->required();
  campaign->add_option("--git-url", campaign_args.git_url, "Repository for build steps");
  campaign->add_option("--log", campaign_args.log, "Outcome log (appended)")->required();
  campaign->add_option("--timeout-minutes", campaign_args.timeout_minutes);
  campaign->add_option("--vm-count", campaign_args.vm_count);
  campaign->callback([&] { action = [&] { return resolve_campaign(settings(), campaign_args); }; });

  auto* eval = app.add_subcommand("eval", "Aggregate outcome logs");
  eval->require_subcommand(1);
  EvalArgs eval_args;
  auto* eval_report_cmd = eval->add_subcommand("report", "Apply/solve rates and localization");
  eval_report_cmd->add_option("--log", eval_args.logs, "Outcome log; repeatable")->required();
  eval_report_cmd->add_option("--dataset", eval_args.dataset, "Benchmark, for size and localization");
  eval_report_cmd->add_option("--dataset-size", eval_args.dataset_size, "Rate denominator");
  eval_report_cmd->add_option("--n", eval_args.ns, "Candidate cut-offs, comma separated");
  eval_report_cmd->add_flag("--union", eval_args.union_only, "Print only the union of solved bugs");
  eval_report_cmd->add_option("--format", eval_args.format, "csv or json");
  eval_report_cmd->add_option("--out", eval_args.out, "Also write CSV and JSON files here");
  eval_report_cmd->callback([&] { action = [&] { return eval_report(eval_args); }; });
  RecallArgs recall_args;
  auto* recall = eval->add_subcommand("recall", "BM25 recall of the oracle files");
  recall->add_option("--dataset", recall_args.dataset)->required();
  recall->add_option("--sources", recall_args.sources, "recorded:<file>")->required();
  recall->add_option("--budget", recall_args.budget);
  recall->add_option("--k", recall_args.ks, "Cut-offs, comma separated");
  recall->callback([&] { action = [&] { return eval_recall(recall_args); }; });
  auto* crash_fix = eval->add_subcommand("crash-fix", "Crash frames against gold-fix functions");
  crash_fix->add_option("--dataset", recall_args.dataset)->required();
  crash_fix->add_option("--sources", recall_args.sources, "recorded:<file>")->required();
  crash_fix->add_option("--budget", recall_args.budget);
  crash_fix->add_option("--setting", recall_args.setting, "oracle or bm25");
  crash_fix->callback([&] { action = [&] { return eval_crash_fix(recall_args); }; });

  auto* mock = app.add_subcommand("mock", "Synthetic inputs for the mock backend");
  mock->require_subcommand(1);
  MiniKernelArgs mk_args;
  auto* minikernel = mock->add_subcommand("minikernel", "Write a mini kernel repo and raw records");
  minikernel->add_option("--out", mk_args.out)->required();
  minikernel->add_option("--bugs", mk_args.bugs, "Bugs that pass all checks");
  minikernel->add_flag("--no-rejects", mk_args.no_rejects, "Omit the records failing each check");
  minikernel->callback([&] { action = [&] { return mock_minikernel(mk_args); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), kUsageExit);
  }
  try {
    return action();
  } catch (const Error& e) {
    return report_error(e.code(), e.what(), exit_code_for(e.kind()));
  } catch (const nlohmann::json::exception& e) {
    return report_error("ValidationError", e.what(), 1);
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), 3);
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
