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

// Persistent job state: a materialized jobs/steps view plus an append-only
// event log, in one SQLite file.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crashgym/orch/types.hpp"

struct sqlite3;

namespace crashgym::orch {

struct Event {
  std::int64_t seq = 0;
  std::string job_id;
  int step_index = -1;
  int attempt = 0;
  std::string type;
  nlohmann::json detail = nlohmann::json::object();
  std::int64_t at = 0;
};

class JobStore {
 public:
  // Throws StoreUnavailable when the file cannot be opened and StoreCorrupt
  // when it is not a valid store.
  explicit JobStore(const std::filesystem::path& db_path);
  ~JobStore();
  JobStore(const JobStore&) = delete;
  JobStore& operator=(const JobStore&) = delete;

  class Transaction {
   public:
    explicit Transaction(JobStore& store);
    ~Transaction();
    Transaction(const Transaction&) = delete;
    Transaction& operator=(const Transaction&) = delete;
    void commit();

   private:
    JobStore& store_;
    bool done_ = false;
  };

  void insert_job(const Job& job);
  void update_job_status(const std::string& job_id, JobStatus status, std::int64_t at);
  void update_step(const std::string& job_id, int index, const JobStep& step);
  void set_artifact(const std::string& job_id, int index, const std::string& ref);
  void append_event(const Event& event);

  std::optional<Job> load_job(const std::string& job_id);
  std::vector<std::string> job_ids();
  std::vector<Event> events(const std::optional<std::string>& job_id = std::nullopt);
  // (job_id, step_index) of every Dispatched or Running step of a
  // non-terminal job.
  std::vector<std::pair<std::string, int>> inflight_steps();

 private:
  void exec(const char* sql);
  sqlite3* db_ = nullptr;
};

}  // namespace crashgym::orch
