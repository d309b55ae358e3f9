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

#include "crashgym/orch/store.hpp"

#include <sqlite3.h>

#include "crashgym/errors.hpp"

namespace crashgym::orch {
namespace {

class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
      throw StoreUnavailable(std::string("prepare failed: ") + sqlite3_errmsg(db));
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, const std::string& v) {
    sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }
  Stmt& bind(int i, int v) { return bind(i, static_cast<std::int64_t>(v)); }
  Stmt& bind_null(int i) {
    sqlite3_bind_null(stmt_, i);
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    if (rc == SQLITE_CORRUPT || rc == SQLITE_NOTADB)
      throw StoreCorrupt(std::string("store corrupt: ") + sqlite3_errmsg(db_));
    throw StoreUnavailable(std::string("store error: ") + sqlite3_errmsg(db_));
  }
  void run() {
    while (step()) {
    }
  }

  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p),
                           static_cast<size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }
  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

nlohmann::json parse_column(const std::string& text, const char* what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception&) {
    throw StoreCorrupt(std::string("unreadable ") + what + " in store");
  }
}

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS jobs (
  job_id TEXT PRIMARY KEY,
  status TEXT NOT NULL,
  created_at INTEGER NOT NULL,
  updated_at INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS steps (
  job_id TEXT NOT NULL REFERENCES jobs(job_id),
  step_index INTEGER NOT NULL,
  kind TEXT NOT NULL,
  params TEXT NOT NULL,
  status TEXT NOT NULL,
  attempt INTEGER NOT NULL,
  worker_id TEXT,
  result TEXT,
  PRIMARY KEY (job_id, step_index)
);
CREATE TABLE IF NOT EXISTS events (
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  job_id TEXT NOT NULL,
  step_index INTEGER NOT NULL,
  attempt INTEGER NOT NULL,
  type TEXT NOT NULL,
  detail TEXT NOT NULL,
  at INTEGER NOT NULL
);
CREATE INDEX IF NOT EXISTS events_by_job ON events(job_id, seq);
CREATE TABLE IF NOT EXISTS artifacts (
  job_id TEXT NOT NULL,
  step_index INTEGER NOT NULL,
  ref TEXT NOT NULL,
  PRIMARY KEY (job_id, step_index)
);
)sql";

}  // namespace

JobStore::JobStore(const std::filesystem::path& db_path) {
  const std::string path = db_path.string();
  if (path != ":memory:" && db_path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(db_path.parent_path(), ec);
  }
  if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw StoreUnavailable("cannot open job store " + path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 10000);
  try {
    {
      Stmt check(db_, "PRAGMA quick_check");
      if (check.step() && check.text(0) != "ok") throw StoreCorrupt("store failed integrity check");
    }
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=NORMAL");
    exec(kSchema);
  } catch (...) {
    sqlite3_close(db_);
    db_ = nullptr;
    throw;
  }
}

JobStore::~JobStore() { sqlite3_close(db_); }

void JobStore::exec(const char* sql) {
  char* err = nullptr;
  const int rc = sqlite3_exec(db_, sql, nullptr, nullptr, &err);
  if (rc == SQLITE_OK) return;
  std::string msg = err ? err : "unknown";
  sqlite3_free(err);
  if (rc == SQLITE_CORRUPT || rc == SQLITE_NOTADB) throw StoreCorrupt("store corrupt: " + msg);
  throw StoreUnavailable("store error: " + msg);
}

JobStore::Transaction::Transaction(JobStore& store) : store_(store) {
  store_.exec("BEGIN IMMEDIATE");
}

JobStore::Transaction::~Transaction() {
  if (!done_) {
    char* err = nullptr;
    sqlite3_exec(store_.db_, "ROLLBACK", nullptr, nullptr, &err);
    sqlite3_free(err);
  }
}

void JobStore::Transaction::commit() {
  store_.exec("COMMIT");
  done_ = true;
}

void JobStore::insert_job(const Job& job) {
  Stmt(db_, "INSERT INTO jobs(job_id, status, created_at, updated_at) VALUES (?,?,?,?)")
      .bind(1, job.job_id)
      .bind(2, to_string(job.status))
      .bind(3, job.created_at)
      .bind(4, job.updated_at)
      .run();
  for (size_t i = 0; i < job.steps.size(); ++i) {
    const JobStep& s = job.steps[i];
    Stmt st(db_,
            "INSERT INTO steps(job_id, step_index, kind, params, status, attempt, worker_id, result) "
            "VALUES (?,?,?,?,?,?,NULL,NULL)");
    st.bind(1, job.job_id)
        .bind(2, static_cast<int>(i))
        .bind(3, to_string(s.kind))
        .bind(4, s.params.dump())
        .bind(5, to_string(s.status))
        .bind(6, s.attempt)
        .run();
  }
}

void JobStore::update_job_status(const std::string& job_id, JobStatus status, std::int64_t at) {
  Stmt(db_, "UPDATE jobs SET status = ?, updated_at = ? WHERE job_id = ?")
      .bind(1, to_string(status))
      .bind(2, at)
      .bind(3, job_id)
      .run();
}

void JobStore::update_step(const std::string& job_id, int index, const JobStep& s) {
  Stmt st(db_,
          "UPDATE steps SET params = ?, status = ?, attempt = ?, worker_id = ?, result = ? "
          "WHERE job_id = ? AND step_index = ?");
  st.bind(1, s.params.dump()).bind(2, to_string(s.status)).bind(3, s.attempt);
  if (s.worker_id)
    st.bind(4, *s.worker_id);
  else
    st.bind_null(4);
  if (s.result)
    st.bind(5, nlohmann::json(*s.result).dump());
  else
    st.bind_null(5);
  st.bind(6, job_id).bind(7, index).run();
}

void JobStore::set_artifact(const std::string& job_id, int index, const std::string& ref) {
  Stmt(db_, "INSERT OR REPLACE INTO artifacts(job_id, step_index, ref) VALUES (?,?,?)")
      .bind(1, job_id)
      .bind(2, index)
      .bind(3, ref)
      .run();
}

void JobStore::append_event(const Event& e) {
  Stmt(db_,
       "INSERT INTO events(job_id, step_index, attempt, type, detail, at) VALUES (?,?,?,?,?,?)")
      .bind(1, e.job_id)
      .bind(2, e.step_index)
      .bind(3, e.attempt)
      .bind(4, e.type)
      .bind(5, e.detail.dump())
      .bind(6, e.at)
      .run();
}

std::optional<Job> JobStore::load_job(const std::string& job_id) {
  Job job;
  {
    Stmt st(db_, "SELECT status, created_at, updated_at FROM jobs WHERE job_id = ?");
    st.bind(1, job_id);
    if (!st.step()) return std::nullopt;
    job.job_id = job_id;
    try {
      job.status = job_status_from_string(st.text(0));
    } catch (const ValidationError&) {
      throw StoreCorrupt("bad job status in store");
    }
    job.created_at = st.i64(1);
    job.updated_at = st.i64(2);
  }
  {
    Stmt st(db_,
            "SELECT kind, params, status, attempt, worker_id, result FROM steps "
            "WHERE job_id = ? ORDER BY step_index");
    st.bind(1, job_id);
    while (st.step()) {
      JobStep s;
      try {
        s.kind = step_kind_from_string(st.text(0));
        s.status = step_status_from_string(st.text(2));
      } catch (const ValidationError&) {
        throw StoreCorrupt("bad step row in store");
      }
      s.params = parse_column(st.text(1), "step params");
      s.attempt = static_cast<int>(st.i64(3));
      if (!st.is_null(4)) s.worker_id = st.text(4);
      if (!st.is_null(5)) s.result = parse_column(st.text(5), "step result").get<StepResult>();
      job.steps.push_back(std::move(s));
    }
  }
  {
    Stmt st(db_, "SELECT step_index, ref FROM artifacts WHERE job_id = ? ORDER BY step_index");
    st.bind(1, job_id);
    while (st.step()) job.artifacts[static_cast<int>(st.i64(0))] = st.text(1);
  }
  return job;
}

std::vector<std::string> JobStore::job_ids() {
  std::vector<std::string> ids;
  Stmt st(db_, "SELECT job_id FROM jobs ORDER BY created_at, rowid");
  while (st.step()) ids.push_back(st.text(0));
  return ids;
}

std::vector<Event> JobStore::events(const std::optional<std::string>& job_id) {
  std::vector<Event> out;
  Stmt st(db_, job_id ? "SELECT seq, job_id, step_index, attempt, type, detail, at FROM events "
                        "WHERE job_id = ? ORDER BY seq"
                      : "SELECT seq, job_id, step_index, attempt, type, detail, at FROM events "
                        "ORDER BY seq");
  if (job_id) st.bind(1, *job_id);
  while (st.step()) {
    Event e;
    e.seq = st.i64(0);
    e.job_id = st.text(1);
    e.step_index = static_cast<int>(st.i64(2));
    e.attempt = static_cast<int>(st.i64(3));
    e.type = st.text(4);
    e.detail = parse_column(st.text(5), "event detail");
    e.at = st.i64(6);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<std::pair<std::string, int>> JobStore::inflight_steps() {
  std::vector<std::pair<std::string, int>> out;
  Stmt st(db_,
          "SELECT s.job_id, s.step_index FROM steps s JOIN jobs j ON j.job_id = s.job_id "
          "WHERE s.status IN ('Dispatched', 'Running') "
          "AND j.status IN ('Queued', 'Running') ORDER BY j.created_at, j.rowid, s.step_index");
  while (st.step()) out.emplace_back(st.text(0), static_cast<int>(st.i64(1)));
  return out;
}

}  // namespace crashgym::orch
