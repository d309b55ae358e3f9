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

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "crashgym/model/sample.hpp"

namespace crashgym::retrieval {

enum class Mode { kOracle, kBm25 };

std::string to_string(Mode mode);
Mode mode_from_string(const std::string& s);

// Lowercased [A-Za-z0-9_] runs, each followed by its snake_case and
// camelCase parts when it has more than one.
std::vector<std::string> tokenize(std::string_view text);

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

// Robertson-style idf that never goes negative.
double bm25_idf(size_t doc_count, size_t doc_freq);

struct Posting {
  int doc = 0;
  int term_freq = 0;
};

class FileCorpus {
 public:
  FileCorpus() = default;
  FileCorpus(std::string commit_id, std::map<std::string, std::string> entries);

  // Source-like files under `root`; files containing NUL bytes are skipped.
  static FileCorpus from_directory(const std::filesystem::path& root, std::string commit_id = {});
  static bool is_source_path(const std::string& path);

  const std::string& commit_id() const { return commit_id_; }
  const std::map<std::string, std::string>& entries() const { return entries_; }
  const std::vector<std::string>& paths() const { return paths_; }
  const std::unordered_map<std::string, std::vector<Posting>>& index() const { return index_; }
  const std::vector<int>& doc_lengths() const { return doc_lengths_; }
  double avg_doc_len() const { return avg_doc_len_; }
  size_t size() const { return paths_.size(); }

 private:
  std::string commit_id_;
  std::map<std::string, std::string> entries_;
  std::vector<std::string> paths_;
  std::unordered_map<std::string, std::vector<Posting>> index_;
  std::vector<int> doc_lengths_;
  double avg_doc_len_ = 0;
};

struct RetrievalResult {
  Mode mode = Mode::kBm25;
  int k = 0;
  std::vector<std::string> ranked_paths;
  std::vector<double> scores;

  friend bool operator==(const RetrievalResult&, const RetrievalResult&) = default;
};

// Distinct post-image paths of the gold fix in diff order.
std::vector<std::string> oracle_files(const model::BenchSample& sample);
std::vector<std::string> oracle_files(const std::string& fix);

// Throws EmptyQuery when the query has no tokens and ValidationError for
// k < 1. Only documents with a positive score are returned.
RetrievalResult bm25_rank(const FileCorpus& corpus, std::string_view query, int k,
                          const Bm25Params& params = {});

struct RecallRow {
  int k = 0;
  std::string budget;
  int eligible = 0;
  int all = 0;
  int any = 0;
  int none = 0;
  double all_pct = 0;
  double any_pct = 0;
  double none_pct = 0;
};

enum class Overlap { kAll, kAny, kNone };

Overlap overlap_at(const std::vector<std::string>& oracle,
                   const std::vector<std::string>& ranking, int k);

// `rankings` maps bug id to its recorded ranking; only ids in `eligible`
// are counted. all/any percentages are rounded to two decimals and none is
// their complement to 100.
std::vector<RecallRow> recall_report(const std::map<std::string, std::vector<std::string>>& oracle,
                                     const std::map<std::string, std::vector<std::string>>& rankings,
                                     const std::vector<std::string>& eligible,
                                     const std::vector<int>& k_values, const std::string& budget);

std::string recall_csv(const std::vector<RecallRow>& rows);

}  // namespace crashgym::retrieval
