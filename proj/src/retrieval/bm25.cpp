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

#include "crashgym/retrieval/bm25.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "crashgym/errors.hpp"
#include "crashgym/patch/diff.hpp"
#include "crashgym/util/fs.hpp"
#include "crashgym/util/text.hpp"

namespace crashgym::retrieval {
namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool upper(char c) { return std::isupper(static_cast<unsigned char>(c)); }
bool lower(char c) { return std::islower(static_cast<unsigned char>(c)); }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

void camel_parts(std::string_view seg, std::vector<std::string>& out) {
  size_t start = 0;
  for (size_t i = 1; i < seg.size(); ++i) {
    const bool boundary =
        upper(seg[i]) && (lower(seg[i - 1]) || digit(seg[i - 1]) ||
                          (upper(seg[i - 1]) && i + 1 < seg.size() && lower(seg[i + 1])));
    if (boundary) {
      out.push_back(util::to_lower(seg.substr(start, i - start)));
      start = i;
    }
  }
  if (start < seg.size()) out.push_back(util::to_lower(seg.substr(start)));
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

std::string to_string(Mode mode) { return mode == Mode::kOracle ? "oracle" : "bm25"; }

Mode mode_from_string(const std::string& s) {
  const std::string l = util::to_lower(s);
  if (l == "oracle") return Mode::kOracle;
  if (l == "bm25") return Mode::kBm25;
  throw ValidationError("unknown retrieval mode: " + s);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < text.size()) {
    if (!word_char(text[i])) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < text.size() && word_char(text[j])) ++j;
    const std::string_view word = text.substr(i, j - i);
    tokens.push_back(util::to_lower(word));
    std::vector<std::string> parts;
    size_t s = 0;
    while (s <= word.size()) {
      size_t e = word.find('_', s);
      if (e == std::string_view::npos) e = word.size();
      if (e > s) camel_parts(word.substr(s, e - s), parts);
      s = e + 1;
    }
    if (parts.size() > 1) tokens.insert(tokens.end(), parts.begin(), parts.end());
    i = j;
  }
  return tokens;
}

double bm25_idf(size_t doc_count, size_t doc_freq) {
  const double n = static_cast<double>(doc_count);
  const double df = static_cast<double>(doc_freq);
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

FileCorpus::FileCorpus(std::string commit_id, std::map<std::string, std::string> entries)
    : commit_id_(std::move(commit_id)), entries_(std::move(entries)) {
  long total = 0;
  for (const auto& [path, text] : entries_) {
    const int doc = static_cast<int>(paths_.size());
    paths_.push_back(path);
    std::map<std::string, int> tf;
    int length = 0;
    for (auto& t : tokenize(text)) {
      ++tf[std::move(t)];
      ++length;
    }
    for (const auto& [term, f] : tf) index_[term].push_back({doc, f});
    doc_lengths_.push_back(length);
    total += length;
  }
  avg_doc_len_ = paths_.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(paths_.size());
}

bool FileCorpus::is_source_path(const std::string& path) {
  static const std::set<std::string> kExt = {".c", ".h", ".S", ".rs", ".sh"};
  return kExt.count(std::filesystem::path(path).extension().string()) > 0;
}

FileCorpus FileCorpus::from_directory(const std::filesystem::path& root, std::string commit_id) {
  std::map<std::string, std::string> entries;
  for (const auto& rel : util::list_tree(root)) {
    if (!is_source_path(rel)) continue;
    std::string text = util::read_file(root / rel);
    if (text.find('\0') != std::string::npos) continue;
    entries.emplace(rel, std::move(text));
  }
  return FileCorpus(std::move(commit_id), std::move(entries));
}

std::vector<std::string> oracle_files(const std::string& fix) {
  std::vector<std::string> out;
  for (const auto& f : patch::parse(fix)) {
    if (f.is_deletion() && std::find(out.begin(), out.end(), f.old_path) != out.end()) continue;
    const std::string& p = f.target_path();
    if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(p);
  }
  return out;
}

std::vector<std::string> oracle_files(const model::BenchSample& sample) {
  return oracle_files(sample.gold_fix);
}

RetrievalResult bm25_rank(const FileCorpus& corpus, std::string_view query, int k,
                          const Bm25Params& params) {
  if (k < 1) throw ValidationError("k must be at least 1");
  std::map<std::string, int> query_tf;
  for (auto& t : tokenize(query)) ++query_tf[std::move(t)];
  if (query_tf.empty()) throw EmptyQuery("query has no indexable tokens");

  RetrievalResult result;
  result.mode = Mode::kBm25;
  result.k = k;
  const size_t n = corpus.size();
  std::vector<double> score(n, 0.0);
  std::vector<char> touched(n, 0);
  const double avg = corpus.avg_doc_len() > 0 ? corpus.avg_doc_len() : 1.0;
  for (const auto& [term, qtf] : query_tf) {
    auto it = corpus.index().find(term);
    if (it == corpus.index().end()) continue;
    const double idf = bm25_idf(n, it->second.size());
    for (const Posting& p : it->second) {
      const double tf = p.term_freq;
      const double dl = corpus.doc_lengths()[static_cast<size_t>(p.doc)];
      const double norm = params.k1 * (1.0 - params.b + params.b * dl / avg);
      score[static_cast<size_t>(p.doc)] += qtf * idf * tf * (params.k1 + 1.0) / (tf + norm);
      touched[static_cast<size_t>(p.doc)] = 1;
    }
  }
  std::vector<int> docs;
  for (size_t d = 0; d < n; ++d)
    if (touched[d] && score[d] > 0) docs.push_back(static_cast<int>(d));
  auto better = [&](int a, int b) {
    if (score[static_cast<size_t>(a)] != score[static_cast<size_t>(b)])
      return score[static_cast<size_t>(a)] > score[static_cast<size_t>(b)];
    return corpus.paths()[static_cast<size_t>(a)] < corpus.paths()[static_cast<size_t>(b)];
  };
  const size_t keep = std::min(docs.size(), static_cast<size_t>(k));
  std::partial_sort(docs.begin(), docs.begin() + static_cast<long>(keep), docs.end(), better);
  for (size_t i = 0; i < keep; ++i) {
    result.ranked_paths.push_back(corpus.paths()[static_cast<size_t>(docs[i])]);
    result.scores.push_back(score[static_cast<size_t>(docs[i])]);
  }
  return result;
}

Overlap overlap_at(const std::vector<std::string>& oracle, const std::vector<std::string>& ranking,
                   int k) {
  const size_t top = std::min(ranking.size(), static_cast<size_t>(std::max(k, 0)));
  const std::set<std::string> topk(ranking.begin(), ranking.begin() + static_cast<long>(top));
  size_t hit = 0;
  for (const auto& p : oracle) hit += topk.count(p);
  if (!oracle.empty() && hit == oracle.size()) return Overlap::kAll;
  return hit > 0 ? Overlap::kAny : Overlap::kNone;
}

std::vector<RecallRow> recall_report(const std::map<std::string, std::vector<std::string>>& oracle,
                                     const std::map<std::string, std::vector<std::string>>& rankings,
                                     const std::vector<std::string>& eligible,
                                     const std::vector<int>& k_values, const std::string& budget) {
  static const std::vector<std::string> kEmpty;
  std::vector<RecallRow> rows;
  for (int k : k_values) {
    RecallRow row;
    row.k = k;
    row.budget = budget;
    row.eligible = static_cast<int>(eligible.size());
    for (const auto& id : eligible) {
      auto o = oracle.find(id);
      auto r = rankings.find(id);
      switch (overlap_at(o == oracle.end() ? kEmpty : o->second,
                         r == rankings.end() ? kEmpty : r->second, k)) {
        case Overlap::kAll: ++row.all; break;
        case Overlap::kAny: ++row.any; break;
        case Overlap::kNone: ++row.none; break;
      }
    }
    if (row.eligible > 0) {
      row.all_pct = round2(100.0 * row.all / row.eligible);
      row.any_pct = round2(100.0 * row.any / row.eligible);
      row.none_pct = round2(100.0 - row.all_pct - row.any_pct);
    }
    rows.push_back(row);
  }
  return rows;
}

std::string recall_csv(const std::vector<RecallRow>& rows) {
  std::ostringstream out;
  out << "k,budget,all_pct,any_pct,none_pct\n";
  for (const auto& r : rows)
    out << r.k << ',' << r.budget << ',' << util::format_fixed(r.all_pct, 2) << ','
        << util::format_fixed(r.any_pct, 2) << ',' << util::format_fixed(r.none_pct, 2) << '\n';
  return out.str();
}

}  // namespace crashgym::retrieval
