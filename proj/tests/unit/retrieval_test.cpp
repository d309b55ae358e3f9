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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "crashgym/errors.hpp"
#include "crashgym/retrieval/bm25.hpp"

namespace crashgym::retrieval {
namespace {

// Direct formula over raw documents, no index.
std::vector<std::pair<std::string, double>> naive_bm25(
    const std::map<std::string, std::string>& docs, const std::string& query) {
  std::map<std::string, std::vector<std::string>> toks;
  double total = 0;
  for (const auto& [p, t] : docs) {
    toks[p] = tokenize(t);
    total += static_cast<double>(toks[p].size());
  }
  const double avg = docs.empty() ? 1.0 : total / static_cast<double>(docs.size());
  std::map<std::string, int> q;
  for (const auto& t : tokenize(query)) ++q[t];
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [p, words] : toks) {
    double s = 0;
    bool any = false;
    for (const auto& [term, qtf] : q) {
      const double tf = static_cast<double>(std::count(words.begin(), words.end(), term));
      if (tf == 0) continue;
      int df = 0;
      for (const auto& [p2, w2] : toks) df += std::count(w2.begin(), w2.end(), term) > 0;
      const double n = static_cast<double>(docs.size());
      const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
      const double dl = static_cast<double>(words.size());
      s += qtf * idf * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * dl / avg));
      any = true;
    }
    if (any && s > 0) out.emplace_back(p, s);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return out;
}

TEST(Tokenize, SplitsIdentifiers) {
  EXPECT_EQ(tokenize("cinergyt2_frontend_attach+0x1a"),
            (std::vector<std::string>{"cinergyt2_frontend_attach", "cinergyt2", "frontend",
                                      "attach", "0x1a"}));
  EXPECT_EQ(tokenize("HTTPServer fooBar x"),
            (std::vector<std::string>{"httpserver", "http", "server", "foobar", "foo", "bar",
                                      "x"}));
  EXPECT_TRUE(tokenize("+-*/ ").empty());
}

TEST(Bm25, SmallCorpusMatchesHandOracle) {
  FileCorpus c("c", {{"d1", "alpha beta"}, {"d2", "alpha alpha"}, {"d3", "gamma"}});
  RetrievalResult r = bm25_rank(c, "alpha", 2);
  ASSERT_EQ(r.ranked_paths, (std::vector<std::string>{"d2", "d1"}));
  EXPECT_NEAR(r.scores[0], 0.6118390439885316, 1e-12);
  EXPECT_NEAR(r.scores[1], 0.4344571362775708, 1e-12);
  EXPECT_DOUBLE_EQ(c.avg_doc_len(), 5.0 / 3.0);
}

TEST(Bm25, NoMatchingTermIsEmpty) {
  FileCorpus c("c", {{"d1", "alpha beta"}});
  EXPECT_TRUE(bm25_rank(c, "zeta", 5).ranked_paths.empty());
}

TEST(Bm25, EmptyQuery) {
  FileCorpus c("c", {{"d1", "alpha beta"}});
  EXPECT_THROW(bm25_rank(c, "  ;; ", 5), EmptyQuery);
  EXPECT_THROW(bm25_rank(c, "alpha", 0), ValidationError);
}

TEST(Bm25, TiesBreakByPath) {
  FileCorpus c("c", {{"b.c", "foo"}, {"a.c", "foo"}, {"c.c", "foo"}});
  EXPECT_EQ(bm25_rank(c, "foo", 3).ranked_paths, (std::vector<std::string>{"a.c", "b.c", "c.c"}));
}

TEST(Bm25, IndexRebuildsFromEntries) {
  FileCorpus c("c", {{"x.c", "int foo_bar;"}, {"y.h", "fooBar"}});
  FileCorpus again(c.commit_id(), c.entries());
  EXPECT_EQ(again.index().size(), c.index().size());
  EXPECT_EQ(again.doc_lengths(), c.doc_lengths());
  double sum = 0;
  for (int l : c.doc_lengths()) sum += l;
  EXPECT_DOUBLE_EQ(c.avg_doc_len(), sum / 2);
}

class RandomCorpus : public ::testing::Test {
 protected:
  std::mt19937_64 rng{77};
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  std::string words(int n) {
    static const char* kVocab[] = {"alloc", "free", "skb", "sock", "net_dev", "usbHub",
                                   "mutex", "lock", "page", "inode", "kfree_skb", "rcu"};
    std::string s;
    for (int i = 0; i < n; ++i) s += std::string(kVocab[uniform(0, 11)]) + " ";
    return s;
  }
  std::map<std::string, std::string> corpus() {
    std::map<std::string, std::string> docs;
    const int n = uniform(1, 50);
    for (int i = 0; i < n; ++i) docs["f" + std::to_string(i) + ".c"] = words(uniform(0, 30));
    return docs;
  }
};

TEST_F(RandomCorpus, IndexedEqualsNaive) {
  for (int iter = 0; iter < 200; ++iter) {
    auto docs = corpus();
    const std::string query = words(uniform(1, 6));
    const int k = uniform(1, 60);
    RetrievalResult r = bm25_rank(FileCorpus("c", docs), query, k);
    auto expect = naive_bm25(docs, query);
    if (expect.size() > static_cast<size_t>(k)) expect.resize(static_cast<size_t>(k));
    ASSERT_EQ(r.ranked_paths.size(), expect.size());
    for (size_t i = 0; i < expect.size(); ++i) {
      EXPECT_EQ(r.ranked_paths[i], expect[i].first);
      EXPECT_NEAR(r.scores[i], expect[i].second, 1e-9);
    }
    EXPECT_TRUE(std::is_sorted(r.scores.rbegin(), r.scores.rend()));
  }
}

// With a single query term and an added document of average length the
// idf shifts uniformly and the length normalization is unchanged, so the
// order of existing documents is preserved.
TEST_F(RandomCorpus, IrrelevantDocumentKeepsOrder) {
  int checked = 0;
  for (int iter = 0; iter < 400; ++iter) {
    auto docs = corpus();
    FileCorpus base("c", docs);
    const double avg = base.avg_doc_len();
    if (std::floor(avg) != avg) continue;
    const std::string query = "sock";
    auto before = bm25_rank(base, query, 100).ranked_paths;
    std::string filler;
    for (int i = 0; i < static_cast<int>(avg); ++i) filler += "zzz ";
    docs["zz_irrelevant.c"] = filler;
    auto after = bm25_rank(FileCorpus("c", docs), query, 100).ranked_paths;
    EXPECT_EQ(before, after);
    ++checked;
  }
  EXPECT_GT(checked, 10);
}

TEST(Oracle, DistinctPathsInDiffOrder) {
  std::string fix =
      "--- a/z.c\n+++ b/z.c\n@@ -1 +1 @@\n-a\n+b\n"
      "--- a/a.c\n+++ b/a.c\n@@ -1 +1 @@\n-a\n+b\n"
      "--- a/z.c\n+++ b/z.c\n@@ -5 +5 @@\n-a\n+b\n"
      "--- a/old.c\n+++ b/new.c\n@@ -1 +1 @@\n-a\n+b\n";
  EXPECT_EQ(oracle_files(fix), (std::vector<std::string>{"z.c", "a.c", "new.c"}));
}

TEST(Recall, PerfectRankingsAndMonotonicity) {
  std::map<std::string, std::vector<std::string>> oracle{{"a", {"x.c"}}, {"b", {"y.c", "z.c"}}};
  auto rows = recall_report(oracle, oracle, {"a", "b"}, {1, 3}, "16K");
  EXPECT_EQ(rows[1].all_pct, 100.0);
  EXPECT_EQ(rows[1].any_pct, 0.0);
  EXPECT_EQ(rows[1].none_pct, 0.0);
  EXPECT_EQ(rows[0].all, 1);
  EXPECT_EQ(rows[0].any, 1);
  EXPECT_LE(rows[0].all_pct, rows[1].all_pct);
  EXPECT_EQ(recall_csv(rows),
            "k,budget,all_pct,any_pct,none_pct\n1,16K,50.00,50.00,0.00\n3,16K,100.00,0.00,0.00\n");
}

}  // namespace
}  // namespace crashgym::retrieval
