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
#include <string>
#include <vector>

#include "crashgym/curate/curator.hpp"

namespace crashgym::mock {

namespace fs = std::filesystem;

// What the three reproducibility checks should conclude for a record.
enum class Expectation { kAccept, kNoCrashAtBug, kNoCrashAtParent, kFixStillCrashes };

std::string to_string(Expectation e);

struct MiniKernelBug {
  curate::RawBugRecord raw;
  Expectation expect = Expectation::kAccept;
  std::string file;
  std::string function;
};

struct MiniKernelOptions {
  int accepted_bugs = 20;
  // Adds one record failing each check.
  bool with_rejects = true;
};

struct MiniKernel {
  fs::path repo;
  std::string git_url;
  std::vector<MiniKernelBug> bugs;

  std::vector<curate::RawBugRecord> records() const;
};

// Writes a small git repository whose history introduces and fixes
// crashgym_fault markers. Commit ids depend only on the options.
MiniKernel make_minikernel(const fs::path& dir, const MiniKernelOptions& options = {});

}  // namespace crashgym::mock
