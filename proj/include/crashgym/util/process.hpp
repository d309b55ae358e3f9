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

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace crashgym::util {

struct RunOptions {
  std::filesystem::path cwd;
  std::optional<std::chrono::milliseconds> timeout;
  std::string stdin_data;
  bool merge_stderr = false;
};

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
  bool timed_out = false;

  bool ok() const { return exit_code == 0 && !timed_out; }
};

// Runs argv[0] (PATH lookup) to completion, capturing stdout and stderr.
ProcessResult run_process(const std::vector<std::string>& argv,
                          const RunOptions& options = {});

// A child process whose stdout (and stderr) is consumed line by line.
class LineProcess {
 public:
  explicit LineProcess(const std::vector<std::string>& argv,
                       const std::filesystem::path& cwd = {});
  ~LineProcess();
  LineProcess(const LineProcess&) = delete;
  LineProcess& operator=(const LineProcess&) = delete;

  enum class Status { kLine, kTimeout, kEof };
  // Waits up to `wait` for the next complete line.
  Status read_line(std::chrono::milliseconds wait, std::string& line);
  void kill();
  int wait_exit();

 private:
  pid_t pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  bool eof_ = false;
  int exit_code_ = -1;
};

std::string shell_quote(std::string_view s);

}  // namespace crashgym::util
