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

#include <string>
#include <stdexcept>
#include <utility>

namespace crashgym {

// Maps onto the CLI exit codes: semantic failures exit 1, usage and lookup
// failures exit 2, infrastructure failures exit 3.
enum class ErrorKind { kSemantic, kNotFound, kInfrastructure };

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message,
        ErrorKind kind = ErrorKind::kSemantic)
      : std::runtime_error(message), code_(std::move(code)), kind_(kind) {}

  const std::string& code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string code_;
  ErrorKind kind_;
};

#define CRASHGYM_DEFINE_ERROR(Name, Kind)                      \
  class Name : public ::crashgym::Error {                      \
   public:                                                     \
    explicit Name(const std::string& message)                  \
        : ::crashgym::Error(#Name, message, Kind) {}            \
  }

CRASHGYM_DEFINE_ERROR(ValidationError, ErrorKind::kSemantic);
CRASHGYM_DEFINE_ERROR(EmptyReport, ErrorKind::kSemantic);
CRASHGYM_DEFINE_ERROR(NoPatchFound, ErrorKind::kSemantic);
CRASHGYM_DEFINE_ERROR(EmptyQuery, ErrorKind::kSemantic);
CRASHGYM_DEFINE_ERROR(TemplateError, ErrorKind::kSemantic);
CRASHGYM_DEFINE_ERROR(PatchRejected, ErrorKind::kSemantic);
CRASHGYM_DEFINE_ERROR(CompileError, ErrorKind::kSemantic);
CRASHGYM_DEFINE_ERROR(InputNotFound, ErrorKind::kNotFound);
CRASHGYM_DEFINE_ERROR(UnknownJob, ErrorKind::kNotFound);
CRASHGYM_DEFINE_ERROR(UnknownCommit, ErrorKind::kNotFound);
CRASHGYM_DEFINE_ERROR(RootCommit, ErrorKind::kSemantic);
CRASHGYM_DEFINE_ERROR(ArtifactMissing, ErrorKind::kNotFound);
CRASHGYM_DEFINE_ERROR(LogUnavailable, ErrorKind::kNotFound);
CRASHGYM_DEFINE_ERROR(StoreUnavailable, ErrorKind::kInfrastructure);
CRASHGYM_DEFINE_ERROR(StoreCorrupt, ErrorKind::kInfrastructure);
CRASHGYM_DEFINE_ERROR(CloneFailure, ErrorKind::kInfrastructure);
CRASHGYM_DEFINE_ERROR(BootFailure, ErrorKind::kInfrastructure);
CRASHGYM_DEFINE_ERROR(StorageError, ErrorKind::kInfrastructure);
CRASHGYM_DEFINE_ERROR(ProviderError, ErrorKind::kInfrastructure);
CRASHGYM_DEFINE_ERROR(InfrastructureError, ErrorKind::kInfrastructure);

#undef CRASHGYM_DEFINE_ERROR

}  // namespace crashgym
