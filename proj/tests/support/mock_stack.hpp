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

// A mock worker stack with an inline cluster, shared by the resolver,
// CLI and acceptance tests.

#pragma once

#include <string>

#include "crashgym/orch/cluster.hpp"
#include "crashgym/util/fs.hpp"
#include "crashgym/worker/executors.hpp"

namespace crashgym::testing {

struct MockStack {
  MockStack()
      : home("crashgym-stack"),
        stack(worker::StackConfig{home.path(), "mock", "", ""}),
        cluster(options(), stack.executors(), clock) {}

  static orch::ClusterOptions options() {
    orch::ClusterOptions o;
    o.db_path = ":memory:";
    o.scheduler = worker::default_scheduler_options();
    return o;
  }

  util::TempDir home;
  orch::SystemClock clock;
  worker::WorkerStack stack;
  orch::LocalCluster cluster;
};

}  // namespace crashgym::testing
