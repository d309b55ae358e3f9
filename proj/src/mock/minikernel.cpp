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

#include "crashgym/mock/minikernel.hpp"

#include <cstdio>
#include <sstream>

#include "crashgym/errors.hpp"
#include "crashgym/patch/diff.hpp"
#include "crashgym/util/fs.hpp"
#include "crashgym/util/process.hpp"
#include "crashgym/util/text.hpp"

namespace crashgym::mock {
namespace {

struct Area {
  const char* dir;
  const char* subsystem;
};

constexpr Area kAreas[] = {
    {"net/core", "net"},       {"fs/ext4", "ext4"},     {"mm", "mm"},
    {"drivers/usb/core", "usb"}, {"sound/core", "sound"}, {"kernel/bpf", "bpf"},
    {"block", "block"},        {"net/ipv4", "net"},     {"fs/btrfs", "btrfs"},
    {"drivers/net", "net"},    {"io_uring", "io-uring"}, {"fs/ntfs3", "ntfs3"},
};

constexpr const char* kNouns[] = {
    "skb_frag",   "inode_cache", "vma_map",    "urb_queue", "pcm_ring",  "prog_array",
    "bio_split",  "tcp_opt",     "extent_buf", "tun_page",  "sqe_ring",  "attr_list",
    "sock_map",   "dir_hash",    "page_pool",  "hub_port",  "timer_slot", "btf_type",
    "req_queue",  "route_tab",   "csum_tree",  "napi_poll", "poll_wait", "xattr_blk",
    "ctx_table",  "mft_rec",     "fib_alias",  "log_tree",
};

constexpr const char* kTitles[] = {
    "KASAN: use-after-free Read in %s",
    "KASAN: slab-out-of-bounds Write in %s",
    "general protection fault in %s",
    "WARNING: ODEBUG bug in %s",
    "BUG: unable to handle kernel NULL pointer dereference in %s",
    "KASAN: null-ptr-deref Read in %s",
    "INFO: task hung in %s",
    "UBSAN: shift-out-of-bounds in %s",
};

std::string format_title(int i, const std::string& fn) {
  std::string t = kTitles[i % std::size(kTitles)];
  return t.replace(t.find("%s"), 2, fn);
}

class RepoWriter {
 public:
  explicit RepoWriter(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
    git({"init", "-q", "--initial-branch=master"});
  }

  void write(const std::string& rel, const std::string& content) {
    util::write_file(root_ / rel, content);
  }
  std::string read(const std::string& rel) const { return util::read_file(root_ / rel); }

  std::string commit(const std::string& message) {
    git({"add", "-A"});
    const std::string date = std::to_string(1672531200 + 3600 * tick_++) + " +0000";
    auto r = util::run_process({"env", "GIT_AUTHOR_DATE=" + date, "GIT_COMMITTER_DATE=" + date,
                                "git", "-c", "user.name=Mini Kernel", "-c",
                                "user.email=dev@minikernel.invalid", "-c", "commit.gpgsign=false",
                                "commit", "-q", "--allow-empty", "-m", message},
                               opts());
    if (!r.ok()) throw StorageError("git commit failed: " + r.err);
    return std::string(util::trim(git({"rev-parse", "HEAD"})));
  }

 private:
  util::RunOptions opts() const {
    util::RunOptions o;
    o.cwd = root_;
    return o;
  }
  std::string git(std::vector<std::string> args) {
    args.insert(args.begin(), "git");
    auto r = util::run_process(args, opts());
    if (!r.ok()) throw StorageError("git " + args[1] + " failed: " + r.err);
    return r.out;
  }

  fs::path root_;
  int tick_ = 0;
};

std::string bug_file(const std::string& noun) {
  std::ostringstream s;
  s << "// SPDX-License-Identifier: GPL-2.0\n"
    << "#include <linux/kernel.h>\n"
    << "#include <linux/slab.h>\n\n"
    << "struct " << noun << " {\n"
    << "\tint refs;\n"
    << "\tint len;\n"
    << "\tvoid *buf;\n"
    << "};\n\n"
    << "static int " << noun << "_validate(struct " << noun << " *s)\n"
    << "{\n"
    << "\tif (!s)\n"
    << "\t\treturn -EINVAL;\n"
    << "\treturn 0;\n"
    << "}\n\n"
    << "int " << noun << "_process(struct " << noun << " *s, int len)\n"
    << "{\n"
    << "\tint ret = " << noun << "_validate(s);\n\n"
    << "\tif (ret)\n"
    << "\t\treturn ret;\n"
    << "\ts->len = len;\n"
    << "\ts->refs++;\n"
    << "\treturn 0;\n"
    << "}\n\n"
    << "void " << noun << "_release(struct " << noun << " *s)\n"
    << "{\n"
    << "\tif (--s->refs == 0)\n"
    << "\t\tkfree(s->buf);\n"
    << "}\n";
  return s.str();
}

std::string replace_once(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos == std::string::npos) throw ValidationError("minikernel edit anchor missing: " + from);
  return text.replace(pos, from.size(), to);
}

std::string generic_file(const std::string& name, int n) {
  std::ostringstream s;
  s << "// SPDX-License-Identifier: GPL-2.0\n#include <linux/kernel.h>\n\n";
  for (int i = 0; i < n; ++i) {
    s << "int " << name << "_helper_" << i << "(int a, int b)\n{\n"
      << "\tif (a > b)\n\t\treturn a - b;\n\treturn b - a + " << i << ";\n}\n\n";
  }
  return s.str();
}

}  // namespace

std::string to_string(Expectation e) {
  switch (e) {
    case Expectation::kAccept: return "accept";
    case Expectation::kNoCrashAtBug: return "no-crash-at-bug";
    case Expectation::kNoCrashAtParent: return "no-crash-at-parent";
    case Expectation::kFixStillCrashes: return "fix-still-crashes";
  }
  return "?";
}

std::vector<curate::RawBugRecord> MiniKernel::records() const {
  std::vector<curate::RawBugRecord> out;
  for (const auto& b : bugs) out.push_back(b.raw);
  return out;
}

MiniKernel make_minikernel(const fs::path& dir, const MiniKernelOptions& options) {
  if (options.accepted_bugs < 0) throw ValidationError("accepted_bugs must be non-negative");
  std::vector<Expectation> plan(static_cast<size_t>(options.accepted_bugs), Expectation::kAccept);
  if (options.with_rejects) {
    // Spread the three rejects through the history.
    const Expectation rejects[] = {Expectation::kNoCrashAtBug, Expectation::kNoCrashAtParent,
                                   Expectation::kFixStillCrashes};
    for (int r = 0; r < 3; ++r) {
      const size_t at = std::min(plan.size(), static_cast<size_t>(6 + 7 * r));
      plan.insert(plan.begin() + static_cast<long>(at), rejects[r]);
    }
  }
  if (plan.size() > std::size(kNouns)) throw ValidationError("too many minikernel bugs");

  MiniKernel mk;
  mk.repo = fs::absolute(dir);
  mk.git_url = mk.repo.string();
  RepoWriter repo(mk.repo);
  repo.write("README", "Mini kernel used by crashgym's mock backend.\n");
  repo.write("Makefile", "obj-y += kernel/ mm/ net/ fs/ drivers/\n");
  repo.write("include/linux/kernel.h",
             "#ifndef _LINUX_KERNEL_H\n#define _LINUX_KERNEL_H\n#define EINVAL 22\n"
             "void crashgym_fault(const char *id, double p, double delay, const char *title);\n"
             "#endif\n");
  repo.write("include/linux/slab.h", "void kfree(const void *p);\n");
  repo.write("kernel/sched/core.c", generic_file("sched", 6));
  repo.write("mm/page_alloc.c", generic_file("page_alloc", 5));
  repo.write("lib/string.c", generic_file("str", 4));
  repo.write("Documentation/changes.txt", "Changes\n=======\n");
  std::vector<std::string> files;
  for (size_t i = 0; i < plan.size(); ++i) {
    const Area& area = kAreas[i % std::size(kAreas)];
    const std::string noun = kNouns[i];
    const std::string file = std::string(area.dir) + "/" + noun + ".c";
    repo.write(file, bug_file(noun));
    files.push_back(file);
  }
  repo.commit("Initial import");

  int changelog = 0;
  auto bump_changelog = [&](const std::string& msg) {
    repo.write("Documentation/changes.txt",
               repo.read("Documentation/changes.txt") + "- " + std::to_string(++changelog) + "\n");
    return repo.commit(msg);
  };

  for (size_t i = 0; i < plan.size(); ++i) {
    const Area& area = kAreas[i % std::size(kAreas)];
    const std::string noun = kNouns[i];
    const std::string& file = files[i];
    const std::string fn = noun + "_process";
    MiniKernelBug bug;
    bug.expect = plan[i];
    bug.file = file;
    bug.function = fn;
    char id[16];
    std::snprintf(id, sizeof id, "mk-%03zu", i + 1);
    const std::string repro_id = std::string("repro-") + id;
    const std::string title = format_title(static_cast<int>(i), fn);
    const int delay = 3 + static_cast<int>((i * 7) % 50);
    const std::string marker = "\tcrashgym_fault(\"" + repro_id + "\", 1.0, " +
                               std::to_string(delay) + ", \"" + title + "\");\n";
    const std::string anchor = "\ts->len = len;\n";
    const std::string guard = "\tif (len < 0 || len > 4096)\n\t\treturn -EINVAL;\n";

    const std::string refs = "\ts->refs++;\n";
    const std::string subsys = area.subsystem;
    const std::string introduce = subsys + ": track " + noun + " length";
    auto diff = [&](const std::string& a, const std::string& b) {
      return patch::render(patch::Patch{*patch::make_diff(file, a, b)});
    };

    const std::string buggy = replace_once(repo.read(file), anchor, marker + anchor);
    std::string commit_bug, commit_fix, gold;
    switch (bug.expect) {
      case Expectation::kAccept: {
        repo.write(file, buggy);
        commit_bug = repo.commit(introduce);
        bump_changelog("Documentation: note " + noun + " change");
        const std::string fixed = replace_once(buggy, marker, guard);
        repo.write(file, fixed);
        commit_fix = repo.commit(subsys + ": fix " + title);
        gold = diff(buggy, fixed);
        break;
      }
      case Expectation::kNoCrashAtBug: {
        commit_bug = bump_changelog("Documentation: prepare " + noun + " change");
        repo.write(file, buggy);
        repo.commit(introduce);
        const std::string fixed = replace_once(buggy, marker, guard);
        repo.write(file, fixed);
        commit_fix = repo.commit(subsys + ": fix " + title);
        gold = diff(buggy, fixed);
        break;
      }
      case Expectation::kNoCrashAtParent: {
        repo.write(file, buggy);
        commit_bug = repo.commit(introduce);
        const std::string silent = replace_once(buggy, marker, guard);
        repo.write(file, silent);
        repo.commit(subsys + ": tidy " + noun + "_process");
        const std::string fixed = replace_once(silent, refs, "\t/* callers hold a reference */\n" + refs);
        repo.write(file, fixed);
        commit_fix = repo.commit(subsys + ": fix " + title);
        gold = diff(silent, fixed);
        break;
      }
      case Expectation::kFixStillCrashes: {
        repo.write(file, buggy);
        commit_bug = repo.commit(introduce);
        bump_changelog("Documentation: note " + noun + " change");
        const std::string fixed = replace_once(buggy, refs, "\tif (s->refs < 1000000)\n\t" + refs);
        repo.write(file, fixed);
        commit_fix = repo.commit(subsys + ": fix " + title);
        gold = diff(buggy, fixed);
        break;
      }
    }

    static const std::pair<int, const char*> kVersions[] = {
        {2018, "4.20"}, {2019, "5.4"}, {2020, "5.10"}, {2021, "5.15"}, {2022, "6.1"}, {2023, "6.6"}};
    const auto& ver = kVersions[i % std::size(kVersions)];
    auto& raw = bug.raw;
    raw.bug_id = id;
    raw.commit_bug = commit_bug;
    raw.commit_fix = commit_fix;
    raw.config = "CONFIG_KASAN=y\nCONFIG_DEBUG_INFO=y\nCONFIG_PANIC_ON_OOPS=y\n";
    raw.reproducer.kind = model::ReproducerKind::kMockScript;
    raw.reproducer.bytes = repro_id + "\nr0 = openat$" + noun + "(0xffffffffffffff9c, &(0x7f0000000000)='./file0\\x00', 0x0, 0x0)\n" +
                           "ioctl$" + noun + "(r0, 0x40" + std::to_string(1000 + i) + ", 0x0)\n";
    raw.gold_fix = gold;
    raw.subsystem = subsys;
    raw.year = ver.first;
    raw.kernel_version = std::string(ver.second) + ".0";
    raw.email_refs = {std::string(id) + "@reports.minikernel.invalid"};
    mk.bugs.push_back(std::move(bug));
  }
  return mk;
}

}  // namespace crashgym::mock
