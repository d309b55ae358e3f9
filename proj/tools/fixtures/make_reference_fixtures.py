# Copyright 2026 The crashgym Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the synthetic reference benchmark under tests/fixtures/reference.

The samples carry no real kernel code. Their counts, sizes, rankings and
trial outcomes are laid out so the evaluator reproduces a fixed set of
published aggregates; README.md in the output directory lists them.

Usage: make_reference_fixtures.py [--out DIR] [--seed N]
"""

import argparse
import base64
import hashlib
import json
import math
import random
from pathlib import Path

N_SAMPLES = 279

# class -> samples whose oracle prompt is small / medium / large
STRATA = {"SL": (14, 13, 6), "SF": (61, 57, 27), "MFunc": (24, 23, 10), "MFile": (18, 18, 8)}

VERSION_YEARS = [
    ("4", 2018, 20), ("4", 2019, 6),
    ("5", 2019, 14), ("5", 2020, 44), ("5", 2021, 34), ("5", 2022, 49),
    ("6", 2022, 33), ("6", 2023, 79),
]
RELEASES = {
    ("4", 2018): ["4.17.0", "4.19.0", "4.20.0"], ("4", 2019): ["4.19.0", "4.20.0"],
    ("5", 2019): ["5.2.0", "5.4.0"], ("5", 2020): ["5.6.0", "5.8.0", "5.10.0"],
    ("5", 2021): ["5.12.0", "5.14.0", "5.15.0"], ("5", 2022): ["5.17.0", "5.19.0"],
    ("6", 2022): ["6.0.0", "6.1.0"], ("6", 2023): ["6.3.0", "6.5.0", "6.6.0"],
}

LINES_TOTAL, LINES_MAX = 3981, 147
FILES_TOTAL, FILES_MAX = 357, 7
CRASH_TOTAL, CRASH_MAX = 23520, 624

SUBSYSTEMS = {
    "net": "net/core", "usb": "drivers/usb/core", "fs": "fs",
    "mm": "mm", "bluetooth": "net/bluetooth", "ext4": "fs/ext4", "kernel": "kernel",
    "block": "block", "sound": "sound/core", "media": "drivers/media/usb", "wireless": "net/wireless",
    "mac80211": "net/mac80211", "netfilter": "net/netfilter", "sctp": "net/sctp",
    "tipc": "net/tipc", "rds": "net/rds", "can": "net/can", "nfc": "net/nfc", "smc": "net/smc",
    "xfs": "fs/xfs", "btrfs": "fs/btrfs", "f2fs": "fs/f2fs", "ntfs3": "fs/ntfs3", "hfs": "fs/hfs",
    "jfs": "fs/jfs", "reiserfs": "fs/reiserfs", "nilfs2": "fs/nilfs2", "gfs2": "fs/gfs2",
    "fuse": "fs/fuse", "io-uring": "io_uring", "bpf": "kernel/bpf", "cgroups": "kernel/cgroup",
    "sched": "kernel/sched", "perf": "kernel/events", "trace": "kernel/trace", "rcu": "kernel/rcu",
    "input": "drivers/input", "hid": "drivers/hid", "tty": "drivers/tty", "serial": "drivers/tty/serial",
    "dri": "drivers/gpu/drm", "fbdev": "drivers/video/fbdev", "scsi": "drivers/scsi",
    "nbd": "drivers/block", "loop": "drivers/block", "md": "drivers/md", "crypto": "crypto",
    "kvm": "virt/kvm", "virt": "drivers/virtio", "vhost": "drivers/vhost", "ppp": "drivers/net/ppp",
    "tun": "drivers/net", "bonding": "drivers/net/bonding", "team": "drivers/net/team",
    "wireguard": "drivers/net/wireguard", "batman": "net/batman-adv", "hsr": "net/hsr",
    "ieee802154": "net/ieee802154", "l2tp": "net/l2tp", "mptcp": "net/mptcp", "rdma": "drivers/infiniband",
    "x25": "net/x25", "ax25": "net/ax25", "rose": "net/rose", "qrtr": "net/qrtr", "vsock": "net/vmw_vsock",
    "kcm": "net/kcm", "xdp": "net/xdp", "squashfs": "fs/squashfs", "udf": "fs/udf", "exfat": "fs/exfat",
    "ocfs2": "fs/ocfs2",
}
BIG_SUBSYSTEMS = {"net": 40, "usb": 30, "fs": 25}

WORDS = ["rx", "tx", "queue", "buf", "skb", "dev", "sock", "ctx", "node", "entry", "page", "inode",
         "dentry", "req", "urb", "port", "hdr", "msg", "chan", "link", "frag", "ring", "slot",
         "desc", "map", "table", "group", "key", "state", "work", "timer", "conn", "sess", "pkt",
         "attr", "opts", "info", "cfg", "cache", "block", "extent", "xattr", "iter", "list"]
VERBS = ["get", "put", "alloc", "free", "init", "exit", "open", "release", "read", "write",
         "parse", "handle", "process", "update", "flush", "attach", "detach", "probe", "remove",
         "lookup", "insert", "delete", "check", "setup", "destroy", "submit", "complete", "recv",
         "send", "fill", "drop", "reset", "bind", "unbind", "map", "unmap", "clone", "merge"]

GENERIC_FRAMES = ["dump_stack_lvl", "print_address_description", "print_report", "kasan_report",
                  "__asan_load8", "__asan_store4", "do_syscall_64", "entry_SYSCALL_64_after_hwframe",
                  "__x64_sys_ioctl", "__se_sys_ioctl", "vfs_ioctl", "__sys_sendmsg", "___sys_sendmsg",
                  "process_one_work", "worker_thread", "kthread", "ret_from_fork", "kasan_save_stack",
                  "kasan_set_track", "__kasan_kmalloc", "kmalloc_trace", "kfree", "__kmem_cache_free",
                  "slab_free_freelist_hook", "kasan_save_free_info", "____kasan_slab_free",
                  "rcu_do_batch", "__do_softirq", "netlink_rcv_skb", "sock_sendmsg", "vfs_write",
                  "ksys_write", "__x64_sys_write"]

TITLES = ["BUG: KASAN: slab-use-after-free in {fn}", "BUG: KASAN: use-after-free Read in {fn}",
          "BUG: KASAN: slab-out-of-bounds in {fn}", "WARNING: refcount bug in {fn}",
          "general protection fault in {fn}", "KASAN: null-ptr-deref Write in {fn}",
          "BUG: unable to handle kernel NULL pointer dereference in {fn}",
          "UBSAN: shift-out-of-bounds in {fn}", "kernel BUG at {file}:{line}!"]

MODELS = {
    "gpt-3.5-turbo": ("16K", 10), "gpt-4-turbo": ("50K", 10), "gemini-1.5-pro": ("50K", 10),
    "claude-3-sonnet": ("50K", 1), "codellama-7b-instruct": ("16K", 1),
    "codellama-13b-instruct": ("16K", 1), "codellama-34b-instruct": ("16K", 1),
    "llama-3-8b-instruct": ("16K", 1),
}

# (model, setting): applied@1, applied@10, solved bug numbers at index 0,
# solved bug numbers at a later index, complete counts by class, partial
# count, partial overlap percentage.
GROUPS = {
    ("gpt-3.5-turbo", "oracle"): dict(a1=4, a10=43, s1=[], s10=[7, 25, 26],
                                      complete=(6, 35, 7, 3), partial=(12, 47.91)),
    ("gpt-3.5-turbo", "bm25"): dict(a1=37, a10=114, s1=[27], s10=[],
                                    complete=(0, 2, 0, 0), partial=(4, 39.58)),
    ("gpt-4-turbo", "oracle"): dict(a1=56, a10=159, s1=[1, 2, 3], s10=list(range(4, 16)),
                                    complete=(3, 19, 0, 0), partial=(18, 31.6)),
    ("gpt-4-turbo", "bm25"): dict(a1=44, a10=154, s1=[], s10=[28, 29],
                                  complete=(0, 3, 0, 0), partial=(2, 29.16)),
    ("gemini-1.5-pro", "oracle"): dict(a1=62, a10=127, s1=[1, 2], s10=[3, 4] + list(range(16, 22)),
                                       complete=(7, 44, 2, 1), partial=(22, 36.29)),
    ("gemini-1.5-pro", "bm25"): dict(a1=34, a10=68, s1=[], s10=[],
                                     complete=(0, 6, 0, 0), partial=(3, 50.0)),
    ("claude-3-sonnet", "oracle"): dict(a1=77, a10=77, s1=[5, 6, 22, 23, 24], s10=[],
                                        complete=(4, 45, 2, 1), partial=(28, 38.16)),
    ("claude-3-sonnet", "bm25"): dict(a1=80, a10=80, s1=[], s10=[],
                                      complete=(0, 6, 0, 0), partial=(4, 45.83)),
    ("codellama-7b-instruct", "oracle"): dict(a1=27, a10=27, s1=[], s10=[],
                                              complete=(0, 0, 0, 0), partial=(1, 50.0)),
    ("codellama-7b-instruct", "bm25"): dict(a1=58, a10=58, s1=[], s10=[],
                                            complete=(0, 2, 0, 0), partial=(0, 0.0)),
    ("codellama-13b-instruct", "oracle"): dict(a1=2, a10=2, s1=[], s10=[],
                                               complete=(0, 0, 0, 0), partial=(0, 0.0)),
    ("codellama-13b-instruct", "bm25"): dict(a1=2, a10=2, s1=[], s10=[],
                                             complete=(0, 0, 0, 0), partial=(0, 0.0)),
    ("codellama-34b-instruct", "oracle"): dict(a1=43, a10=43, s1=[], s10=[],
                                               complete=(0, 2, 0, 0), partial=(0, 0.0)),
    ("codellama-34b-instruct", "bm25"): dict(a1=112, a10=112, s1=[], s10=[],
                                             complete=(0, 0, 0, 0), partial=(0, 0.0)),
    ("llama-3-8b-instruct", "oracle"): dict(a1=1, a10=1, s1=[], s10=[],
                                            complete=(0, 0, 0, 0), partial=(0, 0.0)),
    ("llama-3-8b-instruct", "bm25"): dict(a1=3, a10=3, s1=[], s10=[],
                                          complete=(0, 0, 0, 0), partial=(0, 0.0)),
}

CLASSES = ("SL", "SF", "MFunc", "MFile")
RANKING_DEPTH = 20


def commit(*parts):
    return hashlib.sha1(":".join(parts).encode()).hexdigest()


class Names:
    def __init__(self, rng):
        self.rng = rng
        self.used = set(GENERIC_FRAMES)

    def function(self, prefix):
        for _ in range(20):
            name = f"{prefix}_{self.rng.choice(VERBS)}_{self.rng.choice(WORDS)}"
            if name not in self.used:
                break
        else:
            name = f"{prefix}_{self.rng.choice(VERBS)}_{len(self.used)}"
        self.used.add(name)
        return name


def adjust_total(rng, values, target, lo, hi, frozen=()):
    """Nudges values by one until they sum to target, keeping lo[i] <= v <= hi[i]."""
    idx = [i for i in range(len(values)) if i not in frozen]
    diff = target - sum(values)
    while diff:
        i = rng.choice(idx)
        step = 1 if diff > 0 else -1
        if lo[i] <= values[i] + step <= hi[i]:
            values[i] += step
            diff -= step


def composition(rng, total, parts):
    cuts = sorted(rng.sample(range(1, total), parts - 1)) if parts > 1 else []
    bounds = [0] + cuts + [total]
    return [b - a for a, b in zip(bounds, bounds[1:])]


def build_samples(rng):
    cells = [(cls, cat) for cls, counts in STRATA.items()
             for cat, n in zip("SML", counts) for _ in range(n)]
    rng.shuffle(cells)
    samples = [dict(num=i + 1, bug_id=f"kbs-{i + 1:03d}", cls=c, ocat=k) for i, (c, k) in enumerate(cells)]

    years = [(v, y) for v, y, n in VERSION_YEARS for _ in range(n)]
    rng.shuffle(years)
    for s, (v, y) in zip(samples, years):
        s["kernel_version"] = rng.choice(RELEASES[(v, y)])
        s["fix_year"] = y

    small = [name for name in SUBSYSTEMS if name not in BIG_SUBSYSTEMS]
    extra = N_SAMPLES - sum(BIG_SUBSYSTEMS.values()) - 2 * len(small)
    three = set(rng.sample(small, extra))
    subs = [name for name, n in BIG_SUBSYSTEMS.items() for _ in range(n)]
    subs += [name for name in small for _ in range(3 if name in three else 2)]
    rng.shuffle(subs)
    for s, name in zip(samples, subs):
        s["subsystem"] = name
    return samples


def designate(rng, samples):
    by = lambda pred: [s for s in samples if pred(s)]
    free = lambda s: "role" not in s

    frameless = rng.choice(by(lambda s: s["cls"] == "SF" and s["ocat"] == "M"))
    frameless["role"] = "frameless"
    frameless["top1"] = "L"
    for s in rng.sample(by(lambda s: s["cls"] == "SF" and s["ocat"] == "L"), 3):
        s["role"] = "large"
        s["top1"] = "L"

    solved = rng.sample(by(lambda s: free(s) and s["cls"] == "SF" and s["ocat"] == "S"), 29)
    for i, s in enumerate(solved, 1):
        s["role"] = f"solved{i}"
        s["top1"] = "S"

    two_file = rng.sample(by(lambda s: free(s) and s["cls"] == "MFile"), 2)
    for s, tag in zip(two_file, "AB"):
        s["role"] = f"recall{tag}"
        s["files"] = 2
        s["top1"] = "S"

    singles = by(lambda s: free(s) and s["cls"] != "MFile")
    rng.shuffle(singles)
    plan16 = [(2, 3)] * 4 + [(4, 5)] * 5 + [(6, 10)] * 5 + [(11, 20)] * 7
    plan50 = [(2, 3)] * 4 + [(4, 5), (6, 10), (11, 20)]
    for s, (lo, hi) in zip(singles, plan16):
        s["role"] = "recall16"
        s["top1"] = "S"
        s["oracle_ranks"] = [rng.randint(lo, hi)]
    for s, (lo, hi) in zip(singles[len(plan16):], plan50):
        s["role"] = "recall50"
        s["top1"] = "M"
        s["oracle_ranks"] = [rng.randint(lo, hi)]
    two_file[0]["oracle_ranks"] = [4, 7]
    two_file[1]["oracle_ranks"] = [15, None]

    rest = by(lambda s: "top1" not in s)
    for s in rng.sample(rest, 48 - len(plan50)):
        s["top1"] = "M"
    for s in samples:
        s.setdefault("top1", "S")
        s.setdefault("oracle_ranks", [])
        s.setdefault("role", "")
    return {int(s["role"][6:]): s for s in solved}


def shape_fixes(rng, samples, names):
    mfile = [s for s in samples if s["cls"] == "MFile"]
    open_ = [s for s in mfile if "files" not in s]
    for s in open_:
        s["files"] = 2
    biggest = rng.choice(open_)
    biggest["files"] = FILES_MAX
    counts = [s["files"] for s in mfile]
    fixed = {i for i, s in enumerate(mfile) if s is biggest or s["role"].startswith("recall")}
    adjust_total(rng, counts, FILES_TOTAL - (N_SAMPLES - len(mfile)),
                 [2] * len(counts), [FILES_MAX - 1] * len(counts), frozen=fixed)
    for s, n in zip(mfile, counts):
        s["files"] = n

    for s in samples:
        prefix = s["subsystem"].replace("-", "_")
        base = SUBSYSTEMS[s["subsystem"]]
        nfiles = s.get("files", 1)
        paths = []
        while len(paths) < nfiles:
            p = f"{base}/{rng.choice(WORDS)}_{rng.choice(WORDS)}.c"
            if p not in paths:
                paths.append(p)
        s["paths"] = paths
        if s["cls"] in ("SL", "SF"):
            funcs = [[names.function(prefix)]]
        elif s["cls"] == "MFunc":
            funcs = [[names.function(prefix) for _ in range(rng.choice([2, 3, 3, 4, 5, 6]))]]
        else:
            funcs = [[names.function(prefix) for _ in range(rng.choice([1, 1, 2]))] for _ in paths]
        s["funcs"] = funcs
        s["tuples"] = [(fn, p) for p, fs in zip(paths, funcs) for fn in fs]

    # changed lines per bug
    lines, lo, hi = [], [], []
    for s in samples:
        if s["cls"] == "SL":
            n = 1
            lo.append(1)
            hi.append(1)
        else:
            hunks = len(s["tuples"])
            floor_ = max(2, hunks)
            n = max(floor_, int(rng.lognormvariate(2.3, 0.7)))
            n = min(n, 60)
            lo.append(floor_)
            hi.append(LINES_MAX - 1)
        lines.append(n)
    top = max((i for i, s in enumerate(samples) if s["cls"] == "MFile"), key=lambda i: samples[i]["files"])
    lines[top] = LINES_MAX
    adjust_total(rng, lines, LINES_TOTAL, lo, hi, frozen={top} | {i for i, s in enumerate(samples) if s["cls"] == "SL"})
    for s, n in zip(samples, lines):
        s["changed"] = n


def c_line(rng, depth=1):
    shapes = ["ret = {v}_{w}(dev, {x});", "if (!{v}->{w})", "\treturn -EINVAL;",
              "{v}->{w} = {x};", "spin_lock(&{v}->lock);", "spin_unlock(&{v}->lock);",
              "kfree({v}->{w});", "list_del(&{v}->{w});", "goto out;", "{v} = NULL;",
              "err = {v}_{w}({x}, 0);", "if (err)", "mutex_lock(&{v}->{w}_mutex);",
              "mutex_unlock(&{v}->{w}_mutex);", "len = min_t(u32, len, {v}->{w});"]
    text = rng.choice(shapes).format(v=rng.choice(WORDS), w=rng.choice(WORDS), x=rng.choice(WORDS))
    return "\t" * depth + text


def render_hunk(rng, func, old_start, new_start, run):
    dels, adds = run
    pre = [c_line(rng) for _ in range(3)]
    post = [c_line(rng) for _ in range(3)]
    body = [" " + l for l in pre]
    body += ["-" + c_line(rng) for _ in range(dels)]
    body += ["+" + c_line(rng) for _ in range(adds)]
    body += [" " + l for l in post]
    old_len, new_len = 6 + dels, 6 + adds
    header = f"@@ -{old_start},{old_len} +{new_start},{new_len} @@ static int {func}(struct {rng.choice(WORDS)} *{rng.choice(WORDS)})"
    return [header] + body, old_len, new_len


def split_run(rng, c, cls):
    if cls == "SL":
        return rng.choice([(1, 1), (1, 1), (0, 1), (1, 0)])
    mode = rng.random()
    if mode < 0.35:
        return 0, c
    if mode < 0.5:
        return c, 0
    if mode < 0.75:
        return c, rng.randint(1, c)
    return rng.randint(1, c), c


def render_diff(rng, files):
    """files: [(path, [(func, (dels, adds))...])] in order."""
    out = []
    for path, hunks in files:
        out += [f"diff --git a/{path} b/{path}", f"--- a/{path}", f"+++ b/{path}"]
        old = rng.randint(20, 200)
        shift = 0
        for func, run in hunks:
            lines, ol, nl = render_hunk(rng, func, old, old + shift, run)
            out += lines
            shift += nl - ol
            old += ol + rng.randint(15, 120)
    return "\n".join(out) + "\n"


def gold_fix(rng, s):
    tuples = s["tuples"]
    if s["cls"] == "SF" and s["changed"] >= 4 and rng.random() < 0.3:
        hunk_funcs = [tuples[0], tuples[0]]
    else:
        hunk_funcs = tuples
    sizes = composition(rng, s["changed"], len(hunk_funcs))
    by_file = {}
    for (fn, path), c in zip(hunk_funcs, sizes):
        by_file.setdefault(path, []).append((fn, split_run(rng, c, s["cls"])))
    return render_diff(rng, [(p, by_file[p]) for p in s["paths"] if p in by_file])


def candidate_patch(rng, s, tuples):
    by_file = {}
    for fn, path in tuples:
        by_file.setdefault(path, []).append((fn, (1, 1)))
    return render_diff(rng, list(by_file.items()))


def crash_text(rng, s, frame_funcs, length):
    lines = []
    gold = [fn for fs in s["funcs"] for fn in fs]
    top = frame_funcs[0] if frame_funcs else gold[0]
    title = rng.choice(TITLES).format(fn=top, file=s["paths"][0], line=rng.randint(100, 3000))
    if s["role"] == "frameless":
        title = f"INFO: task hung in {top}"
    lines.append("=" * 66)
    lines.append(title)
    lines.append(f"Read of size {rng.choice([1, 2, 4, 8])} at addr ffff8880{rng.getrandbits(32):08x} by task syz-executor.{rng.randint(0, 5)}/{rng.randint(3000, 30000)}")
    lines.append("")
    lines.append(f"CPU: {rng.randint(0, 1)} PID: {rng.randint(3000, 30000)} Comm: syz-executor.{rng.randint(0, 5)} Not tainted {s['kernel_version']}-syzkaller #0")
    lines.append("Hardware name: Google Compute Engine, BIOS Google 01/01/2011")
    if s["role"] != "frameless":
        lines.append("Call Trace:")
        lines.append(" <TASK>")
        stack = GENERIC_FRAMES[:4] + frame_funcs + rng.sample(GENERIC_FRAMES[4:], 4)
        for fn in stack:
            size = rng.randint(0x80, 0x900)
            src = s["paths"][0] if fn in gold else "mm/kasan/report.c"
            for fs, p in zip(s["funcs"], s["paths"]):
                if fn in fs:
                    src = p
            lines.append(f" {fn}+0x{rng.randint(0x10, size - 1):x}/0x{size:x} {src}:{rng.randint(20, 4000)}")
        lines.append(" </TASK>")
        lines.append("")
        lines.append(f"Allocated by task {rng.randint(3000, 30000)}:")
        for fn in rng.sample(GENERIC_FRAMES[14:], 4):
            size = rng.randint(0x80, 0x900)
            lines.append(f" {fn}+0x{rng.randint(0x10, size - 1):x}/0x{size:x} mm/kasan/common.c:{rng.randint(20, 600)}")
    lines.append("")
    lines.append("Memory state around the buggy address:")
    if len(lines) + 2 > length:
        raise SystemExit(f"{s['bug_id']}: crash needs {len(lines) + 2} lines, budget {length}")
    while len(lines) < length - 1:
        addr = 0xffff888000000000 + rng.getrandbits(28) * 0x100
        cells = " ".join(rng.choice(["fa", "fb", "fc", "00", "00", "00"]) for _ in range(16))
        lines.append(f" {addr:x}: {cells}")
    lines.append("=" * 66)
    return "\n".join(lines) + "\n"


def crash_classes(rng, samples):
    x = [s for s in samples if s["ocat"] in "SM" and s["role"] != "frameless"]
    extras = [s for s in samples if s["ocat"] == "L" and s["top1"] != "L"]
    for pool, (nc, np_) in ((x, (67, 39)), (extras, (8, 6))):
        multi = [s for s in pool if s["cls"] in ("MFunc", "MFile")]
        partial = rng.sample(multi, np_)
        for s in partial:
            s["crash"] = "P"
        complete = rng.sample([s for s in pool if "crash" not in s], nc)
        for s in complete:
            s["crash"] = "C"
    for s in samples:
        s.setdefault("crash", "N")


def frame_functions(rng, s, names):
    gold = [fn for fs in s["funcs"] for fn in fs]
    neighbours = [names.function(s["subsystem"].replace("-", "_")) for _ in range(rng.randint(1, 3))]
    if s["crash"] == "C":
        picked = list(gold)
    elif s["crash"] == "P":
        picked = rng.sample(gold, rng.randint(1, len(gold) - 1))
    else:
        picked = []
    frames = picked + neighbours
    rng.shuffle(frames)
    return frames


def crash_lengths(rng, samples):
    lengths, lo, hi = [], [], []
    for s in samples:
        floor_ = 30 + len(s["tuples"]) + 6
        n = max(floor_, int(rng.lognormvariate(4.3, 0.35)))
        lengths.append(n)
        lo.append(floor_)
        hi.append(CRASH_MAX - 1)
    top = rng.randrange(len(samples))
    lengths[top] = CRASH_MAX
    adjust_total(rng, lengths, CRASH_TOTAL, lo, hi, frozen={top})
    return lengths


def size_for(rng, cat):
    if cat == "S":
        return rng.randint(1500, 9000)
    if cat == "M":
        return rng.randint(81000, 111000)
    return rng.randint(250000, 600000)


def sources_for(rng, s):
    files = {}
    total = size_for(rng, s["ocat"])
    weights = [rng.random() + 0.2 for _ in s["paths"]]
    for p, w in zip(s["paths"], weights):
        files[p] = max(400, int(total * w / sum(weights)))
    ranking = [None] * RANKING_DEPTH
    for p, rank in zip(s["paths"], s["oracle_ranks"]):
        if rank is not None:
            ranking[rank - 1] = p
    base = SUBSYSTEMS[s["subsystem"]]
    taken = set(s["paths"])
    for i in range(RANKING_DEPTH):
        if ranking[i] is not None:
            continue
        while True:
            p = f"{base}/{rng.choice(WORDS)}_{rng.choice(VERBS)}.c"
            if p not in taken:
                break
        taken.add(p)
        ranking[i] = p
        files[p] = size_for(rng, s["top1"]) if i == 0 else rng.randint(2000, 150000)
    return {"files": files, "bm25": ranking}


def pools(samples):
    return {
        ("oracle", "16K"): [s for s in samples if s["ocat"] == "S"],
        ("oracle", "50K"): [s for s in samples if s["ocat"] in "SM"],
        ("bm25", "16K"): [s for s in samples if s["top1"] == "S"],
        ("bm25", "50K"): [s for s in samples if s["top1"] in "SM"],
    }


def overlap_pct(recalls):
    total = 0.0
    for r in recalls:
        total += r
    return math.floor(total / len(recalls) * 10000.0 + 1e-6) / 100.0


def solve_partials(rng, pool, count, target):
    """Picks bugs and hit counts whose truncated mean recall equals target."""
    if count == 0:
        return {}
    lo_sum, hi_sum = target * count / 100 - 1e-4, (target + 0.01) * count / 100 + 1e-4
    for _ in range(200):
        bugs = sorted(rng.sample(pool, count), key=lambda s: s["bug_id"])
        sizes = [len(s["tuples"]) for s in bugs]
        rest_min = [sum(1 / g for g in sizes[i:]) for i in range(count + 1)]
        rest_max = [sum((g - 1) / g for g in sizes[i:]) for i in range(count + 1)]
        states = {0.0: []}
        for i, g in enumerate(sizes):
            nxt = {}
            for total, hits in states.items():
                for h in range(1, g):
                    t = total + h / g
                    if t + rest_min[i + 1] <= hi_sum and t + rest_max[i + 1] >= lo_sum and t not in nxt:
                        nxt[t] = hits + [h]
            if len(nxt) > 4000:
                nxt = dict(rng.sample(sorted(nxt.items()), 4000))
            states = nxt
        for total, hits in sorted(states.items()):
            if abs(overlap_pct([h / g for h, g in zip(hits, sizes)]) - target) < 1e-9:
                return {s["bug_id"]: h for s, h in zip(bugs, hits)}
    raise SystemExit(f"no partial layout for {count} bugs at {target}")


def outcome(bug, model, setting, index, group, patch=None, stage="NoPatch"):
    resolved = stage is None
    applied = resolved or stage == "StillCrashes"
    return {"bug_id": bug, "model": model, "setting": setting, "candidate_index": index,
            "candidates": group, "extracted": patch is not None, "applied": applied,
            "resolved": resolved, "failure_stage": stage, "infrastructure": False,
            "job_ids": [], "candidate_patch": patch or "", "seed": 0, "detail": ""}


def build_group(rng, names, model, setting, pool, n, spec, solved):
    ids = {s["bug_id"] for s in pool}
    s1 = [solved[k] for k in spec["s1"]]
    s10 = [solved[k] for k in spec["s10"]]
    for s in s1 + s10:
        assert s["bug_id"] in ids, (model, setting, s["bug_id"])
    chosen = {s["bug_id"] for s in s1 + s10}

    complete = list(s1 + s10)
    for cls, want in zip(CLASSES, spec["complete"]):
        have = sum(1 for s in complete if s["cls"] == cls)
        extra = [s for s in pool if s["cls"] == cls and s["bug_id"] not in chosen]
        picks = rng.sample(extra, want - have)
        complete += picks
        chosen.update(s["bug_id"] for s in picks)
    multi = [s for s in pool if s["cls"] in ("MFunc", "MFile") and s["bug_id"] not in chosen]
    partial = solve_partials(rng, multi, *spec["partial"])

    a1 = list(s1)
    a1_ids = {s["bug_id"] for s in a1}
    others = [s for s in pool if s["bug_id"] not in {x["bug_id"] for x in s10} | a1_ids]
    a1 += rng.sample(others, spec["a1"] - len(a1))
    a1_ids = {s["bug_id"] for s in a1}
    a10_ids = a1_ids | {s["bug_id"] for s in s10}
    rest = [s for s in pool if s["bug_id"] not in a10_ids]
    a10_ids |= {s["bug_id"] for s in rng.sample(rest, spec["a10"] - len(a10_ids))}

    complete_ids = {s["bug_id"] for s in complete}
    s1_ids = {s["bug_id"] for s in s1}
    s10_ids = {s["bug_id"] for s in s10}
    lines = []
    for s in sorted(pool, key=lambda s: s["bug_id"]):
        bug = s["bug_id"]
        if bug in complete_ids:
            patch = candidate_patch(rng, s, s["tuples"])
        elif bug in partial:
            hit = rng.sample(s["tuples"], partial[bug])
            patch = candidate_patch(rng, s, hit + [(names.function("stray"), s["paths"][0])])
        else:
            patch = candidate_patch(rng, s, [(names.function("stray"), s["paths"][0])])
        touched = bug in complete_ids or bug in partial or bug in a10_ids
        for i in range(n):
            if i == 0:
                if bug in a1_ids:
                    lines.append(outcome(bug, model, setting, 0, n, patch, None if bug in s1_ids else "StillCrashes"))
                elif touched:
                    lines.append(outcome(bug, model, setting, 0, n, patch, "HunkMismatch"))
                else:
                    lines.append(outcome(bug, model, setting, 0, n))
            elif i == 3 and bug in a10_ids and bug not in a1_ids and bug not in s10_ids:
                lines.append(outcome(bug, model, setting, i, n, patch, "StillCrashes"))
            elif i == 5 and bug in s10_ids:
                lines.append(outcome(bug, model, setting, i, n, patch, None))
            else:
                lines.append(outcome(bug, model, setting, i, n))
    return lines


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[2] / "tests/fixtures/reference")
    ap.add_argument("--seed", type=int, default=20240517)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    names = Names(rng)

    samples = build_samples(rng)
    solved = designate(rng, samples)
    shape_fixes(rng, samples, names)
    crash_classes(rng, samples)
    lengths = crash_lengths(rng, samples)

    args.out.mkdir(parents=True, exist_ok=True)
    sources = {}
    with open(args.out / "samples.jsonl", "w") as out:
        for s, length in zip(samples, lengths):
            raw = crash_text(rng, s, frame_functions(rng, s, names), length)
            program = f"r0 = openat$dev(0xffffffffffffff9c, &(0x7f0000000000)='/dev/{s['subsystem']}\\x00', 0x2, 0x0)\nioctl(r0, 0x{rng.getrandbits(16):x}, 0x0)\n"
            record = {
                "bug_id": s["bug_id"],
                "commit_bug": commit(s["bug_id"], "bug"),
                "config": "CONFIG_KASAN=y\nCONFIG_KCOV=y\nCONFIG_DEBUG_INFO=y\n",
                "reproducer": {"kind": "syz", "data": base64.b64encode(program.encode()).decode()},
                "commit_fix": commit(s["bug_id"], "fix"),
                "commit_parent": commit(s["bug_id"], "parent"),
                "crash_parent": {"raw_console": raw},
                "gold_fix": gold_fix(rng, s),
                "bisect": None,
                "email_refs": [],
                "subsystem": s["subsystem"],
                "kernel_version": s["kernel_version"],
                "fix_year": s["fix_year"],
            }
            out.write(json.dumps(record, sort_keys=True) + "\n")
            sources[s["bug_id"]] = sources_for(rng, s)
    with open(args.out / "sources.json", "w") as out:
        json.dump(sources, out, sort_keys=True, separators=(",", ":"))

    pool_of = pools(samples)
    outdir = args.out / "outcomes"
    outdir.mkdir(exist_ok=True)
    for (model, setting), spec in GROUPS.items():
        budget, n = MODELS[model]
        lines = build_group(rng, names, model, setting, pool_of[(setting, budget)], n, spec, solved)
        with open(outdir / f"{model}.{setting}.jsonl", "w") as out:
            for line in lines:
                out.write(json.dumps(line, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
