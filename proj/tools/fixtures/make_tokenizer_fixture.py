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

"""Counts cl100k_base tokens for a small corpus of kernel-flavoured text.

The corpus mixes C sources from a dumped mini kernel with crash reports
and fixes from the reference samples. Each line of the output holds the
text, its kind and its token count, so the C++ tests can compare the byte
based estimators against a real tokenizer without Python at test time.

Needs the tiktoken package and a local cl100k_base.tiktoken file.

Usage: make_tokenizer_fixture.py --encoding FILE --minikernel DIR [--samples FILE] [--out FILE]
"""

import argparse
import json
from pathlib import Path

import tiktoken
from tiktoken.load import load_tiktoken_bpe

CL100K_PATTERN = (r"""(?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,3}| ?[^\s\p{L}\p{N}]+[\r\n]*|"""
                  r"""\s*[\r\n]+|\s+(?!\S)|\s+""")
SPECIAL = {"<|endoftext|>": 100257, "<|fim_prefix|>": 100258, "<|fim_middle|>": 100259,
           "<|fim_suffix|>": 100260, "<|endofprompt|>": 100276}


def main():
    root = Path(__file__).resolve().parents[2]
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--encoding", type=Path, required=True)
    ap.add_argument("--minikernel", type=Path, required=True)
    ap.add_argument("--samples", type=Path, default=root / "tests/fixtures/reference/samples.jsonl")
    ap.add_argument("--out", type=Path, default=root / "tests/fixtures/tokenizer/cl100k_counts.jsonl")
    ap.add_argument("--per-kind", type=int, default=12)
    args = ap.parse_args()

    enc = tiktoken.Encoding("cl100k_base", pat_str=CL100K_PATTERN,
                            mergeable_ranks=load_tiktoken_bpe(str(args.encoding)),
                            special_tokens=SPECIAL)

    entries = []
    for path in sorted(args.minikernel.rglob("*.c"))[:args.per_kind]:
        entries.append(("c-source", str(path.relative_to(args.minikernel)), path.read_text()))
    with open(args.samples) as f:
        samples = [json.loads(line) for line in f][:args.per_kind]
    for s in samples:
        entries.append(("crash", s["bug_id"], s["crash_parent"]["raw_console"]))
    for s in samples:
        entries.append(("diff", s["bug_id"], s["gold_fix"]))

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w") as out:
        for kind, name, text in entries:
            tokens = len(enc.encode(text, disallowed_special=()))
            out.write(json.dumps({"kind": kind, "name": name, "text": text, "tokens": tokens}) + "\n")


if __name__ == "__main__":
    main()
