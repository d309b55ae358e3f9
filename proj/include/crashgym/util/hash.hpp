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

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace crashgym::util {

// Incremental SHA-256. Used for artifact digests and stream checksums.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view data);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view data);

std::string base64_encode(std::string_view bytes);
// Throws ValidationError on malformed input.
std::string base64_decode(std::string_view text);

// Stable 64-bit seed derived from a list of strings. Independent of
// std::hash so that seeds survive across builds and platforms.
std::uint64_t stable_seed(std::initializer_list<std::string_view> parts);

std::uint64_t splitmix64(std::uint64_t x);

// Uniform double in [0, 1) from 53 high bits.
inline double to_unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace crashgym::util
