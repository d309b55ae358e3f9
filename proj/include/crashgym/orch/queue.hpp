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

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

#include "crashgym/orch/types.hpp"

namespace crashgym::orch {

class Clock {
 public:
  virtual ~Clock() = default;
  // Milliseconds since an arbitrary epoch.
  virtual std::int64_t now_ms() const = 0;
};

class SystemClock : public Clock {
 public:
  std::int64_t now_ms() const override;
};

class SimulatedClock : public Clock {
 public:
  explicit SimulatedClock(std::int64_t start_ms = 0) : now_(start_ms) {}
  std::int64_t now_ms() const override { return now_.load(); }
  void set(std::int64_t ms) { now_.store(ms); }
  void advance(std::int64_t ms) { now_.fetch_add(ms); }

 private:
  std::atomic<std::int64_t> now_;
};

inline constexpr std::int64_t kMinuteMs = 60 * 1000;

// At-least-once delivery with explicit acknowledgement. A received message
// stays invisible until acked or until its visibility timeout passes, after
// which it is delivered again with a bumped attempt.
class MessageQueue {
 public:
  virtual ~MessageQueue() = default;
  // Assigns a message id when the message has none.
  virtual void publish(const std::string& topic, QueueMessage message) = 0;
  virtual std::optional<QueueMessage> receive(const std::string& topic,
                                              std::chrono::milliseconds wait) = 0;
  virtual void ack(const std::string& topic, const std::string& message_id) = 0;
  // Redelivers or dead-letters messages whose visibility timeout passed.
  virtual void sweep() = 0;
  virtual size_t ready(const std::string& topic) = 0;
  virtual size_t in_flight(const std::string& topic) = 0;
  // Wakes blocked receivers; later receives return nothing.
  virtual void close() = 0;
};

struct QueueOptions {
  std::int64_t visibility_timeout_ms = 30 * kMinuteMs;
  // First delivery plus two retries.
  int max_deliveries = 3;
};

class InProcessQueue : public MessageQueue {
 public:
  using Listener = std::function<void(const std::string& topic, const QueueMessage&)>;

  explicit InProcessQueue(const Clock& clock, QueueOptions options = {});

  void set_redelivery_listener(Listener l) { on_redelivery_ = std::move(l); }
  void set_dead_letter_listener(Listener l) { on_dead_letter_ = std::move(l); }

  void publish(const std::string& topic, QueueMessage message) override;
  std::optional<QueueMessage> receive(const std::string& topic,
                                      std::chrono::milliseconds wait) override;
  void ack(const std::string& topic, const std::string& message_id) override;
  void sweep() override;
  size_t ready(const std::string& topic) override;
  size_t in_flight(const std::string& topic) override;
  void close() override;

 private:
  struct InFlight {
    QueueMessage message;
    std::int64_t deadline_ms;
  };
  struct Topic {
    std::deque<QueueMessage> ready;
    std::map<std::string, InFlight> in_flight;
  };

  const Clock& clock_;
  QueueOptions options_;
  Listener on_redelivery_;
  Listener on_dead_letter_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, Topic> topics_;
  bool closed_ = false;
};

}  // namespace crashgym::orch
