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

#include "crashgym/orch/queue.hpp"

#include <vector>

namespace crashgym::orch {

std::int64_t SystemClock::now_ms() const {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

InProcessQueue::InProcessQueue(const Clock& clock, QueueOptions options)
    : clock_(clock), options_(options) {}

void InProcessQueue::publish(const std::string& topic, QueueMessage message) {
  if (message.message_id.empty()) message.message_id = new_uuid();
  {
    std::lock_guard lock(mu_);
    topics_[topic].ready.push_back(std::move(message));
  }
  cv_.notify_all();
}

std::optional<QueueMessage> InProcessQueue::receive(const std::string& topic,
                                                    std::chrono::milliseconds wait) {
  sweep();
  std::unique_lock lock(mu_);
  auto has_ready = [&] { return closed_ || !topics_[topic].ready.empty(); };
  if (!has_ready()) cv_.wait_for(lock, wait, has_ready);
  Topic& t = topics_[topic];
  if (closed_ || t.ready.empty()) return std::nullopt;
  QueueMessage m = std::move(t.ready.front());
  t.ready.pop_front();
  ++m.delivery_count;
  t.in_flight[m.message_id] = {m, clock_.now_ms() + options_.visibility_timeout_ms};
  return m;
}

void InProcessQueue::ack(const std::string& topic, const std::string& message_id) {
  std::lock_guard lock(mu_);
  topics_[topic].in_flight.erase(message_id);
}

void InProcessQueue::sweep() {
  std::vector<std::pair<std::string, QueueMessage>> redelivered;
  std::vector<std::pair<std::string, QueueMessage>> dead;
  {
    std::lock_guard lock(mu_);
    const std::int64_t now = clock_.now_ms();
    for (auto& [name, t] : topics_) {
      for (auto it = t.in_flight.begin(); it != t.in_flight.end();) {
        if (it->second.deadline_ms > now) {
          ++it;
          continue;
        }
        QueueMessage m = std::move(it->second.message);
        it = t.in_flight.erase(it);
        if (m.delivery_count >= options_.max_deliveries) {
          dead.emplace_back(name, std::move(m));
        } else {
          ++m.attempt;
          redelivered.emplace_back(name, m);
          t.ready.push_back(std::move(m));
        }
      }
    }
  }
  if (!redelivered.empty()) cv_.notify_all();
  for (const auto& [topic, m] : redelivered)
    if (on_redelivery_) on_redelivery_(topic, m);
  for (const auto& [topic, m] : dead)
    if (on_dead_letter_) on_dead_letter_(topic, m);
}

size_t InProcessQueue::ready(const std::string& topic) {
  std::lock_guard lock(mu_);
  return topics_[topic].ready.size();
}

size_t InProcessQueue::in_flight(const std::string& topic) {
  std::lock_guard lock(mu_);
  return topics_[topic].in_flight.size();
}

void InProcessQueue::close() {
  {
    std::lock_guard lock(mu_);
    closed_ = true;
  }
  cv_.notify_all();
}

}  // namespace crashgym::orch
