#pragma once

// In-process key-value store with revisioned writes and push-style
// watches. It is the single information path between the configurator
// side and the per-machine appliers: writers never block on watchers,
// watchers see every matching event in revision order with no gaps.
//
// The store speaks the same contract an external KV service would sit
// behind (KeyValueStore); swapping in a networked backend only needs a
// new implementation of that interface.

#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "satnet/error.hpp"

namespace satnet {

struct KeyedRecord {
  std::string key;
  std::string value;
  int64_t revision = 0;
};

struct WatchEvent {
  enum class Kind { put, del };
  std::string key;
  Kind kind = Kind::put;
  std::string value;  // empty for deletes
  int64_t revision = 0;
};

inline std::string to_string(WatchEvent::Kind k) {
  return k == WatchEvent::Kind::put ? "put" : "delete";
}

class KeyValueStore;

namespace detail {

struct WatcherState {
  std::mutex m;
  std::condition_variable cv;
  std::deque<WatchEvent> queue;
  size_t max_queue = 0;
  bool overflowed = false;
  bool cancelled = false;
  std::string prefix;
};

}  // namespace detail

// Consumer handle for one watch subscription. next() blocks until an
// event, cancellation, or overflow; try_next() never blocks.
class Watch {
 public:
  Watch() = default;
  explicit Watch(std::shared_ptr<detail::WatcherState> state) : state_(std::move(state)) {}

  // Blocking pop. Returns nullopt once cancelled and drained.
  std::optional<WatchEvent> next() {
    std::unique_lock<std::mutex> lock(state_->m);
    state_->cv.wait(lock, [&] {
      return !state_->queue.empty() || state_->cancelled || state_->overflowed;
    });
    return pop_locked();
  }

  template <typename Rep, typename Period>
  std::optional<WatchEvent> next_for(const std::chrono::duration<Rep, Period>& timeout) {
    std::unique_lock<std::mutex> lock(state_->m);
    state_->cv.wait_for(lock, timeout, [&] {
      return !state_->queue.empty() || state_->cancelled || state_->overflowed;
    });
    if (state_->queue.empty() && !state_->overflowed) return std::nullopt;
    return pop_locked();
  }

  std::optional<WatchEvent> try_next() {
    std::unique_lock<std::mutex> lock(state_->m);
    return pop_locked();
  }

  void cancel() {
    std::lock_guard<std::mutex> lock(state_->m);
    state_->cancelled = true;
    state_->cv.notify_all();
  }

  bool valid() const { return state_ != nullptr; }

 private:
  std::optional<WatchEvent> pop_locked() {
    if (!state_->queue.empty()) {
      WatchEvent ev = std::move(state_->queue.front());
      state_->queue.pop_front();
      return ev;
    }
    if (state_->overflowed)
      throw WatchOverflowError("watch on '" + state_->prefix +
                               "' fell behind and its buffer overflowed");
    return std::nullopt;
  }

  std::shared_ptr<detail::WatcherState> state_;
};

// Store contract shared by the in-process implementation and any
// external adapter.
class KeyValueStore {
 public:
  virtual ~KeyValueStore() = default;

  virtual int64_t put(const std::string& key, const std::string& value) = 0;
  virtual std::optional<KeyedRecord> get(const std::string& key) const = 0;
  virtual std::vector<KeyedRecord> get_prefix(const std::string& prefix) const = 0;
  virtual int64_t del(const std::string& key) = 0;
  virtual Watch watch(const std::string& prefix, int64_t from_revision) = 0;
  virtual int64_t current_revision() const = 0;
};

class InMemoryStore final : public KeyValueStore {
 public:
  explicit InMemoryStore(size_t watcher_queue_capacity = 1 << 16)
      : queue_capacity_(watcher_queue_capacity) {}

  // Stores the value under a namespaced key and returns the commit
  // revision. Revisions are strictly increasing and gap-free.
  int64_t put(const std::string& key, const std::string& value) override {
    validate_key(key);
    std::lock_guard<std::mutex> lock(m_);
    const int64_t rev = ++revision_;
    live_[key] = {value, rev};
    WatchEvent ev{key, WatchEvent::Kind::put, value, rev};
    log_.push_back(ev);
    fan_out(ev);
    return rev;
  }

  std::optional<KeyedRecord> get(const std::string& key) const override {
    std::lock_guard<std::mutex> lock(m_);
    auto it = live_.find(key);
    if (it == live_.end()) return std::nullopt;
    return KeyedRecord{key, it->second.first, it->second.second};
  }

  // All live keys under the prefix, in key order.
  std::vector<KeyedRecord> get_prefix(const std::string& prefix) const override {
    std::lock_guard<std::mutex> lock(m_);
    std::vector<KeyedRecord> out;
    for (auto it = live_.lower_bound(prefix); it != live_.end(); ++it) {
      if (it->first.compare(0, prefix.size(), prefix) != 0) break;
      out.push_back({it->first, it->second.first, it->second.second});
    }
    return out;
  }

  // Idempotent: deleting an absent key emits nothing and leaves the
  // revision counter untouched.
  int64_t del(const std::string& key) override {
    std::lock_guard<std::mutex> lock(m_);
    auto it = live_.find(key);
    if (it == live_.end()) return revision_;
    live_.erase(it);
    const int64_t rev = ++revision_;
    WatchEvent ev{key, WatchEvent::Kind::del, "", rev};
    log_.push_back(ev);
    fan_out(ev);
    return rev;
  }

  // Subscribes to every event whose key starts with `prefix` and whose
  // revision is >= from_revision. History is replayed first; later
  // commits are pushed as they happen.
  Watch watch(const std::string& prefix, int64_t from_revision) override {
    std::lock_guard<std::mutex> lock(m_);
    if (from_revision > revision_ + 1)
      throw ContractViolation("watch from_revision " + std::to_string(from_revision) +
                              " is beyond current revision " + std::to_string(revision_) +
                              " + 1");
    if (from_revision < first_retained_)
      throw StaleWatchError("watch from_revision " + std::to_string(from_revision) +
                            " predates the compaction floor " +
                            std::to_string(first_retained_));

    auto state = std::make_shared<detail::WatcherState>();
    state->max_queue = queue_capacity_;
    state->prefix = prefix;
    for (const auto& ev : log_) {
      if (ev.revision < from_revision) continue;
      if (!matches(ev.key, prefix)) continue;
      state->queue.push_back(ev);
    }
    watchers_.push_back(state);
    return Watch(state);
  }

  int64_t current_revision() const override {
    std::lock_guard<std::mutex> lock(m_);
    return revision_;
  }

  // Drops log entries with revision < up_to. Watches asking for history
  // below the floor fail with StaleWatchError afterwards.
  void compact(int64_t up_to) {
    std::lock_guard<std::mutex> lock(m_);
    while (!log_.empty() && log_.front().revision < up_to) log_.pop_front();
    first_retained_ = std::max(first_retained_, up_to);
  }

  // Test hook: the full committed event log (bounded store lifetimes
  // make retention affordable; there is no background compaction).
  std::vector<WatchEvent> event_log() const {
    std::lock_guard<std::mutex> lock(m_);
    return {log_.begin(), log_.end()};
  }

  static void validate_key(const std::string& key) {
    static const char* kNamespaces[] = {"machines/", "nodes/", "links/", "apps/"};
    if (key.empty()) throw ValidationError("store key must be non-empty");
    for (const char* ns : kNamespaces) {
      const size_t len = std::string(ns).size();
      if (key.compare(0, len, ns) == 0 && key.size() > len) return;
    }
    throw ValidationError("store key '" + key +
                          "' is not under machines/, nodes/, links/ or apps/");
  }

 private:
  static bool matches(const std::string& key, const std::string& prefix) {
    return key.compare(0, prefix.size(), prefix) == 0;
  }

  // Called with m_ held: delivery order equals commit order for every
  // watcher. A full queue marks the watcher overflowed instead of
  // blocking the writer.
  void fan_out(const WatchEvent& ev) {
    for (auto it = watchers_.begin(); it != watchers_.end();) {
      auto state = it->lock();
      if (!state) {
        it = watchers_.erase(it);
        continue;
      }
      {
        std::lock_guard<std::mutex> wlock(state->m);
        if (!state->cancelled && !state->overflowed) {
          if (matches(ev.key, state->prefix)) {
            if (state->queue.size() >= state->max_queue) {
              state->overflowed = true;
            } else {
              state->queue.push_back(ev);
            }
          }
        }
      }
      state->cv.notify_all();
      ++it;
    }
  }

  mutable std::mutex m_;
  int64_t revision_ = 0;
  int64_t first_retained_ = 1;
  std::map<std::string, std::pair<std::string, int64_t>> live_;
  std::deque<WatchEvent> log_;
  std::vector<std::weak_ptr<detail::WatcherState>> watchers_;
  size_t queue_capacity_;
};

}  // namespace satnet
