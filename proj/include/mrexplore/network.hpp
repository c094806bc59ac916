#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mrexplore/messages.hpp"
#include "mrexplore/rng.hpp"

namespace mrx {

/// Line-delimited JSON event log with a running digest.
class Trace {
 public:
  void emit(Tick tick, const BroadcastMessage& msg);
  void drop(Tick tick, const BroadcastMessage& msg, int recipient);
  void deliver(Tick tick, const BroadcastMessage& msg, int recipient);
  void command(Tick tick, const std::string& json_args);
  void raw(const std::string& line);

  const std::vector<std::string>& lines() const { return lines_; }
  std::uint64_t digest() const { return digest_; }
  bool recording() const { return keep_lines_; }
  void set_recording(bool keep) { keep_lines_ = keep; }

  std::size_t emitted() const { return emitted_; }
  std::size_t dropped() const { return dropped_; }
  std::size_t delivered() const { return delivered_; }

  // Persistence access.
  struct Counters {
    std::uint64_t digest;
    std::size_t emitted, dropped, delivered;
  };
  Counters counters() const { return {digest_, emitted_, dropped_, delivered_}; }
  void restore(const Counters& c, std::vector<std::string> lines);

 private:
  void add(std::string line);
  bool keep_lines_ = true;
  std::vector<std::string> lines_;
  std::uint64_t digest_ = 0xcbf29ce484222325ULL;
  std::size_t emitted_ = 0, dropped_ = 0, delivered_ = 0;
};

struct PendingDelivery {
  Tick due = 0;
  int recipient = 0;
  std::uint64_t order = 0;  // submission counter, keeps (emit tick, sender) order stable
  BroadcastMessage msg;
};

/// Simulated broadcast medium: every (message, recipient) pair is dropped
/// independently with probability P_c and otherwise delivered `delay` ticks later.
class LossyBus {
 public:
  LossyBus() = default;
  LossyBus(int robot_count, double loss_probability, Tick delay, Rng rng, bool lossless_tree = false);

  int robot_count() const { return robot_count_; }
  double loss_probability() const { return loss_; }
  Tick delay() const { return delay_; }

  /// Schedules delivery to every robot but the sender, or to msg.recipient if set.
  /// Loss trials are drawn in recipient-id order.
  void submit(const BroadcastMessage& msg, Tick now);

  /// Moves every delivery due at or before `now` into per-robot inboxes
  /// (index 0 unused), ordered by (emit tick, sender id).
  std::vector<std::vector<BroadcastMessage>> tick_deliver(Tick now);

  Trace& trace() { return trace_; }
  const Trace& trace() const { return trace_; }
  const std::vector<PendingDelivery>& pending() const { return pending_; }
  const Rng& rng() const { return rng_; }

  // Persistence access.
  void restore(std::vector<PendingDelivery> pending, Rng rng, std::uint64_t order_counter);
  std::uint64_t order_counter() const { return order_; }

 private:
  int robot_count_ = 0;
  double loss_ = 0.0;
  Tick delay_ = 1;
  bool lossless_tree_ = false;
  Rng rng_;
  std::uint64_t order_ = 0;
  std::vector<PendingDelivery> pending_;
  Trace trace_;
};

/// Indices (in insertion order) of own tree nodes farther than R_s from every
/// node of the remote tree; their scans are the ones the remote robot is missing.
std::vector<std::size_t> map_overlap_check_and_sync(std::span<const TreeNodeInfo> own_tree,
                                                    std::span<const TreeNodeInfo> remote_tree, double sensor_range);

/// Staggered phase rule for the periodic tree message.
inline bool periodic_tree_broadcast(int robot_id, Tick now, Tick period) {
  if (period <= 0) return false;
  const auto mod = [period](Tick v) { return ((v % period) + period) % period; };
  return mod(now) == mod(robot_id);
}

}  // namespace mrx
