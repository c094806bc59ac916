#include "mrexplore/network.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <limits>

namespace mrx {
namespace {

std::string event_line(const char* ev, Tick tick, const BroadcastMessage& msg, int recipient) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "{\"tick\":%" PRId64 ",\"ev\":\"%s\",\"type\":\"%s\",\"from\":%d,\"to\":%d,\"emit\":%" PRId64
                ",\"digest\":\"%016" PRIx64 "\"}",
                static_cast<std::int64_t>(tick), ev, to_string(msg.type), msg.robot_id, recipient,
                static_cast<std::int64_t>(msg.emit_tick), message_digest(msg));
  return buf;
}

}  // namespace

void Trace::add(std::string line) {
  for (unsigned char c : line) {
    digest_ ^= c;
    digest_ *= 0x100000001b3ULL;
  }
  digest_ ^= '\n';
  digest_ *= 0x100000001b3ULL;
  if (keep_lines_) lines_.push_back(std::move(line));
}

void Trace::emit(Tick tick, const BroadcastMessage& msg) {
  ++emitted_;
  add(event_line("emit", tick, msg, msg.recipient));
}

void Trace::drop(Tick tick, const BroadcastMessage& msg, int recipient) {
  ++dropped_;
  add(event_line("drop", tick, msg, recipient));
}

void Trace::deliver(Tick tick, const BroadcastMessage& msg, int recipient) {
  ++delivered_;
  add(event_line("deliver", tick, msg, recipient));
}

void Trace::command(Tick tick, const std::string& json_args) {
  add("{\"tick\":" + std::to_string(tick) + ",\"ev\":\"command\",\"cmd\":" + json_args + "}");
}

void Trace::raw(const std::string& line) { add(line); }

void Trace::restore(const Counters& c, std::vector<std::string> lines) {
  digest_ = c.digest;
  emitted_ = c.emitted;
  dropped_ = c.dropped;
  delivered_ = c.delivered;
  lines_ = std::move(lines);
}

LossyBus::LossyBus(int robot_count, double loss_probability, Tick delay, Rng rng, bool lossless_tree)
    : robot_count_(robot_count), loss_(loss_probability), delay_(delay), lossless_tree_(lossless_tree),
      rng_(std::move(rng)) {}

void LossyBus::submit(const BroadcastMessage& msg, Tick now) {
  trace_.emit(now, msg);
  const bool lossless = lossless_tree_ && msg.type == MessageType::kTree;
  for (int r = 1; r <= robot_count_; ++r) {
    if (r == msg.robot_id) continue;
    if (msg.recipient != 0 && r != msg.recipient) continue;
    const bool lost = rng_.uniform() < loss_ && !lossless;
    if (lost) {
      trace_.drop(now, msg, r);
      continue;
    }
    pending_.push_back({now + delay_, r, order_++, msg});
  }
}

std::vector<std::vector<BroadcastMessage>> LossyBus::tick_deliver(Tick now) {
  std::vector<std::vector<BroadcastMessage>> inboxes(static_cast<std::size_t>(robot_count_) + 1);
  std::vector<PendingDelivery> due;
  std::vector<PendingDelivery> later;
  for (auto& p : pending_) (p.due <= now ? due : later).push_back(std::move(p));
  pending_ = std::move(later);
  std::stable_sort(due.begin(), due.end(), [](const PendingDelivery& a, const PendingDelivery& b) {
    if (a.msg.emit_tick != b.msg.emit_tick) return a.msg.emit_tick < b.msg.emit_tick;
    if (a.msg.robot_id != b.msg.robot_id) return a.msg.robot_id < b.msg.robot_id;
    if (a.recipient != b.recipient) return a.recipient < b.recipient;
    return a.order < b.order;
  });
  for (auto& d : due) {
    trace_.deliver(now, d.msg, d.recipient);
    inboxes[static_cast<std::size_t>(d.recipient)].push_back(std::move(d.msg));
  }
  return inboxes;
}

void LossyBus::restore(std::vector<PendingDelivery> pending, Rng rng, std::uint64_t order_counter) {
  pending_ = std::move(pending);
  rng_ = std::move(rng);
  order_ = order_counter;
}

std::vector<std::size_t> map_overlap_check_and_sync(std::span<const TreeNodeInfo> own_tree,
                                                    std::span<const TreeNodeInfo> remote_tree, double sensor_range) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < own_tree.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& r : remote_tree) best = std::min(best, distance(own_tree[i].position, r.position));
    if (best > sensor_range) out.push_back(i);
  }
  return out;
}

}  // namespace mrx
