#include "mrexplore/messages.hpp"

#include <array>
#include <cstring>

namespace mrx {
namespace {

constexpr std::array<const char*, 7> kTypeNames = {"reached", "planned", "selected", "aborted",
                                                   "position", "scan", "tree"};

class Fnv {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= b[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void f64(double v) { bytes(&v, sizeof v); }
  void i64(std::int64_t v) { bytes(&v, sizeof v); }
  void vec(const Vec3& v) {
    f64(v.x);
    f64(v.y);
    f64(v.z);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

const char* to_string(MessageType t) { return kTypeNames[static_cast<std::size_t>(t)]; }

std::optional<MessageType> message_type_from_string(const std::string& s) {
  for (std::size_t i = 0; i < kTypeNames.size(); ++i) {
    if (s == kTypeNames[i]) return static_cast<MessageType>(i);
  }
  return std::nullopt;
}

bool BroadcastMessage::well_formed(int robot_count) const {
  if (robot_id < 1 || robot_id > robot_count) return false;
  if (recipient < 0 || recipient > robot_count || recipient == robot_id) return false;
  switch (type) {
    case MessageType::kReached:
    case MessageType::kPlanned:
    case MessageType::kAborted:
      return std::holds_alternative<GoalPayload>(payload);
    case MessageType::kSelected:
      return std::holds_alternative<SelectedPayload>(payload);
    case MessageType::kPosition:
      return std::holds_alternative<PositionPayload>(payload);
    case MessageType::kScan: {
      const auto* s = std::get_if<ScanPayload>(&payload);
      return s && s->scan != nullptr;
    }
    case MessageType::kTree:
      return std::holds_alternative<TreePayload>(payload);
  }
  return false;
}

BroadcastMessage BroadcastMessage::goal(MessageType type, int robot_id, Tick now, const Vec3& g) {
  return {robot_id, type, now, 0, GoalPayload{g}};
}

BroadcastMessage BroadcastMessage::selected(int robot_id, Tick now, const Vec3& g, Path path, double cost) {
  return {robot_id, MessageType::kSelected, now, 0, SelectedPayload{g, std::move(path), cost}};
}

BroadcastMessage BroadcastMessage::position(int robot_id, Tick now, const Vec3& p) {
  return {robot_id, MessageType::kPosition, now, 0, PositionPayload{p}};
}

BroadcastMessage BroadcastMessage::scan(int robot_id, Tick now, ScanPtr scan, const Vec3& view, int recipient) {
  return {robot_id, MessageType::kScan, now, recipient, ScanPayload{std::move(scan), view}};
}

BroadcastMessage BroadcastMessage::tree(int robot_id, Tick now, std::vector<TreeNodeInfo> nodes) {
  return {robot_id, MessageType::kTree, now, 0, TreePayload{std::move(nodes)}};
}

std::uint64_t message_digest(const BroadcastMessage& msg) {
  Fnv h;
  h.i64(msg.robot_id);
  h.i64(static_cast<std::int64_t>(msg.type));
  h.i64(msg.emit_tick);
  h.i64(msg.recipient);
  std::visit(
      [&h](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, GoalPayload>) {
          h.vec(p.goal);
        } else if constexpr (std::is_same_v<T, SelectedPayload>) {
          h.vec(p.goal);
          h.f64(p.cost);
          for (const auto& w : p.path.waypoints) h.vec(w);
        } else if constexpr (std::is_same_v<T, PositionPayload>) {
          h.vec(p.position);
        } else if constexpr (std::is_same_v<T, ScanPayload>) {
          if (p.scan) {
            h.i64(p.scan->robot_id);
            h.i64(p.scan->seq);
            h.i64(p.scan->timestamp);
            h.vec(p.scan->origin);
            for (const auto& r : p.scan->rays) h.f64(r.distance);
          }
          h.vec(p.view);
        } else {
          for (const auto& n : p.nodes) {
            h.i64(n.seq);
            h.vec(n.position);
          }
        }
      },
      msg.payload);
  return h.value();
}

}  // namespace mrx
