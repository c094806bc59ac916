#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mrexplore/path_planner.hpp"
#include "mrexplore/world.hpp"

namespace mrx {

enum class MessageType : std::uint8_t { kReached, kPlanned, kSelected, kAborted, kPosition, kScan, kTree };

const char* to_string(MessageType t);
std::optional<MessageType> message_type_from_string(const std::string& s);

struct GoalPayload {
  Vec3 goal;
};

struct SelectedPayload {
  Vec3 goal;
  Path path;
  double cost = 0.0;
};

struct PositionPayload {
  Vec3 position;
};

struct ScanPayload {
  ScanPtr scan;
  Vec3 view;  // view configuration position where the scan was acquired
};

/// One exploration-tree node as shared with teammates: the scan it owns and its position.
struct TreeNodeInfo {
  int seq = 0;
  Vec3 position;
  bool operator==(const TreeNodeInfo&) const = default;
};

struct TreePayload {
  std::vector<TreeNodeInfo> nodes;
};

using MessagePayload = std::variant<GoalPayload, SelectedPayload, PositionPayload, ScanPayload, TreePayload>;

/// <robot_id, message_type, data>. A recipient of 0 means broadcast.
struct BroadcastMessage {
  int robot_id = 0;
  MessageType type = MessageType::kPosition;
  Tick emit_tick = 0;
  int recipient = 0;
  MessagePayload payload;

  /// Payload alternative matches the type and the sender id is in 1..robot_count.
  bool well_formed(int robot_count) const;

  static BroadcastMessage goal(MessageType type, int robot_id, Tick now, const Vec3& g);
  static BroadcastMessage selected(int robot_id, Tick now, const Vec3& g, Path path, double cost);
  static BroadcastMessage position(int robot_id, Tick now, const Vec3& p);
  static BroadcastMessage scan(int robot_id, Tick now, ScanPtr scan, const Vec3& view, int recipient = 0);
  static BroadcastMessage tree(int robot_id, Tick now, std::vector<TreeNodeInfo> nodes);
};

/// Stable 64-bit digest of the message contents, used in traces.
std::uint64_t message_digest(const BroadcastMessage& msg);

}  // namespace mrx
