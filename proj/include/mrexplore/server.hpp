#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "mrexplore/mission.hpp"

namespace mrx {

/// Line-delimited JSON control and telemetry endpoint on 127.0.0.1.
///
/// Client lines are `{"cmd": ..., "args": {...}, "req_id": ...}`; replies are
/// `{"req_id": ..., "ok": {"tick": n}}` or `{"req_id": ..., "err": "..."}`.
/// Subscribed clients receive `{"topic", "tick", "data"}` frames.
class ControlServer {
 public:
  static const std::vector<std::string>& topics();

  /// Binds and starts the listener thread; port 0 picks a free port.
  explicit ControlServer(int port, Tick decimation = 5);
  ~ControlServer();
  ControlServer(const ControlServer&) = delete;
  ControlServer& operator=(const ControlServer&) = delete;

  int port() const { return port_; }
  Tick decimation() const { return decimation_; }

  /// Applies every received request to the mission and sends the replies.
  /// Called by the tick loop between ticks, so all mutation happens there.
  /// Returns the number of requests handled.
  std::size_t pump(Mission& mission);

  /// Sends telemetry frames when the tick is a multiple of the decimation.
  void publish(const Mission& mission, bool force = false);

  std::size_t client_count() const;
  void stop();

  /// Builds the `data` member of a frame for one topic.
  static std::string topic_data(const Mission& mission, const std::string& topic);

 private:
  struct Client {
    int fd = -1;
    std::string buffer;
    std::set<std::string> topics;
    std::mutex write_mutex;
  };
  struct Request {
    int client = 0;
    std::string line;
  };

  void loop();
  void send(const std::shared_ptr<Client>& c, const std::string& line);

  int listen_fd_ = -1;
  int port_ = 0;
  Tick decimation_ = 5;
  std::atomic<bool> running_{false};
  std::thread thread_;
  mutable std::mutex mutex_;
  std::map<int, std::shared_ptr<Client>> clients_;
  std::vector<Request> inbox_;
  int next_client_ = 1;
};

}  // namespace mrx
