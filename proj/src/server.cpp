#include "mrexplore/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cinttypes>
#include <cstring>

#include "json.hpp"

namespace mrx {

using nlohmann::json;

namespace {

json vec_j(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

std::string hex(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

}  // namespace

const std::vector<std::string>& ControlServer::topics() {
  static const std::vector<std::string> t{"map", "robots", "trees", "metrics", "messages"};
  return t;
}

ControlServer::ControlServer(int port, Tick decimation) : decimation_(std::max<Tick>(1, decimation)) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw std::runtime_error(std::string("socket: ") + std::strerror(errno));
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 8) < 0) {
    const std::string err = std::strerror(errno);
    ::close(listen_fd_);
    throw std::runtime_error("cannot listen on port " + std::to_string(port) + ": " + err);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  running_ = true;
  thread_ = std::thread([this] { loop(); });
}

ControlServer::~ControlServer() { stop(); }

void ControlServer::stop() {
  if (!running_.exchange(false)) return;
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mutex_);
  for (auto& [id, c] : clients_) ::close(c->fd);
  clients_.clear();
  ::close(listen_fd_);
  listen_fd_ = -1;
}

std::size_t ControlServer::client_count() const {
  std::lock_guard lock(mutex_);
  return clients_.size();
}

void ControlServer::loop() {
  while (running_) {
    std::vector<pollfd> fds{{listen_fd_, POLLIN, 0}};
    std::vector<int> ids;
    {
      std::lock_guard lock(mutex_);
      for (const auto& [id, c] : clients_) {
        fds.push_back({c->fd, POLLIN, 0});
        ids.push_back(id);
      }
    }
    if (::poll(fds.data(), fds.size(), 50) <= 0) continue;
    if (fds[0].revents & POLLIN) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd >= 0) {
        auto c = std::make_shared<Client>();
        c->fd = fd;
        std::lock_guard lock(mutex_);
        clients_[next_client_++] = std::move(c);
      }
    }
    for (std::size_t i = 1; i < fds.size(); ++i) {
      if (!(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      const int id = ids[i - 1];
      char buf[4096];
      const ssize_t n = ::recv(fds[i].fd, buf, sizeof buf, 0);
      std::lock_guard lock(mutex_);
      const auto it = clients_.find(id);
      if (it == clients_.end()) continue;
      if (n <= 0) {
        ::close(it->second->fd);
        clients_.erase(it);
        continue;
      }
      std::string& b = it->second->buffer;
      b.append(buf, static_cast<std::size_t>(n));
      std::size_t pos;
      while ((pos = b.find('\n')) != std::string::npos) {
        std::string line = b.substr(0, pos);
        b.erase(0, pos + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) inbox_.push_back({id, std::move(line)});
      }
    }
  }
}

void ControlServer::send(const std::shared_ptr<Client>& c, const std::string& line) {
  std::lock_guard lock(c->write_mutex);
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(c->fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return;
    off += static_cast<std::size_t>(n);
  }
}

std::size_t ControlServer::pump(Mission& mission) {
  std::vector<Request> requests;
  {
    std::lock_guard lock(mutex_);
    requests.swap(inbox_);
  }
  for (const auto& r : requests) {
    std::shared_ptr<Client> client;
    {
      std::lock_guard lock(mutex_);
      const auto it = clients_.find(r.client);
      if (it != clients_.end()) client = it->second;
    }
    json reply;
    reply["req_id"] = nullptr;
    try {
      const json req = json::parse(r.line);
      if (!req.is_object()) throw ControlError("request must be an object");
      if (req.contains("req_id")) reply["req_id"] = req["req_id"];
      const std::string cmd = req.at("cmd").get<std::string>();
      const json args = req.value("args", json::object());
      if (cmd == "subscribe" || cmd == "unsubscribe") {
        std::vector<std::string> wanted;
        if (args.contains("topics")) wanted = args["topics"].get<std::vector<std::string>>();
        if (args.contains("topic")) wanted.push_back(args["topic"].get<std::string>());
        if (wanted.empty()) throw ControlError("no topics given");
        for (const auto& t : wanted) {
          if (std::find(topics().begin(), topics().end(), t) == topics().end()) {
            throw ControlError("unknown topic '" + t + "'");
          }
        }
        if (client) {
          std::lock_guard lock(mutex_);
          for (const auto& t : wanted) {
            if (cmd == "subscribe") client->topics.insert(t);
            else client->topics.erase(t);
          }
        }
        reply["ok"] = {{"tick", mission.now()}};
      } else {
        const Tick t = mission.apply(parse_command(cmd, args.dump()));
        reply["ok"] = {{"tick", t}};
      }
    } catch (const json::exception& e) {
      reply["err"] = std::string("malformed request: ") + e.what();
    } catch (const std::exception& e) {
      reply["err"] = e.what();
    }
    if (client) send(client, reply.dump());
  }
  return requests.size();
}

std::string ControlServer::topic_data(const Mission& mission, const std::string& topic) {
  json d;
  if (topic == "map") {
    d = json::array();
    for (const auto& r : mission.robots()) {
      d.push_back({{"id", r.state.id},
                   {"grid", r.agent.grid().snapshot()},
                   {"points", r.agent.point_map().export_text()}});
    }
  } else if (topic == "robots") {
    d = json::array();
    for (const auto& r : mission.robots()) {
      json team = json::array();
      for (const auto& [id, t] : r.agent.team().tuples()) {
        team.push_back({{"id", id},
                        {"position", t.position ? vec_j(*t.position) : json(nullptr)},
                        {"goal", t.goal ? vec_j(*t.goal) : json(nullptr)},
                        {"cost", t.cost ? json(*t.cost) : json(nullptr)},
                        {"stamp", t.stamp ? json(*t.stamp) : json(nullptr)}});
      }
      json pois = json::array();
      for (const auto& p : r.agent.pois().entries()) pois.push_back({{"position", vec_j(p.position)}, {"priority", p.priority}});
      d.push_back({{"id", r.state.id},
                   {"position", vec_j(r.state.position)},
                   {"yaw", r.state.yaw},
                   {"goal", r.agent.goal() ? vec_j(r.agent.goal()->position) : json(nullptr)},
                   {"stopped", r.stopped},
                   {"completed", r.agent.completed()},
                   {"distance", r.distance},
                   {"pois", pois},
                   {"team", team}});
    }
  } else if (topic == "trees") {
    d = json::array();
    for (const auto& r : mission.robots()) {
      json et = json::array();
      for (const auto& n : r.agent.exploration_tree().nodes()) et.push_back({vec_j(n.position), n.parent});
      json ft = json::array();
      for (const auto& n : r.agent.frontier_tree().nodes()) ft.push_back({vec_j(n.position), n.parent, n.gain});
      json st = json::array();
      for (const auto& n : r.agent.last_search_tree().nodes) st.push_back({vec_j(n.position), n.parent, n.utility});
      d.push_back({{"id", r.state.id}, {"exploration", et}, {"frontier", ft}, {"search", st}});
    }
  } else if (topic == "metrics") {
    if (mission.metrics().empty()) {
      d = nullptr;
    } else {
      const MetricsRow& m = mission.metrics().back();
      d = {{"tick", m.tick},         {"vol_union", m.vol_union}, {"vol", m.vol},
           {"dist", m.dist},         {"conflicts", m.conflicts}, {"goal_goal", m.goal_goal},
           {"goal_start", m.goal_start}, {"aborts", m.aborts},   {"failures", m.failures},
           {"emitted", m.emitted},   {"drops", m.drops}};
    }
  } else if (topic == "messages") {
    d = json::array();
    for (const auto& m : mission.last_emitted()) {
      d.push_back({{"type", to_string(m.type)},
                   {"from", m.robot_id},
                   {"to", m.recipient},
                   {"emit", m.emit_tick},
                   {"digest", hex(message_digest(m))}});
    }
  } else {
    throw ControlError("unknown topic '" + topic + "'");
  }
  return d.dump();
}

void ControlServer::publish(const Mission& mission, bool force) {
  if (!force && mission.now() % decimation_ != 0) return;
  std::vector<std::pair<std::shared_ptr<Client>, std::vector<std::string>>> targets;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [id, c] : clients_) {
      if (!c->topics.empty()) targets.push_back({c, {c->topics.begin(), c->topics.end()}});
    }
  }
  std::map<std::string, std::string> cache;
  for (const auto& [c, ts] : targets) {
    for (const auto& t : ts) {
      auto it = cache.find(t);
      if (it == cache.end()) {
        it = cache.emplace(t, "{\"topic\":\"" + t + "\",\"tick\":" + std::to_string(mission.now()) +
                                  ",\"data\":" + topic_data(mission, t) + "}")
                 .first;
      }
      send(c, it->second);
    }
  }
}

}  // namespace mrx
