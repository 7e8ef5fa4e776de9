#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "rcmteleop/harness.hpp"

namespace rcmteleop {

/// Inbound command rate limit (messages per second) and burst allowance.
inline constexpr double kCommandRateHz = 500.0;
inline constexpr double kCommandBurst = 5.0;

struct ServerStats {
  std::uint64_t received = 0;
  std::uint64_t accepted = 0;
  std::uint64_t malformed = 0;
  std::uint64_t rate_limited = 0;
  std::uint64_t states_published = 0;
  std::uint64_t states_dropped = 0;
  std::uint64_t clients = 0;
  std::uint64_t ticks = 0;
};

/// Parses {"stylus": {"position": [x,y,z], "quaternion": [x,y,z,w]}, "clutch": bool,
/// "gripper": number, "timestamp": number}. Throws InvalidInput when malformed.
TeleopCommand parse_command(std::string_view text);
std::string command_to_json(const TeleopCommand& cmd);

/// Outbound state snapshot for the current control-loop state.
nlohmann::json state_message(const ControlLoop& loop);

/// WebSocket service around a real-time control loop. One control thread owns
/// the loop; one network thread owns the connections. Commands are latest-wins,
/// outbound states drop the oldest entry when a queue is full. The loop always
/// runs in teleop mode; without a client the desired pose is held.
class Server {
 public:
  explicit Server(ExperimentConfig cfg);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts both threads. Throws RuntimeFault when the port is busy.
  void start();
  void stop();
  bool running() const;

  /// Bound port (useful with port 0).
  int port() const;
  ServerStats stats() const;
  /// Latest published state message, empty before the first tick.
  std::string latest_state() const;
  /// Non-empty when the control loop stopped on a fault.
  std::string fault() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace rcmteleop
