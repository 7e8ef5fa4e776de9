#include "rcmteleop/server.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <deque>
#include <future>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "rcmteleop/errors.hpp"
#include "rcmteleop/rcm_constraint.hpp"

namespace rcmteleop {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

constexpr std::size_t kStateQueueCapacity = 4;
constexpr std::size_t kSessionQueueCapacity = 16;

Vec3 vec3_field(const json& j, const char* key, const char* where) {
  if (!j.contains(key) || !j.at(key).is_array() || j.at(key).size() != 3) {
    throw InvalidInput(std::string(where) + "." + key + " must be an array of 3 numbers");
  }
  Vec3 out;
  for (int i = 0; i < 3; ++i) {
    const json& v = j.at(key)[static_cast<std::size_t>(i)];
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw InvalidInput(std::string(where) + "." + key + " must contain finite numbers");
    }
    out[i] = v.get<double>();
  }
  return out;
}

json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out.push_back(v[i]);
  }
  return out;
}

}  // namespace

TeleopCommand parse_command(std::string_view text) {
  json doc = json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw InvalidInput("command: not a JSON object");
  }
  if (!doc.contains("stylus") || !doc.at("stylus").is_object()) {
    throw InvalidInput("command: missing stylus");
  }
  const json& st = doc.at("stylus");
  const Vec3 p = vec3_field(st, "position", "stylus");
  if (!st.contains("quaternion") || !st.at("quaternion").is_array() || st.at("quaternion").size() != 4) {
    throw InvalidInput("command: stylus.quaternion must be [x, y, z, w]");
  }
  Eigen::Vector4d quat;
  for (int i = 0; i < 4; ++i) {
    const json& v = st.at("quaternion")[static_cast<std::size_t>(i)];
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw InvalidInput("command: stylus.quaternion must contain finite numbers");
    }
    quat[i] = v.get<double>();
  }
  if (std::abs(quat.norm() - 1.0) > 1e-3) {
    throw InvalidInput("command: stylus.quaternion must be unit length");
  }
  TeleopCommand cmd;
  cmd.stylus = Pose::from_position_quaternion(p, quat);
  if (!doc.contains("clutch") || !doc.at("clutch").is_boolean()) {
    throw InvalidInput("command: clutch must be a boolean");
  }
  cmd.clutch = doc.at("clutch").get<bool>();
  if (doc.contains("gripper")) {
    const json& g = doc.at("gripper");
    if (!g.is_number() || !(g.get<double>() >= 0.0 && g.get<double>() <= 1.0)) {
      throw InvalidInput("command: gripper must be a number in [0, 1]");
    }
    cmd.gripper = g.get<double>();
  }
  if (doc.contains("timestamp")) {
    const json& ts = doc.at("timestamp");
    if (!ts.is_number() || !std::isfinite(ts.get<double>())) {
      throw InvalidInput("command: timestamp must be a finite number");
    }
    cmd.timestamp = ts.get<double>();
  }
  return cmd;
}

std::string command_to_json(const TeleopCommand& cmd) {
  return json{{"stylus", pose_to_json(cmd.stylus)},
              {"clutch", cmd.clutch},
              {"gripper", cmd.gripper},
              {"timestamp", cmd.timestamp}}
      .dump();
}

json state_message(const ControlLoop& loop) {
  const SimState& s = loop.sim().state();
  const Vec3 p_ins = s.kin.instrument.position;
  json frames = json::array();
  for (const Pose& f : s.kin.frames) {
    frames.push_back(vec_json(f.position));
  }
  return {{"type", "state"},
          {"t", s.t},
          {"q", vec_json(s.aug.q)},
          {"lambda", s.aug.lambda},
          {"instrument", pose_to_json(s.kin.instrument)},
          {"p_end", vec_json(s.kin.p_end)},
          {"p_rcm", vec_json(rcm_position(s.kin.p_end, p_ins, s.aug.lambda))},
          {"trocar", vec_json(s.trocar_now)},
          {"f_hat", vec_json(s.f_hat)},
          {"lateral_deviation", lateral_deviation(s.kin.p_end, p_ins, s.trocar_now)},
          {"clutch", loop.mapper().clutch().engaged},
          {"desired", pose_to_json(loop.desired())},
          {"frames", frames}};
}

struct Server::Impl {
  class Session;

  explicit Impl(ExperimentConfig c) : cfg(std::move(c)), acceptor(ioc) {
    cfg.mode = Mode::teleop;
    cfg.validate();
  }

  ExperimentConfig cfg;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::thread net_thread;
  std::thread control_thread;
  std::atomic<bool> active{false};
  int bound_port = 0;

  // Network thread only.
  std::set<std::shared_ptr<Session>> sessions;
  double tokens = kCommandBurst;
  std::chrono::steady_clock::time_point last_refill = std::chrono::steady_clock::now();

  std::mutex cmd_mu;
  std::optional<TeleopCommand> latest_cmd;

  std::mutex state_mu;
  std::deque<std::shared_ptr<const std::string>> state_queue;
  std::shared_ptr<const std::string> last_state;
  std::string fault;

  std::atomic<std::uint64_t> received{0}, accepted{0}, malformed{0}, rate_limited{0},
      published{0}, dropped{0}, ticks{0}, clients{0};

  void remove(const std::shared_ptr<Session>& s) {
    if (sessions.erase(s) > 0) {
      --clients;
    }
  }

  void do_accept();
  void on_message(const std::string& text);
  void flush();
  void control_main();
};

class Server::Impl::Session : public std::enable_shared_from_this<Session> {
 public:
  Session(tcp::socket socket, Impl& owner) : ws_(std::move(socket)), owner_(owner) {}

  void run() {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (ec) {
        self->owner_.remove(self);
        return;
      }
      self->open_ = true;
      self->read();
    });
  }

  void send(std::shared_ptr<const std::string> msg) {
    if (!open_) {
      return;
    }
    if (queue_.size() >= kSessionQueueCapacity) {
      // Keep the frame in flight, drop the oldest waiting one.
      queue_.erase(queue_.begin() + (writing_ ? 1 : 0));
      ++owner_.dropped;
    }
    queue_.push_back(std::move(msg));
    if (!writing_) {
      write();
    }
  }

  void close() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->owner_.remove(self);
        return;
      }
      if (self->ws_.got_text()) {
        self->owner_.on_message(beast::buffers_to_string(self->buffer_.data()));
      } else {
        ++self->owner_.received;
        ++self->owner_.malformed;
      }
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void write() {
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->queue_.pop_front();
                      self->writing_ = false;
                      if (ec) {
                        self->owner_.remove(self);
                        return;
                      }
                      if (!self->queue_.empty()) {
                        self->write();
                      }
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Impl& owner_;
  beast::flat_buffer buffer_;
  std::deque<std::shared_ptr<const std::string>> queue_;
  bool writing_ = false;
  bool open_ = false;
};

void Server::Impl::do_accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      return;  // acceptor closed
    }
    auto session = std::make_shared<Session>(std::move(socket), *this);
    sessions.insert(session);
    ++clients;
    session->run();
    do_accept();
  });
}

void Server::Impl::on_message(const std::string& text) {
  ++received;
  TeleopCommand cmd;
  try {
    cmd = parse_command(text);
  } catch (const InvalidInput& e) {
    ++malformed;
    std::cerr << "warning: dropped malformed command: " << e.what() << '\n';
    return;
  }
  const auto now = std::chrono::steady_clock::now();
  tokens = std::min(kCommandBurst,
                    tokens + kCommandRateHz * std::chrono::duration<double>(now - last_refill).count());
  last_refill = now;
  if (tokens < 1.0) {
    ++rate_limited;
    return;
  }
  tokens -= 1.0;
  ++accepted;
  std::lock_guard lock(cmd_mu);
  latest_cmd = cmd;
}

void Server::Impl::flush() {
  std::deque<std::shared_ptr<const std::string>> batch;
  {
    std::lock_guard lock(state_mu);
    batch.swap(state_queue);
  }
  for (auto& msg : batch) {
    for (const auto& s : sessions) {
      s->send(msg);
    }
  }
}

void Server::Impl::control_main() {
  try {
    ControlLoop loop(cfg);
    const double dt = cfg.solver.dt;
    const auto every = static_cast<std::uint64_t>(
        std::max(1.0, std::round(1.0 / (cfg.server.state_rate_hz * dt))));
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(dt));
    auto next = std::chrono::steady_clock::now();
    while (active.load()) {
      {
        std::lock_guard lock(cmd_mu);
        if (latest_cmd) {
          loop.submit(*latest_cmd);
        }
      }
      loop.tick();
      ticks = loop.ticks_done();
      if (loop.ticks_done() % every == 0) {
        auto msg = std::make_shared<const std::string>(state_message(loop).dump());
        {
          std::lock_guard lock(state_mu);
          if (state_queue.size() >= kStateQueueCapacity) {
            state_queue.pop_front();
            ++dropped;
          }
          state_queue.push_back(msg);
          last_state = msg;
        }
        ++published;
        net::post(ioc, [this] { flush(); });
      }
      next += period;
      std::this_thread::sleep_until(next);
    }
  } catch (const Error& e) {
    std::lock_guard lock(state_mu);
    fault = e.what();
    active = false;
  }
}

Server::Server(ExperimentConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

Server::~Server() { stop(); }

void Server::start() {
  if (impl_->active.load() || impl_->net_thread.joinable()) {
    throw RuntimeFault("server already started");
  }
  Impl& im = *impl_;
  beast::error_code ec;
  const auto address = net::ip::make_address(im.cfg.server.host, ec);
  if (ec) {
    throw ConfigError("server.host is not a valid address: " + im.cfg.server.host);
  }
  const tcp::endpoint endpoint(address, static_cast<unsigned short>(im.cfg.server.port));
  im.acceptor.open(endpoint.protocol(), ec);
  if (!ec) im.acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) im.acceptor.bind(endpoint, ec);
  if (!ec) im.acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    beast::error_code ignored;
    im.acceptor.close(ignored);
    throw RuntimeFault("cannot listen on " + im.cfg.server.host + ":" +
                       std::to_string(im.cfg.server.port) + ": " + ec.message());
  }
  im.bound_port = im.acceptor.local_endpoint().port();
  im.do_accept();
  im.active = true;
  im.net_thread = std::thread([&im] { im.ioc.run(); });
  im.control_thread = std::thread([&im] { im.control_main(); });
}

void Server::stop() {
  Impl& im = *impl_;
  im.active = false;
  if (im.control_thread.joinable()) {
    im.control_thread.join();
  }
  if (im.net_thread.joinable()) {
    // Sockets must actually close before the loop stops, or peers hang in the close handshake.
    std::promise<void> closed;
    net::post(im.ioc, [&im, &closed] {
      beast::error_code ec;
      im.acceptor.close(ec);
      for (const auto& s : im.sessions) {
        s->close();
      }
      closed.set_value();
    });
    closed.get_future().wait_for(std::chrono::seconds(2));
    im.ioc.stop();
    im.net_thread.join();
    im.sessions.clear();
  }
}

bool Server::running() const { return impl_->active.load(); }

int Server::port() const { return impl_->bound_port; }

ServerStats Server::stats() const {
  const Impl& im = *impl_;
  ServerStats s;
  s.received = im.received;
  s.accepted = im.accepted;
  s.malformed = im.malformed;
  s.rate_limited = im.rate_limited;
  s.states_published = im.published;
  s.states_dropped = im.dropped;
  s.ticks = im.ticks;
  s.clients = im.clients;
  return s;
}

std::string Server::latest_state() const {
  std::lock_guard lock(impl_->state_mu);
  return impl_->last_state ? *impl_->last_state : std::string();
}

std::string Server::fault() const {
  std::lock_guard lock(impl_->state_mu);
  return impl_->fault;
}

}  // namespace rcmteleop
