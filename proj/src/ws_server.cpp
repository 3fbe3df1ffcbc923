#include "hrc/ws_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include <chrono>
#include <deque>
#include <fstream>
#include <memory>
#include <ostream>

namespace hrc {

namespace {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace ws = beast::websocket;
using tcp = asio::ip::tcp;

double wall_seconds() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

class Connection;

struct Entry {
  std::unique_ptr<std::ofstream> file;
  std::unique_ptr<LiveSession> session;
  std::weak_ptr<Connection> client;
};

class Hub {
 public:
  Hub(const ServerConfig& config, std::ostream& info) : config_(config), info_(info) {}

  Entry* attach(const std::shared_ptr<Connection>& conn, const Json& join, std::vector<Json>& out);
  void detach(Entry* entry) {
    if (!entry) return;
    entry->session->disconnect();
    entry->client.reset();
    info_ << "session " << entry->session->token() << " paused\n";
  }
  void tick();
  void close_all() {
    for (auto& e : entries_) e->session->close();
  }
  int started() const { return static_cast<int>(entries_.size()); }

 private:
  const ServerConfig& config_;
  std::ostream& info_;
  std::vector<std::unique_ptr<Entry>> entries_;
};

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, Hub& hub) : ws_(std::move(socket)), hub_(hub) {}

  void start() {
    ws_.text(true);
    ws_.async_accept([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->read();
    });
  }

  void send(const std::vector<Json>& messages) {
    for (const auto& m : messages) queue_.push_back(m.dump());
    if (!writing_) write();
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->hub_.detach(self->entry_);
        self->entry_ = nullptr;
        return;
      }
      self->on_message(beast::buffers_to_string(self->buffer_.data()));
      self->buffer_.consume(self->buffer_.size());
      self->read();
    });
  }

  void on_message(const std::string& text) {
    Json msg = Json::parse(text, nullptr, false);
    if (msg.is_discarded()) {
      send({make_message("action_rejected", {{"reason", "malformed message"}})});
      return;
    }
    std::vector<Json> out;
    if (!entry_) {
      if (msg.value("type", "") != "join") {
        send({make_message("action_rejected", {{"reason", "join first"}})});
        return;
      }
      entry_ = hub_.attach(shared_from_this(), msg, out);
    } else {
      out = entry_->session->handle(msg);
    }
    send(out);
  }

  void write() {
    if (queue_.empty()) {
      writing_ = false;
      return;
    }
    writing_ = true;
    ws_.async_write(asio::buffer(queue_.front()), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->queue_.pop_front();
      if (ec) {
        self->queue_.clear();
        self->writing_ = false;
        return;
      }
      self->write();
    });
  }

  ws::stream<tcp::socket> ws_;
  Hub& hub_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  bool writing_ = false;
  Entry* entry_ = nullptr;
};

Entry* Hub::attach(const std::shared_ptr<Connection>& conn, const Json& join, std::vector<Json>& out) {
  const Json body = join.value("body", Json::object());
  const bool debug = body.is_object() && body.value("debug", false);
  if (body.is_object() && body.contains("token") && body["token"].is_string()) {
    const std::string token = body["token"];
    for (auto& e : entries_) {
      if (e->session->token() != token) continue;
      if (!e->client.expired()) break;
      out = e->session->join(token, debug);
      e->client = conn;
      info_ << "session " << token << " resumed\n";
      return e.get();
    }
    out = {make_message("join", {{"ok", false}, {"reason", "unknown rejoin token"}})};
    return nullptr;
  }
  auto e = std::make_unique<Entry>();
  const auto path = config_.log_dir / ("session-" + std::to_string(entries_.size() + 1) + ".jsonl");
  e->file = std::make_unique<std::ofstream>(path);
  SessionConfig sc = config_.session;
  sc.seed += entries_.size();
  e->session = std::make_unique<LiveSession>(sc, wall_seconds, e->file.get());
  out = e->session->join(std::nullopt, debug);
  e->client = conn;
  info_ << "session " << e->session->token() << " started, log " << path.string() << "\n";
  entries_.push_back(std::move(e));
  return entries_.back().get();
}

void Hub::tick() {
  for (auto& e : entries_) {
    auto conn = e->client.lock();
    if (!conn) continue;
    auto out = e->session->tick();
    if (!out.empty()) conn->send(out);
  }
}

}  // namespace

int serve_sessions(const ServerConfig& config, std::ostream& info, std::function<bool()> stop) {
  if (!(config.tick_seconds > 0.0)) throw ConfigError("tick must be positive");
  asio::io_context io;
  tcp::acceptor acceptor(io, {asio::ip::make_address("0.0.0.0"), config.port});
  Hub hub(config, info);
  info << "listening on port " << acceptor.local_endpoint().port() << "\n";

  std::function<void()> accept = [&] {
    acceptor.async_accept([&](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<Connection>(std::move(socket), hub)->start();
      accept();
    });
  };
  accept();

  asio::steady_timer timer(io);
  const auto period = std::chrono::duration_cast<asio::steady_timer::duration>(
      std::chrono::duration<double>(config.tick_seconds));
  std::function<void()> arm = [&] {
    timer.expires_after(period);
    timer.async_wait([&](beast::error_code ec) {
      if (ec) return;
      hub.tick();
      if (stop && stop()) {
        io.stop();
        return;
      }
      arm();
    });
  };
  arm();
  io.run();
  hub.close_all();
  return hub.started();
}

}  // namespace hrc
