#include "mvnav/teleop_server.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "mvnav/error.hpp"
#include "mvnav/image_io.hpp"

namespace mvnav {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class WsClient;

std::string_view mime_type(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".map") return "application/json";
  return "application/octet-stream";
}

constexpr std::string_view kStubPage =
    "<!doctype html><html><title>mvnav teleop</title>"
    "<p>mvnav teleop server. Cockpit assets are not installed; connect a client to /ws.</p></html>\n";

}  // namespace

struct TeleopServer::Impl {
  Impl(Session s, ServerOptions o) : session(std::move(s)), options(std::move(o)) {}

  Session session;
  ServerOptions options;

  // Guards session and clients. Every message for a client is posted while
  // holding it, so per-client order matches session order.
  mutable std::mutex mu;
  std::set<std::shared_ptr<WsClient>> clients;

  net::io_context ioc{1};
  std::optional<tcp::acceptor> acceptor;
  std::thread io_thread;
  std::thread tick_thread;
  std::mutex stop_mu;
  std::condition_variable stop_cv;
  bool stopping = false;
  bool started = false;
  bool io_done = false;
  std::atomic<std::uint64_t> missed{0};

  void accept();
  void tick_loop();
  void broadcast_locked(const std::vector<Json>& messages);
  void join(const std::shared_ptr<WsClient>& c);
  void leave(const std::shared_ptr<WsClient>& c);
  void receive(const std::shared_ptr<WsClient>& c, const std::string& text);
  void write_recording();
};

namespace {

using SharedText = std::shared_ptr<const std::string>;

class WsClient : public std::enable_shared_from_this<WsClient> {
 public:
  WsClient(tcp::socket socket, TeleopServer::Impl& server)
      : ws_(std::move(socket)), server_(server) {}

  void run(http::request<http::string_body> req) {
    ws_.text(true);
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->server_.join(self);
      self->read();
    });
  }

  // Thread-safe: queues a frame on the connection's executor.
  void send(SharedText text) {
    net::post(ws_.get_executor(), [self = shared_from_this(), text = std::move(text)] {
      if (self->closed_) return;
      self->queue_.push_back(text);
      if (self->queue_.size() == 1) self->write();
    });
  }

  // Close handshake with a short deadline; used on server shutdown.
  void shutdown() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      if (self->closed_) return;
      self->closed_ = true;
      self->queue_.clear();
      // The close handshake waits on the peer; cut the socket if it stalls.
      auto timer = std::make_shared<net::steady_timer>(self->ws_.get_executor(), std::chrono::seconds(1));
      timer->async_wait([self, timer](beast::error_code ec) {
        if (!ec) beast::get_lowest_layer(self->ws_).close();
      });
      self->ws_.async_close(websocket::close_code::going_away,
                            [timer](beast::error_code) { timer->cancel(); });
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->closed_ = true;
        self->server_.leave(self);
        return;
      }
      const std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->server_.receive(self, text);
      self->read();
    });
  }

  void write() {
    ws_.async_write(net::buffer(*queue_.front()),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      if (ec) {
                        self->closed_ = true;
                        self->queue_.clear();
                        return;
                      }
                      self->queue_.pop_front();
                      if (!self->queue_.empty()) self->write();
                    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  TeleopServer::Impl& server_;
  beast::flat_buffer buffer_;
  std::deque<SharedText> queue_;
  bool closed_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, TeleopServer::Impl& server)
      : stream_(std::move(socket)), server_(server) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (ec) return;
                       self->dispatch();
                     });
  }

  void dispatch() {
    if (websocket::is_upgrade(req_)) {
      if (req_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsClient>(stream_.release_socket(), server_)->run(std::move(req_));
        return;
      }
      respond(http::status::not_found, "text/plain", "websocket endpoint is /ws\n");
      return;
    }
    if (req_.method() != http::verb::get && req_.method() != http::verb::head) {
      respond(http::status::method_not_allowed, "text/plain", "method not allowed\n");
      return;
    }
    std::string target(req_.target().substr(0, req_.target().find('?')));
    if (target.empty() || target.front() != '/' || target.find("..") != std::string::npos) {
      respond(http::status::bad_request, "text/plain", "bad path\n");
      return;
    }
    if (target.back() == '/') target += "index.html";
    const auto& root = server_.options.static_root;
    if (root.empty()) {
      if (target == "/index.html") {
        respond(http::status::ok, "text/html", std::string(kStubPage));
      } else {
        respond(http::status::not_found, "text/plain", "not found\n");
      }
      return;
    }
    const auto path = root / target.substr(1);
    std::ifstream is(path, std::ios::binary);
    if (!is || std::filesystem::is_directory(path)) {
      respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::stringstream ss;
    ss << is.rdbuf();
    respond(http::status::ok, mime_type(path), ss.str());
  }

  void respond(http::status status, std::string_view type, std::string body) {
    auto res = std::make_shared<http::response<http::string_body>>(status, req_.version());
    res->set(http::field::server, "mvnav");
    res->set(http::field::content_type, std::string(type));
    res->keep_alive(req_.keep_alive());
    res->body() = req_.method() == http::verb::head ? std::string() : std::move(body);
    res->prepare_payload();
    http::async_write(stream_, *res,
                      [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (res->keep_alive()) {
                          self->read();
                        } else {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                        }
                      });
  }

  beast::tcp_stream stream_;
  TeleopServer::Impl& server_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
};

SharedText dump(const Json& j) { return std::make_shared<const std::string>(j.dump()); }

}  // namespace

void TeleopServer::Impl::accept() {
  acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == net::error::operation_aborted) return;
    } else {
      std::make_shared<HttpConnection>(std::move(socket), *this)->run();
    }
    accept();
  });
}

void TeleopServer::Impl::broadcast_locked(const std::vector<Json>& messages) {
  for (const auto& m : messages) {
    const auto text = dump(m);
    for (const auto& c : clients) c->send(text);
  }
}

void TeleopServer::Impl::join(const std::shared_ptr<WsClient>& c) {
  std::lock_guard lock(mu);
  c->send(dump(session.state_message()));
  c->send(dump(session.map_message()));
  clients.insert(c);
}

void TeleopServer::Impl::leave(const std::shared_ptr<WsClient>& c) {
  std::lock_guard lock(mu);
  clients.erase(c);
}

void TeleopServer::Impl::receive(const std::shared_ptr<WsClient>& c, const std::string& text) {
  std::lock_guard lock(mu);
  const Outbox out = session.handle_message(std::string_view(text));
  for (const auto& m : out.reply) c->send(dump(m));
  broadcast_locked(out.broadcast);
}

void TeleopServer::Impl::tick_loop() {
  using clock = std::chrono::steady_clock;
  const auto period = std::chrono::duration_cast<clock::duration>(
      std::chrono::duration<double>(1.0 / session.tick_rate()));
  auto deadline = clock::now() + period;
  while (true) {
    {
      std::unique_lock lock(stop_mu);
      if (stop_cv.wait_until(lock, deadline, [this] { return stopping; })) return;
    }
    {
      std::lock_guard lock(mu);
      broadcast_locked(session.tick());
    }
    deadline += period;
    const auto now = clock::now();
    if (now > deadline) {
      // Late ticks still run, back to back, so simulated time never skips.
      ++missed;
      const double late_ms = std::chrono::duration<double, std::milli>(now - deadline).count();
      std::cerr << "teleop: tick deadline missed by " << late_ms << " ms\n";
    }
  }
}

void TeleopServer::Impl::write_recording() {
  if (options.record_dir.empty()) return;
  std::filesystem::create_directories(options.record_dir);
  std::lock_guard lock(mu);
  session.recording().save(options.record_dir / "recording.json");
  write_file_atomic(options.record_dir / "session_log.csv", session.session_log_csv());
}

TeleopServer::TeleopServer(Session session, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(session), std::move(options))) {}

TeleopServer::~TeleopServer() {
  try {
    stop();
  } catch (const std::exception& e) {
    std::cerr << "teleop: " << e.what() << "\n";
  }
}

void TeleopServer::start() {
  auto& s = *impl_;
  if (s.started) return;
  beast::error_code ec;
  const auto addr = net::ip::make_address(s.options.address, ec);
  if (ec) throw InputError("bad bind address '" + s.options.address + "'");
  s.acceptor.emplace(s.ioc);
  const tcp::endpoint ep(addr, s.options.port);
  s.acceptor->open(ep.protocol(), ec);
  if (!ec) s.acceptor->set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) s.acceptor->bind(ep, ec);
  if (!ec) s.acceptor->listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    throw InputError("cannot listen on " + s.options.address + ":" +
                     std::to_string(s.options.port) + ": " + ec.message());
  }
  if (s.options.autostart) {
    std::lock_guard lock(s.mu);
    s.session.handle_message(Json{{"type", "start"}});
  }
  s.accept();
  s.started = true;
  s.io_done = false;
  s.io_thread = std::thread([&s] {
    s.ioc.run();
    std::lock_guard lock(s.stop_mu);
    s.io_done = true;
    s.stop_cv.notify_all();
  });
  s.tick_thread = std::thread([&s] { s.tick_loop(); });
}

void TeleopServer::stop() {
  auto& s = *impl_;
  if (!s.started) return;
  {
    std::lock_guard lock(s.stop_mu);
    s.stopping = true;
  }
  s.stop_cv.notify_all();
  if (s.tick_thread.joinable()) s.tick_thread.join();
  // Stop accepting and close sockets so the io thread runs out of work; force
  // it after a grace period (idle keep-alive HTTP connections, say).
  net::post(s.ioc, [&s] {
    beast::error_code ignored;
    s.acceptor->close(ignored);
    std::lock_guard lock(s.mu);
    for (const auto& c : s.clients) c->shutdown();
    s.clients.clear();
  });
  {
    std::unique_lock lock(s.stop_mu);
    if (!s.stop_cv.wait_for(lock, std::chrono::seconds(2), [&s] { return s.io_done; })) s.ioc.stop();
  }
  if (s.io_thread.joinable()) s.io_thread.join();
  s.started = false;
  s.write_recording();
}

unsigned short TeleopServer::port() const {
  return impl_->acceptor ? impl_->acceptor->local_endpoint().port() : impl_->options.port;
}

std::size_t TeleopServer::client_count() const {
  std::lock_guard lock(impl_->mu);
  return impl_->clients.size();
}

std::uint64_t TeleopServer::tick_count() const {
  std::lock_guard lock(impl_->mu);
  return impl_->session.tick_count();
}

std::uint64_t TeleopServer::missed_deadlines() const { return impl_->missed.load(); }

Recording TeleopServer::recording() const {
  std::lock_guard lock(impl_->mu);
  return impl_->session.recording();
}

std::string TeleopServer::session_log_csv() const {
  std::lock_guard lock(impl_->mu);
  return impl_->session.session_log_csv();
}

}  // namespace mvnav
