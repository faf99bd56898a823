#include <doctest.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <filesystem>
#include <thread>

#include "helpers.hpp"
#include "mvnav/error.hpp"
#include "mvnav/teleop_server.hpp"

using namespace mvnav;
namespace net = boost::asio;
namespace beast = boost::beast;
using tcp = net::ip::tcp;

namespace {

Session open_session() {
  SessionConfig cfg;
  cfg.env.agent_radius = 5.0;
  cfg.start = Vec2{20, 100};
  cfg.target = Vec2{380, 100};
  return Session(std::make_shared<const OccupancyGrid>(testing::open_grid(400, 200, 5.0)),
                 straight_line_selector(), cfg);
}

class Client {
 public:
  explicit Client(unsigned short port) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    net::connect(beast::get_lowest_layer(ws_), resolver.resolve("127.0.0.1", std::to_string(port)));
    ws_.handshake("127.0.0.1", "/ws");
  }
  ~Client() {
    beast::error_code ec;
    ws_.close(beast::websocket::close_code::normal, ec);
  }
  void send(const Json& j) { ws_.write(net::buffer(j.dump())); }
  Json read() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return Json::parse(beast::buffers_to_string(buf.data()));
  }
  // Next message of the given type, skipping others.
  Json read_type(const std::string& type) {
    for (;;) {
      auto j = read();
      if (j["type"] == type) return j;
    }
  }

 private:
  net::io_context ioc_;
  beast::websocket::stream<tcp::socket> ws_;
};

std::pair<int, std::string> http_get(unsigned short port, const std::string& target) {
  net::io_context ioc;
  tcp::resolver resolver(ioc);
  beast::tcp_stream stream(ioc);
  stream.connect(resolver.resolve("127.0.0.1", std::to_string(port)));
  beast::http::request<beast::http::empty_body> req{beast::http::verb::get, target, 11};
  req.set(beast::http::field::host, "127.0.0.1");
  beast::http::write(stream, req);
  beast::flat_buffer buf;
  beast::http::response<beast::http::string_body> res;
  beast::http::read(stream, buf, res);
  beast::error_code ec;
  stream.socket().shutdown(tcp::socket::shutdown_both, ec);
  return {int(res.result_int()), res.body()};
}

template <class Pred>
bool wait_for(Pred p, std::chrono::milliseconds limit = std::chrono::milliseconds(2000)) {
  const auto until = std::chrono::steady_clock::now() + limit;
  while (std::chrono::steady_clock::now() < until) {
    if (p()) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return p();
}

}  // namespace

TEST_CASE("join handshake, broadcast and per-sender errors") {
  ServerOptions opt;
  opt.port = 0;
  TeleopServer server(open_session(), opt);
  server.start();
  REQUIRE(server.port() != 0);

  Client a(server.port());
  const auto first = a.read();
  CHECK(first["type"] == "state");
  CHECK(first["tick"] == 0);
  const auto map = a.read();
  CHECK(map["type"] == "map");
  CHECK(map["width"] == 400);

  Client b(server.port());
  CHECK(b.read()["type"] == "state");
  CHECK(b.read()["type"] == "map");
  CHECK(wait_for([&] { return server.client_count() == 2; }));

  b.send(Json{{"type", "hand_delta"}, {"dx", 1}, {"dy", 1}});
  const auto err = b.read();
  CHECK(err["type"] == "error");
  CHECK(err["reason"] == "hand_delta rejected: control is in AUTO mode");

  a.send(Json{{"type", "takeover"}});
  const auto ev_a = a.read_type("event");
  const auto ev_b = b.read_type("event");
  CHECK(ev_a["kind"] == "mode_changed");
  CHECK(ev_b["kind"] == "mode_changed");

  a.send(Json{{"type", "start"}});
  const auto st = b.read_type("state");
  CHECK(st["mode"] == "MANUAL");
  CHECK(st["tick"].get<int>() >= 1);

  const auto [code, body] = http_get(server.port(), "/");
  CHECK(code == 200);
  CHECK(body.find("<html") != std::string::npos);
  CHECK(http_get(server.port(), "/nope.js").first == 404);
  CHECK(http_get(server.port(), "/../secret").first == 400);
  server.stop();
}

TEST_CASE("ticks arrive at the configured rate") {
  ServerOptions opt;
  opt.port = 0;
  TeleopServer server(open_session(), opt);
  server.start();
  Client c(server.port());
  c.read_type("map");
  c.send(Json{{"type", "start"}});
  const auto first = c.read_type("state");
  const auto t0 = std::chrono::steady_clock::now();
  Json last;
  for (int k = 0; k < 60; ++k) last = c.read_type("state");
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  CHECK(last["tick"].get<int>() - first["tick"].get<int>() == 60);
  CHECK(elapsed == doctest::Approx(1.0).epsilon(0.05));
  CHECK(last["t_ms"].get<int>() - first["t_ms"].get<int>() == 1000);
  server.stop();
}

TEST_CASE("stop writes the recording and the session log") {
  const auto dir = std::filesystem::temp_directory_path() / "mvnav_server_record";
  std::filesystem::remove_all(dir);
  ServerOptions opt;
  opt.port = 0;
  opt.record_dir = dir;
  opt.autostart = true;
  {
    TeleopServer server(open_session(), opt);
    server.start();
    CHECK(wait_for([&] { return server.tick_count() >= 10; }));
    server.stop();
    CHECK(server.recording().ticks == server.tick_count());
  }
  CHECK(std::filesystem::exists(dir / "session_log.csv"));
  bool found = false;
  for (const auto& e : std::filesystem::directory_iterator(dir)) found = found || e.path().extension() == ".json";
  CHECK(found);
  std::filesystem::remove_all(dir);
}

TEST_CASE("binding a busy port fails cleanly") {
  ServerOptions opt;
  opt.port = 0;
  TeleopServer first(open_session(), opt);
  first.start();
  ServerOptions clash;
  clash.port = first.port();
  TeleopServer second(open_session(), clash);
  CHECK_THROWS_AS(second.start(), InputError);
  first.stop();
}
