#include "movingout/play/server.hpp"

#include <atomic>
#include <boost/asio/ip/tcp.hpp>
#include <boost/asio/steady_timer.hpp>
#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <chrono>
#include <deque>
#include <fstream>
#include <sstream>
#include <thread>
#include <vector>

#include "json.hpp"
#include "movingout/errors.hpp"
#include "movingout/play/session.hpp"

namespace movingout::play {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

struct Shared {
  ServerOptions options;
  std::atomic<int> active{0};
  std::atomic<std::uint64_t> next_id{1};
};

namespace {

std::string error_message(const std::string& reason) {
  return nlohmann::json{{"type", "error"}, {"reason", reason}}.dump();
}

std::string message_type(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.is_object() && j.contains("type") && j["type"].is_string()) return j["type"].get<std::string>();
  } catch (const nlohmann::json::exception&) {
  }
  return {};
}

const char* mime_type(const std::filesystem::path& p) {
  const std::string ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

class PlayConnection : public std::enable_shared_from_this<PlayConnection> {
 public:
  PlayConnection(tcp::socket socket, std::shared_ptr<Shared> shared)
      : ws_(std::move(socket)), timer_(ws_.get_executor()), shared_(std::move(shared)) {}

  ~PlayConnection() { release(); }

  void start(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.async_accept(req, beast::bind_front_handler(&PlayConnection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    read();
  }

  void read() { ws_.async_read(buffer_, beast::bind_front_handler(&PlayConnection::on_read, shared_from_this())); }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      // Client gone: the episode is discarded with this connection.
      timer_.cancel();
      release();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle(text);
    if (!closing_) read();
  }

  void handle(const std::string& text) {
    const std::string type = message_type(text);
    try {
      if (type == "hello") {
        open(text);
      } else if (type == "action") {
        if (!session_) throw Error(ErrorKind::kBadRequest, "send hello first");
        session_->submit(parse_action(text));
      } else {
        throw Error(ErrorKind::kBadRequest, "unknown message type '" + type + "'");
      }
    } catch (const Error& e) {
      send(error_message(e.what()));
      if (!session_) close();
    }
  }

  void open(const std::string& text) {
    if (session_) throw Error(ErrorKind::kBadRequest, "session already open");
    SessionRequest req = parse_hello(text);
    if (shared_->active.fetch_add(1) >= shared_->options.max_sessions) {
      shared_->active.fetch_sub(1);
      throw Error(ErrorKind::kBadRequest, "server full");
    }
    holds_slot_ = true;
    SessionOptions so;
    so.max_ticks = shared_->options.max_ticks;
    so.n_candidates = shared_->options.n_candidates;
    so.model = shared_->options.model;
    session_ = std::make_unique<Session>("s" + std::to_string(shared_->next_id.fetch_add(1)), std::move(req), so);
    send(session_->state_message(true));
    if (session_->done()) {
      finish();
      return;
    }
    period_ = std::chrono::milliseconds(shared_->options.tick_ms);
    deadline_ = Clock::now() + period_;
    schedule();
  }

  void schedule() {
    timer_.expires_at(deadline_);
    timer_.async_wait(beast::bind_front_handler(&PlayConnection::on_tick, shared_from_this()));
  }

  void on_tick(beast::error_code ec) {
    if (ec || closing_ || !session_) return;
    session_->tick();
    send(session_->state_message(false));
    if (session_->done()) {
      finish();
      return;
    }
    deadline_ += period_;
    const auto now = Clock::now();
    if (now > deadline_) {
      // Late: push the schedule back instead of bursting to catch up.
      session_->note_overrun();
      deadline_ = now;
    }
    schedule();
  }

  void finish() {
    send(session_->end_message());
    release();
    close();
  }

  void release() {
    if (holds_slot_) {
      holds_slot_ = false;
      shared_->active.fetch_sub(1);
    }
  }

  void send(std::string text) {
    queue_.push_back(std::move(text));
    if (queue_.size() == 1) write_next();
  }

  void write_next() {
    ws_.text(true);
    ws_.async_write(net::buffer(queue_.front()),
                    beast::bind_front_handler(&PlayConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) {
      queue_.clear();
      return;
    }
    queue_.pop_front();
    if (!queue_.empty()) {
      write_next();
    } else if (closing_) {
      do_close();
    }
  }

  void close() {
    closing_ = true;
    timer_.cancel();
    if (queue_.empty()) do_close();
  }

  void do_close() {
    if (close_sent_) return;
    close_sent_ = true;
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {});
  }

  websocket::stream<beast::tcp_stream> ws_;
  net::steady_timer timer_;
  std::shared_ptr<Shared> shared_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::unique_ptr<Session> session_;
  Clock::duration period_{};
  Clock::time_point deadline_{};
  bool holds_slot_ = false;
  bool closing_ = false;
  bool close_sent_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, std::shared_ptr<Shared> shared)
      : stream_(std::move(socket)), shared_(std::move(shared)) {}

  void start() {
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

 private:
  void on_read(beast::error_code ec, std::size_t) {
    if (ec) return;
    if (websocket::is_upgrade(req_)) {
      stream_.expires_never();
      std::make_shared<PlayConnection>(stream_.release_socket(), shared_)->start(std::move(req_));
      return;
    }
    respond();
  }

  void respond() {
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(false);
    res->set(http::field::server, "movingout-play");
    if (req_.method() != http::verb::get) {
      res->result(http::status::method_not_allowed);
    } else if (!load(std::string(req_.target()), *res)) {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  bool load(std::string target, http::response<http::string_body>& res) {
    if (const auto q = target.find('?'); q != std::string::npos) target.resize(q);
    if (target.empty() || target == "/") target = "/index.html";
    if (target.find("..") != std::string::npos) return false;
    const auto& dir = shared_->options.static_dir;
    if (dir.empty()) {
      if (target != "/index.html") return false;
      res.set(http::field::content_type, "text/html");
      res.body() = builtin_client_page();
      return true;
    }
    const std::filesystem::path file = dir / target.substr(1);
    std::ifstream in(file, std::ios::binary);
    if (!in) return false;
    std::ostringstream ss;
    ss << in.rdbuf();
    res.set(http::field::content_type, mime_type(file));
    res.body() = ss.str();
    return true;
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  std::shared_ptr<Shared> shared_;
};

}  // namespace

struct Server::Impl {
  std::shared_ptr<Shared> shared = std::make_shared<Shared>();
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpConnection>(std::move(socket), shared)->start();
      accept();
    });
  }
};

Server::Server(ServerOptions options) : impl_(std::make_unique<Impl>()) {
  if (options.max_sessions < 1) throw Error(ErrorKind::kUsage, "max-sessions must be at least 1");
  if (options.tick_ms < 1) throw Error(ErrorKind::kUsage, "tick period must be at least 1 ms");
  if (options.threads < 1) options.threads = 1;
  impl_->shared->options = std::move(options);
  const auto& o = impl_->shared->options;
  beast::error_code ec;
  const tcp::endpoint ep{net::ip::make_address(o.address, ec), o.port};
  if (ec) throw Error(ErrorKind::kUsage, "bad address '" + o.address + "'");
  impl_->acceptor.open(ep.protocol(), ec);
  if (!ec) impl_->acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) impl_->acceptor.bind(ep, ec);
  if (!ec) impl_->acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw Error(ErrorKind::kIO, "cannot listen on " + o.address + ":" + std::to_string(o.port) + ": " + ec.message());
  impl_->accept();
}

Server::~Server() { stop(); }

std::uint16_t Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  const int extra = impl_->shared->options.threads - 1;
  std::vector<std::thread> pool;
  for (int i = 0; i < extra; ++i) pool.emplace_back([this] { impl_->ioc.run(); });
  impl_->ioc.run();
  for (auto& t : pool) t.join();
}

void Server::stop() { impl_->ioc.stop(); }

int Server::active_sessions() const { return impl_->shared->active.load(); }

}  // namespace movingout::play
