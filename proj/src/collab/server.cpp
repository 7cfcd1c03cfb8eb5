#include "drivelab/collab/server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <deque>
#include <system_error>
#include <iostream>
#include <thread>

#include "drivelab/collab/http_api.hpp"

namespace drivelab {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

namespace {

class SyncConnection : public std::enable_shared_from_this<SyncConnection> {
 public:
  SyncConnection(tcp::socket socket, std::shared_ptr<HostedSession> session)
      : ws_(std::move(socket)), session_(std::move(session)) {}

  ~SyncConnection() {
    if (subscription_) session_->leave(subscription_);
  }

  void accept(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.text(true);
    ws_.async_accept(req, beast::bind_front_handler(&SyncConnection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    read();
  }

  void read() {
    ws_.async_read(buffer_, beast::bind_front_handler(&SyncConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      if (subscription_) session_->leave(subscription_);
      subscription_ = 0;
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    handle(text);
    read();
  }

  void send_error(const std::string& reason, const std::string& rejected_kind) {
    SyncMessage m;
    m.kind = SyncKind::error;
    m.origin = kServerOrigin;
    m.payload = {{"reason", reason}, {"rejected_kind", rejected_kind}, {"to", analyst_}};
    enqueue(encode_sync_message(m));
  }

  void handle(const std::string& text) {
    SyncMessage m;
    try {
      m = parse_sync_message(std::string_view(text));
    } catch (const std::exception& e) {
      send_error(e.what(), "");
      return;
    }
    if (m.kind == SyncKind::hello) {
      if (subscription_) return send_error("already joined", "hello");
      const std::string token = m.payload.is_object() && m.payload.contains("token") && m.payload["token"].is_string()
                                    ? m.payload["token"].get<std::string>()
                                    : "";
      if (token != session_->token()) return send_error("invalid session token", "hello");
      if (m.origin.empty() || m.origin == kServerOrigin) return send_error("invalid origin", "hello");
      analyst_ = m.origin;
      // Broadcasts are posted to this strand in seq order under the session
      // lock; the snapshot is queued before any of them can run.
      std::weak_ptr<SyncConnection> weak = shared_from_this();
      auto executor = ws_.get_executor();
      auto sub = session_->join(analyst_, [weak, executor](const std::string& frame) {
        net::post(executor, [weak, frame] {
          if (auto self = weak.lock()) self->enqueue(frame);
        });
      });
      subscription_ = sub.id;
      enqueue(encode_sync_message(sub.snapshot));
      return;
    }
    if (!subscription_) return send_error("send hello first", to_string(m.kind));
    if (m.origin != analyst_) return send_error("origin does not match the joined analyst", to_string(m.kind));
    ApplyResult r;
    try {
      r = session_->propose(m);
    } catch (const std::exception& e) {
      return send_error(e.what(), to_string(m.kind));
    }
    if (!r.accepted) enqueue(encode_sync_message(r.message));
  }

  void enqueue(std::string frame) {
    queue_.push_back(std::move(frame));
    if (queue_.size() == 1) write();
  }

  void write() {
    ws_.async_write(net::buffer(queue_.front()), beast::bind_front_handler(&SyncConnection::on_write, shared_from_this()));
  }

  void on_write(beast::error_code ec, std::size_t) {
    if (ec) return;
    queue_.pop_front();
    if (!queue_.empty()) write();
  }

  websocket::stream<beast::tcp_stream> ws_;
  std::shared_ptr<HostedSession> session_;
  beast::flat_buffer buffer_;
  std::deque<std::string> queue_;
  std::string analyst_;
  std::uint64_t subscription_ = 0;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket socket, SessionStore& store, const ServerOptions& options)
      : stream_(std::move(socket)), store_(store), options_(options) {}

  void start() { read(); }

 private:
  void read() {
    parser_.emplace();
    parser_->body_limit(options_.max_body_bytes);
    stream_.expires_after(std::chrono::seconds(120));
    http::async_read(stream_, buffer_, *parser_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      beast::error_code ignored;
      stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
      return;
    }
    if (ec) return;
    auto req = parser_->release();

    if (websocket::is_upgrade(req)) {
      const std::string id = sync_target_session(std::string(req.target()));
      auto session = id.empty() ? nullptr : store_.get(id);
      if (session) {
        stream_.expires_never();
        std::make_shared<SyncConnection>(stream_.release_socket(), std::move(session))->accept(std::move(req));
        return;
      }
      HttpResponse nf{404, "application/json", R"({"error":"unknown sync target"})"};
      return respond(req, std::move(nf));
    }

    HttpRequest r;
    r.method = std::string(req.method_string());
    r.target = std::string(req.target());
    r.content_type = std::string(req[http::field::content_type]);
    r.body = std::move(req.body());
    respond(req, handle_http(store_, r, options_.static_dir));
  }

  void respond(const http::request<http::string_body>& req, HttpResponse out) {
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(out.status), req.version());
    res->set(http::field::server, "drivelab");
    res->set(http::field::content_type, out.content_type);
    res->set(http::field::access_control_allow_origin, "*");
    res->keep_alive(req.keep_alive());
    res->body() = std::move(out.body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        beast::error_code ignored;
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  SessionStore& store_;
  const ServerOptions& options_;
};

}  // namespace

struct Server::Impl {
  Impl(SessionStore& s, ServerOptions o)
      : store(s), options(std::move(o)), ioc(std::max(1, options.threads)), acceptor(net::make_strand(ioc)),
        signals(ioc) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (ec == net::error::operation_aborted || !acceptor.is_open()) return;
      } else {
        std::make_shared<HttpConnection>(std::move(socket), store, options)->start();
      }
      accept();
    });
  }

  SessionStore& store;
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor;
  net::signal_set signals;
};

Server::Server(SessionStore& store, ServerOptions options) : impl_(std::make_unique<Impl>(store, std::move(options))) {}

Server::~Server() { stop(); }

void Server::start() {
  const auto address = net::ip::make_address(impl_->options.address);
  const tcp::endpoint endpoint(address, impl_->options.port);
  auto& acc = impl_->acceptor;
  try {
    acc.open(endpoint.protocol());
    acc.set_option(net::socket_base::reuse_address(true));
    acc.bind(endpoint);
    acc.listen(net::socket_base::max_listen_connections);
  } catch (const boost::system::system_error& e) {
    beast::error_code ignored;
    acc.close(ignored);
    throw std::system_error(static_cast<std::error_code>(e.code()),
                            "cannot listen on " + impl_->options.address + ":" + std::to_string(impl_->options.port));
  }
  impl_->accept();
  if (impl_->options.handle_signals) {
    impl_->signals.add(SIGINT);
    impl_->signals.add(SIGTERM);
    impl_->signals.async_wait([this](beast::error_code ec, int) {
      if (!ec) stop();
    });
  }
}

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  std::vector<std::thread> workers;
  for (int i = 1; i < impl_->options.threads; ++i) workers.emplace_back([this] { impl_->ioc.run(); });
  impl_->ioc.run();
  for (auto& w : workers) w.join();
  impl_->store.flush_all();
}

void Server::stop() {
  net::post(impl_->ioc, [this] {
    beast::error_code ignored;
    impl_->acceptor.close(ignored);
    impl_->signals.cancel(ignored);
  });
  impl_->store.flush_all();
  impl_->ioc.stop();
}

}  // namespace drivelab
