#include "moodspring/service/server.hpp"

#include <iostream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <sys/socket.h>

namespace moodspring::service {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

struct Server::Impl {
  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
};

Server::Server(SessionFactory factory, ServerOptions opts) : impl_(std::make_unique<Impl>()), factory_(std::move(factory)) {
  const tcp::endpoint endpoint(net::ip::make_address(opts.address), opts.port);
  impl_->acceptor.open(endpoint.protocol());
  impl_->acceptor.set_option(net::socket_base::reuse_address(true));
  impl_->acceptor.bind(endpoint);
  impl_->acceptor.listen();
  port_ = impl_->acceptor.local_endpoint().port();
}

Server::~Server() { stop(); }

void Server::run() {
  std::function<void()> accept_next = [&] {
    impl_->acceptor.async_accept([&](beast::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      const int fd = socket.native_handle();
      {
        std::lock_guard lock(mu_);
        if (stopping_) return;
        live_.insert(fd);
      }
      auto owned = std::make_shared<tcp::socket>(std::move(socket));
      std::thread([this, fd, owned] { serve_connection(fd, owned.get()); }).detach();
      accept_next();
    });
  };
  accept_next();
  impl_->ioc.run();
}

void Server::start() {
  runner_ = std::thread([this] { run(); });
}

void Server::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
    // shutdown() is safe from any thread and unblocks pending reads
    for (int fd : live_) ::shutdown(fd, SHUT_RDWR);
  }
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  impl_->ioc.stop();
  if (runner_.joinable()) runner_.join();
  std::unique_lock lock(mu_);
  idle_.wait(lock, [&] { return live_.empty(); });
}

void Server::serve_connection(int fd, void* raw_socket) {
  auto& socket = *static_cast<tcp::socket*>(raw_socket);
  try {
    beast::flat_buffer buffer;
    http::request<http::string_body> req;
    http::read(socket, buffer, req);
    if (!websocket::is_upgrade(req) || req.target() != "/session") {
      http::response<http::string_body> res{http::status::not_found, req.version()};
      res.set(http::field::content_type, "text/plain");
      res.body() = "WebSocket endpoint is /session\n";
      res.prepare_payload();
      http::write(socket, res);
    } else {
      websocket::stream<tcp::socket&> ws(socket);
      ws.accept(req);
      ws.text(true);
      const auto session = factory_();
      for (;;) {
        beast::flat_buffer in;
        ws.read(in);
        for (const auto& frame : session->handle_frame(beast::buffers_to_string(in.data()))) {
          ws.write(net::buffer(frame.dump()));
        }
      }
    }
  } catch (const beast::system_error& e) {
    if (e.code() != websocket::error::closed && e.code() != net::error::eof &&
        e.code() != net::error::connection_reset && e.code() != net::error::not_connected &&
        e.code() != net::error::broken_pipe) {
      std::cerr << "moodspring: connection ended: " << e.code().message() << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "moodspring: connection failed: " << e.what() << "\n";
  }
  beast::error_code ignored;
  socket.shutdown(tcp::socket::shutdown_both, ignored);
  std::lock_guard lock(mu_);
  live_.erase(fd);
  idle_.notify_all();
}

}  // namespace moodspring::service
