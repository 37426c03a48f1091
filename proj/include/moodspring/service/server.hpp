#pragma once

#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include "moodspring/service/session.hpp"

namespace moodspring::service {

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
};

using SessionFactory = std::function<std::unique_ptr<Session>()>;

// WebSocket endpoint at /session. Each connection is one Session served by its
// own thread, so frames of a connection are handled strictly in order.
class Server {
 public:
  Server(SessionFactory factory, ServerOptions opts);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  unsigned short port() const { return port_; }

  /// Accepts connections until stop().
  void run();
  /// run() on a background thread.
  void start();
  /// Stops accepting, closes live connections and waits for their threads.
  void stop();

 private:
  struct Impl;
  void serve_connection(int fd_hint, void* socket);

  std::unique_ptr<Impl> impl_;
  SessionFactory factory_;
  unsigned short port_ = 0;
  std::thread runner_;

  std::mutex mu_;
  std::condition_variable idle_;
  std::set<int> live_;
  bool stopping_ = false;
};

}  // namespace moodspring::service
