#pragma once

#include <csignal>
#include <cstring>
#include <memory>
#include <string>
#include <string_view>

#include <netdb.h>
#include <sys/socket.h>
#include <sys/un.h>
#include <sys/wait.h>
#include <unistd.h>

#include "streamatt/error.hpp"
#include "streamatt/model.hpp"
#include "streamatt/wire.hpp"

namespace streamatt {

namespace detail {

inline void ignore_sigpipe() {
  static const bool once = [] {
    std::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

// Child process speaking the protocol on its stdin/stdout.
class SubprocessStream final : public wire::FdStream {
 public:
  SubprocessStream(int read_fd, int write_fd, pid_t pid) : FdStream(read_fd, write_fd), pid_(pid) {}
  ~SubprocessStream() override {
    close_write();  // lets the child see EOF and exit
    close_fds();
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }

 private:
  pid_t pid_;
};

inline std::unique_ptr<wire::ByteStream> spawn_command(const std::string& command) {
  int to_child[2], from_child[2];
  if (::pipe(to_child) != 0) throw TransportError("pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError("pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw TransportError("fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  return std::make_unique<SubprocessStream>(from_child[0], to_child[1], pid);
}

inline std::unique_ptr<wire::ByteStream> connect_unix(const std::string& path) {
  const int fd = ::socket(AF_UNIX, SOCK_STREAM, 0);
  if (fd < 0) throw TransportError("socket failed");
  sockaddr_un addr{};
  addr.sun_family = AF_UNIX;
  if (path.size() >= sizeof(addr.sun_path)) {
    ::close(fd);
    throw TransportError("unix socket path too long");
  }
  std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
  if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd);
    throw TransportError("cannot connect to " + path + ": " + err);
  }
  return std::make_unique<wire::FdStream>(fd, fd);
}

inline std::unique_ptr<wire::ByteStream> connect_tcp(const std::string& hostport) {
  const auto colon = hostport.rfind(':');
  if (colon == std::string::npos) throw InputError("tcp endpoint must be host:port");
  const std::string host = hostport.substr(0, colon), port = hostport.substr(colon + 1);
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr)
    throw TransportError("cannot resolve " + hostport);
  int fd = -1;
  for (addrinfo* p = res; p != nullptr; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot connect to " + hostport);
  return std::make_unique<wire::FdStream>(fd, fd);
}

}  // namespace detail

// Opens a protocol stream. Endpoints: "unix:<path>", "tcp:<host>:<port>",
// "exec:<shell command>" (the command speaks the protocol on stdio).
inline std::unique_ptr<wire::ByteStream> connect_endpoint(std::string_view endpoint) {
  detail::ignore_sigpipe();
  const auto colon = endpoint.find(':');
  if (colon == std::string_view::npos) throw InputError("endpoint needs a scheme: " + std::string(endpoint));
  const std::string scheme(endpoint.substr(0, colon));
  const std::string rest(endpoint.substr(colon + 1));
  if (scheme == "unix") return detail::connect_unix(rest);
  if (scheme == "tcp") return detail::connect_tcp(rest);
  if (scheme == "exec") return detail::spawn_command(rest);
  throw InputError("unknown endpoint scheme '" + scheme + "'");
}

// Model backed by an external process over the decode wire protocol. The
// backend is stateless: every request carries the whole window and prefix.
class BridgeModel final : public Model {
 public:
  explicit BridgeModel(std::unique_ptr<wire::ByteStream> stream) : stream_(std::move(stream)) { detail::ignore_sigpipe(); }
  explicit BridgeModel(std::string_view endpoint) : stream_(connect_endpoint(endpoint)) {}

  DecodeResult decode(const DecodeRequest& req) override {
    check_decode_request(req);
    wire::send_message(*stream_, wire::encode_request(req));
    std::string payload;
    if (!wire::recv_payload(*stream_, payload)) throw TransportError("backend closed the connection");
    return wire::decode_response(wire::parse_payload(payload), req);
  }

 private:
  std::unique_ptr<wire::ByteStream> stream_;
};

}  // namespace streamatt
