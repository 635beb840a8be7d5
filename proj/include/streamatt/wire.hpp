#pragma once

#include <cerrno>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include <unistd.h>

#include "streamatt/error.hpp"
#include "streamatt/io.hpp"
#include "streamatt/model.hpp"

// Decode wire protocol: every message is a 4-byte big-endian payload length
// followed by a UTF-8 JSON object.
//
//   request  {"features": [[f32...]...], "frame_ms": n, "prefix_ids": [int...], "max_new": int}
//   response {"token_ids": [...], "surfaces": [...], "begins_word": [...],
//             "attention": [[f32...]...], "compute_ms": n}
//            optional "is_eos": [bool...]; an {"error": "..."} object reports failure.

namespace streamatt::wire {

inline constexpr std::uint32_t kMaxMessageBytes = 256u << 20;

// Blocking byte stream. read_exact returns false on clean EOF before any byte.
class ByteStream {
 public:
  virtual ~ByteStream() = default;
  virtual void write_all(std::span<const char> bytes) = 0;
  virtual bool read_exact(std::span<char> bytes) = 0;
};

// Stream over a pair of POSIX descriptors (the same one for sockets).
class FdStream : public ByteStream {
 public:
  FdStream(int read_fd, int write_fd, bool owns = true)
      : read_fd_(read_fd), write_fd_(write_fd), owns_(owns) {}
  FdStream(const FdStream&) = delete;
  FdStream& operator=(const FdStream&) = delete;
  ~FdStream() override { close_fds(); }

  void write_all(std::span<const char> bytes) override {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = ::write(write_fd_, bytes.data() + done, bytes.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("write failed: ") + std::strerror(errno));
      }
      done += static_cast<std::size_t>(n);
    }
  }

  bool read_exact(std::span<char> bytes) override {
    std::size_t done = 0;
    while (done < bytes.size()) {
      const ssize_t n = ::read(read_fd_, bytes.data() + done, bytes.size() - done);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        if (done == 0) return false;
        throw TransportError("connection closed mid-message");
      }
      done += static_cast<std::size_t>(n);
    }
    return true;
  }

  void close_write() {
    if (owns_ && write_fd_ >= 0 && write_fd_ != read_fd_) {
      ::close(write_fd_);
      write_fd_ = -1;
    }
  }

 protected:
  void close_fds() {
    if (!owns_) return;
    if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    read_fd_ = write_fd_ = -1;
  }

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
};

inline std::string frame_payload(const std::string& payload) {
  if (payload.size() > kMaxMessageBytes) throw TransportError("message too large");
  const auto n = static_cast<std::uint32_t>(payload.size());
  std::string out;
  out.reserve(payload.size() + 4);
  out.push_back(static_cast<char>((n >> 24) & 0xff));
  out.push_back(static_cast<char>((n >> 16) & 0xff));
  out.push_back(static_cast<char>((n >> 8) & 0xff));
  out.push_back(static_cast<char>(n & 0xff));
  out += payload;
  return out;
}

inline void send_message(ByteStream& stream, const json& message) {
  const std::string framed = frame_payload(message.dump(-1, ' ', false, json::error_handler_t::replace));
  stream.write_all(framed);
}

// Raw payload of the next message; false on clean EOF.
inline bool recv_payload(ByteStream& stream, std::string& payload) {
  char hdr[4];
  if (!stream.read_exact(hdr)) return false;
  const std::uint32_t n = (std::uint32_t(std::uint8_t(hdr[0])) << 24) |
                          (std::uint32_t(std::uint8_t(hdr[1])) << 16) |
                          (std::uint32_t(std::uint8_t(hdr[2])) << 8) | std::uint32_t(std::uint8_t(hdr[3]));
  if (n > kMaxMessageBytes) throw TransportError("declared message length exceeds limit");
  payload.assign(n, '\0');
  if (n > 0 && !stream.read_exact(payload)) throw TransportError("connection closed mid-message");
  return true;
}

inline json parse_payload(const std::string& payload) {
  try {
    return json::parse(payload);
  } catch (const json::exception& e) {
    throw TransportError(std::string("malformed JSON message: ") + e.what());
  }
}

inline json encode_request(const DecodeRequest& req) {
  json feats = json::array();
  for (std::size_t i = 0; i < req.features.size(); ++i) {
    const auto f = req.features.frame(i);
    feats.push_back(std::vector<float>(f.begin(), f.end()));
  }
  std::vector<std::int64_t> ids;
  for (const auto& t : req.forced_prefix) ids.push_back(t.token_id);
  return {{"features", std::move(feats)},
          {"frame_ms", req.features.frame_ms()},
          {"prefix_ids", ids},
          {"max_new", req.max_new_tokens}};
}

namespace detail {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw TransportError(std::string("protocol: missing '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw TransportError(std::string("protocol: bad '") + key + "': " + e.what());
  }
}

}  // namespace detail

// Server-side view of a request. Surfaces of prefix tokens are not carried on
// the wire, so the returned prefix holds ids only.
inline DecodeRequest decode_request(const json& j) {
  DecodeRequest req;
  const auto frame_ms = detail::field<double>(j, "frame_ms");
  if (!(frame_ms > 0.0)) throw TransportError("protocol: frame_ms must be positive");
  const auto rows = detail::field<std::vector<std::vector<float>>>(j, "features");
  req.features = FeatureSequence(rows.empty() ? 0 : rows.front().size(), frame_ms);
  try {
    for (const auto& r : rows) req.features.push_back(r);
  } catch (const InputError& e) {
    throw TransportError(std::string("protocol: ") + e.what());
  }
  for (auto id : detail::field<std::vector<std::int64_t>>(j, "prefix_ids"))
    req.forced_prefix.push_back({id, "", false, false});
  req.max_new_tokens = detail::field<int>(j, "max_new");
  if (req.max_new_tokens <= 0) throw TransportError("protocol: max_new must be positive");
  return req;
}

inline json encode_response(const DecodeResult& res) {
  json j;
  std::vector<std::int64_t> ids;
  std::vector<std::string> surfaces;
  std::vector<bool> begins, eos;
  bool any_eos = false;
  for (const auto& t : res.tokens) {
    ids.push_back(t.token_id);
    surfaces.push_back(t.surface);
    begins.push_back(t.begins_word);
    eos.push_back(t.is_eos);
    any_eos = any_eos || t.is_eos;
  }
  json att = json::array();
  for (std::size_t r = 0; r < res.attention.rows(); ++r) {
    const auto row = res.attention.row(r);
    att.push_back(std::vector<float>(row.begin(), row.end()));
  }
  j["token_ids"] = ids;
  j["surfaces"] = surfaces;
  j["begins_word"] = begins;
  j["attention"] = std::move(att);
  j["compute_ms"] = res.compute_cost_ms;
  if (any_eos) j["is_eos"] = eos;
  return j;
}

inline json encode_error(const std::string& message) { return {{"error", message}}; }

// Client-side decoding; validates the response against the request.
inline DecodeResult decode_response(const json& j, const DecodeRequest& req) {
  if (j.is_object() && j.contains("error"))
    throw TransportError("backend error: " + j.at("error").dump(-1, ' ', false, json::error_handler_t::replace));
  DecodeResult res;
  const auto ids = detail::field<std::vector<std::int64_t>>(j, "token_ids");
  const auto surfaces = detail::field<std::vector<std::string>>(j, "surfaces");
  const auto begins = detail::field<std::vector<bool>>(j, "begins_word");
  const auto att = detail::field<std::vector<std::vector<float>>>(j, "attention");
  std::vector<bool> eos(ids.size(), false);
  if (j.contains("is_eos")) eos = detail::field<std::vector<bool>>(j, "is_eos");
  if (surfaces.size() != ids.size() || begins.size() != ids.size() || eos.size() != ids.size())
    throw TransportError("protocol: token field lengths differ");
  for (std::size_t i = 0; i < ids.size(); ++i) res.tokens.push_back({ids[i], surfaces[i], begins[i], eos[i]});
  res.attention = AttentionMatrix(0, 0);
  try {
    for (const auto& row : att) res.attention.append_row(row);
  } catch (const InputError& e) {
    throw TransportError(std::string("protocol: ") + e.what());
  }
  res.compute_cost_ms = detail::field<double>(j, "compute_ms");
  res.prefix_size = req.forced_prefix.size();
  check_decode_result<TransportError>(req, res);
  return res;
}

// Answers requests on `stream` with `model` until EOF. Malformed or failing
// requests get an error response; the loop keeps going.
template <typename RequestAdapter>
void serve(ByteStream& stream, Model& model, RequestAdapter&& adapt) {
  std::string payload;
  for (;;) {
    bool got = false;
    try {
      got = recv_payload(stream, payload);
    } catch (const TransportError& e) {
      // Oversize or truncated frame; the stream cannot be resynchronized.
      try {
        send_message(stream, encode_error(e.what()));
      } catch (const TransportError&) {
      }
      return;
    }
    if (!got) return;
    json reply;
    try {
      DecodeRequest req = decode_request(parse_payload(payload));
      adapt(req);
      reply = encode_response(model.decode(req));
    } catch (const std::exception& e) {
      reply = encode_error(e.what());
    }
    send_message(stream, reply);
  }
}

inline void serve(ByteStream& stream, Model& model) {
  serve(stream, model, [](DecodeRequest&) {});
}

}  // namespace streamatt::wire
