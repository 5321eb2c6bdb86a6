#include "sparsevo/wire.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <bit>
#include <cerrno>
#include <cstring>

#include <json.hpp>

#include "sparsevo/errors.hpp"

namespace sparsevo::wire {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr std::string_view kAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

std::string errno_message(const char* what) { return std::string(what) + ": " + std::strerror(errno); }

void ignore_sigpipe() {
  static const bool once = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)once;
}

std::string error_frame(std::uint64_t id, const std::string& message) {
  ordered_json j;
  j["type"] = "error";
  j["id"] = id;
  j["message"] = message;
  return j.dump();
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const std::uint32_t v = bytes[i] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.size() % 4 != 0) throw TransportError("base64: length not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    const bool last = i + 4 == text.size();
    std::array<int, 4> q{};
    int pad = 0;
    for (int k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && last && k >= 2) {
        q[k] = 0;
        ++pad;
        continue;
      }
      if (pad > 0) throw TransportError("base64: data after padding");
      q[k] = decode_char(c);
      if (q[k] < 0) throw TransportError("base64: invalid character");
    }
    const std::uint32_t v = (q[0] << 18) | (q[1] << 12) | (q[2] << 6) | q[3];
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

std::string encode_pixels(std::span<const float> values) {
  std::vector<std::uint8_t> bytes(values.size() * 4);
  for (std::size_t i = 0; i < values.size(); ++i) {
    const auto u = std::bit_cast<std::uint32_t>(values[i]);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<std::uint8_t>(u >> (8 * b));
  }
  return base64_encode(bytes);
}

std::vector<float> decode_pixels(std::string_view text) {
  const auto bytes = base64_decode(text);
  if (bytes.size() % 4 != 0) throw TransportError("pixels: byte length not a multiple of 4");
  std::vector<float> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    out[i] = std::bit_cast<float>(u);
  }
  return out;
}

FdChannel::FdChannel(int read_fd, int write_fd, bool owns)
    : read_fd_(read_fd), write_fd_(write_fd), owns_(owns) {
  ignore_sigpipe();
}

FdChannel::~FdChannel() {
  if (!owns_) return;
  if (write_fd_ >= 0 && write_fd_ != read_fd_) ::close(write_fd_);
  if (read_fd_ >= 0) ::close(read_fd_);
}

void FdChannel::close_write() {
  if (write_fd_ < 0) return;
  if (write_fd_ == read_fd_) {
    ::shutdown(write_fd_, SHUT_WR);
  } else if (owns_) {
    ::close(write_fd_);
  }
  write_fd_ = -1;
}

void FdChannel::write_line(std::string_view line) {
  if (write_fd_ < 0) throw TransportError("write on closed channel");
  std::string data(line);
  data += '\n';
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(write_fd_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_message("write"));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::optional<std::string> FdChannel::read_line() {
  for (;;) {
    const auto pos = buffer_.find('\n');
    if (pos != std::string::npos) {
      std::string line = buffer_.substr(0, pos);
      buffer_.erase(0, pos + 1);
      return line;
    }
    std::array<char, 65536> chunk{};
    const ssize_t n = ::read(read_fd_, chunk.data(), chunk.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportError(errno_message("read"));
    }
    if (n == 0) {
      if (buffer_.empty()) return std::nullopt;
      std::string line = std::move(buffer_);
      buffer_.clear();
      return line;
    }
    buffer_.append(chunk.data(), static_cast<std::size_t>(n));
  }
}

ProcessChannel::ProcessChannel(const std::string& command) {
  ignore_sigpipe();
  int to_child[2];
  int from_child[2];
  if (::pipe2(to_child, O_CLOEXEC) != 0) throw TransportError(errno_message("pipe"));
  if (::pipe2(from_child, O_CLOEXEC) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw TransportError(errno_message("pipe"));
  }
  pid_ = ::fork();
  if (pid_ < 0) throw TransportError(errno_message("fork"));
  if (pid_ == 0) {
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
  fds_ = std::make_unique<FdChannel>(from_child[0], to_child[1], true);
}

ProcessChannel::~ProcessChannel() {
  if (fds_) fds_->close_write();
  fds_.reset();
  if (pid_ > 0) {
    int status = 0;
    ::waitpid(pid_, &status, 0);
  }
}

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (const int rc = ::getaddrinfo(host.c_str(), service.c_str(), &hints, &res); rc != 0) {
    throw TransportError(std::string("getaddrinfo: ") + ::gai_strerror(rc));
  }
  int fd = -1;
  for (addrinfo* p = res; p != nullptr; p = p->ai_next) {
    fd = ::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw TransportError("cannot connect to " + host + ":" + service);
  return std::make_unique<FdChannel>(fd, fd, true);
}

int listen_tcp(std::uint16_t port, std::uint16_t* bound_port) {
  const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) throw TransportError(errno_message("socket"));
  const int yes = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(fd, 8) != 0) {
    ::close(fd);
    throw TransportError(errno_message("bind/listen"));
  }
  if (bound_port) {
    socklen_t len = sizeof(addr);
    ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
    *bound_port = ntohs(addr.sin_port);
  }
  return fd;
}

RemoteOracle::RemoteOracle(std::unique_ptr<LineChannel> channel) : channel_(std::move(channel)) {
  ordered_json hello;
  hello["type"] = "hello";
  hello["version"] = kProtocolVersion;
  channel_->write_line(hello.dump());
  const auto line = channel_->read_line();
  if (!line) throw TransportError("handshake: connection closed");
  try {
    const auto j = nlohmann::json::parse(*line);
    if (j.at("type").get<std::string>() != "meta") throw TransportError("handshake: expected meta frame");
    meta_.num_classes = j.at("num_classes").get<int>();
    meta_.shape = Shape{j.at("channels").get<std::size_t>(), j.at("width").get<std::size_t>(),
                        j.at("height").get<std::size_t>()};
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("handshake: malformed meta frame: ") + e.what());
  }
  if (meta_.num_classes < 1 || meta_.shape.size() == 0) throw TransportError("handshake: invalid meta");
}

Label RemoteOracle::classify(const ImageTensor& image) {
  if (image.shape() != meta_.shape) throw ContractError("remote oracle: image shape differs from server meta");
  const std::uint64_t id = next_id_++;
  ordered_json request;
  request["type"] = "predict";
  request["id"] = id;
  request["pixels"] = encode_pixels(image.data());
  channel_->write_line(request.dump());

  const auto line = channel_->read_line();
  if (!line) throw TransportError("connection closed while waiting for a label");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(*line);
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed response: ") + e.what());
  }
  try {
    const auto type = j.at("type").get<std::string>();
    const auto got = j.at("id").get<std::uint64_t>();
    if (got != id) {
      throw TransportError("response id " + std::to_string(got) + " != request id " + std::to_string(id));
    }
    if (type == "error") throw TransportError("server error: " + j.value("message", std::string{}));
    if (type != "label") throw TransportError("unexpected frame type " + type);
    const int label = j.at("label").get<int>();
    if (label < 0 || label >= meta_.num_classes) throw TransportError("label out of range");
    return Label{label};
  } catch (const nlohmann::json::exception& e) {
    throw TransportError(std::string("malformed response: ") + e.what());
  }
}

std::string handle_frame(std::string_view line, const Meta& meta,
                         const std::function<Label(const ImageTensor&)>& classify) {
  std::uint64_t id = 0;
  try {
    const auto j = nlohmann::json::parse(line);
    if (!j.is_object()) return error_frame(0, "frame is not a JSON object");
    if (j.contains("id") && j["id"].is_number_unsigned()) id = j["id"].get<std::uint64_t>();
    const auto type = j.at("type").get<std::string>();
    if (type == "hello") {
      ordered_json out;
      out["type"] = "meta";
      out["num_classes"] = meta.num_classes;
      out["channels"] = meta.shape.channels;
      out["width"] = meta.shape.width;
      out["height"] = meta.shape.height;
      return out.dump();
    }
    if (type != "predict") return error_frame(id, "unknown frame type " + type);
    if (!j.contains("id") || !j["id"].is_number_unsigned()) return error_frame(0, "missing id");
    auto pixels = decode_pixels(j.at("pixels").get<std::string>());
    if (pixels.size() != meta.shape.size()) return error_frame(id, "pixel count does not match meta");
    const Label label = classify(ImageTensor(meta.shape, std::move(pixels)));
    ordered_json out;
    out["type"] = "label";
    out["id"] = id;
    out["label"] = label.index;
    return out.dump();
  } catch (const std::exception& e) {
    return error_frame(id, e.what());
  }
}

void serve(LineChannel& channel, const Meta& meta,
           const std::function<Label(const ImageTensor&)>& classify) {
  while (auto line = channel.read_line()) {
    if (line->empty()) continue;
    channel.write_line(handle_frame(*line, meta, classify));
  }
}

}  // namespace sparsevo::wire
