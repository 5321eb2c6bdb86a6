#pragma once

// Line-delimited JSON oracle protocol, one object per line:
//   -> {"type":"hello","version":1}
//   <- {"type":"meta","num_classes":K,"channels":C,"width":W,"height":H}
//   -> {"type":"predict","id":N,"pixels":"<base64 little-endian f32, channel-major>"}
//   <- {"type":"label","id":N,"label":L} | {"type":"error","id":N,"message":"..."}
// Requests are strictly sequential with ids 1, 2, 3, ...

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sparsevo/image.hpp"
#include "sparsevo/oracle.hpp"

namespace sparsevo::wire {

inline constexpr int kProtocolVersion = 1;

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws TransportError on characters outside the alphabet or bad padding.
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string encode_pixels(std::span<const float> values);
std::vector<float> decode_pixels(std::string_view text);

struct Meta {
  int num_classes = 0;
  Shape shape;
};

/// A bidirectional stream of text lines.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  /// Appends '\n'. Throws TransportError on failure.
  virtual void write_line(std::string_view line) = 0;
  /// Returns nullopt at end of stream. Throws TransportError on failure.
  virtual std::optional<std::string> read_line() = 0;
};

/// Channel over a pair of file descriptors (the same fd for sockets).
class FdChannel : public LineChannel {
 public:
  FdChannel(int read_fd, int write_fd, bool owns);
  ~FdChannel() override;
  FdChannel(const FdChannel&) = delete;
  FdChannel& operator=(const FdChannel&) = delete;

  void write_line(std::string_view line) override;
  std::optional<std::string> read_line() override;
  void close_write();

 private:
  int read_fd_;
  int write_fd_;
  bool owns_;
  std::string buffer_;
};

/// Runs `/bin/sh -c command` with its stdin/stdout connected to the channel.
class ProcessChannel final : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command);
  ~ProcessChannel() override;

  void write_line(std::string_view line) override { fds_->write_line(line); }
  std::optional<std::string> read_line() override { return fds_->read_line(); }

 private:
  std::unique_ptr<FdChannel> fds_;
  int pid_ = -1;
};

std::unique_ptr<LineChannel> connect_tcp(const std::string& host, std::uint16_t port);

/// Client side: handshakes in the constructor, then one frame per predict().
class RemoteOracle final : public DecisionOracle {
 public:
  explicit RemoteOracle(std::unique_ptr<LineChannel> channel);

  int num_classes() const override { return meta_.num_classes; }
  const Meta& meta() const { return meta_; }

 protected:
  Label classify(const ImageTensor& image) override;

 private:
  std::unique_ptr<LineChannel> channel_;
  Meta meta_;
  std::uint64_t next_id_ = 1;
};

/// Server side: answers frames on `channel` until end of stream. Malformed
/// frames and model exceptions get an error frame; the loop keeps going.
void serve(LineChannel& channel, const Meta& meta,
           const std::function<Label(const ImageTensor&)>& classify);

/// Handles one request line and returns the response line (no newline).
std::string handle_frame(std::string_view line, const Meta& meta,
                         const std::function<Label(const ImageTensor&)>& classify);

/// Binds 127.0.0.1-or-any:port and returns the listening fd; port 0 picks one.
int listen_tcp(std::uint16_t port, std::uint16_t* bound_port = nullptr);

}  // namespace sparsevo::wire
