#pragma once

#include <deque>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace delib {

enum class GatewayErr {
  Transport,
  BadStatus,
  Timeout,
  EmptyCompletion,
  ReplayMismatch,
  ExhaustedCassette,
  CassetteIo,
};

class GatewayError : public std::runtime_error {
 public:
  GatewayError(GatewayErr kind, const std::string& what)
      : std::runtime_error(what), kind(kind) {}
  GatewayErr kind;
};

struct TextPart {
  std::string text;
};

struct ImagePart {
  std::vector<uint8_t> png_bytes;
  int width = 0;
  int height = 0;
};

using MessagePart = std::variant<TextPart, ImagePart>;

enum class Role { System, User };

struct ChatMessage {
  Role role = Role::User;
  std::vector<MessagePart> parts;

  static ChatMessage system(std::string text) {
    return ChatMessage{Role::System, {TextPart{std::move(text)}}};
  }
  static ChatMessage user(std::string text) {
    return ChatMessage{Role::User, {TextPart{std::move(text)}}};
  }
};

struct ModelConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8000
  std::string model;
  double temperature = 0.0;  // deterministic decoding unless overridden
  int max_tokens = 2048;
  int timeout_ms = 60000;
};

// SHA-256 hex over the role/text/image-bytes sequence; stable across runs so
// replay fails loudly when prompts drift.
std::string request_digest(const std::vector<ChatMessage>& messages);
std::string sha256_hex(const uint8_t* data, size_t len);

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const std::vector<ChatMessage>& messages,
                               const ModelConfig& cfg) = 0;
};

// OpenAI-compatible chat-completions client; images travel as base64 data
// URIs in content parts.
class HttpBackend : public Backend {
 public:
  std::string complete(const std::vector<ChatMessage>& messages,
                       const ModelConfig& cfg) override;
  // Request body as sent on the wire, exposed for tests.
  static std::string build_request_body(const std::vector<ChatMessage>& messages,
                                        const ModelConfig& cfg);
};

// Fixed reply queue for desk tests.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies = {});
  void push_reply(std::string reply);
  std::string complete(const std::vector<ChatMessage>& messages,
                       const ModelConfig& cfg) override;

 private:
  std::deque<std::string> replies_;
};

struct CassetteEntry {
  std::string digest;  // 64 hex chars
  std::string response;
};

void write_cassette(const std::string& path, const std::vector<CassetteEntry>& entries);
std::vector<CassetteEntry> read_cassette(const std::string& path);

// Wraps a live backend and appends (digest, response) pairs; save() writes
// the cassette file.
class CassetteRecorder : public Backend {
 public:
  CassetteRecorder(std::shared_ptr<Backend> inner, std::string path);
  std::string complete(const std::vector<ChatMessage>& messages,
                       const ModelConfig& cfg) override;
  void save() const;
  const std::vector<CassetteEntry>& entries() const { return entries_; }

 private:
  std::shared_ptr<Backend> inner_;
  std::string path_;
  std::vector<CassetteEntry> entries_;
};

// Serves recorded responses in order, verifying each request digest.
class CassetteReplayer : public Backend {
 public:
  explicit CassetteReplayer(const std::string& path);
  explicit CassetteReplayer(std::vector<CassetteEntry> entries);
  std::string complete(const std::vector<ChatMessage>& messages,
                       const ModelConfig& cfg) override;
  size_t remaining() const { return entries_.size() - next_; }

 private:
  std::vector<CassetteEntry> entries_;
  size_t next_ = 0;
};

}  // namespace delib
