#pragma once
// Completion policies and their line-delimited JSON wire protocol.
//
//   request:  {"id": "...", "prompt": "...", "temperature": 0.0, "max_new_tokens": 2048}
//   response: {"id": "...", "completion": "..."}   or   {"id": "...", "error": "..."}
//
// One object per line in each direction, strictly alternating.

#include <csignal>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <string>

#include <fcntl.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

namespace eift {

struct PolicyRequest {
  std::string id;
  std::string prompt;
  double temperature = 0.0;
  int max_new_tokens = 2048;
  friend bool operator==(const PolicyRequest&, const PolicyRequest&) = default;
};

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string encode_request(const PolicyRequest& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["prompt"] = r.prompt;
  j["temperature"] = r.temperature;
  j["max_new_tokens"] = r.max_new_tokens;
  return j.dump();
}

inline PolicyRequest decode_request(const std::string& line) {
  const auto j = nlohmann::json::parse(line);
  PolicyRequest r;
  r.id = j.at("id").get<std::string>();
  r.prompt = j.at("prompt").get<std::string>();
  r.temperature = j.value("temperature", 0.0);
  r.max_new_tokens = j.value("max_new_tokens", 2048);
  if (r.temperature < 0.0) throw std::invalid_argument("temperature must be >= 0");
  return r;
}

inline std::string encode_response(const std::string& id, const std::string& completion) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["completion"] = completion;
  return j.dump();
}

inline std::string encode_error(const nlohmann::json& id, const std::string& message) {
  nlohmann::ordered_json j;
  j["id"] = id;
  j["error"] = message;
  return j.dump();
}

/// Completion for `expected_id`, or PolicyError on an error response,
/// mismatched id or malformed line.
inline std::string decode_response(const std::string& line, const std::string& expected_id) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const std::exception& e) {
    throw PolicyError(std::string("malformed response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || j["id"] != expected_id) throw PolicyError("response id does not match request " + expected_id);
  if (j.contains("error")) throw PolicyError("policy error for " + expected_id + ": " + j["error"].dump());
  if (!j.contains("completion") || !j["completion"].is_string()) throw PolicyError("response lacks a completion");
  return j["completion"].get<std::string>();
}

class Policy {
 public:
  virtual ~Policy() = default;
  /// Throws PolicyError on transport failure.
  virtual std::string complete(const PolicyRequest& request) = 0;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

class FunctionPolicy final : public Policy {
 public:
  using Fn = std::function<std::string(const PolicyRequest&)>;
  explicit FunctionPolicy(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const PolicyRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
};

/// Talks to a child process (`/bin/sh -c command`) over its stdin/stdout.
class SubprocessPolicy final : public Policy {
 public:
  explicit SubprocessPolicy(const std::string& command) {
    std::signal(SIGPIPE, SIG_IGN);
    int to_child[2], from_child[2];
    // O_CLOEXEC keeps sibling workers' children from inheriting these ends.
    if (pipe2(to_child, O_CLOEXEC) != 0) throw PolicyError("pipe() failed");
    if (pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw PolicyError("pipe() failed");
    }
    pid_ = fork();
    if (pid_ < 0) throw PolicyError("fork() failed");
    if (pid_ == 0) {
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  SubprocessPolicy(const SubprocessPolicy&) = delete;
  SubprocessPolicy& operator=(const SubprocessPolicy&) = delete;

  ~SubprocessPolicy() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      waitpid(pid_, &status, 0);
    }
  }

  std::string complete(const PolicyRequest& request) override {
    write_line(encode_request(request));
    return decode_response(read_line(), request.id);
  }

 private:
  void write_line(std::string line) {
    line += '\n';
    std::size_t done = 0;
    while (done < line.size()) {
      const ssize_t n = ::write(write_fd_, line.data() + done, line.size() - done);
      if (n <= 0) throw PolicyError("policy process closed its input");
      done += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() {
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n <= 0) throw PolicyError("policy process closed its output");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

/// Offline mode: completions pre-generated per request id, one
/// {"id", "completion"} object per line.
class CompletionFilePolicy final : public Policy {
 public:
  using Table = std::map<std::string, std::string, std::less<>>;

  explicit CompletionFilePolicy(std::shared_ptr<const Table> table) : table_(std::move(table)) {}

  static std::shared_ptr<const Table> load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw PolicyError("cannot open completions file " + path);
    auto table = std::make_shared<Table>();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        (*table)[j.at("id").get<std::string>()] = j.at("completion").get<std::string>();
      } catch (const std::exception& e) {
        throw PolicyError(path + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return table;
  }

  std::string complete(const PolicyRequest& request) override {
    auto it = table_->find(request.id);
    if (it == table_->end()) throw PolicyError("no completion for id " + request.id);
    return it->second;
  }

 private:
  std::shared_ptr<const Table> table_;
};

/// Serves requests from `in` until EOF. Handler exceptions become error
/// responses for that id; the loop keeps running.
inline void serve_policy(std::istream& in, std::ostream& out, const std::function<std::string(const PolicyRequest&)>& handler) {
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json id = nullptr;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.is_object() && j.contains("id")) id = j["id"];
      const PolicyRequest req = decode_request(line);
      out << encode_response(req.id, handler(req)) << '\n';
    } catch (const std::exception& e) {
      out << encode_error(id, e.what()) << '\n';
    }
    out.flush();
  }
}

}  // namespace eift
