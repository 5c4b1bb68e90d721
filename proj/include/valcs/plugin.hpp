#pragma once

// File-based bridge to an external frame-processing process.
//
// For every call a fresh working directory is created holding request.json and
// the input frames as binary PGM. The plugin command is run through /bin/sh
// with the directory appended as its last argument (also exported as
// VALCS_PLUGIN_DIR). The plugin writes its output PGMs and then response.json;
// the response file appearing marks completion.
//
//   request.json  {"version":1, "role":"interpolate"|"denoise", "width":W,
//                  "height":H, "timestamps":[t...], "inputs":["input_0.pgm",...],
//                  "sigma":s (denoise only)}
//   response.json {"version":1, "status":"ok", "outputs":["out_0.pgm",...]}
//                 {"version":1, "status":"error", "error":"..."}

#include <signal.h>
#include <stdlib.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "valcs/error.hpp"
#include "valcs/frame.hpp"
#include "valcs/pgm.hpp"

namespace valcs {

inline constexpr int kPluginProtocolVersion = 1;

struct PluginOptions {
  std::string command;
  std::chrono::milliseconds timeout{30000};
  std::filesystem::path scratch_root = std::filesystem::temp_directory_path();
};

struct PluginCall {
  std::string role;
  std::vector<Frame> inputs;
  std::vector<double> timestamps;
  std::optional<double> sigma;
  std::size_t expected_outputs = 0;
};

namespace detail {

class ScratchDirectory {
 public:
  explicit ScratchDirectory(const std::filesystem::path& root) {
    std::string pattern = (root / "valcs-plugin-XXXXXX").string();
    if (::mkdtemp(pattern.data()) == nullptr) {
      throw Error(ErrorCode::kIo, "cannot create plugin working directory under " + root.string());
    }
    path_ = pattern;
  }
  ~ScratchDirectory() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  ScratchDirectory(const ScratchDirectory&) = delete;
  ScratchDirectory& operator=(const ScratchDirectory&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

// Runs `command dir`, returning once response.json exists or the process has
// exited. Kills the whole process group on timeout.
inline void run_plugin_process(const std::string& command, const std::filesystem::path& dir,
                               std::chrono::milliseconds timeout) {
  const std::string line = command + " " + shell_quote(dir.string());
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::kPlugin, "fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::setenv("VALCS_PLUGIN_DIR", dir.c_str(), 1);
    ::execl("/bin/sh", "sh", "-c", line.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);

  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + timeout;
  const auto response = dir / "response.json";
  std::optional<clock::time_point> response_seen;
  int status = 0;
  for (;;) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) {
      if (!std::filesystem::exists(response)) {
        throw Error(ErrorCode::kPlugin, "plugin exited (status " + std::to_string(status) +
                                            ") without writing response.json");
      }
      return;
    }
    const auto now = clock::now();
    if (std::filesystem::exists(response)) {
      if (!response_seen) response_seen = now;
      // A plugin that lingers after responding is reaped.
      if (now - *response_seen > std::chrono::milliseconds(500)) {
        ::kill(-pid, SIGKILL);
        ::waitpid(pid, &status, 0);
        return;
      }
    }
    if (now > deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw Error(ErrorCode::kPlugin, "plugin timed out after " + std::to_string(timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
}

}  // namespace detail

inline nlohmann::json make_plugin_request(const PluginCall& call) {
  nlohmann::json request;
  request["version"] = kPluginProtocolVersion;
  request["role"] = call.role;
  request["width"] = call.inputs.empty() ? 0 : call.inputs.front().width();
  request["height"] = call.inputs.empty() ? 0 : call.inputs.front().height();
  request["timestamps"] = call.timestamps;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < call.inputs.size(); ++i) names.push_back("input_" + std::to_string(i) + ".pgm");
  request["inputs"] = names;
  if (call.sigma) request["sigma"] = *call.sigma;
  return request;
}

class PluginBridge {
 public:
  explicit PluginBridge(PluginOptions options) : options_(std::move(options)) {
    if (options_.command.empty()) throw Error(ErrorCode::kInvalidConfig, "plugin command is empty");
  }

  const PluginOptions& options() const noexcept { return options_; }

  // Throws Error(kPlugin) on any protocol violation.
  std::vector<Frame> run(const PluginCall& call) const {
    if (call.inputs.empty()) throw Error(ErrorCode::kInvalidArgument, "plugin call without inputs");
    detail::ScratchDirectory dir(options_.scratch_root);
    const nlohmann::json request = make_plugin_request(call);
    for (std::size_t i = 0; i < call.inputs.size(); ++i) {
      write_pgm(dir.path() / request["inputs"][i].get<std::string>(), call.inputs[i]);
    }
    {
      const std::string text = request.dump(2);
      write_file_bytes(dir.path() / "request.json", std::vector<std::uint8_t>(text.begin(), text.end()));
    }

    detail::run_plugin_process(options_.command, dir.path(), options_.timeout);

    nlohmann::json response;
    try {
      const auto bytes = read_file_bytes(dir.path() / "response.json");
      response = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kPlugin, std::string("malformed response.json: ") + e.what());
    }
    try {
      if (response.at("version").get<int>() != kPluginProtocolVersion) {
        throw Error(ErrorCode::kPlugin, "protocol version mismatch");
      }
      if (response.at("status").get<std::string>() != "ok") {
        throw Error(ErrorCode::kPlugin, "plugin reported error: " + response.value("error", std::string("?")));
      }
      const auto outputs = response.at("outputs").get<std::vector<std::string>>();
      if (outputs.size() != call.expected_outputs) {
        throw Error(ErrorCode::kPlugin, "plugin returned " + std::to_string(outputs.size()) +
                                            " frames, expected " + std::to_string(call.expected_outputs));
      }
      std::vector<Frame> frames;
      for (const auto& name : outputs) {
        if (std::filesystem::path(name).has_parent_path()) {
          throw Error(ErrorCode::kPlugin, "output names must be plain file names");
        }
        Frame f = read_pgm(dir.path() / name);
        if (!f.same_geometry(call.inputs.front())) {
          throw Error(ErrorCode::kPlugin, "plugin output " + name + " has the wrong geometry");
        }
        frames.push_back(std::move(f));
      }
      return frames;
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kPlugin, std::string("malformed response.json: ") + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kPlugin) throw;
      throw Error(ErrorCode::kPlugin, e.what());
    }
  }

 private:
  PluginOptions options_;
};

}  // namespace valcs
