#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "rectx/blackbox.hpp"
#include "rectx/errors.hpp"
#include "rectx/text_io.hpp"

extern char** environ;

namespace rectx {

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : " ") + p;
  return out;
}

}  // namespace

OracleModel::OracleModel(std::vector<std::string> command, std::size_t input_dim,
                         int num_categories, OracleOptions options)
    : command_(std::move(command)),
      input_dim_(input_dim),
      names_(numbered_categories(num_categories)),
      options_(options) {}

OracleModel::~OracleModel() { shutdown(); }

void OracleModel::shutdown() {
  if (to_child_ >= 0) ::close(to_child_);
  if (from_child_ >= 0) ::close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    // Closing stdin normally ends the oracle; do not wait on a stuck one.
    for (int attempt = 0; attempt < 50; ++attempt) {
      if (::waitpid(pid_, &status, WNOHANG) != 0) {
        pid_ = -1;
        return;
      }
      ::usleep(10000);
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

std::string OracleModel::descriptor() const { return "external_oracle(" + join(command_) + ")"; }

void OracleModel::write_all(const std::string& data) {
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw OracleFailure("write to oracle failed: " + std::string(std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
}

std::string OracleModel::read_line() {
  while (true) {
    const auto newline = pending_.find('\n');
    if (newline != std::string::npos) {
      std::string line = pending_.substr(0, newline);
      pending_.erase(0, newline + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    pollfd fd{from_child_, POLLIN, 0};
    const int ready = ::poll(&fd, 1, options_.timeout_ms);
    if (ready == 0) throw OracleFailure("oracle reply timed out");
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw OracleFailure("poll on oracle failed");
    }
    char buffer[4096];
    const ssize_t n = ::read(from_child_, buffer, sizeof buffer);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw OracleFailure("oracle closed its output");
    pending_.append(buffer, static_cast<std::size_t>(n));
  }
}

std::vector<int> OracleModel::predict(std::span<const double> rows) {
  if (to_child_ < 0) throw OracleFailure("oracle connection is closed");
  const std::size_t count = rows.size() / input_dim_;
  std::vector<int> labels;
  labels.reserve(count);
  try {
    for (std::size_t start = 0; start < count; start += options_.max_batch) {
      const std::size_t n = std::min(options_.max_batch, count - start);
      std::string frame = "BATCH " + std::to_string(n) + "\n";
      for (std::size_t i = start; i < start + n; ++i) {
        for (std::size_t j = 0; j < input_dim_; ++j) {
          if (j) frame += ',';
          frame += format_real(rows[i * input_dim_ + j]);
        }
        frame += '\n';
      }
      write_all(frame);
      for (std::size_t i = 0; i < n; ++i) {
        const std::string reply = read_line();
        const auto label = parse_integer(reply);
        if (!label || *label < 1 || *label > num_categories()) {
          throw OracleFailure("malformed oracle reply '" + reply + "'");
        }
        labels.push_back(static_cast<int>(*label));
      }
    }
  } catch (const OracleFailure&) {
    // The stream position is unknown after a failure; drop the connection.
    shutdown();
    throw;
  }
  return labels;
}

std::unique_ptr<OracleModel> connect_oracle(const std::vector<std::string>& command,
                                            std::size_t input_dim, int num_categories,
                                            const OracleOptions& options) {
  if (command.empty()) throw SpawnFailure("empty oracle command");
  ::signal(SIGPIPE, SIG_IGN);

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe(in_pipe) != 0) throw SpawnFailure("pipe() failed");
  if (::pipe(out_pipe) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw SpawnFailure("pipe() failed");
  }

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  posix_spawn_file_actions_addclose(&actions, in_pipe[1]);
  posix_spawn_file_actions_addclose(&actions, out_pipe[0]);

  std::vector<char*> argv;
  for (const auto& arg : command) argv.push_back(const_cast<char*>(arg.c_str()));
  argv.push_back(nullptr);

  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  if (rc != 0) {
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    throw SpawnFailure("cannot spawn '" + command[0] + "': " + std::strerror(rc));
  }

  std::unique_ptr<OracleModel> model(new OracleModel(command, input_dim, num_categories, options));
  model->pid_ = pid;
  model->to_child_ = in_pipe[1];
  model->from_child_ = out_pipe[0];
  try {
    model->write_all("HELLO m=" + std::to_string(input_dim) + " c=" +
                     std::to_string(num_categories) + "\n");
    const std::string reply = model->read_line();
    if (reply != "READY") throw HandshakeFailure("oracle replied '" + reply + "' to HELLO");
  } catch (const OracleFailure& e) {
    throw HandshakeFailure(std::string("oracle handshake failed: ") + e.what());
  }
  return model;
}

}  // namespace rectx
