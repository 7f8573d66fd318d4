#include "subprocess.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include "fsmscg/errors.hpp"

namespace fsmscg::internal {

namespace {

void set_nonblocking(int fd) {
  int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

void set_cloexec(int fd) {
  int flags = fcntl(fd, F_GETFD, 0);
  fcntl(fd, F_SETFD, flags | FD_CLOEXEC);
}

}  // namespace

bool executable_exists(const std::string& name) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (name.find('/') != std::string::npos)
    return fs::exists(name, ec) && ::access(name.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (path == nullptr) return false;
  std::string_view remaining(path);
  while (!remaining.empty()) {
    std::size_t colon = remaining.find(':');
    std::string_view dir = remaining.substr(0, colon);
    if (!dir.empty()) {
      fs::path candidate = fs::path(dir) / name;
      if (fs::exists(candidate, ec) && ::access(candidate.c_str(), X_OK) == 0)
        return true;
    }
    if (colon == std::string_view::npos) break;
    remaining.remove_prefix(colon + 1);
  }
  return false;
}

ProcessResult run_process(const std::vector<std::string>& argv,
                          std::string_view stdin_data,
                          std::chrono::milliseconds timeout) {
  if (argv.empty()) throw Error("run_process: empty argv");

  // A child that stops reading stdin must not SIGPIPE us.
  static const bool sigpipe_ignored = [] {
    signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;

  int in_pipe[2], out_pipe[2], err_pipe[2], status_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(err_pipe) != 0 ||
      pipe(status_pipe) != 0)
    throw Error("run_process: pipe() failed");
  set_cloexec(status_pipe[1]);

  pid_t pid = fork();
  if (pid < 0) throw Error("run_process: fork() failed");

  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1],
                   err_pipe[0], err_pipe[1], status_pipe[0]})
      close(fd);

    std::vector<char*> args;
    args.reserve(argv.size() + 1);
    for (const std::string& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    execvp(args[0], args.data());

    // exec failed: report errno through the CLOEXEC pipe and bail
    int err = errno;
    ssize_t ignored = write(status_pipe[1], &err, sizeof(err));
    (void)ignored;
    _exit(127);
  }

  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);
  close(status_pipe[1]);

  set_nonblocking(in_pipe[1]);
  set_nonblocking(out_pipe[0]);
  set_nonblocking(err_pipe[0]);

  // If exec succeeded the status pipe closes empty; otherwise it carries
  // the child's errno.
  int exec_errno = 0;
  {
    ssize_t n = read(status_pipe[0], &exec_errno, sizeof(exec_errno));
    if (n <= 0) exec_errno = 0;
  }
  close(status_pipe[0]);
  if (exec_errno != 0) {
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(err_pipe[0]);
    int wstatus = 0;
    waitpid(pid, &wstatus, 0);
    throw Error("run_process: cannot execute \"" + argv[0] +
                "\": " + std::strerror(exec_errno));
  }

  ProcessResult result;
  std::size_t written = 0;
  bool stdin_open = true;
  if (stdin_data.empty()) {
    close(in_pipe[1]);
    stdin_open = false;
  }
  bool out_open = true, err_open = true;

  auto deadline = std::chrono::steady_clock::now() + timeout;
  char buffer[16384];

  while (out_open || err_open || stdin_open) {
    auto now = std::chrono::steady_clock::now();
    if (now >= deadline) {
      result.timed_out = true;
      kill(pid, SIGKILL);
      break;
    }
    int wait_ms = static_cast<int>(
        std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
            .count());
    if (wait_ms > 200) wait_ms = 200;

    struct pollfd fds[3];
    int nfds = 0;
    int out_idx = -1, err_idx = -1, in_idx = -1;
    if (out_open) {
      out_idx = nfds;
      fds[nfds++] = {out_pipe[0], POLLIN, 0};
    }
    if (err_open) {
      err_idx = nfds;
      fds[nfds++] = {err_pipe[0], POLLIN, 0};
    }
    if (stdin_open) {
      in_idx = nfds;
      fds[nfds++] = {in_pipe[1], POLLOUT, 0};
    }

    int rc = poll(fds, nfds, wait_ms);
    if (rc < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (rc == 0) continue;

    if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP))) {
      ssize_t n = read(out_pipe[0], buffer, sizeof(buffer));
      if (n > 0)
        result.out.append(buffer, static_cast<std::size_t>(n));
      else if (n == 0 || (n < 0 && errno != EAGAIN)) {
        close(out_pipe[0]);
        out_open = false;
      }
    }
    if (err_idx >= 0 && (fds[err_idx].revents & (POLLIN | POLLHUP))) {
      ssize_t n = read(err_pipe[0], buffer, sizeof(buffer));
      if (n > 0)
        result.err.append(buffer, static_cast<std::size_t>(n));
      else if (n == 0 || (n < 0 && errno != EAGAIN)) {
        close(err_pipe[0]);
        err_open = false;
      }
    }
    if (in_idx >= 0 && (fds[in_idx].revents & (POLLOUT | POLLERR | POLLHUP))) {
      if (fds[in_idx].revents & (POLLERR | POLLHUP)) {
        close(in_pipe[1]);
        stdin_open = false;
      } else {
        ssize_t n = write(in_pipe[1], stdin_data.data() + written,
                          stdin_data.size() - written);
        if (n > 0) {
          written += static_cast<std::size_t>(n);
          if (written == stdin_data.size()) {
            close(in_pipe[1]);
            stdin_open = false;
          }
        } else if (n < 0 && errno != EAGAIN) {
          close(in_pipe[1]);
          stdin_open = false;
        }
      }
    }
  }

  if (out_open) close(out_pipe[0]);
  if (err_open) close(err_pipe[0]);
  if (stdin_open) close(in_pipe[1]);

  // The child may outlive its pipes; keep honoring the deadline.
  int wstatus = 0;
  if (!result.timed_out) {
    while (true) {
      pid_t reaped = waitpid(pid, &wstatus, WNOHANG);
      if (reaped == pid) break;
      if (reaped < 0 && errno != EINTR) break;
      if (std::chrono::steady_clock::now() >= deadline) {
        result.timed_out = true;
        kill(pid, SIGKILL);
        break;
      }
      usleep(2000);
    }
  }
  if (result.timed_out) waitpid(pid, &wstatus, 0);
  if (WIFEXITED(wstatus))
    result.exit_code = WEXITSTATUS(wstatus);
  else if (WIFSIGNALED(wstatus))
    result.exit_code = 128 + WTERMSIG(wstatus);
  return result;
}

}  // namespace fsmscg::internal
