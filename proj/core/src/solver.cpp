// SPDX-License-Identifier: Apache-2.0
#include "pfa/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <sstream>

#include "pfa/error.hpp"

namespace pfa {

std::string to_string(SatResult r) {
    switch (r) {
        case SatResult::SAT: return "sat";
        case SatResult::UNSAT: return "unsat";
        case SatResult::UNKNOWN: return "unknown";
    }
    return "unknown";
}

SolverOutcome interpret_reply(const SolverReply& reply) {
    SolverOutcome o;
    if (reply.timed_out) {
        o.result = SatResult::UNKNOWN;
        o.diagnostic = "timeout";
        return o;
    }
    std::istringstream in(reply.output);
    std::string line;
    std::string errors;
    bool any = false;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.rfind("(error", 0) == 0) {
            errors += line + "\n";
        } else if (line == "sat" || line == "unsat" || line == "unknown") {
            o.result = line == "sat" ? SatResult::SAT : line == "unsat" ? SatResult::UNSAT : SatResult::UNKNOWN;
            any = true;
        }
    }
    if (!errors.empty()) {
        o.error = true;
        o.diagnostic = errors;
    } else if (!any) {
        o.error = true;
        o.diagnostic = reply.output.empty() ? "solver produced no verdict (exit status " +
                                                  std::to_string(reply.exit_status) + ")"
                                            : reply.output;
    }
    return o;
}

SubprocessSolver::SubprocessSolver(std::vector<std::string> argv, std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), timeout_(timeout) {
    if (argv_.empty()) throw Error(ErrorCode::ConfigError, "empty solver command");
}

std::string SubprocessSolver::name() const {
    std::string s;
    for (const auto& a : argv_) s += (s.empty() ? "" : " ") + a;
    return s;
}

SolverReply SubprocessSolver::run(const std::string& script) {
    int in_pipe[2];
    int out_pipe[2];
    if (pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(ErrorCode::SolverError, std::string("pipe: ") + strerror(errno));
    if (pipe2(out_pipe, O_CLOEXEC) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw Error(ErrorCode::SolverError, std::string("pipe: ") + strerror(errno));
    }
    std::vector<char*> args;
    for (const auto& a : argv_) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);

    const pid_t pid = fork();
    if (pid < 0) {
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
        throw Error(ErrorCode::SolverError, std::string("fork: ") + strerror(errno));
    }
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        dup2(out_pipe[1], STDERR_FILENO);
        execvp(args[0], args.data());
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);

    SolverReply reply;
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    std::size_t written = 0;
    int in_fd = in_pipe[1];
    if (script.empty()) {
        close(in_fd);
        in_fd = -1;
    }
    bool out_open = true;
    char buf[4096];
    while (out_open) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) {
            reply.timed_out = true;
            break;
        }
        pollfd fds[2];
        nfds_t n = 0;
        fds[n++] = pollfd{out_pipe[0], POLLIN, 0};
        if (in_fd >= 0) fds[n++] = pollfd{in_fd, POLLOUT, 0};
        const int r = poll(fds, n, static_cast<int>(left.count()));
        if (r < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (r == 0) continue;
        if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            const ssize_t w = write(in_fd, script.data() + written, script.size() - written);
            if (w > 0) written += static_cast<std::size_t>(w);
            if (w < 0 && errno != EAGAIN) written = script.size();
            if (written >= script.size()) {
                close(in_fd);
                in_fd = -1;
            }
        }
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            const ssize_t got = read(out_pipe[0], buf, sizeof buf);
            if (got > 0) reply.output.append(buf, static_cast<std::size_t>(got));
            else if (got == 0 || errno != EINTR) out_open = false;
        }
    }
    if (in_fd >= 0) close(in_fd);
    close(out_pipe[0]);
    if (reply.timed_out) kill(pid, SIGKILL);
    int status = 0;
    while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
    }
    if (WIFEXITED(status)) reply.exit_status = WEXITSTATUS(status);
    else if (WIFSIGNALED(status)) reply.exit_status = 128 + WTERMSIG(status);
    if (!reply.timed_out && reply.exit_status == 127 && reply.output.empty()) {
        throw Error(ErrorCode::SolverError, "cannot execute solver '" + argv_[0] + "'");
    }
    return reply;
}

SolverFactory make_solver_factory(const std::string& command, std::chrono::milliseconds timeout) {
    if (command.empty() || command == "builtin") {
        return [] { return std::make_unique<BuiltinSolver>(); };
    }
    std::vector<std::string> argv;
    std::istringstream in(command);
    for (std::string w; in >> w;) argv.push_back(w);
    return [argv, timeout] { return std::make_unique<SubprocessSolver>(argv, timeout); };
}

}  // namespace pfa
