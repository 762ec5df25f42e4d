#include "qualpipe/metrics.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <cstring>
#include <unordered_map>

#include <json.hpp>

#include "qualpipe/errors.hpp"
#include "qualpipe/text_util.hpp"

namespace qualpipe {

MetricSpec metric_spec_from_string(const std::string& s) {
  if (s == "rouge-l") return MetricSpec{"rouge-l", MetricKind::RougeL, {}};
  if (s == "exact-match") {
    return MetricSpec{"exact-match", MetricKind::ExactMatch, {}};
  }
  const std::string prefix = "external:";
  if (s.rfind(prefix, 0) == 0 && s.size() > prefix.size()) {
    return MetricSpec{"external", MetricKind::ExternalCommand,
                      s.substr(prefix.size())};
  }
  throw ConfigError("unknown metric: \"" + s +
                    "\" (expected rouge-l, exact-match, or external:<command>)");
}

double rouge_l(const std::string& reference, const std::string& prediction) {
  const auto ref = tokenize(reference);
  const auto pred = tokenize(prediction);
  if (ref.empty() || pred.empty()) return 0.0;

  // Longest common subsequence over tokens, two-row DP.
  std::vector<std::size_t> prev(pred.size() + 1, 0);
  std::vector<std::size_t> curr(pred.size() + 1, 0);
  for (std::size_t i = 1; i <= ref.size(); ++i) {
    for (std::size_t j = 1; j <= pred.size(); ++j) {
      if (ref[i - 1] == pred[j - 1]) {
        curr[j] = prev[j - 1] + 1;
      } else {
        curr[j] = std::max(prev[j], curr[j - 1]);
      }
    }
    std::swap(prev, curr);
  }
  const auto lcs = static_cast<double>(prev[pred.size()]);
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(pred.size());
  const double recall = lcs / static_cast<double>(ref.size());
  return 2.0 * precision * recall / (precision + recall);
}

double exact_match(const std::string& reference, const std::string& prediction) {
  const std::string ref = to_lower(trim(reference));
  const std::string pred = to_lower(trim(prediction));
  if (ref.size() == 1 && ref[0] >= 'a' && ref[0] <= 'd') {
    for (const auto& token : tokenize(prediction)) {
      if (token.size() == 1 && token[0] >= 'a' && token[0] <= 'd') {
        return token[0] == ref[0] ? 1.0 : 0.0;
      }
    }
    return 0.0;
  }
  return ref == pred ? 1.0 : 0.0;
}

namespace {

void set_nonblocking(int fd) {
  const int flags = fcntl(fd, F_GETFL, 0);
  fcntl(fd, F_SETFL, flags | O_NONBLOCK);
}

}  // namespace

double external_metric(const MetricSpec& spec, const Instance& instance) {
  if (spec.kind != MetricKind::ExternalCommand || !spec.command) {
    throw ConfigError("external_metric needs an ExternalCommand spec");
  }

  nlohmann::json payload = {{"id", instance.id},
                            {"input", instance.input},
                            {"reference", instance.reference}};
  if (instance.prediction) {
    payload["prediction"] = *instance.prediction;
  } else {
    payload["prediction"] = nullptr;
  }
  const std::string input = payload.dump() + "\n";

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
    throw Error("pipe() failed: " + std::string(std::strerror(errno)));
  }
  const pid_t pid = fork();
  if (pid < 0) throw Error("fork() failed: " + std::string(std::strerror(errno)));
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    dup2(err_pipe[1], STDERR_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1],
                   err_pipe[0], err_pipe[1]}) {
      close(fd);
    }
    execl("/bin/sh", "sh", "-c", spec.command->c_str(),
          static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);

  // A command may exit without draining its stdin; the resulting EPIPE must
  // reach the write() below as an errno, not as a fatal SIGPIPE.
  struct sigaction ignore_pipe {};
  struct sigaction old_pipe {};
  ignore_pipe.sa_handler = SIG_IGN;
  sigaction(SIGPIPE, &ignore_pipe, &old_pipe);

  // Poll all three pipes together: the child may emit output before it has
  // consumed all of its stdin, so a blocking write could deadlock.
  set_nonblocking(in_pipe[1]);
  set_nonblocking(out_pipe[0]);
  set_nonblocking(err_pipe[0]);
  std::string stdout_text;
  std::string stderr_text;
  std::size_t written = 0;
  bool in_open = true, out_open = true, err_open = true;
  while (in_open || out_open || err_open) {
    struct pollfd fds[3];
    nfds_t n_fds = 0;
    int in_slot = -1, out_slot = -1, err_slot = -1;
    if (in_open) {
      in_slot = static_cast<int>(n_fds);
      fds[n_fds++] = {in_pipe[1], POLLOUT, 0};
    }
    if (out_open) {
      out_slot = static_cast<int>(n_fds);
      fds[n_fds++] = {out_pipe[0], POLLIN, 0};
    }
    if (err_open) {
      err_slot = static_cast<int>(n_fds);
      fds[n_fds++] = {err_pipe[0], POLLIN, 0};
    }
    if (poll(fds, n_fds, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    char buf[4096];
    if (in_slot >= 0 && (fds[in_slot].revents & (POLLOUT | POLLERR)) != 0) {
      const ssize_t w = write(in_pipe[1], input.data() + written,
                              input.size() - written);
      if (w > 0) written += static_cast<std::size_t>(w);
      if ((w < 0 && errno != EAGAIN && errno != EINTR) ||
          written == input.size()) {
        close(in_pipe[1]);
        in_open = false;
      }
    }
    if (out_slot >= 0 && (fds[out_slot].revents & (POLLIN | POLLHUP)) != 0) {
      const ssize_t r = read(out_pipe[0], buf, sizeof buf);
      if (r > 0) {
        stdout_text.append(buf, static_cast<std::size_t>(r));
      } else if (r == 0 || (r < 0 && errno != EAGAIN && errno != EINTR)) {
        close(out_pipe[0]);
        out_open = false;
      }
    }
    if (err_slot >= 0 && (fds[err_slot].revents & (POLLIN | POLLHUP)) != 0) {
      const ssize_t r = read(err_pipe[0], buf, sizeof buf);
      if (r > 0) {
        stderr_text.append(buf, static_cast<std::size_t>(r));
      } else if (r == 0 || (r < 0 && errno != EAGAIN && errno != EINTR)) {
        close(err_pipe[0]);
        err_open = false;
      }
    }
  }
  if (in_open) close(in_pipe[1]);
  if (out_open) close(out_pipe[0]);
  if (err_open) close(err_pipe[0]);
  sigaction(SIGPIPE, &old_pipe, nullptr);

  int status = 0;
  waitpid(pid, &status, 0);
  const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  if (exit_code != 0) throw CommandFailedError(exit_code, stderr_text);

  const std::string out = trim(stdout_text);
  char* end = nullptr;
  const double value = std::strtod(out.c_str(), &end);
  if (end == out.c_str()) throw UnparseableScoreError(stdout_text);
  return std::clamp(value, 0.0, 1.0);
}

std::vector<MetricScore> compute_metric_scores(const Dataset& dataset,
                                               const MetricSpec& spec) {
  std::vector<MetricScore> out;
  out.reserve(dataset.size());
  for (const auto& inst : dataset.instances) {
    if (!inst.prediction) {
      throw DataError("instance \"" + inst.id +
                      "\" has no prediction to score with metric " + spec.name);
    }
    double value = 0.0;
    switch (spec.kind) {
      case MetricKind::RougeL:
        value = rouge_l(inst.reference, *inst.prediction);
        break;
      case MetricKind::ExactMatch:
        value = exact_match(inst.reference, *inst.prediction);
        break;
      case MetricKind::ExternalCommand:
        value = external_metric(spec, inst);
        break;
    }
    out.push_back(MetricScore{inst.id, spec.name, value});
  }
  return out;
}

double overall_score(const std::vector<MetricScore>& scores) {
  if (scores.empty()) throw EmptyScoresError();
  double sum = 0.0;
  for (const auto& s : scores) sum += s.value;
  return sum / static_cast<double>(scores.size());
}

std::map<std::string, double> proficiency_breakdown(
    const std::vector<MetricScore>& scores, const AssignmentMatrix& assign) {
  std::unordered_map<std::string, double> by_id;
  for (const auto& s : scores) by_id[s.instance_id] = s.value;

  std::map<std::string, double> out;
  for (std::size_t j = 0; j < assign.cols(); ++j) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < assign.rows(); ++i) {
      if (assign.assign[i][j] == 0) continue;
      auto it = by_id.find(assign.instance_ids[i]);
      if (it == by_id.end()) throw MissingScoreError(assign.instance_ids[i]);
      sum += it->second;
      ++count;
    }
    if (count > 0) {
      out.emplace(assign.attribute_names[j],
                  sum / static_cast<double>(count));
    }
  }
  return out;
}

std::map<std::string, double> calibration_distance(const AffinityMatrix& gt,
                                                   const AffinityMatrix& pred,
                                                   bool exclude_imputed) {
  if (gt.rows() != pred.rows() || gt.cols() != pred.cols()) {
    throw ShapeMismatchError("affinity matrices differ in shape: " +
                             std::to_string(gt.rows()) + "x" +
                             std::to_string(gt.cols()) + " vs " +
                             std::to_string(pred.rows()) + "x" +
                             std::to_string(pred.cols()));
  }
  if (gt.attribute_names != pred.attribute_names) {
    throw ShapeMismatchError("affinity matrices cover different attributes");
  }
  if (gt.instance_ids != pred.instance_ids) {
    throw ShapeMismatchError("affinity matrices cover different instances");
  }

  std::map<std::string, double> out;
  for (std::size_t j = 0; j < gt.cols(); ++j) {
    std::size_t over = 0;
    std::size_t denom = 0;
    for (std::size_t i = 0; i < gt.rows(); ++i) {
      if (exclude_imputed && (gt.imputed[i][j] || pred.imputed[i][j])) continue;
      ++denom;
      if (std::abs(gt.scores[i][j] - pred.scores[i][j]) > 1) ++over;
    }
    if (denom > 0) {
      out.emplace(gt.attribute_names[j],
                  static_cast<double>(over) / static_cast<double>(denom));
    }
  }
  return out;
}

}  // namespace qualpipe
