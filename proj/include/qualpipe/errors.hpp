#pragma once

#include <stdexcept>
#include <string>

namespace qualpipe {

// Base class for all pipeline errors. Subclasses carry the structured
// fields callers need to act on (ids, line numbers, HTTP status, ...).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// --- dataset ingestion ---

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(std::string id)
      : Error("duplicate instance id: \"" + id + "\""), id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class EmptyInputError : public Error {
 public:
  explicit EmptyInputError(std::string id)
      : Error("instance \"" + id + "\" has an empty input"), id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class MissingFieldError : public Error {
 public:
  MissingFieldError(std::string field, int line)
      : Error("missing required field \"" + field + "\" at line " +
              std::to_string(line)),
        field_(std::move(field)),
        line_(line) {}
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
};

// --- gateway ---

class ReplayMissError : public Error {
 public:
  explicit ReplayMissError(std::string digest)
      : Error("replay cache miss for digest " + digest),
        digest_(std::move(digest)) {}
  const std::string& digest() const { return digest_; }

 private:
  std::string digest_;
};

class UpstreamError : public Error {
 public:
  UpstreamError(int status, std::string body)
      : Error("upstream returned status " + std::to_string(status) + ": " +
              body.substr(0, 200)),
        status_(status),
        body_(std::move(body)) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

class RateLimitedError : public Error {
 public:
  explicit RateLimitedError(std::string body)
      : Error("rate limited after exhausting backoff budget"),
        body_(std::move(body)) {}
  const std::string& body() const { return body_; }

 private:
  std::string body_;
};

// --- discovery / scoring ---

class EvaluatorUnparseableError : public Error {
 public:
  explicit EvaluatorUnparseableError(int chunk_index)
      : Error("evaluator output unparseable for chunk " +
              std::to_string(chunk_index)),
        chunk_index_(chunk_index) {}
  int chunk_index() const { return chunk_index_; }

 private:
  int chunk_index_;
};

class EvaluatorInventedAttributeError : public Error {
 public:
  explicit EvaluatorInventedAttributeError(std::string name)
      : Error("evaluator returned attribute not in candidate list: \"" + name +
              "\""),
        name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

class NoParsableScoresError : public Error {
 public:
  explicit NoParsableScoresError(std::string attribute)
      : Error("no parsable affinity score in any instance for attribute \"" +
              attribute + "\""),
        attribute_(std::move(attribute)) {}
  const std::string& attribute() const { return attribute_; }

 private:
  std::string attribute_;
};

// --- solver ---

class InfeasibleError : public Error {
 public:
  explicit InfeasibleError(const std::string& what) : Error(what) {}
};

class TooLargeError : public Error {
 public:
  explicit TooLargeError(const std::string& what) : Error(what) {}
};

// --- metrics ---

class CommandFailedError : public Error {
 public:
  CommandFailedError(int exit_code, std::string stderr_text)
      : Error("external metric command failed with exit code " +
              std::to_string(exit_code) + ": " + stderr_text.substr(0, 200)),
        exit_code_(exit_code),
        stderr_text_(std::move(stderr_text)) {}
  int exit_code() const { return exit_code_; }
  const std::string& stderr_text() const { return stderr_text_; }

 private:
  int exit_code_;
  std::string stderr_text_;
};

class UnparseableScoreError : public Error {
 public:
  explicit UnparseableScoreError(std::string stdout_text)
      : Error("external metric printed no parsable score: \"" +
              stdout_text.substr(0, 200) + "\""),
        stdout_text_(std::move(stdout_text)) {}
  const std::string& stdout_text() const { return stdout_text_; }

 private:
  std::string stdout_text_;
};

class EmptyScoresError : public Error {
 public:
  EmptyScoresError() : Error("cannot average an empty score list") {}
};

class MissingScoreError : public Error {
 public:
  explicit MissingScoreError(std::string id)
      : Error("assigned instance \"" + id + "\" has no metric score"),
        id_(std::move(id)) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

class ShapeMismatchError : public Error {
 public:
  explicit ShapeMismatchError(const std::string& what) : Error(what) {}
};

// --- insights / report ---

class EmptyInsightError : public Error {
 public:
  EmptyInsightError() : Error("evaluator returned an empty insight") {}
};

class LengthMismatchError : public Error {
 public:
  LengthMismatchError(std::size_t labels, std::size_t values)
      : Error("labels/values length mismatch: " + std::to_string(labels) +
              " vs " + std::to_string(values)) {}
};

// --- augment ---

class InsufficientPoolError : public Error {
 public:
  InsufficientPoolError(std::string domain, std::size_t available,
                        std::size_t requested)
      : Error("insufficient pool for \"" + domain + "\": " +
              std::to_string(available) + " available, " +
              std::to_string(requested) + " requested"),
        domain_(std::move(domain)),
        available_(available),
        requested_(requested) {}
  const std::string& domain() const { return domain_; }
  std::size_t available() const { return available_; }
  std::size_t requested() const { return requested_; }

 private:
  std::string domain_;
  std::size_t available_;
  std::size_t requested_;
};

// --- configuration ---

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what) {}
};

}  // namespace qualpipe
