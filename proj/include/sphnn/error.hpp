#pragma once

#include <stdexcept>
#include <string>

namespace sphnn {

/// Bad or inconsistent configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataErrorKind {
  MissingFile,
  MalformedRow,
  DuplicateNode,
  DanglingEndpoint,
  SelfLoop,
  DuplicateEdge,
  MissingFeature,
  FeatureDimension,
  LabelOutOfRange,
  UnknownName,
  InvalidPattern,
  InvalidArgument,
  EmptyHypergraph,
};

const char* to_string(DataErrorKind kind);

/// Invalid input data (CLI exit code 3). Carries file/line context when the
/// error comes from a dataset file.
class DataError : public std::runtime_error {
 public:
  DataError(DataErrorKind kind, const std::string& message,
            std::string file = {}, std::size_t line = 0);

  DataErrorKind kind() const noexcept { return kind_; }
  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  DataErrorKind kind_;
  std::string file_;
  std::size_t line_;
};

/// A motif produced no instances; the caller decides whether to drop it.
class EmptyHypergraph : public DataError {
 public:
  explicit EmptyHypergraph(const std::string& motif_id);
};

/// Shape mismatch, non-finite value, divergence or failed gradient check
/// (CLI exit code 4).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sphnn
