#include "sphnn/error.hpp"

namespace sphnn {

const char* to_string(DataErrorKind kind) {
  switch (kind) {
    case DataErrorKind::MissingFile: return "missing-file";
    case DataErrorKind::MalformedRow: return "malformed-row";
    case DataErrorKind::DuplicateNode: return "duplicate-node";
    case DataErrorKind::DanglingEndpoint: return "dangling-endpoint";
    case DataErrorKind::SelfLoop: return "self-loop";
    case DataErrorKind::DuplicateEdge: return "duplicate-edge";
    case DataErrorKind::MissingFeature: return "missing-feature";
    case DataErrorKind::FeatureDimension: return "feature-dimension";
    case DataErrorKind::LabelOutOfRange: return "label-out-of-range";
    case DataErrorKind::UnknownName: return "unknown-name";
    case DataErrorKind::InvalidPattern: return "invalid-pattern";
    case DataErrorKind::InvalidArgument: return "invalid-argument";
    case DataErrorKind::EmptyHypergraph: return "empty-hypergraph";
  }
  return "unknown";
}

namespace {

std::string with_context(const std::string& message, const std::string& file,
                         std::size_t line) {
  if (file.empty()) return message;
  std::string out = file;
  if (line > 0) out += ":" + std::to_string(line);
  return out + ": " + message;
}

}  // namespace

DataError::DataError(DataErrorKind kind, const std::string& message,
                     std::string file, std::size_t line)
    : std::runtime_error(with_context(message, file, line)),
      kind_(kind),
      file_(std::move(file)),
      line_(line) {}

EmptyHypergraph::EmptyHypergraph(const std::string& motif_id)
    : DataError(DataErrorKind::EmptyHypergraph,
                "motif '" + motif_id + "' has no instances") {}

}  // namespace sphnn
