// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ndater {

/// Shape disagreement between operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Bad model/layer/run configuration.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed document, graph or annotation record.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Invariant violation tied to one field of a document.
struct FieldError : ValidationError {
  FieldError(const std::string& doc_id, std::string field, std::string detail)
      : ValidationError("document '" + doc_id + "': " + field + ": " + detail),
        field(std::move(field)),
        detail(std::move(detail)) {}
  std::string field;
  std::string detail;
};

/// Class label or row index outside its valid range.
struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// NaN/Inf in a loss or gradient, or a failed numerical check.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ndater
