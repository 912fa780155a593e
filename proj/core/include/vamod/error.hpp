#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vamod {

enum class ErrorCode {
  // data / validation
  DanglingSchoolRef,
  DuplicateId,
  OutOfRangeField,
  EmptyInput,
  InvalidKs2,
  UnknownSpec,
  LengthMismatch,
  NoPupils,
  SingleCategory,
  UnknownCharacteristic,
  InvalidConfig,
  Infeasible,
  SchemaMismatch,
  BadToken,
  BadNumber,
  IoFailure,
  // numerical
  RankDeficient,
  TooFewRows,
  SingleCluster,
  SingularSubmatrix,
  UnknownLabel,
  ZeroVariance,
  TooFewSchools,
  DegenerateWithin,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// True for failures of the numerical core (rank deficiency, singular
/// covariance, degenerate variance components). The CLI maps these to exit 3.
bool is_numerical(ErrorCode code) noexcept;

/// Which input list a record-level error refers to.
enum class RecordList { none, pupils, schools };

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> row = std::nullopt, RecordList list = RecordList::none);

  ErrorCode code() const noexcept { return code_; }
  /// 1-based input row for ingestion errors, 0-based row index for design
  /// errors, unset otherwise.
  std::optional<std::size_t> row() const noexcept { return row_; }
  RecordList list() const noexcept { return list_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> row_;
  RecordList list_;
};

}  // namespace vamod
