#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace turnover_spectra {

enum class ErrorCode {
    io,
    parse,
    rejected_series,
    degenerate_series,
    coverage,
    collinear_factors,
    invalid_matrix,
    invalid_diagonal,
    ill_defined_volatility,
    dimension,
    not_calibratable,
    undefined,
    domain,
    undefined_regressor,
};

const char* to_string(ErrorCode code);

// Base of every error raised by the library. The code lets callers (the CLI in
// particular) map failures onto exit statuses without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    // True for failures caused by malformed input text rather than by the
    // numbers themselves.
    bool is_input_error() const noexcept {
        return code_ == ErrorCode::io || code_ == ErrorCode::parse || code_ == ErrorCode::rejected_series;
    }

private:
    ErrorCode code_;
};

// Row and column are 1-based positions in the source text (row 1 is the header).
class ParseError : public Error {
public:
    ParseError(std::size_t row, std::size_t column, const std::string& what);

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class RejectedSeriesError : public Error {
public:
    explicit RejectedSeriesError(std::vector<std::string> ids);

    const std::vector<std::string>& ids() const noexcept { return ids_; }

private:
    std::vector<std::string> ids_;
};

}  // namespace turnover_spectra
