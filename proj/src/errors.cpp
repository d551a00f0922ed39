#include "turnover_spectra/errors.hpp"

#include <utility>

namespace turnover_spectra {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::io: return "io";
        case ErrorCode::parse: return "parse";
        case ErrorCode::rejected_series: return "rejected-series";
        case ErrorCode::degenerate_series: return "degenerate-series";
        case ErrorCode::coverage: return "coverage";
        case ErrorCode::collinear_factors: return "collinear-factors";
        case ErrorCode::invalid_matrix: return "invalid-matrix";
        case ErrorCode::invalid_diagonal: return "invalid-diagonal";
        case ErrorCode::ill_defined_volatility: return "ill-defined-volatility";
        case ErrorCode::dimension: return "dimension";
        case ErrorCode::not_calibratable: return "not-calibratable";
        case ErrorCode::undefined: return "undefined";
        case ErrorCode::domain: return "domain";
        case ErrorCode::undefined_regressor: return "undefined-regressor";
    }
    return "unknown";
}

ParseError::ParseError(std::size_t row, std::size_t column, const std::string& what)
    : Error(ErrorCode::parse,
            "row " + std::to_string(row) + ", column " + std::to_string(column) + ": " + what),
      row_(row),
      column_(column) {}

namespace {

std::string rejected_message(const std::vector<std::string>& ids) {
    std::string msg = "series with fewer than 2 observed values:";
    for (const auto& id : ids) msg += " " + id;
    return msg;
}

}  // namespace

RejectedSeriesError::RejectedSeriesError(std::vector<std::string> ids)
    : Error(ErrorCode::rejected_series, rejected_message(ids)), ids_(std::move(ids)) {}

}  // namespace turnover_spectra
