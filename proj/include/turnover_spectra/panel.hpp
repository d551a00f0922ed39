#pragma once

// Alpha-stream panels, sample moments with missing-data policies, and factor
// residualization.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace turnover_spectra {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class EstimationMode { complete_cases, pairwise_complete };

enum class PsdStatus { verified_pd, verified_not_psd, unverified };

const char* to_string(EstimationMode mode);
const char* to_string(PsdStatus status);
EstimationMode parse_estimation_mode(std::string_view text);

// N series over M+1 timestamps. Column 0 is the most recent timestamp t0.
// Unobserved cells hold NaN in `values` and false in `observed`.
struct TimeSeriesPanel {
    std::vector<std::string> ids;
    Matrix values;  // N x (M+1)
    Mask observed;  // N x (M+1)

    std::size_t series_count() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t timestamp_count() const { return static_cast<std::size_t>(values.cols()); }
    std::size_t observed_count(std::size_t series) const;

    // Builds a fully observed panel; values is N x (M+1).
    static TimeSeriesPanel from_complete(std::vector<std::string> ids, Matrix values);
};

struct LoadOptions {
    // Set when the file lists the oldest timestamp first.
    bool oldest_first = false;
    // Factor panels may legitimately hold a single series.
    std::size_t min_series = 2;
};

TimeSeriesPanel load_panel(std::istream& source, const LoadOptions& options = {});
TimeSeriesPanel load_panel_file(const std::string& path, const LoadOptions& options = {});

// Writes the panel in the same layout load_panel reads (most recent row first).
void write_panel(std::ostream& out, const TimeSeriesPanel& panel);

struct CovarianceMatrix {
    std::vector<std::string> ids;
    Matrix entries;
    Vector vols;
    Eigen::MatrixXi pairwise_counts;
    EstimationMode estimation_mode = EstimationMode::complete_cases;

    std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }
};

struct CorrelationMatrix {
    std::vector<std::string> ids;
    Matrix entries;
    EstimationMode estimation_mode = EstimationMode::complete_cases;
    PsdStatus psd_status = PsdStatus::unverified;

    std::size_t size() const { return static_cast<std::size_t>(entries.rows()); }

    // Validates unit diagonal, symmetry and entry range. Ids default to 1..N.
    static CorrelationMatrix from_entries(Matrix entries, std::vector<std::string> ids = {});
};

struct SampleMoments {
    CovarianceMatrix covariance;
    CorrelationMatrix correlation;
};

// Per pair the correlation is the Pearson coefficient over the rows where both
// series are observed (n - 1 divisor), vols use every observed row of a series,
// and covariance entries are vol_i * vol_j * corr_ij. Without missing data both
// modes run the same arithmetic and agree bit for bit.
SampleMoments sample_moments(const TimeSeriesPanel& panel, EstimationMode mode);

enum class InterceptPolicy {
    none,    // regress on the factors only
    fit,     // fit an intercept, residuals exclude it
    retain,  // fit an intercept and add it back to the residuals
};

// Regresses every series on the factor panel over the rows where the series
// and all factors are observed. Cells outside those rows become unobserved.
TimeSeriesPanel ols_residualize(const TimeSeriesPanel& panel, const TimeSeriesPanel& factors,
                                InterceptPolicy intercept = InterceptPolicy::fit);

}  // namespace turnover_spectra
