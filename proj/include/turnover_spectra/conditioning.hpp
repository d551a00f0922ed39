#pragma once

// Symmetric eigendecomposition, redundant-alpha pruning, eigenvalue-floor
// repair of non-positive-definite matrices, and portfolio volatility.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "turnover_spectra/panel.hpp"

namespace turnover_spectra {

struct SpectralDecomposition {
    Vector eigenvalues;   // descending
    Matrix eigenvectors;  // column p pairs with eigenvalues[p]
    std::size_t source_dim = 0;
    double trace = 0.0;
    double top_gap = 0.0;  // +inf when N == 1
    double orthonormality_residual = 0.0;

    std::size_t size() const { return source_dim; }
};

struct RepairConfig {
    // Non-positive means "use default_eigen_floor(N)".
    double eigen_floor = 0.0;
    double redundancy_bound = 0.9;
    // Non-positive means "use default_degeneracy_tolerance(N)".
    double degeneracy_tolerance = 0.0;

    void validate() const;
};

// 1e-8 * N: lifts rounding-distorted zeros without moving large eigenvalues.
double default_eigen_floor(std::size_t n);
// 1e-10 * N, the top-gap threshold below which the top eigenvalue is degenerate.
double default_degeneracy_tolerance(std::size_t n);

// Symmetrizes by averaging after checking the asymmetry is within 1e-10 of the
// largest entry. Each eigenvector is signed so its largest-magnitude component
// (first one on ties) is positive; equal eigenvalues keep solver order.
SpectralDecomposition eigendecompose(const Matrix& matrix);
inline SpectralDecomposition eigendecompose(const CorrelationMatrix& corr) {
    return eigendecompose(corr.entries);
}
inline SpectralDecomposition eigendecompose(const CovarianceMatrix& cov) {
    return eigendecompose(cov.entries);
}

Matrix reconstruct(const SpectralDecomposition& decomp);

// min eigenvalue > tol -> verified_pd; < -tol -> verified_not_psd; otherwise
// unverified (singular to rounding). tol defaults to 8 N eps max(1, |lambda_max|).
PsdStatus classify_psd(const Matrix& matrix, std::optional<double> tolerance = std::nullopt);

struct PruneResult {
    std::vector<std::size_t> kept_indices;
    CorrelationMatrix pruned;
};

// Greedy ascending-index scan: i is kept unless some already kept k has
// |corr[k][i]| > bound.
PruneResult prune_redundant(const CorrelationMatrix& corr, double bound);

// Floors eigenvalues at `floor`, then rescales rows/columns so the diagonal of
// the input is preserved. Returns the raw product; the typed overloads below
// additionally pin the diagonal to its exact input value.
Matrix rj_repair(const Matrix& matrix, double floor);
CorrelationMatrix rj_repair(const CorrelationMatrix& corr, double floor);
CovarianceMatrix rj_repair(const CovarianceMatrix& cov, double floor);

// R = investment * sqrt(w' C w), evaluated in the eigenbasis of C.
double portfolio_volatility(const CovarianceMatrix& cov, const Vector& weights, double investment);
double portfolio_volatility(const Matrix& cov, const Vector& weights, double investment);

struct DegenerateDirection {
    std::size_t index;  // column of the decomposition
    double eigenvalue;
    double combination_variance;  // sample variance of sum_i V_i alpha_i
};

// Directions whose eigenvalue is at most `tolerance`, with the sample variance
// of the corresponding alpha combination over the complete rows of the panel.
std::vector<DegenerateDirection> degenerate_directions(const SpectralDecomposition& decomp,
                                                       const TimeSeriesPanel& panel,
                                                       double tolerance);

// Square CSV with a header of ids (no row labels).
Matrix load_matrix(std::istream& source, std::vector<std::string>* ids = nullptr);
Matrix load_matrix_file(const std::string& path, std::vector<std::string>* ids = nullptr);
void write_matrix(std::ostream& out, const Matrix& matrix, const std::vector<std::string>& ids);

}  // namespace turnover_spectra
