#include "turnover_spectra/conditioning.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>

#include "csv.hpp"
#include "turnover_spectra/errors.hpp"

namespace turnover_spectra {

void RepairConfig::validate() const {
    if (!(redundancy_bound > 0.0 && redundancy_bound < 1.0)) {
        throw Error(ErrorCode::domain, "redundancy bound must lie in (0, 1)");
    }
    if (!std::isfinite(eigen_floor) || !std::isfinite(degeneracy_tolerance)) {
        throw Error(ErrorCode::domain, "repair tolerances must be finite");
    }
}

double default_eigen_floor(std::size_t n) { return 1e-8 * static_cast<double>(n); }

double default_degeneracy_tolerance(std::size_t n) { return 1e-10 * static_cast<double>(n); }

namespace {

void require_square_finite(const Matrix& m) {
    if (m.rows() == 0 || m.rows() != m.cols()) {
        throw Error(ErrorCode::dimension, "matrix must be square and nonempty, got " + std::to_string(m.rows()) +
                                              "x" + std::to_string(m.cols()));
    }
    if (!m.allFinite()) throw Error(ErrorCode::invalid_matrix, "matrix has non-finite entries");
}

Matrix symmetrized(const Matrix& m) {
    require_square_finite(m);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asymmetry = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asymmetry > 1e-10 * scale) {
        throw Error(ErrorCode::invalid_matrix, "matrix is not symmetric (max asymmetry " + std::to_string(asymmetry) + ")");
    }
    return 0.5 * (m + m.transpose());
}

double default_psd_tolerance(const Vector& eigenvalues) {
    const double scale = std::max(1.0, eigenvalues.cwiseAbs().maxCoeff());
    return 8.0 * static_cast<double>(eigenvalues.size()) * std::numeric_limits<double>::epsilon() * scale;
}

}  // namespace

SpectralDecomposition eigendecompose(const Matrix& matrix) {
    const Matrix sym = symmetrized(matrix);
    const Eigen::Index n = sym.rows();
    const Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::invalid_matrix, "eigensolver did not converge");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const Vector& values = solver.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values(a) > values(b); });

    SpectralDecomposition out;
    out.source_dim = static_cast<std::size_t>(n);
    out.trace = sym.trace();
    out.eigenvalues.resize(n);
    out.eigenvectors.resize(n, n);
    for (Eigen::Index p = 0; p < n; ++p) {
        const Eigen::Index src = order[static_cast<std::size_t>(p)];
        out.eigenvalues(p) = values(src);
        Vector v = solver.eigenvectors().col(src);
        Eigen::Index pivot = 0;
        for (Eigen::Index i = 1; i < n; ++i) {
            if (std::abs(v(i)) > std::abs(v(pivot))) pivot = i;
        }
        if (v(pivot) < 0.0) v = -v;
        out.eigenvectors.col(p) = v;
    }
    out.top_gap = n > 1 ? out.eigenvalues(0) - out.eigenvalues(1) : std::numeric_limits<double>::infinity();
    out.orthonormality_residual =
        (out.eigenvectors.transpose() * out.eigenvectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff();
    return out;
}

Matrix reconstruct(const SpectralDecomposition& decomp) {
    return decomp.eigenvectors * decomp.eigenvalues.asDiagonal() * decomp.eigenvectors.transpose();
}

PsdStatus classify_psd(const Matrix& matrix, std::optional<double> tolerance) {
    const Matrix sym = symmetrized(matrix);
    const Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
    const Vector& values = solver.eigenvalues();
    const double tol = tolerance.value_or(default_psd_tolerance(values));
    const double min_value = values.minCoeff();
    if (min_value > tol) return PsdStatus::verified_pd;
    if (min_value < -tol) return PsdStatus::verified_not_psd;
    return PsdStatus::unverified;
}

PruneResult prune_redundant(const CorrelationMatrix& corr, double bound) {
    if (!(bound > 0.0 && bound < 1.0)) throw Error(ErrorCode::domain, "prune bound must lie in (0, 1)");
    const Eigen::Index n = corr.entries.rows();
    PruneResult out;
    for (Eigen::Index i = 0; i < n; ++i) {
        const bool redundant = std::any_of(out.kept_indices.begin(), out.kept_indices.end(), [&](std::size_t k) {
            return std::abs(corr.entries(static_cast<Eigen::Index>(k), i)) > bound;
        });
        if (!redundant) out.kept_indices.push_back(static_cast<std::size_t>(i));
    }
    std::vector<Eigen::Index> idx(out.kept_indices.begin(), out.kept_indices.end());
    out.pruned.entries = corr.entries(idx, idx);
    out.pruned.estimation_mode = corr.estimation_mode;
    out.pruned.psd_status = out.kept_indices.size() == static_cast<std::size_t>(n) ? corr.psd_status : PsdStatus::unverified;
    for (auto k : out.kept_indices) {
        if (k < corr.ids.size()) out.pruned.ids.push_back(corr.ids[k]);
    }
    return out;
}

Matrix rj_repair(const Matrix& matrix, double floor) {
    if (!(floor > 0.0) || !std::isfinite(floor)) throw Error(ErrorCode::domain, "eigenvalue floor must be positive");
    require_square_finite(matrix);
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        if (!(matrix(i, i) > 0.0)) {
            throw Error(ErrorCode::invalid_diagonal, "diagonal entry " + std::to_string(i + 1) + " is not positive");
        }
    }
    const SpectralDecomposition decomp = eigendecompose(matrix);
    const Vector floored = decomp.eigenvalues.cwiseMax(floor);
    const Matrix& u = decomp.eigenvectors;

    const Vector denom = u.cwiseAbs2() * floored;
    assert((denom.array() > 0.0).all());
    Vector sqrt_z(matrix.rows());
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) sqrt_z(i) = std::sqrt(matrix(i, i) / denom(i));

    const Matrix factor = sqrt_z.asDiagonal() * u * floored.cwiseSqrt().asDiagonal();
    const Matrix repaired = factor * factor.transpose();
    return 0.5 * (repaired + repaired.transpose());
}

CorrelationMatrix rj_repair(const CorrelationMatrix& corr, double floor) {
    Matrix repaired = rj_repair(corr.entries, floor);
    for (Eigen::Index i = 0; i < repaired.rows(); ++i) {
        for (Eigen::Index j = 0; j < repaired.cols(); ++j) {
            repaired(i, j) = i == j ? 1.0 : std::clamp(repaired(i, j), -1.0, 1.0);
        }
    }
    CorrelationMatrix out;
    out.ids = corr.ids;
    out.estimation_mode = corr.estimation_mode;
    out.psd_status = classify_psd(repaired);
    out.entries = std::move(repaired);
    return out;
}

CovarianceMatrix rj_repair(const CovarianceMatrix& cov, double floor) {
    Matrix repaired = rj_repair(cov.entries, floor);
    for (Eigen::Index i = 0; i < repaired.rows(); ++i) repaired(i, i) = cov.entries(i, i);
    CovarianceMatrix out = cov;
    out.entries = std::move(repaired);
    return out;
}

double portfolio_volatility(const Matrix& cov, const Vector& weights, double investment) {
    if (weights.size() != cov.rows()) {
        throw Error(ErrorCode::dimension, "weights length " + std::to_string(weights.size()) +
                                              " does not match matrix size " + std::to_string(cov.rows()));
    }
    const SpectralDecomposition decomp = eigendecompose(cov);
    const double tol = default_psd_tolerance(decomp.eigenvalues);
    if (decomp.eigenvalues.minCoeff() < -tol) {
        throw Error(ErrorCode::ill_defined_volatility,
                    "covariance matrix is not positive semi-definite (min eigenvalue " +
                        std::to_string(decomp.eigenvalues.minCoeff()) + "); apply rj_repair first");
    }
    const Vector rotated = decomp.eigenvectors.transpose() * weights;
    const double quadratic = decomp.eigenvalues.dot(rotated.cwiseAbs2());
    return investment * std::sqrt(std::max(quadratic, 0.0));
}

double portfolio_volatility(const CovarianceMatrix& cov, const Vector& weights, double investment) {
    return portfolio_volatility(cov.entries, weights, investment);
}

std::vector<DegenerateDirection> degenerate_directions(const SpectralDecomposition& decomp,
                                                       const TimeSeriesPanel& panel, double tolerance) {
    if (panel.series_count() != decomp.size()) {
        throw Error(ErrorCode::dimension, "panel and decomposition sizes differ");
    }
    std::vector<Eigen::Index> complete;
    for (Eigen::Index t = 0; t < panel.values.cols(); ++t) {
        if (panel.observed.col(t).all()) complete.push_back(t);
    }
    if (complete.size() < 2) throw Error(ErrorCode::coverage, "fewer than 2 complete rows");
    const Matrix rows = panel.values(Eigen::all, complete);

    std::vector<DegenerateDirection> out;
    for (Eigen::Index p = 0; p < decomp.eigenvalues.size(); ++p) {
        if (decomp.eigenvalues(p) > tolerance) continue;
        const Vector combo = rows.transpose() * decomp.eigenvectors.col(p);
        const double mean = combo.mean();
        const double variance = (combo.array() - mean).square().sum() / static_cast<double>(combo.size() - 1);
        out.push_back({static_cast<std::size_t>(p), decomp.eigenvalues(p), variance});
    }
    return out;
}

Matrix load_matrix(std::istream& source, std::vector<std::string>* ids) {
    const auto lines = csv::read_lines(source);
    if (lines.empty()) throw ParseError(1, 1, "empty input, expected a header of ids");
    auto header = csv::split(lines.front());
    const auto n = static_cast<Eigen::Index>(header.size());
    if (static_cast<Eigen::Index>(lines.size()) - 1 != n) {
        throw ParseError(lines.size(), 1, "expected " + std::to_string(n) + " matrix rows, found " +
                                               std::to_string(lines.size() - 1));
    }
    Matrix m(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto fields = csv::split(lines[static_cast<std::size_t>(r) + 1]);
        if (static_cast<Eigen::Index>(fields.size()) != n) {
            throw ParseError(static_cast<std::size_t>(r) + 2, fields.size(),
                             "expected " + std::to_string(n) + " fields, found " + std::to_string(fields.size()));
        }
        for (Eigen::Index c = 0; c < n; ++c) {
            const auto value = csv::parse_number(fields[static_cast<std::size_t>(c)]);
            if (!value) {
                throw ParseError(static_cast<std::size_t>(r) + 2, static_cast<std::size_t>(c) + 1,
                                 "not a finite number: '" + fields[static_cast<std::size_t>(c)] + "'");
            }
            m(r, c) = *value;
        }
    }
    if (ids) *ids = std::move(header);
    return m;
}

Matrix load_matrix_file(const std::string& path, std::vector<std::string>* ids) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
    return load_matrix(in, ids);
}

void write_matrix(std::ostream& out, const Matrix& matrix, const std::vector<std::string>& ids) {
    for (std::size_t i = 0; i < ids.size(); ++i) out << (i ? "," : "") << ids[i];
    out << '\n';
    for (Eigen::Index r = 0; r < matrix.rows(); ++r) {
        for (Eigen::Index c = 0; c < matrix.cols(); ++c) out << (c ? "," : "") << csv::format_number(matrix(r, c));
        out << '\n';
    }
}

}  // namespace turnover_spectra
