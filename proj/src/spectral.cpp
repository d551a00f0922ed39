#include "turnover_spectra/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "turnover_spectra/errors.hpp"

namespace turnover_spectra {

const char* to_string(Warning warning) {
    switch (warning) {
        case Warning::top_degenerate: return "top-eigenvalue-degenerate";
        case Warning::zero_first_component: return "zero-first-eigenvector-component";
        case Warning::rho_star_zero: return "rho-star-zero";
        case Warning::not_calibratable: return "not-calibratable";
    }
    return "unknown";
}

namespace {

void add_warning(std::vector<Warning>& warnings, Warning w) {
    if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
}

void require_turnovers(const SignedBasis& basis, const Vector& weighted_turnovers) {
    if (static_cast<std::size_t>(weighted_turnovers.size()) != basis.size()) {
        throw Error(ErrorCode::dimension, "expected " + std::to_string(basis.size()) + " weighted turnovers, got " +
                                              std::to_string(weighted_turnovers.size()));
    }
    if (!weighted_turnovers.allFinite() || (weighted_turnovers.array() < 0.0).any()) {
        throw Error(ErrorCode::domain, "weighted turnovers must be finite and nonnegative");
    }
}

double sqrt_n(const SignedBasis& basis) { return std::sqrt(static_cast<double>(basis.size())); }

std::vector<Warning> first_component_warnings(const SignedBasis& basis) {
    std::vector<Warning> warnings;
    if (basis.top_degenerate) warnings.push_back(Warning::top_degenerate);
    if ((basis.first_eigenvector().array() == 0.0).any()) warnings.push_back(Warning::zero_first_component);
    return warnings;
}

}  // namespace

SignedBasis fix_sign_basis(const SpectralDecomposition& decomp, double degeneracy_tolerance) {
    const double tol = degeneracy_tolerance > 0.0 ? degeneracy_tolerance : default_degeneracy_tolerance(decomp.size());
    SignedBasis basis;
    basis.decomposition = decomp;
    const auto n = static_cast<Eigen::Index>(decomp.size());
    basis.signs.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) basis.signs(i) = decomp.eigenvectors(i, 0) < 0.0 ? -1.0 : 1.0;
    basis.decomposition.eigenvectors = basis.signs.asDiagonal() * decomp.eigenvectors;
    basis.top_degenerate = decomp.top_gap < tol;
    basis.degeneracy_tolerance = tol;
    return basis;
}

Matrix reflect(const Matrix& matrix, const Vector& signs) {
    if (signs.size() != matrix.rows() || matrix.rows() != matrix.cols()) {
        throw Error(ErrorCode::dimension, "sign vector does not match matrix size");
    }
    return signs.asDiagonal() * matrix * signs.asDiagonal();
}

CorrelationMatrix reflect(const CorrelationMatrix& corr, const Vector& signs) {
    CorrelationMatrix out = corr;
    out.entries = reflect(corr.entries, signs);
    return out;
}

void TurnoverInputs::validate() const {
    const Eigen::Index n = individual_turnovers.size();
    if (n == 0 || weights.size() != n) throw Error(ErrorCode::dimension, "turnovers and weights must have equal nonzero length");
    if (alphas_now.size() != 0 && alphas_now.size() != n) throw Error(ErrorCode::dimension, "alphas length mismatch");
    if (!individual_turnovers.allFinite() || (individual_turnovers.array() <= 0.0).any()) {
        throw Error(ErrorCode::domain, "individual turnovers must be positive");
    }
    if (!weights.allFinite() || std::abs(weights.cwiseAbs().sum() - 1.0) > 1e-10) {
        throw Error(ErrorCode::domain, "weights must satisfy sum |w_i| = 1");
    }
    if (!std::isfinite(investment) || !std::isfinite(linear_cost_rate) || linear_cost_rate < 0.0) {
        throw Error(ErrorCode::domain, "investment must be finite and the cost rate nonnegative");
    }
}

Vector TurnoverInputs::weighted_turnovers() const {
    validate();
    return individual_turnovers.cwiseProduct(weights.cwiseAbs());
}

TurnoverInputs TurnoverInputs::equal_weights(std::size_t n, double tau) {
    TurnoverInputs inputs;
    const auto size = static_cast<Eigen::Index>(n);
    inputs.individual_turnovers = Vector::Constant(size, tau);
    inputs.weights = Vector::Constant(size, 1.0 / static_cast<double>(n));
    return inputs;
}

Vector spectral_turnover_terms(const SignedBasis& basis, const Vector& weighted_turnovers) {
    require_turnovers(basis, weighted_turnovers);
    const auto& d = basis.decomposition;
    const Vector scaled = d.eigenvalues.cwiseProduct(d.eigenvectors.transpose() * weighted_turnovers);
    const double tol =
        basis.degeneracy_tolerance > 0.0 ? basis.degeneracy_tolerance : default_degeneracy_tolerance(basis.size());
    Vector terms = Vector::Zero(scaled.size());
    for (Eigen::Index start = 0; start < scaled.size();) {
        Eigen::Index end = start + 1;
        while (end < scaled.size() && d.eigenvalues(start) - d.eigenvalues(end) < tol) ++end;
        terms(start) = end - start == 1 ? std::abs(scaled(start)) : scaled.segment(start, end - start).norm();
        start = end;
    }
    return terms / sqrt_n(basis);
}

double spectral_turnover_full(const SignedBasis& basis, const Vector& weighted_turnovers) {
    return spectral_turnover_terms(basis, weighted_turnovers).sum();
}

FlaggedValue spectral_turnover_large_n(const SignedBasis& basis, const Vector& weighted_turnovers) {
    require_turnovers(basis, weighted_turnovers);
    FlaggedValue out;
    const double psi1 = basis.decomposition.eigenvalues(0);
    out.value = psi1 / sqrt_n(basis) * basis.first_eigenvector().dot(weighted_turnovers);
    out.warnings = first_component_warnings(basis);
    return out;
}

FlaggedValue rho_star(const SignedBasis& basis) {
    FlaggedValue out;
    const double n = static_cast<double>(basis.size());
    const double psi1 = basis.decomposition.eigenvalues(0);
    out.value = psi1 / (n * std::sqrt(n)) * basis.first_eigenvector().sum();
    out.warnings = first_component_warnings(basis);
    return out;
}

RhoPrime rho_prime(const Matrix& corr) {
    const Eigen::Index n = corr.rows();
    if (n != corr.cols() || n == 0) throw Error(ErrorCode::dimension, "correlation matrix must be square and nonempty");
    if (n == 1) throw Error(ErrorCode::undefined, "mean correlation is undefined for a single alpha");
    const double nd = static_cast<double>(n);
    RhoPrime out;
    out.psi_star = corr.sum() / nd;
    out.rho_prime = out.psi_star / nd;
    out.rho_bar = (out.psi_star - 1.0) / (nd - 1.0);
    return out;
}

RhoPrime rho_prime(const CorrelationMatrix& corr) { return rho_prime(corr.entries); }

double row_sum_objective(const Matrix& corr, double psi) {
    return (corr.rowwise().sum().array() - psi).square().sum();
}

FactoredRelation rho_star_factored(const SignedBasis& basis, const Matrix& corr) {
    if (static_cast<std::size_t>(corr.rows()) != basis.size()) {
        throw Error(ErrorCode::dimension, "correlation matrix and basis sizes differ");
    }
    const auto& d = basis.decomposition;
    const double n = static_cast<double>(basis.size());
    const RhoPrime rp = rho_prime(reflect(corr, basis.signs));
    const FlaggedValue rs = rho_star(basis);

    FactoredRelation out;
    out.rho_star = rs.value;
    out.rho_one = d.eigenvalues(0) / n;
    out.rho_prime = rp.rho_prime;
    out.factored_value = std::sqrt(out.rho_one * out.rho_prime);
    out.warnings = rs.warnings;
    const double diff = std::abs(out.rho_star - out.factored_value);
    if (out.rho_star == 0.0) {
        out.gap = diff;
        out.gap_is_absolute = true;
        add_warning(out.warnings, Warning::rho_star_zero);
    } else {
        out.gap = diff / out.rho_star;
    }
    const Vector column_sums = d.eigenvectors.colwise().sum().transpose();
    const double spectral = column_sums.cwiseAbs2().dot(d.eigenvalues) / (n * n);
    out.identity_residual = std::abs(out.rho_prime - spectral);
    return out;
}

FactoredRelation rho_star_factored(const SignedBasis& basis, const CorrelationMatrix& corr) {
    return rho_star_factored(basis, corr.entries);
}

ExactCalibration calibrate_exact_B(const SignedBasis& basis) {
    const auto n = static_cast<Eigen::Index>(basis.size());
    ExactCalibration out;
    out.abs_eigvec_matrix = basis.decomposition.eigenvectors.cwiseAbs();
    const Eigen::BDCSVD<Matrix> svd(out.abs_eigvec_matrix);
    const Vector& sv = svd.singularValues();
    const double smallest = sv(n - 1);
    out.condition_estimate = smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
    if (!(out.condition_estimate <= kMaxCalibrationCondition)) {
        throw Error(ErrorCode::not_calibratable,
                    "|eigenvector| matrix is singular or ill-conditioned (condition estimate " +
                        std::to_string(out.condition_estimate) + ")");
    }
    out.coefficients = out.abs_eigvec_matrix.partialPivLu().solve(Vector::Ones(n));
    out.has_negative = (out.coefficients.array() < 0.0).any();
    return out;
}

double exact_b_turnover(const ExactCalibration& calibration, const SignedBasis& basis,
                        const Vector& weighted_turnovers) {
    require_turnovers(basis, weighted_turnovers);
    if (calibration.coefficients.size() != weighted_turnovers.size()) {
        throw Error(ErrorCode::dimension, "calibration does not match the basis size");
    }
    const Vector projected = basis.decomposition.eigenvectors.transpose() * weighted_turnovers;
    return calibration.coefficients.dot(projected.cwiseAbs());
}

double turnover_t2(double rho_star_value, const Vector& weighted_turnovers) {
    if (!(rho_star_value >= 0.0)) throw Error(ErrorCode::domain, "rho* must be nonnegative");
    return rho_star_value * weighted_turnovers.sum();
}

double naive_turnover(const Vector& weighted_turnovers) { return weighted_turnovers.sum(); }

double naive_turnover(const TurnoverInputs& inputs) { return naive_turnover(inputs.weighted_turnovers()); }

double pnl_with_costs(const TurnoverInputs& inputs, double turnover) {
    inputs.validate();
    if (!(turnover >= 0.0)) throw Error(ErrorCode::domain, "turnover must be nonnegative");
    if (inputs.alphas_now.size() != inputs.weights.size()) {
        throw Error(ErrorCode::dimension, "P&L needs one alpha per weight");
    }
    const double traded = inputs.investment * turnover;
    return inputs.investment * inputs.alphas_now.dot(inputs.weights) - inputs.linear_cost_rate * traded;
}

TurnoverReport turnover_report(const CorrelationMatrix& corr, const SignedBasis& basis,
                               const Vector& weighted_turnovers) {
    TurnoverReport report;
    report.n = basis.size();
    report.signs = basis.signs;
    report.top_gap = basis.decomposition.top_gap;

    const Vector terms = spectral_turnover_terms(basis, weighted_turnovers);
    report.t_naive = naive_turnover(weighted_turnovers);
    report.t_full = spectral_turnover_full(basis, weighted_turnovers);
    const double term_sum = terms.sum();
    report.p1_share = term_sum > 0.0 ? terms(0) / term_sum : std::numeric_limits<double>::quiet_NaN();

    const FlaggedValue large_n = spectral_turnover_large_n(basis, weighted_turnovers);
    report.t_large_n = large_n.value;
    const FactoredRelation factored = rho_star_factored(basis, corr);
    report.rho_star = factored.rho_star;
    report.t_t2 = turnover_t2(report.rho_star, weighted_turnovers);

    const RhoPrime rp = rho_prime(reflect(corr.entries, basis.signs));
    report.rho_prime = rp.rho_prime;
    report.psi_star = rp.psi_star;
    report.rho_bar = rp.rho_bar;
    report.rho_one = factored.rho_one;
    report.rho_star_factored = factored.factored_value;
    report.factored_gap = factored.gap;
    report.factored_gap_is_absolute = factored.gap_is_absolute;
    report.rho_max = std::max(report.rho_star, report.rho_prime);

    for (auto w : large_n.warnings) add_warning(report.warnings, w);
    for (auto w : factored.warnings) add_warning(report.warnings, w);
    return report;
}

TurnoverReport turnover_report(const CorrelationMatrix& corr, const Vector& weighted_turnovers,
                               double degeneracy_tolerance) {
    const SignedBasis basis = fix_sign_basis(eigendecompose(corr), degeneracy_tolerance);
    return turnover_report(corr, basis, weighted_turnovers);
}

}  // namespace turnover_spectra
