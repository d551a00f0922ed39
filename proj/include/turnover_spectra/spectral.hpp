#pragma once

// Spectral turnover model: sign-basis fixing, the full and large-N turnover
// estimates, rho*, rho', the factored relation, exact-B calibration, and the
// plain turnover / P&L accounting they are compared against.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "turnover_spectra/conditioning.hpp"

namespace turnover_spectra {

enum class Warning {
    top_degenerate,          // top eigenvalue not isolated; rho* basis arbitrary
    zero_first_component,    // some first-eigenvector components are exactly zero
    rho_star_zero,           // factored gap reported as absolute
    not_calibratable,        // exact-B system singular or ill-conditioned
};

const char* to_string(Warning warning);

struct FlaggedValue {
    double value = 0.0;
    std::vector<Warning> warnings;
};

// Decomposition re-expressed in the reflected alpha basis eta_i * alpha_i in
// which every component of the first eigenvector is nonnegative.
struct SignedBasis {
    Vector signs;  // entries +1 / -1
    SpectralDecomposition decomposition;
    bool top_degenerate = false;
    // Eigenvalues closer than this are treated as one eigenspace.
    double degeneracy_tolerance = 0.0;

    std::size_t size() const { return decomposition.size(); }
    Eigen::Ref<const Vector> first_eigenvector() const { return decomposition.eigenvectors.col(0); }
};

// eta_i = -1 exactly where the first-eigenvector component is negative. Every
// column's row i is multiplied by eta_i. A non-positive tolerance selects
// default_degeneracy_tolerance(N).
SignedBasis fix_sign_basis(const SpectralDecomposition& decomp, double degeneracy_tolerance = 0.0);

// eta_i eta_j corr_ij: the correlation matrix seen from the reflected basis.
CorrelationMatrix reflect(const CorrelationMatrix& corr, const Vector& signs);
Matrix reflect(const Matrix& matrix, const Vector& signs);

struct TurnoverInputs {
    Vector individual_turnovers;  // tau_i > 0
    Vector weights;               // sum |w_i| = 1
    double investment = 1.0;
    double linear_cost_rate = 0.0;
    Vector alphas_now;            // may be empty when P&L is not needed

    void validate() const;
    // T_i = tau_i |w_i|
    Vector weighted_turnovers() const;

    static TurnoverInputs equal_weights(std::size_t n, double tau);
};

// T = (1/sqrt(N)) sum_p psi_p |sum_i V_ip T_i|. Within a degenerate eigenspace
// the basis is arbitrary, so its members contribute the basis-independent
// norm sqrt(sum_p (psi_p sum_i V_ip T_i)^2) instead.
double spectral_turnover_full(const SignedBasis& basis, const Vector& weighted_turnovers);

// The p-th term psi_p |T~_p| / sqrt(N) of the full model, for every p. A
// degenerate eigenspace reports its combined term at its first index and zero
// for the other members.
Vector spectral_turnover_terms(const SignedBasis& basis, const Vector& weighted_turnovers);

// T ~ psi_1 / sqrt(N) * sum_i V_i1 T_i
FlaggedValue spectral_turnover_large_n(const SignedBasis& basis, const Vector& weighted_turnovers);

// rho* = psi_1 / (N sqrt(N)) * sum_i V_i1
FlaggedValue rho_star(const SignedBasis& basis);

struct RhoPrime {
    double psi_star;   // mean row sum
    double rho_prime;  // psi_star / N
    double rho_bar;    // mean off-diagonal correlation
};

RhoPrime rho_prime(const CorrelationMatrix& corr);
RhoPrime rho_prime(const Matrix& corr);

// sum_i (sum_j corr_ij - psi)^2, the objective psi_star minimizes.
double row_sum_objective(const Matrix& corr, double psi);

struct FactoredRelation {
    double rho_star;
    double rho_one;         // psi_1 / N
    double rho_prime;       // from the corr reflected into the basis
    double factored_value;  // sqrt(rho_one * rho_prime)
    double gap;             // relative unless gap_is_absolute
    bool gap_is_absolute = false;
    // |rho' - (1/N^2) sum_p (sum_i V_ip)^2 psi_p|, zero up to rounding.
    double identity_residual;
    std::vector<Warning> warnings;
};

// `corr` is given in the original alpha basis; it is reflected by basis.signs
// before rho' is taken so both sides refer to the same matrix.
FactoredRelation rho_star_factored(const SignedBasis& basis, const CorrelationMatrix& corr);
FactoredRelation rho_star_factored(const SignedBasis& basis, const Matrix& corr);

// Condition numbers above this make the exact-B system not calibratable.
inline constexpr double kMaxCalibrationCondition = 1e12;

struct ExactCalibration {
    Vector coefficients;        // B_p
    Matrix abs_eigvec_matrix;   // A_ij = |V_ij|
    double condition_estimate;  // 2-norm condition number of A
    bool has_negative;
};

// Solves A B = 1 so that single-alpha inputs return their own turnover.
// Throws ErrorCode::not_calibratable when cond(A) > kMaxCalibrationCondition.
ExactCalibration calibrate_exact_B(const SignedBasis& basis);

// sum_p B_p |T~_p|
double exact_b_turnover(const ExactCalibration& calibration, const SignedBasis& basis,
                        const Vector& weighted_turnovers);

// T = rho* sum_i T_i
double turnover_t2(double rho_star, const Vector& weighted_turnovers);

// T = sum_i tau_i |w_i|, no crossing.
double naive_turnover(const TurnoverInputs& inputs);
double naive_turnover(const Vector& weighted_turnovers);

// P = I sum_i alpha_i w_i - L D with D = I * turnover.
double pnl_with_costs(const TurnoverInputs& inputs, double turnover);

struct TurnoverReport {
    std::size_t n = 0;
    double t_naive = 0.0;
    double t_full = 0.0;
    double t_large_n = 0.0;
    double t_t2 = 0.0;
    double rho_star = 0.0;
    double rho_prime = 0.0;
    double psi_star = 0.0;
    double rho_bar = 0.0;
    double rho_one = 0.0;
    double rho_star_factored = 0.0;
    double factored_gap = 0.0;
    bool factored_gap_is_absolute = false;
    double rho_max = 0.0;  // max(rho*, rho')
    double p1_share = 0.0;
    double top_gap = 0.0;
    Vector signs;
    std::vector<Warning> warnings;
};

// Runs the whole model on a correlation matrix. When `basis` is supplied it
// must come from the same matrix.
TurnoverReport turnover_report(const CorrelationMatrix& corr, const Vector& weighted_turnovers,
                               double degeneracy_tolerance = 0.0);
TurnoverReport turnover_report(const CorrelationMatrix& corr, const SignedBasis& basis,
                               const Vector& weighted_turnovers);

}  // namespace turnover_spectra
