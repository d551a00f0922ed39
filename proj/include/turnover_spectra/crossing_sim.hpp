#pragma once

// Synthetic one-factor data, a trade-netting simulator, and the rho* x N versus
// N sweep with its no-intercept regression.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "turnover_spectra/panel.hpp"

namespace turnover_spectra {

struct SimConfig {
    std::size_t n_alphas = 2;
    std::size_t n_periods = 2;
    std::size_t n_instruments = 1;
    double target_correlation = 0.0;
    std::uint64_t master_seed = 0;
    std::size_t n_paths = 1;

    void validate() const;
};

// Stream key for an independent generator: splitmix64 finalizer over
// (seed, index), so streams do not depend on evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

// x_it = sqrt(rho) f_t + sqrt(1 - rho) e_it with standard normal f and e.
// Series i draws from derive_seed(master_seed, i + 1), the factor from
// derive_seed(master_seed, 0).
TimeSeriesPanel gen_one_factor_panel(const SimConfig& config);

// corr_ij = beta_i beta_j off the diagonal, 1 on it. Loadings must lie in [-1, 1].
Matrix one_factor_correlation(const Vector& loadings);

struct SimResult {
    double gross_traded = 0.0;
    double netted_traded = 0.0;
    double crossing_ratio = 1.0;
    std::vector<double> per_path_ratios;
    double mean = 0.0;
    double std_error = 0.0;
    // Set when gross_traded is zero and the ratio defaulted to 1.
    bool zero_gross = false;
};

// trades is N x K desired dollar trades: gross = sum |d_ik|, netted = sum_k |sum_i d_ik|.
SimResult simulate_crossing(const Matrix& trades);

// One-period trades d_ik = w_i (sqrt(rho) g_k + sqrt(1 - rho) e_ik) with equal
// weights w_i = 1/N; path p draws from derive_seed(master_seed, p). Paths run
// on `threads` workers (0 = hardware concurrency); results do not depend on it.
Matrix gen_one_factor_trades(const SimConfig& config, std::uint64_t path_seed);
SimResult simulate_crossing_paths(const SimConfig& config, std::size_t threads = 1);

// Summation of the values in a fixed tree shape, independent of thread layout.
double pairwise_sum(const double* values, std::size_t count);

struct RegressionResult {
    double slope = 0.0;
    // +inf for an exact fit, NaN when not available (single point).
    double f_statistic = 0.0;
    std::vector<double> residuals;
};

// slope = sum xy / sum x^2; F = (sum yhat^2 / 1) / (RSS / (n - 1)).
RegressionResult no_intercept_regression(const std::vector<double>& x, const std::vector<double>& y);

struct ConditioningOptions {
    EstimationMode mode = EstimationMode::complete_cases;
    std::optional<double> prune_bound;   // unset: no pruning
    bool repair = true;
    std::optional<double> eigen_floor;   // unset: default_eigen_floor(N)
};

using PanelGenerator = std::function<TimeSeriesPanel(std::size_t n_alphas, std::uint64_t seed)>;

PanelGenerator one_factor_generator(double rho, std::size_t n_periods);

struct SweepPoint {
    std::size_t n = 0;
    std::size_t n_effective = 0;  // alphas left after pruning
    double rho_star = 0.0;
    double rho_star_times_n = 0.0;
    std::vector<std::string> warnings;
    std::optional<std::string> error;
};

struct SweepResult {
    std::vector<SweepPoint> points;
    std::vector<std::size_t> grid;
    std::vector<double> rho_star_times_n;  // successful points only, grid order
    double slope_no_intercept = 0.0;
    double f_statistic = 0.0;
    std::vector<double> residuals;
};

// Grid point N uses the panel generator(N, derive_seed(seed, N)). The regression
// runs on (n_effective, rho* x n_effective). Points that fail are kept with
// their error and left out of the regression.
SweepResult sweep_rho_star(const std::vector<std::size_t>& grid, const PanelGenerator& generator,
                           const ConditioningOptions& pipeline, std::uint64_t seed,
                           std::size_t threads = 1);

}  // namespace turnover_spectra
