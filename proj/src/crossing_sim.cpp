#include "turnover_spectra/crossing_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "turnover_spectra/conditioning.hpp"
#include "turnover_spectra/errors.hpp"
#include "turnover_spectra/spectral.hpp"

namespace turnover_spectra {

void SimConfig::validate() const {
    if (n_alphas < 2) throw Error(ErrorCode::domain, "need at least 2 alphas");
    if (n_periods < 2) throw Error(ErrorCode::domain, "need at least 2 periods");
    if (n_instruments < 1) throw Error(ErrorCode::domain, "need at least 1 instrument");
    if (n_paths < 1) throw Error(ErrorCode::domain, "need at least 1 path");
    if (!(target_correlation >= 0.0 && target_correlation <= 1.0)) {
        throw Error(ErrorCode::domain, "target correlation must lie in [0, 1]");
    }
}

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::size_t resolve_threads(std::size_t threads, std::size_t jobs) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    return std::max<std::size_t>(1, std::min(threads, jobs));
}

// Runs job(k) for k in [0, count) on `threads` workers; job k always writes
// only its own slot, so the outcome does not depend on scheduling.
template <typename Job>
void run_indexed(std::size_t count, std::size_t threads, Job&& job) {
    const std::size_t workers = resolve_threads(threads, count);
    if (workers == 1) {
        for (std::size_t k = 0; k < count; ++k) job(k);
        return;
    }
    std::vector<std::exception_ptr> failures(workers);
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t k = w; k < count; k += workers) job(k);
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
        }
    }
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

TimeSeriesPanel gen_one_factor_panel(const SimConfig& config) {
    config.validate();
    const auto n = static_cast<Eigen::Index>(config.n_alphas);
    const auto periods = static_cast<Eigen::Index>(config.n_periods);
    const double common = std::sqrt(config.target_correlation);
    const double idio = std::sqrt(1.0 - config.target_correlation);

    std::normal_distribution<double> normal;
    Vector factor(periods);
    {
        std::mt19937_64 rng(derive_seed(config.master_seed, 0));
        for (Eigen::Index t = 0; t < periods; ++t) factor(t) = normal(rng);
    }
    Matrix values(n, periods);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::mt19937_64 rng(derive_seed(config.master_seed, static_cast<std::uint64_t>(i) + 1));
        normal.reset();
        for (Eigen::Index t = 0; t < periods; ++t) values(i, t) = common * factor(t) + idio * normal(rng);
    }
    std::vector<std::string> ids;
    ids.reserve(config.n_alphas);
    for (std::size_t i = 0; i < config.n_alphas; ++i) ids.push_back("a" + std::to_string(i + 1));
    return TimeSeriesPanel::from_complete(std::move(ids), std::move(values));
}

Matrix one_factor_correlation(const Vector& loadings) {
    if (!loadings.allFinite() || (loadings.array().abs() > 1.0).any()) {
        throw Error(ErrorCode::domain, "loadings must lie in [-1, 1]");
    }
    Matrix corr = loadings * loadings.transpose();
    corr.diagonal().setOnes();
    return corr;
}

SimResult simulate_crossing(const Matrix& trades) {
    if (!trades.allFinite()) throw Error(ErrorCode::invalid_matrix, "trades must be finite");
    SimResult out;
    for (Eigen::Index k = 0; k < trades.cols(); ++k) {
        double column_gross = 0.0;
        double column_net = 0.0;
        for (Eigen::Index i = 0; i < trades.rows(); ++i) {
            column_gross += std::abs(trades(i, k));
            column_net += trades(i, k);
        }
        out.gross_traded += column_gross;
        out.netted_traded += std::abs(column_net);
    }
    if (out.gross_traded > 0.0) {
        out.crossing_ratio = out.netted_traded / out.gross_traded;
    } else {
        out.crossing_ratio = 1.0;
        out.zero_gross = true;
    }
    out.per_path_ratios = {out.crossing_ratio};
    out.mean = out.crossing_ratio;
    out.std_error = 0.0;
    return out;
}

Matrix gen_one_factor_trades(const SimConfig& config, std::uint64_t path_seed) {
    config.validate();
    const auto n = static_cast<Eigen::Index>(config.n_alphas);
    const auto k = static_cast<Eigen::Index>(config.n_instruments);
    const double weight = 1.0 / static_cast<double>(config.n_alphas);
    const double common = std::sqrt(config.target_correlation);
    const double idio = std::sqrt(1.0 - config.target_correlation);

    std::normal_distribution<double> normal;
    Vector shared(k);
    {
        std::mt19937_64 rng(derive_seed(path_seed, 0));
        for (Eigen::Index j = 0; j < k; ++j) shared(j) = normal(rng);
    }
    Matrix trades(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::mt19937_64 rng(derive_seed(path_seed, static_cast<std::uint64_t>(i) + 1));
        normal.reset();
        for (Eigen::Index j = 0; j < k; ++j) trades(i, j) = weight * (common * shared(j) + idio * normal(rng));
    }
    return trades;
}

double pairwise_sum(const double* values, std::size_t count) {
    if (count <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < count; ++i) s += values[i];
        return s;
    }
    const std::size_t half = count / 2;
    return pairwise_sum(values, half) + pairwise_sum(values + half, count - half);
}

SimResult simulate_crossing_paths(const SimConfig& config, std::size_t threads) {
    config.validate();
    const std::size_t paths = config.n_paths;
    std::vector<double> gross(paths);
    std::vector<double> netted(paths);
    std::vector<double> ratios(paths);
    std::vector<char> zero(paths, 0);

    run_indexed(paths, threads, [&](std::size_t p) {
        const SimResult path = simulate_crossing(gen_one_factor_trades(config, derive_seed(config.master_seed, p)));
        gross[p] = path.gross_traded;
        netted[p] = path.netted_traded;
        ratios[p] = path.crossing_ratio;
        zero[p] = path.zero_gross ? 1 : 0;
    });

    SimResult out;
    out.gross_traded = pairwise_sum(gross.data(), paths);
    out.netted_traded = pairwise_sum(netted.data(), paths);
    out.zero_gross = std::any_of(zero.begin(), zero.end(), [](char z) { return z != 0; });
    out.crossing_ratio = out.gross_traded > 0.0 ? out.netted_traded / out.gross_traded : 1.0;
    out.mean = pairwise_sum(ratios.data(), paths) / static_cast<double>(paths);
    if (paths > 1) {
        std::vector<double> sq(paths);
        for (std::size_t p = 0; p < paths; ++p) sq[p] = (ratios[p] - out.mean) * (ratios[p] - out.mean);
        const double variance = pairwise_sum(sq.data(), paths) / static_cast<double>(paths - 1);
        out.std_error = std::sqrt(variance / static_cast<double>(paths));
    }
    out.per_path_ratios = std::move(ratios);
    return out;
}

RegressionResult no_intercept_regression(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::dimension, "x and y differ in length");
    if (x.size() < 2) throw Error(ErrorCode::dimension, "regression needs at least 2 points");
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    if (!(sxx > 0.0)) throw Error(ErrorCode::undefined_regressor, "all regressor values are zero");

    RegressionResult out;
    out.slope = sxy / sxx;
    double model_ss = 0.0;
    double rss = 0.0;
    out.residuals.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double fitted = out.slope * x[i];
        out.residuals[i] = y[i] - fitted;
        model_ss += fitted * fitted;
        rss += out.residuals[i] * out.residuals[i];
    }
    const double dof = static_cast<double>(x.size() - 1);
    if (rss > 0.0) {
        out.f_statistic = model_ss / (rss / dof);
    } else {
        out.f_statistic = model_ss > 0.0 ? std::numeric_limits<double>::infinity()
                                         : std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

PanelGenerator one_factor_generator(double rho, std::size_t n_periods) {
    return [rho, n_periods](std::size_t n_alphas, std::uint64_t seed) {
        SimConfig config;
        config.n_alphas = n_alphas;
        config.n_periods = n_periods;
        config.target_correlation = rho;
        config.master_seed = seed;
        return gen_one_factor_panel(config);
    };
}

SweepResult sweep_rho_star(const std::vector<std::size_t>& grid, const PanelGenerator& generator,
                           const ConditioningOptions& pipeline, std::uint64_t seed, std::size_t threads) {
    if (grid.empty()) throw Error(ErrorCode::domain, "sweep grid is empty");
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid[k] < 2) throw Error(ErrorCode::domain, "grid values must be at least 2");
        if (k > 0 && grid[k] <= grid[k - 1]) throw Error(ErrorCode::domain, "grid must be strictly increasing");
    }

    SweepResult out;
    out.points.resize(grid.size());
    run_indexed(grid.size(), threads, [&](std::size_t k) {
        SweepPoint& point = out.points[k];
        point.n = grid[k];
        try {
            const TimeSeriesPanel panel = generator(grid[k], derive_seed(seed, grid[k]));
            CorrelationMatrix corr = sample_moments(panel, pipeline.mode).correlation;
            if (pipeline.prune_bound) corr = prune_redundant(corr, *pipeline.prune_bound).pruned;
            if (pipeline.repair) {
                corr = rj_repair(corr, pipeline.eigen_floor.value_or(default_eigen_floor(corr.size())));
            }
            const SignedBasis basis = fix_sign_basis(eigendecompose(corr));
            const FlaggedValue rs = rho_star(basis);
            point.n_effective = corr.size();
            point.rho_star = rs.value;
            point.rho_star_times_n = rs.value * static_cast<double>(point.n_effective);
            for (auto w : rs.warnings) point.warnings.emplace_back(to_string(w));
        } catch (const std::exception& e) {
            point.error = e.what();
        }
    });

    std::vector<double> xs;
    for (const auto& point : out.points) {
        if (point.error) continue;
        out.grid.push_back(point.n);
        xs.push_back(static_cast<double>(point.n_effective));
        out.rho_star_times_n.push_back(point.rho_star_times_n);
    }
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (xs.size() >= 2) {
        RegressionResult fit = no_intercept_regression(xs, out.rho_star_times_n);
        out.slope_no_intercept = fit.slope;
        out.f_statistic = fit.f_statistic;
        out.residuals = std::move(fit.residuals);
    } else if (xs.size() == 1) {
        out.slope_no_intercept = out.rho_star_times_n.front() / xs.front();
        out.f_statistic = nan;
        out.residuals = {0.0};
    } else {
        out.slope_no_intercept = nan;
        out.f_statistic = nan;
    }
    return out;
}

}  // namespace turnover_spectra
