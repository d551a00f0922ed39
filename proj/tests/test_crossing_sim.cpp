#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "test_util.hpp"
#include "turnover_spectra/crossing_sim.hpp"
#include "turnover_spectra/errors.hpp"
#include "turnover_spectra/spectral.hpp"

using namespace turnover_spectra;
using test_util::error_code;

namespace {

SimConfig paths_config(std::size_t n, double rho, std::size_t paths, std::uint64_t seed) {
    SimConfig c;
    c.n_alphas = n;
    c.n_instruments = 50;
    c.target_correlation = rho;
    c.n_paths = paths;
    c.master_seed = seed;
    return c;
}

double mean_off_diagonal(const Matrix& c) {
    const double n = static_cast<double>(c.rows());
    return (c.sum() - n) / (n * (n - 1.0));
}

}  // namespace

TEST_SUITE("crossing_sim") {
    TEST_CASE("netting examples") {
        Matrix offset(2, 2);
        offset << 1, -0.5, -1, 0.5;
        auto r = simulate_crossing(offset);
        CHECK(r.gross_traded == 3.0);
        CHECK(r.netted_traded == 0.0);
        CHECK(r.crossing_ratio == 0.0);

        r = simulate_crossing(Matrix::Ones(2, 2));
        CHECK(r.gross_traded == 4.0);
        CHECK(r.netted_traded == 4.0);
        CHECK(r.crossing_ratio == 1.0);

        Matrix partial(2, 2);
        partial << 2, 0, -1, 1;
        r = simulate_crossing(partial);
        CHECK(r.gross_traded == 4.0);
        CHECK(r.netted_traded == 2.0);
        CHECK(r.crossing_ratio == 0.5);

        r = simulate_crossing(Matrix::Zero(3, 2));
        CHECK(r.crossing_ratio == 1.0);
        CHECK(r.zero_gross);
        CHECK_FALSE(simulate_crossing(partial).zero_gross);

        Matrix bad = Matrix::Ones(2, 2);
        bad(0, 0) = std::nan("");
        CHECK(error_code([&] { simulate_crossing(bad); }) == ErrorCode::invalid_matrix);
    }

    TEST_CASE("netted never exceeds gross") {
        std::mt19937_64 rng(3);
        std::normal_distribution<double> normal;
        for (int rep = 0; rep < 50; ++rep) {
            Matrix t(5, 7);
            for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = normal(rng);
            const auto r = simulate_crossing(t);
            CHECK(r.netted_traded <= r.gross_traded);
            CHECK(r.crossing_ratio >= 0.0);
            CHECK(r.crossing_ratio <= 1.0);
        }
        // Equality when every instrument's trades share one sign.
        Matrix same(3, 2);
        same << 1, -2, 3, -0.5, 0.25, -1;
        const auto r = simulate_crossing(same);
        CHECK(r.netted_traded == r.gross_traded);
    }

    TEST_CASE("one-factor panel population structure") {
        SimConfig c;
        c.n_alphas = 20;
        c.n_periods = 10001;
        c.target_correlation = 0.0;
        c.master_seed = 42;
        const auto p0 = gen_one_factor_panel(c);
        CHECK(p0.ids.front() == "a1");
        const auto c0 = sample_moments(p0, EstimationMode::complete_cases).correlation.entries;
        const Matrix off0 = c0 - Matrix::Identity(20, 20);
        CHECK(off0.cwiseAbs().maxCoeff() <= 4.0 / std::sqrt(10000.0));

        c.target_correlation = 1.0;
        c.n_periods = 50;
        const auto c1 = sample_moments(gen_one_factor_panel(c), EstimationMode::complete_cases).correlation.entries;
        CHECK((c1.array() - 1.0).abs().maxCoeff() <= 1e-12);

        c.n_alphas = 100;
        c.n_periods = 5001;
        c.target_correlation = 0.5;
        c.master_seed = 7;
        const auto c5 = sample_moments(gen_one_factor_panel(c), EstimationMode::complete_cases).correlation.entries;
        CHECK(std::abs(mean_off_diagonal(c5) - 0.5) <= 0.03);

        c.target_correlation = 1.5;
        CHECK(error_code([&] { gen_one_factor_panel(c); }) == ErrorCode::domain);
        c.target_correlation = -0.1;
        CHECK(error_code([&] { gen_one_factor_panel(c); }) == ErrorCode::domain);
    }

    TEST_CASE("generation is deterministic under the seed") {
        SimConfig c;
        c.n_alphas = 5;
        c.n_periods = 30;
        c.target_correlation = 0.3;
        c.master_seed = 1234;
        const auto a = gen_one_factor_panel(c);
        const auto b = gen_one_factor_panel(c);
        CHECK(a.values == b.values);
        c.master_seed = 1235;
        CHECK(gen_one_factor_panel(c).values != a.values);
        // Adding alphas leaves the existing series unchanged.
        c.master_seed = 1234;
        c.n_alphas = 8;
        CHECK(gen_one_factor_panel(c).values.topRows(5) == a.values);
        CHECK(derive_seed(1, 2) != derive_seed(2, 1));
    }

    TEST_CASE("one-factor correlation") {
        const Vector beta = (Vector(3) << 0.3, 0.6, 0.9).finished();
        const Matrix c = one_factor_correlation(beta);
        const auto reference = oracle::one_factor_correlation({0.3, 0.6, 0.9});
        for (Eigen::Index i = 0; i < 3; ++i) {
            for (Eigen::Index j = 0; j < 3; ++j) {
                CHECK(c(i, j) == doctest::Approx(reference(static_cast<std::size_t>(i), static_cast<std::size_t>(j))));
            }
        }
        CHECK(error_code([] { one_factor_correlation((Vector(2) << 0.5, 1.2).finished()); }) == ErrorCode::domain);
    }

    TEST_CASE("paths are bit-identical across thread counts") {
        const auto config = paths_config(20, 0.3, 40, 99);
        const auto a = simulate_crossing_paths(config, 1);
        const auto b = simulate_crossing_paths(config, 4);
        const auto c = simulate_crossing_paths(config, 0);
        CHECK(a.per_path_ratios == b.per_path_ratios);
        CHECK(a.mean == b.mean);
        CHECK(a.std_error == b.std_error);
        CHECK(a.gross_traded == c.gross_traded);
        CHECK(a.netted_traded == c.netted_traded);
        CHECK(a.per_path_ratios.size() == 40);
        const double direct = std::accumulate(a.per_path_ratios.begin(), a.per_path_ratios.end(), 0.0) / 40.0;
        CHECK(a.mean == doctest::Approx(direct).epsilon(1e-14));
        CHECK(a.netted_traded <= a.gross_traded);
    }

    TEST_CASE("higher correlation means less crossing") {
        const auto low = simulate_crossing_paths(paths_config(50, 0.2, 200, 5), 0);
        const auto high = simulate_crossing_paths(paths_config(50, 0.8, 200, 5), 0);
        CHECK(high.mean > low.mean);
    }

    TEST_CASE("crossing ratio decreases to a positive limit") {
        const double rho = 0.25;
        double previous = 2.0;
        double last = 0.0;
        for (std::size_t n : {10u, 100u, 1000u}) {
            auto config = paths_config(n, rho, 200, 17);
            config.n_instruments = 20;
            last = simulate_crossing_paths(config, 0).mean;
            CHECK(last < previous);
            previous = last;
        }
        CHECK(last > 0.1 * std::sqrt(rho));
    }

    TEST_CASE("pairwise summation") {
        std::vector<double> v(1000);
        std::iota(v.begin(), v.end(), 1.0);
        CHECK(pairwise_sum(v.data(), v.size()) == 500500.0);
        CHECK(pairwise_sum(v.data(), 0) == 0.0);
    }

    TEST_CASE("no-intercept regression") {
        auto r = no_intercept_regression({1, 2, 3}, {2, 4, 6});
        CHECK(r.slope == 2.0);
        CHECK(std::isinf(r.f_statistic));
        r = no_intercept_regression({1, 2, 3}, {2, 4, 6.1});
        const auto reference = oracle::no_intercept({1, 2, 3}, {2, 4, 6.1});
        CHECK(r.slope == doctest::Approx(reference.slope).epsilon(1e-14));
        CHECK(r.f_statistic == doctest::Approx(reference.f).epsilon(1e-9));
        CHECK(r.f_statistic == doctest::Approx(3.2e4).epsilon(0.02));
        r = no_intercept_regression({1, -1}, {1, 1});
        CHECK(r.slope == 0.0);
        CHECK(r.f_statistic == 0.0);
        CHECK(error_code([] { no_intercept_regression({0, 0}, {1, 2}); }) == ErrorCode::undefined_regressor);
        CHECK(error_code([] { no_intercept_regression({1}, {1}); }) == ErrorCode::dimension);
    }

    TEST_CASE("sweep recovers the population correlation") {
        ConditioningOptions pipeline;
        const auto r = sweep_rho_star({20, 40, 80}, one_factor_generator(0.4, 3000), pipeline, 11, 0);
        REQUIRE(r.rho_star_times_n.size() == 3);
        CHECK(std::abs(r.slope_no_intercept - 0.4) <= 0.04);
        CHECK(r.f_statistic > 100.0);
        const auto again = sweep_rho_star({20, 40, 80}, one_factor_generator(0.4, 3000), pipeline, 11, 1);
        CHECK(again.rho_star_times_n == r.rho_star_times_n);
        CHECK(again.slope_no_intercept == r.slope_no_intercept);
        std::vector<double> xs{20, 40, 80};
        const auto reference = oracle::no_intercept(xs, r.rho_star_times_n);
        CHECK(r.slope_no_intercept == doctest::Approx(reference.slope).epsilon(1e-12));
    }

    TEST_CASE("independent alphas sit at the noise floor") {
        ConditioningOptions pipeline;
        const auto zero = sweep_rho_star({20, 40, 80}, one_factor_generator(0.0, 3000), pipeline, 11);
        const auto quarter = sweep_rho_star({20, 40, 80}, one_factor_generator(0.25, 3000), pipeline, 11);
        CHECK(zero.slope_no_intercept > 0.0);
        CHECK(zero.slope_no_intercept < 0.5 * quarter.slope_no_intercept);
    }

    TEST_CASE("single grid point and failures") {
        ConditioningOptions pipeline;
        const auto one = sweep_rho_star({30}, one_factor_generator(0.3, 500), pipeline, 2);
        REQUIRE(one.points.size() == 1);
        CHECK(one.slope_no_intercept == doctest::Approx(one.points[0].rho_star));
        CHECK(std::isnan(one.f_statistic));

        PanelGenerator flaky = [](std::size_t n, std::uint64_t seed) {
            if (n == 20) throw Error(ErrorCode::domain, "generator failed");
            return one_factor_generator(0.3, 500)(n, seed);
        };
        const auto partial = sweep_rho_star({10, 20, 30}, flaky, pipeline, 2);
        REQUIRE(partial.points.size() == 3);
        CHECK(partial.points[1].error.has_value());
        CHECK_FALSE(partial.points[0].error.has_value());
        CHECK(partial.rho_star_times_n.size() == 2);

        CHECK(error_code([&] { sweep_rho_star({}, flaky, pipeline, 2); }) == ErrorCode::domain);
        CHECK(error_code([&] { sweep_rho_star({10, 10}, flaky, pipeline, 2); }) == ErrorCode::domain);
        CHECK(error_code([&] { sweep_rho_star({1, 10}, flaky, pipeline, 2); }) == ErrorCode::domain);
    }

    TEST_CASE("sweep with pruning records the effective size") {
        ConditioningOptions pipeline;
        pipeline.prune_bound = 0.5;
        const auto r = sweep_rho_star({10, 20}, one_factor_generator(0.7, 400), pipeline, 4);
        for (const auto& p : r.points) {
            REQUIRE_FALSE(p.error.has_value());
            CHECK(p.n_effective < p.n);
            CHECK(p.rho_star_times_n == doctest::Approx(p.rho_star * static_cast<double>(p.n_effective)));
        }
    }

    TEST_CASE("config validation") {
        SimConfig c;
        c.n_alphas = 1;
        CHECK(error_code([&] { c.validate(); }) == ErrorCode::domain);
        c = SimConfig{};
        c.n_paths = 0;
        CHECK(error_code([&] { c.validate(); }) == ErrorCode::domain);
        c = SimConfig{};
        c.n_instruments = 0;
        CHECK(error_code([&] { c.validate(); }) == ErrorCode::domain);
    }
}
