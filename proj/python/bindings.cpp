#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "turnover_spectra/conditioning.hpp"
#include "turnover_spectra/crossing_sim.hpp"
#include "turnover_spectra/errors.hpp"
#include "turnover_spectra/panel.hpp"
#include "turnover_spectra/report_io.hpp"
#include "turnover_spectra/spectral.hpp"

namespace py = pybind11;
using namespace turnover_spectra;

namespace {

std::vector<std::string> warning_names(const std::vector<Warning>& warnings) {
    std::vector<std::string> out;
    for (auto w : warnings) out.emplace_back(to_string(w));
    return out;
}

CorrelationMatrix as_correlation(const Matrix& entries) { return CorrelationMatrix::from_entries(entries); }

// NaN cells are unobserved.
TimeSeriesPanel panel_from_array(std::vector<std::string> ids, const Matrix& values) {
    TimeSeriesPanel panel = TimeSeriesPanel::from_complete(std::move(ids), values);
    panel.observed = values.array().isFinite();
    return panel;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Turnover reduction from internal crossing via the alpha correlation spectrum.";

    static py::exception<Error> error(m, "Error", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::set_error(error, (std::string(to_string(e.code())) + ": " + e.what()).c_str());
        }
    });

    py::enum_<EstimationMode>(m, "EstimationMode")
        .value("complete_cases", EstimationMode::complete_cases)
        .value("pairwise_complete", EstimationMode::pairwise_complete);
    py::enum_<PsdStatus>(m, "PsdStatus")
        .value("verified_pd", PsdStatus::verified_pd)
        .value("verified_not_psd", PsdStatus::verified_not_psd)
        .value("unverified", PsdStatus::unverified);
    py::enum_<InterceptPolicy>(m, "InterceptPolicy")
        .value("none", InterceptPolicy::none)
        .value("fit", InterceptPolicy::fit)
        .value("retain", InterceptPolicy::retain);

    py::class_<TimeSeriesPanel>(m, "TimeSeriesPanel")
        .def(py::init(&panel_from_array), py::arg("ids"), py::arg("values"),
             "Build a panel from an N x (M+1) array, most recent column first; NaN marks N/A.")
        .def_readonly("ids", &TimeSeriesPanel::ids)
        .def_readonly("values", &TimeSeriesPanel::values)
        .def_property_readonly("observed", [](const TimeSeriesPanel& p) {
            return Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>(p.observed.matrix());
        });

    m.def(
        "load_panel_csv",
        [](const std::string& text, bool oldest_first) {
            std::istringstream in(text);
            LoadOptions options;
            options.oldest_first = oldest_first;
            return load_panel(in, options);
        },
        py::arg("text"), py::arg("oldest_first") = false);
    m.def(
        "write_panel_csv",
        [](const TimeSeriesPanel& panel) {
            std::ostringstream out;
            write_panel(out, panel);
            return out.str();
        },
        py::arg("panel"));

    py::class_<CovarianceMatrix>(m, "CovarianceMatrix")
        .def_readonly("ids", &CovarianceMatrix::ids)
        .def_readonly("entries", &CovarianceMatrix::entries)
        .def_readonly("vols", &CovarianceMatrix::vols)
        .def_readonly("pairwise_counts", &CovarianceMatrix::pairwise_counts)
        .def_readonly("estimation_mode", &CovarianceMatrix::estimation_mode);
    py::class_<CorrelationMatrix>(m, "CorrelationMatrix")
        .def_readonly("ids", &CorrelationMatrix::ids)
        .def_readonly("entries", &CorrelationMatrix::entries)
        .def_readonly("estimation_mode", &CorrelationMatrix::estimation_mode)
        .def_readonly("psd_status", &CorrelationMatrix::psd_status);

    m.def(
        "sample_moments",
        [](const TimeSeriesPanel& panel, EstimationMode mode) {
            SampleMoments moments = sample_moments(panel, mode);
            return py::make_tuple(moments.covariance, moments.correlation);
        },
        py::arg("panel"), py::arg("mode") = EstimationMode::complete_cases);
    m.def("ols_residualize", &ols_residualize, py::arg("panel"), py::arg("factors"),
          py::arg("intercept") = InterceptPolicy::fit);

    py::class_<SpectralDecomposition>(m, "SpectralDecomposition")
        .def_readonly("eigenvalues", &SpectralDecomposition::eigenvalues)
        .def_readonly("eigenvectors", &SpectralDecomposition::eigenvectors)
        .def_readonly("source_dim", &SpectralDecomposition::source_dim)
        .def_readonly("top_gap", &SpectralDecomposition::top_gap)
        .def_readonly("orthonormality_residual", &SpectralDecomposition::orthonormality_residual);

    m.def("eigendecompose", py::overload_cast<const Matrix&>(&eigendecompose), py::arg("matrix"));
    m.def(
        "prune_redundant",
        [](const Matrix& corr, double bound) {
            PruneResult r = prune_redundant(as_correlation(corr), bound);
            return py::make_tuple(r.kept_indices, r.pruned.entries);
        },
        py::arg("corr"), py::arg("bound") = 0.9);
    m.def("rj_repair", py::overload_cast<const Matrix&, double>(&rj_repair), py::arg("matrix"), py::arg("floor"));
    m.def("default_eigen_floor", &default_eigen_floor, py::arg("n"));
    m.def(
        "classify_psd", [](const Matrix& matrix) { return classify_psd(matrix); }, py::arg("matrix"));
    m.def("portfolio_volatility",
          py::overload_cast<const Matrix&, const Vector&, double>(&portfolio_volatility), py::arg("cov"),
          py::arg("weights"), py::arg("investment"));

    py::class_<SignedBasis>(m, "SignedBasis")
        .def_readonly("signs", &SignedBasis::signs)
        .def_readonly("decomposition", &SignedBasis::decomposition)
        .def_readonly("top_degenerate", &SignedBasis::top_degenerate);
    m.def("fix_sign_basis", &fix_sign_basis, py::arg("decomposition"), py::arg("degeneracy_tolerance") = 0.0);

    m.def("spectral_turnover_full", &spectral_turnover_full, py::arg("basis"), py::arg("weighted_turnovers"));
    m.def(
        "spectral_turnover_large_n",
        [](const SignedBasis& basis, const Vector& t) {
            FlaggedValue v = spectral_turnover_large_n(basis, t);
            return py::make_tuple(v.value, warning_names(v.warnings));
        },
        py::arg("basis"), py::arg("weighted_turnovers"));
    m.def(
        "rho_star",
        [](const SignedBasis& basis) {
            FlaggedValue v = rho_star(basis);
            return py::make_tuple(v.value, warning_names(v.warnings));
        },
        py::arg("basis"));
    m.def(
        "rho_prime",
        [](const Matrix& corr) {
            RhoPrime r = rho_prime(corr);
            return py::make_tuple(r.psi_star, r.rho_prime, r.rho_bar);
        },
        py::arg("corr"));
    m.def(
        "rho_star_factored",
        [](const SignedBasis& basis, const Matrix& corr) {
            FactoredRelation f = rho_star_factored(basis, corr);
            py::dict d;
            d["rho_star"] = f.rho_star;
            d["rho_one"] = f.rho_one;
            d["rho_prime"] = f.rho_prime;
            d["factored_value"] = f.factored_value;
            d["gap"] = f.gap;
            d["gap_is_absolute"] = f.gap_is_absolute;
            d["identity_residual"] = f.identity_residual;
            return d;
        },
        py::arg("basis"), py::arg("corr"));

    py::class_<ExactCalibration>(m, "ExactCalibration")
        .def_readonly("coefficients", &ExactCalibration::coefficients)
        .def_readonly("abs_eigvec_matrix", &ExactCalibration::abs_eigvec_matrix)
        .def_readonly("condition_estimate", &ExactCalibration::condition_estimate)
        .def_readonly("has_negative", &ExactCalibration::has_negative);
    m.def("calibrate_exact_B", &calibrate_exact_B, py::arg("basis"));
    m.def("exact_b_turnover", &exact_b_turnover, py::arg("calibration"), py::arg("basis"),
          py::arg("weighted_turnovers"));
    m.def("turnover_t2", &turnover_t2, py::arg("rho_star"), py::arg("weighted_turnovers"));
    m.def(
        "naive_turnover",
        [](const Vector& tau, const Vector& weights) {
            TurnoverInputs inputs;
            inputs.individual_turnovers = tau;
            inputs.weights = weights;
            return naive_turnover(inputs);
        },
        py::arg("tau"), py::arg("weights"));
    m.def(
        "pnl_with_costs",
        [](const Vector& tau, const Vector& weights, const Vector& alphas, double investment, double cost_rate,
           double turnover) {
            TurnoverInputs inputs;
            inputs.individual_turnovers = tau;
            inputs.weights = weights;
            inputs.alphas_now = alphas;
            inputs.investment = investment;
            inputs.linear_cost_rate = cost_rate;
            return pnl_with_costs(inputs, turnover);
        },
        py::arg("tau"), py::arg("weights"), py::arg("alphas"), py::arg("investment"), py::arg("linear_cost_rate"),
        py::arg("turnover"));
    m.def(
        "_turnover_report_json",
        [](const Matrix& corr, const Vector& weighted_turnovers) {
            return to_json(turnover_report(as_correlation(corr), weighted_turnovers)).dump();
        },
        py::arg("corr"), py::arg("weighted_turnovers"));

    py::class_<SimResult>(m, "SimResult")
        .def_readonly("gross_traded", &SimResult::gross_traded)
        .def_readonly("netted_traded", &SimResult::netted_traded)
        .def_readonly("crossing_ratio", &SimResult::crossing_ratio)
        .def_readonly("per_path_ratios", &SimResult::per_path_ratios)
        .def_readonly("mean", &SimResult::mean)
        .def_readonly("std_error", &SimResult::std_error)
        .def_readonly("zero_gross", &SimResult::zero_gross);
    m.def("simulate_crossing", &simulate_crossing, py::arg("trades"));
    m.def(
        "simulate_crossing_paths",
        [](std::size_t n_alphas, std::size_t n_instruments, double rho, std::size_t n_paths, std::uint64_t seed,
           std::size_t threads) {
            SimConfig config;
            config.n_alphas = n_alphas;
            config.n_instruments = n_instruments;
            config.target_correlation = rho;
            config.n_paths = n_paths;
            config.master_seed = seed;
            py::gil_scoped_release release;
            return simulate_crossing_paths(config, threads);
        },
        py::arg("n_alphas"), py::arg("n_instruments"), py::arg("rho"), py::arg("n_paths"), py::arg("seed"),
        py::arg("threads") = 1);
    m.def(
        "gen_one_factor_panel",
        [](std::size_t n_alphas, std::size_t n_periods, double rho, std::uint64_t seed) {
            SimConfig config;
            config.n_alphas = n_alphas;
            config.n_periods = n_periods;
            config.target_correlation = rho;
            config.master_seed = seed;
            return gen_one_factor_panel(config);
        },
        py::arg("n_alphas"), py::arg("n_periods"), py::arg("rho"), py::arg("seed"));
    m.def(
        "no_intercept_regression",
        [](const std::vector<double>& x, const std::vector<double>& y) {
            RegressionResult r = no_intercept_regression(x, y);
            return py::make_tuple(r.slope, r.f_statistic);
        },
        py::arg("x"), py::arg("y"));
    m.def(
        "_sweep_rho_star_json",
        [](const std::vector<std::size_t>& grid, double rho, std::size_t n_periods, std::uint64_t seed, bool repair,
           std::size_t threads) {
            ConditioningOptions pipeline;
            pipeline.repair = repair;
            SweepResult r;
            {
                py::gil_scoped_release release;
                r = sweep_rho_star(grid, one_factor_generator(rho, n_periods), pipeline, seed, threads);
            }
            return to_json(r).dump();
        },
        py::arg("grid"), py::arg("rho"), py::arg("n_periods"), py::arg("seed"), py::arg("repair") = true,
        py::arg("threads") = 1);
}
