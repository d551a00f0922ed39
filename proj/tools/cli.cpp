#include "cli.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "turnover_spectra/conditioning.hpp"
#include "turnover_spectra/crossing_sim.hpp"
#include "turnover_spectra/errors.hpp"
#include "turnover_spectra/panel.hpp"
#include "turnover_spectra/report_io.hpp"
#include "turnover_spectra/spectral.hpp"

namespace turnover_spectra::cli {

namespace {

using nlohmann::json;

// Raised for argument problems detected after CLI11 parsing.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string input;
    std::string output;
    std::string mode = "complete";
    double prune = 0.9;
    bool no_prune = false;
    bool repair = true;
    std::optional<double> floor;
    std::string factors;
    bool retain_intercept = false;
    bool oldest_first = false;
    bool correlation_input = false;
    std::string turnovers;
    double degeneracy_tolerance = 0.0;
    std::string kind = "auto";
    std::string summary;
    std::string grid;
    double rho = 0.25;
    std::size_t periods = 5000;
    std::uint64_t seed = 0;
    std::size_t paths = 200;
    std::size_t alphas = 100;
    std::size_t instruments = 500;
    std::size_t threads = 1;
};

std::uint64_t effective_seed(std::uint64_t flag_seed) {
    const char* env = std::getenv("TURNOVER_SPECTRA_SEED");
    if (env == nullptr || *env == '\0') return flag_seed;
    std::uint64_t value = 0;
    const std::string_view text(env);
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw UsageError("TURNOVER_SPECTRA_SEED is not an unsigned 64-bit integer: '" + std::string(text) + "'");
    }
    return value;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write '" + path + "'");
    return out;
}

std::vector<std::size_t> parse_grid(const std::string& text) {
    std::vector<std::size_t> grid;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t value = 0;
        const auto first = item.find_first_not_of(' ');
        const auto last = item.find_last_not_of(' ');
        if (first == std::string::npos) throw UsageError("empty grid entry in '" + text + "'");
        const std::string_view token(item.data() + first, last - first + 1);
        const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc() || ptr != token.data() + token.size()) {
            throw UsageError("grid entry '" + std::string(token) + "' is not a positive integer");
        }
        grid.push_back(value);
    }
    if (grid.size() < 2) throw UsageError("grid needs at least 2 values for the regression, got " + std::to_string(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        if (grid[k] < 2) throw UsageError("grid values must be at least 2");
        if (k > 0 && grid[k] <= grid[k - 1]) throw UsageError("grid must be strictly increasing");
    }
    return grid;
}

struct TurnoverRow {
    double tau;
    double weight;
};

// CSV with header id,tau,weight.
std::map<std::string, TurnoverRow> load_turnovers(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
    std::map<std::string, TurnoverRow> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "id,tau,weight") throw ParseError(1, 1, "turnover file header must be 'id,tau,weight'");
            continue;
        }
        std::stringstream ss(line);
        std::string id;
        std::string tau;
        std::string weight;
        if (!std::getline(ss, id, ',') || !std::getline(ss, tau, ',') || !std::getline(ss, weight, ',')) {
            throw ParseError(line_no, 1, "expected id,tau,weight");
        }
        try {
            rows[id] = {std::stod(tau), std::stod(weight)};
        } catch (const std::exception&) {
            throw ParseError(line_no, 2, "tau and weight must be numbers");
        }
    }
    return rows;
}

json common_config(const std::string& command, const CommonOptions& o, std::uint64_t seed) {
    json c;
    c["command"] = command;
    c["seed"] = seed;
    c["input"] = o.input;
    c["output"] = o.output;
    return c;
}

int run_analyze(const CommonOptions& o, std::ostream& out) {
    const std::uint64_t seed = effective_seed(o.seed);
    json config = common_config("analyze", o, seed);
    config["mode"] = o.mode;
    config["prune"] = o.no_prune ? json(nullptr) : json(o.prune);
    config["repair"] = o.repair;
    config["floor"] = o.floor ? json(*o.floor) : json("default");
    config["factors"] = o.factors.empty() ? json(nullptr) : json(o.factors);
    config["retain_intercept"] = o.retain_intercept;
    config["oldest_first"] = o.oldest_first;
    config["correlation_input"] = o.correlation_input;
    config["turnovers"] = o.turnovers.empty() ? json(nullptr) : json(o.turnovers);

    json inputs;
    CorrelationMatrix corr;
    if (o.correlation_input) {
        std::vector<std::string> ids;
        Matrix entries = load_matrix_file(o.input, &ids);
        corr = CorrelationMatrix::from_entries(std::move(entries), std::move(ids));
        inputs["M"] = nullptr;
        inputs["estimation_mode"] = "supplied";
        inputs["residualized"] = false;
    } else {
        const EstimationMode mode = parse_estimation_mode(o.mode);
        LoadOptions load;
        load.oldest_first = o.oldest_first;
        TimeSeriesPanel panel = load_panel_file(o.input, load);
        inputs["M"] = panel.timestamp_count() - 1;
        inputs["residualized"] = !o.factors.empty();
        if (!o.factors.empty()) {
            LoadOptions factor_load = load;
            factor_load.min_series = 1;
            const TimeSeriesPanel factors = load_panel_file(o.factors, factor_load);
            panel = ols_residualize(panel, factors, o.retain_intercept ? InterceptPolicy::retain : InterceptPolicy::fit);
            inputs["intercept"] = o.retain_intercept ? "retained" : "removed";
            inputs["factor_ids"] = factors.ids;
        }
        corr = sample_moments(panel, mode).correlation;
        inputs["estimation_mode"] = to_string(mode);
    }
    inputs["N_input"] = corr.size();

    std::vector<std::string> dropped;
    if (!o.no_prune) {
        const PruneResult pruned = prune_redundant(corr, o.prune);
        for (const auto& id : corr.ids) {
            if (std::find(pruned.pruned.ids.begin(), pruned.pruned.ids.end(), id) == pruned.pruned.ids.end()) {
                dropped.push_back(id);
            }
        }
        corr = pruned.pruned;
    }
    inputs["prune_bound"] = o.no_prune ? json(nullptr) : json(o.prune);
    inputs["pruned_ids"] = dropped;
    if (corr.size() < 2) throw Error(ErrorCode::undefined, "fewer than 2 alphas left after pruning");

    const PsdStatus before = classify_psd(corr.entries);
    inputs["psd_status_before_repair"] = to_string(before);
    const double floor = o.floor.value_or(default_eigen_floor(corr.size()));
    if (o.repair) {
        corr = rj_repair(corr, floor);
    } else if (before == PsdStatus::verified_not_psd) {
        throw Error(ErrorCode::invalid_matrix,
                    "correlation matrix is not positive semi-definite; rerun with --repair (optionally --floor)");
    } else {
        corr.psd_status = before;
    }
    inputs["repair_applied"] = o.repair;
    inputs["eigen_floor"] = o.repair ? json(floor) : json(nullptr);
    inputs["psd_status"] = to_string(corr.psd_status);
    inputs["N"] = corr.size();
    inputs["ids"] = corr.ids;

    Vector weighted;
    bool renormalized = false;
    if (o.turnovers.empty()) {
        weighted = TurnoverInputs::equal_weights(corr.size(), 1.0).weighted_turnovers();
        inputs["turnovers"] = "equal weights, tau = 1";
    } else {
        const auto rows = load_turnovers(o.turnovers);
        TurnoverInputs ti;
        const auto n = static_cast<Eigen::Index>(corr.size());
        ti.individual_turnovers.resize(n);
        ti.weights.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto it = rows.find(corr.ids[static_cast<std::size_t>(i)]);
            if (it == rows.end()) throw Error(ErrorCode::parse, "turnover file has no row for '" + corr.ids[static_cast<std::size_t>(i)] + "'");
            ti.individual_turnovers(i) = it->second.tau;
            ti.weights(i) = it->second.weight;
        }
        const double norm = ti.weights.cwiseAbs().sum();
        if (std::abs(norm - 1.0) > 1e-10) {
            if (!(norm > 0.0)) throw Error(ErrorCode::domain, "weights sum to zero");
            ti.weights /= norm;
            renormalized = true;
        }
        weighted = ti.weighted_turnovers();
        inputs["turnovers"] = o.turnovers;
    }
    inputs["weights_renormalized"] = renormalized;

    const SignedBasis basis = fix_sign_basis(eigendecompose(corr), o.degeneracy_tolerance);
    const TurnoverReport report = turnover_report(corr, basis, weighted);

    json doc;
    doc["config"] = std::move(config);
    doc["inputs"] = std::move(inputs);
    doc["report"] = to_json(report);
    doc["model"] = {
        {"full_model_normalization", "1/sqrt(Tr(Psi)) = 1/sqrt(N)"},
        {"full_model_at_finite_N", "modeling choice; higher principal components are not suppressed"},
        {"degeneracy_tolerance",
         o.degeneracy_tolerance > 0.0 ? o.degeneracy_tolerance : default_degeneracy_tolerance(corr.size())},
    };
    auto file = open_output(o.output);
    file << doc.dump(2) << '\n';
    out << "rho_star=" << report.rho_star << " rho_prime=" << report.rho_prime << " T_full=" << report.t_full
        << " -> " << o.output << '\n';
    return kExitOk;
}

int run_repair(const CommonOptions& o, std::ostream& out) {
    std::vector<std::string> ids;
    const Matrix entries = load_matrix_file(o.input, &ids);
    bool is_correlation = o.kind == "correlation";
    if (o.kind == "auto") is_correlation = (entries.diagonal().array() == 1.0).all();
    const double floor = o.floor.value_or(default_eigen_floor(static_cast<std::size_t>(entries.rows())));

    Matrix repaired;
    PsdStatus status;
    if (is_correlation) {
        const CorrelationMatrix result = rj_repair(CorrelationMatrix::from_entries(entries, ids), floor);
        repaired = result.entries;
        status = result.psd_status;
    } else {
        CovarianceMatrix cov;
        cov.ids = ids;
        cov.entries = entries;
        cov.vols = entries.diagonal().cwiseMax(0.0).cwiseSqrt();
        repaired = rj_repair(cov, floor).entries;
        status = classify_psd(repaired);
    }
    {
        auto file = open_output(o.output);
        write_matrix(file, repaired, ids);
    }
    if (!o.summary.empty()) {
        json doc = matrix_report(repaired, ids, status);
        json config = common_config("repair", o, effective_seed(o.seed));
        config["floor"] = floor;
        config["kind"] = is_correlation ? "correlation" : "covariance";
        doc["config"] = std::move(config);
        doc["psd_status_before_repair"] = to_string(classify_psd(entries));
        auto file = open_output(o.summary);
        file << doc.dump(2) << '\n';
    }
    out << "repaired " << entries.rows() << "x" << entries.cols() << " matrix (" << to_string(status) << ") -> "
        << o.output << '\n';
    return kExitOk;
}

int run_sweep(const CommonOptions& o, std::ostream& out) {
    const std::vector<std::size_t> grid = parse_grid(o.grid);
    const std::uint64_t seed = effective_seed(o.seed);
    ConditioningOptions pipeline;
    pipeline.mode = parse_estimation_mode(o.mode);
    if (!o.no_prune && o.prune < 1.0) pipeline.prune_bound = o.prune;
    pipeline.repair = o.repair;
    pipeline.eigen_floor = o.floor;

    const SweepResult result = sweep_rho_star(grid, one_factor_generator(o.rho, o.periods), pipeline, seed, o.threads);

    json config = common_config("sweep", o, seed);
    config.erase("input");
    config["grid"] = grid;
    config["rho"] = o.rho;
    config["periods"] = o.periods;
    config["mode"] = to_string(pipeline.mode);
    config["prune"] = pipeline.prune_bound ? json(*pipeline.prune_bound) : json(nullptr);
    config["repair"] = o.repair;
    config["floor"] = o.floor ? json(*o.floor) : json("default");
    {
        auto file = open_output(o.output);
        write_sweep_csv(file, result, config.dump());
    }
    const std::string summary_path = o.summary.empty() ? o.output + ".json" : o.summary;
    {
        json doc = to_json(result);
        doc["config"] = config;
        auto file = open_output(summary_path);
        file << doc.dump(2) << '\n';
    }
    out << "slope=" << result.slope_no_intercept << " F=" << result.f_statistic << " -> " << o.output << '\n';
    for (const auto& p : result.points) {
        if (p.error) out << "N=" << p.n << " failed: " << *p.error << '\n';
    }
    return kExitOk;
}

int run_simulate(const CommonOptions& o, std::ostream& out) {
    SimConfig config;
    config.n_alphas = o.alphas;
    config.n_periods = 2;
    config.n_instruments = o.instruments;
    config.target_correlation = o.rho;
    config.master_seed = effective_seed(o.seed);
    config.n_paths = o.paths;
    const SimResult result = simulate_crossing_paths(config, o.threads);

    const double n = static_cast<double>(config.n_alphas);
    const double model_rho_star = (1.0 + (n - 1.0) * config.target_correlation) / n;
    json doc;
    json cfg = common_config("simulate", o, config.master_seed);
    cfg.erase("input");
    cfg["alphas"] = config.n_alphas;
    cfg["instruments"] = config.n_instruments;
    cfg["rho"] = config.target_correlation;
    cfg["paths"] = config.n_paths;
    doc["config"] = std::move(cfg);
    doc["simulation"] = to_json(result);
    doc["model"] = {
        {"rho_star_uniform", model_rho_star},
        {"gap_mean_minus_model", result.mean - model_rho_star},
        // E|sum_i d_i| / sum_i E|d_i| for jointly Gaussian one-factor trades.
        {"gaussian_netting_expectation", std::sqrt(model_rho_star)},
    };
    auto file = open_output(o.output);
    file << doc.dump(2) << '\n';
    out << "crossing_ratio mean=" << result.mean << " +/- " << result.std_error << " model rho*=" << model_rho_star
        << " -> " << o.output << '\n';
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Turnover reduction from internal crossing via the alpha correlation spectrum"};
    app.require_subcommand(1);
    CommonOptions o;

    auto* analyze = app.add_subcommand("analyze", "Estimate turnover reduction for a return panel or correlation matrix");
    analyze->add_option("--input", o.input, "Panel CSV (or correlation CSV with --correlation)")->required();
    analyze->add_option("--output", o.output, "Report JSON path")->required();
    analyze->add_option("--mode", o.mode, "Moment estimation: complete | pairwise")
        ->check(CLI::IsMember({"complete", "pairwise", "complete-cases", "pairwise-complete"}));
    analyze->add_option("--prune", o.prune, "Redundancy bound Psi* in (0, 1)")->check(CLI::Range(0.0, 1.0));
    analyze->add_flag("--no-prune", o.no_prune, "Keep every alpha");
    analyze->add_flag("--repair,!--no-repair", o.repair, "Floor eigenvalues before modeling (default on)");
    analyze->add_option("--floor", o.floor, "Eigenvalue floor lambda* (default 1e-8 * N)");
    analyze->add_option("--factors", o.factors, "Factor panel CSV to residualize against");
    analyze->add_flag("--retain-intercept", o.retain_intercept, "Keep regression intercepts in the residuals");
    analyze->add_flag("--oldest-first", o.oldest_first, "Input rows run oldest to most recent");
    analyze->add_flag("--correlation", o.correlation_input, "Input is a square correlation CSV");
    analyze->add_option("--turnovers", o.turnovers, "CSV id,tau,weight (default equal weights, tau = 1)");
    analyze->add_option("--degeneracy-tol", o.degeneracy_tolerance, "Top-gap degeneracy threshold (default 1e-10 * N)");
    analyze->add_option("--seed", o.seed, "Recorded for reproducibility");

    auto* repair = app.add_subcommand("repair", "Make a correlation or covariance matrix positive definite");
    repair->add_option("--input", o.input, "Square matrix CSV with a header of ids")->required();
    repair->add_option("--output", o.output, "Repaired matrix CSV")->required();
    repair->add_option("--floor", o.floor, "Eigenvalue floor lambda* (default 1e-8 * N)");
    repair->add_option("--kind", o.kind, "auto | correlation | covariance")
        ->check(CLI::IsMember({"auto", "correlation", "covariance"}));
    repair->add_option("--report", o.summary, "Optional JSON report {ids, entries, eigenvalues, psd_status}");
    repair->add_option("--seed", o.seed, "Recorded for reproducibility");

    auto* sweep = app.add_subcommand("sweep", "rho* x N versus N on synthetic one-factor panels");
    sweep->add_option("--grid", o.grid, "Comma-separated alpha counts, e.g. 50,100,200,400")->required();
    sweep->add_option("--output", o.output, "Sweep CSV path")->required();
    sweep->add_option("--summary", o.summary, "Summary JSON path (default <output>.json)");
    sweep->add_option("--rho", o.rho, "Population correlation")->check(CLI::Range(0.0, 1.0));
    sweep->add_option("--periods", o.periods, "Timestamps per panel (M + 1)");
    sweep->add_option("--seed", o.seed, "Master seed (TURNOVER_SPECTRA_SEED overrides)");
    sweep->add_option("--mode", o.mode, "complete | pairwise")
        ->check(CLI::IsMember({"complete", "pairwise", "complete-cases", "pairwise-complete"}));
    sweep->add_option("--prune", o.prune, "Redundancy bound Psi*; pruning is off unless given")->check(CLI::Range(0.0, 1.0));
    sweep->add_flag("--repair,!--no-repair", o.repair, "Floor eigenvalues before modeling (default on)");
    sweep->add_option("--floor", o.floor, "Eigenvalue floor lambda* (default 1e-8 * N)");
    sweep->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

    auto* simulate = app.add_subcommand("simulate", "Monte-Carlo trade netting for one-factor trades");
    simulate->add_option("--output", o.output, "Result JSON path")->required();
    simulate->add_option("--alphas", o.alphas, "Number of alphas N");
    simulate->add_option("--instruments", o.instruments, "Number of instruments K");
    simulate->add_option("--rho", o.rho, "Trade correlation across alphas")->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--paths", o.paths, "Monte-Carlo paths");
    simulate->add_option("--seed", o.seed, "Master seed (TURNOVER_SPECTRA_SEED overrides)");
    simulate->add_option("--threads", o.threads, "Worker threads (0 = all cores)");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    if (!reversed.empty()) reversed.pop_back();
    bool sweep_prune_given = false;
    try {
        app.parse(reversed);
        sweep_prune_given = sweep->count("--prune") > 0;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }

    try {
        if (*analyze) return run_analyze(o, out);
        if (*repair) return run_repair(o, out);
        if (*sweep) {
            if (!sweep_prune_given) o.no_prune = true;
            return run_sweep(o, out);
        }
        if (*simulate) return run_simulate(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const Error& e) {
        err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
        return e.is_input_error() || e.code() == ErrorCode::dimension ? kExitInput : kExitNumeric;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}

}  // namespace turnover_spectra::cli
