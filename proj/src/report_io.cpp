#include "turnover_spectra/report_io.hpp"

#include <cmath>
#include <ostream>

#include "csv.hpp"

namespace turnover_spectra {

nlohmann::json json_number(double value) {
    if (std::isnan(value)) return nullptr;
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return value;
}

namespace {

nlohmann::json vector_json(const Vector& v) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(json_number(v(i)));
    return out;
}

nlohmann::json warnings_json(const std::vector<Warning>& warnings) {
    nlohmann::json out = nlohmann::json::array();
    for (auto w : warnings) out.push_back(to_string(w));
    return out;
}

std::string sentinel_text(double value) {
    if (std::isnan(value)) return "NA";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    return csv::format_number(value);
}

}  // namespace

nlohmann::json to_json(const TurnoverReport& r) {
    nlohmann::json out;
    out["N"] = r.n;
    out["T_naive"] = json_number(r.t_naive);
    out["T_full"] = json_number(r.t_full);
    out["T_large_n"] = json_number(r.t_large_n);
    out["T_t2"] = json_number(r.t_t2);
    out["rho_star"] = json_number(r.rho_star);
    out["rho_prime"] = json_number(r.rho_prime);
    out["psi_star"] = json_number(r.psi_star);
    out["rho_bar"] = json_number(r.rho_bar);
    out["rho_one"] = json_number(r.rho_one);
    out["rho_star_factored"] = json_number(r.rho_star_factored);
    out["factored_gap"] = json_number(r.factored_gap);
    out["factored_gap_kind"] = r.factored_gap_is_absolute ? "absolute" : "relative";
    out["rho_max"] = json_number(r.rho_max);
    out["p1_share"] = json_number(r.p1_share);
    out["top_gap"] = json_number(r.top_gap);
    out["signs"] = vector_json(r.signs);
    out["warnings"] = warnings_json(r.warnings);
    return out;
}

nlohmann::json to_json(const SimResult& r) {
    nlohmann::json out;
    out["gross_traded"] = json_number(r.gross_traded);
    out["netted_traded"] = json_number(r.netted_traded);
    out["crossing_ratio"] = json_number(r.crossing_ratio);
    out["mean"] = json_number(r.mean);
    out["std_error"] = json_number(r.std_error);
    out["zero_gross"] = r.zero_gross;
    out["per_path_ratios"] = r.per_path_ratios;
    return out;
}

nlohmann::json to_json(const SweepResult& r) {
    nlohmann::json out;
    out["slope"] = json_number(r.slope_no_intercept);
    out["F"] = json_number(r.f_statistic);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.points) {
        nlohmann::json point;
        point["N"] = p.n;
        if (p.error) {
            point["error"] = *p.error;
        } else {
            point["N_effective"] = p.n_effective;
            point["rho_star"] = json_number(p.rho_star);
            point["rho_star_times_n"] = json_number(p.rho_star_times_n);
            point["warnings"] = p.warnings;
        }
        points.push_back(std::move(point));
    }
    out["points"] = std::move(points);
    nlohmann::json residuals = nlohmann::json::array();
    for (double v : r.residuals) residuals.push_back(json_number(v));
    out["residuals"] = std::move(residuals);
    return out;
}

nlohmann::json matrix_report(const Matrix& entries, const std::vector<std::string>& ids, PsdStatus status) {
    nlohmann::json out;
    out["ids"] = ids;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < entries.rows(); ++i) rows.push_back(vector_json(entries.row(i).transpose()));
    out["entries"] = std::move(rows);
    out["eigenvalues"] = vector_json(eigendecompose(entries).eigenvalues);
    out["psd_status"] = to_string(status);
    return out;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result, const std::string& config_comment) {
    if (!config_comment.empty()) out << "# " << config_comment << '\n';
    out << "N,rho_star,rho_star_times_n,slope,F\n";
    const std::string slope = sentinel_text(result.slope_no_intercept);
    const std::string f = sentinel_text(result.f_statistic);
    for (const auto& p : result.points) {
        if (p.error) continue;
        out << p.n_effective << ',' << csv::format_number(p.rho_star) << ','
            << csv::format_number(p.rho_star_times_n) << ',' << slope << ',' << f << '\n';
    }
}

}  // namespace turnover_spectra
