#pragma once

// JSON and CSV artifacts: turnover reports, matrix reports, sweep grids.

#include <iosfwd>
#include <string>

#include <nlohmann/json.hpp>

#include "turnover_spectra/crossing_sim.hpp"
#include "turnover_spectra/spectral.hpp"

namespace turnover_spectra {

// Finite values stay numbers; +inf becomes "inf", -inf "-inf", NaN null.
nlohmann::json json_number(double value);

nlohmann::json to_json(const TurnoverReport& report);
nlohmann::json to_json(const SimResult& result);
nlohmann::json to_json(const SweepResult& result);

// {ids, entries, eigenvalues, psd_status}
nlohmann::json matrix_report(const Matrix& entries, const std::vector<std::string>& ids, PsdStatus status);

// Columns N, rho_star, rho_star_times_n, slope, F (one row per successful grid
// point). Lines starting with '#' carry the run configuration.
void write_sweep_csv(std::ostream& out, const SweepResult& result, const std::string& config_comment);

}  // namespace turnover_spectra
