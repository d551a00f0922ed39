#include "turnover_spectra/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>

#include "csv.hpp"
#include "turnover_spectra/errors.hpp"

namespace turnover_spectra {

const char* to_string(EstimationMode mode) {
    return mode == EstimationMode::complete_cases ? "complete-cases" : "pairwise-complete";
}

const char* to_string(PsdStatus status) {
    switch (status) {
        case PsdStatus::verified_pd: return "verified-PD";
        case PsdStatus::verified_not_psd: return "verified-not-PSD";
        case PsdStatus::unverified: return "unverified";
    }
    return "unverified";
}

EstimationMode parse_estimation_mode(std::string_view text) {
    if (text == "complete" || text == "complete-cases") return EstimationMode::complete_cases;
    if (text == "pairwise" || text == "pairwise-complete") return EstimationMode::pairwise_complete;
    throw Error(ErrorCode::domain, "unknown estimation mode '" + std::string(text) + "'");
}

std::size_t TimeSeriesPanel::observed_count(std::size_t series) const {
    return static_cast<std::size_t>(observed.row(static_cast<Eigen::Index>(series)).count());
}

TimeSeriesPanel TimeSeriesPanel::from_complete(std::vector<std::string> ids, Matrix values) {
    if (ids.size() != static_cast<std::size_t>(values.rows())) {
        throw Error(ErrorCode::dimension, "panel ids do not match the number of series");
    }
    TimeSeriesPanel panel;
    panel.ids = std::move(ids);
    panel.observed = Mask::Constant(values.rows(), values.cols(), true);
    panel.values = std::move(values);
    return panel;
}

TimeSeriesPanel load_panel(std::istream& source, const LoadOptions& options) {
    const auto lines = csv::read_lines(source);
    if (lines.empty()) throw ParseError(1, 1, "empty input, expected a header of series ids");

    auto ids = csv::split(lines.front());
    std::set<std::string> seen;
    for (std::size_t c = 0; c < ids.size(); ++c) {
        if (ids[c].empty()) throw ParseError(1, c + 1, "empty series id");
        if (!seen.insert(ids[c]).second) throw ParseError(1, c + 1, "duplicate series id '" + ids[c] + "'");
    }
    if (ids.size() < options.min_series) {
        throw ParseError(1, 1, "need at least " + std::to_string(options.min_series) + " series, found " +
                                   std::to_string(ids.size()));
    }

    const auto n = static_cast<Eigen::Index>(ids.size());
    const auto rows = static_cast<Eigen::Index>(lines.size() - 1);
    Matrix values = Matrix::Constant(n, rows, std::numeric_limits<double>::quiet_NaN());
    Mask observed = Mask::Constant(n, rows, false);

    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t line_no = static_cast<std::size_t>(r) + 2;
        const auto fields = csv::split(lines[static_cast<std::size_t>(r) + 1]);
        if (fields.size() != ids.size()) {
            throw ParseError(line_no, std::min(fields.size(), ids.size()) + 1,
                             "expected " + std::to_string(ids.size()) + " fields, found " +
                                 std::to_string(fields.size()));
        }
        const Eigen::Index t = options.oldest_first ? rows - 1 - r : r;
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& field = fields[static_cast<std::size_t>(i)];
            if (field.empty()) continue;
            const auto value = csv::parse_number(field);
            if (!value) {
                throw ParseError(line_no, static_cast<std::size_t>(i) + 1, "not a finite number: '" + field + "'");
            }
            values(i, t) = *value;
            observed(i, t) = true;
        }
    }

    std::vector<std::string> rejected;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (observed.row(i).count() < 2) rejected.push_back(ids[static_cast<std::size_t>(i)]);
    }
    if (!rejected.empty()) throw RejectedSeriesError(std::move(rejected));

    TimeSeriesPanel panel;
    panel.ids = std::move(ids);
    panel.values = std::move(values);
    panel.observed = std::move(observed);
    return panel;
}

TimeSeriesPanel load_panel_file(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io, "cannot open '" + path + "'");
    return load_panel(in, options);
}

void write_panel(std::ostream& out, const TimeSeriesPanel& panel) {
    for (std::size_t i = 0; i < panel.ids.size(); ++i) out << (i ? "," : "") << panel.ids[i];
    out << '\n';
    for (Eigen::Index t = 0; t < panel.values.cols(); ++t) {
        for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
            if (i) out << ',';
            if (panel.observed(i, t)) out << csv::format_number(panel.values(i, t));
        }
        out << '\n';
    }
}

CorrelationMatrix CorrelationMatrix::from_entries(Matrix entries, std::vector<std::string> ids) {
    const Eigen::Index n = entries.rows();
    if (n == 0 || entries.cols() != n) throw Error(ErrorCode::dimension, "correlation matrix must be square and nonempty");
    if (!entries.allFinite()) throw Error(ErrorCode::invalid_matrix, "correlation matrix has non-finite entries");
    for (Eigen::Index i = 0; i < n; ++i) {
        if (entries(i, i) != 1.0) throw Error(ErrorCode::invalid_diagonal, "correlation diagonal must be exactly 1");
        for (Eigen::Index j = 0; j < n; ++j) {
            if (std::abs(entries(i, j) - entries(j, i)) > 1e-12) {
                throw Error(ErrorCode::invalid_matrix, "correlation matrix is not symmetric");
            }
            if (std::abs(entries(i, j)) > 1.0) throw Error(ErrorCode::invalid_matrix, "correlation entry outside [-1, 1]");
        }
    }
    if (ids.empty()) {
        for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i + 1));
    }
    if (ids.size() != static_cast<std::size_t>(n)) throw Error(ErrorCode::dimension, "ids do not match matrix size");
    CorrelationMatrix corr;
    corr.ids = std::move(ids);
    corr.entries = std::move(entries);
    return corr;
}

namespace {

std::string pair_name(const TimeSeriesPanel& panel, Eigen::Index i, Eigen::Index j) {
    return "(" + panel.ids[static_cast<std::size_t>(i)] + ", " + panel.ids[static_cast<std::size_t>(j)] + ")";
}

// Moments of a panel in pairwise-complete form. Complete-cases estimation calls
// this on the panel restricted to its complete rows.
SampleMoments pairwise_moments(const TimeSeriesPanel& panel, EstimationMode mode) {
    const Eigen::Index n = panel.values.rows();
    const Eigen::Index rows = panel.values.cols();

    // Series laid out contiguously, with a flag for fully observed series.
    std::vector<std::vector<double>> series(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> centered(static_cast<std::size_t>(n));
    std::vector<double> self_ss(static_cast<std::size_t>(n), 0.0);
    std::vector<bool> full(static_cast<std::size_t>(n), false);
    Vector vols(n);

    for (Eigen::Index i = 0; i < n; ++i) {
        auto& xs = series[static_cast<std::size_t>(i)];
        xs.resize(static_cast<std::size_t>(rows));
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index t = 0; t < rows; ++t) {
            xs[static_cast<std::size_t>(t)] = panel.values(i, t);
            if (panel.observed(i, t)) {
                sum += panel.values(i, t);
                ++count;
            }
        }
        if (count < 2) {
            throw Error(ErrorCode::coverage, "series '" + panel.ids[static_cast<std::size_t>(i)] +
                                                 "' has fewer than 2 observations");
        }
        const double mean = sum / static_cast<double>(count);
        double ss = 0.0;
        auto& cs = centered[static_cast<std::size_t>(i)];
        cs.assign(static_cast<std::size_t>(rows), 0.0);
        for (Eigen::Index t = 0; t < rows; ++t) {
            if (!panel.observed(i, t)) continue;
            const double d = panel.values(i, t) - mean;
            cs[static_cast<std::size_t>(t)] = d;
            ss += d * d;
        }
        if (!(ss > 0.0)) {
            throw Error(ErrorCode::degenerate_series,
                        "series '" + panel.ids[static_cast<std::size_t>(i)] + "' has zero variance");
        }
        self_ss[static_cast<std::size_t>(i)] = ss;
        vols(i) = std::sqrt(ss / static_cast<double>(count - 1));
        full[static_cast<std::size_t>(i)] = count == rows;
    }

    Matrix corr = Matrix::Identity(n, n);
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) counts(i, i) = static_cast<int>(panel.observed.row(i).count());

    std::vector<std::size_t> joint;
    joint.reserve(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            double sxy = 0.0;
            double sxx = 0.0;
            double syy = 0.0;
            std::size_t count = 0;
            if (full[ui] && full[uj]) {
                const double* a = centered[ui].data();
                const double* b = centered[uj].data();
                for (Eigen::Index t = 0; t < rows; ++t) sxy += a[t] * b[t];
                sxx = self_ss[ui];
                syy = self_ss[uj];
                count = static_cast<std::size_t>(rows);
            } else {
                joint.clear();
                for (Eigen::Index t = 0; t < rows; ++t) {
                    if (panel.observed(i, t) && panel.observed(j, t)) joint.push_back(static_cast<std::size_t>(t));
                }
                count = joint.size();
                if (count < 2) {
                    throw Error(ErrorCode::coverage,
                                "pair " + pair_name(panel, i, j) + " has fewer than 2 joint observations");
                }
                double mx = 0.0;
                double my = 0.0;
                for (auto t : joint) {
                    mx += series[ui][t];
                    my += series[uj][t];
                }
                mx /= static_cast<double>(count);
                my /= static_cast<double>(count);
                for (auto t : joint) {
                    const double dx = series[ui][t] - mx;
                    const double dy = series[uj][t] - my;
                    sxy += dx * dy;
                    sxx += dx * dx;
                    syy += dy * dy;
                }
                if (!(sxx > 0.0) || !(syy > 0.0)) {
                    throw Error(ErrorCode::degenerate_series,
                                "pair " + pair_name(panel, i, j) + " has zero variance on its joint rows");
                }
            }
            const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
            corr(i, j) = r;
            corr(j, i) = r;
            counts(i, j) = static_cast<int>(count);
            counts(j, i) = static_cast<int>(count);
        }
    }

    SampleMoments out;
    out.covariance.ids = panel.ids;
    out.covariance.vols = vols;
    out.covariance.pairwise_counts = counts;
    out.covariance.estimation_mode = mode;
    out.covariance.entries.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            out.covariance.entries(i, j) = i == j ? vols(i) * vols(i) : vols(i) * vols(j) * corr(i, j);
        }
    }
    out.correlation.ids = panel.ids;
    out.correlation.entries = std::move(corr);
    out.correlation.estimation_mode = mode;
    out.correlation.psd_status = PsdStatus::unverified;
    return out;
}

}  // namespace

SampleMoments sample_moments(const TimeSeriesPanel& panel, EstimationMode mode) {
    if (panel.values.rows() != panel.observed.rows() || panel.values.cols() != panel.observed.cols()) {
        throw Error(ErrorCode::dimension, "panel values and mask differ in shape");
    }
    if (panel.values.rows() < 1) throw Error(ErrorCode::dimension, "panel has no series");
    if (mode == EstimationMode::pairwise_complete) return pairwise_moments(panel, mode);

    std::vector<Eigen::Index> complete;
    for (Eigen::Index t = 0; t < panel.values.cols(); ++t) {
        if (panel.observed.col(t).all()) complete.push_back(t);
    }
    if (complete.size() < 2) {
        throw Error(ErrorCode::coverage, "fewer than 2 rows with every series observed (" +
                                             std::to_string(complete.size()) + ")");
    }
    if (complete.size() == static_cast<std::size_t>(panel.values.cols())) return pairwise_moments(panel, mode);

    TimeSeriesPanel sub;
    sub.ids = panel.ids;
    sub.values = panel.values(Eigen::all, complete);
    sub.observed = Mask::Constant(panel.values.rows(), static_cast<Eigen::Index>(complete.size()), true);
    return pairwise_moments(sub, mode);
}

TimeSeriesPanel ols_residualize(const TimeSeriesPanel& panel, const TimeSeriesPanel& factors,
                                InterceptPolicy intercept) {
    if (factors.timestamp_count() != panel.timestamp_count()) {
        throw Error(ErrorCode::dimension, "factor panel has " + std::to_string(factors.timestamp_count()) +
                                              " timestamps, return panel has " +
                                              std::to_string(panel.timestamp_count()));
    }
    const Eigen::Index rows = panel.values.cols();
    const Eigen::Index k = factors.values.rows();
    const bool fit_intercept = intercept != InterceptPolicy::none;
    const Eigen::Index cols = k + (fit_intercept ? 1 : 0);

    TimeSeriesPanel out;
    out.ids = panel.ids;
    out.values = Matrix::Constant(panel.values.rows(), rows, std::numeric_limits<double>::quiet_NaN());
    out.observed = Mask::Constant(panel.values.rows(), rows, false);

    Mask factors_observed(1, rows);
    for (Eigen::Index t = 0; t < rows; ++t) factors_observed(0, t) = factors.observed.col(t).all();

    for (Eigen::Index i = 0; i < panel.values.rows(); ++i) {
        std::vector<Eigen::Index> used;
        for (Eigen::Index t = 0; t < rows; ++t) {
            if (panel.observed(i, t) && factors_observed(0, t)) used.push_back(t);
        }
        const auto m = static_cast<Eigen::Index>(used.size());
        if (m < k + 2) {
            throw Error(ErrorCode::coverage, "series '" + panel.ids[static_cast<std::size_t>(i)] + "' has " +
                                                 std::to_string(m) + " rows jointly observed with the factors, need " +
                                                 std::to_string(k + 2));
        }
        Matrix design(m, cols);
        Vector y(m);
        for (Eigen::Index r = 0; r < m; ++r) {
            const Eigen::Index t = used[static_cast<std::size_t>(r)];
            Eigen::Index c = 0;
            if (fit_intercept) design(r, c++) = 1.0;
            for (Eigen::Index f = 0; f < k; ++f) design(r, c++) = factors.values(f, t);
            y(r) = panel.values(i, t);
        }
        const Eigen::ColPivHouseholderQR<Matrix> qr(design);
        if (qr.rank() < cols) {
            throw Error(ErrorCode::collinear_factors,
                        "design matrix for series '" + panel.ids[static_cast<std::size_t>(i)] + "' is rank deficient");
        }
        const Vector beta = qr.solve(y);
        Vector residual = y - design * beta;
        if (intercept == InterceptPolicy::retain) residual.array() += beta(0);
        for (Eigen::Index r = 0; r < m; ++r) {
            const Eigen::Index t = used[static_cast<std::size_t>(r)];
            out.values(i, t) = residual(r);
            out.observed(i, t) = true;
        }
    }
    return out;
}

}  // namespace turnover_spectra
