#include "rgmv/market_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "rgmv/errors.hpp"
#include "rgmv/linalg.hpp"

namespace rgmv {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record; supports RFC-4180 double-quoted fields.
std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(trim(current));
    return fields;
}

std::string cell_ref(const std::string& source, std::size_t line, std::size_t column) {
    return source + ": row " + std::to_string(line) + ", column " + std::to_string(column);
}

}  // namespace

Date parse_iso_date(std::string_view text) {
    int y = 0;
    unsigned m = 0, d = 0;
    auto parse = [&](std::string_view part, auto& out) {
        auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && ptr == part.data() + part.size();
    };
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse(text.substr(0, 4), y) ||
        !parse(text.substr(5, 2), m) || !parse(text.substr(8, 2), d)) {
        throw DataError("invalid ISO-8601 date '" + std::string(text) + "'");
    }
    const Date date{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!date.ok()) throw DataError("invalid calendar date '" + std::string(text) + "'");
    return date;
}

std::string format_iso_date(const Date& date) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(date.year()),
                  static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
    return buf;
}

void PricePanel::validate() const {
    if (prices.rows() != static_cast<Index>(dates.size()) ||
        prices.cols() != static_cast<Index>(tickers.size())) {
        throw DataError("price panel shape does not match dates x tickers");
    }
    for (std::size_t t = 1; t < dates.size(); ++t) {
        if (!(dates[t - 1] < dates[t])) throw DataError("price panel dates must be strictly increasing");
    }
    if (std::set<std::string>(tickers.begin(), tickers.end()).size() != tickers.size()) {
        throw DataError("duplicate ticker in price panel");
    }
    for (Index t = 0; t < prices.rows(); ++t) {
        for (Index j = 0; j < prices.cols(); ++j) {
            const double p = prices(t, j);
            if (!std::isfinite(p) || p <= 0.0) {
                throw DataError("price at row " + std::to_string(t) + ", ticker " + tickers[j] +
                                " must be finite and positive");
            }
        }
    }
}

void ReturnPanel::validate() const {
    if (returns.rows() != static_cast<Index>(dates.size()) ||
        returns.cols() != static_cast<Index>(tickers.size())) {
        throw DataError("return panel shape does not match dates x tickers");
    }
    if (!returns.allFinite()) throw DataError("return panel contains non-finite entries");
}

std::string_view to_string(CovKind kind) {
    switch (kind) {
        case CovKind::sample: return "sample";
        case CovKind::linear_shrinkage: return "linear-shrinkage";
        case CovKind::exact_synthetic: return "exact-synthetic";
    }
    return "unknown";
}

CovEstimate::CovEstimate(MatrixXd m, CovKind k) : matrix(std::move(m)), kind(k) {
    if (matrix.rows() != matrix.cols()) throw std::invalid_argument("covariance must be square");
    if (!matrix.allFinite()) throw std::invalid_argument("covariance has non-finite entries");
    const double scale = matrix.cwiseAbs().maxCoeff();
    if (matrix.size() == 0 || scale == 0.0) return;
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
        throw std::invalid_argument("covariance is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(matrix, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (lo < -1e-8 * hi) {
        throw std::invalid_argument("covariance is not positive semi-definite");
    }
}

PricePanel parse_price_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            header = split_record(line);
            break;
        }
    }
    if (header.size() < 2) throw DataError(source + ": header must be 'date,<ticker>,...'");
    if (!header[0].empty() && header[0].substr(0, 3) == "\xEF\xBB\xBF") header[0].erase(0, 3);
    const std::size_t n = header.size() - 1;

    struct Row {
        Date date;
        std::vector<double> prices;
        std::size_t line;
    };
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split_record(line);
        if (fields.size() != header.size()) {
            throw DataError(source + ": row " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
        }
        Row row;
        row.line = line_no;
        try {
            row.date = parse_iso_date(fields[0]);
        } catch (const DataError& e) {
            throw DataError(cell_ref(source, line_no, 1) + ": " + e.what());
        }
        row.prices.resize(n);
        for (std::size_t j = 0; j < n; ++j) {
            const std::string& cell = fields[j + 1];
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
            if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
                throw DataError(cell_ref(source, line_no, j + 2) + " (" + header[j + 1] + "): unparseable value '" + cell + "'");
            }
            if (!std::isfinite(value) || value <= 0.0) {
                throw DataError(cell_ref(source, line_no, j + 2) + " (" + header[j + 1] + "): non-positive price " + cell);
            }
            row.prices[j] = value;
        }
        rows.push_back(std::move(row));
    }

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.date < b.date; });
    for (std::size_t t = 1; t < rows.size(); ++t) {
        if (rows[t].date == rows[t - 1].date) {
            throw DataError(source + ": duplicate date " + format_iso_date(rows[t].date) + " (rows " +
                            std::to_string(rows[t - 1].line) + " and " + std::to_string(rows[t].line) + ")");
        }
    }

    PricePanel panel;
    panel.tickers.assign(header.begin() + 1, header.end());
    panel.prices.resize(static_cast<Index>(rows.size()), static_cast<Index>(n));
    panel.dates.reserve(rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        panel.dates.push_back(rows[t].date);
        for (std::size_t j = 0; j < n; ++j) panel.prices(static_cast<Index>(t), static_cast<Index>(j)) = rows[t].prices[j];
    }
    panel.validate();
    return panel;
}

PricePanel load_price_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open price file " + path.string());
    return parse_price_csv(in, path.string());
}

ReturnPanel to_log_returns(const PricePanel& panel) {
    if (panel.rows() < 2) throw DataError("need at least two price rows to form returns");
    ReturnPanel out;
    out.tickers = panel.tickers;
    out.dates.assign(panel.dates.begin() + 1, panel.dates.end());
    const Index t = panel.rows() - 1;
    out.returns = (panel.prices.bottomRows(t).array() / panel.prices.topRows(t).array()).log().matrix();
    return out;
}

std::vector<EstimationWindow> rolling_windows(const ReturnPanel& panel, Index window_length) {
    if (window_length < 2) throw std::invalid_argument("window length must be at least 2");
    if (panel.rows() <= window_length) {
        throw DataError("insufficient history: " + std::to_string(panel.rows()) +
                        " rows for a window of " + std::to_string(window_length));
    }
    std::vector<EstimationWindow> windows;
    for (Index r = window_length; r < panel.rows(); ++r) {
        const auto& d = panel.dates[static_cast<std::size_t>(r)];
        const auto& prev = panel.dates[static_cast<std::size_t>(r - 1)];
        const bool month_start = d.year() != prev.year() || d.month() != prev.month();
        if (!month_start) continue;
        windows.push_back({r - window_length, r - 1, r, d});
    }
    if (windows.empty()) {
        throw DataError("no monthly rebalance date after the first " + std::to_string(window_length) +
                        " rows");
    }
    return windows;
}

CovEstimate sample_covariance(const MatrixXd& window) {
    if (window.rows() < 2) throw DataError("sample covariance needs at least two observations");
    const VectorXd mean = window.colwise().mean();
    const MatrixXd centered = window.rowwise() - mean.transpose();
    MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(window.rows());
    cov = 0.5 * (cov + cov.transpose());
    return CovEstimate(std::move(cov), CovKind::sample);
}

double effective_rank(const CovEstimate& cov) {
    const double top = top_eigenvalue(cov.matrix);
    if (top <= 0.0) throw std::invalid_argument("effective rank undefined for a zero matrix");
    return cov.matrix.trace() / top;
}

}  // namespace rgmv
