#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace rgmv {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Date = std::chrono::year_month_day;

Date parse_iso_date(std::string_view text);
std::string format_iso_date(const Date& date);

/// Price levels, one row per trading date and one column per ticker.
struct PricePanel {
    std::vector<Date> dates;
    std::vector<std::string> tickers;
    MatrixXd prices;  // rows = dates, cols = tickers

    Index rows() const { return prices.rows(); }
    Index assets() const { return prices.cols(); }

    /// Throws DataError unless dates are strictly increasing, tickers are
    /// unique, every price is finite and positive, and shapes agree.
    void validate() const;
};

/// Log returns; dates[t] is the date of the later of the two prices.
struct ReturnPanel {
    std::vector<Date> dates;
    std::vector<std::string> tickers;
    MatrixXd returns;

    Index rows() const { return returns.rows(); }
    Index assets() const { return returns.cols(); }
    void validate() const;
};

/// Inclusive row range [start, end] of a ReturnPanel used to fit weights
/// that are first held on `rebalance_row`.
struct EstimationWindow {
    Index start = 0;
    Index end = 0;
    Index rebalance_row = 0;
    Date rebalance_date{};

    Index length() const { return end - start + 1; }
};

enum class CovKind { sample, linear_shrinkage, exact_synthetic };

std::string_view to_string(CovKind kind);

/// Symmetric PSD covariance matrix tagged with its provenance.
struct CovEstimate {
    MatrixXd matrix;
    CovKind kind = CovKind::sample;

    CovEstimate() = default;
    /// Validates symmetry (1e-10 relative) and PSD (lambda_min >= -1e-8 lambda_max).
    CovEstimate(MatrixXd m, CovKind k);

    Index dimension() const { return matrix.rows(); }
};

PricePanel parse_price_csv(std::istream& in, const std::string& source = "<stream>");
PricePanel load_price_csv(const std::filesystem::path& path);

ReturnPanel to_log_returns(const PricePanel& panel);

/// One window per monthly rebalance date: the first trading row of each
/// calendar month whose index leaves `window_length` rows of history.
std::vector<EstimationWindow> rolling_windows(const ReturnPanel& panel, Index window_length);

/// (1/T) sum (x_t - mean)(x_t - mean)^T over the rows of `window`.
CovEstimate sample_covariance(const MatrixXd& window);

/// Tr(A) / lambda_max(A).
double effective_rank(const CovEstimate& cov);

}  // namespace rgmv
