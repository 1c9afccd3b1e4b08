#pragma once

#include <optional>
#include <vector>

#include "flagzoom/heights.hpp"
#include "flagzoom/varieties.hpp"

namespace flagzoom {

/// Count series over a nested family of windows. For height grids the grid
/// stores the height bounds H; for time grids it stores the window times t.
struct CountSeries {
    enum class GridKind { height, time };
    GridKind kind = GridKind::height;
    std::vector<double> grid;
    std::vector<long> counts;
};

/// Power-log fit N ~ c * H^a * (log H)^b (log-log least squares).
struct FitResult {
    double a = 0.0;  ///< power exponent
    double b = 0.0;  ///< log exponent
    double c = 0.0;  ///< leading constant
    double residual = 0.0;  ///< RMS of log-space residuals over fitted rows
};

/// Simple least-squares line y = a*x + log(c); returned in FitResult form
/// with b = 0 and residual the RMS in y.
FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y);

/// Counts of enumerated points inside each window of a nested family,
/// computed from a materialized point set. Windows must fit inside the
/// enumeration bound of ps (throws IncompleteEnumeration otherwise).
CountSeries count_series(const VarietyDescriptor& desc, const PointSet& ps,
                         const std::vector<WindowSpec>& windows);

/// Single-height counting N(H) on an increasing height grid, streaming (no
/// point materialization). One enumeration pass at the largest bound.
CountSeries height_count_series(const VarietyDescriptor& desc,
                                const std::vector<double>& h_grid,
                                const EnumerationOptions& opts = {});

/// Least-squares fit of log N = log c + a log H + b log log H over the tail
/// half of the grid (counts >= 10 only). If b_fixed is given, b is pinned and
/// only (a, c) are fitted. Throws InsufficientData when fewer than 5 usable
/// grid values exist or the tail half leaves too few rows.
FitResult fit_power_log(const CountSeries& series, std::optional<int> b_fixed = std::nullopt);

/// Window-count ratios against the growth measure for a moving box family.
struct RatioSeries {
    std::vector<double> t;
    std::vector<long> count;
    std::vector<double> nu;
    std::vector<double> ratio;
    double kappa_hat = 0.0;   ///< mean of the last three nonzero ratios
    double spread = 0.0;      ///< (max-min)/kappa_hat over those ratios
    FitResult count_slope;    ///< fit of log count vs t (nonzero counts)
};

/// Streams one enumeration covering the largest window and counts every
/// window of the family D_{t_i} = D_0 + t_i * u.
RatioSeries window_ratio_series(const VarietyDescriptor& desc, const WindowSpec& box_family,
                                const std::vector<double>& t_grid,
                                const EnumerationOptions& opts = {});

} // namespace flagzoom
