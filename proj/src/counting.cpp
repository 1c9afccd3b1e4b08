#include "flagzoom/counting.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace flagzoom {

FitResult linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InsufficientData("linear fit needs at least two samples");
    }
    const int n = static_cast<int>(x.size());
    Eigen::MatrixXd m(n, 2);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
        m(i, 0) = 1.0;
        m(i, 1) = x[i];
        rhs(i) = y[i];
    }
    Eigen::Vector2d sol = m.colPivHouseholderQr().solve(rhs);
    FitResult f;
    f.a = sol(1);
    f.b = 0.0;
    f.c = std::exp(sol(0));
    f.residual = std::sqrt((m * sol - rhs).squaredNorm() / n);
    return f;
}

CountSeries count_series(const VarietyDescriptor& desc, const PointSet& ps,
                         const std::vector<WindowSpec>& windows) {
    CountSeries s;
    s.kind = CountSeries::GridKind::time;
    for (const auto& w : windows) {
        auto corner = w.upper_corner();
        if (static_cast<int>(corner.size()) != desc.pic_rank) {
            throw DimensionMismatch("window dimension does not match variety");
        }
        for (int i = 0; i < desc.pic_rank; ++i) {
            if (std::exp(corner[i]) > ps.hmax[i] * (1.0 + 1e-12)) {
                throw IncompleteEnumeration("window exceeds the enumerated height bound");
            }
        }
        long c = 0;
        for (const auto& p : ps.points) {
            if (in_window(multiheight(desc, p), w)) ++c;
        }
        s.grid.push_back(w.t);
        s.counts.push_back(c);
    }
    return s;
}

CountSeries height_count_series(const VarietyDescriptor& desc,
                                const std::vector<double>& h_grid,
                                const EnumerationOptions& opts) {
    if (desc.pic_rank != 1) {
        throw DimensionMismatch("height series requires a single height generator");
    }
    if (h_grid.empty()) throw InsufficientData("empty height grid");
    for (size_t i = 0; i + 1 < h_grid.size(); ++i) {
        if (!(h_grid[i] < h_grid[i + 1])) throw ValidationError("height grid must increase");
    }
    const double hmax = h_grid.back();
    // Exact threshold per grid entry: a point with squared norm n counts for
    // grid value g iff n <= g^2 (same closed-bound rule as the enumeration).
    std::vector<long double> thresholds(h_grid.size());
    for (size_t i = 0; i < h_grid.size(); ++i) {
        thresholds[i] = (long double)h_grid[i] * (long double)h_grid[i];
    }
    const int n_shards = enumeration_shards(desc, {hmax});
    std::vector<std::vector<long>> shard_counts(n_shards,
                                                std::vector<long>(h_grid.size(), 0));
    enumerate_points_visit(
        desc, {hmax}, opts,
        [&](int shard, const RationalPoint& p, const std::array<double, 2>&) {
            long double nsq = (long double)heights_sq(desc, p)[0];
            // first grid index whose threshold admits this point
            size_t lo = std::lower_bound(thresholds.begin(), thresholds.end(), nsq) -
                        thresholds.begin();
            if (lo < shard_counts[shard].size()) shard_counts[shard][lo]++;
        });
    CountSeries s;
    s.kind = CountSeries::GridKind::height;
    s.grid = h_grid;
    s.counts.assign(h_grid.size(), 0);
    for (const auto& sc : shard_counts) {
        for (size_t i = 0; i < sc.size(); ++i) s.counts[i] += sc[i];
    }
    // prefix-sum: counts are cumulative over nested caps
    for (size_t i = 1; i < s.counts.size(); ++i) s.counts[i] += s.counts[i - 1];
    return s;
}

FitResult fit_power_log(const CountSeries& series, std::optional<int> b_fixed) {
    const size_t n = series.grid.size();
    std::vector<int> usable;
    for (size_t i = 0; i < n; ++i) {
        if (series.counts[i] >= 10) usable.push_back(static_cast<int>(i));
    }
    if (usable.size() < 5) {
        throw InsufficientData("need at least 5 grid values with counts >= 10");
    }
    // tail half of the grid by index
    std::vector<int> rows;
    for (int i : usable) {
        if (i >= static_cast<int>(n) / 2) rows.push_back(i);
    }
    const bool fit_b = !b_fixed.has_value();
    const int params = fit_b ? 3 : 2;
    if (static_cast<int>(rows.size()) < params + 1) {
        throw InsufficientData("tail half leaves too few rows for the fit");
    }
    Eigen::MatrixXd m(rows.size(), params);
    Eigen::VectorXd rhs(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        int i = rows[r];
        double x = series.kind == CountSeries::GridKind::height ? std::log(series.grid[i])
                                                                : series.grid[i];
        if (x <= 1e-9 && (fit_b || *b_fixed != 0)) {
            throw ValidationError("log-log term undefined at unit height");
        }
        double y = std::log(static_cast<double>(series.counts[i]));
        m(r, 0) = 1.0;
        m(r, 1) = x;
        if (fit_b) {
            m(r, 2) = std::log(x);
        } else if (*b_fixed != 0) {
            y -= static_cast<double>(*b_fixed) * std::log(x);
        }
        rhs(r) = y;
    }
    Eigen::VectorXd sol = m.colPivHouseholderQr().solve(rhs);
    FitResult f;
    f.c = std::exp(sol(0));
    f.a = sol(1);
    f.b = fit_b ? sol(2) : static_cast<double>(*b_fixed);
    f.residual = std::sqrt((m * sol - rhs).squaredNorm() / rows.size());
    return f;
}

RatioSeries window_ratio_series(const VarietyDescriptor& desc, const WindowSpec& box_family,
                                const std::vector<double>& t_grid,
                                const EnumerationOptions& opts) {
    if (box_family.kind != WindowSpec::Kind::moving_box) {
        throw ValidationError("ratio series requires a moving box family");
    }
    if (t_grid.empty()) throw InsufficientData("empty time grid");
    if (static_cast<int>(box_family.u.size()) != desc.pic_rank) {
        throw DimensionMismatch("window dimension does not match variety");
    }
    std::vector<WindowSpec> windows;
    for (double t : t_grid) windows.push_back(box_family.at_time(t));

    // Enumeration bound: componentwise max over all windows' upper corners.
    std::vector<double> hmax(desc.pic_rank, 0.0);
    for (const auto& w : windows) {
        auto corner = w.upper_corner();
        for (int i = 0; i < desc.pic_rank; ++i) {
            hmax[i] = std::max(hmax[i], std::exp(corner[i]));
        }
    }
    const int n_shards = enumeration_shards(desc, hmax);
    std::vector<std::vector<long>> shard_counts(n_shards,
                                                std::vector<long>(windows.size(), 0));
    enumerate_points_visit(desc, hmax, opts,
                           [&](int shard, const RationalPoint&,
                               const std::array<double, 2>& lh) {
                               Multiheight h;
                               h.coords.assign(lh.begin(), lh.begin() + desc.pic_rank);
                               auto& counts = shard_counts[shard];
                               for (size_t i = 0; i < windows.size(); ++i) {
                                   if (in_window(h, windows[i])) counts[i]++;
                               }
                           });
    RatioSeries rs;
    rs.t = t_grid;
    rs.count.assign(windows.size(), 0);
    for (const auto& sc : shard_counts) {
        for (size_t i = 0; i < sc.size(); ++i) rs.count[i] += sc[i];
    }
    for (size_t i = 0; i < windows.size(); ++i) {
        double nu = nu_measure(desc, windows[i]);
        rs.nu.push_back(nu);
        rs.ratio.push_back(nu > 0 ? rs.count[i] / nu : 0.0);
    }
    // kappa-hat from the last three nonzero-count ratios
    std::vector<double> tail;
    for (size_t i = windows.size(); i-- > 0 && tail.size() < 3;) {
        if (rs.count[i] > 0) tail.push_back(rs.ratio[i]);
    }
    if (!tail.empty()) {
        double sum = 0, mn = tail[0], mx = tail[0];
        for (double r : tail) {
            sum += r;
            mn = std::min(mn, r);
            mx = std::max(mx, r);
        }
        rs.kappa_hat = sum / tail.size();
        rs.spread = rs.kappa_hat > 0 ? (mx - mn) / rs.kappa_hat : 0.0;
    }
    // slope of log count over t (nonzero counts only)
    std::vector<double> xs, ys;
    for (size_t i = 0; i < windows.size(); ++i) {
        if (rs.count[i] > 0) {
            xs.push_back(t_grid[i]);
            ys.push_back(std::log(static_cast<double>(rs.count[i])));
        }
    }
    if (xs.size() >= 2) rs.count_slope = linear_fit(xs, ys);
    return rs;
}

} // namespace flagzoom
