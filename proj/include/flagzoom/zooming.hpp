#pragma once

#include <optional>
#include <vector>

#include "flagzoom/counting.hpp"
#include "flagzoom/heights.hpp"
#include "flagzoom/varieties.hpp"

namespace flagzoom {

/// Closed axis-aligned box in flattened chart coordinates.
struct ZoomBox {
    std::vector<double> lo, hi;

    /// [-halfwidth, halfwidth] in every chart coordinate.
    static ZoomBox centered(const VarietyDescriptor& desc, double halfwidth = 1.0);
    int dim() const { return static_cast<int>(lo.size()); }
    bool contains(const std::vector<double>& flat) const;
};

/// Dilated chart image of the rational points near a center: every stored
/// vector equals rescale(chart(center, v), tau * t) for an enumerated v whose
/// multiheight lies in the window.
struct ZoomCloud {
    double tau = 0.0;
    double t = 0.0;
    WindowSpec window;
    std::vector<TangentVector> points;
    long dropped = 0;  ///< in-window points outside the chart cell
};

/// Cloud from a materialized point list (deterministic order = input order).
ZoomCloud build_zoom_cloud(const VarietyDescriptor& desc, const RealPoint& x, double tau,
                           double t, const WindowSpec& window,
                           const std::vector<RationalPoint>& points);

/// Cloud built from a fresh streaming enumeration covering the window. If
/// keep_box is given, only vectors inside it are stored (mass bookkeeping is
/// unaffected); order is deterministic. Uses a sector-walk fast path on the
/// projective line for narrow boxes.
ZoomCloud build_zoom_cloud_stream(const VarietyDescriptor& desc, const RealPoint& x, double tau,
                                  double t, const WindowSpec& window,
                                  const std::optional<ZoomBox>& keep_box = std::nullopt,
                                  const EnumerationOptions& opts = {});

/// Number of cloud vectors inside the closed box.
long mass_in_box(const ZoomCloud& cloud, const ZoomBox& box);

struct MassSlopeResult {
    std::vector<double> t;
    std::vector<long> mass;
    FitResult fit;                 ///< log mass vs t least squares
    double predicted_slope = 0.0;  ///< rho_y * (beta - tau)
};

/// Dilated in-box mass along a cap-window time grid, with the fitted growth
/// slope. Counts exactly (projective line: divisor-free sector counting; other
/// families: one streaming enumeration shared by all grid times).
/// Throws InsufficientMass when any grid mass is below 10.
MassSlopeResult mass_slope(const VarietyDescriptor& desc, const RealPoint& x, double tau,
                           const std::vector<double>& t_grid, const ZoomBox& box,
                           const EnumerationOptions& opts = {});

/// Same statistic for an arbitrary window family (window.at_time(t_i)); used
/// by multi-generator varieties where cap windows do not apply.
MassSlopeResult mass_slope_windows(const VarietyDescriptor& desc, const RealPoint& x, double tau,
                                   const WindowSpec& family, const std::vector<double>& t_grid,
                                   const ZoomBox& box, const EnumerationOptions& opts = {});

struct UniformityStats {
    int dim = 0;
    long mass = 0;
    double ks = 0.0;        ///< 1-dim only: Kolmogorov-Smirnov vs uniform
    double chi2 = 0.0;      ///< >= 2 dims: chi-square over equal cells
    double p_value = 1.0;   ///< chi-square tail probability
    std::vector<long> cell_counts;
};

/// Uniformity of the cloud restricted to the box: KS statistic for 1-dim
/// charts, chi-square over a 4^dim equal-volume grid otherwise.
/// Throws InsufficientMass when fewer than 50 vectors land in the box.
UniformityStats uniformity_stats(const VarietyDescriptor& desc, const ZoomCloud& cloud,
                                 const ZoomBox& box);

/// Upper regularized incomplete gamma Q(a, x) (chi-square tail helper).
double gamma_q(double a, double x);

} // namespace flagzoom
