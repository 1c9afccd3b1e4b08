#pragma once

#include <vector>

#include "flagzoom/varieties.hpp"

namespace flagzoom {

/// Vector of log-heights, one coordinate per height generator. For points of
/// the integral models every coordinate is >= 0 (integer norms are >= 1).
struct Multiheight {
    std::vector<double> coords;
};

Multiheight multiheight(const VarietyDescriptor& desc, const RationalPoint& p);

/// Window on multiheight space. Two kinds:
///  - single_cap: 0 <= h <= t on the unique generator;
///  - moving_box: d0_lo + t*u <= h <= d0_hi + t*u componentwise, with the
///    drift u strictly positive.
struct WindowSpec {
    enum class Kind { single_cap, moving_box };
    Kind kind = Kind::single_cap;
    double t = 0.0;
    std::vector<double> d0_lo, d0_hi, u;

    static WindowSpec cap(double t);
    static WindowSpec moving_box(std::vector<double> lo, std::vector<double> hi,
                                 std::vector<double> u, double t);
    int dim() const { return kind == Kind::single_cap ? 1 : static_cast<int>(u.size()); }
    /// Same shape at a different time offset.
    WindowSpec at_time(double t_new) const;
    /// Upper corner of the window (largest admissible log-height per axis).
    std::vector<double> upper_corner() const;
};

/// Closed-window membership test (ties at boundaries count as inside).
/// Throws DimensionMismatch if h and w have different dimensions.
bool in_window(const Multiheight& h, const WindowSpec& w);

/// Growth measure of the window: integral of exp(<c, y>) over the window in
/// log-height coordinates, where c = desc.rho_weights. Closed form:
///  - single_cap: (e^{a t} - 1)/a with a = count_exponent;
///  - moving_box: product over axes of (e^{c_i hi_i} - e^{c_i lo_i})/c_i
///    evaluated at the drifted box. Satisfies nu(D_t) = e^{t <c,u>} nu(D_0).
double nu_measure(const VarietyDescriptor& desc, const WindowSpec& w);

/// d/dt log nu(D_t): a for caps, <c,u> for moving boxes.
double nu_growth_rate(const VarietyDescriptor& desc, const WindowSpec& w);

/// Total count exponent a = rho_y * beta of a single-generator family
/// (Gr(l,d): d; SplitQuadric(n): n-2). Throws DimensionMismatch for
/// multi-generator varieties.
int count_exponent(const VarietyDescriptor& desc);

} // namespace flagzoom
