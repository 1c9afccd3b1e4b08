#include "flagzoom/heights.hpp"

#include <cmath>

namespace flagzoom {

Multiheight multiheight(const VarietyDescriptor& desc, const RationalPoint& p) {
    auto lh = log_heights(desc, p);
    Multiheight h;
    h.coords.assign(lh.begin(), lh.begin() + desc.pic_rank);
    return h;
}

WindowSpec WindowSpec::cap(double t) {
    if (!(t >= 0.0)) throw ValidationError("cap bound must be >= 0");
    WindowSpec w;
    w.kind = Kind::single_cap;
    w.t = t;
    return w;
}

WindowSpec WindowSpec::moving_box(std::vector<double> lo, std::vector<double> hi,
                                  std::vector<double> u, double t) {
    if (lo.size() != hi.size() || lo.size() != u.size() || lo.empty()) {
        throw DimensionMismatch("moving box component sizes differ");
    }
    for (size_t i = 0; i < lo.size(); ++i) {
        if (!(lo[i] <= hi[i])) throw ValidationError("box lower bound exceeds upper bound");
        if (!(u[i] > 0.0)) throw ValidationError("drift must be strictly positive");
    }
    WindowSpec w;
    w.kind = Kind::moving_box;
    w.t = t;
    w.d0_lo = std::move(lo);
    w.d0_hi = std::move(hi);
    w.u = std::move(u);
    return w;
}

WindowSpec WindowSpec::at_time(double t_new) const {
    WindowSpec w = *this;
    w.t = t_new;
    return w;
}

std::vector<double> WindowSpec::upper_corner() const {
    if (kind == Kind::single_cap) return {t};
    std::vector<double> c(u.size());
    for (size_t i = 0; i < u.size(); ++i) c[i] = d0_hi[i] + t * u[i];
    return c;
}

bool in_window(const Multiheight& h, const WindowSpec& w) {
    if (static_cast<int>(h.coords.size()) != w.dim()) {
        throw DimensionMismatch("multiheight/window dimension mismatch");
    }
    if (w.kind == WindowSpec::Kind::single_cap) {
        return h.coords[0] >= 0.0 && h.coords[0] <= w.t;
    }
    for (size_t i = 0; i < h.coords.size(); ++i) {
        double lo = w.d0_lo[i] + w.t * w.u[i];
        double hi = w.d0_hi[i] + w.t * w.u[i];
        if (h.coords[i] < lo || h.coords[i] > hi) return false;
    }
    return true;
}

int count_exponent(const VarietyDescriptor& desc) {
    if (desc.pic_rank != 1) {
        throw DimensionMismatch("count exponent requires a single height generator");
    }
    // rho_y * beta; beta = rho_y / chi_y^{-1}... stored exactly as fractions:
    // a = rho_y * beta.num / beta.den, an integer for all supported families.
    const Frac& beta = desc.generators[0].beta;
    long num = static_cast<long>(desc.rho_y) * beta.num;
    if (num % beta.den != 0) throw ValidationError("non-integral count exponent");
    return static_cast<int>(num / beta.den);
}

double nu_measure(const VarietyDescriptor& desc, const WindowSpec& w) {
    if (w.kind == WindowSpec::Kind::single_cap) {
        double a = static_cast<double>(count_exponent(desc));
        return (std::exp(a * w.t) - 1.0) / a;
    }
    if (static_cast<int>(w.u.size()) != desc.pic_rank) {
        throw DimensionMismatch("window dimension does not match variety");
    }
    double prod = 1.0;
    for (size_t i = 0; i < w.u.size(); ++i) {
        double c = static_cast<double>(desc.rho_weights[i]);
        double lo = w.d0_lo[i] + w.t * w.u[i];
        double hi = w.d0_hi[i] + w.t * w.u[i];
        prod *= (std::exp(c * hi) - std::exp(c * lo)) / c;
    }
    return prod;
}

double nu_growth_rate(const VarietyDescriptor& desc, const WindowSpec& w) {
    if (w.kind == WindowSpec::Kind::single_cap) {
        return static_cast<double>(count_exponent(desc));
    }
    if (static_cast<int>(w.u.size()) != desc.pic_rank) {
        throw DimensionMismatch("window dimension does not match variety");
    }
    double r = 0.0;
    for (size_t i = 0; i < w.u.size(); ++i) {
        r += static_cast<double>(desc.rho_weights[i]) * w.u[i];
    }
    return r;
}

} // namespace flagzoom
