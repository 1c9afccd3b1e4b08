#include "flagzoom/dynamics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace flagzoom {

namespace {

using LMat = std::array<std::array<long double, 4>, 4>;  // column-major blocks

// Floating LLL on the columns of m (dimension d <= 4), delta = 0.99 for a
// strong reduction. Unimodular column operations only.
void lll_columns(LMat& m, int d) {
    constexpr long double delta = 0.99L;
    std::array<std::array<long double, 4>, 4> mu{};
    std::array<long double, 4> bstar_sq{};
    auto recompute = [&]() {
        // Gram-Schmidt data from scratch (d <= 4: cheap and stable enough)
        std::array<std::array<long double, 4>, 4> gs{};
        for (int i = 0; i < d; ++i) {
            for (int r = 0; r < d; ++r) gs[i][r] = m[i][r];
            for (int j = 0; j < i; ++j) {
                long double num = 0;
                for (int r = 0; r < d; ++r) num += m[i][r] * gs[j][r];
                mu[i][j] = num / bstar_sq[j];
                for (int r = 0; r < d; ++r) gs[i][r] -= mu[i][j] * gs[j][r];
            }
            long double nn = 0;
            for (int r = 0; r < d; ++r) nn += gs[i][r] * gs[i][r];
            bstar_sq[i] = nn;
        }
    };
    recompute();
    int k = 1;
    int guard = 0;
    while (k < d && ++guard < 10000) {
        // size reduction
        for (int j = k - 1; j >= 0; --j) {
            long double q = std::floor((double)mu[k][j] + 0.5);
            if (q != 0) {
                for (int r = 0; r < d; ++r) m[k][r] -= q * m[j][r];
            }
        }
        recompute();
        if (bstar_sq[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * bstar_sq[k - 1]) {
            ++k;
        } else {
            std::swap(m[k], m[k - 1]);
            recompute();
            k = std::max(1, k - 1);
        }
    }
}

} // namespace

double lattice_lambda1(const Eigen::MatrixXd& columns) {
    const int d = static_cast<int>(columns.rows());
    if (d < 2 || d > 4 || columns.cols() != d) {
        throw DimensionMismatch("shortest-vector search supports square dimensions 2..4");
    }
    LMat m{};
    for (int c = 0; c < d; ++c) {
        for (int r = 0; r < d; ++r) m[c][r] = columns(r, c);
    }
    lll_columns(m, d);
    // exhaustive sweep over small coefficients of the reduced basis; for an
    // LLL-reduced basis in dimension <= 4 the shortest vector lies well
    // inside this box
    const int box = 3;
    long double best = std::numeric_limits<long double>::infinity();
    std::array<int, 4> c{};
    auto eval = [&]() {
        long double nn = 0;
        for (int r = 0; r < d; ++r) {
            long double s = 0;
            for (int j = 0; j < d; ++j) s += c[j] * m[j][r];
            nn += s * s;
        }
        if (nn > 0 && nn < best) best = nn;
    };
    int lim2 = d > 2 ? box : 0, lim3 = d > 3 ? box : 0;
    for (c[0] = 0; c[0] <= box; ++c[0]) {  // half space: norms are symmetric
        for (c[1] = -box; c[1] <= box; ++c[1]) {
            for (c[2] = -lim2; c[2] <= lim2; ++c[2]) {
                for (c[3] = -lim3; c[3] <= lim3; ++c[3]) eval();
            }
        }
    }
    return static_cast<double>(std::sqrt((double)best));
}

Eigen::MatrixXd flow_matrix(const VarietyDescriptor& desc, double t) {
    switch (desc.family) {
        case Family::grassmannian: {
            const int l = desc.l, d = desc.d;
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
            const double wtop = -t * static_cast<double>(d - l) / d;
            const double wbot = t * static_cast<double>(l) / d;
            for (int i = 0; i < l; ++i) a(i, i) = std::exp(wtop);
            for (int i = l; i < d; ++i) a(i, i) = std::exp(wbot);
            return a;
        }
        case Family::full_flag3: {
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3);
            a(0, 0) = std::exp(-t);
            a(1, 1) = 1.0;
            a(2, 2) = std::exp(t);
            return a;
        }
        case Family::split_quadric:
            throw UnsupportedFamily("no diagonal flow is defined for quadrics here");
    }
    throw UnsupportedFamily("unknown family");
}

double hermite_lambda1_bound(int d) {
    switch (d) {
        case 2: return std::pow(4.0 / 3.0, 0.25);
        case 3: return std::pow(2.0, 1.0 / 6.0);
        case 4: return std::pow(2.0, 0.25);
        default: throw DimensionMismatch("Hermite bound tabulated for dimensions 2..4");
    }
}

std::string to_string(EscapeVerdict v) {
    switch (v) {
        case EscapeVerdict::bounded_below: return "bounded-below";
        case EscapeVerdict::sublinear_decay: return "sublinear-decay";
        case EscapeVerdict::linear_decay: return "linear-decay";
    }
    return "?";
}

EscapeTrace escape_trace(const VarietyDescriptor& desc, const RealPoint& x,
                         const std::vector<double>& t_grid) {
    if (t_grid.empty() || t_grid.front() != 0.0) {
        throw ValidationError("time grid must start at 0");
    }
    for (size_t i = 0; i + 1 < t_grid.size(); ++i) {
        if (!(t_grid[i] < t_grid[i + 1])) throw ValidationError("time grid must increase");
    }
    if (t_grid.back() > 25.0) {
        throw PrecisionLoss("flow time above 25 exceeds the extended-precision budget");
    }
    EscapeTrace tr;
    tr.t = t_grid;
    tr.lambda1.resize(t_grid.size());
    tr.rate.resize(t_grid.size());
    const Eigen::MatrixXd sinv = x.frame.transpose();
    for (size_t i = 0; i < t_grid.size(); ++i) {
        const Eigen::MatrixXd m = flow_matrix(desc, t_grid[i]) * sinv;
        tr.lambda1[i] = lattice_lambda1(m);
        tr.rate[i] = t_grid[i] > 0 ? -std::log(tr.lambda1[i]) / t_grid[i] : 0.0;
    }
    const double lam_min = *std::min_element(tr.lambda1.begin(), tr.lambda1.end());
    if (lam_min >= 0.2) {
        tr.verdict = EscapeVerdict::bounded_below;
        return tr;
    }
    // tail slope of -log lambda1 over the later half of the grid
    std::vector<double> xs, ys;
    for (size_t i = t_grid.size() / 2; i < t_grid.size(); ++i) {
        xs.push_back(t_grid[i]);
        ys.push_back(-std::log(tr.lambda1[i]));
    }
    if (xs.size() >= 2) {
        double mx = 0, my = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= xs.size();
        my /= xs.size();
        double sxx = 0, sxy = 0;
        for (size_t i = 0; i < xs.size(); ++i) {
            sxx += (xs[i] - mx) * (xs[i] - mx);
            sxy += (xs[i] - mx) * (ys[i] - my);
        }
        tr.slope = sxx > 0 ? sxy / sxx : 0.0;
    }
    tr.verdict = tr.slope >= 0.05 ? EscapeVerdict::linear_decay : EscapeVerdict::sublinear_decay;
    return tr;
}

} // namespace flagzoom
