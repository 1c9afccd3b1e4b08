#include "flagzoom/varieties.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>

namespace flagzoom {

namespace {

using std::int64_t;
using i128 = __int128;

int binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
    return static_cast<int>(r);
}

// Lexicographic k-subsets of {0..n-1}; fixed global ordering for minors.
std::vector<std::vector<int>> subsets(int n, int k) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(k);
    std::function<void(int, int)> rec = [&](int start, int pos) {
        if (pos == k) {
            out.push_back(cur);
            return;
        }
        for (int i = start; i <= n - (k - pos); ++i) {
            cur[pos] = i;
            rec(i + 1, pos + 1);
        }
    };
    rec(0, 0);
    return out;
}

i128 det_cols(const std::vector<I64Vec>& rows, const std::vector<int>& cols) {
    int l = static_cast<int>(rows.size());
    if (l == 1) return rows[0][cols[0]];
    if (l == 2) {
        return (i128)rows[0][cols[0]] * rows[1][cols[1]] -
               (i128)rows[0][cols[1]] * rows[1][cols[0]];
    }
    // l == 3
    i128 s = 0;
    const int c0 = cols[0], c1 = cols[1], c2 = cols[2];
    s += (i128)rows[0][c0] * ((i128)rows[1][c1] * rows[2][c2] - (i128)rows[1][c2] * rows[2][c1]);
    s -= (i128)rows[0][c1] * ((i128)rows[1][c0] * rows[2][c2] - (i128)rows[1][c2] * rows[2][c0]);
    s += (i128)rows[0][c2] * ((i128)rows[1][c0] * rows[2][c1] - (i128)rows[1][c1] * rows[2][c0]);
    return s;
}

int64_t checked_i64(i128 v, const char* what) {
    if (v > INT64_MAX || v < INT64_MIN) {
        throw BudgetExceeded(std::string("int64 range exceeded in ") + what);
    }
    return static_cast<int64_t>(v);
}

i128 norm_sq_i128(const I64Vec& v) {
    i128 s = 0;
    for (auto x : v) s += (i128)x * x;
    return s;
}

bool first_nonzero_positive(const I64Vec& v) {
    for (auto x : v) {
        if (x != 0) return x > 0;
    }
    return false;
}

// Closed height bound: keep v iff |v| <= hmax, decided on exact squared norms.
bool norm_within(i128 norm_sq, double hmax) {
    return static_cast<long double>(norm_sq) <=
           static_cast<long double>(hmax) * static_cast<long double>(hmax);
}

// ---------------------------------------------------------------------------
// quadratic form of the split quadric families

int64_t q_int(int n, const I64Vec& v) {
    if (n == 4) {
        i128 q = (i128)v[0] * v[3] - (i128)v[1] * v[2];
        return checked_i64(q, "quadric form");
    }
    i128 q = (i128)v[0] * v[n - 1];
    for (int i = 1; i + 1 < n; ++i) q -= (i128)v[i] * v[i];
    return checked_i64(q, "quadric form");
}

double q_real(int n, const Eigen::VectorXd& v) {
    if (n == 4) return v(0) * v(3) - v(1) * v(2);
    double q = v(0) * v(n - 1);
    for (int i = 1; i + 1 < n; ++i) q -= v(i) * v(i);
    return q;
}

// Symmetric bilinear form with B(v, v) = q(v).
double b_real(int n, const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
    if (n == 4) return 0.5 * (u(0) * w(3) + u(3) * w(0)) - 0.5 * (u(1) * w(2) + u(2) * w(1));
    double b = 0.5 * (u(0) * w(n - 1) + u(n - 1) * w(0));
    for (int i = 1; i + 1 < n; ++i) b -= u(i) * w(i);
    return b;
}

} // namespace

// ---------------------------------------------------------------------------
// descriptors

int VarietyDescriptor::chart_dim() const {
    int s = 0;
    for (int k : grading_dims) s += k;
    return s;
}

int VarietyDescriptor::ambient_dim() const {
    switch (family) {
        case Family::grassmannian: return binom(d, l);
        case Family::split_quadric: return n;
        case Family::full_flag3: return 6;
    }
    return 0;
}

std::string VarietyDescriptor::name() const {
    switch (family) {
        case Family::grassmannian:
            return "gr:" + std::to_string(l) + ":" + std::to_string(d);
        case Family::split_quadric:
            return "quadric:" + std::to_string(n);
        case Family::full_flag3:
            return "flag3";
    }
    return "";
}

VarietyDescriptor make_grassmannian(int l, int d) {
    if (!(1 <= l && l < d && d <= 4)) {
        throw ValidationError("grassmannian requires 1 <= l < d <= 4");
    }
    VarietyDescriptor v;
    v.family = Family::grassmannian;
    v.l = l;
    v.d = d;
    v.grading_dims = {l * (d - l)};
    v.rho_y = l * (d - l);
    v.pic_rank = 1;
    // chi_y = l(d-l)/d, beta = d/(l(d-l)); count exponent rho_y * beta = d.
    v.generators = {{"pluecker", Frac{l * (d - l), d}, Frac{d, l * (d - l)}}};
    v.rho_weights = {d};
    return v;
}

VarietyDescriptor make_split_quadric(int n) {
    if (!(4 <= n && n <= 6)) {
        throw ValidationError("split quadric supports ambient dimension 4..6");
    }
    VarietyDescriptor v;
    v.family = Family::split_quadric;
    v.n = n;
    v.grading_dims = {n - 2};
    v.rho_y = n - 2;
    v.pic_rank = 1;
    v.generators = {{"vector", Frac{1, 1}, Frac{1, 1}}};
    v.rho_weights = {n - 2};
    return v;
}

VarietyDescriptor make_full_flag3() {
    VarietyDescriptor v;
    v.family = Family::full_flag3;
    v.grading_dims = {2, 1};
    v.rho_y = 4;
    v.pic_rank = 2;
    v.generators = {{"line", Frac{1, 1}, Frac{1, 1}}, {"plane", Frac{1, 1}, Frac{1, 1}}};
    v.rho_weights = {2, 2};
    return v;
}

VarietyDescriptor parse_variety(const std::string& s) {
    std::vector<std::string> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    try {
        if (!parts.empty() && parts[0] == "gr" && parts.size() == 3) {
            return make_grassmannian(std::stoi(parts[1]), std::stoi(parts[2]));
        }
        if (!parts.empty() && parts[0] == "quadric" && parts.size() == 2) {
            return make_split_quadric(std::stoi(parts[1]));
        }
        if (s == "flag3") return make_full_flag3();
    } catch (const Error&) {
        throw;
    } catch (const std::exception&) {
        throw ValidationError("malformed variety spec: " + s);
    }
    throw ValidationError("unknown variety spec: " + s);
}

// ---------------------------------------------------------------------------
// exact representations

I64Vec representative(const VarietyDescriptor& desc, const RationalPoint& p) {
    switch (desc.family) {
        case Family::grassmannian: return p.pluecker;
        case Family::split_quadric: return p.vec;
        case Family::full_flag3: {
            I64Vec out = p.vec;
            out.insert(out.end(), p.covec.begin(), p.covec.end());
            return out;
        }
    }
    return {};
}

std::array<int64_t, 2> heights_sq(const VarietyDescriptor& desc, const RationalPoint& p) {
    switch (desc.family) {
        case Family::grassmannian:
            return {checked_i64(norm_sq_i128(p.pluecker), "height"), 0};
        case Family::split_quadric:
            return {checked_i64(norm_sq_i128(p.vec), "height"), 0};
        case Family::full_flag3:
            return {checked_i64(norm_sq_i128(p.vec), "height"),
                    checked_i64(norm_sq_i128(p.covec), "height")};
    }
    return {0, 0};
}

std::array<double, 2> log_heights(const VarietyDescriptor& desc, const RationalPoint& p) {
    auto hs = heights_sq(desc, p);
    std::array<double, 2> out{0.0, 0.0};
    out[0] = 0.5 * std::log(static_cast<double>(hs[0]));
    if (desc.pic_rank > 1) out[1] = 0.5 * std::log(static_cast<double>(hs[1]));
    return out;
}

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

void check_primitive_canonical(const I64Vec& v, const char* label) {
    require(!v.empty(), std::string(label) + ": empty");
    int64_t g = gcd64(v);
    require(g == 1, std::string(label) + ": not primitive");
    require(first_nonzero_positive(v), std::string(label) + ": sign not canonical");
}

// Staircase/positivity/reduction checks of a row-style Hermite normal form.
void check_hnf_shape(const std::vector<I64Vec>& rows, int d) {
    int prev_pivot = -1;
    for (const auto& r : rows) {
        require(static_cast<int>(r.size()) == d, "basis row length mismatch");
        int piv = -1;
        for (int j = 0; j < d; ++j) {
            if (r[j] != 0) { piv = j; break; }
        }
        require(piv >= 0, "zero basis row");
        require(piv > prev_pivot, "basis rows not in staircase order");
        require(r[piv] > 0, "basis pivot not positive");
        prev_pivot = piv;
    }
    // Entries above each pivot must be reduced into [0, pivot).
    for (size_t i = 1; i < rows.size(); ++i) {
        int piv = -1;
        for (int j = 0; j < d; ++j) {
            if (rows[i][j] != 0) { piv = j; break; }
        }
        for (size_t k = 0; k < i; ++k) {
            require(rows[k][piv] >= 0 && rows[k][piv] < rows[i][piv],
                    "basis entry above pivot not reduced");
        }
    }
}

} // namespace

void check_exact_invariants(const VarietyDescriptor& desc, const RationalPoint& p) {
    switch (desc.family) {
        case Family::grassmannian: {
            require(static_cast<int>(p.pluecker.size()) == binom(desc.d, desc.l),
                    "pluecker length mismatch");
            check_primitive_canonical(p.pluecker, "pluecker");
            require(static_cast<int>(p.basis.size()) == desc.l, "basis row count mismatch");
            check_hnf_shape(p.basis, desc.d);
            auto cols = subsets(desc.d, desc.l);
            for (size_t i = 0; i < cols.size(); ++i) {
                i128 m = det_cols(p.basis, cols[i]);
                require(m == (i128)p.pluecker[i], "pluecker does not match basis minors");
            }
            if (desc.l == 2 && desc.d == 4) {
                i128 rel = (i128)p.pluecker[0] * p.pluecker[5] -
                           (i128)p.pluecker[1] * p.pluecker[4] +
                           (i128)p.pluecker[2] * p.pluecker[3];
                require(rel == 0, "pluecker quadratic relation violated");
            }
            break;
        }
        case Family::split_quadric: {
            require(static_cast<int>(p.vec.size()) == desc.n, "vector length mismatch");
            check_primitive_canonical(p.vec, "vector");
            require(q_int(desc.n, p.vec) == 0, "vector not isotropic");
            break;
        }
        case Family::full_flag3: {
            require(p.vec.size() == 3 && p.covec.size() == 3, "flag component length mismatch");
            check_primitive_canonical(p.vec, "line vector");
            check_primitive_canonical(p.covec, "plane normal");
            i128 dot = 0;
            for (int i = 0; i < 3; ++i) dot += (i128)p.vec[i] * p.covec[i];
            require(dot == 0, "line not contained in plane");
            break;
        }
    }
}

bool canonical_less(const VarietyDescriptor& desc, const RationalPoint& a,
                    const RationalPoint& b) {
    auto ha = heights_sq(desc, a);
    auto hb = heights_sq(desc, b);
    if (ha[0] != hb[0]) return ha[0] < hb[0];
    if (desc.pic_rank > 1 && ha[1] != hb[1]) return ha[1] < hb[1];
    return representative(desc, a) < representative(desc, b);
}

// ---------------------------------------------------------------------------
// frames

namespace {

// Gram-Schmidt against the accepted columns; completes to a full orthonormal
// basis picking the candidate with the largest residual each round.
Eigen::MatrixXd orthonormal_complete(int dim, const Eigen::MatrixXd& given) {
    Eigen::MatrixXd q(dim, dim);
    int have = 0;
    for (int c = 0; c < given.cols(); ++c) {
        Eigen::VectorXd v = given.col(c);
        double orig = v.norm();
        for (int j = 0; j < have; ++j) v -= q.col(j).dot(v) * q.col(j);
        if (v.norm() <= 1e-10 * std::max(1.0, orig)) {
            throw DependentRows("degenerate span for frame construction");
        }
        q.col(have++) = v / v.norm();
    }
    while (have < dim) {
        int best = -1;
        double best_norm = -1.0;
        Eigen::VectorXd best_v;
        for (int i = 0; i < dim; ++i) {
            Eigen::VectorXd v = Eigen::VectorXd::Unit(dim, i);
            for (int j = 0; j < have; ++j) v -= q.col(j).dot(v) * q.col(j);
            double nn = v.norm();
            if (nn > best_norm + 1e-15) {
                best_norm = nn;
                best = i;
                best_v = v;
            }
        }
        if (best < 0 || best_norm <= 1e-10) {
            throw ValidationError("frame completion failed");
        }
        q.col(have++) = best_v / best_norm;
    }
    return q;
}

Eigen::VectorXd to_real(const I64Vec& v) {
    Eigen::VectorXd out(static_cast<int>(v.size()));
    for (size_t i = 0; i < v.size(); ++i) out(static_cast<int>(i)) = static_cast<double>(v[i]);
    return out;
}

// Deterministic overall sign: largest-|entry| coordinate made positive,
// lowest index winning ties.
void canonical_real_sign(Eigen::Ref<Eigen::VectorXd> v) {
    int arg = 0;
    double best = -1.0;
    for (int i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > best + 1e-15) {
            best = std::abs(v(i));
            arg = i;
        }
    }
    if (v(arg) < 0) v = -v;
}

} // namespace

RealPoint real_point_from_direction(const VarietyDescriptor& desc, const Eigen::VectorXd& dir) {
    if (desc.family == Family::split_quadric) return real_point_quadric(desc, dir);
    if (desc.family != Family::grassmannian || desc.l != 1) {
        throw ValidationError("direction constructor requires a line family");
    }
    if (dir.size() != desc.d) throw DimensionMismatch("direction length mismatch");
    if (dir.norm() == 0) throw ZeroVector("zero direction");
    RealPoint x;
    x.provenance = RealPoint::Provenance::explicit_coords;
    Eigen::VectorXd v = dir;
    canonical_real_sign(v);
    x.frame = orthonormal_complete(desc.d, v / v.norm());
    return x;
}

RealPoint real_point_from_span(const VarietyDescriptor& desc, const Eigen::MatrixXd& span_cols) {
    if (desc.family != Family::grassmannian) {
        throw ValidationError("span constructor requires a grassmannian");
    }
    if (span_cols.rows() != desc.d || span_cols.cols() != desc.l) {
        throw DimensionMismatch("span shape mismatch");
    }
    RealPoint x;
    x.provenance = RealPoint::Provenance::explicit_coords;
    x.frame = orthonormal_complete(desc.d, span_cols);
    return x;
}

RealPoint real_point_quadric(const VarietyDescriptor& desc, const Eigen::VectorXd& isotropic) {
    if (desc.family != Family::split_quadric) {
        throw ValidationError("quadric constructor requires a split quadric");
    }
    const int n = desc.n;
    if (isotropic.size() != n) throw DimensionMismatch("vector length mismatch");
    double nn = isotropic.norm();
    if (nn == 0) throw ZeroVector("zero vector");
    if (std::abs(q_real(n, isotropic)) > 1e-9 * nn * nn) {
        throw ValidationError("vector is not isotropic");
    }
    Eigen::VectorXd xhat = isotropic / nn;
    canonical_real_sign(xhat);

    // Hyperbolic partner: best standard isotropic candidate, normalized so
    // that B(xhat, yhat) = 1.
    std::vector<Eigen::VectorXd> cands;
    if (n == 4) {
        for (int i = 0; i < 4; ++i) cands.push_back(Eigen::VectorXd::Unit(4, i));
    } else {
        cands.push_back(Eigen::VectorXd::Unit(n, 0));
        cands.push_back(Eigen::VectorXd::Unit(n, n - 1));
    }
    int best = -1;
    double best_b = 0.0;
    for (size_t i = 0; i < cands.size(); ++i) {
        double b = b_real(n, xhat, cands[i]);
        if (std::abs(b) > std::abs(best_b) + 1e-15) {
            best_b = b;
            best = static_cast<int>(i);
        }
    }
    if (best < 0 || std::abs(best_b) < 1e-12) {
        throw ValidationError("no hyperbolic partner found");
    }
    Eigen::VectorXd yhat = cands[best] / best_b;

    // B-orthonormal middle block from projected standard basis vectors,
    // largest |q| residual first.
    RealPoint x;
    x.frame = Eigen::MatrixXd::Zero(n, n);
    x.frame.col(0) = xhat;
    x.frame.col(n - 1) = yhat;
    // Candidate pool: standard basis vectors plus pairwise sums/differences.
    // The pairs matter: a hyperbolic form can leave every projected basis
    // vector isotropic, but if all sums/differences were isotropic too the
    // restricted form would vanish, contradicting nondegeneracy.
    std::vector<Eigen::VectorXd> pool;
    auto add_candidate = [&](const Eigen::VectorXd& raw) {
        Eigen::VectorXd u = raw;
        u -= b_real(n, u, yhat) * xhat + b_real(n, u, xhat) * yhat;
        pool.push_back(u);
    };
    for (int i = 0; i < n; ++i) add_candidate(Eigen::VectorXd::Unit(n, i));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            add_candidate(Eigen::VectorXd::Unit(n, i) + Eigen::VectorXd::Unit(n, j));
            add_candidate(Eigen::VectorXd::Unit(n, i) - Eigen::VectorXd::Unit(n, j));
        }
    }
    std::vector<Eigen::VectorXd> accepted;
    std::vector<int> signs;
    while (static_cast<int>(accepted.size()) < n - 2) {
        int arg = -1;
        double arg_q = 0.0;
        Eigen::VectorXd arg_v;
        for (size_t i = 0; i < pool.size(); ++i) {
            Eigen::VectorXd u = pool[i];
            for (size_t j = 0; j < accepted.size(); ++j) {
                u -= signs[j] * b_real(n, u, accepted[j]) * accepted[j];
            }
            double qq = q_real(n, u);
            if (std::abs(qq) > std::abs(arg_q) + 1e-15) {
                arg_q = qq;
                arg = static_cast<int>(i);
                arg_v = u;
            }
        }
        if (arg < 0 || std::abs(arg_q) < 1e-10) {
            throw ValidationError("failed to complete quadric frame");
        }
        Eigen::VectorXd v = arg_v / std::sqrt(std::abs(arg_q));
        canonical_real_sign(v);
        accepted.push_back(v);
        signs.push_back(arg_q > 0 ? 1 : -1);
        pool.erase(pool.begin() + arg);
    }
    for (int i = 0; i < n - 2; ++i) x.frame.col(1 + i) = accepted[i];
    x.v0_signs = signs;
    x.provenance = RealPoint::Provenance::explicit_coords;
    return x;
}

RealPoint real_point_flag3(const Eigen::VectorXd& line, const Eigen::VectorXd& plane_normal) {
    if (line.size() != 3 || plane_normal.size() != 3) {
        throw DimensionMismatch("flag components must be 3-vectors");
    }
    if (line.norm() == 0 || plane_normal.norm() == 0) throw ZeroVector("zero flag component");
    if (std::abs(line.dot(plane_normal)) > 1e-9 * line.norm() * plane_normal.norm()) {
        throw ValidationError("line does not lie in the plane");
    }
    Eigen::VectorXd u = line / line.norm();
    Eigen::VectorXd w = plane_normal / plane_normal.norm();
    canonical_real_sign(u);
    canonical_real_sign(w);
    RealPoint x;
    x.frame = Eigen::MatrixXd(3, 3);
    x.frame.col(0) = u;
    x.frame.col(2) = w;
    Eigen::Vector3d u3 = u, w3 = w;
    x.frame.col(1) = w3.cross(u3);
    x.provenance = RealPoint::Provenance::explicit_coords;
    return x;
}

RealPoint real_point_from_rational(const VarietyDescriptor& desc, const RationalPoint& p) {
    RealPoint x;
    switch (desc.family) {
        case Family::grassmannian: {
            Eigen::MatrixXd span(desc.d, desc.l);
            for (int r = 0; r < desc.l; ++r) span.col(r) = to_real(p.basis[r]);
            x = real_point_from_span(desc, span);
            if (desc.l == 1 && desc.d == 2 && p.pluecker[0] != 0) {
                x.exact_slope = Rat(Int(p.pluecker[1]), Int(p.pluecker[0]));
                x.exact_slope->canonicalize();
            }
            break;
        }
        case Family::split_quadric:
            x = real_point_quadric(desc, to_real(p.vec));
            break;
        case Family::full_flag3:
            x = real_point_flag3(to_real(p.vec), to_real(p.covec));
            break;
    }
    x.provenance = RealPoint::Provenance::rational;
    return x;
}

RealPoint random_real_point(const VarietyDescriptor& desc, Rng& rng) {
    RealPoint x;
    switch (desc.family) {
        case Family::grassmannian: {
            Eigen::MatrixXd span(desc.d, desc.l);
            for (int c = 0; c < desc.l; ++c)
                for (int r = 0; r < desc.d; ++r) span(r, c) = rng.normal();
            x = real_point_from_span(desc, span);
            break;
        }
        case Family::split_quadric: {
            const int n = desc.n;
            Eigen::VectorXd v(n);
            if (n == 4) {
                // Doubly ruled surface: rank-one 2x2 matrices (s,t) x (u,w).
                double a1 = rng.uniform(0.0, M_PI);
                double a2 = rng.uniform(0.0, M_PI);
                double s = std::cos(a1), t = std::sin(a1);
                double u = std::cos(a2), w = std::sin(a2);
                v << s * u, s * w, t * u, t * w;
            } else {
                double x0 = std::exp(rng.uniform(-0.7, 0.7));
                double ss = 0.0;
                for (int i = 1; i + 1 < n; ++i) {
                    v(i) = rng.normal();
                    ss += v(i) * v(i);
                }
                v(0) = x0;
                v(n - 1) = ss / x0;
                v /= v.norm();
            }
            x = real_point_quadric(desc, v);
            break;
        }
        case Family::full_flag3: {
            Eigen::Vector3d a, b;
            for (int i = 0; i < 3; ++i) a(i) = rng.normal();
            for (int i = 0; i < 3; ++i) b(i) = rng.normal();
            Eigen::Vector3d nrm = a.cross(b);
            if (nrm.norm() < 1e-8) return random_real_point(desc, rng);
            x = real_point_flag3(a, nrm);
            break;
        }
    }
    x.provenance = RealPoint::Provenance::random_seeded;
    return x;
}

void check_frame(const VarietyDescriptor& desc, const RealPoint& x) {
    const double tol = 1e-12;
    switch (desc.family) {
        case Family::grassmannian: {
            Eigen::MatrixXd g = x.frame.transpose() * x.frame;
            double err = (g - Eigen::MatrixXd::Identity(desc.d, desc.d)).cwiseAbs().maxCoeff();
            require(err <= 1e-10, "frame not orthonormal");
            break;
        }
        case Family::split_quadric: {
            const int n = desc.n;
            require(static_cast<int>(x.v0_signs.size()) == n - 2, "missing middle signs");
            auto B = [&](int i, int j) { return b_real(n, x.frame.col(i), x.frame.col(j)); };
            require(std::abs(B(0, 0)) <= tol, "corner not isotropic");
            require(std::abs(B(n - 1, n - 1)) <= tol, "partner not isotropic");
            require(std::abs(B(0, n - 1) - 1.0) <= 1e-10, "hyperbolic pairing broken");
            for (int i = 1; i + 1 < n; ++i) {
                require(std::abs(B(0, i)) <= 1e-10 && std::abs(B(n - 1, i)) <= 1e-10,
                        "middle block not orthogonal to hyperbolic pair");
                for (int j = 1; j + 1 < n; ++j) {
                    double want = (i == j) ? x.v0_signs[i - 1] : 0.0;
                    require(std::abs(B(i, j) - want) <= 1e-9, "middle block not B-orthonormal");
                }
            }
            break;
        }
        case Family::full_flag3: {
            Eigen::MatrixXd g = x.frame.transpose() * x.frame;
            double err = (g - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff();
            require(err <= 1e-10, "frame not orthonormal");
            require(std::abs(x.frame.determinant() - 1.0) <= 1e-10, "frame not a rotation");
            break;
        }
    }
}

// ---------------------------------------------------------------------------
// tangent vectors, charts, dilations

int TangentVector::dim() const {
    int s = 0;
    for (const auto& l : levels) s += static_cast<int>(l.size());
    return s;
}

std::vector<double> TangentVector::flat() const {
    std::vector<double> out;
    for (const auto& l : levels)
        for (int i = 0; i < l.size(); ++i) out.push_back(l(i));
    return out;
}

TangentVector TangentVector::from_flat(const VarietyDescriptor& desc,
                                       const std::vector<double>& z) {
    if (static_cast<int>(z.size()) != desc.chart_dim()) {
        throw DimensionMismatch("tangent coordinate count mismatch");
    }
    TangentVector t;
    int at = 0;
    for (int dim : desc.grading_dims) {
        Eigen::VectorXd lev(dim);
        for (int i = 0; i < dim; ++i) lev(i) = z[at++];
        t.levels.push_back(lev);
    }
    return t;
}

namespace {

// Core grassmannian chart: columns of v span the subspace.
TangentVector chart_gr(const VarietyDescriptor& desc, const RealPoint& x,
                       const Eigen::MatrixXd& v) {
    const int l = desc.l, d = desc.d;
    Eigen::MatrixXd s1 = x.frame.leftCols(l);
    Eigen::MatrixXd s2 = x.frame.rightCols(d - l);
    Eigen::MatrixXd m = s1.transpose() * v;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) throw NotInChart("base component degenerate");
    Eigen::MatrixXd z = s2.transpose() * v * lu.inverse();
    TangentVector t;
    Eigen::VectorXd lev(l * (d - l));
    int at = 0;
    for (int r = 0; r < d - l; ++r)
        for (int c = 0; c < l; ++c) lev(at++) = z(r, c);
    t.levels.push_back(lev);
    return t;
}

TangentVector chart_quadric(const VarietyDescriptor& desc, const RealPoint& x,
                            const Eigen::VectorXd& w) {
    const int n = desc.n;
    double alpha = b_real(n, w, x.frame.col(n - 1));
    if (std::abs(alpha) <= 1e-12 * w.norm() * x.frame.col(n - 1).norm()) {
        throw NotInChart("base component degenerate");
    }
    TangentVector t;
    Eigen::VectorXd lev(n - 2);
    for (int i = 0; i < n - 2; ++i) {
        lev(i) = x.v0_signs[i] * b_real(n, w, x.frame.col(1 + i)) / alpha;
    }
    t.levels.push_back(lev);
    return t;
}

TangentVector chart_flag3(const RealPoint& x, const Eigen::VectorXd& line,
                          const Eigen::VectorXd& normal) {
    Eigen::VectorXd v = x.frame.transpose() * line;
    Eigen::VectorXd nn = x.frame.transpose() * normal;
    if (std::abs(v(0)) <= 1e-12 * v.norm() || std::abs(nn(2)) <= 1e-12 * nn.norm()) {
        throw NotInChart("base component degenerate");
    }
    double z1 = v(1) / v(0);
    double z2 = -nn(1) / nn(2);
    double z3 = v(2) / v(0) - 0.5 * z1 * z2;
    TangentVector t;
    Eigen::VectorXd lev1(2), lev2(1);
    lev1 << z1, z2;
    lev2 << z3;
    t.levels = {lev1, lev2};
    return t;
}

} // namespace

TangentVector chart(const VarietyDescriptor& desc, const RealPoint& x, const RationalPoint& v) {
    switch (desc.family) {
        case Family::grassmannian: {
            Eigen::MatrixXd span(desc.d, desc.l);
            for (int r = 0; r < desc.l; ++r) span.col(r) = to_real(v.basis[r]);
            return chart_gr(desc, x, span);
        }
        case Family::split_quadric:
            return chart_quadric(desc, x, to_real(v.vec));
        case Family::full_flag3:
            return chart_flag3(x, to_real(v.vec), to_real(v.covec));
    }
    throw UnsupportedFamily("chart");
}

TangentVector chart_point(const VarietyDescriptor& desc, const RealPoint& x, const RealPoint& y) {
    switch (desc.family) {
        case Family::grassmannian:
            return chart_gr(desc, x, y.frame.leftCols(desc.l));
        case Family::split_quadric:
            return chart_quadric(desc, x, y.frame.col(0));
        case Family::full_flag3:
            return chart_flag3(x, y.frame.col(0), y.frame.col(2));
    }
    throw UnsupportedFamily("chart");
}

RealPoint point_from_tangent(const VarietyDescriptor& desc, const RealPoint& x,
                             const TangentVector& z) {
    if (z.dim() != desc.chart_dim()) throw DimensionMismatch("tangent dimension mismatch");
    switch (desc.family) {
        case Family::grassmannian: {
            const int l = desc.l, d = desc.d;
            Eigen::MatrixXd zm(d - l, l);
            int at = 0;
            for (int r = 0; r < d - l; ++r)
                for (int c = 0; c < l; ++c) zm(r, c) = z.levels[0](at++);
            Eigen::MatrixXd v = x.frame.leftCols(l) + x.frame.rightCols(d - l) * zm;
            return real_point_from_span(desc, v);
        }
        case Family::split_quadric: {
            const int n = desc.n;
            Eigen::VectorXd w = x.frame.col(0);
            double qz = 0.0;
            for (int i = 0; i < n - 2; ++i) {
                w += z.levels[0](i) * x.frame.col(1 + i);
                qz += x.v0_signs[i] * z.levels[0](i) * z.levels[0](i);
            }
            w -= 0.5 * qz * x.frame.col(n - 1);
            return real_point_quadric(desc, w);
        }
        case Family::full_flag3: {
            double z1 = z.levels[0](0), z2 = z.levels[0](1), z3 = z.levels[1](0);
            Eigen::VectorXd v(3), nn(3);
            v << 1.0, z1, z3 + 0.5 * z1 * z2;
            nn << 0.5 * z1 * z2 - z3, -z2, 1.0;
            return real_point_flag3(x.frame * v, x.frame * nn);
        }
    }
    throw UnsupportedFamily("point_from_tangent");
}

TangentVector rescale(const VarietyDescriptor& desc, const TangentVector& z, double s) {
    if (z.dim() != desc.chart_dim()) throw DimensionMismatch("tangent dimension mismatch");
    TangentVector out = z;
    for (size_t k = 0; k < out.levels.size(); ++k) {
        out.levels[k] *= std::exp(static_cast<double>(k + 1) * s);
    }
    return out;
}

double quasi_norm(const VarietyDescriptor& desc, const TangentVector& z) {
    if (z.dim() != desc.chart_dim()) throw DimensionMismatch("tangent dimension mismatch");
    double qn = 0.0;
    for (size_t k = 0; k < z.levels.size(); ++k) {
        qn = std::max(qn, std::pow(z.levels[k].norm(), 1.0 / static_cast<double>(k + 1)));
    }
    return qn;
}

double distance(const VarietyDescriptor& desc, const RealPoint& x, const RationalPoint& v) {
    return quasi_norm(desc, chart(desc, x, v));
}

// ---------------------------------------------------------------------------
// enumeration

namespace {

struct EmitContext {
    const VarietyDescriptor& desc;
    const PointVisitor& visitor;
    int shard;

    void emit(RationalPoint&& p) const {
        visitor(shard, p, log_heights(desc, p));
    }
};

// --- lines in Q^d: canonical primitive integer vectors, |v| <= hmax ---------

void scan_lines_suffix(I64Vec& v, size_t idx, i128 partial_sq, int64_t partial_gcd,
                       bool leading_zero, double hmax, const EmitContext& ctx) {
    const int d = static_cast<int>(v.size());
    long double room = (long double)hmax * hmax - (long double)partial_sq;
    if (room < 0) return;
    if (static_cast<int>(idx) == d) {
        if (partial_gcd == 1) {
            RationalPoint p;
            p.pluecker = v;
            p.basis = {v};
            if (ctx.desc.family == Family::split_quadric) {
                p.pluecker.clear();
                p.basis.clear();
                p.vec = v;
            }
            ctx.emit(std::move(p));
        }
        return;
    }
    int64_t bound = static_cast<int64_t>(std::floor(std::sqrt((double)room) + 1e-9));
    int64_t lo = leading_zero ? 0 : -bound;
    for (int64_t c = lo; c <= bound; ++c) {
        i128 nsq = partial_sq + (i128)c * c;
        if (!norm_within(nsq, hmax)) continue;
        v[idx] = c;
        scan_lines_suffix(v, idx + 1, nsq, gcd64(partial_gcd, c),
                          leading_zero && c == 0, hmax, ctx);
    }
    v[idx] = 0;
}

void enumerate_lines_shard(int d, double hmax, int first, const EmitContext& ctx) {
    // Shard = value of the first coordinate, 0..floor(hmax).
    I64Vec v(d, 0);
    v[0] = first;
    i128 sq = (i128)first * first;
    if (!norm_within(sq, hmax)) return;
    scan_lines_suffix(v, 1, sq, first, first == 0, hmax, ctx);
}

// --- planes in Q^4 via staircase bases --------------------------------------

struct Gr24Plan {
    int j1, j2;
    std::vector<int> r1_free_low;   // free r1 columns below j2
    std::vector<int> r1_free_high;  // free r1 columns above j2
    std::vector<int> r2_free;       // free r2 columns (above j2)
};

std::vector<Gr24Plan> gr24_plans() {
    std::vector<Gr24Plan> plans;
    for (int j1 = 0; j1 < 4; ++j1) {
        for (int j2 = j1 + 1; j2 < 4; ++j2) {
            Gr24Plan p;
            p.j1 = j1;
            p.j2 = j2;
            for (int k = j1 + 1; k < 4; ++k) {
                if (k == j2) continue;
                (k < j2 ? p.r1_free_low : p.r1_free_high).push_back(k);
            }
            for (int k = j2 + 1; k < 4; ++k) p.r2_free.push_back(k);
            plans.push_back(p);
        }
    }
    return plans;
}

const std::vector<std::vector<int>>& gr24_cols() {
    static const auto cols = subsets(4, 2);
    return cols;
}

inline i128 minor2(const std::array<I64Vec, 2>& rows, int c0, int c1) {
    return (i128)rows[0][c0] * rows[1][c1] - (i128)rows[0][c1] * rows[1][c0];
}

void gr24_try_emit(const std::array<I64Vec, 2>& rows, double hmax, const EmitContext& ctx) {
    const auto& cols = gr24_cols();
    I64Vec p(6);
    i128 nsq = 0;
    for (size_t i = 0; i < cols.size(); ++i) {
        i128 m = minor2(rows, cols[i][0], cols[i][1]);
        if (m > INT64_MAX || m < INT64_MIN) return;
        p[i] = static_cast<int64_t>(m);
        nsq += m * m;
    }
    if (!norm_within(nsq, hmax)) return;
    if (gcd64(p) != 1) return; // row lattice not saturated
    RationalPoint pt;
    pt.pluecker = std::move(p);
    pt.basis = {rows[0], rows[1]};
    ctx.emit(std::move(pt));
}

// Enumerates the two staircase rows for one (plan, a) shard. Entry bounds come
// from the minors that each free entry enters with a pivot coefficient; the
// final free entry of row 1 is solved from the quadratic norm bound.
void enumerate_gr24_shard(const Gr24Plan& plan, int64_t a, double hmax,
                          const EmitContext& ctx) {
    const int64_t h = static_cast<int64_t>(std::floor(hmax + 1e-9));
    if (a < 1 || a > h) return;
    std::array<I64Vec, 2> rows = {I64Vec(4, 0), I64Vec(4, 0)};
    rows[0][plan.j1] = a;
    const int64_t r2_bound = h / a;

    const int n_r2 = static_cast<int>(plan.r2_free.size());
    std::vector<int64_t> r2v(n_r2, 0);

    for (int64_t b = 1; a * b <= h; ++b) {
        rows[1][plan.j2] = b;
        const int64_t r1_low_bound = h / b;
        const int64_t r1_high_bound = h / a + h / b;

        std::function<void(int)> loop_r2 = [&](int i2) {
            if (i2 < n_r2) {
                for (int64_t v2 = -r2_bound; v2 <= r2_bound; ++v2) {
                    rows[1][plan.r2_free[i2]] = v2;
                    loop_r2(i2 + 1);
                }
                rows[1][plan.r2_free[i2]] = 0;
                return;
            }
            for (int64_t rj2 = 0; rj2 < b; ++rj2) {
                rows[0][plan.j2] = rj2;
                std::function<void(size_t)> loop_low = [&](size_t il) {
                    if (il < plan.r1_free_low.size()) {
                        for (int64_t v1 = -r1_low_bound; v1 <= r1_low_bound; ++v1) {
                            rows[0][plan.r1_free_low[il]] = v1;
                            loop_low(il + 1);
                        }
                        rows[0][plan.r1_free_low[il]] = 0;
                        return;
                    }
                    // High free entries of row 1: loop all but the last,
                    // solve the last from the norm quadratic.
                    auto solve_last = [&](int col) {
                        // The squared minor norm is quadratic in the last free
                        // entry: sample it at -1, 0, 1.
                        const auto& cc_all = gr24_cols();
                        auto norm_at = [&](std::int64_t xv) {
                            rows[0][col] = xv;
                            i128 s = 0;
                            for (const auto& cc : cc_all) {
                                i128 m = minor2(rows, cc[0], cc[1]);
                                s += m * m;
                            }
                            return static_cast<double>(s);
                        };
                        double n0 = norm_at(0);
                        double n1 = norm_at(1);
                        double nm1 = norm_at(-1);
                        double qa = 0.5 * (n1 + nm1) - n0;
                        double qb = 0.5 * (n1 - nm1);
                        double qc = n0 - hmax * hmax;
                        int64_t lo = -r1_high_bound, hi = r1_high_bound;
                        if (qa > 0.5) {
                            double disc = qb * qb - 4.0 * qa * qc;
                            if (disc < 0) {
                                rows[0][col] = 0;
                                return;
                            }
                            double rt = std::sqrt(disc);
                            lo = std::max<int64_t>(
                                lo, static_cast<int64_t>(std::ceil((-qb - rt) / (2 * qa) - 1e-6)));
                            hi = std::min<int64_t>(
                                hi, static_cast<int64_t>(std::floor((-qb + rt) / (2 * qa) + 1e-6)));
                        }
                        for (int64_t xv = lo; xv <= hi; ++xv) {
                            rows[0][col] = xv;
                            gr24_try_emit(rows, hmax, ctx);
                        }
                        rows[0][col] = 0;
                    };
                    if (plan.r1_free_high.empty()) {
                        gr24_try_emit(rows, hmax, ctx);
                    } else if (plan.r1_free_high.size() == 1) {
                        solve_last(plan.r1_free_high[0]);
                    } else {
                        for (int64_t v1 = -r1_high_bound; v1 <= r1_high_bound; ++v1) {
                            rows[0][plan.r1_free_high[0]] = v1;
                            solve_last(plan.r1_free_high[1]);
                        }
                        rows[0][plan.r1_free_high[0]] = 0;
                    }
                };
                loop_low(0);
            }
            rows[0][plan.j2] = 0;
        };
        loop_r2(0);
    }
}

// --- hyperplanes: kernel of a primitive covector -----------------------------

// Integer basis of {x : w.x = 0} via the Hermite form of the pair generators.
std::vector<I64Vec> kernel_basis(const I64Vec& w) {
    const int d = static_cast<int>(w.size());
    IntBasis gens;
    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            if (w[i] == 0 && w[j] == 0) continue;
            IntVec g(d, Int(0));
            g[i] = Int(w[j]);
            g[j] = Int(-w[i]);
            gens.rows.push_back(std::move(g));
        }
    }
    IntBasis h = hermite_normal_form(gens);
    std::vector<I64Vec> out;
    for (const auto& r : h.rows) {
        I64Vec rr(d);
        for (int i = 0; i < d; ++i) {
            if (!r[i].fits_slong_p()) throw BudgetExceeded("kernel basis entry overflow");
            rr[i] = r[i].get_si();
        }
        out.push_back(std::move(rr));
    }
    if (static_cast<int>(out.size()) != d - 1) {
        throw ValidationError("kernel basis rank unexpected");
    }
    return out;
}

void enumerate_dual_shard(const VarietyDescriptor& desc, double hmax, int first,
                          const EmitContext& ctx) {
    // Hyperplanes correspond to primitive normal covectors; the staircase
    // basis of the kernel lattice is the stored representative.
    const int d = desc.d;
    VarietyDescriptor line_desc = make_grassmannian(1, d);
    auto cols = subsets(d, d - 1);
    PointVisitor on_covector = [&](int, const RationalPoint& lp, const std::array<double, 2>&) {
        const I64Vec& w = lp.pluecker;
        auto rows = kernel_basis(w);
        RationalPoint pt;
        pt.basis = rows;
        pt.pluecker.resize(cols.size());
        i128 nsq = 0;
        for (size_t i = 0; i < cols.size(); ++i) {
            i128 m = det_cols(rows, cols[i]);
            pt.pluecker[i] = checked_i64(m, "dual minors");
            nsq += m * m;
        }
        // Covolume identity: the minors recover +-w up to index reversal.
        if (nsq != norm_sq_i128(w)) throw ValidationError("kernel covolume mismatch");
        ctx.emit(std::move(pt));
    };
    EmitContext inner{line_desc, on_covector, 0};
    enumerate_lines_shard(d, hmax, first, inner);
}

// --- split quadric -----------------------------------------------------------

// Smallest-prime-factor sieve shared by the divisor splits.
std::vector<int32_t> spf_sieve(int64_t n) {
    std::vector<int32_t> spf(n + 1, 0);
    for (int64_t i = 2; i <= n; ++i) {
        if (spf[i] == 0) {
            for (int64_t j = i; j <= n; j += i) {
                if (spf[j] == 0) spf[j] = static_cast<int32_t>(i);
            }
        }
    }
    return spf;
}

void divisors_of(int64_t m, const std::vector<int32_t>& spf, std::vector<int64_t>& out) {
    out.clear();
    out.push_back(1);
    while (m > 1) {
        int64_t p = spf[m];
        int e = 0;
        while (m % p == 0) {
            m /= p;
            ++e;
        }
        size_t base = out.size();
        int64_t pe = 1;
        for (int i = 1; i <= e; ++i) {
            pe *= p;
            for (size_t j = 0; j < base; ++j) out.push_back(out[j] * pe);
        }
    }
    std::sort(out.begin(), out.end());
}

void quadric4_emit(int64_t x1, int64_t x2, int64_t x3, int64_t x4, double hmax,
                   const EmitContext& ctx) {
    I64Vec v{x1, x2, x3, x4};
    if (!first_nonzero_positive(v)) return;
    if (!norm_within(norm_sq_i128(v), hmax)) return;
    if (gcd64(v) != 1) return;
    RationalPoint p;
    p.vec = std::move(v);
    ctx.emit(std::move(p));
}

void enumerate_quadric4_shard(double hmax, int64_t x1, const std::vector<int32_t>& spf,
                              const EmitContext& ctx) {
    const int64_t h = static_cast<int64_t>(std::floor(hmax + 1e-9));
    std::vector<int64_t> divs;
    for (int64_t x4 = -h; x4 <= h; ++x4) {
        i128 outer = (i128)x1 * x1 + (i128)x4 * x4;
        if (!norm_within(outer, hmax)) continue;
        int64_t prod = x1 * x4; // x2 * x3 must equal prod
        if (prod == 0) {
            for (int64_t t = -h; t <= h; ++t) {
                quadric4_emit(x1, 0, t, x4, hmax, ctx);
                if (t != 0) quadric4_emit(x1, t, 0, x4, hmax, ctx);
            }
            continue;
        }
        divisors_of(std::llabs(prod), spf, divs);
        for (int64_t d2 : divs) {
            int64_t d3 = prod / d2;
            quadric4_emit(x1, d2, d3, x4, hmax, ctx);
            quadric4_emit(x1, -d2, -d3, x4, hmax, ctx);
        }
    }
}

// n >= 5: x1 x_n = sum of middle squares; shard over the first middle coord.
void enumerate_quadric_tall_shard(int n, double hmax, int64_t x2,
                                  const std::vector<int32_t>& spf, const EmitContext& ctx) {
    const int64_t h = static_cast<int64_t>(std::floor(hmax + 1e-9));
    const int mid = n - 2;
    I64Vec y(mid, 0);
    y[0] = x2;
    std::vector<int64_t> divs;

    std::function<void(int, i128)> rec = [&](int idx, i128 sq) {
        if (!norm_within(sq, hmax)) return;
        if (idx == mid) {
            int64_t s = checked_i64(sq, "middle square sum");
            if (s == 0) {
                // All middle coordinates vanish, so the product of the outer
                // coordinates is zero: only two primitive canonical points.
                if (x2 == 0 && hmax >= 1.0) {
                    RationalPoint p;
                    p.vec = I64Vec(n, 0);
                    p.vec[0] = 1;
                    ctx.emit(std::move(p));
                    RationalPoint p2;
                    p2.vec = I64Vec(n, 0);
                    p2.vec[n - 1] = 1;
                    ctx.emit(std::move(p2));
                }
                return;
            }
            // s > 0: both outer coordinates are positive divisors d1 * dn = s
            // (the all-negative branch fails the canonical sign).
            divisors_of(s, spf, divs);
            for (int64_t d1 : divs) {
                int64_t dn = s / d1;
                I64Vec v(n);
                v[0] = d1;
                for (int i = 0; i < mid; ++i) v[1 + i] = y[i];
                v[n - 1] = dn;
                if (!norm_within(norm_sq_i128(v), hmax)) continue;
                if (gcd64(v) != 1) continue;
                RationalPoint p;
                p.vec = std::move(v);
                ctx.emit(std::move(p));
            }
            return;
        }
        for (int64_t c = -h; c <= h; ++c) {
            y[idx] = c;
            rec(idx + 1, sq + (i128)c * c);
        }
        y[idx] = 0;
    };
    rec(1, (i128)x2 * x2);
}

// --- full flags in Q^3 -------------------------------------------------------

// Lagrange-reduced basis of the rank-2 lattice {w : w.v = 0}, v primitive.
std::array<I64Vec, 2> orthogonal_lattice_reduced(const I64Vec& v) {
    auto rows = kernel_basis(v);
    I64Vec u1 = rows[0], u2 = rows[1];
    auto n2 = [](const I64Vec& a) { return (i128)a[0] * a[0] + (i128)a[1] * a[1] + (i128)a[2] * a[2]; };
    auto dotv = [](const I64Vec& a, const I64Vec& b) {
        return (i128)a[0] * b[0] + (i128)a[1] * b[1] + (i128)a[2] * b[2];
    };
    for (;;) {
        if (n2(u2) < n2(u1)) std::swap(u1, u2);
        i128 num = dotv(u1, u2);
        i128 den = n2(u1);
        // round(num/den) in integers
        i128 q = (2 * num + den) / (2 * den);
        if (2 * num + den < 0 && (2 * num + den) % (2 * den) != 0) q -= 1;
        if (q == 0) break;
        for (int i = 0; i < 3; ++i) u2[i] -= static_cast<int64_t>(q) * u1[i];
    }
    // Covolume check: det Gram == |v|^2 for a primitive normal.
    i128 det = n2(u1) * n2(u2) - dotv(u1, u2) * dotv(u1, u2);
    if (det != norm_sq_i128(v)) throw ValidationError("orthogonal lattice covolume mismatch");
    return {u1, u2};
}

void enumerate_flag3_for_line(const I64Vec& v1, double h2max, const EmitContext& ctx) {
    auto basis = orthogonal_lattice_reduced(v1);
    const I64Vec& u1 = basis[0];
    const I64Vec& u2 = basis[1];
    double n1 = 0, n12 = 0, n22 = 0;
    for (int i = 0; i < 3; ++i) {
        n1 += static_cast<double>(u1[i]) * u1[i];
        n12 += static_cast<double>(u1[i]) * u2[i];
        n22 += static_cast<double>(u2[i]) * u2[i];
    }
    double det = n1 * n22 - n12 * n12;
    double hperp_sq = det / n1; // squared height of u2 component orthogonal to u1
    double r_sq = h2max * h2max;
    int64_t n_bound = static_cast<int64_t>(std::floor(std::sqrt(r_sq / hperp_sq) + 1e-9)) + 1;
    for (int64_t n = -n_bound; n <= n_bound; ++n) {
        // |n u2 + m u1|^2 <= r: quadratic interval in m.
        double qa = n1;
        double qb = 2.0 * n * n12;
        double qc = n * n * n22 - r_sq;
        double disc = qb * qb - 4 * qa * qc;
        if (disc < 0) continue;
        double rt = std::sqrt(disc);
        int64_t lo = static_cast<int64_t>(std::ceil((-qb - rt) / (2 * qa) - 1e-6)) - 1;
        int64_t hi = static_cast<int64_t>(std::floor((-qb + rt) / (2 * qa) + 1e-6)) + 1;
        for (int64_t m = lo; m <= hi; ++m) {
            if (m == 0 && n == 0) continue;
            I64Vec w(3);
            for (int i = 0; i < 3; ++i) w[i] = m * u1[i] + n * u2[i];
            if (!first_nonzero_positive(w)) continue;
            if (!norm_within(norm_sq_i128(w), h2max)) continue;
            if (gcd64(w) != 1) continue;
            RationalPoint p;
            p.vec = v1;
            p.covec = std::move(w);
            ctx.emit(std::move(p));
        }
    }
}

void enumerate_flag3_shard(const std::array<double, 2>& hmax, int first, const EmitContext& ctx) {
    VarietyDescriptor line_desc = make_grassmannian(1, 3);
    PointVisitor on_line = [&](int, const RationalPoint& lp, const std::array<double, 2>&) {
        enumerate_flag3_for_line(lp.pluecker, hmax[1], ctx);
    };
    EmitContext inner{line_desc, on_line, 0};
    enumerate_lines_shard(3, hmax[0], first, inner);
}

// Slight *under*-estimates on purpose: the pre-check rejects absurd requests,
// while the runtime counter enforces the exact materialization cap.
double predicted_points(const VarietyDescriptor& desc, const std::vector<double>& hmax) {
    switch (desc.family) {
        case Family::grassmannian:
            return 0.9 * std::pow(hmax[0], desc.d) + 100.0;
        case Family::split_quadric: {
            double lg = desc.n == 4 ? std::log(hmax[0] + 2.0) : 1.0;
            return 0.8 * std::pow(hmax[0], desc.n - 2) * lg + 100.0;
        }
        case Family::full_flag3:
            return 0.4 * hmax[0] * hmax[0] * hmax[1] * hmax[1] + 100.0;
    }
    return 0.0;
}

double predicted_scan(const VarietyDescriptor& desc, const std::vector<double>& hmax) {
    double h = hmax[0];
    switch (desc.family) {
        case Family::grassmannian:
            if (desc.l == 1 || desc.l == desc.d - 1) {
                return std::pow(2 * h + 1, desc.d - 1) * (h + 1);
            }
            return 8.0 * std::pow(h, 5); // staircase enumeration, dominant pivot 1
        case Family::split_quadric:
            if (desc.n == 4) return 5.0 * (h + 1) * (2 * h + 1) * (std::log(h + 2) + 2.0);
            return std::pow(2 * h + 1, desc.n - 2) * (std::log(h + 2) + 2.0);
        case Family::full_flag3:
            return std::pow(2 * hmax[0] + 1, 2) * (hmax[0] + 1) +
                   8.0 * hmax[0] * hmax[0] * hmax[1] * hmax[1];
    }
    return 0.0;
}

} // namespace

int enumeration_shards(const VarietyDescriptor& desc, const std::vector<double>& hmax) {
    const int64_t h = static_cast<int64_t>(std::floor(hmax[0] + 1e-9));
    switch (desc.family) {
        case Family::grassmannian:
            if (desc.l == 1 || desc.l == desc.d - 1) return static_cast<int>(h) + 1;
            return std::max(1, 6 * static_cast<int>(h)); // (plan, pivot a) pairs
        case Family::split_quadric:
            // n == 4 shards by the (canonically nonnegative) leading entry;
            // n >= 5 shards by the first middle entry.
            return desc.n == 4 ? static_cast<int>(h) + 1 : 2 * static_cast<int>(h) + 1;
        case Family::full_flag3:
            return static_cast<int>(h) + 1;
    }
    return 1;
}

void enumerate_points_visit(const VarietyDescriptor& desc, const std::vector<double>& hmax,
                            const EnumerationOptions& opts, const PointVisitor& visitor) {
    if (static_cast<int>(hmax.size()) != desc.pic_rank) {
        throw DimensionMismatch("hmax must have one bound per height generator");
    }
    for (double h : hmax) {
        if (!(h >= 0.0) || !std::isfinite(h)) throw ValidationError("invalid height bound");
    }
    if (predicted_scan(desc, hmax) > opts.max_visits) {
        throw BudgetExceeded("predicted enumeration work exceeds budget");
    }
    if (hmax[0] > 2.0e9) throw BudgetExceeded("height bound exceeds integer guard");

    const int n_shards = enumeration_shards(desc, hmax);
    const int64_t h0 = static_cast<int64_t>(std::floor(hmax[0] + 1e-9));

    switch (desc.family) {
        case Family::grassmannian: {
            if (desc.l == 1) {
                parallel_shards(n_shards, opts.threads, [&](int s) {
                    EmitContext ctx{desc, visitor, s};
                    enumerate_lines_shard(desc.d, hmax[0], s, ctx);
                });
            } else if (desc.l == desc.d - 1) {
                parallel_shards(n_shards, opts.threads, [&](int s) {
                    EmitContext ctx{desc, visitor, s};
                    enumerate_dual_shard(desc, hmax[0], s, ctx);
                });
            } else {
                auto plans = gr24_plans();
                parallel_shards(n_shards, opts.threads, [&](int s) {
                    EmitContext ctx{desc, visitor, s};
                    enumerate_gr24_shard(plans[s % 6], s / 6 + 1, hmax[0], ctx);
                });
            }
            break;
        }
        case Family::split_quadric: {
            int64_t sieve_top = std::max<int64_t>(h0 * h0, 2);
            if (sieve_top > (int64_t)5e7) throw BudgetExceeded("divisor sieve too large");
            auto spf = spf_sieve(sieve_top);
            parallel_shards(n_shards, opts.threads, [&](int s) {
                EmitContext ctx{desc, visitor, s};
                if (desc.n == 4) {
                    enumerate_quadric4_shard(hmax[0], s, spf, ctx);
                } else {
                    enumerate_quadric_tall_shard(desc.n, hmax[0], s - h0, spf, ctx);
                }
            });
            break;
        }
        case Family::full_flag3: {
            std::array<double, 2> hm{hmax[0], hmax[1]};
            parallel_shards(n_shards, opts.threads, [&](int s) {
                EmitContext ctx{desc, visitor, s};
                enumerate_flag3_shard(hm, s, ctx);
            });
            break;
        }
    }
}

std::vector<RationalPoint> enumerate_points(const VarietyDescriptor& desc,
                                            const std::vector<double>& hmax,
                                            const EnumerationOptions& opts) {
    if (static_cast<int>(hmax.size()) == desc.pic_rank &&
        predicted_points(desc, hmax) > opts.max_points) {
        throw BudgetExceeded("predicted point count exceeds materialization budget");
    }
    const int n_shards = enumeration_shards(desc, hmax);
    std::vector<std::vector<RationalPoint>> per_shard(n_shards);
    std::atomic<long> total{0};
    std::atomic<bool> overflow{false};
    const long cap = static_cast<long>(opts.max_points);
    enumerate_points_visit(desc, hmax, opts,
                           [&](int s, const RationalPoint& p, const std::array<double, 2>&) {
                               if (overflow.load(std::memory_order_relaxed)) return;
                               if (total.fetch_add(1, std::memory_order_relaxed) >= cap) {
                                   overflow.store(true, std::memory_order_relaxed);
                                   return;
                               }
                               per_shard[s].push_back(p);
                           });
    if (overflow.load()) throw BudgetExceeded("materialized point count exceeds budget");
    std::vector<RationalPoint> all;
    all.reserve(static_cast<size_t>(total.load()));
    for (auto& v : per_shard) {
        for (auto& p : v) all.push_back(std::move(p));
        v.clear();
    }
    std::sort(all.begin(), all.end(), [&](const RationalPoint& a, const RationalPoint& b) {
        return canonical_less(desc, a, b);
    });
    all.erase(std::unique(all.begin(), all.end(),
                          [&](const RationalPoint& a, const RationalPoint& b) {
                              return representative(desc, a) == representative(desc, b);
                          }),
              all.end());
    return all;
}

PointSet enumerate_point_set(const VarietyDescriptor& desc, const std::vector<double>& hmax,
                             const EnumerationOptions& opts) {
    PointSet ps;
    ps.desc = desc;
    ps.hmax = hmax;
    ps.points = enumerate_points(desc, hmax, opts);
    return ps;
}

} // namespace flagzoom
