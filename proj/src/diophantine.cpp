#include "flagzoom/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "flagzoom/exactlat.hpp"

namespace flagzoom {

namespace {

using i128 = __int128;

constexpr double kSelfDistance = 1e-13;

struct ScanEntry {
    std::int64_t hsq;
    const RationalPoint* p;
};

std::vector<ApproxRecord> scan_records(const VarietyDescriptor& desc, const RealPoint& x,
                                       std::vector<ScanEntry>& entries, bool exclude_self) {
    std::sort(entries.begin(), entries.end(), [&](const ScanEntry& a, const ScanEntry& b) {
        if (a.hsq != b.hsq) return a.hsq < b.hsq;
        return canonical_less(desc, *a.p, *b.p);
    });
    std::vector<ApproxRecord> records;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : entries) {
        double dist;
        try {
            dist = distance(desc, x, *e.p);
        } catch (const NotInChart&) {
            continue;
        }
        if (exclude_self && dist < kSelfDistance) continue;
        if (dist >= best) continue;
        best = dist;
        double lh = 0.5 * std::log(static_cast<double>(e.hsq));
        if (!records.empty() && records.back().log_h == lh) {
            records.back().dist = dist;
            records.back().point = *e.p;
        } else {
            records.push_back(ApproxRecord{lh, dist, *e.p});
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// projective-line record stream

struct LineCand {
    std::int64_t a, b;
    std::int64_t hsq;
};

// Candidate pairs around the center direction. Every distance record of
// height > 50 lies within |b - a*xi| <= 3 of the dominant-coordinate ray (a
// pigeonhole point of smaller height already achieves sin(angle) <= 2/(a'*
// sqrt(1+xi^2)) for every a' below the current height, which caps the lateral
// offset of any later record by ~2.1); pairs of height <= 50 are brute-forced.
std::vector<LineCand> line_candidates(double xi, bool swapped, double hmax) {
    std::vector<LineCand> out;
    const std::int64_t brute = 50;
    const std::int64_t brute_sq = brute * brute;
    // exhaustive small heights (a >= 1; the vertical point is added by caller)
    for (std::int64_t a = 1; a <= brute; ++a) {
        for (std::int64_t b = -brute; b <= brute; ++b) {
            std::int64_t h = a * a + b * b;
            if (h > brute_sq || gcd64(a, std::abs(b)) != 1) continue;
            out.push_back(LineCand{a, b, h});
        }
    }
    const std::int64_t amax = static_cast<std::int64_t>(std::floor(hmax));
    const double hmax_sq = hmax * hmax;
    for (std::int64_t a = 1; a <= amax; ++a) {
        double center = a * xi;
        std::int64_t blo = static_cast<std::int64_t>(std::ceil(center - 3.0));
        std::int64_t bhi = static_cast<std::int64_t>(std::floor(center + 3.0));
        for (std::int64_t b = blo; b <= bhi; ++b) {
            std::int64_t h = a * a + b * b;
            if (h <= brute_sq || static_cast<double>(h) > hmax_sq) continue;
            if (gcd64(a, std::abs(b)) != 1) continue;
            out.push_back(LineCand{a, b, h});
        }
    }
    if (swapped) {
        for (auto& c : out) {
            std::swap(c.a, c.b);
            if (c.a < 0 || (c.a == 0 && c.b < 0)) {
                c.a = -c.a;
                c.b = -c.b;
            }
        }
    }
    return out;
}

RationalPoint line_point(std::int64_t a, std::int64_t b) {
    RationalPoint p;
    p.pluecker = {a, b};
    p.basis = {p.pluecker};
    return p;
}

std::vector<ApproxRecord> line_records_stream(const RealPoint& x, double hmax,
                                              bool exclude_self) {
    // dominant coordinate of the center direction decides the scan axis
    const double c0 = x.frame(0, 0), c1 = x.frame(1, 0);
    const bool swapped = std::abs(c1) > std::abs(c0);
    const double xi = swapped ? c0 / c1 : c1 / c0;
    auto cands = line_candidates(xi, swapped, hmax);
    // dominant-coordinate scans never produce the off-axis unit point
    if (swapped) {
        cands.push_back(LineCand{1, 0, 1});
    } else {
        cands.push_back(LineCand{0, 1, 1});
    }
    std::sort(cands.begin(), cands.end(), [](const LineCand& u, const LineCand& v) {
        if (u.hsq != v.hsq) return u.hsq < v.hsq;
        if (u.a != v.a) return u.a < v.a;
        return u.b < v.b;
    });
    cands.erase(std::unique(cands.begin(), cands.end(),
                            [](const LineCand& u, const LineCand& v) {
                                return u.a == v.a && u.b == v.b;
                            }),
                cands.end());

    std::vector<ApproxRecord> records;
    if (x.exact_slope) {
        // center (1 : s); |z| = |q b - p a| / |q a + p b| exactly
        Int p = x.exact_slope->get_num(), q = x.exact_slope->get_den();
        Int bnum = 0, bden = 0;  // current best distance as |bnum|/bden
        bool have = false;
        for (const auto& c : cands) {
            Int znum = q * Int((long)c.b) - p * Int((long)c.a);
            Int zden = q * Int((long)c.a) + p * Int((long)c.b);
            if (zden == 0) continue;  // orthogonal direction: not in chart
            if (zden < 0) zden = -zden;
            if (znum < 0) znum = -znum;
            if (exclude_self && znum == 0) continue;
            if (have && znum * bden >= bnum * zden) continue;
            bnum = znum;
            bden = zden;
            have = true;
            double lh = 0.5 * std::log(static_cast<double>(c.hsq));
            double dist = std::abs(znum.get_d() / zden.get_d());
            if (znum != 0 && dist == 0.0) {
                // underflow guard: exact ratio via logs
                dist = std::exp(std::log(znum.get_d() == 0 ? 1e-300 : znum.get_d()) -
                                std::log(zden.get_d()));
            }
            if (!records.empty() && records.back().log_h == lh) {
                records.back().dist = dist;
                records.back().point = line_point(c.a, c.b);
            } else {
                records.push_back(ApproxRecord{lh, dist, line_point(c.a, c.b)});
            }
        }
        return records;
    }

    const long double d0 = x.frame(0, 1), d1 = x.frame(1, 1);
    const long double e0 = c0, e1 = c1;
    long double best = std::numeric_limits<long double>::infinity();
    for (const auto& c : cands) {
        long double den = e0 * c.a + e1 * c.b;
        long double num = d0 * c.a + d1 * c.b;
        if (std::abs((double)den) < 1e-18 * std::hypot((double)c.a, (double)c.b)) continue;
        long double dist = std::abs((double)(num / den));
        if (exclude_self && dist < kSelfDistance) continue;
        if (dist >= best) continue;
        best = dist;
        double lh = 0.5 * std::log(static_cast<double>(c.hsq));
        if (!records.empty() && records.back().log_h == lh) {
            records.back().dist = static_cast<double>(dist);
            records.back().point = line_point(c.a, c.b);
        } else {
            records.push_back(ApproxRecord{lh, static_cast<double>(dist), line_point(c.a, c.b)});
        }
    }
    return records;
}

} // namespace

std::vector<ApproxRecord> best_approx_records(const VarietyDescriptor& desc, const RealPoint& x,
                                              const std::vector<RationalPoint>& points,
                                              bool exclude_self) {
    if (desc.pic_rank != 1) {
        throw DimensionMismatch("approximation records need a single height generator");
    }
    std::vector<ScanEntry> entries;
    entries.reserve(points.size());
    for (const auto& p : points) entries.push_back(ScanEntry{heights_sq(desc, p)[0], &p});
    return scan_records(desc, x, entries, exclude_self);
}

std::vector<ApproxRecord> best_approx_records_stream(const VarietyDescriptor& desc,
                                                     const RealPoint& x, double hmax,
                                                     bool exclude_self,
                                                     const EnumerationOptions& opts) {
    if (hmax < 1) throw ValidationError("height bound must be >= 1");
    if (desc.family == Family::grassmannian && desc.l == 1 && desc.d == 2) {
        return line_records_stream(x, hmax, exclude_self);
    }
    if (desc.pic_rank != 1) {
        throw DimensionMismatch("approximation records need a single height generator");
    }
    auto points = enumerate_points(desc, {hmax}, opts);
    return best_approx_records(desc, x, points, exclude_self);
}

BetaEstimate estimate_beta(const std::vector<ApproxRecord>& records, double h_min) {
    if (h_min < 1) throw ValidationError("height floor must be >= 1");
    const double lmin = std::log(h_min);
    std::vector<double> xs, ys;
    BetaEstimate est;
    for (const auto& r : records) {
        if (r.log_h < lmin || r.log_h <= 0 || r.dist <= 0) continue;
        xs.push_back(r.log_h);
        ys.push_back(-std::log(r.dist));
        est.max_ratio = std::max(est.max_ratio, -std::log(r.dist) / r.log_h);
    }
    if (xs.size() < 3) {
        throw InsufficientData("need at least 3 records above the height floor");
    }
    est.used = static_cast<long>(xs.size());
    // slope of -log d against log H
    double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxx = 0, sxy = 0;
    for (size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0) throw InsufficientData("records share a single height");
    est.slope = sxy / sxx;
    return est;
}

// ---------------------------------------------------------------------------
// genericity

namespace {

Eigen::MatrixXd point_columns(const VarietyDescriptor& desc, const RationalPoint& p, int m) {
    Eigen::MatrixXd W(desc.d, m);
    for (int r = 0; r < m; ++r) {
        Eigen::VectorXd col(desc.d);
        for (int i = 0; i < desc.d; ++i) col(i) = static_cast<double>(p.basis[r][i]);
        W.col(r) = col.normalized();
    }
    return W;
}

int numeric_rank(const Eigen::MatrixXd& M, double tol, double* gap_out) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    double top = sv(0);
    int rank = 0;
    double gap = 0.0;
    for (int i = 0; i < sv.size(); ++i) {
        if (sv(i) > tol * top) {
            ++rank;
        } else if (gap == 0.0) {
            gap = sv(i);
        }
    }
    if (gap_out) *gap_out = gap;
    return rank;
}

// det of M M^T (rows <= 4) -- cheap rank-collapse prefilter
double stacked_gram_det(const Eigen::MatrixXd& M) {
    const Eigen::MatrixXd G = M.cols() >= M.rows() ? Eigen::MatrixXd(M * M.transpose())
                                                   : Eigen::MatrixXd(M.transpose() * M);
    return G.determinant();
}

void grassmannian_genericity(const VarietyDescriptor& desc, const RealPoint& x, double bound,
                             double tol, GenericityReport& rep) {
    for (int m = 1; m <= desc.d - 1; ++m) {
        auto sub = make_grassmannian(m, desc.d);
        EnumerationOptions opts;
        opts.max_points = 200'000'000;
        const int full = std::min(desc.l + m, desc.d);
        // streamed: the scan only ever needs one candidate subspace at a time
        Eigen::MatrixXd M(desc.d, desc.l + m);
        M.leftCols(desc.l) = x.frame.leftCols(desc.l);
        enumerate_points_visit(
            sub, {bound}, opts,
            [&](int, const RationalPoint& w, const std::array<double, 2>&) {
                M.rightCols(m) = point_columns(desc, w, m);
                rep.checked++;
                if (stacked_gram_det(M) > 1e-6) return;  // far from rank collapse
                double gap = 0.0;
                int rank = numeric_rank(M, tol, &gap);
                if (rank < full) {
                    GenericityViolation v;
                    v.m = m;
                    v.witness = w;
                    v.expected_dim = std::max(0, desc.l + m - desc.d);
                    v.actual_dim = desc.l + m - rank;
                    v.gap = gap;
                    rep.violations.push_back(std::move(v));
                }
            });
    }
    if (desc.l == 1) {
        // integer-relation sweep over the line's coordinates
        const double scale = 1e12;
        IntBasis basis;
        for (int i = 0; i < desc.d; ++i) {
            IntVec row(desc.d + 1, 0);
            row[i] = 1;
            double xi = x.frame(i, 0);
            mpz_class big;
            mpz_set_d(big.get_mpz_t(), std::round(xi * scale));
            row[desc.d] = big;
            basis.rows.push_back(std::move(row));
        }
        IntBasis red = lll_reduce(basis);
        for (const auto& row : red.rows) {
            double resid = 0.0;
            double maxc = 0.0;
            bool fits = true;
            std::vector<long long> rel(desc.d);
            for (int i = 0; i < desc.d; ++i) {
                if (!row[i].fits_slong_p()) {
                    fits = false;
                    break;
                }
                rel[i] = row[i].get_si();
                resid += static_cast<double>(rel[i]) * x.frame(i, 0);
                maxc = std::max(maxc, std::abs(static_cast<double>(rel[i])));
            }
            if (!fits || maxc == 0.0 || maxc > 1e5) continue;
            if (std::abs(resid) < 1e-10) {
                rep.integer_relation = rel;
                break;
            }
        }
    }
}

void quadric_genericity(const VarietyDescriptor& desc, const RealPoint& x, double bound,
                        double tol, GenericityReport& rep) {
    EnumerationOptions opts;
    opts.max_points = 100'000'000;
    auto pts = enumerate_points(desc, {bound}, opts);
    const int n = desc.n;
    const Eigen::VectorXd xv = x.frame.col(0);
    // twice the bilinear form, exact on integer vectors
    auto bilin2 = [&](const I64Vec& u, const I64Vec& v) -> i128 {
        i128 s = (i128)u[0] * v[n - 1] + (i128)u[n - 1] * v[0];
        if (n == 4) {
            s = (i128)u[0] * v[3] + (i128)u[3] * v[0] - (i128)u[1] * v[2] - (i128)u[2] * v[1];
        } else {
            for (int i = 1; i + 1 < n; ++i) s -= 2 * (i128)u[i] * v[i];
        }
        return s;
    };
    std::vector<Eigen::VectorXd> unit;
    unit.reserve(pts.size());
    for (const auto& p : pts) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = static_cast<double>(p.vec[i]);
        unit.push_back(v.normalized());
    }
    // containment in a rational isotropic line
    for (size_t i = 0; i < pts.size(); ++i) {
        rep.checked++;
        double align = std::abs(unit[i].dot(xv));
        if (1.0 - align < tol) {
            GenericityViolation v;
            v.m = 1;
            v.witness = pts[i];
            v.expected_dim = 0;
            v.actual_dim = 1;
            v.gap = 1.0 - align;
            rep.violations.push_back(std::move(v));
        }
    }
    // containment in a rational isotropic plane: spans of orthogonal pairs
    for (size_t i = 0; i < pts.size(); ++i) {
        for (size_t j = i + 1; j < pts.size(); ++j) {
            if (bilin2(pts[i].vec, pts[j].vec) != 0) continue;
            rep.checked++;
            Eigen::MatrixXd M(n, 3);
            M.col(0) = unit[i];
            M.col(1) = unit[j];
            M.col(2) = xv;
            if (stacked_gram_det(M) > 1e-6) continue;
            double gap = 0.0;
            int rank = numeric_rank(M, tol, &gap);
            if (rank < 3) {
                GenericityViolation v;
                v.m = 2;
                v.witness = pts[i];
                v.expected_dim = 0;
                v.actual_dim = 1;
                v.gap = gap;
                rep.violations.push_back(std::move(v));
            }
        }
    }
}

} // namespace

GenericityReport schubert_genericity(const VarietyDescriptor& desc, const RealPoint& x,
                                     double bound, double tol) {
    if (bound < 1) throw ValidationError("subspace height bound must be >= 1");
    GenericityReport rep;
    rep.bound = bound;
    switch (desc.family) {
        case Family::grassmannian:
            grassmannian_genericity(desc, x, bound, tol, rep);
            break;
        case Family::split_quadric:
            quadric_genericity(desc, x, bound, tol, rep);
            break;
        case Family::full_flag3:
            throw UnsupportedFamily("genericity scan covers grassmannians and quadrics");
    }
    rep.generic = rep.violations.empty() && !rep.integer_relation;
    rep.note = "inconclusive beyond height " + std::to_string(bound);
    return rep;
}

} // namespace flagzoom
