#include "flagzoom/exactlat.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace flagzoom {

namespace {

// Nearest integer to an exact rational; halves round toward +infinity.
Int round_nearest(const Rat& x) {
    Int num = x.get_num();
    Int den = x.get_den(); // canonical: den > 0
    Int t = 2 * num + den;
    Int q;
    mpz_fdiv_q(q.get_mpz_t(), t.get_mpz_t(), Int(2 * den).get_mpz_t());
    return q;
}

struct GsData {
    // mu[i][j] for j < i, and b_star_sq[i] = |b*_i|^2, all exact rationals.
    std::vector<std::vector<Rat>> mu;
    std::vector<Rat> b_star_sq;
};

// Exact Gram-Schmidt over Q from the integer Gram matrix.
GsData gram_schmidt(const std::vector<IntVec>& rows) {
    int n = static_cast<int>(rows.size());
    GsData gs;
    gs.mu.assign(n, std::vector<Rat>(n, Rat(0)));
    gs.b_star_sq.assign(n, Rat(0));
    // r[i][j] = <b_i, b*_j> expressed exactly.
    std::vector<std::vector<Rat>> r(n, std::vector<Rat>(n, Rat(0)));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            Rat s(dot(rows[i], rows[j]));
            for (int k = 0; k < j; ++k) s -= gs.mu[j][k] * r[i][k];
            r[i][j] = s;
            if (j < i) {
                if (gs.b_star_sq[j] == 0) throw DependentRows("dependent rows in basis");
                gs.mu[i][j] = s / gs.b_star_sq[j];
            } else {
                gs.b_star_sq[i] = s;
            }
        }
        if (gs.b_star_sq[i] == 0) throw DependentRows("dependent rows in basis");
    }
    return gs;
}

void sub_scaled(IntVec& a, const IntVec& b, const Int& c) {
    for (size_t k = 0; k < a.size(); ++k) a[k] -= c * b[k];
}

bool lex_less(const IntVec& a, const IntVec& b) {
    for (size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
}

IntVec canonical_sign(IntVec v) {
    for (const auto& x : v) {
        if (x != 0) {
            if (x < 0) {
                for (auto& y : v) y = -y;
            }
            break;
        }
    }
    return v;
}

} // namespace

void validate_basis(const IntBasis& b) {
    if (b.rows.empty()) throw DimensionMismatch("empty basis");
    size_t n = b.rows[0].size();
    if (n == 0) throw DimensionMismatch("zero-length rows");
    for (const auto& r : b.rows) {
        if (r.size() != n) throw DimensionMismatch("ragged basis rows");
    }
}

IntVec normalize_primitive(const IntVec& v) {
    Int g = 0;
    for (const auto& x : v) {
        Int ax = abs(x);
        mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), ax.get_mpz_t());
    }
    if (g == 0) throw ZeroVector("cannot normalize the zero vector");
    IntVec out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] / g;
    return canonical_sign(std::move(out));
}

Int dot(const IntVec& a, const IntVec& b) {
    Int s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

Int norm_sq(const IntVec& v) { return dot(v, v); }

Int gram_determinant(const IntBasis& b) {
    validate_basis(b);
    int n = b.nrows();
    // Bareiss elimination on the Gram matrix keeps everything integral.
    std::vector<std::vector<Int>> g(n, std::vector<Int>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) g[i][j] = dot(b.rows[i], b.rows[j]);
    Int prev = 1;
    for (int k = 0; k < n - 1; ++k) {
        if (g[k][k] == 0) {
            int p = -1;
            for (int i = k + 1; i < n; ++i) {
                if (g[i][k] != 0) { p = i; break; }
            }
            if (p < 0) return 0; // Gram matrix singular
            // Gram matrices are PSD; a zero diagonal pivot with nonzero column
            // cannot happen for exact Gram data, but keep the swap for safety.
            std::swap(g[k], g[p]);
        }
        for (int i = k + 1; i < n; ++i) {
            for (int j = k + 1; j < n; ++j) {
                g[i][j] = (g[i][j] * g[k][k] - g[i][k] * g[k][j]) / prev;
            }
            g[i][k] = 0;
        }
        prev = g[k][k];
    }
    return g[n - 1][n - 1];
}

IntBasis hermite_normal_form(const IntBasis& b) {
    validate_basis(b);
    std::vector<IntVec> rows = b.rows;
    int m = static_cast<int>(rows.size());
    int n = static_cast<int>(rows[0].size());
    int pivot_row = 0;
    for (int col = 0; col < n && pivot_row < m; ++col) {
        // Clear the column below pivot_row with extended gcd row operations.
        for (int i = pivot_row + 1; i < m; ++i) {
            if (rows[i][col] == 0) continue;
            if (rows[pivot_row][col] == 0) {
                std::swap(rows[pivot_row], rows[i]);
                continue;
            }
            Int g, s, t;
            mpz_gcdext(g.get_mpz_t(), s.get_mpz_t(), t.get_mpz_t(),
                       rows[pivot_row][col].get_mpz_t(), rows[i][col].get_mpz_t());
            Int u = rows[pivot_row][col] / g;
            Int v = rows[i][col] / g;
            IntVec new_p(n), new_i(n);
            for (int k = 0; k < n; ++k) {
                new_p[k] = s * rows[pivot_row][k] + t * rows[i][k];
                new_i[k] = u * rows[i][k] - v * rows[pivot_row][k];
            }
            rows[pivot_row] = std::move(new_p);
            rows[i] = std::move(new_i);
        }
        if (rows[pivot_row][col] == 0) continue;
        if (rows[pivot_row][col] < 0) {
            for (auto& x : rows[pivot_row]) x = -x;
        }
        // Reduce the rows above into [0, pivot).
        for (int i = 0; i < pivot_row; ++i) {
            Int q;
            mpz_fdiv_q(q.get_mpz_t(), rows[i][col].get_mpz_t(),
                       rows[pivot_row][col].get_mpz_t());
            if (q != 0) sub_scaled(rows[i], rows[pivot_row], q);
        }
        ++pivot_row;
    }
    // pivot_row rows are nonzero and already in staircase order by column;
    // the staircase built above keeps earlier pivots in earlier rows.
    IntBasis out;
    out.rows.assign(rows.begin(), rows.begin() + pivot_row);
    return out;
}

bool same_lattice(const IntBasis& a, const IntBasis& b) {
    IntBasis ha = hermite_normal_form(a);
    IntBasis hb = hermite_normal_form(b);
    return ha.rows == hb.rows;
}

double lll_approximation_factor(int rank) {
    return std::pow(2.0, 0.5 * (rank - 1));
}

IntBasis lll_reduce(const IntBasis& b, double delta) {
    validate_basis(b);
    if (!(delta > 0.25 && delta <= 1.0)) {
        throw ValidationError("LLL delta must lie in (1/4, 1]");
    }
    Rat delta_q(delta); // doubles are exact rationals
    std::vector<IntVec> rows = b.rows;
    int n = static_cast<int>(rows.size());
    GsData gs = gram_schmidt(rows); // throws DependentRows up front

    auto size_reduce = [&](int k, int j) {
        if (2 * abs(gs.mu[k][j].get_num()) > gs.mu[k][j].get_den()) {
            Int q = round_nearest(gs.mu[k][j]);
            sub_scaled(rows[k], rows[j], q);
            for (int l = 0; l < j; ++l) gs.mu[k][l] -= Rat(q) * gs.mu[j][l];
            gs.mu[k][j] -= Rat(q);
        }
    };

    int k = 1;
    while (k < n) {
        size_reduce(k, k - 1);
        Rat lhs = gs.b_star_sq[k];
        Rat rhs = (delta_q - gs.mu[k][k - 1] * gs.mu[k][k - 1]) * gs.b_star_sq[k - 1];
        if (lhs >= rhs) {
            for (int j = k - 2; j >= 0; --j) size_reduce(k, j);
            ++k;
        } else {
            std::swap(rows[k], rows[k - 1]);
            // Update the Gram-Schmidt data for the swap (standard exact update).
            Rat mu = gs.mu[k][k - 1];
            Rat big_b = gs.b_star_sq[k] + mu * mu * gs.b_star_sq[k - 1];
            if (big_b == 0) throw DependentRows("dependent rows in basis");
            Rat mu_new = mu * gs.b_star_sq[k - 1] / big_b;
            Rat b_k_new = gs.b_star_sq[k - 1] * gs.b_star_sq[k] / big_b;
            gs.b_star_sq[k - 1] = big_b;
            gs.b_star_sq[k] = b_k_new;
            for (int j = 0; j < k - 1; ++j) std::swap(gs.mu[k][j], gs.mu[k - 1][j]);
            for (int i = k + 1; i < n; ++i) {
                Rat t = gs.mu[i][k];
                gs.mu[i][k] = gs.mu[i][k - 1] - mu * t;
                gs.mu[i][k - 1] = t + mu_new * gs.mu[i][k];
            }
            gs.mu[k][k - 1] = mu_new;
            k = std::max(k - 1, 1);
        }
    }
    IntBasis out;
    out.rows = std::move(rows);
    return out;
}

std::vector<IntVec> enumerate_short_vectors(const IntBasis& b, const Int& bound_sq) {
    validate_basis(b);
    IntBasis red = lll_reduce(b); // also certifies independence
    int n = red.nrows();
    int dim = red.ncols();

    // Floating Gram-Schmidt for enumeration bounds; exact verification below.
    std::vector<std::vector<double>> mu(n, std::vector<double>(n, 0.0));
    std::vector<double> c(n, 0.0); // |b*_i|^2
    {
        GsData gs = gram_schmidt(red.rows);
        for (int i = 0; i < n; ++i) {
            c[i] = gs.b_star_sq[i].get_d();
            for (int j = 0; j < i; ++j) mu[i][j] = gs.mu[i][j].get_d();
        }
    }
    double radius = bound_sq.get_d() * (1.0 + 1e-9) + 1e-9;

    std::vector<IntVec> found;
    std::vector<long> x(n, 0);
    std::vector<double> center(n, 0.0), partial(n + 1, 0.0);

    // Depth-first Fincke-Pohst from the last coordinate down.
    std::function<void(int)> descend = [&](int level) {
        if (level < 0) {
            IntVec v(dim, Int(0));
            bool all_zero = true;
            for (int i = 0; i < n; ++i) {
                if (x[i] != 0) all_zero = false;
                for (int k = 0; k < dim; ++k) v[k] += Int(x[i]) * red.rows[i][k];
            }
            if (all_zero) return;
            Int ns = norm_sq(v);
            if (ns <= bound_sq) found.push_back(canonical_sign(std::move(v)));
            return;
        }
        double remaining = radius - partial[level + 1];
        if (remaining < 0) return;
        if (c[level] <= 0) return;
        double half_width = std::sqrt(remaining / c[level]);
        double offset = 0.0;
        for (int j = level + 1; j < n; ++j) offset += mu[j][level] * x[j];
        center[level] = -offset;
        long lo = static_cast<long>(std::ceil(center[level] - half_width - 1e-9));
        long hi = static_cast<long>(std::floor(center[level] + half_width + 1e-9));
        for (long t = lo; t <= hi; ++t) {
            x[level] = t;
            double d = (t - center[level]);
            partial[level] = partial[level + 1] + c[level] * d * d;
            descend(level - 1);
        }
        x[level] = 0;
    };
    descend(n - 1);

    // One vector per +-pair.
    std::sort(found.begin(), found.end(), [](const IntVec& a, const IntVec& b2) {
        Int na = norm_sq(a), nb = norm_sq(b2);
        if (na != nb) return na < nb;
        return lex_less(a, b2);
    });
    found.erase(std::unique(found.begin(), found.end()), found.end());
    return found;
}

MinimaResult successive_minima(const IntBasis& b) {
    validate_basis(b);
    IntBasis red = lll_reduce(b);
    int n = red.nrows();
    MinimaResult res;

    if (n > kExactMinimaRankBound) {
        std::vector<Int> norms(n);
        for (int i = 0; i < n; ++i) norms[i] = norm_sq(red.rows[i]);
        std::sort(norms.begin(), norms.end());
        for (const auto& ns : norms) res.values.push_back(std::sqrt(ns.get_d()));
        res.approximate = true;
        res.factor = lll_approximation_factor(n);
        return res;
    }

    // Radius: the largest LLL row norm already witnesses n independent vectors.
    Int radius = 0;
    for (int i = 0; i < n; ++i) radius = std::max(radius, norm_sq(red.rows[i]));
    std::vector<IntVec> shorts = enumerate_short_vectors(red, radius);

    // Greedy: scan by nondecreasing norm, keep vectors independent over Q.
    std::vector<std::vector<Rat>> echelon; // reduced rows of picked vectors
    auto try_insert = [&](const IntVec& v) -> bool {
        std::vector<Rat> w(v.size());
        for (size_t i = 0; i < v.size(); ++i) w[i] = Rat(v[i]);
        for (const auto& e : echelon) {
            size_t p = 0;
            while (p < e.size() && e[p] == 0) ++p;
            if (p < e.size() && w[p] != 0) {
                Rat f = w[p] / e[p];
                for (size_t i = p; i < w.size(); ++i) w[i] -= f * e[i];
            }
        }
        for (const auto& x : w) {
            if (x != 0) {
                echelon.push_back(w);
                return true;
            }
        }
        return false;
    };

    for (const auto& v : shorts) {
        if (static_cast<int>(res.vectors.size()) == n) break;
        if (try_insert(v)) {
            res.vectors.push_back(v);
            res.norms_sq.push_back(norm_sq(v));
            res.values.push_back(std::sqrt(res.norms_sq.back().get_d()));
        }
    }
    res.approximate = false;
    res.factor = 1.0;
    return res;
}

} // namespace flagzoom
