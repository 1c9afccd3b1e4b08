#pragma once

#include <gmpxx.h>

#include <vector>

#include "flagzoom/errors.hpp"

namespace flagzoom {

using Int = mpz_class;
using Rat = mpq_class;
using IntVec = std::vector<Int>;

/// Row basis of a sublattice of Z^n. Rows need not be reduced; all operations
/// treat rows as exact integers.
struct IntBasis {
    std::vector<IntVec> rows;

    int nrows() const { return static_cast<int>(rows.size()); }
    int ncols() const { return rows.empty() ? 0 : static_cast<int>(rows[0].size()); }
};

/// Throws DimensionMismatch unless all rows have equal, nonzero length.
void validate_basis(const IntBasis& b);

/// v / gcd(v) with the first nonzero coordinate made positive.
/// Throws ZeroVector on the zero vector.
IntVec normalize_primitive(const IntVec& v);

Int dot(const IntVec& a, const IntVec& b);
Int norm_sq(const IntVec& v);

/// det(B B^T): squared covolume of the row lattice. Zero iff rows dependent.
Int gram_determinant(const IntBasis& b);

/// True iff the two bases span the same sublattice of Z^n (exact check via
/// Hermite normal forms).
bool same_lattice(const IntBasis& a, const IntBasis& b);

/// Canonical row-style Hermite normal form of the row lattice: pivots positive,
/// entries above a pivot reduced into [0, pivot), zero rows dropped.
IntBasis hermite_normal_form(const IntBasis& b);

/// LLL reduction with exact rational Gram-Schmidt data, Lovasz parameter
/// delta (default 3/4, must lie in (1/4, 1]). Deterministic sweep: lowest
/// index first, ties resolved by index order. The result spans the same
/// lattice. Throws DependentRows if the rows are linearly dependent.
IntBasis lll_reduce(const IntBasis& b, double delta = 0.75);

/// Rank bound below which successive minima are computed exactly by
/// enumeration inside a radius certified to contain d independent vectors.
inline constexpr int kExactMinimaRankBound = 6;

/// Guaranteed ratio between reported and true minima on the approximate path.
double lll_approximation_factor(int rank);

struct MinimaResult {
    std::vector<double> values;      ///< lambda_1 <= ... <= lambda_d
    std::vector<Int> norms_sq;       ///< exact squared norms (exact path only)
    std::vector<IntVec> vectors;     ///< attaining vectors (exact path only)
    bool approximate = false;        ///< true: values are LLL row norms
    double factor = 1.0;             ///< values <= factor * true minima
};

/// Successive minima of the row lattice. Exact for rank <= kExactMinimaRankBound,
/// otherwise LLL row norms flagged approximate with the 2^{(d-1)/2} factor.
/// Throws DependentRows for dependent rows.
MinimaResult successive_minima(const IntBasis& b);

/// All nonzero lattice vectors v (one per +-pair, canonical sign) with
/// norm_sq(v) <= bound, sorted by (norm_sq, lexicographic coordinates).
/// Exact: candidates from floating enumeration are verified with integer
/// arithmetic, and the enumeration region is padded against rounding.
std::vector<IntVec> enumerate_short_vectors(const IntBasis& b, const Int& bound_sq);

} // namespace flagzoom
