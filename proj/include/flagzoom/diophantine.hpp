#pragma once

#include <optional>
#include <string>
#include <vector>

#include "flagzoom/varieties.hpp"

namespace flagzoom {

/// One record-setting approximation: a rational point strictly closer to the
/// center than every point of smaller height.
struct ApproxRecord {
    double log_h = 0.0;   ///< log of the (single-generator) height
    double dist = 0.0;    ///< chart quasi-norm distance to the center
    RationalPoint point;
};

/// Scan a materialized point list in increasing height (canonical tie-break)
/// and keep strict distance records. Heights come out strictly increasing and
/// distances strictly decreasing; at equal height only the closest survives.
/// exclude_self skips points at distance < 1e-13 (rational centers).
/// Points outside the chart cell never set records.
std::vector<ApproxRecord> best_approx_records(const VarietyDescriptor& desc, const RealPoint& x,
                                              const std::vector<RationalPoint>& points,
                                              bool exclude_self = false);

/// Same records computed without materializing the full point set. On the
/// projective line a divisor-window candidate stream reaches hmax = 1e6
/// cheaply (every record provably lies in the window; exact-rational distance
/// comparisons when the center is rational). Other families fall back to a
/// full enumeration and inherit its budget limits.
std::vector<ApproxRecord> best_approx_records_stream(const VarietyDescriptor& desc,
                                                     const RealPoint& x, double hmax,
                                                     bool exclude_self = false,
                                                     const EnumerationOptions& opts = {});

struct BetaEstimate {
    double slope = 0.0;      ///< -log d vs log H least-squares slope (headline)
    double max_ratio = 0.0;  ///< max single-record -log d / log H
    long used = 0;           ///< records entering the fit
};

/// Fit the approximation exponent from records with height >= h_min.
/// Throws InsufficientData with fewer than 3 such records.
BetaEstimate estimate_beta(const std::vector<ApproxRecord>& records, double h_min);

/// A rational subspace meeting the center in larger-than-expected dimension.
struct GenericityViolation {
    int m = 0;               ///< dimension of the rational subspace
    RationalPoint witness;
    int expected_dim = 0;
    int actual_dim = 0;
    double gap = 0.0;        ///< smallest singular value that collapsed
};

struct GenericityReport {
    bool generic = true;     ///< no violation among subspaces of height <= bound
    double bound = 0.0;
    long checked = 0;
    std::vector<GenericityViolation> violations;
    /// projective line / hyperplane integer-relation witness, when one exists
    std::optional<std::vector<long long>> integer_relation;
    std::string note;        ///< always "inconclusive beyond bound" semantics
};

/// Exhaustive scan of rational subspaces of height <= bound for degenerate
/// intersection with the center: grassmannians test every complementary
/// dimension via singular values of the stacked basis, lines additionally run
/// integer-relation detection on the coordinates, quadrics test containment
/// in rational isotropic lines and planes. Deterministic order.
GenericityReport schubert_genericity(const VarietyDescriptor& desc, const RealPoint& x,
                                     double bound, double tol = 1e-9);

} // namespace flagzoom
