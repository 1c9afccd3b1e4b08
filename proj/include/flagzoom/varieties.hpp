#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flagzoom/errors.hpp"
#include "flagzoom/exactlat.hpp"
#include "flagzoom/util.hpp"

namespace flagzoom {

enum class Family { grassmannian, split_quadric, full_flag3 };

/// Small exact rational, enough for the structure constants stored below.
struct Frac {
    int num = 0;
    int den = 1;
    double value() const { return static_cast<double>(num) / den; }
};

struct HeightGenerator {
    std::string name;
    Frac chi_y;  ///< weight of the height line bundle against the flow generator
    Frac beta;   ///< critical zoom exponent; beta * chi_y == 1 for every generator
};

/// Structure constants of one supported variety. All fields are precomputed
/// by the factory functions; nothing is derived from root data at runtime.
struct VarietyDescriptor {
    Family family = Family::grassmannian;
    int l = 1, d = 2;  ///< grassmannian: l-planes in Q^d
    int n = 4;         ///< quadric: ambient variable count

    std::vector<int> grading_dims;  ///< dims of the graded chart components m_1, m_2, ...
    int rho_y = 0;                  ///< volume growth weight; equals sum_k k * dim m_k
    std::vector<HeightGenerator> generators;
    int pic_rank = 1;
    std::vector<int> rho_weights;   ///< density exponents c_i in height coordinates

    int chart_dim() const;
    int ambient_dim() const;        ///< length of the integer representative vector(s)
    std::string name() const;
};

VarietyDescriptor make_grassmannian(int l, int d);   // 1 <= l < d <= 4
VarietyDescriptor make_split_quadric(int n);         // n in [4, 6]
VarietyDescriptor make_full_flag3();

/// Parses "gr:l:d", "quadric:n", "flag3". Throws ValidationError.
VarietyDescriptor parse_variety(const std::string& s);

using I64Vec = std::vector<std::int64_t>;

/// Exact rational point. Which fields are populated depends on the family:
///  - grassmannian: pluecker (canonical sign) and basis (HNF rows, l x d);
///  - split_quadric: vec = primitive isotropic vector, canonical sign;
///  - full_flag3: vec = primitive line vector, covec = primitive plane normal,
///    covec . vec == 0, both canonical sign.
/// Coordinates stay within int64; enumeration budgets keep all derived
/// quantities (minors, squared norms) within 2^62.
struct RationalPoint {
    I64Vec pluecker;
    std::vector<I64Vec> basis;
    I64Vec vec;
    I64Vec covec;
};

/// Flat integer representative used for CSV output and canonical ordering.
I64Vec representative(const VarietyDescriptor& desc, const RationalPoint& p);

/// Exact squared heights (one per generator).
std::array<std::int64_t, 2> heights_sq(const VarietyDescriptor& desc, const RationalPoint& p);

/// Log-heights as doubles.
std::array<double, 2> log_heights(const VarietyDescriptor& desc, const RationalPoint& p);

/// Validates every exact representation invariant of p (primitivity, canonical
/// sign, quadratic/incidence relations, HNF shape, minor consistency).
/// Throws ValidationError with a description on the first failure.
void check_exact_invariants(const VarietyDescriptor& desc, const RationalPoint& p);

/// Strict canonical order: heights first (exact squared comparison), then
/// lexicographic representative.
bool canonical_less(const VarietyDescriptor& desc, const RationalPoint& a,
                    const RationalPoint& b);

/// Real point, carried as an adapted frame s_x:
///  - grassmannian: orthonormal d x d, first l columns span the point;
///  - split_quadric: Witt frame [xhat | v_1 .. v_{n-2} | yhat]: xhat is the
///    Euclidean-unit isotropic representative, yhat isotropic with
///    B(xhat, yhat) = 1, middle columns B-orthonormal (signs in v0_signs);
///  - full_flag3: rotation matrix, column 0 = line, columns 0,1 span the
///    plane, column 2 = plane normal.
struct RealPoint {
    enum class Provenance { random_seeded, explicit_coords, rational };
    Provenance provenance = Provenance::explicit_coords;
    Eigen::MatrixXd frame;
    std::vector<int> v0_signs;           ///< quadric only: q(v_i) = +-1
    std::optional<Rat> exact_slope;      ///< gr(1,2) rational centers: dir = (1, slope)
};

RealPoint real_point_from_direction(const VarietyDescriptor& desc, const Eigen::VectorXd& dir);
RealPoint real_point_from_span(const VarietyDescriptor& desc, const Eigen::MatrixXd& span_cols);
RealPoint real_point_quadric(const VarietyDescriptor& desc, const Eigen::VectorXd& isotropic);
RealPoint real_point_flag3(const Eigen::VectorXd& line, const Eigen::VectorXd& plane_normal);
RealPoint real_point_from_rational(const VarietyDescriptor& desc, const RationalPoint& p);
RealPoint random_real_point(const VarietyDescriptor& desc, Rng& rng);

/// Frame sanity: adapted-frame defining relations hold to 1e-12 and the
/// frame reproduces the point it was built from to 1e-10.
void check_frame(const VarietyDescriptor& desc, const RealPoint& x);

/// Tangent vector in graded chart coordinates at some base point.
struct TangentVector {
    std::vector<Eigen::VectorXd> levels;  ///< one block per grading level

    int dim() const;
    std::vector<double> flat() const;
    static TangentVector from_flat(const VarietyDescriptor& desc, const std::vector<double>& z);
};

/// Chart of v at base x (exact representative -> real coordinates).
/// Throws NotInChart when v lies outside the dense chart cell of x.
TangentVector chart(const VarietyDescriptor& desc, const RealPoint& x, const RationalPoint& v);

/// Chart of a real point y at base x.
TangentVector chart_point(const VarietyDescriptor& desc, const RealPoint& x, const RealPoint& y);

/// Inverse of the chart: the point with chart coordinates z at base x.
RealPoint point_from_tangent(const VarietyDescriptor& desc, const RealPoint& x,
                             const TangentVector& z);

/// Graded dilation: level-k block scales by e^{k s}.
TangentVector rescale(const VarietyDescriptor& desc, const TangentVector& z, double s);

/// max_k |z_k|^{1/k} over grading levels (Euclidean norm per level).
double quasi_norm(const VarietyDescriptor& desc, const TangentVector& z);

/// quasi_norm of the chart of v at x; throws NotInChart.
double distance(const VarietyDescriptor& desc, const RealPoint& x, const RationalPoint& v);

struct EnumerationOptions {
    double max_points = 5e6;     ///< materialization cap (enumerate_points only)
    double max_visits = 2e10;    ///< streamed candidate cap
    int threads = 1;
};

/// All rational points with every height <= hmax[i], each exactly once, in
/// canonical order. hmax must have one entry per height generator.
/// Throws BudgetExceeded when predicted work exceeds the options' caps.
std::vector<RationalPoint> enumerate_points(const VarietyDescriptor& desc,
                                            const std::vector<double>& hmax,
                                            const EnumerationOptions& opts = {});

/// Streaming enumeration: visitor(shard, point, log_heights). Calls within a
/// shard are sequential; shards may run on different workers. The set of
/// visited points is exactly the enumerate_points set, in shard-local
/// deterministic order.
using PointVisitor =
    std::function<void(int shard, const RationalPoint&, const std::array<double, 2>&)>;
void enumerate_points_visit(const VarietyDescriptor& desc, const std::vector<double>& hmax,
                            const EnumerationOptions& opts, const PointVisitor& visitor);

/// Number of shards enumerate_points_visit will use (for sizing accumulators).
int enumeration_shards(const VarietyDescriptor& desc, const std::vector<double>& hmax);

/// Point list plus the bound it is complete up to.
struct PointSet {
    VarietyDescriptor desc;
    std::vector<double> hmax;
    std::vector<RationalPoint> points;
};

PointSet enumerate_point_set(const VarietyDescriptor& desc, const std::vector<double>& hmax,
                             const EnumerationOptions& opts = {});

} // namespace flagzoom
