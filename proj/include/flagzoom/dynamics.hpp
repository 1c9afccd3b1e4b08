#pragma once

#include <string>
#include <vector>

#include "flagzoom/varieties.hpp"

namespace flagzoom {

/// Diagonal flow in the defining representation at time t. Grassmannian:
/// l entries e^{-t(d-l)/d} then d-l entries e^{t l/d} (determinant one);
/// complete flags: diag(e^{-t}, 1, e^{t}). Quadrics are not flowed.
Eigen::MatrixXd flow_matrix(const VarietyDescriptor& desc, double t);

/// Largest value the shortest vector of a unimodular lattice can take in the
/// given dimension (square root of the Hermite constant, d <= 4).
double hermite_lambda1_bound(int d);

enum class EscapeVerdict { bounded_below, sublinear_decay, linear_decay };

std::string to_string(EscapeVerdict v);

/// Shortest-vector trace of the flowed frame lattice a_t * frame^T * Z^d.
struct EscapeTrace {
    std::vector<double> t;
    std::vector<double> lambda1;  ///< first successive minimum at each t
    std::vector<double> rate;     ///< -log lambda1 / t (0 at t = 0)
    EscapeVerdict verdict = EscapeVerdict::bounded_below;
    double slope = 0.0;           ///< tail slope of -log lambda1 (linear decay)
};

/// Evaluate the trace on an increasing grid starting at 0. The frame must be
/// orthogonal (lambda1(0) = 1). Times above 25 exhaust the extended-precision
/// budget and throw PrecisionLoss. Verdicts: bounded_below when
/// min lambda1 >= 0.2; otherwise linear_decay when the tail slope of
/// -log lambda1 is >= 0.05 (slope reported), else sublinear_decay.
EscapeTrace escape_trace(const VarietyDescriptor& desc, const RealPoint& x,
                         const std::vector<double>& t_grid);

/// Shortest vector of the lattice spanned by the columns (long double
/// Lagrange/LLL reduction plus exhaustive small-coefficient sweep; d <= 4).
double lattice_lambda1(const Eigen::MatrixXd& columns);

} // namespace flagzoom
