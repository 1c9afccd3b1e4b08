#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "flagzoom/dynamics.hpp"

using namespace flagzoom;

namespace {

RealPoint center_from_slope(const VarietyDescriptor& desc, double slope) {
    Eigen::VectorXd dir(2);
    dir << 1.0, slope;
    return real_point_from_direction(desc, dir);
}

// Shortest-vector oracle: every candidate coefficient vector c with
// |c_i| <= lambda_bar * ||row_i(B^{-1})|| must be swept (Cauchy-Schwarz on
// c_i = <row_i(B^{-1}), Bc>), where lambda_bar is any upper bound for lambda1
// (here: the smallest column norm). Returns -1 when the sweep box is too big.
double brute_lambda1(const Eigen::MatrixXd& B) {
    const int d = static_cast<int>(B.cols());
    double lam_bar = B.colwise().norm().minCoeff();
    Eigen::MatrixXd inv = B.inverse();
    std::vector<long> cap(d);
    double cells = 1.0;
    for (int i = 0; i < d; ++i) {
        cap[i] = static_cast<long>(std::floor(lam_bar * inv.row(i).norm() + 1e-9)) + 1;
        cells *= 2.0 * static_cast<double>(cap[i]) + 1.0;
    }
    if (cells > 2e6) return -1.0;
    std::vector<long> c(d);
    for (int i = 0; i < d; ++i) c[i] = -cap[i];
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        bool zero = true;
        for (int i = 0; i < d; ++i) zero = zero && c[i] == 0;
        if (!zero) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(B.rows());
            for (int i = 0; i < d; ++i) v += static_cast<double>(c[i]) * B.col(i);
            best = std::min(best, v.norm());
        }
        int k = 0;
        while (k < d && c[k] == cap[k]) {
            c[k] = -cap[k];
            ++k;
        }
        if (k == d) break;
        ++c[k];
    }
    return best;
}

}  // namespace

TEST_CASE("flow matrices have the advertised shape") {
    SUBCASE("projective line: equal and opposite exponents") {
        auto desc = make_grassmannian(1, 2);
        Eigen::MatrixXd a = flow_matrix(desc, 1.4);
        CHECK(a(0, 0) == doctest::Approx(std::exp(-0.7)));
        CHECK(a(1, 1) == doctest::Approx(std::exp(0.7)));
        CHECK(a(0, 1) == 0.0);
        CHECK(a(1, 0) == 0.0);
    }
    SUBCASE("middle grassmannian: determinant one, split exponents") {
        auto desc = make_grassmannian(2, 4);
        Eigen::MatrixXd a = flow_matrix(desc, 2.0);
        CHECK(a.rows() == 4);
        CHECK(a(0, 0) == doctest::Approx(std::exp(-2.0 * 2.0 / 4.0)));
        CHECK(a(1, 1) == doctest::Approx(a(0, 0)));
        CHECK(a(2, 2) == doctest::Approx(std::exp(2.0 * 2.0 / 4.0)));
        CHECK(a.determinant() == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("flag family: three distinct weights") {
        auto desc = make_full_flag3();
        Eigen::MatrixXd a = flow_matrix(desc, 0.9);
        CHECK(a(0, 0) == doctest::Approx(std::exp(-0.9)));
        CHECK(a(1, 1) == doctest::Approx(1.0));
        CHECK(a(2, 2) == doctest::Approx(std::exp(0.9)));
    }
    SUBCASE("no flow on quadrics; identity at time zero") {
        CHECK_THROWS_AS(flow_matrix(make_split_quadric(4), 1.0), UnsupportedFamily);
        auto desc = make_grassmannian(1, 3);
        CHECK(flow_matrix(desc, 0.0).isIdentity(1e-14));
    }
}

TEST_CASE("shortest-vector bounds per dimension") {
    // square roots of the exact Hermite constants
    CHECK(hermite_lambda1_bound(2) == doctest::Approx(std::pow(4.0 / 3.0, 0.25)));
    CHECK(hermite_lambda1_bound(3) == doctest::Approx(std::pow(2.0, 1.0 / 6.0)));
    CHECK(hermite_lambda1_bound(4) == doctest::Approx(std::pow(2.0, 0.25)));
    CHECK_THROWS_AS(hermite_lambda1_bound(5), DimensionMismatch);
    CHECK_THROWS_AS(hermite_lambda1_bound(1), DimensionMismatch);
}

TEST_CASE("shortest vector of explicit lattices") {
    Eigen::MatrixXd I2 = Eigen::MatrixXd::Identity(2, 2);
    CHECK(lattice_lambda1(I2) == doctest::Approx(1.0));

    Eigen::MatrixXd D(2, 2);
    D << 3, 0, 0, 5;
    CHECK(lattice_lambda1(D) == doctest::Approx(3.0));

    // skewed basis of Z^2: shortest vector still 1
    Eigen::MatrixXd S(2, 2);
    S << 1, 100, 0, 1;
    CHECK(lattice_lambda1(S) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("shortest vector matches an exhaustive sweep on random bases") {
    Rng rng(20260817);
    for (int d = 2; d <= 4; ++d) {
        int done = 0;
        while (done < 30) {
            Eigen::MatrixXd B(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) B(i, j) = rng.uniform(-2.0, 2.0);
            if (std::abs(B.determinant()) < 0.05) continue;
            double want = brute_lambda1(B);
            if (want < 0) continue;  // sweep box infeasible for this draw
            double got = lattice_lambda1(B);
            CHECK(got == doctest::Approx(want).epsilon(1e-9));
            ++done;
        }
    }
}

TEST_CASE("shortest vector is invariant under column permutation and negation") {
    Rng rng(7);
    Eigen::MatrixXd B(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) B(i, j) = rng.uniform(-1.5, 1.5);
    if (std::abs(B.determinant()) < 0.05) B += Eigen::MatrixXd::Identity(3, 3);
    double base = lattice_lambda1(B);

    Eigen::MatrixXd P = B;
    P.col(0).swap(P.col(2));
    CHECK(lattice_lambda1(P) == doctest::Approx(base).epsilon(1e-12));

    Eigen::MatrixXd N = B;
    N.col(1) *= -1.0;
    CHECK(lattice_lambda1(N) == doctest::Approx(base).epsilon(1e-12));

    // adding one column to another preserves the lattice
    Eigen::MatrixXd U = B;
    U.col(0) += U.col(1);
    CHECK(lattice_lambda1(U) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("escape traces: shape, bounds, and verdict taxonomy") {
    auto desc = make_grassmannian(1, 2);
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(i * 0.5);

    SUBCASE("rational slope: linear decay at rate one half") {
        RationalPoint rp;
        rp.pluecker = {3, 1};
        rp.basis = {{3, 1}};
        RealPoint x = real_point_from_rational(desc, rp);
        EscapeTrace tr = escape_trace(desc, x, grid);
        REQUIRE(tr.t == grid);
        REQUIRE(tr.lambda1.size() == grid.size());
        CHECK(tr.lambda1[0] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(tr.rate[0] == 0.0);
        CHECK(tr.verdict == EscapeVerdict::linear_decay);
        CHECK(tr.slope == doctest::Approx(0.5).epsilon(0.02));
        // rate column is -log lambda1 / t
        for (std::size_t i = 1; i < grid.size(); ++i) {
            CHECK(tr.rate[i] ==
                  doctest::Approx(-std::log(tr.lambda1[i]) / grid[i]).epsilon(1e-12));
        }
        CHECK(to_string(tr.verdict) == "linear-decay");
    }
    SUBCASE("badly approximable slope: bounded below") {
        RealPoint x = center_from_slope(desc, (1.0 + std::sqrt(5.0)) / 2.0);
        EscapeTrace tr = escape_trace(desc, x, grid);
        double lammin = *std::min_element(tr.lambda1.begin(), tr.lambda1.end());
        CHECK(lammin >= 0.2);
        CHECK(tr.verdict == EscapeVerdict::bounded_below);
        CHECK(to_string(tr.verdict) == "bounded-below");
    }
    SUBCASE("every lambda1 respects the dimension bound") {
        RealPoint x = center_from_slope(desc, std::sqrt(2.0));
        EscapeTrace tr = escape_trace(desc, x, grid);
        double bound = hermite_lambda1_bound(2);
        for (double l : tr.lambda1) CHECK(l <= bound + 1e-9);
    }
}

TEST_CASE("escape traces on the flag family track the line representative") {
    auto desc = make_full_flag3();
    // rational line inside the flag: flow pushes it down at unit rate
    Eigen::VectorXd line(3), normal(3);
    line << 1.0, 2.0, 2.0;
    normal << 2.0, -1.0, 0.0;
    RealPoint x = real_point_flag3(line, normal);
    std::vector<double> grid;
    for (int i = 0; i <= 24; ++i) grid.push_back(i * 0.5);
    EscapeTrace tr = escape_trace(desc, x, grid);
    CHECK(tr.verdict == EscapeVerdict::linear_decay);
    CHECK(tr.slope >= 0.4);
    CHECK(tr.lambda1[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("escape grid validation and precision ceiling") {
    auto desc = make_grassmannian(1, 2);
    RealPoint x = center_from_slope(desc, std::sqrt(2.0));
    CHECK_THROWS_AS(escape_trace(desc, x, {1.0, 2.0}), ValidationError);    // no 0 start
    CHECK_THROWS_AS(escape_trace(desc, x, {0.0, 2.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(escape_trace(desc, x, {0.0, 10.0, 30.0}), PrecisionLoss);
    CHECK_THROWS_AS(escape_trace(make_split_quadric(4), x, {0.0, 1.0}), UnsupportedFamily);
}

TEST_CASE("flowed lattices rescale exactly under the group action") {
    // a_t (a_s Lambda) = a_{t+s} Lambda: lambda1 computed either way agrees
    auto desc = make_grassmannian(1, 2);
    RealPoint x = center_from_slope(desc, std::sqrt(3.0));
    Eigen::MatrixXd L = x.frame.transpose();
    Eigen::MatrixXd two_step = flow_matrix(desc, 1.25) * (flow_matrix(desc, 0.75) * L);
    Eigen::MatrixXd one_step = flow_matrix(desc, 2.0) * L;
    CHECK(lattice_lambda1(two_step) ==
          doctest::Approx(lattice_lambda1(one_step)).epsilon(1e-12));
}
