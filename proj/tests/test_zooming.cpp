#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "flagzoom/zooming.hpp"

using namespace flagzoom;

namespace {

RealPoint center_from_slope(const VarietyDescriptor& desc, double slope) {
    Eigen::VectorXd dir(2);
    dir << 1.0, slope;
    return real_point_from_direction(desc, dir);
}

TangentVector tv1(const VarietyDescriptor& desc, double z) {
    return TangentVector::from_flat(desc, {z});
}

// Cloud mass computed from first principles: enumerate, filter by window,
// chart, rescale, box-test. Mirrors the documented cloud semantics without
// sharing the streaming machinery.
long brute_mass(const VarietyDescriptor& desc, const RealPoint& x, double tau, double t,
                const WindowSpec& window, const ZoomBox& box) {
    std::vector<double> hmax;
    for (double corner : window.upper_corner()) hmax.push_back(std::exp(corner) + 1e-9);
    hmax.resize(static_cast<std::size_t>(desc.pic_rank));
    long mass = 0;
    for (const auto& p : enumerate_points(desc, hmax)) {
        if (!in_window(multiheight(desc, p), window)) continue;
        try {
            TangentVector v = rescale(desc, chart(desc, x, p), tau * t);
            if (box.contains(v.flat())) ++mass;
        } catch (const NotInChart&) {
        }
    }
    return mass;
}

}  // namespace

TEST_CASE("zoom boxes are closed and dimension-checked") {
    auto desc = make_grassmannian(1, 2);
    ZoomBox box = ZoomBox::centered(desc, 0.5);
    REQUIRE(box.dim() == 1);
    CHECK(box.contains({0.5}));
    CHECK(box.contains({-0.5}));
    CHECK(!box.contains({0.5000001}));

    Rng rng(7);
    RealPoint x = random_real_point(desc, rng);
    ZoomCloud cloud = build_zoom_cloud_stream(desc, x, 0.5, 4.0, WindowSpec::cap(4.0));
    REQUIRE(!cloud.points.empty());
    ZoomBox wrong;
    wrong.lo = {0.0, 0.0};
    wrong.hi = {1.0, 1.0};
    CHECK_THROWS_AS(mass_in_box(cloud, wrong), DimensionMismatch);
}

TEST_CASE("negative dilation strengths are rejected") {
    auto desc = make_grassmannian(1, 2);
    RealPoint x = center_from_slope(desc, std::sqrt(2.0));
    CHECK_THROWS_AS(build_zoom_cloud_stream(desc, x, -0.1, 3.0, WindowSpec::cap(3.0)),
                    ValidationError);
    CHECK_THROWS_AS(build_zoom_cloud(desc, x, -0.1, 3.0, WindowSpec::cap(3.0), {}),
                    ValidationError);
}

TEST_CASE("cloud vectors are the dilated chart images of the window points") {
    auto desc = make_grassmannian(1, 2);
    RealPoint x = center_from_slope(desc, std::sqrt(2.0));
    double t = 5.0;
    WindowSpec w = WindowSpec::cap(t);
    auto pts = enumerate_points(desc, {std::exp(t) + 1e-9});
    ZoomCloud cloud = build_zoom_cloud(desc, x, 0.5, t, w, pts);

    long expected = 0;
    for (const auto& p : pts) {
        if (in_window(multiheight(desc, p), w)) ++expected;
    }
    CHECK(static_cast<long>(cloud.points.size()) + cloud.dropped == expected);

    // spot-check the dilation against a hand computation on the first vectors
    std::size_t idx = 0;
    for (const auto& p : pts) {
        if (idx >= cloud.points.size() || idx >= 5) break;
        if (!in_window(multiheight(desc, p), w)) continue;
        TangentVector manual = rescale(desc, chart(desc, x, p), 0.5 * t);
        CHECK(cloud.points[idx].flat()[0] ==
              doctest::Approx(manual.flat()[0]).epsilon(1e-12));
        ++idx;
    }
}

TEST_CASE("streamed clouds equal materialized clouds") {
    SUBCASE("projective line, both dilation strengths, sector fast path") {
        auto desc = make_grassmannian(1, 2);
        RealPoint x = center_from_slope(desc, std::sqrt(2.0));
        double t = 5.5;
        WindowSpec w = WindowSpec::cap(t);
        auto pts = enumerate_points(desc, {std::exp(t) + 1e-9});
        ZoomBox box = ZoomBox::centered(desc, 1.0);
        for (double tau : {0.5, 1.0}) {
            ZoomCloud mat = build_zoom_cloud(desc, x, tau, t, w, pts);
            ZoomCloud st = build_zoom_cloud_stream(desc, x, tau, t, w, box);
            CHECK(mass_in_box(st, box) == mass_in_box(mat, box));
        }
    }
    SUBCASE("split quadric") {
        auto desc = make_split_quadric(4);
        Rng rng(12345);
        RealPoint x = random_real_point(desc, rng);
        double t = 4.5;
        WindowSpec w = WindowSpec::cap(t);
        auto pts = enumerate_points(desc, {std::exp(t) + 1e-9});
        ZoomCloud mat = build_zoom_cloud(desc, x, 0.5, t, w, pts);
        ZoomCloud st = build_zoom_cloud_stream(desc, x, 0.5, t, w);
        ZoomBox box = ZoomBox::centered(desc, 1.0);
        CHECK(mass_in_box(st, box) == mass_in_box(mat, box));
        CHECK(st.dropped == mat.dropped);
        CHECK(st.points.size() == mat.points.size());
    }
    SUBCASE("full flag with a moving-box window") {
        auto desc = make_full_flag3();
        Rng rng(3);
        RealPoint x = random_real_point(desc, rng);
        WindowSpec w =
            WindowSpec::moving_box({0.0, 0.0}, {1.0, 1.0}, {1.0, 1.0}, 0.0).at_time(1.2);
        double hb = std::exp(2.2) + 1e-9;
        auto pts = enumerate_points(desc, {hb, hb});
        ZoomCloud mat = build_zoom_cloud(desc, x, 0.4, 1.2, w, pts);
        ZoomCloud st = build_zoom_cloud_stream(desc, x, 0.4, 1.2, w);
        ZoomBox box = ZoomBox::centered(desc, 1.0);
        CHECK(mass_in_box(st, box) == mass_in_box(mat, box));
        CHECK(st.points.size() == mat.points.size());
    }
}

TEST_CASE("box mass agrees with a from-scratch recount") {
    auto desc = make_split_quadric(4);
    Rng rng(99);
    RealPoint x = random_real_point(desc, rng);
    double t = 4.5;
    WindowSpec w = WindowSpec::cap(t);
    ZoomBox box = ZoomBox::centered(desc, 1.0);
    ZoomCloud st = build_zoom_cloud_stream(desc, x, 0.5, t, w);
    CHECK(mass_in_box(st, box) == brute_mass(desc, x, 0.5, t, w, box));
}

TEST_CASE("mass slope series equals per-time brute masses") {
    auto desc = make_grassmannian(1, 2);
    RealPoint x = center_from_slope(desc, (1.0 + std::sqrt(5.0)) / 2.0);
    std::vector<double> t_grid{4.0, 4.5, 5.0, 5.5};
    ZoomBox box = ZoomBox::centered(desc, 1.0);
    MassSlopeResult r = mass_slope(desc, x, 0.5, t_grid, box);

    REQUIRE(r.t == t_grid);
    REQUIRE(r.mass.size() == t_grid.size());
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        long manual = brute_mass(desc, x, 0.5, t_grid[i], WindowSpec::cap(t_grid[i]), box);
        CHECK(r.mass[i] == manual);
    }
    CHECK(r.predicted_slope == doctest::Approx(1.0 * (2.0 - 0.5)));

    // fit reproduces a hand least-squares on the same logs
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        lx.push_back(t_grid[i]);
        ly.push_back(std::log(static_cast<double>(r.mass[i])));
    }
    FitResult manual_fit = linear_fit(lx, ly);
    CHECK(r.fit.a == doctest::Approx(manual_fit.a).epsilon(1e-12));
}

TEST_CASE("mass slope input validation") {
    auto desc = make_grassmannian(1, 2);
    RealPoint x = center_from_slope(desc, std::sqrt(2.0));
    ZoomBox box = ZoomBox::centered(desc, 1.0);
    std::vector<double> grid{4.0, 5.0, 6.0, 7.0};

    CHECK_THROWS_AS(mass_slope(desc, x, 2.0, grid, box), ValidationError);  // at the cutoff
    CHECK_THROWS_AS(mass_slope(desc, x, 0.5, {4.0, 5.0}, box), InsufficientData);
    CHECK_THROWS_AS(mass_slope(desc, x, 0.5, {5.0, 4.0, 6.0, 7.0}, box), ValidationError);

    ZoomBox wrong;
    wrong.lo = {0.0, 0.0};
    wrong.hi = {1.0, 1.0};
    CHECK_THROWS_AS(mass_slope(desc, x, 0.5, grid, wrong), DimensionMismatch);

    ZoomBox tiny;
    tiny.lo = {-1e-9};
    tiny.hi = {1e-9};
    CHECK_THROWS_AS(mass_slope(desc, x, 0.5, {1.0, 2.0, 3.0, 4.0}, tiny), InsufficientMass);

    auto flag = make_full_flag3();
    Rng rng(2);
    RealPoint fx = random_real_point(flag, rng);
    CHECK_THROWS_AS(mass_slope(flag, fx, 0.5, grid, ZoomBox::centered(flag, 1.0)),
                    DimensionMismatch);
}

TEST_CASE("multi-generator mass slope accepts a window family") {
    auto desc = make_full_flag3();
    Rng rng(5);
    RealPoint x = random_real_point(desc, rng);
    WindowSpec family = WindowSpec::moving_box({0.0, 0.0}, {1.0, 1.0}, {1.0, 1.0}, 0.0);
    ZoomBox box = ZoomBox::centered(desc, 1.0);
    std::vector<double> t_grid{1.0, 1.5, 2.0};
    MassSlopeResult r = mass_slope_windows(desc, x, 0.25, family, t_grid, box);
    REQUIRE(r.mass.size() == 3);
    for (std::size_t i = 0; i < t_grid.size(); ++i) {
        long manual = brute_mass(desc, x, 0.25, t_grid[i], family.at_time(t_grid[i]), box);
        CHECK(r.mass[i] == manual);
    }
}

TEST_CASE("upper incomplete gamma ratio hits its closed forms") {
    CHECK(gamma_q(1.0, 0.7) == doctest::Approx(std::exp(-0.7)).epsilon(1e-10));
    CHECK(gamma_q(2.5, 0.0) == doctest::Approx(1.0));
    CHECK(gamma_q(0.5, 1.3) == doctest::Approx(std::erfc(std::sqrt(1.3))).epsilon(1e-10));
    double prev = 1.0;
    for (double xv : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        double q = gamma_q(3.0, xv);
        CHECK(q < prev);  // monotone decreasing in x
        prev = q;
    }
    CHECK_THROWS_AS(gamma_q(0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(gamma_q(1.0, -1.0), ValidationError);
}

TEST_CASE("uniformity statistics flag concentration and accept spread") {
    auto desc = make_grassmannian(1, 2);
    ZoomBox box = ZoomBox::centered(desc, 1.0);

    ZoomCloud grid_cloud;
    for (int i = 0; i < 400; ++i)
        grid_cloud.points.push_back(tv1(desc, -1.0 + 2.0 * (i + 0.5) / 400.0));
    UniformityStats even = uniformity_stats(desc, grid_cloud, box);
    CHECK(even.dim == 1);
    CHECK(even.mass == 400);
    CHECK(even.ks < 0.01);

    ZoomCloud spike;
    for (int i = 0; i < 400; ++i) spike.points.push_back(tv1(desc, 0.0));
    UniformityStats bad = uniformity_stats(desc, spike, box);
    CHECK(bad.ks >= 0.49);

    ZoomCloud starved;
    for (int i = 0; i < 20; ++i) starved.points.push_back(tv1(desc, 0.1));
    CHECK_THROWS_AS(uniformity_stats(desc, starved, box), InsufficientMass);

    // out-of-box vectors do not count toward the statistic
    ZoomCloud outside = grid_cloud;
    for (int i = 0; i < 100; ++i) outside.points.push_back(tv1(desc, 3.0));
    UniformityStats trimmed = uniformity_stats(desc, outside, box);
    CHECK(trimmed.mass == 400);
}

TEST_CASE("chi-square path covers multi-dimensional charts") {
    auto desc = make_split_quadric(4);  // chart dimension 2
    ZoomBox box = ZoomBox::centered(desc, 1.0);
    ZoomCloud cloud;
    for (int i = 0; i < 20; ++i)
        for (int j = 0; j < 20; ++j) {
            cloud.points.push_back(TangentVector::from_flat(
                desc, {-1.0 + 2.0 * (i + 0.5) / 20.0, -1.0 + 2.0 * (j + 0.5) / 20.0}));
        }
    UniformityStats s = uniformity_stats(desc, cloud, box);
    CHECK(s.dim == 2);
    CHECK(s.mass == 400);
    CHECK(s.cell_counts.size() == 16);
    long total = 0;
    for (long c : s.cell_counts) total += c;
    CHECK(total == 400);
    CHECK(s.chi2 == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(s.p_value > 0.999);
}

TEST_CASE("dilating the cloud commutes with rescaling chart vectors") {
    auto desc = make_split_quadric(4);
    Rng rng(41);
    RealPoint x = random_real_point(desc, rng);
    double t = 4.0;
    WindowSpec w = WindowSpec::cap(t);
    auto pts = enumerate_points(desc, {std::exp(t) + 1e-9});
    ZoomCloud plain = build_zoom_cloud(desc, x, 0.0, t, w, pts);
    ZoomCloud dilated = build_zoom_cloud(desc, x, 0.5, t, w, pts);
    REQUIRE(plain.points.size() == dilated.points.size());
    REQUIRE(!plain.points.empty());
    for (std::size_t i = 0; i < plain.points.size(); ++i) {
        std::vector<double> re = rescale(desc, plain.points[i], 0.5 * t).flat();
        std::vector<double> got = dilated.points[i].flat();
        REQUIRE(re.size() == got.size());
        for (std::size_t k = 0; k < re.size(); ++k)
            CHECK(got[k] == doctest::Approx(re[k]).epsilon(1e-9));
    }
}
