// Acceptance harness: one self-contained check per numbered criterion,
// printing exactly one PASS/FAIL line each. Every check recomputes its
// numbers from the public library API; the bytes field serializes every
// computed value so criterion 11 can compare runs across worker counts.

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flagzoom/counting.hpp"
#include "flagzoom/diophantine.hpp"
#include "flagzoom/dynamics.hpp"
#include "flagzoom/experiments.hpp"
#include "flagzoom/heights.hpp"
#include "flagzoom/util.hpp"
#include "flagzoom/varieties.hpp"
#include "flagzoom/zooming.hpp"

using namespace flagzoom;

namespace {

constexpr std::uint64_t kSeed = 12345;

struct CritResult {
    bool pass = false;
    std::string detail;
    std::string bytes;  // serialization of every computed value (no timings)
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

EnumerationOptions opts_with(int threads) {
    EnumerationOptions o;
    o.threads = threads;
    return o;
}

inline void fnv_step(std::uint64_t& h, char c) {
    h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
}

std::vector<double> geometric_grid(double lo, double hi, int n) {
    std::vector<double> g;
    for (int i = 0; i < n; ++i)
        g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
    return g;
}

// --------------------------------------------------------------- criterion 1

CritResult criterion_1(int threads) {
    auto t0 = std::chrono::steady_clock::now();
    struct Job {
        VarietyDescriptor desc;
        std::vector<double> hmax;
    };
    std::vector<Job> jobs{{make_grassmannian(2, 4), {20.0}},
                          {make_split_quadric(4), {50.0}},
                          {make_full_flag3(), {20.0, 20.0}}};
    CritResult r;
    long total = 0, bad_total = 0;
    for (const Job& job : jobs) {
        const int shards = enumeration_shards(job.desc, job.hmax);
        std::vector<long> cnt(shards, 0), bad(shards, 0);
        std::vector<std::uint64_t> hash(shards, 1469598103934665603ULL);
        enumerate_points_visit(job.desc, job.hmax, opts_with(threads),
                               [&](int shard, const RationalPoint& p,
                                   const std::array<double, 2>&) {
                                   cnt[shard]++;
                                   try {
                                       check_exact_invariants(job.desc, p);
                                   } catch (const Error&) {
                                       bad[shard]++;
                                   }
                                   for (std::int64_t c : representative(job.desc, p)) {
                                       char buf[24];
                                       std::snprintf(buf, sizeof(buf), "%lld,",
                                                     static_cast<long long>(c));
                                       for (const char* q = buf; *q; ++q)
                                           fnv_step(hash[shard], *q);
                                   }
                               });
        long n = 0, b = 0;
        std::uint64_t combined = 1469598103934665603ULL;
        for (int s = 0; s < shards; ++s) {
            n += cnt[s];
            b += bad[s];
            for (char c : fmt_hex(hash[s])) fnv_step(combined, c);
        }
        total += n;
        bad_total += b;
        r.bytes += job.desc.name() + ":n=" + std::to_string(n) +
                   ",hash=" + fmt_hex(combined) + ";";
    }
    double el = seconds_since(t0);
    r.pass = bad_total == 0 && el < 60.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "%ld points, %ld invariant failures, %.1fs (limit 60s)", total, bad_total,
                  el);
    r.detail = buf;
    return r;
}

// --------------------------------------------------------------- criterion 2

CritResult criterion_2(int threads) {
    auto desc = make_grassmannian(1, 2);
    std::vector<double> grid = geometric_grid(20.0, 2000.0, 12);
    CountSeries series = height_count_series(desc, grid, opts_with(threads));
    double n_h = static_cast<double>(series.counts.back());
    double h = series.grid.back();
    double density = n_h / (h * h);
    FitResult fit = fit_power_log(series, 0);

    CritResult r;
    for (std::size_t i = 0; i < series.grid.size(); ++i)
        r.bytes += fmt(series.grid[i]) + "," + std::to_string(series.counts[i]) + ";";
    r.bytes += "density=" + fmt(density) + ";a=" + fmt(fit.a) + ";c=" + fmt(fit.c);
    bool density_ok = density >= 0.936 && density <= 0.974;
    bool a_ok = std::abs(fit.a - 2.0) <= 0.05;
    r.pass = density_ok && a_ok;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "N(2000)/2000^2 = %.4f (band [0.936, 0.974]), a = %.4f ± 0.05 of 2",
                  density, fit.a);
    r.detail = buf;
    return r;
}

// --------------------------------------------------------------- criterion 3

CritResult criterion_3(int threads) {
    auto t0 = std::chrono::steady_clock::now();
    struct Job {
        VarietyDescriptor desc;
        double hmax, target, tol;
        int b_pin;  // known log-power of the family's growth law
    };
    std::vector<Job> jobs{{make_grassmannian(1, 3), 150.0, 3.0, 0.15, 0},
                          {make_grassmannian(2, 4), 40.0, 4.0, 0.2, 0},
                          {make_split_quadric(4), 400.0, 2.0, 0.15, 1}};
    CritResult r;
    r.pass = true;
    std::string parts;
    for (const Job& job : jobs) {
        std::vector<double> grid = geometric_grid(std::max(8.0, job.hmax / 100.0), job.hmax, 12);
        CountSeries series = height_count_series(job.desc, grid, opts_with(threads));
        FitResult fit = fit_power_log(series, job.b_pin);
        for (std::size_t i = 0; i < series.grid.size(); ++i)
            r.bytes += fmt(series.grid[i]) + "," + std::to_string(series.counts[i]) + ";";
        r.bytes += job.desc.name() + ":a=" + fmt(fit.a) + ",b=" + fmt(fit.b) + ";";
        bool ok = std::abs(fit.a - job.target) <= job.tol;
        r.pass = r.pass && ok;
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%s a=%.3f (%.1f±%.2f) ", job.desc.name().c_str(),
                      fit.a, job.target, job.tol);
        parts += buf;
    }
    double el = seconds_since(t0);
    r.pass = r.pass && el < 600.0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "| %.1fs (limit 600s)", el);
    r.detail = parts + buf;
    return r;
}

// --------------------------------------------------------------- criterion 4

CritResult criterion_4(int threads) {
    auto desc = make_full_flag3();
    WindowSpec family = WindowSpec::moving_box({0.0, 0.0}, {1.0, 1.0}, {1.0, 1.0}, 0.0);
    std::vector<double> t_grid{1.0, 2.0, 3.0};
    RatioSeries rs = window_ratio_series(desc, family, t_grid, opts_with(threads));

    CritResult r;
    for (std::size_t i = 0; i < rs.t.size(); ++i)
        r.bytes += fmt(rs.t[i]) + "," + std::to_string(rs.count[i]) + "," + fmt(rs.ratio[i]) + ";";
    r.bytes += "slope=" + fmt(rs.count_slope.a) + ";spread=" + fmt(rs.spread);
    bool slope_ok = std::abs(rs.count_slope.a - 4.0) <= 0.3;
    bool spread_ok = rs.spread < 0.20;
    r.pass = slope_ok && spread_ok;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "log-count slope %.3f (4.0±0.3), ratio spread %.1f%% (<20%%)",
                  rs.count_slope.a, 100.0 * rs.spread);
    r.detail = buf;
    return r;
}

// --------------------------------------------------------------- criterion 5

CritResult criterion_5(int threads) {
    auto t0 = std::chrono::steady_clock::now();
    auto desc = make_grassmannian(1, 2);
    std::vector<std::string> centers{"sqrt2", "random:0", "random:1", "random:2",
                                     "random:3", "random:4"};
    std::vector<double> t_grid{8, 9, 10, 11, 12, 13, 14};
    ZoomBox box = ZoomBox::centered(desc, 1.0);

    CritResult r;
    r.pass = true;
    int failures = 0;
    double worst_rel = 0.0;
    for (double tau : {0.5, 1.0}) {
        for (const std::string& c : centers) {
            RealPoint x = resolve_center(desc, c, kSeed);
            MassSlopeResult m = mass_slope(desc, x, tau, t_grid, box, opts_with(threads));
            double target = 2.0 - tau;
            double rel = std::abs(m.fit.a - target) / target;
            worst_rel = std::max(worst_rel, rel);
            if (rel > 0.10) {
                ++failures;
                r.pass = false;
            }
            r.bytes += c + ",tau=" + fmt(tau) + ":a=" + fmt(m.fit.a) + ";";
            for (long mass : m.mass) r.bytes += std::to_string(mass) + ",";
            r.bytes += ";";
        }
    }
    double el = seconds_since(t0);
    r.pass = r.pass && el < 300.0;
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "12 runs, %d outside (2-tau)±10%%, worst dev %.1f%%, %.1fs (limit 300s)",
                  failures, 100.0 * worst_rel, el);
    r.detail = buf;
    return r;
}

// --------------------------------------------------------------- criterion 6

CritResult criterion_6(int threads) {
    auto desc = make_split_quadric(4);
    RealPoint x = resolve_center(desc, "random", kSeed);
    std::vector<double> t_grid{4.0, 4.5, 5.0, 5.5, 6.0};
    ZoomBox box = ZoomBox::centered(desc, 1.0);
    MassSlopeResult m = mass_slope(desc, x, 0.5, t_grid, box, opts_with(threads));

    CritResult r;
    for (std::size_t i = 0; i < m.t.size(); ++i)
        r.bytes += fmt(m.t[i]) + "," + std::to_string(m.mass[i]) + ";";
    r.bytes += "slope=" + fmt(m.fit.a);
    r.pass = std::abs(m.fit.a - 1.0) <= 0.15;
    char buf[160];
    std::snprintf(buf, sizeof(buf), "fitted slope %.4f, band [0.85, 1.15]", m.fit.a);
    r.detail = buf;
    return r;
}

// --------------------------------------------------------------- criterion 7

CritResult criterion_7(int threads) {
    auto desc = make_grassmannian(1, 2);
    RealPoint x = resolve_center(desc, "sqrt2m1", kSeed);
    ZoomBox box = ZoomBox::centered(desc, 1.0);
    ZoomCloud cloud = build_zoom_cloud_stream(desc, x, 1.0, 13.0, WindowSpec::cap(13.0), box,
                                              opts_with(threads));
    UniformityStats st = uniformity_stats(desc, cloud, box);

    CritResult r;
    r.bytes = "mass=" + std::to_string(st.mass) + ";ks=" + fmt(st.ks);
    r.pass = st.ks < 0.1;
    char buf[120];
    std::snprintf(buf, sizeof(buf), "KS = %.4f over %ld points (< 0.1)", st.ks, st.mass);
    r.detail = buf;
    return r;
}

// --------------------------------------------------------------- criterion 8

CritResult criterion_8(int threads) {
    auto desc = make_grassmannian(1, 2);
    CritResult r;

    // golden ratio: exponent 2 and exact convergent cross-check
    RealPoint golden = resolve_center(desc, "golden", kSeed);
    auto recs = best_approx_records_stream(desc, golden, 1e6, false, opts_with(threads));
    BetaEstimate bg = estimate_beta(recs, 3.0);
    std::set<std::pair<std::int64_t, std::int64_t>> fib;  // (q, p) convergent pairs
    for (std::int64_t a = 1, b = 1;
         static_cast<double>(a) * a + static_cast<double>(b) * b <= 1e12;) {
        fib.emplace(a, b);
        std::int64_t c = a + b;
        a = b;
        b = c;
    }
    long non_convergent = 0;
    for (const auto& rec : recs) {
        auto hsq = heights_sq(desc, rec.point);
        if (hsq[0] <= 1) continue;  // height-1 seed record predates all fractions
        I64Vec rep = representative(desc, rec.point);
        if (!fib.count({rep[0], rep[1]})) ++non_convergent;
        r.bytes += std::to_string(rep[0]) + "/" + std::to_string(rep[1]) + ";";
    }
    r.bytes += "golden-slope=" + fmt(bg.slope) + ";";

    // rational center: exponent 1 with the center excluded
    RealPoint rat = resolve_center(desc, "rat:1/3", kSeed);
    auto rrecs = best_approx_records_stream(desc, rat, 1e6, true, opts_with(threads));
    BetaEstimate br = estimate_beta(rrecs, 3.0);
    r.bytes += "rational-slope=" + fmt(br.slope) + ";";

    // planted synthetic: exact recovery of the planted exponent
    const double beta0 = 1.75;
    std::vector<ApproxRecord> synth;
    for (int k = 1; k <= 12; ++k) {
        ApproxRecord a;
        a.log_h = k * std::log(10.0);
        a.dist = std::exp(-beta0 * a.log_h);
        synth.push_back(a);
    }
    BetaEstimate bs = estimate_beta(synth, 3.0);
    r.bytes += "planted-slope=" + fmt(bs.slope);

    bool golden_ok = std::abs(bg.slope - 2.0) <= 0.05 && non_convergent == 0;
    bool rational_ok = std::abs(br.slope - 1.0) <= 0.1;
    bool planted_ok = std::abs(bs.slope - beta0) <= 1e-10;
    r.pass = golden_ok && rational_ok && planted_ok;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "golden %.4f (2±0.05, %ld non-convergent records), rational %.4f (1±0.1), "
                  "planted err %.1e (<=1e-10)",
                  bg.slope, non_convergent, br.slope, std::abs(bs.slope - beta0));
    r.detail = buf;
    return r;
}

// --------------------------------------------------------------- criterion 9

CritResult criterion_9(int) {
    auto desc = make_grassmannian(1, 2);
    std::vector<double> grid;
    for (int i = 0; i <= 40; ++i) grid.push_back(0.5 * i);
    CritResult r;

    EscapeTrace rat = escape_trace(desc, resolve_center(desc, "rat:1/3", kSeed), grid);
    bool rat_ok = rat.verdict == EscapeVerdict::linear_decay &&
                  std::abs(rat.slope - 0.5) <= 0.025;
    r.bytes += "rat-slope=" + fmt(rat.slope) + ";";

    EscapeTrace gold = escape_trace(desc, resolve_center(desc, "golden", kSeed), grid);
    double lam_min = gold.lambda1[0];
    for (double l : gold.lambda1) lam_min = std::min(lam_min, l);
    bool gold_ok = lam_min >= 0.2;
    r.bytes += "golden-lam-min=" + fmt(lam_min) + ";";

    bool rand_ok = true;
    double worst_rate = 0.0;
    for (int k = 0; k < 3; ++k) {
        EscapeTrace tr =
            escape_trace(desc, resolve_center(desc, "random:" + std::to_string(k), kSeed), grid);
        double rate = tr.rate.back();
        worst_rate = std::max(worst_rate, rate);
        rand_ok = rand_ok && rate < 0.1;
        r.bytes += "rand" + std::to_string(k) + "-rate=" + fmt(rate) + ";";
    }

    r.pass = rat_ok && gold_ok && rand_ok;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "rational slope %.4f (0.5±0.025), golden min lambda1 %.3f (>=0.2), "
                  "worst random rate %.4f (<0.1)",
                  rat.slope, lam_min, worst_rate);
    r.detail = buf;
    return r;
}

// -------------------------------------------------------------- criterion 10

CritResult criterion_10(int) {
    auto desc = make_grassmannian(1, 2);
    CritResult r;

    GenericityReport good = schubert_genericity(desc, resolve_center(desc, "sqrt2", kSeed), 100.0);
    bool good_ok = good.generic && good.violations.empty() && !good.integer_relation;
    r.bytes += "sqrt2:generic=" + std::to_string(good.generic) +
               ",checked=" + std::to_string(good.checked) + ";";

    GenericityReport bad = schubert_genericity(desc, resolve_center(desc, "rat:2/7", kSeed), 20.0);
    bool witness_ok = !bad.generic && !bad.violations.empty();
    std::string wit = "-";
    if (witness_ok) {
        I64Vec w = representative(desc, bad.violations.front().witness);
        wit = std::to_string(w[0]) + "," + std::to_string(w[1]);
        r.bytes += "rat:witness=" + wit + ";";
    }

    r.pass = good_ok && witness_ok;
    char buf[200];
    std::snprintf(buf, sizeof(buf),
                  "(1,sqrt2): %ld subspaces, 0 violations to B=100 -> %s; rational center fails "
                  "with witness (%s)",
                  good.checked, good_ok ? "generic" : "NOT generic", wit.c_str());
    r.detail = buf;
    return r;
}

// -------------------------------------------------------------- criterion 11

CritResult run_criterion(int n, int threads);

CritResult criterion_11(int) {
    CritResult r;
    r.pass = true;
    std::string mismatched;
    for (int n = 1; n <= 10; ++n) {
        std::string base = run_criterion(n, 1).bytes;
        bool same = true;
        for (int threads : {4, 8}) {
            if (run_criterion(n, threads).bytes != base) same = false;
        }
        if (!same) {
            r.pass = false;
            mismatched += " " + std::to_string(n);
        }
        std::uint64_t h = fnv1a64(base);
        r.bytes += std::to_string(n) + "=" + fmt_hex(h) + ";";
    }
    r.detail = r.pass ? "criteria 1-10 byte-identical across 1/4/8 workers (seed 12345)"
                      : "byte mismatch in criteria:" + mismatched;
    return r;
}

CritResult run_criterion(int n, int threads) {
    switch (n) {
        case 1: return criterion_1(threads);
        case 2: return criterion_2(threads);
        case 3: return criterion_3(threads);
        case 4: return criterion_4(threads);
        case 5: return criterion_5(threads);
        case 6: return criterion_6(threads);
        case 7: return criterion_7(threads);
        case 8: return criterion_8(threads);
        case 9: return criterion_9(threads);
        case 10: return criterion_10(threads);
        case 11: return criterion_11(threads);
    }
    CritResult r;
    r.detail = "unknown criterion";
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<int> which;
    for (int i = 1; i < argc; ++i) {
        int n = std::atoi(argv[i]);
        if (n < 1 || n > 11) {
            std::fprintf(stderr, "usage: %s [criterion numbers 1..11]\n", argv[0]);
            return 2;
        }
        which.push_back(n);
    }
    if (which.empty())
        for (int n = 1; n <= 11; ++n) which.push_back(n);

    bool all_pass = true;
    for (int n : which) {
        CritResult r;
        try {
            r = run_criterion(n, 1);
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = std::string("exception: ") + e.what();
        }
        std::printf("criterion %d: %s (%s)\n", n, r.pass ? "PASS" : "FAIL", r.detail.c_str());
        std::fflush(stdout);
        all_pass = all_pass && r.pass;
    }
    return all_pass ? 0 : 1;
}
