#include "flagzoom/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>

#include "flagzoom/counting.hpp"
#include "flagzoom/diophantine.hpp"
#include "flagzoom/dynamics.hpp"
#include "flagzoom/heights.hpp"
#include "flagzoom/zooming.hpp"

namespace flagzoom {
namespace {

using json = nlohmann::ordered_json;

std::string g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += g12(v[i]);
    }
    return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    for (const std::string& tok : split(s, ',')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw ValidationError("bad number in center spec: '" + tok + "'");
        }
        if (used != tok.size()) throw ValidationError("bad number in center spec: '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

EnumerationOptions options_of(const RunConfig& cfg) {
    EnumerationOptions opts;
    opts.max_points = cfg.max_points;
    opts.max_visits = cfg.max_visits;
    opts.threads = cfg.threads;
    return opts;
}

std::string hash_hex(const RunConfig& cfg) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

std::string csv_trailer(const RunConfig& cfg) { return "# config-hash=" + hash_hex(cfg) + "\n"; }

int representative_width(const VarietyDescriptor& desc) {
    switch (desc.family) {
        case Family::grassmannian: {
            int num = 1, den = 1;
            for (int i = 0; i < desc.l; ++i) {
                num *= desc.d - i;
                den *= i + 1;
            }
            return num / den;
        }
        case Family::split_quadric:
            return desc.n;
        case Family::full_flag3:
            return 6;
    }
    return 0;
}

std::string json_text(const RunConfig& cfg, json j) {
    j["config_hash"] = hash_hex(cfg);
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// subcommand runners
// ---------------------------------------------------------------------------

std::vector<double> require_hmax(const RunConfig& cfg, const VarietyDescriptor& desc) {
    std::vector<double> hmax = cfg.hmax;
    if (hmax.empty()) throw ValidationError("hmax is required for this subcommand");
    if (hmax.size() == 1 && desc.generators.size() == 2) hmax.push_back(hmax[0]);
    if (hmax.size() != desc.generators.size())
        throw ValidationError("hmax needs one bound per height generator");
    return hmax;
}

std::vector<double> require_t_grid(const RunConfig& cfg) {
    if (cfg.t_grid.size() < 2) throw ValidationError("t_grid with at least 2 times is required");
    return cfg.t_grid;
}

WindowSpec box_family(const RunConfig& cfg) {
    if (cfg.box_lo.empty() || cfg.box_hi.empty() || cfg.drift.empty())
        throw ValidationError("box_lo, box_hi and drift are required for moving-box windows");
    return WindowSpec::moving_box(cfg.box_lo, cfg.box_hi, cfg.drift, 0.0);
}

std::vector<Artifact> run_enumerate(const RunConfig& cfg, const VarietyDescriptor& desc) {
    std::vector<double> hmax = require_hmax(cfg, desc);
    std::vector<RationalPoint> pts = enumerate_points(desc, hmax, options_of(cfg));

    const int width = representative_width(desc);
    const bool two = desc.generators.size() == 2;
    std::string csv = "variety";
    for (int i = 0; i < width; ++i) csv += ",rep" + std::to_string(i);
    csv += two ? ",h1,h2\n" : ",h1\n";
    const std::string name = desc.name();
    for (const RationalPoint& p : pts) {
        csv += name;
        for (std::int64_t c : representative(desc, p)) csv += ',' + std::to_string(c);
        auto hsq = heights_sq(desc, p);
        csv += ',' + g12(std::sqrt(static_cast<double>(hsq[0])));
        if (two) csv += ',' + g12(std::sqrt(static_cast<double>(hsq[1])));
        csv += '\n';
    }
    csv += csv_trailer(cfg);
    return {{"points.csv", csv, true}};
}

std::vector<Artifact> run_count(const RunConfig& cfg, const VarietyDescriptor& desc) {
    std::vector<double> grid = cfg.h_grid;
    if (grid.empty()) {
        std::vector<double> hmax = require_hmax(cfg, desc);
        if (cfg.grid_n < 2) throw ValidationError("grid_n must be at least 2");
        double hi = hmax[0];
        double lo = std::max(8.0, hi / 100.0);
        if (lo >= hi) throw ValidationError("hmax too small for an automatic height grid");
        for (int i = 0; i < cfg.grid_n; ++i)
            grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (cfg.grid_n - 1)));
    }
    CountSeries series = height_count_series(desc, grid, options_of(cfg));

    std::optional<int> b_fixed;
    if (cfg.fit != "free") {
        if (cfg.fit.rfind("b=", 0) != 0)
            throw ValidationError("fit must be 'free' or 'b=<integer>'");
        try {
            b_fixed = std::stoi(cfg.fit.substr(2));
        } catch (const std::exception&) {
            throw ValidationError("fit must be 'free' or 'b=<integer>'");
        }
    }
    FitResult fit = fit_power_log(series, b_fixed);

    std::string csv = "t_or_H,count,nu,ratio\n";
    std::vector<double> ratios;
    for (std::size_t i = 0; i < series.grid.size(); ++i) {
        double nu = nu_measure(desc, WindowSpec::cap(std::log(series.grid[i])));
        double ratio = nu > 0 ? series.counts[i] / nu : 0.0;
        if (series.counts[i] > 0) ratios.push_back(ratio);
        csv += g12(series.grid[i]) + ',' + std::to_string(series.counts[i]) + ',' + g12(nu) +
               ',' + g12(ratio) + '\n';
    }
    csv += csv_trailer(cfg);

    double kappa = 0.0, spread = 0.0;
    if (ratios.size() >= 3) {
        double a = ratios[ratios.size() - 3], b = ratios[ratios.size() - 2], c = ratios.back();
        kappa = (a + b + c) / 3.0;
        if (kappa > 0) spread = (std::max({a, b, c}) - std::min({a, b, c})) / kappa;
    }
    json j{{"a", fit.a},       {"b", fit.b},           {"c", fit.c},
           {"residual", fit.residual}, {"kappa_hat", kappa}, {"spread", spread}};
    return {{"fit.json", json_text(cfg, j), true}, {"series.csv", csv, false}};
}

std::vector<Artifact> run_windows(const RunConfig& cfg, const VarietyDescriptor& desc) {
    WindowSpec family = box_family(cfg);
    std::vector<double> t_grid = require_t_grid(cfg);
    RatioSeries rs = window_ratio_series(desc, family, t_grid, options_of(cfg));

    std::string csv = "t_or_H,count,nu,ratio\n";
    for (std::size_t i = 0; i < rs.t.size(); ++i)
        csv += g12(rs.t[i]) + ',' + std::to_string(rs.count[i]) + ',' + g12(rs.nu[i]) + ',' +
               g12(rs.ratio[i]) + '\n';
    csv += csv_trailer(cfg);

    json j{{"a", rs.count_slope.a},
           {"b", rs.count_slope.b},
           {"c", rs.count_slope.c},
           {"residual", rs.count_slope.residual},
           {"kappa_hat", rs.kappa_hat},
           {"spread", rs.spread}};
    return {{"ratios.csv", csv, true}, {"kappa.json", json_text(cfg, j), false}};
}

std::vector<Artifact> run_zoom(const RunConfig& cfg, const VarietyDescriptor& desc) {
    RealPoint x = resolve_center(desc, cfg.center, cfg.seed);
    std::vector<double> t_grid = require_t_grid(cfg);
    ZoomBox box = ZoomBox::centered(desc, cfg.zoom_halfwidth);
    EnumerationOptions opts = options_of(cfg);

    MassSlopeResult msr;
    WindowSpec final_window = WindowSpec::cap(t_grid.back());
    if (desc.pic_rank == 1) {
        msr = mass_slope(desc, x, cfg.tau, t_grid, box, opts);
    } else {
        WindowSpec family = box_family(cfg);
        msr = mass_slope_windows(desc, x, cfg.tau, family, t_grid, box, opts);
        final_window = family.at_time(t_grid.back());
    }

    std::string csv = "t,tau,mass,predicted_slope,fitted_slope\n";
    for (std::size_t i = 0; i < msr.t.size(); ++i)
        csv += g12(msr.t[i]) + ',' + g12(cfg.tau) + ',' + std::to_string(msr.mass[i]) + ',' +
               g12(msr.predicted_slope) + ',' + g12(msr.fit.a) + '\n';
    csv += csv_trailer(cfg);
    std::vector<Artifact> arts{{"slope.csv", csv, true}};

    ZoomCloud cloud =
        build_zoom_cloud_stream(desc, x, cfg.tau, t_grid.back(), final_window, box, opts);
    json ju;
    try {
        UniformityStats st = uniformity_stats(desc, cloud, box);
        ju = json{{"dim", st.dim},   {"mass", st.mass},       {"ks", st.ks},
                  {"chi2", st.chi2}, {"p_value", st.p_value}, {"cell_counts", st.cell_counts}};
    } catch (const InsufficientMass&) {
        ju = json{{"insufficient_mass", true}, {"mass", mass_in_box(cloud, box)}};
    }
    arts.push_back({"uniformity.json", json_text(cfg, ju), false});

    if (cfg.dump_cloud) {
        std::string dump;
        for (int i = 0; i < box.dim(); ++i) dump += (i ? "," : "") + ("z_" + std::to_string(i + 1));
        dump += '\n';
        for (const TangentVector& z : cloud.points) {
            std::vector<double> flat = z.flat();
            for (std::size_t i = 0; i < flat.size(); ++i) dump += (i ? "," : "") + g12(flat[i]);
            dump += '\n';
        }
        dump += csv_trailer(cfg);
        arts.push_back({"cloud.csv", dump, false});
    }
    return arts;
}

std::vector<Artifact> run_beta(const RunConfig& cfg, const VarietyDescriptor& desc) {
    RealPoint x = resolve_center(desc, cfg.center, cfg.seed);
    double hmax = cfg.hmax.empty() ? 1e6 : cfg.hmax[0];
    bool exclude_self = x.provenance == RealPoint::Provenance::rational;
    std::vector<ApproxRecord> records =
        best_approx_records_stream(desc, x, hmax, exclude_self, options_of(cfg));
    BetaEstimate est = estimate_beta(records, cfg.h_min);

    json recs = json::array();
    for (const ApproxRecord& r : records) {
        auto hsq = heights_sq(desc, r.point);
        recs.push_back(json{{"H", std::sqrt(static_cast<double>(hsq[0]))}, {"d", r.dist}});
    }
    json j{{"beta_slope", est.slope}, {"beta_maxratio", est.max_ratio}, {"records", recs}};
    return {{"records.json", json_text(cfg, j), true}};
}

std::vector<Artifact> run_genericity(const RunConfig& cfg, const VarietyDescriptor& desc) {
    RealPoint x = resolve_center(desc, cfg.center, cfg.seed);
    GenericityReport rep = schubert_genericity(desc, x, cfg.bound);

    json viols = json::array();
    const std::size_t cap = 50;
    for (std::size_t i = 0; i < rep.violations.size() && i < cap; ++i) {
        const GenericityViolation& v = rep.violations[i];
        // grassmannian witnesses live on gr(m, d); quadric witnesses are
        // isotropic vectors of the quadric itself
        const VarietyDescriptor wdesc = desc.family == Family::grassmannian
                                            ? make_grassmannian(v.m, desc.d)
                                            : desc;
        viols.push_back(json{{"m", v.m},
                             {"expected_dim", v.expected_dim},
                             {"actual_dim", v.actual_dim},
                             {"gap", v.gap},
                             {"witness", representative(wdesc, v.witness)}});
    }
    json j{{"generic", rep.generic},
           {"bound", rep.bound},
           {"checked", rep.checked},
           {"violations_total", static_cast<long long>(rep.violations.size())},
           {"violations", viols},
           {"note", rep.note}};
    if (rep.integer_relation)
        j["integer_relation"] = *rep.integer_relation;
    else
        j["integer_relation"] = nullptr;
    return {{"genericity.json", json_text(cfg, j), true}};
}

std::vector<Artifact> run_escape(const RunConfig& cfg, const VarietyDescriptor& desc) {
    RealPoint x = resolve_center(desc, cfg.center, cfg.seed);
    std::vector<double> t_grid = require_t_grid(cfg);
    EscapeTrace tr = escape_trace(desc, x, t_grid);

    std::string csv = "t,lambda1,rate\n";
    for (std::size_t i = 0; i < tr.t.size(); ++i)
        csv += g12(tr.t[i]) + ',' + g12(tr.lambda1[i]) + ',' + g12(tr.rate[i]) + '\n';
    csv += "# verdict=" + to_string(tr.verdict) + "\n";
    csv += "# slope=" + g12(tr.slope) + "\n";
    csv += csv_trailer(cfg);
    return {{"trace.csv", csv, true}};
}

} // namespace

std::string config_canonical(const RunConfig& cfg) {
    std::string s;
    s += "subcommand=" + cfg.subcommand;
    s += ";variety=" + cfg.variety;
    s += ";hmax=" + join(cfg.hmax);
    s += ";h_grid=" + join(cfg.h_grid);
    s += ";grid_n=" + std::to_string(cfg.grid_n);
    s += ";fit=" + cfg.fit;
    s += ";box_lo=" + join(cfg.box_lo);
    s += ";box_hi=" + join(cfg.box_hi);
    s += ";drift=" + join(cfg.drift);
    s += ";t_grid=" + join(cfg.t_grid);
    s += ";tau=" + g12(cfg.tau);
    s += ";center=" + cfg.center;
    s += ";zoom_halfwidth=" + g12(cfg.zoom_halfwidth);
    s += ";dump_cloud=" + std::string(cfg.dump_cloud ? "1" : "0");
    s += ";h_min=" + g12(cfg.h_min);
    s += ";bound=" + g12(cfg.bound);
    s += ";seed=" + std::to_string(cfg.seed);
    s += ";max_points=" + g12(cfg.max_points);
    s += ";max_visits=" + g12(cfg.max_visits);
    return s;
}

std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(config_canonical(cfg)); }

RealPoint resolve_center(const VarietyDescriptor& desc, const std::string& spec,
                         std::uint64_t seed) {
    auto line_only = [&](const char* what) {
        if (desc.family != Family::grassmannian || desc.l != 1 || desc.d != 2)
            throw ValidationError(std::string(what) + " centers are defined on gr:1:2 only");
    };
    auto slope_point = [&](double xi) {
        line_only("named-slope");
        Eigen::VectorXd dir(2);
        dir << 1.0, xi;
        return real_point_from_direction(desc, dir);
    };

    if (spec == "sqrt2") return slope_point(std::sqrt(2.0));
    if (spec == "golden") return slope_point((1.0 + std::sqrt(5.0)) / 2.0);
    if (spec == "sqrt2m1") return slope_point(std::sqrt(2.0) - 1.0);
    if (spec == "liouville") {
        double xi = 0.0, fact = 1.0;
        for (int k = 1; k <= 5; ++k) {
            fact *= k;
            xi += std::pow(10.0, -fact);
        }
        return slope_point(xi);
    }
    if (spec == "random" || spec.rfind("random:", 0) == 0) {
        std::uint64_t shift = 0;
        if (spec.size() > 7) {
            try {
                shift = std::stoull(spec.substr(7));
            } catch (const std::exception&) {
                throw ValidationError("bad random center index: '" + spec + "'");
            }
        }
        Rng rng(seed + shift);
        return random_real_point(desc, rng);
    }
    if (spec.rfind("rat:", 0) == 0) {
        line_only("rational-slope");
        std::vector<std::string> parts = split(spec.substr(4), '/');
        if (parts.size() != 2) throw ValidationError("rational center must be rat:p/q");
        std::int64_t p = 0, q = 0;
        try {
            p = std::stoll(parts[0]);
            q = std::stoll(parts[1]);
        } catch (const std::exception&) {
            throw ValidationError("rational center must be rat:p/q");
        }
        if (q == 0) throw ValidationError("rational center needs a nonzero denominator");
        // slope p/q <-> primitive direction (q, p), first nonzero positive
        std::int64_t g = gcd64(std::vector<std::int64_t>{q, p});
        q /= g;
        p /= g;
        if (q < 0 || (q == 0 && p < 0)) {
            q = -q;
            p = -p;
        }
        RationalPoint rp;
        rp.pluecker = {q, p};
        rp.basis = {{q, p}};
        return real_point_from_rational(desc, rp);
    }
    if (spec.rfind("dir:", 0) == 0) {
        std::vector<double> c = parse_doubles(spec.substr(4));
        Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(c.data(), static_cast<long>(c.size()));
        if (desc.family == Family::grassmannian) {
            if (desc.l != 1)
                throw ValidationError("dir: centers need l=1; use span: for higher grassmannians");
            return real_point_from_direction(desc, v);
        }
        if (desc.family == Family::split_quadric) return real_point_quadric(desc, v);
        throw ValidationError("dir: centers are not defined for flag3; use flag:");
    }
    if (spec.rfind("span:", 0) == 0) {
        if (desc.family != Family::grassmannian)
            throw ValidationError("span: centers are defined for grassmannians only");
        std::vector<std::string> rows = split(spec.substr(5), ';');
        Eigen::MatrixXd cols(desc.d, static_cast<long>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            std::vector<double> c = parse_doubles(rows[r]);
            if (static_cast<int>(c.size()) != desc.d)
                throw ValidationError("span: rows must have length d");
            for (int i = 0; i < desc.d; ++i) cols(i, static_cast<long>(r)) = c[i];
        }
        return real_point_from_span(desc, cols);
    }
    if (spec.rfind("flag:", 0) == 0) {
        if (desc.family != Family::full_flag3)
            throw ValidationError("flag: centers are defined for flag3 only");
        std::vector<std::string> parts = split(spec.substr(5), ';');
        if (parts.size() != 2) throw ValidationError("flag: center must be flag:line;normal");
        std::vector<double> a = parse_doubles(parts[0]), b = parse_doubles(parts[1]);
        if (a.size() != 3 || b.size() != 3)
            throw ValidationError("flag: line and normal must each have 3 coordinates");
        Eigen::Vector3d line(a[0], a[1], a[2]), normal(b[0], b[1], b[2]);
        return real_point_flag3(line, normal);
    }
    throw ValidationError("unrecognized center spec: '" + spec + "'");
}

std::vector<Artifact> run_experiment(const RunConfig& cfg) {
    VarietyDescriptor desc = parse_variety(cfg.variety);
    if (cfg.threads < 1) throw ValidationError("threads must be >= 1");
    if (cfg.subcommand == "enumerate") return run_enumerate(cfg, desc);
    if (cfg.subcommand == "count") return run_count(cfg, desc);
    if (cfg.subcommand == "windows") return run_windows(cfg, desc);
    if (cfg.subcommand == "zoom") return run_zoom(cfg, desc);
    if (cfg.subcommand == "beta") return run_beta(cfg, desc);
    if (cfg.subcommand == "genericity") return run_genericity(cfg, desc);
    if (cfg.subcommand == "escape") return run_escape(cfg, desc);
    throw ValidationError("unknown subcommand: '" + cfg.subcommand + "'");
}

} // namespace flagzoom
