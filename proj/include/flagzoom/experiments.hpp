#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flagzoom/varieties.hpp"

namespace flagzoom {

/// Everything one batch run needs. A single flat bag shared by all
/// subcommands; unused fields are ignored by the dispatcher.
struct RunConfig {
    std::string subcommand;  ///< enumerate|count|windows|zoom|beta|genericity|escape
    std::string variety = "gr:1:2";

    std::vector<double> hmax;    ///< height bound per generator (linear scale)
    std::vector<double> h_grid;  ///< count: explicit height grid (overrides auto grid)
    int grid_n = 12;             ///< count: auto grid size
    std::string fit = "free";    ///< count: "free" or "b=<int>" (pins the log exponent)

    std::vector<double> box_lo, box_hi, drift;  ///< moving-box window family
    std::vector<double> t_grid;                 ///< windows / zoom / escape time grid

    double tau = 0.5;                ///< zoom exponent
    std::string center = "random";   ///< center DSL, see resolve_center
    double zoom_halfwidth = 1.0;     ///< zoom statistics box [-w, w]^dim
    bool dump_cloud = false;         ///< zoom: also emit the final point cloud

    double h_min = 3.0;     ///< beta: smallest record height entering the fit
    double bound = 100.0;   ///< genericity: subspace height bound

    std::uint64_t seed = 12345;
    int threads = 1;
    double max_points = 5e6;
    double max_visits = 2e10;
    std::string out;  ///< artifact path prefix; empty = primary artifact on stdout
};

/// One output file: `name` is the suffix (e.g. "points.csv"), `text` the full
/// byte content. Exactly one artifact per run is primary (stdout default).
struct Artifact {
    std::string name;
    std::string text;
    bool primary = false;
};

/// Canonical fingerprint of the run parameters. Worker count and output
/// locations are excluded, so runs that differ only in parallelism or
/// destination carry the same hash (and must produce the same bytes).
std::string config_canonical(const RunConfig& cfg);
std::uint64_t config_hash(const RunConfig& cfg);

/// Center description language:
///   random / random:<k>   seeded frame (k shifts the stream; default 0)
///   sqrt2 | golden | sqrt2m1 | liouville
///                          named slopes xi on the projective line: (1, xi)
///   rat:p/q                rational slope on the projective line (exact)
///   dir:x1,x2,...          direction vector (line families / quadric isotropic)
///   span:r1;r2;...         row-wise spanning set for a grassmannian point
///   flag:v1,v2,v3;n1,n2,n3 line vector and plane normal for flag3
/// Throws ValidationError on malformed or family-incompatible specs.
RealPoint resolve_center(const VarietyDescriptor& desc, const std::string& spec,
                         std::uint64_t seed);

/// Executes one subcommand, returning every artifact as deterministic bytes.
/// For a fixed config the bytes are identical across thread counts.
std::vector<Artifact> run_experiment(const RunConfig& cfg);

} // namespace flagzoom
