#include "flagzoom/util.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace flagzoom {

double Rng::normal() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    // Box-Muller; u1 in (0,1] to keep the log finite.
    double u1 = 1.0 - next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
}

void parallel_shards(int n_shards, int threads, const std::function<void(int)>& fn) {
    if (threads < 1) threads = 1;
    if (threads == 1 || n_shards <= 1) {
        for (int s = 0; s < n_shards; ++s) fn(s);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            int s = next.fetch_add(1);
            if (s >= n_shards) return;
            fn(s);
        }
    };
    std::vector<std::thread> pool;
    int n = std::min(threads, n_shards);
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
        std::int64_t t = a % b;
        a = b;
        b = t;
    }
    return a;
}

std::int64_t gcd64(const std::vector<std::int64_t>& v) {
    std::int64_t g = 0;
    for (auto x : v) g = gcd64(g, x);
    return g;
}

} // namespace flagzoom
