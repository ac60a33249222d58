#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace fauxcheck {

// All sampling goes through this wrapper. std::mt19937_64 output is fixed by
// the standard, but the standard distributions and std::shuffle are not, so
// bounded draws and shuffles are implemented here to stay bit-identical
// across standard libraries. Bump kRngVersion if either algorithm changes.
class Rng {
public:
    static constexpr std::string_view kName = "mt19937_64";
    static constexpr int kRngVersion = 1;

    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, n) by rejection sampling; n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    // Uniform double in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        shuffle(std::span<T>(items));
    }

    // `k` distinct elements chosen uniformly, in random order.
    template <typename T>
    std::vector<T> sample(std::vector<T> items, std::size_t k) {
        const auto n = items.size();
        for (std::size_t i = 0; i < k && i < n; ++i) {
            const auto j = i + static_cast<std::size_t>(below(n - i));
            std::swap(items[i], items[j]);
        }
        items.resize(std::min(k, n));
        return items;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fauxcheck
