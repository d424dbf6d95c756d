#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

#include "vibronic/heom.hpp"

namespace vibronic {

HierarchyLayout::HierarchyLayout(int n_modes, int depth, std::vector<HierarchyIndex> indices)
    : n_modes_(n_modes), depth_(depth), indices_(std::move(indices)) {
    const std::size_t n = indices_.size();
    raise_.assign(n * n_modes_, -1);
    lower_.assign(n * n_modes_, -1);
    std::map<std::vector<int>, int> lookup;
    for (std::size_t i = 0; i < n; ++i) lookup.emplace(indices_[i].counts, static_cast<int>(i));

    for (std::size_t i = 0; i < n; ++i) {
        auto counts = indices_[i].counts;
        for (int k = 0; k < n_modes_; ++k) {
            counts[k] += 1;
            if (auto it = lookup.find(counts); it != lookup.end()) raise_[i * n_modes_ + k] = it->second;
            counts[k] -= 2;
            if (counts[k] >= 0)
                if (auto it = lookup.find(counts); it != lookup.end()) lower_[i * n_modes_ + k] = it->second;
            counts[k] += 1;
        }
    }
}

int HierarchyLayout::find(const std::vector<int>& counts) const {
    if (static_cast<int>(counts.size()) != n_modes_) return -1;
    // indices are few enough that a linear probe from the tier start is fine
    for (std::size_t i = 0; i < indices_.size(); ++i)
        if (indices_[i].counts == counts) return static_cast<int>(i);
    return -1;
}

std::size_t hierarchy_size(int n_modes, int depth) {
    // C(n_modes + depth, depth) computed incrementally; each partial product is
    // itself a binomial coefficient so the division is exact.
    constexpr auto kMax = std::numeric_limits<std::size_t>::max();
    std::size_t result = 1;
    for (int j = 1; j <= depth; ++j) {
        const std::size_t num = static_cast<std::size_t>(n_modes + j);
        if (result > kMax / num) return kMax;
        result = result * num / static_cast<std::size_t>(j);
    }
    return result;
}

std::shared_ptr<const HierarchyLayout> enumerate_hierarchy(int n_modes, int depth, std::size_t cap) {
    if (n_modes < 1) throw std::invalid_argument("enumerate_hierarchy: n_modes must be >= 1");
    if (depth < 0) throw std::invalid_argument("enumerate_hierarchy: depth must be >= 0");
    const std::size_t count = hierarchy_size(n_modes, depth);
    if (count > cap)
        throw std::invalid_argument("enumerate_hierarchy: " + std::to_string(count) + " ADOs exceeds cap of " +
                                    std::to_string(cap));

    std::vector<HierarchyIndex> indices;
    indices.reserve(count);
    std::vector<int> counts(n_modes, 0);
    // Compositions of each tier in reverse-lexicographic order.
    auto emit = [&](auto&& self, int mode, int remaining, int tier) -> void {
        if (mode == n_modes - 1) {
            counts[mode] = remaining;
            indices.push_back({counts, tier});
            return;
        }
        for (int c = remaining; c >= 0; --c) {
            counts[mode] = c;
            self(self, mode + 1, remaining - c, tier);
        }
    };
    for (int tier = 0; tier <= depth; ++tier) emit(emit, 0, tier, tier);
    return std::make_shared<const HierarchyLayout>(n_modes, depth, std::move(indices));
}

void PropagatorConfig::validate() const {
    if (!(std::isfinite(dt) && dt > 0.0)) throw std::invalid_argument("propagator: dt must be > 0");
    if (depth < 1) throw std::invalid_argument("propagator: depth must be >= 1");
    if (record_stride < 1) throw std::invalid_argument("propagator: record_stride must be >= 1");
}

}  // namespace vibronic
