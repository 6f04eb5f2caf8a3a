#include "hthmix/metrics.hpp"

#include <cstdint>
#include <map>
#include <stdexcept>

namespace hth {

namespace {

std::vector<int> compress(const std::vector<int>& v, int& k) {
    std::map<int, int> ids;
    std::vector<int> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        auto it = ids.try_emplace(v[i], static_cast<int>(ids.size())).first;
        out[i] = it->second;
    }
    k = static_cast<int>(ids.size());
    return out;
}

std::int64_t pairs(std::int64_t m) { return m * (m - 1) / 2; }

}  // namespace

double ari(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("ari: label vectors differ in length");
    if (a.size() < 2) throw std::invalid_argument("ari: need at least two observations");
    int ka = 0, kb = 0;
    const auto ca = compress(a, ka);
    const auto cb = compress(b, kb);
    std::vector<std::int64_t> table(static_cast<std::size_t>(ka) * static_cast<std::size_t>(kb), 0);
    std::vector<std::int64_t> rows(static_cast<std::size_t>(ka), 0), cols(static_cast<std::size_t>(kb), 0);
    for (std::size_t i = 0; i < ca.size(); ++i) {
        ++table[static_cast<std::size_t>(ca[i]) * static_cast<std::size_t>(kb) + static_cast<std::size_t>(cb[i])];
        ++rows[static_cast<std::size_t>(ca[i])];
        ++cols[static_cast<std::size_t>(cb[i])];
    }
    std::int64_t index = 0, sum_a = 0, sum_b = 0;
    for (auto v : table) index += pairs(v);
    for (auto v : rows) sum_a += pairs(v);
    for (auto v : cols) sum_b += pairs(v);
    const std::int64_t total = pairs(static_cast<std::int64_t>(a.size()));
    const double expected = static_cast<double>(sum_a) * static_cast<double>(sum_b) / static_cast<double>(total);
    const double max_index = 0.5 * static_cast<double>(sum_a + sum_b);
    const double denom = max_index - expected;
    if (denom == 0.0) return static_cast<double>(index) == expected ? 1.0 : 0.0;
    return (static_cast<double>(index) - expected) / denom;
}

}  // namespace hth
