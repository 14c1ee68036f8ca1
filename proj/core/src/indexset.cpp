#include "hqd/indexset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>

namespace hqd::idx {

namespace {

std::string key_of(const MultiIndex& k) {
    std::string s;
    s.reserve(k.size());
    for (int v : k) s.push_back(static_cast<char>(v + 1));
    return s;
}

int total_order(const MultiIndex& k) { return std::accumulate(k.begin(), k.end(), 0); }

// Graded lex: lower |k| first; within a grade, lexicographically larger
// tuples first, so (1,0) precedes (0,1).
bool graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
    const int ta = total_order(a), tb = total_order(b);
    if (ta != tb) return ta < tb;
    return std::lexicographical_compare(b.begin(), b.end(), a.begin(), a.end());
}

Complex dot_energy(const MultiIndex& k, const std::vector<Complex>& w) {
    Complex acc = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) acc += static_cast<double>(k[j]) * w[j];
    return acc;
}

} // namespace

IndexSpace::IndexSpace(Statistics statistics, int channels, std::vector<MultiIndex> indices)
    : statistics_(statistics), channels_(channels), indices_(std::move(indices)) {
    std::sort(indices_.begin(), indices_.end(), graded_lex_less);
    lookup_.reserve(indices_.size() * 2);
    for (int p = 0; p < size(); ++p) lookup_.emplace(key_of(indices_[p]), p);

    const int n = size();
    up_.assign(static_cast<std::size_t>(n) * channels_, -1);
    down_.assign(static_cast<std::size_t>(n) * channels_, -1);
    s_total_.resize(n);
    s_partial_.resize(static_cast<std::size_t>(n) * channels_);
    MultiIndex probe;
    for (int p = 0; p < n; ++p) {
        const MultiIndex& k = indices_[p];
        s_total_[p] = static_cast<int8_t>(parity_sign(k, 0, k.size()));
        for (int j = 0; j < channels_; ++j) {
            s_partial_[p * channels_ + j] =
                static_cast<int8_t>(parity_sign(k, static_cast<std::size_t>(j) + 1, k.size()));
            probe = k;
            probe[j] += 1;
            up_[p * channels_ + j] = position_of(probe);
            if (k[j] > 0) {
                probe[j] -= 2;
                down_[p * channels_ + j] = position_of(probe);
            }
        }
    }
}

int IndexSpace::position_of(const MultiIndex& k) const {
    auto it = lookup_.find(key_of(k));
    return it == lookup_.end() ? -1 : it->second;
}

int parity_sign(std::span<const int> k, std::size_t from, std::size_t to) {
    int sum = 0;
    for (std::size_t i = from; i < to && i < k.size(); ++i) sum += k[i];
    return (sum & 1) ? -1 : 1;
}

std::pair<int, int> sign_factors(const MultiIndex& k, int j) {
    return {parity_sign(k, 0, k.size()), parity_sign(k, static_cast<std::size_t>(j) + 1, k.size())};
}

IndexSpace build_index_space(int channels, Statistics statistics, const Truncation& truncation) {
    require(channels >= 1, Errc::InvalidArgument, "need at least one channel");
    if (truncation.energy) {
        require(static_cast<int>(truncation.energy->w.size()) == channels, Errc::LengthMismatch,
                "energy truncation needs one w per channel");
    }
    if (statistics == Statistics::Bosonic) {
        require(!truncation.is_full(), Errc::BosonicUntruncated,
                "bosonic spaces require Depth or Energy truncation");
    } else if (truncation.is_full()) {
        require(channels <= 24, Errc::SpaceTooLarge,
                "full fermionic space exceeds the 2^24 guard");
    }

    // Per-channel bound on k_j.
    std::vector<int> cap(channels, 1);
    if (statistics == Statistics::Bosonic) {
        for (int j = 0; j < channels; ++j) {
            int c = std::numeric_limits<int>::max();
            if (truncation.depth) c = *truncation.depth;
            if (truncation.energy) {
                const double wj = std::abs(truncation.energy->w[j]);
                require(wj > 0, Errc::InvalidArgument,
                        "energy truncation requires |w_j| > 0 for every channel");
                c = std::min(c, static_cast<int>(std::floor(truncation.energy->w_max / wj)));
            }
            cap[j] = std::max(c, 0);
        }
    }

    auto admissible = [&](const MultiIndex& k) {
        if (truncation.depth && total_order(k) > *truncation.depth) return false;
        if (truncation.energy &&
            std::abs(dot_energy(k, truncation.energy->w)) > truncation.energy->w_max + 1e-12)
            return false;
        return true;
    };

    // Depth-first enumeration within the per-channel box, pruned by |k|.
    std::vector<MultiIndex> found;
    MultiIndex k(channels, 0);
    const std::uint64_t guard = std::uint64_t(1) << 24;
    std::function<void(int, int)> visit = [&](int j, int used) {
        if (j == channels) {
            if (admissible(k)) {
                found.push_back(k);
                require(found.size() <= guard, Errc::SpaceTooLarge,
                        "index space exceeds the 2^24 guard");
            }
            return;
        }
        int limit = cap[j];
        if (truncation.depth) limit = std::min(limit, *truncation.depth - used);
        for (int v = 0; v <= limit; ++v) {
            k[j] = v;
            visit(j + 1, used + v);
        }
        k[j] = 0;
    };
    visit(0, 0);

    return IndexSpace(statistics, channels, std::move(found));
}

std::optional<int> neighbor(const IndexSpace& space, int pos, int j, Direction dir) {
    const int p = dir == Direction::Up ? space.up(pos, j) : space.down(pos, j);
    if (p < 0) return std::nullopt;
    return p;
}

} // namespace hqd::idx
