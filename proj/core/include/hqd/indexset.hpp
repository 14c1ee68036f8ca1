// indexset.hpp — enumeration of hierarchy multi-indices with truncation,
// neighbor adjacency tables and fermionic sign factors.

#pragma once

#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "hqd/types.hpp"

namespace hqd::idx {

using MultiIndex = std::vector<int>;

// Truncation of the index set. Depth keeps |k| <= K, Energy keeps
// |k . w| <= W. Both may be combined (intersection, experimental); a
// truncation with neither is the Full fermionic space.
struct Truncation {
    std::optional<int> depth;
    struct EnergyCut {
        double w_max = 0.0;
        std::vector<Complex> w;
    };
    std::optional<EnergyCut> energy;

    static Truncation full() { return {}; }
    static Truncation by_depth(int k) {
        Truncation t;
        t.depth = k;
        return t;
    }
    static Truncation by_energy(double w_max, std::vector<Complex> w) {
        Truncation t;
        t.energy = EnergyCut{w_max, std::move(w)};
        return t;
    }
    bool is_full() const { return !depth && !energy; }
};

enum class Direction { Up, Down };

// Immutable after construction; safe to share across threads.
class IndexSpace {
  public:
    IndexSpace(Statistics statistics, int channels, std::vector<MultiIndex> indices);

    Statistics statistics() const { return statistics_; }
    int channels() const { return channels_; }
    int size() const { return static_cast<int>(indices_.size()); }
    const MultiIndex& index(int pos) const { return indices_[pos]; }
    const std::vector<MultiIndex>& indices() const { return indices_; }

    // Position of k, or -1 when k is not in the space.
    int position_of(const MultiIndex& k) const;

    // Position of k +- e_j, or -1 when the neighbor lies outside the space.
    int up(int pos, int j) const { return up_[pos * channels_ + j]; }
    int down(int pos, int j) const { return down_[pos * channels_ + j]; }

    // (-1)^{k_1 + ... + k_J} and (-1)^{k_{j+1} + ... + k_J} (0-based j:
    // components strictly after channel j), precomputed per position.
    int s_total(int pos) const { return s_total_[pos]; }
    int s_partial(int pos, int j) const { return s_partial_[pos * channels_ + j]; }

  private:
    Statistics statistics_;
    int channels_;
    std::vector<MultiIndex> indices_;
    std::vector<int32_t> up_, down_;
    std::vector<int8_t> s_total_;
    std::vector<int8_t> s_partial_;
    std::unordered_map<std::string, int> lookup_;
};

// Enumerates all admissible indices in graded-lexicographic order (by |k|,
// then lexicographically with earlier channels outranking later ones), so a
// Depth(K) space is a prefix of the Depth(K+1) enumeration. Fermionic
// statistics restricts k_j to {0,1}; Full is only valid for fermions
// (guarded at 2^J <= 2^24). Bosonic spaces require Depth or Energy.
IndexSpace build_index_space(int channels, Statistics statistics, const Truncation& truncation);

// Parity sign (-1)^{k_from + ... + k_{to-1}} over a half-open range.
int parity_sign(std::span<const int> k, std::size_t from, std::size_t to);

// (s_total, s_partial) for channel j (0-based), per the fermionic hierarchy.
std::pair<int, int> sign_factors(const MultiIndex& k, int j);

std::optional<int> neighbor(const IndexSpace& space, int pos, int j, Direction dir);

} // namespace hqd::idx
