#ifndef FEDNI_MASKING_HPP
#define FEDNI_MASKING_HPP

#include <cstdint>
#include <vector>

#include "fedni/graph.hpp"

namespace fedni {

/// A self-supervised training pair: the corrupted graph plus exact ground
/// truth for every hidden node.
struct MaskEpisode {
    PopulationGraph corrupted;                 // G^- over the retained nodes
    std::vector<std::size_t> retained_ids;     // corrupted row -> source node id
    std::vector<std::size_t> masked_ids;       // source ids of the hidden nodes
    Matrix hidden_x;                           // |masked| x d, true features
    PhenotypeTable hidden_u;                   // true phenotypes of the hidden nodes
    std::vector<std::vector<std::size_t>> hidden_neighbors; // per retained row: indices into masked_ids
    std::vector<double> count_targets;         // |N_i^-| / n_max, clipped to [0, 1]
    std::size_t root = 0;
    double achieved_fraction = 0.0;
    bool reached_target = true;    // false when connectivity blocked the target
    bool had_unreachable = false;  // source graph was disconnected from the root

    std::size_t n_hidden() const { return masked_ids.size(); }
};

/// BFS depth of every node from `root`, treating nonzero off-diagonal entries
/// as edges. Unreachable nodes get -1.
std::vector<int> bfs_depths(const Matrix& a, std::size_t root);

/// Hides nodes from the deepest BFS layers inward (random order within a
/// layer) until the removed fraction first reaches `target_fraction`. Never
/// removes the root, a node whose removal would disconnect the retained
/// subgraph, or a node with no retained neighbor left. Per-parent hidden
/// neighbors are all masked graph-neighbors of the parent.
MaskEpisode mask_leaves(const PopulationGraph& g, std::size_t root, double target_fraction,
                        double n_max, std::uint64_t seed);

/// Ablation baseline: uniform random node removal at the same fraction, same
/// bookkeeping. Connectivity of the retained graph is not guaranteed.
MaskEpisode random_mask(const PopulationGraph& g, double target_fraction, double n_max,
                        std::uint64_t seed);

/// True when the subgraph induced by `retained` is connected (a single
/// component over the retained nodes).
bool retained_connected(const Matrix& a, const std::vector<std::uint8_t>& retained);

} // namespace fedni

#endif
