#include "fedni/masking.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "fedni/errors.hpp"
#include "fedni/graphcons.hpp"
#include "fedni/rng.hpp"

namespace fedni {

namespace {

std::vector<std::vector<std::size_t>> neighbor_lists(const Matrix& a) {
    std::vector<std::vector<std::size_t>> adj(a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            if (i != j && a(i, j) != 0.0) adj[i].push_back(j);
    return adj;
}

std::size_t count_components(const std::vector<std::vector<std::size_t>>& adj,
                             const std::vector<std::uint8_t>& retained) {
    const std::size_t n = adj.size();
    std::vector<std::uint8_t> seen(n, 0);
    std::size_t components = 0;
    std::deque<std::size_t> queue;
    for (std::size_t s = 0; s < n; ++s) {
        if (!retained[s] || seen[s]) continue;
        ++components;
        seen[s] = 1;
        queue.push_back(s);
        while (!queue.empty()) {
            const std::size_t v = queue.front();
            queue.pop_front();
            for (std::size_t w : adj[v])
                if (retained[w] && !seen[w]) {
                    seen[w] = 1;
                    queue.push_back(w);
                }
        }
    }
    return components;
}

/// First removal count c such that c / n >= target.
std::size_t target_count(std::size_t n, double target) {
    std::size_t c = 0;
    while (double(c) / double(n) < target) ++c;
    return c;
}

MaskEpisode build_episode(const PopulationGraph& g, const std::vector<std::uint8_t>& retained,
                          double n_max) {
    const std::size_t n = g.n();
    MaskEpisode ep;
    std::vector<std::size_t> masked_index_of(n, SIZE_MAX);
    for (std::size_t v = 0; v < n; ++v) {
        if (retained[v])
            ep.retained_ids.push_back(v);
        else {
            masked_index_of[v] = ep.masked_ids.size();
            ep.masked_ids.push_back(v);
        }
    }
    ep.corrupted = g.subset(ep.retained_ids);
    ep.hidden_x = Matrix(ep.masked_ids.size(), g.feature_dim());
    for (std::size_t r = 0; r < ep.masked_ids.size(); ++r)
        for (std::size_t j = 0; j < g.feature_dim(); ++j) ep.hidden_x(r, j) = g.X(ep.masked_ids[r], j);
    ep.hidden_u = g.U.subset(ep.masked_ids);

    ep.hidden_neighbors.assign(ep.retained_ids.size(), {});
    ep.count_targets.assign(ep.retained_ids.size(), 0.0);
    for (std::size_t r = 0; r < ep.retained_ids.size(); ++r) {
        const std::size_t v = ep.retained_ids[r];
        for (std::size_t w = 0; w < n; ++w)
            if (w != v && !retained[w] && g.A(v, w) != 0.0)
                ep.hidden_neighbors[r].push_back(masked_index_of[w]);
        const double normalized = double(ep.hidden_neighbors[r].size()) / n_max;
        ep.count_targets[r] = std::min(1.0, std::max(0.0, normalized));
    }
    ep.achieved_fraction = double(ep.masked_ids.size()) / double(n);
    return ep;
}

} // namespace

std::vector<int> bfs_depths(const Matrix& a, std::size_t root) {
    if (root >= a.rows()) throw config_error("bfs_depths: root out of range");
    std::vector<int> depth(a.rows(), -1);
    std::deque<std::size_t> queue;
    depth[root] = 0;
    queue.push_back(root);
    while (!queue.empty()) {
        const std::size_t v = queue.front();
        queue.pop_front();
        for (std::size_t w = 0; w < a.cols(); ++w)
            if (w != v && a(v, w) != 0.0 && depth[w] < 0) {
                depth[w] = depth[v] + 1;
                queue.push_back(w);
            }
    }
    return depth;
}

MaskEpisode mask_leaves(const PopulationGraph& g, std::size_t root, double target_fraction,
                        double n_max, std::uint64_t seed) {
    const std::size_t n = g.n();
    if (root >= n) throw config_error("mask_leaves: root out of range");
    if (!(target_fraction > 0.0 && target_fraction < 0.5))
        throw config_error("mask_leaves: target fraction must be in (0, 0.5)");
    if (n_max <= 0.0) throw config_error("mask_leaves: n_max must be > 0");

    Rng rng(seed);
    const std::vector<int> depth = bfs_depths(g.A, root);
    const auto adj = neighbor_lists(g.A);
    const std::size_t want = target_count(n, target_fraction);

    int max_depth = 0;
    bool unreachable = false;
    for (int d : depth) {
        if (d < 0)
            unreachable = true;
        else
            max_depth = std::max(max_depth, d);
    }

    std::vector<std::uint8_t> retained(n, 1);
    std::size_t base_components = count_components(adj, retained);
    std::size_t removed = 0;

    for (int layer = max_depth; layer >= 1 && removed < want; --layer) {
        std::vector<std::size_t> candidates;
        for (std::size_t v = 0; v < n; ++v)
            if (retained[v] && depth[v] == layer) candidates.push_back(v);
        rng.shuffle(candidates);
        for (std::size_t v : candidates) {
            if (removed >= want) break;
            // needs a retained parent after removal
            bool has_parent = false;
            for (std::size_t w : adj[v])
                if (retained[w]) {
                    has_parent = true;
                    break;
                }
            if (!has_parent) continue;
            retained[v] = 0;
            const std::size_t after = count_components(adj, retained);
            if (after > base_components) {
                // v is a cut vertex of the retained subgraph
                retained[v] = 1;
                continue;
            }
            base_components = after;
            ++removed;
        }
    }

    MaskEpisode ep = build_episode(g, retained, n_max);
    ep.root = root;
    ep.reached_target = removed >= want;
    ep.had_unreachable = unreachable;
    return ep;
}

MaskEpisode random_mask(const PopulationGraph& g, double target_fraction, double n_max,
                        std::uint64_t seed) {
    const std::size_t n = g.n();
    if (target_fraction < 0.0 || target_fraction >= 1.0)
        throw config_error("random_mask: target fraction must be in [0, 1)");
    if (n_max <= 0.0) throw config_error("random_mask: n_max must be > 0");

    Rng rng(seed);
    const std::size_t want = target_count(n, target_fraction);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);

    std::vector<std::uint8_t> retained(n, 1);
    for (std::size_t i = 0; i < want && i < n; ++i) retained[order[i]] = 0;

    MaskEpisode ep = build_episode(g, retained, n_max);
    ep.root = SIZE_MAX;
    ep.reached_target = true;
    return ep;
}

bool retained_connected(const Matrix& a, const std::vector<std::uint8_t>& retained) {
    return count_components(neighbor_lists(a), retained) <= 1;
}

} // namespace fedni
