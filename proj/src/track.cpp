#include "ltgs/track.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <numeric>

namespace ltgs {

MatchGraph build_match_graph(const std::vector<std::vector<Mask>>& masks_per_view,
                             const std::map<std::pair<int, int>, CorrespondenceSet>& correspondences,
                             int min_count) {
    MatchGraph g;
    std::vector<std::vector<int>> node_of;  // [view][mask_id] -> node index
    node_of.resize(masks_per_view.size());
    for (int v = 0; v < int(masks_per_view.size()); ++v)
        for (int m = 0; m < int(masks_per_view[std::size_t(v)].size()); ++m) {
            node_of[std::size_t(v)].push_back(int(g.nodes.size()));
            g.nodes.push_back({v, m});
        }

    auto containing_mask = [&](int view, const Vec2& p) -> int {
        const auto& masks = masks_per_view[std::size_t(view)];
        const int x = int(std::floor(p.x())), y = int(std::floor(p.y()));
        for (int m = 0; m < int(masks.size()); ++m) {
            const Mask& mk = masks[std::size_t(m)];
            if (x >= 0 && x < mk.width && y >= 0 && y < mk.height && mk.at(x, y)) return m;
        }
        return -1;
    };

    std::map<std::pair<int, int>, int> counts;
    for (const auto& [views, corr] : correspondences) {
        const auto [vi, vj] = views;
        if (vi == vj) continue;
        for (const auto& c : corr.items) {
            const int mi = containing_mask(vi, c.a);
            const int mj = containing_mask(vj, c.b);
            if (mi < 0 || mj < 0) continue;
            int na = node_of[std::size_t(vi)][std::size_t(mi)];
            int nb = node_of[std::size_t(vj)][std::size_t(mj)];
            if (na > nb) std::swap(na, nb);
            ++counts[{na, nb}];
        }
    }
    for (const auto& [key, count] : counts)
        if (count >= min_count) g.edges[key] = count;
    return g;
}

Components connected_components(const MatchGraph& graph) {
    const int n = int(graph.nodes.size());
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (const auto& [key, _] : graph.edges) {
        adj[std::size_t(key.first)].push_back(key.second);
        adj[std::size_t(key.second)].push_back(key.first);
    }
    Components out;
    std::vector<bool> seen(std::size_t(n), false);
    for (int start = 0; start < n; ++start) {
        if (seen[std::size_t(start)]) continue;
        std::vector<int> stack{start}, comp;
        seen[std::size_t(start)] = true;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            comp.push_back(u);
            for (int v : adj[std::size_t(u)])
                if (!seen[std::size_t(v)]) {
                    seen[std::size_t(v)] = true;
                    stack.push_back(v);
                }
        }
        std::sort(comp.begin(), comp.end());
        if (comp.size() == 1)
            out.discarded_singletons.push_back(comp[0]);
        else
            out.clusters.push_back(std::move(comp));
    }
    return out;
}

std::vector<float> mean_feature(const std::vector<std::vector<float>>& features) {
    if (features.empty()) throw std::invalid_argument("mean_feature: empty input");
    const std::size_t d = features[0].size();
    std::vector<double> acc(d, 0.0);
    for (const auto& f : features)
        for (std::size_t i = 0; i < d; ++i) acc[i] += f[i];
    double norm = 0;
    for (double v : acc) norm += v * v;
    norm = std::max(std::sqrt(norm), 1e-12);
    std::vector<float> out(d);
    for (std::size_t i = 0; i < d; ++i) out[i] = float(acc[i] / norm);
    return out;
}

Eigen::MatrixXd cross_group_similarity(const std::vector<GroupInstance>& a,
                                       const std::vector<GroupInstance>& b) {
    if (a.empty() || b.empty())
        throw std::invalid_argument("cross_group_similarity: empty instance set");
    Eigen::MatrixXd S(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j)
            S(long(i), long(j)) = feature_cosine(a[i].feature.data(), b[j].feature.data(),
                                                 int(a[i].feature.size()));
    return S;
}

// Jonker-Volgenant style shortest augmenting path on the cost matrix
// (cost = max(S) - S), padded square. Exact for finite inputs.
Assignment hungarian_assign(const Eigen::MatrixXd& S, double tau_match) {
    const int rows = int(S.rows()), cols = int(S.cols());
    if (rows == 0 || cols == 0) throw std::invalid_argument("hungarian_assign: empty matrix");
    if (!S.allFinite()) throw std::invalid_argument("hungarian_assign: non-finite entries");
    const int n = std::max(rows, cols);
    const double smax = S.maxCoeff();
    // cost[i][j]; dummy rows/columns cost 0.
    std::vector<std::vector<double>> cost(std::size_t(n), std::vector<double>(std::size_t(n), 0.0));
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) cost[std::size_t(i)][std::size_t(j)] = smax - S(i, j);

    const double INF = std::numeric_limits<double>::infinity();
    std::vector<double> u(std::size_t(n) + 1, 0), v(std::size_t(n) + 1, 0);
    std::vector<int> p(std::size_t(n) + 1, 0), way(std::size_t(n) + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(std::size_t(n) + 1, INF);
        std::vector<bool> used(std::size_t(n) + 1, false);
        do {
            used[std::size_t(j0)] = true;
            int i0 = p[std::size_t(j0)], j1 = 0;
            double delta = INF;
            for (int j = 1; j <= n; ++j) {
                if (used[std::size_t(j)]) continue;
                double cur = cost[std::size_t(i0 - 1)][std::size_t(j - 1)] - u[std::size_t(i0)] -
                             v[std::size_t(j)];
                if (cur < minv[std::size_t(j)]) {
                    minv[std::size_t(j)] = cur;
                    way[std::size_t(j)] = j0;
                }
                if (minv[std::size_t(j)] < delta) {
                    delta = minv[std::size_t(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[std::size_t(j)]) {
                    u[std::size_t(p[std::size_t(j)])] += delta;
                    v[std::size_t(j)] -= delta;
                } else {
                    minv[std::size_t(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[std::size_t(j0)] != 0);
        do {
            int j1 = way[std::size_t(j0)];
            p[std::size_t(j0)] = p[std::size_t(j1)];
            j0 = j1;
        } while (j0);
    }

    Assignment out;
    out.match.assign(std::size_t(rows), -1);
    for (int j = 1; j <= n; ++j) {
        const int i = p[std::size_t(j)];
        if (i >= 1 && i <= rows && j <= cols) out.match[std::size_t(i - 1)] = j - 1;
    }
    // Sever weak pairs: they represent new or disappeared objects.
    for (int i = 0; i < rows; ++i) {
        if (out.match[std::size_t(i)] >= 0 && S(i, out.match[std::size_t(i)]) < tau_match)
            out.match[std::size_t(i)] = -1;
    }
    out.score = 0;
    for (int i = 0; i < rows; ++i)
        if (out.match[std::size_t(i)] >= 0) out.score += S(i, out.match[std::size_t(i)]);
    return out;
}

std::vector<LinkedTrack> link_tracks(int num_groups, const std::vector<int>& instances_per_group,
                                     const std::vector<GroupLink>& links) {
    if (int(instances_per_group.size()) != num_groups)
        throw std::invalid_argument("link_tracks: group count mismatch");
    // Flatten (group, instance) to cluster nodes.
    std::vector<int> base(std::size_t(num_groups) + 1, 0);
    for (int g = 0; g < num_groups; ++g)
        base[std::size_t(g) + 1] = base[std::size_t(g)] + instances_per_group[std::size_t(g)];
    const int total = base[std::size_t(num_groups)];

    std::vector<int> parent(static_cast<std::size_t>(total));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
        while (parent[std::size_t(x)] != x) {
            parent[std::size_t(x)] = parent[std::size_t(parent[std::size_t(x)])];
            x = parent[std::size_t(x)];
        }
        return x;
    };
    std::vector<std::vector<int>> cluster_groups(
        static_cast<std::size_t>(total));  // groups present per root
    for (int g = 0; g < num_groups; ++g)
        for (int k = 0; k < instances_per_group[std::size_t(g)]; ++k)
            cluster_groups[std::size_t(base[std::size_t(g)] + k)] = {g};

    auto sorted = links;
    std::stable_sort(sorted.begin(), sorted.end(), [](const GroupLink& a, const GroupLink& b) {
        return a.similarity > b.similarity;
    });
    for (const auto& l : sorted) {
        const int na = base[std::size_t(l.group_a)] + l.inst_a;
        const int nb = base[std::size_t(l.group_b)] + l.inst_b;
        int ra = find(na), rb = find(nb);
        if (ra == rb) continue;
        // Reject merges that would place two instances of one group together.
        bool conflict = false;
        for (int ga : cluster_groups[std::size_t(ra)]) {
            for (int gb : cluster_groups[std::size_t(rb)])
                if (ga == gb) {
                    conflict = true;
                    break;
                }
            if (conflict) break;
        }
        if (conflict) continue;
        parent[std::size_t(ra)] = rb;
        auto& dst = cluster_groups[std::size_t(rb)];
        dst.insert(dst.end(), cluster_groups[std::size_t(ra)].begin(),
                   cluster_groups[std::size_t(ra)].end());
        cluster_groups[std::size_t(ra)].clear();
    }

    std::map<int, std::vector<std::pair<int, int>>> by_root;
    for (int g = 0; g < num_groups; ++g)
        for (int k = 0; k < instances_per_group[std::size_t(g)]; ++k)
            by_root[find(base[std::size_t(g)] + k)].push_back({g, k});

    std::vector<LinkedTrack> out;
    for (auto& [root, members] : by_root) {
        LinkedTrack t;
        t.id = int(out.size());
        std::sort(members.begin(), members.end());
        t.members = std::move(members);
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace ltgs
