#pragma once

#include "ltgs/change.hpp"

#include <map>

namespace ltgs {

// Node in the intra-timestep match graph: one refined object mask in one view.
struct MaskNode {
    int view = 0;
    int mask_id = 0;  // index into that view's ObjectMaskSet
};

struct MatchGraph {
    std::vector<MaskNode> nodes;
    // Edge weights = correspondence counts, keyed by (node index, node index),
    // lower index first. No intra-view edges.
    std::map<std::pair<int, int>, int> edges;
};

// A correspondence (pA in view i, pB in view j) votes for the edge between
// the masks containing those pixels; edges below min_count are dropped.
MatchGraph build_match_graph(const std::vector<std::vector<Mask>>& masks_per_view,
                             const std::map<std::pair<int, int>, CorrespondenceSet>& correspondences,
                             int min_count = 8);

struct Components {
    std::vector<std::vector<int>> clusters;  // node indices, each size >= 2
    std::vector<int> discarded_singletons;
};

// DFS connected components; singleton components are discarded (masks seen in
// only one view are usually rendering artifacts).
Components connected_components(const MatchGraph& graph);

// One per-timestep (or per-detection-group) object instance: a cluster of
// masks with a representative pooled feature.
struct GroupInstance {
    std::vector<MaskNode> members;
    std::vector<float> feature;  // mean of per-view pooled features, renormalized
};

std::vector<float> mean_feature(const std::vector<std::vector<float>>& features);

// S[k][l] = cosine of the representative features.
Eigen::MatrixXd cross_group_similarity(const std::vector<GroupInstance>& a,
                                       const std::vector<GroupInstance>& b);

struct Assignment {
    std::vector<int> match;  // match[k] = column assigned to row k, -1 if unmatched
    double score = 0;        // sum of S over matched pairs
};

// Optimal one-to-one assignment maximizing the total similarity of the
// rectangular matrix; pairs below tau_match are severed afterward.
Assignment hungarian_assign(const Eigen::MatrixXd& S, double tau_match = 0.6);

// Pairwise links between instances of two groups, with similarity scores.
struct GroupLink {
    int group_a = 0, group_b = 0;
    int inst_a = 0, inst_b = 0;
    double similarity = 0;
};

struct LinkedTrack {
    int id = 0;
    std::vector<std::pair<int, int>> members;  // (group, instance) pairs
};

// Transitive closure of pairwise links into global identities. Links are
// applied strongest-first; a link that would put two instances of the same
// group into one cluster is dropped, which resolves conflicts by removing the
// weakest offending links.
std::vector<LinkedTrack> link_tracks(int num_groups, const std::vector<int>& instances_per_group,
                                     const std::vector<GroupLink>& links);

}  // namespace ltgs
