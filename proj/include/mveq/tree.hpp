#pragma once

#include <vector>

namespace mveq {

// Finite event tree. Node 0 is the root (time 0); all leaves sit at the horizon.
// Leaves are indexed in ascending node-id order.
class FiltrationTree {
public:
    FiltrationTree() = default;

    // Throws std::invalid_argument on structural problems (cycles, multiple
    // parents, unreachable nodes, leaves at different depths, wrong number of
    // probabilities). Probability values themselves are only checked by
    // validate_scenario.
    static FiltrationTree from_children(std::vector<std::vector<int>> children,
                                        std::vector<double> leaf_probs);

    // Every node at time t < T has branching[t] children.
    static FiltrationTree regular(const std::vector<int>& branching,
                                  std::vector<double> leaf_probs);
    static FiltrationTree regular_uniform(const std::vector<int>& branching);

    int horizon() const { return horizon_; }
    int num_nodes() const { return static_cast<int>(parent_.size()); }
    int num_leaves() const { return static_cast<int>(leaves_.size()); }

    int time(int n) const { return time_[n]; }
    int parent(int n) const { return parent_[n]; }
    const std::vector<int>& children(int n) const { return children_[n]; }
    bool is_leaf(int n) const { return children_[n].empty(); }

    const std::vector<int>& nodes_at(int t) const { return by_time_[t]; }
    const std::vector<int>& leaves() const { return leaves_; }
    // Non-leaf nodes in time order; position in this list is the node's
    // strategy slot.
    const std::vector<int>& inner_nodes() const { return inner_; }
    int inner_index(int n) const { return inner_index_[n]; }
    int leaf_index(int n) const { return leaf_index_[n]; }
    // Leaf indices below n (n itself if it is a leaf).
    const std::vector<int>& leaves_under(int n) const { return leaves_under_[n]; }
    // Ancestor of n at time t (t <= time(n)).
    int ancestor_at(int n, int t) const;

    const std::vector<double>& leaf_probs() const { return leaf_probs_; }
    double prob(int n) const { return prob_[n]; }
    // P(child | parent); 1 for the root.
    double cond_prob(int n) const;

    const std::vector<std::vector<int>>& children_lists() const { return children_; }

private:
    int horizon_ = 0;
    std::vector<std::vector<int>> children_;
    std::vector<int> parent_, time_, leaves_, inner_, inner_index_, leaf_index_;
    std::vector<std::vector<int>> by_time_, leaves_under_;
    std::vector<double> leaf_probs_, prob_;
};

} // namespace mveq
