#include "mveq/tree.hpp"

#include <deque>
#include <stdexcept>
#include <string>

namespace mveq {

FiltrationTree FiltrationTree::from_children(std::vector<std::vector<int>> children,
                                             std::vector<double> leaf_probs) {
    const int n = static_cast<int>(children.size());
    if (n < 2) throw std::invalid_argument("tree needs a root with at least one child");

    FiltrationTree tr;
    tr.children_ = std::move(children);
    tr.parent_.assign(n, -1);
    tr.time_.assign(n, -1);

    for (int p = 0; p < n; ++p) {
        for (int c : tr.children_[p]) {
            if (c <= 0 || c >= n)
                throw std::invalid_argument("child id " + std::to_string(c) + " out of range");
            if (tr.parent_[c] != -1)
                throw std::invalid_argument("node " + std::to_string(c) + " has two parents");
            tr.parent_[c] = p;
        }
    }

    // breadth-first from the root assigns times and catches unreachable nodes
    std::deque<int> queue{0};
    tr.time_[0] = 0;
    int seen = 0;
    while (!queue.empty()) {
        int p = queue.front();
        queue.pop_front();
        ++seen;
        for (int c : tr.children_[p]) {
            tr.time_[c] = tr.time_[p] + 1;
            queue.push_back(c);
        }
    }
    if (seen != n) throw std::invalid_argument("tree has nodes unreachable from the root");

    int depth = -1;
    for (int v = 0; v < n; ++v) {
        if (!tr.children_[v].empty()) continue;
        if (depth < 0) depth = tr.time_[v];
        if (tr.time_[v] != depth)
            throw std::invalid_argument("all leaves must sit at the same time");
    }
    if (depth < 1) throw std::invalid_argument("horizon must be at least 1");
    tr.horizon_ = depth;

    tr.by_time_.assign(depth + 1, {});
    tr.leaf_index_.assign(n, -1);
    tr.inner_index_.assign(n, -1);
    for (int v = 0; v < n; ++v) {
        tr.by_time_[tr.time_[v]].push_back(v);
        if (tr.children_[v].empty()) {
            tr.leaf_index_[v] = static_cast<int>(tr.leaves_.size());
            tr.leaves_.push_back(v);
        }
    }
    for (int t = 0; t < depth; ++t)
        for (int v : tr.by_time_[t]) {
            tr.inner_index_[v] = static_cast<int>(tr.inner_.size());
            tr.inner_.push_back(v);
        }

    if (leaf_probs.size() != tr.leaves_.size())
        throw std::invalid_argument("expected " + std::to_string(tr.leaves_.size()) +
                                    " leaf probabilities, got " +
                                    std::to_string(leaf_probs.size()));
    tr.leaf_probs_ = std::move(leaf_probs);

    tr.leaves_under_.assign(n, {});
    tr.prob_.assign(n, 0.0);
    for (int t = depth; t >= 0; --t) {
        for (int v : tr.by_time_[t]) {
            if (tr.children_[v].empty()) {
                tr.leaves_under_[v] = {tr.leaf_index_[v]};
                tr.prob_[v] = tr.leaf_probs_[tr.leaf_index_[v]];
            } else {
                for (int c : tr.children_[v]) {
                    auto& dst = tr.leaves_under_[v];
                    dst.insert(dst.end(), tr.leaves_under_[c].begin(), tr.leaves_under_[c].end());
                    tr.prob_[v] += tr.prob_[c];
                }
            }
        }
    }
    return tr;
}

FiltrationTree FiltrationTree::regular(const std::vector<int>& branching,
                                       std::vector<double> leaf_probs) {
    if (branching.empty()) throw std::invalid_argument("horizon must be at least 1");
    std::vector<std::vector<int>> children(1);
    std::vector<int> level{0};
    for (int b : branching) {
        if (b < 1) throw std::invalid_argument("branching must be positive");
        std::vector<int> next;
        for (int p : level)
            for (int i = 0; i < b; ++i) {
                int id = static_cast<int>(children.size());
                children.emplace_back();
                children[p].push_back(id);
                next.push_back(id);
            }
        level = std::move(next);
    }
    return from_children(std::move(children), std::move(leaf_probs));
}

FiltrationTree FiltrationTree::regular_uniform(const std::vector<int>& branching) {
    std::size_t leaves = 1;
    for (int b : branching) leaves *= static_cast<std::size_t>(b > 0 ? b : 1);
    return regular(branching, std::vector<double>(leaves, 1.0 / static_cast<double>(leaves)));
}

int FiltrationTree::ancestor_at(int n, int t) const {
    if (t < 0 || t > time_[n]) throw std::out_of_range("ancestor time out of range");
    while (time_[n] > t) n = parent_[n];
    return n;
}

double FiltrationTree::cond_prob(int n) const {
    if (n == 0) return 1.0;
    return prob_[n] / prob_[parent_[n]];
}

} // namespace mveq
