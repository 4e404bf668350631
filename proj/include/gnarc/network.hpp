#pragma once

#include <Eigen/Dense>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace gnarc {

/// Static directed graph with r-stage neighbourhood sets and equally
/// allocated connection weights.
///
/// Out-edge semantics: j is a neighbour of i iff adjacency(i, j) = 1.
/// Stage r of node i is the set of nodes at directed BFS distance exactly r
/// from i; stages are disjoint across r and never contain i itself.  Every
/// non-empty stage set carries equal weights 1/|set|, so per-stage weights
/// always sum to one.
class Network {
public:
    explicit Network(Eigen::MatrixXi adjacency) : adj_(std::move(adjacency)) {
        if (adj_.rows() != adj_.cols())
            throw std::invalid_argument("adjacency matrix must be square, got " +
                                        std::to_string(adj_.rows()) + "x" +
                                        std::to_string(adj_.cols()));
        const int n = static_cast<int>(adj_.rows());
        if (n < 1) throw std::invalid_argument("adjacency matrix must be at least 1x1");
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const int a = adj_(i, j);
                if (a != 0 && a != 1)
                    throw std::invalid_argument("adjacency entries must be 0 or 1, found " +
                                                std::to_string(a) + " at (" + std::to_string(i) +
                                                "," + std::to_string(j) + ")");
            }
            if (adj_(i, i) != 0)
                throw std::invalid_argument("self-loop at node " + std::to_string(i) +
                                            ": adjacency diagonal must be zero");
        }
        compute_stages();
    }

    int node_count() const { return static_cast<int>(adj_.rows()); }

    const Eigen::MatrixXi& adjacency() const { return adj_; }

    /// Nodes at BFS distance exactly r from node i (sorted ascending).
    /// Empty once the reachable set is exhausted.
    const std::vector<int>& stage_neighbours(int i, int r) const {
        check_node(i);
        if (r < 1) throw std::invalid_argument("stage index must be >= 1");
        if (r > static_cast<int>(stages_[i].size())) return empty_;
        return stages_[i][r - 1];
    }

    /// Immediate (stage 1) out-neighbours of node i.
    const std::vector<int>& neighbours(int i) const { return stage_neighbours(i, 1); }

    /// Equal connection weight for node i at stage r: 1/|stage set|, or 0
    /// when the stage is empty.
    double stage_weight(int i, int r) const {
        const auto& set = stage_neighbours(i, r);
        return set.empty() ? 0.0 : 1.0 / static_cast<double>(set.size());
    }

    /// Per-neighbour weight map for (i, r); empty map for an empty stage.
    std::map<int, double> stage_weights(int i, int r) const {
        std::map<int, double> w;
        const auto& set = stage_neighbours(i, r);
        if (set.empty()) return w;
        const double v = 1.0 / static_cast<double>(set.size());
        for (int q : set) w[q] = v;
        return w;
    }

    /// Deepest non-empty stage of node i (0 for an isolated node).
    int max_stage(int i) const {
        check_node(i);
        return static_cast<int>(stages_[i].size());
    }

    /// Deepest non-empty stage over all nodes.
    int diameter() const {
        int d = 0;
        for (int i = 0; i < node_count(); ++i) d = std::max(d, max_stage(i));
        return d;
    }

    /// Stage-r weight matrix: [W]_{l,m} = w_{l,m} if m is a stage-r
    /// neighbour of l, else 0.  Rows of non-empty stages sum to one.
    Eigen::MatrixXd weight_matrix(int r) const {
        const int n = node_count();
        Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            const auto& set = stage_neighbours(i, r);
            if (set.empty()) continue;
            const double v = 1.0 / static_cast<double>(set.size());
            for (int q : set) w(i, q) = v;
        }
        return w;
    }

private:
    void check_node(int i) const {
        if (i < 0 || i >= node_count())
            throw std::out_of_range("node index " + std::to_string(i) + " outside [0," +
                                    std::to_string(node_count() - 1) + "]");
    }

    // BFS from every node over out-edges; stage r = distance-r shell.
    void compute_stages() {
        const int n = node_count();
        stages_.assign(n, {});
        std::vector<int> dist(n);
        for (int s = 0; s < n; ++s) {
            std::fill(dist.begin(), dist.end(), -1);
            dist[s] = 0;
            std::vector<int> frontier{s};
            int d = 0;
            while (!frontier.empty()) {
                std::vector<int> next;
                for (int u : frontier)
                    for (int v = 0; v < n; ++v)
                        if (adj_(u, v) == 1 && dist[v] < 0) {
                            dist[v] = d + 1;
                            next.push_back(v);
                        }
                if (!next.empty()) {
                    std::sort(next.begin(), next.end());
                    stages_[s].push_back(next);
                }
                frontier = std::move(next);
                ++d;
            }
        }
    }

    Eigen::MatrixXi adj_;
    std::vector<std::vector<std::vector<int>>> stages_;  // stages_[i][r-1]
    inline static const std::vector<int> empty_{};
};

/// Validates a 0/1 adjacency matrix and builds the stage cache.
inline Network build_network(const Eigen::MatrixXi& adjacency) { return Network(adjacency); }

/// Adjacency matrix of the bundled five-node demo network used throughout
/// the simulation studies.
inline Eigen::MatrixXi five_node_adjacency() {
    Eigen::MatrixXi m(5, 5);
    m << 0, 1, 0, 1, 1,
         1, 0, 0, 0, 0,
         0, 0, 0, 1, 1,
         0, 0, 1, 0, 1,
         1, 0, 1, 0, 0;
    return m;
}

}  // namespace gnarc
