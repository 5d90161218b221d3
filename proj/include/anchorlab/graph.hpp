#pragma once

#include "anchorlab/scm.hpp"

#include <string>
#include <vector>

namespace anchorlab {

/// Directed graph over integer node ids.
class CausalGraph {
public:
    explicit CausalGraph(Index nodes = 0);

    /// Nodes X_1..X_d, Y, H_1..H_r, A_1..A_q (in that order). Edges follow the
    /// off-diagonal nonzeros of B and the nonzeros of M; self-loops are dropped.
    static CausalGraph from_scm(const LinearScm& scm);

    void add_edge(Index from, Index to);
    Index size() const { return static_cast<Index>(parents_.size()); }
    const std::vector<Index>& parents(Index node) const { return parents_[static_cast<std::size_t>(node)]; }
    const std::vector<Index>& children(Index node) const { return children_[static_cast<std::size_t>(node)]; }
    bool has_edge(Index from, Index to) const;

    bool acyclic() const;
    /// Marks every ancestor of `nodes`, the nodes themselves included.
    std::vector<bool> ancestors(const std::vector<Index>& nodes) const;
    bool has_directed_path(Index from, Index to) const;

    std::vector<std::string> names;

private:
    std::vector<std::vector<Index>> parents_;
    std::vector<std::vector<Index>> children_;
};

/// Node ids used by CausalGraph::from_scm.
struct ScmNodes {
    Index d, r, q;
    explicit ScmNodes(const LinearScm& scm) : d(scm.d), r(scm.r), q(scm.q) {}
    Index x(Index k) const { return k; }
    Index y() const { return d; }
    Index h(Index j) const { return d + 1 + j; }
    Index a(Index k) const { return d + 1 + r + k; }
};

/// True when every path between `first` and `second` is blocked by `given`
/// (reachability / Bayes-ball). Throws CyclicGraph on a cyclic graph.
bool d_separated(const CausalGraph& graph, const std::vector<Index>& first, const std::vector<Index>& second,
                 const std::vector<Index>& given);

}  // namespace anchorlab
