#include "anchorlab/graph.hpp"

#include "anchorlab/error.hpp"

#include <algorithm>
#include <deque>

namespace anchorlab {

CausalGraph::CausalGraph(Index nodes)
    : parents_(static_cast<std::size_t>(nodes)), children_(static_cast<std::size_t>(nodes)) {
    for (Index i = 0; i < nodes; ++i) names.push_back("v" + std::to_string(i + 1));
}

CausalGraph CausalGraph::from_scm(const LinearScm& scm) {
    const ScmNodes ids(scm);
    CausalGraph g(scm.p() + scm.q);
    for (Index k = 0; k < scm.d; ++k) g.names[static_cast<std::size_t>(ids.x(k))] = "X" + std::to_string(k + 1);
    g.names[static_cast<std::size_t>(ids.y())] = "Y";
    for (Index j = 0; j < scm.r; ++j) g.names[static_cast<std::size_t>(ids.h(j))] = "H" + std::to_string(j + 1);
    for (Index k = 0; k < scm.q; ++k) g.names[static_cast<std::size_t>(ids.a(k))] = "A" + std::to_string(k + 1);

    for (Index i = 0; i < scm.p(); ++i) {
        for (Index j = 0; j < scm.p(); ++j) {
            if (i != j && scm.B(i, j) != 0.0) g.add_edge(j, i);
        }
        for (Index k = 0; k < scm.q; ++k) {
            if (scm.M(i, k) != 0.0) g.add_edge(ids.a(k), i);
        }
    }
    return g;
}

void CausalGraph::add_edge(Index from, Index to) {
    if (from < 0 || to < 0 || from >= size() || to >= size()) throw DomainError("edge endpoint out of range");
    if (from == to || has_edge(from, to)) return;
    children_[static_cast<std::size_t>(from)].push_back(to);
    parents_[static_cast<std::size_t>(to)].push_back(from);
}

bool CausalGraph::has_edge(Index from, Index to) const {
    const auto& ch = children(from);
    return std::find(ch.begin(), ch.end(), to) != ch.end();
}

bool CausalGraph::acyclic() const {
    std::vector<std::size_t> indegree(parents_.size());
    std::deque<Index> ready;
    for (Index i = 0; i < size(); ++i) {
        indegree[static_cast<std::size_t>(i)] = parents(i).size();
        if (indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
    }
    Index seen = 0;
    while (!ready.empty()) {
        const Index j = ready.front();
        ready.pop_front();
        ++seen;
        for (Index c : children(j)) {
            if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push_back(c);
        }
    }
    return seen == size();
}

std::vector<bool> CausalGraph::ancestors(const std::vector<Index>& nodes) const {
    std::vector<bool> mark(parents_.size(), false);
    std::deque<Index> todo(nodes.begin(), nodes.end());
    while (!todo.empty()) {
        const Index v = todo.front();
        todo.pop_front();
        if (mark[static_cast<std::size_t>(v)]) continue;
        mark[static_cast<std::size_t>(v)] = true;
        for (Index p : parents(v)) todo.push_back(p);
    }
    return mark;
}

bool CausalGraph::has_directed_path(Index from, Index to) const {
    return ancestors({to})[static_cast<std::size_t>(from)];
}

bool d_separated(const CausalGraph& graph, const std::vector<Index>& first, const std::vector<Index>& second,
                 const std::vector<Index>& given) {
    if (!graph.acyclic()) throw CyclicGraph("d-separation needs a directed acyclic graph");
    const auto n = static_cast<std::size_t>(graph.size());
    std::vector<bool> observed(n, false);
    for (Index z : given) observed[static_cast<std::size_t>(z)] = true;
    const std::vector<bool> opens_collider = graph.ancestors(given);

    // state: (node, arrived from a child = up, from a parent = down)
    std::vector<bool> seen_up(n, false), seen_down(n, false), reached(n, false);
    std::deque<std::pair<Index, bool>> todo;
    for (Index s : first) todo.emplace_back(s, true);
    while (!todo.empty()) {
        const auto [v, up] = todo.front();
        todo.pop_front();
        const auto iv = static_cast<std::size_t>(v);
        if (up ? seen_up[iv] : seen_down[iv]) continue;
        (up ? seen_up[iv] : seen_down[iv]) = true;
        if (!observed[iv]) reached[iv] = true;

        if (up && !observed[iv]) {
            for (Index p : graph.parents(v)) todo.emplace_back(p, true);
            for (Index c : graph.children(v)) todo.emplace_back(c, false);
        } else if (!up) {
            if (!observed[iv]) {
                for (Index c : graph.children(v)) todo.emplace_back(c, false);
            }
            if (opens_collider[iv]) {
                for (Index p : graph.parents(v)) todo.emplace_back(p, true);
            }
        }
    }
    return std::none_of(second.begin(), second.end(), [&](Index t) { return reached[static_cast<std::size_t>(t)]; });
}

}  // namespace anchorlab
