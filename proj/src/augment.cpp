#include "veridex/augment.hpp"

#include <algorithm>
#include <stdexcept>

namespace veridex {

std::pair<std::vector<int>, std::vector<int>> top_bottom_search(
    const ConceptDag& dag, const std::vector<int>& accumulated, const Bitset& ext) {
    std::vector<int> above, below;
    for (int x : accumulated) {
        const auto& xe = dag.node(x).ext;
        if (ext.subset_of(xe)) above.push_back(x);
        if (xe.subset_of(ext)) below.push_back(x);
    }
    auto strict_subset = [&](int a, int b) {
        const auto& ea = dag.node(a).ext;
        const auto& eb = dag.node(b).ext;
        return ea.subset_of(eb) && !(ea == eb);
    };
    std::vector<int> down, up;
    for (int x : above) {
        bool minimal = std::none_of(above.begin(), above.end(),
                                    [&](int y) { return y != x && strict_subset(y, x); });
        if (minimal) down.push_back(x);
    }
    for (int x : below) {
        bool maximal = std::none_of(below.begin(), below.end(),
                                    [&](int y) { return y != x && strict_subset(x, y); });
        if (maximal) up.push_back(x);
    }
    return {down, up};
}

void add_negations(ConceptDag& dag, const CanonicalModel& model,
                   const std::vector<std::string>& insertion_order) {
    if (dag.augmented())
        throw std::logic_error("DAG is already augmented; rebuild from the base classification");

    std::vector<int> accumulated;
    std::vector<std::string> names;
    for (int id : dag.name_node_ids()) names.push_back(*dag.node(id).name);
    std::sort(names.begin(), names.end());
    std::vector<std::string> order = insertion_order.empty() ? names : insertion_order;
    if (!insertion_order.empty()) {
        auto sorted = order;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != names)
            throw std::invalid_argument("insertion order must be a permutation of the names");
    }

    accumulated.push_back(ConceptDag::kTop);
    accumulated.push_back(ConceptDag::kBottom);
    for (int id : dag.name_node_ids())
        if (id != ConceptDag::kTop) accumulated.push_back(id);  // TOP-merged names

    for (const auto& v : order) {
        Bitset ext = model.negation_extension(v);
        int c;
        if (ext.none()) {
            // Complement of a universal concept collapses onto BOTTOM.
            c = ConceptDag::kBottom;
            dag.node(c).negations.push_back(v);
            dag.register_negation(v, c);
        } else {
            auto [down, up] = top_bottom_search(dag, accumulated, ext);
            int equivalent = -1;
            for (int d : down)
                if (std::find(up.begin(), up.end(), d) != up.end()) { equivalent = d; break; }
            if (equivalent >= 0) {
                c = equivalent;
                dag.node(c).negations.push_back(v);
                dag.register_negation(v, c);
            } else {
                DagNode nd{NodeKind::Negation, "!" + v, std::nullopt, {v}, ext};
                c = dag.add_node(std::move(nd));
                dag.register_negation(v, c);
                for (int u : down)
                    for (int l : up)
                        if (dag.has_arc(u, l)) dag.remove_arc(u, l);
                for (int u : down) dag.add_arc(u, c);
                for (int l : up) dag.add_arc(c, l);
                accumulated.push_back(c);
            }
        }

        // Artificial nodes ¬v ⊓ d for names d with a satisfiable, incomparable
        // conjunction. They witness the overlap only; no arcs besides the two
        // parents and BOTTOM. Copies, not references: add_node reallocates.
        const Bitset ce = dag.node(c).ext;
        for (const auto& d : names) {
            int dn = dag.name_node(d);
            const Bitset de = dag.node(dn).ext;
            if (!ce.intersects(de)) continue;
            if (ce.subset_of(de) || de.subset_of(ce)) continue;
            DagNode art{NodeKind::Artificial, "!" + v + "&" + d, std::nullopt, {}, ce & de};
            int a = dag.add_node(std::move(art));
            dag.add_arc(dn, a);
            dag.add_arc(c, a);
            dag.add_arc(a, ConceptDag::kBottom);
        }
    }

    dag.mark_augmented();
    dag.freeze();
}

}  // namespace veridex
