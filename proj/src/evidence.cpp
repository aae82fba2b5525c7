#include "veridex/evidence.hpp"

#include <algorithm>
#include <functional>
#include <stdexcept>

namespace veridex {

namespace {

// Mask of node ids eligible as Ω witnesses: V_C ∪ V_NC minus BOTTOM.
Bitset witness_mask(const ConceptDag& dag) {
    Bitset m(dag.node_count());
    for (std::size_t i = 0; i < dag.node_count(); ++i)
        if (dag.node(i).in_vc_or_vnc() && static_cast<int>(i) != ConceptDag::kBottom)
            m.set(i);
    return m;
}

// Node holding the complement of the concept sitting at `id`.
int complement_node(const ConceptDag& dag, int id) {
    const DagNode& nd = dag.node(id);
    if (nd.name) return dag.negation_node(*nd.name);
    if (!nd.negations.empty()) return dag.name_node(nd.negations.front());
    return -1;  // TOP without a name label: complement is empty
}

}  // namespace

std::vector<int> omega(const ConceptDag& dag, const std::string& o_concept,
                       const std::string& p_concept) {
    int o_id = dag.name_node(o_concept);
    int np_id = dag.negation_node(p_concept);
    Bitset both = dag.descendants(o_id) & dag.descendants(np_id) & witness_mask(dag);
    std::vector<int> out;
    for (auto b : both.bits()) out.push_back(static_cast<int>(b));
    return out;
}

bool omega_exact(const CanonicalModel& model, const std::string& o_concept,
                 const std::string& p_concept) {
    return !model.extension(o_concept).subset_of(model.extension(p_concept));
}

bool omega_nonempty_at(const ConceptDag& dag, const std::string& o_concept, int node_id) {
    int comp = complement_node(dag, node_id);
    if (comp < 0) return false;
    return (dag.descendants(dag.name_node(o_concept)) & dag.descendants(comp) &
            witness_mask(dag))
        .any();
}

std::vector<std::string> SupSet::member_names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : members) out.push_back(name);
    return out;
}

namespace {

struct SupWalker {
    const ConceptDag& dag;
    const CanonicalModel& model;
    const std::string& o_concept;
    OmegaMode mode;
    int o_id;
    Bitset o_desc;
    Bitset witnesses;

    SupWalker(const ConceptDag& d, const CanonicalModel& m, const std::string& o, OmegaMode mo)
        : dag(d), model(m), o_concept(o), mode(mo) {
        o_id = dag.name_node(o_concept);
        o_desc = dag.descendants(o_id);
        witnesses = witness_mask(dag);
    }

    // Ω (or Ω′) non-emptiness for the concept sitting at node `id`.
    bool alive(int id) const {
        if (mode == OmegaMode::Exact)
            return !model.extension(o_concept).subset_of(dag.node(id).ext);
        int comp = complement_node(dag, id);
        if (comp < 0) return false;
        return (o_desc & dag.descendants(comp) & witnesses).any();
    }

    // Returns false when the candidate violates the algorithm's assumption.
    bool admit(const std::string& cand, SupSet& out) const {
        if (model.name_subsumed(o_concept, cand)) {
            out.rejected.push_back(cand + ": statement would be true");
            return false;
        }
        if (!alive(dag.name_node(cand))) {
            out.rejected.push_back(cand + ": no subsumption-tree witness");
            return false;
        }
        return true;
    }
};

}  // namespace

SupSet collect_sup(const ConceptDag& dag, const CanonicalModel& model,
                   const std::string& o_concept,
                   const std::vector<std::string>& candidates, OmegaMode mode) {
    if (!dag.augmented()) throw std::logic_error("collect_sup requires an augmented DAG");
    SupWalker w(dag, model, o_concept, mode);
    SupSet out;
    out.owner = o_concept;
    std::set<std::string> seen;
    for (const auto& cand : candidates) {
        if (!seen.insert(cand).second) continue;
        if (!w.admit(cand, out)) continue;
        // Walk every candidate-to-root path bottom-up, adding named nodes
        // while Ω stays non-empty; a named node with empty Ω cuts the paths
        // running through it. Negation nodes pass through unchecked.
        int start = dag.name_node(cand);
        out.members[*dag.node(start).name].insert(cand);
        std::set<int> visited = {start};
        std::vector<int> queue = {start};
        while (!queue.empty()) {
            int n = queue.back();
            queue.pop_back();
            for (int p : dag.parents(n)) {
                if (!visited.insert(p).second) continue;
                const DagNode& nd = dag.node(p);
                if (nd.is_named()) {
                    if (w.alive(p)) {
                        out.members[*nd.name].insert(cand);
                        queue.push_back(p);
                    }
                } else {
                    queue.push_back(p);
                }
            }
        }
    }
    return out;
}

SupSet collect_sup_bisect(const ConceptDag& dag, const CanonicalModel& model,
                          const std::string& o_concept,
                          const std::vector<std::string>& candidates, OmegaMode mode) {
    if (!dag.augmented()) throw std::logic_error("collect_sup_bisect requires an augmented DAG");
    SupWalker w(dag, model, o_concept, mode);
    SupSet out;
    out.owner = o_concept;
    std::set<std::string> seen;
    for (const auto& cand : candidates) {
        if (!seen.insert(cand).second) continue;
        if (!w.admit(cand, out)) continue;
        int start = dag.name_node(cand);
        // Enumerate paths as node lists from the candidate up to TOP.
        std::vector<int> path;
        std::function<void(int)> dfs = [&](int n) {
            path.push_back(n);
            if (dag.parents(n).empty()) {
                // path is bottom-up; position L-1-i is the i-th node from TOP.
                const std::size_t len = path.size();
                // Aliveness is monotone down the path: locate the threshold
                // (topmost alive position) by binary search. The top position
                // is never alive, the bottom one was checked on admission.
                std::size_t lo = 0, hi = len - 1;  // offsets from the bottom
                auto alive_at = [&](std::size_t from_bottom) { return w.alive(path[from_bottom]); };
                while (hi - lo > 1) {
                    std::size_t mid = lo + (hi - lo) / 2;
                    // offsets grow toward TOP, so aliveness decreases
                    if (alive_at(mid)) lo = mid; else hi = mid;
                }
                std::size_t topmost_alive = lo;
                for (std::size_t i = 0; i <= topmost_alive; ++i) {
                    const DagNode& nd = dag.node(path[i]);
                    if (nd.is_named()) out.members[*nd.name].insert(cand);
                }
            } else {
                for (int p : dag.parents(n)) dfs(p);
            }
            path.pop_back();
        };
        dfs(start);
    }
    return out;
}

CoverInstance build_cover_instance(const SupSet& sup,
                                   const std::vector<std::string>& candidates,
                                   const ConceptDag& dag) {
    CoverInstance inst;
    std::map<std::string, std::size_t> index;
    for (const auto& c : candidates)
        if (index.emplace(c, inst.universe.size()).second) inst.universe.push_back(c);

    Bitset covered(inst.universe.size());
    for (const auto& [name, contribs] : sup.members) {
        Bitset mask(inst.universe.size());
        int a = dag.name_node(name);
        for (std::size_t i = 0; i < inst.universe.size(); ++i)
            if (dag.reaches(a, dag.name_node(inst.universe[i]))) mask.set(i);
        covered |= mask;
        inst.sets.emplace(name, std::move(mask));
    }
    if (!inst.universe.empty()) {
        Bitset full(inst.universe.size());
        for (std::size_t i = 0; i < inst.universe.size(); ++i) full.set(i);
        if (!(covered == full))
            throw std::runtime_error("infeasible instance: some candidates are not covered");
    }
    return inst;
}

namespace {

EvidenceSet greedy_impl(const std::vector<std::pair<std::string, Bitset>>& sets,
                        std::size_t universe_size) {
    EvidenceSet ev;
    ev.solver = "greedy";
    if (universe_size == 0) return ev;
    Bitset covered(universe_size);
    std::size_t covered_count = 0;
    while (covered_count < universe_size) {
        std::size_t best_gain = 0;
        const std::string* best_name = nullptr;
        const Bitset* best_mask = nullptr;
        for (const auto& [name, mask] : sets) {
            std::size_t gain = minus(mask, covered).count();
            if (gain > best_gain) {
                best_gain = gain;
                best_name = &name;
                best_mask = &mask;
            }
        }
        if (best_gain == 0) throw std::runtime_error("infeasible instance: greedy cannot cover");
        ev.concepts.push_back(*best_name);
        covered |= *best_mask;
        covered_count = covered.count();
    }
    std::sort(ev.concepts.begin(), ev.concepts.end());
    return ev;
}

}  // namespace

EvidenceSet solve_cover_greedy(const CoverInstance& inst) {
    std::vector<std::pair<std::string, Bitset>> sets(inst.sets.begin(), inst.sets.end());
    return greedy_impl(sets, inst.universe.size());
}

EvidenceSet solve_cover_exact(const CoverInstance& inst, std::size_t limit) {
    if (inst.sets.size() > limit)
        throw std::invalid_argument("exact cover solver limited to " + std::to_string(limit) +
                                    " sets; use solve_cover_greedy");
    EvidenceSet ev;
    ev.solver = "exact";
    const std::size_t n_elems = inst.universe.size();
    if (n_elems == 0) return ev;

    std::vector<std::pair<std::string, Bitset>> sets(inst.sets.begin(), inst.sets.end());
    const std::size_t n_sets = sets.size();
    Bitset full(n_elems);
    for (std::size_t i = 0; i < n_elems; ++i) full.set(i);

    // Upper bound and feasibility from greedy.
    std::size_t upper = greedy_impl(sets, n_elems).concepts.size();
    std::size_t max_set = 0;
    for (const auto& [_, mask] : sets) max_set = std::max(max_set, mask.count());
    std::size_t lower = (n_elems + max_set - 1) / max_set;

    // suffix_union[i] = union of masks i..n-1, for pruning.
    std::vector<Bitset> suffix_union(n_sets + 1, Bitset(n_elems));
    for (std::size_t i = n_sets; i-- > 0;)
        suffix_union[i] = suffix_union[i + 1] | sets[i].second;

    // Iterative deepening in lexicographic set order: the first cover found
    // at the smallest feasible budget is the lexicographically smallest
    // minimum-cardinality solution.
    std::vector<std::size_t> chosen;
    std::function<bool(std::size_t, const Bitset&, std::size_t)> dfs =
        [&](std::size_t i, const Bitset& covered, std::size_t slots) -> bool {
        if (covered == full) return true;
        if (slots == 0 || i == n_sets) return false;
        if (!full.subset_of(covered | suffix_union[i])) return false;
        std::size_t uncovered = n_elems - covered.count();
        if ((uncovered + max_set - 1) / max_set > slots) return false;
        chosen.push_back(i);
        if (dfs(i + 1, covered | sets[i].second, slots - 1)) return true;
        chosen.pop_back();
        return dfs(i + 1, covered, slots);
    };

    for (std::size_t budget = lower; budget <= upper; ++budget) {
        chosen.clear();
        if (dfs(0, Bitset(n_elems), budget)) {
            for (auto i : chosen) ev.concepts.push_back(sets[i].first);
            std::sort(ev.concepts.begin(), ev.concepts.end());
            return ev;
        }
    }
    throw std::runtime_error("infeasible instance: no cover exists");
}

bool verify_evidence(const CanonicalModel& model, const std::string& o_concept,
                     const std::vector<std::string>& candidate_concepts,
                     const std::vector<std::string>& alpha) {
    Bitset alpha_union(model.atom_count());
    for (const auto& a : alpha) alpha_union |= model.extension(a);
    for (const auto& cand : candidate_concepts) {
        const Bitset& ce = model.extension(cand);
        bool covered = std::any_of(alpha.begin(), alpha.end(), [&](const std::string& a) {
            return ce.subset_of(model.extension(a));
        });
        if (!covered) return false;
    }
    return minus(model.extension(o_concept), alpha_union).any();
}

EvidenceSet brute_force_min_evidence(const CanonicalModel& model,
                                     const std::string& o_concept,
                                     const std::vector<std::string>& candidate_concepts,
                                     const std::vector<std::string>& name_pool) {
    std::vector<std::string> pool = name_pool;
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    if (pool.size() > 20)
        throw std::invalid_argument("brute-force oracle limited to 20 concept names");

    EvidenceSet ev;
    ev.solver = "enumeration";
    if (candidate_concepts.empty()) return ev;

    std::vector<std::string> subset;
    std::function<bool(std::size_t, std::size_t)> choose = [&](std::size_t from,
                                                               std::size_t remaining) -> bool {
        if (remaining == 0)
            return verify_evidence(model, o_concept, candidate_concepts, subset);
        for (std::size_t i = from; i + remaining <= pool.size(); ++i) {
            subset.push_back(pool[i]);
            if (choose(i + 1, remaining - 1)) return true;
            subset.pop_back();
        }
        return false;
    };
    for (std::size_t k = 1; k <= pool.size(); ++k) {
        subset.clear();
        if (choose(0, k)) {
            ev.concepts = subset;
            return ev;
        }
    }
    throw std::runtime_error("no feasible evidence set over the given name pool");
}

EvidenceSet select_best_evidence(const std::vector<OntologyEvidence>& results) {
    const EvidenceSet* best = nullptr;
    auto rank = [](const EvidenceSet& e) {
        return std::tuple<std::size_t, int, const std::string&>(
            e.cardinality(), e.kind == EvidenceKind::Object ? 0 : 1, e.ontology);
    };
    for (const auto& r : results) {
        for (const auto* cand : {r.object ? &*r.object : nullptr, r.subject ? &*r.subject : nullptr}) {
            if (!cand) continue;
            if (!best || rank(*cand) < rank(*best)) best = cand;
        }
    }
    if (!best) throw std::runtime_error("no matching ontology produced evidence");
    return *best;
}

}  // namespace veridex
