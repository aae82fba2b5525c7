#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "veridex/augment.hpp"
#include "veridex/ontology.hpp"

namespace veridex {

// Named/negated nodes lying below both C(o) and ¬p, excluding BOTTOM.
// Non-emptiness certifies that C(o) is not subsumed by p. Returns sorted
// node ids; throws if the DAG lacks negation nodes.
std::vector<int> omega(const ConceptDag& dag, const std::string& o_concept,
                       const std::string& p_concept);

// Exact variant: satisfiability of C(o) ⊓ ¬p in the canonical model.
bool omega_exact(const CanonicalModel& model, const std::string& o_concept,
                 const std::string& p_concept);

// Ω non-emptiness for the concept sitting at an arbitrary DAG node (which may
// be a negation node). Used by the per-path walks.
bool omega_nonempty_at(const ConceptDag& dag, const std::string& o_concept, int node_id);

enum class OmegaMode { Graph, Exact };

// Potential-evidence pool gathered by walking candidate-to-root paths.
struct SupSet {
    std::string owner;                                      // C(o)
    std::map<std::string, std::set<std::string>> members;   // name -> contributing candidates
    std::vector<std::string> rejected;                      // dropped candidates with reason

    std::vector<std::string> member_names() const;
    bool operator==(const SupSet&) const = default;
};

SupSet collect_sup(const ConceptDag& dag, const CanonicalModel& model,
                   const std::string& o_concept,
                   const std::vector<std::string>& candidates,
                   OmegaMode mode = OmegaMode::Graph);

// Same output as collect_sup; per candidate-to-root path the single alive
// threshold is located by binary search instead of the linear walk.
SupSet collect_sup_bisect(const ConceptDag& dag, const CanonicalModel& model,
                          const std::string& o_concept,
                          const std::vector<std::string>& candidates,
                          OmegaMode mode = OmegaMode::Graph);

struct CoverInstance {
    std::vector<std::string> universe;    // candidate concepts, input order
    std::map<std::string, Bitset> sets;   // sup member -> covered candidates
};

CoverInstance build_cover_instance(const SupSet& sup,
                                   const std::vector<std::string>& candidates,
                                   const ConceptDag& dag);

enum class EvidenceKind { Object, Subject };

struct EvidenceSet {
    EvidenceKind kind = EvidenceKind::Object;
    std::string ontology;
    std::vector<std::string> concepts;  // sorted ascending
    std::string solver;

    std::size_t cardinality() const { return concepts.size(); }
};

// Minimum-cardinality cover by branch and bound over bit masks; among optima
// the lexicographically smallest sorted concept list is returned. Throws when
// the instance has more sets than `limit`.
EvidenceSet solve_cover_exact(const CoverInstance& inst, std::size_t limit = 24);

// Largest-uncovered-gain greedy, ties by concept name.
EvidenceSet solve_cover_greedy(const CoverInstance& inst);

// Evidence validity: every candidate concept is subsumed by some alpha_i and
// C(o) keeps a witness outside the union of the alphas.
bool verify_evidence(const CanonicalModel& model, const std::string& o_concept,
                     const std::vector<std::string>& candidate_concepts,
                     const std::vector<std::string>& alpha);

// Independent minimum-evidence oracle: iterative-deepening enumeration over
// subsets of `name_pool` (at most 20 names), first verified subset wins.
EvidenceSet brute_force_min_evidence(const CanonicalModel& model,
                                     const std::string& o_concept,
                                     const std::vector<std::string>& candidate_concepts,
                                     const std::vector<std::string>& name_pool);

struct OntologyEvidence {
    std::string ontology;
    std::optional<EvidenceSet> object;
    std::optional<EvidenceSet> subject;
};

// Minimum cardinality across ontologies and both directions; ties go to
// object evidence, then ascending ontology id.
EvidenceSet select_best_evidence(const std::vector<OntologyEvidence>& results);

}  // namespace veridex
