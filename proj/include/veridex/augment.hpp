#pragma once

#include <utility>
#include <vector>

#include "veridex/ontology.hpp"

namespace veridex {

// Incremental-classification search step: among the accumulated nodes X,
// X_down = minimal elements lying above the new extension and X_up = maximal
// elements lying below it, both judged by canonical-model inclusion.
std::pair<std::vector<int>, std::vector<int>> top_bottom_search(
    const ConceptDag& dag, const std::vector<int>& accumulated, const Bitset& ext);

// Extend a base classification DAG with negation nodes (one ¬v per concept
// name v, inserted identifier-ascending unless an explicit order is given)
// and artificial conjunction nodes ¬v ⊓ d for satisfiable, incomparable
// pairs. Negations whose extension equals an existing node's are merged onto
// that node. Throws if the DAG is already augmented.
void add_negations(ConceptDag& dag, const CanonicalModel& model,
                   const std::vector<std::string>& insertion_order = {});

}  // namespace veridex
