#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "veridex/bitset.hpp"
#include "veridex/kg.hpp"  // ParseError

namespace veridex {

// Parsed ontology: concept names, atomic subsumptions and overlap assertions.
struct OntologyDoc {
    std::string id;
    std::set<std::string> concepts;
    std::set<std::pair<std::string, std::string>> isa;      // (child, parent)
    std::set<std::pair<std::string, std::string>> overlap;  // unordered, stored sorted

    bool has_concept(const std::string& name) const { return concepts.count(name) > 0; }
};

OntologyDoc parse_ontology(std::istream& in, const std::string& source_name);
OntologyDoc load_ontology_file(const std::string& path);

// Closed-world finite model. Every concept name contributes one witness atom
// (a leaf name's witness is itself); each overlap pair without a common
// descendant contributes one synthetic leaf shared by both sides. Subsumption
// and satisfiability of boolean concept expressions reduce to bit-set algebra.
class CanonicalModel {
public:
    static CanonicalModel build(const OntologyDoc& doc);

    std::size_t atom_count() const { return atoms_.size(); }
    const std::vector<std::string>& atoms() const { return atoms_; }

    bool has_name(const std::string& name) const { return ext_.count(name) > 0; }
    const Bitset& extension(const std::string& name) const;
    Bitset negation_extension(const std::string& name) const;
    const Bitset& top_extension() const { return full_; }
    Bitset bottom_extension() const { return Bitset(atoms_.size()); }

    // ext(a) subset of ext(b)
    bool name_subsumed(const std::string& a, const std::string& b) const;
    bool satisfiable(const Bitset& ext) const { return ext.any(); }

private:
    std::vector<std::string> atoms_;
    std::map<std::string, Bitset> ext_;
    Bitset full_;
};

enum class NodeKind { Top, Bottom, Name, Negation, Artificial };

// Subsumption DAG node. Negations equivalent to an existing node are merged
// onto it, so one node may carry a name label plus negation labels.
struct DagNode {
    NodeKind kind;
    std::string label;                   // primary display label
    std::optional<std::string> name;     // concept name living here, if any
    std::vector<std::string> negations;  // names v such that this node is ¬v
    Bitset ext;                          // canonical-model extension

    bool is_named() const { return name.has_value(); }
    bool in_vc_or_vnc() const { return name.has_value() || !negations.empty(); }
};

// Directed acyclic graph over V_C ∪ V_NC ∪ V_F plus ⊤ and ⊥. Arcs run from the
// upper concept to the lower one (lower ⊑ upper); among V_C ∪ V_NC the arc set
// is kept transitively reduced.
class ConceptDag {
public:
    static constexpr int kTop = 0;
    static constexpr int kBottom = 1;

    int add_node(DagNode node);
    void add_arc(int upper, int lower);
    void remove_arc(int upper, int lower);
    bool has_arc(int upper, int lower) const;

    const DagNode& node(int id) const { return nodes_[id]; }
    DagNode& node(int id) { return nodes_[id]; }
    std::size_t node_count() const { return nodes_.size(); }
    const std::set<int>& children(int id) const { return children_[id]; }
    const std::set<int>& parents(int id) const { return parents_[id]; }

    bool has_name_node(const std::string& name) const { return name_node_.count(name) > 0; }
    int name_node(const std::string& name) const;
    bool has_negation_node(const std::string& name) const { return neg_node_.count(name) > 0; }
    int negation_node(const std::string& name) const;
    void register_name(const std::string& name, int id) { name_node_[name] = id; }
    void register_negation(const std::string& name, int id) { neg_node_[name] = id; }

    std::vector<int> name_node_ids() const;

    bool augmented() const { return augmented_; }
    void mark_augmented() { augmented_ = true; }

    // node id b reaches node id a (reflexive).
    bool reaches(int upper, int lower) const;
    const Bitset& descendants(int id) const { return desc_[id]; }

    // Rebuild per-node descendant bit-sets; call after any arc mutation batch.
    void freeze();

    std::string to_dot() const;

private:
    std::vector<DagNode> nodes_;
    std::vector<std::set<int>> children_;
    std::vector<std::set<int>> parents_;
    std::map<std::string, int> name_node_;
    std::map<std::string, int> neg_node_;
    std::vector<Bitset> desc_;  // over node ids, valid after freeze()
    bool augmented_ = false;
};

// Incremental classification of the concept names into a base DAG
// (V_C plus ⊤/⊥ only). `insertion_order` defaults to identifier-ascending;
// the resulting arc set is order-independent.
ConceptDag classify(const OntologyDoc& doc, const CanonicalModel& model,
                    const std::vector<std::string>& insertion_order = {});
ConceptDag classify(const OntologyDoc& doc);

// True iff a path node(b) -> node(a) exists (a ⊑ b). Labels may be concept
// names or "!name" for negations. Throws on unknown labels.
bool is_subsumed(const ConceptDag& dag, const std::string& a, const std::string& b);

int resolve_node(const ConceptDag& dag, const std::string& label);

}  // namespace veridex
