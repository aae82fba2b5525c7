#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace veridex {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One (subject, relation, object) edge plus optional provenance sentence and
// semantic-type tags carried by the record it was ingested from.
struct Triplet {
    std::string subject;
    std::string relation;
    std::string object;
    std::string provenance;           // may be empty
    std::set<std::string> tags;       // semantic types of the statement's entities

    friend bool operator<(const Triplet& a, const Triplet& b) {
        return std::tie(a.subject, a.relation, a.object) <
               std::tie(b.subject, b.relation, b.object);
    }
    friend bool operator==(const Triplet& a, const Triplet& b) {
        return a.subject == b.subject && a.relation == b.relation && a.object == b.object;
    }
};

enum class Direction { Forward, Backward };

// Immutable after construction; keyed both (s,r)->o and (o,r)->s.
class KnowledgeGraph {
public:
    void add(Triplet t);

    const std::set<std::string>& entities() const { return entities_; }
    const std::set<std::string>& relations() const { return relations_; }
    const std::vector<Triplet>& edges() const { return edges_; }
    std::size_t edge_count() const { return edges_.size(); }

    bool contains(const std::string& s, const std::string& r, const std::string& o) const;

    // Set of nodes one hop away along `relation`; empty for unknown node/relation.
    std::set<std::string> neighbors(const std::string& node, const std::string& relation,
                                    Direction dir) const;

    std::vector<Triplet> edges_for_relation(const std::string& relation) const;

    void write(std::ostream& out) const;

private:
    std::set<std::string> entities_;
    std::set<std::string> relations_;
    std::vector<Triplet> edges_;                       // kept sorted, unique by (s,r,o)
    std::map<std::pair<std::string, std::string>, std::set<std::string>> fwd_;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> bwd_;
};

// Trim surrounding whitespace. Entity identity is exact match of the trimmed
// string; inputs are expected to be NFC-normalized upstream.
std::string normalize_entity(const std::string& raw);

// Parse the tab-separated KG record format. Throws ParseError with the
// offending line number on malformed input.
std::vector<Triplet> parse_kg_records(std::istream& in, const std::string& source_name);

KnowledgeGraph ingest_triplets(const std::vector<Triplet>& records);
KnowledgeGraph load_kg_file(const std::string& path);

// Keep triplets whose per-relation rank fraction is <= top_fraction, union
// whitelist matches, then drop anything carrying a banned tag.
KnowledgeGraph filter_kg(const KnowledgeGraph& kg,
                         const std::map<Triplet, double>& rank_fractions,
                         double top_fraction,
                         const std::vector<std::string>& whitelist_files,
                         const std::set<std::string>& banned_tags);

}  // namespace veridex
