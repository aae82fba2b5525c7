#include "veridex/kg.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>
#include <sstream>

namespace veridex {

std::string normalize_entity(const std::string& raw) {
    auto begin = raw.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    auto end = raw.find_last_not_of(" \t\r\n");
    return raw.substr(begin, end - begin + 1);
}

void KnowledgeGraph::add(Triplet t) {
    auto it = std::lower_bound(edges_.begin(), edges_.end(), t);
    if (it != edges_.end() && *it == t) {
        // Collapse duplicates order-independently: union tags, keep the
        // lexicographically smallest non-empty provenance.
        it->tags.insert(t.tags.begin(), t.tags.end());
        if (!t.provenance.empty() &&
            (it->provenance.empty() || t.provenance < it->provenance))
            it->provenance = t.provenance;
        return;
    }
    entities_.insert(t.subject);
    entities_.insert(t.object);
    relations_.insert(t.relation);
    fwd_[{t.subject, t.relation}].insert(t.object);
    bwd_[{t.object, t.relation}].insert(t.subject);
    edges_.insert(it, std::move(t));
}

bool KnowledgeGraph::contains(const std::string& s, const std::string& r,
                              const std::string& o) const {
    auto it = fwd_.find({s, r});
    return it != fwd_.end() && it->second.count(o) > 0;
}

std::set<std::string> KnowledgeGraph::neighbors(const std::string& node,
                                                const std::string& relation,
                                                Direction dir) const {
    const auto& index = dir == Direction::Forward ? fwd_ : bwd_;
    auto it = index.find({node, relation});
    if (it == index.end()) return {};
    return it->second;
}

std::vector<Triplet> KnowledgeGraph::edges_for_relation(const std::string& relation) const {
    std::vector<Triplet> out;
    for (const auto& t : edges_)
        if (t.relation == relation) out.push_back(t);
    return out;
}

void KnowledgeGraph::write(std::ostream& out) const {
    for (const auto& t : edges_) {
        out << t.subject << '\t' << t.relation << '\t' << t.object;
        if (!t.provenance.empty() || !t.tags.empty()) out << '\t' << t.provenance;
        if (!t.tags.empty()) {
            out << '\t';
            bool first = true;
            for (const auto& tag : t.tags) {
                if (!first) out << ',';
                out << tag;
                first = false;
            }
        }
        out << '\n';
    }
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

}  // namespace

std::vector<Triplet> parse_kg_records(std::istream& in, const std::string& source_name) {
    std::vector<Triplet> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto fields = split_tabs(line);
        if (fields.size() < 3)
            throw ParseError(source_name + ":" + std::to_string(lineno) +
                             ": expected at least 3 tab-separated fields");
        Triplet t;
        t.subject = normalize_entity(fields[0]);
        t.relation = normalize_entity(fields[1]);
        t.object = normalize_entity(fields[2]);
        if (t.subject.empty() || t.relation.empty() || t.object.empty())
            throw ParseError(source_name + ":" + std::to_string(lineno) +
                             ": empty subject, relation or object");
        if (fields.size() >= 4) t.provenance = fields[3];
        if (fields.size() >= 5) {
            std::stringstream tags(fields[4]);
            std::string tag;
            while (std::getline(tags, tag, ',')) {
                tag = normalize_entity(tag);
                if (!tag.empty()) t.tags.insert(tag);
            }
        }
        records.push_back(std::move(t));
    }
    return records;
}

KnowledgeGraph ingest_triplets(const std::vector<Triplet>& records) {
    KnowledgeGraph kg;
    for (const auto& r : records) kg.add(r);
    return kg;
}

KnowledgeGraph load_kg_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open KG file: " + path);
    return ingest_triplets(parse_kg_records(in, path));
}

KnowledgeGraph filter_kg(const KnowledgeGraph& kg,
                         const std::map<Triplet, double>& rank_fractions,
                         double top_fraction,
                         const std::vector<std::string>& whitelist_files,
                         const std::set<std::string>& banned_tags) {
    std::set<Triplet> whitelisted;
    for (const auto& path : whitelist_files) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open whitelist file: " + path);
        for (const auto& t : parse_kg_records(in, path)) whitelisted.insert(t);
    }

    KnowledgeGraph out;
    for (const auto& t : kg.edges()) {
        bool keep = false;
        auto it = rank_fractions.find(t);
        if (it != rank_fractions.end() && it->second <= top_fraction) keep = true;
        if (!keep && whitelisted.count(t) > 0) keep = true;
        if (!keep) continue;
        // Semantic-type exclusion is applied after the union.
        bool banned = std::any_of(t.tags.begin(), t.tags.end(),
                                  [&](const std::string& tag) { return banned_tags.count(tag) > 0; });
        if (banned) continue;
        out.add(t);
    }
    return out;
}

}  // namespace veridex
