#include "veridex/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "veridex/augment.hpp"

namespace veridex {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string tok;
    while (ss >> tok) out.push_back(tok);
    return out;
}

void check_acyclic(const OntologyDoc& doc, const std::string& source_name) {
    std::map<std::string, std::vector<std::string>> up;
    for (const auto& [child, parent] : doc.isa) up[child].push_back(parent);
    // 0 = unvisited, 1 = on stack, 2 = done
    std::map<std::string, int> state;
    std::function<void(const std::string&)> visit = [&](const std::string& n) {
        state[n] = 1;
        for (const auto& p : up[n]) {
            if (state[p] == 1)
                throw ParseError(source_name + ": isa cycle through \"" + p + "\"");
            if (state[p] == 0) visit(p);
        }
        state[n] = 2;
    };
    for (const auto& c : doc.concepts)
        if (state[c] == 0) visit(c);
}

}  // namespace

OntologyDoc parse_ontology(std::istream& in, const std::string& source_name) {
    OntologyDoc doc;
    bool saw_id = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto toks = split_ws(line);
        if (toks.empty()) continue;
        auto where = [&] { return source_name + ":" + std::to_string(lineno); };
        const auto& directive = toks[0];
        if (directive == "ontology") {
            if (toks.size() != 2) throw ParseError(where() + ": ontology takes one id");
            if (saw_id) throw ParseError(where() + ": duplicate ontology id directive");
            doc.id = toks[1];
            saw_id = true;
        } else if (directive == "concept") {
            if (toks.size() != 2) throw ParseError(where() + ": concept takes one name");
            doc.concepts.insert(toks[1]);
        } else if (directive == "isa") {
            if (toks.size() != 3) throw ParseError(where() + ": isa takes child and parent");
            if (toks[1] == toks[2]) throw ParseError(where() + ": isa cycle through \"" + toks[1] + "\"");
            doc.concepts.insert(toks[1]);
            doc.concepts.insert(toks[2]);
            doc.isa.insert({toks[1], toks[2]});
        } else if (directive == "overlap") {
            if (toks.size() != 3) throw ParseError(where() + ": overlap takes two names");
            auto a = std::min(toks[1], toks[2]);
            auto b = std::max(toks[1], toks[2]);
            if (a == b) throw ParseError(where() + ": overlap needs two distinct names");
            doc.overlap.insert({a, b});
        } else {
            throw ParseError(where() + ": unknown directive \"" + directive + "\"");
        }
    }
    for (const auto& [a, b] : doc.overlap) {
        if (!doc.has_concept(a))
            throw ParseError(source_name + ": undeclared concept \"" + a + "\" in overlap assertion");
        if (!doc.has_concept(b))
            throw ParseError(source_name + ": undeclared concept \"" + b + "\" in overlap assertion");
    }
    check_acyclic(doc, source_name);
    return doc;
}

OntologyDoc load_ontology_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open ontology file: " + path);
    return parse_ontology(in, path);
}

CanonicalModel CanonicalModel::build(const OntologyDoc& doc) {
    CanonicalModel m;
    std::vector<std::string> names(doc.concepts.begin(), doc.concepts.end());

    // Reflexive-transitive closure of the declared isa assertions, as
    // ancestor sets per name.
    std::map<std::string, std::set<std::string>> ancestors;
    std::map<std::string, std::vector<std::string>> parents;
    for (const auto& [child, parent] : doc.isa) parents[child].push_back(parent);
    std::function<const std::set<std::string>&(const std::string&)> up =
        [&](const std::string& n) -> const std::set<std::string>& {
        auto it = ancestors.find(n);
        if (it != ancestors.end()) return it->second;
        std::set<std::string> acc = {n};
        for (const auto& p : parents[n]) {
            const auto& pa = up(p);
            acc.insert(pa.begin(), pa.end());
        }
        return ancestors.emplace(n, std::move(acc)).first->second;
    };
    for (const auto& n : names) up(n);

    // One witness atom per concept name; a childless name's witness is the
    // name itself, an inner name's witness is its proper instance.
    m.atoms_ = names;
    std::map<std::pair<std::string, std::string>, std::size_t> synth_atoms;
    for (const auto& [a, b] : doc.overlap) {
        bool common = false;
        for (const auto& n : names)
            if (ancestors[n].count(a) && ancestors[n].count(b)) { common = true; break; }
        if (common) continue;
        synth_atoms[{a, b}] = m.atoms_.size();
        m.atoms_.push_back(a + "&" + b);
    }

    const std::size_t total = m.atoms_.size();
    for (const auto& n : names) m.ext_.emplace(n, Bitset(total));
    for (std::size_t i = 0; i < names.size(); ++i)
        for (const auto& anc : ancestors[names[i]])
            m.ext_.at(anc).set(i);
    for (const auto& [pair, atom] : synth_atoms) {
        for (const auto& side : {pair.first, pair.second})
            for (const auto& anc : ancestors[side])
                m.ext_.at(anc).set(atom);
    }

    m.full_ = Bitset(total);
    for (std::size_t i = 0; i < total; ++i) m.full_.set(i);
    return m;
}

const Bitset& CanonicalModel::extension(const std::string& name) const {
    auto it = ext_.find(name);
    if (it == ext_.end()) throw std::out_of_range("unknown concept name: " + name);
    return it->second;
}

Bitset CanonicalModel::negation_extension(const std::string& name) const {
    return extension(name).complement();
}

bool CanonicalModel::name_subsumed(const std::string& a, const std::string& b) const {
    return extension(a).subset_of(extension(b));
}

int ConceptDag::add_node(DagNode node) {
    nodes_.push_back(std::move(node));
    children_.emplace_back();
    parents_.emplace_back();
    return static_cast<int>(nodes_.size()) - 1;
}

void ConceptDag::add_arc(int upper, int lower) {
    children_[upper].insert(lower);
    parents_[lower].insert(upper);
}

void ConceptDag::remove_arc(int upper, int lower) {
    children_[upper].erase(lower);
    parents_[lower].erase(upper);
}

bool ConceptDag::has_arc(int upper, int lower) const {
    return children_[upper].count(lower) > 0;
}

int ConceptDag::name_node(const std::string& name) const {
    auto it = name_node_.find(name);
    if (it == name_node_.end()) throw std::out_of_range("unknown concept name: " + name);
    return it->second;
}

int ConceptDag::negation_node(const std::string& name) const {
    auto it = neg_node_.find(name);
    if (it == neg_node_.end())
        throw std::out_of_range("DAG not augmented: no negation node for " + name);
    return it->second;
}

std::vector<int> ConceptDag::name_node_ids() const {
    std::vector<int> out;
    for (const auto& [name, id] : name_node_) out.push_back(id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool ConceptDag::reaches(int upper, int lower) const {
    if (upper == lower) return true;
    if (!desc_.empty()) return desc_[upper].test(static_cast<std::size_t>(lower));
    std::vector<int> stack = {upper};
    std::set<int> seen = {upper};
    while (!stack.empty()) {
        int n = stack.back();
        stack.pop_back();
        for (int c : children_[n]) {
            if (c == lower) return true;
            if (seen.insert(c).second) stack.push_back(c);
        }
    }
    return false;
}

void ConceptDag::freeze() {
    const std::size_t n = nodes_.size();
    desc_.assign(n, Bitset(n));
    // Reverse topological order: process a node after all of its children.
    std::vector<int> order;
    std::vector<int> state(n, 0);
    std::function<void(int)> visit = [&](int v) {
        state[v] = 1;
        for (int c : children_[v])
            if (state[c] == 0) visit(c);
        order.push_back(v);
    };
    for (std::size_t i = 0; i < n; ++i)
        if (state[i] == 0) visit(static_cast<int>(i));
    for (int v : order) {
        desc_[v].set(static_cast<std::size_t>(v));
        for (int c : children_[v]) desc_[v] |= desc_[c];
    }
}

std::string ConceptDag::to_dot() const {
    std::ostringstream out;
    out << "digraph subsumption {\n  rankdir=TB;\n";
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& nd = nodes_[i];
        const char* shape = nd.kind == NodeKind::Artificial ? "diamond" : "box";
        std::string label = nd.label;
        if (nd.name && *nd.name != nd.label) label += "\\n" + *nd.name;
        for (const auto& neg : nd.negations)
            if (("!" + neg) != nd.label) label += "\\n!" + neg;
        out << "  n" << i << " [label=\"" << label << "\", shape=" << shape << "];\n";
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        for (int c : children_[i]) out << "  n" << i << " -> n" << c << ";\n";
    out << "}\n";
    return out.str();
}

ConceptDag classify(const OntologyDoc& doc, const CanonicalModel& model,
                    const std::vector<std::string>& insertion_order) {
    ConceptDag dag;
    DagNode top{NodeKind::Top, "TOP", std::nullopt, {}, model.top_extension()};
    DagNode bottom{NodeKind::Bottom, "BOTTOM", std::nullopt, {}, model.bottom_extension()};
    dag.add_node(std::move(top));
    dag.add_node(std::move(bottom));
    dag.add_arc(ConceptDag::kTop, ConceptDag::kBottom);

    std::vector<std::string> order = insertion_order;
    if (order.empty()) {
        order.assign(doc.concepts.begin(), doc.concepts.end());
    } else {
        auto check = std::set<std::string>(order.begin(), order.end());
        if (check != doc.concepts || check.size() != order.size())
            throw std::invalid_argument("insertion order must be a permutation of the concepts");
    }

    std::vector<int> inserted = {ConceptDag::kTop, ConceptDag::kBottom};
    for (const auto& name : order) {
        const Bitset& ext = model.extension(name);
        // A name whose extension equals the full domain is TOP-equivalent
        // (the acyclicity of isa rules out any other name-name equivalence).
        if (ext == model.top_extension()) {
            dag.node(ConceptDag::kTop).name = name;
            dag.register_name(name, ConceptDag::kTop);
            continue;
        }
        DagNode nd{NodeKind::Name, name, name, {}, ext};
        int id = dag.add_node(std::move(nd));
        dag.register_name(name, id);
        auto [down, up] = top_bottom_search(dag, inserted, dag.node(id).ext);
        for (int u : down)
            for (int l : up)
                if (dag.has_arc(u, l)) dag.remove_arc(u, l);
        for (int u : down) dag.add_arc(u, id);
        for (int l : up) dag.add_arc(id, l);
        inserted.push_back(id);
    }
    dag.freeze();
    return dag;
}

ConceptDag classify(const OntologyDoc& doc) {
    auto model = CanonicalModel::build(doc);
    return classify(doc, model);
}

int resolve_node(const ConceptDag& dag, const std::string& label) {
    if (label == "TOP") return ConceptDag::kTop;
    if (label == "BOTTOM") return ConceptDag::kBottom;
    if (!label.empty() && label[0] == '!') return dag.negation_node(label.substr(1));
    return dag.name_node(label);
}

bool is_subsumed(const ConceptDag& dag, const std::string& a, const std::string& b) {
    return dag.reaches(resolve_node(dag, b), resolve_node(dag, a));
}

}  // namespace veridex
