#include <random>
#include <sstream>

#include "doctest.h"
#include "support/oracles.hpp"
#include "veridex/augment.hpp"
#include "veridex/ontology.hpp"

using namespace veridex;
namespace vt = veridex::testing;

namespace {

OntologyDoc parse_text(const std::string& text) {
    std::stringstream in(text);
    return parse_ontology(in, "mem");
}

OntologyDoc geo_doc() { return load_ontology_file(vt::fixture_path("geo.ont")); }

// Arc set as label pairs so node ids can differ between runs.
std::set<std::pair<std::string, std::string>> arc_labels(const ConceptDag& dag) {
    std::set<std::pair<std::string, std::string>> arcs;
    for (std::size_t i = 0; i < dag.node_count(); ++i)
        for (int c : dag.children(static_cast<int>(i)))
            arcs.insert({dag.node(i).label, dag.node(c).label});
    return arcs;
}

}  // namespace

TEST_CASE("parse collects concepts and assertions from isa lines") {
    auto doc = parse_text("ontology o\nisa Minneapolis Minnesota\nisa Minnesota Midwest_region\n");
    CHECK(doc.concepts.size() == 3);
    CHECK(doc.isa.size() == 2);
    CHECK(doc.id == "o");
}

TEST_CASE("empty ontology file parses to an empty document") {
    auto doc = parse_text("");
    CHECK(doc.concepts.empty());
    CHECK(doc.isa.empty());
}

TEST_CASE("isa cycles are rejected") {
    CHECK_THROWS_WITH_AS(parse_text("isa A B\nisa B A\n"), doctest::Contains("cycle"), ParseError);
    CHECK_THROWS_AS(parse_text("isa A A\n"), ParseError);
    CHECK_THROWS_AS(parse_text("isa A B\nisa B C\nisa C A\n"), ParseError);
}

TEST_CASE("overlap endpoints must be declared") {
    CHECK_THROWS_WITH_AS(parse_text("concept A\noverlap A Ghost\n"),
                         doctest::Contains("undeclared"), ParseError);
    CHECK_NOTHROW(parse_text("concept A\nconcept B\noverlap A B\n"));
}

TEST_CASE("a second ontology directive is a duplicate-id error") {
    CHECK_THROWS_WITH_AS(parse_text("ontology a\nontology b\n"), doctest::Contains("duplicate"),
                         ParseError);
}

TEST_CASE("classifying a single concept yields TOP -> A -> BOTTOM") {
    auto doc = parse_text("concept A\n");
    auto dag = classify(doc);
    // A is the only name: its extension covers the whole domain, so it sits
    // on the TOP node and the graph is the two-node chain.
    int a = dag.name_node("A");
    CHECK(dag.reaches(a, ConceptDag::kBottom));
    CHECK(dag.reaches(ConceptDag::kTop, a));
    CHECK(is_subsumed(dag, "A", "A"));
}

TEST_CASE("classifying two siblings puts both between TOP and BOTTOM") {
    auto doc = parse_text("concept A\nconcept B\n");
    auto dag = classify(doc);
    CHECK(dag.has_arc(ConceptDag::kTop, dag.name_node("A")));
    CHECK(dag.has_arc(dag.name_node("A"), ConceptDag::kBottom));
    CHECK(dag.has_arc(ConceptDag::kTop, dag.name_node("B")));
    CHECK_FALSE(dag.reaches(dag.name_node("A"), dag.name_node("B")));
}

TEST_CASE("redundant declared subsumption does not survive as an arc") {
    // diamond with the redundant D below A declared directly
    auto doc = parse_text("isa D B\nisa D C\nisa B A\nisa C A\nisa D A\n");
    auto dag = classify(doc);
    int a = dag.name_node("A"), d = dag.name_node("D");
    CHECK_FALSE(dag.has_arc(a, d));
    CHECK(dag.reaches(a, d));
    CHECK(dag.has_arc(a, dag.name_node("B")));
    CHECK(dag.has_arc(dag.name_node("B"), d));
}

TEST_CASE("geo classification has the expected arcs") {
    auto doc = geo_doc();
    auto dag = classify(doc);
    CHECK(dag.has_arc(dag.name_node("West_region"), dag.name_node("California")));
    CHECK_FALSE(dag.has_arc(dag.name_node("USA"), dag.name_node("Mountain_View")));
    CHECK(dag.reaches(dag.name_node("USA"), dag.name_node("Mountain_View")));
}

TEST_CASE("is_subsumed follows declared chains and is reflexive") {
    auto doc = geo_doc();
    auto dag = classify(doc);
    CHECK(is_subsumed(dag, "Minneapolis", "Minnesota"));
    CHECK(is_subsumed(dag, "Minneapolis", "USA"));
    CHECK(is_subsumed(dag, "Minneapolis", "Minneapolis"));
    CHECK_FALSE(is_subsumed(dag, "Minnesota", "Minneapolis"));
    CHECK_THROWS_AS(is_subsumed(dag, "Minneapolis", "Atlantis"), std::out_of_range);
}

TEST_CASE("is_subsumed answers negation queries on the augmented geo DAG") {
    auto doc = geo_doc();
    auto model = CanonicalModel::build(doc);
    auto dag = classify(doc, model);
    add_negations(dag, model);
    // disjoint leaf extensions: Minnesota lies under the complement of California
    CHECK(is_subsumed(dag, "Minnesota", "!California"));
    CHECK_FALSE(is_subsumed(dag, "Minneapolis", "!Minnesota"));
}

TEST_CASE("canonical model of a chain keeps one witness per name") {
    auto doc = parse_text("isa B A\nisa C B\n");
    auto model = CanonicalModel::build(doc);
    // ext(C) is the leaf itself; the broader names add their own witnesses
    CHECK(model.extension("C").count() == 1);
    CHECK(model.extension("B").count() == 2);
    CHECK(model.extension("A").count() == 3);
    CHECK(model.extension("C").subset_of(model.extension("A")));
    CHECK(model.name_subsumed("C", "A"));
    CHECK_FALSE(model.name_subsumed("A", "C"));
}

TEST_CASE("disjoint siblings have an unsatisfiable conjunction") {
    auto doc = parse_text("concept A\nconcept B\n");
    auto model = CanonicalModel::build(doc);
    auto both = model.extension("A") & model.extension("B");
    CHECK_FALSE(model.satisfiable(both));
}

TEST_CASE("a declared overlap adds exactly one shared synthetic leaf") {
    auto doc = parse_text("concept A\nconcept B\noverlap A B\n");
    auto model = CanonicalModel::build(doc);
    auto both = model.extension("A") & model.extension("B");
    CHECK(model.satisfiable(both));
    CHECK(both.count() == 1);
}

TEST_CASE("an overlap with an existing common descendant adds nothing") {
    auto doc = parse_text("isa L A\nisa L B\noverlap A B\n");
    auto model = CanonicalModel::build(doc);
    CHECK(model.atom_count() == 3);  // witnesses of A, B, L only
    auto both = model.extension("A") & model.extension("B");
    CHECK(both == model.extension("L"));
}

TEST_CASE("classification reachability equals the declared closure on random ontologies") {
    std::mt19937_64 rng(101);
    vt::OntologyGenOptions opt;
    opt.max_names = 40;
    for (int trial = 0; trial < 40; ++trial) {
        auto doc = vt::random_ontology(rng, opt);
        auto dag = classify(doc);
        auto closure = vt::declared_closure(doc);
        for (const auto& a : doc.concepts)
            for (const auto& b : doc.concepts) {
                bool declared = closure.count({a, b}) > 0;
                CHECK_MESSAGE(is_subsumed(dag, a, b) == declared,
                              "pair (", a, ",", b, ") trial ", trial);
            }
    }
}

TEST_CASE("no arc among concept names is redundant") {
    std::mt19937_64 rng(103);
    vt::OntologyGenOptions opt;
    opt.max_names = 25;
    for (int trial = 0; trial < 25; ++trial) {
        auto doc = vt::random_ontology(rng, opt);
        auto dag = classify(doc);
        for (std::size_t u = 0; u < dag.node_count(); ++u) {
            for (int v : dag.children(static_cast<int>(u))) {
                // is there an alternate route u -> v through another child?
                bool alternate = false;
                for (int w : dag.children(static_cast<int>(u)))
                    if (w != v && dag.reaches(w, v)) alternate = true;
                CHECK_FALSE(alternate);
            }
        }
    }
}

TEST_CASE("subsumption agrees with extension inclusion for all name pairs") {
    std::mt19937_64 rng(107);
    vt::OntologyGenOptions opt;
    opt.max_names = 25;
    for (int trial = 0; trial < 25; ++trial) {
        auto doc = vt::random_ontology(rng, opt);
        auto model = CanonicalModel::build(doc);
        auto dag = classify(doc, model);
        for (const auto& a : doc.concepts)
            for (const auto& b : doc.concepts)
                CHECK(is_subsumed(dag, a, b) == model.name_subsumed(a, b));
    }
}

TEST_CASE("classification is insertion-order independent") {
    std::mt19937_64 rng(109);
    vt::OntologyGenOptions opt;
    opt.max_names = 15;
    for (int trial = 0; trial < 10; ++trial) {
        auto doc = vt::random_ontology(rng, opt);
        auto model = CanonicalModel::build(doc);
        std::vector<std::string> order(doc.concepts.begin(), doc.concepts.end());
        auto reference = arc_labels(classify(doc, model, order));
        for (int perm = 0; perm < 5; ++perm) {
            for (std::size_t i = order.size(); i > 1; --i)
                std::swap(order[i - 1], order[rng() % i]);
            CHECK(arc_labels(classify(doc, model, order)) == reference);
        }
    }
}
