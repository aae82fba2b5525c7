#include "veridex/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace veridex {

void ConceptMatchTable::add(const std::string& entity, const std::string& ontology,
                            const std::string& concept_name) {
    entries_[{entity, ontology}] = concept_name;
}

std::optional<std::string> ConceptMatchTable::match(const std::string& entity,
                                                    const std::string& ontology) const {
    auto it = entries_.find({entity, ontology});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

ConceptMatchTable ConceptMatchTable::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open match table: " + path);
    ConceptMatchTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string entity, ontology, concept_name;
        if (!std::getline(ss, entity, '\t') || !std::getline(ss, ontology, '\t') ||
            !std::getline(ss, concept_name, '\t'))
            throw ParseError(path + ":" + std::to_string(lineno) +
                             ": expected entity, ontology and concept fields");
        table.add(normalize_entity(entity), normalize_entity(ontology),
                  normalize_entity(concept_name));
    }
    return table;
}

void ConceptMatchTable::validate(const std::map<std::string, OntologyDoc>& docs) const {
    for (const auto& [key, concept_name] : entries_) {
        auto it = docs.find(key.second);
        if (it == docs.end()) continue;  // table may cover ontologies not loaded
        if (!it->second.has_concept(concept_name))
            throw ParseError("match table references unknown concept \"" + concept_name +
                             "\" in ontology \"" + key.second + "\"");
    }
}

OntologyContext OntologyContext::build(OntologyDoc doc) {
    auto model = CanonicalModel::build(doc);
    auto dag = classify(doc, model);
    add_negations(dag, model);
    return {std::move(doc), std::move(model), std::move(dag)};
}

TrainConfig PipelineConfig::train() const {
    TrainConfig t;
    t.max_path_len = max_path_len;
    t.min_support = min_support;
    t.negatives_per_positive = negatives_per_positive;
    t.l2 = l2;
    t.epochs = epochs;
    t.learning_rate = learning_rate;
    t.seed = seed;
    return t;
}

void PipelineConfig::apply(const std::string& key, const std::string& value) {
    try {
        if (key == "seed") seed = std::stoull(value);
        else if (key == "max_path_len") max_path_len = std::stoi(value);
        else if (key == "min_support") min_support = std::stoi(value);
        else if (key == "negatives_per_positive") negatives_per_positive = std::stoi(value);
        else if (key == "l2") l2 = std::stod(value);
        else if (key == "epochs") epochs = std::stoi(value);
        else if (key == "learning_rate") learning_rate = std::stod(value);
        else if (key == "eps1_hyper") eps1_hyper = std::stod(value);
        else if (key == "top_fraction") top_fraction = std::stod(value);
        else if (key == "exact_cover_limit") exact_cover_limit = std::stoull(value);
        else if (key == "truth_paths_k") truth_paths_k = std::stoull(value);
        else if (key == "omega_mode") {
            if (value == "graph") omega_mode = OmegaMode::Graph;
            else if (value == "exact") omega_mode = OmegaMode::Exact;
            else throw ParseError("omega_mode must be graph or exact");
        } else {
            throw ParseError("unknown config key: " + key);
        }
    } catch (const std::invalid_argument&) {
        throw ParseError("bad value for config key " + key + ": " + value);
    } catch (const std::out_of_range&) {
        throw ParseError("value out of range for config key " + key + ": " + value);
    }
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    PipelineConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = normalize_entity(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected key=value");
        cfg.apply(normalize_entity(line.substr(0, eq)), normalize_entity(line.substr(eq + 1)));
    }
    return cfg;
}

Outcome VerdictReport::outcome() const {
    if (label_true) return Outcome::True;
    return chosen ? Outcome::FalseWithEvidence : Outcome::FalseWithoutEvidence;
}

int VerdictReport::exit_code() const {
    switch (outcome()) {
        case Outcome::True: return 0;
        case Outcome::FalseWithEvidence: return 3;
        case Outcome::FalseWithoutEvidence: return 4;
    }
    return 1;
}

namespace {

std::vector<double> kg_true_scores(const std::vector<RankedCandidate>& ranked,
                                   const KnowledgeGraph& kg, const Triplet& lay, Direction dir) {
    std::vector<double> scores;
    for (const auto& rc : ranked) {
        bool in_kg = dir == Direction::Forward
                         ? kg.contains(lay.subject, lay.relation, rc.entity)
                         : kg.contains(rc.entity, lay.relation, lay.object);
        if (in_kg) scores.push_back(rc.score);
    }
    return scores;
}

// Map candidate entities to concepts of one ontology, dropping unmatched ones.
std::vector<std::string> map_candidates(const std::vector<std::string>& entities,
                                        const ConceptMatchTable& table,
                                        const std::string& ontology,
                                        std::vector<std::string>& warnings) {
    std::vector<std::string> concepts;
    std::set<std::string> seen;
    for (const auto& e : entities) {
        auto c = table.match(e, ontology);
        if (!c) {
            warnings.push_back("candidate \"" + e + "\" unmatched in ontology " + ontology);
            continue;
        }
        if (seen.insert(*c).second) concepts.push_back(*c);
    }
    return concepts;
}

std::optional<EvidenceSet> extract_side(const OntologyContext& ont, const std::string& anchor_concept,
                                        const std::vector<std::string>& candidate_concepts,
                                        EvidenceKind kind, const PipelineConfig& config,
                                        std::vector<std::string>& warnings) {
    if (candidate_concepts.empty()) return std::nullopt;
    auto sup = collect_sup(ont.dag, ont.model, anchor_concept, candidate_concepts,
                           config.omega_mode);
    for (const auto& r : sup.rejected)
        warnings.push_back("candidate dropped: " + r);
    std::set<std::string> rejected;
    for (const auto& r : sup.rejected) rejected.insert(r.substr(0, r.find(": ")));
    std::vector<std::string> survivors;
    for (const auto& c : candidate_concepts)
        if (!rejected.count(c)) survivors.push_back(c);
    if (survivors.empty()) {
        warnings.push_back("all candidates rejected for " + anchor_concept);
        return std::nullopt;
    }
    auto instance = build_cover_instance(sup, survivors, ont.dag);
    EvidenceSet ev = instance.sets.size() <= config.exact_cover_limit
                         ? solve_cover_exact(instance, config.exact_cover_limit)
                         : solve_cover_greedy(instance);
    ev.kind = kind;
    ev.ontology = ont.doc.id;
    if (!verify_evidence(ont.model, anchor_concept, survivors, ev.concepts))
        throw std::logic_error("solver produced evidence failing the validity check");
    return ev;
}

}  // namespace

VerdictReport run_pipeline(const KnowledgeGraph& kg,
                           const std::map<std::string, PraModel>& models,
                           const std::vector<OntologyContext>& ontologies,
                           const ConceptMatchTable& table, const Triplet& lay,
                           const PipelineConfig& config) {
    auto model_it = models.find(lay.relation);
    if (model_it == models.end())
        throw MissingModelError("no PRA model for relation: " + lay.relation);
    const PraModel& model = model_it->second;

    VerdictReport report;
    report.triplet = lay;

    auto fwd = rank_candidates(model, kg, lay.subject, Direction::Forward);
    auto bwd = rank_candidates(model, kg, lay.object, Direction::Backward);
    report.thresholds_forward = compute_thresholds(
        kg_true_scores(fwd, kg, lay, Direction::Forward), fwd.size(), config.eps1_hyper);
    report.thresholds_backward = compute_thresholds(
        kg_true_scores(bwd, kg, lay, Direction::Backward), bwd.size(), config.eps1_hyper);
    if (report.thresholds_forward.clamped || report.thresholds_backward.clamped)
        report.warnings.push_back("rank_eps1 clamped to 1");

    auto v = verdict(model, kg, lay, report.thresholds_forward, report.thresholds_backward,
                     config.truth_paths_k);
    report.label_true = v.is_true;
    report.truth_paths = std::move(v.truth_paths);
    if (report.label_true) return report;

    auto object_entities = candidate_set(fwd, report.thresholds_forward);
    auto subject_entities = candidate_set(bwd, report.thresholds_backward);
    for (const auto& rc : fwd)
        if (static_cast<double>(rc.rank) <= std::floor(report.thresholds_forward.rank_eps1))
            report.object_candidates.push_back(rc);
    for (const auto& rc : bwd)
        if (static_cast<double>(rc.rank) <= std::floor(report.thresholds_backward.rank_eps1))
            report.subject_candidates.push_back(rc);

    std::vector<OntologyEvidence> results;
    for (const auto& ont : ontologies) {
        EvidenceAttempt attempt;
        attempt.ontology = ont.doc.id;

        auto o_concept = table.match(lay.object, ont.doc.id);
        if (o_concept) {
            auto concepts = map_candidates(object_entities, table, ont.doc.id, attempt.warnings);
            attempt.object = extract_side(ont, *o_concept, concepts, EvidenceKind::Object,
                                          config, attempt.warnings);
        } else {
            attempt.warnings.push_back("object entity unmatched; ontology skipped");
        }

        auto s_concept = table.match(lay.subject, ont.doc.id);
        if (s_concept) {
            auto concepts = map_candidates(subject_entities, table, ont.doc.id, attempt.warnings);
            attempt.subject = extract_side(ont, *s_concept, concepts, EvidenceKind::Subject,
                                           config, attempt.warnings);
        } else {
            attempt.warnings.push_back("subject entity unmatched; ontology skipped");
        }

        results.push_back({attempt.ontology, attempt.object, attempt.subject});
        report.attempts.push_back(std::move(attempt));
    }

    try {
        report.chosen = select_best_evidence(results);
    } catch (const std::runtime_error&) {
        report.warnings.push_back("no ontology produced evidence of falseness");
    }
    return report;
}

namespace {

nlohmann::ordered_json thresholds_json(const RankThresholds& t) {
    return {{"rank_eps1", t.rank_eps1}, {"rank_eps2", t.rank_eps2}, {"x", t.x},
            {"o_all", t.o_all_size},    {"o_kg", t.o_kg_size},      {"clamped", t.clamped}};
}

nlohmann::ordered_json candidates_json(const std::vector<RankedCandidate>& cs) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : cs)
        arr.push_back({{"entity", c.entity}, {"score", c.score}, {"rank", c.rank}});
    return arr;
}

nlohmann::ordered_json evidence_json(const EvidenceSet& e) {
    return {{"kind", e.kind == EvidenceKind::Object ? "object" : "subject"},
            {"ontology", e.ontology},
            {"concepts", e.concepts},
            {"cardinality", e.cardinality()},
            {"solver", e.solver}};
}

}  // namespace

nlohmann::ordered_json report_to_json(const VerdictReport& report) {
    nlohmann::ordered_json j;
    j["triplet"] = {{"subject", report.triplet.subject},
                    {"relation", report.triplet.relation},
                    {"object", report.triplet.object}};
    j["label"] = report.label_true ? "true" : "false";
    j["thresholds"] = {{"forward", thresholds_json(report.thresholds_forward)},
                       {"backward", thresholds_json(report.thresholds_backward)}};
    nlohmann::ordered_json paths = nlohmann::ordered_json::array();
    for (const auto& p : report.truth_paths)
        paths.push_back({{"path", p.path}, {"contribution", p.contribution}});
    j["truth_paths"] = std::move(paths);
    j["object_candidates"] = candidates_json(report.object_candidates);
    j["subject_candidates"] = candidates_json(report.subject_candidates);
    nlohmann::ordered_json attempts = nlohmann::ordered_json::array();
    for (const auto& a : report.attempts) {
        nlohmann::ordered_json aj;
        aj["ontology"] = a.ontology;
        aj["object"] = a.object ? evidence_json(*a.object) : nlohmann::ordered_json(nullptr);
        aj["subject"] = a.subject ? evidence_json(*a.subject) : nlohmann::ordered_json(nullptr);
        aj["warnings"] = a.warnings;
        attempts.push_back(std::move(aj));
    }
    j["evidence_attempts"] = std::move(attempts);
    j["chosen_evidence"] =
        report.chosen ? evidence_json(*report.chosen) : nlohmann::ordered_json(nullptr);
    j["warnings"] = report.warnings;
    j["exit_code"] = report.exit_code();
    return j;
}

std::map<Triplet, double> rank_fractions(const KnowledgeGraph& kg,
                                         const std::map<std::string, PraModel>& models) {
    std::map<Triplet, double> fractions;
    for (const auto& relation : kg.relations()) {
        auto it = models.find(relation);
        if (it == models.end())
            throw MissingModelError("no PRA model for relation: " + relation);
        auto edges = kg.edges_for_relation(relation);
        std::vector<std::pair<double, const Triplet*>> scored;
        scored.reserve(edges.size());
        for (const auto& t : edges)
            scored.push_back({score(it->second, kg, t.subject, t.object), &t});
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; i < scored.size(); ++i)
            fractions[*scored[i].second] =
                static_cast<double>(i + 1) / static_cast<double>(scored.size());
    }
    return fractions;
}

CorpusStats report_stats(const std::vector<VerdictReport>& reports) {
    if (reports.empty()) throw std::invalid_argument("no reports to summarize");
    struct Acc {
        std::size_t count = 0, false_count = 0, with_evidence = 0;
        double candidates = 0.0, evidence = 0.0;
    };
    std::map<std::string, Acc> acc;
    for (const auto& r : reports) {
        auto& a = acc[r.triplet.relation];
        ++a.count;
        if (!r.label_true) {
            ++a.false_count;
            a.candidates += static_cast<double>(r.object_candidates.size());
            if (r.chosen) {
                ++a.with_evidence;
                a.evidence += static_cast<double>(r.chosen->cardinality());
            }
        }
    }
    CorpusStats stats;
    double all_candidates = 0.0, all_evidence = 0.0;
    std::size_t all_false = 0, all_with_evidence = 0;
    for (const auto& [relation, a] : acc) {
        RelationStats row;
        row.relation = relation;
        row.count = a.count;
        row.false_count = a.false_count;
        row.false_proportion = static_cast<double>(a.false_count) / static_cast<double>(a.count);
        row.avg_candidates = a.false_count ? a.candidates / static_cast<double>(a.false_count) : 0.0;
        row.avg_evidence = a.with_evidence ? a.evidence / static_cast<double>(a.with_evidence) : 0.0;
        stats.rows.push_back(row);
        stats.total += a.count;
        all_false += a.false_count;
        all_with_evidence += a.with_evidence;
        all_candidates += a.candidates;
        all_evidence += a.evidence;
    }
    stats.false_total = all_false;
    stats.avg_candidates = all_false ? all_candidates / static_cast<double>(all_false) : 0.0;
    stats.avg_evidence =
        all_with_evidence ? all_evidence / static_cast<double>(all_with_evidence) : 0.0;
    stats.compression = stats.avg_evidence > 0.0 ? stats.avg_candidates / stats.avg_evidence : 0.0;
    return stats;
}

nlohmann::ordered_json stats_to_json(const CorpusStats& stats) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : stats.rows)
        rows.push_back({{"relation", r.relation},
                        {"count", r.count},
                        {"false_proportion", r.false_proportion},
                        {"avg_candidates", r.avg_candidates},
                        {"avg_evidence", r.avg_evidence}});
    return {{"relations", std::move(rows)},
            {"total", stats.total},
            {"false_total", stats.false_total},
            {"avg_candidates", stats.avg_candidates},
            {"avg_evidence", stats.avg_evidence},
            {"compression", stats.compression}};
}

std::string stats_to_text(const CorpusStats& stats) {
    std::ostringstream out;
    std::size_t width = 8;
    for (const auto& r : stats.rows) width = std::max(width, r.relation.size());
    auto line = [&](const std::string& rel, const std::string& count, const std::string& prop,
                    const std::string& cand, const std::string& ev) {
        out << rel << std::string(width + 2 - rel.size(), ' ') << count << '\t' << prop << '\t'
            << cand << '\t' << ev << '\n';
    };
    line("relation", "count", "false", "avg_O", "avg_alpha");
    char buf[64];
    for (const auto& r : stats.rows) {
        auto fmt = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.2f", v);
            return std::string(buf);
        };
        line(r.relation, std::to_string(r.count), fmt(r.false_proportion), fmt(r.avg_candidates),
             fmt(r.avg_evidence));
    }
    std::snprintf(buf, sizeof buf, "%.2f", stats.compression);
    out << "compression (avg_O / avg_alpha): " << buf << '\n';
    return out.str();
}

}  // namespace veridex
