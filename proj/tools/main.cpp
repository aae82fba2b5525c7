#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "veridex/augment.hpp"
#include "veridex/evidence.hpp"
#include "veridex/kg.hpp"
#include "veridex/ontology.hpp"
#include "veridex/pipeline.hpp"
#include "veridex/pra.hpp"

namespace {

using namespace veridex;

std::map<std::string, PraModel> load_models(const std::vector<std::string>& paths) {
    std::map<std::string, PraModel> models;
    for (const auto& p : paths) {
        std::ifstream in(p);
        if (!in) throw ParseError("cannot open model file: " + p);
        auto m = PraModel::load(in, p);
        if (!models.emplace(m.relation, std::move(m)).second)
            throw ParseError("duplicate model for relation in " + p);
    }
    return models;
}

std::vector<OntologyContext> load_ontologies(const std::vector<std::string>& paths,
                                             std::map<std::string, OntologyDoc>& docs) {
    std::vector<OntologyContext> contexts;
    for (const auto& p : paths) {
        auto doc = load_ontology_file(p);
        if (doc.id.empty()) throw ParseError(p + ": missing ontology id directive");
        if (docs.count(doc.id)) throw ParseError(p + ": duplicate ontology id " + doc.id);
        docs[doc.id] = doc;
        contexts.push_back(OntologyContext::build(std::move(doc)));
    }
    std::sort(contexts.begin(), contexts.end(),
              [](const OntologyContext& a, const OntologyContext& b) { return a.doc.id < b.doc.id; });
    return contexts;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write output file: " + path);
    out << content;
}

// Flags shared by the pipeline-driving subcommands. Config file first,
// command-line values override.
struct ConfigFlags {
    std::string config_path;
    PipelineConfig overrides;
    CLI::Option *seed_opt, *max_len_opt, *min_support_opt, *negatives_opt, *l2_opt, *epochs_opt,
        *lr_opt, *hyper_opt, *top_opt, *cover_opt, *truth_k_opt, *omega_opt;
    std::string omega_mode = "graph";

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "config file of key=value lines");
        seed_opt = cmd->add_option("--seed", overrides.seed, "training RNG seed");
        max_len_opt = cmd->add_option("--max-path-len", overrides.max_path_len,
                                      "maximum relation-path length");
        min_support_opt =
            cmd->add_option("--min-support", overrides.min_support, "path support threshold");
        negatives_opt = cmd->add_option("--negatives-per-positive",
                                        overrides.negatives_per_positive, "negative sampling rate");
        l2_opt = cmd->add_option("--l2", overrides.l2, "L2 regularization strength");
        epochs_opt = cmd->add_option("--epochs", overrides.epochs, "training epochs");
        lr_opt = cmd->add_option("--learning-rate", overrides.learning_rate, "GD step size");
        hyper_opt = cmd->add_option("--eps1-hyper", overrides.eps1_hyper,
                                    "calibrated middle term of the rank_eps1 formula");
        top_opt = cmd->add_option("--top-fraction", overrides.top_fraction,
                                  "kept fraction of ranked PRA scores");
        cover_opt = cmd->add_option("--exact-cover-limit", overrides.exact_cover_limit,
                                    "set count above which greedy cover is used");
        truth_k_opt = cmd->add_option("--truth-paths", overrides.truth_paths_k,
                                      "number of reported truth paths");
        omega_opt = cmd->add_option("--omega-mode", omega_mode,
                                    "witness check: graph walk or exact model");
    }

    PipelineConfig resolve() const {
        PipelineConfig cfg;
        if (!config_path.empty()) cfg = PipelineConfig::from_file(config_path);
        if (*seed_opt) cfg.seed = overrides.seed;
        if (*max_len_opt) cfg.max_path_len = overrides.max_path_len;
        if (*min_support_opt) cfg.min_support = overrides.min_support;
        if (*negatives_opt) cfg.negatives_per_positive = overrides.negatives_per_positive;
        if (*l2_opt) cfg.l2 = overrides.l2;
        if (*epochs_opt) cfg.epochs = overrides.epochs;
        if (*lr_opt) cfg.learning_rate = overrides.learning_rate;
        if (*hyper_opt) cfg.eps1_hyper = overrides.eps1_hyper;
        if (*top_opt) cfg.top_fraction = overrides.top_fraction;
        if (*cover_opt) cfg.exact_cover_limit = overrides.exact_cover_limit;
        if (*truth_k_opt) cfg.truth_paths_k = overrides.truth_paths_k;
        if (*omega_opt) {
            if (omega_mode == "graph") cfg.omega_mode = OmegaMode::Graph;
            else if (omega_mode == "exact") cfg.omega_mode = OmegaMode::Exact;
            else throw ParseError("--omega-mode must be graph or exact");
        }
        return cfg;
    }
};

int run_report_command(const std::string& kg_path, const std::vector<std::string>& model_paths,
                       const std::vector<std::string>& ontology_paths,
                       const std::string& table_path, const std::vector<std::string>& triplet,
                       const ConfigFlags& flags, const std::string& output) {
    auto cfg = flags.resolve();
    auto kg = load_kg_file(kg_path);
    auto models = load_models(model_paths);
    std::map<std::string, OntologyDoc> docs;
    auto ontologies = load_ontologies(ontology_paths, docs);
    ConceptMatchTable table;
    if (!table_path.empty()) {
        table = ConceptMatchTable::load(table_path);
        table.validate(docs);
    }
    Triplet lay{normalize_entity(triplet[0]), normalize_entity(triplet[1]),
                normalize_entity(triplet[2]), "", {}};
    auto report = run_pipeline(kg, models, ontologies, table, lay, cfg);
    write_output(output, report_to_json(report).dump(2) + "\n");
    return report.exit_code();
}

VerdictReport report_from_json(const nlohmann::ordered_json& j) {
    VerdictReport r;
    r.triplet.subject = j.at("triplet").at("subject").get<std::string>();
    r.triplet.relation = j.at("triplet").at("relation").get<std::string>();
    r.triplet.object = j.at("triplet").at("object").get<std::string>();
    r.label_true = j.at("label").get<std::string>() == "true";
    for (const auto& c : j.at("object_candidates"))
        r.object_candidates.push_back({c.at("entity").get<std::string>(),
                                       c.at("score").get<double>(),
                                       c.at("rank").get<std::size_t>()});
    if (!j.at("chosen_evidence").is_null()) {
        const auto& e = j.at("chosen_evidence");
        EvidenceSet ev;
        ev.kind = e.at("kind").get<std::string>() == "object" ? EvidenceKind::Object
                                                              : EvidenceKind::Subject;
        ev.ontology = e.at("ontology").get<std::string>();
        ev.concepts = e.at("concepts").get<std::vector<std::string>>();
        ev.solver = e.at("solver").get<std::string>();
        r.chosen = std::move(ev);
    }
    return r;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"truth validation with evidence over a knowledge graph and ontologies"};
    app.require_subcommand(1);

    // ingest
    auto* ingest = app.add_subcommand("ingest", "load, deduplicate and index a KG file");
    std::string ingest_kg, ingest_out;
    ingest->add_option("--kg", ingest_kg, "KG file")->required();
    ingest->add_option("--output", ingest_out, "write the canonical serialized graph");

    // train
    auto* train = app.add_subcommand("train", "train a PRA model for one relation");
    std::string train_kg, train_relation, train_out;
    ConfigFlags train_flags;
    train->add_option("--kg", train_kg, "KG file")->required();
    train->add_option("--relation", train_relation, "target relation")->required();
    train->add_option("--output", train_out, "model output file");
    train_flags.attach(train);

    // filter-kg
    auto* filter = app.add_subcommand("filter-kg", "keep top-ranked and whitelisted triplets");
    std::string filter_kg_path, filter_out, filter_banned;
    std::vector<std::string> filter_models, filter_whitelists;
    ConfigFlags filter_flags;
    filter->add_option("--kg", filter_kg_path, "KG file")->required();
    filter->add_option("--model", filter_models, "PRA model file (repeatable)")->required();
    filter->add_option("--whitelist", filter_whitelists, "whitelist triplet file (repeatable)");
    filter->add_option("--banned-tags", filter_banned, "comma-separated semantic types to drop");
    filter->add_option("--output", filter_out, "adjusted KG output file");
    filter_flags.attach(filter);

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "build the subsumption DAG of an ontology");
    std::string classify_ont, classify_dot;
    bool classify_augment = false;
    classify_cmd->add_option("--ontology", classify_ont, "ontology file")->required();
    classify_cmd->add_flag("--augment", classify_augment, "add negation and artificial nodes");
    classify_cmd->add_option("--dot", classify_dot, "dump the DAG as DOT to this file");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "label a lay triplet true or false");
    std::string verify_kg, verify_out;
    std::vector<std::string> verify_models, verify_triplet;
    ConfigFlags verify_flags;
    verify_cmd->add_option("--kg", verify_kg, "KG file")->required();
    verify_cmd->add_option("--model", verify_models, "PRA model file (repeatable)")->required();
    verify_cmd->add_option("--output", verify_out, "report output file (default stdout)");
    verify_cmd->add_option("triplet", verify_triplet, "subject relation object")
        ->expected(3)
        ->required();
    verify_flags.attach(verify_cmd);

    // evidence
    auto* evidence_cmd =
        app.add_subcommand("evidence", "label a lay triplet and extract evidence of falseness");
    std::string ev_kg, ev_table, ev_out;
    std::vector<std::string> ev_models, ev_ontologies, ev_triplet;
    ConfigFlags ev_flags;
    evidence_cmd->add_option("--kg", ev_kg, "KG file")->required();
    evidence_cmd->add_option("--model", ev_models, "PRA model file (repeatable)")->required();
    evidence_cmd->add_option("--ontology", ev_ontologies, "ontology file (repeatable)")
        ->required();
    evidence_cmd->add_option("--match-table", ev_table, "entity-to-concept match table")
        ->required();
    evidence_cmd->add_option("--output", ev_out, "report output file (default stdout)");
    evidence_cmd->add_option("triplet", ev_triplet, "subject relation object")
        ->expected(3)
        ->required();
    ev_flags.attach(evidence_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "MRR/MAP of a model on held-out triplets");
    std::string eval_kg, eval_model, eval_held;
    eval_cmd->add_option("--kg", eval_kg, "KG file")->required();
    eval_cmd->add_option("--model", eval_model, "PRA model file")->required();
    eval_cmd->add_option("--held-out", eval_held, "held-out triplet file")->required();

    // stats
    auto* stats_cmd = app.add_subcommand("stats", "summarize verdict reports");
    std::vector<std::string> stats_reports;
    bool stats_json_flag = false;
    stats_cmd->add_option("reports", stats_reports, "report JSON files")->required();
    stats_cmd->add_flag("--json", stats_json_flag, "emit JSON instead of text");

    try {
        app.parse(argc, argv);

        if (*ingest) {
            auto kg = veridex::load_kg_file(ingest_kg);
            std::cout << "entities: " << kg.entities().size() << "\nrelations: "
                      << kg.relations().size() << "\nedges: " << kg.edge_count() << "\n";
            if (!ingest_out.empty()) {
                std::ofstream out(ingest_out);
                if (!out) throw veridex::ParseError("cannot write output file: " + ingest_out);
                kg.write(out);
            }
            return 0;
        }
        if (*train) {
            auto cfg = train_flags.resolve();
            auto kg = veridex::load_kg_file(train_kg);
            auto model = veridex::train_pra(kg, train_relation, cfg.train());
            std::ostringstream out;
            model.save(out);
            write_output(train_out, out.str());
            return 0;
        }
        if (*filter) {
            auto cfg = filter_flags.resolve();
            auto kg = veridex::load_kg_file(filter_kg_path);
            auto models = load_models(filter_models);
            std::set<std::string> banned;
            std::stringstream ss(filter_banned);
            std::string tag;
            while (std::getline(ss, tag, ','))
                if (!veridex::normalize_entity(tag).empty())
                    banned.insert(veridex::normalize_entity(tag));
            auto fractions = veridex::rank_fractions(kg, models);
            auto adjusted =
                veridex::filter_kg(kg, fractions, cfg.top_fraction, filter_whitelists, banned);
            std::ostringstream out;
            adjusted.write(out);
            write_output(filter_out, out.str());
            std::cerr << "kept " << adjusted.edge_count() << " of " << kg.edge_count()
                      << " edges\n";
            return 0;
        }
        if (*classify_cmd) {
            auto doc = veridex::load_ontology_file(classify_ont);
            auto model = veridex::CanonicalModel::build(doc);
            auto dag = veridex::classify(doc, model);
            if (classify_augment) veridex::add_negations(dag, model);
            std::cout << "concepts: " << doc.concepts.size() << "\nnodes: " << dag.node_count()
                      << "\n";
            if (!classify_dot.empty()) write_output(classify_dot, dag.to_dot());
            return 0;
        }
        if (*verify_cmd) {
            return run_report_command(verify_kg, verify_models, {}, "", verify_triplet,
                                      verify_flags, verify_out);
        }
        if (*evidence_cmd) {
            return run_report_command(ev_kg, ev_models, ev_ontologies, ev_table, ev_triplet,
                                      ev_flags, ev_out);
        }
        if (*eval_cmd) {
            auto kg = veridex::load_kg_file(eval_kg);
            auto models = load_models({eval_model});
            std::ifstream held(eval_held);
            if (!held) throw veridex::ParseError("cannot open held-out file: " + eval_held);
            auto triplets = veridex::parse_kg_records(held, eval_held);
            auto metrics = veridex::evaluate(models.begin()->second, kg, triplets);
            nlohmann::ordered_json j{{"mrr", metrics.mrr}, {"map", metrics.map}};
            std::cout << j.dump(2) << "\n";
            return 0;
        }
        if (*stats_cmd) {
            std::vector<veridex::VerdictReport> reports;
            for (const auto& path : stats_reports) {
                std::ifstream in(path);
                if (!in) throw veridex::ParseError("cannot open report file: " + path);
                reports.push_back(report_from_json(nlohmann::ordered_json::parse(in)));
            }
            auto stats = veridex::report_stats(reports);
            if (stats_json_flag)
                std::cout << veridex::stats_to_json(stats).dump(2) << "\n";
            else
                std::cout << veridex::stats_to_text(stats);
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const veridex::MissingModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
