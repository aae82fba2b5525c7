#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "veridex/evidence.hpp"
#include "veridex/kg.hpp"
#include "veridex/ontology.hpp"
#include "veridex/pra.hpp"

namespace veridex {

struct MissingModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// (entity, ontology id) -> concept name, loaded from a 3-column TSV.
class ConceptMatchTable {
public:
    void add(const std::string& entity, const std::string& ontology, const std::string& concept_name);
    std::optional<std::string> match(const std::string& entity, const std::string& ontology) const;
    static ConceptMatchTable load(const std::string& path);

    // Every referenced concept must exist in the named ontology.
    void validate(const std::map<std::string, OntologyDoc>& docs) const;

private:
    std::map<std::pair<std::string, std::string>, std::string> entries_;
};

// Ontology with its canonical model and augmented subsumption DAG.
struct OntologyContext {
    OntologyDoc doc;
    CanonicalModel model;
    ConceptDag dag;

    static OntologyContext build(OntologyDoc doc);
};

struct PipelineConfig {
    std::uint64_t seed = 42;
    int max_path_len = 3;
    int min_support = 2;
    int negatives_per_positive = 5;
    double l2 = 0.1;
    int epochs = 200;
    double learning_rate = 0.5;
    double eps1_hyper = 5.0;
    double top_fraction = 0.1;
    std::size_t exact_cover_limit = 24;
    std::size_t truth_paths_k = 3;
    OmegaMode omega_mode = OmegaMode::Graph;

    TrainConfig train() const;
    void apply(const std::string& key, const std::string& value);
    static PipelineConfig from_file(const std::string& path);
};

struct EvidenceAttempt {
    std::string ontology;
    std::optional<EvidenceSet> object;
    std::optional<EvidenceSet> subject;
    std::vector<std::string> warnings;
};

enum class Outcome { True, FalseWithEvidence, FalseWithoutEvidence };

struct VerdictReport {
    Triplet triplet;
    bool label_true = false;
    RankThresholds thresholds_forward;
    RankThresholds thresholds_backward;
    std::vector<TruthPath> truth_paths;
    std::vector<RankedCandidate> object_candidates;   // with scores and ranks
    std::vector<RankedCandidate> subject_candidates;
    std::vector<EvidenceAttempt> attempts;
    std::optional<EvidenceSet> chosen;
    std::vector<std::string> warnings;

    Outcome outcome() const;
    int exit_code() const;  // 0 true, 3 false with evidence, 4 false without
};

// Step 1 (PRA verdict) plus, for false triplets, step 2 (evidence extraction
// across all ontologies in both directions). Ontologies may be empty, in
// which case a false triplet reports no evidence.
VerdictReport run_pipeline(const KnowledgeGraph& kg,
                           const std::map<std::string, PraModel>& models,
                           const std::vector<OntologyContext>& ontologies,
                           const ConceptMatchTable& table, const Triplet& lay,
                           const PipelineConfig& config = {});

nlohmann::ordered_json report_to_json(const VerdictReport& report);

// Per-relation rank fractions of PRA scores, for the KG filtering step.
// Every relation present in the graph needs a model.
std::map<Triplet, double> rank_fractions(const KnowledgeGraph& kg,
                                         const std::map<std::string, PraModel>& models);

struct RelationStats {
    std::string relation;
    std::size_t count = 0;
    std::size_t false_count = 0;
    double false_proportion = 0.0;
    double avg_candidates = 0.0;  // candidate count averaged over false triplets
    double avg_evidence = 0.0;    // evidence size averaged over false triplets with evidence
};

struct CorpusStats {
    std::vector<RelationStats> rows;
    std::size_t total = 0;
    std::size_t false_total = 0;
    double avg_candidates = 0.0;
    double avg_evidence = 0.0;
    double compression = 0.0;  // avg candidates / avg evidence
};

CorpusStats report_stats(const std::vector<VerdictReport>& reports);
nlohmann::ordered_json stats_to_json(const CorpusStats& stats);
std::string stats_to_text(const CorpusStats& stats);

}  // namespace veridex
