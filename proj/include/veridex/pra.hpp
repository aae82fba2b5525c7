#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "veridex/kg.hpp"

namespace veridex {

struct PathStep {
    std::string relation;
    Direction dir = Direction::Forward;

    friend auto operator<=>(const PathStep& a, const PathStep& b) {
        if (auto c = a.relation <=> b.relation; c != 0) return c;
        return static_cast<int>(a.dir) <=> static_cast<int>(b.dir);
    }
    friend bool operator==(const PathStep&, const PathStep&) = default;
};

struct RelationPath {
    std::vector<PathStep> steps;

    std::size_t length() const { return steps.size(); }
    RelationPath reversed() const;
    std::string serialize() const;                 // "rel:+/rel:-"
    static RelationPath parse(const std::string&);

    friend auto operator<=>(const RelationPath& a, const RelationPath& b) {
        return a.steps <=> b.steps;
    }
    friend bool operator==(const RelationPath&, const RelationPath&) = default;
};

struct PraModel {
    std::string relation;
    std::vector<RelationPath> features;
    std::vector<double> weights;  // aligned to features
    double bias = 0.0;

    void save(std::ostream& out) const;
    static PraModel load(std::istream& in, const std::string& source_name);
};

struct RankThresholds {
    double rank_eps1 = 0.0;
    double rank_eps2 = 0.0;
    double x = 0.0;
    std::size_t o_all_size = 0;
    std::size_t o_kg_size = 0;
    bool clamped = false;  // rank_eps1 fell to or below zero and was clamped to 1
};

struct TrainConfig {
    int max_path_len = 3;
    int min_support = 2;
    int negatives_per_positive = 5;
    double l2 = 0.1;
    int epochs = 200;
    double learning_rate = 0.5;
    std::uint64_t seed = 42;
};

// Every relation path of length <= max_len connecting at least min_support
// training pairs of `relation`, excluding the trivial single forward step of
// the relation itself. Sorted lexicographically.
std::vector<RelationPath> enumerate_path_types(const KnowledgeGraph& kg,
                                               const std::string& relation,
                                               int max_len, int min_support);

// Full target distribution of the random walk from `source` along `path`:
// each step picks uniformly among matching edges and dies if none exist.
std::map<std::string, double> path_distribution(const KnowledgeGraph& kg,
                                                const std::string& source,
                                                const RelationPath& path);

double path_feature(const KnowledgeGraph& kg, const std::string& source,
                    const RelationPath& path, const std::string& target);

// Logistic-regression internals, exposed for finite-difference checks.
struct TrainSet {
    std::vector<std::vector<double>> x;
    std::vector<int> y;
};
double sigmoid(double z);
double logistic_objective(const TrainSet& data, std::span<const double> w, double bias,
                          double l2);
// grad has |w|+1 entries; the last one is the bias derivative.
void logistic_gradient(const TrainSet& data, std::span<const double> w, double bias,
                       double l2, std::span<double> grad);

struct TrainDiagnostics {
    double initial_objective = 0.0;
    double final_objective = 0.0;
    std::size_t examples = 0;
    std::size_t negatives = 0;
};

PraModel train_pra(const KnowledgeGraph& kg, const std::string& relation,
                   const TrainConfig& config = {}, TrainDiagnostics* diagnostics = nullptr);

double score(const PraModel& model, const KnowledgeGraph& kg, const std::string& s,
             const std::string& o);

struct RankedCandidate {
    std::string entity;
    double score = 0.0;
    std::size_t rank = 0;  // 1-based
};

// All entities with a nonzero feature vector from `anchor` (O_all), sorted by
// score descending with identifier-ascending tie-break. Backward ranking
// walks the reversed feature paths from the anchor.
std::vector<RankedCandidate> rank_candidates(const PraModel& model, const KnowledgeGraph& kg,
                                             const std::string& anchor, Direction dir);

// rank_eps1 bucket formula with the calibrated middle term exposed as `hyper`.
RankThresholds compute_thresholds(std::vector<double> o_kg_scores, std::size_t o_all_size,
                                  double hyper = 5.0);

std::vector<std::string> candidate_set(const std::vector<RankedCandidate>& ranked,
                                       const RankThresholds& thresholds);

struct TruthPath {
    std::string path;
    double contribution = 0.0;
};

struct VerdictResult {
    bool is_true = false;
    std::optional<std::size_t> object_rank;   // rank of o among forward candidates of s
    std::optional<std::size_t> subject_rank;  // rank of s among backward candidates of o
    std::vector<TruthPath> truth_paths;
};

VerdictResult verdict(const PraModel& model, const KnowledgeGraph& kg, const Triplet& triplet,
                      const RankThresholds& thresholds_s, const RankThresholds& thresholds_o,
                      std::size_t truth_paths_k = 3);

struct RetrievalMetrics {
    double mrr = 0.0;
    double map = 0.0;
};

RetrievalMetrics evaluate(const PraModel& model, const KnowledgeGraph& kg,
                          const std::vector<Triplet>& held_out);

}  // namespace veridex
