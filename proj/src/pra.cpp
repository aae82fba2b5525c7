#include "veridex/pra.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace veridex {

RelationPath RelationPath::reversed() const {
    RelationPath r;
    for (auto it = steps.rbegin(); it != steps.rend(); ++it)
        r.steps.push_back({it->relation, it->dir == Direction::Forward ? Direction::Backward
                                                                       : Direction::Forward});
    return r;
}

std::string RelationPath::serialize() const {
    std::string out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i) out += '/';
        out += steps[i].relation;
        out += steps[i].dir == Direction::Forward ? ":+" : ":-";
    }
    return out;
}

RelationPath RelationPath::parse(const std::string& text) {
    RelationPath p;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, '/')) {
        if (part.size() < 3 || part[part.size() - 2] != ':')
            throw ParseError("malformed path step: " + part);
        char sign = part.back();
        if (sign != '+' && sign != '-') throw ParseError("malformed path step: " + part);
        p.steps.push_back({part.substr(0, part.size() - 2),
                           sign == '+' ? Direction::Forward : Direction::Backward});
    }
    if (p.steps.empty()) throw ParseError("empty relation path");
    return p;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void PraModel::save(std::ostream& out) const {
    out << "pra-model v1 " << relation << '\n';
    for (std::size_t i = 0; i < features.size(); ++i)
        out << features[i].serialize() << '\t' << format_double(weights[i]) << '\n';
    out << "bias\t" << format_double(bias) << '\n';
}

PraModel PraModel::load(std::istream& in, const std::string& source_name) {
    PraModel m;
    std::string line;
    if (!std::getline(in, line)) throw ParseError(source_name + ": empty model file");
    std::stringstream header(line);
    std::string tag, version;
    header >> tag >> version >> m.relation;
    if (tag != "pra-model" || version != "v1" || m.relation.empty())
        throw ParseError(source_name + ": expected header \"pra-model v1 <relation>\"");
    bool saw_bias = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw ParseError(source_name + ": expected tab-separated model line");
        std::string key = line.substr(0, tab);
        double value = 0.0;
        try {
            value = std::stod(line.substr(tab + 1));
        } catch (const std::exception&) {
            throw ParseError(source_name + ": bad numeric value for \"" + key + "\"");
        }
        if (!std::isfinite(value))
            throw ParseError(source_name + ": non-finite model weight");
        if (key == "bias") {
            m.bias = value;
            saw_bias = true;
        } else {
            if (saw_bias) throw ParseError(source_name + ": feature line after bias");
            m.features.push_back(RelationPath::parse(key));
            m.weights.push_back(value);
        }
    }
    if (!saw_bias) throw ParseError(source_name + ": missing bias line");
    return m;
}

std::vector<RelationPath> enumerate_path_types(const KnowledgeGraph& kg,
                                               const std::string& relation,
                                               int max_len, int min_support) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& t : kg.edges_for_relation(relation)) pairs.push_back({t.subject, t.object});
    if (pairs.empty()) return {};

    std::vector<PathStep> alphabet;
    for (const auto& r : kg.relations()) {
        alphabet.push_back({r, Direction::Forward});
        alphabet.push_back({r, Direction::Backward});
    }

    RelationPath trivial{{{relation, Direction::Forward}}};

    // Frontier of path prefixes with the node set reachable from each source.
    struct Prefix {
        RelationPath path;
        std::map<std::string, std::set<std::string>> reach;
    };
    std::vector<Prefix> frontier;
    {
        Prefix root;
        for (const auto& [s, o] : pairs) root.reach[s].insert(s);
        frontier.push_back(std::move(root));
    }

    std::vector<RelationPath> found;
    for (int len = 1; len <= max_len && !frontier.empty(); ++len) {
        std::vector<Prefix> next;
        for (const auto& prefix : frontier) {
            for (const auto& step : alphabet) {
                Prefix ext;
                ext.path = prefix.path;
                ext.path.steps.push_back(step);
                for (const auto& [src, nodes] : prefix.reach) {
                    std::set<std::string> out;
                    for (const auto& n : nodes) {
                        auto nbrs = kg.neighbors(n, step.relation, step.dir);
                        out.insert(nbrs.begin(), nbrs.end());
                    }
                    if (!out.empty()) ext.reach[src] = std::move(out);
                }
                int reachable_pairs = 0;
                int support = 0;
                for (const auto& [s, o] : pairs) {
                    auto it = ext.reach.find(s);
                    if (it == ext.reach.end()) continue;
                    ++reachable_pairs;
                    if (it->second.count(o)) ++support;
                }
                if (reachable_pairs < min_support) continue;  // no extension can recover
                if (support >= min_support && !(ext.path == trivial))
                    found.push_back(ext.path);
                if (len < max_len) next.push_back(std::move(ext));
            }
        }
        frontier = std::move(next);
    }
    std::sort(found.begin(), found.end());
    found.erase(std::unique(found.begin(), found.end()), found.end());
    return found;
}

namespace {

// Random-walk distribution; `excluded` names one edge the walk must not
// traverse (used to keep a training pair's own edge out of its features).
std::map<std::string, double> walk_distribution(const KnowledgeGraph& kg,
                                                const std::string& source,
                                                const RelationPath& path,
                                                const Triplet* excluded) {
    std::map<std::string, double> dist = {{source, 1.0}};
    for (const auto& step : path.steps) {
        std::map<std::string, double> next;
        for (const auto& [node, p] : dist) {
            auto nbrs = kg.neighbors(node, step.relation, step.dir);
            if (excluded && step.relation == excluded->relation) {
                if (step.dir == Direction::Forward && node == excluded->subject)
                    nbrs.erase(excluded->object);
                else if (step.dir == Direction::Backward && node == excluded->object)
                    nbrs.erase(excluded->subject);
            }
            if (nbrs.empty()) continue;  // walk dies
            double share = p / static_cast<double>(nbrs.size());
            for (const auto& n : nbrs) next[n] += share;
        }
        dist = std::move(next);
        if (dist.empty()) break;
    }
    return dist;
}

}  // namespace

std::map<std::string, double> path_distribution(const KnowledgeGraph& kg,
                                                const std::string& source,
                                                const RelationPath& path) {
    return walk_distribution(kg, source, path, nullptr);
}

double path_feature(const KnowledgeGraph& kg, const std::string& source,
                    const RelationPath& path, const std::string& target) {
    auto dist = path_distribution(kg, source, path);
    auto it = dist.find(target);
    return it == dist.end() ? 0.0 : it->second;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double logistic_objective(const TrainSet& data, std::span<const double> w, double bias,
                          double l2) {
    const std::size_t n = data.x.size();
    double obj = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = bias;
        for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * data.x[i][j];
        // log(1 + e^z) - y z, computed stably
        double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
        obj += softplus - data.y[i] * z;
    }
    obj /= static_cast<double>(n);
    for (double wj : w) obj += 0.5 * l2 * wj * wj;
    return obj;
}

void logistic_gradient(const TrainSet& data, std::span<const double> w, double bias,
                       double l2, std::span<double> grad) {
    const std::size_t n = data.x.size();
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double z = bias;
        for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * data.x[i][j];
        double delta = sigmoid(z) - data.y[i];
        for (std::size_t j = 0; j < w.size(); ++j) grad[j] += delta * data.x[i][j];
        grad[w.size()] += delta;
    }
    for (std::size_t j = 0; j <= w.size(); ++j) grad[j] /= static_cast<double>(n);
    for (std::size_t j = 0; j < w.size(); ++j) grad[j] += l2 * w[j];
}

PraModel train_pra(const KnowledgeGraph& kg, const std::string& relation,
                   const TrainConfig& config, TrainDiagnostics* diagnostics) {
    auto positives = kg.edges_for_relation(relation);
    if (positives.empty())
        throw std::invalid_argument("relation has no triplets in the graph: " + relation);
    auto features = enumerate_path_types(kg, relation, config.max_path_len, config.min_support);
    if (features.empty())
        throw std::runtime_error("no path features for relation " + relation +
                                 " (consider lowering min_support)");

    // Random-walk target distributions, one per (source, feature).
    std::map<std::string, std::vector<std::map<std::string, double>>> dists;
    for (const auto& t : positives) {
        if (dists.count(t.subject)) continue;
        auto& per_feature = dists[t.subject];
        per_feature.reserve(features.size());
        for (const auto& f : features) per_feature.push_back(path_distribution(kg, t.subject, f));
    }

    auto feature_row = [&](const std::string& s, const std::string& o) {
        std::vector<double> row(features.size(), 0.0);
        const auto& per_feature = dists.at(s);
        for (std::size_t j = 0; j < features.size(); ++j) {
            auto it = per_feature[j].find(o);
            if (it != per_feature[j].end()) row[j] = it->second;
        }
        return row;
    };

    // A positive pair's own edge is held out of its feature walks, otherwise
    // paths revisiting the edge leak the label.
    auto positive_row = [&](const Triplet& t) {
        std::vector<double> row(features.size(), 0.0);
        for (std::size_t j = 0; j < features.size(); ++j) {
            auto dist = walk_distribution(kg, t.subject, features[j], &t);
            auto it = dist.find(t.object);
            if (it != dist.end()) row[j] = it->second;
        }
        return row;
    };

    TrainSet data;
    std::mt19937_64 rng(config.seed);
    std::map<std::string, std::set<std::string>> used_negatives;
    for (const auto& t : positives) {
        data.x.push_back(positive_row(t));
        data.y.push_back(1);

        std::vector<std::string> pool;
        for (const auto& per_feature = dists.at(t.subject); const auto& d : per_feature)
            for (const auto& [target, p] : d)
                if (p > 0.0 && !kg.contains(t.subject, relation, target) &&
                    !used_negatives[t.subject].count(target))
                    pool.push_back(target);
        std::sort(pool.begin(), pool.end());
        pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
        for (int k = 0; k < config.negatives_per_positive && !pool.empty(); ++k) {
            std::size_t pick = static_cast<std::size_t>(rng() % pool.size());
            const std::string& neg = pool[pick];
            used_negatives[t.subject].insert(neg);
            data.x.push_back(feature_row(t.subject, neg));
            data.y.push_back(0);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
        }
    }

    std::vector<double> w(features.size(), 0.0);
    double bias = 0.0;
    std::vector<double> grad(features.size() + 1, 0.0);
    // Keep the best-seen parameters so the returned objective never exceeds
    // the initial one, whatever the fixed step does.
    double initial_obj = logistic_objective(data, w, bias, config.l2);
    double best_obj = initial_obj;
    std::vector<double> best_w = w;
    double best_bias = bias;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        logistic_gradient(data, w, bias, config.l2, grad);
        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= config.learning_rate * grad[j];
        bias -= config.learning_rate * grad[w.size()];
        double obj = logistic_objective(data, w, bias, config.l2);
        if (obj < best_obj) {
            best_obj = obj;
            best_w = w;
            best_bias = bias;
        }
    }
    if (diagnostics) {
        diagnostics->initial_objective = initial_obj;
        diagnostics->final_objective = best_obj;
        diagnostics->examples = data.y.size();
        diagnostics->negatives = data.y.size() - positives.size();
    }

    PraModel model;
    model.relation = relation;
    model.features = std::move(features);
    model.weights = std::move(best_w);
    model.bias = best_bias;
    return model;
}

double score(const PraModel& model, const KnowledgeGraph& kg, const std::string& s,
             const std::string& o) {
    double z = model.bias;
    for (std::size_t j = 0; j < model.features.size(); ++j)
        z += model.weights[j] * path_feature(kg, s, model.features[j], o);
    return sigmoid(z);
}

std::vector<RankedCandidate> rank_candidates(const PraModel& model, const KnowledgeGraph& kg,
                                             const std::string& anchor, Direction dir) {
    std::map<std::string, std::vector<double>> rows;
    for (std::size_t j = 0; j < model.features.size(); ++j) {
        RelationPath path =
            dir == Direction::Forward ? model.features[j] : model.features[j].reversed();
        for (const auto& [target, p] : path_distribution(kg, anchor, path)) {
            if (p <= 0.0) continue;
            auto& row = rows[target];
            row.resize(model.features.size(), 0.0);
            row[j] = p;
        }
    }
    std::vector<RankedCandidate> out;
    out.reserve(rows.size());
    for (const auto& [entity, row] : rows) {
        double z = model.bias;
        for (std::size_t j = 0; j < row.size(); ++j) z += model.weights[j] * row[j];
        out.push_back({entity, sigmoid(z), 0});
    }
    std::sort(out.begin(), out.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entity < b.entity;
    });
    for (std::size_t i = 0; i < out.size(); ++i) out[i].rank = i + 1;
    return out;
}

RankThresholds compute_thresholds(std::vector<double> o_kg_scores, std::size_t o_all_size,
                                  double hyper) {
    if (o_all_size < o_kg_scores.size())
        throw std::invalid_argument("o_all_size smaller than the O_KG score list");
    for (double s : o_kg_scores)
        if (!(s > 0.0 && s < 1.0))
            throw std::invalid_argument("PRA scores must lie strictly inside (0,1)");

    RankThresholds t;
    t.o_all_size = o_all_size;
    t.o_kg_size = o_kg_scores.size();
    if (!o_kg_scores.empty()) {
        std::sort(o_kg_scores.begin(), o_kg_scores.end());
        std::size_t n = o_kg_scores.size();
        double median = n % 2 == 1 ? o_kg_scores[n / 2]
                                   : 0.5 * (o_kg_scores[n / 2 - 1] + o_kg_scores[n / 2]);
        t.x = static_cast<double>(n) / std::max(median, 1e-9);
    }
    double bucket = t.x <= 0.25 ? 5.0 : t.x <= 0.5 ? 10.0 : t.x <= 0.75 ? 15.0 : 20.0;
    t.rank_eps1 = bucket + hyper - static_cast<double>(o_all_size) / 10000.0;
    if (t.rank_eps1 <= 0.0) {
        t.rank_eps1 = 1.0;
        t.clamped = true;
    }
    t.rank_eps2 = std::max(t.rank_eps1, 0.005 * static_cast<double>(o_all_size));
    return t;
}

std::vector<std::string> candidate_set(const std::vector<RankedCandidate>& ranked,
                                       const RankThresholds& thresholds) {
    auto cutoff = static_cast<std::size_t>(std::max(0.0, std::floor(thresholds.rank_eps1)));
    std::vector<std::string> out;
    for (const auto& rc : ranked)
        if (rc.rank <= cutoff) out.push_back(rc.entity);
    return out;
}

namespace {

std::optional<std::size_t> rank_of(const std::vector<RankedCandidate>& ranked,
                                   const std::string& entity) {
    for (const auto& rc : ranked)
        if (rc.entity == entity) return rc.rank;
    return std::nullopt;
}

std::vector<TruthPath> top_truth_paths(const PraModel& model, const KnowledgeGraph& kg,
                                       const std::string& anchor, const std::string& target,
                                       Direction dir, std::size_t k) {
    std::vector<TruthPath> paths;
    for (std::size_t j = 0; j < model.features.size(); ++j) {
        RelationPath p = dir == Direction::Forward ? model.features[j] : model.features[j].reversed();
        double f = path_feature(kg, anchor, p, target);
        if (f > 0.0) paths.push_back({model.features[j].serialize(), model.weights[j] * f});
    }
    std::sort(paths.begin(), paths.end(), [](const TruthPath& a, const TruthPath& b) {
        if (a.contribution != b.contribution) return a.contribution > b.contribution;
        return a.path < b.path;
    });
    if (paths.size() > k) paths.resize(k);
    return paths;
}

}  // namespace

VerdictResult verdict(const PraModel& model, const KnowledgeGraph& kg, const Triplet& triplet,
                      const RankThresholds& thresholds_s, const RankThresholds& thresholds_o,
                      std::size_t truth_paths_k) {
    VerdictResult v;
    auto fwd = rank_candidates(model, kg, triplet.subject, Direction::Forward);
    auto bwd = rank_candidates(model, kg, triplet.object, Direction::Backward);
    v.object_rank = rank_of(fwd, triplet.object);
    v.subject_rank = rank_of(bwd, triplet.subject);

    auto within = [](std::optional<std::size_t> rank, const RankThresholds& t) {
        return rank && static_cast<double>(*rank) <= std::floor(t.rank_eps2);
    };
    bool fwd_true = within(v.object_rank, thresholds_s);
    bool bwd_true = within(v.subject_rank, thresholds_o);
    v.is_true = fwd_true || bwd_true;
    if (v.is_true) {
        v.truth_paths = fwd_true ? top_truth_paths(model, kg, triplet.subject, triplet.object,
                                                   Direction::Forward, truth_paths_k)
                                 : top_truth_paths(model, kg, triplet.object, triplet.subject,
                                                   Direction::Backward, truth_paths_k);
    }
    return v;
}

RetrievalMetrics evaluate(const PraModel& model, const KnowledgeGraph& kg,
                          const std::vector<Triplet>& held_out) {
    if (held_out.empty()) throw std::invalid_argument("empty held-out set");
    std::map<std::string, std::set<std::string>> queries;
    for (const auto& t : held_out) {
        if (t.relation != model.relation)
            throw std::invalid_argument("held-out triplet relation differs from the model's");
        queries[t.subject].insert(t.object);
    }

    RetrievalMetrics m;
    for (const auto& [subject, correct] : queries) {
        auto ranked = rank_candidates(model, kg, subject, Direction::Forward);
        std::size_t first_correct = 0;
        std::size_t hits = 0;
        double ap = 0.0;
        for (const auto& rc : ranked) {
            if (!correct.count(rc.entity)) continue;
            ++hits;
            ap += static_cast<double>(hits) / static_cast<double>(rc.rank);
            if (first_correct == 0) first_correct = rc.rank;
        }
        if (first_correct > 0) m.mrr += 1.0 / static_cast<double>(first_correct);
        m.map += ap / static_cast<double>(correct.size());
    }
    m.mrr /= static_cast<double>(queries.size());
    m.map /= static_cast<double>(queries.size());
    return m;
}

}  // namespace veridex
