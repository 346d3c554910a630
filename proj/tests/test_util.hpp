#pragma once
// Shared test helpers: temp files, random graphs, independent oracles, and a
// central-finite-difference gradient checker.

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "okgllm/autodiff.hpp"
#include "okgllm/graph.hpp"

namespace testutil {

inline std::string tmp_path(const std::string& name) {
    static const std::string dir = [] {
        auto d = std::filesystem::temp_directory_path() / "okgllm_tests";
        std::filesystem::create_directories(d);
        return d.string();
    }();
    return dir + "/" + name;
}

inline Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c,
                                     std::mt19937_64& rng, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = dist(rng);
    return m;
}

// Random connected-ish graph over <= n entities with random triples.
inline okgllm::KnowledgeGraph random_graph(int n, int m, std::mt19937_64& rng) {
    std::vector<okgllm::Entity> entities;
    for (int i = 0; i < n; ++i) {
        okgllm::Entity e;
        e.id = "e" + std::to_string(i);
        e.kind = okgllm::EntityKind::Sea;
        e.description = "entity " + std::to_string(i);
        entities.push_back(e);
    }
    std::vector<okgllm::Relation> relations{{"r0", "rel_zero", ""},
                                            {"r1", "rel_one", ""}};
    std::uniform_int_distribution<int> ent(0, n - 1), rel(0, 1);
    std::vector<okgllm::Triple> triples;
    for (int i = 0; i < m; ++i)
        triples.push_back({"e" + std::to_string(ent(rng)),
                           "r" + std::to_string(rel(rng)),
                           "e" + std::to_string(ent(rng)), ""});
    return okgllm::KnowledgeGraph(std::move(entities), std::move(relations),
                                  std::move(triples));
}

// Independent BFS-with-depth-cap oracle: a triple belongs to the k-hop
// neighborhood iff one of its endpoints lies within distance k-1 of `start`.
inline std::set<okgllm::Triple> bfs_oracle(const okgllm::KnowledgeGraph& g,
                                           const std::string& start, int k) {
    std::unordered_map<std::string, int> dist{{start, 0}};
    std::deque<std::string> q{start};
    while (!q.empty()) {
        std::string cur = q.front();
        q.pop_front();
        for (std::size_t idx : g.incident(cur)) {
            const auto& t = g.triples()[idx];
            for (const std::string& other : {t.head, t.tail}) {
                if (!dist.count(other)) {
                    dist[other] = dist[cur] + 1;
                    q.push_back(other);
                }
            }
        }
    }
    std::set<okgllm::Triple> out;
    if (k <= 0) return out;
    for (const auto& t : g.triples()) {
        int dh = dist.count(t.head) ? dist[t.head] : std::numeric_limits<int>::max();
        int dt = dist.count(t.tail) ? dist[t.tail] : std::numeric_limits<int>::max();
        if (std::min(dh, dt) <= k - 1) out.insert(t);
    }
    return out;
}

// Row-softmax attention oracle with explicit loops (no Eigen reductions).
inline Eigen::MatrixXd attention_oracle(const Eigen::MatrixXd& queries,
                                        const Eigen::MatrixXd& keys,
                                        const Eigen::MatrixXd& w_q,
                                        const Eigen::MatrixXd& w_k,
                                        const Eigen::MatrixXd& w_v,
                                        Eigen::MatrixXd* weights_out = nullptr,
                                        const Eigen::MatrixXd* mask = nullptr) {
    Eigen::MatrixXd Q = queries * w_q, K = keys * w_k, V = keys * w_v;
    double scale = 1.0 / std::sqrt(static_cast<double>(w_q.cols()));
    Eigen::MatrixXd weights(Q.rows(), K.rows());
    for (Eigen::Index i = 0; i < Q.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < K.rows(); ++j) {
            double logit = Q.row(i).dot(K.row(j)) * scale;
            if (mask) logit += (*mask)(i, j);
            weights(i, j) = logit;
            mx = std::max(mx, logit);
        }
        double sum = 0.0;
        for (Eigen::Index j = 0; j < K.rows(); ++j) {
            weights(i, j) = std::exp(weights(i, j) - mx);
            sum += weights(i, j);
        }
        for (Eigen::Index j = 0; j < K.rows(); ++j) weights(i, j) /= sum;
    }
    if (weights_out) *weights_out = weights;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Q.rows(), V.cols());
    for (Eigen::Index i = 0; i < Q.rows(); ++i)
        for (Eigen::Index j = 0; j < K.rows(); ++j)
            out.row(i) += weights(i, j) * V.row(j);
    return out;
}

// Maximum relative error between the analytic gradient of `param` and central
// finite differences of the scalar loss built by `build_loss`. Checks at most
// `max_probes` entries.
inline double grad_check(const okgllm::ad::Var& param,
                         const std::function<okgllm::ad::Var()>& build_loss,
                         std::mt19937_64& rng, int max_probes = 8,
                         double h = 1e-6) {
    okgllm::ad::Var loss = build_loss();
    param->zero_grad();
    okgllm::ad::backward(loss);
    Eigen::MatrixXd analytic = param->grad;

    double worst = 0.0;
    std::uniform_int_distribution<Eigen::Index> ri(0, param->value.rows() - 1);
    std::uniform_int_distribution<Eigen::Index> ci(0, param->value.cols() - 1);
    for (int probe = 0; probe < max_probes; ++probe) {
        Eigen::Index i = ri(rng), j = ci(rng);
        double saved = param->value(i, j);
        param->value(i, j) = saved + h;
        double up = okgllm::ad::scalar(build_loss());
        param->value(i, j) = saved - h;
        double dn = okgllm::ad::scalar(build_loss());
        param->value(i, j) = saved;
        double numeric = (up - dn) / (2.0 * h);
        double denom = std::max({std::abs(numeric), std::abs(analytic(i, j)), 1e-8});
        worst = std::max(worst, std::abs(numeric - analytic(i, j)) / denom);
    }
    return worst;
}

}  // namespace testutil
