#include "okgllm/transe.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <set>
#include <tuple>

#include "okgllm/errors.hpp"

namespace okgllm {

void TransEConfig::validate() const {
    if (d <= 0) throw ConfigError("transe: d must be positive");
    if (gamma <= 0.0) throw ConfigError("transe: gamma must be positive");
    if (p != 1 && p != 2) throw ConfigError("transe: p must be 1 or 2");
    if (negatives_per_positive <= 0)
        throw ConfigError("transe: negatives_per_positive must be positive");
    if (epochs < 0) throw ConfigError("transe: epochs must be nonnegative");
    if (learning_rate <= 0.0) throw ConfigError("transe: learning_rate must be positive");
    if (batch_size <= 0) throw ConfigError("transe: batch_size must be positive");
}

const Eigen::VectorXd& EmbeddingTable::entity(const std::string& id) const {
    auto it = entity_vectors.find(id);
    if (it == entity_vectors.end())
        throw LookupError("no embedding for entity '" + id + "'");
    return it->second;
}

const Eigen::VectorXd& EmbeddingTable::relation(const std::string& id) const {
    auto it = relation_vectors.find(id);
    if (it == relation_vectors.end())
        throw LookupError("no embedding for relation '" + id + "'");
    return it->second;
}

std::uint64_t EmbeddingTable::checksum() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix_bytes = [&h](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& [id, v] : entity_vectors) {
        mix_bytes(id.data(), id.size());
        mix_bytes(v.data(), sizeof(double) * v.size());
    }
    for (const auto& [id, v] : relation_vectors) {
        mix_bytes(id.data(), id.size());
        mix_bytes(v.data(), sizeof(double) * v.size());
    }
    return h;
}

namespace {

void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
void write_string(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::string read_string(std::istream& in) {
    std::string s(read_u64(in), '\0');
    in.read(s.data(), static_cast<std::streamsize>(s.size()));
    return s;
}
void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
    write_u64(out, static_cast<std::uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double) * v.size()));
}
Eigen::VectorXd read_vector(std::istream& in) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(read_u64(in)));
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
    return v;
}

constexpr std::uint64_t kTableMagic = 0x4f4b474b47454d42ull;  // "OKGKGEMB"

}  // namespace

void EmbeddingTable::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_u64(out, kTableMagic);
    write_u64(out, static_cast<std::uint64_t>(d));
    write_u64(out, static_cast<std::uint64_t>(p));
    out.write(reinterpret_cast<const char*>(&gamma), sizeof(gamma));
    write_u64(out, seed);
    write_u64(out, static_cast<std::uint64_t>(epochs_trained));
    write_u64(out, frozen ? 1 : 0);
    write_u64(out, entity_vectors.size());
    for (const auto& [id, v] : entity_vectors) {
        write_string(out, id);
        write_vector(out, v);
    }
    write_u64(out, relation_vectors.size());
    for (const auto& [id, v] : relation_vectors) {
        write_string(out, id);
        write_vector(out, v);
    }
}

EmbeddingTable EmbeddingTable::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    if (read_u64(in) != kTableMagic)
        throw DataError("'" + path + "' is not an embedding table file");
    EmbeddingTable t;
    t.d = static_cast<int>(read_u64(in));
    t.p = static_cast<int>(read_u64(in));
    in.read(reinterpret_cast<char*>(&t.gamma), sizeof(t.gamma));
    t.seed = read_u64(in);
    t.epochs_trained = static_cast<int>(read_u64(in));
    t.frozen = read_u64(in) != 0;
    std::uint64_t ne = read_u64(in);
    for (std::uint64_t i = 0; i < ne; ++i) {
        std::string id = read_string(in);
        t.entity_vectors[id] = read_vector(in);
    }
    std::uint64_t nr = read_u64(in);
    for (std::uint64_t i = 0; i < nr; ++i) {
        std::string id = read_string(in);
        t.relation_vectors[id] = read_vector(in);
    }
    if (!in) throw DataError("truncated embedding table '" + path + "'");
    return t;
}

double transe_score(const Eigen::VectorXd& h, const Eigen::VectorXd& r,
                    const Eigen::VectorXd& t, int p) {
    if (h.size() != r.size() || h.size() != t.size())
        throw ShapeError("transe_score: dimension mismatch");
    Eigen::VectorXd diff = h + r - t;
    return p == 1 ? diff.lpNorm<1>() : diff.norm();
}

std::vector<Triple> sample_negatives(const KnowledgeGraph& g, const Triple& triple,
                                     int n, std::mt19937_64& rng,
                                     std::size_t* fallback_warnings) {
    const auto& entities = g.entities();
    if (entities.size() < 2)
        throw DataError("negative sampling needs at least 2 entities");
    if (n < 1) throw ConfigError("negative sampling: n must be >= 1");

    std::set<std::tuple<std::string, std::string, std::string>> positives;
    for (const auto& t : g.triples())
        positives.emplace(t.head, t.relation, t.tail);

    std::uniform_int_distribution<std::size_t> pick_entity(0, entities.size() - 1);
    std::uniform_int_distribution<int> pick_slot(0, 1);

    std::vector<Triple> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Triple cand;
        bool accepted = false;
        for (int attempt = 0; attempt < 100; ++attempt) {
            cand = triple;
            const std::string& repl = entities[pick_entity(rng)].id;
            if (pick_slot(rng) == 0)
                cand.head = repl;
            else
                cand.tail = repl;
            if (cand.head == triple.head && cand.tail == triple.tail) continue;
            if (!positives.count({cand.head, cand.relation, cand.tail})) {
                accepted = true;
                break;
            }
        }
        if (!accepted && fallback_warnings) ++*fallback_warnings;
        out.push_back(std::move(cand));
    }
    return out;
}

double margin_loss(const std::vector<double>& pos_scores,
                   const std::vector<double>& neg_scores, double gamma) {
    if (pos_scores.size() != neg_scores.size())
        throw ShapeError("margin_loss: pos/neg lists differ in length");
    if (gamma <= 0.0) throw ConfigError("margin_loss: gamma must be positive");
    if (pos_scores.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < pos_scores.size(); ++i)
        total += std::max(0.0, gamma + pos_scores[i] - neg_scores[i]);
    return total / static_cast<double>(pos_scores.size());
}

namespace {

// d||v||_p / dv with the subgradient sign(0) = 0 for p = 1.
Eigen::VectorXd norm_grad(const Eigen::VectorXd& v, int p) {
    if (p == 1) return v.array().sign().matrix();
    double n = v.norm();
    if (n < 1e-300) return Eigen::VectorXd::Zero(v.size());
    return v / n;
}

}  // namespace

MarginPairGrad margin_pair_grad(const Eigen::VectorXd& h, const Eigen::VectorXd& r,
                                const Eigen::VectorXd& t, const Eigen::VectorXd& h_neg,
                                const Eigen::VectorXd& t_neg, double gamma, int p) {
    MarginPairGrad out;
    Eigen::Index d = h.size();
    out.dh = Eigen::VectorXd::Zero(d);
    out.dr = Eigen::VectorXd::Zero(d);
    out.dt = Eigen::VectorXd::Zero(d);
    out.dh_neg = Eigen::VectorXd::Zero(d);
    out.dt_neg = Eigen::VectorXd::Zero(d);

    double f_pos = transe_score(h, r, t, p);
    double f_neg = transe_score(h_neg, r, t_neg, p);
    double hinge = gamma + f_pos - f_neg;
    if (hinge <= 0.0) return out;

    out.loss = hinge;
    Eigen::VectorXd g_pos = norm_grad(h + r - t, p);
    Eigen::VectorXd g_neg = norm_grad(h_neg + r - t_neg, p);
    out.dh = g_pos;
    out.dt = -g_pos;
    out.dh_neg = -g_neg;
    out.dt_neg = g_neg;
    out.dr = g_pos - g_neg;
    return out;
}

PretrainResult pretrain(const KnowledgeGraph& g, const TransEConfig& cfg) {
    cfg.validate();
    if (g.entities().empty() || g.triples().empty())
        throw DataError("pretrain: graph has no entities or no triples");

    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> init(-6.0 / std::sqrt(cfg.d),
                                                6.0 / std::sqrt(cfg.d));

    PretrainResult result;
    EmbeddingTable& table = result.table;
    table.d = cfg.d;
    table.p = cfg.p;
    table.gamma = cfg.gamma;
    table.seed = cfg.seed;

    auto random_vec = [&] {
        Eigen::VectorXd v(cfg.d);
        for (int i = 0; i < cfg.d; ++i) v(i) = init(rng);
        return v;
    };
    for (const auto& e : g.entities()) {
        Eigen::VectorXd v = random_vec();
        table.entity_vectors[e.id] = v.normalized();
    }
    for (const auto& r : g.relations()) table.relation_vectors[r.id] = random_vec();

    std::vector<std::size_t> order(g.triples().size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t pair_count = 0;

        for (std::size_t batch_start = 0; batch_start < order.size();
             batch_start += static_cast<std::size_t>(cfg.batch_size)) {
            std::size_t batch_end = std::min(
                order.size(), batch_start + static_cast<std::size_t>(cfg.batch_size));

            // Accumulate the batch gradient, then apply one SGD step.
            std::map<std::string, Eigen::VectorXd> ent_grad, rel_grad;
            std::size_t batch_pairs = 0;
            for (std::size_t bi = batch_start; bi < batch_end; ++bi) {
                const Triple& pos = g.triples()[order[bi]];
                auto negatives =
                    sample_negatives(g, pos, cfg.negatives_per_positive, rng,
                                     &result.negative_fallback_warnings);
                for (const Triple& neg : negatives) {
                    auto pg = margin_pair_grad(
                        table.entity_vectors.at(pos.head),
                        table.relation_vectors.at(pos.relation),
                        table.entity_vectors.at(pos.tail),
                        table.entity_vectors.at(neg.head),
                        table.entity_vectors.at(neg.tail), cfg.gamma, cfg.p);
                    epoch_loss += pg.loss;
                    ++pair_count;
                    ++batch_pairs;
                    if (pg.loss == 0.0) continue;
                    auto acc = [&](std::map<std::string, Eigen::VectorXd>& m,
                                   const std::string& id, const Eigen::VectorXd& v) {
                        auto [it, fresh] = m.try_emplace(id, v);
                        if (!fresh) it->second += v;
                    };
                    acc(ent_grad, pos.head, pg.dh);
                    acc(ent_grad, pos.tail, pg.dt);
                    acc(ent_grad, neg.head, pg.dh_neg);
                    acc(ent_grad, neg.tail, pg.dt_neg);
                    acc(rel_grad, pos.relation, pg.dr);
                }
            }
            if (batch_pairs == 0) continue;
            double scale = cfg.learning_rate / static_cast<double>(batch_pairs);
            for (const auto& [id, gvec] : ent_grad)
                table.entity_vectors[id] -= scale * gvec;
            for (const auto& [id, gvec] : rel_grad)
                table.relation_vectors[id] -= scale * gvec;
        }

        // Unit-renormalize entities after each epoch; relations stay free.
        for (auto& [id, v] : table.entity_vectors) {
            double n = v.norm();
            if (n > 1e-12) v /= n;
        }
        result.epoch_mean_loss.push_back(
            pair_count ? epoch_loss / static_cast<double>(pair_count) : 0.0);
    }

    table.epochs_trained = cfg.epochs;
    table.frozen = true;
    return result;
}

double filtered_mean_rank(const KnowledgeGraph& g, const EmbeddingTable& table,
                          const std::vector<Triple>& test_triples) {
    if (test_triples.empty()) throw DataError("filtered_mean_rank: no test triples");

    std::set<std::tuple<std::string, std::string, std::string>> positives;
    for (const auto& t : g.triples())
        positives.emplace(t.head, t.relation, t.tail);
    for (const auto& t : test_triples)
        positives.emplace(t.head, t.relation, t.tail);

    double total_rank = 0.0;
    for (const auto& t : test_triples) {
        const auto& h = table.entity(t.head);
        const auto& r = table.relation(t.relation);
        double true_score = transe_score(h, r, table.entity(t.tail), table.p);
        std::size_t rank = 1;
        for (const auto& cand : g.entities()) {
            if (cand.id == t.tail) continue;
            if (positives.count({t.head, t.relation, cand.id})) continue;  // filtered
            if (transe_score(h, r, table.entity(cand.id), table.p) < true_score)
                ++rank;
        }
        total_rank += static_cast<double>(rank);
    }
    return total_rank / static_cast<double>(test_triples.size());
}

}  // namespace okgllm
