#include "okgllm/graph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include "okgllm/errors.hpp"

namespace okgllm {

const char* to_string(EntityKind k) {
    switch (k) {
        case EntityKind::Region: return "Region";
        case EntityKind::Sea: return "Sea";
        case EntityKind::Ocean: return "Ocean";
        case EntityKind::Current: return "Current";
        case EntityKind::Monsoon: return "Monsoon";
    }
    return "?";
}

EntityKind entity_kind_from_string(const std::string& s) {
    if (s == "Region") return EntityKind::Region;
    if (s == "Sea") return EntityKind::Sea;
    if (s == "Ocean") return EntityKind::Ocean;
    if (s == "Current") return EntityKind::Current;
    if (s == "Monsoon") return EntityKind::Monsoon;
    throw ParseError("<kind>", 0, "unknown entity kind '" + s + "'");
}

KnowledgeGraph::KnowledgeGraph(std::vector<Entity> entities,
                               std::vector<Relation> relations,
                               std::vector<Triple> triples)
    : entities_(std::move(entities)),
      relations_(std::move(relations)),
      triples_(std::move(triples)) {
    for (std::size_t i = 0; i < entities_.size(); ++i) {
        if (!entity_index_.emplace(entities_[i].id, i).second)
            throw IntegrityError("duplicate entity id '" + entities_[i].id + "'");
        if (entities_[i].kind == EntityKind::Region && !entities_[i].coords)
            throw IntegrityError("region '" + entities_[i].id + "' has no coordinates");
    }
    for (std::size_t i = 0; i < relations_.size(); ++i) {
        if (!relation_index_.emplace(relations_[i].id, i).second)
            throw IntegrityError("duplicate relation id '" + relations_[i].id + "'");
    }

    // Collapse exact duplicate triples, keeping first occurrence.
    std::set<Triple> seen;
    std::vector<Triple> unique;
    unique.reserve(triples_.size());
    for (auto& t : triples_) {
        if (!entity_index_.count(t.head))
            throw IntegrityError("triple head '" + t.head + "' not in entity set");
        if (!entity_index_.count(t.tail))
            throw IntegrityError("triple tail '" + t.tail + "' not in entity set");
        if (!relation_index_.count(t.relation))
            throw IntegrityError("triple relation '" + t.relation + "' not in relation set");
        if (seen.insert(t).second)
            unique.push_back(std::move(t));
        else
            ++duplicates_collapsed_;
    }
    triples_ = std::move(unique);

    for (std::size_t i = 0; i < triples_.size(); ++i) {
        adjacency_[triples_[i].head].push_back(i);
        if (triples_[i].tail != triples_[i].head)
            adjacency_[triples_[i].tail].push_back(i);
    }
}

const Entity& KnowledgeGraph::entity(const std::string& id) const {
    auto it = entity_index_.find(id);
    if (it == entity_index_.end()) throw LookupError("unknown entity '" + id + "'");
    return entities_[it->second];
}

const Relation& KnowledgeGraph::relation(const std::string& id) const {
    auto it = relation_index_.find(id);
    if (it == relation_index_.end()) throw LookupError("unknown relation '" + id + "'");
    return relations_[it->second];
}

const std::vector<std::size_t>& KnowledgeGraph::incident(const std::string& entity_id) const {
    static const std::vector<std::size_t> kEmpty;
    auto it = adjacency_.find(entity_id);
    return it == adjacency_.end() ? kEmpty : it->second;
}

GraphStats KnowledgeGraph::stats() const {
    GraphStats s;
    for (const auto& e : entities_) ++s.per_kind[e.kind];
    s.entities = entities_.size();
    s.triples = triples_.size();
    return s;
}

std::set<Triple> KnowledgeGraph::k_hop_neighborhood(const std::string& entity_id,
                                                    int k) const {
    if (!has_entity(entity_id)) throw LookupError("unknown entity '" + entity_id + "'");
    std::set<Triple> result;
    if (k <= 0) return result;

    // BFS over the undirected triple incidence, depth-capped at k.
    std::unordered_map<std::string, int> depth{{entity_id, 0}};
    std::deque<std::string> frontier{entity_id};
    while (!frontier.empty()) {
        std::string cur = std::move(frontier.front());
        frontier.pop_front();
        int d = depth[cur];
        if (d >= k) continue;
        for (std::size_t idx : incident(cur)) {
            const Triple& t = triples_[idx];
            result.insert(t);
            const std::string& other = (t.head == cur) ? t.tail : t.head;
            if (!depth.count(other)) {
                depth[other] = d + 1;
                frontier.push_back(other);
            }
        }
    }
    return result;
}

std::string KnowledgeGraph::verbalize(const std::string& entity_id, int k,
                                      std::optional<double> mean_sst) const {
    const Entity& e = entity(entity_id);
    std::ostringstream out;
    bool first = true;
    auto append = [&](const std::string& s) {
        if (s.empty()) return;
        if (!first) out << "\n";
        out << s;
        first = false;
    };
    if (e.kind == EntityKind::Region && mean_sst) {
        std::ostringstream line;
        line << "(" << e.id << ", has temperature, " << *mean_sst << " degC)";
        append(line.str());
    }
    append(e.description);
    // k_hop_neighborhood returns a std::set<Triple> ordered by (head, relation,
    // tail); re-sort into the canonical (relation, head, tail) order.
    auto hood = k_hop_neighborhood(entity_id, k);
    std::vector<const Triple*> ordered;
    ordered.reserve(hood.size());
    for (const auto& t : hood) ordered.push_back(&t);
    std::sort(ordered.begin(), ordered.end(), [](const Triple* a, const Triple* b) {
        return std::tie(a->relation, a->head, a->tail) <
               std::tie(b->relation, b->head, b->tail);
    });
    for (const Triple* t : ordered) {
        if (!t->description.empty()) {
            append(t->description);
        } else {
            std::ostringstream line;
            line << "(" << t->head << ", " << relation(t->relation).name << ", "
                 << t->tail << ")";
            append(line.str());
        }
    }
    return out.str();
}

std::vector<std::string> KnowledgeGraph::region_ids() const {
    std::vector<std::string> ids;
    for (const auto& e : entities_)
        if (e.kind == EntityKind::Region) ids.push_back(e.id);
    return ids;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find('\t', start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return fields;
}

double parse_double(const std::string& file, std::size_t line_no, const std::string& s) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(file, line_no, "bad numeric field '" + s + "'");
    }
}

// Applies fn(line_number, fields) to every nonempty, non-comment line.
template <typename Fn>
void for_each_record(const std::string& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        fn(line_no, split_tabs(line));
    }
}

}  // namespace

KnowledgeGraph load_triples(const std::string& entity_file,
                            const std::string& relation_file,
                            const std::string& triple_file) {
    std::vector<Entity> entities;
    for_each_record(entity_file, [&](std::size_t n, const std::vector<std::string>& f) {
        if (f.size() != 5)
            throw ParseError(entity_file, n, "expected 5 tab-separated fields, got " +
                                                 std::to_string(f.size()));
        Entity e;
        e.id = f[0];
        try {
            e.kind = entity_kind_from_string(f[1]);
        } catch (const ParseError&) {
            throw ParseError(entity_file, n, "unknown entity kind '" + f[1] + "'");
        }
        if (!f[2].empty() || !f[3].empty()) {
            if (f[2].empty() || f[3].empty())
                throw ParseError(entity_file, n, "lat/lon must both be present or both empty");
            e.coords = Coordinates{parse_double(entity_file, n, f[2]),
                                   parse_double(entity_file, n, f[3])};
        }
        e.description = f[4];
        if (e.kind == EntityKind::Region && !e.coords)
            throw ParseError(entity_file, n, "region '" + e.id + "' missing coordinates");
        entities.push_back(std::move(e));
    });

    std::vector<Relation> relations;
    for_each_record(relation_file, [&](std::size_t n, const std::vector<std::string>& f) {
        if (f.size() != 3)
            throw ParseError(relation_file, n, "expected 3 tab-separated fields");
        if (f[1].empty()) throw ParseError(relation_file, n, "relation name is empty");
        relations.push_back(Relation{f[0], f[1], f[2]});
    });

    std::vector<Triple> triples;
    for_each_record(triple_file, [&](std::size_t n, const std::vector<std::string>& f) {
        if (f.size() != 4)
            throw ParseError(triple_file, n, "expected 4 tab-separated fields");
        triples.push_back(Triple{f[0], f[1], f[2], f[3]});
    });

    return KnowledgeGraph(std::move(entities), std::move(relations), std::move(triples));
}

void save_graph(const KnowledgeGraph& g, const std::string& entity_file,
                const std::string& relation_file, const std::string& triple_file) {
    std::ofstream ef(entity_file);
    if (!ef) throw DataError("cannot write '" + entity_file + "'");
    for (const auto& e : g.entities()) {
        ef << e.id << '\t' << to_string(e.kind) << '\t';
        if (e.coords)
            ef << e.coords->lat << '\t' << e.coords->lon;
        else
            ef << '\t';
        ef << '\t' << e.description << '\n';
    }
    std::ofstream rf(relation_file);
    if (!rf) throw DataError("cannot write '" + relation_file + "'");
    for (const auto& r : g.relations())
        rf << r.id << '\t' << r.name << '\t' << r.description << '\n';
    std::ofstream tf(triple_file);
    if (!tf) throw DataError("cannot write '" + triple_file + "'");
    for (const auto& t : g.triples())
        tf << t.head << '\t' << t.relation << '\t' << t.tail << '\t' << t.description
           << '\n';
}

BoundaryTable load_boundaries(const std::string& boundary_file) {
    BoundaryTable table;
    for_each_record(boundary_file, [&](std::size_t n, const std::vector<std::string>& f) {
        if (f.size() != 6)
            throw ParseError(boundary_file, n, "expected 6 tab-separated fields");
        double lat_min = parse_double(boundary_file, n, f[1]);
        double lat_max = parse_double(boundary_file, n, f[2]);
        double lon_min = parse_double(boundary_file, n, f[3]);
        double lon_max = parse_double(boundary_file, n, f[4]);
        bool wraps = f[5] == "1";
        if (lat_min > lat_max)
            throw ParseError(boundary_file, n, "lat_min > lat_max");
        if (wraps) {
            // Split an antimeridian-crossing box into two plain boxes.
            table.boxes.push_back({f[0], lat_min, lat_max, lon_min, 180.0});
            table.boxes.push_back({f[0], lat_min, lat_max, -180.0, lon_max});
        } else {
            table.boxes.push_back({f[0], lat_min, lat_max, lon_min, lon_max});
        }
    });
    return table;
}

std::set<Triple> build_region_mapping(const std::vector<Entity>& regions,
                                      const BoundaryTable& boundaries,
                                      const Relation& relation,
                                      const KnowledgeGraph& g) {
    for (const auto& box : boundaries.boxes)
        if (!g.has_entity(box.entity_id))
            throw IntegrityError("boundary references unknown entity '" + box.entity_id +
                                 "'");
    std::set<Triple> out;
    for (const auto& region : regions) {
        if (!region.coords)
            throw IntegrityError("region '" + region.id + "' has no coordinates");
        for (const auto& box : boundaries.boxes) {
            if (box.contains(*region.coords)) {
                std::ostringstream desc;
                desc << "(" << region.id << ", " << relation.name << ", "
                     << box.entity_id << ")";
                out.insert(Triple{region.id, relation.id, box.entity_id, desc.str()});
            }
        }
    }
    return out;
}

}  // namespace okgllm
