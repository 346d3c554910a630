#pragma once
// Ocean knowledge graph store: entities, relations, triples with free-text
// descriptions, an undirected incidence index for k-hop retrieval, and a
// verbalizer that renders an entity's local neighborhood as text.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace okgllm {

enum class EntityKind { Region, Sea, Ocean, Current, Monsoon };

const char* to_string(EntityKind k);
EntityKind entity_kind_from_string(const std::string& s);

struct Coordinates {
    double lat = 0.0;  // degrees, [-90, 90]
    double lon = 0.0;  // degrees, [-180, 180]
};

struct Entity {
    std::string id;
    EntityKind kind = EntityKind::Region;
    std::string description;
    std::optional<Coordinates> coords;  // required when kind == Region
};

struct Relation {
    std::string id;
    std::string name;  // located_in, part_of, influenced_by, adjacent_to, ...
    std::string description;
};

struct Triple {
    std::string head;
    std::string relation;
    std::string tail;
    std::string description;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

// One bounding box of an entity's approximate geographic extent. Boxes that
// wrap the antimeridian are split into two non-wrapping boxes at load time.
struct BoundaryBox {
    std::string entity_id;
    double lat_min = 0.0, lat_max = 0.0;
    double lon_min = 0.0, lon_max = 0.0;

    bool contains(const Coordinates& c) const {
        return c.lat >= lat_min && c.lat <= lat_max &&
               c.lon >= lon_min && c.lon <= lon_max;
    }
};

struct BoundaryTable {
    std::vector<BoundaryBox> boxes;
};

struct GraphStats {
    std::map<EntityKind, std::size_t> per_kind;
    std::size_t entities = 0;
    std::size_t triples = 0;

    std::size_t count(EntityKind k) const {
        auto it = per_kind.find(k);
        return it == per_kind.end() ? 0 : it->second;
    }
};

// Immutable after construction; safe for concurrent reads.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;
    KnowledgeGraph(std::vector<Entity> entities, std::vector<Relation> relations,
                   std::vector<Triple> triples);

    const std::vector<Entity>& entities() const { return entities_; }
    const std::vector<Relation>& relations() const { return relations_; }
    const std::vector<Triple>& triples() const { return triples_; }

    bool has_entity(const std::string& id) const { return entity_index_.count(id) > 0; }
    bool has_relation(const std::string& id) const { return relation_index_.count(id) > 0; }
    const Entity& entity(const std::string& id) const;
    const Relation& relation(const std::string& id) const;

    // Indices of triples incident to an entity (as head or tail).
    const std::vector<std::size_t>& incident(const std::string& entity_id) const;

    // How many duplicate triple lines were collapsed at load time.
    std::size_t duplicates_collapsed() const { return duplicates_collapsed_; }

    GraphStats stats() const;

    // All triples lying on an undirected path of length <= k from e.
    // k = 0 yields the empty set.
    std::set<Triple> k_hop_neighborhood(const std::string& entity_id, int k) const;

    // D(e) followed by the triple descriptions of the k-hop neighborhood in
    // canonical (relation id, head id, tail id) order, one segment per line.
    // For Region entities a mean-SST line is prepended when provided.
    std::string verbalize(const std::string& entity_id, int k,
                          std::optional<double> mean_sst = std::nullopt) const;

    // Region ids in insertion order.
    std::vector<std::string> region_ids() const;

private:
    std::vector<Entity> entities_;
    std::vector<Relation> relations_;
    std::vector<Triple> triples_;
    std::unordered_map<std::string, std::size_t> entity_index_;
    std::unordered_map<std::string, std::size_t> relation_index_;
    std::unordered_map<std::string, std::vector<std::size_t>> adjacency_;
    std::size_t duplicates_collapsed_ = 0;

    friend KnowledgeGraph load_triples(const std::string&, const std::string&,
                                       const std::string&);
};

// Tab-separated line-record files; see file docs in the README.
KnowledgeGraph load_triples(const std::string& entity_file,
                            const std::string& relation_file,
                            const std::string& triple_file);

void save_graph(const KnowledgeGraph& g, const std::string& entity_file,
                const std::string& relation_file, const std::string& triple_file);

BoundaryTable load_boundaries(const std::string& boundary_file);

// Point-in-box mapping: one (region, relation, entity) triple per region whose
// coordinates fall inside any box of that entity (boundary-inclusive).
std::set<Triple> build_region_mapping(const std::vector<Entity>& regions,
                                      const BoundaryTable& boundaries,
                                      const Relation& relation,
                                      const KnowledgeGraph& g);

}  // namespace okgllm
