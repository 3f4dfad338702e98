#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gcat {

using EntityId = std::uint32_t;
using RelationId = std::uint32_t;

/// Dense, insertion-ordered string <-> id bijection.
class Vocab {
public:
    /// Returns the id of `name`, assigning the next id on first sight.
    std::uint32_t intern(std::string_view name);
    std::optional<std::uint32_t> find(std::string_view name) const;
    const std::string& name(std::uint32_t id) const;

    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

struct Triple {
    EntityId head = 0;
    RelationId relation = 0;
    EntityId tail = 0;

    friend auto operator<=>(const Triple&, const Triple&) = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept;
};

using RawTriple = std::array<std::string, 3>;

/// Undirected graph with nonnegative edge weights. Each edge is stored
/// once and queried symmetrically.
class WeightedGraph {
public:
    struct Edge {
        std::size_t i;
        std::size_t j;
        double weight;
    };

    /// Throws IndexError for out-of-range endpoints and InvalidConfigError
    /// for negative/non-finite weights, self loops, and repeated edges.
    WeightedGraph(std::size_t num_vertices, std::vector<Edge> edges);

    std::size_t num_vertices() const noexcept { return num_vertices_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

private:
    std::size_t num_vertices_;
    std::vector<Edge> edges_;
};

/// The worked proximity example: nine vertices, where the example's vertex
/// label k maps to id k - 1.
WeightedGraph example_weighted_graph();

/// Component j is the weight of edge (v, j), or 0 when there is none.
std::vector<double> first_order_vector(const WeightedGraph& g, std::size_t v);

/// Cosine similarity of two first-order vectors; nullopt when either vector
/// is all-zero (the cosine is undefined for an isolated vertex).
std::optional<double> second_order_proximity(const WeightedGraph& g, std::size_t i, std::size_t j);

struct OutEdge {
    RelationId relation;
    EntityId tail;
};

/// Entity/relation vocabularies plus a deduplicated triple store with
/// per-entity outgoing adjacency.
class KnowledgeGraph {
public:
    KnowledgeGraph() = default;

    /// Drops duplicate triples (first occurrence kept). Throws IndexError if
    /// a triple references an id outside the vocabularies.
    KnowledgeGraph(Vocab entities, Vocab relations, const std::vector<Triple>& triples);

    const Vocab& entities() const noexcept { return entities_; }
    const Vocab& relations() const noexcept { return relations_; }
    const std::vector<Triple>& triples() const noexcept { return triples_; }
    const std::vector<OutEdge>& out_edges(EntityId e) const { return out_adjacency_.at(e); }

    std::size_t num_entities() const noexcept { return entities_.size(); }
    std::size_t num_relations() const noexcept { return relations_.size(); }

private:
    Vocab entities_;
    Vocab relations_;
    std::vector<Triple> triples_;
    std::vector<std::vector<OutEdge>> out_adjacency_;
};

/// Builds vocabularies in first-appearance order (head, relation, tail per
/// line). Throws EmptyDatasetError on empty input and InvalidConfigError on
/// an empty field.
KnowledgeGraph build_graph(const std::vector<RawTriple>& raw_triples);

struct NeighborEntry {
    EntityId neighbor;
    std::vector<RelationId> path;  // empty for the self entry

    friend auto operator<=>(const NeighborEntry&, const NeighborEntry&) = default;
};

/// For each entity, every directed path of length <= n_hop as
/// (endpoint, relation path), plus the self entry. Entries of one entity are
/// sorted by (neighbor, path) and unique.
class NeighborhoodIndex {
public:
    NeighborhoodIndex(std::size_t n_hop, std::vector<std::vector<NeighborEntry>> entries)
        : n_hop_(n_hop), entries_(std::move(entries)) {}

    std::size_t n_hop() const noexcept { return n_hop_; }
    std::size_t num_entities() const noexcept { return entries_.size(); }
    const std::vector<NeighborEntry>& entries(EntityId e) const { return entries_.at(e); }
    std::size_t total_entries() const noexcept;

private:
    std::size_t n_hop_;
    std::vector<std::vector<NeighborEntry>> entries_;
};

/// Throws InvalidConfigError when n_hop == 0.
NeighborhoodIndex build_neighborhood_index(const KnowledgeGraph& kg, std::size_t n_hop);

struct AuxiliaryTriple {
    EntityId head;
    std::vector<RelationId> path;
    EntityId tail;

    friend auto operator<=>(const AuxiliaryTriple&, const AuxiliaryTriple&) = default;
};

/// Multi-hop entries (path length >= 2) of the index, in index order.
std::vector<AuxiliaryTriple> auxiliary_triples(const NeighborhoodIndex& index);

}  // namespace gcat
