#include "gcat/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <unordered_set>

#include "gcat/errors.hpp"

namespace gcat {

std::uint32_t Vocab::intern(std::string_view name) {
    auto key = std::string(name);
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    auto id = static_cast<std::uint32_t>(names_.size());
    names_.push_back(key);
    index_.emplace(std::move(key), id);
    return id;
}

std::optional<std::uint32_t> Vocab::find(std::string_view name) const {
    if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
    return std::nullopt;
}

const std::string& Vocab::name(std::uint32_t id) const {
    if (id >= names_.size()) throw IndexError("Vocab: id " + std::to_string(id) + " out of range");
    return names_[id];
}

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
    std::uint64_t h = (static_cast<std::uint64_t>(t.head) << 32) ^ t.tail;
    h ^= static_cast<std::uint64_t>(t.relation) * 0x9E3779B97F4A7C15ull;
    h ^= h >> 29;
    h *= 0xBF58476D1CE4E5B9ull;
    return static_cast<std::size_t>(h ^ (h >> 32));
}

WeightedGraph::WeightedGraph(std::size_t num_vertices, std::vector<Edge> edges)
    : num_vertices_(num_vertices), edges_(std::move(edges)) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& e : edges_) {
        if (e.i >= num_vertices_ || e.j >= num_vertices_) {
            throw IndexError("WeightedGraph: edge endpoint out of range");
        }
        if (e.i == e.j) throw InvalidConfigError("WeightedGraph: self loop");
        if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
            throw InvalidConfigError("WeightedGraph: weight must be finite and nonnegative");
        }
        if (!seen.emplace(std::min(e.i, e.j), std::max(e.i, e.j)).second) {
            throw InvalidConfigError("WeightedGraph: repeated edge");
        }
    }
}

WeightedGraph example_weighted_graph() {
    // Labels 1..9 in the example become ids 0..8.
    auto e = [](std::size_t a, std::size_t b, double w) {
        return WeightedGraph::Edge{a - 1, b - 1, w};
    };
    return WeightedGraph(9, {e(1, 3, 1.5), e(1, 2, 1.2), e(2, 3, 0.8), e(3, 4, 0.3),
                             e(4, 6, 1.0), e(4, 5, 1.5), e(5, 6, 0.6), e(6, 7, 0.2),
                             e(7, 8, 1.5), e(7, 9, 1.0)});
}

std::vector<double> first_order_vector(const WeightedGraph& g, std::size_t v) {
    if (v >= g.num_vertices()) throw IndexError("first_order_vector: vertex out of range");
    std::vector<double> s(g.num_vertices(), 0.0);
    for (const auto& e : g.edges()) {
        if (e.i == v) s[e.j] = e.weight;
        if (e.j == v) s[e.i] = e.weight;
    }
    return s;
}

std::optional<double> second_order_proximity(const WeightedGraph& g, std::size_t i, std::size_t j) {
    auto si = first_order_vector(g, i);
    auto sj = first_order_vector(g, j);
    double dot = 0.0, ni = 0.0, nj = 0.0;
    for (std::size_t k = 0; k < si.size(); ++k) {
        dot += si[k] * sj[k];
        ni += si[k] * si[k];
        nj += sj[k] * sj[k];
    }
    if (ni == 0.0 || nj == 0.0) return std::nullopt;
    return dot / (std::sqrt(ni) * std::sqrt(nj));
}

KnowledgeGraph::KnowledgeGraph(Vocab entities, Vocab relations, const std::vector<Triple>& triples)
    : entities_(std::move(entities)),
      relations_(std::move(relations)),
      out_adjacency_(entities_.size()) {
    std::unordered_set<Triple, TripleHash> seen;
    triples_.reserve(triples.size());
    for (const auto& t : triples) {
        if (t.head >= entities_.size() || t.tail >= entities_.size() ||
            t.relation >= relations_.size()) {
            throw IndexError("KnowledgeGraph: triple id out of range");
        }
        if (!seen.insert(t).second) continue;
        triples_.push_back(t);
        out_adjacency_[t.head].push_back({t.relation, t.tail});
    }
}

KnowledgeGraph build_graph(const std::vector<RawTriple>& raw_triples) {
    if (raw_triples.empty()) throw EmptyDatasetError("build_graph: no triples");
    Vocab entities, relations;
    std::vector<Triple> triples;
    triples.reserve(raw_triples.size());
    for (const auto& raw : raw_triples) {
        for (const auto& field : raw) {
            if (field.empty()) throw InvalidConfigError("build_graph: empty field");
        }
        Triple t;
        t.head = entities.intern(raw[0]);
        t.relation = relations.intern(raw[1]);
        t.tail = entities.intern(raw[2]);
        triples.push_back(t);
    }
    return KnowledgeGraph(std::move(entities), std::move(relations), triples);
}

std::size_t NeighborhoodIndex::total_entries() const noexcept {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.size();
    return n;
}

namespace {

void extend_paths(const KnowledgeGraph& kg, EntityId at, std::size_t remaining,
                  std::vector<RelationId>& path, std::vector<NeighborEntry>& out) {
    if (remaining == 0) return;
    for (const auto& edge : kg.out_edges(at)) {
        path.push_back(edge.relation);
        out.push_back({edge.tail, path});
        extend_paths(kg, edge.tail, remaining - 1, path, out);
        path.pop_back();
    }
}

}  // namespace

NeighborhoodIndex build_neighborhood_index(const KnowledgeGraph& kg, std::size_t n_hop) {
    if (n_hop == 0) throw InvalidConfigError("build_neighborhood_index: n_hop must be >= 1");
    std::vector<std::vector<NeighborEntry>> entries(kg.num_entities());
    std::vector<RelationId> path;
    for (EntityId e = 0; e < kg.num_entities(); ++e) {
        auto& list = entries[e];
        list.push_back({e, {}});
        extend_paths(kg, e, n_hop, path, list);
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return NeighborhoodIndex(n_hop, std::move(entries));
}

std::vector<AuxiliaryTriple> auxiliary_triples(const NeighborhoodIndex& index) {
    std::vector<AuxiliaryTriple> out;
    for (EntityId e = 0; e < index.num_entities(); ++e) {
        for (const auto& entry : index.entries(e)) {
            if (entry.path.size() >= 2) out.push_back({e, entry.path, entry.neighbor});
        }
    }
    return out;
}

}  // namespace gcat
