#include "gcat/dataset.hpp"

#include <fstream>
#include <sstream>

#include "gcat/errors.hpp"

namespace gcat {

std::unordered_set<Triple, TripleHash> DatasetBundle::known_triples() const {
    std::unordered_set<Triple, TripleHash> known;
    known.reserve(train.size() + valid.size() + test.size());
    for (const auto* split : {&train, &valid, &test}) known.insert(split->begin(), split->end());
    return known;
}

namespace {

RawTriple parse_line(std::string_view line, const std::string& source, std::size_t line_no) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto first = line.find('\t');
    auto second = first == std::string_view::npos ? first : line.find('\t', first + 1);
    if (second == std::string_view::npos || line.find('\t', second + 1) != std::string_view::npos) {
        throw ParseError(source, line_no, "expected exactly two TAB separators");
    }
    RawTriple t{std::string(line.substr(0, first)),
                std::string(line.substr(first + 1, second - first - 1)),
                std::string(line.substr(second + 1))};
    for (const auto& field : t) {
        if (field.empty()) throw ParseError(source, line_no, "empty field");
    }
    return t;
}

}  // namespace

std::vector<RawTriple> parse_triples(const std::string& text, const std::string& source) {
    std::vector<RawTriple> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        out.push_back(parse_line(std::string_view(text).substr(pos, end - pos), source, line_no));
        pos = end + 1;
    }
    return out;
}

std::vector<RawTriple> read_triple_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return parse_triples(buf.str(), path.string());
}

DatasetBundle make_bundle(const std::vector<RawTriple>& train, const std::vector<RawTriple>& valid,
                          const std::vector<RawTriple>& test) {
    Vocab entities, relations;
    auto encode = [&](const std::vector<RawTriple>& raw) {
        std::vector<Triple> out;
        std::unordered_set<Triple, TripleHash> seen;
        out.reserve(raw.size());
        for (const auto& r : raw) {
            Triple t{entities.intern(r[0]), relations.intern(r[1]), entities.intern(r[2])};
            if (seen.insert(t).second) out.push_back(t);
        }
        return out;
    };
    DatasetBundle bundle;
    bundle.train = encode(train);
    bundle.valid = encode(valid);
    bundle.test = encode(test);
    bundle.graph = KnowledgeGraph(std::move(entities), std::move(relations), bundle.train);
    return bundle;
}

DatasetBundle load_split(const std::filesystem::path& train_path,
                         const std::filesystem::path& valid_path,
                         const std::filesystem::path& test_path) {
    return make_bundle(read_triple_file(train_path), read_triple_file(valid_path),
                       read_triple_file(test_path));
}

DatasetStats dataset_stats(const DatasetBundle& bundle) {
    DatasetStats s;
    s.entities = bundle.num_entities();
    s.relations = bundle.num_relations();
    s.train = bundle.train.size();
    s.valid = bundle.valid.size();
    s.test = bundle.test.size();
    std::unordered_set<Triple, TripleHash> seen(bundle.train.begin(), bundle.train.end());
    for (const auto* split : {&bundle.valid, &bundle.test}) {
        std::unordered_set<Triple, TripleHash> local;
        for (const auto& t : *split) {
            if (seen.count(t)) ++s.cross_split_duplicates;
            local.insert(t);
        }
        seen.insert(local.begin(), local.end());
    }
    return s;
}

void write_triple_file(const std::filesystem::path& path, const DatasetBundle& bundle,
                       const std::vector<Triple>& triples) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    const auto& ents = bundle.graph.entities();
    const auto& rels = bundle.graph.relations();
    for (const auto& t : triples) {
        out << ents.name(t.head) << '\t' << rels.name(t.relation) << '\t' << ents.name(t.tail)
            << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace gcat
