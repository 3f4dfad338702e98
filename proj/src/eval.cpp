#include "gcat/eval.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>

#include "gcat/errors.hpp"

namespace gcat {

RankPair rank_entity(std::span<const double> scores, EntityId true_entity,
                     const std::unordered_set<EntityId>& filter_ids) {
    if (true_entity >= scores.size()) throw IndexError("rank_entity: true entity out of range");
    if (filter_ids.count(true_entity) != 0) throw ContractError("rank_entity: true entity is in the filter set");
    const double reference = scores[true_entity];
    RankPair rank{1, 1};
    for (std::size_t e = 0; e < scores.size(); ++e) {
        if (e == true_entity || !ranks_at_or_ahead(scores[e], reference)) continue;
        ++rank.raw;
        if (filter_ids.count(static_cast<EntityId>(e)) == 0) ++rank.filtered;
    }
    return rank;
}

Metrics metrics_from_ranks(std::span<const std::size_t> ranks, std::span<const std::size_t> k_list) {
    Metrics m;
    m.query_count = ranks.size();
    for (auto k : k_list) m.hits[k] = 0.0;
    if (ranks.empty()) return m;
    for (auto r : ranks) {
        m.mr += static_cast<double>(r);
        m.mrr += 1.0 / static_cast<double>(r);
        for (auto& [k, h] : m.hits)
            if (r <= k) h += 1.0;
    }
    const auto n = static_cast<double>(ranks.size());
    m.mr /= n;
    m.mrr /= n;
    for (auto& [k, h] : m.hits) h /= n;
    return m;
}

namespace {

std::uint64_t pair_key(std::uint32_t a, std::uint32_t b) { return (std::uint64_t{a} << 32) | b; }

}  // namespace

Evaluation evaluate(const TripleScorer& scorer, std::size_t num_entities, std::span<const Triple> test,
                    const std::unordered_set<Triple, TripleHash>& known,
                    std::span<const std::size_t> k_list) {
    if (test.empty()) throw EmptyDatasetError("evaluate: no test triples");
    std::unordered_map<std::uint64_t, std::vector<EntityId>> tails_of, heads_of;
    for (const auto& t : known) {
        tails_of[pair_key(t.head, t.relation)].push_back(t.tail);
        heads_of[pair_key(t.relation, t.tail)].push_back(t.head);
    }

    Evaluation ev;
    std::vector<std::size_t> raw, filtered;
    std::vector<double> scores(num_entities);
    for (const auto& query : test) {
        if (query.head >= num_entities || query.tail >= num_entities) {
            throw IndexError("evaluate: test triple entity out of range");
        }
        for (Side side : {Side::head, Side::tail}) {
            const bool head = side == Side::head;
            const EntityId truth = head ? query.head : query.tail;
            for (std::size_t e = 0; e < num_entities; ++e) {
                Triple cand = query;
                (head ? cand.head : cand.tail) = static_cast<EntityId>(e);
                scores[e] = scorer(cand);
            }
            std::unordered_set<EntityId> filter;
            const auto& index = head ? heads_of : tails_of;
            auto it = index.find(head ? pair_key(query.relation, query.tail) : pair_key(query.head, query.relation));
            if (it != index.end())
                for (auto e : it->second)
                    if (e != truth) filter.insert(e);
            auto rank = rank_entity(scores, truth, filter);
            ev.queries.push_back({query, side, rank.raw, rank.filtered});
            raw.push_back(rank.raw);
            filtered.push_back(rank.filtered);
        }
    }
    ev.raw = metrics_from_ranks(raw, k_list);
    ev.filtered = metrics_from_ranks(filtered, k_list);
    return ev;
}

namespace {

std::string fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::vector<std::string> header_cells(const Metrics& m, bool labelled) {
    std::vector<std::string> cells;
    if (labelled) cells.push_back("setting");
    for (const auto& [k, h] : m.hits) cells.push_back("H@" + std::to_string(k));
    cells.push_back("MR");
    cells.push_back("MRR");
    return cells;
}

std::vector<std::string> value_cells(const std::string& label, const Metrics& m, bool labelled) {
    std::vector<std::string> cells;
    if (labelled) cells.push_back(label);
    for (const auto& [k, h] : m.hits) cells.push_back(fixed(100.0 * h, 2));
    cells.push_back(std::to_string(std::llround(m.mr)));
    cells.push_back(fixed(m.mrr, 4));
    return cells;
}

std::string join(const std::vector<std::string>& cells, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += sep;
        out += cells[i];
    }
    return out;
}

}  // namespace

std::string report(std::span<const std::pair<std::string, Metrics>> rows, ReportFormat format) {
    if (rows.empty()) return {};
    bool labelled = false;
    for (const auto& [label, m] : rows) labelled = labelled || !label.empty();
    const auto header = header_cells(rows.front().second, labelled);
    std::ostringstream out;
    if (format == ReportFormat::csv) {
        out << join(header, ",") << '\n';
        for (const auto& [label, m] : rows) out << join(value_cells(label, m, labelled), ",") << '\n';
    } else {
        out << "| " << join(header, " | ") << " |\n|";
        for (std::size_t i = 0; i < header.size(); ++i) out << "---|";
        out << '\n';
        for (const auto& [label, m] : rows) out << "| " << join(value_cells(label, m, labelled), " | ") << " |\n";
    }
    return out.str();
}

std::string report(const Metrics& metrics, ReportFormat format) {
    std::pair<std::string, Metrics> row{"", metrics};
    return report(std::span(&row, 1), format);
}

std::string metrics_csv(std::span<const std::pair<std::string, Metrics>> rows) {
    std::ostringstream out;
    out << "setting,metric,value\n";
    char buf[64];
    auto emit = [&](const std::string& label, const std::string& metric, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << label << ',' << metric << ',' << buf << '\n';
    };
    for (const auto& [label, m] : rows) {
        emit(label, "queries", static_cast<double>(m.query_count));
        for (const auto& [k, h] : m.hits) emit(label, "H@" + std::to_string(k), h);
        emit(label, "MR", m.mr);
        emit(label, "MRR", m.mrr);
    }
    return out.str();
}

std::vector<std::pair<std::string, Metrics>> parse_metrics_csv(const std::string& text) {
    std::vector<std::pair<std::string, Metrics>> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1) {
            if (line != "setting,metric,value") throw ParseError("metrics", line_no, "unexpected header");
            continue;
        }
        if (line.empty()) continue;
        auto a = line.find(','), b = line.rfind(',');
        if (a == std::string::npos || a == b) throw ParseError("metrics", line_no, "expected three fields");
        const std::string label = line.substr(0, a), metric = line.substr(a + 1, b - a - 1);
        double value = 0.0;
        try {
            value = std::stod(line.substr(b + 1));
        } catch (const std::exception&) {
            throw ParseError("metrics", line_no, "bad number");
        }
        if (rows.empty() || rows.back().first != label) rows.push_back({label, Metrics{}});
        auto& m = rows.back().second;
        if (metric == "queries") {
            m.query_count = static_cast<std::size_t>(value);
        } else if (metric == "MR") {
            m.mr = value;
        } else if (metric == "MRR") {
            m.mrr = value;
        } else if (metric.rfind("H@", 0) == 0) {
            m.hits[std::stoul(metric.substr(2))] = value;
        } else {
            throw ParseError("metrics", line_no, "unknown metric " + metric);
        }
    }
    return rows;
}

}  // namespace gcat
