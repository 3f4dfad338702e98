#pragma once
// Independent reference computations used by the unit and acceptance tests.
// Everything here is written from the model definitions with plain loops and
// deliberately avoids the library's autodiff graph, neighborhood index and
// ranking code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "gcat/convkb.hpp"
#include "gcat/encoder.hpp"
#include "gcat/graph.hpp"
#include "gcat/rng.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

inline Mat to_mat(const gcat::Matrix& m) {
    Mat out(m.rows(), Vec(m.cols()));
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
    return out;
}

inline Vec mat_vec(const Mat& w, const Vec& x) {
    Vec out(w.size(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) out[i] += w[i][j] * x[j];
    return out;
}

// Row vector times matrix: x^T W.
inline Vec vec_mat(const Vec& x, const Mat& w) {
    Vec out(w.empty() ? 0 : w[0].size(), 0.0);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j) out[j] += x[i] * w[i][j];
    return out;
}

inline double leaky(double x) { return x > 0.0 ? x : 0.2 * x; }

/// (neighbor, relation path) for every directed walk of 1..n_hop edges from
/// `source`, found by extending walks edge by edge over the raw triple list,
/// plus the empty-path self entry.
inline std::set<std::pair<std::uint32_t, std::vector<std::uint32_t>>> enumerate_paths(
    const std::vector<gcat::Triple>& triples, std::uint32_t source, std::size_t n_hop) {
    std::set<std::pair<std::uint32_t, std::vector<std::uint32_t>>> out{{source, {}}};
    std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>> frontier{{source, {}}};
    for (std::size_t len = 1; len <= n_hop; ++len) {
        std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>> next;
        for (const auto& [at, path] : frontier)
            for (const auto& t : triples)
                if (t.head == at) {
                    auto p = path;
                    p.push_back(t.relation);
                    next.emplace_back(t.tail, p);
                    out.emplace(t.tail, p);
                }
        frontier = std::move(next);
    }
    return out;
}

struct EncoderReference {
    std::vector<std::vector<Vec>> alpha1;  // [head][entity-local entries flattened per entity]
    Mat layer1;                            // e'
    Mat layer2;                            // e''
    Mat H;
    Mat R_out;
};

/// Straight-line evaluation of the two attention layers, relation transforms
/// and residual merge.
inline EncoderReference encoder_reference(const gcat::EncoderParams& p, const gcat::Matrix& E_in,
                                          const gcat::Matrix& R_in, const std::vector<gcat::Triple>& triples,
                                          std::size_t n_hop) {
    const Mat E = to_mat(E_in), R = to_mat(R_in);
    const std::size_t n_e = E.size();
    std::vector<std::vector<std::pair<std::uint32_t, std::vector<std::uint32_t>>>> nbhd(n_e);
    for (std::uint32_t i = 0; i < n_e; ++i) {
        auto s = enumerate_paths(triples, i, n_hop);
        nbhd[i].assign(s.begin(), s.end());
    }

    auto attention_layer = [&](const Mat& ents, const Mat& rels, const Vec& self_rel, std::size_t layer,
                               std::vector<std::vector<Vec>>* alpha_out) {
        std::vector<Mat> per_head;  // [head][entity] aggregated vector
        for (std::size_t h = 0; h < p.n_head; ++h) {
            const Mat w1 = to_mat(p.w1_at(layer, h));
            const Mat w2 = to_mat(p.w2_at(layer, h));
            Mat agg(n_e);
            std::vector<Vec> alphas(n_e);
            for (std::size_t i = 0; i < n_e; ++i) {
                std::vector<Vec> ts;
                for (const auto& [j, path] : nbhd[i]) {
                    Vec r = path.empty() ? self_rel : Vec(self_rel.size(), 0.0);
                    for (auto k : path)
                        for (std::size_t c = 0; c < r.size(); ++c) r[c] += rels[k][c];
                    Vec x = ents[i];
                    x.insert(x.end(), ents[j].begin(), ents[j].end());
                    x.insert(x.end(), r.begin(), r.end());
                    ts.push_back(mat_vec(w1, x));
                }
                Vec b;
                double z = 0.0;
                for (const auto& t : ts) {
                    b.push_back(std::exp(leaky(mat_vec(w2, t)[0])));
                    z += b.back();
                }
                Vec a(ts.size());
                Vec sum(ts[0].size(), 0.0);
                for (std::size_t e = 0; e < ts.size(); ++e) {
                    a[e] = b[e] / z;
                    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += a[e] * ts[e][c];
                }
                alphas[i] = a;
                agg[i] = sum;
            }
            if (alpha_out) alpha_out->push_back(alphas);
            per_head.push_back(agg);
        }
        Mat out(n_e);
        for (std::size_t i = 0; i < n_e; ++i) {
            if (layer == 0) {
                for (std::size_t h = 0; h < p.n_head; ++h)
                    for (double v : per_head[h][i]) out[i].push_back(leaky(v));
            } else {
                Vec mean(per_head[0][i].size(), 0.0);
                for (std::size_t h = 0; h < p.n_head; ++h)
                    for (std::size_t c = 0; c < mean.size(); ++c) mean[c] += per_head[h][i][c];
                for (double& v : mean) v = leaky(v / static_cast<double>(p.n_head));
                out[i] = mean;
            }
        }
        return out;
    };

    EncoderReference ref;
    const Mat w_r = to_mat(p.w_r), w_r2 = to_mat(p.w_r2), w_e = to_mat(p.w_e);
    const Vec self0 = to_mat(p.self_relation)[0];
    ref.layer1 = attention_layer(E, R, self0, 0, &ref.alpha1);
    Mat R1;
    for (const auto& r : R) R1.push_back(vec_mat(r, w_r));
    const Vec self1 = vec_mat(self0, w_r);
    ref.layer2 = attention_layer(ref.layer1, R1, self1, 1, nullptr);
    for (const auto& r : R1) ref.R_out.push_back(vec_mat(r, w_r2));
    for (std::size_t i = 0; i < n_e; ++i) {
        Vec h = vec_mat(E[i], w_e);
        for (std::size_t c = 0; c < h.size(); ++c) h[c] += ref.layer2[i][c];
        ref.H.push_back(h);
    }
    return ref;
}

/// Index-by-index ConvKB score.
inline double convkb_score(const gcat::Matrix& filters, const gcat::Matrix& w_out, const Vec& h, const Vec& r,
                           const Vec& t) {
    const std::size_t d = h.size();
    double score = 0.0;
    for (std::size_t m = 0; m < filters.rows(); ++m)
        for (std::size_t k = 0; k < d; ++k) {
            double conv = filters(m, 0) * h[k] + filters(m, 1) * r[k] + filters(m, 2) * t[k];
            double feature = conv > 0.0 ? conv : 0.0;
            score += feature * w_out(m * d + k, 0);
        }
    return score;
}

/// Rank by sorting: candidates are ordered ascending with ties placed ahead
/// of the true entity, and its 1-based position is returned. Entities in
/// `skip` are removed from the list first.
inline std::size_t sorted_rank(const std::vector<double>& scores, std::size_t truth, const std::set<std::size_t>& skip) {
    std::vector<std::pair<double, int>> list;  // (score, 0 for others / 1 for truth)
    for (std::size_t e = 0; e < scores.size(); ++e) {
        if (e != truth && skip.count(e)) continue;
        list.emplace_back(scores[e], e == truth ? 1 : 0);
    }
    std::sort(list.begin(), list.end());
    for (std::size_t pos = 0; pos < list.size(); ++pos)
        if (list[pos].second == 1) return pos + 1;
    return 0;
}

/// Random triples over n entities and m relations, duplicates allowed.
inline std::vector<gcat::Triple> random_triples(gcat::Rng& rng, std::size_t n, std::size_t m, std::size_t count) {
    std::vector<gcat::Triple> out;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back({static_cast<std::uint32_t>(rng.uniform_index(n)), static_cast<std::uint32_t>(rng.uniform_index(m)),
                       static_cast<std::uint32_t>(rng.uniform_index(n))});
    }
    return out;
}

inline gcat::KnowledgeGraph make_graph(std::size_t n, std::size_t m, const std::vector<gcat::Triple>& triples) {
    gcat::Vocab ents, rels;
    for (std::size_t i = 0; i < n; ++i) ents.intern("e" + std::to_string(i));
    for (std::size_t i = 0; i < m; ++i) rels.intern("r" + std::to_string(i));
    return gcat::KnowledgeGraph(std::move(ents), std::move(rels), triples);
}

inline gcat::Matrix random_matrix(gcat::Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    gcat::Matrix m(rows, cols);
    for (double& x : m.values()) x = scale * rng.normal();
    return m;
}

/// Bitwise CRC-32 (reflected polynomial 0xEDB88320).
inline std::uint32_t crc32(const std::vector<std::uint8_t>& bytes, std::size_t length) {
    std::uint32_t c = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < length; ++i) {
        c ^= bytes[i];
        for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (0u - (c & 1u)));
    }
    return ~c;
}

}  // namespace oracle
