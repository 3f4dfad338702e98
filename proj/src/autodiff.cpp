#include "gcat/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gcat/errors.hpp"

namespace gcat::ad {

namespace {

std::string shape_str(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

[[noreturn]] void shape_error(Op op, const std::string& detail) {
    throw ShapeError(std::string(op_name(op)) + ": " + detail);
}

ComputeGraph& graph_of(Var v) {
    if (v.graph == nullptr) throw ContractError("autodiff: Var not bound to a graph");
    return *v.graph;
}

ComputeGraph& common_graph(Var a, Var b) {
    if (a.graph != b.graph) throw ContractError("autodiff: operands from different graphs");
    return graph_of(a);
}

void require_same_shape(Op op, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) shape_error(op, shape_str(a) + " vs " + shape_str(b));
}

Var make(ComputeGraph& g, Op op, Matrix value, std::vector<std::size_t> parents, double scalar = 0.0,
         std::vector<std::size_t> indices = {}) {
    Node n;
    n.value = std::move(value);
    n.op = op;
    n.parents = std::move(parents);
    n.scalar = scalar;
    n.indices = std::move(indices);
    return g.push(std::move(n));
}

// out += a * b
void gemm_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        auto orow = out.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            double aip = a(i, p);
            if (aip == 0.0) continue;
            auto brow = b.row(p);
            for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
        }
    }
}

// out += a * b^T
void gemm_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    for (std::size_t i = 0; i < m; ++i) {
        auto arow = a.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            auto brow = b.row(j);
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
            out(i, j) += s;
        }
    }
}

// out += a^T * b
void gemm_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
    const std::size_t k = a.rows(), m = a.cols(), n = b.cols();
    for (std::size_t p = 0; p < k; ++p) {
        auto arow = a.row(p);
        auto brow = b.row(p);
        for (std::size_t i = 0; i < m; ++i) {
            double api = arow[i];
            if (api == 0.0) continue;
            auto orow = out.row(i);
            for (std::size_t j = 0; j < n; ++j) orow[j] += api * brow[j];
        }
    }
}

double sign_subgradient(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace

const char* op_name(Op op) {
    switch (op) {
        case Op::leaf: return "leaf";
        case Op::matmul: return "matmul";
        case Op::transpose: return "transpose";
        case Op::concat_rows: return "concat_rows";
        case Op::concat_cols: return "concat_cols";
        case Op::add: return "add";
        case Op::sub: return "sub";
        case Op::mul: return "mul";
        case Op::scale: return "scale";
        case Op::add_scalar: return "add_scalar";
        case Op::leaky_relu: return "leaky_relu";
        case Op::relu: return "relu";
        case Op::grouped_softmax: return "grouped_softmax";
        case Op::l1_rows: return "l1_rows";
        case Op::conv1x3: return "conv1x3";
        case Op::dot: return "dot";
        case Op::sum: return "sum";
        case Op::mean_axis: return "mean_axis";
        case Op::log: return "log";
        case Op::exp: return "exp";
        case Op::softplus: return "softplus";
        case Op::gather_rows: return "gather_rows";
        case Op::segment_sum: return "segment_sum";
        case Op::row_scale: return "row_scale";
    }
    return "unknown";
}

const Matrix& Var::value() const { return graph_of(*this).node(id).value; }
const Matrix& Var::grad() const { return graph_of(*this).node(id).grad; }

double stable_softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Var ComputeGraph::push(Node node) {
    nodes_.push_back(std::move(node));
    return Var{this, nodes_.size() - 1};
}

Var ComputeGraph::leaf(Matrix value) {
    Node n;
    n.value = std::move(value);
    return push(std::move(n));
}

void ComputeGraph::note_kinks(std::span<const double> pre_activation) {
    for (double x : pre_activation) min_kink_distance_ = std::min(min_kink_distance_, std::abs(x));
}

// ---------------------------------------------------------------------------
// Forward primitives

Var matmul(Var a, Var b) {
    auto& g = common_graph(a, b);
    const auto& av = a.value();
    const auto& bv = b.value();
    if (av.cols() != bv.rows()) shape_error(Op::matmul, shape_str(av) + " * " + shape_str(bv));
    Matrix out(av.rows(), bv.cols());
    gemm_acc(av, bv, out);
    return make(g, Op::matmul, std::move(out), {a.id, b.id});
}

Var transpose(Var a) {
    auto& g = graph_of(a);
    const auto& av = a.value();
    Matrix out(av.cols(), av.rows());
    for (std::size_t i = 0; i < av.rows(); ++i)
        for (std::size_t j = 0; j < av.cols(); ++j) out(j, i) = av(i, j);
    return make(g, Op::transpose, std::move(out), {a.id});
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) shape_error(Op::concat_rows, "no operands");
    auto& g = graph_of(parts[0]);
    std::size_t cols = parts[0].cols(), rows = 0;
    std::vector<std::size_t> parents;
    for (auto p : parts) {
        if (p.graph != &g) throw ContractError("autodiff: operands from different graphs");
        if (p.cols() != cols) shape_error(Op::concat_rows, "column counts differ");
        rows += p.rows();
        parents.push_back(p.id);
    }
    Matrix out(rows, cols);
    std::size_t r0 = 0;
    for (auto p : parts) {
        const auto& v = p.value();
        std::copy(v.values().begin(), v.values().end(), out.values().begin() + r0 * cols);
        r0 += v.rows();
    }
    return make(g, Op::concat_rows, std::move(out), std::move(parents));
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) shape_error(Op::concat_cols, "no operands");
    auto& g = graph_of(parts[0]);
    std::size_t rows = parts[0].rows(), cols = 0;
    std::vector<std::size_t> parents;
    for (auto p : parts) {
        if (p.graph != &g) throw ContractError("autodiff: operands from different graphs");
        if (p.rows() != rows) shape_error(Op::concat_cols, "row counts differ");
        cols += p.cols();
        parents.push_back(p.id);
    }
    Matrix out(rows, cols);
    std::size_t c0 = 0;
    for (auto p : parts) {
        const auto& v = p.value();
        for (std::size_t i = 0; i < rows; ++i) {
            auto src = v.row(i);
            std::copy(src.begin(), src.end(), out.row(i).begin() + c0);
        }
        c0 += v.cols();
    }
    return make(g, Op::concat_cols, std::move(out), std::move(parents));
}

namespace {

template <class F>
Var binary_elementwise(Op op, Var a, Var b, F f) {
    auto& g = common_graph(a, b);
    const auto& av = a.value();
    const auto& bv = b.value();
    require_same_shape(op, av, bv);
    Matrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
    return make(g, op, std::move(out), {a.id, b.id});
}

template <class F>
Var unary_elementwise(Op op, Var a, double scalar, F f) {
    auto& g = graph_of(a);
    const auto& av = a.value();
    Matrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i]);
    return make(g, op, std::move(out), {a.id}, scalar);
}

}  // namespace

Var add(Var a, Var b) {
    return binary_elementwise(Op::add, a, b, [](double x, double y) { return x + y; });
}
Var sub(Var a, Var b) {
    return binary_elementwise(Op::sub, a, b, [](double x, double y) { return x - y; });
}
Var mul(Var a, Var b) {
    return binary_elementwise(Op::mul, a, b, [](double x, double y) { return x * y; });
}

Var scale(Var a, double factor) {
    return unary_elementwise(Op::scale, a, factor, [factor](double x) { return x * factor; });
}

Var add_scalar(Var a, double constant) {
    return unary_elementwise(Op::add_scalar, a, constant,
                             [constant](double x) { return x + constant; });
}

Var leaky_relu(Var a, double slope) {
    graph_of(a).note_kinks(a.value().values());
    return unary_elementwise(Op::leaky_relu, a, slope,
                             [slope](double x) { return x > 0.0 ? x : slope * x; });
}

Var relu(Var a) {
    graph_of(a).note_kinks(a.value().values());
    // NaN passes through so a diverged input stays visible in the loss
    return unary_elementwise(Op::relu, a, 0.0, [](double x) { return std::isnan(x) || x > 0.0 ? x : 0.0; });
}

Var log(Var a) {
    return unary_elementwise(Op::log, a, 0.0, [](double x) { return std::log(x); });
}
Var exp(Var a) {
    return unary_elementwise(Op::exp, a, 0.0, [](double x) { return std::exp(x); });
}
Var softplus(Var a) { return unary_elementwise(Op::softplus, a, 0.0, stable_softplus); }

Var grouped_softmax(Var logits, std::vector<std::size_t> offsets) {
    auto& g = graph_of(logits);
    const auto& x = logits.value();
    if (x.cols() != 1) shape_error(Op::grouped_softmax, "logits must be a column, got " + shape_str(x));
    if (offsets.empty() || offsets.front() != 0 || offsets.back() != x.rows() ||
        !std::is_sorted(offsets.begin(), offsets.end())) {
        shape_error(Op::grouped_softmax, "group offsets do not partition the logits");
    }
    Matrix out(x.rows(), 1);
    for (std::size_t grp = 0; grp + 1 < offsets.size(); ++grp) {
        auto lo = offsets[grp], hi = offsets[grp + 1];
        if (lo == hi) continue;
        double mx = x[lo];
        for (auto i = lo + 1; i < hi; ++i) mx = std::max(mx, x[i]);
        double total = 0.0;
        for (auto i = lo; i < hi; ++i) {
            out[i] = std::exp(x[i] - mx);
            total += out[i];
        }
        for (auto i = lo; i < hi; ++i) out[i] /= total;
    }
    return make(g, Op::grouped_softmax, std::move(out), {logits.id}, 0.0, std::move(offsets));
}

Var l1_rows(Var a) {
    auto& g = graph_of(a);
    const auto& av = a.value();
    g.note_kinks(av.values());
    Matrix out(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        double s = 0.0;
        for (double x : av.row(i)) s += std::abs(x);
        out[i] = s;
    }
    return make(g, Op::l1_rows, std::move(out), {a.id});
}

Var conv1x3(Var head, Var relation, Var tail, Var filters) {
    auto& g = common_graph(head, relation);
    common_graph(head, tail);
    common_graph(head, filters);
    const auto& h = head.value();
    const auto& r = relation.value();
    const auto& t = tail.value();
    const auto& w = filters.value();
    require_same_shape(Op::conv1x3, h, r);
    require_same_shape(Op::conv1x3, h, t);
    if (w.cols() != 3) shape_error(Op::conv1x3, "filters must be Omega x 3, got " + shape_str(w));
    const std::size_t m = h.rows(), d = h.cols(), omega = w.rows();
    Matrix out(m, omega * d);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t f = 0; f < omega; ++f) {
            double w0 = w(f, 0), w1 = w(f, 1), w2 = w(f, 2);
            for (std::size_t k = 0; k < d; ++k) {
                out(i, f * d + k) = w0 * h(i, k) + w1 * r(i, k) + w2 * t(i, k);
            }
        }
    }
    return make(g, Op::conv1x3, std::move(out), {head.id, relation.id, tail.id, filters.id});
}

Var dot(Var a, Var b) {
    auto& g = common_graph(a, b);
    const auto& av = a.value();
    const auto& bv = b.value();
    require_same_shape(Op::dot, av, bv);
    double s = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
    return make(g, Op::dot, Matrix(1, 1, s), {a.id, b.id});
}

Var sum(Var a) {
    auto& g = graph_of(a);
    double s = 0.0;
    for (double x : a.value().values()) s += x;
    return make(g, Op::sum, Matrix(1, 1, s), {a.id});
}

Var mean_axis(Var a, int axis) {
    auto& g = graph_of(a);
    const auto& av = a.value();
    if (axis != 0 && axis != 1) shape_error(Op::mean_axis, "axis must be 0 or 1");
    if ((axis == 0 ? av.rows() : av.cols()) == 0) shape_error(Op::mean_axis, "empty axis");
    Matrix out = axis == 0 ? Matrix(1, av.cols()) : Matrix(av.rows(), 1);
    for (std::size_t i = 0; i < av.rows(); ++i) {
        for (std::size_t j = 0; j < av.cols(); ++j) {
            if (axis == 0) out(0, j) += av(i, j);
            else out(i, 0) += av(i, j);
        }
    }
    double inv = 1.0 / static_cast<double>(axis == 0 ? av.rows() : av.cols());
    for (double& x : out.values()) x *= inv;
    return make(g, Op::mean_axis, std::move(out), {a.id}, static_cast<double>(axis));
}

Var gather_rows(Var a, std::vector<std::size_t> rows) {
    auto& g = graph_of(a);
    const auto& av = a.value();
    Matrix out(rows.size(), av.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= av.rows()) {
            shape_error(Op::gather_rows, "row " + std::to_string(rows[i]) + " of " + shape_str(av));
        }
        auto src = av.row(rows[i]);
        std::copy(src.begin(), src.end(), out.row(i).begin());
    }
    return make(g, Op::gather_rows, std::move(out), {a.id}, 0.0, std::move(rows));
}

Var segment_sum(Var a, std::vector<std::size_t> offsets) {
    auto& g = graph_of(a);
    const auto& av = a.value();
    if (offsets.empty() || offsets.front() != 0 || offsets.back() != av.rows() ||
        !std::is_sorted(offsets.begin(), offsets.end())) {
        shape_error(Op::segment_sum, "segment offsets do not partition the rows");
    }
    Matrix out(offsets.size() - 1, av.cols());
    for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
        auto orow = out.row(s);
        for (auto r = offsets[s]; r < offsets[s + 1]; ++r) {
            auto src = av.row(r);
            for (std::size_t j = 0; j < src.size(); ++j) orow[j] += src[j];
        }
    }
    return make(g, Op::segment_sum, std::move(out), {a.id}, 0.0, std::move(offsets));
}

Var row_scale(Var a, Var scales) {
    auto& g = common_graph(a, scales);
    const auto& av = a.value();
    const auto& sv = scales.value();
    if (sv.cols() != 1 || sv.rows() != av.rows()) {
        shape_error(Op::row_scale, shape_str(av) + " scaled by " + shape_str(sv));
    }
    Matrix out(av.rows(), av.cols());
    for (std::size_t i = 0; i < av.rows(); ++i) {
        auto src = av.row(i);
        auto dst = out.row(i);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j] = src[j] * sv[i];
    }
    return make(g, Op::row_scale, std::move(out), {a.id, scales.id});
}

// ---------------------------------------------------------------------------
// Reverse sweep

void ComputeGraph::backward(Var root) {
    if (root.graph != this) throw ContractError("backward: root belongs to another graph");
    const auto& rv = nodes_[root.id].value;
    if (rv.rows() != 1 || rv.cols() != 1) {
        throw ContractError("backward: root must be 1x1, got " + shape_str(rv));
    }
    for (auto& n : nodes_) n.grad = Matrix(n.value.rows(), n.value.cols());
    nodes_[root.id].grad[0] = 1.0;

    for (std::size_t id = root.id + 1; id-- > 0;) {
        Node& n = nodes_[id];
        const Matrix& gy = n.grad;
        const Matrix& y = n.value;
        auto pgrad = [&](std::size_t k) -> Matrix& { return nodes_[n.parents[k]].grad; };
        auto pval = [&](std::size_t k) -> const Matrix& { return nodes_[n.parents[k]].value; };

        switch (n.op) {
            case Op::leaf: break;
            case Op::matmul:
                gemm_nt_acc(gy, pval(1), pgrad(0));
                gemm_tn_acc(pval(0), gy, pgrad(1));
                break;
            case Op::transpose: {
                auto& ga = pgrad(0);
                for (std::size_t i = 0; i < gy.rows(); ++i)
                    for (std::size_t j = 0; j < gy.cols(); ++j) ga(j, i) += gy(i, j);
                break;
            }
            case Op::concat_rows: {
                std::size_t offset = 0;
                for (std::size_t k = 0; k < n.parents.size(); ++k) {
                    auto& ga = pgrad(k);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += gy[offset + i];
                    offset += ga.size();
                }
                break;
            }
            case Op::concat_cols: {
                std::size_t c0 = 0;
                for (std::size_t k = 0; k < n.parents.size(); ++k) {
                    auto& ga = pgrad(k);
                    for (std::size_t i = 0; i < ga.rows(); ++i)
                        for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += gy(i, c0 + j);
                    c0 += ga.cols();
                }
                break;
            }
            case Op::add:
                for (std::size_t i = 0; i < gy.size(); ++i) {
                    pgrad(0)[i] += gy[i];
                    pgrad(1)[i] += gy[i];
                }
                break;
            case Op::sub:
                for (std::size_t i = 0; i < gy.size(); ++i) {
                    pgrad(0)[i] += gy[i];
                    pgrad(1)[i] -= gy[i];
                }
                break;
            case Op::mul:
                for (std::size_t i = 0; i < gy.size(); ++i) {
                    pgrad(0)[i] += gy[i] * pval(1)[i];
                    pgrad(1)[i] += gy[i] * pval(0)[i];
                }
                break;
            case Op::scale:
                for (std::size_t i = 0; i < gy.size(); ++i) pgrad(0)[i] += gy[i] * n.scalar;
                break;
            case Op::add_scalar:
                for (std::size_t i = 0; i < gy.size(); ++i) pgrad(0)[i] += gy[i];
                break;
            case Op::leaky_relu:
                for (std::size_t i = 0; i < gy.size(); ++i)
                    pgrad(0)[i] += gy[i] * (pval(0)[i] > 0.0 ? 1.0 : n.scalar);
                break;
            case Op::relu:
                for (std::size_t i = 0; i < gy.size(); ++i)
                    if (pval(0)[i] > 0.0) pgrad(0)[i] += gy[i];
                break;
            case Op::log:
                for (std::size_t i = 0; i < gy.size(); ++i) pgrad(0)[i] += gy[i] / pval(0)[i];
                break;
            case Op::exp:
                for (std::size_t i = 0; i < gy.size(); ++i) pgrad(0)[i] += gy[i] * y[i];
                break;
            case Op::softplus:
                for (std::size_t i = 0; i < gy.size(); ++i) {
                    double x = pval(0)[i];
                    double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                          : std::exp(x) / (1.0 + std::exp(x));
                    pgrad(0)[i] += gy[i] * sig;
                }
                break;
            case Op::grouped_softmax: {
                const auto& off = n.indices;
                for (std::size_t grp = 0; grp + 1 < off.size(); ++grp) {
                    double s = 0.0;
                    for (auto i = off[grp]; i < off[grp + 1]; ++i) s += y[i] * gy[i];
                    for (auto i = off[grp]; i < off[grp + 1]; ++i)
                        pgrad(0)[i] += y[i] * (gy[i] - s);
                }
                break;
            }
            case Op::l1_rows: {
                const auto& x = pval(0);
                auto& ga = pgrad(0);
                for (std::size_t i = 0; i < x.rows(); ++i)
                    for (std::size_t j = 0; j < x.cols(); ++j)
                        ga(i, j) += gy[i] * sign_subgradient(x(i, j));
                break;
            }
            case Op::conv1x3: {
                const auto& h = pval(0);
                const auto& r = pval(1);
                const auto& t = pval(2);
                const auto& w = pval(3);
                auto& gh = pgrad(0);
                auto& gr = pgrad(1);
                auto& gt = pgrad(2);
                auto& gw = pgrad(3);
                const std::size_t d = h.cols(), omega = w.rows();
                for (std::size_t i = 0; i < h.rows(); ++i) {
                    for (std::size_t f = 0; f < omega; ++f) {
                        for (std::size_t k = 0; k < d; ++k) {
                            double gv = gy(i, f * d + k);
                            if (gv == 0.0) continue;
                            gh(i, k) += gv * w(f, 0);
                            gr(i, k) += gv * w(f, 1);
                            gt(i, k) += gv * w(f, 2);
                            gw(f, 0) += gv * h(i, k);
                            gw(f, 1) += gv * r(i, k);
                            gw(f, 2) += gv * t(i, k);
                        }
                    }
                }
                break;
            }
            case Op::dot:
                for (std::size_t i = 0; i < pval(0).size(); ++i) {
                    pgrad(0)[i] += gy[0] * pval(1)[i];
                    pgrad(1)[i] += gy[0] * pval(0)[i];
                }
                break;
            case Op::sum:
                for (double& g : pgrad(0).values()) g += gy[0];
                break;
            case Op::mean_axis: {
                auto& ga = pgrad(0);
                int axis = static_cast<int>(n.scalar);
                double inv = 1.0 / static_cast<double>(axis == 0 ? ga.rows() : ga.cols());
                for (std::size_t i = 0; i < ga.rows(); ++i)
                    for (std::size_t j = 0; j < ga.cols(); ++j)
                        ga(i, j) += (axis == 0 ? gy(0, j) : gy(i, 0)) * inv;
                break;
            }
            case Op::gather_rows: {
                auto& ga = pgrad(0);
                for (std::size_t i = 0; i < n.indices.size(); ++i) {
                    auto dst = ga.row(n.indices[i]);
                    auto src = gy.row(i);
                    for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
                }
                break;
            }
            case Op::segment_sum: {
                auto& ga = pgrad(0);
                const auto& off = n.indices;
                for (std::size_t s = 0; s + 1 < off.size(); ++s) {
                    auto src = gy.row(s);
                    for (auto r = off[s]; r < off[s + 1]; ++r) {
                        auto dst = ga.row(r);
                        for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
                    }
                }
                break;
            }
            case Op::row_scale: {
                const auto& a = pval(0);
                const auto& sc = pval(1);
                auto& ga = pgrad(0);
                auto& gs = pgrad(1);
                for (std::size_t i = 0; i < a.rows(); ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < a.cols(); ++j) {
                        ga(i, j) += gy(i, j) * sc[i];
                        acc += gy(i, j) * a(i, j);
                    }
                    gs[i] += acc;
                }
                break;
            }
        }
    }
}

}  // namespace gcat::ad
