#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <span>
#include <vector>

#include "gcat/matrix.hpp"

namespace gcat::ad {

/// Negative slope shared by every LeakyReLU in the models.
inline constexpr double kLeakySlope = 0.2;

enum class Op : std::uint8_t {
    leaf,
    matmul,
    transpose,
    concat_rows,
    concat_cols,
    add,
    sub,
    mul,
    scale,
    add_scalar,
    leaky_relu,
    relu,
    grouped_softmax,
    l1_rows,
    conv1x3,
    dot,
    sum,
    mean_axis,
    log,
    exp,
    softplus,
    gather_rows,
    segment_sum,
    row_scale,
};

const char* op_name(Op op);

class ComputeGraph;

/// Handle to a node inside a ComputeGraph. Cheap to copy; valid for the
/// lifetime of its graph.
struct Var {
    ComputeGraph* graph = nullptr;
    std::size_t id = 0;

    const Matrix& value() const;
    const Matrix& grad() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
};

struct Node {
    Matrix value;
    Matrix grad;  // allocated by backward()
    Op op = Op::leaf;
    std::vector<std::size_t> parents;
    double scalar = 0.0;                // slope, scale factor, or additive constant
    std::vector<std::size_t> indices;   // gather rows / segment offsets / group offsets
};

/// Eagerly evaluated expression graph retained for one reverse sweep. Node
/// ids are assigned in creation order, which is a topological order.
class ComputeGraph {
public:
    ComputeGraph() = default;
    ComputeGraph(const ComputeGraph&) = delete;
    ComputeGraph& operator=(const ComputeGraph&) = delete;

    Var leaf(Matrix value);

    /// Populates every node's gradient with d(root)/d(node). Root must be 1x1
    /// (ContractError otherwise). Calling it again recomputes from scratch.
    void backward(Var root);

    const Node& node(std::size_t id) const { return nodes_[id]; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Smallest |pre-activation| seen by any non-smooth primitive (ReLU,
    /// LeakyReLU, L1). Used by gradient checking to reject kink points.
    double min_kink_distance() const noexcept { return min_kink_distance_; }

    Var push(Node node);
    void note_kinks(std::span<const double> pre_activation);

private:
    std::deque<Node> nodes_;  // stable addresses: value() references survive later pushes
    double min_kink_distance_ = std::numeric_limits<double>::infinity();
};

// Catalog of primitives. Each throws ShapeError naming the primitive when
// operand shapes are incompatible.

Var matmul(Var a, Var b);
Var transpose(Var a);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double factor);
Var add_scalar(Var a, double constant);
Var leaky_relu(Var a, double slope = kLeakySlope);
Var relu(Var a);  // also the max-with-zero hinge
/// Softmax over each contiguous segment [offsets[g], offsets[g+1]) of a
/// column vector; computed with per-group max subtraction.
Var grouped_softmax(Var logits, std::vector<std::size_t> offsets);
/// Per-row L1 norm: M x C -> M x 1. Subgradient of |x| at 0 is 0.
Var l1_rows(Var a);
/// Batched 1x3 valid convolution of the d x 3 matrices [h_i, r_i, t_i]
/// (each operand M x d) by Omega filters (Omega x 3). Output is
/// M x (Omega * d), filter m occupying columns [m*d, (m+1)*d).
Var conv1x3(Var head, Var relation, Var tail, Var filters);
Var dot(Var a, Var b);  // same-shape inner product -> 1x1
Var sum(Var a);         // -> 1x1
/// axis 0 averages rows (-> 1 x C); axis 1 averages columns (-> M x 1).
Var mean_axis(Var a, int axis);
Var log(Var a);
Var exp(Var a);
/// log(1 + exp(x)) evaluated without overflow.
Var softplus(Var a);
Var gather_rows(Var a, std::vector<std::size_t> rows);
/// Sums the rows of each contiguous segment: offsets has G+1 entries.
Var segment_sum(Var a, std::vector<std::size_t> offsets);
/// Multiplies row r of `a` by scales(r, 0).
Var row_scale(Var a, Var scales);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }

double stable_softplus(double x);

}  // namespace gcat::ad
