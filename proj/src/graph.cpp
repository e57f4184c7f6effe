#include "embaug/graph.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

namespace embaug {

namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

ConstMatMap mat(const Tensor& t) {
    return ConstMatMap(t.values().data(), static_cast<Eigen::Index>(t.dim(0)),
                       static_cast<Eigen::Index>(t.dim(1)));
}

MatMap grad_mat(Tensor& t) {
    return MatMap(t.grad().data(), static_cast<Eigen::Index>(t.dim(0)),
                  static_cast<Eigen::Index>(t.dim(1)));
}

ConstMatMap grad_cmat(const Tensor& t) {
    return ConstMatMap(t.grad().data(), static_cast<Eigen::Index>(t.dim(0)),
                       static_cast<Eigen::Index>(t.dim(1)));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.rank() != rank) {
        throw ShapeError(std::string(op) + ": expected rank-" + std::to_string(rank) +
                         " tensor, got " + shape_str(t.shape()));
    }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(op) + ": shapes disagree: " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
}

double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var Graph::push(const char* op, std::vector<std::uint32_t> inputs, Tensor out,
                std::function<void()> back) {
    Node node;
    node.op = op;
    node.inputs = std::move(inputs);
    node.out = std::move(out);
    if (node.out.requires_grad()) {
        node.back = std::move(back);
    }
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::leaf(Tensor t) {
    if (!t.defined()) throw ContractError("leaf: undefined tensor");
    Node node;
    node.op = "leaf";
    node.is_leaf = true;
    node.out = std::move(t);
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::constant(const Tensor& t) {
    if (!t.defined()) throw ContractError("constant: undefined tensor");
    Node node;
    node.op = "constant";
    node.is_leaf = true;
    if (t.requires_grad()) {
        node.out = Tensor(t.shape(), std::vector<double>(t.values().begin(), t.values().end()));
    } else {
        node.out = t;  // shares storage, never written
    }
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

bool Graph::wants_grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (!grad_enabled_) return false;
    return n.out.requires_grad();
}

Var Graph::matmul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_rank(ta, 2, "matmul");
    require_rank(tb, 2, "matmul");
    if (ta.dim(1) != tb.dim(0)) {
        throw ShapeError("matmul: inner dimensions disagree: " + shape_str(ta.shape()) + " vs " +
                         shape_str(tb.shape()));
    }
    Tensor out({ta.dim(0), tb.dim(1)}, wants_grad(a) || wants_grad(b));
    MatMap(out.values().data(), static_cast<Eigen::Index>(out.dim(0)),
           static_cast<Eigen::Index>(out.dim(1)))
        .noalias() = mat(ta) * mat(tb);
    Tensor oa = ta, ob = tb, oo = out;
    bool ga = wants_grad(a), gb = wants_grad(b);
    return push("matmul", {a.id, b.id}, std::move(out), [oa, ob, oo, ga, gb]() mutable {
        if (ga) grad_mat(oa).noalias() += grad_cmat(oo) * mat(ob).transpose();
        if (gb) grad_mat(ob).noalias() += mat(oa).transpose() * grad_cmat(oo);
    });
}

Var Graph::matmul_rowwise(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_rank(ta, 2, "matmul_rowwise");
    require_rank(tb, 2, "matmul_rowwise");
    if (ta.dim(1) != tb.dim(0)) {
        throw ShapeError("matmul_rowwise: inner dimensions disagree: " + shape_str(ta.shape()) +
                         " vs " + shape_str(tb.shape()));
    }
    Tensor out({ta.dim(0), tb.dim(1)}, wants_grad(a) || wants_grad(b));
    // One vector-matrix product per row: a row's bits depend only on that
    // row's values, never on its position in the batch, which a blocked GEMM
    // does not promise (tail rows may accumulate in a different order).
    MatMap C(out.values().data(), static_cast<Eigen::Index>(out.dim(0)),
             static_cast<Eigen::Index>(out.dim(1)));
    ConstMatMap A = mat(ta), B = mat(tb);
    for (Eigen::Index i = 0; i < A.rows(); ++i) C.row(i).noalias() = A.row(i) * B;
    Tensor oa = ta, ob = tb, oo = out;
    bool ga = wants_grad(a), gb = wants_grad(b);
    return push("matmul_rowwise", {a.id, b.id}, std::move(out), [oa, ob, oo, ga, gb]() mutable {
        if (ga) grad_mat(oa).noalias() += grad_cmat(oo) * mat(ob).transpose();
        if (gb) grad_mat(ob).noalias() += mat(oa).transpose() * grad_cmat(oo);
    });
}

Var Graph::add(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "add");
    Tensor out(ta.shape(), wants_grad(a) || wants_grad(b));
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = ta.at(i) + tb.at(i);
    Tensor oa = ta, ob = tb, oo = out;
    bool ga = wants_grad(a), gb = wants_grad(b);
    return push("add", {a.id, b.id}, std::move(out), [oa, ob, oo, ga, gb]() mutable {
        auto g = oo.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (ga) oa.grad()[i] += g[i];
            if (gb) ob.grad()[i] += g[i];
        }
    });
}

Var Graph::sub(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "sub");
    Tensor out(ta.shape(), wants_grad(a) || wants_grad(b));
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = ta.at(i) - tb.at(i);
    Tensor oa = ta, ob = tb, oo = out;
    bool ga = wants_grad(a), gb = wants_grad(b);
    return push("sub", {a.id, b.id}, std::move(out), [oa, ob, oo, ga, gb]() mutable {
        auto g = oo.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (ga) oa.grad()[i] += g[i];
            if (gb) ob.grad()[i] -= g[i];
        }
    });
}

Var Graph::mul(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_same_shape(ta, tb, "mul");
    Tensor out(ta.shape(), wants_grad(a) || wants_grad(b));
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = ta.at(i) * tb.at(i);
    Tensor oa = ta, ob = tb, oo = out;
    bool ga = wants_grad(a), gb = wants_grad(b);
    return push("mul", {a.id, b.id}, std::move(out), [oa, ob, oo, ga, gb]() mutable {
        auto g = oo.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (ga) oa.grad()[i] += g[i] * ob.at(i);
            if (gb) ob.grad()[i] += g[i] * oa.at(i);
        }
    });
}

Var Graph::affine(Var x, double scale, double shift) {
    const Tensor& tx = value(x);
    Tensor out(tx.shape(), wants_grad(x));
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = scale * tx.at(i) + shift;
    Tensor ox = tx, oo = out;
    return push("affine", {x.id}, std::move(out), [ox, oo, scale]() mutable {
        auto g = oo.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ox.grad()[i] += scale * g[i];
    });
}

Var Graph::add_rowwise(Var m, Var row) {
    const Tensor& tm = value(m);
    const Tensor& tr = value(row);
    require_rank(tm, 2, "add_rowwise");
    require_rank(tr, 1, "add_rowwise");
    if (tm.dim(1) != tr.dim(0)) {
        throw ShapeError("add_rowwise: column count disagrees: " + shape_str(tm.shape()) + " vs " +
                         shape_str(tr.shape()));
    }
    const std::size_t rows = tm.dim(0), cols = tm.dim(1);
    Tensor out(tm.shape(), wants_grad(m) || wants_grad(row));
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out.at(i, j) = tm.at(i, j) + tr.at(j);
    Tensor om = tm, orow = tr, oo = out;
    bool gm = wants_grad(m), gr = wants_grad(row);
    return push("add_rowwise", {m.id, row.id}, std::move(out),
                [om, orow, oo, gm, gr, rows, cols]() mutable {
                    for (std::size_t i = 0; i < rows; ++i)
                        for (std::size_t j = 0; j < cols; ++j) {
                            double g = oo.grad()[i * cols + j];
                            if (gm) om.grad()[i * cols + j] += g;
                            if (gr) orow.grad()[j] += g;
                        }
                });
}

Var Graph::leaky_relu(Var x, double slope) {
    const Tensor& tx = value(x);
    Tensor out(tx.shape(), wants_grad(x));
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = tx.at(i);
        out.at(i) = v >= 0.0 ? v : slope * v;
    }
    Tensor ox = tx, oo = out;
    return push("leaky_relu", {x.id}, std::move(out), [ox, oo, slope]() mutable {
        auto g = oo.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            ox.grad()[i] += g[i] * (ox.at(i) >= 0.0 ? 1.0 : slope);
        }
    });
}

Var Graph::sigmoid(Var x) {
    const Tensor& tx = value(x);
    Tensor out(tx.shape(), wants_grad(x));
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = stable_sigmoid(tx.at(i));
    Tensor ox = tx, oo = out;
    return push("sigmoid", {x.id}, std::move(out), [ox, oo]() mutable {
        auto g = oo.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            double s = oo.at(i);
            ox.grad()[i] += g[i] * s * (1.0 - s);
        }
    });
}

Var Graph::tanh(Var x) {
    const Tensor& tx = value(x);
    Tensor out(tx.shape(), wants_grad(x));
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = std::tanh(tx.at(i));
    Tensor ox = tx, oo = out;
    return push("tanh", {x.id}, std::move(out), [ox, oo]() mutable {
        auto g = oo.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            double y = oo.at(i);
            ox.grad()[i] += g[i] * (1.0 - y * y);
        }
    });
}

Var Graph::clamp(Var x, double lo, double hi) {
    const Tensor& tx = value(x);
    Tensor out(tx.shape(), wants_grad(x));
    for (std::size_t i = 0; i < out.size(); ++i) out.at(i) = std::clamp(tx.at(i), lo, hi);
    Tensor ox = tx, oo = out;
    return push("clamp", {x.id}, std::move(out), [ox, oo, lo, hi]() mutable {
        auto g = oo.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            double v = ox.at(i);
            if (v >= lo && v <= hi) ox.grad()[i] += g[i];
        }
    });
}

Var Graph::softmax(Var x) {
    const Tensor& tx = value(x);
    require_rank(tx, 1, "softmax");
    if (tx.size() == 0) throw ContractError("softmax: empty input");
    Tensor out(tx.shape(), wants_grad(x));
    double m = *std::max_element(tx.values().begin(), tx.values().end());
    for (std::size_t i = 0; i < tx.size(); ++i) out.at(i) = std::exp(tx.at(i) - m);
    // The denominator is accumulated in sorted value order, so a permutation
    // of the inputs yields bit-identical outputs (the multiset of addends is
    // what determines the sum, not the storage order).
    std::vector<double> addends(out.values().begin(), out.values().end());
    std::sort(addends.begin(), addends.end());
    double total = 0.0;
    for (double a : addends) total += a;
    for (std::size_t i = 0; i < tx.size(); ++i) out.at(i) /= total;
    Tensor ox = tx, oo = out;
    return push("softmax", {x.id}, std::move(out), [ox, oo]() mutable {
        auto g = oo.grad();
        double dot = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * oo.at(i);
        for (std::size_t i = 0; i < g.size(); ++i) {
            ox.grad()[i] += oo.at(i) * (g[i] - dot);
        }
    });
}

namespace {

// Shared forward/backward math for cosine of two equal-length spans.
struct CosineTerms {
    double nu, nv, cos;
};

CosineTerms cosine_forward(std::span<const double> u, std::span<const double> v, const char* op,
                           std::size_t row) {
    double uu = 0.0, vv = 0.0, uv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        uu += u[i] * u[i];
        vv += v[i] * v[i];
        uv += u[i] * v[i];
    }
    double nu = std::sqrt(uu), nv = std::sqrt(vv);
    if (nu < Graph::kNormFloor || nv < Graph::kNormFloor) {
        throw DegenerateVectorError(std::string(op) + ": degenerate (near-zero) vector at index " +
                                    std::to_string(row));
    }
    return {nu, nv, uv / (nu * nv)};
}

void cosine_backward(std::span<const double> u, std::span<const double> v, const CosineTerms& t,
                     double g, std::span<double> gu, std::span<double> gv, bool wu, bool wv) {
    double inv = 1.0 / (t.nu * t.nv);
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (wu) gu[i] += g * (v[i] * inv - t.cos * u[i] / (t.nu * t.nu));
        if (wv) gv[i] += g * (u[i] * inv - t.cos * v[i] / (t.nv * t.nv));
    }
}

}  // namespace

Var Graph::cosine_similarity(Var u, Var v) {
    const Tensor& tu = value(u);
    const Tensor& tv = value(v);
    require_rank(tu, 1, "cosine_similarity");
    require_rank(tv, 1, "cosine_similarity");
    require_same_shape(tu, tv, "cosine_similarity");
    CosineTerms terms = cosine_forward(tu.values(), tv.values(), "cosine_similarity", 0);
    Tensor out = Tensor::scalar(terms.cos);
    if (wants_grad(u) || wants_grad(v)) out.set_requires_grad(true);
    Tensor ou = tu, ov = tv, oo = out;
    bool gu = wants_grad(u), gv = wants_grad(v);
    return push("cosine_similarity", {u.id, v.id}, std::move(out),
                [ou, ov, oo, terms, gu, gv]() mutable {
                    cosine_backward(ou.values(), ov.values(), terms, oo.grad()[0], ou.grad(),
                                    ov.grad(), gu, gv);
                });
}

Var Graph::cosine_rows(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_rank(ta, 2, "cosine_rows");
    require_same_shape(ta, tb, "cosine_rows");
    const std::size_t rows = ta.dim(0), cols = ta.dim(1);
    Tensor out({rows}, wants_grad(a) || wants_grad(b));
    std::vector<CosineTerms> terms(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        terms[i] = cosine_forward(ta.values().subspan(i * cols, cols),
                                  tb.values().subspan(i * cols, cols), "cosine_rows", i);
        out.at(i) = terms[i].cos;
    }
    Tensor oa = ta, ob = tb, oo = out;
    bool ga = wants_grad(a), gb = wants_grad(b);
    return push("cosine_rows", {a.id, b.id}, std::move(out),
                [oa, ob, oo, terms, ga, gb, rows, cols]() mutable {
                    for (std::size_t i = 0; i < rows; ++i) {
                        cosine_backward(oa.values().subspan(i * cols, cols),
                                        ob.values().subspan(i * cols, cols), terms[i],
                                        oo.grad()[i], oa.grad().subspan(i * cols, cols),
                                        ob.grad().subspan(i * cols, cols), ga, gb);
                    }
                });
}

Var Graph::bce(Var p, Var target) {
    const Tensor& tp = value(p);
    const Tensor& tt = value(target);
    require_same_shape(tp, tt, "bce");
    if (wants_grad(target)) throw ContractError("bce: targets must be constants");
    Tensor out(tp.shape(), wants_grad(p));
    for (std::size_t i = 0; i < out.size(); ++i) {
        double ph = std::clamp(tp.at(i), kBceEps, 1.0 - kBceEps);
        double y = tt.at(i);
        out.at(i) = -(y * std::log(ph) + (1.0 - y) * std::log(1.0 - ph));
    }
    Tensor op = tp, ot = tt, oo = out;
    return push("bce", {p.id, target.id}, std::move(out), [op, ot, oo]() mutable {
        auto g = oo.grad();
        for (std::size_t i = 0; i < g.size(); ++i) {
            double v = op.at(i);
            if (v < Graph::kBceEps || v > 1.0 - Graph::kBceEps) continue;  // clamped flat
            double y = ot.at(i);
            op.grad()[i] += g[i] * (-y / v + (1.0 - y) / (1.0 - v));
        }
    });
}

Var Graph::concat_cols(Var a, Var b) {
    const Tensor& ta = value(a);
    const Tensor& tb = value(b);
    require_rank(ta, 2, "concat_cols");
    require_rank(tb, 2, "concat_cols");
    if (ta.dim(0) != tb.dim(0)) {
        throw ShapeError("concat_cols: row count disagrees: " + shape_str(ta.shape()) + " vs " +
                         shape_str(tb.shape()));
    }
    const std::size_t rows = ta.dim(0), ca = ta.dim(1), cb = tb.dim(1);
    Tensor out({rows, ca + cb}, wants_grad(a) || wants_grad(b));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < ca; ++j) out.at(i, j) = ta.at(i, j);
        for (std::size_t j = 0; j < cb; ++j) out.at(i, ca + j) = tb.at(i, j);
    }
    Tensor oa = ta, ob = tb, oo = out;
    bool ga = wants_grad(a), gb = wants_grad(b);
    return push("concat_cols", {a.id, b.id}, std::move(out),
                [oa, ob, oo, ga, gb, rows, ca, cb]() mutable {
                    for (std::size_t i = 0; i < rows; ++i) {
                        for (std::size_t j = 0; j < ca; ++j)
                            if (ga) oa.grad()[i * ca + j] += oo.grad()[i * (ca + cb) + j];
                        for (std::size_t j = 0; j < cb; ++j)
                            if (gb) ob.grad()[i * cb + j] += oo.grad()[i * (ca + cb) + ca + j];
                    }
                });
}

Var Graph::reshape(Var x, Shape shape) {
    const Tensor& tx = value(x);
    if (shape_numel(shape) != tx.size()) {
        throw ShapeError("reshape: element count mismatch: " + shape_str(tx.shape()) + " vs " +
                         shape_str(shape));
    }
    Tensor out(std::move(shape), std::vector<double>(tx.values().begin(), tx.values().end()));
    if (wants_grad(x)) out.set_requires_grad(true);
    Tensor ox = tx, oo = out;
    return push("reshape", {x.id}, std::move(out), [ox, oo]() mutable {
        auto g = oo.grad();
        for (std::size_t i = 0; i < g.size(); ++i) ox.grad()[i] += g[i];
    });
}

Var Graph::row_mean(Var m) {
    const Tensor& tm = value(m);
    require_rank(tm, 2, "row_mean");
    const std::size_t rows = tm.dim(0), cols = tm.dim(1);
    Tensor out({rows}, wants_grad(m));
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < cols; ++j) s += tm.at(i, j);
        out.at(i) = s / static_cast<double>(cols);
    }
    Tensor om = tm, oo = out;
    return push("row_mean", {m.id}, std::move(out), [om, oo, rows, cols]() mutable {
        for (std::size_t i = 0; i < rows; ++i) {
            double g = oo.grad()[i] / static_cast<double>(cols);
            for (std::size_t j = 0; j < cols; ++j) om.grad()[i * cols + j] += g;
        }
    });
}

Var Graph::weighted_sum_rows(Var weights, Var m) {
    const Tensor& tw = value(weights);
    const Tensor& tm = value(m);
    require_rank(tw, 1, "weighted_sum_rows");
    require_rank(tm, 2, "weighted_sum_rows");
    const std::size_t rows = tm.dim(0), cols = tm.dim(1);
    if (tw.dim(0) != rows) {
        throw ShapeError("weighted_sum_rows: weight count disagrees with rows: " +
                         shape_str(tw.shape()) + " vs " + shape_str(tm.shape()));
    }
    Tensor out({1, cols}, wants_grad(weights) || wants_grad(m));
    // Per column, the addends are summed in sorted value order: reordering the
    // rows reorders the addends but not their multiset, so the result is
    // bit-identical under any row permutation.
    std::vector<double> addends(rows);
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t i = 0; i < rows; ++i) addends[i] = tw.at(i) * tm.at(i, j);
        std::sort(addends.begin(), addends.end());
        double s = 0.0;
        for (double a : addends) s += a;
        out.at(0, j) = s;
    }
    Tensor ow = tw, om = tm, oo = out;
    bool gw = wants_grad(weights), gm = wants_grad(m);
    return push("weighted_sum_rows", {weights.id, m.id}, std::move(out),
                [ow, om, oo, gw, gm, rows, cols]() mutable {
                    auto g = oo.grad();
                    for (std::size_t i = 0; i < rows; ++i) {
                        for (std::size_t j = 0; j < cols; ++j) {
                            if (gw) ow.grad()[i] += g[j] * om.at(i, j);
                            if (gm) om.grad()[i * cols + j] += g[j] * ow.at(i);
                        }
                    }
                });
}

Var Graph::sum(Var x) {
    const Tensor& tx = value(x);
    double s = 0.0;
    for (double v : tx.values()) s += v;
    Tensor out = Tensor::scalar(s);
    if (wants_grad(x)) out.set_requires_grad(true);
    Tensor ox = tx, oo = out;
    return push("sum", {x.id}, std::move(out), [ox, oo]() mutable {
        double g = oo.grad()[0];
        for (double& gi : ox.grad()) gi += g;
    });
}

Var Graph::mean(Var x) {
    const Tensor& tx = value(x);
    double s = 0.0;
    for (double v : tx.values()) s += v;
    const double n = static_cast<double>(tx.size());
    Tensor out = Tensor::scalar(s / n);
    if (wants_grad(x)) out.set_requires_grad(true);
    Tensor ox = tx, oo = out;
    return push("mean", {x.id}, std::move(out), [ox, oo, n]() mutable {
        double g = oo.grad()[0] / n;
        for (double& gi : ox.grad()) gi += g;
    });
}

Var Graph::cross_entropy_with_logits(Var logits, std::size_t label) {
    const Tensor& tx = value(logits);
    require_rank(tx, 1, "cross_entropy_with_logits");
    if (label >= tx.size()) {
        throw ContractError("cross_entropy_with_logits: label " + std::to_string(label) +
                            " out of range for " + shape_str(tx.shape()));
    }
    double m = *std::max_element(tx.values().begin(), tx.values().end());
    double total = 0.0;
    for (double v : tx.values()) total += std::exp(v - m);
    double loss = m + std::log(total) - tx.at(label);
    Tensor out = Tensor::scalar(loss);
    if (wants_grad(logits)) out.set_requires_grad(true);
    Tensor ox = tx, oo = out;
    return push("cross_entropy_with_logits", {logits.id}, std::move(out),
                [ox, oo, label, m, total]() mutable {
                    double g = oo.grad()[0];
                    for (std::size_t i = 0; i < ox.size(); ++i) {
                        double p = std::exp(ox.at(i) - m) / total;
                        ox.grad()[i] += g * (p - (i == label ? 1.0 : 0.0));
                    }
                });
}

void Graph::backward(Var loss) {
    if (!grad_enabled_) throw ContractError("backward: graph was built with gradients disabled");
    Node& loss_node = nodes_[loss.id];
    if (loss_node.out.size() != 1) {
        throw ContractError("backward: loss must be scalar, got " +
                            shape_str(loss_node.out.shape()));
    }
    // Intermediates get fresh zero grads; leaves accumulate across calls.
    for (Node& n : nodes_) {
        if (!n.is_leaf && n.out.requires_grad()) n.out.zero_grad();
    }
    if (!loss_node.out.requires_grad()) return;  // constant path: nothing to do
    loss_node.out.grad()[0] += 1.0;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
        if (nodes_[i].back) nodes_[i].back();
    }
}

}  // namespace embaug
