#pragma once

// Signed graphs as a pair of nonnegative symmetric layers (W⁺, W⁻) over one
// vertex set, plus matrix-free normalized layer operators:
//   positive layer:  L⁺_sym + εI = I − D⁺^{-1/2} W⁺ D⁺^{-1/2} + εI
//   negative layer:  Q⁻_sym + εI = I + D⁻^{-1/2} W⁻ D⁻^{-1/2} + εI

#include "spm/errors.hpp"
#include "spm/linalg.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace spm {

using SparseLayer = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Cluster assignment, one index in [0, k) per vertex.
using Labels = std::vector<int>;

enum class Layer { Positive, Negative };

/// One data line of a signed edge list. The sign of `weight` selects the layer.
struct EdgeRecord {
    long i = 0;
    long j = 0;
    double weight = 0.0;
    long line = 0;
};

class SignedGraph {
public:
    SignedGraph() = default;

    /// Takes ownership of two layers. Both must be n×n, symmetric, finite,
    /// nonnegative and free of self-loops.
    SignedGraph(SparseLayer pos, SparseLayer neg) : pos_(std::move(pos)), neg_(std::move(neg)) {
        if (pos_.rows() != pos_.cols() || neg_.rows() != neg_.cols() || pos_.rows() != neg_.rows())
            throw ParameterError("SignedGraph: layers must be square and of equal size");
        pos_.makeCompressed();
        neg_.makeCompressed();
        validate(pos_, "positive");
        validate(neg_, "negative");
    }

    static SignedGraph from_dense(const Matrix& w_pos, const Matrix& w_neg) {
        return SignedGraph(w_pos.sparseView(), w_neg.sparseView());
    }

    /// Graph with `n` vertices and no edges.
    static SignedGraph empty(Index n) { return SignedGraph(SparseLayer(n, n), SparseLayer(n, n)); }

    Index size() const noexcept { return pos_.rows(); }
    const SparseLayer& pos() const noexcept { return pos_; }
    const SparseLayer& neg() const noexcept { return neg_; }
    const SparseLayer& layer(Layer l) const noexcept { return l == Layer::Positive ? pos_ : neg_; }

    Matrix dense_pos() const { return Matrix(pos_); }
    Matrix dense_neg() const { return Matrix(neg_); }

    /// Number of undirected edges in a layer.
    Index edge_count(Layer l) const { return layer(l).nonZeros() / 2; }

private:
    static void validate(const SparseLayer& w, const char* name) {
        for (Index r = 0; r < w.outerSize(); ++r) {
            for (SparseLayer::InnerIterator it(w, r); it; ++it) {
                const double v = it.value();
                if (!std::isfinite(v) || v < 0)
                    throw DomainError(std::string("SignedGraph: ") + name +
                                      " layer has a negative or non-finite weight");
                if (it.col() == r && v != 0)
                    throw DomainError(std::string("SignedGraph: ") + name + " layer has a self-loop");
                if (w.coeff(it.col(), r) != v)
                    throw DomainError(std::string("SignedGraph: ") + name + " layer is not symmetric");
            }
        }
    }

    SparseLayer pos_;
    SparseLayer neg_;
};

/// Row sums of both layers and their total D̄ = D⁺ + D⁻.
struct DegreeData {
    Vector d_pos;
    Vector d_neg;
    Vector d_bar;
};

inline DegreeData degrees(const SignedGraph& g) {
    const Index n = g.size();
    DegreeData d{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
    for (Index r = 0; r < n; ++r) {
        for (SparseLayer::InnerIterator it(g.pos(), r); it; ++it) d.d_pos[r] += it.value();
        for (SparseLayer::InnerIterator it(g.neg(), r); it; ++it) d.d_neg[r] += it.value();
    }
    d.d_bar = d.d_pos + d.d_neg;
    return d;
}

/// Builds a graph from edge records. Repeated records accumulate per
/// direction; each layer is then symmetrized with max(w_ij, w_ji).
/// When `declared_n` is empty the vertex count is 1 + the largest index.
inline SignedGraph from_edge_list(const std::vector<EdgeRecord>& records,
                                  std::optional<Index> declared_n = std::nullopt) {
    Index n = declared_n.value_or(0);
    if (!declared_n) {
        for (const auto& r : records) n = std::max<Index>(n, std::max(r.i, r.j) + 1);
    }
    using Key = std::pair<long, long>;
    std::map<Key, double> acc[2];
    for (const auto& r : records) {
        if (!std::isfinite(r.weight)) throw ParseError("non-finite weight", r.line);
        if (r.weight == 0) throw ParseError("zero weight", r.line);
        if (r.i < 0 || r.j < 0 || r.i >= n || r.j >= n)
            throw ParseError("vertex index out of range [0, " + std::to_string(n) + ")", r.line);
        if (r.i == r.j) throw ParseError("self-loop", r.line);
        acc[r.weight > 0 ? 0 : 1][{r.i, r.j}] += std::abs(r.weight);
    }
    SparseLayer layers[2];
    for (int l = 0; l < 2; ++l) {
        std::map<Key, double> sym;
        for (const auto& [key, w] : acc[l]) {
            const Key k{std::min(key.first, key.second), std::max(key.first, key.second)};
            auto& slot = sym[k];
            slot = std::max(slot, w);
        }
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(2 * sym.size());
        for (const auto& [key, w] : sym) {
            trip.emplace_back(key.first, key.second, w);
            trip.emplace_back(key.second, key.first, w);
        }
        layers[l].resize(n, n);
        layers[l].setFromTriplets(trip.begin(), trip.end());
    }
    return SignedGraph(std::move(layers[0]), std::move(layers[1]));
}

/// Parsed contents of a "signed-edgelist v1" stream.
struct EdgeListFile {
    std::optional<Index> declared_n;
    std::vector<EdgeRecord> records;
};

/// Reads the signed-edgelist v1 text format: optional `# n=<N>` header,
/// `#` comment lines, and data lines `<i> <j> <w>`.
inline EdgeListFile parse_edge_list(std::istream& in) {
    EdgeListFile out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        if (line[first] == '#') {
            std::string body = line.substr(first + 1);
            body.erase(0, body.find_first_not_of(" \t"));
            if (body.rfind("n=", 0) == 0) {
                if (out.declared_n) throw ParseError("duplicate n= header", lineno);
                std::istringstream hs(body.substr(2));
                long n = -1;
                std::string rest;
                if (!(hs >> n) || n < 0 || (hs >> rest)) throw ParseError("malformed n= header", lineno);
                out.declared_n = n;
            }
            continue;
        }
        std::istringstream ls(line);
        std::string si, sj, sw, extra;
        if (!(ls >> si >> sj >> sw) || (ls >> extra))
            throw ParseError("expected '<i> <j> <w>'", lineno);
        EdgeRecord r;
        r.line = lineno;
        auto parse_index = [&](const std::string& s, long& v) {
            auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("bad vertex index '" + s + "'", lineno);
        };
        parse_index(si, r.i);
        parse_index(sj, r.j);
        try {
            std::size_t pos = 0;
            r.weight = std::stod(sw, &pos);
            if (pos != sw.size()) throw std::invalid_argument(sw);
        } catch (const std::out_of_range&) {
            throw ParseError("non-finite weight", lineno);
        } catch (const std::invalid_argument&) {
            throw ParseError("bad weight '" + sw + "'", lineno);
        }
        out.records.push_back(r);
    }
    return out;
}

inline SignedGraph read_signed_edgelist(std::istream& in) {
    auto file = parse_edge_list(in);
    return from_edge_list(file.records, file.declared_n);
}

inline SignedGraph read_signed_edgelist_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return read_signed_edgelist(in);
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

} // namespace detail

/// Canonical writer: header, then one line per undirected edge sorted by
/// (min(i,j), max(i,j), layer) with the positive layer first.
inline void write_signed_edgelist(std::ostream& out, const SignedGraph& g) {
    out << "# n=" << g.size() << '\n';
    std::vector<std::tuple<Index, Index, int, double>> edges;
    for (int l = 0; l < 2; ++l) {
        const auto& w = l == 0 ? g.pos() : g.neg();
        for (Index r = 0; r < w.outerSize(); ++r)
            for (SparseLayer::InnerIterator it(w, r); it; ++it)
                if (it.col() > r) edges.emplace_back(r, it.col(), l, it.value());
    }
    std::sort(edges.begin(), edges.end());
    for (const auto& [i, j, l, w] : edges)
        out << i << ' ' << j << ' ' << detail::format_double(l == 0 ? w : -w) << '\n';
}

inline void write_signed_edgelist_file(const std::string& path, const SignedGraph& g) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    write_signed_edgelist(out, g);
}

/// Result of removing vertices that are isolated in either layer.
struct ReducedGraph {
    SignedGraph graph;
    std::vector<Index> kept; ///< original index of each retained vertex
};

namespace detail {

inline ReducedGraph drop_isolated_once(const SignedGraph& g) {
    const auto d = degrees(g);
    std::vector<Index> kept;
    std::vector<Index> remap(static_cast<std::size_t>(g.size()), -1);
    for (Index i = 0; i < g.size(); ++i) {
        if (d.d_pos[i] > 0 && d.d_neg[i] > 0) {
            remap[static_cast<std::size_t>(i)] = static_cast<Index>(kept.size());
            kept.push_back(i);
        }
    }
    const auto m = static_cast<Index>(kept.size());
    SparseLayer layers[2];
    for (int l = 0; l < 2; ++l) {
        const auto& w = l == 0 ? g.pos() : g.neg();
        std::vector<Eigen::Triplet<double>> trip;
        for (Index r = 0; r < w.outerSize(); ++r) {
            const Index nr = remap[static_cast<std::size_t>(r)];
            if (nr < 0) continue;
            for (SparseLayer::InnerIterator it(w, r); it; ++it) {
                const Index nc = remap[static_cast<std::size_t>(it.col())];
                if (nc >= 0) trip.emplace_back(nr, nc, it.value());
            }
        }
        layers[l].resize(m, m);
        layers[l].setFromTriplets(trip.begin(), trip.end());
    }
    return {SignedGraph(std::move(layers[0]), std::move(layers[1])), std::move(kept)};
}

} // namespace detail

/// Repeats until no vertex is isolated in either layer, since removing a
/// vertex can strand its neighbours.
inline ReducedGraph drop_isolated(const SignedGraph& g) {
    auto r = detail::drop_isolated_once(g);
    while (true) {
        auto next = detail::drop_isolated_once(r.graph);
        if (next.graph.size() == r.graph.size()) return r;
        for (auto& v : next.kept) v = r.kept[static_cast<std::size_t>(v)];
        r = std::move(next);
    }
}

namespace detail {

inline Vector inverse_sqrt_degrees(const Vector& deg, Layer layer) {
    Vector r(deg.size());
    for (Index i = 0; i < deg.size(); ++i) {
        if (!(deg[i] > 0)) {
            throw DegenerateDegreeError(
                std::string("vertex ") + std::to_string(i) + " has zero degree in the " +
                    (layer == Layer::Positive ? "positive" : "negative") + " layer",
                static_cast<long>(i));
        }
        r[i] = 1.0 / std::sqrt(deg[i]);
    }
    return r;
}

} // namespace detail

/// Matrix-free L⁺_sym + εI (positive layer) or Q⁻_sym + εI (negative layer).
/// Holds a reference to the graph, which must outlive the operator.
class LayerOperator {
public:
    LayerOperator(const SignedGraph& g, Layer layer, double shift = 0.0)
        : graph_(&g), layer_(layer), shift_(shift) {
        if (!(shift >= 0) || !std::isfinite(shift)) throw ParameterError("LayerOperator: shift must be finite and >= 0");
        const auto d = degrees(g);
        inv_sqrt_deg_ = detail::inverse_sqrt_degrees(layer == Layer::Positive ? d.d_pos : d.d_neg, layer);
    }

    Index size() const noexcept { return graph_->size(); }
    Layer layer() const noexcept { return layer_; }
    double shift() const noexcept { return shift_; }
    const SignedGraph& graph() const noexcept { return *graph_; }

    /// (I ∓ D^{-1/2} W D^{-1/2}) x + εx in O(nnz).
    Vector apply(const Vector& x) const {
        if (x.size() != size()) throw ParameterError("LayerOperator::apply: size mismatch");
        const Vector scaled = inv_sqrt_deg_.cwiseProduct(x);
        const Vector wx = inv_sqrt_deg_.cwiseProduct(graph_->layer(layer_) * scaled);
        const double sign = layer_ == Layer::Positive ? -1.0 : 1.0;
        return (1.0 + shift_) * x + sign * wx;
    }

    Vector operator()(const Vector& x) const { return apply(x); }

private:
    const SignedGraph* graph_;
    Layer layer_;
    double shift_;
    Vector inv_sqrt_deg_;
};

/// Dense I ∓ D^{-1/2} W D^{-1/2} + εI for an arbitrary dense nonnegative W
/// (self-loops allowed, as in expected block-model adjacencies).
inline SymMatrix dense_layer_matrix(const Matrix& w, Layer layer, double shift = 0.0) {
    const Vector deg = w.rowwise().sum();
    const Vector s = detail::inverse_sqrt_degrees(deg, layer);
    Matrix m = s.asDiagonal() * w * s.asDiagonal();
    if (layer == Layer::Positive) m = -m;
    m.diagonal().array() += 1.0 + shift;
    return SymMatrix::symmetrize(m);
}

inline SymMatrix dense_matrix(const LayerOperator& op) {
    const auto& w = op.graph().layer(op.layer());
    return dense_layer_matrix(Matrix(w), op.layer(), op.shift());
}

} // namespace spm
