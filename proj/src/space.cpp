#include "sparsetemp/space.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sparsetemp/logging.hpp"

namespace sparsetemp {

using nlohmann::json;

OpKind op_kind_from_string(const std::string& name) {
    if (name == "zero") return OpKind::Zero;
    if (name == "identity") return OpKind::Identity;
    if (name == "linear") return OpKind::Linear;
    if (name == "tanh_linear") return OpKind::TanhLinear;
    if (name == "half_scale") return OpKind::HalfScale;
    throw std::invalid_argument("unknown operation kind: " + name);
}

const char* to_string(OpKind kind) {
    switch (kind) {
        case OpKind::Zero: return "zero";
        case OpKind::Identity: return "identity";
        case OpKind::Linear: return "linear";
        case OpKind::TanhLinear: return "tanh_linear";
        case OpKind::HalfScale: return "half_scale";
    }
    return "?";
}

bool op_is_parametric(OpKind kind) {
    return kind == OpKind::Linear || kind == OpKind::TanhLinear;
}

std::vector<OpKind> default_catalog() {
    return {OpKind::Zero, OpKind::Identity, OpKind::Linear, OpKind::TanhLinear,
            OpKind::HalfScale};
}

bool Genotype::operator==(const Genotype& other) const {
    if (nodes != other.nodes || catalog_names != other.catalog_names ||
        selections.size() != other.selections.size())
        return false;
    for (std::size_t i = 0; i < selections.size(); ++i) {
        if (selections[i].u != other.selections[i].u || selections[i].v != other.selections[i].v ||
            selections[i].op != other.selections[i].op)
            return false;
    }
    return true;
}

std::string genotype_to_json(const Genotype& g) {
    json j;
    j["nodes"] = g.nodes;
    j["catalog"] = g.catalog_names;
    j["selections"] = json::array();
    for (const auto& sel : g.selections) {
        j["selections"].push_back({{"u", sel.u}, {"v", sel.v}, {"op", sel.op}});
    }
    return j.dump(2) + "\n";
}

Genotype genotype_from_json(const std::string& text) {
    json j = json::parse(text);
    Genotype g;
    g.nodes = j.at("nodes").get<int>();
    g.catalog_names = j.at("catalog").get<std::vector<std::string>>();
    for (const auto& sel : j.at("selections")) {
        Genotype::Selection s;
        s.u = sel.at("u").get<int>();
        s.v = sel.at("v").get<int>();
        s.op = sel.at("op").get<int>();
        if (s.op < 0 || s.op >= static_cast<int>(g.catalog_names.size()))
            throw std::invalid_argument("genotype_from_json: op index out of range");
        g.selections.push_back(s);
    }
    return g;
}

namespace {

// Orthogonal-like random matrix at entry scale 1/sqrt(dim): Gaussian rows of
// that scale have unit norm and vanishing pairwise overlap in expectation.
Mat random_orthogonal_scaled(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(dim)));
    Mat w(dim, dim);
    for (auto& x : w.a) x = normal(rng);
    return w;
}

}  // namespace

SuperNet SuperNet::init(const NetConfig& cfg, std::uint64_t seed) {
    if (cfg.nodes < 2) throw std::invalid_argument("SuperNet::init: need at least 2 nodes");
    if (cfg.input_nodes < 1 || cfg.input_nodes >= cfg.nodes)
        throw std::invalid_argument("SuperNet::init: invalid input node count");
    if (cfg.catalog.empty()) throw std::invalid_argument("SuperNet::init: empty catalog");
    SuperNet net;
    net.cfg = cfg;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int u = 0; u < cfg.nodes; ++u) {
        for (int v = u + 1; v < cfg.nodes; ++v) {
            CompoundEdge edge;
            edge.u = u;
            edge.v = v;
            edge.arch_params.resize(cfg.catalog.size());
            for (double& a : edge.arch_params) a = 1e-3 * normal(rng);
            edge.weights.resize(cfg.catalog.size());
            for (std::size_t i = 0; i < cfg.catalog.size(); ++i) {
                if (op_is_parametric(cfg.catalog[i]))
                    edge.weights[i] = random_orthogonal_scaled(rng, cfg.feature_dim);
            }
            net.edges.push_back(std::move(edge));
        }
    }
    net.readout = Mat(cfg.classes, cfg.feature_dim, 0.0);
    return net;
}

int SuperNet::edge_index(int u, int v) const {
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (edges[i].u == u && edges[i].v == v) return static_cast<int>(i);
    }
    throw std::invalid_argument("edge_index: no such edge");
}

void SuperNet::refresh_distributions(double t, const SoftmaxPolicy& policy) {
    for (auto& edge : edges) {
        edge.dist = policy.forward(edge.arch_params, t);
        edge.dist_valid = true;
    }
}

Vec apply_op(OpKind kind, const Mat& weights, const Vec& h) {
    switch (kind) {
        case OpKind::Zero:
            return Vec(h.size(), 0.0);
        case OpKind::Identity:
            return h;
        case OpKind::Linear:
            return matvec(weights, h);
        case OpKind::TanhLinear: {
            Vec out = matvec(weights, h);
            for (double& x : out) x = std::tanh(x);
            return out;
        }
        case OpKind::HalfScale: {
            Vec out = h;
            for (double& x : out) x *= 0.5;
            return out;
        }
    }
    return Vec(h.size(), 0.0);
}

Vec edge_forward(const CompoundEdge& edge, const std::vector<OpKind>& catalog, const Vec& h_u,
                 const TemperedDistribution& dist) {
    if (dist.beta.size() != catalog.size())
        throw std::invalid_argument("edge_forward: beta length mismatch");
    Vec out(h_u.size(), 0.0);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        const Vec o = apply_op(catalog[i], edge.weights[i], h_u);
        axpy(dist.beta[i], o, out);
    }
    return out;
}

std::vector<Vec> node_forward(const SuperNet& net, const std::vector<Vec>& inputs) {
    return forward_cached(net, inputs).node_features;
}

ForwardCache forward_cached(const SuperNet& net, const std::vector<Vec>& inputs) {
    const int V = net.cfg.nodes;
    const int I = net.cfg.input_nodes;
    if (static_cast<int>(inputs.size()) != I)
        throw std::invalid_argument("forward: expected one feature vector per input node");
    for (const Vec& in : inputs) {
        if (static_cast<int>(in.size()) != net.cfg.feature_dim)
            throw std::invalid_argument("forward: input dimension mismatch");
    }
    ForwardCache cache;
    cache.node_features.resize(V);
    cache.edge_op_outputs.resize(net.edges.size());
    for (int i = 0; i < I; ++i) cache.node_features[i] = inputs[i];
    for (int v = I; v < V; ++v) cache.node_features[v] = Vec(net.cfg.feature_dim, 0.0);

    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const CompoundEdge& edge = net.edges[e];
        if (!edge.dist_valid)
            throw std::logic_error("forward: edge distribution not refreshed");
        if (edge.v < I) continue;  // edges into input nodes carry nothing
        const Vec& h_u = cache.node_features[edge.u];
        auto& outs = cache.edge_op_outputs[e];
        outs.resize(net.cfg.catalog.size());
        for (std::size_t i = 0; i < net.cfg.catalog.size(); ++i) {
            outs[i] = apply_op(net.cfg.catalog[i], edge.weights[i], h_u);
            axpy(edge.dist.beta[i], outs[i], cache.node_features[edge.v]);
        }
    }
    return cache;
}

EdgeBackwardResult edge_backward(const CompoundEdge& edge, const std::vector<OpKind>& catalog,
                                 const Vec& h_u, const std::vector<Vec>& op_outputs,
                                 const Vec& upstream) {
    if (op_outputs.size() != catalog.size())
        throw std::logic_error("edge_backward: forward cache missing");
    EdgeBackwardResult res;
    res.dbeta.resize(catalog.size(), 0.0);
    res.dweights.resize(catalog.size());
    res.dh_u.assign(h_u.size(), 0.0);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
        const double beta_i = edge.dist.beta[i];
        res.dbeta[i] = dot(upstream, op_outputs[i]);
        switch (catalog[i]) {
            case OpKind::Zero:
                break;
            case OpKind::Identity:
                axpy(beta_i, upstream, res.dh_u);
                break;
            case OpKind::HalfScale:
                axpy(0.5 * beta_i, upstream, res.dh_u);
                break;
            case OpKind::Linear: {
                if (beta_i != 0.0) {
                    res.dweights[i] = Mat(edge.weights[i].rows, edge.weights[i].cols);
                    add_outer(res.dweights[i], beta_i, upstream, h_u);
                    const Vec back = matvec_t(edge.weights[i], upstream);
                    axpy(beta_i, back, res.dh_u);
                }
                break;
            }
            case OpKind::TanhLinear: {
                if (beta_i != 0.0) {
                    // o = tanh(Wh); dpre = upstream * (1 - o^2)
                    Vec dpre(upstream.size());
                    for (std::size_t k = 0; k < dpre.size(); ++k)
                        dpre[k] = upstream[k] * (1.0 - op_outputs[i][k] * op_outputs[i][k]);
                    res.dweights[i] = Mat(edge.weights[i].rows, edge.weights[i].cols);
                    add_outer(res.dweights[i], beta_i, dpre, h_u);
                    const Vec back = matvec_t(edge.weights[i], dpre);
                    axpy(beta_i, back, res.dh_u);
                }
                break;
            }
        }
    }
    res.darch = sn_backward(edge.dist, res.dbeta);
    return res;
}

NetGrads NetGrads::zeros_like(const SuperNet& net) {
    NetGrads g;
    g.dbeta.resize(net.edges.size());
    g.arch.resize(net.edges.size());
    g.weights.resize(net.edges.size());
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        g.dbeta[e] = Vec(net.cfg.catalog.size(), 0.0);
        g.arch[e] = Vec(net.cfg.catalog.size(), 0.0);
        g.weights[e].resize(net.cfg.catalog.size());
        for (std::size_t i = 0; i < net.cfg.catalog.size(); ++i) {
            if (op_is_parametric(net.cfg.catalog[i]))
                g.weights[e][i] = Mat(net.cfg.feature_dim, net.cfg.feature_dim, 0.0);
        }
    }
    g.readout = Mat(net.readout.rows, net.readout.cols, 0.0);
    return g;
}

void NetGrads::finalize_arch(const SuperNet& net) {
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        arch[e] = sn_backward(net.edges[e].dist, dbeta[e]);
    }
}

double NetGrads::arch_global_norm() const {
    double s = 0.0;
    for (const Vec& g : arch) s += dot(g, g);
    return std::sqrt(s);
}

void backward_into(const SuperNet& net, const ForwardCache& cache, const Vec& d_final,
                   NetGrads& grads, bool want_arch, bool want_weights) {
    const int V = net.cfg.nodes;
    std::vector<Vec> dnode(V, Vec(net.cfg.feature_dim, 0.0));
    dnode[V - 1] = d_final;
    // Reverse topological order; edges into node v contribute to their sources.
    for (int v = V - 1; v >= net.cfg.input_nodes; --v) {
        for (std::size_t e = 0; e < net.edges.size(); ++e) {
            const CompoundEdge& edge = net.edges[e];
            if (edge.v != v) continue;
            const Vec& upstream = dnode[v];
            const auto& outs = cache.edge_op_outputs[e];
            for (std::size_t i = 0; i < net.cfg.catalog.size(); ++i) {
                const double beta_i = edge.dist.beta[i];
                if (want_arch) grads.dbeta[e][i] += dot(upstream, outs[i]);
                switch (net.cfg.catalog[i]) {
                    case OpKind::Zero:
                        break;
                    case OpKind::Identity:
                        axpy(beta_i, upstream, dnode[edge.u]);
                        break;
                    case OpKind::HalfScale:
                        axpy(0.5 * beta_i, upstream, dnode[edge.u]);
                        break;
                    case OpKind::Linear: {
                        if (beta_i != 0.0) {
                            if (want_weights)
                                add_outer(grads.weights[e][i], beta_i, upstream,
                                          cache.node_features[edge.u]);
                            axpy(beta_i, matvec_t(edge.weights[i], upstream), dnode[edge.u]);
                        }
                        break;
                    }
                    case OpKind::TanhLinear: {
                        if (beta_i != 0.0) {
                            Vec dpre(upstream.size());
                            for (std::size_t k = 0; k < dpre.size(); ++k)
                                dpre[k] = upstream[k] * (1.0 - outs[i][k] * outs[i][k]);
                            if (want_weights)
                                add_outer(grads.weights[e][i], beta_i, dpre,
                                          cache.node_features[edge.u]);
                            axpy(beta_i, matvec_t(edge.weights[i], dpre), dnode[edge.u]);
                        }
                        break;
                    }
                }
            }
        }
    }
}

Genotype discretize(const SuperNet& net, bool exclude_zero) {
    Genotype g;
    g.nodes = net.cfg.nodes;
    for (OpKind kind : net.cfg.catalog) g.catalog_names.push_back(to_string(kind));
    for (const CompoundEdge& edge : net.edges) {
        if (!edge.dist_valid) throw std::logic_error("discretize: edge distribution not cached");
        int best = -1;
        double best_val = 0.0;
        for (std::size_t i = 0; i < net.cfg.catalog.size(); ++i) {
            if (exclude_zero && net.cfg.catalog[i] == OpKind::Zero) continue;
            if (best < 0 || edge.dist.beta[i] > best_val) {
                best = static_cast<int>(i);
                best_val = edge.dist.beta[i];
            }
        }
        g.selections.push_back({edge.u, edge.v, best});
    }
    return g;
}

std::vector<Vec> genotype_eval_forward(const SuperNet& net, const Genotype& genotype,
                                       const std::vector<Vec>& inputs) {
    const int V = net.cfg.nodes;
    const int I = net.cfg.input_nodes;
    if (genotype.nodes != V)
        throw std::invalid_argument("genotype_eval_forward: node count mismatch");
    if (genotype.selections.size() != net.edges.size())
        throw std::invalid_argument("genotype_eval_forward: selection count mismatch");
    if (static_cast<int>(inputs.size()) != I)
        throw std::invalid_argument("genotype_eval_forward: expected one vector per input node");
    std::vector<Vec> nodes(V);
    for (int i = 0; i < I; ++i) nodes[i] = inputs[i];
    for (int v = I; v < V; ++v) nodes[v] = Vec(net.cfg.feature_dim, 0.0);
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const CompoundEdge& edge = net.edges[e];
        const auto& sel = genotype.selections[e];
        if (sel.u != edge.u || sel.v != edge.v)
            throw std::invalid_argument("genotype_eval_forward: edge order mismatch");
        if (sel.op < 0 || sel.op >= static_cast<int>(net.cfg.catalog.size()))
            throw std::invalid_argument("genotype_eval_forward: op index out of range");
        if (edge.v < I) continue;
        const Vec o = apply_op(net.cfg.catalog[sel.op], edge.weights[sel.op], nodes[edge.u]);
        axpy(1.0, o, nodes[edge.v]);
    }
    return nodes;
}

}  // namespace sparsetemp
