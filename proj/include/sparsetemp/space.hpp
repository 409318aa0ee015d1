#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsetemp/linalg.hpp"
#include "sparsetemp/snsoftmax.hpp"

namespace sparsetemp {

enum class OpKind { Zero, Identity, Linear, TanhLinear, HalfScale };

OpKind op_kind_from_string(const std::string& name);
const char* to_string(OpKind kind);
bool op_is_parametric(OpKind kind);
std::vector<OpKind> default_catalog();  // zero, identity, linear, tanh_linear, half_scale

struct NetConfig {
    int nodes = 3;
    int input_nodes = 1;
    int feature_dim = 16;
    int classes = 2;
    std::vector<OpKind> catalog = default_catalog();
};

// One dense-cell edge (u -> v, u < v) holding arch logits, per-op weights, and
// the distribution cached by the last refresh.
struct CompoundEdge {
    int u = 0;
    int v = 0;
    Vec arch_params;
    std::vector<Mat> weights;  // indexed like the catalog; empty Mat for parameter-free ops
    TemperedDistribution dist;
    bool dist_valid = false;
};

struct Genotype {
    int nodes = 0;
    std::vector<std::string> catalog_names;
    struct Selection {
        int u = 0;
        int v = 0;
        int op = 0;
    };
    std::vector<Selection> selections;

    bool operator==(const Genotype& other) const;
};

std::string genotype_to_json(const Genotype& g);
Genotype genotype_from_json(const std::string& text);

struct SuperNet {
    NetConfig cfg;
    std::vector<CompoundEdge> edges;  // all (u,v) with u < v, lexicographic
    Mat readout;                      // classes x feature_dim, part of the omega level

    static SuperNet init(const NetConfig& cfg, std::uint64_t seed);

    int num_ops() const { return static_cast<int>(cfg.catalog.size()); }
    int edge_index(int u, int v) const;

    // Recompute every edge's cached distribution from its logits at temperature t.
    void refresh_distributions(double t, const SoftmaxPolicy& policy);
};

Vec apply_op(OpKind kind, const Mat& weights, const Vec& h);

// <beta, O(h_u)>. Every candidate is evaluated, including zero-weighted ones.
Vec edge_forward(const CompoundEdge& edge, const std::vector<OpKind>& catalog, const Vec& h_u,
                 const TemperedDistribution& dist);

// All node features for one sample; inputs supplies nodes 0..input_nodes-1.
std::vector<Vec> node_forward(const SuperNet& net, const std::vector<Vec>& inputs);

// Per-sample activations kept for the backward pass.
struct ForwardCache {
    std::vector<Vec> node_features;
    std::vector<std::vector<Vec>> edge_op_outputs;  // [edge][op]
};

ForwardCache forward_cached(const SuperNet& net, const std::vector<Vec>& inputs);

struct EdgeBackwardResult {
    Vec dbeta;                  // dL/dbeta
    Vec darch;                  // dL/dA via sn_backward
    std::vector<Mat> dweights;  // per op
    Vec dh_u;
};

EdgeBackwardResult edge_backward(const CompoundEdge& edge, const std::vector<OpKind>& catalog,
                                 const Vec& h_u, const std::vector<Vec>& op_outputs,
                                 const Vec& upstream);

// Gradient accumulator across a batch. dbeta is summed per sample; arch
// gradients are produced once per batch by finalize_arch (sn_backward is
// linear in the upstream, so the two orders agree exactly).
struct NetGrads {
    std::vector<Vec> dbeta;
    std::vector<Vec> arch;
    std::vector<std::vector<Mat>> weights;
    Mat readout;

    static NetGrads zeros_like(const SuperNet& net);
    void finalize_arch(const SuperNet& net);
    double arch_global_norm() const;
};

// Reverse pass over the cell DAG for one sample, accumulating into grads.
void backward_into(const SuperNet& net, const ForwardCache& cache, const Vec& d_final,
                   NetGrads& grads, bool want_arch, bool want_weights);

// Per-edge argmax of the cached beta; ties resolve to the lowest index.
Genotype discretize(const SuperNet& net, bool exclude_zero = false);

// node_forward with each edge's beta replaced by the genotype's one-hot.
std::vector<Vec> genotype_eval_forward(const SuperNet& net, const Genotype& genotype,
                                       const std::vector<Vec>& inputs);

}  // namespace sparsetemp
