#pragma once

#include <string>
#include <vector>

#include "sparsetemp/linalg.hpp"
#include "sparsetemp/space.hpp"

namespace sparsetemp {

struct Dataset;
struct SplitRef;

// -sum beta_i ln beta_i with 0 ln 0 := 0, in nats. The vector must sum to 1
// within 1e-6.
double beta_entropy(const Vec& beta);

struct EntropyReport {
    struct EdgeEntry {
        int edge = 0;
        int u = 0;
        int v = 0;
        double entropy = 0.0;
    };
    std::vector<EdgeEntry> per_edge;
    double mean = 0.0;
};

// Requires every edge to hold a cached distribution (refresh_distributions ran).
EntropyReport mean_edge_entropy(const SuperNet& net);

std::string entropy_report_to_json(const EntropyReport& report);

// Shared-weight accuracy of the discretized single-path net on a dataset split.
double discretized_accuracy(const SuperNet& net, const Genotype& genotype, const SplitRef& split);

// Multi-path supernet accuracy on a split (cached distributions required).
double supernet_accuracy(const SuperNet& net, const SplitRef& split);

// argmax over class logits, ties to the lowest class index.
int argmax_class(const Vec& logits);

}  // namespace sparsetemp
