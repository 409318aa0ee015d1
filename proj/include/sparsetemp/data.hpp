#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "sparsetemp/linalg.hpp"
#include "sparsetemp/space.hpp"

namespace sparsetemp {

struct Sample {
    Vec x;
    int label = 0;
};

// Immutable after generation. Even sample indices are the training half, odd
// indices the validation half.
struct Dataset {
    std::vector<Sample> samples;
    std::vector<int> train_idx;
    std::vector<int> val_idx;
    int dim = 0;
    int num_classes = 0;
    std::uint64_t seed = 0;
};

// A view over one split of a dataset.
struct SplitRef {
    const Dataset* dataset = nullptr;
    std::span<const int> indices;

    std::size_t size() const { return indices.size(); }
    const Sample& sample(std::size_t i) const { return dataset->samples[indices[i]]; }
};

SplitRef train_split(const Dataset& ds);
SplitRef val_split(const Dataset& ds);

// Typed batch tags keeping architecture steps off the training data and weight
// steps off the validation data.
struct TrainBatch : SplitRef {};
struct ValBatch : SplitRef {};

// Class-conditional Gaussian blobs: class c centered at 2.0 * e_c, isotropic
// noise, balanced classes, interleaved 50/50 split.
Dataset generate(std::uint64_t seed, int n_samples, int dim, int n_classes, double noise_sigma);

struct PlantedTask {
    Dataset dataset;
    Genotype reference;
    // Construction-time verification summary (brute-force enumeration with
    // frozen crafted weights and freshly trained readouts).
    double planted_accuracy = 0.0;
    double best_outside_class = 0.0;     // best genotype outside the passthrough class
    double worst_in_class = 0.0;         // worst member of the passthrough-twin class
    int num_outside_above_080 = 0;
    int enumerated = 0;
};

// Fixture for search-correctness tests: a 4-class task on a V=3 cell whose
// intended solution is tanh on the direct edge (0,2) with identity on both
// path edges. Construction verifies by enumerating all M^3 genotypes against
// crafted operation weights with freshly trained readouts and throws
// std::runtime_error with diagnostics if the planted structure is not
// recovered as the dominant one.
PlantedTask planted_optimum_task(std::uint64_t seed, int dim);

// CSV round trip: header feature_0..feature_{d-1},label.
void dump_csv(std::ostream& os, const Dataset& ds);
Dataset load_csv(std::istream& is, std::uint64_t seed = 0);

// Budgeted softmax-CE gradient-descent probe used by enumeration oracles and
// tests: trains only a linear readout on fixed features.
Mat train_linear_probe(const std::vector<Vec>& features, const std::vector<int>& labels,
                       int n_classes, int iters = 400, double lr = 2.0);
double probe_accuracy(const Mat& readout, const std::vector<Vec>& features,
                      const std::vector<int>& labels);

}  // namespace sparsetemp
