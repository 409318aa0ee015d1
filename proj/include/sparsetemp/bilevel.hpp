#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sparsetemp/data.hpp"
#include "sparsetemp/schedules.hpp"
#include "sparsetemp/snsoftmax.hpp"
#include "sparsetemp/space.hpp"

namespace sparsetemp {

struct TrainerConfig {
    int epochs = 60;
    int steps_per_epoch = 10;
    double lr_omega = 0.05;
    double lr_arch = 0.08;
    std::optional<double> grad_clip_arch = 1.0;  // global norm over all A jointly
    int warmup_epochs = 5;
    ScheduleConfig schedule;
    SoftmaxPolicy softmax;
    std::uint64_t seed = 0;
    NetConfig net;
};

struct SearchTrace {
    struct Record {
        int epoch = 0;
        double t = 0.0;
        double d_exp = 0.0;
        double mean_edge_entropy = 0.0;
        double supernet_val_accuracy = 0.0;
        double discretized_val_accuracy = 0.0;
        double E_a_current = 0.0;
    };
    std::vector<Record> records;
};

void write_trace_csv(std::ostream& os, const SearchTrace& trace);

// Raised when a non-finite loss aborts the run; carries the epoch for context.
class NanAbortError : public std::runtime_error {
  public:
    NanAbortError(int epoch, const std::string& what) : std::runtime_error(what), epoch_(epoch) {}
    int epoch() const { return epoch_; }

  private:
    int epoch_;
};

// Mean softmax cross-entropy of the supernet readout over a batch; gradients
// accumulate into `grads` when requested (arch gradients stay as dbeta until
// NetGrads::finalize_arch).
double batch_loss_and_grads(const SuperNet& net, const SplitRef& batch, NetGrads* grads,
                            bool want_arch, bool want_weights);

// One gradient-descent update of all architecture parameters on a validation
// batch (optionally global-norm clipped), followed by a distribution refresh
// at the given temperature. Returns the batch loss.
double arch_step(SuperNet& net, const ValBatch& batch, double temperature,
                 const TrainerConfig& config);

// One gradient-descent update of operation weights and readout on a training
// batch. Returns the batch loss.
double weight_step(SuperNet& net, const TrainBatch& batch, double temperature,
                   const TrainerConfig& config);

struct SearchResult {
    Genotype genotype;
    SearchTrace trace;
    SuperNet net;
};

// Algorithm: W warmup epochs of weight-only training at t0, then alternating
// arch/weight steps; after each post-warmup epoch the schedule advances (EDD
// updates d and t from the mean edge entropy).
SearchResult run_search(const TrainerConfig& config, const Dataset& dataset);

}  // namespace sparsetemp
