#include "sparsetemp/bilevel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include "sparsetemp/logging.hpp"
#include "sparsetemp/metrics.hpp"

namespace sparsetemp {

void write_trace_csv(std::ostream& os, const SearchTrace& trace) {
    os << "epoch,t,d_exp,mean_edge_entropy,supernet_val_accuracy,discretized_val_accuracy,E_a\n";
    for (const auto& r : trace.records) {
        os << r.epoch << ',' << format_double(r.t) << ',' << format_double(r.d_exp) << ','
           << format_double(r.mean_edge_entropy) << ','
           << format_double(r.supernet_val_accuracy) << ','
           << format_double(r.discretized_val_accuracy) << ',' << format_double(r.E_a_current)
           << '\n';
    }
}

double batch_loss_and_grads(const SuperNet& net, const SplitRef& batch, NetGrads* grads,
                            bool want_arch, bool want_weights) {
    if (batch.size() == 0) throw std::invalid_argument("batch_loss_and_grads: empty batch");
    const int K = net.cfg.classes;
    const double inv_n = 1.0 / static_cast<double>(batch.size());
    double loss = 0.0;
    Vec logits(K), p(K), dlogits(K);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const Sample& s = batch.sample(i);
        const ForwardCache cache = forward_cached(net, {s.x});
        const Vec& h_last = cache.node_features.back();
        logits = matvec(net.readout, h_last);
        double zmax = logits[0];
        for (double z : logits) zmax = std::max(zmax, z);
        double sum = 0.0;
        for (int k = 0; k < K; ++k) {
            p[k] = std::exp(logits[k] - zmax);
            sum += p[k];
        }
        loss += -(logits[s.label] - zmax - std::log(sum)) * inv_n;
        if (grads != nullptr) {
            for (int k = 0; k < K; ++k) dlogits[k] = (p[k] / sum - (k == s.label)) * inv_n;
            if (want_weights) add_outer(grads->readout, 1.0, dlogits, h_last);
            const Vec dh = matvec_t(net.readout, dlogits);
            backward_into(net, cache, dh, *grads, want_arch, want_weights);
        }
    }
    return loss;
}

double arch_step(SuperNet& net, const ValBatch& batch, double temperature,
                 const TrainerConfig& config) {
    NetGrads grads = NetGrads::zeros_like(net);
    const double loss = batch_loss_and_grads(net, batch, &grads, true, false);
    if (!std::isfinite(loss)) throw NanAbortError(-1, "arch_step: non-finite validation loss");
    grads.finalize_arch(net);
    double scale = 1.0;
    if (config.grad_clip_arch) {
        const double norm = grads.arch_global_norm();
        if (norm > *config.grad_clip_arch && norm > 0.0) scale = *config.grad_clip_arch / norm;
    }
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        axpy(-config.lr_arch * scale, grads.arch[e], net.edges[e].arch_params);
    }
    net.refresh_distributions(temperature, config.softmax);
    return loss;
}

double weight_step(SuperNet& net, const TrainBatch& batch, double /*temperature*/,
                   const TrainerConfig& config) {
    NetGrads grads = NetGrads::zeros_like(net);
    const double loss = batch_loss_and_grads(net, batch, &grads, false, true);
    if (!std::isfinite(loss)) throw NanAbortError(-1, "weight_step: non-finite training loss");
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        for (std::size_t i = 0; i < net.cfg.catalog.size(); ++i) {
            if (!op_is_parametric(net.cfg.catalog[i])) continue;
            Mat& w = net.edges[e].weights[i];
            const Mat& g = grads.weights[e][i];
            for (std::size_t k = 0; k < w.a.size(); ++k) w.a[k] -= config.lr_omega * g.a[k];
        }
    }
    for (std::size_t k = 0; k < net.readout.a.size(); ++k)
        net.readout.a[k] -= config.lr_omega * grads.readout.a[k];
    return loss;
}

namespace {

void validate(const TrainerConfig& config) {
    if (config.epochs < 1) throw std::invalid_argument("config: epochs must be at least 1");
    if (config.steps_per_epoch < 1)
        throw std::invalid_argument("config: steps_per_epoch must be at least 1");
    if (!(config.lr_omega > 0.0) || !(config.lr_arch > 0.0))
        throw std::invalid_argument("config: learning rates must be positive");
    if (config.grad_clip_arch && !(*config.grad_clip_arch > 0.0))
        throw std::invalid_argument("config: grad_clip_arch must be positive when present");
    if (config.warmup_epochs < 0) throw std::invalid_argument("config: negative warmup");
    const ScheduleConfig& sch = config.schedule;
    if (!(sch.t0 > 0.0)) throw std::invalid_argument("config: t0 must be positive");
    if (sch.kind == ScheduleKind::Lts || sch.kind == ScheduleKind::Ets ||
        sch.kind == ScheduleKind::Pcd) {
        if (!(sch.t0 > sch.tN) || !(sch.tN > 0.0))
            throw std::invalid_argument("config: schedule requires t0 > tN > 0");
        if (sch.N < 1) throw std::invalid_argument("config: schedule N must be at least 1");
        if (sch.kind == ScheduleKind::Pcd && sch.cycles < 1)
            throw std::invalid_argument("config: cycles must be at least 1");
    }
    if (sch.kind == ScheduleKind::Edd && !(sch.lambda > 0.0))
        throw std::invalid_argument("config: lambda must be positive");
    if (sch.rho < 0.0 || sch.rho >= 1.0)
        throw std::invalid_argument("config: rho must lie in [0, 1)");
}

Vec all_arch_params(const SuperNet& net) {
    Vec flat;
    for (const auto& edge : net.edges)
        flat.insert(flat.end(), edge.arch_params.begin(), edge.arch_params.end());
    return flat;
}

}  // namespace

SearchResult run_search(const TrainerConfig& config, const Dataset& dataset) {
    validate(config);
    if (dataset.samples.empty()) throw std::invalid_argument("run_search: empty dataset");
    NetConfig net_cfg = config.net;
    net_cfg.feature_dim = dataset.dim;
    net_cfg.classes = dataset.num_classes;
    SuperNet net = SuperNet::init(net_cfg, config.seed);

    // E(a) is estimated once at initialization and frozen unless refresh_E_a.
    const Vec flat = all_arch_params(net);
    const double E_a = estimate_E_a(flat);
    TemperatureController controller(config.schedule, E_a, config.epochs);
    // The schedule's warmup is the trainer's warmup.
    const int warmup = config.schedule.warmup;

    std::mt19937_64 batch_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<int> perm_train(dataset.train_idx), perm_val(dataset.val_idx);

    SearchTrace trace;
    const SplitRef val_all = val_split(dataset);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double t = controller.temperature_for_epoch(epoch);
        net.refresh_distributions(t, config.softmax);
        std::shuffle(perm_train.begin(), perm_train.end(), batch_rng);
        std::shuffle(perm_val.begin(), perm_val.end(), batch_rng);
        const std::size_t bs_train =
            std::max<std::size_t>(1, perm_train.size() / config.steps_per_epoch);
        const std::size_t bs_val =
            std::max<std::size_t>(1, perm_val.size() / config.steps_per_epoch);
        try {
            for (int step = 0; step < config.steps_per_epoch; ++step) {
                if (epoch >= warmup) {
                    const std::size_t off = std::min(step * bs_val, perm_val.size() - bs_val);
                    ValBatch vb;
                    vb.dataset = &dataset;
                    vb.indices = std::span<const int>(perm_val.data() + off, bs_val);
                    arch_step(net, vb, t, config);
                }
                const std::size_t off = std::min(step * bs_train, perm_train.size() - bs_train);
                TrainBatch tb;
                tb.dataset = &dataset;
                tb.indices = std::span<const int>(perm_train.data() + off, bs_train);
                weight_step(net, tb, t, config);
            }
        } catch (const NanAbortError& err) {
            throw NanAbortError(epoch, std::string(err.what()) + " at epoch " +
                                           std::to_string(epoch));
        }
        const EntropyReport entropy = mean_edge_entropy(net);
        if (config.schedule.refresh_E_a && epoch >= warmup) {
            controller.refresh_E_a(estimate_E_a(all_arch_params(net)));
        }
        controller.on_epoch_end(epoch, entropy.mean);
        const Genotype genotype = discretize(net);
        SearchTrace::Record rec;
        rec.epoch = epoch;
        rec.t = t;
        rec.d_exp = controller.state().d_exp;
        rec.mean_edge_entropy = entropy.mean;
        rec.supernet_val_accuracy = supernet_accuracy(net, val_all);
        rec.discretized_val_accuracy = discretized_accuracy(net, genotype, val_all);
        rec.E_a_current = controller.state().E_a;
        trace.records.push_back(rec);
        log_debug("epoch " + std::to_string(epoch) + " t=" + format_double(rec.t) +
                  " H=" + format_double(rec.mean_edge_entropy) +
                  " sup=" + format_double(rec.supernet_val_accuracy) +
                  " dis=" + format_double(rec.discretized_val_accuracy));
    }
    SearchResult result{discretize(net), std::move(trace), std::move(net)};
    return result;
}

}  // namespace sparsetemp
