#include "sparsetemp/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "sparsetemp/data.hpp"

namespace sparsetemp {

double beta_entropy(const Vec& beta) {
    double sum = 0.0;
    for (double p : beta) sum += p;
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("beta_entropy: vector does not sum to 1");
    double h = 0.0;
    for (double p : beta) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h;
}

EntropyReport mean_edge_entropy(const SuperNet& net) {
    EntropyReport report;
    double total = 0.0;
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const CompoundEdge& edge = net.edges[e];
        if (!edge.dist_valid)
            throw std::logic_error("mean_edge_entropy: edge distribution not cached");
        const double h = beta_entropy(edge.dist.beta);
        report.per_edge.push_back({static_cast<int>(e), edge.u, edge.v, h});
        total += h;
    }
    report.mean = total / static_cast<double>(net.edges.size());
    return report;
}

std::string entropy_report_to_json(const EntropyReport& report) {
    nlohmann::json j;
    j["mean"] = report.mean;
    j["per_edge"] = nlohmann::json::array();
    for (const auto& entry : report.per_edge) {
        j["per_edge"].push_back(
            {{"edge", entry.edge}, {"u", entry.u}, {"v", entry.v}, {"entropy", entry.entropy}});
    }
    return j.dump(2) + "\n";
}

int argmax_class(const Vec& logits) {
    int best = 0;
    for (std::size_t k = 1; k < logits.size(); ++k) {
        if (logits[k] > logits[best]) best = static_cast<int>(k);
    }
    return best;
}

double discretized_accuracy(const SuperNet& net, const Genotype& genotype, const SplitRef& split) {
    if (split.size() == 0) throw std::invalid_argument("discretized_accuracy: empty split");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < split.size(); ++i) {
        const Sample& s = split.sample(i);
        const auto nodes = genotype_eval_forward(net, genotype, {s.x});
        const Vec logits = matvec(net.readout, nodes.back());
        if (argmax_class(logits) == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(split.size());
}

double supernet_accuracy(const SuperNet& net, const SplitRef& split) {
    if (split.size() == 0) throw std::invalid_argument("supernet_accuracy: empty split");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < split.size(); ++i) {
        const Sample& s = split.sample(i);
        const auto nodes = node_forward(net, {s.x});
        const Vec logits = matvec(net.readout, nodes.back());
        if (argmax_class(logits) == s.label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(split.size());
}

}  // namespace sparsetemp
