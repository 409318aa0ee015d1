#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sparsetemp/bilevel.hpp"
#include "sparsetemp/config.hpp"
#include "sparsetemp/logging.hpp"
#include "sparsetemp/metrics.hpp"

namespace fs = std::filesystem;
using namespace sparsetemp;

namespace {

constexpr const char* kVersion = "0.1.0";

RunConfig load_config_or_default(const std::string& path, std::uint64_t* seed_override) {
    KeyValueConfig kv =
        path.empty() ? KeyValueConfig::parse_string("") : KeyValueConfig::parse_file(path);
    RunConfig rc = load_run_config(kv);
    if (seed_override != nullptr) rc.trainer.seed = *seed_override;
    return rc;
}

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&tt));
    return buf;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

int cmd_search(const std::string& config_path, std::uint64_t seed, const std::string& out_dir) {
    std::uint64_t seed_val = seed;
    RunConfig rc = load_config_or_default(config_path, &seed_val);
    fs::create_directories(out_dir);

    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(run_config_to_json(rc));
    manifest["seed"] = rc.trainer.seed;
    manifest["version"] = kVersion;
    manifest["outputs"] = {{"trace", (fs::path(out_dir) / "trace.csv").string()},
                           {"genotype", (fs::path(out_dir) / "genotype.json").string()},
                           {"final_entropy", (fs::path(out_dir) / "final_entropy.txt").string()}};
    manifest["started_utc"] = timestamp_utc();
    write_file(fs::path(out_dir) / "manifest.json", manifest.dump(2) + "\n");

    const Dataset dataset = build_dataset(rc);
    const SearchResult result = run_search(rc.trainer, dataset);

    std::ostringstream trace;
    write_trace_csv(trace, result.trace);
    write_file(fs::path(out_dir) / "trace.csv", trace.str());
    write_file(fs::path(out_dir) / "genotype.json", genotype_to_json(result.genotype));
    write_file(fs::path(out_dir) / "final_entropy.txt",
               format_double(result.trace.records.back().mean_edge_entropy) + "\n");
    log_info("search finished; outputs in " + out_dir);
    return 0;
}

int cmd_preview_schedule(const std::string& config_path, bool paper_example) {
    if (paper_example) {
        const ScheduleList list = ets_build(4e-4, 1.0, 1e-3, 4);
        std::cout << "n,t_exp,t\n";
        for (int n = 0; n <= list.N; ++n) {
            std::cout << n << ',' << format_double(list.points_exp[n]) << ','
                      << format_double(list.temps[n]) << '\n';
        }
        return 0;
    }
    RunConfig rc = load_config_or_default(config_path, nullptr);
    const ScheduleConfig& sch = rc.trainer.schedule;
    const int epochs = rc.trainer.epochs;
    // Preview without training: EDD assumes a constant mean entropy of ln(M).
    const double assumed_entropy = std::log(static_cast<double>(rc.trainer.net.catalog.size()));
    const double E_a = 1e-3 / std::sqrt(2.0 * std::acos(-1.0));
    TemperatureController controller(sch, E_a, epochs);
    std::cout << "epoch,t,t_exp,d_exp,entropy_if_available\n";
    for (int epoch = 0; epoch < epochs; ++epoch) {
        const double t = controller.temperature_for_epoch(epoch);
        std::cout << epoch << ',' << format_double(t) << ','
                  << format_double(to_exp_space(controller.state().E_a, t)) << ','
                  << format_double(controller.state().d_exp) << ',';
        if (sch.kind == ScheduleKind::Edd)
            std::cout << format_double(assumed_entropy);
        std::cout << '\n';
        controller.on_epoch_end(epoch, assumed_entropy);
    }
    return 0;
}

int cmd_probe_softmax(const std::string& logits_csv, double t_hi, double t_lo, int points,
                      const std::vector<double>& s_values, bool st_const, double st_value) {
    if (points < 1 || !(t_hi > 0.0) || !(t_lo > 0.0))
        throw ConfigError("probe-softmax: invalid temperature grid");
    Vec logits;
    std::stringstream ls(logits_csv);
    std::string item;
    while (std::getline(ls, item, ',')) logits.push_back(std::stod(item));
    std::vector<double> grid;
    for (int i = 0; i < points; ++i) {
        const double f = points == 1 ? 0.0 : static_cast<double>(i) / (points - 1);
        grid.push_back(t_hi * std::pow(t_lo / t_hi, f));
    }
    std::vector<std::pair<std::string, SoftmaxPolicy>> policies;
    if (!s_values.empty()) {
        for (double s : s_values) {
            SoftmaxPolicy p;
            p.mode = SoftmaxMode::SnFixedS;
            p.s = s;
            policies.emplace_back("sn_norm_s" + format_double(s), p);
        }
    }
    if (st_const || policies.empty()) {
        SoftmaxPolicy p;
        p.mode = SoftmaxMode::SnStConst;
        p.st_const = st_value;
        policies.emplace_back("sn_norm_st" + format_double(st_value), p);
    }
    std::vector<std::vector<GradNormRow>> tables;
    for (const auto& [name, policy] : policies) tables.push_back(grad_norm_probe(logits, grid, policy));

    std::cout << "t,plain_norm";
    for (const auto& [name, policy] : policies) std::cout << ',' << name;
    std::cout << '\n';
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::cout << format_double(grid[i]) << ',' << format_double(tables[0][i].plain_norm);
        for (const auto& table : tables) std::cout << ',' << format_double(table[i].sn_norm);
        std::cout << '\n';
    }
    return 0;
}

int cmd_eval_genotype(const std::string& config_path, const std::string& genotype_path,
                      const std::string& split_name) {
    RunConfig rc = load_config_or_default(config_path, nullptr);
    std::ifstream in(genotype_path);
    if (!in) throw ConfigError("cannot open genotype file: " + genotype_path);
    std::stringstream buf;
    buf << in.rdbuf();
    Genotype genotype;
    try {
        genotype = genotype_from_json(buf.str());
    } catch (const std::exception& err) {
        throw ConfigError(std::string("malformed genotype: ") + err.what());
    }
    const Dataset dataset = build_dataset(rc);
    NetConfig net_cfg = rc.trainer.net;
    net_cfg.feature_dim = dataset.dim;
    net_cfg.classes = dataset.num_classes;
    SuperNet net = SuperNet::init(net_cfg, rc.trainer.seed);
    const SplitRef split = split_name == "train" ? train_split(dataset) : val_split(dataset);
    const double acc = discretized_accuracy(net, genotype, split);
    nlohmann::json j = {{"accuracy", acc}, {"split", split_name}, {"n", split.size()}};
    std::cout << j.dump(2) << '\n';
    return 0;
}

int cmd_probe_entropy(const std::string& config_path, std::uint64_t seed) {
    std::uint64_t seed_val = seed;
    RunConfig rc = load_config_or_default(config_path, &seed_val);
    SuperNet net = SuperNet::init(rc.trainer.net, rc.trainer.seed);
    net.refresh_distributions(rc.trainer.schedule.t0, rc.trainer.softmax);
    std::cout << entropy_report_to_json(mean_edge_entropy(net));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sparse-temperature differentiable architecture search"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", genotype_path, split_name = "val";
    std::string logits_csv = "10,0,0,0,0";
    std::uint64_t seed = 0;
    bool paper_example = false;
    double t_hi = 1.0, t_lo = 1e-3, st_value = 1.0;
    int points = 50;
    std::vector<double> s_values;
    bool st_const = false;

    auto* search = app.add_subcommand("search", "Run the bilevel architecture search");
    search->add_option("--config", config_path, "Key-value config file");
    search->add_option("--seed", seed, "Seed overriding the config");
    search->add_option("--out-dir", out_dir, "Output directory");

    auto* preview = app.add_subcommand("preview-schedule", "Emit the temperature schedule as CSV");
    preview->add_option("--config", config_path, "Key-value config file");
    preview->add_flag("--paper-example", paper_example,
                      "Print the E_a=4e-4, t0=1, tN=1e-3, N=4 worked example");

    auto* probe = app.add_subcommand("probe-softmax", "Gradient-norm probe over a temperature grid");
    probe->add_option("--logits", logits_csv, "Comma-separated logit vector");
    probe->add_option("--t0", t_hi, "Grid start temperature");
    probe->add_option("--tN", t_lo, "Grid end temperature");
    probe->add_option("--points", points, "Number of log-spaced grid points");
    probe->add_option("--s", s_values, "Fixed scaling factor (repeatable)");
    probe->add_flag("--st-const", st_const, "Also probe the s*t = const policy");
    probe->add_option("--st", st_value, "Constant for the s*t policy");

    auto* evalg = app.add_subcommand("eval-genotype", "Discretized accuracy of a genotype");
    evalg->add_option("--config", config_path, "Key-value config file");
    evalg->add_option("--genotype", genotype_path, "genotype.json path")->required();
    evalg->add_option("--split", split_name, "train or val");

    auto* pentropy = app.add_subcommand("probe-entropy", "Entropy report of a fresh net");
    pentropy->add_option("--config", config_path, "Key-value config file");
    pentropy->add_option("--seed", seed, "Seed overriding the config");

    CLI11_PARSE(app, argc, argv);

    try {
        if (search->parsed()) return cmd_search(config_path, seed, out_dir);
        if (preview->parsed()) return cmd_preview_schedule(config_path, paper_example);
        if (probe->parsed())
            return cmd_probe_softmax(logits_csv, t_hi, t_lo, points, s_values, st_const, st_value);
        if (evalg->parsed()) return cmd_eval_genotype(config_path, genotype_path, split_name);
        if (pentropy->parsed()) return cmd_probe_entropy(config_path, seed);
    } catch (const NanAbortError& err) {
        log_error(std::string("aborted: ") + err.what());
        return 2;
    } catch (const ConfigError& err) {
        log_error(err.what());
        return 1;
    } catch (const std::invalid_argument& err) {
        log_error(err.what());
        return 1;
    } catch (const std::exception& err) {
        log_error(std::string("unexpected failure: ") + err.what());
        return 1;
    }
    return 0;
}
