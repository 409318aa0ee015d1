#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sparsetemp/config.hpp"

using namespace sparsetemp;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* env = std::getenv("SPARSETEMP_CLI");
    return env == nullptr ? "" : env;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const std::string cmd = cli_path() + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string text;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof(buf), pipe)) text.append(buf, n);
    const int status = pclose(pipe);
    if (output != nullptr) *output = text;
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path write_temp_config(const std::string& name, const std::string& body) {
    const fs::path path = fs::temp_directory_path() / name;
    std::ofstream out(path);
    out << body;
    return path;
}

}  // namespace

TEST_CASE("key-value config parsing") {
    const KeyValueConfig kv = KeyValueConfig::parse_string(
        "# comment\n"
        "top = 3\n"
        "[search]\n"
        "epochs = 12   # trailing comment\n"
        "lr_omega = 0.25\n"
        "softmax_mode = \"plain\"\n"
        "[schedule]\n"
        "kind = ets\n"
        "refresh_E_a = true\n");
    CHECK(kv.get_int("top", 0) == 3);
    CHECK(kv.get_int("search.epochs", 0) == 12);
    CHECK(kv.get_double("search.lr_omega", 0.0) == 0.25);
    CHECK(kv.get_string("search.softmax_mode", "") == "plain");
    CHECK(kv.get_string("schedule.kind", "") == "ets");
    CHECK(kv.get_bool("schedule.refresh_E_a", false));
    CHECK(kv.get_int("missing", 42) == 42);

    CHECK_THROWS_AS(KeyValueConfig::parse_string("novalue\n"), ConfigError);
    CHECK_THROWS_AS(KeyValueConfig::parse_string("[open\n"), ConfigError);

    const KeyValueConfig bad = KeyValueConfig::parse_string("x = notanumber\n");
    CHECK_THROWS_AS(bad.get_double("x", 0.0), ConfigError);
}

TEST_CASE("run config defaults allow an empty file") {
    const RunConfig rc = load_run_config(KeyValueConfig::parse_string(""));
    CHECK(rc.trainer.epochs == 60);
    CHECK(rc.trainer.schedule.kind == ScheduleKind::Edd);
    CHECK(rc.trainer.schedule.rho == 0.5);
    CHECK(rc.trainer.softmax.mode == SoftmaxMode::SnStConst);
    CHECK(rc.trainer.net.catalog.size() == 5);
    CHECK(rc.data.kind == "planted");
}

TEST_CASE("run config rejects inverted schedule endpoints") {
    const KeyValueConfig kv = KeyValueConfig::parse_string(
        "[schedule]\nkind = ets\nt0 = 0.001\ntN = 1.0\n");
    CHECK_THROWS_AS(load_run_config(kv), ConfigError);
}

TEST_CASE("run config serializes to JSON") {
    const RunConfig rc = load_run_config(KeyValueConfig::parse_string(""));
    const std::string j = run_config_to_json(rc);
    CHECK(j.find("\"schedule\"") != std::string::npos);
    CHECK(j.find("\"catalog\"") != std::string::npos);
}

TEST_CASE("preview-schedule paper example prints the worked table") {
    REQUIRE_FALSE(cli_path().empty());
    std::string out;
    const int code = run_cli("preview-schedule --paper-example", &out);
    CHECK(code == 0);
    std::stringstream ss(out);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "n,t_exp,t");
    const double expect_t[5] = {1.0, 0.00345, 0.0018, 0.00127, 0.001};
    const double expect_exp[5] = {1.0, 1.123, 1.246, 1.369, 1.492};
    for (int n = 0; n <= 4; ++n) {
        std::string line;
        REQUIRE(std::getline(ss, line));
        std::stringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        CHECK(std::stoi(cell) == n);
        std::getline(ls, cell, ',');
        CHECK(std::abs(std::stod(cell) - expect_exp[n]) / expect_exp[n] < 1e-3);
        std::getline(ls, cell, ',');
        CHECK(std::abs(std::stod(cell) - expect_t[n]) < 2e-5 + 1e-3 * expect_t[n]);
    }
}

TEST_CASE("preview-schedule LTS endpoints") {
    REQUIRE_FALSE(cli_path().empty());
    const fs::path cfg = write_temp_config(
        "stemp_lts.toml",
        "[search]\nepochs = 9\n[schedule]\nkind = lts\nt0 = 1.0\ntN = 0.001\nN = 4\nwarmup = 4\n");
    std::string out;
    const int code = run_cli("preview-schedule --config " + cfg.string(), &out);
    CHECK(code == 0);
    // 5 post-warmup epochs, one per list entry.
    const double expect[5] = {1.0, 0.75025, 0.5005, 0.25075, 0.001};
    std::stringstream ss(out);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "epoch,t,t_exp,d_exp,entropy_if_available");
    std::vector<double> temps;
    while (std::getline(ss, line)) {
        std::stringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        std::getline(ls, cell, ',');
        temps.push_back(std::stod(cell));
    }
    REQUIRE(temps.size() == 9);
    for (int i = 0; i < 4; ++i) CHECK(temps[i] == 1.0);
    for (int i = 0; i < 5; ++i) CHECK(temps[4 + i] == doctest::Approx(expect[i]).epsilon(1e-9));
}

TEST_CASE("preview-schedule rejects N = 0") {
    REQUIRE_FALSE(cli_path().empty());
    const fs::path cfg =
        write_temp_config("stemp_badn.toml", "[schedule]\nkind = ets\nN = 0\n");
    CHECK(run_cli("preview-schedule --config " + cfg.string()) == 1);
}

TEST_CASE("probe-softmax emits the requested grid and columns") {
    REQUIRE_FALSE(cli_path().empty());
    std::string out;
    CHECK(run_cli("probe-softmax --points 50", &out) == 0);
    std::stringstream ss(out);
    std::string header;
    std::getline(ss, header);
    CHECK(header.rfind("t,plain_norm,", 0) == 0);
    int rows = 0;
    std::string line;
    while (std::getline(ss, line)) rows += !line.empty();
    CHECK(rows == 50);

    CHECK(run_cli("probe-softmax --s 50 --s 100 --s 1000 --points 3", &out) == 0);
    std::stringstream ss2(out);
    std::getline(ss2, header);
    CHECK(header == "t,plain_norm,sn_norm_s50,sn_norm_s100,sn_norm_s1000");

    CHECK(run_cli("probe-softmax --points 0", &out) == 1);
}

TEST_CASE("search writes outputs and honors determinism") {
    REQUIRE_FALSE(cli_path().empty());
    const fs::path cfg = write_temp_config("stemp_search.toml",
                                           "[search]\n"
                                           "epochs = 6\n"
                                           "steps_per_epoch = 4\n"
                                           "[schedule]\n"
                                           "warmup = 2\n"
                                           "[data]\n"
                                           "kind = blobs\n"
                                           "n = 240\n"
                                           "noise_sigma = 0.8\n"
                                           "[net]\n"
                                           "dim = 8\nclasses = 3\n");
    const fs::path out1 = fs::temp_directory_path() / "stemp_out1";
    const fs::path out2 = fs::temp_directory_path() / "stemp_out2";
    fs::remove_all(out1);
    fs::remove_all(out2);
    CHECK(run_cli("search --config " + cfg.string() + " --seed 7 --out-dir " + out1.string()) ==
          0);
    CHECK(run_cli("search --config " + cfg.string() + " --seed 7 --out-dir " + out2.string()) ==
          0);
    for (const char* name : {"trace.csv", "genotype.json", "manifest.json", "final_entropy.txt"}) {
        CHECK(fs::exists(out1 / name));
    }
    CHECK(slurp(out1 / "trace.csv") == slurp(out2 / "trace.csv"));
    CHECK(slurp(out1 / "genotype.json") == slurp(out2 / "genotype.json"));
    // Trace has one row per epoch plus the header.
    const std::string trace = slurp(out1 / "trace.csv");
    CHECK(std::count(trace.begin(), trace.end(), '\n') == 7);

    // Config-constraint violation exits with code 1 and names the constraint.
    const fs::path bad = write_temp_config("stemp_bad.toml",
                                           "[schedule]\nkind = ets\nt0 = 0.001\ntN = 1.0\n");
    CHECK(run_cli("search --config " + bad.string() + " --out-dir " +
                  (fs::temp_directory_path() / "stemp_none").string()) == 1);
}

TEST_CASE("eval-genotype reports accuracy for a stored genotype") {
    REQUIRE_FALSE(cli_path().empty());
    const fs::path cfg = write_temp_config("stemp_eval.toml",
                                           "[data]\nkind = blobs\nn = 200\n"
                                           "[net]\ndim = 8\nclasses = 4\n");
    const fs::path geno = fs::temp_directory_path() / "stemp_geno.json";
    {
        std::ofstream out(geno);
        out << R"({"nodes":3,"catalog":["zero","identity","linear","tanh_linear","half_scale"],)"
            << R"("selections":[{"u":0,"v":1,"op":0},{"u":0,"v":2,"op":0},{"u":1,"v":2,"op":0}]})";
    }
    std::string out;
    CHECK(run_cli("eval-genotype --config " + cfg.string() + " --genotype " + geno.string(), &out) ==
          0);
    CHECK(out.find("\"accuracy\"") != std::string::npos);
    // All-zero genotype scores the class-0 share of the balanced split.
    CHECK(out.find("0.25") != std::string::npos);

    const fs::path broken = fs::temp_directory_path() / "stemp_broken.json";
    {
        std::ofstream o(broken);
        o << "{not json";
    }
    CHECK(run_cli("eval-genotype --config " + cfg.string() + " --genotype " + broken.string()) ==
          1);
}

TEST_CASE("probe-entropy prints a JSON report near ln M") {
    REQUIRE_FALSE(cli_path().empty());
    std::string out;
    const fs::path cfg = write_temp_config("stemp_pe.toml", "[net]\ndim = 8\n");
    CHECK(run_cli("probe-entropy --config " + cfg.string() + " --seed 3", &out) == 0);
    CHECK(out.find("\"mean\"") != std::string::npos);
    const auto pos = out.find("\"mean\": ");
    const double mean = std::stod(out.substr(pos + 8));
    CHECK(mean == doctest::Approx(std::log(5.0)).epsilon(1e-4));
}
