#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "emgdec/experiment.hpp"

using namespace emgdec;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    std::string cmd = std::string(EMGDEC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string first_line(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    return line;
}

// minimal end-to-end configuration: 2 users x 2 stages x 2 sessions of
// 6 s each, 3 epochs
fs::path write_test_config(const fs::path& dir, const fs::path& out_dir) {
    SyntheticConfig sc = SyntheticConfig::tiny();
    sc.n_users = 2;
    sc.n_stages = 2;
    sc.duration_s = 6.0;
    TrainConfig tc;
    tc.epochs_total = 3;
    tc.warmup_epochs = 1;
    tc.batch_size = 2;
    tc.fingertip_subsample = 100;
    nlohmann::json j;
    j["synthetic"] = sc;
    j["model"] = "tiny";
    j["train"] = tc;
    j["output_params"] = {"velocity"};
    j["task_modes"] = {"single_tracking"};
    j["scalars"] = {0.1};
    j["betas"] = {0.1, 1.0};
    j["seeds"] = {0};
    j["out_dir"] = out_dir.string();
    fs::path cfg = dir / "cli_test_config.json";
    std::ofstream(cfg) << j.dump(2);
    return cfg;
}

} // namespace

TEST_CASE("pipeline subcommands run end to end and emit their artifacts") {
    fs::path tmp = fs::temp_directory_path() / "emgdec_cli_test";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    fs::path out = tmp / "results";
    fs::path cfg = write_test_config(tmp, out);
    std::string base = "--config " + cfg.string() + " ";

    REQUIRE(run_cli(base + "gen-data") == 0);
    REQUIRE(fs::exists(out / "sessions" / "manifest.json"));

    REQUIRE(run_cli(base + "train") == 0);
    REQUIRE(fs::exists(out / "checkpoints" / "velocity_single_tracking_s0.1_seed0.ckpt"));
    fs::path train_csv = out / "train" / "velocity_single_tracking_s0.1_seed0.csv";
    REQUIRE(first_line(train_csv) == "epoch,val_loss,val_mean_speed,lr");
    REQUIRE(fs::exists(train_csv.string() + ".json"));  // sidecar

    REQUIRE(run_cli(base + "eval") == 0);
    REQUIRE(first_line(out / "eval" / "metrics.csv") ==
            "model,seed,user,condition,task,AE_deg,LD_mm,mean_speed_dps");

    REQUIRE(run_cli(base + "filter-sweep") == 0);
    REQUIRE(first_line(out / "sweep" / "frontier.csv") ==
            "model,seed,condition,task,beta,mean_speed_dps,AE_deg,LD_mm");

    REQUIRE(run_cli(base + "analyze") == 0);
    REQUIRE(first_line(out / "analyze" / "per_timestep.csv") ==
            "model,seed,condition,task,t_index,mean_AE");
    REQUIRE(fs::exists(out / "analyze" / "spectra.csv"));

    REQUIRE(run_cli(base + "report") == 0);
    REQUIRE(first_line(out / "report" / "summary.csv") ==
            "model,condition,task,n_users,AE_mean,AE_sd,LD_mean,LD_sd,"
            "speed_mean,speed_sd,single_user");

    // reruns are idempotent
    REQUIRE(run_cli(base + "report") == 0);
    fs::remove_all(tmp);
}

TEST_CASE("configuration errors exit with code 2") {
    REQUIRE(run_cli("--config /nonexistent/config.json gen-data") == 2);
    REQUIRE(run_cli("--scale bogus gen-data") == 2);

    fs::path tmp = fs::temp_directory_path() / "emgdec_cli_badcfg";
    fs::create_directories(tmp);
    fs::path bad = tmp / "bad.json";
    std::ofstream(bad) << "{ not json";
    REQUIRE(run_cli("--config " + bad.string() + " gen-data") == 2);
    std::ofstream(bad) << R"({"task_modes": ["nonsense"]})";
    REQUIRE(run_cli("--config " + bad.string() + " gen-data") == 2);
    fs::remove_all(tmp);
}

TEST_CASE("missing prerequisites exit with code 3") {
    fs::path tmp = fs::temp_directory_path() / "emgdec_cli_missing";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    fs::path cfg = write_test_config(tmp, tmp / "results");
    std::string base = "--config " + cfg.string() + " ";
    REQUIRE(run_cli(base + "train") == 3);   // no sessions yet
    REQUIRE(run_cli(base + "eval") == 3);    // no checkpoints
    REQUIRE(run_cli(base + "report") == 3);  // no metrics
    fs::remove_all(tmp);
}

TEST_CASE("training divergence exits with code 4") {
    fs::path tmp = fs::temp_directory_path() / "emgdec_cli_diverge";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    fs::path out = tmp / "results";
    fs::path cfg = write_test_config(tmp, out);
    // rewrite with an absurd learning rate so the loss blows up
    nlohmann::json j = nlohmann::json::parse(std::ifstream(cfg));
    j["train"]["lr_start"] = 1e200;
    j["train"]["lr_peak"] = 1e200;
    j["train"]["epochs_total"] = 2;
    std::ofstream(cfg) << j.dump(2);
    std::string base = "--config " + cfg.string() + " ";
    REQUIRE(run_cli(base + "gen-data") == 0);
    REQUIRE(run_cli(base + "train") == 4);
    fs::remove_all(tmp);
}

TEST_CASE("seed and out-dir overrides are honored") {
    fs::path tmp = fs::temp_directory_path() / "emgdec_cli_override";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    fs::path cfg = write_test_config(tmp, tmp / "ignored");
    fs::path out = tmp / "override_out";
    std::string base = "--config " + cfg.string() + " --out " + out.string() + " --seed 7 ";
    REQUIRE(run_cli(base + "gen-data") == 0);
    REQUIRE(run_cli(base + "train") == 0);
    REQUIRE(fs::exists(out / "checkpoints" / "velocity_single_tracking_s0.1_seed7.ckpt"));
    fs::remove_all(tmp);
}
