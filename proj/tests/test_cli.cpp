// Subprocess smoke tests for the command-line tool: flag parsing, output
// shapes, and the documented exit codes.

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace {

struct CommandResult {
  int exit_code;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const std::string out_file =
      (std::filesystem::temp_directory_path() /
       ("advot_cli_" + std::to_string(::getpid()) + ".out"))
          .string();
  const std::string command =
      std::string(ADVOT_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int raw = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(out_file);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  std::filesystem::remove(out_file);
  return result;
}

}  // namespace

TEST_CASE("cli complex emits the interaction document") {
  const auto result =
      run_cli("complex --synthetic triangle --eps 0.8 --level 3 --out -");
  REQUIRE(result.exit_code == 0);
  const auto doc = nlohmann::json::parse(result.output);
  CHECK(doc.at("counts_by_order").at("1") == 6);
  CHECK(doc.at("counts_by_order").at("2") == 3);
  CHECK(doc.at("counts_by_order").at("3") == 1);
  CHECK(doc.at("groups").size() == 10);
}

TEST_CASE("cli solve lp and sinkhorn") {
  const auto lp = run_cli(
      "solve --synthetic triangle --eps 0.8 --level 3 --solver lp --out -");
  REQUIRE(lp.exit_code == 0);
  const auto lp_doc = nlohmann::json::parse(lp.output);
  CHECK(lp_doc.at("risk_lower_bound").get<double>() ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-6));

  const auto sk = run_cli(
      "solve --synthetic triangle --eps 0.8 --level 3 --solver sinkhorn "
      "--eta 0.01 --delta-prime 0.001 --out -");
  REQUIRE(sk.exit_code == 0);
  const auto sk_doc = nlohmann::json::parse(sk.output);
  CHECK(std::abs(sk_doc.at("risk_lower_bound").get<double>() - 1.0 / 3.0) <= 0.02);
  CHECK(sk_doc.at("risk_lower_bound").get<double>() <=
        lp_doc.at("risk_lower_bound").get<double>() + 1e-9);

  // Schedule mode (no overrides) also works.
  const auto scheduled = run_cli(
      "solve --synthetic triangle --eps 0.8 --level 3 --solver sinkhorn "
      "--delta 0.1 --out -");
  REQUIRE(scheduled.exit_code == 0);
  const auto sch_doc = nlohmann::json::parse(scheduled.output);
  CHECK(std::abs(sch_doc.at("objective_value").get<double>() - 2.0 / 3.0) <= 0.1);
}

TEST_CASE("cli sweep is byte-identical with --omit-timing") {
  const std::string args =
      "sweep --synthetic gaussian6 --samples-per-class 10 --seed 5 "
      "--eps-grid 0.2:1.0:5 --levels 1,2 --solver both --omit-timing --out -";
  const auto first = run_cli(args);
  const auto second = run_cli(args);
  REQUIRE(first.exit_code == 0);
  CHECK(first.output == second.output);
  // Header plus 5 * 2 * 2 rows.
  CHECK(std::count(first.output.begin(), first.output.end(), '\n') == 21);
}

TEST_CASE("cli bound reports the triangle gap") {
  const auto result =
      run_cli("bound --synthetic triangle --eps 0.8 --level 2 --out -");
  REQUIRE(result.exit_code == 0);
  const auto doc = nlohmann::json::parse(result.output);
  CHECK(doc.at("status") == "ok");
  CHECK(doc.at("bound").get<double>() == doctest::Approx(1.0 / 12.0));
  CHECK(doc.at("gap").get<double>() == doctest::Approx(1.0 / 12.0));
  CHECK(doc.at("inequality_holds") == true);
}

TEST_CASE("cli synth writes a loadable csv") {
  const std::string csv =
      (std::filesystem::temp_directory_path() / "advot_synth_test.csv").string();
  const auto result = run_cli(
      "synth --synthetic gaussian6 --samples-per-class 5 --seed 3 --out " + csv);
  REQUIRE(result.exit_code == 0);
  const auto reload =
      run_cli("solve --data " + csv + " --eps 0.5 --level 2 --solver lp --out -");
  CHECK(reload.exit_code == 0);
  std::filesystem::remove(csv);
}

TEST_CASE("cli exit codes") {
  // 2: input errors.
  CHECK(run_cli("solve --data /nonexistent.csv --eps 0.5 --out -").exit_code == 2);
  CHECK(run_cli("solve --synthetic triangle --out -").exit_code == 2);  // missing --eps
  // 3: solver did not reach optimality (here: a vanishing time budget).
  CHECK(run_cli("solve --synthetic gaussian6 --samples-per-class 20 --eps 1.0 "
                "--level 3 --solver lp --max-seconds 0.000000001 --out -")
            .exit_code == 3);
  // 4: guard trips.
  CHECK(run_cli("complex --synthetic triangle --eps 0.8 --level 3 "
                "--max-interactions 5 --out -")
            .exit_code == 4);
  CHECK(run_cli("solve --synthetic triangle --eps 0.8 --level 3 "
                "--max-interactions 5 --solver lp --out -")
            .exit_code == 4);
}

TEST_CASE("cli sinkhorn without rounding") {
  const auto result = run_cli(
      "solve --synthetic triangle --eps 0.8 --level 3 --solver sinkhorn "
      "--delta 0.1 --no-rounding --out -");
  REQUIRE(result.exit_code == 0);
  const auto doc = nlohmann::json::parse(result.output);
  CHECK(std::abs(doc.at("objective_value").get<double>() - 2.0 / 3.0) <= 0.1);
}
