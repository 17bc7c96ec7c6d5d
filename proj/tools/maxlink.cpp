#include <algorithm>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "maxlink/cli/run.hpp"

int main(int argc, char** argv) {
  maxlink::cli::RunConfig cfg;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());

  CLI::App app{"Pricing and hedging of equity-linked insurance on the maximum of several assets"};
  app.add_option("command", cfg.command, "price | hedge | simulate | validate")->required();
  app.add_option("--model", cfg.model_path, "model JSON");
  app.add_option("--table", cfg.table_path, "life table CSV (age,qx)");
  app.add_option("--product", cfg.product_path, "product JSON");
  app.add_option("--seed", cfg.seed, "Monte-Carlo seed");
  app.add_option("--paths", cfg.n_paths, "Monte-Carlo path count");
  app.add_option("--mvn-tol", cfg.mvn_tol, "normal orthant tolerance");
  app.add_option("--threads", cfg.threads, "worker threads for simulation");
  app.add_option("--horizon", cfg.horizon, "simulation end step");
  app.add_option("--out", cfg.out_path, "write the report here instead of stdout");
  app.add_option("--dump", cfg.dump_path, "write simulated paths as CSV");
  app.add_flag("--raw-guarantee-leg", cfg.raw_guarantee_leg, "add the undiscounted guarantee");
  app.add_flag("--discounted-ledger", cfg.discounted_ledger, "discounted cash bookkeeping");
  app.add_flag("--antithetic", cfg.antithetic, "antithetic normal draws");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n' << maxlink::cli::usage();
    return 1;
  }
  return maxlink::cli::run(cfg, std::cout, std::cerr);
}
