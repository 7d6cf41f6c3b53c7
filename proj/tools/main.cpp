#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "ticketlab/commands.hpp"
#include "ticketlab/errors.hpp"

namespace {

void add_common(CLI::App* sub, ticketlab::CommandOptions& o, bool with_config) {
  if (with_config) sub->add_option("--config", o.config, "JSON configuration file")->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seed, "Base seed of every random stream")->required();
  sub->add_option("--out", o.out, "Output directory")->required();
  sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruction-guided pruning lab"};
  app.require_subcommand(1);
  ticketlab::CommandOptions o;

  auto* thm1 = app.add_subcommand("thm1", "Kernel-sum pruning scaling on linear conv nets");
  add_common(thm1, o, true);
  auto* thm2 = app.add_subcommand("thm2", "Structured pruning distance bound on one-hidden-layer ReLU conv nets");
  add_common(thm2, o, true);

  auto* pipeline = app.add_subcommand("pipeline", "Pretrain, decoder training, ticket search and transfer");
  add_common(pipeline, o, true);
  pipeline->add_option("--method", o.method, "Ticket search")->check(CLI::IsMember({"modified-lth", "imp"}));
  pipeline->add_option("--lambda", o.lambda, "Reconstruction penalty");

  auto* ablate = app.add_subcommand("ablate", "Pipeline per hinted stage set");
  add_common(ablate, o, true);
  ablate->add_option("--method", o.method, "Ticket search")->check(CLI::IsMember({"modified-lth", "imp"}));
  ablate->add_option("--lambda", o.lambda, "Reconstruction penalty");

  auto* compare = app.add_subcommand("compare", "Join per-ticket CSVs of finished pipeline runs on sparsity");
  add_common(compare, o, false);
  compare->add_option("runs", o.runs, "Run directories or ticket CSVs")->required()->expected(2, -1);

  CLI11_PARSE(app, argc, argv);
  o.command = app.get_subcommands().front()->get_name();

  try {
    const ticketlab::CommandResult r = ticketlab::run_command(o, std::cout);
    return ticketlab::exit_status(r);
  } catch (const ticketlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
