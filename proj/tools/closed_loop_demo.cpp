// Runs one scenario through the library API and prints its summary.
//   closed_loop_demo scenarios/single_obstacle.yaml

#include <iostream>

#include "pmpc/closed_loop.hpp"
#include "pmpc/summary.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: " << argv[0] << " <scenario.yaml>\n";
    return 2;
  }
  try {
    const pmpc::ScenarioSpec spec = pmpc::load_scenario(argv[1]);
    const pmpc::RunLog log = pmpc::run_closed_loop(spec);
    std::cout << pmpc::summary_yaml(pmpc::summarize(log)) << pmpc::timing_yaml(pmpc::timing(log));
    return log.meta.termination == "completed" ? 0 : 1;
  } catch (const pmpc::Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}
